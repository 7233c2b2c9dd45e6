//! Stability verdicts (local minimality of `E_λ` among pinned curves).
//!
//! One-mode arcs are decided along the q-family `γ_w(·, q)`, which passes
//! through every one-mode critical point: at `q_i` the energy along the family
//! has second derivative
//!
//! ```text
//!   −sign(2E−K) · (16/ℓ)(2q²−1) I(q) g′(q) / g(q)
//! ```
//!
//! Negative at the shorter arc, positive at the longer arc, zero at the merged
//! arc where the third derivative takes over. The loop is a strict minimum along
//! the family, so its instability comes from the rigidity of non-embedded
//! curves, as do all modes `n ≥ 2`; those verdicts are encoded as rules.

use serde::Serialize;

use crate::classify::{CriticalPoint, Family, ProblemParams};
use crate::elliptic::agm_ke;
use crate::error::{Error, Result};
use crate::moduli::{constants, eval_g, eval_g_prime, eval_g_second, eval_i};

/// Relative band around `λ̂` treated as the merged-arc (degenerate) case.
pub const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    /// Unstable; the q-family second derivative vanishes and the odd third
    /// derivative decides.
    DegenerateUnstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    GlobalMin,
    QFamilySecondDerivative,
    ThirdDerivative,
    HigherModeRigidity,
    /// One-mode loop: minimal along the q-family, unstable because a
    /// self-intersecting curve is never a local minimizer at fixed length.
    SelfIntersectionRigidity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub mechanism: Mechanism,
    /// The q-family diagnostic behind the verdict (second or third derivative);
    /// `None` for the segment and for modes `n ≥ 2`.
    pub sign_value: Option<f64>,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

fn is_degenerate(p: &ProblemParams) -> bool {
    let lh = constants().lambda_hat;
    (p.mu() - lh).abs() <= DEGENERATE_TOL * lh
}

/// Exact `d²/dq² E_λ[γ_w(·, q)]` at the critical point's modulus (one-mode only).
///
/// Its sign is the q-family stability test. It equals `−g′(q_i)` times a
/// positive factor on the arcs and `+g′(q₃)` times a positive factor on the loop.
pub fn second_derivative_sign(cp: &CriticalPoint, p: &ProblemParams) -> Result<f64> {
    let Some(q) = cp.q else {
        return Err(Error::Applicability("the segment is not a member of the q-family".into()));
    };
    if cp.n != 1 {
        return Err(Error::Applicability(format!(
            "second-derivative rule applies to one-mode points only, got {}",
            cp.id()
        )));
    }
    if cp.merged || (cp.family != Family::Loop && is_degenerate(p)) {
        return Ok(0.0);
    }
    let (k, e) = agm_ke(q);
    let sgn = (2.0 * e - k).signum();
    let t = (2.0 * q).mul_add(q, -1.0);
    Ok(-sgn * 16.0 / p.ell * t * eval_i(q)? * eval_g_prime(q)? / eval_g(q)?)
}

/// `d³/dq³ E_λ[γ_w(·, q)]` at `q̂` when `λℓ² = λ̂`:
/// `−(16/ℓ)(2q̂²−1) I(q̂) λℓ² g″(q̂) / g(q̂)²`.
pub fn degenerate_third_derivative(p: &ProblemParams) -> Result<f64> {
    if !is_degenerate(p) {
        return Err(Error::Applicability(format!(
            "third-derivative test needs lambda*ell^2 = lambda_hat, got {}",
            p.mu()
        )));
    }
    let c = constants();
    let qh = c.q_hat;
    let t = (2.0 * qh).mul_add(qh, -1.0);
    Ok(-16.0 / p.ell * t * eval_i(qh)? * p.mu() * eval_g_second(qh)? / (c.lambda_hat * c.lambda_hat))
}

pub fn stability_verdict(cp: &CriticalPoint, p: &ProblemParams) -> Result<StabilityVerdict> {
    let v = |verdict, mechanism, sign_value| StabilityVerdict { verdict, mechanism, sign_value };
    if cp.family == Family::Segment {
        return Ok(v(Verdict::Stable, Mechanism::GlobalMin, None));
    }
    if cp.n >= 2 {
        return Ok(v(Verdict::Unstable, Mechanism::HigherModeRigidity, None));
    }
    let d2 = second_derivative_sign(cp, p)?;
    Ok(match cp.family {
        Family::Loop => v(Verdict::Unstable, Mechanism::SelfIntersectionRigidity, Some(d2)),
        _ if cp.merged || is_degenerate(p) => v(
            Verdict::DegenerateUnstable,
            Mechanism::ThirdDerivative,
            Some(degenerate_third_derivative(p)?),
        ),
        _ if d2 > 0.0 => v(Verdict::Stable, Mechanism::QFamilySecondDerivative, Some(d2)),
        _ => v(Verdict::Unstable, Mechanism::QFamilySecondDerivative, Some(d2)),
    })
}

/// Number of local minimizers of `E_λ` in the pinned class.
pub fn count_local_minimizers(p: &ProblemParams) -> u32 {
    let lh = constants().lambda_hat;
    if p.mu() < lh && !is_degenerate(p) {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{build_critical_point, enumerate_critical_points};

    fn pp(mu: f64) -> ProblemParams {
        ProblemParams::new(mu, 1.0).unwrap()
    }

    #[test]
    fn signs_at_half() {
        let p = pp(0.5);
        let d = |f| second_derivative_sign(&build_critical_point(&p, f, 1).unwrap(), &p).unwrap();
        assert!(d(Family::LongerArc) > 0.0);
        assert!(d(Family::ShorterArc) < 0.0);
        assert!(d(Family::Loop) > 0.0);
        let sarc2 = build_critical_point(&p, Family::ShorterArc, 2).unwrap();
        assert!(second_derivative_sign(&sarc2, &p).is_err());
    }

    #[test]
    fn verdict_examples() {
        let p = pp(0.5);
        let ver = |f, n| stability_verdict(&build_critical_point(&p, f, n).unwrap(), &p).unwrap();
        assert!(ver(Family::LongerArc, 1).is_stable());
        assert_eq!(ver(Family::ShorterArc, 2).verdict, Verdict::Unstable);
        let p2 = pp(2.0);
        let l = stability_verdict(&build_critical_point(&p2, Family::Loop, 1).unwrap(), &p2).unwrap();
        assert_eq!(l.verdict, Verdict::Unstable);
    }

    #[test]
    fn merged_arc_is_degenerate() {
        let p = pp(constants().lambda_hat);
        let cp = build_critical_point(&p, Family::LongerArc, 1).unwrap();
        let v = stability_verdict(&cp, &p).unwrap();
        assert_eq!(v.verdict, Verdict::DegenerateUnstable);
        assert!(v.sign_value.unwrap() > 0.0);
        assert!(eval_g_second(constants().q_hat).unwrap() < 0.0);
        assert!(degenerate_third_derivative(&pp(0.7)).is_err());
    }

    #[test]
    fn minimizer_count() {
        assert_eq!(count_local_minimizers(&pp(0.5)), 2);
        assert_eq!(count_local_minimizers(&pp(constants().lambda_hat)), 1);
        assert_eq!(count_local_minimizers(&pp(10.0)), 1);
    }

    #[test]
    fn stable_set_matches_theorem() {
        let lh = constants().lambda_hat;
        for i in 1..=30 {
            let mu = 3.0 * lh * i as f64 / 30.0;
            let p = pp(mu);
            let stable: Vec<String> = enumerate_critical_points(&p, 3)
                .unwrap()
                .iter()
                .filter(|c| stability_verdict(c, &p).unwrap().is_stable())
                .map(|c| c.id())
                .collect();
            let expect: Vec<&str> = if mu < lh && i != 10 { vec!["segment", "larc1"] } else { vec!["segment"] };
            let mut s = stable.clone();
            s.sort();
            let mut e: Vec<String> = expect.iter().map(|x| x.to_string()).collect();
            e.sort();
            assert_eq!(s, e, "mu = {mu}");
        }
    }
}
