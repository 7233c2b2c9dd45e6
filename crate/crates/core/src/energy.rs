//! Energies of critical points, the comparison lemmas, the sarc/loop crossover
//! `λ_†` and the flow threshold `C_{λ,ℓ}`.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::classify::{build_critical_point, enumerate_critical_points, CriticalPoint, Family, ProblemParams};
use crate::curve::PlanarCurve;
use crate::elliptic::agm_ke;
use crate::error::{Error, Result};
use crate::moduli::{constants, eval_e, eval_g, eval_g_prime, eval_h, eval_i, invert_g, Branch, MERGE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `B = ∫ k² ds`.
    pub bending: f64,
    pub length: f64,
    /// `E_λ = B + λL`.
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(bending: f64, length: f64, lambda: f64) -> Self {
        Self { bending, length, total: bending + lambda * length }
    }
}

fn check_consistent(cp: &CriticalPoint, p: &ProblemParams) -> Result<()> {
    if (cp.ell - p.ell).abs() > 1e-12 * p.ell {
        return Err(Error::Consistency(format!("{} was built for ell = {}, not {}", cp.id(), cp.ell, p.ell)));
    }
    if let Some(q) = cp.q {
        let nf = cp.n as f64;
        let lhs = nf * nf * eval_g(q)?;
        // A few ulps of q move g by |g′|·ulp, which dominates for tiny λℓ².
        let ulps = nf * nf * eval_g_prime(q).map_or(0.0, f64::abs) * 8.0 * f64::EPSILON * q;
        if (lhs - p.mu()).abs() > 1e-10 * p.mu() + ulps {
            return Err(Error::Consistency(format!(
                "{}: n^2 g(q) = {lhs} but lambda*ell^2 = {}",
                cp.id(),
                p.mu()
            )));
        }
    }
    Ok(())
}

/// `B = 8nα(q²K − K + E)`, `L = 2nK/α`; the segment gives `(0, ℓ, λℓ)`.
pub fn energy_closed_form(cp: &CriticalPoint, p: &ProblemParams) -> Result<EnergyBreakdown> {
    check_consistent(cp, p)?;
    let (Some(q), Some(alpha)) = (cp.q, cp.alpha) else {
        return Ok(EnergyBreakdown::new(0.0, p.ell, p.lambda));
    };
    let (k, e) = agm_ke(q);
    let nf = cp.n as f64;
    let bending = 8.0 * nf * alpha * (e - (1.0 - q) * (1.0 + q) * k);
    Ok(EnergyBreakdown::new(bending, 2.0 * nf * k / alpha, p.lambda))
}

/// `(8n²/ℓ)|2E−K|((4q²−3)K + 2E)`.
pub fn energy_direct(cp: &CriticalPoint, p: &ProblemParams) -> Result<f64> {
    check_consistent(cp, p)?;
    let Some(q) = cp.q else { return Ok(p.lambda * p.ell) };
    let (k, e) = agm_ke(q);
    let nf = cp.n as f64;
    Ok(8.0 * nf * nf / p.ell * (2.0 * e - k).abs() * ((4.0 * q * q - 3.0) * k + 2.0 * e))
}

/// `λℓ·e(q)`.
pub fn energy_via_e(cp: &CriticalPoint, p: &ProblemParams) -> Result<f64> {
    check_consistent(cp, p)?;
    match cp.q {
        Some(q) => Ok(p.lambda * p.ell * eval_e(q)?),
        None => Ok(p.lambda * p.ell),
    }
}

/// `2√2·n·√λ·h(q)`.
pub fn energy_via_h(cp: &CriticalPoint, p: &ProblemParams) -> Result<f64> {
    check_consistent(cp, p)?;
    match cp.q {
        Some(q) => Ok(2.0 * SQRT_2 * cp.n as f64 * p.lambda.sqrt() * eval_h(q)?),
        None => Ok(p.lambda * p.ell),
    }
}

fn simpson(h: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let simpson_even = |f: &[f64]| {
        let m = f.len() - 1;
        let mut acc = f[0] + f[m];
        for (i, v) in f.iter().enumerate().take(m).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * h / 3.0
    };
    if n.is_multiple_of(2) {
        simpson_even(f)
    } else {
        // Odd interval count: Simpson's 3/8 rule on the last three intervals.
        let tail = &f[n - 3..];
        let head = if n > 3 { simpson_even(&f[..=n - 3]) } else { 0.0 };
        head + 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3])
    }
}

/// Fourth-order finite-difference derivative of uniformly spaced samples.
fn fd4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    (0..=n)
        .map(|i| {
            let d = if i >= 2 && i + 2 <= n {
                -f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]
            } else if i == 0 {
                -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
            } else if i == 1 {
                -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
            } else if i == n {
                25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]
            } else {
                3.0 * f[n] + 10.0 * f[n - 1] - 18.0 * f[n - 2] + 6.0 * f[n - 3] - f[n - 4]
            };
            d / (12.0 * h)
        })
        .collect()
}

/// Composite-Simpson energy of a curve sampled at uniform arclength:
/// `∫k² ds` from the curvature column and `L = ∫|γ′| ds` from fourth-order
/// finite-difference speeds.
pub fn quadrature_energy(curve: &PlanarCurve, lambda: f64) -> Result<EnergyBreakdown> {
    let n = curve.samples.len().saturating_sub(1);
    if n < 8 {
        return Err(Error::Sampling(format!("quadrature needs at least 8 intervals, got {n}")));
    }
    let h = curve.total_length / n as f64;
    let uniform = curve
        .samples
        .iter()
        .enumerate()
        .all(|(i, p)| (p.s - h * i as f64).abs() <= 1e-9 * curve.total_length);
    if !uniform {
        return Err(Error::Sampling("quadrature needs uniform arclength samples".into()));
    }
    let k2: Vec<f64> = curve.samples.iter().map(|p| p.k * p.k).collect();
    let xs: Vec<f64> = curve.samples.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = curve.samples.iter().map(|p| p.y).collect();
    let speed: Vec<f64> = fd4(&xs, h).into_iter().zip(fd4(&ys, h)).map(|(a, b)| a.hypot(b)).collect();
    Ok(EnergyBreakdown::new(simpson(h, &k2), simpson(h, &speed), lambda))
}

/// Closed-form energy of `γ_w(·, q)` with chord `ℓ` (the one-mode wave with
/// `α = (2/ℓ)|2E−K|`).
pub fn wave_energy(q: f64, p: &ProblemParams) -> Result<EnergyBreakdown> {
    let w = crate::curve::Wave::wavelike(q, p.ell)?;
    let bending = 8.0 * w.alpha * (w.e - (1.0 - q) * (1.0 + q) * w.k);
    Ok(EnergyBreakdown::new(bending, w.length(), p.lambda))
}

/// `d/dq E_λ[γ_w(·, q)] = sign(2E−K)·(16/ℓ)(2q²−1)(−1 + λℓ²/g(q))·I(q)`.
///
/// The sign factor matters above `q*`, where `|2E−K| = K−2E` flips the whole
/// closed form; without it the loop branch would get the wrong curvature.
pub fn wave_energy_dq(q: f64, p: &ProblemParams) -> Result<f64> {
    crate::curve::Wave::wavelike(q, p.ell)?;
    let (k, e) = agm_ke(q);
    let d = 2.0 * e - k;
    let t = (2.0 * q).mul_add(q, -1.0);
    // (2q²−1)(−1 + μ/g) = μ/(8d²) − (2q²−1), regular at q = 1/√2.
    Ok(d.signum() * 16.0 / p.ell * (p.mu() / (8.0 * d * d) - t) * eval_i(q)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleTermReport {
    pub bending_sarc: f64,
    pub bending_larc: f64,
    pub length_sarc: f64,
    pub length_larc: f64,
    /// `B_sarc − B_larc`.
    pub bending_margin: f64,
    /// `L_larc − L_sarc`.
    pub length_margin: f64,
}

/// Shorter arc bends more but is shorter than the longer arc (`λℓ² < λ̂`).
pub fn single_term_comparison(p: &ProblemParams) -> Result<SingleTermReport> {
    let lh = constants().lambda_hat;
    if p.mu() >= lh * (1.0 - MERGE_TOL) {
        return Err(Error::InfeasibleMode(format!(
            "single-term comparison needs lambda*ell^2 < lambda_hat = {lh}; the one-mode arcs coincide or do not exist"
        )));
    }
    let s = energy_closed_form(&build_critical_point(p, Family::ShorterArc, 1)?, p)?;
    let l = energy_closed_form(&build_critical_point(p, Family::LongerArc, 1)?, p)?;
    Ok(SingleTermReport {
        bending_sarc: s.bending,
        bending_larc: l.bending,
        length_sarc: s.length,
        length_larc: l.length,
        bending_margin: s.bending - l.bending,
        length_margin: l.length - s.length,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub lemma: &'static str,
    pub relation: String,
    /// Positive when the strict inequality holds (difference of energies).
    pub margin: f64,
    /// The lemma's stated equality case applies, so `margin` must vanish.
    pub equality_case: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEnergy {
    pub id: String,
    pub family: Family,
    pub n: u32,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub length: f64,
    pub bending: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub lambda: f64,
    pub ell: f64,
    pub ordering: Vec<RankedEnergy>,
    pub checks: Vec<Check>,
    pub minimal_nontrivial: String,
}

impl ComparisonReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

const EQUALITY_TOL: f64 = 1e-10;

fn strict(lemma: &'static str, lo_id: &str, lo: f64, hi_id: &str, hi: f64) -> Check {
    let margin = hi - lo;
    Check {
        lemma,
        relation: format!("E[{lo_id}] < E[{hi_id}]"),
        margin,
        equality_case: false,
        holds: margin > EQUALITY_TOL * hi.abs(),
    }
}

/// Runs every energy comparison that applies at `(λ, ℓ)` up to mode `n_max`.
pub fn compare_all(p: &ProblemParams, n_max: u32) -> Result<ComparisonReport> {
    if n_max < 2 {
        return Err(Error::Domain(format!("compare_all needs n_max >= 2, got {n_max}")));
    }
    let list = enumerate_critical_points(p, n_max)?;
    let mut ordering = Vec::with_capacity(list.len());
    for cp in &list {
        let e = energy_closed_form(cp, p)?;
        ordering.push(RankedEnergy {
            id: cp.id(),
            family: cp.family,
            n: cp.n,
            q: cp.q,
            alpha: cp.alpha,
            length: e.length,
            bending: e.bending,
            total: e.total,
        });
    }
    let find = |fam: Family, n: u32| ordering.iter().find(|r| r.family == fam && r.n == n);
    // A merged arc is listed once, as the longer arc.
    let arc = |fam: Family, n: u32| match fam {
        Family::ShorterArc => find(Family::ShorterArc, n).or_else(|| find(Family::LongerArc, n)),
        _ => find(fam, n),
    };
    let mut checks = Vec::new();

    for fam in [Family::ShorterArc, Family::LongerArc, Family::Loop] {
        for n in 1..n_max {
            if let (Some(a), Some(b)) = (arc(fam, n), arc(fam, n + 1)) {
                let (ia, ib) = (format!("{}{}", fam.short_name(), n), format!("{}{}", fam.short_name(), n + 1));
                checks.push(strict("mode_monotonicity", &ia, a.total, &ib, b.total));
            }
        }
    }

    let lh = constants().lambda_hat;
    for n in 1..=n_max {
        let (Some(s), Some(l)) = (arc(Family::ShorterArc, n), find(Family::LongerArc, n)) else {
            continue;
        };
        let nf = n as f64;
        let merged = (p.mu() / (nf * nf) - lh).abs() <= MERGE_TOL * lh;
        let margin = s.total - l.total;
        let relation = if merged {
            format!("E[larc{n}] = E[sarc{n}]")
        } else {
            format!("E[larc{n}] < E[sarc{n}]")
        };
        checks.push(Check {
            lemma: "longer_vs_shorter_arc",
            relation,
            margin,
            equality_case: merged,
            holds: if merged {
                margin.abs() <= EQUALITY_TOL * s.total
            } else {
                margin > EQUALITY_TOL * s.total
            },
        });
    }

    let loop1 = find(Family::Loop, 1).expect("loop1 always enumerated");
    if p.mu() < lh * (1.0 + MERGE_TOL) {
        if let Some(l1) = find(Family::LongerArc, 1) {
            checks.push(strict("larc1_vs_loop1", "larc1", l1.total, "loop1", loop1.total));
        }
    }
    for n in 2..=n_max {
        if let Some(ln) = find(Family::LongerArc, n) {
            checks.push(strict("larcn_vs_loop1", "loop1", loop1.total, &format!("larc{n}"), ln.total));
        }
    }

    let minimal_nontrivial = ordering.iter().find(|r| r.family != Family::Segment).map(|r| r.id.clone()).unwrap_or_default();
    Ok(ComparisonReport { lambda: p.lambda, ell: p.ell, ordering, checks, minimal_nontrivial })
}

/// `Ψ_{ℓ,n}(λ) = n·h(q₂(λℓ²/n²)) − h(q₃(λℓ²))`, so that
/// `E[larc-n] − E[loop1] = 2√2·√λ·Ψ`.
pub fn psi(ell: f64, n: u32, lambda: f64) -> Result<f64> {
    let p = ProblemParams::new(lambda, ell)?;
    if n < 2 {
        return Err(Error::Domain(format!("psi needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let c = p.mu() / (nf * nf);
    let lh = constants().lambda_hat;
    if c > lh * (1.0 + MERGE_TOL) {
        return Err(Error::Domain(format!(
            "psi needs lambda <= n^2 lambda_hat / ell^2 = {}, got {lambda}",
            nf * nf * lh / (ell * ell)
        )));
    }
    let q2 = invert_g(c, Branch::B2)?.q;
    let q3 = invert_g(p.mu(), Branch::B3)?.q;
    Ok(nf * eval_h(q2)? - eval_h(q3)?)
}

/// `h(q₁(μ)) − h(q₃(μ))`, the sign of `E[sarc1] − E[loop1]` at `λℓ² = μ`.
fn sarc_minus_loop_h(mu: f64) -> f64 {
    let q1 = invert_g(mu, Branch::B1).expect("mu <= lambda_hat").q;
    let q3 = invert_g(mu, Branch::B3).expect("mu > 0").q;
    eval_h(q1).expect("q1 > 1/sqrt2") - eval_h(q3).expect("q3 < 1")
}

/// `φ(λ) = E[sarc1] − E[loop1]` at chord `ℓ`.
pub fn sarc_loop_gap(ell: f64, lambda: f64) -> Result<f64> {
    let p = ProblemParams::new(lambda, ell)?;
    if p.mu() > constants().lambda_hat * (1.0 + MERGE_TOL) {
        return Err(Error::Domain(format!("sarc1 does not exist at lambda*ell^2 = {}", p.mu())));
    }
    Ok(2.0 * SQRT_2 * lambda.sqrt() * sarc_minus_loop_h(p.mu()))
}

/// The unique `λ_† ∈ (0, λ̂/ℓ²)` where the one-mode shorter arc and loop swap order.
pub fn crossover_lambda(ell: f64) -> Result<f64> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Domain(format!("ell must be positive, got {ell}")));
    }
    let lh = constants().lambda_hat;
    // Work in μ = λℓ²; the answer scales exactly as 1/ℓ².
    let mu = crate::moduli::bisect(1e-6 * lh, lh, sarc_minus_loop_h);
    Ok(mu / (ell * ell))
}

/// `C_{λ,ℓ} = E_λ[loop1]`, the sharp threshold for eventual embeddedness.
pub fn loop_threshold(p: &ProblemParams) -> Result<f64> {
    Ok(energy_closed_form(&build_critical_point(p, Family::Loop, 1)?, p)?.total)
}
