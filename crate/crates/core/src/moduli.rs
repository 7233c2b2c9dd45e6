//! Scalar functions of the modulus that drive the classification.
//!
//! `g(q) = 8(2E−K)²(2q²−1)` is the map from modulus to the scale-free penalty
//! `λℓ²/n²`. It vanishes at `1/√2` and at `q*` (where `2E = K`), peaks at `q̂`
//! with value `λ̂`, and splits `(1/√2, 1)` into three monotone branches:
//!
//! ```text
//!   g
//!   λ̂ |        .-''-.
//!     |      .'      '.                  .'
//!     |    .'          '.              .'
//!     |  .'              '.         .'
//!   0 +-'------------------'-.___.-'------> q
//!    1/√2      q̂            q*          1
//!        B1          B2           B3
//! ```

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use serde::Serialize;

use crate::elliptic::{agm_ke, Q_MAX};
use crate::error::{Error, Result};

/// Monotone branch of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    /// `(1/√2, q̂]`, g increasing. Shorter arcs live here.
    B1,
    /// `[q̂, q*)`, g decreasing. Longer arcs.
    B2,
    /// `(q*, 1)`, g increasing. Loops.
    B3,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::B1 => "B1",
            Branch::B2 => "B2",
            Branch::B3 => "B3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchedModulus {
    pub q: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub q_star: f64,
    pub q_hat: f64,
    pub lambda_hat: f64,
}

fn ke(q: f64) -> Result<(f64, f64)> {
    if !(0.0..=Q_MAX).contains(&q) {
        return Err(Error::Domain(format!("q = {q} outside [0, {Q_MAX}]")));
    }
    Ok(agm_ke(q))
}

/// `2q² − 1` with a single rounding, so it stays accurate just above `1/√2`.
#[inline]
fn two_q2_m1(q: f64) -> f64 {
    (2.0 * q).mul_add(q, -1.0)
}

fn require(q: f64, lo: f64, lo_closed: bool, what: &str) -> Result<()> {
    let ok = q < 1.0 && if lo_closed { q >= lo } else { q > lo };
    if ok {
        Ok(())
    } else {
        let open = if lo_closed { '[' } else { '(' };
        Err(Error::Domain(format!("{what} needs q in {open}{lo}, 1), got {q}")))
    }
}

/// `2E(q) − K(q)`: equals 1 at 0, strictly decreasing, zero at `q*`.
pub fn two_e_minus_k(q: f64) -> Result<f64> {
    let (k, e) = ke(q)?;
    Ok(2.0 * e - k)
}

fn f_from(q: f64, k: f64, e: f64) -> f64 {
    let q2 = q * q;
    let q4 = q2 * q2;
    (4.0 * q4 - 5.0 * q2 + 1.0) * k + (-8.0 * q4 + 8.0 * q2 - 1.0) * e
}

fn f_prime_from(q: f64, k: f64, e: f64) -> f64 {
    let q2 = q * q;
    (20.0 * q2 * q - 13.0 * q) * k + 20.0 * q * (1.0 - 2.0 * q2) * e
}

/// `f(q) = (4q⁴−5q²+1)K + (−8q⁴+8q²−1)E`; its sign is the sign of `g′` on B1∪B2.
pub fn eval_f(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, true, "f")?;
    let (k, e) = ke(q)?;
    Ok(f_from(q, k, e))
}

/// `f′(q) = (20q³−13q)K + 20q(1−2q²)E`.
pub fn eval_f_prime(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, true, "f'")?;
    let (k, e) = ke(q)?;
    Ok(f_prime_from(q, k, e))
}

/// `g(q) = 8(2E−K)²(2q²−1)`.
pub fn eval_g(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, true, "g")?;
    let (k, e) = ke(q)?;
    let d = 2.0 * e - k;
    Ok(8.0 * d * d * two_q2_m1(q))
}

/// `g′(q) = 16/(q(1−q²)) · (2E−K) · f(q)`.
pub fn eval_g_prime(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, false, "g'")?;
    let (k, e) = ke(q)?;
    let p = 16.0 / (q * (1.0 - q) * (1.0 + q));
    Ok(p * (2.0 * e - k) * f_from(q, k, e))
}

/// `g″(q)`, the derivative of `P·Q·f` with `P = 16/(q(1−q²))`, `Q = 2E−K`.
pub fn eval_g_second(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, false, "g''")?;
    let (k, e) = ke(q)?;
    let one_m_q2 = (1.0 - q) * (1.0 + q);
    let p = 16.0 / (q * one_m_q2);
    let dp = -16.0 * (1.0 - 3.0 * q * q) / (q * one_m_q2).powi(2);
    let qq = 2.0 * e - k;
    let dqq = qq / q - e / (q * one_m_q2);
    let f = f_from(q, k, e);
    let df = f_prime_from(q, k, e);
    Ok(dp * qq * f + p * dqq * f + p * qq * df)
}

fn e_from(q: f64, k: f64, e: f64) -> f64 {
    ((4.0 * q * q - 3.0) * k + 2.0 * e) / (two_q2_m1(q) * (2.0 * e - k).abs())
}

fn check_e_domain(q: f64) -> Result<()> {
    require(q, FRAC_1_SQRT_2, false, "e")?;
    let qs = constants().q_star;
    if (q - qs).abs() < 1e-8 {
        return Err(Error::Singular(format!(
            "e(q) blows up at q* = {qs}; |q - q*| = {:e} < 1e-8",
            (q - qs).abs()
        )));
    }
    Ok(())
}

/// `e(q) = ((4q²−3)K + 2E) / ((2q²−1)|2E−K|)`, so that `E_λ = λℓ·e(q)` on critical points.
pub fn eval_e(q: f64) -> Result<f64> {
    check_e_domain(q)?;
    let (k, e) = ke(q)?;
    Ok(e_from(q, k, e))
}

/// `e′(q) = −4 f K′ / ((2q²−1)² (2E−K) |2E−K|)`.
pub fn eval_e_prime(q: f64) -> Result<f64> {
    check_e_domain(q)?;
    let (k, e) = ke(q)?;
    let dk = e / (q * (1.0 - q) * (1.0 + q)) - k / q;
    let d = 2.0 * e - k;
    let t = two_q2_m1(q);
    Ok(-4.0 * f_from(q, k, e) * dk / (t * t * d * d.abs()))
}

/// `h(q) = ((4q²−3)K + 2E) / √(2q²−1)`, so that `E_λ = 2√2·n·√λ·h(q)`.
pub fn eval_h(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, false, "h")?;
    let (k, e) = ke(q)?;
    Ok(((4.0 * q * q - 3.0) * k + 2.0 * e) / two_q2_m1(q).sqrt())
}

/// `h′(q) = −f / ((2q²−1)^{3/2} q (1−q²))`.
pub fn eval_h_prime(q: f64) -> Result<f64> {
    require(q, FRAC_1_SQRT_2, false, "h'")?;
    let (k, e) = ke(q)?;
    let t = two_q2_m1(q);
    Ok(-f_from(q, k, e) / (t * t.sqrt() * q * (1.0 - q) * (1.0 + q)))
}

/// `I(q) = K²/q + E²/(q(1−q²)) − 2KE/q`, positive on `(0, 1)`.
pub fn eval_i(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("I needs q in (0, 1), got {q}")));
    }
    let (k, e) = ke(q)?;
    Ok((k * k + e * e / ((1.0 - q) * (1.0 + q)) - 2.0 * k * e) / q)
}

/// Bisection to full double precision on `[lo, hi]`, where `phi(lo)` and
/// `phi(hi)` have opposite signs (zero endpoints allowed).
pub(crate) fn bisect(mut lo: f64, mut hi: f64, phi: impl Fn(f64) -> f64) -> f64 {
    let lo_sign = phi(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = phi(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (pl, ph) = (phi(lo).abs(), phi(hi).abs());
    if pl <= ph {
        lo
    } else {
        hi
    }
}

/// Locates `q*`, `q̂` and `λ̂ = g(q̂)` from scratch.
pub fn find_constants() -> Constants {
    let q_star = bisect(0.8, 0.99, |q| {
        let (k, e) = agm_ke(q);
        2.0 * e - k
    });
    let q_hat = bisect(FRAC_1_SQRT_2, q_star, |q| {
        let (k, e) = agm_ke(q);
        f_from(q, k, e)
    });
    let (k, e) = agm_ke(q_hat);
    let d = 2.0 * e - k;
    Constants { q_star, q_hat, lambda_hat: 8.0 * d * d * two_q2_m1(q_hat) }
}

/// Process-wide cached constants.
pub fn constants() -> &'static Constants {
    static CELL: OnceLock<Constants> = OnceLock::new();
    CELL.get_or_init(find_constants)
}

/// Relative band around `λ̂` inside which branches B1 and B2 are merged at `q̂`.
pub const MERGE_TOL: f64 = 1e-12;

/// Solves `g(q) = c` on the requested branch.
pub fn invert_g(c: f64, branch: Branch) -> Result<BranchedModulus> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("g(q) = c needs finite c > 0, got {c}")));
    }
    let k = constants();
    let g = |q: f64| {
        let (kk, e) = agm_ke(q);
        let d = 2.0 * e - kk;
        8.0 * d * d * two_q2_m1(q)
    };
    let q = match branch {
        Branch::B1 | Branch::B2 => {
            if (c - k.lambda_hat).abs() <= MERGE_TOL * k.lambda_hat {
                k.q_hat
            } else if c > k.lambda_hat {
                return Err(Error::BranchInfeasible {
                    branch: branch.name(),
                    c,
                    lambda_hat: k.lambda_hat,
                });
            } else if branch == Branch::B1 {
                bisect(FRAC_1_SQRT_2, k.q_hat, |q| g(q) - c)
            } else {
                bisect(k.q_hat, k.q_star, |q| g(q) - c)
            }
        }
        Branch::B3 => {
            let mut gap = 1.0 - k.q_star;
            let mut hi = k.q_star;
            while g(hi) <= c {
                gap *= 0.5;
                hi = 1.0 - gap;
                if hi > Q_MAX {
                    return Err(Error::Domain(format!(
                        "g(q) = {c} has no solution with q <= {Q_MAX}"
                    )));
                }
            }
            bisect(k.q_star, hi, |q| g(q) - c)
        }
    };
    Ok(BranchedModulus { q, branch })
}
