//! Elliptic integrals and Jacobi elliptic functions.
//!
//! Every function here takes the *modulus* `q`, not the parameter `m = q²`.
//! So `K(q) = ∫₀^{π/2} dθ / √(1 − q² sin²θ)`.
//!
//! Complete integrals come from one AGM sweep. Incomplete integrals use
//! Carlson's symmetric forms after reducing the amplitude to `[-π/2, π/2]`.
//! The amplitude `am(u, q)` is obtained by descending Landen on `[-K, K]`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest modulus for which `K` is reported; above it `K` is treated as divergent.
pub const Q_MAX: f64 = 1.0 - 1e-12;

/// Elliptic modulus `q ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Modulus(f64);

impl Modulus {
    pub fn new(q: f64) -> Result<Self> {
        if (0.0..1.0).contains(&q) {
            Ok(Self(q))
        } else {
            Err(Error::Domain(format!("modulus q = {q} must lie in [0, 1)")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Complementary modulus `√(1 − q²)`, computed without cancellation near 1.
    #[inline]
    pub fn complement(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

impl TryFrom<f64> for Modulus {
    type Error = Error;
    fn try_from(q: f64) -> Result<Self> {
        Self::new(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiTriple {
    pub am: f64,
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

fn check_k_range(q: Modulus) -> Result<()> {
    if q.0 > Q_MAX {
        Err(Error::Domain(format!(
            "K(q) diverges as q -> 1; q = {} exceeds {Q_MAX}",
            q.0
        )))
    } else {
        Ok(())
    }
}

/// `(K(q), E(q))` from a single AGM sweep. Caller guarantees `0 ≤ q ≤ Q_MAX`.
pub(crate) fn agm_ke(q: f64) -> (f64, f64) {
    let mut a = 1.0_f64;
    let mut b = ((1.0 - q) * (1.0 + q)).sqrt();
    // Σ 2^{n-1} c_n², starting with c_0 = q.
    let mut sum = 0.5 * q * q;
    let mut pow = 0.5;
    for _ in 0..64 {
        if (a - b).abs() < 1e-15 * a {
            break;
        }
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = FRAC_PI_2 / a;
    (k, k * (1.0 - sum))
}

/// Complete integral of the first kind. Strictly increasing in `q`.
pub fn ellip_k(q: Modulus) -> Result<f64> {
    check_k_range(q)?;
    Ok(agm_ke(q.0).0)
}

/// Complete integral of the second kind on the closed interval `[0, 1]`.
pub fn ellip_e(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("E(q) needs q in [0, 1], got {q}")));
    }
    if q > Q_MAX {
        // E is continuous at 1 with E(1) = ∫ cos θ dθ = 1; the AGM route loses
        // accuracy only in this last sliver.
        return Ok(if q == 1.0 { 1.0 } else { agm_ke(Q_MAX).1 });
    }
    Ok(agm_ke(q).1)
}

/// Both complete integrals at once.
pub fn ellip_ke(q: Modulus) -> Result<(f64, f64)> {
    check_k_range(q)?;
    Ok(agm_ke(q.0))
}

const RF_TOL: f64 = 8e-4;
const RD_TOL: f64 = 5e-4;

/// Carlson's `R_F(x, y, z)`; at most one argument may vanish.
pub(crate) fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    let (mut dx, mut dy, mut dz, mut ave);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        ave = (x + y + z) / 3.0;
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RF_TOL {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 + (e2 / 24.0 - 0.1 - 3.0 / 44.0 * e3) * e2 + e3 / 14.0) / ave.sqrt()
}

/// Carlson's `R_D(x, y, z)`.
pub(crate) fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.25 * C3;
    const C6: f64 = 1.5 * C4;
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    let (mut dx, mut dy, mut dz, mut ave);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lam));
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        ave = 0.2 * (x + y + 3.0 * z);
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RD_TOL {
            break;
        }
    }
    let ea = dx * dy;
    let eb = dz * dz;
    let ec = ea - eb;
    let ed = ea - 6.0 * eb;
    let ee = ed + ec + ec;
    3.0 * sum
        + fac
            * (1.0 + ed * (-C1 + C5 * ed - C6 * dz * ee) + dz * (C2 * ee + dz * (-C3 * ec + dz * C4 * ea)))
            / (ave * ave.sqrt())
}

/// Splits `x = jπ + r` with `|r| ≤ π/2`.
fn reduce_amplitude(x: f64) -> (f64, f64) {
    let j = (x / PI).round();
    (j, x - j * PI)
}

/// `(F(r), E(r))` for `|r| ≤ π/2`.
fn incomplete_principal(r: f64, q: f64) -> (f64, f64) {
    let (s, c) = r.sin_cos();
    let qs = q * s;
    let y = (1.0 - qs) * (1.0 + qs);
    let rf = carlson_rf(c * c, y, 1.0);
    let f = s * rf;
    let e = f - q * q * s * s * s / 3.0 * carlson_rd(c * c, y, 1.0);
    (f, e)
}

/// `F(x, q) = ∫₀ˣ dθ / √(1 − q² sin²θ)` for any real `x`.
pub fn ellip_f_inc(x: f64, q: Modulus) -> Result<f64> {
    Ok(ellip_fe_inc(x, q)?.0)
}

/// `E(x, q) = ∫₀ˣ √(1 − q² sin²θ) dθ` for any real `x`.
pub fn ellip_e_inc(x: f64, q: Modulus) -> Result<f64> {
    Ok(ellip_fe_inc(x, q)?.1)
}

/// Both incomplete integrals, extended by `F(x + π) = F(x) + 2K` and likewise for `E`.
pub fn ellip_fe_inc(x: f64, q: Modulus) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("amplitude must be finite, got {x}")));
    }
    let (j, r) = reduce_amplitude(x);
    let (f, e) = incomplete_principal(r, q.0);
    if j == 0.0 {
        return Ok((f, e));
    }
    let (kk, ee) = ellip_ke(q)?;
    Ok((2.0 * j * kk + f, 2.0 * j * ee + e))
}

/// `am(v, q)` for `|v| ≤ K(q)` by descending Landen (A&S 16.4).
fn landen_am(v: f64, q: f64) -> f64 {
    let mut a = [0.0_f64; 40];
    let mut c = [0.0_f64; 40];
    a[0] = 1.0;
    c[0] = q;
    let mut b = ((1.0 - q) * (1.0 + q)).sqrt();
    let mut n = 0;
    while c[n].abs() > 1e-17 * a[n] && n + 1 < a.len() {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = (2.0_f64).powi(n as i32) * a[n] * v;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    phi
}

/// Jacobi amplitude: the inverse of `x ↦ F(x, q)`.
pub fn amplitude(u: f64, q: Modulus) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("argument must be finite, got {u}")));
    }
    let kk = ellip_k(q)?;
    let j = (u / (2.0 * kk)).round();
    let v = u - 2.0 * j * kk;
    Ok(j * PI + landen_am(v, q.0))
}

/// `am, sn, cn, dn` at `u`.
pub fn jacobi(u: f64, q: Modulus) -> Result<JacobiTriple> {
    let am = amplitude(u, q)?;
    let (sn, cn) = am.sin_cos();
    let qs = q.0 * sn;
    let dn = ((1.0 - qs) * (1.0 + qs)).sqrt();
    Ok(JacobiTriple { am, sn, cn, dn })
}
