//! Arclength parametrizations of critical points and of the wavelike q-family,
//! plus an independent curvature-integration oracle and crossing detection.
//!
//! With `u = αs − K(q)` the arcs are
//!
//! ```text
//!   x(s) = (2E(am u) + 2E − αs)/α     y(s) = 2q cn(u)/α
//!   θ(s) = −2 arcsin(q sn u)          k(s) = −2αq cn(u)
//! ```
//!
//! and the loops flip `x` and `k` and add `π` to `θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::classify::{CriticalPoint, Family};
use crate::elliptic::{agm_ke, ellip_e_inc, jacobi, Modulus};
use crate::error::{Error, Result};
use crate::moduli::constants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarCurve {
    pub samples: Vec<CurvePoint>,
    pub total_length: f64,
}

impl PlanarCurve {
    /// Mirror image across the x-axis.
    pub fn reflected(&self) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|p| CurvePoint { y: -p.y, theta: -p.theta, k: -p.k, ..*p })
                .collect(),
            total_length: self.total_length,
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Geometry shared by critical points and the q-family: a mode-`n` wave.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Wave {
    pub q: f64,
    pub alpha: f64,
    pub n: u32,
    /// Loop-type orientation (`q > q*`).
    pub is_loop: bool,
    pub k: f64,
    pub e: f64,
}

impl Wave {
    fn new(q: f64, alpha: f64, n: u32, is_loop: bool) -> Self {
        let (k, e) = agm_ke(q);
        Self { q, alpha, n, is_loop, k, e }
    }

    pub fn from_critical_point(cp: &CriticalPoint) -> Option<Self> {
        let (q, alpha) = (cp.q?, cp.alpha?);
        Some(Self::new(q, alpha, cp.n, cp.family == Family::Loop))
    }

    /// The q-family member with chord `ell`.
    pub fn wavelike(q: f64, ell: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("wavelike curve needs q in (0, 1), got {q}")));
        }
        let qs = constants().q_star;
        if (q - qs).abs() < 1e-8 {
            return Err(Error::Singular(format!(
                "wavelike length diverges at q* = {qs}; |q - q*| < 1e-8"
            )));
        }
        let (k, e) = agm_ke(q);
        let d = 2.0 * e - k;
        Ok(Self::new(q, 2.0 / ell * d.abs(), 1, d < 0.0))
    }

    pub fn length(&self) -> f64 {
        2.0 * self.n as f64 * self.k / self.alpha
    }

    fn modulus(&self) -> Modulus {
        Modulus::new(self.q).expect("wave modulus in [0, 1)")
    }

    pub fn curvature(&self, s: f64) -> f64 {
        let t = jacobi(self.alpha * s - self.k, self.modulus()).expect("valid modulus");
        let k = 2.0 * self.alpha * self.q * t.cn;
        if self.is_loop {
            k
        } else {
            -k
        }
    }

    pub fn point(&self, s: f64) -> CurvePoint {
        let q = self.modulus();
        let u = self.alpha * s - self.k;
        let t = jacobi(u, q).expect("valid modulus");
        let einc = ellip_e_inc(t.am, q).expect("valid modulus");
        let xa = (2.0 * einc + 2.0 * self.e - self.alpha * s) / self.alpha;
        let y = 2.0 * self.q * t.cn / self.alpha;
        let beta = 2.0 * (self.q * t.sn).asin();
        let k = 2.0 * self.alpha * self.q * t.cn;
        if self.is_loop {
            CurvePoint { s, x: -xa, y, theta: PI + beta, k }
        } else {
            CurvePoint { s, x: xa, y, theta: -beta, k: -k }
        }
    }

    pub fn sample(&self, n_seg: usize) -> PlanarCurve {
        let len = self.length();
        let samples = (0..=n_seg)
            .map(|i| {
                // Pin the last abscissa so the final sample sits exactly at s = L.
                let s = if i == n_seg { len } else { len * i as f64 / n_seg as f64 };
                self.point(s)
            })
            .collect();
        PlanarCurve { samples, total_length: len }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::Sampling(format!("need at least 2 segments, got {n}")))
    } else {
        Ok(())
    }
}

/// `n + 1` samples at uniform arclength, in the upper-half-plane representative.
pub fn sample_curve(cp: &CriticalPoint, n: usize) -> Result<PlanarCurve> {
    check_n(n)?;
    match Wave::from_critical_point(cp) {
        Some(w) => Ok(w.sample(n)),
        None => {
            let ell = cp.ell;
            let samples = (0..=n)
                .map(|i| {
                    let s = if i == n { ell } else { ell * i as f64 / n as f64 };
                    CurvePoint { s, x: s, y: 0.0, theta: 0.0, k: 0.0 }
                })
                .collect();
            Ok(PlanarCurve { samples, total_length: ell })
        }
    }
}

/// Closed-form signed curvature at arclength `s ∈ [0, L]`.
pub fn curvature_at(cp: &CriticalPoint, s: f64) -> Result<f64> {
    let slack = 1e-12 * cp.length;
    if !(s >= -slack && s <= cp.length + slack) {
        return Err(Error::Domain(format!("s = {s} outside [0, {}]", cp.length)));
    }
    Ok(Wave::from_critical_point(cp).map_or(0.0, |w| w.curvature(s)))
}

/// The curve `γ_w(·, q)` of the q-family: the one-mode wave with chord `ell`.
///
/// Below `q*` it is arc-shaped, above `q*` it carries a loop.
pub fn wavelike_curve(q: f64, ell: f64, n: usize) -> Result<PlanarCurve> {
    check_n(n)?;
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Domain(format!("ell must be positive, got {ell}")));
    }
    Ok(Wave::wavelike(q, ell)?.sample(n))
}

/// Integrates `θ′ = k`, `γ′ = (cos θ, sin θ)` with classical RK4 at step `L/n`,
/// then rotates so the chord points along `+x`.
///
/// `ell_expected` only sets the scale below which the chord is treated as
/// degenerate and the rotation skipped.
pub fn reconstruct_from_curvature(
    k_fn: impl Fn(f64) -> f64,
    length: f64,
    ell_expected: f64,
    n: usize,
) -> Result<PlanarCurve> {
    if n < 100 {
        return Err(Error::Sampling(format!("reconstruction needs n >= 100, got {n}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("length must be positive, got {length}")));
    }
    let h = length / n as f64;
    let rhs = |s: f64, st: [f64; 3]| [k_fn(s), st[0].cos(), st[0].sin()];
    let mut st = [0.0_f64; 3];
    let mut raw = Vec::with_capacity(n + 1);
    raw.push((0.0, st));
    for i in 0..n {
        let s = h * i as f64;
        let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
        let k1 = rhs(s, st);
        let k2 = rhs(s + 0.5 * h, add(st, k1, 0.5 * h));
        let k3 = rhs(s + 0.5 * h, add(st, k2, 0.5 * h));
        let k4 = rhs(s + h, add(st, k3, h));
        for j in 0..3 {
            st[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !st.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("curvature integration overflowed".into()));
        }
        raw.push((if i + 1 == n { length } else { s + h }, st));
    }
    let end = raw[n].1;
    let chord = end[1].hypot(end[2]);
    let rot = if chord > 1e-12 * ell_expected.abs().max(length) { end[2].atan2(end[1]) } else { 0.0 };
    let (sr, cr) = (-rot).sin_cos();
    let samples = raw
        .into_iter()
        .map(|(s, [th, x, y])| CurvePoint { s, x: cr * x - sr * y, y: sr * x + cr * y, theta: th - rot, k: k_fn(s) })
        .collect();
    Ok(PlanarCurve { samples, total_length: length })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    /// Index of the first segment `(P_i, P_{i+1})`.
    pub i: usize,
    /// Index of the second segment, `j ≥ i + 2`.
    pub j: usize,
    pub point: [f64; 2],
}

/// All transverse crossings between non-adjacent polyline segments.
pub fn self_intersections(curve: &PlanarCurve) -> Vec<Crossing> {
    polyline_crossings(&curve.points())
}

/// Crossings of a raw polyline. Segments sharing a vertex are never compared;
/// a crossing landing on a vertex is counted once (half-open parameters).
pub fn polyline_crossings(pts: &[[f64; 2]]) -> Vec<Crossing> {
    if pts.len() < 4 {
        return Vec::new();
    }
    let m = pts.len() - 1;
    let bbox = |i: usize| {
        let (a, b) = (pts[i], pts[i + 1]);
        [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
    };
    let boxes: Vec<[f64; 4]> = (0..m).map(bbox).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| boxes[a][0].total_cmp(&boxes[b][0]).then(a.cmp(&b)));

    let mut out = Vec::new();
    for (oi, &a) in order.iter().enumerate() {
        let ba = boxes[a];
        for &b in &order[oi + 1..] {
            let bb = boxes[b];
            if bb[0] > ba[1] {
                break;
            }
            if bb[2] > ba[3] || bb[3] < ba[2] || a.abs_diff(b) < 2 {
                continue;
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if let Some(point) = segment_crossing(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                out.push(Crossing { i, j, point });
            }
        }
    }
    out.sort_by_key(|x| (x.i, x.j));
    out
}

fn segment_crossing(p: [f64; 2], p2: [f64; 2], r: [f64; 2], r2: [f64; 2]) -> Option<[f64; 2]> {
    let d1 = [p2[0] - p[0], p2[1] - p[1]];
    let d2 = [r2[0] - r[0], r2[1] - r[1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    let scale = d1[0].hypot(d1[1]) * d2[0].hypot(d2[1]);
    if den.abs() <= 1e-14 * scale {
        return None;
    }
    let w = [r[0] - p[0], r[1] - p[1]];
    let t = (w[0] * d2[1] - w[1] * d2[0]) / den;
    let u = (w[0] * d1[1] - w[1] * d1[0]) / den;
    if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
        Some([p[0] + t * d1[0], p[1] + t * d1[1]])
    } else {
        None
    }
}
