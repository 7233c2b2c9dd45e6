//! Enumeration of penalized pinned elasticae.
//!
//! For `λ, ℓ > 0` a critical point of `B + λL` in the pinned class is either the
//! segment, or a wave of mode `n` whose modulus solves `n²g(q) = λℓ²`. The
//! branch of `q` decides the family: shorter arc (B1), longer arc (B2), loop (B3).
//! Arcs need `λℓ²/n² ≤ λ̂`, i.e. `n ≥ n_{λ,ℓ}`; loops exist for every `n`.

use std::fmt;

use serde::Serialize;

use crate::elliptic::agm_ke;
use crate::energy::energy_closed_form;
use crate::error::{Error, Result};
use crate::moduli::{constants, invert_g, Branch, MERGE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub lambda: f64,
    pub ell: f64,
}

impl ProblemParams {
    pub fn new(lambda: f64, ell: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive and finite, got {lambda}")));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Domain(format!("ell must be positive and finite, got {ell}")));
        }
        Ok(Self { lambda, ell })
    }

    /// The scale-free driver `λℓ²`.
    #[inline]
    pub fn mu(&self) -> f64 {
        self.lambda * self.ell * self.ell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Segment,
    ShorterArc,
    LongerArc,
    Loop,
}

impl Family {
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Segment => "segment",
            Family::ShorterArc => "sarc",
            Family::LongerArc => "larc",
            Family::Loop => "loop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "segment" | "seg" => Some(Family::Segment),
            "sarc" | "shorter_arc" | "shorter-arc" => Some(Family::ShorterArc),
            "larc" | "longer_arc" | "longer-arc" => Some(Family::LongerArc),
            "loop" => Some(Family::Loop),
            _ => None,
        }
    }

    fn branch(self) -> Option<Branch> {
        match self {
            Family::Segment => None,
            Family::ShorterArc => Some(Branch::B1),
            Family::LongerArc => Some(Branch::B2),
            Family::Loop => Some(Branch::B3),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// One critical point, in the upper-half-plane representative.
///
/// The wave parameters are `None` for the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub family: Family,
    pub n: u32,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub length: f64,
    /// Curvature sign convention: −1 for arcs, +1 for loops.
    pub sigma: Option<i8>,
    pub ell: f64,
    /// Set when `λℓ²/n² = λ̂`, where the shorter and longer arc coincide.
    pub merged: bool,
}

impl CriticalPoint {
    pub fn segment(ell: f64) -> Self {
        Self {
            family: Family::Segment,
            n: 1,
            q: None,
            alpha: None,
            length: ell,
            sigma: None,
            ell,
            merged: false,
        }
    }

    /// Identifier such as `segment`, `sarc1`, `loop2`.
    pub fn id(&self) -> String {
        match self.family {
            Family::Segment => "segment".into(),
            f => format!("{}{}", f.short_name(), self.n),
        }
    }

    pub fn is_nontrivial(&self) -> bool {
        self.family != Family::Segment
    }
}

/// `n_{λ,ℓ} = ⌈√(λℓ²/λ̂)⌉`, never below 1.
pub fn mode_floor(p: &ProblemParams) -> u32 {
    let r = (p.mu() / constants().lambda_hat).sqrt();
    let nearest = r.round();
    // λℓ² = m²λ̂ up to rounding: the mode-m arcs exist (merged), so n_{λ,ℓ} = m.
    let n = if (r - nearest).abs() <= MERGE_TOL * r { nearest } else { r.ceil() };
    (n as u32).max(1)
}

fn is_merged(c: f64) -> bool {
    let lh = constants().lambda_hat;
    (c - lh).abs() <= MERGE_TOL * lh
}

pub fn build_critical_point(p: &ProblemParams, family: Family, n: u32) -> Result<CriticalPoint> {
    if family == Family::Segment {
        return Ok(CriticalPoint::segment(p.ell));
    }
    if n == 0 {
        return Err(Error::InfeasibleMode("mode n must be at least 1".into()));
    }
    let branch = family.branch().expect("nontrivial family");
    let floor = mode_floor(p);
    if family != Family::Loop && n < floor {
        return Err(Error::InfeasibleMode(format!(
            "{family}{n} does not exist: arcs need n >= n_(lambda,ell) = {floor} at lambda*ell^2 = {}",
            p.mu()
        )));
    }
    let nf = n as f64;
    let c = p.mu() / (nf * nf);
    let q = invert_g(c, branch)?.q;
    let (k, e) = agm_ke(q);
    let d = 2.0 * e - k;
    let (alpha, sigma) = match family {
        Family::Loop => (2.0 * nf / p.ell * (-d), 1),
        _ => (2.0 * nf / p.ell * d, -1),
    };
    Ok(CriticalPoint {
        family,
        n,
        q: Some(q),
        alpha: Some(alpha),
        length: 2.0 * nf * k / alpha,
        sigma: Some(sigma),
        ell: p.ell,
        merged: family != Family::Loop && is_merged(c),
    })
}

/// All critical points with mode at most `n_max`, sorted by `E_λ` ascending.
pub fn enumerate_critical_points(p: &ProblemParams, n_max: u32) -> Result<Vec<CriticalPoint>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let mut out = vec![CriticalPoint::segment(p.ell)];
    for n in mode_floor(p)..=n_max {
        let larc = build_critical_point(p, Family::LongerArc, n)?;
        if !larc.merged {
            out.push(build_critical_point(p, Family::ShorterArc, n)?);
        }
        out.push(larc);
    }
    for n in 1..=n_max {
        out.push(build_critical_point(p, Family::Loop, n)?);
    }
    let mut keyed = out
        .into_iter()
        .map(|cp| Ok((energy_closed_form(&cp, p)?.total, cp)))
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, cp)| cp).collect())
}
