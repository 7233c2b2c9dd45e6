//! The `--initial` curve spec of the `flow` command.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use elastica::{build_critical_point, sample_curve, wavelike_curve, CurvePoint, Family, PlanarCurve, ProblemParams};

/// Samples used to describe an analytic initial curve before resampling.
const INIT_SAMPLES: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Segment,
    Family { family: Family, n: u32 },
    Wavelike { q: f64 },
    File(PathBuf),
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "segment" {
            return Ok(InitialSpec::Segment);
        }
        if let Some(rest) = s.strip_prefix("family:") {
            let (name, n) = rest.split_once(",n=").ok_or_else(|| format!("expected family:<name>,n=<k>, got '{s}'"))?;
            let family = Family::parse(name).ok_or_else(|| format!("unknown family '{name}'"))?;
            let n = n.parse::<u32>().map_err(|_| format!("mode must be a positive integer, got '{n}'"))?;
            if n == 0 {
                return Err("mode must be at least 1".into());
            }
            return Ok(InitialSpec::Family { family, n });
        }
        if let Some(q) = s.strip_prefix("wavelike:q=") {
            let q = q.parse::<f64>().map_err(|_| format!("q must be a number, got '{q}'"))?;
            if !(0.0..1.0).contains(&q) {
                return Err(format!("q must lie in [0, 1), got {q}"));
            }
            return Ok(InitialSpec::Wavelike { q });
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file: needs a path".into());
            }
            return Ok(InitialSpec::File(PathBuf::from(path)));
        }
        Err(format!("expected segment, family:<name>,n=<k>, wavelike:q=<v> or file:<path.csv>, got '{s}'"))
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Segment => f.write_str("segment"),
            InitialSpec::Family { family, n } => write!(f, "family:{family},n={n}"),
            InitialSpec::Wavelike { q } => write!(f, "wavelike:q={q}"),
            InitialSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl InitialSpec {
    pub fn curve(&self, p: &ProblemParams) -> Result<PlanarCurve, String> {
        let e = |e: elastica::Error| e.to_string();
        match self {
            InitialSpec::Segment => sample_curve(&elastica::CriticalPoint::segment(p.ell), INIT_SAMPLES).map_err(e),
            InitialSpec::Family { family, n } => {
                sample_curve(&build_critical_point(p, *family, *n).map_err(e)?, INIT_SAMPLES).map_err(e)
            }
            InitialSpec::Wavelike { q } => wavelike_curve(*q, p.ell, INIT_SAMPLES).map_err(e),
            InitialSpec::File(path) => read_curve(path),
        }
    }
}

/// Reads a curve CSV with header `s,x,y,theta,k`.
pub fn read_curve(path: &Path) -> Result<PlanarCurve, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|err| format!("cannot read {}: {err}", path.display()))?;
    let samples = rdr
        .deserialize::<CurvePoint>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|err| format!("bad curve CSV {}: {err}", path.display()))?;
    let total_length = samples.last().map(|c| c.s).ok_or_else(|| format!("{} has no samples", path.display()))?;
    Ok(PlanarCurve { samples, total_length })
}
