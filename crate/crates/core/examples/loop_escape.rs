//! Writes the self-intersecting, sub-threshold initial curve used by the
//! flow tests (`tests/data/loop_escape.csv`) to stdout.
//!
//! The one-mode loop at `λ = 1/2, ℓ = 1` is slowly unstable to antisymmetric
//! perturbations: the flow slides the loop towards one end while the energy
//! drops below `C_{λ,ℓ}` before the crossing unwinds. The first sampled state
//! with `E < C − 0.06` that still crosses itself is printed as
//! `s,x,y,theta,k` rows.
//!
//!     cargo run --release -p elastica --example loop_escape > crates/core/tests/data/loop_escape.csv

use std::f64::consts::PI;

use elastica::flow::{init_flow, run_with, FlowConfig, FlowState};
use elastica::{build_critical_point, loop_threshold, sample_curve, Family, ProblemParams};

fn main() -> elastica::Result<()> {
    let p = ProblemParams::new(0.5, 1.0)?;
    let c = loop_threshold(&p)?;
    let mut curve = sample_curve(&build_critical_point(&p, Family::Loop, 1)?, 4000)?;
    let len = curve.total_length;
    for pt in &mut curve.samples {
        let u = pt.s / len;
        pt.y += 0.1 * (PI * u).sin().powi(3) * (2.0 * PI * u).sin();
    }
    let state = init_flow(&curve, &p, 400, 1e-6)?;
    let mut cfg = FlowConfig::for_ell(p.ell);
    cfg.stop_on_convergence = false;
    let mut found: Option<FlowState> = None;
    run_with(state, 260.0, &[], &cfg, |s| {
        if found.is_none() && s.diagnostics.intersections == 1 && s.diagnostics.energy < c - 0.06 {
            found = Some(s.clone());
        }
    })?;
    let s = found.expect("the loop unwinds within the horizon");
    eprintln!("t = {}, E = {}, C = {c}", s.time, s.diagnostics.energy);
    println!("s,x,y,theta,k");
    for pt in &s.to_curve().samples {
        println!("{},{},{},{},{}", pt.s, pt.x, pt.y, pt.theta, pt.k);
    }
    Ok(())
}
