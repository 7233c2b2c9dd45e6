//! Penalized pinned elasticae: planar curves from `(0,0)` to `(ℓ,0)` that are
//! critical for `E_λ = ∫k² ds + λ·L`, their energies and stability, and the
//! `L²`-gradient flow of `E_λ`.

pub mod classify;
pub mod curve;
pub mod elliptic;
pub mod energy;
pub mod flow;
pub mod error;
pub mod moduli;
pub mod stability;

pub use classify::{build_critical_point, enumerate_critical_points, mode_floor, CriticalPoint, Family, ProblemParams};
pub use curve::{
    curvature_at, reconstruct_from_curvature, sample_curve, self_intersections, wavelike_curve, Crossing, CurvePoint,
    PlanarCurve,
};
pub use elliptic::{ellip_e, ellip_e_inc, ellip_f_inc, ellip_k, jacobi, JacobiTriple, Modulus};
pub use energy::{
    compare_all, crossover_lambda, energy_closed_form, loop_threshold, psi, quadrature_energy, single_term_comparison,
    ComparisonReport, EnergyBreakdown,
};
pub use error::{Error, Result};
pub use moduli::{constants, find_constants, invert_g, Branch, BranchedModulus, Constants};
pub use stability::{
    count_local_minimizers, degenerate_third_derivative, second_derivative_sign, stability_verdict, Mechanism,
    StabilityVerdict, Verdict,
};
pub use flow::{init_flow, run, run_with, step, FlowConfig, FlowOutcome, FlowState};
