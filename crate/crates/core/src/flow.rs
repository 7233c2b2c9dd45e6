//! The λ-elastic flow `∂tγ = −2∇²_s κ − |κ|²κ + λκ` with Navier boundary
//! conditions: ends pinned at `(0,0)`, `(ℓ,0)` and zero curvature there.
//!
//! Space: a polyline with nodes `X_0..X_M` and the discrete energy
//!
//! ```text
//!   E_h = Σ_{i=1}^{M-1} φ_i² / h̄_i + λ Σ_i |X_{i+1} − X_i|
//! ```
//!
//! where `φ_i` is the turning angle at node `i` and `h̄_i` the dual edge length.
//! No turning angle lives at the ends, which is the discrete zero-curvature
//! condition (equivalently a ghost node `X_{-1} = 2X_0 − X_1`).
//!
//! Time: the normal part of `−∇E_h / h̄` is the velocity. Its leading symbol is
//! `−2∂⁴`, so each step solves `(I + 2Δt D₄) ΔX = Δt V` with the pentadiagonal
//! fourth difference `D₄` built on the mean edge length. Lower-order terms stay
//! explicit. Afterwards the nodes are moved along a natural cubic spline
//! through the polyline back to uniform spacing.

// `!(a > b)` below is deliberate: NaN has to fail those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;

use crate::classify::{CriticalPoint, ProblemParams};
use crate::curve::{polyline_crossings, sample_curve, CurvePoint, PlanarCurve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub energy: f64,
    pub min_edge: f64,
    pub max_edge: f64,
    pub intersections: usize,
    /// Largest discrete curvature `|φ_i / h̄_i|`.
    pub max_curvature: f64,
    /// Curvature extrapolated linearly to the pinned ends, `max(|2k₁−k₂|, |2k_{M−1}−k_{M−2}|)`.
    pub end_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowState {
    pub nodes: Vec<[f64; 2]>,
    pub time: f64,
    pub dt: f64,
    pub lambda: f64,
    pub ell: f64,
    pub diagnostics: Diagnostics,
}

impl FlowState {
    pub fn params(&self) -> ProblemParams {
        ProblemParams { lambda: self.lambda, ell: self.ell }
    }

    /// Segments `M`.
    pub fn resolution(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// The polyline as a curve: chord-length `s`, edge-averaged tangent angle,
    /// and discrete curvature `φ_i / h̄_i` (zero at the ends).
    pub fn to_curve(&self) -> PlanarCurve {
        let (phi, dual) = turning(&self.nodes);
        let m = self.resolution();
        let a = [self.nodes[1][0] - self.nodes[0][0], self.nodes[1][1] - self.nodes[0][1]];
        // Unwrapped edge angle: the first edge plus accumulated turning.
        let mut edge = a[1].atan2(a[0]);
        let mut s = 0.0;
        let mut samples = Vec::with_capacity(m + 1);
        for i in 0..=m {
            if i > 0 {
                s += dist(self.nodes[i - 1], self.nodes[i]);
            }
            // phi vanishes at both ends.
            let theta = edge + 0.5 * phi[i];
            edge += phi[i];
            let k = if i == 0 || i == m { 0.0 } else { phi[i] / dual[i] };
            samples.push(CurvePoint { s, x: self.nodes[i][0], y: self.nodes[i][1], theta, k });
        }
        PlanarCurve { samples, total_length: s }
    }

    /// Max norm of the discrete normal velocity.
    pub fn velocity_norm(&self) -> f64 {
        normal_velocity(&self.nodes, self.lambda).iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }
}

#[inline]
fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

#[inline]
fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

/// Signed turning angles and dual lengths at the interior nodes.
fn turning(nodes: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    let m = nodes.len() - 1;
    let mut phi = vec![0.0; m + 1];
    let mut dual = vec![0.0; m + 1];
    for i in 1..m {
        let a = [nodes[i][0] - nodes[i - 1][0], nodes[i][1] - nodes[i - 1][1]];
        let b = [nodes[i + 1][0] - nodes[i][0], nodes[i + 1][1] - nodes[i][1]];
        phi[i] = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        dual[i] = 0.5 * (a[0].hypot(a[1]) + b[0].hypot(b[1]));
    }
    (phi, dual)
}

/// Discrete `E_h`.
pub fn discrete_energy(nodes: &[[f64; 2]], lambda: f64) -> f64 {
    let (phi, dual) = turning(nodes);
    let bend: f64 = (1..nodes.len() - 1).map(|i| phi[i] * phi[i] / dual[i]).sum();
    let len: f64 = nodes.windows(2).map(|w| dist(w[0], w[1])).sum();
    bend + lambda * len
}

/// Gradient of `E_h` with respect to every node (ends included, later ignored).
fn energy_gradient(nodes: &[[f64; 2]], lambda: f64) -> Vec<[f64; 2]> {
    let m = nodes.len() - 1;
    let edges: Vec<[f64; 2]> = nodes.windows(2).map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]]).collect();
    let lens: Vec<f64> = edges.iter().map(|e| e[0].hypot(e[1])).collect();
    let unit: Vec<[f64; 2]> = edges.iter().zip(&lens).map(|(e, l)| [e[0] / l, e[1] / l]).collect();
    let mut g = vec![[0.0; 2]; m + 1];
    let mut add = |i: usize, v: [f64; 2], c: f64| {
        g[i][0] += c * v[0];
        g[i][1] += c * v[1];
    };
    for (i, u) in unit.iter().enumerate() {
        add(i, *u, -lambda);
        add(i + 1, *u, lambda);
    }
    for i in 1..m {
        let (a, b) = (edges[i - 1], edges[i]);
        let (la, lb) = (lens[i - 1], lens[i]);
        let phi = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        let dual = 0.5 * (la + lb);
        // ∂(φ²/h̄) = (2φ/h̄) ∂φ − (φ²/h̄²) ∂h̄
        let cphi = 2.0 * phi / dual;
        let cdual = -0.5 * phi * phi / (dual * dual);
        let pa = perp(a);
        let pb = perp(b);
        add(i - 1, pa, cphi / (la * la));
        add(i + 1, pb, cphi / (lb * lb));
        add(i, pa, -cphi / (la * la));
        add(i, pb, -cphi / (lb * lb));
        add(i, unit[i - 1], cdual);
        add(i - 1, unit[i - 1], -cdual);
        add(i + 1, unit[i], cdual);
        add(i, unit[i], -cdual);
    }
    g
}

/// `−P_N ∇E_h / h̄` at each node; zero at the pinned ends.
fn normal_velocity(nodes: &[[f64; 2]], lambda: f64) -> Vec<[f64; 2]> {
    let m = nodes.len() - 1;
    let g = energy_gradient(nodes, lambda);
    let mut v = vec![[0.0; 2]; m + 1];
    for i in 1..m {
        let t = [nodes[i + 1][0] - nodes[i - 1][0], nodes[i + 1][1] - nodes[i - 1][1]];
        let tl = t[0].hypot(t[1]);
        let nrm = [-t[1] / tl, t[0] / tl];
        let dual = 0.5 * (dist(nodes[i - 1], nodes[i]) + dist(nodes[i], nodes[i + 1]));
        let gn = (g[i][0] * nrm[0] + g[i][1] * nrm[1]) / dual;
        v[i] = [-gn * nrm[0], -gn * nrm[1]];
    }
    v
}

/// Solves a pentadiagonal system with rows `[A(i,i−2), A(i,i−1), A(i,i), A(i,i+1), A(i,i+2)]`
/// for two right-hand sides at once. Gaussian elimination without pivoting,
/// safe for the symmetric positive definite matrices used here.
fn solve_penta(band: &mut [[f64; 5]], rhs: &mut [[f64; 2]]) -> Result<()> {
    let n = band.len();
    for k in 0..n {
        let piv = band[k][2];
        if !(piv.abs() > 1e-300) || !piv.is_finite() {
            return Err(Error::StepFailure(format!("singular pentadiagonal pivot at row {k}")));
        }
        for r in k + 1..(k + 3).min(n) {
            let f = band[r][2 + k - r] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..(k + 3).min(n) {
                band[r][2 + j - r] -= f * band[k][2 + j - k];
            }
            rhs[r][0] -= f * rhs[k][0];
            rhs[r][1] -= f * rhs[k][1];
        }
    }
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for d in 1..=2 {
            if k + d < n {
                let a = band[k][2 + d];
                acc[0] -= a * rhs[k + d][0];
                acc[1] -= a * rhs[k + d][1];
            }
        }
        rhs[k] = [acc[0] / band[k][2], acc[1] / band[k][2]];
    }
    Ok(())
}

/// Natural cubic spline through `(t_i, y_i)`: returns second derivatives.
fn spline_second_derivatives(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut m2 = vec![0.0; n];
    if n < 3 {
        return m2;
    }
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = t[i] - t[i - 1];
        let h1 = t[i + 1] - t[i];
        let sub = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        if i > 1 {
            let w = sub / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { m2[i + 1] } else { 0.0 };
        m2[i] = (rhs[i] - sup[i] * next) / diag[i];
    }
    m2
}

/// Resamples a polyline at `m` equal steps of cumulative chord length along
/// a natural cubic spline, keeping both ends exactly.
fn resample_uniform(pts: &[[f64; 2]], m: usize) -> Vec<[f64; 2]> {
    let mut t = Vec::with_capacity(pts.len());
    t.push(0.0);
    for w in pts.windows(2) {
        t.push(t.last().unwrap() + dist(w[0], w[1]));
    }
    let total = *t.last().unwrap();
    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let mx = spline_second_derivatives(&t, &xs);
    let my = spline_second_derivatives(&t, &ys);
    let mut out = Vec::with_capacity(m + 1);
    out.push(pts[0]);
    let mut seg = 0;
    for i in 1..m {
        let s = total * i as f64 / m as f64;
        while seg + 2 < t.len() && t[seg + 1] < s {
            seg += 1;
        }
        let h = t[seg + 1] - t[seg];
        let a = (t[seg + 1] - s) / h;
        let b = 1.0 - a;
        let ev = |y: &[f64], m2: &[f64]| {
            a * y[seg] + b * y[seg + 1] + ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) * h * h / 6.0
        };
        out.push([ev(&xs, &mx), ev(&ys, &my)]);
    }
    out.push(*pts.last().unwrap());
    out
}

fn diagnostics(nodes: &[[f64; 2]], lambda: f64) -> Diagnostics {
    let (phi, dual) = turning(nodes);
    let m = nodes.len() - 1;
    let k: Vec<f64> = (0..=m).map(|i| if i == 0 || i == m { 0.0 } else { phi[i] / dual[i] }).collect();
    let max_curvature = k.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let end_curvature = (2.0 * k[1] - k[2]).abs().max((2.0 * k[m - 1] - k[m - 2]).abs());
    let (min_edge, max_edge) = nodes
        .windows(2)
        .map(|w| dist(w[0], w[1]))
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), e| (lo.min(e), hi.max(e)));
    Diagnostics {
        energy: discrete_energy(nodes, lambda),
        min_edge,
        max_edge,
        intersections: polyline_crossings(nodes).len(),
        max_curvature,
        end_curvature,
    }
}

/// Builds the discrete initial state with `m` uniform segments.
pub fn init_flow(curve: &PlanarCurve, p: &ProblemParams, m: usize, dt: f64) -> Result<FlowState> {
    if m < 16 {
        return Err(Error::Resolution(format!("need M >= 16 segments, got {m}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let s = &curve.samples;
    if s.len() < 3 {
        return Err(Error::Sampling("initial curve needs at least 3 samples".into()));
    }
    let tol = 1e-9 * p.ell;
    let (a, b) = (s[0], s[s.len() - 1]);
    if a.x.hypot(a.y) > tol || (b.x - p.ell).hypot(b.y) > tol {
        return Err(Error::IncompatibleBoundary(format!(
            "ends ({}, {}) and ({}, {}) are not pinned at (0, 0) and ({}, 0)",
            a.x, a.y, b.x, b.y, p.ell
        )));
    }
    let kmax = s.iter().fold(0.0_f64, |acc, c| acc.max(c.k.abs()));
    let kend = a.k.abs().max(b.k.abs());
    if kend > 1e-3 * kmax + 1e-12 {
        return Err(Error::IncompatibleBoundary(format!(
            "end curvature {kend} violates the zero-curvature condition (max |k| = {kmax})"
        )));
    }
    let mut pts: Vec<[f64; 2]> = s.iter().map(|c| [c.x, c.y]).collect();
    pts[0] = [0.0, 0.0];
    *pts.last_mut().unwrap() = [p.ell, 0.0];
    // Iterate to a fixed point of the redistribution, so that the first step
    // does not spend its displacement on a tangential reshuffle.
    let mut nodes = resample_uniform(&pts, m);
    for _ in 0..50 {
        let next = resample_uniform(&nodes, m);
        let moved = node_distance(&nodes, &next);
        nodes = next;
        if moved < 1e-14 * p.ell {
            break;
        }
    }
    let diagnostics = diagnostics(&nodes, p.lambda);
    Ok(FlowState { nodes, time: 0.0, dt, lambda: p.lambda, ell: p.ell, diagnostics })
}

/// One semi-implicit step of size `state.dt`.
pub fn step(state: &FlowState) -> Result<FlowState> {
    step_with(state, state.dt)
}

fn step_with(state: &FlowState, dt: f64) -> Result<FlowState> {
    let x = &state.nodes;
    let m = x.len() - 1;
    let v = normal_velocity(x, state.lambda);
    let h = state.length() / m as f64;
    let c = 2.0 * dt / (h * h * h * h);
    // Interior unknowns 1..M−1; ΔX_0 = ΔX_M = 0 and ghost ΔX_{-1} = −ΔX_1.
    let n = m - 1;
    let mut band = vec![[c, -4.0 * c, 1.0 + 6.0 * c, -4.0 * c, c]; n];
    band[0][2] = 1.0 + 5.0 * c;
    band[n - 1][2] = 1.0 + 5.0 * c;
    let mut rhs: Vec<[f64; 2]> = (1..m).map(|i| [dt * v[i][0], dt * v[i][1]]).collect();
    solve_penta(&mut band, &mut rhs)?;
    let mut moved = x.clone();
    for (i, d) in rhs.iter().enumerate() {
        moved[i + 1][0] += d[0];
        moved[i + 1][1] += d[1];
    }
    if moved.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::StepFailure("non-finite node positions".into()));
    }
    let nodes = resample_uniform(&moved, m);
    let diag = diagnostics(&nodes, state.lambda);
    if !(diag.min_edge > 1e-8 * state.ell) || !diag.energy.is_finite() {
        return Err(Error::StepFailure(format!("edge collapsed to {}", diag.min_edge)));
    }
    Ok(FlowState { nodes, time: state.time + dt, dt: state.dt, lambda: state.lambda, ell: state.ell, diagnostics: diag })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowConfig {
    pub dt_max: f64,
    pub sample_interval: f64,
    /// Max node distance to a catalogue curve, relative to `ℓ`.
    pub tol_conv: f64,
    /// Velocity (max norm) below which a close shape counts as converged.
    pub vel_tol: f64,
    /// Allowed energy increase per accepted step, relative to `E_λ(0)`.
    pub energy_tol: f64,
    pub double_after: u32,
    pub stop_on_convergence: bool,
}

impl FlowConfig {
    pub fn for_ell(ell: f64) -> Self {
        let l4 = ell.powi(4);
        Self {
            dt_max: 1e-3 * l4,
            sample_interval: 1e-2 * l4,
            tol_conv: 1e-4,
            vel_tol: 1e-6,
            energy_tol: 1e-8,
            double_after: 50,
            stop_on_convergence: true,
        }
    }
}

/// Default initial step `1e-6·ℓ⁴`.
pub fn default_dt(ell: f64) -> f64 {
    1e-6 * ell.powi(4)
}

/// Default horizon `10·ℓ⁴`.
pub fn default_horizon(ell: f64) -> f64 {
    10.0 * ell.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub energy: f64,
    pub intersections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOutcome {
    pub converged_to: Option<String>,
    pub converged_at: Option<f64>,
    /// First sample time after which no self-intersection was seen again.
    pub embedded_since: Option<f64>,
    pub horizon_exceeded: bool,
    pub trace: Vec<Sample>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    /// Largest `E(t_{k+1}) − E(t_k)` over accepted steps.
    pub max_energy_increase: f64,
    pub final_state: FlowState,
}

impl FlowOutcome {
    pub fn energy_trace(&self) -> Vec<(f64, f64)> {
        self.trace.iter().map(|s| (s.t, s.energy)).collect()
    }
}

/// Max node distance between two polylines with the same node count.
pub fn node_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(p, q)| dist(*p, *q)).fold(0.0, f64::max)
}

/// Distance to a shape up to reflection across the x-axis.
fn shape_distance(nodes: &[[f64; 2]], target: &[[f64; 2]]) -> f64 {
    let mirrored = target.iter().map(|p| [p[0], -p[1]]);
    let d_plain = node_distance(nodes, target);
    let d_mirror = nodes.iter().zip(mirrored).map(|(p, q)| dist(*p, q)).fold(0.0, f64::max);
    d_plain.min(d_mirror)
}

/// Integrates to `t_end` with the default configuration.
pub fn run(state: FlowState, t_end: f64, catalogue: &[CriticalPoint]) -> Result<FlowOutcome> {
    let cfg = FlowConfig::for_ell(state.ell);
    run_with(state, t_end, catalogue, &cfg, |_| {})
}

/// Integrates to `t_end`; `on_sample` sees the state at every sample time.
pub fn run_with(
    mut state: FlowState,
    t_end: f64,
    catalogue: &[CriticalPoint],
    cfg: &FlowConfig,
    mut on_sample: impl FnMut(&FlowState),
) -> Result<FlowOutcome> {
    if !(t_end > state.time) {
        return Err(Error::Domain(format!("t_end = {t_end} must exceed the current time {}", state.time)));
    }
    let m = state.resolution();
    let targets: Vec<(String, Vec<[f64; 2]>)> = catalogue
        .iter()
        .map(|cp| Ok((cp.id(), sample_curve(cp, m)?.points())))
        .collect::<Result<_>>()?;
    let e0 = state.diagnostics.energy;
    let dt_floor = 1e-14 * state.ell.powi(4);
    let mut trace = vec![Sample { t: state.time, energy: e0, intersections: state.diagnostics.intersections }];
    on_sample(&state);
    let mut last_crossed = if state.diagnostics.intersections > 0 { Some(state.time) } else { None };
    let mut accepted = 0u64;
    let mut rejected = 0u64;
    let mut clean = 0u32;
    let mut max_inc = f64::NEG_INFINITY;
    let mut converged = None;
    let mut next_sample = state.time + cfg.sample_interval;

    'outer: while state.time < t_end {
        let target = next_sample.min(t_end);
        let dt = state.dt.min(target - state.time);
        match step_with(&state, dt) {
            Ok(mut next) if next.diagnostics.energy <= state.diagnostics.energy + cfg.energy_tol * e0.abs() => {
                max_inc = max_inc.max(next.diagnostics.energy - state.diagnostics.energy);
                accepted += 1;
                clean += 1;
                if clean >= cfg.double_after {
                    next.dt = (2.0 * next.dt).min(cfg.dt_max);
                    clean = 0;
                }
                // Land exactly on the sample time despite rounding in the sum.
                if target - next.time <= 1e-12 * target.abs().max(1.0) {
                    next.time = target;
                }
                state = next;
            }
            _ => {
                rejected += 1;
                clean = 0;
                state.dt *= 0.5;
                if state.dt < dt_floor {
                    return Err(Error::StepFailure(format!(
                        "time step fell below {dt_floor:e} at t = {}",
                        state.time
                    )));
                }
                continue;
            }
        }
        if state.time >= next_sample || state.time >= t_end {
            next_sample += cfg.sample_interval;
            let d = state.diagnostics;
            trace.push(Sample { t: state.time, energy: d.energy, intersections: d.intersections });
            on_sample(&state);
            if d.intersections > 0 {
                last_crossed = Some(state.time);
            }
            if converged.is_none() {
                let tol = cfg.tol_conv * state.ell;
                let close = targets.iter().find(|(_, pts)| shape_distance(&state.nodes, pts) < tol);
                if let Some((id, _)) = close {
                    if state.velocity_norm() < cfg.vel_tol {
                        converged = Some((id.clone(), state.time));
                        if cfg.stop_on_convergence {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let crossing_now = state.diagnostics.intersections > 0;
    let embedded_since = if crossing_now {
        None
    } else {
        match last_crossed {
            None => Some(trace[0].t),
            Some(tc) => trace.iter().find(|s| s.t > tc).map(|s| s.t),
        }
    };
    Ok(FlowOutcome {
        converged_to: converged.as_ref().map(|c| c.0.clone()),
        converged_at: converged.as_ref().map(|c| c.1),
        embedded_since,
        horizon_exceeded: converged.is_none(),
        trace,
        accepted_steps: accepted,
        rejected_steps: rejected,
        max_energy_increase: if accepted > 0 { max_inc } else { 0.0 },
        final_state: state,
    })
}
