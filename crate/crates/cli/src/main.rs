//! `elastica`: command-line front end for penalized pinned elasticae.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit status is
//! 2 for flag errors, 1 for domain errors and 0 otherwise.

mod initial;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastica::elliptic::ellip_ke;
use elastica::energy::sarc_loop_gap;
use elastica::flow::{default_dt, default_horizon};
use elastica::moduli::eval_f;
use elastica::{
    build_critical_point, compare_all, constants, count_local_minimizers, crossover_lambda, energy_closed_form,
    enumerate_critical_points, init_flow, loop_threshold, mode_floor, run_with, sample_curve, stability_verdict,
    Family, FlowConfig, FlowState, Mechanism, Modulus, ProblemParams, Verdict,
};
use serde::Serialize;

use initial::InitialSpec;

/// Default output directory for relative `--output` paths and flow runs.
const OUT_DIR_ENV: &str = "ELASTICA_OUT_DIR";

#[derive(Parser)]
#[command(name = "elastica", version, about = "Penalized pinned elasticae: catalogue, energies, stability and flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print q̂, q*, λ̂ with their defining residuals.
    Constants(OutputArgs),
    /// Enumerate the critical points up to mode n-max.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample one critical point as CSV (s,x,y,theta,k).
    Curve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Number of segments; the CSV has samples+1 rows.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Mirror across the x-axis.
        #[arg(long)]
        reflect: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Energy ordering and comparison checks.
    EnergyTable {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Stability verdict of every enumerated critical point.
    Stability {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// The λ at which sarc1 and loop1 have equal energy.
    Crossover {
        #[arg(long, value_parser = positive)]
        ell: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the discrete elastic flow; writes trajectory.jsonl and summary.json.
    Flow(FlowArgs),
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, value_parser = positive)]
    lambda: f64,
    #[arg(long, value_parser = positive)]
    ell: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of stdout; relative paths resolve against $ELASTICA_OUT_DIR.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// segment | family:<name>,n=<k> | wavelike:q=<v> | file:<path.csv>
    #[arg(long)]
    initial: InitialSpec,
    #[arg(long, default_value_t = 400)]
    m: usize,
    /// Initial step; defaults to 1e-6·ℓ⁴.
    #[arg(long, value_parser = positive)]
    dt: Option<f64>,
    /// Horizon; defaults to 10·ℓ⁴.
    #[arg(long, value_parser = positive)]
    t_end: Option<f64>,
    /// Highest mode in the convergence catalogue.
    #[arg(long, default_value_t = 3)]
    n_max: u32,
    /// Keep integrating after convergence is detected.
    #[arg(long)]
    no_stop: bool,
    /// Directory for trajectory.jsonl and summary.json; defaults to $ELASTICA_OUT_DIR or the working directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(_) => Err(format!("not a number: '{s}'")),
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).ok_or_else(|| format!("unknown family '{s}' (segment, sarc, larc, loop)"))
}

/// A failure after flag parsing; always exit status 1.
struct Failure(String);

impl From<elastica::Error> for Failure {
    fn from(e: elastica::Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(format!("i/o error: {e}"))
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure(s)
    }
}

type Res<T = ()> = Result<T, Failure>;

fn params(a: &ParamArgs) -> Res<ProblemParams> {
    Ok(ProblemParams::new(a.lambda, a.ell)?)
}

fn out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn open_output(out: &OutputArgs) -> Res<Box<dyn Write>> {
    match &out.output {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let path = match out_dir() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p.clone(),
            };
            let file = File::create(&path).map_err(|e| Failure(format!("cannot create {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

fn write_json<T: Serialize>(out: &OutputArgs, value: &T) -> Res {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(out: &OutputArgs, rows: impl IntoIterator<Item = T>) -> Res {
    let mut w = csv::Writer::from_writer(open_output(out)?);
    for r in rows {
        w.serialize(r).map_err(|e| Failure(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ConstantsReport {
    q_hat: f64,
    q_star: f64,
    lambda_hat: f64,
    q_hat_squared: f64,
    residuals: Residuals,
}

#[derive(Serialize)]
struct Residuals {
    /// `f(q̂)`.
    f_q_hat: f64,
    /// `2E(q*) − K(q*)`.
    two_e_minus_k_q_star: f64,
}

fn cmd_constants(out: &OutputArgs) -> Res {
    let c = constants();
    let (k, e) = ellip_ke(Modulus::new(c.q_star)?)?;
    let report = ConstantsReport {
        q_hat: c.q_hat,
        q_star: c.q_star,
        lambda_hat: c.lambda_hat,
        q_hat_squared: c.q_hat * c.q_hat,
        residuals: Residuals { f_q_hat: eval_f(c.q_hat)?, two_e_minus_k_q_star: 2.0 * e - k },
    };
    write_json(out, &report)
}

#[derive(Serialize)]
struct ClassifyReport {
    lambda: f64,
    ell: f64,
    lambda_ell2: f64,
    mode_floor: u32,
    count: usize,
    critical_points: Vec<PointEntry>,
}

#[derive(Serialize)]
struct PointEntry {
    id: String,
    family: Family,
    n: u32,
    q: Option<f64>,
    alpha: Option<f64>,
    length: f64,
    sigma: Option<i8>,
    merged: bool,
    bending: f64,
    total: f64,
}

fn cmd_classify(p: &ProblemParams, n_max: u32, out: &OutputArgs) -> Res {
    let cat = enumerate_critical_points(p, n_max)?;
    let points = cat
        .iter()
        .map(|cp| {
            let e = energy_closed_form(cp, p)?;
            Ok(PointEntry {
                id: cp.id(),
                family: cp.family,
                n: cp.n,
                q: cp.q,
                alpha: cp.alpha,
                length: cp.length,
                sigma: cp.sigma,
                merged: cp.merged,
                bending: e.bending,
                total: e.total,
            })
        })
        .collect::<Res<Vec<_>>>()?;
    let report = ClassifyReport {
        lambda: p.lambda,
        ell: p.ell,
        lambda_ell2: p.mu(),
        mode_floor: mode_floor(p),
        count: points.len(),
        critical_points: points,
    };
    write_json(out, &report)
}

fn cmd_curve(p: &ProblemParams, family: Family, n: u32, samples: usize, reflect: bool, format: Format, out: &OutputArgs) -> Res {
    let cp = build_critical_point(p, family, n)?;
    let mut curve = sample_curve(&cp, samples)?;
    if reflect {
        curve = curve.reflected();
    }
    match format {
        Format::Csv => write_csv(out, &curve.samples),
        Format::Json => write_json(out, &curve),
    }
}

fn cmd_energy_table(p: &ProblemParams, n_max: u32, format: Format, out: &OutputArgs) -> Res {
    let report = compare_all(p, n_max)?;
    match format {
        Format::Json => write_json(out, &report),
        Format::Csv => write_csv(out, &report.ordering),
    }
}

#[derive(Serialize)]
struct StabilityReport {
    lambda: f64,
    ell: f64,
    lambda_ell2: f64,
    local_minimizers: u32,
    verdicts: Vec<VerdictEntry>,
}

#[derive(Serialize)]
struct VerdictEntry {
    id: String,
    verdict: Verdict,
    mechanism: Mechanism,
    sign_value: Option<f64>,
}

fn cmd_stability(p: &ProblemParams, n_max: u32, out: &OutputArgs) -> Res {
    let verdicts = enumerate_critical_points(p, n_max)?
        .iter()
        .map(|cp| {
            let v = stability_verdict(cp, p)?;
            Ok(VerdictEntry { id: cp.id(), verdict: v.verdict, mechanism: v.mechanism, sign_value: v.sign_value })
        })
        .collect::<Res<Vec<_>>>()?;
    let report = StabilityReport {
        lambda: p.lambda,
        ell: p.ell,
        lambda_ell2: p.mu(),
        local_minimizers: count_local_minimizers(p),
        verdicts,
    };
    write_json(out, &report)
}

#[derive(Serialize)]
struct CrossoverReport {
    ell: f64,
    lambda_dagger: f64,
    /// `E[sarc1] − E[loop1]` at `lambda_dagger`.
    residual: f64,
}

fn cmd_crossover(ell: f64, out: &OutputArgs) -> Res {
    let lambda_dagger = crossover_lambda(ell)?;
    let residual = sarc_loop_gap(ell, lambda_dagger)?;
    write_json(out, &CrossoverReport { ell, lambda_dagger, residual })
}

#[derive(Serialize)]
struct TrajectoryRecord<'a> {
    t: f64,
    energy: f64,
    intersections: usize,
    nodes: &'a [[f64; 2]],
}

#[derive(Serialize)]
#[serde(untagged)]
enum Embedded {
    Since(f64),
    Never(&'static str),
}

#[derive(Serialize)]
struct FlowSummary {
    initial: String,
    lambda: f64,
    ell: f64,
    m: usize,
    dt: f64,
    t_end: f64,
    /// `C_{λ,ℓ}`, the loop1 energy.
    threshold: f64,
    initial_energy: f64,
    initial_intersections: usize,
    converged_to: String,
    converged_at: Option<f64>,
    embedded_since: Embedded,
    horizon_exceeded: bool,
    final_time: f64,
    final_energy: f64,
    final_intersections: usize,
    accepted_steps: u64,
    rejected_steps: u64,
    max_energy_increase: f64,
    trajectory: String,
}

fn cmd_flow(a: &FlowArgs) -> Res {
    let p = params(&a.params)?;
    let dt = a.dt.unwrap_or_else(|| default_dt(p.ell));
    let t_end = a.t_end.unwrap_or_else(|| default_horizon(p.ell));
    let curve = a.initial.curve(&p)?;
    let state = init_flow(&curve, &p, a.m, dt)?;
    let catalogue = enumerate_critical_points(&p, a.n_max)?;
    let dir = a.out_dir.clone().or_else(out_dir).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Failure(format!("cannot create {}: {e}", dir.display())))?;
    let traj_path = dir.join("trajectory.jsonl");
    let mut traj = BufWriter::new(create(&traj_path)?);
    let (e0, x0) = (state.diagnostics.energy, state.diagnostics.intersections);
    let cfg = FlowConfig { stop_on_convergence: !a.no_stop, ..FlowConfig::for_ell(p.ell) };
    let mut io_err = None;
    let outcome = run_with(state, t_end, &catalogue, &cfg, |s: &FlowState| {
        let rec = TrajectoryRecord {
            t: s.time,
            energy: s.diagnostics.energy,
            intersections: s.diagnostics.intersections,
            nodes: &s.nodes,
        };
        if io_err.is_none() {
            if let Err(e) = serde_json::to_writer(&mut traj, &rec).map_err(io::Error::from).and_then(|_| writeln!(traj)) {
                io_err = Some(e);
            }
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    traj.flush()?;
    let fin = &outcome.final_state;
    let summary = FlowSummary {
        initial: a.initial.to_string(),
        lambda: p.lambda,
        ell: p.ell,
        m: a.m,
        dt,
        t_end,
        threshold: loop_threshold(&p)?,
        initial_energy: e0,
        initial_intersections: x0,
        converged_to: outcome.converged_to.clone().unwrap_or_else(|| "none".into()),
        converged_at: outcome.converged_at,
        embedded_since: outcome.embedded_since.map_or(Embedded::Never("never within horizon"), Embedded::Since),
        horizon_exceeded: outcome.horizon_exceeded,
        final_time: fin.time,
        final_energy: fin.diagnostics.energy,
        final_intersections: fin.diagnostics.intersections,
        accepted_steps: outcome.accepted_steps,
        rejected_steps: outcome.rejected_steps,
        max_energy_increase: outcome.max_energy_increase,
        trajectory: "trajectory.jsonl".into(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure(e.to_string()))? + "\n";
    fs::write(dir.join("summary.json"), &text)?;
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn create(path: &Path) -> Res<File> {
    File::create(path).map_err(|e| Failure(format!("cannot create {}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Res {
    match cli.command {
        Command::Constants(out) => cmd_constants(&out),
        Command::Classify { params: a, n_max, out } => cmd_classify(&params(&a)?, n_max, &out),
        Command::Curve { params: a, family, n, samples, reflect, format, out } => {
            cmd_curve(&params(&a)?, family, n, samples, reflect, format, &out)
        }
        Command::EnergyTable { params: a, n_max, format, out } => cmd_energy_table(&params(&a)?, n_max, format, &out),
        Command::Stability { params: a, n_max, out } => cmd_stability(&params(&a)?, n_max, &out),
        Command::Crossover { ell, out } => cmd_crossover(ell, &out),
        Command::Flow(a) => cmd_flow(&a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on flag errors.
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
