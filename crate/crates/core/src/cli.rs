//! The `pdmp` command-line interface.
//!
//! Every subcommand writes its CSV and JSON outputs plus a `manifest.json`
//! under `--out`. Exit codes: 0 on success, 1 on input errors, 2 when an
//! assumption is infeasible or a certificate or estimate could not be
//! established.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::assumptions::{check_a1, check_a2_symmetry, check_a3, h_route, PartialConstants};
use crate::dynamics::{simulate, DEFAULT_JUMP_CAP};
use crate::empirics::{
    ball_hitting_certificate, empirical_distributions, estimate_hitting_z, estimate_tail_s, exponential_moment,
    hitting_starts, regeneration_ratio, stationarity_diagnostic, tail_s_reports, tv_distance, BoundReport,
    HistogramSpec, StationarityFunction, TestFunction,
};
use crate::error::{Error, Result};
use crate::lyapunov::{drift_rate, KernelIntegral, LyapunovParams};
use crate::model::Model;
use crate::onedim::{find_Istar_Jstar, hitting_moment_bound_1d, tail_bound_S, Jprime0, OneDimConstants, RateEnvelope};
use crate::rng::{Streams, DEFAULT_SEED};
use crate::state::State;

/// Environment variable overriding the default root seed.
pub const SEED_ENV: &str = "PDMP_SEED";

/// Snapshot times of `reproduce-figure1`.
pub const FIGURE1_TIMES: [f64; 6] = [0.5, 5.0, 10.0, 17.0, 30.0, 40.0];

#[derive(Debug, Parser)]
#[command(name = "pdmp", version, about = "Simulate and analyse generalised Zig-Zag processes")]
struct Cli {
    /// Root seed, decimal or 0x-hex [default: $PDMP_SEED, else 0xC0FFEE]
    #[arg(long, global = true, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Worker threads for replicate pools [default: available parallelism]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trajectory and write its jump skeleton
    Simulate(SimulateArgs),
    /// Empirical law of one position coordinate at given times
    Histogram(HistogramArgs),
    /// Check the ergodicity assumptions of a model
    VerifyAssumptions(VerifyArgs),
    /// Certify the Lyapunov drift on a sample and test the hitting moments
    LyapunovCheck(LyapunovArgs),
    /// One-dimensional contraction constants and explicit bounds
    #[command(name = "bounds-1d")]
    Bounds1d(Bounds1dArgs),
    /// Tail of the sign-change index S against its bound
    TailS(TailArgs),
    /// Exponential moment of the hitting time of 0 against its bound
    HittingZ(HittingZArgs),
    /// Regenerative ratio estimate of a stationary expectation
    Regen(RegenArgs),
    /// Time averages of Lf for invariance diagnostics
    Stationarity(StationarityArgs),
    /// Histograms of the figure1 model at six fixed times with TV distances and a plot script
    #[command(name = "reproduce-figure1")]
    ReproduceFigure1(Figure1Args),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model JSON file, or a built-in name (figure1, signed-velocity, telegraph, angular)
    #[arg(long, default_value = "figure1")]
    model: String,
}

#[derive(Debug, Args)]
struct StartArgs {
    /// Initial position, comma-separated for d ≥ 2
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "5")]
    x0: Vec<f64>,
    /// Initial velocity, comma-separated for d ≥ 2
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-1")]
    v0: Vec<f64>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Number of α grid points in (0, α_max)
    #[arg(long, default_value_t = 400)]
    resolution: usize,
    /// Added to the minimal sup J to form J_*
    #[arg(long, default_value_t = 0.0)]
    headroom: f64,
    /// α in I_* [default: the grid minimiser]
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
}

#[derive(Debug, Args)]
struct HistogramArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    /// Observation times, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "40")]
    t: Vec<f64>,
    /// Number of trajectories
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 80)]
    bins: usize,
    /// Histogram range as lo,hi
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-10,10")]
    range: Vec<f64>,
    /// Position coordinate to bin (0-based)
    #[arg(long, default_value_t = 0)]
    coord: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// JSON with theta0, theta_star, beta, delta and optional lambda_min, lambda_max, p
    #[arg(long)]
    constants: Option<PathBuf>,
    /// θ₀ for the inward-mass check when no constants are given
    #[arg(long, default_value_t = 0.5)]
    theta0: f64,
    #[command(flatten)]
    scan: ScanArgs,
}

#[derive(Debug, Args)]
struct LyapunovArgs {
    /// Model JSON file or built-in name
    #[arg(long, default_value = "angular")]
    model: String,
    /// Constants JSON [default for the angular model: θ₀=0.8, θ_*=0.1, β=20, Δ=1]
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Angular cutoff θ₁ of H; give all three or none [default: midpoint of its admissible range]
    #[arg(long)]
    theta1: Option<f64>,
    /// Exponent α of H [default: midpoint of its admissible range]
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight a of H [default: midpoint of its admissible range]
    #[arg(long)]
    a: Option<f64>,
    /// Number of sampled states with |x| in (R, 4R]
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    /// Gauss–Legendre order for the kernel integral
    #[arg(long, default_value_t = 32)]
    kernel_order: usize,
    /// Starting states for the hitting-moment check (0 skips it)
    #[arg(long, default_value_t = 0)]
    hitting_starts: usize,
    /// Trajectories per starting state
    #[arg(long, default_value_t = 10_000)]
    hitting_samples: usize,
    #[arg(long, default_value_t = DEFAULT_JUMP_CAP)]
    jump_cap: usize,
}

#[derive(Debug, Args)]
struct Bounds1dArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long, default_value_t = 15)]
    n_max: u32,
    /// η for the hitting bound [default: λ_min(1 − J_*)/2]
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Args)]
struct TailArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long, default_value_t = 15)]
    n_max: u32,
    /// Number of trajectories
    #[arg(long, default_value_t = 100_000)]
    n: usize,
}

#[derive(Debug, Args)]
struct HittingZArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    #[command(flatten)]
    scan: ScanArgs,
    /// Number of trajectories
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// η [default: λ_min(1 − J_*)/2]
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_JUMP_CAP)]
    jump_cap: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegenFunction {
    Constant,
    Exponential,
    Moment,
}

#[derive(Debug, Args)]
struct RegenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, value_enum, default_value_t = RegenFunction::Exponential)]
    function: RegenFunction,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    coord: usize,
    #[arg(long, default_value_t = 2)]
    power: u32,
    #[arg(long, default_value_t = 1000)]
    excursions: usize,
    #[arg(long, default_value_t = DEFAULT_JUMP_CAP)]
    jump_cap: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatFunction {
    Constant,
    Gaussian,
    GaussianFlux,
}

impl From<StatFunction> for StationarityFunction {
    fn from(f: StatFunction) -> Self {
        match f {
            StatFunction::Constant => StationarityFunction::Constant,
            StatFunction::Gaussian => StationarityFunction::Gaussian,
            StatFunction::GaussianFlux => StationarityFunction::GaussianFlux,
        }
    }
}

#[derive(Debug, Args)]
struct StationarityArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    start: StartArgs,
    /// Test functions, comma-separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "constant,gaussian,gaussian-flux")]
    function: Vec<StatFunction>,
    #[arg(long, default_value_t = 10_000.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1_000.0)]
    burn_in: f64,
}

#[derive(Debug, Args)]
struct Figure1Args {
    /// Trajectories per snapshot
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 80)]
    bins: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-10,10")]
    range: Vec<f64>,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// `--seed`, else `$PDMP_SEED`, else [`DEFAULT_SEED`].
fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(&v).map_err(|e| Error::InvalidArgument(format!("{SEED_ENV}: {e}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_model(spec: &str) -> Result<Model> {
    if let Some(m) = Model::builtin(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "model {spec:?} is neither a file nor one of {}",
            Model::BUILTIN_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    Model::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::InvalidArgument(format!(
            "{}: line {}, column {}: {j}",
            path.display(),
            j.line(),
            j.column()
        )),
        other => other,
    })
}

fn load_constants(path: &Path) -> Result<PartialConstants> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|j| {
        Error::InvalidArgument(format!("{}: line {}, column {}: {j}", path.display(), j.line(), j.column()))
    })
}

fn start_state(m: &Model, s: &StartArgs) -> Result<State> {
    let st = State::new(s.x0.clone(), s.v0.clone())?;
    m.check_state(&st)?;
    Ok(st)
}

fn histogram_spec(bins: usize, range: &[f64]) -> Result<HistogramSpec> {
    match range {
        &[lo, hi] => Ok(HistogramSpec { lo, hi, bins }),
        _ => Err(Error::InvalidArgument("--range takes exactly two values lo,hi".into())),
    }
}

/// Collects the files a command writes.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn bounds_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(BoundReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

struct Ctx {
    streams: Streams,
}

/// Outcome of a command: exit code plus a JSON summary for the manifest.
type Outcome = Result<(i32, Value)>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let name = command_name(&cli.command);
    let seed = match resolve_seed(cli.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return 1;
    }
    let mut out = Output {
        dir: cli.out.clone(),
        files: Vec::new(),
    };
    let ctx = Ctx {
        streams: Streams::new(seed).with_threads(cli.threads),
    };
    let (code, summary) = match dispatch(&cli.command, &ctx, &mut out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Infeasible(_) | Error::Inconclusive(_) => 2,
                _ => 1,
            };
            (code, json!({ "error": e.to_string() }))
        }
    };
    let manifest = json!({
        "command": name,
        "seed": seed,
        "threads": cli.threads,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "exit_code": code,
        "outputs": out.files,
        "summary": summary,
    });
    if let Err(e) = out.json("manifest.json", &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return 1;
    }
    code
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Histogram(_) => "histogram",
        Command::VerifyAssumptions(_) => "verify-assumptions",
        Command::LyapunovCheck(_) => "lyapunov-check",
        Command::Bounds1d(_) => "bounds-1d",
        Command::TailS(_) => "tail-s",
        Command::HittingZ(_) => "hitting-z",
        Command::Regen(_) => "regen",
        Command::Stationarity(_) => "stationarity",
        Command::ReproduceFigure1(_) => "reproduce-figure1",
    }
}

fn dispatch(c: &Command, ctx: &Ctx, out: &mut Output) -> Outcome {
    match c {
        Command::Simulate(a) => cmd_simulate(a, ctx, out),
        Command::Histogram(a) => cmd_histogram(a, ctx, out),
        Command::VerifyAssumptions(a) => cmd_verify(a, out),
        Command::LyapunovCheck(a) => cmd_lyapunov(a, ctx, out),
        Command::Bounds1d(a) => cmd_bounds_1d(a, out),
        Command::TailS(a) => cmd_tail_s(a, ctx, out),
        Command::HittingZ(a) => cmd_hitting_z(a, ctx, out),
        Command::Regen(a) => cmd_regen(a, ctx, out),
        Command::Stationarity(a) => cmd_stationarity(a, ctx, out),
        Command::ReproduceFigure1(a) => cmd_figure1(a, ctx, out),
    }
}

fn cmd_simulate(a: &SimulateArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let path = simulate(&m, &s0, a.horizon, ctx.streams.root)?;
    out.write("skeleton.csv", &path.to_csv())?;
    let summary = json!({ "jumps": path.jumps(), "horizon": a.horizon });
    out.json("summary.json", &summary)?;
    Ok((0, summary))
}

fn cmd_histogram(a: &HistogramArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let spec = histogram_spec(a.bins, &a.range)?;
    let hists = empirical_distributions(&m, &s0, &a.t, a.n, spec, a.coord, ctx.streams)?;
    let mut files = Vec::new();
    for (t, h) in a.t.iter().zip(&hists) {
        let name = format!("histogram_t{t}.csv");
        out.write(&name, &h.to_csv())?;
        files.push(json!({ "t": t, "file": name, "underflow": h.underflow, "overflow": h.overflow }));
    }
    let summary = json!({ "n": a.n, "coord": a.coord, "histograms": files });
    out.json("summary.json", &summary)?;
    Ok((0, summary))
}

/// A1–A4 in one dimension. Returns the JSON report and whether the route
/// certifies ergodicity.
fn one_dim_route(m: &Model, scan: &ScanArgs) -> Result<(Value, bool)> {
    let a1 = check_a1(m);
    let a2 = check_a2_symmetry(m, 101);
    let a3 = check_a3(m)?;
    let a4 = find_Istar_Jstar(m, scan.resolution, scan.headroom)?;
    let env = RateEnvelope::new(&m.rate)?;
    let holds = a1.holds && a2.holds && a3.holds && a4.feasible();
    let a4_json = match &a4.constants {
        Some(k) => json!({ "feasible": true, "alpha_max": a4.alpha_max, "constants": k }),
        None => json!({
            "feasible": false,
            "alpha_max": a4.alpha_max,
            "min_sup_j": a4.curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min),
            "detail": "no alpha in (0, alpha_max) makes sup_v' J(v', alpha) < 1",
        }),
    };
    Ok((
        json!({
            "a1": a1,
            "a2": a2,
            "a3": a3,
            "a4": a4_json,
            "envelope_differs_on_closed_half_line": env.closed_half_line_differs,
            "holds": holds,
        }),
        holds,
    ))
}

fn cmd_verify(a: &VerifyArgs, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let constants = a.constants.as_deref().map(load_constants).transpose()?;
    let h = h_route(&m, constants.as_ref(), a.theta0)?;
    let mut report = json!({ "dimension": m.dimension, "h_route": h });
    let code = if m.dimension == 1 {
        let (a_route, holds) = one_dim_route(&m, &a.scan)?;
        report["a_route"] = a_route;
        if holds || h.certified {
            0
        } else {
            2
        }
    } else {
        if h.h4.is_none() {
            report["note"] = json!("H4 and the admissible intervals need --constants; not evaluated");
        }
        if h.failed {
            2
        } else {
            0
        }
    };
    report["exit_code"] = json!(code);
    out.json("assumptions.json", &report)?;
    Ok((code, report))
}

fn angular_constants() -> PartialConstants {
    PartialConstants {
        lambda_min: None,
        lambda_max: None,
        p: None,
        theta0: 0.8,
        theta_star: 0.1,
        beta: 20.0,
        delta: 1.0,
    }
}

fn cmd_lyapunov(a: &LyapunovArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model)?;
    let partial = match (&a.constants, a.model.as_str()) {
        (Some(p), _) => load_constants(p)?,
        (None, "angular") => angular_constants(),
        (None, _) => return Err(Error::InvalidArgument("--constants is required for this model".into())),
    };
    let h = h_route(&m, Some(&partial), partial.theta0)?;
    if !h.certified {
        let summary = json!({ "h_route": h, "certified": false });
        out.json("summary.json", &summary)?;
        return Ok((2, summary));
    }
    let c = h.constants.expect("certified route has constants");
    let p = match (a.theta1, a.alpha, a.a) {
        (None, None, None) => LyapunovParams::from_midpoints(&c)?,
        (Some(t), Some(al), Some(aa)) => LyapunovParams::certified(&c, t, al, aa)?,
        _ => {
            return Err(Error::InvalidArgument(
                "give all of --theta1, --alpha, --a or none of them".into(),
            ))
        }
    };
    let how = KernelIntegral::Quadrature { order: a.kernel_order };
    let drift = drift_rate(&m, &p, a.points, how, ctx.streams)?;
    let mut csv = String::new();
    for k in 1..=m.dimension {
        write!(csv, "x_{k},").unwrap();
    }
    for k in 1..=m.dimension {
        write!(csv, "v_{k},").unwrap();
    }
    csv.push_str("ratio\n");
    for q in &drift.sample {
        for c in q.x.iter().chain(&q.v) {
            write!(csv, "{c},").unwrap();
        }
        writeln!(csv, "{}", q.ratio).unwrap();
    }
    out.write("drift_points.csv", &csv)?;
    let mut summary = json!({
        "constants": c,
        "params": p,
        "radius": drift.radius,
        "eta_hat": drift.eta_hat,
        "worst": drift.worst,
        "counterexamples": drift.counterexamples.len(),
        "design": drift.design,
        "certified": drift.certified,
    });
    let mut code = if drift.certified { 0 } else { 2 };
    if a.hitting_starts > 0 && drift.certified {
        let starts = hitting_starts(m.dimension, drift.radius, a.hitting_starts, ctx.streams.derive(1));
        let checks = ball_hitting_certificate(
            &m,
            &p,
            drift.eta_hat,
            &starts,
            a.hitting_samples,
            a.jump_cap,
            ctx.streams.derive(2),
        )?;
        let reports: Vec<BoundReport> = checks.iter().map(|c| c.report.clone()).collect();
        out.write("hitting_ball.csv", &bounds_csv(&reports))?;
        let all_hold = reports.iter().all(BoundReport::consistent);
        summary["hitting"] = json!({ "starts": checks, "all_consistent": all_hold });
        if !all_hold {
            code = 2;
        }
    }
    out.json("summary.json", &summary)?;
    Ok((code, summary))
}

/// The contraction scan plus the α to use, or an infeasibility report.
fn contraction(m: &Model, scan: &ScanArgs) -> Result<(OneDimConstants, f64, RateEnvelope)> {
    if m.dimension != 1 {
        return Err(Error::InvalidArgument("one-dimensional bounds need a d = 1 model".into()));
    }
    let res = find_Istar_Jstar(m, scan.resolution, scan.headroom)?;
    let Some(k) = res.constants else {
        return Err(Error::Infeasible(
            "no alpha makes sup_v' J(v', alpha) < 1; the contraction condition fails".into(),
        ));
    };
    let alpha = scan.alpha.unwrap_or(k.alpha_opt);
    Ok((k, alpha, RateEnvelope::new(&m.rate)?))
}

fn lambda_min(m: &Model) -> Result<f64> {
    Ok(check_a3(m)?.lambda_min)
}

fn default_eta(m: &Model, k: &OneDimConstants, eta: Option<f64>) -> Result<f64> {
    Ok(match eta {
        Some(e) => e,
        None => 0.5 * lambda_min(m)? * (1.0 - k.j_star),
    })
}

fn cmd_bounds_1d(a: &Bounds1dArgs, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let (x0, v0) = (s0.x()[0], s0.v()[0]);
    let scan = find_Istar_Jstar(&m, a.scan.resolution, a.scan.headroom)?;
    let mut curve = String::from("alpha,sup_j\n");
    for (al, j) in &scan.curve {
        writeln!(curve, "{al},{j}").unwrap();
    }
    out.write("contraction_curve.csv", &curve)?;
    let (k, alpha, env) = match contraction(&m, &a.scan) {
        Ok(r) => r,
        Err(Error::Infeasible(msg)) => {
            let summary = json!({ "feasible": false, "alpha_max": scan.alpha_max, "detail": msg });
            out.json("summary.json", &summary)?;
            return Ok((2, summary));
        }
        Err(e) => return Err(e),
    };
    let mut tail = String::from("n,bound\n");
    for n in 1..=a.n_max {
        writeln!(tail, "{n},{}", tail_bound_S(x0, v0, alpha, &k, n, &env)?).unwrap();
    }
    out.write("tail_bound.csv", &tail)?;
    let lmin = lambda_min(&m)?;
    let eta = default_eta(&m, &k, a.eta)?;
    let hit = hitting_moment_bound_1d(x0, v0, eta, alpha, &k, lmin, &env)?;
    let jp: Vec<Value> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|&vp| Ok(json!({ "v_prev": vp, "jprime0": Jprime0(vp, &m, &env)? })))
        .collect::<Result<_>>()?;
    let summary = json!({
        "feasible": true,
        "constants": k,
        "alpha": alpha,
        "lambda_min": lmin,
        "eta": eta,
        "hitting_moment_bound": hit,
        "jprime0": jp,
        "envelope_differs_on_closed_half_line": env.closed_half_line_differs,
    });
    out.json("summary.json", &summary)?;
    Ok((0, summary))
}

fn cmd_tail_s(a: &TailArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let (x0, v0) = (s0.x()[0], s0.v()[0]);
    let est = estimate_tail_s(&m, x0, v0, a.n_max, a.n, ctx.streams)?;
    out.write("tail_s.csv", &est.to_csv())?;
    let (k, alpha, env) = match contraction(&m, &a.scan) {
        Ok(r) => r,
        Err(Error::Infeasible(msg)) => {
            let summary = json!({ "samples": a.n, "feasible": false, "detail": msg });
            out.json("summary.json", &summary)?;
            return Ok((2, summary));
        }
        Err(e) => return Err(e),
    };
    let reports = tail_s_reports(&est, x0, v0, alpha, &k, &env)?;
    out.write("bounds.csv", &bounds_csv(&reports))?;
    let consistent = reports.iter().all(BoundReport::consistent);
    let summary = json!({
        "samples": a.n,
        "alpha": alpha,
        "j_star": k.j_star,
        "log_j_star": k.j_star.ln(),
        "log_slope_8_15": est.log_slope(8, 15),
        "all_consistent": consistent,
    });
    out.json("summary.json", &summary)?;
    Ok((if consistent { 0 } else { 2 }, summary))
}

fn cmd_hitting_z(a: &HittingZArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let (x0, v0) = (s0.x()[0], s0.v()[0]);
    let z = estimate_hitting_z(&m, x0, v0, a.n, a.jump_cap, ctx.streams)?;
    out.write("hitting_z.csv", &z.to_csv())?;
    let (mean_z, se_z) = z.mean();
    let mut summary = json!({
        "samples": a.n,
        "censored_fraction": z.censored_fraction(),
        "mean_z": mean_z,
        "stderr_z": se_z,
    });
    let (k, alpha, env) = match contraction(&m, &a.scan) {
        Ok(r) => r,
        Err(Error::Infeasible(msg)) => {
            summary["feasible"] = json!(false);
            summary["detail"] = json!(msg);
            out.json("summary.json", &summary)?;
            return Ok((2, summary));
        }
        Err(e) => return Err(e),
    };
    let eta = default_eta(&m, &k, a.eta)?;
    let bound = hitting_moment_bound_1d(x0, v0, eta, alpha, &k, lambda_min(&m)?, &env)?;
    let (mean, se) = exponential_moment(&z, eta);
    let report = BoundReport::new("E[exp(eta Z)]", bound, mean, se, a.n - z.censored())
        .with_censored_fraction(z.censored_fraction());
    out.write("bounds.csv", &bounds_csv(std::slice::from_ref(&report)))?;
    summary["eta"] = json!(eta);
    summary["alpha"] = json!(alpha);
    summary["report"] = json!(report);
    out.json("summary.json", &summary)?;
    Ok((if report.consistent() { 0 } else { 2 }, summary))
}

fn cmd_regen(a: &RegenArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let f = match a.function {
        RegenFunction::Constant => TestFunction::Constant,
        RegenFunction::Exponential => TestFunction::Exponential {
            beta: a.beta,
            gamma: a.gamma,
        },
        RegenFunction::Moment => TestFunction::CoordinateMoment {
            coord: a.coord,
            power: a.power,
        },
    };
    let r = regeneration_ratio(&m, &s0, f, a.excursions, a.jump_cap, ctx.streams)?;
    out.write("excursions.csv", &r.to_csv())?;
    let summary = json!(r);
    out.json("summary.json", &summary)?;
    Ok((0, summary))
}

fn cmd_stationarity(a: &StationarityArgs, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = load_model(&a.model.model)?;
    let s0 = start_state(&m, &a.start)?;
    let mut csv = String::from("function,mean,stderr,consistent\n");
    let mut reports = Vec::new();
    for &f in &a.function {
        let r = stationarity_diagnostic(&m, &s0, f.into(), a.horizon, a.burn_in, ctx.streams)?;
        writeln!(csv, "{},{},{},{}", r.function.name(), r.mean, r.stderr, r.consistent()).unwrap();
        reports.push(r);
    }
    out.write("stationarity.csv", &csv)?;
    let summary = json!({ "reports": reports });
    out.json("summary.json", &summary)?;
    Ok((0, summary))
}

const FIGURE1_PLOT: &str = r#"# Plots the histograms written by `pdmp reproduce-figure1`.
# Usage: python plot_figure1.py [output-directory]
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

TIMES = ["0.5", "5", "10", "17", "30", "40"]

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
fig, axes = plt.subplots(2, 3, figsize=(12, 6), sharex=True)
for ax, t in zip(axes.flat, TIMES):
    with open(out / f"hist_t{t}.csv") as fh:
        rows = list(csv.DictReader(fh))
    left = [float(r["bin_left"]) for r in rows]
    width = [float(r["bin_right"]) - float(r["bin_left"]) for r in rows]
    dens = [float(r["freq"]) / w for r, w in zip(rows, width)]
    ax.bar(left, dens, width=width, align="edge")
    ax.set_title(f"t = {t}")
fig.tight_layout()
fig.savefig(out / "figure1.png", dpi=150)
"#;

fn cmd_figure1(a: &Figure1Args, ctx: &Ctx, out: &mut Output) -> Outcome {
    let m = Model::figure1();
    let s0 = State::scalar(5.0, -1.0)?;
    let spec = histogram_spec(a.bins, &a.range)?;
    let hists = empirical_distributions(&m, &s0, &FIGURE1_TIMES, a.n, spec, 0, ctx.streams)?;
    for (t, h) in FIGURE1_TIMES.iter().zip(&hists) {
        out.write(&format!("hist_t{t}.csv"), &h.to_csv())?;
    }
    let mut pairs: Vec<(usize, usize)> = (0..FIGURE1_TIMES.len() - 1).map(|i| (i, i + 1)).collect();
    pairs.push((0, FIGURE1_TIMES.len() - 1));
    let mut tv_csv = String::from("t1,t2,tv\n");
    let mut tvs = Vec::new();
    for (i, j) in pairs {
        let d = tv_distance(&hists[i], &hists[j])?;
        writeln!(tv_csv, "{},{},{}", FIGURE1_TIMES[i], FIGURE1_TIMES[j], d).unwrap();
        tvs.push(json!({ "t1": FIGURE1_TIMES[i], "t2": FIGURE1_TIMES[j], "tv": d }));
    }
    out.write("tv.csv", &tv_csv)?;
    out.write("plot_figure1.py", FIGURE1_PLOT)?;
    let summary = json!({ "n": a.n, "times": FIGURE1_TIMES, "tv": tvs });
    out.json("summary.json", &summary)?;
    Ok((0, summary))
}
