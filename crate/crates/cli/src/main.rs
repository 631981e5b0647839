//! `spdc-qkd`: key-rate analysis of entanglement sources from the command line.
//!
//! Exit codes: 0 success, 1 failed consistency check, 2 input error,
//! 3 numerical non-convergence (the report is still written, flagged).

// `!(x > 0.0)` is the NaN-rejecting form of the range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod grid;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use spdc_qkd::bases::{optimal_bases, verify_bases, waveplate_angles, Ordering};
use spdc_qkd::metrics::{QkdMetrics, TSIRELSON};
use spdc_qkd::optimize::{critical_gain, optimize_gain, qd_key_line, qd_threshold, NoiseModel, R_KEY_MAX};
use spdc_qkd::spdc::{model_curve, model_curve_for_state, write_model_csv, ModelPoint, SourceParams};
use spdc_qkd::state::{bell_state, werner_mix, BellState, DensityMatrix};
use spdc_qkd::table::{bundled_table1, check_table1, parse_table1};
use spdc_qkd::tomography::{
    coincidence_rate_from_counts, mle_reconstruct, monte_carlo_uncertainty, simulate_counts, synthesize_frequencies,
    MleOptions, TomographyDataset,
};
use spdc_qkd::Error;

use grid::GridSpec;
use report::{recommend_bases, AnalysisReport, DatasetIdentity, MleSettings, Provenance, ReconstructionSummary};

#[derive(Parser)]
#[command(
    name = "spdc-qkd",
    version,
    about = "Secure-key-rate analysis of photonic entanglement sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a state from a tomography dataset and report its key rate.
    Reconstruct(ReconstructArgs),
    /// Key-rate model of a multi-pair source over a gain grid (CSV).
    Model(ModelArgs),
    /// Optimal and critical gain for given transmittances (JSON).
    Optimize(OptimizeArgs),
    /// Optimal measurement bases and waveplate angles for a state.
    Bases(BasesArgs),
    /// Key rate against coincidence rate for SPDC and deterministic sources (CSV).
    Compare(CompareArgs),
    /// Check a published table of (S, Q, r_DW, r_C, R_key) for consistency.
    Table1Check(TableArgs),
    /// Draw a synthetic tomography dataset from the source model (JSON).
    Synth(SynthArgs),
}

fn transmittance(s: &str) -> Result<f64, String> {
    let eta: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(format!("transmittance must be in (0, 1], got {eta}"))
    }
}

#[derive(Args, Clone, Copy)]
struct EtaArgs {
    /// Symmetric transmittance, used for both arms unless overridden.
    #[arg(long, value_parser = transmittance)]
    eta: Option<f64>,
    #[arg(long, value_parser = transmittance)]
    eta_a: Option<f64>,
    #[arg(long, value_parser = transmittance)]
    eta_b: Option<f64>,
}

impl EtaArgs {
    fn resolve(&self, default: f64) -> (f64, f64) {
        let sym = self.eta.unwrap_or(default);
        (self.eta_a.unwrap_or(sym), self.eta_b.unwrap_or(sym))
    }
}

#[derive(Args)]
struct GridArgs {
    /// Gain grid as start:stop:steps.
    #[arg(long, default_value = "1e-5:0.166839:400")]
    nbar_grid: GridSpec,
    /// Logarithmic spacing.
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct StateArgs {
    /// Single-pair state as JSON `{"re": [[..]], "im": [[..]]}`.
    #[arg(long, conflicts_with = "rho0_s")]
    rho0_file: Option<PathBuf>,
    /// Use the white-noise Φ⁺ state with this CHSH value as the single-pair state.
    #[arg(long)]
    rho0_s: Option<f64>,
}

#[derive(Args)]
struct ReconstructArgs {
    dataset: PathBuf,
    /// Monte-Carlo samples for the uncertainties; 0 skips them.
    #[arg(long, default_value_t = 0)]
    mc: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = MleOptions::default().max_iterations)]
    max_iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    eta: EtaArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    eta: EtaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingArg {
    AliceFirst,
    BobFirst,
    Both,
}

#[derive(Args)]
struct BasesArgs {
    /// State as JSON `{"re": [[..]], "im": [[..]]}`; Φ⁺ if neither this nor a dataset is given.
    #[arg(long, conflicts_with = "dataset")]
    rho_file: Option<PathBuf>,
    /// Reconstruct the state from this tomography dataset first.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    ordering: OrderingArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Transmittance of the SPDC model curve.
    #[arg(long, value_parser = transmittance, default_value_t = 0.16)]
    eta: f64,
    /// CHSH value of the white-noise single-pair state behind the model curve.
    #[arg(long, default_value_t = 2.815)]
    rho0_s: f64,
    #[command(flatten)]
    grid: GridArgs,
    /// Concurrence of the deterministic source.
    #[arg(long, default_value_t = 0.95)]
    concurrence: f64,
    /// Coincidence-rate grid of the deterministic-source lines as start:stop:steps.
    #[arg(long, default_value = "0:0.1:101")]
    rc_grid: GridSpec,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// CSV with header tau_ns,r_c,S,Q,r_dw,R_key; the bundled window-length scan if omitted.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BellArg {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl From<BellArg> for BellState {
    fn from(b: BellArg) -> Self {
        match b {
            BellArg::PhiPlus => BellState::PhiPlus,
            BellArg::PhiMinus => BellState::PhiMinus,
            BellArg::PsiPlus => BellState::PsiPlus,
            BellArg::PsiMinus => BellState::PsiMinus,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "phi-plus")]
    bell: BellArg,
    #[arg(long)]
    nbar: f64,
    #[command(flatten)]
    eta: EtaArgs,
    /// Coincidence window [s].
    #[arg(long, default_value_t = 1e-9)]
    tau: f64,
    /// Acquisition time per setting [s].
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Expected counts, rounded, instead of Poisson draws.
    #[arg(long)]
    expected: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

enum Status {
    Done,
    Incomplete,
}

type Outcome = Result<Status, Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, content).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_dataset(path: &Path) -> Result<(TomographyDataset, Vec<u8>), Failure> {
    let bytes = read(path)?;
    let text =
        String::from_utf8(bytes.clone()).map_err(|e| Failure::Input(format!("{}: not UTF-8: {e}", path.display())))?;
    let ds = TomographyDataset::from_json_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((ds, bytes))
}

fn load_state(path: &Path) -> Result<DensityMatrix, Failure> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn werner_surrogate(s: f64) -> Result<DensityMatrix, Failure> {
    if !(s > 0.0 && s <= TSIRELSON) {
        return Err(Failure::Input(format!("CHSH value must be in (0, 2√2], got {s}")));
    }
    Ok(werner_mix(&bell_state(BellState::PhiPlus), 1.0 - s / TSIRELSON)?)
}

fn reconstruct(args: &ReconstructArgs) -> Outcome {
    let (ds, bytes) = load_dataset(&args.dataset)?;
    let options = MleOptions {
        max_iterations: args.max_iterations,
        ..MleOptions::default()
    };
    let r = mle_reconstruct(&ds.frequencies(), &ds.settings(), &options)?;
    let r_c = coincidence_rate_from_counts(&ds)?;
    let metrics = QkdMetrics::from_state(&r.rho, r_c)?;
    let uncertainty = match args.mc {
        0 => None,
        n => Some(monte_carlo_uncertainty(&ds, n, args.seed)?),
    };
    let complete = r.converged && uncertainty.as_ref().is_none_or(|u| u.non_converged == 0);
    let report = AnalysisReport {
        dataset: DatasetIdentity::new(&args.dataset.display().to_string(), &bytes, &ds),
        reconstruction: ReconstructionSummary::from(&r),
        metrics,
        bases: recommend_bases(&r.rho)?,
        uncertainty,
        complete,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: (args.mc > 0).then_some(args.seed),
            mc_samples: (args.mc > 0).then_some(args.mc),
            mle: MleSettings::from(&options),
        },
    };
    emit(args.out.as_deref(), &report.to_json())?;
    if complete {
        Ok(Status::Done)
    } else {
        eprintln!(
            "warning: reconstruction did not converge within {} iterations",
            options.max_iterations
        );
        Ok(Status::Incomplete)
    }
}

fn model_points(eta_a: f64, eta_b: f64, grid: &[f64], state: &StateArgs) -> Result<Vec<ModelPoint>, Failure> {
    let rho0 = match (&state.rho0_file, state.rho0_s) {
        (Some(p), _) => Some(load_state(p)?),
        (None, Some(s)) => Some(werner_surrogate(s)?),
        (None, None) => None,
    };
    Ok(match rho0 {
        Some(rho0) => model_curve_for_state(&rho0, eta_a, eta_b, grid)?,
        None => model_curve(eta_a, eta_b, grid)?,
    })
}

fn model(args: &ModelArgs) -> Outcome {
    let (eta_a, eta_b) = args.eta.resolve(1.0);
    let grid = args.grid.nbar_grid.points(args.grid.log).map_err(Failure::Input)?;
    let points = model_points(eta_a, eta_b, &grid, &args.state)?;
    let mut buf = Vec::new();
    write_model_csv(&mut buf, &points)?;
    emit(args.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct OptimizeReport {
    eta_a: f64,
    eta_b: f64,
    n_bar_opt: f64,
    r_key_opt: f64,
    n_bar_critical: f64,
}

fn optimize(args: &OptimizeArgs) -> Outcome {
    let (eta_a, eta_b) = args.eta.resolve(1.0);
    let opt = optimize_gain(eta_a, eta_b)?;
    let report = OptimizeReport {
        eta_a,
        eta_b,
        n_bar_opt: opt.n_bar_opt,
        r_key_opt: opt.r_key_opt,
        n_bar_critical: critical_gain(eta_a, eta_b)?,
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(Status::Done)
}

fn bases_table(rho: &DensityMatrix, ordering: Ordering) -> Result<String, Failure> {
    let bs = optimal_bases(rho, ordering)?;
    let (s, q) = verify_bases(rho, &bs);
    let mut t = String::new();
    let label = match ordering {
        Ordering::AliceFirst => "alice-first",
        Ordering::BobFirst => "bob-first",
    };
    writeln!(t, "ordering: {label}").unwrap();
    writeln!(
        t,
        "{:<6}{:>10}{:>10}{:>10}{:>14}{:>14}",
        "basis", "x1", "x2", "x3", "theta_Q[deg]", "theta_H[deg]"
    )
    .unwrap();
    for (name, x) in [
        ("a0", bs.a0),
        ("a1", bs.a1),
        ("a2", bs.a2),
        ("b1", bs.b1),
        ("b2", bs.b2),
    ] {
        let w = waveplate_angles(&x);
        writeln!(
            t,
            "{name:<6}{:>10.6}{:>10.6}{:>10.6}{:>14.4}{:>14.4}",
            x.0[0],
            x.0[1],
            x.0[2],
            w.theta_q.to_degrees(),
            w.theta_h.to_degrees()
        )
        .unwrap();
    }
    // the explicit correlators can undershoot zero by rounding
    writeln!(t, "S = {s:.6}, Q = {:.6}", q.max(0.0)).unwrap();
    Ok(t)
}

fn bases(args: &BasesArgs) -> Outcome {
    let mut status = Status::Done;
    let rho = match (&args.rho_file, &args.dataset) {
        (Some(p), _) => load_state(p)?,
        (None, Some(p)) => {
            let (ds, _) = load_dataset(p)?;
            let r = mle_reconstruct(&ds.frequencies(), &ds.settings(), &MleOptions::default())?;
            if !r.converged {
                status = Status::Incomplete;
            }
            r.rho
        }
        (None, None) => bell_state(BellState::PhiPlus),
    };
    let orderings: &[Ordering] = match args.ordering {
        OrderingArg::AliceFirst => &[Ordering::AliceFirst],
        OrderingArg::BobFirst => &[Ordering::BobFirst],
        OrderingArg::Both => &[Ordering::AliceFirst, Ordering::BobFirst],
    };
    let tables: Vec<String> = orderings
        .iter()
        .map(|&o| bases_table(&rho, o))
        .collect::<Result<_, _>>()?;
    emit(args.out.as_deref(), &tables.join("\n"))?;
    Ok(status)
}

#[derive(Serialize)]
struct CompareRow {
    series: String,
    r_c: f64,
    #[serde(rename = "R_key")]
    r_key: f64,
}

fn compare(args: &CompareArgs) -> Outcome {
    let grid = args.grid.nbar_grid.points(args.grid.log).map_err(Failure::Input)?;
    let rc_grid = args.rc_grid.points(false).map_err(Failure::Input)?;
    let mut rows = Vec::new();
    let mut push = |series: &str, r_c: f64, r_key: f64| {
        rows.push(CompareRow {
            series: series.to_owned(),
            r_c,
            r_key,
        })
    };

    let rho0 = werner_surrogate(args.rho0_s)?;
    let model_name = format!("spdc_model_eta_{}", args.eta);
    for p in model_curve_for_state(&rho0, args.eta, args.eta, &grid)? {
        push(&model_name, p.r_c, p.r_key);
    }
    for p in model_curve(1.0, 1.0, &grid)? {
        push("spdc_ideal", p.r_c, p.r_key);
    }
    let opt = optimize_gain(1.0, 1.0)?;
    let at_opt = spdc_qkd::spdc::coincidence_rate_exact(&SourceParams::new(opt.n_bar_opt, 1.0, 1.0)?);
    push("spdc_bound", at_opt, opt.r_key_opt);
    for row in bundled_table1() {
        push("table1", row.r_c.value, row.r_key.value);
    }
    for (r_c, r_key) in qd_key_line(1.0, &rc_grid)? {
        push("qd_ideal", r_c, r_key);
    }
    for model in [NoiseModel::Dephasing, NoiseModel::White] {
        let t = qd_threshold(args.concurrence, model)?;
        let name = format!("qd_{model}_c{}", args.concurrence);
        for (r_c, r_key) in qd_key_line(t.r_dw, &rc_grid)? {
            push(&name, r_c, r_key);
        }
        push(&format!("threshold_{model}"), t.r_c_threshold, R_KEY_MAX);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Failure::Input(e.to_string()))?;
    }
    let buf = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    emit(args.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    Ok(Status::Done)
}

fn table1_check(args: &TableArgs) -> Outcome {
    let rows = match &args.table {
        Some(p) => parse_table1(read(p)?.as_slice()).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => bundled_table1(),
    };
    let checks = check_table1(&rows)?;
    let mut out = String::new();
    writeln!(
        out,
        "{:>8}  {:>22}  {:>30}  result",
        "tau[ns]", "r_DW calc/printed±tol", "R_key calc/printed±tol"
    )
    .unwrap();
    for c in &checks {
        writeln!(
            out,
            "{:>8}  {:>6.4}/{:.2}±{:<8.3}  {:>10.4e}/{:.2e}±{:<8.1e}  {}",
            c.tau_ns,
            c.r_dw,
            c.r_dw_printed,
            c.r_dw_tolerance,
            c.r_key,
            c.r_key_printed,
            c.r_key_tolerance,
            if c.pass { "ok" } else { "MISMATCH" }
        )
        .unwrap();
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    writeln!(out, "{}/{} rows consistent", checks.len() - failed, checks.len()).unwrap();
    print!("{out}");
    if failed == 0 {
        Ok(Status::Done)
    } else {
        Err(Failure::Check(format!("{failed} rows inconsistent")))
    }
}

fn synth(args: &SynthArgs) -> Outcome {
    let (eta_a, eta_b) = args.eta.resolve(1.0);
    let params = SourceParams::new(args.nbar, eta_a, eta_b)?;
    let rho = bell_state(args.bell.into());
    let ds = if args.expected {
        let n_win = args.duration / args.tau;
        let settings = spdc_qkd::tomography::TomographySettings::standard();
        let counts = synthesize_frequencies(&rho, &params, &settings).map(|c| (n_win * c).round() as u64);
        TomographyDataset::new(counts, args.tau, args.duration)?
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
        simulate_counts(&rho, &params, args.tau, args.duration, &mut rng)?
    };
    let mut s = ds.to_json_string();
    s.push('\n');
    emit(args.out.as_deref(), &s)?;
    Ok(Status::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Reconstruct(a) => reconstruct(a),
        Command::Model(a) => model(a),
        Command::Optimize(a) => optimize(a),
        Command::Bases(a) => bases(a),
        Command::Compare(a) => compare(a),
        Command::Table1Check(a) => table1_check(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Incomplete) => ExitCode::from(3),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
