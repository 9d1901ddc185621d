//! `streamkern` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure (estimator failure, failing
//! property), 2 usage or configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::additive::AdditiveFeatures;
use crate::eigensystems::EigenSystem;
use crate::error::Error;
use crate::features::FeatureMap;
use crate::projection::snapshot::{SnapshotFeatures, MAGIC};
use crate::projection::OnlineProjection;
use crate::simulate::{
    curve_slope, mean_curve, read_csv, run_experiment_with, write_csv, ErrorRow, ExperimentSpec,
    RepData, RunOptions,
};
use crate::verify::run_properties;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "streamkern", version, about = "Online kernel projection regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation study and write its error curves as CSV.
    Run(RunArgs),
    /// Run the invariant suite.
    Verify {
        /// Only properties whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Fit log-log slopes to a CSV produced by `run`.
    Slope {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        nmin: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        nmax: f64,
    },
    /// Save, resume or inspect projection-estimator snapshots.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Debug, Args, Clone)]
pub struct SpecArgs {
    /// Built-in experiment: ex1, ex2, exA1, exA2, additive10.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// CSV destination (default `<example>.csv`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One worker, repetitions in sequence.
    #[arg(long)]
    pub serial: bool,
    /// Record per-thread CPU time in `cum_cpu_ns`.
    #[arg(long)]
    pub timing: bool,
    /// Override the number of repetitions.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Slope window for the summary table.
    #[arg(long)]
    pub nmin: Option<f64>,
    #[arg(long)]
    pub nmax: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum SnapshotCommand {
    /// Stream the first repetition of an experiment up to `n` and save the
    /// projection estimator.
    Save {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a snapshot and keep streaming the same repetition up to `n`.
    Resume {
        file: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a snapshot summary.
    Show { file: PathBuf },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Unsupported(_) | Error::Snapshot(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn load_spec(args: &SpecArgs) -> std::result::Result<ExperimentSpec, Failure> {
    let mut spec = match (&args.preset, &args.config) {
        (Some(p), None) => ExperimentSpec::preset(p)?,
        (None, Some(path)) => ExperimentSpec::from_toml_file(path)?,
        (None, None) => return Err(usage("one of --preset or --config is required")),
        (Some(_), Some(_)) => return Err(usage("--preset and --config are mutually exclusive")),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Run(args) => run(args),
        Command::Verify { filter } => verify(filter.as_deref()),
        Command::Slope { csv, nmin, nmax } => slope(&csv, nmin, nmax),
        Command::Snapshot(cmd) => snapshot(cmd),
    }
}

fn run(args: RunArgs) -> std::result::Result<(), Failure> {
    let mut spec = load_spec(&args.spec)?;
    if let Some(r) = args.reps {
        spec.repetitions = r;
    }
    spec.timing |= args.timing;
    spec.validate()?;
    let options = RunOptions {
        threads: None,
        serial: args.serial,
    };
    let curve = run_experiment_with(&spec, &options)?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.example)));
    let file = File::create(&out).map_err(|e| Failure::from(Error::from(e)))?;
    let mut w = BufWriter::new(file);
    write_csv(&curve.rows, &mut w)?;
    w.flush().map_err(|e| Failure::from(Error::from(e)))?;

    let nmin = args.nmin.unwrap_or(0.0);
    let nmax = args.nmax.unwrap_or(f64::INFINITY);
    println!("wrote {} rows to {}", curve.rows.len(), out.display());
    print_summary(&curve.rows, &estimator_names(&curve.rows), nmin, nmax);
    if curve.is_clean() {
        Ok(())
    } else {
        for f in &curve.failures {
            eprintln!("failure: {f}");
        }
        Err(Failure {
            code: EXIT_RUNTIME,
            message: format!("{} estimator failure(s); affected cells are NA", curve.failures.len()),
        })
    }
}

fn estimator_names(rows: &[ErrorRow]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        if !names.contains(&r.estimator) {
            names.push(r.estimator.clone());
        }
    }
    names
}

fn print_summary(rows: &[ErrorRow], names: &[String], nmin: f64, nmax: f64) {
    println!("{:<12} {:>10} {:>14} {:>10} {:>8}", "estimator", "final n", "final error", "slope", "se");
    for name in names {
        let curve = mean_curve(rows, name);
        let (n, err) = curve.last().copied().unwrap_or((f64::NAN, f64::NAN));
        match curve_slope(rows, name, nmin, nmax) {
            Ok(fit) => println!(
                "{name:<12} {n:>10} {err:>14.6e} {:>10.4} {:>8.4}",
                fit.slope, fit.std_err
            ),
            Err(_) => println!("{name:<12} {n:>10} {err:>14.6e} {:>10} {:>8}", "NA", "NA"),
        }
    }
}

fn verify(filter: Option<&str>) -> std::result::Result<(), Failure> {
    let outcomes = run_properties(filter);
    if outcomes.is_empty() {
        return Err(usage(format!("no property matches `{}`", filter.unwrap_or(""))));
    }
    let mut failed = Vec::new();
    for o in &outcomes {
        println!("{} {:<36} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        if !o.passed {
            failed.push(o.name.clone());
        }
    }
    if failed.is_empty() {
        println!("{} properties passed", outcomes.len());
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_RUNTIME,
            message: format!("failing properties: {}", failed.join(", ")),
        })
    }
}

fn slope(path: &Path, nmin: f64, nmax: f64) -> std::result::Result<(), Failure> {
    let file = File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    let rows = read_csv(BufReader::new(file))?;
    let names = estimator_names(&rows);
    if names.is_empty() {
        return Err(usage("CSV holds no rows"));
    }
    println!("{:<12} {:>10} {:>8} {:>7}", "estimator", "slope", "se", "points");
    let mut fitted = 0;
    for name in &names {
        match curve_slope(&rows, name, nmin, nmax) {
            Ok(fit) => {
                fitted += 1;
                println!("{name:<12} {:>10.4} {:>8.4} {:>7}", fit.slope, fit.std_err, fit.points);
            }
            Err(e) => println!("{name:<12} {:>10} {:>8} {:>7}  ({e})", "NA", "NA", 0),
        }
    }
    if fitted == 0 {
        return Err(usage(format!("no estimator has 3 checkpoints in [{nmin}, {nmax}]")));
    }
    Ok(())
}

/// Streams samples `from..to` of the first repetition into `state`.
fn stream_into<F: FeatureMap>(
    state: &mut OnlineProjection<F>,
    data: &RepData,
    to: usize,
) -> std::result::Result<(), Failure> {
    let from = state.n();
    if to < from {
        return Err(usage(format!("snapshot already holds {from} samples, asked for {to}")));
    }
    if to > data.ys.len() {
        return Err(usage(format!("experiment stream has only {} samples", data.ys.len())));
    }
    for i in from..to {
        state.observe(data.x(i), data.ys[i])?;
    }
    Ok(())
}

fn save_state<F: SnapshotFeatures>(state: &OnlineProjection<F>, out: &Path) -> std::result::Result<(), Failure> {
    let file = File::create(out).map_err(|e| Failure::from(Error::from(e)))?;
    let mut w = BufWriter::new(file);
    state.write_snapshot(&mut w)?;
    w.flush().map_err(|e| Failure::from(Error::from(e)))?;
    println!(
        "saved n={} N={} columns={} to {}",
        state.n(),
        state.basis_count(),
        state.columns(),
        out.display()
    );
    Ok(())
}

fn stream_data(spec: &ExperimentSpec, n: usize) -> std::result::Result<RepData, Failure> {
    let spec = ExperimentSpec {
        n_grid: vec![n.max(1)],
        ..spec.clone()
    };
    Ok(RepData::generate(&spec, 0)?)
}

fn snapshot_kind(bytes: &[u8]) -> std::result::Result<u8, Failure> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(usage("not a snapshot file"));
    }
    Ok(bytes[4])
}

fn read_bytes(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn snapshot(cmd: SnapshotCommand) -> std::result::Result<(), Failure> {
    match cmd {
        SnapshotCommand::Save { spec, n, out } => {
            let spec = load_spec(&spec)?;
            spec.validate()?;
            let data = stream_data(&spec, n)?;
            let sys = spec.system()?;
            let config = spec.estimator_config();
            if spec.additive {
                let mut st = OnlineProjection::new(AdditiveFeatures::new(sys, spec.input_dim())?, config)?;
                stream_into(&mut st, &data, n)?;
                save_state(&st, &out)
            } else {
                let mut st = OnlineProjection::new(sys, config)?;
                stream_into(&mut st, &data, n)?;
                save_state(&st, &out)
            }
        }
        SnapshotCommand::Resume { file, spec, n, out } => {
            let spec = load_spec(&spec)?;
            spec.validate()?;
            let data = stream_data(&spec, n)?;
            let bytes = read_bytes(&file)?;
            match snapshot_kind(&bytes)? {
                <EigenSystem as SnapshotFeatures>::KIND => {
                    let mut st = OnlineProjection::<EigenSystem>::from_snapshot_bytes(&bytes)?;
                    stream_into(&mut st, &data, n)?;
                    save_state(&st, &out)
                }
                <AdditiveFeatures as SnapshotFeatures>::KIND => {
                    let mut st = OnlineProjection::<AdditiveFeatures>::from_snapshot_bytes(&bytes)?;
                    stream_into(&mut st, &data, n)?;
                    save_state(&st, &out)
                }
                k => Err(usage(format!("unknown snapshot kind {k}"))),
            }
        }
        SnapshotCommand::Show { file } => {
            let bytes = read_bytes(&file)?;
            match snapshot_kind(&bytes)? {
                <EigenSystem as SnapshotFeatures>::KIND => {
                    show(&OnlineProjection::<EigenSystem>::from_snapshot_bytes(&bytes)?)
                }
                <AdditiveFeatures as SnapshotFeatures>::KIND => {
                    show(&OnlineProjection::<AdditiveFeatures>::from_snapshot_bytes(&bytes)?)
                }
                k => Err(usage(format!("unknown snapshot kind {k}"))),
            }
        }
    }
}

fn show<F: SnapshotFeatures>(st: &OnlineProjection<F>) -> std::result::Result<(), Failure> {
    println!("kernel      {}", st.features().descriptor());
    println!("input dim   {}", st.features().input_dim());
    println!("alpha       {}", st.config().alpha);
    println!("c           {}", st.config().schedule_constant);
    println!("n           {}", st.n());
    println!("initialized {}", st.is_initialized());
    println!("N           {}", st.basis_count());
    println!("columns     {}", st.columns());
    println!("flops       {}", st.flops());
    let head: Vec<String> = st.theta().iter().take(8).map(|t| format!("{t:.6}")).collect();
    println!("theta[..8]  [{}]", head.join(", "));
    Ok(())
}
