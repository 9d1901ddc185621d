use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::laws::{CovariateLaw, NoiseLaw};
use super::truth::ExampleId;
use crate::additive::AdditiveFeatures;
use crate::baselines::{krr_fit, Kernel, RidgeRule, SgdModel};
use crate::eigensystems::{EigenSystem, KernelId};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::projection::{EstimatorConfig, OnlineProjection};

pub const CSV_HEADER: [&str; 6] = ["estimator", "rep", "n", "N", "sq_l2_error", "cum_cpu_ns"];
pub const DEFAULT_MC_POINTS: usize = 1000;
pub const DEFAULT_PER_DECADE: usize = 12;
pub const THREADS_ENV: &str = "STREAMKERN_THREADS";

const STREAM_COVARIATES: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_EVAL: u64 = 2;
const STREAMS_PER_REP: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Projection,
    Sgd,
    Krr,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Projection => "projection",
            EstimatorKind::Sgd => "sgd",
            EstimatorKind::Krr => "krr",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" => Ok(EstimatorKind::Projection),
            "sgd" => Ok(EstimatorKind::Sgd),
            "krr" => Ok(EstimatorKind::Krr),
            _ => Err(Error::Config(format!("unknown estimator `{s}`"))),
        }
    }
}

/// Full description of one simulation study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub example: ExampleId,
    /// Kernel of the (per-coordinate, when `additive`) hypothesis space.
    pub kernel: KernelId,
    /// Fit `Σ_k f_k(x^{(k)})` with one copy of `kernel` per coordinate.
    pub additive: bool,
    pub covariate: CovariateLaw,
    pub noise: NoiseLaw,
    pub alpha: f64,
    pub schedule_constant: f64,
    pub initial_basis: usize,
    pub clamp: f64,
    pub n_grid: Vec<usize>,
    pub repetitions: usize,
    pub mc_points: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub krr_ridge: RidgeRule,
    pub krr_max_n: usize,
    pub sgd_gamma0: f64,
    pub sgd_max_n: usize,
    /// Record per-thread CPU time. Off by default so output is reproducible
    /// byte for byte.
    pub timing: bool,
}

/// Log-spaced checkpoints `lo·10^{k/per_decade}` up to `hi`, rounded and
/// deduplicated; `hi` is always included.
pub fn log_grid(lo: usize, hi: usize, per_decade: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    if lo == 0 || hi < lo || per_decade == 0 {
        return grid;
    }
    let mut k = 0;
    loop {
        let v = (lo as f64 * 10f64.powf(k as f64 / per_decade as f64)).round() as usize;
        if v > hi {
            break;
        }
        if grid.last() != Some(&v) {
            grid.push(v);
        }
        k += 1;
    }
    if grid.last() != Some(&hi) {
        grid.push(hi);
    }
    grid
}

impl ExperimentSpec {
    pub const PRESETS: [&'static str; 5] = ["ex1", "ex2", "exA1", "exA2", "additive10"];

    pub fn preset(name: &str) -> Result<Self> {
        let example: ExampleId = name.parse()?;
        let sobolev = KernelId::SobolevMin;
        let periodic = KernelId::PeriodicBernoulli;
        let all = vec![EstimatorKind::Projection, EstimatorKind::Sgd, EstimatorKind::Krr];
        let base = ExperimentSpec {
            example,
            kernel: sobolev.clone(),
            additive: false,
            covariate: CovariateLaw::Tilted,
            noise: NoiseLaw::Normal { sd: 5.0 },
            alpha: 1.0,
            schedule_constant: 0.5,
            initial_basis: 2,
            clamp: f64::INFINITY,
            n_grid: log_grid(100, 100_000, DEFAULT_PER_DECADE),
            repetitions: 15,
            mc_points: DEFAULT_MC_POINTS,
            seed: 1,
            estimators: vec![EstimatorKind::Projection],
            krr_ridge: RidgeRule {
                scale: 0.1,
                exponent: -2.0 / 3.0,
            },
            krr_max_n: 2000,
            sgd_gamma0: 5.0,
            sgd_max_n: 10_000,
            timing: false,
        };
        Ok(match example {
            ExampleId::Ex1 => ExperimentSpec {
                kernel: periodic,
                covariate: CovariateLaw::Uniform { dim: 1 },
                noise: NoiseLaw::Uniform { half_width: 0.02 },
                alpha: 2.0,
                schedule_constant: 0.2,
                estimators: all,
                krr_ridge: RidgeRule {
                    scale: 1e-3,
                    exponent: -0.8,
                },
                sgd_gamma0: 128.0,
                ..base
            },
            ExampleId::Ex2 => ExperimentSpec {
                estimators: all,
                ..base
            },
            ExampleId::ExA1 => ExperimentSpec {
                kernel: KernelId::poly(sobolev, 0),
                noise: NoiseLaw::Normal { sd: 1.0 },
                ..base
            },
            ExampleId::ExA2 => ExperimentSpec {
                kernel: KernelId::poly(periodic, 2),
                covariate: CovariateLaw::Uniform { dim: 1 },
                noise: NoiseLaw::Uniform { half_width: 5.0 },
                alpha: 2.0,
                schedule_constant: 1.0 / 30.0,
                ..base
            },
            ExampleId::Additive10 => ExperimentSpec {
                kernel: KernelId::poly(periodic, 2),
                additive: true,
                covariate: CovariateLaw::Uniform { dim: 10 },
                alpha: 2.0,
                schedule_constant: 0.2,
                n_grid: log_grid(100, 30_000, DEFAULT_PER_DECADE),
                ..base
            },
        })
    }

    pub fn input_dim(&self) -> usize {
        self.covariate.dim()
    }

    pub fn max_n(&self) -> usize {
        self.n_grid.last().copied().unwrap_or(0)
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let d = if self.additive { 1 } else { self.input_dim() };
        EstimatorConfig::new(self.alpha, d, self.schedule_constant)
            .with_initial_basis(self.initial_basis)
            .with_clamp(self.clamp)
    }

    pub fn system(&self) -> Result<EigenSystem> {
        EigenSystem::new(self.kernel.clone())
    }

    pub fn baseline_kernel(&self) -> Result<Kernel> {
        let sys = self.system()?;
        Ok(if self.additive {
            Kernel::AdditiveSum(sys, self.input_dim())
        } else {
            Kernel::Single(sys)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.mc_points == 0 {
            return Err(Error::Config("mc_points must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid must be non-empty and positive".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return Err(Error::Config("estimator listed twice".into()));
        }
        self.covariate.validate()?;
        self.noise.validate()?;
        if self.input_dim() != self.example.input_dim() {
            return Err(Error::Config(format!(
                "example {} takes {}-dimensional covariates, law gives {}",
                self.example,
                self.example.input_dim(),
                self.input_dim()
            )));
        }
        let sys = self.system()?;
        if self.additive {
            AdditiveFeatures::new(sys, self.input_dim())?;
        } else if sys.dim() != self.input_dim() {
            return Err(Error::Config(format!(
                "kernel `{}` is {}-dimensional but covariates are {}-dimensional",
                self.kernel,
                sys.dim(),
                self.input_dim()
            )));
        }
        self.estimator_config().validate()?;
        if self.estimators.contains(&EstimatorKind::Sgd) && !(self.sgd_gamma0 > 0.0) {
            return Err(Error::Config("sgd_gamma0 must be positive".into()));
        }
        if self.estimators.contains(&EstimatorKind::Krr) && !(self.krr_ridge.scale > 0.0) {
            return Err(Error::Config("krr ridge scale must be positive".into()));
        }
        Ok(())
    }
}

/// One CSV cell group: estimator state at a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub estimator: String,
    pub rep: usize,
    pub n: usize,
    /// Basis count for the projection estimator; number of kernel sections
    /// for the baselines.
    pub basis: usize,
    /// `None` when the estimator failed at or before this checkpoint.
    pub sq_l2_error: Option<f64>,
    pub cum_cpu_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorCurve {
    pub rows: Vec<ErrorRow>,
    /// One message per failed (estimator, repetition).
    pub failures: Vec<String>,
}

impl ErrorCurve {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn rows_for<'a>(&'a self, estimator: &'a str) -> impl Iterator<Item = &'a ErrorRow> + 'a {
        self.rows.iter().filter(move |r| r.estimator == estimator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker cap; `None` reads `STREAMKERN_THREADS`, then rayon's default.
    pub threads: Option<usize>,
    /// Run repetitions one after another on a single worker.
    pub serial: bool,
}

impl RunOptions {
    pub fn serial() -> Self {
        RunOptions {
            threads: Some(1),
            serial: true,
        }
    }

    fn worker_count(&self) -> Result<usize> {
        if self.serial {
            return Ok(1);
        }
        if let Some(t) = self.threads {
            return Ok(t.max(1));
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|t| *t > 0)
                .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
            Err(_) => Ok(rayon::current_num_threads()),
        }
    }
}

/// Mean squared difference over a fixed set of evaluation points.
pub fn l2_error_on(points: &[f64], dim: usize, truth: &[f64], mut predict: impl FnMut(&[f64]) -> f64) -> f64 {
    let m = truth.len();
    let total: f64 = points
        .chunks_exact(dim)
        .zip(truth)
        .map(|(z, t)| (predict(z) - t).powi(2))
        .sum();
    total / m as f64
}

/// `(1/m) Σ (predict(Zᵢ) − truth(Zᵢ))²` over `mc_points` draws from `law`.
pub fn l2_error(
    predict: impl FnMut(&[f64]) -> f64,
    truth: impl Fn(&[f64]) -> f64,
    law: &CovariateLaw,
    mc_points: usize,
    seed: u64,
) -> Result<f64> {
    if mc_points == 0 {
        return Err(Error::Config("mc_points must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = law.sample_many(&mut rng, mc_points);
    let d = law.dim();
    let truth_vals: Vec<f64> = pts.chunks_exact(d).map(truth).collect();
    Ok(l2_error_on(&pts, d, &truth_vals, predict))
}

/// Generator for sub-stream `k` of repetition `rep`.
pub fn rep_stream(seed: u64, rep: usize, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 * STREAMS_PER_REP + k);
    rng
}

/// Sample stream of one repetition.
#[derive(Debug, Clone)]
pub struct RepData {
    pub dim: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub eval_points: Vec<f64>,
    pub eval_truth: Vec<f64>,
}

impl RepData {
    pub fn generate(spec: &ExperimentSpec, rep: usize) -> Result<Self> {
        let n = spec.max_n();
        let d = spec.input_dim();
        let mut rx = rep_stream(spec.seed, rep, STREAM_COVARIATES);
        let mut re = rep_stream(spec.seed, rep, STREAM_NOISE);
        let mut rz = rep_stream(spec.seed, rep, STREAM_EVAL);
        let xs = spec.covariate.sample_many(&mut rx, n);
        let noise = spec.noise.sampler()?;
        let ys = xs
            .chunks_exact(d)
            .map(|x| spec.example.truth(x) + noise.draw(&mut re))
            .collect();
        let eval_points = spec.covariate.sample_many(&mut rz, spec.mc_points);
        let eval_truth = eval_points
            .chunks_exact(d)
            .map(|z| spec.example.truth(z))
            .collect();
        Ok(RepData {
            dim: d,
            xs,
            ys,
            eval_points,
            eval_truth,
        })
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn error_of(&self, predict: impl FnMut(&[f64]) -> f64) -> f64 {
        l2_error_on(&self.eval_points, self.dim, &self.eval_truth, predict)
    }
}

/// Accumulates thread CPU time over measured sections.
#[derive(Debug, Clone, Copy)]
pub struct CpuClock {
    enabled: bool,
    total_ns: u64,
}

impl CpuClock {
    pub fn new(enabled: bool) -> Self {
        CpuClock {
            enabled,
            total_ns: 0,
        }
    }

    pub fn measure<T>(&mut self, f: impl FnOnce() -> T) -> T {
        if !self.enabled {
            return f();
        }
        let start = cpu_time::ThreadTime::now();
        let out = f();
        self.total_ns += start.elapsed().as_nanos() as u64;
        out
    }

    pub fn total_ns(&self) -> u64 {
        self.total_ns
    }
}

struct RepOutput {
    rows: Vec<ErrorRow>,
    failures: Vec<String>,
}

fn row(kind: EstimatorKind, rep: usize, n: usize, basis: usize, err: Option<f64>, ns: u64) -> ErrorRow {
    ErrorRow {
        estimator: kind.name().to_string(),
        rep,
        n,
        basis,
        sq_l2_error: err,
        cum_cpu_ns: ns,
    }
}

fn run_projection<F: FeatureMap>(
    mut state: OnlineProjection<F>,
    spec: &ExperimentSpec,
    data: &RepData,
    rep: usize,
    out: &mut RepOutput,
) {
    let kind = EstimatorKind::Projection;
    let mut clock = CpuClock::new(spec.timing);
    let mut failed: Option<String> = None;
    let mut next = 0;
    for &n in &spec.n_grid {
        if failed.is_none() {
            let res = clock.measure(|| {
                for i in next..n {
                    state.observe(data.x(i), data.ys[i])?;
                }
                Ok::<(), Error>(())
            });
            next = n;
            if let Err(e) = res {
                failed = Some(format!("{kind} rep {rep}: {e}"));
            }
        }
        let err = match (&failed, state.is_initialized()) {
            (None, true) => Some(data.error_of(|z| state.predict(z).unwrap_or(f64::NAN))),
            (None, false) => {
                failed = Some(format!(
                    "{kind} rep {rep}: not initialized after {n} samples (needs {})",
                    state.warmup_len()
                ));
                None
            }
            _ => None,
        };
        out.rows.push(row(kind, rep, n, state.basis_count(), err, clock.total_ns()));
    }
    out.failures.extend(failed);
}

fn run_sgd(kernel: &Kernel, spec: &ExperimentSpec, data: &RepData, rep: usize, out: &mut RepOutput) {
    let kind = EstimatorKind::Sgd;
    let mut model = match SgdModel::new(kernel.clone(), spec.sgd_gamma0) {
        Ok(m) => m,
        Err(e) => {
            out.failures.push(format!("{kind} rep {rep}: {e}"));
            return;
        }
    };
    let mut clock = CpuClock::new(spec.timing);
    let mut failed: Option<String> = None;
    let mut next = 0;
    for &n in spec.n_grid.iter().filter(|&&n| n <= spec.sgd_max_n) {
        if failed.is_none() {
            let res = clock.measure(|| {
                for i in next..n {
                    model.step(data.x(i), data.ys[i])?;
                }
                Ok::<(), Error>(())
            });
            next = n;
            if let Err(e) = res {
                failed = Some(format!("{kind} rep {rep}: {e}"));
            }
        }
        let err = failed.is_none().then(|| data.error_of(|z| model.predict(z)));
        out.rows.push(row(kind, rep, n, model.n(), err, clock.total_ns()));
    }
    out.failures.extend(failed);
}

fn run_krr(kernel: &Kernel, spec: &ExperimentSpec, data: &RepData, rep: usize, out: &mut RepOutput) {
    let kind = EstimatorKind::Krr;
    let mut clock = CpuClock::new(spec.timing);
    let d = data.dim;
    for &n in spec.n_grid.iter().filter(|&&n| n <= spec.krr_max_n) {
        let fit = clock.measure(|| krr_fit(kernel, &data.xs[..n * d], &data.ys[..n], spec.krr_ridge.at(n)));
        let err = match fit {
            Ok(model) => Some(data.error_of(|z| model.predict(z))),
            Err(e) => {
                out.failures.push(format!("{kind} rep {rep} n {n}: {e}"));
                None
            }
        };
        out.rows.push(row(kind, rep, n, n, err, clock.total_ns()));
    }
}

fn run_rep(spec: &ExperimentSpec, rep: usize) -> Result<RepOutput> {
    let data = RepData::generate(spec, rep)?;
    let mut out = RepOutput {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    let config = spec.estimator_config();
    for kind in &spec.estimators {
        match kind {
            EstimatorKind::Projection => {
                let sys = spec.system()?;
                if spec.additive {
                    let features = AdditiveFeatures::new(sys, spec.input_dim())?;
                    run_projection(OnlineProjection::new(features, config.clone())?, spec, &data, rep, &mut out);
                } else {
                    run_projection(OnlineProjection::new(sys, config.clone())?, spec, &data, rep, &mut out);
                }
            }
            EstimatorKind::Sgd => run_sgd(&spec.baseline_kernel()?, spec, &data, rep, &mut out),
            EstimatorKind::Krr => run_krr(&spec.baseline_kernel()?, spec, &data, rep, &mut out),
        }
    }
    Ok(out)
}

/// Runs every repetition (in parallel unless `serial`) and returns rows
/// ordered by estimator roster, repetition, then `n`.
pub fn run_experiment_with(spec: &ExperimentSpec, options: &RunOptions) -> Result<ErrorCurve> {
    spec.validate()?;
    let workers = options.worker_count()?.min(spec.repetitions);
    let outputs: Vec<Result<RepOutput>> = if workers <= 1 {
        (0..spec.repetitions).map(|rep| run_rep(spec, rep)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..spec.repetitions)
                .into_par_iter()
                .map(|rep| run_rep(spec, rep))
                .collect()
        })
    };
    let mut curve = ErrorCurve::default();
    let mut per_rep = Vec::with_capacity(outputs.len());
    for o in outputs {
        per_rep.push(o?);
    }
    for kind in &spec.estimators {
        for o in &per_rep {
            curve
                .rows
                .extend(o.rows.iter().filter(|r| r.estimator == kind.name()).cloned());
        }
    }
    for o in per_rep {
        curve.failures.extend(o.failures);
    }
    Ok(curve)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ErrorCurve> {
    run_experiment_with(spec, &RunOptions::default())
}

pub fn write_csv<W: Write>(rows: &[ErrorRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let err = match r.sq_l2_error {
            Some(v) => format!("{v:?}"),
            None => "NA".to_string(),
        };
        w.write_record([
            r.estimator.clone(),
            r.rep.to_string(),
            r.n.to_string(),
            r.basis.to_string(),
            err,
            r.cum_cpu_ns.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ErrorRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| Error::Config(format!("malformed CSV: {e}")))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected CSV header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let bad = |line: usize, what: &str| Error::Config(format!("malformed CSV at record {line}: {what}"));
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("malformed CSV: {e}")))?;
        let field = |k: usize| rec.get(k).ok_or_else(|| bad(i + 1, "missing field"));
        let int = |k: usize| -> Result<u64> {
            field(k)?
                .parse::<u64>()
                .map_err(|_| bad(i + 1, CSV_HEADER[k]))
        };
        let err = match field(4)? {
            "NA" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad(i + 1, "sq_l2_error"))?),
        };
        rows.push(ErrorRow {
            estimator: field(0)?.to_string(),
            rep: int(1)? as usize,
            n: int(2)? as usize,
            basis: int(3)? as usize,
            sq_l2_error: err,
            cum_cpu_ns: int(5)?,
        });
    }
    Ok(rows)
}
