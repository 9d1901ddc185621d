//! Online projection estimator.
//!
//! The estimator is the least-squares fit of `Y` on the first `N` columns of
//! a feature map, where `N` grows with the sample count `n` according to a
//! [`Schedule`]. It keeps `Φ = (ΨᵀΨ)⁻¹` and `s = ΨᵀY` up to date:
//!
//! * a new observation adds a row to `Ψ`; `Φ` follows by a Sherman–Morrison
//!   rank-one update (`O(N²)`),
//! * a scheduled basis addition appends a column; `Φ` is bordered through the
//!   Schur complement `k = c − bᵀΦb` with `b = Ψᵀv`, `c = vᵀv` (`O(nN)`),
//!
//! and `θ = Φ s` after every step. The first `N₀ + 3` observations are
//! buffered and the initial `Φ` is obtained by inverting their Gram matrix.

mod linalg;
mod recursion;
mod schedule;
pub mod snapshot;

pub use linalg::{
    border_inverse, dot, sherman_morrison_in_place, sherman_morrison_update, SymMatrix,
    DEFAULT_JITTER_TOL,
};
pub use recursion::{theta_column_recursion, theta_row_recursion, theta_sgd_step};
pub use schedule::{schedule_basis_count, Schedule};

use nalgebra::DMatrix;

use crate::eigensystems::EigenSystem;
use crate::error::{Error, Result};
use crate::features::FeatureMap;

/// Observations buffered beyond the initial column count before `Φ` is
/// first formed.
pub const DEFAULT_WARMUP_EXTRA: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Smoothness `α` of the hypothesis space (`λ_j = Θ(j^{-2α/d})`).
    pub alpha: f64,
    /// Dimension `d` entering the schedule exponent `(2α+d)/d`.
    pub dim: usize,
    /// Schedule constant `c`.
    pub schedule_constant: f64,
    /// Initial number of (non-parametric) basis functions `N₀`.
    pub initial_basis: usize,
    /// Predictions are clamped to `[-clamp, clamp]`.
    pub clamp: f64,
    pub jitter_tol: f64,
    pub warmup_extra: usize,
}

impl EstimatorConfig {
    pub fn new(alpha: f64, dim: usize, schedule_constant: f64) -> Self {
        EstimatorConfig {
            alpha,
            dim,
            schedule_constant,
            initial_basis: 2,
            clamp: f64::INFINITY,
            jitter_tol: DEFAULT_JITTER_TOL,
            warmup_extra: DEFAULT_WARMUP_EXTRA,
        }
    }

    pub fn with_initial_basis(mut self, n0: usize) -> Self {
        self.initial_basis = n0;
        self
    }

    pub fn with_clamp(mut self, clamp: f64) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > self.dim as f64 / 2.0) {
            return Err(Error::Config(format!(
                "smoothness alpha={} must exceed d/2={}",
                self.alpha,
                self.dim as f64 / 2.0
            )));
        }
        if !(self.schedule_constant.is_finite() && self.schedule_constant > 0.0) {
            return Err(Error::Config(format!(
                "schedule constant must be positive, got {}",
                self.schedule_constant
            )));
        }
        if self.initial_basis == 0 {
            return Err(Error::Config("initial basis count must be at least 1".into()));
        }
        if !(self.clamp > 0.0) {
            return Err(Error::Config(format!("clamp must be positive, got {}", self.clamp)));
        }
        if !(self.jitter_tol >= 0.0) {
            return Err(Error::Config("jitter tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.alpha, self.dim, self.schedule_constant, self.initial_basis)
    }
}

/// What happened during one [`OnlineProjection::observe`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepReport {
    /// `Φ` was formed for the first time at this step.
    pub initialized: bool,
    /// Columns appended at this step.
    pub columns_added: usize,
    /// A scheduled addition hit a degenerate pivot and was postponed.
    pub deferred: bool,
}

/// Streaming least-squares state over a [`FeatureMap`].
#[derive(Debug, Clone)]
pub struct OnlineProjection<F: FeatureMap> {
    features: F,
    config: EstimatorConfig,
    schedule: Schedule,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Cached design columns `ψ_m(X_1..X_n)`, populated once initialized.
    design: Vec<Vec<f64>>,
    phi: SymMatrix,
    s: Vec<f64>,
    theta: Vec<f64>,
    initialized: bool,
    flops: u64,
    scratch: Vec<f64>,
}

/// The estimator over a single catalog eigensystem.
pub type ProjectionState = OnlineProjection<EigenSystem>;

impl<F: FeatureMap> OnlineProjection<F> {
    pub fn new(features: F, config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let schedule = config.schedule();
        let state = OnlineProjection {
            features,
            config,
            schedule,
            xs: Vec::new(),
            ys: Vec::new(),
            design: Vec::new(),
            phi: SymMatrix::zeros(0),
            s: Vec::new(),
            theta: Vec::new(),
            initialized: false,
            flops: 0,
            scratch: Vec::new(),
        };
        let initial = state.initial_columns();
        if let Some(cap) = state.features.capacity() {
            if initial > cap {
                return Err(Error::Config(format!(
                    "initial basis needs {initial} columns but the feature map has {cap}"
                )));
            }
        }
        Ok(state)
    }

    /// Builds a state from a batch: the first [`Self::warmup_len`] points
    /// initialise `Φ` directly, the rest are streamed through
    /// [`Self::observe`].
    pub fn warm_start(features: F, config: EstimatorConfig, xs: &[f64], ys: &[f64]) -> Result<Self> {
        let mut state = Self::new(features, config)?;
        let d = state.features.input_dim();
        if xs.len() != ys.len() * d {
            return Err(Error::DimensionMismatch {
                expected: ys.len() * d,
                got: xs.len(),
            });
        }
        let need = state.warmup_len();
        if ys.len() < need {
            return Err(Error::Config(format!(
                "warm start needs at least {need} observations, got {}",
                ys.len()
            )));
        }
        for i in 0..need {
            let x = &xs[i * d..(i + 1) * d];
            state.check_point(x)?;
            state.xs.extend_from_slice(x);
            state.ys.push(ys[i]);
        }
        state.initialize()?;
        state.grow_to_schedule()?;
        state.refresh_theta();
        for i in need..ys.len() {
            state.observe(&xs[i * d..(i + 1) * d], ys[i])?;
        }
        Ok(state)
    }

    pub fn features(&self) -> &F {
        &self.features
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Samples seen so far.
    pub fn n(&self) -> usize {
        self.ys.len()
    }

    /// Current number of design columns.
    pub fn columns(&self) -> usize {
        self.theta.len()
    }

    /// Current number of non-parametric basis functions per group.
    pub fn basis_count(&self) -> usize {
        if !self.initialized {
            return self.config.initial_basis;
        }
        (self.columns() - self.features.parametric_count()) / self.features.group_size()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `Φ = (ΨᵀΨ)⁻¹`.
    pub fn phi(&self) -> &SymMatrix {
        &self.phi
    }

    /// `s = ΨᵀY`.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn history_x(&self) -> &[f64] {
        &self.xs
    }

    pub fn history_y(&self) -> &[f64] {
        &self.ys
    }

    /// Cached design columns (empty until initialized).
    pub fn design(&self) -> &[Vec<f64>] {
        &self.design
    }

    /// Arithmetic operations (multiply–add pairs) spent on updates so far.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn initial_columns(&self) -> usize {
        self.features.parametric_count() + self.features.group_size() * self.config.initial_basis
    }

    pub fn warmup_len(&self) -> usize {
        self.initial_columns() + self.config.warmup_extra
    }

    /// Columns the schedule asks for after `n` samples.
    pub fn target_columns(&self, n: usize) -> usize {
        let count = self.schedule.basis_count(n as u64);
        let cols = self.features.parametric_count() + self.features.group_size() * count;
        match self.features.capacity() {
            Some(cap) => cols.min(cap),
            None => cols,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.features.input_dim(),
                got: x.len(),
            });
        }
        if !self.features.accepts(x) {
            return Err(Error::Config(format!("covariate {x:?} outside the supported domain")));
        }
        Ok(())
    }

    /// Absorbs one observation.
    ///
    /// On a degenerate Sherman–Morrison denominator the observation is
    /// rejected and the state is left exactly as before.
    pub fn observe(&mut self, x: &[f64], y: f64) -> Result<StepReport> {
        self.check_point(x)?;
        if !y.is_finite() {
            return Err(Error::Config(format!("response {y} is not finite")));
        }
        let mut report = StepReport::default();

        if !self.initialized {
            self.xs.extend_from_slice(x);
            self.ys.push(y);
            if self.ys.len() >= self.warmup_len() && self.initialize().is_ok() {
                report.initialized = true;
                let (added, deferred) = self.grow_to_schedule()?;
                report.columns_added = added;
                report.deferred = deferred;
                self.refresh_theta();
            }
            return Ok(report);
        }

        let cols = self.columns();
        let mut psi = std::mem::take(&mut self.scratch);
        psi.resize(cols, 0.0);
        self.features.fill(x, &mut psi);
        let outcome =
            sherman_morrison_in_place(&mut self.phi, &psi, self.config.jitter_tol, &mut self.flops);
        if let Err(e) = outcome {
            self.scratch = psi;
            return Err(e);
        }

        self.xs.extend_from_slice(x);
        self.ys.push(y);
        for ((col, s), &p) in self.design.iter_mut().zip(self.s.iter_mut()).zip(&psi) {
            col.push(p);
            *s += p * y;
        }
        self.flops += cols as u64;
        self.scratch = psi;

        let (added, deferred) = self.grow_to_schedule()?;
        report.columns_added = added;
        report.deferred = deferred;
        self.refresh_theta();
        Ok(report)
    }

    /// Appends the next basis column immediately, regardless of the
    /// schedule. Fails without changing the state on a degenerate pivot.
    pub fn add_basis(&mut self) -> Result<()> {
        if !self.initialized {
            return Err(Error::NotReady {
                seen: self.n(),
                needed: self.warmup_len(),
            });
        }
        self.append_column()?;
        self.refresh_theta();
        Ok(())
    }

    /// `Σ_j θ_j ψ_j(x)` clamped to `[-M, M]`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_unclamped(x)?.clamp(-self.config.clamp, self.config.clamp))
    }

    pub fn predict_unclamped(&self, x: &[f64]) -> Result<f64> {
        if !self.initialized {
            return Err(Error::NotReady {
                seen: self.n(),
                needed: self.warmup_len(),
            });
        }
        if x.len() != self.features.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.features.input_dim(),
                got: x.len(),
            });
        }
        let mut psi = vec![0.0; self.columns()];
        self.features.fill(x, &mut psi);
        Ok(dot(&psi, &self.theta))
    }

    fn column_over_history(&self, m: usize) -> Vec<f64> {
        let d = self.features.input_dim();
        self.xs
            .chunks_exact(d)
            .map(|x| self.features.feature(m, x))
            .collect()
    }

    /// Inverts the Gram matrix of the buffered observations over the
    /// initial columns.
    fn initialize(&mut self) -> Result<()> {
        let cols = self.initial_columns();
        let n = self.ys.len();
        let design: Vec<Vec<f64>> = (0..cols).map(|m| self.column_over_history(m)).collect();
        let gram = DMatrix::from_fn(cols, cols, |i, j| dot(&design[i], &design[j]));
        self.flops += (n * cols * cols + cols * cols * cols) as u64;

        let max_diag = (0..cols).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::InitializationFailed("Gram matrix is not positive definite".into()))?;
        let min_pivot = (0..cols).map(|i| chol.l_dirty()[(i, i)].powi(2)).fold(f64::INFINITY, f64::min);
        if !(max_diag > 0.0 && min_pivot > self.config.jitter_tol * max_diag.max(1.0)) {
            return Err(Error::InitializationFailed(format!(
                "Gram matrix is numerically singular (pivot {min_pivot:e})"
            )));
        }
        let inv = chol.inverse();
        let mut upper = Vec::with_capacity(cols * (cols + 1) / 2);
        for i in 0..cols {
            for j in i..cols {
                upper.push(inv[(i, j)]);
            }
        }
        self.phi = SymMatrix::from_upper(cols, &upper)?;
        self.s = design.iter().map(|col| dot(col, &self.ys)).collect();
        self.design = design;
        self.theta = vec![0.0; cols];
        self.initialized = true;
        Ok(())
    }

    /// Appends columns until the schedule target is met. Returns the
    /// number added and whether an addition was postponed.
    fn grow_to_schedule(&mut self) -> Result<(usize, bool)> {
        let target = self.target_columns(self.n());
        let mut added = 0;
        while self.columns() < target {
            match self.append_column() {
                Ok(()) => added += 1,
                Err(Error::DegeneratePivot { .. }) => return Ok((added, true)),
                Err(e) => return Err(e),
            }
        }
        Ok((added, false))
    }

    fn append_column(&mut self) -> Result<()> {
        let m = self.columns();
        if let Some(cap) = self.features.capacity() {
            if m >= cap {
                return Err(Error::CatalogExhausted {
                    index: m + 1,
                    capacity: cap,
                });
            }
        }
        let n = self.n();
        let v = self.column_over_history(m);
        let c = dot(&v, &v);
        let b: Vec<f64> = self.design.iter().map(|col| dot(col, &v)).collect();
        self.flops += (n + n * m) as u64;
        border_inverse(&mut self.phi, &b, c, self.config.jitter_tol, &mut self.flops)?;
        self.s.push(dot(&v, &self.ys));
        self.flops += n as u64;
        self.design.push(v);
        self.theta.push(0.0);
        Ok(())
    }

    fn refresh_theta(&mut self) {
        self.theta = self.phi.mul_vec(&self.s);
        let cols = self.columns() as u64;
        self.flops += cols * cols;
    }
}

impl ProjectionState {
    /// Convenience constructor from a kernel id string.
    pub fn from_kernel(kernel: &str, config: EstimatorConfig) -> Result<Self> {
        let sys = EigenSystem::new(kernel.parse()?)?;
        Self::new(sys, config)
    }
}
