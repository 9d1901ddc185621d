//! Fast invariant suite: quadrature orthonormality, eigenvalue decay,
//! incremental-vs-direct equivalence, coefficient recursions, the basis
//! schedule and per-update cost.
//!
//! Each property is addressed by a name such as `ortho:sobolev_min`;
//! `run_properties(Some("ortho"))` runs every property whose name contains
//! the filter.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigensystems::{EigenSystem, KernelId};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::projection::{
    dot, schedule_basis_count, sherman_morrison_in_place, theta_column_recursion, theta_row_recursion,
    EstimatorConfig, OnlineProjection, ProjectionState, SymMatrix, DEFAULT_JITTER_TOL,
};
use crate::simulate::{CovariateLaw, ExampleId, NoiseLaw};

/// Signature of a rank-one inverse update, `Φ ← (Φ⁻¹ + ψψᵀ)⁻¹`.
pub type RankOneUpdate = fn(&mut SymMatrix, &[f64], f64, &mut u64) -> Result<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub struct Property {
    pub name: String,
    check: Box<dyn Fn() -> std::result::Result<String, String> + Send + Sync>,
}

impl Property {
    fn new(
        name: impl Into<String>,
        check: impl Fn() -> std::result::Result<String, String> + Send + Sync + 'static,
    ) -> Self {
        Property {
            name: name.into(),
            check: Box::new(check),
        }
    }

    pub fn run(&self) -> PropertyOutcome {
        let (passed, detail) = match (self.check)() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        PropertyOutcome {
            name: self.name.clone(),
            passed,
            detail,
        }
    }
}

/// Systems covered by the orthonormality check.
pub fn catalog() -> Vec<EigenSystem> {
    vec![
        EigenSystem::sobolev_min(),
        EigenSystem::periodic_bernoulli(),
        EigenSystem::new(KernelId::Gaussian { alpha: 1.0, eps: 1.0 }).expect("valid"),
        EigenSystem::gaussian(2.0, 0.5).expect("valid"),
        EigenSystem::tensor(KernelId::SobolevMin, 2).expect("valid"),
        EigenSystem::tensor(KernelId::PeriodicBernoulli, 2).expect("valid"),
    ]
}

/// `max_{i,j ≤ count} |∫ψ_i ψ_j dρ̄ − δ_ij|` by product quadrature on the
/// default rule of the working measure.
pub fn orthonormality_error(sys: &EigenSystem, count: usize) -> Result<f64> {
    let q = sys.measure().default_quadrature();
    let d = sys.dim();
    let nodes = q.len();
    let total = nodes.pow(d as u32);
    let mut gram = vec![0.0; count * count];
    let mut x = vec![0.0; d];
    let mut feats = Vec::with_capacity(count);
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for xk in x.iter_mut() {
            let idx = rem % nodes;
            rem /= nodes;
            *xk = q.nodes[idx];
            w *= q.weights[idx];
        }
        sys.features_into(&x, count, &mut feats)?;
        for i in 0..count {
            let wi = w * feats[i];
            for j in i..count {
                gram[i * count + j] += wi * feats[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..count {
        for j in i..count {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[i * count + j] - target).abs());
        }
    }
    Ok(worst)
}

/// Largest `|Σ_{j ≤ terms} λ_j ψ_j(x)ψ_j(z) − K(x, z)|` over a `side × side`
/// grid on the unit square.
pub fn mercer_max_error(sys: &EigenSystem, terms: usize, side: usize) -> Result<f64> {
    let grid: Vec<f64> = (0..side).map(|i| (i as f64 + 0.5) / side as f64).collect();
    let mut worst: f64 = 0.0;
    for &x in &grid {
        for &z in &grid {
            let approx = sys.mercer_partial_sum(&[x], &[z], terms)?;
            worst = worst.max((approx - sys.kernel_eval(&[x], &[z])?).abs());
        }
    }
    Ok(worst)
}

/// `(exponent, lower, upper)` such that `lower ≤ λ_j j^{exponent} ≤ upper`
/// for every `j`, for the one-dimensional polynomially decaying systems.
pub fn decay_bounds(sys: &EigenSystem) -> Option<(f64, f64, f64)> {
    use std::f64::consts::PI;
    match sys.id() {
        // j/(2j-1) ∈ (1/2, 1]
        KernelId::SobolevMin => Some((2.0, 1.0 / (PI * PI), 4.0 / (PI * PI))),
        // j/⌈j/2⌉ ∈ [1, 2]
        KernelId::PeriodicBernoulli => Some((4.0, 1.0 / (2.0 * PI).powi(4), 1.0 / PI.powi(4))),
        _ => None,
    }
}

/// `(min, max)` of `λ_j j^{exponent}` over `j ≤ count`.
pub fn decay_ratio_range(sys: &EigenSystem, count: usize, exponent: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for j in 1..=count {
        let r = sys.eigenvalue(j)? * (j as f64).powf(exponent);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// Least-squares coefficients over the first `cols` columns, solved from
/// the dense normal equations rebuilt from scratch.
pub fn direct_solution<F: FeatureMap>(features: &F, xs: &[f64], ys: &[f64], cols: usize) -> Result<Vec<f64>> {
    let d = features.input_dim();
    let n = ys.len();
    let psi = DMatrix::from_fn(n, cols, |i, m| features.feature(m, &xs[i * d..(i + 1) * d]));
    let gram = psi.transpose() * &psi;
    let rhs = psi.transpose() * DVector::from_column_slice(ys);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("dense Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// `‖a − b‖_∞ / max(‖b‖_∞, tiny)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let den = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    num / den.max(f64::MIN_POSITIVE)
}

/// Draws an Ex2-style stream: tilted covariates, Ex2 truth, Normal(0, 5)
/// noise.
pub fn ex2_stream(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = CovariateLaw::Tilted.sample_many(&mut rng, n);
    let noise = NoiseLaw::Normal { sd: 5.0 }.sampler().expect("valid law");
    let ys = xs
        .iter()
        .map(|x| ExampleId::Ex2.truth(&[*x]) + noise.draw(&mut rng))
        .collect();
    (xs, ys)
}

/// Ex2 estimator settings.
pub fn ex2_config() -> EstimatorConfig {
    EstimatorConfig::new(1.0, 1, 0.5)
}

/// Streams `(xs, ys)` through a fresh estimator and returns the worst
/// relative deviation from the dense refit over every prefix at which the
/// estimator is initialized.
pub fn streaming_vs_direct<F: FeatureMap + Clone>(
    features: F,
    config: EstimatorConfig,
    xs: &[f64],
    ys: &[f64],
) -> Result<f64> {
    let d = features.input_dim();
    let mut state = OnlineProjection::new(features.clone(), config)?;
    let mut worst: f64 = 0.0;
    for (i, y) in ys.iter().enumerate() {
        state.observe(&xs[i * d..(i + 1) * d], *y)?;
        if state.is_initialized() {
            let n = i + 1;
            let direct = direct_solution(&features, &xs[..n * d], &ys[..n], state.columns())?;
            worst = worst.max(relative_error(state.theta(), &direct));
        }
    }
    Ok(worst)
}

/// Fixed-basis streaming least squares driven by an arbitrary rank-one
/// update; compares against the dense refit after every observation.
pub fn incremental_vs_direct_with(update: RankOneUpdate, seed: u64, n: usize, cols: usize) -> Result<f64> {
    let sys = EigenSystem::sobolev_min();
    let (xs, ys) = ex2_stream(seed, n);
    let warm = cols + 3;
    let psi_at = |x: f64| -> Vec<f64> { (0..cols).map(|m| sys.feature(m, &[x])).collect() };

    let gram = DMatrix::from_fn(cols, cols, |i, j| {
        xs[..warm]
            .iter()
            .map(|&x| sys.feature(i, &[x]) * sys.feature(j, &[x]))
            .sum::<f64>()
    });
    let inv = gram
        .cholesky()
        .ok_or_else(|| Error::InitializationFailed("warm-up Gram matrix".into()))?
        .inverse();
    let mut phi = SymMatrix::from_row_major(cols, inv.as_slice())?;
    let mut s: Vec<f64> = (0..cols)
        .map(|m| xs[..warm].iter().zip(&ys).map(|(&x, y)| sys.feature(m, &[x]) * y).sum())
        .collect();
    let mut flops = 0;
    let mut worst: f64 = 0.0;
    for i in warm..n {
        let psi = psi_at(xs[i]);
        update(&mut phi, &psi, DEFAULT_JITTER_TOL, &mut flops)?;
        for (sm, p) in s.iter_mut().zip(&psi) {
            *sm += p * ys[i];
        }
        let theta = phi.mul_vec(&s);
        let direct = direct_solution(&sys, &xs[..=i], &ys[..=i], cols)?;
        worst = worst.max(relative_error(&theta, &direct));
    }
    Ok(worst)
}

/// Worst disagreement between the row recursion and `Φ s` over a stream,
/// taken at steps where no column was added.
pub fn row_recursion_gap(seed: u64, n: usize) -> Result<f64> {
    let (xs, ys) = ex2_stream(seed, n);
    let mut state = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config())?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let before = state.is_initialized().then(|| (state.theta().to_vec(), state.columns()));
        let report = state.observe(&[xs[i]], ys[i])?;
        if let Some((theta, cols)) = before {
            if report.columns_added == 0 && state.columns() == cols {
                let psi: Vec<f64> = (0..cols).map(|m| state.features().feature(m, &[xs[i]])).collect();
                let residual = ys[i] - dot(&psi, &theta);
                let rec = theta_row_recursion(&theta, state.phi(), &psi, residual);
                worst = worst.max(relative_error(&rec, state.theta()));
            }
        }
    }
    Ok(worst)
}

/// Worst disagreement between the column recursion and a block basis
/// addition over `events` randomized states.
pub fn column_recursion_gap(seed: u64, events: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for e in 0..events {
        let n = rng.random_range(60..300);
        let (xs, ys) = ex2_stream(seed.wrapping_mul(1000).wrapping_add(e as u64), n);
        // a huge schedule constant keeps the basis at N0 unless grown by hand
        let config = EstimatorConfig::new(1.0, 1, 1e12).with_initial_basis(rng.random_range(1..4));
        let mut state = ProjectionState::new(EigenSystem::sobolev_min(), config)?;
        for i in 0..n {
            state.observe(&[xs[i]], ys[i])?;
        }
        for _ in 0..rng.random_range(0..5) {
            state.add_basis()?;
        }
        let m = state.columns();
        let v: Vec<f64> = xs.iter().map(|&x| state.features().feature(m, &[x])).collect();
        let rec = theta_column_recursion(state.theta(), state.phi(), state.design(), state.history_y(), &v);
        state.add_basis()?;
        worst = worst.max(relative_error(&rec, state.theta()));
    }
    Ok(worst)
}

/// Largest `|N(n) − (n/c)^{1/3}|` for `α = 1, d = 1` over `n ≤ limit`.
pub fn schedule_gap(limit: u64, c: f64) -> f64 {
    (1..=limit)
        .map(|n| (schedule_basis_count(n, 1.0, 1, c, 1) as f64 - (n as f64 / c).cbrt()).abs())
        .fold(0.0, f64::max)
}

/// Flops spent by one non-adding update divided by `N²`, for each `N`.
pub fn flops_per_update_ratios(sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for &size in sizes {
        let n = 4 * size + 20;
        let (xs, ys) = ex2_stream(size as u64, n + 1);
        let config = EstimatorConfig::new(1.0, 1, 1e12);
        let mut state = ProjectionState::new(EigenSystem::sobolev_min(), config)?;
        for i in 0..n {
            state.observe(&[xs[i]], ys[i])?;
        }
        while state.columns() < size {
            state.add_basis()?;
        }
        let before = state.flops();
        state.observe(&[xs[n]], ys[n])?;
        out.push((size, (state.flops() - before) as f64 / (size * size) as f64));
    }
    Ok(out)
}

fn check(ok: bool, detail: String) -> std::result::Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn flatten(r: Result<std::result::Result<String, String>>) -> std::result::Result<String, String> {
    r.unwrap_or_else(|e| Err(format!("error: {e}")))
}

/// The full suite, in execution order.
pub fn properties() -> Vec<Property> {
    let mut props = Vec::new();
    for sys in catalog() {
        let name = format!("ortho:{}", sys.id());
        props.push(Property::new(name, move || {
            flatten(orthonormality_error(&sys, 20).map(|e| check(e <= 1e-6, format!("max |G - I| = {e:.3e}"))))
        }));
    }
    for sys in [EigenSystem::sobolev_min(), EigenSystem::periodic_bernoulli()] {
        let name = format!("decay:{}", sys.id());
        props.push(Property::new(name, move || {
            let (exponent, lo, hi) = decay_bounds(&sys).expect("catalog system");
            flatten(decay_ratio_range(&sys, 200, exponent).map(|(a, b)| {
                check(
                    a >= lo * (1.0 - 1e-12) && b <= hi * (1.0 + 1e-12),
                    format!("lambda_j j^{exponent} in [{a:.4e}, {b:.4e}] within [{lo:.4e}, {hi:.4e}]"),
                )
            }))
        }));
    }
    props.push(Property::new("oracle:rank_one", || {
        flatten(
            incremental_vs_direct_with(sherman_morrison_in_place, 11, 300, 8)
                .map(|e| check(e <= 1e-8, format!("max relative error {e:.3e}"))),
        )
    }));
    props.push(Property::new("oracle:streaming", || {
        let (xs, ys) = ex2_stream(12, 300);
        flatten(
            streaming_vs_direct(EigenSystem::sobolev_min(), ex2_config(), &xs, &ys)
                .map(|e| check(e <= 1e-8, format!("max relative error {e:.3e}"))),
        )
    }));
    props.push(Property::new("recursion:row", || {
        flatten(row_recursion_gap(13, 500).map(|e| check(e <= 1e-9, format!("max relative gap {e:.3e}"))))
    }));
    props.push(Property::new("recursion:column", || {
        flatten(column_recursion_gap(14, 50).map(|e| check(e <= 1e-8, format!("max relative gap {e:.3e}"))))
    }));
    props.push(Property::new("schedule", || {
        let gap = schedule_gap(100_000, 0.5);
        check(gap <= 1.0, format!("max |N - (n/c)^(1/3)| = {gap:.4}"))
    }));
    props.push(Property::new("flops:per_update", || {
        let sizes = [4, 8, 16, 32, 64];
        flatten(flops_per_update_ratios(&sizes).map(|r| {
            let ok = r.iter().all(|(_, q)| (0.5..=8.0).contains(q));
            let shown: Vec<String> = r.iter().map(|(n, q)| format!("N={n}: {q:.2}")).collect();
            check(ok, shown.join(", "))
        }))
    }));
    props
}

/// Runs every property whose name contains `filter` (all when `None`).
pub fn run_properties(filter: Option<&str>) -> Vec<PropertyOutcome> {
    properties()
        .into_iter()
        .filter(|p| filter.is_none_or(|f| p.name.contains(f)))
        .map(|p| p.run())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_by_substring() {
        let names: Vec<String> = properties()
            .into_iter()
            .filter(|p| p.name.contains("ortho"))
            .map(|p| p.name)
            .collect();
        assert_eq!(names.len(), catalog().len());
        assert!(names.iter().all(|n| n.starts_with("ortho:")));
    }

    #[test]
    fn relative_error_scale() {
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(relative_error(&[1.0, 3.0], &[1.0, 2.0]), 0.5);
    }
}
