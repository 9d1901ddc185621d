use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamkern::eigensystems::EigenSystem;
use streamkern::error::Result;
use streamkern::features::FeatureMap;
use streamkern::projection::{
    border_inverse, sherman_morrison_in_place, sherman_morrison_update, EstimatorConfig,
    ProjectionState, SymMatrix, DEFAULT_JITTER_TOL,
};
use streamkern::verify::{
    direct_solution, ex2_config, ex2_stream, flops_per_update_ratios, incremental_vs_direct_with,
    relative_error, streaming_vs_direct,
};

fn dense(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn streaming_matches_dense_refit_on_ex2_streams() {
    for seed in 0..5 {
        let (xs, ys) = ex2_stream(seed, 500);
        let gap = streaming_vs_direct(EigenSystem::sobolev_min(), ex2_config(), &xs, &ys).unwrap();
        assert!(gap <= 1e-8, "seed {seed}: {gap:e}");
    }
}

#[test]
fn streaming_matches_dense_refit_with_polynomial_columns() {
    let sys = EigenSystem::new("poly2+periodic_bernoulli".parse().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin() + rng.random::<f64>() - 0.5).collect();
    let gap = streaming_vs_direct(sys, EstimatorConfig::new(2.0, 1, 0.2), &xs, &ys).unwrap();
    assert!(gap <= 1e-8, "{gap:e}");
}

#[test]
fn noiseless_single_eigenfunction_is_recovered() {
    let sys = EigenSystem::sobolev_min();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = ProjectionState::new(sys.clone(), ex2_config()).unwrap();
    for _ in 0..2000 {
        let x = rng.random::<f64>();
        state.observe(&[x], sys.eval1(2, x).unwrap()).unwrap();
    }
    for (m, t) in state.theta().iter().enumerate() {
        let target = if m == 1 { 1.0 } else { 0.0 };
        assert!((t - target).abs() < 1e-7, "theta[{m}] = {t}");
    }
    for g in 0..=50 {
        let x = g as f64 / 50.0;
        assert!((state.predict(&[x]).unwrap() - sys.eval1(2, x).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn function_inside_the_initial_span_is_recovered_exactly() {
    let sys = EigenSystem::sobolev_min();
    let f = |x: f64| 0.7 * sys.eval1(1, x).unwrap() - 1.3 * sys.eval1(2, x).unwrap();
    let mut state = ProjectionState::new(sys.clone(), ex2_config()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let x = rng.random::<f64>();
        state.observe(&[x], f(x)).unwrap();
    }
    for g in 0..=20 {
        let x = g as f64 / 20.0;
        assert!((state.predict(&[x]).unwrap() - f(x)).abs() < 1e-7);
    }
}

#[test]
fn warm_start_equals_streaming() {
    let (xs, ys) = ex2_stream(21, 800);
    let warm = ProjectionState::warm_start(EigenSystem::sobolev_min(), ex2_config(), &xs, &ys).unwrap();
    let mut stream = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        stream.observe(&[*x], *y).unwrap();
    }
    assert_eq!(warm.columns(), stream.columns());
    assert!(relative_error(warm.theta(), stream.theta()) <= 1e-9);
}

#[test]
fn warm_start_rejects_short_batches() {
    let (xs, ys) = ex2_stream(1, 3);
    assert!(ProjectionState::warm_start(EigenSystem::sobolev_min(), ex2_config(), &xs, &ys).is_err());
}

#[test]
fn sherman_morrison_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
    let g = &a * a.transpose() + DMatrix::identity(5, 5);
    let psi: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
    let inv = g.clone().try_inverse().unwrap();
    let phi = SymMatrix::from_row_major(5, inv.as_slice()).unwrap();
    let updated = sherman_morrison_update(&phi, &psi, DEFAULT_JITTER_TOL).unwrap();
    let p = DMatrix::from_column_slice(5, 1, &psi);
    let expected = (g + &p * p.transpose()).try_inverse().unwrap();
    assert!(max_abs(&(dense(&updated) - expected)) < 1e-10);
    assert!(updated.is_symmetric());
}

#[test]
fn degenerate_rank_one_update_leaves_state_untouched() {
    let mut phi = SymMatrix::from_row_major(2, &[-1.0, 0.0, 0.0, -1.0]).unwrap();
    let before = phi.clone();
    let mut flops = 0;
    assert!(sherman_morrison_in_place(&mut phi, &[1.0, 0.0], DEFAULT_JITTER_TOL, &mut flops).is_err());
    assert_eq!(phi, before);
}

#[test]
fn bordering_adds_a_column_to_the_inverse_gram() {
    let sys = EigenSystem::sobolev_min();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
    let design = |cols: usize| DMatrix::from_fn(20, cols, |i, m| sys.feature(m, &[xs[i]]));
    let psi2 = design(2);
    let inv2 = (psi2.transpose() * &psi2).try_inverse().unwrap();
    let mut phi = SymMatrix::from_row_major(2, inv2.as_slice()).unwrap();
    let v: Vec<f64> = xs.iter().map(|&x| sys.feature(2, &[x])).collect();
    let b: Vec<f64> = (0..2).map(|m| (0..20).map(|i| psi2[(i, m)] * v[i]).sum()).collect();
    let c: f64 = v.iter().map(|t| t * t).sum();
    let mut flops = 0;
    border_inverse(&mut phi, &b, c, DEFAULT_JITTER_TOL, &mut flops).unwrap();
    let psi3 = design(3);
    let inv3 = (psi3.transpose() * &psi3).try_inverse().unwrap();
    assert_eq!(phi.dim(), 3);
    assert!(max_abs(&(dense(&phi) - inv3)) < 1e-10);
}

#[test]
fn phi_stays_the_inverse_gram_along_a_stream() {
    let (xs, ys) = ex2_stream(17, 1500);
    let mut state = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
        state.observe(&[*x], *y).unwrap();
        if state.is_initialized() && i % 100 == 0 {
            let cols = state.columns();
            let psi = DMatrix::from_fn(i + 1, cols, |r, m| state.design()[m][r]);
            let prod = dense(state.phi()) * (psi.transpose() * psi);
            assert!(max_abs(&(prod - DMatrix::identity(cols, cols))) < 1e-8, "n = {}", i + 1);
        }
    }
}

#[test]
fn theta_matches_dense_solution_after_growth() {
    let (xs, ys) = ex2_stream(8, 3000);
    let mut state = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        state.observe(&[*x], *y).unwrap();
    }
    assert_eq!(state.basis_count(), 18);
    let direct = direct_solution(state.features(), &xs, &ys, state.columns()).unwrap();
    assert!(relative_error(state.theta(), &direct) <= 1e-8);
}

fn faulty_update(phi: &mut SymMatrix, psi: &[f64], _tol: f64, _flops: &mut u64) -> Result<Vec<f64>> {
    // wrong sign on the correction term
    let n = phi.dim();
    let u = phi.mul_vec(psi);
    let denom = 1.0 + psi.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
    let data: Vec<f64> = (0..n * n)
        .map(|k| phi.as_slice()[k] + u[k / n] * u[k % n] / denom)
        .collect();
    *phi = SymMatrix::from_row_major(n, &data)?;
    Ok(u)
}

#[test]
fn incremental_oracle_accepts_the_correct_update() {
    let gap = incremental_vs_direct_with(sherman_morrison_in_place, 2, 300, 6).unwrap();
    assert!(gap <= 1e-8, "{gap:e}");
}

#[test]
fn incremental_oracle_rejects_a_sign_flipped_update() {
    let gap = incremental_vs_direct_with(faulty_update, 2, 300, 6).unwrap();
    assert!(gap > 1e-2, "mutant survived: {gap:e}");
}

#[test]
fn update_cost_is_quadratic_in_basis_size() {
    for (size, ratio) in flops_per_update_ratios(&[10, 40, 160]).unwrap() {
        assert!((2.0..=4.0).contains(&ratio), "N = {size}: {ratio}");
    }
}

#[test]
fn basis_size_follows_the_schedule() {
    let (xs, ys) = ex2_stream(30, 5000);
    let mut state = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    let mut last = 0;
    for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
        state.observe(&[*x], *y).unwrap();
        if state.is_initialized() {
            let n = i + 1;
            assert_eq!(state.columns(), state.target_columns(n));
            // floor(0.5 N^3) <= n
            let nb = state.basis_count() as f64;
            assert!(nb <= 2.0 || (0.5 * nb.powi(3)).floor() <= n as f64);
            assert!(state.columns() >= last);
            last = state.columns();
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut state = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    assert!(state.observe(&[0.5, 0.5], 1.0).is_err());
    assert!(state.observe(&[0.5], f64::NAN).is_err());
    assert!(state.predict(&[0.5]).is_err());
    assert!(ProjectionState::new(EigenSystem::sobolev_min(), EstimatorConfig::new(0.4, 1, 0.5)).is_err());
    assert!(ProjectionState::new(EigenSystem::sobolev_min(), EstimatorConfig::new(1.0, 1, -1.0)).is_err());
}

#[test]
fn clamp_bounds_predictions() {
    let (xs, ys) = ex2_stream(12, 200);
    let mut state =
        ProjectionState::new(EigenSystem::sobolev_min(), ex2_config().with_clamp(0.25)).unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        state.observe(&[*x], *y).unwrap();
    }
    for g in 0..=20 {
        assert!(state.predict(&[g as f64 / 20.0]).unwrap().abs() <= 0.25);
    }
}
