use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use streamkern::simulate::{
    l2_error, log_grid, mean_curve, run_experiment_with, CovariateLaw, EstimatorKind, ExampleId,
    ExperimentSpec, NoiseLaw, RepData, RunOptions,
};

#[test]
fn tilted_law_has_mean_seven_twelfths() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs = CovariateLaw::Tilted.sample_many(&mut rng, 100_000);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 7.0 / 12.0).abs() < 0.005, "{mean}");
    assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn gaussian_noise_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = NoiseLaw::Normal { sd: 5.0 }.sampler().unwrap();
    let draws: Vec<f64> = (0..1_000_000).map(|_| s.draw(&mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / draws.len() as f64;
    assert!(mean.abs() < 0.02, "{mean}");
    assert!((var.sqrt() - 5.0).abs() < 0.02);
}

#[test]
fn uniform_noise_stays_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = NoiseLaw::Uniform { half_width: 0.02 }.sampler().unwrap();
    assert!((0..10_000).map(|_| s.draw(&mut rng)).all(|e| e.abs() <= 0.02));
}

#[test]
fn heavy_tailed_noise_has_heavier_upper_quantile_than_matched_gaussian() {
    let law = NoiseLaw::student_t_with_sd(2.1, 5.0).unwrap();
    assert!((law.sd() - 5.0).abs() < 1e-12);
    let NoiseLaw::StudentT { df, scale } = law else { panic!("wrong law") };
    let gauss_q = Normal::new(0.0, 5.0).unwrap().inverse_cdf(0.999);
    let t_q = scale * StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(0.999);
    assert!(t_q > gauss_q, "{t_q} vs {gauss_q}");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = law.sampler().unwrap();
    let mut draws: Vec<f64> = (0..1_000_000).map(|_| s.draw(&mut rng)).collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let empirical = draws[999_000];
    assert!(empirical > gauss_q, "{empirical} vs {gauss_q}");
    assert!((empirical / t_q - 1.0).abs() < 0.1);
}

#[test]
fn zero_predictor_error_on_ex1_is_the_squared_norm_of_the_truth() {
    let err = l2_error(
        |_| 0.0,
        |x| ExampleId::Ex1.truth(x),
        &CovariateLaw::Uniform { dim: 1 },
        100_000,
        5,
    )
    .unwrap();
    // ∫ B₄(x)² dx = 1/2100
    assert!((err * 2100.0 - 1.0).abs() < 0.02, "{err}");
}

#[test]
fn ex2_error_at_ten_thousand_is_in_the_expected_band() {
    let spec = ExperimentSpec {
        n_grid: vec![10_000],
        repetitions: 5,
        ..ExperimentSpec::preset("ex2").unwrap()
    };
    let curve = run_experiment_with(&spec, &RunOptions::default()).unwrap();
    let mean = mean_curve(&curve.rows, "projection")[0].1;
    assert!(mean > 1e-3 && mean < 1e-1, "{mean}");
}

fn small_spec(seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        n_grid: log_grid(100, 1000, 4),
        repetitions: 4,
        mc_points: 200,
        seed,
        estimators: vec![EstimatorKind::Projection, EstimatorKind::Sgd, EstimatorKind::Krr],
        ..ExperimentSpec::preset("ex1").unwrap()
    }
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let spec = small_spec(9);
    let serial = run_experiment_with(&spec, &RunOptions::serial()).unwrap();
    let parallel = run_experiment_with(&spec, &RunOptions { threads: Some(4), serial: false }).unwrap();
    assert_eq!(serial.rows, parallel.rows);
    let other = run_experiment_with(&small_spec(10), &RunOptions::serial()).unwrap();
    assert_ne!(serial.rows, other.rows);
    assert_eq!(serial.rows.len(), 3 * 4 * spec.n_grid.len());
}

#[test]
fn repetitions_use_independent_streams() {
    let spec = small_spec(1);
    let a = RepData::generate(&spec, 0).unwrap();
    let b = RepData::generate(&spec, 1).unwrap();
    assert_ne!(a.xs, b.xs);
    assert_eq!(a.xs, RepData::generate(&spec, 0).unwrap().xs);
}

#[test]
fn presets_validate() {
    for name in ExperimentSpec::PRESETS {
        ExperimentSpec::preset(name).unwrap().validate().unwrap();
    }
    assert!(ExperimentSpec::preset("ex9").is_err());
}

#[test]
fn config_file_overrides_a_preset() {
    let spec = ExperimentSpec::from_toml_str(
        "preset = \"ex2\"\nrepetitions = 3\nn_min = 100\nn_max = 1000\nnoise = \"student_t\"\nnoise_sd = 5.0\n",
    )
    .unwrap();
    assert_eq!(spec.repetitions, 3);
    assert_eq!(*spec.n_grid.last().unwrap(), 1000);
    assert!(matches!(spec.noise, NoiseLaw::StudentT { .. }));
    assert!(ExperimentSpec::from_toml_str("preset = \"ex2\"\nbogus = 1\n").is_err());
    assert!(ExperimentSpec::from_toml_str("preset = \"ex2\"\nalpha = 0.2\n").is_err());
}
