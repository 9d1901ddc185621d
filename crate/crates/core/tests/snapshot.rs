use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamkern::verify::{ex2_config, ex2_stream};
use streamkern::{AdditiveState, EigenSystem, EstimatorConfig, ProjectionState};

#[test]
fn single_state_resumes_bit_exactly() {
    let (xs, ys) = ex2_stream(40, 2000);
    let mut straight = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    let mut first = straight.clone();
    for i in 0..700 {
        first.observe(&[xs[i]], ys[i]).unwrap();
    }
    let bytes = first.to_snapshot_bytes().unwrap();
    let mut resumed = ProjectionState::from_snapshot_bytes(&bytes).unwrap();
    assert_eq!(resumed.theta(), first.theta());
    assert_eq!(resumed.design(), first.design());
    for i in 700..2000 {
        resumed.observe(&[xs[i]], ys[i]).unwrap();
    }
    for i in 0..2000 {
        straight.observe(&[xs[i]], ys[i]).unwrap();
    }
    assert_eq!(resumed.theta(), straight.theta());
    assert_eq!(resumed.phi(), straight.phi());
    assert_eq!(resumed.to_snapshot_bytes().unwrap(), straight.to_snapshot_bytes().unwrap());
}

#[test]
fn uninitialized_state_round_trips() {
    let mut st = ProjectionState::new(EigenSystem::periodic_bernoulli(), EstimatorConfig::new(2.0, 1, 0.2)).unwrap();
    st.observe(&[0.3], 1.0).unwrap();
    let back = ProjectionState::from_snapshot_bytes(&st.to_snapshot_bytes().unwrap()).unwrap();
    assert!(!back.is_initialized());
    assert_eq!(back.history_x(), st.history_x());
}

#[test]
fn additive_state_resumes_bit_exactly() {
    let sys = EigenSystem::new("poly2+periodic_bernoulli".parse().unwrap()).unwrap();
    let config = EstimatorConfig::new(2.0, 1, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let data: Vec<(Vec<f64>, f64)> = (0..1500)
        .map(|_| {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let y = x.iter().map(|u| (5.0 * u).sin()).sum::<f64>() + rng.random::<f64>() - 0.5;
            (x, y)
        })
        .collect();
    let mut straight = AdditiveState::new(sys.clone(), 4, config.clone()).unwrap();
    let mut first = AdditiveState::new(sys, 4, config).unwrap();
    for (x, y) in &data[..500] {
        first.observe(x, *y).unwrap();
    }
    let mut resumed = AdditiveState::from_snapshot_bytes(&first.to_snapshot_bytes().unwrap()).unwrap();
    for (x, y) in &data[500..] {
        resumed.observe(x, *y).unwrap();
    }
    for (x, y) in &data {
        straight.observe(x, *y).unwrap();
    }
    assert_eq!(resumed.theta(), straight.theta());
    assert_eq!(resumed.to_snapshot_bytes().unwrap(), straight.to_snapshot_bytes().unwrap());
}

#[test]
fn corrupt_snapshots_are_rejected() {
    let (xs, ys) = ex2_stream(1, 100);
    let mut st = ProjectionState::new(EigenSystem::sobolev_min(), ex2_config()).unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        st.observe(&[*x], *y).unwrap();
    }
    let bytes = st.to_snapshot_bytes().unwrap();
    assert!(ProjectionState::from_snapshot_bytes(&bytes[..bytes.len() - 3]).is_err());
    assert!(ProjectionState::from_snapshot_bytes(b"XXXX").is_err());
    assert!(AdditiveState::from_snapshot_bytes(&bytes).is_err());
}
