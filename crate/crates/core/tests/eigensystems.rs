use std::f64::consts::PI;

use approx::assert_relative_eq;
use streamkern::eigensystems::tensor::enumerate;
use streamkern::eigensystems::{bernoulli4, EigenSystem, KernelId, WorkingMeasure};
use streamkern::verify::{catalog, mercer_max_error, orthonormality_error};

/// Composite Simpson rule on [0,1], independent of the library quadrature.
fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn catalog_is_orthonormal_under_default_quadrature() {
    for sys in catalog() {
        let err = orthonormality_error(&sys, 20).unwrap();
        assert!(err <= 1e-6, "{}: {err:e}", sys.id());
    }
}

#[test]
fn one_dimensional_bases_are_orthonormal_under_simpson() {
    for sys in [EigenSystem::sobolev_min(), EigenSystem::periodic_bernoulli()] {
        for i in 1..=8 {
            for j in i..=8 {
                let v = simpson(|x| sys.eval1(i, x).unwrap() * sys.eval1(j, x).unwrap(), 20_000);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-9, "{} ({i},{j}): {v}", sys.id());
            }
        }
    }
}

#[test]
fn eigenvalue_closed_forms() {
    let s = EigenSystem::sobolev_min();
    assert_relative_eq!(s.eigenvalue(1).unwrap(), 0.405_284_734_569_351_1, max_relative = 1e-14);
    assert_relative_eq!(s.eigenvalue(3).unwrap(), 4.0 / (25.0 * PI * PI), max_relative = 1e-14);
    let p = EigenSystem::periodic_bernoulli();
    assert_relative_eq!(p.eigenvalue(1).unwrap(), 6.416_238_909_177_711e-4, max_relative = 1e-12);
    assert_eq!(p.eigenvalue(3).unwrap(), p.eigenvalue(4).unwrap());
    assert_relative_eq!(p.eigenvalue(3).unwrap() * 16.0, p.eigenvalue(1).unwrap(), max_relative = 1e-14);
}

#[test]
fn kernels_match_independent_closed_forms() {
    let p = EigenSystem::periodic_bernoulli();
    let g = EigenSystem::gaussian(1.0, 0.7).unwrap();
    for &(x, z) in &[(0.1, 0.8), (0.45, 0.45), (0.9, 0.05), (0.0, 1.0)] {
        let frac = (x - z) - f64::floor(x - z);
        let b4 = frac.powi(4) - 2.0 * frac.powi(3) + frac.powi(2) - 1.0 / 30.0;
        assert_relative_eq!(p.kernel_eval(&[x], &[z]).unwrap(), -b4 / 24.0, max_relative = 1e-12);
        assert_relative_eq!(
            g.kernel_eval(&[x], &[z]).unwrap(),
            (-0.49 * (x - z) * (x - z)).exp(),
            max_relative = 1e-12
        );
    }
    assert_eq!(bernoulli4(0.0), -1.0 / 30.0);
}

#[test]
fn mercer_sums_converge_to_the_kernel() {
    let g = EigenSystem::gaussian(1.0, 0.7).unwrap();
    for &(x, z) in &[(0.3, -0.4), (1.2, 0.9), (0.0, 0.0)] {
        let k = (-0.49f64 * (x - z) * (x - z)).exp();
        assert!((g.mercer_partial_sum(&[x], &[z], 60).unwrap() - k).abs() < 1e-10);
    }
    let p = EigenSystem::periodic_bernoulli();
    assert!(mercer_max_error(&p, 500, 10).unwrap() < 1e-10);

    let s = EigenSystem::sobolev_min();
    let errs: Vec<f64> = [25, 50, 100, 200, 500]
        .iter()
        .map(|&j| mercer_max_error(&s, j, 10).unwrap())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn sobolev_diagonal_tail_matches_series_value() {
    // 0.5 − (4/π²) Σ_{j>500} (2j−1)^{-2}, summed independently
    let s = EigenSystem::sobolev_min();
    let v = s.mercer_partial_sum(&[0.5], &[0.5], 500).unwrap();
    assert!((v - 0.499_797_357_700_262_73).abs() < 1e-12, "{v}");
    // away from the diagonal the series converges much faster
    let off = s.mercer_partial_sum(&[0.3], &[0.7], 500).unwrap();
    assert!((off - 0.3).abs() < 1e-5);
}

#[test]
fn tensor_enumeration_matches_brute_force() {
    let base = |j: usize| 1.0 / (j as f64 * j as f64);
    let (idx, vals) = enumerate(base, 3, 40);
    let mut brute = Vec::new();
    for a in 1..=40 {
        for b in 1..=40 {
            for c in 1..=40 {
                brute.push(base(a) * base(b) * base(c));
            }
        }
    }
    brute.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (v, w) in vals.iter().zip(&brute) {
        assert_relative_eq!(*v, *w, max_relative = 1e-14);
    }
    assert!(idx.iter().all(|m| m.len() == 3));
    assert!(vals.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn tensor_kernel_is_product_of_base_kernels() {
    let t = EigenSystem::tensor(KernelId::SobolevMin, 2).unwrap();
    assert_eq!(t.kernel_eval(&[0.3, 0.8], &[0.6, 0.5]).unwrap(), 0.3 * 0.5);
    let j = 7;
    let mi = t.multi_index(j).unwrap();
    let s = EigenSystem::sobolev_min();
    let expected = s.eval1(mi[0], 0.2).unwrap() * s.eval1(mi[1], 0.9).unwrap();
    assert_relative_eq!(t.basis_eval(j, &[0.2, 0.9]).unwrap(), expected, max_relative = 1e-14);
}

#[test]
fn polynomial_augmentation_kernel() {
    let sys = EigenSystem::new("poly2+periodic_bernoulli".parse().unwrap()).unwrap();
    let p = EigenSystem::periodic_bernoulli();
    let (x, z): (f64, f64) = (0.3, 0.65);
    let expected = 1.0 + x * z + (x * z).powi(2) + p.kernel_eval(&[x], &[z]).unwrap();
    assert_relative_eq!(sys.kernel_eval(&[x], &[z]).unwrap(), expected, max_relative = 1e-14);
}

#[test]
fn working_measures() {
    assert_eq!(EigenSystem::sobolev_min().measure(), WorkingMeasure::UniformUnit);
    let g = EigenSystem::gaussian(1.5, 0.5).unwrap();
    assert_eq!(g.measure(), WorkingMeasure::GaussianDensity(1.5));
    let q = g.measure().default_quadrature();
    assert!((q.integrate(|_| 1.0) - 1.0).abs() < 1e-8);
}

#[test]
fn unknown_kernels_are_configuration_errors() {
    for bad in ["sobolev", "tensor:sobolev_min:0", "gaussian:-1:1", "poly3+sobolev_min"] {
        let parsed = bad.parse::<KernelId>().and_then(EigenSystem::new);
        assert!(parsed.is_err(), "{bad}");
    }
}
