use nalgebra::{DMatrix, DVector};

use super::Kernel;
use crate::error::{Error, Result};

/// Ridge level as a function of sample size, `λ_n = scale · n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeRule {
    pub scale: f64,
    pub exponent: f64,
}

impl RidgeRule {
    pub fn at(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(self.exponent)
    }
}

/// Kernel ridge regression fitted by solving `(𝕂 + nλI) a = Y`.
///
/// The loss is averaged over the sample, hence the factor `n` on the ridge.
#[derive(Debug, Clone)]
pub struct KrrModel {
    kernel: Kernel,
    xs: Vec<f64>,
    coef: Vec<f64>,
    ridge: f64,
}

pub fn krr_fit(kernel: &Kernel, xs: &[f64], ys: &[f64], ridge: f64) -> Result<KrrModel> {
    let d = kernel.input_dim();
    let n = ys.len();
    if n == 0 {
        return Err(Error::Config("kernel ridge regression needs at least one sample".into()));
    }
    if xs.len() != n * d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            got: xs.len(),
        });
    }
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::Config(format!("ridge level must be positive, got {ridge}")));
    }
    let shift = n as f64 * ridge;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let xi = &xs[i * d..(i + 1) * d];
        for j in 0..=i {
            let v = kernel.eval(xi, &xs[j * d..(j + 1) * d]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        gram[(i, i)] += shift;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("kernel system is not positive definite".into()))?;
    let coef = chol.solve(&DVector::from_column_slice(ys));
    Ok(KrrModel {
        kernel: kernel.clone(),
        xs: xs.to_vec(),
        coef: coef.iter().copied().collect(),
        ridge,
    })
}

impl KrrModel {
    /// Dual coefficients `a`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn support(&self) -> &[f64] {
        &self.xs
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    /// `Σ_i a_i K(X_i, x)`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let d = self.kernel.input_dim();
        self.xs
            .chunks_exact(d)
            .zip(&self.coef)
            .map(|(xi, a)| a * self.kernel.eval(xi, x))
            .sum()
    }

    /// Replaces the dual coefficients, keeping the support points.
    pub fn with_coefficients(mut self, coef: Vec<f64>) -> Result<Self> {
        if coef.len() != self.coef.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coef.len(),
                got: coef.len(),
            });
        }
        self.coef = coef;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensystems::EigenSystem;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn min_kernel() -> Kernel {
        Kernel::Single(EigenSystem::sobolev_min())
    }

    #[test]
    fn scalar_solve() {
        let m = krr_fit(&min_kernel(), &[0.6], &[1.5], 0.1).unwrap();
        assert!((m.coefficients()[0] - 1.5 / (0.6 + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn residual_of_linear_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50;
        let xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lambda = 1e-3;
        let k = min_kernel();
        let m = krr_fit(&k, &xs, &ys, lambda).unwrap();
        let ymax = ys.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for i in 0..n {
            let lhs: f64 = (0..n)
                .map(|j| k.eval(&[xs[i]], &[xs[j]]) * m.coefficients()[j])
                .sum::<f64>()
                + n as f64 * lambda * m.coefficients()[i];
            assert!((lhs - ys[i]).abs() <= 1e-8 * ymax);
        }
    }

    #[test]
    fn heavy_ridge_shrinks_to_zero() {
        let xs = [0.1, 0.4, 0.8];
        let ys = [1.0, -2.0, 3.0];
        let m = krr_fit(&min_kernel(), &xs, &ys, 1e12).unwrap();
        for x in [0.0, 0.3, 0.9] {
            assert!(m.predict(&[x]).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_coefficient_reproduces_kernel_section() {
        let m = krr_fit(&min_kernel(), &[0.3, 0.7], &[0.0, 0.0], 1.0)
            .unwrap()
            .with_coefficients(vec![1.0, 0.0])
            .unwrap();
        assert_eq!(m.predict(&[0.5]), 0.3);
        assert_eq!(m.predict(&[0.2]), 0.2);
    }

    #[test]
    fn zero_response_gives_zero_predictions() {
        let m = krr_fit(&min_kernel(), &[0.2, 0.5, 0.9], &[0.0; 3], 0.01).unwrap();
        assert_eq!(m.predict(&[0.4]), 0.0);
    }

    #[test]
    fn small_ridge_interpolates() {
        let xs = [0.1, 0.35, 0.6, 0.85];
        let ys = [0.3, -0.2, 0.9, 0.1];
        let m = krr_fit(&min_kernel(), &xs, &ys, 1e-9).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.predict(&[*x]) - y).abs() < 1e-2);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(krr_fit(&min_kernel(), &[], &[], 0.1).is_err());
        assert!(krr_fit(&min_kernel(), &[0.1], &[1.0], 0.0).is_err());
        assert!(krr_fit(&min_kernel(), &[0.1, 0.2], &[1.0], 0.1).is_err());
    }
}
