use super::Kernel;
use crate::error::{Error, Result};

/// `γ_n = γ₀ n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSize {
    pub gamma0: f64,
}

impl StepSize {
    pub fn at(&self, n: usize) -> f64 {
        self.gamma0 / (n as f64).sqrt()
    }
}

/// Functional SGD in the RKHS with Polyak averaging.
///
/// The raw iterate is `f̃_n = f̃_{n-1} + γ_n [Y_n − f̃_{n-1}(X_n)] K_{X_n}`,
/// stored as weights on the support points. The reported estimator is the
/// running mean `f̂_n = (1/(n+1)) Σ_{k=0}^n f̃_k`, maintained incrementally.
#[derive(Debug, Clone)]
pub struct SgdModel {
    kernel: Kernel,
    step: StepSize,
    xs: Vec<f64>,
    raw: Vec<f64>,
    averaged: Vec<f64>,
    kernel_evals: u64,
}

impl SgdModel {
    pub fn new(kernel: Kernel, gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {gamma0}")));
        }
        Ok(SgdModel {
            kernel,
            step: StepSize { gamma0 },
            xs: Vec::new(),
            raw: Vec::new(),
            averaged: Vec::new(),
            kernel_evals: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.raw.len()
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.raw
    }

    pub fn averaged_weights(&self) -> &[f64] {
        &self.averaged
    }

    pub fn support(&self) -> &[f64] {
        &self.xs
    }

    /// Kernel evaluations spent inside [`SgdModel::step`] so far.
    pub fn kernel_evals(&self) -> u64 {
        self.kernel_evals
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    fn eval_weights(&self, weights: &[f64], x: &[f64]) -> f64 {
        let d = self.kernel.input_dim();
        self.xs
            .chunks_exact(d)
            .zip(weights)
            .map(|(xi, w)| w * self.kernel.eval(xi, x))
            .sum()
    }

    /// `f̃_n(x)`.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        self.eval_weights(&self.raw, x)
    }

    /// `f̂_n(x)`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.eval_weights(&self.averaged, x)
    }

    pub fn step(&mut self, x: &[f64], y: f64) -> Result<()> {
        let d = self.kernel.input_dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let previous = self.predict_raw(x);
        self.kernel_evals += self.raw.len() as u64;
        let n = self.raw.len() + 1;
        let weight = self.step.at(n) * (y - previous);
        self.xs.extend_from_slice(x);
        self.raw.push(weight);

        // f̂_n = n/(n+1) f̂_{n-1} + 1/(n+1) f̃_n
        let keep = n as f64 / (n as f64 + 1.0);
        let fresh = 1.0 / (n as f64 + 1.0);
        for (a, r) in self.averaged.iter_mut().zip(&self.raw) {
            *a = keep * *a + fresh * r;
        }
        self.averaged.push(fresh * weight);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensystems::EigenSystem;

    fn model(gamma0: f64) -> SgdModel {
        SgdModel::new(Kernel::Single(EigenSystem::sobolev_min()), gamma0).unwrap()
    }

    #[test]
    fn first_step_weight() {
        let mut m = model(5.0);
        m.step(&[0.4], 2.0).unwrap();
        assert_eq!(m.raw_weights(), &[10.0]);
        assert_eq!(m.averaged_weights(), &[5.0]);
        assert_eq!(m.kernel_evals(), 0);
    }

    #[test]
    fn zero_responses_keep_zero_weights() {
        let mut m = model(5.0);
        for i in 0..20 {
            m.step(&[i as f64 / 20.0], 0.0).unwrap();
        }
        assert!(m.raw_weights().iter().all(|w| *w == 0.0));
        assert!(m.averaged_weights().iter().all(|w| *w == 0.0));
        assert_eq!(m.predict(&[0.5]), 0.0);
    }

    #[test]
    fn kernel_evaluations_grow_quadratically() {
        let mut m = model(1.0);
        for i in 0..100 {
            m.step(&[(i as f64 * 0.37) % 1.0], 1.0).unwrap();
        }
        assert_eq!(m.kernel_evals(), 99 * 100 / 2);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(SgdModel::new(Kernel::Single(EigenSystem::sobolev_min()), 0.0).is_err());
    }
}
