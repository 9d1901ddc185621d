//! Reference estimators: batch kernel ridge regression and Polyak-averaged
//! functional SGD.

mod krr;
mod sgd;

pub use krr::{krr_fit, KrrModel, RidgeRule};
pub use sgd::{SgdModel, StepSize};

use crate::eigensystems::EigenSystem;

/// Closed-form kernel used by the baselines.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Single(EigenSystem),
    /// `Σ_k K(x^{(k)}, z^{(k)})` over `dim` coordinates.
    AdditiveSum(EigenSystem, usize),
}

impl Kernel {
    pub fn input_dim(&self) -> usize {
        match self {
            Kernel::Single(sys) => sys.dim(),
            Kernel::AdditiveSum(_, d) => *d,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match self {
            Kernel::Single(sys) => sys.kernel_unchecked(x, z),
            Kernel::AdditiveSum(sys, _) => x
                .iter()
                .zip(z)
                .map(|(a, b)| sys.kernel_unchecked(&[*a], &[*b]))
                .sum(),
        }
    }
}

impl From<EigenSystem> for Kernel {
    fn from(sys: EigenSystem) -> Self {
        Kernel::Single(sys)
    }
}
