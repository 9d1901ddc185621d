use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Default node counts for the quadrature rules below.
pub const LEGENDRE_NODES: usize = 256;
pub const HERMITE_NODES: usize = 128;

/// Measure under which a catalog eigensystem is orthonormal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkingMeasure {
    /// Lebesgue measure on `[0,1]`.
    UniformUnit,
    /// Density `alpha/sqrt(pi) exp(-alpha^2 x^2)` on the real line.
    GaussianDensity(f64),
    /// Uniform on `[0,1]^d`.
    ProductUniform(usize),
    /// Product of `d` copies of [`WorkingMeasure::GaussianDensity`].
    ProductGaussian(f64, usize),
}

/// A one-dimensional quadrature rule already weighted by the measure density:
/// `sum_i w_i f(x_i)` approximates `∫ f dρ̄`.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl WorkingMeasure {
    pub fn dim(&self) -> usize {
        match *self {
            WorkingMeasure::UniformUnit | WorkingMeasure::GaussianDensity(_) => 1,
            WorkingMeasure::ProductUniform(d) | WorkingMeasure::ProductGaussian(_, d) => d,
        }
    }

    /// The marginal measure of one coordinate.
    pub fn marginal(&self) -> WorkingMeasure {
        match *self {
            WorkingMeasure::ProductUniform(_) => WorkingMeasure::UniformUnit,
            WorkingMeasure::ProductGaussian(a, _) => WorkingMeasure::GaussianDensity(a),
            m => m,
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        match *self {
            WorkingMeasure::UniformUnit | WorkingMeasure::ProductUniform(_) => {
                if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                    1.0
                } else {
                    0.0
                }
            }
            WorkingMeasure::GaussianDensity(a) | WorkingMeasure::ProductGaussian(a, _) => x
                .iter()
                .map(|v| a / PI.sqrt() * (-a * a * v * v).exp())
                .product(),
        }
    }

    /// Whether `x` lies in the support of the measure.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            WorkingMeasure::UniformUnit | WorkingMeasure::ProductUniform(_) => {
                x.iter().all(|v| (0.0..=1.0).contains(v))
            }
            _ => x.iter().all(|v| v.is_finite()),
        }
    }

    /// Gauss–Legendre (uniform) or Gauss–Hermite (Gaussian) rule for one
    /// coordinate, with `nodes` points.
    pub fn quadrature(&self, nodes: usize) -> Quadrature {
        let deg = NonZeroUsize::new(nodes.max(1)).expect("nonzero");
        match self.marginal() {
            WorkingMeasure::GaussianDensity(a) => {
                // ∫ f(x) a/√π e^{-a²x²} dx = (1/√π) ∫ f(t/a) e^{-t²} dt
                let rule = GaussHermite::new(deg);
                let (nodes, weights) = rule
                    .as_node_weight_pairs()
                    .iter()
                    .map(|&(t, w)| (t / a, w / PI.sqrt()))
                    .unzip();
                Quadrature { nodes, weights }
            }
            _ => {
                let rule = GaussLegendre::new(deg);
                let (nodes, weights) = rule
                    .as_node_weight_pairs()
                    .iter()
                    .map(|&(t, w)| (0.5 * (t + 1.0), 0.5 * w))
                    .unzip();
                Quadrature { nodes, weights }
            }
        }
    }

    /// Default-size rule for this measure.
    pub fn default_quadrature(&self) -> Quadrature {
        match self.marginal() {
            WorkingMeasure::GaussianDensity(_) => self.quadrature(HERMITE_NODES),
            _ => self.quadrature(LEGENDRE_NODES),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_integrate_to_one() {
        for m in [
            WorkingMeasure::UniformUnit,
            WorkingMeasure::GaussianDensity(1.0),
            WorkingMeasure::GaussianDensity(0.3),
            WorkingMeasure::GaussianDensity(2.5),
        ] {
            let q = m.default_quadrature();
            let total = q.integrate(|_| 1.0);
            assert!((total - 1.0).abs() < 1e-8, "{m:?}: {total}");
            assert!(q.weights.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn gaussian_density_matches_quadrature_moments() {
        // second moment of a/√π e^{-a²x²} is 1/(2a²)
        let a = 1.7;
        let q = WorkingMeasure::GaussianDensity(a).default_quadrature();
        let m2 = q.integrate(|x| x * x);
        assert!((m2 - 1.0 / (2.0 * a * a)).abs() < 1e-12);
    }

    #[test]
    fn density_is_nonnegative_and_vanishes_off_support() {
        let m = WorkingMeasure::ProductUniform(2);
        assert_eq!(m.density(&[0.2, 0.9]), 1.0);
        assert_eq!(m.density(&[0.2, 1.5]), 0.0);
        assert!(WorkingMeasure::ProductGaussian(1.0, 3).density(&[5.0, -2.0, 0.1]) >= 0.0);
    }
}
