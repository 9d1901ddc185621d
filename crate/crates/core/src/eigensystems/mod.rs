//! Closed-form Mercer eigensystems for the kernel catalog.
//!
//! Every system enumerates its basis with 1-based indices `j`. The catalog
//! systems are orthonormal in `L²` of their [`WorkingMeasure`] and satisfy
//! `K(x,z) = Σ_j λ_j ψ_j(x) ψ_j(z)`.
//!
//! | id                     | `λ_j`                              | `ψ_j(x)`                              |
//! |------------------------|------------------------------------|---------------------------------------|
//! | `sobolev_min`          | `4/((2j-1)²π²)`                    | `√2 sin((2j-1)πx/2)`                  |
//! | `periodic_bernoulli`   | `1/(2πk)⁴`, `k = ⌈j/2⌉`            | `√2 sin(2πkx)` (odd j), `√2 cos(2πkx)` (even j) |
//! | `gaussian:<a>:<e>`     | `√(a²/(a²+δ²+e²)) (e²/(a²+δ²+e²))^{j-1}` | `√β e^{-δ²x²} H̃_{j-1}(aβx)`      |
//! | `tensor:<base>:<d>`    | sorted products of base values     | products of base functions            |
//! | `poly<k>+<base>`       | `1` for the `k+1` monomials, then base | `1, x, …, x^k`, then base          |

mod kernel_id;
mod measure;
pub mod tensor;

use std::f64::consts::{PI, SQRT_2};

pub use kernel_id::KernelId;
pub use measure::{Quadrature, WorkingMeasure, HERMITE_NODES, LEGENDRE_NODES};

use crate::error::{Error, Result};

/// Number of multi-indices enumerated up front for tensor-product systems.
pub const DEFAULT_TENSOR_CAPACITY: usize = 4096;

/// Fourth Bernoulli polynomial `x⁴ - 2x³ + x² - 1/30`.
pub fn bernoulli4(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 - 2.0 * x2 * x + x2 - 1.0 / 30.0
}

#[derive(Debug, Clone, PartialEq)]
struct GaussianParams {
    alpha: f64,
    eps: f64,
    beta: f64,
    delta2: f64,
    lead: f64,
    ratio: f64,
}

impl GaussianParams {
    fn new(alpha: f64, eps: f64) -> Self {
        let beta = (1.0 + (2.0 * eps / alpha).powi(2)).powf(0.25);
        let delta2 = 0.5 * alpha * alpha * (beta * beta - 1.0);
        let denom = alpha * alpha + delta2 + eps * eps;
        GaussianParams {
            alpha,
            eps,
            beta,
            delta2,
            lead: (alpha * alpha / denom).sqrt(),
            ratio: eps * eps / denom,
        }
    }

    fn eigenvalue(&self, j: usize) -> f64 {
        self.lead * self.ratio.powi(j as i32 - 1)
    }

    /// Fills `out[k] = ψ_{k+1}(x)` for `k < out.len()`.
    ///
    /// Uses Hermite polynomials normalised by `√(2^k k!)` so no factorial is
    /// ever formed: `h̃_{k+1} = √(2/(k+1)) t h̃_k − √(k/(k+1)) h̃_{k-1}`.
    fn fill(&self, x: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let t = self.alpha * self.beta * x;
        let envelope = self.beta.sqrt() * (-self.delta2 * x * x).exp();
        let mut prev = 0.0;
        let mut cur = 1.0;
        out[0] = envelope * cur;
        for k in 0..out.len() - 1 {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            out[k + 1] = envelope * cur;
        }
    }

    fn eval(&self, j: usize, x: f64) -> f64 {
        let mut buf = vec![0.0; j];
        self.fill(x, &mut buf);
        buf[j - 1]
    }

    fn kernel(&self, x: f64, z: f64) -> f64 {
        (-self.eps * self.eps * (x - z) * (x - z)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Sobolev,
    Periodic,
    Gaussian(GaussianParams),
    Tensor {
        base: Box<EigenSystem>,
        dim: usize,
        indices: Vec<Vec<u32>>,
        eigenvalues: Vec<f64>,
    },
    Poly {
        base: Box<EigenSystem>,
        degree: usize,
    },
}

/// An ordered eigenvalue / eigenfunction catalog for one kernel.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    id: KernelId,
    repr: Repr,
}

impl EigenSystem {
    pub fn new(id: KernelId) -> Result<Self> {
        Self::with_capacity(id, DEFAULT_TENSOR_CAPACITY)
    }

    /// Like [`EigenSystem::new`], enumerating `capacity` tensor-product
    /// multi-indices (ignored for other families).
    pub fn with_capacity(id: KernelId, capacity: usize) -> Result<Self> {
        id.validate()?;
        let repr = match &id {
            KernelId::SobolevMin => Repr::Sobolev,
            KernelId::PeriodicBernoulli => Repr::Periodic,
            KernelId::Gaussian { alpha, eps } => Repr::Gaussian(GaussianParams::new(*alpha, *eps)),
            KernelId::TensorProduct { base, dim } => {
                let base = EigenSystem::new((**base).clone())?;
                let (indices, eigenvalues) = tensor::enumerate(
                    |j| base.eigenvalue_unchecked(j),
                    *dim,
                    capacity,
                );
                Repr::Tensor {
                    base: Box::new(base),
                    dim: *dim,
                    indices,
                    eigenvalues,
                }
            }
            KernelId::PolyAugmented { base, degree } => Repr::Poly {
                base: Box::new(EigenSystem::new((**base).clone())?),
                degree: *degree,
            },
        };
        Ok(EigenSystem { id, repr })
    }

    pub fn sobolev_min() -> Self {
        Self::new(KernelId::SobolevMin).expect("catalog kernel")
    }

    pub fn periodic_bernoulli() -> Self {
        Self::new(KernelId::PeriodicBernoulli).expect("catalog kernel")
    }

    pub fn gaussian(alpha: f64, eps: f64) -> Result<Self> {
        Self::new(KernelId::gaussian(alpha, eps))
    }

    pub fn tensor(base: KernelId, dim: usize) -> Result<Self> {
        Self::new(KernelId::tensor(base, dim))
    }

    /// Prepends the monomials `1, x, …, x^degree` to a one-dimensional
    /// system. The monomials are fixed parametric terms and sit outside the
    /// eigenvalue ordering.
    pub fn augment_with_polynomials(base: &EigenSystem, degree: usize) -> Result<Self> {
        Self::new(KernelId::poly(base.id.clone(), degree))
    }

    pub fn id(&self) -> &KernelId {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.id.dim()
    }

    pub fn measure(&self) -> WorkingMeasure {
        match &self.repr {
            Repr::Sobolev | Repr::Periodic => WorkingMeasure::UniformUnit,
            Repr::Gaussian(p) => WorkingMeasure::GaussianDensity(p.alpha),
            Repr::Tensor { base, dim, .. } => match base.measure() {
                WorkingMeasure::GaussianDensity(a) => WorkingMeasure::ProductGaussian(a, *dim),
                _ => WorkingMeasure::ProductUniform(*dim),
            },
            Repr::Poly { base, .. } => base.measure(),
        }
    }

    /// Number of leading parametric (monomial) basis functions.
    pub fn parametric_count(&self) -> usize {
        match &self.repr {
            Repr::Poly { degree, .. } => degree + 1,
            _ => 0,
        }
    }

    pub fn is_parametric(&self, j: usize) -> bool {
        j >= 1 && j <= self.parametric_count()
    }

    /// Largest valid basis index, if the enumeration is finite.
    pub fn capacity(&self) -> Option<usize> {
        match &self.repr {
            Repr::Tensor { indices, .. } => Some(indices.len()),
            _ => None,
        }
    }

    /// Multi-index behind tensor-product basis function `j`.
    pub fn multi_index(&self, j: usize) -> Result<Vec<usize>> {
        self.check_index(j)?;
        match &self.repr {
            Repr::Tensor { indices, .. } => {
                Ok(indices[j - 1].iter().map(|&v| v as usize).collect())
            }
            _ => Ok(vec![j]),
        }
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 {
            return Err(Error::InvalidIndex(j));
        }
        if let Some(cap) = self.capacity() {
            if j > cap {
                return Err(Error::CatalogExhausted {
                    index: j,
                    capacity: cap,
                });
            }
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `λ_j`. For the monomial slots of an augmented system this is the unit
    /// weight those terms carry in the kernel.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Ok(self.eigenvalue_unchecked(j))
    }

    fn eigenvalue_unchecked(&self, j: usize) -> f64 {
        match &self.repr {
            Repr::Sobolev => {
                let m = (2 * j - 1) as f64;
                4.0 / (m * m * PI * PI)
            }
            Repr::Periodic => {
                let k = j.div_ceil(2) as f64;
                (2.0 * PI * k).powi(-4)
            }
            Repr::Gaussian(p) => p.eigenvalue(j),
            Repr::Tensor { eigenvalues, .. } => eigenvalues[j - 1],
            Repr::Poly { base, degree } => {
                if j <= degree + 1 {
                    1.0
                } else {
                    base.eigenvalue_unchecked(j - degree - 1)
                }
            }
        }
    }

    /// `ψ_j(x)`.
    pub fn basis_eval(&self, j: usize, x: &[f64]) -> Result<f64> {
        self.check_index(j)?;
        self.check_point(x)?;
        Ok(self.eval_unchecked(j, x))
    }

    /// `ψ_j(x)` for one-dimensional systems.
    pub fn eval1(&self, j: usize, x: f64) -> Result<f64> {
        self.basis_eval(j, &[x])
    }

    pub(crate) fn eval_unchecked(&self, j: usize, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Sobolev => SQRT_2 * (((2 * j - 1) as f64) * PI * x[0] * 0.5).sin(),
            Repr::Periodic => {
                let arg = 2.0 * PI * (j.div_ceil(2) as f64) * x[0];
                if j % 2 == 1 {
                    SQRT_2 * arg.sin()
                } else {
                    SQRT_2 * arg.cos()
                }
            }
            Repr::Gaussian(p) => p.eval(j, x[0]),
            Repr::Tensor { base, indices, .. } => {
                let mut v = 1.0;
                for (l, &jl) in indices[j - 1].iter().enumerate() {
                    v *= base.eval_unchecked(jl as usize, &x[l..l + 1]);
                }
                v
            }
            Repr::Poly { base, degree } => {
                if j <= degree + 1 {
                    x[0].powi(j as i32 - 1)
                } else {
                    base.eval_unchecked(j - degree - 1, x)
                }
            }
        }
    }

    /// Writes `ψ_1(x), …, ψ_count(x)` into `out` (cleared first).
    ///
    /// Values are bitwise identical to [`EigenSystem::basis_eval`].
    pub fn features_into(&self, x: &[f64], count: usize, out: &mut Vec<f64>) -> Result<()> {
        if count > 0 {
            self.check_index(count)?;
        }
        self.check_point(x)?;
        out.clear();
        out.resize(count, 0.0);
        self.fill_unchecked(x, out);
        Ok(())
    }

    pub(crate) fn fill_unchecked(&self, x: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Gaussian(p) => p.fill(x[0], out),
            Repr::Tensor { base, indices, .. } => {
                let count = out.len();
                let dim = x.len();
                let mut tables = Vec::with_capacity(dim);
                for l in 0..dim {
                    let max = indices[..count]
                        .iter()
                        .map(|idx| idx[l] as usize)
                        .max()
                        .unwrap_or(0);
                    let mut t = vec![0.0; max];
                    base.fill_unchecked(&x[l..l + 1], &mut t);
                    tables.push(t);
                }
                for (o, idx) in out.iter_mut().zip(&indices[..count]) {
                    let mut v = 1.0;
                    for (l, &jl) in idx.iter().enumerate() {
                        v *= tables[l][jl as usize - 1];
                    }
                    *o = v;
                }
            }
            Repr::Poly { base, degree } => {
                let p = (degree + 1).min(out.len());
                for (m, o) in out[..p].iter_mut().enumerate() {
                    *o = x[0].powi(m as i32);
                }
                base.fill_unchecked(x, &mut out[p..]);
            }
            _ => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.eval_unchecked(k + 1, x);
                }
            }
        }
    }

    /// Closed-form kernel value `K(x, z)`.
    pub fn kernel_eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(z)?;
        Ok(self.kernel_unchecked(x, z))
    }

    pub(crate) fn kernel_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match &self.repr {
            Repr::Sobolev => x[0].min(z[0]),
            Repr::Periodic => {
                let d = x[0] - z[0];
                -bernoulli4(d - d.floor()) / 24.0
            }
            Repr::Gaussian(p) => p.kernel(x[0], z[0]),
            Repr::Tensor { base, .. } => x
                .iter()
                .zip(z)
                .map(|(a, b)| base.kernel_unchecked(&[*a], &[*b]))
                .product(),
            Repr::Poly { base, degree } => {
                let xz = x[0] * z[0];
                (0..=*degree).map(|m| xz.powi(m as i32)).sum::<f64>()
                    + base.kernel_unchecked(x, z)
            }
        }
    }

    /// `Σ_{j ≤ terms} λ_j ψ_j(x) ψ_j(z)`.
    pub fn mercer_partial_sum(&self, x: &[f64], z: &[f64], terms: usize) -> Result<f64> {
        if terms == 0 {
            return Err(Error::InvalidIndex(0));
        }
        self.check_index(terms)?;
        self.check_point(x)?;
        self.check_point(z)?;
        let mut fx = Vec::new();
        let mut fz = Vec::new();
        self.features_into(x, terms, &mut fx)?;
        self.features_into(z, terms, &mut fz)?;
        Ok((1..=terms)
            .zip(fx.iter().zip(&fz))
            .map(|(j, (a, b))| self.eigenvalue_unchecked(j) * a * b)
            .sum())
    }
}
