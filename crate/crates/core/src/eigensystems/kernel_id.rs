use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Identifies a kernel family together with the working measure its
/// eigensystem is computed under.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelId {
    /// `min{s,t}` on `[0,1]`, uniform working measure.
    SobolevMin,
    /// `-B4({s-t})/24` on `[0,1]`, uniform working measure.
    PeriodicBernoulli,
    /// `exp(-eps^2 |x-z|^2)` under the density `alpha/sqrt(pi) exp(-alpha^2 x^2)`.
    Gaussian { alpha: f64, eps: f64 },
    /// Product kernel over `dim` coordinates of a one-dimensional base.
    TensorProduct { base: Box<KernelId>, dim: usize },
    /// Monomials `1, x, ..., x^degree` prepended to a one-dimensional base.
    PolyAugmented { base: Box<KernelId>, degree: usize },
}

impl KernelId {
    pub fn gaussian(alpha: f64, eps: f64) -> Self {
        KernelId::Gaussian { alpha, eps }
    }

    pub fn tensor(base: KernelId, dim: usize) -> Self {
        KernelId::TensorProduct {
            base: Box::new(base),
            dim,
        }
    }

    pub fn poly(base: KernelId, degree: usize) -> Self {
        KernelId::PolyAugmented {
            base: Box::new(base),
            degree,
        }
    }

    /// Covariate dimension of the kernel.
    pub fn dim(&self) -> usize {
        match self {
            KernelId::TensorProduct { dim, .. } => *dim,
            _ => 1,
        }
    }

    fn is_scalar_base(&self) -> bool {
        matches!(
            self,
            KernelId::SobolevMin | KernelId::PeriodicBernoulli | KernelId::Gaussian { .. }
        )
    }

    /// Checks structural constraints (parameter signs, nesting rules).
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelId::SobolevMin | KernelId::PeriodicBernoulli => Ok(()),
            KernelId::Gaussian { alpha, eps } => {
                if !(alpha.is_finite() && *alpha > 0.0 && eps.is_finite() && *eps > 0.0) {
                    return Err(Error::Config(format!(
                        "gaussian kernel needs positive finite parameters, got alpha={alpha}, eps={eps}"
                    )));
                }
                Ok(())
            }
            KernelId::TensorProduct { base, dim } => {
                if *dim == 0 {
                    return Err(Error::Config("tensor product dimension must be >= 1".into()));
                }
                if !base.is_scalar_base() {
                    return Err(Error::Unsupported(format!(
                        "tensor products are built from one-dimensional catalog kernels, not `{base}`"
                    )));
                }
                base.validate()
            }
            KernelId::PolyAugmented { base, degree } => {
                if *degree > 2 {
                    return Err(Error::Unsupported(format!(
                        "polynomial augmentation of degree {degree} (supported: 0, 1, 2)"
                    )));
                }
                if !base.is_scalar_base() {
                    return Err(Error::Unsupported(format!(
                        "polynomial augmentation needs a one-dimensional base, not `{base}`"
                    )));
                }
                base.validate()
            }
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelId::SobolevMin => write!(f, "sobolev_min"),
            KernelId::PeriodicBernoulli => write!(f, "periodic_bernoulli"),
            KernelId::Gaussian { alpha, eps } => {
                if *alpha == 1.0 && *eps == 1.0 {
                    write!(f, "gaussian")
                } else {
                    write!(f, "gaussian:{alpha}:{eps}")
                }
            }
            KernelId::TensorProduct { base, dim } => write!(f, "tensor:{base}:{dim}"),
            KernelId::PolyAugmented { base, degree } => write!(f, "poly{degree}+{base}"),
        }
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let id = if let Some(rest) = s.strip_prefix("tensor:") {
            let (base, dim) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::Config(format!("malformed tensor kernel id `{s}`")))?;
            let dim: usize = dim
                .parse()
                .map_err(|_| Error::Config(format!("bad tensor dimension in `{s}`")))?;
            KernelId::tensor(base.parse()?, dim)
        } else if let Some(rest) = s.strip_prefix("poly") {
            let (degree, base) = rest
                .split_once('+')
                .ok_or_else(|| Error::Config(format!("malformed polynomial kernel id `{s}`")))?;
            let degree: usize = degree
                .parse()
                .map_err(|_| Error::Config(format!("bad polynomial degree in `{s}`")))?;
            KernelId::poly(base.parse()?, degree)
        } else if s == "sobolev_min" {
            KernelId::SobolevMin
        } else if s == "periodic_bernoulli" {
            KernelId::PeriodicBernoulli
        } else if s == "gaussian" {
            KernelId::gaussian(1.0, 1.0)
        } else if let Some(rest) = s.strip_prefix("gaussian:") {
            let (a, e) = rest
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("malformed gaussian kernel id `{s}`")))?;
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad gaussian parameter `{v}` in `{s}`")))
            };
            KernelId::gaussian(parse(a)?, parse(e)?)
        } else {
            return Err(Error::Config(format!("unknown kernel id `{s}`")));
        };
        id.validate()?;
        Ok(id)
    }
}
