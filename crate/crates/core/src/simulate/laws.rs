use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};

use crate::error::{Error, Result};

/// Distribution of the covariate `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateLaw {
    /// Product of `dim` copies of Unif([0,1]).
    Uniform { dim: usize },
    /// Density `(x + 0.5)` on [0,1].
    Tilted,
}

impl CovariateLaw {
    pub fn dim(&self) -> usize {
        match self {
            CovariateLaw::Uniform { dim } => *dim,
            CovariateLaw::Tilted => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("covariate dimension must be at least 1".into()));
        }
        Ok(())
    }

    /// Appends one draw to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            CovariateLaw::Uniform { dim } => {
                for _ in 0..*dim {
                    out.push(rng.random::<f64>());
                }
            }
            CovariateLaw::Tilted => out.push(tilted_inverse_cdf(rng.random::<f64>())),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.sample_into(rng, &mut out);
        out
    }

    /// `count` draws, flattened row-major.
    pub fn sample_many<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count * self.dim());
        for _ in 0..count {
            self.sample_into(rng, &mut out);
        }
        out
    }
}

/// Inverse of `F(x) = (x² + x)/2`, the CDF of the tilted law.
pub fn tilted_inverse_cdf(u: f64) -> f64 {
    (-1.0 + (1.0 + 8.0 * u).sqrt()) / 2.0
}

pub fn sample_covariate<R: Rng + ?Sized>(law: &CovariateLaw, rng: &mut R) -> Vec<f64> {
    law.sample(rng)
}

/// Distribution of the additive noise `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLaw {
    Uniform { half_width: f64 },
    Normal { sd: f64 },
    /// `scale · T` with `T` Student-t on `df` degrees of freedom.
    StudentT { df: f64, scale: f64 },
}

impl NoiseLaw {
    /// Student-t noise scaled to the given standard deviation (`df > 2`).
    pub fn student_t_with_sd(df: f64, sd: f64) -> Result<Self> {
        if !(df > 2.0) {
            return Err(Error::Config(format!(
                "Student-t noise needs df > 2 for a finite variance, got {df}"
            )));
        }
        Ok(NoiseLaw::StudentT {
            df,
            scale: sd / (df / (df - 2.0)).sqrt(),
        })
    }

    pub fn sd(&self) -> f64 {
        match self {
            NoiseLaw::Uniform { half_width } => half_width / 3f64.sqrt(),
            NoiseLaw::Normal { sd } => *sd,
            NoiseLaw::StudentT { df, scale } => {
                if *df > 2.0 {
                    scale * (df / (df - 2.0)).sqrt()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            NoiseLaw::Uniform { half_width } => *half_width >= 0.0 && half_width.is_finite(),
            NoiseLaw::Normal { sd } => *sd >= 0.0 && sd.is_finite(),
            NoiseLaw::StudentT { df, scale } => *df > 0.0 && *scale >= 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid noise law {self:?}")))
        }
    }

    pub fn sampler(&self) -> Result<NoiseSampler> {
        self.validate()?;
        Ok(match *self {
            NoiseLaw::Uniform { half_width } => NoiseSampler::Uniform(half_width),
            NoiseLaw::Normal { sd } => NoiseSampler::Normal(
                Normal::new(0.0, sd).map_err(|e| Error::Config(e.to_string()))?,
            ),
            NoiseLaw::StudentT { df, scale } => NoiseSampler::StudentT(
                StudentT::new(df).map_err(|e| Error::Config(e.to_string()))?,
                scale,
            ),
        })
    }
}

/// Prepared noise distribution.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSampler {
    Uniform(f64),
    Normal(Normal<f64>),
    StudentT(StudentT<f64>, f64),
}

impl NoiseSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Uniform(h) => (2.0 * rng.random::<f64>() - 1.0) * h,
            NoiseSampler::Normal(n) => n.sample(rng),
            NoiseSampler::StudentT(t, scale) => scale * t.sample(rng),
        }
    }
}

pub fn sample_noise<R: Rng + ?Sized>(law: &NoiseLaw, rng: &mut R) -> Result<f64> {
    Ok(law.sampler()?.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tilted_cdf_endpoints() {
        assert_eq!(tilted_inverse_cdf(0.0), 0.0);
        assert_eq!(tilted_inverse_cdf(1.0), 1.0);
        assert_eq!(tilted_inverse_cdf(0.375), 0.5);
    }

    #[test]
    fn uniform_noise_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let law = NoiseLaw::Uniform { half_width: 0.02 };
        let s = law.sampler().unwrap();
        for _ in 0..10_000 {
            assert!(s.draw(&mut rng).abs() <= 0.02);
        }
    }

    #[test]
    fn scaled_t_has_requested_sd() {
        let law = NoiseLaw::student_t_with_sd(2.1, 5.0).unwrap();
        assert!((law.sd() - 5.0).abs() < 1e-12);
        assert!(NoiseLaw::student_t_with_sd(2.0, 1.0).is_err());
    }

    #[test]
    fn product_uniform_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = CovariateLaw::Uniform { dim: 10 }.sample_many(&mut rng, 7);
        assert_eq!(xs.len(), 70);
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
    }
}
