//! Additive models `f(x) = Σ_k f_k(x^{(k)})` fitted with the streaming
//! projection machinery on a stacked design.
//!
//! Column layout for a per-coordinate system with `q` monomial terms
//! (`poly<q-1>+<base>`): one global intercept, then `x^{(k)}, …, x^{(k)q-1}`
//! for each coordinate `k`, then the base eigenfunctions interleaved by
//! coordinate, `ψ_1(x^{(1)}), …, ψ_1(x^{(d)}), ψ_2(x^{(1)}), …`. Each
//! schedule step therefore appends `d` columns.

use crate::eigensystems::EigenSystem;
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::projection::snapshot::SnapshotFeatures;
use crate::projection::{EstimatorConfig, OnlineProjection, StepReport};

/// Stacked feature map `(ψ_j(x^{(k)}))_{j, k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFeatures {
    system: EigenSystem,
    dim: usize,
}

impl AdditiveFeatures {
    pub fn new(system: EigenSystem, dim: usize) -> Result<Self> {
        if system.dim() != 1 {
            return Err(Error::Unsupported(format!(
                "additive components need a one-dimensional system, got `{}`",
                system.id()
            )));
        }
        if dim == 0 {
            return Err(Error::Config("additive model needs at least one coordinate".into()));
        }
        Ok(AdditiveFeatures { system, dim })
    }

    pub fn system(&self) -> &EigenSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Monomial degree of the per-coordinate system (`None` without
    /// augmentation).
    fn degree(&self) -> Option<usize> {
        self.system.parametric_count().checked_sub(1)
    }

    /// `(coordinate, index into the per-coordinate system)` of column `m`;
    /// the intercept has no coordinate.
    pub fn column_owner(&self, m: usize) -> (Option<usize>, usize) {
        match self.degree() {
            Some(deg) => {
                if m == 0 {
                    return (None, 1);
                }
                let poly = self.dim * deg;
                if m <= poly {
                    let r = m - 1;
                    (Some(r / deg), r % deg + 2)
                } else {
                    let r = m - 1 - poly;
                    (Some(r % self.dim), deg + 1 + r / self.dim + 1)
                }
            }
            None => (Some(m % self.dim), m / self.dim + 1),
        }
    }
}

impl FeatureMap for AdditiveFeatures {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn parametric_count(&self) -> usize {
        match self.degree() {
            Some(deg) => 1 + self.dim * deg,
            None => 0,
        }
    }

    fn group_size(&self) -> usize {
        self.dim
    }

    fn capacity(&self) -> Option<usize> {
        None
    }

    fn feature(&self, column: usize, x: &[f64]) -> f64 {
        match self.column_owner(column) {
            (None, _) => 1.0,
            (Some(k), j) => self.system.eval_unchecked(j, &x[k..k + 1]),
        }
    }
}

impl SnapshotFeatures for AdditiveFeatures {
    const KIND: u8 = 1;

    fn descriptor(&self) -> String {
        self.system.id().to_string()
    }

    fn from_descriptor(desc: &str, input_dim: usize) -> Result<Self> {
        AdditiveFeatures::new(EigenSystem::new(desc.parse()?)?, input_dim)
    }
}

/// Streaming additive-model estimator.
#[derive(Debug, Clone)]
pub struct AdditiveState {
    inner: OnlineProjection<AdditiveFeatures>,
}

impl AdditiveState {
    /// `config.dim` must be 1: each component lives in a one-dimensional
    /// space and the schedule follows `n = ⌊c (N+1)^{2α+1}⌋`.
    pub fn new(system: EigenSystem, dim: usize, config: EstimatorConfig) -> Result<Self> {
        if config.dim != 1 {
            return Err(Error::Config(format!(
                "additive schedule uses the one-dimensional exponent; got d={}",
                config.dim
            )));
        }
        let features = AdditiveFeatures::new(system, dim)?;
        Ok(AdditiveState {
            inner: OnlineProjection::new(features, config)?,
        })
    }

    pub fn from_inner(inner: OnlineProjection<AdditiveFeatures>) -> Self {
        AdditiveState { inner }
    }

    pub fn inner(&self) -> &OnlineProjection<AdditiveFeatures> {
        &self.inner
    }

    pub fn into_inner(self) -> OnlineProjection<AdditiveFeatures> {
        self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.features().dim()
    }

    /// Basis functions per coordinate.
    pub fn basis_per_coordinate(&self) -> usize {
        self.inner.basis_count()
    }

    pub fn theta(&self) -> &[f64] {
        self.inner.theta()
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn observe(&mut self, x: &[f64], y: f64) -> Result<StepReport> {
        self.inner.observe(x, y)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.inner.predict(x)
    }

    /// Coefficient of the per-coordinate basis function `j` (1-based, in
    /// the per-coordinate system's enumeration) on coordinate `k`.
    pub fn coefficient(&self, j: usize, k: usize) -> Option<f64> {
        let features = self.inner.features();
        (0..self.inner.columns())
            .find(|&m| features.column_owner(m) == (Some(k), j))
            .map(|m| self.inner.theta()[m])
    }

    /// Fitted global intercept (zero when the system has no constant term).
    pub fn intercept(&self) -> f64 {
        match self.inner.features().column_owner(0) {
            (None, _) if self.inner.columns() > 0 => self.inner.theta()[0],
            _ => 0.0,
        }
    }

    /// `u ↦ Σ_j θ_{jk} ψ_j(u)` for coordinate `k` (0-based), excluding the
    /// global intercept.
    pub fn component_function(&self, k: usize) -> Result<impl Fn(f64) -> f64 + '_> {
        if k >= self.dim() {
            return Err(Error::Config(format!(
                "coordinate {k} out of range for a {}-dimensional model",
                self.dim()
            )));
        }
        if !self.inner.is_initialized() {
            return Err(Error::NotReady {
                seen: self.inner.n(),
                needed: self.inner.warmup_len(),
            });
        }
        let features = self.inner.features();
        let terms: Vec<(usize, f64)> = (0..self.inner.columns())
            .filter_map(|m| match features.column_owner(m) {
                (Some(owner), j) if owner == k => Some((j, self.inner.theta()[m])),
                _ => None,
            })
            .collect();
        let system = features.system();
        Ok(move |u: f64| {
            terms
                .iter()
                .map(|&(j, t)| t * system.eval_unchecked(j, &[u]))
                .sum()
        })
    }

    pub fn to_snapshot_bytes(&self) -> Result<Vec<u8>> {
        self.inner.to_snapshot_bytes()
    }

    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(AdditiveState {
            inner: OnlineProjection::from_snapshot_bytes(bytes)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_layout_with_quadratic_terms() {
        let sys = EigenSystem::new("poly2+periodic_bernoulli".parse().unwrap()).unwrap();
        let f = AdditiveFeatures::new(sys, 3).unwrap();
        assert_eq!(f.parametric_count(), 7);
        assert_eq!(f.column_owner(0), (None, 1));
        assert_eq!(f.column_owner(1), (Some(0), 2));
        assert_eq!(f.column_owner(2), (Some(0), 3));
        assert_eq!(f.column_owner(3), (Some(1), 2));
        assert_eq!(f.column_owner(6), (Some(2), 3));
        assert_eq!(f.column_owner(7), (Some(0), 4));
        assert_eq!(f.column_owner(8), (Some(1), 4));
        assert_eq!(f.column_owner(10), (Some(0), 5));
        let x = [0.2, 0.5, 0.9];
        assert_eq!(f.feature(4, &x), 0.25);
        assert_eq!(f.feature(0, &x), 1.0);
    }

    #[test]
    fn column_layout_without_augmentation() {
        let f = AdditiveFeatures::new(EigenSystem::sobolev_min(), 2).unwrap();
        assert_eq!(f.parametric_count(), 0);
        assert_eq!(f.column_owner(0), (Some(0), 1));
        assert_eq!(f.column_owner(1), (Some(1), 1));
        assert_eq!(f.column_owner(2), (Some(0), 2));
    }

    #[test]
    fn single_coordinate_matches_eigensystem_columns() {
        let sys = EigenSystem::new("poly2+periodic_bernoulli".parse().unwrap()).unwrap();
        let f = AdditiveFeatures::new(sys.clone(), 1).unwrap();
        for m in 0..20 {
            assert_eq!(f.feature(m, &[0.37]), FeatureMap::feature(&sys, m, &[0.37]));
        }
    }

    #[test]
    fn rejects_multivariate_components() {
        let t = EigenSystem::tensor("sobolev_min".parse().unwrap(), 2).unwrap();
        assert!(AdditiveFeatures::new(t, 2).is_err());
        let sys = EigenSystem::sobolev_min();
        assert!(AdditiveState::new(sys, 2, EstimatorConfig::new(2.0, 2, 0.2)).is_err());
    }

    #[test]
    fn component_index_checked() {
        let st = AdditiveState::new(
            EigenSystem::sobolev_min(),
            2,
            EstimatorConfig::new(1.0, 1, 0.5),
        )
        .unwrap();
        assert!(st.component_function(2).is_err());
        assert!(matches!(st.component_function(0), Err(Error::NotReady { .. })));
    }
}
