use crate::eigensystems::EigenSystem;

/// A column generator for the streaming least-squares design matrix.
///
/// Column `m` (0-based) of the design is `feature(m, X_i)` over the
/// covariate history. `fill` must agree bitwise with `feature`, because
/// cached design columns are rebuilt from history when a snapshot is loaded.
pub trait FeatureMap: Send + Sync {
    /// Dimension of a covariate point.
    fn input_dim(&self) -> usize;

    /// Leading columns that are always present (intercept, monomials).
    fn parametric_count(&self) -> usize;

    /// Number of columns appended each time the schedule grows the basis.
    fn group_size(&self) -> usize {
        1
    }

    /// Maximum number of columns, if finite.
    fn capacity(&self) -> Option<usize>;

    fn feature(&self, column: usize, x: &[f64]) -> f64;

    /// Writes the first `out.len()` columns evaluated at `x`.
    fn fill(&self, x: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = self.feature(m, x);
        }
    }

    /// Whether `x` is an admissible covariate.
    fn accepts(&self, x: &[f64]) -> bool {
        x.len() == self.input_dim() && x.iter().all(|v| v.is_finite())
    }
}

impl FeatureMap for EigenSystem {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn parametric_count(&self) -> usize {
        EigenSystem::parametric_count(self)
    }

    fn capacity(&self) -> Option<usize> {
        EigenSystem::capacity(self)
    }

    fn feature(&self, column: usize, x: &[f64]) -> f64 {
        self.eval_unchecked(column + 1, x)
    }

    fn fill(&self, x: &[f64], out: &mut [f64]) {
        self.fill_unchecked(x, out)
    }
}
