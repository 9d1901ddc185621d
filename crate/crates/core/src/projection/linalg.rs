//! Rank-one and bordering updates of an inverse Gram matrix.

use crate::error::{Error, Result};

/// Default threshold on `1 + ψᵀΦψ` and on the Schur complement `k`.
pub const DEFAULT_JITTER_TOL: f64 = 1e-10;

/// Dense symmetric matrix in full row-major storage.
///
/// Updates write `(i, j)` and `(j, i)` from the same rounded product, so
/// the matrix stays exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from row-major data, symmetrising with the upper triangle.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        let mut m = SymMatrix {
            n,
            data: data.to_vec(),
        };
        for i in 0..n {
            for j in 0..i {
                m.data[i * n + j] = m.data[j * n + i];
            }
        }
        Ok(m)
    }

    /// Builds from the packed upper triangle `(0,0), (0,1), …, (0,n-1), (1,1), …`.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * (n + 1) / 2,
                got: upper.len(),
            });
        }
        let mut m = Self::zeros(n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in i..n {
                let v = *it.next().expect("length checked");
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        Ok(m)
    }

    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.data[i * self.n + i..(i + 1) * self.n]);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies `Φ ← Φ − Φψψᵀ Φ / (1 + ψᵀΦψ)` in place.
///
/// Returns the gain vector `Φ_new ψ = Φ_old ψ / (1 + ψᵀ Φ_old ψ)`. On a
/// degenerate denominator `Φ` is left untouched.
pub fn sherman_morrison_in_place(
    phi: &mut SymMatrix,
    psi: &[f64],
    tol: f64,
    flops: &mut u64,
) -> Result<Vec<f64>> {
    let n = phi.n;
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi.len(),
        });
    }
    let u = phi.mul_vec(psi);
    let denom = 1.0 + dot(psi, &u);
    *flops += (n * n + n) as u64;
    if !(denom > tol) {
        return Err(Error::DegeneratePivot { pivot: denom, tol });
    }
    let inv = 1.0 / denom;
    for i in 0..n {
        let ui = u[i];
        let row = &mut phi.data[i * n..(i + 1) * n];
        for (p, &uj) in row.iter_mut().zip(&u) {
            *p -= (ui * uj) * inv;
        }
    }
    *flops += (n * n) as u64;
    Ok(u.into_iter().map(|v| v * inv).collect())
}

/// Pure form of [`sherman_morrison_in_place`]: the inverse of
/// `Φ⁻¹ + ψψᵀ`.
pub fn sherman_morrison_update(phi: &SymMatrix, psi: &[f64], tol: f64) -> Result<SymMatrix> {
    let mut out = phi.clone();
    let mut flops = 0;
    sherman_morrison_in_place(&mut out, psi, tol, &mut flops)?;
    Ok(out)
}

/// Borders `Φ = G⁻¹` with a new column: given `b = Ψᵀv` and `c = vᵀv`,
/// replaces `Φ` by the inverse of `[[G, b], [bᵀ, c]]` using the Schur
/// complement `k = c − bᵀΦb`.
///
/// Returns `k`. Leaves `Φ` unchanged when `k ≤ tol`.
pub fn border_inverse(
    phi: &mut SymMatrix,
    b: &[f64],
    c: f64,
    tol: f64,
    flops: &mut u64,
) -> Result<f64> {
    let n = phi.n;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let v = phi.mul_vec(b);
    let k = c - dot(b, &v);
    *flops += (n * n + n) as u64;
    if !(k > tol) {
        return Err(Error::DegeneratePivot { pivot: k, tol });
    }
    let inv = 1.0 / k;
    let m = n + 1;
    let mut data = vec![0.0; m * m];
    for i in 0..n {
        let vi = v[i];
        let src = &phi.data[i * n..(i + 1) * n];
        let dst = &mut data[i * m..i * m + n];
        for ((d, &p), &vj) in dst.iter_mut().zip(src).zip(&v) {
            *d = p + (vi * vj) * inv;
        }
        let off = -(vi * inv);
        data[i * m + n] = off;
        data[n * m + i] = off;
    }
    data[n * m + n] = inv;
    *flops += (n * n + n) as u64;
    phi.n = m;
    phi.data = data;
    Ok(k)
}
