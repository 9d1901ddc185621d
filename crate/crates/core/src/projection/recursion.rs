//! Coefficient recursions that bypass `θ = Φ s`.

use super::linalg::{dot, SymMatrix};

/// Row recursion `θ_n = θ_{n-1} + Φ_n ψ_n (Y_n − ψ_nᵀ θ_{n-1})`, valid when
/// no basis function was added at step `n`. `phi` must already include the
/// row update.
pub fn theta_row_recursion(theta: &[f64], phi: &SymMatrix, psi: &[f64], residual: f64) -> Vec<f64> {
    let gain = phi.mul_vec(psi);
    theta
        .iter()
        .zip(&gain)
        .map(|(t, g)| t + g * residual)
        .collect()
}

/// Parametric SGD counterpart of [`theta_row_recursion`]: the
/// preconditioner `Φ_n` is replaced by `step · I`.
///
/// ```
/// use streamkern::projection::{theta_row_recursion, theta_sgd_step, SymMatrix};
///
/// let theta = [0.5, -1.0];
/// let psi = [0.3, 0.8];
/// let residual = 0.25;
/// let step = 0.1;
/// let scaled_identity = SymMatrix::from_row_major(2, &[step, 0.0, 0.0, step]).unwrap();
/// assert_eq!(
///     theta_row_recursion(&theta, &scaled_identity, &psi, residual),
///     theta_sgd_step(&theta, step, &psi, residual),
/// );
/// ```
pub fn theta_sgd_step(theta: &[f64], step: f64, psi: &[f64], residual: f64) -> Vec<f64> {
    theta
        .iter()
        .zip(psi)
        .map(|(t, p)| t + step * p * residual)
        .collect()
}

/// Coefficients after appending column `v` to the design, from the
/// residual geometry of the old fit:
///
/// `θ_{N+1} = [θ_N; 0] + (vᵀΔ / ‖v − Ψw‖²) · [−w; 1]`, `w = Φ Ψᵀ v`,
///
/// where `Δ = Y − Ψθ_N` is the residual vector. `design` holds the old
/// columns of `Ψ`.
pub fn theta_column_recursion(
    theta: &[f64],
    phi: &SymMatrix,
    design: &[Vec<f64>],
    ys: &[f64],
    v: &[f64],
) -> Vec<f64> {
    let n = ys.len();
    let b: Vec<f64> = design.iter().map(|col| dot(col, v)).collect();
    let w = phi.mul_vec(&b);

    let mut fitted = vec![0.0; n];
    let mut projected = vec![0.0; n];
    for (col, (&t, &wj)) in design.iter().zip(theta.iter().zip(&w)) {
        for i in 0..n {
            fitted[i] += col[i] * t;
            projected[i] += col[i] * wj;
        }
    }
    let explained: f64 = (0..n).map(|i| v[i] * (ys[i] - fitted[i])).sum();
    let orth: f64 = (0..n).map(|i| (v[i] - projected[i]).powi(2)).sum();
    let scale = explained / orth;

    let mut out: Vec<f64> = theta.iter().zip(&w).map(|(t, wj)| t - scale * wj).collect();
    out.push(scale);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual_keeps_theta() {
        let phi = SymMatrix::from_row_major(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let theta = [0.3, -0.7];
        assert_eq!(theta_row_recursion(&theta, &phi, &[1.0, 2.0], 0.0), theta.to_vec());
    }

    #[test]
    fn column_recursion_on_orthogonal_design() {
        // Ψ = [e1 e2] over 3 rows, new column e3: fit of y on e3 is y3
        let design = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let phi = SymMatrix::identity(2);
        let ys = [2.0, -1.0, 5.0];
        let theta = [2.0, -1.0];
        let out = theta_column_recursion(&theta, &phi, &design, &ys, &[0.0, 0.0, 1.0]);
        assert_eq!(out, vec![2.0, -1.0, 5.0]);
    }
}
