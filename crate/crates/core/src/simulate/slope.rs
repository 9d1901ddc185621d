use std::collections::BTreeMap;

use super::experiment::ErrorRow;
use crate::error::{Error, Result};

/// Least-squares line through `(log₁₀ n, log₁₀ err)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_err: f64,
    pub points: usize,
}

/// Fits `log₁₀ y = a + b log₁₀ n` over `n_min ≤ n ≤ n_max`.
pub fn fit_loglog_slope(curve: &[(f64, f64)], n_min: f64, n_max: f64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(n, _)| *n >= n_min && *n <= n_max)
        .map(|(n, y)| (n.log10(), y.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Config(format!(
            "slope fit needs at least 3 checkpoints in [{n_min}, {n_max}], found {}",
            pts.len()
        )));
    }
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Numerical("non-positive value in log-log fit".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all checkpoints share one n".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let std_err = (rss / (m - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        std_err,
        points: pts.len(),
    })
}

/// Repetition-averaged `(n, mean sq_l2_error)` for one estimator. Cells
/// marked as failed are skipped.
pub fn mean_curve(rows: &[ErrorRow], estimator: &str) -> Vec<(f64, f64)> {
    mean_by_n(rows, estimator, |r| r.sq_l2_error)
}

/// Repetition-averaged `(n, mean cumulative CPU ns)`.
pub fn mean_time_curve(rows: &[ErrorRow], estimator: &str) -> Vec<(f64, f64)> {
    mean_by_n(rows, estimator, |r| Some(r.cum_cpu_ns as f64))
}

fn mean_by_n(rows: &[ErrorRow], estimator: &str, value: impl Fn(&ErrorRow) -> Option<f64>) -> Vec<(f64, f64)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.estimator == estimator) {
        if let Some(v) = value(r) {
            let e = acc.entry(r.n).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(n, (s, k))| (n as f64, s / k as f64))
        .collect()
}

pub fn curve_slope(rows: &[ErrorRow], estimator: &str, n_min: f64, n_max: f64) -> Result<SlopeFit> {
    fit_loglog_slope(&mean_curve(rows, estimator), n_min, n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let curve: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 1e4]
            .iter()
            .map(|&n| (n, 1.0 / n))
            .collect();
        let f = fit_loglog_slope(&curve, 1.0, 1e5).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!(f.std_err < 1e-12);
        assert_eq!(f.points, 4);
    }

    #[test]
    fn constant_curve() {
        let curve = [(10.0, 0.3), (20.0, 0.3), (40.0, 0.3)];
        assert!(fit_loglog_slope(&curve, 0.0, 100.0).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let curve = [(10.0, 0.3), (20.0, 0.3), (40.0, 0.3)];
        assert!(fit_loglog_slope(&curve, 15.0, 100.0).is_err());
        assert!(fit_loglog_slope(&[], 0.0, 1.0).is_err());
    }
}
