//! Test-window metrics: mean squared error and Spearman rank correlation.
//!
//! Series are row-major `T x dim` slices.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub spearman_rho: f64,
    /// `spearman_rho / mse`.
    pub ratio: f64,
}

impl MetricsReport {
    pub fn new(mse: f64, spearman_rho: f64) -> Self {
        MetricsReport {
            mse,
            spearman_rho,
            ratio: spearman_rho / mse,
        }
    }
}

fn check_shapes(reference: &[f64], estimate: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("empty series".into()));
    }
    if reference.len() % dim != 0 {
        return Err(Error::InvalidArgument(format!(
            "series length {} not a multiple of dimension {dim}",
            reference.len()
        )));
    }
    Ok(reference.len() / dim)
}

pub fn mse(reference: &[f64], estimate: &[f64], dim: usize) -> Result<f64> {
    check_shapes(reference, estimate, dim)?;
    let sum: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e) * (r - e))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// Ranks starting at 1, tied values sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; `None` when either side has zero variance.
fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation per dimension, averaged over dimensions. A constant
/// dimension contributes 0.
pub fn spearman(reference: &[f64], estimate: &[f64], dim: usize) -> Result<f64> {
    let t = check_shapes(reference, estimate, dim)?;
    if t < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut total = 0.0;
    for d in 0..dim {
        let r: Vec<f64> = reference.iter().skip(d).step_by(dim).copied().collect();
        let e: Vec<f64> = estimate.iter().skip(d).step_by(dim).copied().collect();
        total += pearson(&average_ranks(&r), &average_ranks(&e)).unwrap_or(0.0);
    }
    Ok(total / dim as f64)
}

pub fn report(reference: &[f64], estimate: &[f64], dim: usize) -> Result<MetricsReport> {
    Ok(MetricsReport::new(
        mse(reference, estimate, dim)?,
        spearman(reference, estimate, dim)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn mse_examples() {
        let a = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(mse(&a, &a, 2).unwrap(), 0.0);
        assert_eq!(mse(&[0.0; 6], &[1.0; 6], 3).unwrap(), 1.0);
        // mean of sin^2 over whole periods is exactly 1/2
        let n = 1000;
        let s: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / 100.0).sin()).collect();
        assert!((mse(&s, &vec![0.0; n], 1).unwrap() - 0.5).abs() < 1e-12);
        assert!(mse(&[], &[], 1).is_err());
        assert!(mse(&[1.0, 2.0], &[1.0], 1).is_err());
    }

    #[test]
    fn spearman_examples() {
        let r: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin()).collect();
        assert!((spearman(&r, &r, 1).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        assert!((spearman(&r, &neg, 1).unwrap() + 1.0).abs() < 1e-12);
        let affine: Vec<f64> = r.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((spearman(&r, &affine, 1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spearman(&r, &vec![0.5; 50], 1).unwrap(), 0.0);
        assert!(spearman(&[1.0], &[1.0], 1).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn multidimensional_averages_dimensions() {
        // dim 0 perfectly correlated, dim 1 perfectly anti-correlated
        let reference = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let estimate = [0.0, 2.0, 1.0, 1.0, 2.0, 0.0];
        assert!(spearman(&reference, &estimate, 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn report_ratio() {
        let r = MetricsReport::new(0.2, 0.8);
        assert!((r.ratio - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariant(
            xs in proptest::collection::vec(-10.0f64..10.0, 2..60),
            ys in proptest::collection::vec(-10.0f64..10.0, 60),
        ) {
            let ys = &ys[..xs.len()];
            let base = spearman(&xs, ys, 1).unwrap();
            let warped: Vec<f64> = ys.iter().map(|y| y.powi(3) + y.exp()).collect();
            prop_assert_eq!(spearman(&xs, &warped, 1).unwrap(), base);
        }

        #[test]
        fn mse_symmetric_nonnegative(
            xs in proptest::collection::vec(-10.0f64..10.0, 1..40),
            ys in proptest::collection::vec(-10.0f64..10.0, 40),
        ) {
            let ys = &ys[..xs.len()];
            let ab = mse(&xs, ys, 1).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, mse(ys, &xs, 1).unwrap());
            prop_assert_eq!(mse(&xs, &xs, 1).unwrap(), 0.0);
        }
    }
}
