//! Per-feature quantization and scaling operators, each as a fit/apply pair.
//!
//! All four transforms fit per-column statistics on training data only and
//! apply them to arbitrary matrices with the same column count:
//!
//! * standard scaling: `(x - mean) / std`, population std, zero-std guard,
//! * quantile transform: monotone map through the empirical CDF onto `[0, 1]`,
//! * decimal rounding / level quantization: round to `decimals` places, or to
//!   the nearest of `n_levels` evenly spaced levels over the fitted range,
//! * uniform k-bins discretization: floor of the normalized value scaled by
//!   `n_bins`, with the top edge closed.
//!
//! Out-of-range values at apply time clamp to the fitted boundaries so that
//! downstream integer casts stay in range. Constant training columns map to
//! zero / bin 0 instead of erroring. Rounding is half-to-even throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-column empirical quantiles at evenly spaced probability levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileParams {
    /// Number of quantile levels actually fitted (clamped to the row count).
    pub n_quantiles: usize,
    /// Per-column sorted reference quantiles, `n_quantiles` entries each.
    pub quantiles: Vec<Vec<f64>>,
    /// Per-column (min, max) of the training data.
    pub min_max: Vec<(f64, f64)>,
}

/// Parameters for decimal rounding and level quantization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundParams {
    pub decimals: u32,
    pub n_levels: usize,
    pub min_max: Vec<(f64, f64)>,
}

/// Parameters for uniform k-bins discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsParams {
    pub n_bins: usize,
    pub min_max: Vec<(f64, f64)>,
}

/// Any fitted transform, tagged for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum FittedTransform {
    Scaler(ScalerParams),
    Quantile(QuantileParams),
    Round(RoundParams),
    Bins(BinsParams),
}

fn check_cols(expected: usize, x: &Matrix) -> Result<()> {
    if x.cols() != expected {
        return Err(Error::Shape(format!(
            "fitted on {} columns, applied to {}",
            expected,
            x.cols()
        )));
    }
    Ok(())
}

pub fn fit_scaler(x_train: &Matrix) -> Result<ScalerParams> {
    if x_train.rows() == 0 {
        return Err(Error::InsufficientData("scaler fit on empty matrix".into()));
    }
    let n = x_train.rows() as f64;
    let mut mean = Vec::with_capacity(x_train.cols());
    let mut std = Vec::with_capacity(x_train.cols());
    for c in 0..x_train.cols() {
        let m = (0..x_train.rows()).map(|r| x_train.get(r, c)).sum::<f64>() / n;
        let var = (0..x_train.rows())
            .map(|r| {
                let d = x_train.get(r, c) - m;
                d * d
            })
            .sum::<f64>()
            / n;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(ScalerParams { mean, std })
}

/// `(x - mean) / std` per column; columns with zero std map to all zeros.
pub fn apply_scaler(params: &ScalerParams, x: &Matrix) -> Result<Matrix> {
    check_cols(params.mean.len(), x)?;
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let s = params.std[c];
            out.push(if s == 0.0 {
                0.0
            } else {
                (x.get(r, c) - params.mean[c]) / s
            });
        }
    }
    Matrix::from_vec(x.rows(), x.cols(), out)
}

/// Empirical quantiles of each column at `n_quantiles` evenly spaced
/// probability levels in `[0, 1]`, linearly interpolated between order
/// statistics. `n_quantiles` is clamped to the row count.
pub fn fit_quantile(x_train: &Matrix, n_quantiles: usize) -> Result<QuantileParams> {
    if x_train.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "quantile fit needs at least 2 rows, got {}",
            x_train.rows()
        )));
    }
    if n_quantiles < 2 {
        return Err(Error::InvalidParam(format!(
            "n_quantiles must be >= 2, got {n_quantiles}"
        )));
    }
    let n_q = n_quantiles.min(x_train.rows());
    let mut quantiles = Vec::with_capacity(x_train.cols());
    let mut min_max = Vec::with_capacity(x_train.cols());
    for c in 0..x_train.cols() {
        let mut v = x_train.column(c);
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite by construction"));
        let n = v.len();
        let mut q = Vec::with_capacity(n_q);
        for k in 0..n_q {
            let p = k as f64 / (n_q - 1) as f64;
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = h - lo as f64;
            q.push(v[lo] + frac * (v[hi] - v[lo]));
        }
        min_max.push((v[0], v[n - 1]));
        quantiles.push(q);
    }
    Ok(QuantileParams {
        n_quantiles: n_q,
        quantiles,
        min_max,
    })
}

/// Map each value through the per-column empirical CDF onto `[0, 1]`.
///
/// Values outside the fitted range clamp to 0 / 1. A value equal to a run of
/// tied quantiles maps to the midpoint of the tied probability range.
pub fn apply_quantile(params: &QuantileParams, x: &Matrix) -> Result<Matrix> {
    check_cols(params.quantiles.len(), x)?;
    let n_q = params.n_quantiles;
    let level = |k: usize| k as f64 / (n_q - 1) as f64;
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let q = &params.quantiles[c];
            let v = x.get(r, c);
            let y = if v < q[0] {
                0.0
            } else if v > q[n_q - 1] {
                1.0
            } else {
                // First index with q[i] >= v and last index with q[i] <= v.
                let first_ge = q.partition_point(|&e| e < v);
                let last_le = q.partition_point(|&e| e <= v).wrapping_sub(1);
                if q[first_ge] == v {
                    (level(first_ge) + level(last_le)) / 2.0
                } else {
                    // q[i] < v < q[i+1] with distinct endpoints.
                    let i = first_ge - 1;
                    let t = (v - q[i]) / (q[i + 1] - q[i]);
                    level(i) + t * (level(i + 1) - level(i))
                }
            };
            out.push(y);
        }
    }
    Matrix::from_vec(x.rows(), x.cols(), out)
}

/// Fit the per-column range used by [`level_quantize`].
pub fn fit_round(x_train: &Matrix, decimals: u32, n_levels: usize) -> Result<RoundParams> {
    if n_levels < 2 {
        return Err(Error::InvalidParam(format!(
            "n_levels must be >= 2, got {n_levels}"
        )));
    }
    Ok(RoundParams {
        decimals,
        n_levels,
        min_max: x_train.column_min_max()?,
    })
}

/// Round every element to `decimals` decimal places, half to even.
pub fn round_quantize(x: &Matrix, decimals: u32) -> Result<Matrix> {
    if x.precision() == crate::matrix::Precision::I32 {
        return Err(Error::InvalidParam(
            "round_quantize requires a floating-point matrix".into(),
        ));
    }
    let factor = 10f64.powi(decimals as i32);
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            out.push((x.get(r, c) * factor).round_ties_even() / factor);
        }
    }
    let m = Matrix::from_vec(x.rows(), x.cols(), out)?;
    m.cast(x.precision())
}

/// Map each value to the nearest of `n_levels` evenly spaced levels over the
/// fitted per-column range; outputs are integers in `[0, n_levels - 1]`.
pub fn level_quantize(params: &RoundParams, x: &Matrix) -> Result<Matrix> {
    check_cols(params.min_max.len(), x)?;
    let top = (params.n_levels - 1) as f64;
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let (lo, hi) = params.min_max[c];
            let y = if hi <= lo {
                0.0
            } else {
                let level = ((x.get(r, c) - lo) * top / (hi - lo)).round_ties_even();
                level.clamp(0.0, top)
            };
            out.push(y);
        }
    }
    Matrix::from_vec(x.rows(), x.cols(), out)
}

pub fn fit_bins(x_train: &Matrix, n_bins: usize) -> Result<BinsParams> {
    if n_bins < 2 {
        return Err(Error::InvalidParam(format!(
            "n_bins must be >= 2, got {n_bins}"
        )));
    }
    Ok(BinsParams {
        n_bins,
        min_max: x_train.column_min_max()?,
    })
}

/// Uniform-width binning: `floor(n_bins * (x - min) / (max - min))` with the
/// top bin closed, clamped to `[0, n_bins - 1]`; constant columns map to 0.
pub fn apply_bins(params: &BinsParams, x: &Matrix) -> Result<Matrix> {
    check_cols(params.min_max.len(), x)?;
    let top = (params.n_bins - 1) as f64;
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let (lo, hi) = params.min_max[c];
            let v = x.get(r, c);
            let y = if hi <= lo {
                0.0
            } else if v >= hi {
                top
            } else if v <= lo {
                0.0
            } else {
                (params.n_bins as f64 * (v - lo) / (hi - lo)).floor().clamp(0.0, top)
            };
            out.push(y);
        }
    }
    Matrix::from_vec(x.rows(), x.cols(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn scaler_examples() {
        let p = fit_scaler(&col(&[1.0, 3.0])).unwrap();
        assert_eq!(p.mean, vec![2.0]);
        assert_eq!(p.std, vec![1.0]);
        let y = apply_scaler(&p, &col(&[2.0])).unwrap();
        assert_eq!(y.get(0, 0), 0.0);

        let p = fit_scaler(&col(&[5.0, 5.0])).unwrap();
        let y = apply_scaler(&p, &col(&[5.0, 5.0])).unwrap();
        assert_eq!((y.get(0, 0), y.get(1, 0)), (0.0, 0.0));
    }

    #[test]
    fn scaler_output_moments() {
        let data: Vec<f64> = (0..300)
            .map(|i| ((i * 2654435761u64 as usize) % 997) as f64 / 99.7 - 5.0 + (i % 3) as f64)
            .collect();
        let x = Matrix::from_vec(100, 3, data).unwrap();
        let p = fit_scaler(&x).unwrap();
        let y = apply_scaler(&p, &x).unwrap();
        for c in 0..3 {
            let mean = (0..100).map(|r| y.get(r, c)).sum::<f64>() / 100.0;
            let var = (0..100).map(|r| (y.get(r, c) - mean).powi(2)).sum::<f64>() / 100.0;
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-9, "column {c} std {}", var.sqrt());
        }
    }

    #[test]
    fn scaler_shape_mismatch() {
        let p = fit_scaler(&col(&[1.0, 2.0])).unwrap();
        assert!(apply_scaler(&p, &m(&[vec![1.0, 2.0]])).is_err());
    }

    #[test]
    fn quantile_fit_examples() {
        let p = fit_quantile(&col(&[0.0, 1.0, 2.0, 3.0, 4.0]), 5).unwrap();
        assert_eq!(p.quantiles[0], vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.min_max[0], (0.0, 4.0));

        let p = fit_quantile(&col(&[7.0, 7.0, 7.0]), 5).unwrap();
        assert!(p.quantiles[0].iter().all(|&q| q == 7.0));

        assert!(fit_quantile(&col(&[1.0]), 5).is_err());
    }

    #[test]
    fn quantile_fit_matches_sort_interpolate_oracle() {
        let vals: Vec<f64> = (0..50)
            .map(|i| (((i * 48271) % 2147483647) as f64).sin() * 10.0)
            .collect();
        let p = fit_quantile(&col(&vals), 10).unwrap();

        // Independent oracle: sort, then evaluate each level by direct
        // index arithmetic on the order statistics.
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..10 {
            let pos = k as f64 / 9.0 * 49.0;
            let below = sorted[pos.floor() as usize];
            let above = sorted[pos.ceil() as usize];
            let expected = below + (pos - pos.floor()) * (above - below);
            assert!(
                (p.quantiles[0][k] - expected).abs() < 1e-12,
                "level {k}: {} vs {expected}",
                p.quantiles[0][k]
            );
        }
        // Endpoints pin to the training extremes.
        assert_eq!(p.quantiles[0][0], p.min_max[0].0);
        assert_eq!(p.quantiles[0][9], p.min_max[0].1);
    }

    #[test]
    fn quantile_apply_endpoints_and_clamp() {
        let train = col(&[3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 5.8, 9.7, 0.2]);
        let p = fit_quantile(&train, 10).unwrap();
        let y = apply_quantile(&p, &col(&[0.2, 9.7, -100.0, 100.0])).unwrap();
        assert_eq!(y.get(0, 0), 0.0);
        assert_eq!(y.get(1, 0), 1.0);
        assert_eq!(y.get(2, 0), 0.0);
        assert_eq!(y.get(3, 0), 1.0);
    }

    #[test]
    fn quantile_apply_monotone() {
        let train = col(&[5.0, 2.0, 8.0, 1.0, 9.0, 3.0, 7.0, 4.0]);
        let p = fit_quantile(&train, 8).unwrap();
        let inputs: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        let y = apply_quantile(&p, &col(&inputs)).unwrap();
        for r in 1..inputs.len() {
            assert!(y.get(r, 0) >= y.get(r - 1, 0));
        }
    }

    #[test]
    fn quantile_constant_column_maps_to_half() {
        let p = fit_quantile(&col(&[7.0, 7.0, 7.0]), 3).unwrap();
        let y = apply_quantile(&p, &col(&[6.0, 7.0, 8.0])).unwrap();
        assert_eq!(y.get(0, 0), 0.0);
        assert_eq!(y.get(1, 0), 0.5);
        assert_eq!(y.get(2, 0), 1.0);
    }

    #[test]
    fn quantile_training_data_approximates_rank() {
        // 200 distinct pseudo-random values, n_quantiles = 200: the transform
        // of the training data itself is its normalized rank.
        let vals: Vec<f64> = (0..200)
            .map(|i| (((i * 1103515245 + 12345) % 2147483648u64 as usize) as f64).sin() * 50.0)
            .collect();
        let x = col(&vals);
        let p = fit_quantile(&x, 200).unwrap();
        let y = apply_quantile(&p, &x).unwrap();

        let mut idx: Vec<usize> = (0..200).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        for (rank, &orig) in idx.iter().enumerate() {
            let expected = rank as f64 / 199.0;
            assert!(
                (y.get(orig, 0) - expected).abs() < 5e-3,
                "rank {rank}: {} vs {expected}",
                y.get(orig, 0)
            );
        }
    }

    #[test]
    fn round_half_to_even_examples() {
        let y = round_quantize(&col(&[0.12345, 0.12335]), 4).unwrap();
        assert_eq!(y.get(0, 0), 0.1234);
        assert_eq!(y.get(1, 0), 0.1234);
    }

    #[test]
    fn round_error_bound_and_string_oracle() {
        let vals: Vec<f64> = (0..500)
            .map(|i| ((i * 16807 % 65537) as f64 / 65537.0 - 0.5) * 2000.0)
            .collect();
        let x = col(&vals);
        let y = round_quantize(&x, 4).unwrap();
        for (i, &v) in vals.iter().enumerate() {
            let got = y.get(i, 0);
            assert!((got - v).abs() <= 0.5e-4 * (1.0 + 1e-9), "{v} -> {got}");
            // Decimal-string oracle; agrees away from exact decimal ties.
            let oracle: f64 = format!("{v:.4}").parse().unwrap();
            assert!((got - oracle).abs() < 1e-12, "{v}: {got} vs oracle {oracle}");
        }
    }

    #[test]
    fn round_rejects_integer_matrices() {
        let x = col(&[1.0, 2.0]).cast(crate::matrix::Precision::I32).unwrap();
        assert!(round_quantize(&x, 4).is_err());
    }

    #[test]
    fn level_quantize_boundaries() {
        let train = col(&[0.0, 2.5, 10.0]);
        let p = fit_round(&train, 4, 5).unwrap();
        let y = level_quantize(&p, &train).unwrap();
        assert_eq!(y.get(0, 0), 0.0); // x = min
        assert_eq!(y.get(1, 0), 1.0); // 2.5 * 4 / 10 = 1.0
        assert_eq!(y.get(2, 0), 4.0); // x = max -> n_levels - 1
        // Out-of-range inputs clamp to the boundary levels.
        let y = level_quantize(&p, &col(&[-5.0, 50.0])).unwrap();
        assert_eq!((y.get(0, 0), y.get(1, 0)), (0.0, 4.0));
    }

    #[test]
    fn level_quantize_constant_column() {
        let p = fit_round(&col(&[3.0, 3.0]), 4, 8).unwrap();
        let y = level_quantize(&p, &col(&[3.0, 99.0])).unwrap();
        assert_eq!((y.get(0, 0), y.get(1, 0)), (0.0, 0.0));
    }

    #[test]
    fn bins_examples() {
        let train = col(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let p = fit_bins(&train, 5).unwrap();
        let y = apply_bins(&p, &train).unwrap();
        let got: Vec<f64> = (0..10).map(|r| y.get(r, 0)).collect();
        assert_eq!(got, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        // Clamping outside the fitted range.
        let y = apply_bins(&p, &col(&[-1.0, 9.5])).unwrap();
        assert_eq!((y.get(0, 0), y.get(1, 0)), (0.0, 4.0));

        assert!(fit_bins(&train, 1).is_err());
    }

    #[test]
    fn fit_apply_pairs_ignore_apply_target_stats() {
        // Fitted params come from the training matrix only.
        let train = col(&[0.0, 10.0]);
        let p = fit_bins(&train, 4).unwrap();
        assert_eq!(p.min_max, vec![(0.0, 10.0)]);
        let y = apply_bins(&p, &col(&[500.0])).unwrap();
        assert_eq!(y.get(0, 0), 3.0);
    }

    proptest! {
        #[test]
        fn round_is_idempotent(vals in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let x = col(&vals);
            let once = round_quantize(&x, 4).unwrap();
            let twice = round_quantize(&once, 4).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn transforms_are_monotone_per_column(
            mut train in proptest::collection::vec(-100f64..100.0, 4..20),
            probe in proptest::collection::vec(-120f64..120.0, 2..20),
        ) {
            train.dedup();
            prop_assume!(train.len() >= 4);
            let x = col(&train);
            let mut sorted_probe = probe.clone();
            sorted_probe.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let probe_m = col(&sorted_probe);

            let qp = fit_quantile(&x, 5).unwrap();
            let bp = fit_bins(&x, 4).unwrap();
            let rp = fit_round(&x, 4, 16).unwrap();
            for y in [
                apply_quantile(&qp, &probe_m).unwrap(),
                apply_bins(&bp, &probe_m).unwrap(),
                level_quantize(&rp, &probe_m).unwrap(),
                round_quantize(&probe_m, 4).unwrap(),
            ] {
                for r in 1..sorted_probe.len() {
                    prop_assert!(y.get(r, 0) >= y.get(r - 1, 0));
                }
            }
        }

        #[test]
        fn row_exchange_equivariance(
            vals in proptest::collection::vec(-50f64..50.0, 6..24),
            swap in (0usize..6, 0usize..6),
        ) {
            let x = col(&vals);
            let mut perm: Vec<usize> = (0..vals.len()).collect();
            perm.swap(swap.0 % vals.len(), swap.1 % vals.len());
            let permuted: Vec<f64> = perm.iter().map(|&i| vals[i]).collect();
            let xp = col(&permuted);

            let p = fit_quantile(&x, 4).unwrap();
            let y = apply_quantile(&p, &x).unwrap();
            let yp = apply_quantile(&p, &xp).unwrap();
            for (r, &src) in perm.iter().enumerate() {
                prop_assert_eq!(yp.get(r, 0), y.get(src, 0));
            }
        }

        #[test]
        fn bounded_outputs(
            train in proptest::collection::vec(-100f64..100.0, 3..30),
            probe in proptest::collection::vec(-200f64..200.0, 1..30),
        ) {
            let x = col(&train);
            let pm = col(&probe);
            let qp = fit_quantile(&x, 7).unwrap();
            let y = apply_quantile(&qp, &pm).unwrap();
            for r in 0..probe.len() {
                prop_assert!((0.0..=1.0).contains(&y.get(r, 0)));
            }
            let bp = fit_bins(&x, 6).unwrap();
            let y = apply_bins(&bp, &pm).unwrap();
            for r in 0..probe.len() {
                let v = y.get(r, 0);
                prop_assert!(v.fract() == 0.0 && (0.0..=5.0).contains(&v));
            }
            let rp = fit_round(&x, 4, 9).unwrap();
            let y = level_quantize(&rp, &pm).unwrap();
            for r in 0..probe.len() {
                let v = y.get(r, 0);
                prop_assert!(v.fract() == 0.0 && (0.0..=8.0).contains(&v));
            }
        }
    }
}
