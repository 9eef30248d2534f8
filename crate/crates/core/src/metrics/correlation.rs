//! Sample auto- and cross-correlation.
//!
//! Both use the biased estimator: lagged sums of centred products are
//! divided by `n` times the product of the population standard deviations,
//! so lag 0 of an autocorrelation is exactly 1.

use super::MetricError;

fn centred(series: &[f64]) -> Result<(Vec<f64>, f64), MetricError> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let ss: f64 = c.iter().map(|x| x * x).sum();
    if ss == 0.0 || !ss.is_finite() {
        return Err(MetricError::ZeroVariance);
    }
    Ok((c, ss))
}

fn lagged_sum(a: &[f64], b: &[f64], lag: usize) -> f64 {
    a.iter().zip(&b[lag..]).map(|(x, y)| x * y).sum()
}

/// Autocorrelation at lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<(usize, f64)>, MetricError> {
    if series.len() <= max_lag {
        return Err(MetricError::TooShort {
            len: series.len(),
            max_lag,
        });
    }
    let (c, ss) = centred(series)?;
    Ok((0..=max_lag)
        .map(|k| {
            let r = if k == 0 { 1.0 } else { lagged_sum(&c, &c, k) / ss };
            (k, r)
        })
        .collect())
}

/// Cross-correlation `r(k) ~ E[a_t b_{t+k}]` at lags `-max_lag..=max_lag`.
pub fn cross_correlation(
    a: &[f64],
    b: &[f64],
    max_lag: usize,
) -> Result<Vec<(i64, f64)>, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() <= max_lag {
        return Err(MetricError::TooShort {
            len: a.len(),
            max_lag,
        });
    }
    let (ca, ssa) = centred(a)?;
    let (cb, ssb) = centred(b)?;
    let norm = (ssa * ssb).sqrt();
    let lags = -(max_lag as i64)..=(max_lag as i64);
    Ok(lags
        .map(|k| {
            let s = if k >= 0 {
                lagged_sum(&ca, &cb, k as usize)
            } else {
                lagged_sum(&cb, &ca, (-k) as usize)
            };
            (k, s / norm)
        })
        .collect())
}
