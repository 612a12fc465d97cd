use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rayon::prelude::*;

use super::{IndicatorError, Masked};
use crate::marketdata::MarketPanel;

/// Single-period simple returns, shape `(T - 1, N)`; row `k` is the return
/// from bar `k` to bar `k + 1`.
pub fn returns(close: &Array2<f64>) -> Array2<f64> {
    let (t, n) = close.dim();
    Array2::from_shape_fn((t.saturating_sub(1), n), |(k, i)| close[[k + 1, i]] / close[[k, i]] - 1.0)
}

/// Squared Mahalanobis distance of each return row from the mean and sample
/// covariance of the `window` rows before it. Defined for rows `>= window`.
///
/// When the covariance is not positive definite, `ε·I` with
/// `ε = 1e-8·trace(Σ)/N` is added once before giving up.
pub fn mahalanobis_series(returns: &Array2<f64>, window: usize) -> Result<Masked, IndicatorError> {
    mahalanobis_rows(returns, window)?.into_iter().collect()
}

/// Per-row results; a singular covariance fails only its own row.
pub(super) fn mahalanobis_rows(
    returns: &Array2<f64>,
    window: usize,
) -> Result<Vec<Result<Option<f64>, IndicatorError>>, IndicatorError> {
    let (rows, n) = returns.dim();
    if window <= n || window < 2 {
        return Err(IndicatorError::InvalidConfig(format!(
            "turbulence window ({window}) must exceed the ticker count ({n}) and be >= 2"
        )));
    }
    Ok((0..rows)
        .into_par_iter()
        .map(|k| {
            if k < window {
                return Ok(None);
            }
            let hist = returns.slice(ndarray::s![k - window..k, ..]);
            let mean = hist.mean_axis(ndarray::Axis(0)).expect("window > 0");
            let mut cov = DMatrix::<f64>::zeros(n, n);
            for row in hist.rows() {
                for a in 0..n {
                    let da = row[a] - mean[a];
                    for b in a..n {
                        cov[(a, b)] += da * (row[b] - mean[b]);
                    }
                }
            }
            let denom = (window - 1) as f64;
            for a in 0..n {
                for b in a..n {
                    cov[(a, b)] /= denom;
                    cov[(b, a)] = cov[(a, b)];
                }
            }
            let dev = DVector::from_iterator(n, (0..n).map(|i| returns[[k, i]] - mean[i]));
            let chol = cov.clone().cholesky().or_else(|| {
                let eps = 1e-8 * cov.trace() / n as f64;
                if eps > 0.0 {
                    (cov + DMatrix::identity(n, n) * eps).cholesky()
                } else {
                    None
                }
            });
            let chol = chol.ok_or(IndicatorError::SingularCovariance { t: k + 1 })?;
            let d = dev.dot(&chol.solve(&dev));
            Ok(Some(d.max(0.0)))
        })
        .collect())
}

/// Market turbulence aligned to the panel's time axis: `out[t]` measures the
/// return into bar `t`, so values are defined for `t >= window + 1`.
pub fn turbulence(panel: &MarketPanel, window: usize) -> Result<Masked, IndicatorError> {
    let r = returns(panel.close());
    let d = mahalanobis_series(&r, window)?;
    let mut out = Vec::with_capacity(panel.len());
    out.push(None);
    out.extend(d);
    out.truncate(panel.len());
    Ok(out)
}
