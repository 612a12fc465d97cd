use super::{check_period, IndicatorError, Masked};

/// Relative strength index with simple averages over the last `n` price
/// changes. Defined for `i >= n`.
///
/// Zero average loss gives 100 (or 50 when the average gain is also zero);
/// zero average gain with positive loss gives 0.
pub fn rsi(closes: &[f64], n: usize) -> Result<Masked, IndicatorError> {
    check_period(n, 1)?;
    if n >= closes.len() {
        return Err(IndicatorError::WindowTooLarge { window: n, len: closes.len() });
    }
    let mut out = vec![None; closes.len()];
    for i in n..closes.len() {
        let (mut gain, mut loss) = (0.0, 0.0);
        for j in i + 1 - n..=i {
            let d = closes[j] - closes[j - 1];
            if d > 0.0 {
                gain += d;
            } else {
                loss -= d;
            }
        }
        let (avg_gain, avg_loss) = (gain / n as f64, loss / n as f64);
        let value = if avg_loss == 0.0 {
            if avg_gain > 0.0 {
                100.0
            } else {
                50.0
            }
        } else if avg_gain == 0.0 {
            0.0
        } else {
            100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
        };
        out[i] = Some(value.clamp(0.0, 100.0));
    }
    Ok(out)
}

fn same_len(a: &[f64], b: &[f64], c: &[f64]) -> Result<usize, IndicatorError> {
    if a.len() != b.len() || b.len() != c.len() {
        return Err(IndicatorError::LengthMismatch);
    }
    Ok(a.len())
}

/// Commodity channel index on the typical price `(H + L + C) / 3` over a
/// trailing window of `n` bars including the current one. A zero mean
/// deviation yields 0.
pub fn cci(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Result<Masked, IndicatorError> {
    let len = same_len(high, low, close)?;
    check_period(n, 1)?;
    if n > len {
        return Err(IndicatorError::WindowTooLarge { window: n, len });
    }
    let tp: Vec<f64> = (0..len).map(|i| (high[i] + low[i] + close[i]) / 3.0).collect();
    let mut out = vec![None; len];
    for i in n - 1..len {
        let window = &tp[i + 1 - n..=i];
        let mean = window.iter().sum::<f64>() / n as f64;
        let mean_dev = window.iter().map(|x| (x - mean).abs()).sum::<f64>() / n as f64;
        out[i] = Some(if mean_dev == 0.0 { 0.0 } else { (tp[i] - mean) / (0.015 * mean_dev) });
    }
    Ok(out)
}

/// Directional movement index with Wilder smoothing of period `n`.
///
/// The first smoothed value (index `n`) is the plain sum of the first `n`
/// directional moves / true ranges; thereafter
/// `S[i] = S[i-1] - S[i-1] / n + current`. `±DI = 100·S(±DM) / S(TR)`, and
/// `DX = 100·|+DI - -DI| / (+DI + -DI)`, taken as 0 when both are zero.
pub fn dx(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Result<Masked, IndicatorError> {
    let len = same_len(high, low, close)?;
    check_period(n, 1)?;
    if n >= len {
        return Err(IndicatorError::WindowTooLarge { window: n, len });
    }
    let mut out = vec![None; len];
    let (mut s_plus, mut s_minus, mut s_tr) = (0.0, 0.0, 0.0);
    let inv_n = 1.0 / n as f64;
    for i in 1..len {
        let up = high[i] - high[i - 1];
        let down = low[i - 1] - low[i];
        let plus_dm = if up > down && up > 0.0 { up } else { 0.0 };
        let minus_dm = if down > up && down > 0.0 { down } else { 0.0 };
        let tr = (high[i] - low[i])
            .max((high[i] - close[i - 1]).abs())
            .max((low[i] - close[i - 1]).abs());
        if i <= n {
            s_plus += plus_dm;
            s_minus += minus_dm;
            s_tr += tr;
        } else {
            s_plus = s_plus - s_plus * inv_n + plus_dm;
            s_minus = s_minus - s_minus * inv_n + minus_dm;
            s_tr = s_tr - s_tr * inv_n + tr;
        }
        if i >= n {
            let (pdi, mdi) = if s_tr > 0.0 { (100.0 * s_plus / s_tr, 100.0 * s_minus / s_tr) } else { (0.0, 0.0) };
            let sum = pdi + mdi;
            out[i] = Some(if sum > 0.0 { (100.0 * (pdi - mdi).abs() / sum).min(100.0) } else { 0.0 });
        }
    }
    Ok(out)
}
