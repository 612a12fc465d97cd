use super::{check_period, IndicatorConfig, IndicatorError, Masked};

/// Strictly trailing simple moving average: `out[i]` is the mean of the `n`
/// prices before `i`, excluding `closes[i]` itself. Defined for `i >= n`.
pub fn sma(closes: &[f64], n: usize) -> Result<Masked, IndicatorError> {
    check_period(n, 1)?;
    if n >= closes.len() {
        return Err(IndicatorError::WindowTooLarge { window: n, len: closes.len() });
    }
    let inv = 1.0 / n as f64;
    Ok((0..closes.len())
        .map(|i| (i >= n).then(|| closes[i - n..i].iter().sum::<f64>() * inv))
        .collect())
}

/// Exponential moving average seeded with the SMA of the first `n` values
/// at index `n - 1`, then `α·x + (1 - α)·prev` with `α = 2 / (n + 1)`.
pub fn ema(closes: &[f64], n: usize) -> Result<Masked, IndicatorError> {
    check_period(n, 1)?;
    if n > closes.len() {
        return Err(IndicatorError::WindowTooLarge { window: n, len: closes.len() });
    }
    let alpha = 2.0 / (n as f64 + 1.0);
    let mut out = vec![None; closes.len()];
    let mut prev = closes[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = Some(prev);
    for i in n..closes.len() {
        prev = alpha * closes[i] + (1.0 - alpha) * prev;
        out[i] = Some(prev);
    }
    Ok(out)
}

/// MACD line: `ema(fast) - ema(slow)`.
pub fn macd(closes: &[f64], cfg: &IndicatorConfig) -> Result<Masked, IndicatorError> {
    Ok(macd_lines(closes, cfg)?.macd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacdLines {
    pub macd: Masked,
    pub signal: Masked,
    pub histogram: Masked,
}

/// MACD line with its signal line (EMA of the MACD line over its defined
/// part) and histogram. The signal is `None` throughout if the MACD line is
/// too short to seed it.
pub fn macd_lines(closes: &[f64], cfg: &IndicatorConfig) -> Result<MacdLines, IndicatorError> {
    if cfg.macd_fast >= cfg.macd_slow {
        return Err(IndicatorError::InvalidConfig(format!(
            "macd_fast ({}) must be < macd_slow ({})",
            cfg.macd_fast, cfg.macd_slow
        )));
    }
    let fast = ema(closes, cfg.macd_fast)?;
    let slow = ema(closes, cfg.macd_slow)?;
    let line: Masked = fast.iter().zip(&slow).map(|(f, s)| Some((*f)? - (*s)?)).collect();

    let start = cfg.macd_slow - 1;
    let mut signal = vec![None; closes.len()];
    let defined: Vec<f64> = line[start..].iter().map(|v| v.expect("defined after slow warmup")).collect();
    if let Ok(sig) = ema(&defined, cfg.macd_signal) {
        for (k, v) in sig.into_iter().enumerate() {
            signal[start + k] = v;
        }
    }
    let histogram = line.iter().zip(&signal).map(|(m, s)| Some((*m)? - (*s)?)).collect();
    Ok(MacdLines { macd: line, signal, histogram })
}

/// Bollinger bands over the trailing `boll_period` closes including the
/// current one: `mean ± k·σ` with population σ.
pub fn bollinger(closes: &[f64], cfg: &IndicatorConfig) -> Result<(Masked, Masked), IndicatorError> {
    let p = cfg.boll_period;
    check_period(p, 2)?;
    if p > closes.len() {
        return Err(IndicatorError::WindowTooLarge { window: p, len: closes.len() });
    }
    let mut ub = vec![None; closes.len()];
    let mut lb = vec![None; closes.len()];
    for i in p - 1..closes.len() {
        let window = &closes[i + 1 - p..=i];
        let mean = window.iter().sum::<f64>() / p as f64;
        let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / p as f64;
        let band = cfg.boll_k * var.sqrt();
        ub[i] = Some(mean + band);
        lb[i] = Some(mean - band);
    }
    Ok((ub, lb))
}
