//! Independent brute-force reference implementations shared by the
//! integration tests and the acceptance suite. Each oracle is written from
//! the textbook definition, in a different shape from the library code
//! (closed forms instead of recursions, elimination instead of Cholesky,
//! scanners instead of diffs).

#![allow(dead_code)]

use holdtrade_core::agents::{a2c_loss, A2CConfig, MlpParams, RolloutBatch};
use holdtrade_core::env::{EnvConfig, EpisodeLog};
use holdtrade_core::indicators::FeaturePanel;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- series

/// Random OHLC path: geometric walk for the close, high/low bracketing it.
pub struct Ohlc {
    pub high: Vec<f64>,
    pub low: Vec<f64>,
    pub close: Vec<f64>,
}

pub fn random_ohlc(len: usize, seed: u64) -> Ohlc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: f64 = rng.random_range(20.0..200.0);
    let vol: f64 = rng.random_range(0.001..0.04);
    let (mut high, mut low, mut close) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..len {
        p *= 1.0 + vol * rng.random_range(-1.0..1.0);
        // occasional flat bars exercise the zero-division conventions
        if rng.random_bool(0.05) {
            high.push(p);
            low.push(p);
        } else {
            high.push(p * (1.0 + rng.random_range(0.0..0.02)));
            low.push(p * (1.0 - rng.random_range(0.0..0.02)));
        }
        close.push(p);
    }
    Ohlc { high, low, close }
}

pub fn max_abs_diff(a: &[Option<f64>], b: &[Option<f64>]) -> Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("length {} vs {}", a.len(), b.len()));
    }
    let mut worst: f64 = 0.0;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        match (x, y) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            (None, None) => {}
            _ => return Err(format!("definedness differs at {i}: {x:?} vs {y:?}")),
        }
    }
    Ok(worst)
}

// ------------------------------------------------------------ indicators

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sma(x: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..x.len()).map(|i| if i < n { None } else { Some(mean(&x[i - n..i])) }).collect()
}

/// Closed form of the seeded EMA:
/// `seed·(1-α)^(i-n+1) + Σ_{k=n}^{i} α(1-α)^(i-k)·x_k`.
pub fn ema(x: &[f64], n: usize) -> Vec<Option<f64>> {
    let a = 2.0 / (n as f64 + 1.0);
    let seed = mean(&x[..n]);
    (0..x.len())
        .map(|i| {
            if i + 1 < n {
                return None;
            }
            let mut v = seed * (1.0 - a).powi((i + 1 - n) as i32);
            for k in n..=i {
                v += a * (1.0 - a).powi((i - k) as i32) * x[k];
            }
            Some(v)
        })
        .collect()
}

pub fn macd(x: &[f64], fast: usize, slow: usize) -> Vec<Option<f64>> {
    let (f, s) = (ema(x, fast), ema(x, slow));
    f.iter().zip(&s).map(|(a, b)| Some((*a)? - (*b)?)).collect()
}

pub fn bollinger(x: &[f64], p: usize, k: f64) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let mut ub = vec![None; x.len()];
    let mut lb = vec![None; x.len()];
    for i in 0..x.len() {
        if i + 1 < p {
            continue;
        }
        let w: Vec<f64> = (i + 1 - p..=i).map(|j| x[j]).collect();
        let m = mean(&w);
        let sd = (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / p as f64).sqrt();
        ub[i] = Some(m + k * sd);
        lb[i] = Some(m - k * sd);
    }
    (ub, lb)
}

pub fn rsi(x: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..x.len())
        .map(|i| {
            if i < n {
                return None;
            }
            let diffs: Vec<f64> = (i + 1 - n..=i).map(|j| x[j] - x[j - 1]).collect();
            let g = diffs.iter().map(|d| d.max(0.0)).sum::<f64>() / n as f64;
            let l = diffs.iter().map(|d| (-d).max(0.0)).sum::<f64>() / n as f64;
            Some(match (g > 0.0, l > 0.0) {
                (false, false) => 50.0,
                (true, false) => 100.0,
                (false, true) => 0.0,
                (true, true) => 100.0 * g / (g + l),
            })
        })
        .collect()
}

pub fn cci(h: &[f64], l: &[f64], c: &[f64], n: usize) -> Vec<Option<f64>> {
    let tp: Vec<f64> = (0..c.len()).map(|i| (h[i] + l[i] + c[i]) / 3.0).collect();
    (0..c.len())
        .map(|i| {
            if i + 1 < n {
                return None;
            }
            let w = &tp[i + 1 - n..=i];
            let m = mean(w);
            let md = w.iter().map(|v| (v - m).abs()).sum::<f64>() / n as f64;
            Some(if md == 0.0 { 0.0 } else { (tp[i] - m) / (0.015 * md) })
        })
        .collect()
}

/// Wilder-smoothed sum in closed form:
/// `S_i = (1-1/n)^(i-n)·Σ_{k=1}^{n} x_k + Σ_{k=n+1}^{i} (1-1/n)^(i-k)·x_k`.
fn wilder(xs: &[f64], n: usize, i: usize) -> f64 {
    let r = 1.0 - 1.0 / n as f64;
    let base: f64 = (1..=n).map(|k| xs[k]).sum();
    let mut s = base * r.powi((i - n) as i32);
    for k in n + 1..=i {
        s += r.powi((i - k) as i32) * xs[k];
    }
    s
}

pub fn dx(h: &[f64], l: &[f64], c: &[f64], n: usize) -> Vec<Option<f64>> {
    let len = c.len();
    let (mut pdm, mut mdm, mut tr) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for i in 1..len {
        let up = h[i] - h[i - 1];
        let down = l[i - 1] - l[i];
        pdm[i] = if up > down && up > 0.0 { up } else { 0.0 };
        mdm[i] = if down > up && down > 0.0 { down } else { 0.0 };
        tr[i] = [h[i] - l[i], (h[i] - c[i - 1]).abs(), (l[i] - c[i - 1]).abs()].into_iter().fold(0.0, f64::max);
    }
    (0..len)
        .map(|i| {
            if i < n {
                return None;
            }
            let atr = wilder(&tr, n, i);
            if atr <= 0.0 {
                return Some(0.0);
            }
            let p = 100.0 * wilder(&pdm, n, i) / atr;
            let m = 100.0 * wilder(&mdm, n, i) / atr;
            Some(if p + m > 0.0 { 100.0 * (p - m).abs() / (p + m) } else { 0.0 })
        })
        .collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Squared Mahalanobis distance of return row `k` against the `window` rows
/// before it (sample covariance).
pub fn mahalanobis(ret: &Array2<f64>, window: usize) -> Vec<Option<f64>> {
    let (rows, n) = ret.dim();
    (0..rows)
        .map(|k| {
            if k < window {
                return None;
            }
            let mu: Vec<f64> = (0..n).map(|i| (k - window..k).map(|j| ret[[j, i]]).sum::<f64>() / window as f64).collect();
            let cov: Vec<Vec<f64>> = (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            (k - window..k).map(|j| (ret[[j, a]] - mu[a]) * (ret[[j, b]] - mu[b])).sum::<f64>()
                                / (window - 1) as f64
                        })
                        .collect()
                })
                .collect();
            let d: Vec<f64> = (0..n).map(|i| ret[[k, i]] - mu[i]).collect();
            let x = solve(cov, d.clone())?;
            Some(d.iter().zip(&x).map(|(a, b)| a * b).sum())
        })
        .collect()
}

// ------------------------------------------------------------- accounting

/// Replays an env-generated log from the fills implied by consecutive
/// holdings and checks every accounting invariant. Returns the worst
/// relative deviation seen.
pub fn check_accounting(log: &EpisodeLog, fp: &FeaturePanel, cfg: &EnvConfig) -> Result<f64, String> {
    let w = log.window.clone().ok_or("log has no window")?;
    let prices = fp.prices();
    let (t_len, n) = log.holdings.dim();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let mut worst: f64 = 0.0;
    let mut cash = cfg.initial_capital;
    for t in 0..t_len {
        let p = prices.row(w.start + t);
        if t > 0 {
            let prev = prices.row(w.start + t - 1);
            for i in 0..n {
                let d = log.holdings[[t, i]] - log.holdings[[t - 1, i]];
                if d.unsigned_abs() > cfg.hmax as u64 {
                    return Err(format!("t={t} ticker {i}: position change {d} exceeds hmax"));
                }
                let gross = d as f64 * prev[i];
                cash -= gross + gross.abs() * cfg.cost_rate;
            }
        }
        worst = worst.max(rel(cash, log.cash[t]));
        if log.cash[t] < 0.0 {
            return Err(format!("t={t}: negative cash {}", log.cash[t]));
        }
        if let Some(i) = (0..n).find(|&i| log.holdings[[t, i]] < 0) {
            return Err(format!("t={t} ticker {i}: negative holdings"));
        }
        let value = log.cash[t] + (0..n).map(|i| log.holdings[[t, i]] as f64 * p[i]).sum::<f64>();
        worst = worst.max(rel(value, log.portfolio_value[t]));
    }
    let total: f64 = log.rewards.iter().sum();
    let expect = cfg.reward_scale * (log.portfolio_value[t_len - 1] - log.portfolio_value[0]);
    let tel = (total - expect).abs() / expect.abs().max(cfg.reward_scale * cfg.initial_capital * 1e-6);
    worst = worst.max(tel);
    Ok(worst)
}

// -------------------------------------------------------------- analytics

pub struct TradeOracle {
    pub trade_count: Vec<usize>,
    pub total_turnover: Vec<i64>,
    pub max_shares_held: Vec<i64>,
    pub stationarity_fraction: f64,
    pub mean_holding_run: f64,
}

/// Run-length scanner: walks each ticker's holdings and measures maximal
/// constant segments explicitly.
pub fn trade_oracle(h: &Array2<i64>) -> TradeOracle {
    let (t_len, n) = h.dim();
    let (mut count, mut turnover, mut max_held) = (vec![0; n], vec![0; n], vec![0; n]);
    let mut run_lengths = Vec::new();
    let mut still = 0usize;
    for i in 0..n {
        let mut start = 0;
        for t in 0..t_len {
            max_held[i] = max_held[i].max(h[[t, i]]);
            let ends = t + 1 == t_len || h[[t + 1, i]] != h[[t, i]];
            if ends {
                run_lengths.push(t + 1 - start);
                start = t + 1;
            }
            if t > 0 {
                if h[[t, i]] == h[[t - 1, i]] {
                    still += 1;
                } else {
                    count[i] += 1;
                    turnover[i] += (h[[t, i]] - h[[t - 1, i]]).abs();
                }
            }
        }
    }
    TradeOracle {
        trade_count: count,
        total_turnover: turnover,
        max_shares_held: max_held,
        stationarity_fraction: still as f64 / ((t_len - 1) * n) as f64,
        mean_holding_run: run_lengths.iter().sum::<usize>() as f64 / run_lengths.len() as f64,
    }
}

pub fn integral_oracle(h: &Array2<i64>) -> Vec<i64> {
    let (t_len, n) = h.dim();
    let mut out = vec![0i64; n];
    for t in 0..t_len {
        for (i, o) in out.iter_mut().enumerate() {
            *o += h[[t, i]];
        }
    }
    out
}

pub fn hhi_oracle(integral: &[i64]) -> Option<f64> {
    let total: i64 = integral.iter().sum();
    (total > 0).then(|| integral.iter().map(|&v| (v as f64 * v as f64) / (total as f64 * total as f64)).sum())
}

/// Random valid log with sticky holdings (so runs of varying length occur).
pub fn random_log(seed: u64, t_len: usize, n: usize) -> EpisodeLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Array2::<i64>::zeros((t_len, n));
    for i in 0..n {
        let stickiness: f64 = rng.random_range(0.0..1.0);
        for t in 1..t_len {
            h[[t, i]] = if rng.random_bool(stickiness) { h[[t - 1, i]] } else { rng.random_range(0..400) };
        }
    }
    EpisodeLog {
        agent_label: format!("random-{seed}"),
        tickers: (0..n).map(|i| format!("T{i}")).collect(),
        timestamps: (0..t_len as i64).map(|k| 1_700_000_000 + 3600 * k).collect(),
        actions: Array2::zeros((t_len, n)),
        holdings: h,
        cash: vec![0.0; t_len],
        portfolio_value: vec![0.0; t_len],
        rewards: (1..t_len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        config: None,
        window: None,
        seed: None,
    }
}

// -------------------------------------------------------------- gradients

/// Random small network plus batch for gradient checks.
pub fn random_problem(seed: u64) -> (MlpParams, RolloutBatch, Vec<f64>, A2CConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [rng.random_range(2..7), rng.random_range(2..6), rng.random_range(2..6), rng.random_range(1..4)];
    let mut params = MlpParams::init(sizes, rng.random_range(-1.0..0.5), &mut rng);
    // larger mean-head weights than the default init so tanh curvature matters
    for v in params.as_mut_slice() {
        *v += rng.random_range(-0.3..0.3);
    }
    let m = rng.random_range(1..6);
    let batch = RolloutBatch {
        obs: (0..m).map(|_| (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect()).collect(),
        actions: (0..m).map(|_| (0..sizes[3]).map(|_| rng.random_range(-1.5..1.5)).collect()).collect(),
        returns: (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let adv = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cfg = A2CConfig { value_coef: rng.random_range(0.1..1.0), entropy_coef: rng.random_range(0.0..0.1), ..Default::default() };
    (params, batch, adv, cfg)
}

/// Largest per-coordinate relative error between the analytic gradient and
/// central differences with step `eps`; denominators are floored at `floor`.
pub fn finite_difference_error(seed: u64, eps: f64, floor: f64) -> f64 {
    let (params, batch, adv, cfg) = random_problem(seed);
    let (_, grad) = a2c_loss(&params, &batch, &adv, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..params.len() {
        let mut plus = params.clone();
        plus.as_mut_slice()[k] += eps;
        let mut minus = params.clone();
        minus.as_mut_slice()[k] -= eps;
        let lp = a2c_loss(&plus, &batch, &adv, &cfg).unwrap().0.total;
        let lm = a2c_loss(&minus, &batch, &adv, &cfg).unwrap().0.total;
        let fd = (lp - lm) / (2.0 * eps);
        let err = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}
