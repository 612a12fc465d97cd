//! Portfolio trading environment.
//!
//! Observation layout (length `1 + 2N + 8N`, 301 for N = 30):
//! `[cash] ++ prices[0..N] ++ shares[0..N] ++ features[t]` where the feature
//! block is ticker-major in [`crate::indicators::FEATURE_NAMES`] order.
//!
//! Actions are `[-1, 1]^N`; component `i` requests `round(a[i]·hmax)` shares
//! (positive buys, negative sells). Sells execute first, then buys in
//! ascending ticker order, each clipped to what cash allows. The reward is
//! the change in portfolio value times `reward_scale`.

mod log;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{FeaturePanel, N_FEATURES};

pub use log::{complete_episodes, read_log, run_episode, write_log, EpisodeLog, LogHeader};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub initial_capital: f64,
    /// Maximum shares traded per ticker per step.
    pub hmax: u32,
    /// Proportional cost on traded value, charged on buys and sells.
    pub cost_rate: f64,
    pub reward_scale: f64,
    /// When set, a turbulence reading above this threshold liquidates all
    /// positions for that step.
    pub turbulence_gate: Option<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig { initial_capital: 1_000_000.0, hmax: 100, cost_rate: 0.001, reward_scale: 1.0, turbulence_gate: None }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.initial_capital > 0.0 && self.initial_capital.is_finite()) {
            return Err(EnvError::InvalidConfig("initial_capital must be positive".into()));
        }
        if self.hmax < 1 {
            return Err(EnvError::InvalidConfig("hmax must be >= 1".into()));
        }
        if !(0.0..=0.1).contains(&self.cost_rate) {
            return Err(EnvError::InvalidConfig("cost_rate must lie in [0, 0.1]".into()));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(EnvError::InvalidConfig("reward_scale must be positive".into()));
        }
        if self.turbulence_gate.is_some_and(|g| !g.is_finite()) {
            return Err(EnvError::InvalidConfig("turbulence_gate must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid env config: {0}")]
    InvalidConfig(String),
    #[error("window starts at {start}, before the feature warmup index {warmup}")]
    WindowBeforeWarmup { start: usize, warmup: usize },
    #[error("window {start}..{end} invalid for {len} timestamps (need at least two bars)")]
    InvalidWindow { start: usize, end: usize, len: usize },
    #[error("step called after the episode finished")]
    StepAfterDone,
    #[error("action has {got} components, expected {expected}")]
    ActionShape { expected: usize, got: usize },
    #[error("action component {index} is not finite")]
    NonFiniteAction { index: usize },
}

/// Length of the observation vector for `n` tickers.
pub const fn observation_len(n: usize) -> usize {
    1 + 2 * n + N_FEATURES * n
}

/// A per-ticker trade request in `[-1, 1]^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Action(pub Vec<f64>);

impl Action {
    pub fn zeros(n: usize) -> Self {
        Action(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn clamped(&self) -> Action {
        Action(self.0.iter().map(|a| a.clamp(-1.0, 1.0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    /// Index into the feature panel's time axis.
    pub t: usize,
    pub cash: f64,
    pub shares: Vec<i64>,
    pub prices: Vec<f64>,
}

impl PortfolioState {
    /// `cash + Σ shares·price`.
    pub fn value(&self) -> f64 {
        self.cash + self.shares.iter().zip(&self.prices).map(|(&s, &p)| s as f64 * p).sum::<f64>()
    }
}

/// What happened to one ticker during a step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fill {
    /// Signed executed shares (positive bought, negative sold).
    pub shares: i64,
    pub fee: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub fills: Vec<Fill>,
    /// True when the turbulence gate replaced the action with liquidation.
    pub liquidated: bool,
}

fn check_window(cfg: &EnvConfig, features: &FeaturePanel, window: &Range<usize>) -> Result<(), EnvError> {
    cfg.validate()?;
    if window.start < features.warmup() {
        return Err(EnvError::WindowBeforeWarmup { start: window.start, warmup: features.warmup() });
    }
    if window.end > features.len() || window.end < window.start + 2 {
        return Err(EnvError::InvalidWindow { start: window.start, end: window.end, len: features.len() });
    }
    Ok(())
}

/// Initial state at `window.start` with all capital in cash.
pub fn reset(cfg: &EnvConfig, features: &FeaturePanel, window: &Range<usize>) -> Result<(PortfolioState, Vec<f64>), EnvError> {
    check_window(cfg, features, window)?;
    let t = window.start;
    let state = PortfolioState {
        t,
        cash: cfg.initial_capital,
        shares: vec![0; features.n_tickers()],
        prices: features.prices().row(t).to_vec(),
    };
    let obs = encode_state(&state, features);
    Ok((state, obs))
}

pub fn encode_state(state: &PortfolioState, features: &FeaturePanel) -> Vec<f64> {
    let n = features.n_tickers();
    let mut obs = Vec::with_capacity(observation_len(n));
    obs.push(state.cash);
    obs.extend_from_slice(&state.prices);
    obs.extend(state.shares.iter().map(|&s| s as f64));
    features.extend_block(state.t, &mut obs);
    obs
}

/// Executes one action and advances to the next bar. `window_end` is the
/// exclusive end of the episode window; the episode is done on reaching its
/// last bar.
pub fn step(
    state: &PortfolioState,
    action: &Action,
    cfg: &EnvConfig,
    features: &FeaturePanel,
    window_end: usize,
) -> Result<(PortfolioState, StepOutcome), EnvError> {
    let n = features.n_tickers();
    if state.t + 1 >= window_end {
        return Err(EnvError::StepAfterDone);
    }
    if action.len() != n {
        return Err(EnvError::ActionShape { expected: n, got: action.len() });
    }
    if let Some(index) = action.0.iter().position(|a| !a.is_finite()) {
        return Err(EnvError::NonFiniteAction { index });
    }

    let v_old = state.value();
    let liquidate = match (cfg.turbulence_gate, features.turbulence()) {
        (Some(gate), Some(turb)) => turb[state.t].is_some_and(|x| x > gate),
        _ => false,
    };
    let hmax = cfg.hmax as f64;
    let desired: Vec<i64> = if liquidate {
        state.shares.iter().map(|&s| -s).collect()
    } else {
        action.clamped().0.iter().map(|a| (a * hmax).round() as i64).collect()
    };

    let mut next = state.clone();
    let mut fills = vec![Fill::default(); n];
    for i in 0..n {
        if desired[i] < 0 {
            let qty = (-desired[i]).min(next.shares[i]);
            if qty > 0 {
                let gross = qty as f64 * state.prices[i];
                let fee = gross * cfg.cost_rate;
                next.cash += gross - fee;
                next.shares[i] -= qty;
                fills[i] = Fill { shares: -qty, fee };
            }
        }
    }
    for i in 0..n {
        if desired[i] > 0 {
            let unit = state.prices[i] * (1.0 + cfg.cost_rate);
            let mut affordable = (next.cash / unit).floor().max(0.0) as i64;
            while affordable > 0 && affordable as f64 * unit > next.cash {
                affordable -= 1;
            }
            let qty = desired[i].min(affordable);
            if qty > 0 {
                let gross = qty as f64 * state.prices[i];
                let fee = gross * cfg.cost_rate;
                next.cash -= qty as f64 * unit;
                next.shares[i] += qty;
                fills[i] = Fill { shares: qty, fee };
            }
        }
    }

    next.t = state.t + 1;
    next.prices = features.prices().row(next.t).to_vec();
    let reward = cfg.reward_scale * (next.value() - v_old);
    let done = next.t + 1 >= window_end;
    let observation = encode_state(&next, features);
    Ok((next, StepOutcome { observation, reward, done, fills, liquidated: liquidate }))
}

/// Stateful wrapper over [`reset`] / [`step`] for one episode window.
#[derive(Debug, Clone)]
pub struct TradingEnv<'a> {
    cfg: EnvConfig,
    features: &'a FeaturePanel,
    window: Range<usize>,
    state: PortfolioState,
}

impl<'a> TradingEnv<'a> {
    pub fn new(cfg: EnvConfig, features: &'a FeaturePanel, window: Range<usize>) -> Result<Self, EnvError> {
        let (state, _) = reset(&cfg, features, &window)?;
        Ok(TradingEnv { cfg, features, window, state })
    }

    pub fn reset(&mut self) -> Vec<f64> {
        let (state, obs) = reset(&self.cfg, self.features, &self.window).expect("window validated in new");
        self.state = state;
        obs
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome, EnvError> {
        let (next, out) = step(&self.state, action, &self.cfg, self.features, self.window.end)?;
        self.state = next;
        Ok(out)
    }

    pub fn observation(&self) -> Vec<f64> {
        encode_state(&self.state, self.features)
    }

    pub fn state(&self) -> &PortfolioState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn window(&self) -> &Range<usize> {
        &self.window
    }

    pub fn features(&self) -> &'a FeaturePanel {
        self.features
    }

    pub fn is_done(&self) -> bool {
        self.state.t + 1 >= self.window.end
    }

    /// Steps per episode (window length minus one).
    pub fn episode_len(&self) -> usize {
        self.window.len() - 1
    }
}
