use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvConfig, EnvError, TradingEnv};
use crate::agents::Policy;
use crate::indicators::FeaturePanel;
use crate::marketdata::{format_timestamp, parse_timestamp, Timestamp};

/// Per-bar record of one episode.
///
/// Row `t` holds the state on arriving at bar `t` (after the trade decided
/// at `t - 1` and repricing) and the action decided at `t`. The terminal row
/// carries a zero action. `rewards[k]` is the reward for the move from row
/// `k` to row `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub agent_label: String,
    pub tickers: Vec<String>,
    pub timestamps: Vec<Timestamp>,
    pub actions: Array2<f64>,
    pub holdings: Array2<i64>,
    pub cash: Vec<f64>,
    pub portfolio_value: Vec<f64>,
    pub rewards: Vec<f64>,
    pub config: Option<EnvConfig>,
    pub window: Option<Range<usize>>,
    pub seed: Option<u64>,
}

impl EpisodeLog {
    /// Number of rows (T′).
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn reward_scale(&self) -> f64 {
        self.config.as_ref().map_or(1.0, |c| c.reward_scale)
    }

    /// Structural consistency: matching lengths and non-negative holdings.
    pub fn validate(&self) -> Result<(), String> {
        let (t, n) = (self.len(), self.n_tickers());
        if t == 0 {
            return Err("log has no rows".into());
        }
        if self.actions.dim() != (t, n) || self.holdings.dim() != (t, n) {
            return Err(format!(
                "actions {:?} / holdings {:?} do not match ({t}, {n})",
                self.actions.dim(),
                self.holdings.dim()
            ));
        }
        if self.cash.len() != t || self.portfolio_value.len() != t {
            return Err("cash / portfolio_value length mismatch".into());
        }
        if self.rewards.len() != t - 1 {
            return Err(format!("expected {} rewards, found {}", t - 1, self.rewards.len()));
        }
        if self.holdings.iter().any(|&h| h < 0) {
            return Err("negative holdings".into());
        }
        if self.timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err("timestamps not strictly increasing".into());
        }
        Ok(())
    }

    pub fn header(&self) -> LogHeader {
        LogHeader {
            agent_label: self.agent_label.clone(),
            tickers: self.tickers.clone(),
            config: self.config.clone(),
            window: self.window.clone().map(|w| [w.start, w.end]),
            seed: self.seed,
        }
    }
}

/// Number of complete passes over a window of `window_len` bars that
/// `total_timesteps` environment steps cover.
pub fn complete_episodes(total_timesteps: usize, window_len: usize) -> usize {
    assert!(window_len >= 2, "an episode needs at least two bars");
    total_timesteps / (window_len - 1)
}

/// Runs one episode from reset to the last bar of `window`.
pub fn run_episode(
    policy: &mut dyn Policy,
    cfg: &EnvConfig,
    features: &FeaturePanel,
    window: Range<usize>,
    seed: u64,
) -> Result<EpisodeLog, EnvError> {
    let mut env = TradingEnv::new(cfg.clone(), features, window.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = features.n_tickers();
    let rows = window.len();
    let mut actions = Array2::zeros((rows, n));
    let mut holdings = Array2::zeros((rows, n));
    let mut cash = Vec::with_capacity(rows);
    let mut value = Vec::with_capacity(rows);
    let mut rewards = Vec::with_capacity(rows - 1);

    policy.reset();
    let mut obs = env.reset();
    for row in 0..rows {
        let state = env.state();
        cash.push(state.cash);
        value.push(state.value());
        for (i, &s) in state.shares.iter().enumerate() {
            holdings[[row, i]] = s;
        }
        if env.is_done() {
            break;
        }
        let action = policy.act(&obs, &mut rng).clamped();
        let out = env.step(&action)?;
        for (i, a) in action.0.iter().enumerate() {
            actions[[row, i]] = *a;
        }
        rewards.push(out.reward);
        obs = out.observation;
    }

    Ok(EpisodeLog {
        agent_label: policy.label().to_string(),
        tickers: features.tickers().to_vec(),
        timestamps: features.timestamps()[window.clone()].to_vec(),
        actions,
        holdings,
        cash,
        portfolio_value: value,
        rewards,
        config: Some(cfg.clone()),
        window: Some(window),
        seed: Some(seed),
    })
}

/// JSON sidecar accompanying an episode CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub agent_label: String,
    #[serde(default)]
    pub tickers: Vec<String>,
    #[serde(default)]
    pub config: Option<EnvConfig>,
    #[serde(default)]
    pub window: Option<[usize; 2]>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `t,timestamp,cash,portfolio_value,reward,action_*,hold_*` to
/// `csv_path` and the header to the same path with a `.json` extension.
/// Row 0 carries a reward of 0.
pub fn write_log(log: &EpisodeLog, csv_path: impl AsRef<Path>) -> std::io::Result<()> {
    let csv_path = csv_path.as_ref();
    let n = log.n_tickers();
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header: Vec<String> = ["t", "timestamp", "cash", "portfolio_value", "reward"].iter().map(|s| s.to_string()).collect();
    header.extend((0..n).map(|i| format!("action_{i}")));
    header.extend((0..n).map(|i| format!("hold_{i}")));
    w.write_record(&header)?;
    for t in 0..log.len() {
        let reward = if t == 0 { 0.0 } else { log.rewards[t - 1] };
        let mut rec = vec![
            t.to_string(),
            format_timestamp(log.timestamps[t]),
            log.cash[t].to_string(),
            log.portfolio_value[t].to_string(),
            reward.to_string(),
        ];
        rec.extend((0..n).map(|i| log.actions[[t, i]].to_string()));
        rec.extend((0..n).map(|i| log.holdings[[t, i]].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let mut json = serde_json::to_string_pretty(&log.header())?;
    json.push('\n');
    fs::write(sidecar_path(csv_path), json)
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {msg}", path.display()))
}

/// Reads a log written by [`write_log`] or produced externally in the same
/// schema (traces of agents trained elsewhere).
pub fn read_log(csv_path: impl AsRef<Path>) -> std::io::Result<EpisodeLog> {
    let csv_path = csv_path.as_ref();
    let side = sidecar_path(csv_path);
    let header: LogHeader = serde_json::from_str(&fs::read_to_string(&side)?).map_err(|e| bad(&side, e))?;

    let mut r = csv::Reader::from_path(csv_path)?;
    let cols = r.headers()?.clone();
    let n_actions = cols.iter().filter(|c| c.starts_with("action_")).count();
    let n_holds = cols.iter().filter(|c| c.starts_with("hold_")).count();
    if n_actions != n_holds {
        return Err(bad(csv_path, "action_/hold_ column counts differ"));
    }
    let n = n_actions;
    let find = |name: &str| cols.iter().position(|c| c == name).ok_or_else(|| bad(csv_path, format!("missing column {name}")));
    let (c_t, c_ts, c_cash, c_val, c_rew) = (find("t")?, find("timestamp")?, find("cash")?, find("portfolio_value")?, find("reward")?);
    let c_act = (0..n).map(|i| find(&format!("action_{i}"))).collect::<Result<Vec<_>, _>>()?;
    let c_hold = (0..n).map(|i| find(&format!("hold_{i}"))).collect::<Result<Vec<_>, _>>()?;

    let (mut timestamps, mut cash, mut value, mut rewards) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut acts, mut holds) = (Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let num = |c: usize| get(c).parse::<f64>().map_err(|_| bad(csv_path, format!("line {line}: bad number `{}`", get(c))));
        if get(c_t).parse::<usize>().ok() != Some(row) {
            return Err(bad(csv_path, format!("line {line}: expected t = {row}")));
        }
        timestamps.push(parse_timestamp(get(c_ts)).ok_or_else(|| bad(csv_path, format!("line {line}: bad timestamp")))?);
        cash.push(num(c_cash)?);
        value.push(num(c_val)?);
        if row > 0 {
            rewards.push(num(c_rew)?);
        }
        for &c in &c_act {
            acts.push(num(c)?);
        }
        for &c in &c_hold {
            holds.push(get(c).parse::<i64>().map_err(|_| bad(csv_path, format!("line {line}: bad holding `{}`", get(c))))?);
        }
    }
    let t = timestamps.len();
    let tickers = if header.tickers.is_empty() { (0..n).map(|i| format!("asset_{i}")).collect() } else { header.tickers };
    if tickers.len() != n {
        return Err(bad(csv_path, format!("header lists {} tickers, CSV has {n}", tickers.len())));
    }
    let log = EpisodeLog {
        agent_label: header.agent_label,
        tickers,
        timestamps,
        actions: Array2::from_shape_vec((t, n), acts).map_err(|e| bad(csv_path, e))?,
        holdings: Array2::from_shape_vec((t, n), holds).map_err(|e| bad(csv_path, e))?,
        cash,
        portfolio_value: value,
        rewards,
        config: header.config,
        window: header.window.map(|[a, b]| a..b),
        seed: header.seed,
    };
    log.validate().map_err(|e| bad(csv_path, e))?;
    Ok(log)
}
