//! Behavioral measurements over episode logs: accumulated reward, integral
//! holding (share-steps), trade statistics, purchase concentration and a
//! continuous holder-vs-trader score.

mod export;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EpisodeLog;
use crate::marketdata::Timestamp;

pub use export::{
    read_report, write_comparison, write_report, COMPARISON_FILE, CUMULATIVE_REWARD_FILE, HOLDINGS_MATRIX_FILE,
    INTEGRAL_HOLDING_FILE, REPORT_FILE,
};

/// Printed next to trader scores; a convention, not a classification rule.
pub const TRADER_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("episode log has no rows")]
    EmptyLog,
    #[error("episode log has {rows} row(s); at least 2 are required")]
    LogTooShort { rows: usize },
    #[error("invalid episode log: {0}")]
    InvalidLog(String),
    #[error("reports cover different windows: `{first}` vs `{other}`")]
    WindowMismatch { first: String, other: String },
    #[error("comparison needs at least 2 reports, got {0}")]
    TooFewReports(usize),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check(log: &EpisodeLog) -> Result<(), AnalyticsError> {
    if log.is_empty() {
        return Err(AnalyticsError::EmptyLog);
    }
    log.validate().map_err(AnalyticsError::InvalidLog)
}

/// Running sum of rewards: `out[t] = Σ_{k≤t} rewards[k]`, one entry per
/// transition; the last entry equals `reward_scale·(V_last − V_0)`.
pub fn cumulative_reward(log: &EpisodeLog) -> Result<Vec<f64>, AnalyticsError> {
    check(log)?;
    let mut acc = 0.0;
    Ok(log.rewards.iter().map(|r| {
        acc += r;
        acc
    }).collect())
}

/// Time-sum of shares held per ticker (share-steps).
pub fn integral_holding(log: &EpisodeLog) -> Result<Vec<i64>, AnalyticsError> {
    check(log)?;
    Ok(log.holdings.columns().into_iter().map(|c| c.sum()).collect())
}

/// Time-sum of position value `shares·price` per ticker; `prices` is the
/// close matrix aligned with the log's rows.
pub fn integral_holding_value(log: &EpisodeLog, prices: &Array2<f64>) -> Result<Vec<f64>, AnalyticsError> {
    check(log)?;
    if prices.dim() != log.holdings.dim() {
        return Err(AnalyticsError::InvalidLog(format!(
            "price matrix {:?} does not match holdings {:?}",
            prices.dim(),
            log.holdings.dim()
        )));
    }
    Ok((0..log.n_tickers())
        .map(|i| log.holdings.column(i).iter().zip(prices.column(i)).map(|(&h, p)| h as f64 * p).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeStats {
    /// Steps with a nonzero position change, per ticker.
    pub trade_count: Vec<usize>,
    /// `Σ|Δshares|` per ticker.
    pub total_turnover: Vec<i64>,
    pub max_shares_held: Vec<i64>,
    /// Fraction of (step, ticker) pairs with no position change.
    pub stationarity_fraction: f64,
    /// Mean length, in bars, of maximal constant-position runs pooled over
    /// all tickers.
    pub mean_holding_run: f64,
}

pub fn trade_stats(log: &EpisodeLog) -> Result<TradeStats, AnalyticsError> {
    check(log)?;
    let (t_len, n) = log.holdings.dim();
    if t_len < 2 {
        return Err(AnalyticsError::LogTooShort { rows: t_len });
    }
    let mut trade_count = vec![0usize; n];
    let mut total_turnover = vec![0i64; n];
    let mut max_shares_held = vec![0i64; n];
    let mut runs = 0usize;
    for (i, col) in log.holdings.columns().into_iter().enumerate() {
        runs += 1;
        max_shares_held[i] = col.iter().copied().max().unwrap_or(0);
        for w in col.windows(2) {
            let d = w[1] - w[0];
            if d != 0 {
                trade_count[i] += 1;
                total_turnover[i] += d.abs();
                runs += 1;
            }
        }
    }
    let pairs = (t_len - 1) * n;
    let changes: usize = trade_count.iter().sum();
    let stationarity_fraction = if pairs == 0 { 1.0 } else { (pairs - changes) as f64 / pairs as f64 };
    let mean_holding_run = if runs == 0 { 0.0 } else { (t_len * n) as f64 / runs as f64 };
    Ok(TradeStats { trade_count, total_turnover, max_shares_held, stationarity_fraction, mean_holding_run })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityStats {
    /// Tickers with nonzero integral holding.
    pub active_tickers: usize,
    /// Herfindahl index of normalized integral holdings; absent when
    /// nothing was ever held.
    pub hhi: Option<f64>,
    pub top1_share: Option<f64>,
}

pub fn diversity_stats(log: &EpisodeLog) -> Result<DiversityStats, AnalyticsError> {
    Ok(diversity_from_integral(&integral_holding(log)?))
}

fn diversity_from_integral(integral: &[i64]) -> DiversityStats {
    let active_tickers = integral.iter().filter(|&&v| v != 0).count();
    let total: i64 = integral.iter().sum();
    if total <= 0 {
        return DiversityStats { active_tickers, hhi: None, top1_share: None };
    }
    let total = total as f64;
    let hhi = integral.iter().map(|&v| (v as f64 / total).powi(2)).sum();
    let top = integral.iter().copied().max().unwrap_or(0) as f64 / total;
    DiversityStats { active_tickers, hhi: Some(hhi), top1_share: Some(top) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorReport {
    pub agent_label: String,
    pub tickers: Vec<String>,
    pub timestamps: Vec<Timestamp>,
    pub window: Option<[usize; 2]>,
    pub cumulative_reward: Vec<f64>,
    pub integral_holding: Vec<i64>,
    pub holdings_matrix: Array2<i64>,
    pub trade_stats: TradeStats,
    pub diversity: DiversityStats,
    /// `1 − stationarity_fraction`.
    pub trader_score: f64,
}

impl BehaviorReport {
    pub fn final_reward(&self) -> f64 {
        self.cumulative_reward.last().copied().unwrap_or(0.0)
    }

    /// Consistency of a report read from disk.
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let bad = |m: String| Err(AnalyticsError::MalformedReport(m));
        let (t, n) = self.holdings_matrix.dim();
        if self.tickers.len() != n || self.integral_holding.len() != n {
            return bad(format!("{} tickers, {} integral holdings, holdings matrix has {n} columns", self.tickers.len(), self.integral_holding.len()));
        }
        if self.timestamps.len() != t {
            return bad(format!("{} timestamps for {t} holdings rows", self.timestamps.len()));
        }
        if self.cumulative_reward.len() + 1 != t {
            return bad(format!("{} cumulative rewards for {t} rows", self.cumulative_reward.len()));
        }
        if !(0.0..=1.0).contains(&self.trader_score) {
            return bad(format!("trader_score {} outside [0, 1]", self.trader_score));
        }
        Ok(())
    }
}

pub fn behavior_profile(log: &EpisodeLog) -> Result<BehaviorReport, AnalyticsError> {
    let trade_stats = trade_stats(log)?;
    let integral = integral_holding(log)?;
    Ok(BehaviorReport {
        agent_label: log.agent_label.clone(),
        tickers: log.tickers.clone(),
        timestamps: log.timestamps.clone(),
        window: log.window.clone().map(|w| [w.start, w.end]),
        cumulative_reward: cumulative_reward(log)?,
        diversity: diversity_from_integral(&integral),
        integral_holding: integral,
        holdings_matrix: log.holdings.clone(),
        trader_score: 1.0 - trade_stats.stationarity_fraction,
        trade_stats,
    })
}

/// Profiles several logs in parallel, preserving order.
pub fn behavior_profiles(logs: &[EpisodeLog]) -> Result<Vec<BehaviorReport>, AnalyticsError> {
    logs.par_iter().map(behavior_profile).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub agent_label: String,
    pub final_reward: f64,
    pub trader_score: f64,
    pub hhi: Option<f64>,
    pub max_shares_held: i64,
    pub mean_holding_run: f64,
    /// Competition ranks (1 = highest value, ties share a rank); an absent
    /// HHI ranks below every present one.
    pub rank_final_reward: usize,
    pub rank_trader_score: usize,
    pub rank_hhi: usize,
    pub rank_max_shares_held: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub trader_threshold: f64,
}

fn ranks(values: &[f64]) -> Vec<usize> {
    values.iter().map(|v| 1 + values.iter().filter(|w| *w > v).count()).collect()
}

pub fn compare_profiles(reports: &[BehaviorReport]) -> Result<Comparison, AnalyticsError> {
    if reports.len() < 2 {
        return Err(AnalyticsError::TooFewReports(reports.len()));
    }
    let first = &reports[0];
    for r in &reports[1..] {
        let same_window = match (first.window, r.window) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        };
        if !same_window || r.timestamps != first.timestamps {
            let describe = |x: &BehaviorReport| {
                format!(
                    "{} [{} .. {}, {} rows]",
                    x.agent_label,
                    x.timestamps.first().map_or(String::new(), |&t| crate::marketdata::format_timestamp(t)),
                    x.timestamps.last().map_or(String::new(), |&t| crate::marketdata::format_timestamp(t)),
                    x.timestamps.len()
                )
            };
            return Err(AnalyticsError::WindowMismatch { first: describe(first), other: describe(r) });
        }
    }
    let finals: Vec<f64> = reports.iter().map(BehaviorReport::final_reward).collect();
    let scores: Vec<f64> = reports.iter().map(|r| r.trader_score).collect();
    let hhis: Vec<f64> = reports.iter().map(|r| r.diversity.hhi.unwrap_or(f64::NEG_INFINITY)).collect();
    let maxes: Vec<i64> = reports.iter().map(|r| r.trade_stats.max_shares_held.iter().copied().max().unwrap_or(0)).collect();
    let max_f: Vec<f64> = maxes.iter().map(|&m| m as f64).collect();
    let (rf, rt, rh, rm) = (ranks(&finals), ranks(&scores), ranks(&hhis), ranks(&max_f));
    let rows = reports
        .iter()
        .enumerate()
        .map(|(k, r)| ComparisonRow {
            agent_label: r.agent_label.clone(),
            final_reward: finals[k],
            trader_score: scores[k],
            hhi: r.diversity.hhi,
            max_shares_held: maxes[k],
            mean_holding_run: r.trade_stats.mean_holding_run,
            rank_final_reward: rf[k],
            rank_trader_score: rt[k],
            rank_hhi: rh[k],
            rank_max_shares_held: rm[k],
        })
        .collect();
    Ok(Comparison { rows, trader_threshold: TRADER_THRESHOLD })
}
