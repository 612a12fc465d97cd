//! Technical indicators and the per-ticker feature block of the state vector.
//!
//! Every indicator maps a length-T input to a length-T output of
//! `Option<f64>`; `None` marks the warmup prefix where the window is not yet
//! filled. Sentinel values are never used.

mod features;
mod oscillators;
mod trend;
mod turbulence;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{build_features, write_features, FeaturePanel, FEATURE_NAMES, N_FEATURES};
pub use oscillators::{cci, dx, rsi};
pub use trend::{bollinger, ema, macd, macd_lines, sma, MacdLines};
pub use turbulence::{mahalanobis_series, returns, turbulence};

/// Indicator output with an explicit definedness mask.
pub type Masked = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub rsi_period: usize,
    pub cci_period: usize,
    pub dx_period: usize,
    pub sma_short: usize,
    pub sma_long: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub boll_period: usize,
    pub boll_k: f64,
    pub turb_window: usize,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            rsi_period: 30,
            cci_period: 30,
            dx_period: 30,
            sma_short: 30,
            sma_long: 60,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            boll_period: 20,
            boll_k: 2.0,
            turb_window: 252,
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let periods = [
            ("rsi_period", self.rsi_period),
            ("cci_period", self.cci_period),
            ("dx_period", self.dx_period),
            ("sma_short", self.sma_short),
            ("sma_long", self.sma_long),
            ("macd_fast", self.macd_fast),
            ("macd_slow", self.macd_slow),
            ("macd_signal", self.macd_signal),
            ("turb_window", self.turb_window),
        ];
        for (name, value) in periods {
            if value == 0 {
                return Err(IndicatorError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if self.boll_period < 2 {
            return Err(IndicatorError::InvalidConfig("boll_period must be >= 2".into()));
        }
        if self.macd_fast >= self.macd_slow {
            return Err(IndicatorError::InvalidConfig(format!(
                "macd_fast ({}) must be < macd_slow ({})",
                self.macd_fast, self.macd_slow
            )));
        }
        if !(self.boll_k >= 0.0 && self.boll_k.is_finite()) {
            return Err(IndicatorError::InvalidConfig("boll_k must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// First index at which every feature-block indicator is defined.
    pub fn warmup(&self) -> usize {
        [
            self.macd_slow - 1,
            self.boll_period - 1,
            self.rsi_period,
            self.cci_period - 1,
            self.dx_period,
            self.sma_short,
            self.sma_long,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("window {window} too large for a series of length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("period must be >= {min}, got {period}")]
    InvalidPeriod { period: usize, min: usize },
    #[error("invalid indicator config: {0}")]
    InvalidConfig(String),
    #[error("input series lengths differ")]
    LengthMismatch,
    #[error("covariance singular at index {t} even after regularization")]
    SingularCovariance { t: usize },
    #[error("insufficient history: {available} timestamps, need more than {needed}")]
    InsufficientHistory { needed: usize, available: usize },
}

fn check_period(n: usize, min: usize) -> Result<(), IndicatorError> {
    if n < min {
        Err(IndicatorError::InvalidPeriod { period: n, min })
    } else {
        Ok(())
    }
}
