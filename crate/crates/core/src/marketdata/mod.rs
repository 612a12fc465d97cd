//! OHLCV ingestion, validation, panel alignment and train/test partitioning.
//!
//! Per-ticker CSV files (`timestamp,open,high,low,close,volume`) and
//! market-wide auxiliary series (`timestamp,value`, e.g. VIX) are loaded into
//! [`BarSeries`] / [`AuxSeries`], then aligned onto one shared time axis as a
//! [`MarketPanel`]. Timestamps are UTC epoch seconds throughout.

mod align;
mod cache;
mod load;
mod panel;
mod time;

use std::path::PathBuf;

use thiserror::Error;

pub use align::{align_panel, FillPolicy};
pub use cache::{read_panel_cache, write_panel_cache, write_panel_csv, PANEL_CACHE_FILE, PANEL_CSV_FILE};
pub use load::{load_bars, load_bars_many, load_long_bars, load_series, write_bars, write_series, BarSchema};
pub use panel::{split_panel, MarketPanel};
pub use time::{format_timestamp, parse_timestamp, Timestamp};

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub timestamp: Timestamp,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    /// Checks price positivity, volume non-negativity and OHLC ordering.
    pub fn validate(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be finite and positive".into());
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err("volume must be finite and non-negative".into());
        }
        if self.low > self.high {
            return Err(format!("high {} < low {}", self.high, self.low));
        }
        if self.open < self.low || self.open > self.high {
            return Err(format!("open {} outside [low, high]", self.open));
        }
        if self.close < self.low || self.close > self.high {
            return Err(format!("close {} outside [low, high]", self.close));
        }
        Ok(())
    }

    /// A zero-volume bar with all four prices equal to `price`.
    pub fn flat(timestamp: Timestamp, price: f64) -> Self {
        Bar { timestamp, open: price, high: price, low: price, close: price, volume: 0.0 }
    }
}

/// Bars of one ticker with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub ticker: String,
    bars: Vec<Bar>,
}

impl BarSeries {
    pub fn new(ticker: impl Into<String>, bars: Vec<Bar>) -> Result<Self, MarketDataError> {
        let ticker = ticker.into();
        for (i, bar) in bars.iter().enumerate() {
            bar.validate().map_err(|reason| MarketDataError::InvalidBar {
                path: PathBuf::from(&ticker),
                row: i as u64 + 1,
                reason,
            })?;
        }
        if let Some(i) = bars.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(MarketDataError::DuplicateTimestamp {
                path: PathBuf::from(&ticker),
                row: i as u64 + 2,
                timestamp: format_timestamp(bars[i + 1].timestamp),
            });
        }
        Ok(BarSeries { ticker, bars })
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        self.bars.iter().map(|b| b.timestamp)
    }
}

/// A named market-wide series such as VIX.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSeries {
    pub name: String,
    pub timestamps: Vec<Timestamp>,
    pub values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("{}: file not found", path.display())]
    FileNotFound { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: missing column `{column}`", path.display())]
    SchemaMismatch { path: PathBuf, column: String },
    #[error("{}: row {row}: cannot parse {column} value `{value}`", path.display())]
    Parse { path: PathBuf, row: u64, column: String, value: String },
    #[error("{}: row {row}: invalid bar: {reason}", path.display())]
    InvalidBar { path: PathBuf, row: u64, reason: String },
    #[error("{}: row {row}: duplicate timestamp {timestamp}", path.display())]
    DuplicateTimestamp { path: PathBuf, row: u64, timestamp: String },
    #[error("{}: no data rows", path.display())]
    EmptyFile { path: PathBuf },
    #[error("no input series to align")]
    EmptyInput,
    #[error("ticker `{0}` given more than once")]
    DuplicateTicker(String),
    #[error("inputs share no common timestamps")]
    EmptyIntersection,
    #[error("series `{name}` has no observation at or before the last panel timestamp")]
    UnfillableLeadingGap { name: String },
    #[error("split boundary {boundary} is not inside the panel range ({first}, {last}]")]
    BoundaryOutOfRange { boundary: String, first: String, last: String },
    #[error("panel shape mismatch: {0}")]
    Shape(String),
    #[error("{}: corrupt panel cache: {reason}", path.display())]
    CorruptCache { path: PathBuf, reason: String },
}
