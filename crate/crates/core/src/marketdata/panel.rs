use std::collections::BTreeMap;
use std::path::PathBuf;

use ndarray::{s, Array2};

use super::{format_timestamp, Bar, MarketDataError, Timestamp};

/// Time-aligned OHLCV matrices (T rows × N tickers) over a shared axis.
///
/// Immutable after construction; the ticker order is fixed and used by every
/// downstream consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPanel {
    tickers: Vec<String>,
    timestamps: Vec<Timestamp>,
    open: Array2<f64>,
    high: Array2<f64>,
    low: Array2<f64>,
    close: Array2<f64>,
    volume: Array2<f64>,
    aux: BTreeMap<String, Vec<f64>>,
}

impl MarketPanel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tickers: Vec<String>,
        timestamps: Vec<Timestamp>,
        open: Array2<f64>,
        high: Array2<f64>,
        low: Array2<f64>,
        close: Array2<f64>,
        volume: Array2<f64>,
        aux: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, MarketDataError> {
        let shape = (timestamps.len(), tickers.len());
        for (name, m) in [("open", &open), ("high", &high), ("low", &low), ("close", &close), ("volume", &volume)] {
            if m.dim() != shape {
                return Err(MarketDataError::Shape(format!("{name} is {:?}, expected {shape:?}", m.dim())));
            }
        }
        for (name, v) in &aux {
            if v.len() != shape.0 {
                return Err(MarketDataError::Shape(format!("aux `{name}` has length {}, expected {}", v.len(), shape.0)));
            }
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MarketDataError::Shape("timestamps are not strictly increasing".into()));
        }
        let panel = MarketPanel { tickers, timestamps, open, high, low, close, volume, aux };
        for t in 0..shape.0 {
            for i in 0..shape.1 {
                panel.bar(t, i).validate().map_err(|reason| MarketDataError::InvalidBar {
                    path: PathBuf::from(&panel.tickers[i]),
                    row: t as u64 + 1,
                    reason,
                })?;
            }
        }
        Ok(panel)
    }

    /// Builds a panel of flat zero-volume bars from a close matrix.
    pub fn from_closes(tickers: Vec<String>, timestamps: Vec<Timestamp>, close: Array2<f64>) -> Result<Self, MarketDataError> {
        let volume = Array2::zeros(close.dim());
        Self::new(tickers, timestamps, close.clone(), close.clone(), close.clone(), close, volume, BTreeMap::new())
    }

    pub fn with_aux(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self, MarketDataError> {
        let name = name.into();
        if values.len() != self.len() {
            return Err(MarketDataError::Shape(format!("aux `{name}` has length {}, expected {}", values.len(), self.len())));
        }
        self.aux.insert(name, values);
        Ok(self)
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    /// Number of timestamps (T).
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Number of tickers (N).
    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn open(&self) -> &Array2<f64> {
        &self.open
    }

    pub fn high(&self) -> &Array2<f64> {
        &self.high
    }

    pub fn low(&self) -> &Array2<f64> {
        &self.low
    }

    pub fn close(&self) -> &Array2<f64> {
        &self.close
    }

    pub fn volume(&self) -> &Array2<f64> {
        &self.volume
    }

    pub fn aux(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.aux
    }

    pub fn bar(&self, t: usize, i: usize) -> Bar {
        Bar {
            timestamp: self.timestamps[t],
            open: self.open[[t, i]],
            high: self.high[[t, i]],
            low: self.low[[t, i]],
            close: self.close[[t, i]],
            volume: self.volume[[t, i]],
        }
    }

    /// Rows `range` as a new panel.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> MarketPanel {
        let r = s![range.clone(), ..];
        MarketPanel {
            tickers: self.tickers.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            open: self.open.slice(r).to_owned(),
            high: self.high.slice(r).to_owned(),
            low: self.low.slice(r).to_owned(),
            close: self.close.slice(r).to_owned(),
            volume: self.volume.slice(r).to_owned(),
            aux: self.aux.iter().map(|(k, v)| (k.clone(), v[range.clone()].to_vec())).collect(),
        }
    }

    /// Index of the first timestamp `>= ts` (T when none).
    pub fn index_at_or_after(&self, ts: Timestamp) -> usize {
        self.timestamps.partition_point(|&x| x < ts)
    }
}

/// Partitions a panel at `boundary`: rows `< boundary` go to the first
/// panel, rows `>= boundary` (including the boundary bar) to the second.
pub fn split_panel(panel: &MarketPanel, boundary: Timestamp) -> Result<(MarketPanel, MarketPanel), MarketDataError> {
    let out_of_range = || MarketDataError::BoundaryOutOfRange {
        boundary: format_timestamp(boundary),
        first: panel.timestamps.first().map(|t| format_timestamp(*t)).unwrap_or_default(),
        last: panel.timestamps.last().map(|t| format_timestamp(*t)).unwrap_or_default(),
    };
    let (Some(&first), Some(&last)) = (panel.timestamps.first(), panel.timestamps.last()) else {
        return Err(out_of_range());
    };
    if boundary <= first || boundary > last {
        return Err(out_of_range());
    }
    let k = panel.index_at_or_after(boundary);
    Ok((panel.slice_rows(0..k), panel.slice_rows(k..panel.len())))
}
