use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::Serialize;

use super::turbulence::{mahalanobis_rows, returns};
use super::{bollinger, cci, dx, macd, rsi, sma, IndicatorConfig, IndicatorError, Masked};
use crate::marketdata::{format_timestamp, MarketPanel, Timestamp};

/// Per-ticker feature order inside the state vector.
pub const FEATURE_NAMES: [&str; N_FEATURES] = ["macd", "boll_ub", "boll_lb", "rsi", "cci", "dx", "sma_short", "sma_long"];
pub const N_FEATURES: usize = 8;

/// Indicator block for every (timestamp, ticker), plus close prices and
/// market-wide series. Cells before `warmup` may be undefined; from `warmup`
/// on every cell is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePanel {
    timestamps: Vec<Timestamp>,
    tickers: Vec<String>,
    prices: Array2<f64>,
    values: Array3<f64>,
    defined: Array3<bool>,
    aux: BTreeMap<String, Masked>,
    warmup: usize,
    config: IndicatorConfig,
}

impl FeaturePanel {
    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    /// Close prices, T × N.
    pub fn prices(&self) -> &Array2<f64> {
        &self.prices
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    pub fn config(&self) -> &IndicatorConfig {
        &self.config
    }

    /// Shape `(T, N, 8)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn get(&self, t: usize, ticker: usize, feature: usize) -> Option<f64> {
        self.defined[[t, ticker, feature]].then(|| self.values[[t, ticker, feature]])
    }

    /// Raw values; meaningful only where [`FeaturePanel::get`] is `Some`.
    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn aux(&self) -> &BTreeMap<String, Masked> {
        &self.aux
    }

    pub fn turbulence(&self) -> Option<&Masked> {
        self.aux.get("turbulence")
    }

    /// Appends the `N × 8` block at `t`, ticker-major, to `out`.
    pub fn extend_block(&self, t: usize, out: &mut Vec<f64>) {
        debug_assert!(t >= self.warmup);
        for i in 0..self.n_tickers() {
            out.extend((0..N_FEATURES).map(|f| self.values[[t, i, f]]));
        }
    }
}

/// Computes the eight-indicator block per ticker (in parallel across
/// tickers), turbulence, and carries auxiliary series such as VIX through.
///
/// Turbulence rows whose covariance stays singular after regularization are
/// left undefined here; turbulence never enters the state vector.
pub fn build_features(panel: &MarketPanel, cfg: &IndicatorConfig) -> Result<FeaturePanel, IndicatorError> {
    cfg.validate()?;
    let warmup = cfg.warmup();
    let (t_len, n) = (panel.len(), panel.n_tickers());
    if t_len <= warmup {
        return Err(IndicatorError::InsufficientHistory { needed: warmup, available: t_len });
    }

    let columns: Vec<[Masked; N_FEATURES]> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<[Masked; N_FEATURES], IndicatorError> {
            let close = panel.close().column(i).to_vec();
            let high = panel.high().column(i).to_vec();
            let low = panel.low().column(i).to_vec();
            let (ub, lb) = bollinger(&close, cfg)?;
            Ok([
                macd(&close, cfg)?,
                ub,
                lb,
                rsi(&close, cfg.rsi_period)?,
                cci(&high, &low, &close, cfg.cci_period)?,
                dx(&high, &low, &close, cfg.dx_period)?,
                sma(&close, cfg.sma_short)?,
                sma(&close, cfg.sma_long)?,
            ])
        })
        .collect::<Result<_, _>>()?;

    let mut values = Array3::zeros((t_len, n, N_FEATURES));
    let mut defined = Array3::from_elem((t_len, n, N_FEATURES), false);
    for (i, cols) in columns.iter().enumerate() {
        for (f, col) in cols.iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    values[[t, i, f]] = *v;
                    defined[[t, i, f]] = true;
                }
            }
        }
    }
    debug_assert!((warmup..t_len).all(|t| (0..n).all(|i| (0..N_FEATURES).all(|f| defined[[t, i, f]]))));

    let mut aux: BTreeMap<String, Masked> =
        panel.aux().iter().map(|(k, v)| (k.clone(), v.iter().map(|x| Some(*x)).collect())).collect();
    let mut turb = vec![None];
    turb.extend(mahalanobis_rows(&returns(panel.close()), cfg.turb_window)?.into_iter().map(|r| r.ok().flatten()));
    turb.truncate(t_len);
    aux.insert("turbulence".into(), turb);

    Ok(FeaturePanel {
        timestamps: panel.timestamps().to_vec(),
        tickers: panel.tickers().to_vec(),
        prices: panel.close().clone(),
        values,
        defined,
        aux,
        warmup,
        config: cfg.clone(),
    })
}

#[derive(Serialize)]
struct FeatureSidecar<'a> {
    config: &'a IndicatorConfig,
    warmup: usize,
    warmup_timestamp: String,
    tickers: &'a [String],
    n_timestamps: usize,
    feature_order: [&'static str; N_FEATURES],
}

/// Long-format CSV `timestamp,ticker,macd,...,sma_long` (undefined cells are
/// empty) and a JSON sidecar with the config and warmup index.
pub fn write_features(fp: &FeaturePanel, csv_path: &Path, json_path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["timestamp", "ticker"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for t in 0..fp.len() {
        let ts = format_timestamp(fp.timestamps[t]);
        for (i, ticker) in fp.tickers.iter().enumerate() {
            let mut rec = vec![ts.clone(), ticker.clone()];
            rec.extend((0..N_FEATURES).map(|f| fp.get(t, i, f).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    let sidecar = FeatureSidecar {
        config: &fp.config,
        warmup: fp.warmup,
        warmup_timestamp: format_timestamp(fp.timestamps[fp.warmup]),
        tickers: &fp.tickers,
        n_timestamps: fp.len(),
        feature_order: FEATURE_NAMES,
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    std::fs::write(json_path, json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(t: usize, n: usize) -> MarketPanel {
        let close = Array2::from_shape_fn((t, n), |(k, i)| 50.0 + 10.0 * ((k as f64) * 0.1 + i as f64).sin() + k as f64 * 0.05);
        let high = close.mapv(|c| c * 1.01);
        let low = close.mapv(|c| c * 0.99);
        MarketPanel::new(
            (0..n).map(|i| format!("T{i}")).collect(),
            (0..t as i64).map(|k| k * 3600).collect(),
            close.clone(),
            high,
            low,
            close,
            Array2::zeros((t, n)),
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn shape_and_warmup() {
        let fp = build_features(&synthetic(120, 2), &IndicatorConfig::default()).unwrap();
        assert_eq!(fp.shape(), (120, 2, 8));
        assert_eq!(fp.warmup(), 60);
        assert!(fp.get(59, 0, 7).is_none());
        assert!(fp.get(60, 1, 7).is_some());
        let mut block = Vec::new();
        fp.extend_block(60, &mut block);
        assert_eq!(block.len(), 16);
    }

    #[test]
    fn thirty_tickers_give_240_features() {
        let fp = build_features(&synthetic(80, 30), &IndicatorConfig::default()).unwrap();
        let mut block = Vec::new();
        fp.extend_block(fp.warmup(), &mut block);
        assert_eq!(block.len(), 240);
    }

    #[test]
    fn insufficient_history() {
        let r = build_features(&synthetic(60, 2), &IndicatorConfig::default());
        assert_eq!(r.unwrap_err(), IndicatorError::InsufficientHistory { needed: 60, available: 60 });
    }

    #[test]
    fn columns_match_standalone_ops() {
        let panel = synthetic(100, 3);
        let cfg = IndicatorConfig::default();
        let fp = build_features(&panel, &cfg).unwrap();
        for i in 0..3 {
            let c = panel.close().column(i).to_vec();
            let h = panel.high().column(i).to_vec();
            let l = panel.low().column(i).to_vec();
            let (ub, lb) = bollinger(&c, &cfg).unwrap();
            let expected = [
                macd(&c, &cfg).unwrap(),
                ub,
                lb,
                rsi(&c, 30).unwrap(),
                cci(&h, &l, &c, 30).unwrap(),
                dx(&h, &l, &c, 30).unwrap(),
                sma(&c, 30).unwrap(),
                sma(&c, 60).unwrap(),
            ];
            for (f, col) in expected.iter().enumerate() {
                for t in 0..100 {
                    assert_eq!(fp.get(t, i, f), col[t], "ticker {i} feature {f} t {t}");
                }
            }
        }
    }

    #[test]
    fn vix_and_turbulence_carried_in_aux() {
        let panel = synthetic(100, 2).with_aux("vix", vec![20.0; 100]).unwrap();
        let cfg = IndicatorConfig { turb_window: 10, ..Default::default() };
        let fp = build_features(&panel, &cfg).unwrap();
        assert_eq!(fp.aux()["vix"][5], Some(20.0));
        let turb = fp.turbulence().unwrap();
        assert_eq!(turb.len(), 100);
        assert_eq!(turb.iter().position(Option::is_some), Some(11));
    }

    #[test]
    fn export_writes_long_csv() {
        let fp = build_features(&synthetic(70, 2), &IndicatorConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (c, j) = (dir.path().join("f.csv"), dir.path().join("f.json"));
        write_features(&fp, &c, &j).unwrap();
        let text = std::fs::read_to_string(&c).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "timestamp,ticker,macd,boll_ub,boll_lb,rsi,cci,dx,sma_short,sma_long");
        assert_eq!(text.lines().count(), 1 + 70 * 2);
        let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
        assert_eq!(side["warmup"], 60);
    }
}
