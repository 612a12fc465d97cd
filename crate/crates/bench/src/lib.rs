//! Deterministic fixtures shared by the benchmarks.

use holdtrade_core::indicators::{build_features, FeaturePanel, IndicatorConfig};
use holdtrade_core::marketdata::MarketPanel;
use ndarray::Array2;

/// Hourly closes for `n` tickers: distinct drifts plus a slow oscillation.
pub fn synthetic_panel(t: usize, n: usize) -> MarketPanel {
    let close = Array2::from_shape_fn((t, n), |(k, i)| {
        let k = k as f64;
        let i = i as f64;
        (40.0 + 5.0 * i) * (1.0 + 0.00002 * (i - n as f64 / 2.0)).powf(k) + (0.05 * k + i).sin()
    });
    MarketPanel::from_closes((0..n).map(|i| format!("T{i:02}")).collect(), (0..t as i64).map(|k| k * 3600).collect(), close)
        .expect("synthetic panel is well formed")
}

pub fn synthetic_features(t: usize, n: usize) -> FeaturePanel {
    build_features(&synthetic_panel(t, n), &IndicatorConfig::default()).expect("enough history")
}
