use std::collections::{BTreeMap, BTreeSet, HashSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{AuxSeries, Bar, BarSeries, MarketDataError, MarketPanel, Timestamp};

/// How timestamps missing from some inputs are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillPolicy {
    /// Keep only timestamps present in every input.
    Intersect,
    /// Union of bar timestamps, gaps filled from the last observation. The
    /// panel starts at the latest first observation across inputs.
    #[default]
    ForwardFill,
}

/// Aligns per-ticker bars and auxiliary series onto one time axis.
///
/// A forward-filled bar is flat at the previous close with zero volume.
pub fn align_panel(series: &[BarSeries], aux: &[AuxSeries], fill: FillPolicy) -> Result<MarketPanel, MarketDataError> {
    if series.is_empty() {
        return Err(MarketDataError::EmptyInput);
    }
    let mut seen = HashSet::new();
    for s in series {
        if !seen.insert(s.ticker.as_str()) {
            return Err(MarketDataError::DuplicateTicker(s.ticker.clone()));
        }
        if s.is_empty() {
            return Err(MarketDataError::UnfillableLeadingGap { name: s.ticker.clone() });
        }
    }

    let axis: Vec<Timestamp> = match fill {
        FillPolicy::Intersect => {
            let mut common: BTreeSet<Timestamp> = series[0].timestamps().collect();
            for s in &series[1..] {
                let other: HashSet<Timestamp> = s.timestamps().collect();
                common.retain(|t| other.contains(t));
            }
            for a in aux {
                let other: HashSet<Timestamp> = a.timestamps.iter().copied().collect();
                common.retain(|t| other.contains(t));
            }
            common.into_iter().collect()
        }
        FillPolicy::ForwardFill => {
            let union: BTreeSet<Timestamp> = series.iter().flat_map(|s| s.timestamps()).collect();
            let last = *union.last().expect("non-empty series");
            let mut start = series.iter().map(|s| s.bars()[0].timestamp).max().expect("non-empty");
            for a in aux {
                match a.timestamps.first() {
                    Some(&first) if first <= last => start = start.max(first),
                    _ => return Err(MarketDataError::UnfillableLeadingGap { name: a.name.clone() }),
                }
            }
            union.range(start..).copied().collect()
        }
    };
    if axis.is_empty() {
        return Err(MarketDataError::EmptyIntersection);
    }

    let (t_len, n) = (axis.len(), series.len());
    let mut open = Array2::zeros((t_len, n));
    let mut high = Array2::zeros((t_len, n));
    let mut low = Array2::zeros((t_len, n));
    let mut close = Array2::zeros((t_len, n));
    let mut volume = Array2::zeros((t_len, n));
    for (i, s) in series.iter().enumerate() {
        let bars = s.bars();
        let mut cursor = 0usize;
        let mut last: Option<&Bar> = None;
        for (t, &ts) in axis.iter().enumerate() {
            while cursor < bars.len() && bars[cursor].timestamp <= ts {
                last = Some(&bars[cursor]);
                cursor += 1;
            }
            let prev = last.ok_or_else(|| MarketDataError::UnfillableLeadingGap { name: s.ticker.clone() })?;
            let bar = if prev.timestamp == ts { *prev } else { Bar::flat(ts, prev.close) };
            open[[t, i]] = bar.open;
            high[[t, i]] = bar.high;
            low[[t, i]] = bar.low;
            close[[t, i]] = bar.close;
            volume[[t, i]] = bar.volume;
        }
    }

    let mut aux_out = BTreeMap::new();
    for a in aux {
        let mut values = Vec::with_capacity(t_len);
        let mut cursor = 0usize;
        let mut last: Option<f64> = None;
        for &ts in &axis {
            while cursor < a.timestamps.len() && a.timestamps[cursor] <= ts {
                last = Some(a.values[cursor]);
                cursor += 1;
            }
            values.push(last.ok_or_else(|| MarketDataError::UnfillableLeadingGap { name: a.name.clone() })?);
        }
        aux_out.insert(a.name.clone(), values);
    }

    MarketPanel::new(
        series.iter().map(|s| s.ticker.clone()).collect(),
        axis,
        open,
        high,
        low,
        close,
        volume,
        aux_out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(ticker: &str, ts: &[i64]) -> BarSeries {
        let bars = ts
            .iter()
            .map(|&t| Bar { timestamp: t, open: 10.0 + t as f64, high: 11.0 + t as f64, low: 9.0 + t as f64, close: 10.5 + t as f64, volume: 1.0 })
            .collect();
        BarSeries::new(ticker, bars).unwrap()
    }

    #[test]
    fn identical_axes_keep_length() {
        let a = series("A", &[1, 2, 3]);
        let b = series("B", &[1, 2, 3]);
        for fill in [FillPolicy::Intersect, FillPolicy::ForwardFill] {
            assert_eq!(align_panel(&[a.clone(), b.clone()], &[], fill).unwrap().len(), 3);
        }
    }

    #[test]
    fn intersect_drops_missing() {
        let p = align_panel(&[series("A", &[1, 2, 3]), series("B", &[2, 3])], &[], FillPolicy::Intersect).unwrap();
        assert_eq!(p.timestamps(), &[2, 3]);
    }

    #[test]
    fn intersect_can_be_empty() {
        let r = align_panel(&[series("A", &[1, 2]), series("B", &[3, 4])], &[], FillPolicy::Intersect);
        assert!(matches!(r, Err(MarketDataError::EmptyIntersection)));
    }

    #[test]
    fn forward_fill_bounds_start_and_fills_flat() {
        let p = align_panel(&[series("A", &[1, 2, 3, 4]), series("B", &[2, 4])], &[], FillPolicy::ForwardFill).unwrap();
        assert_eq!(p.timestamps(), &[2, 3, 4]);
        let filled = p.bar(1, 1);
        assert_eq!(filled.close, 12.5);
        assert_eq!((filled.open, filled.high, filled.low, filled.volume), (12.5, 12.5, 12.5, 0.0));
    }

    #[test]
    fn aux_is_forward_filled_and_can_be_unfillable() {
        let vix = AuxSeries { name: "vix".into(), timestamps: vec![1, 3], values: vec![20.0, 25.0] };
        let p = align_panel(&[series("A", &[1, 2, 3])], &[vix], FillPolicy::ForwardFill).unwrap();
        assert_eq!(p.aux()["vix"], vec![20.0, 20.0, 25.0]);

        let late = AuxSeries { name: "vix".into(), timestamps: vec![9], values: vec![1.0] };
        let r = align_panel(&[series("A", &[1, 2, 3])], &[late], FillPolicy::ForwardFill);
        assert!(matches!(r, Err(MarketDataError::UnfillableLeadingGap { .. })));
    }

    #[test]
    fn duplicate_tickers_rejected() {
        let r = align_panel(&[series("A", &[1]), series("A", &[1])], &[], FillPolicy::Intersect);
        assert!(matches!(r, Err(MarketDataError::DuplicateTicker(_))));
        assert!(matches!(align_panel(&[], &[], FillPolicy::Intersect), Err(MarketDataError::EmptyInput)));
    }

    fn gap_pattern() -> impl Strategy<Value = Vec<Vec<bool>>> {
        prop::collection::vec(prop::collection::vec(any::<bool>(), 40), 1..5)
    }

    proptest! {
        #[test]
        fn intersect_matches_set_oracle(masks in gap_pattern()) {
            let inputs: Vec<BarSeries> = masks
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let ts: Vec<i64> = m.iter().enumerate().filter(|(_, &keep)| keep).map(|(t, _)| t as i64).collect();
                    series(&format!("T{i}"), &ts)
                })
                .collect();
            let oracle: Vec<i64> = (0..40i64).filter(|&t| masks.iter().all(|m| m[t as usize])).collect();
            match align_panel(&inputs, &[], FillPolicy::Intersect) {
                Ok(p) => prop_assert_eq!(p.timestamps(), oracle.as_slice()),
                Err(_) => prop_assert!(oracle.is_empty()),
            }
        }

        #[test]
        fn forward_fill_matches_scan_oracle(masks in gap_pattern()) {
            prop_assume!(masks.iter().all(|m| m.iter().any(|&b| b)));
            let inputs: Vec<BarSeries> = masks
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let ts: Vec<i64> = m.iter().enumerate().filter(|(_, &keep)| keep).map(|(t, _)| t as i64).collect();
                    series(&format!("T{i}"), &ts)
                })
                .collect();
            let p = align_panel(&inputs, &[], FillPolicy::ForwardFill).unwrap();
            for (t, &ts) in p.timestamps().iter().enumerate() {
                for (i, m) in masks.iter().enumerate() {
                    // most recent observed close at or before ts, by direct scan
                    let mut expected = None;
                    for k in 0..=ts as usize {
                        if m[k] {
                            expected = Some(10.5 + k as f64);
                        }
                    }
                    prop_assert_eq!(Some(p.close()[[t, i]]), expected);
                    prop_assert!(p.bar(t, i).validate().is_ok());
                }
            }
        }
    }
}
