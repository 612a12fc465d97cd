mod support;

use holdtrade_core::agents::{BuyAndHold, Hold, RandomPolicy};
use holdtrade_core::analytics::{
    behavior_profile, compare_profiles, cumulative_reward, diversity_stats, integral_holding, trade_stats,
};
use holdtrade_core::env::{run_episode, EnvConfig};
use holdtrade_core::indicators::{build_features, IndicatorConfig};
use holdtrade_core::marketdata::MarketPanel;
use ndarray::{s, Array2};
use proptest::prelude::*;
use support::oracles::{hhi_oracle, integral_oracle, random_log, random_ohlc, trade_oracle};

#[test]
fn analytics_match_oracles_on_random_logs() {
    for seed in 0..100 {
        let log = random_log(seed, 2 + (seed as usize * 7) % 60, 1 + (seed as usize % 30));
        let o = trade_oracle(&log.holdings);
        let st = trade_stats(&log).unwrap();
        assert_eq!(st.trade_count, o.trade_count);
        assert_eq!(st.total_turnover, o.total_turnover);
        assert_eq!(st.max_shares_held, o.max_shares_held);
        assert!((st.stationarity_fraction - o.stationarity_fraction).abs() <= 1e-12);
        assert!((st.mean_holding_run - o.mean_holding_run).abs() <= 1e-12);

        let integral = integral_holding(&log).unwrap();
        assert_eq!(integral, integral_oracle(&log.holdings));
        let d = diversity_stats(&log).unwrap();
        match (d.hhi, hhi_oracle(&integral)) {
            (Some(a), Some(b)) => {
                assert!((a - b).abs() <= 1e-12);
                let n = log.n_tickers() as f64;
                assert!(a >= 1.0 / n - 1e-12 && a <= 1.0 + 1e-12);
            }
            (None, None) => assert_eq!(d.active_tickers, 0),
            other => panic!("hhi presence differs: {other:?}"),
        }
        let r = behavior_profile(&log).unwrap();
        assert!((r.trader_score - (1.0 - o.stationarity_fraction)).abs() <= 1e-12);
    }
}

#[test]
fn degenerate_concentration_cases() {
    let mut log = random_log(1, 10, 30);
    log.holdings.fill(0);
    let r = behavior_profile(&log).unwrap();
    assert_eq!(r.trader_score, 0.0);
    assert_eq!(r.diversity.hhi, None);
    log.holdings.column_mut(4).fill(9);
    assert_eq!(diversity_stats(&log).unwrap().hhi, Some(1.0));
    log.holdings.fill(3);
    assert!((diversity_stats(&log).unwrap().hhi.unwrap() - 1.0 / 30.0).abs() <= 1e-12);
}

fn env_features() -> holdtrade_core::indicators::FeaturePanel {
    let t = 120;
    let close = Array2::from_shape_fn((t, 4), |(k, i)| random_ohlc(t, 300 + i as u64).close[k]);
    let panel = MarketPanel::from_closes((0..4).map(|i| format!("Z{i}")).collect(), (0..t as i64).map(|k| k * 3600).collect(), close)
        .unwrap();
    build_features(&panel, &IndicatorConfig::default()).unwrap()
}

#[test]
fn env_logs_telescope_and_bound_holdings() {
    let fp = env_features();
    let cfg = EnvConfig { reward_scale: 1e-4, ..Default::default() };
    let w = 60..120;
    for seed in 0..20 {
        let log = run_episode(&mut RandomPolicy::new(4), &cfg, &fp, w.clone(), seed).unwrap();
        let cum = cumulative_reward(&log).unwrap();
        let expected = cfg.reward_scale * (log.portfolio_value[log.len() - 1] - log.portfolio_value[0]);
        assert!((cum.last().unwrap() - expected).abs() <= 1e-6 * expected.abs().max(1e-3));
        let st = trade_stats(&log).unwrap();
        let cap = cfg.hmax as i64 * (log.len() as i64 - 1);
        assert!(st.max_shares_held.iter().all(|&m| m <= cap));
        // uniform actions are nonzero almost surely
        assert!(behavior_profile(&log).unwrap().trader_score > 0.5);
    }
}

#[test]
fn hold_random_and_buy_and_hold_ordering() {
    let fp = env_features();
    let cfg = EnvConfig::default();
    let w = 60..120;
    let hold = behavior_profile(&run_episode(&mut Hold::new(4), &cfg, &fp, w.clone(), 0).unwrap()).unwrap();
    let rand = behavior_profile(&run_episode(&mut RandomPolicy::new(4), &cfg, &fp, w.clone(), 0).unwrap()).unwrap();
    let bh_log = run_episode(&mut BuyAndHold::new(4), &cfg, &fp, w, 0).unwrap();
    let bh = behavior_profile(&bh_log).unwrap();
    assert_eq!(hold.trader_score, 0.0);
    assert_eq!(hold.diversity.active_tickers, 0);
    // buy-and-hold: one change per ticker at t = 1
    let steps = (bh_log.len() - 1) as f64;
    assert!((bh.trader_score - 1.0 / steps).abs() <= 1e-12);
    let cmp = compare_profiles(&[hold, rand.clone(), bh.clone()]).unwrap();
    assert_eq!(cmp.rows[1].rank_trader_score, 1);
    assert_eq!(cmp.rows[0].rank_trader_score, 3);
    assert!(bh.trade_stats.mean_holding_run > rand.trade_stats.mean_holding_run);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_permutation_equivariant(seed in 0u64..100_000, rot in 0usize..5) {
        let log = random_log(seed, 12, 5);
        let mut perm = log.clone();
        for i in 0..5 {
            perm.holdings.column_mut((i + rot) % 5).assign(&log.holdings.column(i));
        }
        let a = integral_holding(&log).unwrap();
        let b = integral_holding(&perm).unwrap();
        for i in 0..5 {
            prop_assert_eq!(a[i], b[(i + rot) % 5]);
        }
        prop_assert_eq!(cumulative_reward(&log).unwrap(), cumulative_reward(&perm).unwrap());
    }

    #[test]
    fn injected_position_changes_never_lower_trader_score(seed in 0u64..100_000, t in 1usize..12, i in 0usize..4) {
        let log = random_log(seed, 12, 4);
        let before = behavior_profile(&log).unwrap().trader_score;
        let mut more = log.clone();
        // add a distinct level from row t onwards: the change at t is new,
        // later relations between consecutive rows are unchanged
        let bump = 1000;
        more.holdings.slice_mut(s![t.., i]).mapv_inplace(|h| h + bump);
        let after = behavior_profile(&more).unwrap().trader_score;
        prop_assert!(after >= before);
    }
}
