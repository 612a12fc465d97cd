use std::fs;
use std::path::{Path, PathBuf};

use super::{AnalyticsError, BehaviorReport, Comparison};
use crate::marketdata::format_timestamp;

pub const REPORT_FILE: &str = "report.json";
pub const CUMULATIVE_REWARD_FILE: &str = "cumulative_reward.csv";
pub const INTEGRAL_HOLDING_FILE: &str = "integral_holding.csv";
pub const HOLDINGS_MATRIX_FILE: &str = "holdings_matrix.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

fn csv_err(e: csv::Error) -> AnalyticsError {
    AnalyticsError::Io(e.into())
}

/// Writes the JSON report and its three flat CSVs into `dir`; returns the
/// paths written.
pub fn write_report(report: &BehaviorReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, AnalyticsError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let json_path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(report).map_err(std::io::Error::from)?;
    json.push('\n');
    fs::write(&json_path, json)?;

    let cum_path = dir.join(CUMULATIVE_REWARD_FILE);
    let mut w = csv::Writer::from_path(&cum_path).map_err(csv_err)?;
    w.write_record(["t", "timestamp", "cumulative_reward"]).map_err(csv_err)?;
    for (k, v) in report.cumulative_reward.iter().enumerate() {
        let t = k + 1;
        let ts = report.timestamps.get(t).map_or(String::new(), |&ts| format_timestamp(ts));
        w.write_record([t.to_string(), ts, v.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;

    let int_path = dir.join(INTEGRAL_HOLDING_FILE);
    let mut w = csv::Writer::from_path(&int_path).map_err(csv_err)?;
    w.write_record(["ticker", "integral_holding"]).map_err(csv_err)?;
    for (ticker, v) in report.tickers.iter().zip(&report.integral_holding) {
        w.write_record([ticker.clone(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;

    let mat_path = dir.join(HOLDINGS_MATRIX_FILE);
    let mut w = csv::Writer::from_path(&mat_path).map_err(csv_err)?;
    let mut header = vec!["t".to_string(), "timestamp".to_string()];
    header.extend(report.tickers.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (t, row) in report.holdings_matrix.rows().into_iter().enumerate() {
        let mut rec = vec![t.to_string(), report.timestamps.get(t).map_or(String::new(), |&ts| format_timestamp(ts))];
        rec.extend(row.iter().map(|h| h.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;

    Ok(vec![json_path, cum_path, int_path, mat_path])
}

pub fn write_comparison(cmp: &Comparison, path: impl AsRef<Path>) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "agent_label",
        "final_reward",
        "trader_score",
        "hhi",
        "max_shares_held",
        "mean_holding_run",
        "rank_final_reward",
        "rank_trader_score",
        "rank_hhi",
        "rank_max_shares_held",
    ])
    .map_err(csv_err)?;
    for r in &cmp.rows {
        w.write_record([
            r.agent_label.clone(),
            r.final_reward.to_string(),
            r.trader_score.to_string(),
            r.hhi.map_or(String::new(), |h| h.to_string()),
            r.max_shares_held.to_string(),
            r.mean_holding_run.to_string(),
            r.rank_final_reward.to_string(),
            r.rank_trader_score.to_string(),
            r.rank_hhi.to_string(),
            r.rank_max_shares_held.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `report.json` from a directory, or a JSON file directly.
pub fn read_report(path: impl AsRef<Path>) -> Result<BehaviorReport, AnalyticsError> {
    let path = path.as_ref();
    let file = if path.is_dir() { path.join(REPORT_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&file)?;
    let report: BehaviorReport = serde_json::from_str(&text)
        .map_err(|e| AnalyticsError::MalformedReport(format!("{}: {e}", file.display())))?;
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::tests::log_from_holdings;
    use super::super::{behavior_profile, compare_profiles};
    use super::*;
    use ndarray::array;

    #[test]
    fn report_round_trip_and_files() {
        let log = log_from_holdings("busy", array![[0, 0], [1, 2], [0, 3]], vec![0.5, -0.25]);
        let r = behavior_profile(&log).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        assert_eq!(read_report(dir.path()).unwrap(), r);
        let mat = fs::read_to_string(dir.path().join(HOLDINGS_MATRIX_FILE)).unwrap();
        assert_eq!(mat.lines().next().unwrap(), "t,timestamp,T0,T1");
        assert_eq!(mat.lines().count(), 4);
        let cum = fs::read_to_string(dir.path().join(CUMULATIVE_REWARD_FILE)).unwrap();
        assert_eq!(cum.lines().nth(2).unwrap().rsplit(',').next().unwrap(), "0.25");

        let cmp = compare_profiles(&[r.clone(), r]).unwrap();
        let p = dir.path().join(COMPARISON_FILE);
        write_comparison(&cmp, &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 3);
    }

    #[test]
    fn malformed_report_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(REPORT_FILE), "{\"agent_label\": 3}").unwrap();
        assert!(matches!(read_report(dir.path()), Err(AnalyticsError::MalformedReport(_))));
    }
}
