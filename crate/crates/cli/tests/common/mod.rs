//! Synthetic fixtures for CLI tests.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const START: i64 = 1_700_438_400; // 2023-11-20T00:00:00Z

/// Hourly per-ticker bar CSVs named `<ticker>.csv`; returns their paths.
pub fn write_fixture(dir: &Path, tickers: &[&str], bars: usize, seed: u64) -> Vec<PathBuf> {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tickers
        .iter()
        .map(|t| {
            let mut p: f64 = rng.random_range(30.0..150.0);
            let drift: f64 = rng.random_range(-0.001..0.002);
            let mut s = String::from("timestamp,open,high,low,close,volume\n");
            for k in 0..bars {
                let open = p;
                p *= 1.0 + drift + rng.random_range(-0.01..0.01);
                let high = open.max(p) * (1.0 + rng.random_range(0.0..0.005));
                let low = open.min(p) * (1.0 - rng.random_range(0.0..0.005));
                let ts = holdtrade_core::marketdata::format_timestamp(START + 3600 * k as i64);
                s.push_str(&format!("{ts},{open},{high},{low},{p},{}\n", rng.random_range(1000..100000)));
            }
            let path = dir.join(format!("{t}.csv"));
            fs::write(&path, s).unwrap();
            path
        })
        .collect()
}

/// Runs the CLI in-process; returns captured stdout or the error chain.
pub fn cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let mut argv = vec!["holdtrade"];
    argv.extend_from_slice(args);
    holdtrade_cli::run_from(argv, &mut out).map_err(|e| format!("{e:#}"))?;
    Ok(String::from_utf8(out).unwrap())
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// All files under `dir`, relative path → bytes, in sorted order.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
