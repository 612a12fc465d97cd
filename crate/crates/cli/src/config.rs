//! Declarative run configuration (TOML) with command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use holdtrade_core::agents::A2CConfig;
use holdtrade_core::env::EnvConfig;
use holdtrade_core::indicators::IndicatorConfig;
use holdtrade_core::marketdata::{parse_timestamp, FillPolicy, Timestamp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// One CSV per ticker; the file stem is the ticker.
    pub bars: Vec<PathBuf>,
    /// Directory whose `*.csv` files are all read as per-ticker bars.
    pub bars_dir: Option<PathBuf>,
    /// Single long-format CSV with a ticker column.
    pub long: Option<PathBuf>,
    pub ticker_column: String,
    /// Auxiliary series by name (e.g. `vix = "vix.csv"`).
    pub aux: BTreeMap<String, PathBuf>,
    pub fill: FillPolicy,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            bars: Vec::new(),
            bars_dir: None,
            long: None,
            ticker_column: "ticker".into(),
            aux: BTreeMap::new(),
            fill: FillPolicy::ForwardFill,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    /// Ticker subset and order; empty keeps every loaded ticker.
    pub tickers: Vec<String>,
    /// Train/test boundary (ISO-8601); the boundary bar starts the test part.
    pub split: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub indicators: IndicatorConfig,
    pub env: EnvConfig,
    pub a2c: A2CConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            tickers: Vec::new(),
            split: None,
            out: PathBuf::from("out"),
            seed: 0,
            indicators: IndicatorConfig::default(),
            env: EnvConfig::default(),
            a2c: A2CConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file; relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.data.bars.iter_mut().for_each(fix);
        cfg.data.bars_dir.iter_mut().for_each(fix);
        cfg.data.long.iter_mut().for_each(fix);
        cfg.data.aux.values_mut().for_each(fix);
        fix(&mut cfg.out);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.indicators.validate()?;
        self.env.validate()?;
        self.a2c.validate()?;
        self.split_timestamp()?;
        Ok(())
    }

    pub fn split_timestamp(&self) -> Result<Option<Timestamp>> {
        match &self.split {
            None => Ok(None),
            Some(s) => match parse_timestamp(s) {
                Some(ts) => Ok(Some(ts)),
                None => bail!("invalid split date `{s}`"),
            },
        }
    }

    pub fn data_paths(&self) -> Result<Vec<PathBuf>> {
        let mut paths = self.data.bars.clone();
        if let Some(dir) = &self.data.bars_dir {
            let mut found: Vec<PathBuf> = fs::read_dir(dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
                .collect();
            found.sort();
            paths.extend(found);
        }
        Ok(paths)
    }
}
