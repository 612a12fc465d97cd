use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use holdtrade_core::agents::{a2c_train, baseline, read_checkpoint, write_checkpoint, Policy};
use holdtrade_core::analytics::{
    compare_profiles, integral_holding_value, read_report, write_comparison, write_report,
    BehaviorReport, COMPARISON_FILE, REPORT_FILE, TRADER_THRESHOLD,
};
use holdtrade_core::env::{complete_episodes, read_log, run_episode, write_log, EpisodeLog, TradingEnv};
use holdtrade_core::indicators::{build_features, write_features, FeaturePanel};
use holdtrade_core::marketdata::{
    align_panel, format_timestamp, load_bars_many, load_long_bars, load_series, read_panel_cache, write_panel_cache,
    BarSchema, BarSeries, FillPolicy, MarketPanel, PANEL_CACHE_FILE,
};

use crate::config::RunConfig;
use crate::svg::{bar_chart, line_chart, Series};
use crate::{AnalyzeArgs, Fill, GlobalArgs, IngestArgs, PanelArgs, ReportArgs, SimulateArgs, TrainArgs, WindowChoice};

pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_JSON: &str = "features.json";
pub const CHECKPOINT_FILE: &str = "a2c.ckpt";
pub const TRAIN_STATS_FILE: &str = "train_stats.csv";
pub const TRAIN_EPISODES_FILE: &str = "train_episodes.csv";
pub const LOGS_DIR: &str = "logs";
pub const ANALYSIS_DIR: &str = "analysis";
pub const SVG_FILES: [&str; 3] = ["cumulative_reward.svg", "integral_holding.svg", "holdings.svg"];

/// Config file (if any) with global flags applied on top.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &g.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(t) = &g.tickers {
        cfg.tickers = t.clone();
    }
    if let Some(s) = &g.split {
        cfg.split = Some(s.clone());
    }
    cfg.a2c.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn select_tickers(mut series: Vec<BarSeries>, wanted: &[String]) -> Result<Vec<BarSeries>> {
    if wanted.is_empty() {
        return Ok(series);
    }
    wanted
        .iter()
        .map(|t| {
            let pos = series.iter().position(|s| &s.ticker == t).ok_or_else(|| anyhow!("ticker `{t}` not found in the data"))?;
            Ok(series.swap_remove(pos))
        })
        .collect()
}

pub fn ingest(cfg: &RunConfig, args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = cfg.clone();
    if !args.bars.is_empty() {
        cfg.data.bars = args.bars.clone();
    }
    if args.bars_dir.is_some() {
        cfg.data.bars_dir = args.bars_dir.clone();
    }
    if args.long.is_some() {
        cfg.data.long = args.long.clone();
    }
    for (name, path) in &args.aux {
        cfg.data.aux.insert(name.clone(), path.clone());
    }
    if let Some(f) = args.fill {
        cfg.data.fill = match f {
            Fill::Intersect => FillPolicy::Intersect,
            Fill::ForwardFill => FillPolicy::ForwardFill,
        };
    }

    let mut series = load_bars_many(&cfg.data_paths()?, &BarSchema::default())?;
    if let Some(long) = &cfg.data.long {
        series.extend(load_long_bars(long, &BarSchema::long_format(cfg.data.ticker_column.clone()))?);
    }
    ensure!(!series.is_empty(), "no bar data given (use --bars, --bars-dir, --long or the [data] config section)");
    let series = select_tickers(series, &cfg.tickers)?;
    let aux = cfg.data.aux.iter().map(|(name, p)| load_series(p, name)).collect::<Result<Vec<_>, _>>()?;
    let panel = align_panel(&series, &aux, cfg.data.fill)?;
    let (bin, csv) = write_panel_cache(&panel, &cfg.out)?;
    writeln!(out, "rows: {}", panel.len())?;
    writeln!(out, "tickers: {} ({})", panel.n_tickers(), panel.tickers().join(","))?;
    writeln!(
        out,
        "range: {} .. {}",
        format_timestamp(panel.timestamps()[0]),
        format_timestamp(*panel.timestamps().last().unwrap())
    )?;
    writeln!(out, "wrote {} and {}", bin.display(), csv.display())?;
    Ok(())
}

fn load_panel(cfg: &RunConfig, args: &PanelArgs) -> Result<MarketPanel> {
    let path = args.panel.clone().unwrap_or_else(|| cfg.out.join(PANEL_CACHE_FILE));
    read_panel_cache(&path).with_context(|| format!("loading panel {} (run `ingest` first)", path.display()))
}

fn load_features(cfg: &RunConfig, args: &PanelArgs) -> Result<FeaturePanel> {
    let panel = load_panel(cfg, args)?;
    Ok(build_features(&panel, &cfg.indicators)?)
}

pub fn features(cfg: &RunConfig, args: &PanelArgs, out: &mut dyn Write) -> Result<()> {
    let fp = load_features(cfg, args)?;
    fs::create_dir_all(&cfg.out)?;
    let (csv, json) = (cfg.out.join(FEATURES_CSV), cfg.out.join(FEATURES_JSON));
    write_features(&fp, &csv, &json)?;
    writeln!(out, "warmup index: {} ({})", fp.warmup(), format_timestamp(fp.timestamps()[fp.warmup()]))?;
    writeln!(out, "wrote {} and {}", csv.display(), json.display())?;
    Ok(())
}

/// Training and test windows over feature indices. Without a split both
/// cover everything after warmup.
pub fn windows(cfg: &RunConfig, fp: &FeaturePanel) -> Result<(Range<usize>, Range<usize>)> {
    let all = fp.warmup()..fp.len();
    let Some(boundary) = cfg.split_timestamp()? else {
        return Ok((all.clone(), all));
    };
    let idx = fp.timestamps().partition_point(|&t| t < boundary);
    let train = fp.warmup()..idx;
    let test = idx.max(fp.warmup())..fp.len();
    ensure!(
        train.len() >= 2,
        "training window {}..{} too short: the split falls within {} bars of the feature warmup",
        train.start,
        train.end,
        fp.warmup()
    );
    ensure!(test.len() >= 2, "test window after the split has fewer than 2 bars");
    Ok((train, test))
}

fn pick_window(cfg: &RunConfig, fp: &FeaturePanel, which: WindowChoice) -> Result<Range<usize>> {
    let (train, test) = windows(cfg, fp)?;
    Ok(match which {
        WindowChoice::Train => train,
        WindowChoice::Test => test,
        WindowChoice::All => fp.warmup()..fp.len(),
    })
}

pub fn simulate(cfg: &RunConfig, args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let fp = load_features(cfg, &args.panel)?;
    let window = pick_window(cfg, &fp, args.window)?;
    let mut policy: Box<dyn Policy> = match (&args.agent, &args.checkpoint) {
        (Some(name), None) => baseline(name, fp.n_tickers())?,
        (None, Some(path)) => {
            let (header, policy) = read_checkpoint(path)?;
            ensure!(
                header.tickers == fp.tickers(),
                "checkpoint shape mismatch: trained on tickers [{}], panel has [{}]",
                header.tickers.join(","),
                fp.tickers().join(",")
            );
            Box::new(policy)
        }
        _ => bail!("give exactly one of --agent or --checkpoint"),
    };
    let log = run_episode(policy.as_mut(), &cfg.env, &fp, window.clone(), cfg.seed)?;
    let path = args.log.clone().unwrap_or_else(|| cfg.out.join(LOGS_DIR).join(format!("{}.csv", log.agent_label)));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_log(&log, &path)?;
    let (v0, v1) = (log.portfolio_value[0], *log.portfolio_value.last().unwrap());
    writeln!(out, "agent: {}", log.agent_label)?;
    writeln!(out, "window: {}..{} ({} bars)", window.start, window.end, window.len())?;
    writeln!(out, "portfolio value: {v0} -> {v1}")?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

pub fn train(cfg: &RunConfig, args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let fp = load_features(cfg, &args.panel)?;
    let (window, _) = windows(cfg, &fp)?;
    let mut a2c = cfg.a2c.clone();
    if let Some(t) = args.timesteps {
        a2c.total_timesteps = t;
    }
    let agent = a2c_train(&a2c, |_| TradingEnv::new(cfg.env.clone(), &fp, window.clone()))?;
    fs::create_dir_all(&cfg.out)?;
    let ckpt = args.checkpoint.clone().unwrap_or_else(|| cfg.out.join(CHECKPOINT_FILE));
    write_checkpoint(&ckpt, &agent.policy("a2c"), &a2c, fp.tickers())?;

    let stats_path = cfg.out.join(TRAIN_STATS_FILE);
    let mut w = csv::Writer::from_path(&stats_path)?;
    w.write_record(["update", "policy_loss", "value_loss", "entropy", "grad_norm"])?;
    for (k, u) in agent.stats.updates.iter().enumerate() {
        w.write_record([k.to_string(), u.policy_loss.to_string(), u.value_loss.to_string(), u.entropy.to_string(), u.grad_norm.to_string()])?;
    }
    w.flush()?;
    let ep_path = cfg.out.join(TRAIN_EPISODES_FILE);
    let mut w = csv::Writer::from_path(&ep_path)?;
    w.write_record(["episode", "cumulative_reward"])?;
    for (k, r) in agent.stats.episode_rewards.iter().enumerate() {
        w.write_record([k.to_string(), r.to_string()])?;
    }
    w.flush()?;

    debug_assert_eq!(agent.stats.episode_count, complete_episodes(a2c.total_timesteps, window.len()));
    writeln!(out, "training window: {}..{} ({} bars, {} steps per episode)", window.start, window.end, window.len(), window.len() - 1)?;
    writeln!(out, "timesteps: {}", a2c.total_timesteps)?;
    writeln!(out, "{} episodes", agent.stats.episode_count)?;
    writeln!(out, "updates: {}", agent.stats.updates.len())?;
    writeln!(out, "wrote {}, {} and {}", ckpt.display(), stats_path.display(), ep_path.display())?;
    Ok(())
}

/// Directory names for reports: the agent label, suffixed on collision.
fn report_names(logs: &[EpisodeLog]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    logs.iter()
        .map(|l| {
            let base: String =
                l.agent_label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}-{n}")
            }
        })
        .collect()
}

pub fn analyze(cfg: &RunConfig, args: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let logs = args
        .logs
        .iter()
        .map(|p| read_log(p).with_context(|| format!("reading log {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let reports = holdtrade_core::analytics::behavior_profiles(&logs)?;
    let comparison = if reports.len() >= 2 { Some(compare_profiles(&reports)?) } else { None };

    let root = cfg.out.join(ANALYSIS_DIR);
    let names = report_names(&logs);
    let panel = if args.share_value { Some(load_panel(cfg, &args.panel)?) } else { None };
    for ((report, name), log) in reports.iter().zip(&names).zip(&logs) {
        let dir = root.join(name);
        write_report(report, &dir)?;
        if let Some(panel) = &panel {
            let w = log.window.clone().ok_or_else(|| anyhow!("log `{}` has no window; share-value needs one", log.agent_label))?;
            ensure!(w.end <= panel.len(), "log window {}..{} exceeds the panel", w.start, w.end);
            let prices = panel.slice_rows(w).close().clone();
            let values = integral_holding_value(log, &prices)?;
            let mut wr = csv::Writer::from_path(dir.join("integral_holding_value.csv"))?;
            wr.write_record(["ticker", "integral_holding_value"])?;
            for (t, v) in report.tickers.iter().zip(values) {
                wr.write_record([t.clone(), v.to_string()])?;
            }
            wr.flush()?;
        }
        writeln!(
            out,
            "{name}: final_reward={} trader_score={:.4} hhi={} mean_holding_run={:.2}",
            report.final_reward(),
            report.trader_score,
            report.diversity.hhi.map_or("n/a".to_string(), |h| format!("{h:.4}")),
            report.trade_stats.mean_holding_run
        )?;
    }
    if let Some(cmp) = comparison {
        let path = root.join(COMPARISON_FILE);
        write_comparison(&cmp, &path)?;
        writeln!(out, "trader_score reference threshold: {TRADER_THRESHOLD} (convention)")?;
        writeln!(out, "wrote {}", path.display())?;
    }
    writeln!(out, "reports under {}", root.display())?;
    Ok(())
}

fn report_inputs(cfg: &RunConfig, args: &ReportArgs) -> Result<Vec<PathBuf>> {
    if !args.reports.is_empty() {
        return Ok(args.reports.clone());
    }
    let root = cfg.out.join(ANALYSIS_DIR);
    let mut dirs: Vec<PathBuf> = fs::read_dir(&root)
        .with_context(|| format!("listing {} (run `analyze` first)", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(REPORT_FILE).is_file())
        .collect();
    dirs.sort();
    ensure!(!dirs.is_empty(), "no reports found under {}", root.display());
    Ok(dirs)
}

/// The three chart files for one report, as `(file name, svg)` pairs.
pub fn render_report(report: &BehaviorReport) -> [(&'static str, String); 3] {
    let label = &report.agent_label;
    let cum = Series {
        name: label.clone(),
        points: report.cumulative_reward.iter().enumerate().map(|(k, v)| ((k + 1) as f64, *v)).collect(),
    };
    let integral: Vec<f64> = report.integral_holding.iter().map(|&v| v as f64).collect();
    let holdings: Vec<Series> = report
        .tickers
        .iter()
        .enumerate()
        .map(|(i, t)| Series {
            name: t.clone(),
            points: report.holdings_matrix.column(i).iter().enumerate().map(|(k, &h)| (k as f64, h as f64)).collect(),
        })
        .collect();
    [
        (SVG_FILES[0], line_chart(&format!("Cumulative reward: {label}"), "step", "cumulative reward", &[cum])),
        (SVG_FILES[1], bar_chart(&format!("Integral holding: {label}"), "share-steps", &report.tickers, &integral)),
        (SVG_FILES[2], line_chart(&format!("Holdings over time: {label}"), "step", "shares held", &holdings)),
    ]
}

pub fn report(cfg: &RunConfig, args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    for input in report_inputs(cfg, args)? {
        let report = read_report(&input)?;
        let dir: &Path = if input.is_dir() { &input } else { input.parent().unwrap_or(Path::new(".")) };
        for (name, svg) in render_report(&report) {
            let path = dir.join(name);
            fs::write(&path, svg)?;
            writeln!(out, "wrote {}", path.display())?;
        }
    }
    Ok(())
}
