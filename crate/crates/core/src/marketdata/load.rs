use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{format_timestamp, parse_timestamp, AuxSeries, Bar, BarSeries, MarketDataError, Timestamp};

/// Column mapping for OHLCV CSV files. Header names match case-insensitively.
///
/// With `ticker` set the file is read as long format (one row per
/// ticker and timestamp); otherwise the ticker name is the file stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarSchema {
    pub timestamp: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
    pub ticker: Option<String>,
}

impl Default for BarSchema {
    fn default() -> Self {
        BarSchema {
            timestamp: "timestamp".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
            ticker: None,
        }
    }
}

impl BarSchema {
    pub fn long_format(ticker_column: impl Into<String>) -> Self {
        BarSchema { ticker: Some(ticker_column.into()), ..Default::default() }
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>, MarketDataError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => MarketDataError::FileNotFound { path: path.into() },
        _ => MarketDataError::Io { path: path.into(), source: e },
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column_index(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize, MarketDataError> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| MarketDataError::SchemaMismatch { path: path.into(), column: name.into() })
}

struct Columns {
    ts: usize,
    ohlcv: [usize; 5],
    names: [String; 5],
}

fn row_number(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn field(record: &csv::StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("")
}

fn parse_f64(path: &Path, row: u64, column: &str, raw: &str) -> Result<f64, MarketDataError> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| MarketDataError::Parse {
        path: path.into(),
        row,
        column: column.into(),
        value: raw.into(),
    })
}

fn parse_ts(path: &Path, row: u64, column: &str, raw: &str) -> Result<Timestamp, MarketDataError> {
    parse_timestamp(raw).ok_or_else(|| MarketDataError::Parse {
        path: path.into(),
        row,
        column: column.into(),
        value: raw.into(),
    })
}

fn parse_bar(path: &Path, cols: &Columns, record: &csv::StringRecord) -> Result<(u64, Bar), MarketDataError> {
    let row = row_number(record);
    let timestamp = parse_ts(path, row, "timestamp", field(record, cols.ts))?;
    let mut v = [0.0; 5];
    for k in 0..5 {
        v[k] = parse_f64(path, row, &cols.names[k], field(record, cols.ohlcv[k]))?;
    }
    let bar = Bar { timestamp, open: v[0], high: v[1], low: v[2], close: v[3], volume: v[4] };
    bar.validate()
        .map_err(|reason| MarketDataError::InvalidBar { path: path.into(), row, reason })?;
    Ok((row, bar))
}

/// Sorts rows by timestamp and rejects duplicates, naming the later row.
fn finish_series(path: &Path, ticker: String, mut rows: Vec<(u64, Bar)>) -> Result<BarSeries, MarketDataError> {
    if rows.is_empty() {
        return Err(MarketDataError::EmptyFile { path: path.into() });
    }
    rows.sort_by_key(|(row, bar)| (bar.timestamp, *row));
    for w in rows.windows(2) {
        if w[0].1.timestamp == w[1].1.timestamp {
            return Err(MarketDataError::DuplicateTimestamp {
                path: path.into(),
                row: w[0].0.max(w[1].0),
                timestamp: format_timestamp(w[1].1.timestamp),
            });
        }
    }
    Ok(BarSeries::new(ticker, rows.into_iter().map(|(_, b)| b).collect())
        .expect("rows validated and strictly increasing"))
}

fn resolve_columns(headers: &csv::StringRecord, path: &Path, schema: &BarSchema) -> Result<Columns, MarketDataError> {
    let names = [
        schema.open.clone(),
        schema.high.clone(),
        schema.low.clone(),
        schema.close.clone(),
        schema.volume.clone(),
    ];
    let ts = column_index(headers, path, &schema.timestamp)?;
    let mut ohlcv = [0; 5];
    for (slot, name) in ohlcv.iter_mut().zip(&names) {
        *slot = column_index(headers, path, name)?;
    }
    Ok(Columns { ts, ohlcv, names })
}

/// Loads one ticker's bars. The ticker symbol is the file stem.
///
/// Rows may appear in any order; they are sorted by timestamp. Errors carry
/// the file path and the 1-based line number (the header is line 1).
pub fn load_bars(path: impl AsRef<Path>, schema: &BarSchema) -> Result<BarSeries, MarketDataError> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::Csv { path: path.into(), source: e })?
        .clone();
    let cols = resolve_columns(&headers, path, schema)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::Csv { path: path.into(), source: e })?;
        rows.push(parse_bar(path, &cols, &record)?);
    }
    let ticker = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    finish_series(path, ticker, rows)
}

/// Loads several per-ticker files in parallel, preserving input order.
pub fn load_bars_many<P: AsRef<Path> + Sync>(paths: &[P], schema: &BarSchema) -> Result<Vec<BarSeries>, MarketDataError> {
    paths.par_iter().map(|p| load_bars(p, schema)).collect()
}

/// Loads a long-format file holding many tickers. Output is ordered by
/// first appearance of each ticker.
pub fn load_long_bars(path: impl AsRef<Path>, schema: &BarSchema) -> Result<Vec<BarSeries>, MarketDataError> {
    let path = path.as_ref();
    let ticker_col = schema
        .ticker
        .as_deref()
        .ok_or_else(|| MarketDataError::SchemaMismatch { path: path.into(), column: "ticker".into() })?;
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::Csv { path: path.into(), source: e })?
        .clone();
    let cols = resolve_columns(&headers, path, schema)?;
    let tcol = column_index(&headers, path, ticker_col)?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<(u64, Bar)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::Csv { path: path.into(), source: e })?;
        let ticker = field(&record, tcol).to_string();
        let parsed = parse_bar(path, &cols, &record)?;
        groups
            .entry(ticker.clone())
            .or_insert_with(|| {
                order.push(ticker);
                Vec::new()
            })
            .push(parsed);
    }
    if order.is_empty() {
        return Err(MarketDataError::EmptyFile { path: path.into() });
    }
    order
        .into_iter()
        .map(|t| {
            let rows = groups.remove(&t).unwrap_or_default();
            finish_series(path, t, rows)
        })
        .collect()
}

/// Loads a two-column `timestamp,value` series under `name`.
///
/// Columns are found by header name; a file with exactly two unnamed-match
/// columns is read positionally.
pub fn load_series(path: impl AsRef<Path>, name: &str) -> Result<AuxSeries, MarketDataError> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::Csv { path: path.into(), source: e })?
        .clone();
    let (ts_col, val_col) = match (column_index(&headers, path, "timestamp"), column_index(&headers, path, "value")) {
        (Ok(t), Ok(v)) => (t, v),
        (Err(e), _) | (_, Err(e)) if headers.len() != 2 => return Err(e),
        _ => (0, 1),
    };
    let mut rows: Vec<(u64, Timestamp, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::Csv { path: path.into(), source: e })?;
        let row = row_number(&record);
        let ts = parse_ts(path, row, "timestamp", field(&record, ts_col))?;
        let value = parse_f64(path, row, "value", field(&record, val_col))?;
        rows.push((row, ts, value));
    }
    if rows.is_empty() {
        return Err(MarketDataError::EmptyFile { path: path.into() });
    }
    rows.sort_by_key(|(row, ts, _)| (*ts, *row));
    if let Some(w) = rows.windows(2).find(|w| w[0].1 == w[1].1) {
        return Err(MarketDataError::DuplicateTimestamp {
            path: path.into(),
            row: w[0].0.max(w[1].0),
            timestamp: format_timestamp(w[1].1),
        });
    }
    Ok(AuxSeries {
        name: name.to_string(),
        timestamps: rows.iter().map(|r| r.1).collect(),
        values: rows.iter().map(|r| r.2).collect(),
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> MarketDataError + '_ {
    move |e| MarketDataError::Io { path: PathBuf::from(path), source: e }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> MarketDataError + '_ {
    move |e| MarketDataError::Csv { path: PathBuf::from(path), source: e }
}

/// Writes a series in the per-ticker schema. Floats use their shortest
/// round-trip representation.
pub fn write_bars(path: impl AsRef<Path>, series: &BarSeries) -> Result<(), MarketDataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["timestamp", "open", "high", "low", "close", "volume"]).map_err(csv_err(path))?;
    for b in series.bars() {
        w.write_record([
            format_timestamp(b.timestamp),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.volume.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_series(path: impl AsRef<Path>, series: &AuxSeries) -> Result<(), MarketDataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["timestamp", "value"]).map_err(csv_err(path))?;
    for (ts, v) in series.timestamps.iter().zip(&series.values) {
        w.write_record([format_timestamp(*ts), v.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_three_rows_ascending() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "AAPL.csv",
            "timestamp,open,high,low,close,volume\n\
             2022-03-04T15:00:00Z,10,11,9,10.5,100\n\
             2022-03-04T14:00:00Z,10,10,10,10,0\n\
             2022-03-04T16:00:00Z,10.5,12,10,11,200\n",
        );
        let s = load_bars(&p, &BarSchema::default()).unwrap();
        assert_eq!(s.ticker, "AAPL");
        assert_eq!(s.len(), 3);
        let ts: Vec<_> = s.timestamps().collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn high_below_low_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "X.csv",
            "timestamp,open,high,low,close,volume\n\
             2022-03-04T14:00:00Z,10,11,9,10,1\n\
             2022-03-04T15:00:00Z,10,9,11,10,1\n",
        );
        match load_bars(&p, &BarSchema::default()) {
            Err(MarketDataError::InvalidBar { row, path, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(path, p);
            }
            other => panic!("expected InvalidBar, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "X.csv", "timestamp,open,high,low,close\n2022-03-04,1,1,1,1\n");
        match load_bars(&p, &BarSchema::default()) {
            Err(MarketDataError::SchemaMismatch { column, .. }) => assert_eq!(column, "volume"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_bars(dir.path().join("nope.csv"), &BarSchema::default()),
            Err(MarketDataError::FileNotFound { .. })
        ));
    }

    #[test]
    fn unparsable_field_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "X.csv", "timestamp,open,high,low,close,volume\n2022-03-04,1,abc,1,1,1\n");
        match load_bars(&p, &BarSchema::default()) {
            Err(MarketDataError::Parse { row, column, value, .. }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "high", "abc"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn yahoo_style_headers_match_case_insensitively() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "MSFT.csv",
            "Datetime,Open,High,Low,Close,Adj Close,Volume\n2022-03-04 14:30:00,1,2,1,2,2,5\n",
        );
        let schema = BarSchema { timestamp: "datetime".into(), ..Default::default() };
        let s = load_bars(&p, &schema).unwrap();
        assert_eq!(s.bars()[0].close, 2.0);
    }

    #[test]
    fn long_format_groups_by_ticker() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "all.csv",
            "tic,timestamp,open,high,low,close,volume\n\
             B,2022-03-04T14:00:00Z,1,1,1,1,1\n\
             A,2022-03-04T14:00:00Z,2,2,2,2,1\n\
             B,2022-03-04T15:00:00Z,1,1,1,1,1\n",
        );
        let v = load_long_bars(&p, &BarSchema::long_format("tic")).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].ticker.as_str(), v[0].len()), ("B", 2));
        assert_eq!((v[1].ticker.as_str(), v[1].len()), ("A", 1));
    }

    #[test]
    fn aux_series_five_rows_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = std::iter::once("timestamp,value\n".to_string())
            .chain((0..5).map(|i| format!("2022-03-04T1{i}:00:00Z,{}\n", 20 + i)))
            .collect();
        let p = write(dir.path(), "vix.csv", &body);
        let s = load_series(&p, "vix").unwrap();
        assert_eq!(s.values.len(), 5);
        assert_eq!(s.name, "vix");

        let p = write(dir.path(), "dup.csv", "timestamp,value\n2022-03-04,1\n2022-03-04,2\n");
        assert!(matches!(load_series(&p, "vix"), Err(MarketDataError::DuplicateTimestamp { row: 3, .. })));
    }

    #[test]
    fn aux_series_positional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "vix.csv", "Date,VIX\n2022-03-04,30.5\n");
        assert_eq!(load_series(&p, "vix").unwrap().values, vec![30.5]);
    }
}
