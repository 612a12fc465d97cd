//! Binary panel cache plus a human-readable long-format CSV copy.
//!
//! Binary layout (all integers and floats little-endian):
//! `b"HTPANEL1"`, u32 N, u32 T, u32 aux count, N length-prefixed ticker
//! strings, aux-count length-prefixed names, T i64 timestamps, then the
//! open/high/low/close/volume matrices row-major, then each aux series.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{format_timestamp, MarketDataError, MarketPanel};

pub const PANEL_CACHE_FILE: &str = "panel.bin";
pub const PANEL_CSV_FILE: &str = "panel.csv";
const MAGIC: &[u8; 8] = b"HTPANEL1";

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn encode(panel: &MarketPanel) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(panel.n_tickers() as u32).to_le_bytes());
    buf.extend_from_slice(&(panel.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(panel.aux().len() as u32).to_le_bytes());
    for t in panel.tickers() {
        put_str(&mut buf, t);
    }
    for name in panel.aux().keys() {
        put_str(&mut buf, name);
    }
    for ts in panel.timestamps() {
        buf.extend_from_slice(&ts.to_le_bytes());
    }
    for m in [panel.open(), panel.high(), panel.low(), panel.close(), panel.volume()] {
        for v in m.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for values in panel.aux().values() {
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], MarketDataError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| MarketDataError::CorruptCache {
            path: self.path.into(),
            reason: "truncated".into(),
        })?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize, MarketDataError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn i64(&mut self) -> Result<i64, MarketDataError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, MarketDataError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, MarketDataError> {
        let n = self.u32()?;
        let path = self.path;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| MarketDataError::CorruptCache { path: path.into(), reason: "invalid utf-8".into() })
    }
}

fn decode(data: &[u8], path: &Path) -> Result<MarketPanel, MarketDataError> {
    let mut c = Cursor { data, pos: 0, path };
    if c.take(8)? != MAGIC {
        return Err(MarketDataError::CorruptCache { path: path.into(), reason: "bad magic".into() });
    }
    let (n, t, n_aux) = (c.u32()?, c.u32()?, c.u32()?);
    let tickers = (0..n).map(|_| c.string()).collect::<Result<Vec<_>, _>>()?;
    let aux_names = (0..n_aux).map(|_| c.string()).collect::<Result<Vec<_>, _>>()?;
    let timestamps = (0..t).map(|_| c.i64()).collect::<Result<Vec<_>, _>>()?;
    let mut mats = Vec::with_capacity(5);
    for _ in 0..5 {
        let v = (0..t * n).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?;
        mats.push(Array2::from_shape_vec((t, n), v).expect("length checked"));
    }
    let mut aux = BTreeMap::new();
    for name in aux_names {
        aux.insert(name, (0..t).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?);
    }
    if c.pos != data.len() {
        return Err(MarketDataError::CorruptCache { path: path.into(), reason: "trailing bytes".into() });
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().unwrap();
    MarketPanel::new(tickers, timestamps, next(), next(), next(), next(), next(), aux)
}

/// Writes `panel.bin` and `panel.csv` into `dir`, returning both paths.
pub fn write_panel_cache(panel: &MarketPanel, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), MarketDataError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| MarketDataError::Io { path: dir.into(), source: e })?;
    let bin = dir.join(PANEL_CACHE_FILE);
    fs::write(&bin, encode(panel)).map_err(|e| MarketDataError::Io { path: bin.clone(), source: e })?;
    let csv_path = dir.join(PANEL_CSV_FILE);
    write_panel_csv(panel, &csv_path)?;
    Ok((bin, csv_path))
}

/// Long format: `timestamp,ticker,open,high,low,close,volume[,aux...]`.
pub fn write_panel_csv(panel: &MarketPanel, path: impl AsRef<Path>) -> Result<(), MarketDataError> {
    let path = path.as_ref();
    let csv_err = |e| MarketDataError::Csv { path: path.into(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = ["timestamp", "ticker", "open", "high", "low", "close", "volume"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(panel.aux().keys().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for t in 0..panel.len() {
        let ts = format_timestamp(panel.timestamps()[t]);
        for (i, ticker) in panel.tickers().iter().enumerate() {
            let b = panel.bar(t, i);
            let mut rec = vec![
                ts.clone(),
                ticker.clone(),
                b.open.to_string(),
                b.high.to_string(),
                b.low.to_string(),
                b.close.to_string(),
                b.volume.to_string(),
            ];
            rec.extend(panel.aux().values().map(|v| v[t].to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| MarketDataError::Io { path: path.into(), source: e })
}

pub fn read_panel_cache(path: impl AsRef<Path>) -> Result<MarketPanel, MarketDataError> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => MarketDataError::FileNotFound { path: path.into() },
        _ => MarketDataError::Io { path: path.into(), source: e },
    })?;
    decode(&data, path)
}
