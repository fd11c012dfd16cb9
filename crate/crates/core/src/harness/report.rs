//! Aggregation and CSV/JSON emission.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::beamforming::Scheme;
use crate::error::{Error, Result};

use super::{ExperimentSpec, ResultRow};

pub const CSV_HEADER: [&str; 8] = ["drop", "scheme", "ng", "quantized", "rms_ds_ns", "stream_mcs", "sum_tput", "fb_bits"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub scheme: Scheme,
    pub n_g: usize,
    pub quantized: bool,
    pub rms_ds_ns: f64,
    pub n_drops: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / mean(tdma_mimo) − 1` over the same drops.
    pub gain_vs_tdma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
}

impl Summary {
    pub fn cell(&self, scheme: Scheme, n_g: usize, quantized: bool, rms_ds: f64) -> Option<&CellSummary> {
        let ns = rms_ns(rms_ds);
        self.cells
            .iter()
            .find(|c| c.scheme == scheme && c.n_g == n_g && c.quantized == quantized && c.rms_ds_ns == ns)
    }
}

/// Delay spread in ns, rounded to 1e-6 ns so that grid values print cleanly.
pub fn rms_ns(rms_ds: f64) -> f64 {
    (rms_ds * 1e15).round() / 1e6
}

type Key = (usize, usize, bool, i64);

fn key(r: &ResultRow) -> Key {
    let order = Scheme::ALL.iter().position(|&s| s == r.scheme).unwrap();
    (order, r.n_g, r.quantized, (r.rms_ds * 1e15).round() as i64)
}

/// Mean and standard error per cell; rows are folded in their given order.
pub fn aggregate(rows: &[ResultRow]) -> Summary {
    let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    let mut meta: BTreeMap<Key, &ResultRow> = BTreeMap::new();
    for r in rows {
        let k = key(r);
        groups.entry(k).or_default().push(r.sum_tput);
        meta.entry(k).or_insert(r);
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let stderr = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        (mean, stderr)
    };
    let tdma_order = Scheme::ALL.iter().position(|&s| s == Scheme::TdmaMimo).unwrap();
    let cells = groups
        .iter()
        .map(|(k, v)| {
            let r = meta[k];
            let (mean, stderr) = stats(v);
            let gain_vs_tdma = groups.get(&(tdma_order, k.1, k.2, k.3)).and_then(|t| {
                let (tm, _) = stats(t);
                (tm > 0.0).then(|| mean / tm - 1.0)
            });
            CellSummary {
                scheme: r.scheme,
                n_g: r.n_g,
                quantized: r.quantized,
                rms_ds_ns: rms_ns(r.rms_ds),
                n_drops: v.len(),
                mean,
                stderr,
                gain_vs_tdma,
            }
        })
        .collect();
    Summary { cells }
}

pub fn format_mcs(mcs: &[Option<usize>]) -> String {
    mcs.iter().map(|m| m.map_or_else(|| "-".to_string(), |i| i.to_string())).collect::<Vec<_>>().join(";")
}

pub fn parse_mcs(s: &str) -> Result<Vec<Option<usize>>> {
    s.split(';')
        .map(|f| match f {
            "-" => Ok(None),
            x => x.parse().map(Some).map_err(|_| Error::Config(format!("bad MCS field `{x}`"))),
        })
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}

pub fn write_rows_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.drop.to_string(),
            r.scheme.to_string(),
            r.n_g.to_string(),
            (r.quantized as u8).to_string(),
            rms_ns(r.rms_ds).to_string(),
            format_mcs(&r.stream_mcs),
            r.sum_tput.to_string(),
            r.fb_bits.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let bad = |what: &str| Error::Config(format!("{}: bad {what}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        rows.push(ResultRow {
            drop: rec[0].parse().map_err(|_| bad("drop"))?,
            scheme: rec[1].parse()?,
            n_g: rec[2].parse().map_err(|_| bad("ng"))?,
            quantized: &rec[3] == "1",
            rms_ds: rec[4].parse::<f64>().map_err(|_| bad("rms_ds_ns"))? * 1e-9,
            stream_mcs: parse_mcs(&rec[5])?,
            sum_tput: rec[6].parse().map_err(|_| bad("sum_tput"))?,
            fb_bits: rec[7].parse().map_err(|_| bad("fb_bits"))?,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct JsonOut<'a> {
    spec: &'a ExperimentSpec,
    summary: &'a Summary,
}

pub fn write_json(path: &Path, spec: &ExperimentSpec, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(&JsonOut { spec, summary })
        .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
