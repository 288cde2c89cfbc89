//! CSV and plain-text reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Method, SummaryRow, TrialResult};
use crate::error::{Error, Result};

/// Per-trial CSV columns. Timing columns are `wall_time_s` and `gen_time_s`.
pub const CSV_HEADER: [&str; 13] = [
    "method",
    "n",
    "s",
    "k",
    "r0",
    "trial",
    "seed",
    "R",
    "wall_time_s",
    "pred_size",
    "true_size",
    "inter_size",
    "gen_time_s",
];

const SUMMARY_HEADER: [&str; 9] = [
    "method",
    "n",
    "s",
    "trials",
    "failures",
    "mean_R",
    "var_R",
    "mean_wall_time_s",
    "speedup",
];

/// 17 significant digits: enough to round-trip any `f64`.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv<W: Write>(results: &[TrialResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record([
            r.method.as_str().to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.k.to_string(),
            r.r0.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            float(r.accuracy),
            float(r.wall_time_s),
            r.pred_size.to_string(),
            r.true_size.to_string(),
            r.inter_size.to_string(),
            float(r.gen_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(results: &[TrialResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(results, BufWriter::new(file)).map_err(|e| csv_error(path, e))
}

pub fn parse_csv(path: impl AsRef<Path>) -> Result<Vec<TrialResult>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unexpected header {header:?}"),
        });
    }
    let bad = |line: usize, what: &str| Error::Format {
        path: path.to_path_buf(),
        reason: format!("record {line}: bad {what}"),
    };
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let rec = record.map_err(|e| csv_error(path, e))?;
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(line, CSV_HEADER[i]));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(line, CSV_HEADER[i]));
        out.push(TrialResult {
            method: rec[0].parse::<Method>()?,
            n: int(1)?,
            s: int(2)?,
            k: int(3)?,
            r0: int(4)?,
            trial: int(5)?,
            seed: rec[6].parse().map_err(|_| bad(line, "seed"))?,
            accuracy: real(7)?,
            wall_time_s: real(8)?,
            pred_size: int(9)?,
            true_size: int(10)?,
            inter_size: int(11)?,
            gen_time_s: real(12)?,
        });
    }
    Ok(out)
}

fn speedup_cell(s: Option<f64>) -> String {
    s.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

/// Aligned plain-text table of the summary rows.
pub fn render_summary_table(rows: &[SummaryRow]) -> String {
    let mut cells: Vec<[String; 9]> = vec![SUMMARY_HEADER.map(String::from)];
    for r in rows {
        cells.push([
            r.method.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            format!("{:.4}", r.mean_accuracy),
            format!("{:.3e}", r.var_accuracy),
            format!("{:.4e}", r.mean_wall_time_s),
            speedup_cell(r.speedup),
        ]);
    }
    let mut widths = [0usize; 9];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(rule));
            out.push('\n');
        }
    }
    out
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            float(r.mean_accuracy),
            float(r.var_accuracy),
            float(r.mean_wall_time_s),
            r.speedup.map(float).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Where the CSV twin of a summary table at `path` goes: the same path with
/// `.csv` appended, so it never replaces a sibling `<stem>.csv`.
pub fn summary_twin_path(path: &Path) -> PathBuf {
    let mut twin = path.as_os_str().to_owned();
    twin.push(".csv");
    PathBuf::from(twin)
}

/// Writes the text table to `path` and its CSV twin next to it; returns the
/// twin's path.
pub fn emit_summary(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    std::fs::write(path, render_summary_table(rows)).map_err(|e| Error::io(path, e))?;
    let twin = summary_twin_path(path);
    let file = File::create(&twin).map_err(|e| Error::io(&twin, e))?;
    write_summary_csv(rows, BufWriter::new(file)).map_err(|e| csv_error(&twin, e))?;
    Ok(twin)
}
