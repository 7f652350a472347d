//! CSV ingestion and the plain-text output formats.

use crate::config::Provenance;
use crate::error::{CliError, Result};
use hrtri_core::data::{AnalysisReport, PairedSeries, SeriesKind};
use hrtri_core::sim::{ConvergenceReport, EmpiricalJointCdf};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

/// A column picked by 1-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().parse::<usize>() {
            Ok(0) => Err("column positions are 1-based".into()),
            Ok(i) => Ok(Column::Index(i)),
            Err(_) if !s.trim().is_empty() => Ok(Column::Name(s.trim().to_string())),
            Err(_) => Err("empty column name".into()),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CsvOptions {
    pub x_column: Column,
    pub y_column: Column,
    pub date_column: Option<Column>,
    pub has_header: bool,
    /// Skip bad rows with a warning instead of failing.
    pub lenient: bool,
    #[serde(serialize_with = "kind_name")]
    pub kind: SeriesKind,
}

fn kind_name<S: serde::Serializer>(k: &SeriesKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match k {
        SeriesKind::Prices => "prices",
        SeriesKind::Returns => "returns",
    })
}

impl CsvOptions {
    pub fn new(x_column: Column, y_column: Column, has_header: bool, kind: SeriesKind) -> Self {
        CsvOptions { x_column, y_column, date_column: None, has_header, lenient: false, kind }
    }
}

/// A loaded series with the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: PairedSeries,
    pub warnings: Vec<String>,
    /// 1-based line numbers of skipped rows (lenient mode).
    pub skipped_lines: Vec<u64>,
    pub bytes: Vec<u8>,
}

const MAX_LISTED: usize = 20;

fn list_lines(lines: &[u64]) -> String {
    let shown: Vec<String> = lines.iter().take(MAX_LISTED).map(|l| l.to_string()).collect();
    if lines.len() > MAX_LISTED {
        format!("{} and {} more", shown.join(", "), lines.len() - MAX_LISTED)
    } else {
        shown.join(", ")
    }
}

fn resolve(column: &Column, header: Option<&csv::StringRecord>, path: &Path) -> Result<usize> {
    match column {
        Column::Index(i) => Ok(i - 1),
        Column::Name(name) => header
            .and_then(|h| h.iter().position(|f| f == name))
            .ok_or_else(|| CliError::Ingest {
                path: path.into(),
                reason: match header {
                    Some(_) => format!("no column named {name:?}"),
                    None => format!("column {name:?} requested by name but the file has no header"),
                },
                rows: Vec::new(),
            }),
    }
}

/// Reads two numeric columns (and optionally a date column) from a CSV file.
///
/// Lines starting with `#` are comments. Blank lines, ragged rows and cells
/// that do not parse as finite numbers are reported with their 1-based line
/// numbers; in lenient mode they are skipped instead.
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<LoadedSeries> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Ingest {
        path: path.into(),
        reason: format!("file is not UTF-8: {e}"),
        rows: Vec::new(),
    })?;
    let blank: Vec<u64> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| l.trim().is_empty())
        .map(|(i, _)| i as u64 + 1)
        .collect();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = if opts.has_header {
        match records.next() {
            Some(r) => Some(r?),
            None => None,
        }
    } else {
        None
    };
    let xi = resolve(&opts.x_column, header.as_ref(), path)?;
    let yi = resolve(&opts.y_column, header.as_ref(), path)?;
    let di = opts.date_column.as_ref().map(|c| resolve(c, header.as_ref(), path)).transpose()?;
    let mut width = header.as_ref().map(|h| h.len());

    let (mut x, mut y, mut dates) = (Vec::new(), Vec::new(), Vec::new());
    let mut ragged = Vec::new();
    let mut bad_cells = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            ragged.push(line);
            continue;
        }
        let cell = |j: usize| record.get(j).and_then(|v| v.parse::<f64>().ok()).filter(|v| v.is_finite());
        match (cell(xi), cell(yi)) {
            (Some(a), Some(b)) => {
                x.push(a);
                y.push(b);
                if let Some(d) = di {
                    dates.push(record.get(d).unwrap_or("").to_string());
                }
            }
            _ => bad_cells.push(line),
        }
    }
    let mut warnings = Vec::new();
    let mut skipped: Vec<u64> = blank.iter().chain(&ragged).chain(&bad_cells).copied().collect();
    skipped.sort_unstable();
    let problems = [
        (&blank, "blank"),
        (&ragged, "ragged (wrong number of fields)"),
        (&bad_cells, "missing or non-numeric values"),
    ];
    for (lines, what) in problems {
        if lines.is_empty() {
            continue;
        }
        let msg = format!("{} {what} row(s) at line(s) {}", lines.len(), list_lines(lines));
        if !opts.lenient {
            return Err(CliError::Ingest { path: path.into(), reason: msg, rows: skipped });
        }
        warnings.push(format!("skipped {msg}"));
    }
    if x.len() < 3 {
        return Err(CliError::Ingest {
            path: path.into(),
            reason: format!("only {} valid row(s); at least 3 are required", x.len()),
            rows: skipped,
        });
    }
    let labels = [label(&opts.x_column, header.as_ref(), xi), label(&opts.y_column, header.as_ref(), yi)];
    let series = PairedSeries::with_dates(labels, x, y, opts.kind, di.map(|_| dates))?;
    Ok(LoadedSeries { series, warnings, skipped_lines: skipped, bytes })
}

fn label(c: &Column, header: Option<&csv::StringRecord>, i: usize) -> String {
    match (c, header) {
        (Column::Name(n), _) => n.clone(),
        (Column::Index(_), Some(h)) => h.get(i).unwrap_or_default().to_string(),
        (Column::Index(k), None) => format!("column{k}"),
    }
}

/// Opens `path` for writing, or stdout when `path` is `None`.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn csv_body<W: Write>(mut w: W, provenance: &Provenance, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    w.write_all(provenance.csv_header()?.as_bytes())?;
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub const DIAGNOSTIC_COLUMNS: [&str; 10] =
    ["n", "x", "y", "empirical", "limit", "correction", "raw_error", "scaled_error", "corrected_error", "stderr"];

pub fn write_diagnostic_csv<W: Write>(w: W, provenance: &Provenance, report: &ConvergenceReport) -> Result<()> {
    csv_body(
        w,
        provenance,
        &DIAGNOSTIC_COLUMNS,
        report.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.x),
                num(r.y),
                num(r.empirical),
                num(r.limit),
                num(r.correction),
                num(r.raw_error),
                num(r.scaled_error),
                num(r.corrected_error),
                num(r.stderr),
            ]
        }),
    )
}

pub fn write_cdf_csv<W: Write>(w: W, provenance: &Provenance, cdf: &EmpiricalJointCdf, limit: &[f64]) -> Result<()> {
    csv_body(
        w,
        provenance,
        &["x", "y", "u_x", "u_y", "empirical", "stderr", "marginal_x", "marginal_y", "limit"],
        (0..cdf.grid.len()).map(|k| {
            vec![
                num(cdf.grid[k].0),
                num(cdf.grid[k].1),
                num(cdf.u_values[k].0),
                num(cdf.u_values[k].1),
                num(cdf.estimates[k]),
                num(cdf.stderr[k]),
                num(cdf.marginals[k].0),
                num(cdf.marginals[k].1),
                num(limit[k]),
            ]
        }),
    )
}

/// Rows of `(label, values...)` under the given header.
pub fn write_table_csv<W: Write>(w: W, provenance: &Provenance, header: &[&str], rows: &[(String, Vec<f64>)]) -> Result<()> {
    csv_body(
        w,
        provenance,
        header,
        rows.iter().map(|(l, v)| std::iter::once(l.clone()).chain(v.iter().map(|&x| num(x))).collect()),
    )
}

/// Plot data `i, prefix_corr, rho_hat` (plus `date` when available);
/// undefined prefix correlations are written as `NA`.
pub fn write_plot_csv<W: Write>(w: W, provenance: &Provenance, report: &AnalysisReport, dates: Option<&[String]>) -> Result<()> {
    let mut header = vec!["i", "prefix_corr", "rho_hat"];
    if dates.is_some() {
        header.push("date");
    }
    csv_body(
        w,
        provenance,
        &header,
        report.prefix_corr.iter().map(|&(i, r)| {
            let mut row = vec![i.to_string(), r.map_or_else(|| "NA".into(), num), num(report.rho_hat)];
            if let Some(d) = dates {
                row.push(d.get(i - 1).cloned().unwrap_or_default());
            }
            row
        }),
    )
}

/// Writes a JSON document `{"provenance": ..., "result": ...}`.
pub fn write_json<W: Write, T: serde::Serialize>(mut w: W, provenance: &Provenance, result: &T) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Doc<'a, T> {
        provenance: &'a Provenance,
        result: &'a T,
    }
    serde_json::to_writer_pretty(&mut w, &Doc { provenance, result })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
