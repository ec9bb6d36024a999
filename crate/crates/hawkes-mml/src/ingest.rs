//! Convert real-valued time series into event streams.
//!
//! A node fires at sample `r` when the latest value ranks among the top
//! `quantile` fraction of the trailing window ending at `r`. The rule is
//! rank-based, so it is invariant under strictly monotone transforms of a
//! series; ties with the cutoff count as inclusion. Usable sample indices
//! are mapped affinely onto `(0, T]`.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::events::EventData;

/// Named real-valued series over a shared timestamp column.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub timestamps: Vec<String>,
    pub names: Vec<String>,
    /// One column per node, all of equal length.
    pub columns: Vec<Vec<f64>>,
}

impl SeriesTable {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.columns.len()
    }
}

/// Parse a delimited file whose first column is a date/index label and
/// remaining columns are one numeric series per node. Ragged or
/// non-numeric rows are rejected with their row number.
pub fn load_csv_reader<R: Read>(r: R, delimiter: u8) -> Result<SeriesTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(r);
    let headers = reader.headers().map_err(Error::Csv)?.clone();
    if headers.len() < 2 {
        return Err(Error::Data(
            "need a date column plus at least one series".into(),
        ));
    }
    let names: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let width = headers.len();

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (idx, rec) in reader.records().enumerate() {
        let row_no = idx + 2; // 1-based, counting the header
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Data(format!(
                "row {row_no}: expected {width} columns, got {}",
                rec.len()
            )));
        }
        timestamps.push(rec[0].trim().to_string());
        for (c, field) in rec.iter().skip(1).enumerate() {
            let trimmed = field.trim();
            if trimmed.is_empty() {
                return Err(Error::Data(format!(
                    "row {row_no}: missing value in column {:?}",
                    names[c]
                )));
            }
            let value: f64 = trimmed.parse().map_err(|_| {
                Error::Data(format!(
                    "row {row_no}: non-numeric value {trimmed:?} in column {:?}",
                    names[c]
                ))
            })?;
            columns[c].push(value);
        }
    }
    Ok(SeriesTable {
        timestamps,
        names,
        columns,
    })
}

pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<SeriesTable> {
    let bytes = std::fs::read(&path)?;
    // Sniff the delimiter from the header line; these files come as comma
    // or semicolon separated.
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    let header = &bytes[..header_end];
    let delimiter = if header.contains(&b';') && !header.contains(&b',') {
        b';'
    } else {
        b','
    };
    load_csv_reader(&bytes[..], delimiter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    /// Rolling window length in samples.
    pub window: usize,
    /// Fraction of the window that counts as "top"; an event fires when
    /// the latest value ranks within `ceil(quantile * window)`.
    pub quantile: f64,
    /// Output horizon the usable sample range is mapped onto.
    pub horizon: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            window: 252,
            quantile: 0.2,
            horizon: 400.0,
        }
    }
}

/// Per-node extraction summary.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub counts: Vec<usize>,
    pub usable_samples: usize,
}

/// Apply the rolling top-quantile rule to every column.
///
/// Sample `r` (0-based, `r >= window - 1`) fires for a column when fewer
/// than `ceil(quantile * window)` window values strictly exceed the value
/// at `r`; the event time is `T * (r - window + 2) / (L - window + 1)`.
pub fn extract_events(
    table: &SeriesTable,
    cfg: &IngestConfig,
) -> Result<(EventData, IngestReport)> {
    let len = table.len();
    if cfg.window == 0 || cfg.window > len {
        return Err(Error::Config(format!(
            "window {} outside 1..={} (series length)",
            cfg.window, len
        )));
    }
    if !(cfg.quantile > 0.0 && cfg.quantile < 1.0) {
        return Err(Error::Config(format!(
            "quantile {} outside (0, 1)",
            cfg.quantile
        )));
    }
    if !(cfg.horizon > 0.0) {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let usable = len - cfg.window + 1;
    let top = (cfg.quantile * cfg.window as f64).ceil() as usize;

    let mut per_node: Vec<Vec<f64>> = Vec::with_capacity(table.dims());
    for column in &table.columns {
        let mut events = Vec::new();
        for r in cfg.window - 1..len {
            let latest = column[r];
            let window = &column[r + 1 - cfg.window..=r];
            let strictly_above = window.iter().filter(|&&v| v > latest).count();
            if strictly_above < top {
                let t = cfg.horizon * (r + 2 - cfg.window) as f64 / usable as f64;
                events.push(t);
            }
        }
        per_node.push(events);
    }
    let counts = per_node.iter().map(|v| v.len()).collect();
    let data = EventData::new(per_node, cfg.horizon)?;
    Ok((
        data,
        IngestReport {
            counts,
            usable_samples: usable,
        },
    ))
}
