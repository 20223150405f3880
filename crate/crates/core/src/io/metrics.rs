use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: &str = "layer,psnr_db,layer_cost";

/// One row of a per-layer metrics table. `psnr_db` is NaN when no
/// reference image was available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub layer: usize,
    pub psnr_db: f64,
    pub layer_cost: f64,
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.14e}")
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

pub fn format_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.layer, fmt_value(row.psnr_db), fmt_value(row.layer_cost));
    }
    out
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        _ => return Err(Error::InvalidInput(format!("metrics CSV must start with '{HEADER}'"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || Error::InvalidInput(format!("metrics CSV line {}: '{line}'", i + 2));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad());
            }
            Ok(MetricsRow {
                layer: fields[0].parse().map_err(|_| bad())?,
                psnr_db: parse_value(fields[1]).ok_or_else(bad)?,
                layer_cost: parse_value(fields[2]).ok_or_else(bad)?,
            })
        })
        .collect()
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    std::fs::write(path, format_metrics_csv(rows))?;
    Ok(())
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    parse_metrics_csv(&std::fs::read_to_string(path)?)
}
