//! File formats, trajectory alignment and evaluation.
//!
//! All text files are UTF-8, whitespace separated, with `#` comments and `.`
//! as the decimal separator.

pub mod align;
pub mod observations;
pub mod trajectory;

use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::FrameDiagnostics;

pub use align::{
    associate, ate_rmse, evaluate_ate, umeyama, umeyama_align_7dof, AteReport, Similarity,
};
pub use observations::{load_observations, save_observations, ObservationSet};
pub use trajectory::{parse_trajectory, read_trajectory, write_trajectory, write_trajectory_file};

pub(crate) fn parse_error(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

/// Non-comment records of exactly `n` finite decimal fields, with 1-based
/// line numbers.
pub(crate) fn records<'a>(
    text: &'a str,
    origin: &'a str,
    n: usize,
) -> impl Iterator<Item = Result<(usize, Vec<f64>)>> + 'a {
    text.lines().enumerate().filter_map(move |(i, raw)| {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n {
            return Some(Err(parse_error(
                origin,
                i + 1,
                format!("expected {n} fields, found {}", fields.len()),
            )));
        }
        let parsed: Result<Vec<f64>> = fields
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(origin, i + 1, format!("invalid number `{f}`"))),
            })
            .collect();
        Some(parsed.map(|v| (i + 1, v)))
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn diagnostics_csv(rows: &[FrameDiagnostics]) -> String {
    let mut out = String::from(FrameDiagnostics::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
