use std::fs;
use std::path::Path;

use cphmm::datasets;
use cphmm::{Family, ObservationSeries};

use crate::error::CliError;

/// Load a builtin dataset by name, or a single-column CSV file.
///
/// Builtin names take precedence over files of the same name.
pub fn load(source: &str, family: Family) -> Result<ObservationSeries, CliError> {
    let series = match datasets::builtin(source) {
        Some(series) => series,
        None => parse(&read(source)?, family)?,
    };
    series.validate_for(family)?;
    Ok(series)
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(Path::new(path)).map_err(|e| CliError::Data(format!("{path}: {e}")))
}

/// Parse single-column CSV text. An empty field or `NA` marks a missing
/// observation; a non-numeric first line is taken as a header.
pub fn parse(text: &str, family: Family) -> Result<ObservationSeries, CliError> {
    let mut lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, unquote(l.trim())))
        .collect();
    while lines.last().is_some_and(|(_, l)| l.is_empty()) {
        lines.pop();
    }

    let mut values = Vec::with_capacity(lines.len());
    for (idx, &(line, field)) in lines.iter().enumerate() {
        if field.contains(',') {
            return Err(CliError::Data(format!(
                "line {line}: expected a single column, got {field:?}"
            )));
        }
        if field.is_empty() || field == "NA" {
            values.push(None);
            continue;
        }
        let x: f64 = match field.parse() {
            Ok(x) => x,
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(CliError::Data(format!(
                    "line {line}: cannot parse {field:?} as a number"
                )))
            }
        };
        if !x.is_finite() {
            return Err(CliError::Data(format!(
                "line {line}: non-finite value {field:?}"
            )));
        }
        if family == Family::Poisson && (x < 0.0 || x.fract() != 0.0) {
            return Err(CliError::Data(format!(
                "line {line}: poisson observations must be non-negative integers, got {field}"
            )));
        }
        values.push(Some(x));
    }
    if values.is_empty() {
        return Err(CliError::Data("no observations found".into()));
    }
    Ok(ObservationSeries::from_options(values)?)
}

fn unquote(field: &str) -> &str {
    field
        .strip_prefix('"')
        .and_then(|f| f.strip_suffix('"'))
        .unwrap_or(field)
}
