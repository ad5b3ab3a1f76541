use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Dataset;

/// Reads a comma-separated numeric file whose last column is the target.
///
/// A first line containing any non-numeric cell is treated as a header, as
/// is a first line of bare column indices `0,1,...,w-1` (w >= 3), which is
/// what dataframe exports write when columns are unnamed.
/// Blank lines are skipped. Row numbers in errors are 1-based file lines.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Ingestion {
        row: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_dataset(&text)
}

fn is_index_header(cells: &[&str]) -> bool {
    cells.len() >= 3 && cells.iter().enumerate().all(|(i, c)| *c == i.to_string())
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut width: Option<usize> = None;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<Option<f64>> = cells.iter().map(|c| c.parse::<f64>().ok()).collect();
        if first {
            first = false;
            if parsed.iter().any(Option::is_none) || is_index_header(&cells) {
                continue;
            }
        }
        if cells.len() < 2 {
            return Err(Error::Ingestion {
                row,
                message: "need at least one feature column and a target column".into(),
            });
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Ingestion {
                    row,
                    message: format!("expected {w} columns, found {}", cells.len()),
                });
            }
            _ => {}
        }
        for (col, (cell, value)) in cells.iter().zip(&parsed).enumerate() {
            match value {
                Some(v) if v.is_finite() => {}
                Some(_) => {
                    return Err(Error::Ingestion {
                        row,
                        message: format!("non-finite value `{cell}` in column {}", col + 1),
                    })
                }
                None => {
                    return Err(Error::Ingestion {
                        row,
                        message: format!("non-numeric value `{cell}` in column {}", col + 1),
                    })
                }
            }
        }
        let values: Vec<f64> = parsed.into_iter().map(|v| v.expect("checked")).collect();
        let (target, features) = values.split_last().expect("at least two cells");
        inputs.extend_from_slice(features);
        targets.push(*target);
    }
    let Some(width) = width else {
        return Err(Error::Ingestion {
            row: 0,
            message: "no data rows".into(),
        });
    };
    if targets.len() < 2 {
        return Err(Error::Ingestion {
            row: 0,
            message: format!("at least two data rows are required, found {}", targets.len()),
        });
    }
    Dataset::new(inputs, targets, width - 1).map_err(|e| Error::Ingestion {
        row: 0,
        message: e.to_string(),
    })
}
