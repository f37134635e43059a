//! CSV inputs and outputs.

use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{CliError, CliResult};

/// Writes a header row followed by `rows`.
pub fn write_table<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.iter().map(AsRef::as_ref))?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `index,label` with one row per frame.
pub fn write_labels(path: &Path, labels: &[f64]) -> CliResult<()> {
    let rows: Vec<Vec<String>> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| vec![i.to_string(), l.to_string()])
        .collect();
    write_table(path, &["index", "label"], &rows)
}

pub fn read_labels(path: &Path) -> CliResult<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["index", "label"] {
        return Err(CliError::data("bad_labels", format!("{}: header must be index,label", path.display())));
    }
    let mut labels = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let index: usize = parse_cell(path, row, rec.get(0))?;
        if index != row {
            return Err(CliError::data(
                "bad_labels",
                format!("{}: row {row} has index {index}", path.display()),
            ));
        }
        labels.push(parse_cell(path, row, rec.get(1))?);
    }
    Ok(labels)
}

fn parse_cell<T: std::str::FromStr>(path: &Path, row: usize, cell: Option<&str>) -> CliResult<T> {
    cell.and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| CliError::data("bad_csv", format!("{}: unreadable cell in row {row}", path.display())))
}

/// Numeric matrix; `header` names the columns when given.
pub fn write_matrix(path: &Path, header: Option<&[String]>, m: ArrayView2<'_, f64>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for row in m.outer_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path, has_header: bool) -> CliResult<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(has_header).from_path(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(CliError::data("bad_csv", format!("{}: ragged row {row}", path.display())));
        }
        for cell in rec.iter() {
            data.push(parse_cell(path, row, Some(cell))?);
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| CliError::data("bad_csv", format!("{}: no rows", path.display())))?;
    Ok(Array2::from_shape_vec((rows, width), data).expect("rectangular"))
}
