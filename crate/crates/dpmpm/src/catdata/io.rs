use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use super::{CategoricalDataset, Schema, Variable};
use crate::{Error, Result};

/// Reads a headered CSV of categorical records, inferring the schema from
/// the data: the level set of each column is the lexicographically sorted
/// set of observed labels. Cells equal to `missing_token` (or empty) are
/// missing.
pub fn load_csv(path: &Path, missing_token: &str) -> Result<CategoricalDataset> {
    let (names, rows) = read_raw(path)?;
    let mut level_sets: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); names.len()];
    for row in &rows {
        for (j, cell) in row.iter().enumerate() {
            if !is_missing(cell, missing_token) {
                level_sets[j].insert(cell);
            }
        }
    }
    let mut variables = Vec::with_capacity(names.len());
    for (name, set) in names.iter().zip(&level_sets) {
        if set.is_empty() {
            return Err(Error::Schema(format!(
                "column {name} of {} has no observed values; supply a schema sidecar",
                path.display()
            )));
        }
        if set.len() < 2 {
            return Err(Error::Schema(format!(
                "column {name} of {} has a single observed level {:?}; supply a schema sidecar",
                path.display(),
                set.iter().next().unwrap()
            )));
        }
        variables.push(Variable {
            name: name.clone(),
            levels: set.iter().map(|s| s.to_string()).collect(),
        });
    }
    let schema = Arc::new(Schema::new(variables)?);
    code_rows(&rows, &schema, missing_token, path)
}

/// Like [`load_csv`] but with a caller-supplied schema; labels outside the
/// schema are an error. Header names must match the schema's variables in
/// order.
pub fn load_csv_with_schema(
    path: &Path,
    missing_token: &str,
    schema: Arc<Schema>,
) -> Result<CategoricalDataset> {
    let (names, rows) = read_raw(path)?;
    let expected = schema.var_names();
    if names != expected {
        return Err(Error::Schema(format!(
            "columns of {} are {names:?}, expected {expected:?}",
            path.display()
        )));
    }
    code_rows(&rows, &schema, missing_token, path)
}

fn read_raw(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    if names.is_empty() || names.iter().any(|n| n.is_empty()) {
        return Err(Error::Format(format!(
            "{} needs a header row of nonempty column names",
            path.display()
        )));
    }
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Format(format!(
                "{} repeats column name {n}",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if record.len() != names.len() {
            return Err(Error::Format(format!(
                "{} row {} has {} fields, expected {}",
                path.display(),
                idx + 1,
                record.len(),
                names.len()
            )));
        }
        rows.push(record.iter().map(|c| c.to_string()).collect());
    }
    Ok((names, rows))
}

fn code_rows(
    rows: &[Vec<String>],
    schema: &Arc<Schema>,
    missing_token: &str,
    path: &Path,
) -> Result<CategoricalDataset> {
    let p = schema.p();
    let mut cells = Vec::with_capacity(rows.len() * p);
    for (i, row) in rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if is_missing(cell, missing_token) {
                cells.push(None);
            } else {
                match schema.level_code(j, cell) {
                    Some(code) => cells.push(Some(code)),
                    None => {
                        return Err(Error::Schema(format!(
                            "{} row {} column {}: label {cell:?} is not a level of the schema",
                            path.display(),
                            i + 1,
                            schema.variables[j].name
                        )))
                    }
                }
            }
        }
    }
    CategoricalDataset::new(Arc::clone(schema), cells)
}

fn is_missing(cell: &str, missing_token: &str) -> bool {
    cell.is_empty() || cell == missing_token
}

/// Writes the dataset as a headered CSV, rendering missing cells with
/// `missing_token`. Fields are quoted only when necessary.
pub fn write_csv(data: &CategoricalDataset, path: &Path, missing_token: &str) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_path(path)?;
    let schema = data.schema();
    writer.write_record(schema.var_names())?;
    for i in 0..data.n_records() {
        let row: Vec<&str> = (0..schema.p())
            .map(|j| match data.get(i, j) {
                Some(code) => schema.level_label(j, code),
                None => missing_token,
            })
            .collect();
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}
