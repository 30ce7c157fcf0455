use std::path::Path;
use std::sync::Arc;

use super::Schema;
use crate::{Error, Result};

/// A set of disallowed level combinations (structural zeros).
///
/// Each pattern fixes some variables to specific levels and leaves the rest
/// as wildcards; a complete record matches the set if some pattern's fixed
/// entries all agree with it. The empty set matches nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DisallowedPatternSet {
    schema: Arc<Schema>,
    patterns: Vec<Vec<Option<u16>>>,
}

impl DisallowedPatternSet {
    pub fn new(schema: Arc<Schema>, patterns: Vec<Vec<Option<u16>>>) -> Result<Self> {
        let p = schema.p();
        for (idx, pat) in patterns.iter().enumerate() {
            if pat.len() != p {
                return Err(Error::Schema(format!(
                    "pattern {idx} has {} entries, expected {p}",
                    pat.len()
                )));
            }
            if pat.iter().all(|e| e.is_none()) {
                return Err(Error::Schema(format!(
                    "pattern {idx} fixes no variable; it would disallow everything"
                )));
            }
            for (j, entry) in pat.iter().enumerate() {
                if let Some(code) = entry {
                    if usize::from(*code) >= schema.dim(j) {
                        return Err(Error::Schema(format!(
                            "pattern {idx} fixes variable {} to code {code}, out of range",
                            schema.variables[j].name
                        )));
                    }
                }
            }
        }
        Ok(DisallowedPatternSet { schema, patterns })
    }

    pub fn empty(schema: Arc<Schema>) -> Self {
        DisallowedPatternSet { schema, patterns: Vec::new() }
    }

    /// Reads patterns from a CSV whose header must repeat the schema's
    /// column names in order. Cells equal to `placeholder` (or empty) are
    /// wildcards.
    pub fn load_csv(path: &Path, schema: Arc<Schema>, placeholder: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_path(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
            .iter()
            .map(|h| h.to_string())
            .collect();
        if names != schema.var_names() {
            return Err(Error::Format(format!(
                "{} columns are {names:?}; the disallowed-pattern file must use the schema's column order {:?}",
                path.display(),
                schema.var_names()
            )));
        }
        let mut patterns = Vec::new();
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
            let mut pat = Vec::with_capacity(names.len());
            for (j, cell) in record.iter().enumerate() {
                if cell.is_empty() || cell == placeholder {
                    pat.push(None);
                } else {
                    match schema.level_code(j, cell) {
                        Some(code) => pat.push(Some(code)),
                        None => {
                            return Err(Error::Schema(format!(
                                "{} row {} column {}: label {cell:?} is not a level of the schema",
                                path.display(),
                                idx + 1,
                                schema.variables[j].name
                            )))
                        }
                    }
                }
            }
            patterns.push(pat);
        }
        Self::new(schema, patterns)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn patterns(&self) -> &[Vec<Option<u16>>] {
        &self.patterns
    }

    /// Whether the complete record matches any disallowed pattern.
    #[inline]
    pub fn matches(&self, record: &[u16]) -> bool {
        assert_eq!(record.len(), self.schema.p(), "record length must equal the variable count");
        self.patterns.iter().any(|pat| {
            pat.iter()
                .zip(record)
                .all(|(entry, &value)| entry.map_or(true, |fixed| fixed == value))
        })
    }
}
