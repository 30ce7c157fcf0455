use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One categorical variable: a name plus its ordered level labels.
/// A cell's integer code is the position of its label in `levels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub levels: Vec<String>,
}

/// Ordered set of variables describing the shape of a dataset.
///
/// Schemas inferred from data sort the observed labels lexicographically
/// (byte order), so coding is independent of row order. Schemas loaded from
/// a sidecar file keep the order they were written with, which lets callers
/// pin codes for levels that happen not to occur in a particular sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub variables: Vec<Variable>,
}

impl Schema {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Schema("a schema needs at least one variable".into()));
        }
        for v in &variables {
            if v.name.is_empty() {
                return Err(Error::Schema("variable with an empty name".into()));
            }
            if v.levels.len() < 2 {
                return Err(Error::Schema(format!(
                    "variable {} has {} level(s); at least 2 are required",
                    v.name,
                    v.levels.len()
                )));
            }
            if v.levels.len() > usize::from(u16::MAX) {
                return Err(Error::Schema(format!(
                    "variable {} has too many levels ({})",
                    v.name,
                    v.levels.len()
                )));
            }
            for (i, l) in v.levels.iter().enumerate() {
                if l.is_empty() {
                    return Err(Error::Schema(format!(
                        "variable {} has an empty level label at position {i}",
                        v.name
                    )));
                }
                if v.levels[..i].contains(l) {
                    return Err(Error::Schema(format!(
                        "variable {} repeats level label {l:?}",
                        v.name
                    )));
                }
            }
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Schema(format!("duplicate variable name {}", v.name)));
            }
        }
        Ok(Schema { variables })
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.variables.len()
    }

    /// Level counts per variable.
    pub fn dims(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.levels.len()).collect()
    }

    pub fn dim(&self, j: usize) -> usize {
        self.variables[j].levels.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn level_code(&self, j: usize, label: &str) -> Option<u16> {
        self.variables[j]
            .levels
            .iter()
            .position(|l| l == label)
            .map(|c| c as u16)
    }

    pub fn level_label(&self, j: usize, code: u16) -> &str {
        &self.variables[j].levels[usize::from(code)]
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: Schema = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("schema file {}: {e}", path.display())))?;
        Schema::new(schema.variables)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}
