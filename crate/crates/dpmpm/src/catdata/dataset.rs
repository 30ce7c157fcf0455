use std::sync::Arc;

use super::Schema;
use crate::{Error, Result};

/// Integer-coded categorical records; `None` marks a missing cell.
///
/// Cells are stored row-major. Codes index into the schema's level lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDataset {
    schema: Arc<Schema>,
    cells: Vec<Option<u16>>,
    n: usize,
}

impl CategoricalDataset {
    pub fn new(schema: Arc<Schema>, cells: Vec<Option<u16>>) -> Result<Self> {
        let p = schema.p();
        if p == 0 || cells.len() % p != 0 {
            return Err(Error::Schema(format!(
                "cell buffer of length {} is not a multiple of {p} variables",
                cells.len()
            )));
        }
        let n = cells.len() / p;
        for (idx, cell) in cells.iter().enumerate() {
            if let Some(code) = cell {
                let j = idx % p;
                if usize::from(*code) >= schema.dim(j) {
                    return Err(Error::Schema(format!(
                        "record {} has code {} for variable {} (only {} levels)",
                        idx / p,
                        code,
                        schema.variables[j].name,
                        schema.dim(j)
                    )));
                }
            }
        }
        Ok(CategoricalDataset { schema, cells, n })
    }

    /// Builds a dataset with no missing cells from raw codes.
    pub fn from_complete(schema: Arc<Schema>, codes: &[u16]) -> Result<Self> {
        Self::new(schema, codes.iter().map(|&c| Some(c)).collect())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn n_records(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.schema.p()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<u16> {
        self.cells[i * self.schema.p() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<u16>) {
        if let Some(code) = value {
            assert!(usize::from(code) < self.schema.dim(j), "level code out of range");
        }
        let p = self.schema.p();
        self.cells[i * p + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Option<u16>] {
        let p = self.schema.p();
        &self.cells[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<u16>]> {
        self.cells.chunks_exact(self.schema.p())
    }

    pub fn n_missing(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.cells.iter().all(|c| c.is_some())
    }

    /// (record, variable) positions of every missing cell, row-major order.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let p = self.schema.p();
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(idx, _)| (idx / p, idx % p))
            .collect()
    }

    /// Copies the row into `buf`, which must be fully observed.
    /// Returns false if any cell is missing.
    pub fn complete_row_into(&self, i: usize, buf: &mut [u16]) -> bool {
        for (b, c) in buf.iter_mut().zip(self.row(i)) {
            match c {
                Some(v) => *b = *v,
                None => return false,
            }
        }
        true
    }
}
