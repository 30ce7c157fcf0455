use super::combine::{combine, CombiningRule, PerDatasetEstimate, PooledEstimate};
use crate::catdata::CategoricalDataset;
use crate::{Error, Result};

/// Per-dataset estimates of every joint cell probability for one variable
/// tuple: `estimates[cell][dataset]`.
#[derive(Debug, Clone)]
pub struct ProbsTable {
    pub vars: Vec<String>,
    /// One label per cell, level labels joined with `:`, first variable
    /// slowest.
    pub labels: Vec<String>,
    pub estimates: Vec<Vec<PerDatasetEstimate>>,
}

/// A pooled cell-probability table.
#[derive(Debug, Clone)]
pub struct PooledProbs {
    pub vars: Vec<String>,
    pub rows: Vec<PooledEstimate>,
}

/// Estimates joint cell probabilities for each requested variable tuple in
/// each released dataset. The estimate for a cell is its relative frequency
/// `q`, with variance `q (1 - q) / n`. Cells are enumerated over the full
/// level cross product (first listed variable slowest), so every table sums
/// to one per dataset.
pub fn compute_probs(
    datasets: &[CategoricalDataset],
    varlists: &[Vec<String>],
) -> Result<Vec<ProbsTable>> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::Config("no datasets to estimate from".into()))?;
    let schema = first.schema();
    for (d, ds) in datasets.iter().enumerate() {
        if ds.schema() != schema {
            return Err(Error::Schema(format!(
                "dataset {d} was coded against a different schema"
            )));
        }
    }
    if varlists.is_empty() {
        return Err(Error::Config("no variable tuples to estimate".into()));
    }

    let mut tables = Vec::with_capacity(varlists.len());
    for vars in varlists {
        if vars.is_empty() {
            return Err(Error::Config("a variable tuple is empty".into()));
        }
        let mut indices = Vec::with_capacity(vars.len());
        for name in vars {
            let j = schema
                .var_index(name)
                .ok_or_else(|| Error::Config(format!("unknown variable {name}")))?;
            if indices.contains(&j) {
                return Err(Error::Config(format!(
                    "variable {name} repeats within one tuple"
                )));
            }
            indices.push(j);
        }
        let dims: Vec<usize> = indices.iter().map(|&j| schema.dim(j)).collect();
        let total: usize = dims.iter().product();
        let mut strides = vec![1usize; dims.len()];
        for s in (0..dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * dims[s + 1];
        }

        let labels: Vec<String> = (0..total)
            .map(|cell| {
                indices
                    .iter()
                    .enumerate()
                    .map(|(slot, &j)| schema.level_label(j, ((cell / strides[slot]) % dims[slot]) as u16))
                    .collect::<Vec<_>>()
                    .join(":")
            })
            .collect();

        let mut estimates: Vec<Vec<PerDatasetEstimate>> = vec![Vec::with_capacity(datasets.len()); total];
        for (d, ds) in datasets.iter().enumerate() {
            let n = ds.n_records();
            if n == 0 {
                return Err(Error::Data(format!("dataset {d} has no records")));
            }
            let mut counts = vec![0u64; total];
            for i in 0..n {
                let mut cell = 0usize;
                for (slot, &j) in indices.iter().enumerate() {
                    match ds.get(i, j) {
                        Some(x) => cell += usize::from(x) * strides[slot],
                        None => {
                            return Err(Error::Data(format!(
                                "dataset {d} record {i} is missing {}; estimate \
                                 probabilities from completed datasets",
                                schema.var_names()[j]
                            )))
                        }
                    }
                }
                counts[cell] += 1;
            }
            for (cell, &count) in counts.iter().enumerate() {
                let q = count as f64 / n as f64;
                estimates[cell].push(PerDatasetEstimate {
                    label: labels[cell].clone(),
                    estimate: q,
                    variance: q * (1.0 - q) / n as f64,
                });
            }
        }
        tables.push(ProbsTable { vars: vars.clone(), labels, estimates });
    }
    Ok(tables)
}

/// Pools a cell-probability table across its datasets.
pub fn pool_estimated_probs(
    table: &ProbsTable,
    rule: CombiningRule,
    level: f64,
) -> Result<PooledProbs> {
    let rows = table
        .estimates
        .iter()
        .map(|cell| combine(cell, rule, level))
        .collect::<Result<Vec<_>>>()?;
    Ok(PooledProbs { vars: table.vars.clone(), rows })
}
