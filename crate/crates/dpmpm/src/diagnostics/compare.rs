use crate::catdata::CategoricalDataset;
use crate::{Error, Result};

/// Whether the released datasets being compared are imputed or synthetic;
/// only the column naming differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareKind {
    Imputed,
    Synthetic,
}

impl CompareKind {
    pub fn column_prefix(&self) -> &'static str {
        match self {
            CompareKind::Imputed => "imp",
            CompareKind::Synthetic => "syn",
        }
    }
}

/// Marginal distribution of one variable in the original data (observed
/// cells only) next to each released dataset, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalComparison {
    pub var: String,
    pub levels: Vec<String>,
    pub observed_pct: Vec<f64>,
    /// `per_dataset_pct[d][level]`.
    pub per_dataset_pct: Vec<Vec<f64>>,
    pub kind: CompareKind,
}

/// Tabulates one variable's marginal in the original data against every
/// released dataset. The original column may contain missing cells (they are
/// left out of its denominator); the released columns may not.
pub fn marginal_compare(
    original: &CategoricalDataset,
    released: &[CategoricalDataset],
    var: &str,
    kind: CompareKind,
) -> Result<MarginalComparison> {
    let schema = original.schema();
    let j = schema
        .var_index(var)
        .ok_or_else(|| Error::Config(format!("unknown variable {var}")))?;
    if released.is_empty() {
        return Err(Error::Config("no released datasets to compare against".into()));
    }
    for (d, ds) in released.iter().enumerate() {
        if ds.schema() != schema {
            return Err(Error::Schema(format!(
                "released dataset {d} was coded against a different schema"
            )));
        }
    }
    let dim = schema.dim(j);

    let mut observed_counts = vec![0u64; dim];
    let mut observed_total = 0u64;
    for i in 0..original.n_records() {
        if let Some(x) = original.get(i, j) {
            observed_counts[usize::from(x)] += 1;
            observed_total += 1;
        }
    }
    if observed_total == 0 {
        return Err(Error::Data(format!("{var} has no observed values to compare")));
    }
    let observed_pct: Vec<f64> = observed_counts
        .iter()
        .map(|&c| 100.0 * c as f64 / observed_total as f64)
        .collect();

    let mut per_dataset_pct = Vec::with_capacity(released.len());
    for (d, ds) in released.iter().enumerate() {
        let n = ds.n_records();
        let mut counts = vec![0u64; dim];
        for i in 0..n {
            let x = ds.get(i, j).ok_or_else(|| {
                Error::Data(format!(
                    "released dataset {d} record {i} is missing {var}"
                ))
            })?;
            counts[usize::from(x)] += 1;
        }
        per_dataset_pct.push(
            counts.iter().map(|&c| 100.0 * c as f64 / n as f64).collect(),
        );
    }

    Ok(MarginalComparison {
        var: var.to_string(),
        levels: (0..dim).map(|l| schema.level_label(j, l as u16).to_string()).collect(),
        observed_pct,
        per_dataset_pct,
        kind,
    })
}

/// `level,observed,<kind>1..<kind>m` rows, percentages at full precision.
pub fn comparison_csv(cmp: &MarginalComparison) -> String {
    let prefix = cmp.kind.column_prefix();
    let mut out = String::from("level,observed");
    for d in 1..=cmp.per_dataset_pct.len() {
        out.push_str(&format!(",{prefix}{d}"));
    }
    out.push('\n');
    for (l, level) in cmp.levels.iter().enumerate() {
        out.push_str(&csv_field(level));
        out.push_str(&format!(",{}", cmp.observed_pct[l]));
        for pct in &cmp.per_dataset_pct {
            out.push_str(&format!(",{}", pct[l]));
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
