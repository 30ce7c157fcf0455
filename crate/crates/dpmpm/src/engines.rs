//! User-facing entry points. Each engine validates its inputs, assembles the
//! run schedule and hyperparameters, and hands off to the sampler's run loop.

use std::fs;
use std::path::{Path, PathBuf};

use crate::catdata::{CategoricalDataset, DisallowedPatternSet};
use crate::model::{run, HyperParams, RunMode, RunOutput, RunSchedule, Warning};
use crate::{Error, Result};

/// Settings shared by every engine. `chain` offsets the random streams so
/// parallel chains under one seed never overlap.
#[derive(Debug, Clone)]
pub struct EngineSettings {
    pub nrun: usize,
    pub burn: usize,
    pub thin: usize,
    pub n_datasets: usize,
    pub n_classes: usize,
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub seed: u64,
    pub silent: bool,
    pub chain: u32,
}

impl EngineSettings {
    pub fn schedule(&self) -> RunSchedule {
        RunSchedule {
            nrun: self.nrun,
            burn: self.burn,
            thin: self.thin,
            n_datasets: self.n_datasets,
            silent: self.silent,
        }
    }

    pub fn hyperparams(&self, data: &CategoricalDataset) -> Result<HyperParams> {
        HyperParams::new(data.schema(), self.n_classes, self.a_alpha, self.b_alpha)
    }
}

/// Multiple imputation without structural zeros.
pub fn impute_nozeros(
    data: &CategoricalDataset,
    settings: &EngineSettings,
) -> Result<RunOutput> {
    let hp = settings.hyperparams(data)?;
    let mut out = run(
        data,
        &hp,
        &settings.schedule(),
        &RunMode::Impute,
        None,
        1,
        settings.seed,
        settings.chain,
    )?;
    if data.is_fully_observed() {
        out.warnings.push(Warning::NoMissingCells);
    }
    Ok(out)
}

/// Multiple imputation that keeps every draw away from the disallowed
/// combinations. `nmax` caps the augmented records per sweep.
pub fn impute_zeros(
    data: &CategoricalDataset,
    mcz: &DisallowedPatternSet,
    nmax: usize,
    settings: &EngineSettings,
) -> Result<RunOutput> {
    if mcz.is_empty() {
        return Err(Error::Config(
            "the disallowed pattern set is empty; run the unrestricted engine instead".into(),
        ));
    }
    if mcz.schema() != data.schema() {
        return Err(Error::Schema(
            "the disallowed pattern set was built against a different schema".into(),
        ));
    }
    if nmax == 0 {
        return Err(Error::Config("the augmented-record cap must be at least 1".into()));
    }
    let hp = settings.hyperparams(data)?;
    let mut out = run(
        data,
        &hp,
        &settings.schedule(),
        &RunMode::Impute,
        Some(mcz),
        nmax,
        settings.seed,
        settings.chain,
    )?;
    if data.is_fully_observed() {
        out.warnings.push(Warning::NoMissingCells);
    }
    Ok(out)
}

/// Partial or full synthesis of the named variables. The input must be fully
/// observed; run imputation first if it is not.
pub fn synthesize(
    data: &CategoricalDataset,
    vars: &[String],
    settings: &EngineSettings,
) -> Result<RunOutput> {
    if let Some((i, j)) = data.missing_cells().first() {
        return Err(Error::Data(format!(
            "synthesis needs fully observed input, but record {i} is missing {}; \
             impute the data first",
            data.schema().variables[*j].name
        )));
    }
    let mut indices = Vec::with_capacity(vars.len());
    for name in vars {
        let j = data
            .schema()
            .var_index(name)
            .ok_or_else(|| Error::Config(format!("unknown variable {name}")))?;
        if indices.contains(&j) {
            return Err(Error::Config(format!("variable {name} is listed twice")));
        }
        indices.push(j);
    }
    let hp = settings.hyperparams(data)?;
    run(
        data,
        &hp,
        &settings.schedule(),
        &RunMode::Synthesize { vars: indices },
        None,
        1,
        settings.seed,
        settings.chain,
    )
}

/// How released dataset files are named.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Imputed,
    Synthetic,
}

impl OutputKind {
    /// File suffix for the `k`-th released dataset, 1-based.
    pub fn suffix(&self, k: usize) -> String {
        match self {
            OutputKind::Imputed => format!("_imp{k}.csv"),
            OutputKind::Synthetic => format!("_syn{k}.csv"),
        }
    }
}

/// Writes every released dataset to `{prefix}{suffix}`, creating parent
/// directories as needed, and returns the paths written.
pub fn write_outputs(
    output: &RunOutput,
    prefix: &Path,
    kind: OutputKind,
    missing_token: &str,
) -> Result<Vec<PathBuf>> {
    if let Some(dir) = prefix.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let prefix_str = prefix.to_string_lossy();
    let mut paths = Vec::with_capacity(output.datasets.len());
    for (idx, ds) in output.datasets.iter().enumerate() {
        let path = PathBuf::from(format!("{prefix_str}{}", kind.suffix(idx + 1)));
        crate::catdata::write_csv(ds, &path, missing_token)?;
        paths.push(path);
    }
    Ok(paths)
}
