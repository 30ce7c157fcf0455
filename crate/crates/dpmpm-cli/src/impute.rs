use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use dpmpm::catdata::DisallowedPatternSet;
use dpmpm::engines::{impute_nozeros, impute_zeros, EngineSettings, OutputKind};
use dpmpm::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::{config, runs};

#[derive(Args)]
pub struct ImputeArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV with missing cells
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema sidecar JSON pinning variable order and level coding
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Disallowed-pattern CSV; switches to the augmented sampler
    #[arg(long)]
    mcz: Option<PathBuf>,
    /// Cap on augmented records per sweep (required with --mcz)
    #[arg(long)]
    nmax: Option<usize>,
    /// Total sweeps per chain
    #[arg(long)]
    nrun: Option<usize>,
    /// Burn-in sweeps discarded from the front (default nrun/2)
    #[arg(long)]
    burn: Option<usize>,
    /// Keep every thin-th sweep after burn-in (default 50)
    #[arg(long)]
    thin: Option<usize>,
    /// Maximum number of latent classes (no default; pick generously)
    #[arg(long)]
    k: Option<usize>,
    /// Shape of the Gamma prior on the concentration (default 0.25)
    #[arg(long)]
    aalpha: Option<f64>,
    /// Rate of the Gamma prior on the concentration (default 0.25)
    #[arg(long)]
    balpha: Option<f64>,
    /// Number of imputed datasets to release
    #[arg(long)]
    m: Option<usize>,
    /// Random seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the per-sweep progress line
    #[arg(long)]
    silent: bool,
    /// Independent chains; the extra ones only enrich the trace (default 1)
    #[arg(long)]
    chains: Option<u32>,
    /// Token marking a missing cell, and the pattern-file wildcard (default NA)
    #[arg(long)]
    missing_token: Option<String>,
    /// Output path prefix (default out)
    #[arg(long)]
    out: Option<String>,
}

/// Config-file form of the impute flags. Doubles as the effective-settings
/// echo in the report, so every field is populated on the way out.
#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub mcz: Option<PathBuf>,
    pub nmax: Option<usize>,
    pub nrun: Option<usize>,
    pub burn: Option<usize>,
    pub thin: Option<usize>,
    pub k: Option<usize>,
    pub aalpha: Option<f64>,
    pub balpha: Option<f64>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub silent: Option<bool>,
    pub chains: Option<u32>,
    pub missing_token: Option<String>,
    pub out: Option<String>,
}

pub fn run(args: ImputeArgs) -> Result<()> {
    let started = Instant::now();
    let cfg: ImputeConfig = config::load(args.config.as_deref())?;

    let data_path = config::require(args.data, cfg.data, "data")?;
    let schema_path = config::pick(args.schema, cfg.schema);
    let mcz_path = config::pick(args.mcz, cfg.mcz);
    let nmax = config::pick(args.nmax, cfg.nmax);
    let nrun = config::require(args.nrun, cfg.nrun, "nrun")?;
    let burn = config::pick(args.burn, cfg.burn).unwrap_or(nrun / 2);
    let thin = config::pick(args.thin, cfg.thin).unwrap_or(50);
    let k = config::require(args.k, cfg.k, "k")?;
    let aalpha = config::pick(args.aalpha, cfg.aalpha).unwrap_or(0.25);
    let balpha = config::pick(args.balpha, cfg.balpha).unwrap_or(0.25);
    let m = config::require(args.m, cfg.m, "m")?;
    let seed = config::pick(args.seed, cfg.seed).unwrap_or(0);
    let silent =
        config::pick(args.silent.then_some(true), cfg.silent).unwrap_or(false);
    let chains = config::pick(args.chains, cfg.chains).unwrap_or(1);
    let missing_token =
        config::pick(args.missing_token, cfg.missing_token).unwrap_or_else(|| "NA".into());
    let out = config::pick(args.out, cfg.out).unwrap_or_else(|| "out".into());

    let nmax = match (&mcz_path, nmax) {
        (None, None) => 0,
        (None, Some(_)) => {
            return Err(Error::Config("--nmax only applies together with --mcz".into()))
        }
        (Some(_), Some(nmax)) => nmax,
        (Some(_), None) => {
            return Err(Error::Config("--nmax is required together with --mcz".into()))
        }
    };

    let data = runs::load_data(&data_path, schema_path.as_deref(), &missing_token)?;
    let mcz = match &mcz_path {
        None => None,
        Some(path) => Some(DisallowedPatternSet::load_csv(
            path,
            data.schema_arc(),
            &missing_token,
        )?),
    };

    let settings = |chain: u32| EngineSettings {
        nrun,
        burn,
        thin,
        n_datasets: m,
        n_classes: k,
        a_alpha: aalpha,
        b_alpha: balpha,
        seed,
        silent,
        chain,
    };
    let outputs = runs::run_chains(chains, |chain| match &mcz {
        None => impute_nozeros(&data, &settings(chain)),
        Some(set) => impute_zeros(&data, set, nmax, &settings(chain)),
    })?;

    let echo = ImputeConfig {
        data: Some(data_path),
        schema: schema_path,
        mcz: mcz_path,
        nmax: mcz.is_some().then_some(nmax),
        nrun: Some(nrun),
        burn: Some(burn),
        thin: Some(thin),
        k: Some(k),
        aalpha: Some(aalpha),
        balpha: Some(balpha),
        m: Some(m),
        seed: Some(seed),
        silent: Some(silent),
        chains: Some(chains),
        missing_token: Some(missing_token.clone()),
        out: Some(out.clone()),
    };
    runs::write_run_outputs(
        "impute",
        &echo,
        &data,
        &outputs,
        OutputKind::Imputed,
        &out,
        &missing_token,
        started,
    )
}
