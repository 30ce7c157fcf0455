use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use dpmpm::engines::{synthesize, EngineSettings, OutputKind};
use dpmpm::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::{config, runs};

#[derive(Args)]
pub struct SynthesizeArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fully observed input CSV
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema sidecar JSON pinning variable order and level coding
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Comma-separated variables to synthesize; omit to synthesize all
    #[arg(long)]
    vars: Option<String>,
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
    /// Number of synthetic datasets to release
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
    /// Token written for missing cells in outputs (default NA)
    #[arg(long)]
    missing_token: Option<String>,
    /// Output path prefix (default out)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub vars: Option<Vec<String>>,
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

pub fn run(args: SynthesizeArgs) -> Result<()> {
    let started = Instant::now();
    let cfg: SynthesizeConfig = config::load(args.config.as_deref())?;

    let data_path = config::require(args.data, cfg.data, "data")?;
    let schema_path = config::pick(args.schema, cfg.schema);
    let vars_flag = match args.vars {
        None => None,
        Some(list) => {
            let names: Vec<String> =
                list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if names.is_empty() {
                return Err(Error::Config("--vars was given but names no variables".into()));
            }
            Some(names)
        }
    };
    let vars = config::pick(vars_flag, cfg.vars);
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

    let data = runs::load_data(&data_path, schema_path.as_deref(), &missing_token)?;
    // Omitting vars means a fully synthetic release: every column redrawn.
    let var_names: Vec<String> = match &vars {
        Some(names) => names.clone(),
        None => data.schema().var_names().iter().map(|s| s.to_string()).collect(),
    };

    let outputs = runs::run_chains(chains, |chain| {
        synthesize(
            &data,
            &var_names,
            &EngineSettings {
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
            },
        )
    })?;

    let echo = SynthesizeConfig {
        data: Some(data_path),
        schema: schema_path,
        vars: Some(var_names),
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
        "synthesize",
        &echo,
        &data,
        &outputs,
        OutputKind::Synthetic,
        &out,
        &missing_token,
        started,
    )
}
