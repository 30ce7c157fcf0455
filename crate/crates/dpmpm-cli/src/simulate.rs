use std::path::PathBuf;

use clap::Args;
use dpmpm::catdata::{
    generate_from_mixture, inject_mcar, write_csv, DisallowedPatternSet, TruthFile,
};
use dpmpm::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config;

#[derive(Args)]
pub struct SimulateArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Truth JSON: schema, class weights, per-class level probabilities
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Records to draw
    #[arg(long)]
    n: Option<usize>,
    /// Random seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Blank each cell independently with this probability
    #[arg(long)]
    mcar: Option<f64>,
    /// Disallowed-pattern CSV; matching draws are rejected
    #[arg(long)]
    mcz: Option<PathBuf>,
    /// Output CSV path; a schema sidecar lands next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Token written for missing cells, and the pattern-file wildcard (default NA)
    #[arg(long)]
    missing_token: Option<String>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub truth: Option<PathBuf>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub mcar: Option<f64>,
    pub mcz: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub missing_token: Option<String>,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let cfg: SimulateConfig = config::load(args.config.as_deref())?;

    let truth_path = config::require(args.truth, cfg.truth, "truth")?;
    let n = config::require(args.n, cfg.n, "n")?;
    let seed = config::pick(args.seed, cfg.seed).unwrap_or(0);
    let mcar = config::pick(args.mcar, cfg.mcar);
    let mcz_path = config::pick(args.mcz, cfg.mcz);
    let out = config::require(args.out, cfg.out, "out")?;
    let missing_token =
        config::pick(args.missing_token, cfg.missing_token).unwrap_or_else(|| "NA".into());

    if n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    if let Some(rate) = mcar {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "--mcar {rate} is outside [0, 1]"
            )));
        }
    }

    let (schema, truth) = TruthFile::load(&truth_path)?;
    let mcz = match &mcz_path {
        None => None,
        Some(path) => {
            Some(DisallowedPatternSet::load_csv(path, schema.clone(), &missing_token)?)
        }
    };

    let complete = generate_from_mixture(&truth, n, schema.clone(), seed, mcz.as_ref())?;
    // The blanking pass gets its own stream so which cells go missing stays
    // independent of the values that were drawn.
    let data = match mcar {
        None => complete,
        Some(rate) => inject_mcar(&complete, rate, seed.wrapping_add(1))?,
    };

    write_csv(&data, &out, &missing_token)?;
    let sidecar = out.with_extension("schema.json");
    schema.to_json_file(&sidecar)?;

    let missing_cells: usize = (0..data.n_records())
        .map(|i| data.row(i).iter().filter(|c| c.is_none()).count())
        .sum();
    println!(
        "wrote {}: {} records, {} variables, {} missing cells; schema sidecar {}",
        out.display(),
        data.n_records(),
        data.n_vars(),
        missing_cells,
        sidecar.display()
    );
    Ok(())
}
