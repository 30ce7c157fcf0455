use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use dpmpm::diagnostics::{
    acf, acf_csv, acf_svg, comparison_csv, comparison_svg, kstar_summary, kstar_trace_csv,
    kstar_trace_svg, marginal_compare, validate_trace_length, CompareKind,
};
use dpmpm::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::pool::expand_inputs;
use crate::{config, runs};

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kind {
    Imp,
    Syn,
}

#[derive(Args)]
pub struct DiagnoseArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace CSV written by impute or synthesize
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Class cap the run used; flags a saturated trace
    #[arg(long)]
    k: Option<usize>,
    /// Declared sweep count; with --burn and --thin, checks the trace length
    #[arg(long)]
    nrun: Option<usize>,
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Chain to read from a multi-chain trace (default 0)
    #[arg(long)]
    chain: Option<u32>,
    /// Largest autocorrelation lag (default min(40, length/2))
    #[arg(long)]
    max_lag: Option<usize>,
    /// Variable whose released marginals to compare against the observed data
    #[arg(long)]
    compare: Option<String>,
    /// Observed data CSV for --compare
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Glob of released dataset CSVs for --compare
    #[arg(long)]
    inputs: Option<String>,
    /// Whether the released datasets are imputed or synthetic (default imp)
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Schema sidecar JSON for --obs
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Token marking a missing cell (default NA)
    #[arg(long)]
    missing_token: Option<String>,
    /// Output path prefix (default out)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub trace: Option<PathBuf>,
    pub k: Option<usize>,
    pub nrun: Option<usize>,
    pub burn: Option<usize>,
    pub thin: Option<usize>,
    pub chain: Option<u32>,
    pub max_lag: Option<usize>,
    pub compare: Option<String>,
    pub obs: Option<PathBuf>,
    pub inputs: Option<String>,
    pub kind: Option<Kind>,
    pub schema: Option<PathBuf>,
    pub missing_token: Option<String>,
    pub out: Option<String>,
}

struct TraceRows {
    kstar: Vec<u32>,
    multi_chain: bool,
}

/// Reads a trace CSV in either layout, keeping rows of the wanted chain.
fn read_trace(path: &Path, chain: u32) -> Result<TraceRows> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty trace file", path.display())))?;
    let multi_chain = match header {
        "iter,kstar,alpha,nmis" => false,
        "chain,iter,kstar,alpha,nmis" => true,
        other => {
            return Err(Error::Format(format!(
                "{}: unrecognized trace header {other:?}",
                path.display()
            )))
        }
    };
    if !multi_chain && chain != 0 {
        return Err(Error::Config(format!(
            "--chain {chain} was requested but {} has a single chain",
            path.display()
        )));
    }

    let mut kstar = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if multi_chain { 5 } else { 4 };
        if fields.len() != expected {
            return Err(Error::Format(format!(
                "{} line {}: {} fields, expected {expected}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            Error::Format(format!("{} line {}: bad {what} value", path.display(), lineno + 2))
        };
        let mut idx = 0;
        if multi_chain {
            let c: u32 = fields[0].parse().map_err(|_| bad("chain"))?;
            idx = 1;
            if c != chain {
                continue;
            }
        }
        let _: u64 = fields[idx].parse().map_err(|_| bad("iter"))?;
        let ks: u32 = fields[idx + 1].parse().map_err(|_| bad("kstar"))?;
        let _: f64 = fields[idx + 2].parse().map_err(|_| bad("alpha"))?;
        let _: u64 = fields[idx + 3].parse().map_err(|_| bad("nmis"))?;
        kstar.push(ks);
    }
    if kstar.is_empty() {
        return Err(Error::Data(format!(
            "{} holds no rows for chain {chain}",
            path.display()
        )));
    }
    Ok(TraceRows { kstar, multi_chain })
}

pub fn run(args: DiagnoseArgs) -> Result<()> {
    let cfg: DiagnoseConfig = config::load(args.config.as_deref())?;

    let trace_path = config::require(args.trace, cfg.trace, "trace")?;
    let k = config::pick(args.k, cfg.k);
    let nrun = config::pick(args.nrun, cfg.nrun);
    let burn = config::pick(args.burn, cfg.burn);
    let thin = config::pick(args.thin, cfg.thin);
    let chain = config::pick(args.chain, cfg.chain).unwrap_or(0);
    let max_lag = config::pick(args.max_lag, cfg.max_lag);
    let compare = config::pick(args.compare, cfg.compare);
    let obs = config::pick(args.obs, cfg.obs);
    let inputs = config::pick(args.inputs, cfg.inputs);
    let kind = config::pick(args.kind, cfg.kind).unwrap_or(Kind::Imp);
    let schema_path = config::pick(args.schema, cfg.schema);
    let missing_token =
        config::pick(args.missing_token, cfg.missing_token).unwrap_or_else(|| "NA".into());
    let out = config::pick(args.out, cfg.out).unwrap_or_else(|| "out".into());

    let trace = read_trace(&trace_path, chain)?;
    match (nrun, burn, thin) {
        (None, None, None) => {}
        (Some(nrun), Some(burn), Some(thin)) => {
            validate_trace_length(trace.kstar.len(), nrun, burn, thin)?;
        }
        _ => {
            return Err(Error::Config(
                "--nrun, --burn, and --thin must be given together".into(),
            ))
        }
    }

    let summary = kstar_summary(&trace.kstar)?;
    if let Some(k) = k {
        if (summary.max as usize) > k {
            return Err(Error::Data(format!(
                "trace reports {} occupied classes, more than --k {k} allows",
                summary.max
            )));
        }
        if (summary.max as usize) == k {
            eprintln!(
                "warning: every one of the {k} classes was occupied at some kept sweep; \
                 consider rerunning with a larger --k"
            );
        }
    }
    let chain_note = if trace.multi_chain { format!(" (chain {chain})") } else { String::new() };
    println!(
        "kstar over {} kept draws{chain_note}: mean {:.2}, min {}, max {}",
        trace.kstar.len(),
        summary.mean,
        summary.min,
        summary.max
    );

    let trace_svg_path = PathBuf::from(format!("{out}_kstar_trace.svg"));
    fs::write(&trace_svg_path, kstar_trace_svg(&trace.kstar, "Occupied classes per kept draw")?)?;
    let trace_csv_path = PathBuf::from(format!("{out}_kstar_trace.csv"));
    fs::write(&trace_csv_path, kstar_trace_csv(&trace.kstar))?;

    let series: Vec<f64> = trace.kstar.iter().map(|&x| f64::from(x)).collect();
    let correlations = acf(&series, max_lag)?;
    let acf_svg_path = PathBuf::from(format!("{out}_kstar_acf.svg"));
    fs::write(&acf_svg_path, acf_svg(&correlations, "Occupied-class autocorrelation")?)?;
    let acf_csv_path = PathBuf::from(format!("{out}_kstar_acf.csv"));
    fs::write(&acf_csv_path, acf_csv(&correlations))?;
    println!(
        "wrote {} {} {} {}",
        trace_svg_path.display(),
        trace_csv_path.display(),
        acf_svg_path.display(),
        acf_csv_path.display()
    );

    match (&compare, &obs, &inputs) {
        (None, None, None) => {}
        (Some(var), Some(obs_path), Some(pattern)) => {
            let observed = runs::load_data(obs_path, schema_path.as_deref(), &missing_token)?;
            let paths = expand_inputs(pattern)?;
            if paths.is_empty() {
                return Err(Error::Config(format!("'{pattern}' matched no released datasets")));
            }
            let released: Result<Vec<_>> = paths
                .iter()
                .map(|p| {
                    dpmpm::catdata::load_csv_with_schema(p, &missing_token, observed.schema_arc())
                })
                .collect();
            let ck = match kind {
                Kind::Imp => CompareKind::Imputed,
                Kind::Syn => CompareKind::Synthetic,
            };
            let comparison = marginal_compare(&observed, &released?, var, ck)?;
            let svg_path = PathBuf::from(format!("{out}_compare_{var}.svg"));
            fs::write(&svg_path, comparison_svg(&comparison)?)?;
            let csv_path = PathBuf::from(format!("{out}_compare_{var}.csv"));
            fs::write(&csv_path, comparison_csv(&comparison))?;
            println!("wrote {} {}", svg_path.display(), csv_path.display());
        }
        _ => {
            return Err(Error::Config(
                "--compare, --obs, and --inputs must be given together".into(),
            ))
        }
    }
    Ok(())
}
