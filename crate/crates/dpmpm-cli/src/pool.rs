use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use dpmpm::catdata::{load_csv_with_schema, CategoricalDataset};
use dpmpm::pooling::{
    compute_probs, fit_logistic, fit_multinomial, pool_estimated_probs, pool_fitted_glms,
    CombiningRule, PooledEstimate,
};
use dpmpm::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::{config, runs, tables};

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Imputation,
    SynthesisFull,
    SynthesisPartial,
}

impl Method {
    fn rule(self) -> CombiningRule {
        match self {
            Method::Imputation => CombiningRule::Imputation,
            Method::SynthesisFull => CombiningRule::SynthesisFull,
            Method::SynthesisPartial => CombiningRule::SynthesisPartial,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    Multinomial,
}

#[derive(Args)]
pub struct PoolArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Glob of released dataset CSVs, e.g. 'out_imp*.csv'
    #[arg(long)]
    inputs: Option<String>,
    /// Schema sidecar JSON applied to every input
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Semicolon-separated variable lists, e.g. 'MAR;SEX;MAR,WKL'
    #[arg(long)]
    probs: Option<String>,
    /// Model formula, e.g. 'SEX~WKL+MAR'
    #[arg(long)]
    glm: Option<String>,
    /// Response family for --glm
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Combining rule matching how the inputs were released
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Central interval coverage (default 0.95)
    #[arg(long)]
    level: Option<f64>,
    /// Token marking a missing cell (default NA)
    #[arg(long)]
    missing_token: Option<String>,
    /// Output path prefix (default out)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolConfig {
    pub inputs: Option<String>,
    pub schema: Option<PathBuf>,
    pub probs: Option<String>,
    pub glm: Option<String>,
    pub family: Option<Family>,
    pub method: Option<Method>,
    pub level: Option<f64>,
    pub missing_token: Option<String>,
    pub out: Option<String>,
}

/// Expands an input glob into a sorted path list.
pub fn expand_inputs(pattern: &str) -> Result<Vec<PathBuf>> {
    let matches = glob::glob(pattern)
        .map_err(|e| Error::Config(format!("input pattern {pattern}: {e}")))?;
    let mut paths = Vec::new();
    for entry in matches {
        paths.push(entry.map_err(|e| Error::Data(format!("reading {pattern}: {e}")))?);
    }
    paths.sort();
    Ok(paths)
}

fn load_all(
    paths: &[PathBuf],
    schema: Option<&std::path::Path>,
    missing_token: &str,
) -> Result<Vec<CategoricalDataset>> {
    let first = runs::load_data(&paths[0], schema, missing_token)?;
    let schema_arc = first.schema_arc();
    let mut datasets = vec![first];
    for path in &paths[1..] {
        datasets.push(load_csv_with_schema(path, missing_token, Arc::clone(&schema_arc))?);
    }
    Ok(datasets)
}

/// Splits 'MAR;SEX;MAR,WKL' into variable lists.
pub fn parse_varlists(spec: &str) -> Result<Vec<Vec<String>>> {
    let mut lists = Vec::new();
    for group in spec.split(';') {
        let names: Vec<String> =
            group.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if !names.is_empty() {
            lists.push(names);
        }
    }
    if lists.is_empty() {
        return Err(Error::Config(format!("--probs '{spec}' names no variables")));
    }
    Ok(lists)
}

/// Splits 'SEX~WKL+MAR' into response and predictors. A lone '1' on the
/// right-hand side means intercept only.
pub fn parse_formula(spec: &str) -> Result<(String, Vec<String>)> {
    let (lhs, rhs) = spec
        .split_once('~')
        .ok_or_else(|| Error::Config(format!("--glm '{spec}' is not of the form RESPONSE~TERMS")))?;
    let response = lhs.trim();
    if response.is_empty() {
        return Err(Error::Config(format!("--glm '{spec}' has an empty response")));
    }
    let predictors: Vec<String> = rhs
        .split('+')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty() && s != "1")
        .collect();
    Ok((response.to_string(), predictors))
}

pub fn run(args: PoolArgs) -> Result<()> {
    let cfg: PoolConfig = config::load(args.config.as_deref())?;

    let inputs = config::require(args.inputs, cfg.inputs, "inputs")?;
    let schema_path = config::pick(args.schema, cfg.schema);
    let probs = config::pick(args.probs, cfg.probs);
    let glm = config::pick(args.glm, cfg.glm);
    let family = config::pick(args.family, cfg.family);
    let method = config::require(args.method, cfg.method, "method")?;
    let level = config::pick(args.level, cfg.level).unwrap_or(0.95);
    let missing_token =
        config::pick(args.missing_token, cfg.missing_token).unwrap_or_else(|| "NA".into());
    let out = config::pick(args.out, cfg.out).unwrap_or_else(|| "out".into());

    match (&probs, &glm) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("--probs and --glm are mutually exclusive".into()))
        }
        (None, None) => {
            return Err(Error::Config("one of --probs or --glm is required".into()))
        }
        (Some(_), None) if family.is_some() => {
            return Err(Error::Config("--family only applies together with --glm".into()))
        }
        (None, Some(_)) if family.is_none() => {
            return Err(Error::Config("--family is required together with --glm".into()))
        }
        _ => {}
    }

    let paths = expand_inputs(&inputs)?;
    if paths.len() < 2 {
        return Err(Error::Config(format!(
            "pooling needs at least two datasets; '{inputs}' matched {}",
            paths.len()
        )));
    }
    let datasets = load_all(&paths, schema_path.as_deref(), &missing_token)?;
    let rule = method.rule();

    let (prefix_headers, rows): (Vec<&str>, Vec<(Vec<String>, PooledEstimate)>) =
        if let Some(spec) = &probs {
            let varlists = parse_varlists(spec)?;
            let estimate_tables = compute_probs(&datasets, &varlists)?;
            let mut rows = Vec::new();
            for table in &estimate_tables {
                let pooled = pool_estimated_probs(table, rule, level)?;
                let vars = table.vars.join(",");
                for (label, pe) in table.labels.iter().zip(pooled.rows) {
                    rows.push((vec![vars.clone(), label.clone()], pe));
                }
            }
            (vec!["vars", "cell"], rows)
        } else {
            let (response, predictors) = parse_formula(glm.as_deref().unwrap())?;
            let family = family.expect("checked above");
            let mut fits = Vec::with_capacity(datasets.len());
            for (d, ds) in datasets.iter().enumerate() {
                let fit = match family {
                    Family::Logistic => fit_logistic(ds, &response, &predictors)?,
                    Family::Multinomial => fit_multinomial(ds, &response, &predictors)?,
                };
                if fit.separation {
                    eprintln!(
                        "warning: {}: separated fit, coefficients are at the search bound",
                        paths[d].display()
                    );
                } else if !fit.converged {
                    eprintln!("warning: {}: fit did not converge", paths[d].display());
                }
                fits.push(fit);
            }
            let pooled = pool_fitted_glms(&fits, rule, level)?;
            let rows =
                pooled.into_iter().map(|pe| (vec![pe.label.clone()], pe)).collect();
            (vec!["term"], rows)
        };

    let csv_path = PathBuf::from(format!("{out}_pooled.csv"));
    fs::write(&csv_path, tables::pooled_csv(&prefix_headers, &rows))?;
    print!("{}", tables::pooled_text(&prefix_headers, &rows));
    println!(
        "pooled {} rows from {} datasets, wrote {}",
        rows.len(),
        datasets.len(),
        csv_path.display()
    );
    Ok(())
}
