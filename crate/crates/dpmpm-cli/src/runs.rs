use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use dpmpm::catdata::{load_csv, load_csv_with_schema, CategoricalDataset, Schema};
use dpmpm::engines::{write_outputs, OutputKind};
use dpmpm::model::RunOutput;
use dpmpm::{Error, Result};
use serde::Serialize;

/// Loads a data CSV, honoring a schema sidecar when one is given.
pub fn load_data(
    path: &Path,
    schema: Option<&Path>,
    missing_token: &str,
) -> Result<CategoricalDataset> {
    match schema {
        None => load_csv(path, missing_token),
        Some(sidecar) => {
            let schema = Arc::new(Schema::from_json_file(sidecar)?);
            load_csv_with_schema(path, missing_token, schema)
        }
    }
}

/// Runs `runner` for chains `0..chains`, concurrently when there are
/// several, and returns the outputs in chain order.
pub fn run_chains(
    chains: u32,
    runner: impl Fn(u32) -> Result<RunOutput> + Sync,
) -> Result<Vec<RunOutput>> {
    if chains == 0 {
        return Err(Error::Config("at least one chain is required".into()));
    }
    if chains == 1 {
        return Ok(vec![runner(0)?]);
    }
    let runner = &runner;
    let results: Vec<Result<RunOutput>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains).map(|c| scope.spawn(move || runner(c))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::Internal("a sampling thread panicked".into()))
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Writes the trace of every chain to one CSV. A single chain keeps the
/// plain `iter,kstar,alpha,nmis` layout; several chains prepend a `chain`
/// column so one file carries them all.
pub fn write_trace(path: &Path, outputs: &[RunOutput]) -> Result<()> {
    let mut file = File::create(path)?;
    if outputs.len() == 1 {
        outputs[0].trace.write_csv(&mut file)?;
        return Ok(());
    }
    writeln!(file, "chain,iter,kstar,alpha,nmis")?;
    for (c, out) in outputs.iter().enumerate() {
        let t = &out.trace;
        for i in 0..t.len() {
            writeln!(file, "{c},{},{},{},{}", t.iters[i], t.kstar[i], t.alpha[i], t.nmis[i])?;
        }
    }
    Ok(())
}

/// Warnings from all chains as display strings, chain-tagged when more than
/// one chain ran.
pub fn collect_warnings(outputs: &[RunOutput]) -> Vec<String> {
    let mut all = Vec::new();
    for (c, out) in outputs.iter().enumerate() {
        for w in &out.warnings {
            if outputs.len() == 1 {
                all.push(w.to_string());
            } else {
                all.push(format!("chain {c}: {w}"));
            }
        }
    }
    all
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    command: &'a str,
    config: &'a C,
    variables: Vec<String>,
    dims: Vec<usize>,
    n_records: usize,
    datasets: Vec<String>,
    trace: String,
    warnings: &'a [String],
}

/// Writes released datasets, the trace, and the report for an engine run,
/// then prints the file list. `config` is the fully resolved configuration;
/// feeding it back through `--config` reproduces the run.
pub fn write_run_outputs<C: Serialize>(
    command: &str,
    config: &C,
    data: &CategoricalDataset,
    outputs: &[RunOutput],
    kind: OutputKind,
    out_prefix: &str,
    missing_token: &str,
    started: Instant,
) -> Result<()> {
    let prefix = PathBuf::from(out_prefix);
    let dataset_paths = write_outputs(&outputs[0], &prefix, kind, missing_token)?;
    let trace_path = PathBuf::from(format!("{out_prefix}_trace.csv"));
    write_trace(&trace_path, outputs)?;
    let warnings = collect_warnings(outputs);

    let file_name = |p: &PathBuf| {
        p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    };
    let report = Report {
        command,
        config,
        variables: data.schema().var_names().iter().map(|s| s.to_string()).collect(),
        dims: data.schema().dims(),
        n_records: data.n_records(),
        datasets: dataset_paths.iter().map(&file_name).collect(),
        trace: file_name(&trace_path),
        warnings: &warnings,
    };
    let report_path = PathBuf::from(format!("{out_prefix}_report.json"));
    let mut file = File::create(&report_path)?;
    writeln!(file, "{}", serde_json::to_string_pretty(&report)?)?;

    let dims: Vec<String> = data
        .schema()
        .var_names()
        .iter()
        .zip(data.schema().dims())
        .map(|(name, d)| format!("{name}={d}"))
        .collect();
    println!("levels per variable: {}", dims.join(" "));
    for p in &dataset_paths {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", trace_path.display());
    println!("wrote {}", report_path.display());
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
