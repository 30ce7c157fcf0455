use crate::{Error, Result};

/// Location summary of the occupied-class trace.
#[derive(Debug, Clone, PartialEq)]
pub struct KstarSummary {
    pub mean: f64,
    pub min: u32,
    pub max: u32,
}

pub fn kstar_summary(kstar: &[u32]) -> Result<KstarSummary> {
    if kstar.is_empty() {
        return Err(Error::Data("the occupied-class trace is empty".into()));
    }
    Ok(KstarSummary {
        mean: kstar.iter().map(|&k| f64::from(k)).sum::<f64>() / kstar.len() as f64,
        min: *kstar.iter().min().unwrap(),
        max: *kstar.iter().max().unwrap(),
    })
}

/// Number of kept sweeps a run with these settings must produce.
pub fn expected_trace_len(nrun: usize, burn: usize, thin: usize) -> Result<usize> {
    if thin == 0 {
        return Err(Error::Config("thin must be at least 1".into()));
    }
    if burn >= nrun {
        return Err(Error::Config(format!(
            "burn-in ({burn}) must be smaller than the sweep count ({nrun})"
        )));
    }
    Ok((nrun - burn) / thin)
}

/// Checks a trace read from disk against the run settings it claims to come
/// from.
pub fn validate_trace_length(len: usize, nrun: usize, burn: usize, thin: usize) -> Result<()> {
    let expect = expected_trace_len(nrun, burn, thin)?;
    if len != expect {
        return Err(Error::Config(format!(
            "the trace holds {len} kept sweeps but nrun = {nrun}, burn = {burn}, \
             thin = {thin} implies {expect}"
        )));
    }
    Ok(())
}

/// `index,kstar` rows (1-based kept-sweep ordinal) for the twin data file.
pub fn kstar_trace_csv(kstar: &[u32]) -> String {
    let mut out = String::from("index,kstar\n");
    for (i, k) in kstar.iter().enumerate() {
        out.push_str(&format!("{},{k}\n", i + 1));
    }
    out
}
