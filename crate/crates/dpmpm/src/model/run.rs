use std::fmt;
use std::io;

use super::state::{DpmpmState, HyperParams};
use super::steps::{
    draw_class_given_full_row, gibbs_step, init_state, occupied_classes,
};
use crate::catdata::{CategoricalDataset, DisallowedPatternSet};
use crate::rng::{chain_rng, output_rng};
use crate::samplers::categorical;
use crate::truncation::TruncationPlan;
use crate::util::fmt_g6;
use crate::{Error, Result};

/// What the released datasets contain.
#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    /// Release the completed data: observed cells as given, missing cells
    /// filled from the current state.
    Impute,
    /// Release the input with the listed variables (column indices) replaced
    /// by model draws. Requires fully observed input.
    Synthesize { vars: Vec<usize> },
}

/// Sweep counts and output count for one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSchedule {
    pub nrun: usize,
    pub burn: usize,
    pub thin: usize,
    pub n_datasets: usize,
    /// Suppress the per-sweep progress line.
    pub silent: bool,
}

impl RunSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.nrun == 0 {
            return Err(Error::Config("nrun must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.burn >= self.nrun {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the sweep count ({})",
                self.burn, self.nrun
            )));
        }
        if self.n_datasets == 0 {
            return Err(Error::Config("at least one output dataset is required".into()));
        }
        let c = self.kept_candidates();
        if self.n_datasets > c {
            return Err(Error::Config(format!(
                "requested {} output datasets but only {} kept sweeps are available \
                 (nrun = {}, burn = {}, thin = {})",
                self.n_datasets, c, self.nrun, self.burn, self.thin
            )));
        }
        Ok(())
    }

    /// Number of post-burn-in sweeps that survive thinning.
    pub fn kept_candidates(&self) -> usize {
        (self.nrun - self.burn) / self.thin
    }

    /// 1-based positions, among the kept sweeps, at which datasets are
    /// released: `floor(c * i / m)` for `i = 1..=m`. Evenly spread, and the
    /// last kept sweep is always used.
    pub fn selected_ordinals(&self) -> Vec<usize> {
        let c = self.kept_candidates();
        let m = self.n_datasets;
        (1..=m).map(|i| c * i / m).collect()
    }
}

/// Per-kept-sweep scalars, in kept order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    pub iters: Vec<u64>,
    pub kstar: Vec<u32>,
    pub alpha: Vec<f64>,
    pub nmis: Vec<u64>,
}

impl TraceLog {
    pub fn push(&mut self, iter: u64, kstar: u32, alpha: f64, nmis: u64) {
        self.iters.push(iter);
        self.kstar.push(kstar);
        self.alpha.push(alpha);
        self.nmis.push(nmis);
    }

    pub fn len(&self) -> usize {
        self.iters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iters.is_empty()
    }

    /// Writes `iter,kstar,alpha,nmis` rows. Alpha uses the shortest exact
    /// decimal form so the file parses back to the same bits.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,kstar,alpha,nmis")?;
        for i in 0..self.len() {
            writeln!(w, "{},{},{},{}", self.iters[i], self.kstar[i], self.alpha[i], self.nmis[i])?;
        }
        Ok(())
    }
}

/// Conditions noticed during a run that do not stop it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// The augmentation cap was hit in this many sweeps; augmented counts in
    /// those sweeps understate the rejected mass.
    AugmentationCapped { sweeps: u64 },
    /// Every class was occupied at some kept sweep, so the class cap may be
    /// binding.
    AllClassesOccupied { max_kstar: u32 },
    /// Imputation was requested on data with nothing to impute.
    NoMissingCells,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AugmentationCapped { sweeps } => write!(
                f,
                "the augmented-record cap was reached in {sweeps} sweep(s); \
                 consider raising it"
            ),
            Warning::AllClassesOccupied { max_kstar } => write!(
                f,
                "all {max_kstar} mixture classes were occupied at some kept sweep; \
                 consider raising the class count"
            ),
            Warning::NoMissingCells => {
                write!(f, "the input has no missing cells; the released datasets equal the input")
            }
        }
    }
}

/// Everything a chain produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub datasets: Vec<CategoricalDataset>,
    pub trace: TraceLog,
    /// Sweep numbers at which the datasets were released.
    pub selected_iters: Vec<u64>,
    pub warnings: Vec<Warning>,
    pub kept_candidates: usize,
}

/// Runs one chain of the blocked sampler and releases datasets along the way.
///
/// `mcz` switches on the structural-zero kernel (augmentation capped at
/// `nmax` records per sweep); passing `None` or an empty set runs the
/// unrestricted kernel. `seed` and `chain` pin the random streams: the chain
/// itself consumes one stream, and each released synthetic dataset draws
/// from its own, so changing the output count never disturbs the chain.
#[allow(clippy::too_many_arguments)]
pub fn run(
    data: &CategoricalDataset,
    hp: &HyperParams,
    schedule: &RunSchedule,
    mode: &RunMode,
    mcz: Option<&DisallowedPatternSet>,
    nmax: usize,
    seed: u64,
    chain: u32,
) -> Result<RunOutput> {
    schedule.validate()?;
    if let RunMode::Synthesize { vars } = mode {
        let p = data.n_vars();
        let mut seen = vec![false; p];
        for &j in vars {
            if j >= p {
                return Err(Error::Config(format!(
                    "synthesis column index {j} is out of range for {p} variables"
                )));
            }
            if seen[j] {
                return Err(Error::Config(format!("synthesis column index {j} repeats")));
            }
            seen[j] = true;
        }
    }
    let mcz = mcz.filter(|set| !set.is_empty());
    if let Some(set) = mcz {
        if set.schema() != data.schema() {
            return Err(Error::Schema(
                "the disallowed pattern set was built against a different schema".into(),
            ));
        }
        if nmax == 0 {
            return Err(Error::Config(
                "the augmented-record cap must be at least 1".into(),
            ));
        }
    }

    let mut rng = chain_rng(seed, chain);
    let mut state = init_state(data, hp, &mut rng)?;
    let plan = match mcz {
        Some(set) => Some(TruncationPlan::build(data, set)?),
        None => None,
    };

    let selected = schedule.selected_ordinals();
    let mut trace = TraceLog::default();
    let mut datasets = Vec::with_capacity(schedule.n_datasets);
    let mut selected_iters = Vec::with_capacity(schedule.n_datasets);
    let mut cap_sweeps = 0u64;
    let mut candidate = 0usize;
    let mut next_sel = 0usize;

    if !schedule.silent {
        println!(
            "iter = 0  kstar = {} alpha = {} Nmis = 0",
            occupied_classes(&state.assignments),
            fmt_g6(state.alpha)
        );
    }

    for t in 1..=schedule.nrun {
        let (nmis, cap_hit) = match (mcz, &plan) {
            (Some(set), Some(plan)) => {
                let sweep = crate::truncation::sweep_with_plan(
                    &mut state, data, set, plan, hp, nmax, &mut rng,
                )?;
                (sweep.n_augmented as u64, sweep.cap_hit)
            }
            _ => {
                gibbs_step(&mut state, data, hp, &mut rng)?;
                (0, false)
            }
        };
        if cap_hit {
            cap_sweeps += 1;
        }
        let kstar = occupied_classes(&state.assignments);
        if !schedule.silent {
            println!(
                "iter = {t}  kstar = {kstar} alpha = {} Nmis = {nmis}",
                fmt_g6(state.alpha)
            );
        }
        if t > schedule.burn && (t - schedule.burn) % schedule.thin == 0 {
            candidate += 1;
            trace.push(t as u64, kstar, state.alpha, nmis);
            if next_sel < selected.len() && selected[next_sel] == candidate {
                datasets.push(release(&state, data, mode, mcz, seed, chain, next_sel)?);
                selected_iters.push(t as u64);
                next_sel += 1;
            }
        }
    }

    assert_eq!(
        datasets.len(),
        schedule.n_datasets,
        "the kept-sweep schedule must release exactly the requested datasets"
    );

    let mut warnings = Vec::new();
    if cap_sweeps > 0 {
        warnings.push(Warning::AugmentationCapped { sweeps: cap_sweeps });
    }
    if let Some(&max_kstar) = trace.kstar.iter().max() {
        if max_kstar as usize == hp.n_classes {
            warnings.push(Warning::AllClassesOccupied { max_kstar });
        }
    }

    Ok(RunOutput {
        datasets,
        trace,
        selected_iters,
        warnings,
        kept_candidates: schedule.kept_candidates(),
    })
}

fn release(
    state: &DpmpmState,
    data: &CategoricalDataset,
    mode: &RunMode,
    mcz: Option<&DisallowedPatternSet>,
    seed: u64,
    chain: u32,
    out_index: usize,
) -> Result<CategoricalDataset> {
    let p = data.n_vars();
    let n = data.n_records();
    match mode {
        RunMode::Impute => {
            let released =
                CategoricalDataset::from_complete(data.schema_arc(), &state.completed)?;
            for i in 0..n {
                for (j, cell) in data.row(i).iter().enumerate() {
                    if let Some(v) = cell {
                        assert_eq!(
                            state.completed[i * p + j],
                            *v,
                            "released dataset altered an observed cell (record {i}, column {j})"
                        );
                    }
                }
                if let Some(set) = mcz {
                    assert!(
                        !set.matches(&state.completed[i * p..(i + 1) * p]),
                        "released dataset contains a disallowed combination (record {i})"
                    );
                }
            }
            Ok(released)
        }
        RunMode::Synthesize { vars } => {
            let mut out_rng = output_rng(seed, chain, out_index as u32);
            let k = state.n_classes();
            let stride = state.theta.stride();
            let offsets = state.theta.offsets().to_vec();
            let log_pi: Vec<f64> = state.weights.iter().map(|w| w.ln()).collect();
            let log_theta: Vec<f64> = state.theta.flat().iter().map(|t| t.ln()).collect();
            let mut scores = vec![0.0; k];
            let mut completed = state.completed.clone();
            for i in 0..n {
                let row = &state.completed[i * p..(i + 1) * p];
                let class = draw_class_given_full_row(
                    &log_pi, &log_theta, stride, &offsets, row, &mut scores, &mut out_rng,
                )?;
                for &j in vars {
                    completed[i * p + j] =
                        categorical(state.theta.pmf(class, j), &mut out_rng)? as u16;
                }
            }
            let released = CategoricalDataset::from_complete(data.schema_arc(), &completed)?;
            for i in 0..n {
                for j in 0..p {
                    if !vars.contains(&j) {
                        assert_eq!(
                            Some(completed[i * p + j]),
                            data.get(i, j),
                            "synthesis altered a column it was not asked to replace \
                             (record {i}, column {j})"
                        );
                    }
                }
            }
            Ok(released)
        }
    }
}
