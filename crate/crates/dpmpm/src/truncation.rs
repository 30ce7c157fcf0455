//! Sampler pieces for structural zeros: combinations declared impossible are
//! kept out of imputations, and the likelihood truncation they induce is
//! corrected by augmenting each sweep with the latent draws that fell inside
//! the disallowed region.

use crate::catdata::{CategoricalDataset, DisallowedPatternSet};
use crate::model::{
    class_counts, completed_matches_observed, sample_alpha, sample_theta_with_extra,
    sample_v_and_pi_with_counts, sample_z_impl, DpmpmState, HyperParams,
};
use crate::rng::RunRng;
use crate::samplers::categorical;
use crate::{Error, Result};

/// Rejection attempts per record before imputation falls back to exact
/// enumeration of the allowed completions.
pub const REJECTION_ATTEMPTS: usize = 1000;

/// Largest completion space the enumeration fallback will expand.
const ENUMERATION_CAP: u64 = 1_000_000;

/// Most disallowed patterns a single record may be compatible with; the
/// inclusion-exclusion expansion is exponential in this count.
const MAX_COMPATIBLE_PATTERNS: usize = 24;

/// One signed product in an inclusion-exclusion expansion: the pattern-subset
/// sign times the probability of the merged fixed cells.
#[derive(Debug, Clone)]
struct Term {
    sign: f64,
    cells: Vec<(usize, u16)>,
}

#[derive(Debug, Clone)]
struct PlannedRecord {
    record: usize,
    terms: Vec<Term>,
}

/// Per-record inclusion-exclusion terms for the probability that a random
/// completion of the record's missing cells lands in the disallowed region.
/// Built once per run; only records compatible with at least one pattern
/// appear.
#[derive(Debug, Clone)]
pub struct TruncationPlan {
    records: Vec<PlannedRecord>,
}

impl TruncationPlan {
    pub fn build(data: &CategoricalDataset, set: &DisallowedPatternSet) -> Result<Self> {
        let p = data.n_vars();
        let mut records = Vec::new();
        for i in 0..data.n_records() {
            let row = data.row(i);
            // A pattern is compatible when every fixed cell at an observed
            // position matches; its restriction keeps the fixed cells at
            // missing positions.
            let mut restricted: Vec<Vec<(usize, u16)>> = Vec::new();
            'patterns: for pattern in set.patterns() {
                let mut rest = Vec::new();
                for (j, fixed) in pattern.iter().enumerate() {
                    if let Some(level) = fixed {
                        match row[j] {
                            Some(x) if x == *level => {}
                            Some(_) => continue 'patterns,
                            None => rest.push((j, *level)),
                        }
                    }
                }
                if rest.is_empty() {
                    return Err(Error::Data(format!(
                        "record {i}: its observed cells already match a disallowed \
                         pattern, so no completion is possible"
                    )));
                }
                restricted.push(rest);
            }
            if restricted.is_empty() {
                continue;
            }
            if restricted.len() > MAX_COMPATIBLE_PATTERNS {
                return Err(Error::Config(format!(
                    "record {i} is compatible with {} disallowed patterns; at most {} \
                     are supported",
                    restricted.len(),
                    MAX_COMPATIBLE_PATTERNS
                )));
            }
            let mut terms = Vec::new();
            let mut merged: Vec<Option<u16>> = vec![None; p];
            expand_terms(&restricted, 0, 0, &mut merged, &mut terms);
            records.push(PlannedRecord { record: i, terms });
        }
        Ok(TruncationPlan { records })
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Walks subsets of the restricted patterns, merging fixed cells and pruning
/// subsets whose patterns pin the same variable to different levels (their
/// intersection is empty and contributes nothing).
fn expand_terms(
    restricted: &[Vec<(usize, u16)>],
    idx: usize,
    chosen: usize,
    merged: &mut Vec<Option<u16>>,
    out: &mut Vec<Term>,
) {
    if idx == restricted.len() {
        if chosen > 0 {
            let sign = if chosen % 2 == 1 { 1.0 } else { -1.0 };
            let cells = merged
                .iter()
                .enumerate()
                .filter_map(|(j, l)| l.map(|l| (j, l)))
                .collect();
            out.push(Term { sign, cells });
        }
        return;
    }
    expand_terms(restricted, idx + 1, chosen, merged, out);
    let mut touched = Vec::new();
    for &(j, level) in &restricted[idx] {
        match merged[j] {
            Some(existing) if existing != level => {
                for &j in &touched {
                    merged[j] = None;
                }
                return;
            }
            Some(_) => {}
            None => {
                merged[j] = Some(level);
                touched.push(j);
            }
        }
    }
    expand_terms(restricted, idx + 1, chosen + 1, merged, out);
    for &j in &touched {
        merged[j] = None;
    }
}

/// Resamples classes with each record's weight for class `k` multiplied by
/// the probability, under that class, that completing the record's missing
/// cells stays outside the disallowed region.
pub fn sample_z_truncated(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    plan: &TruncationPlan,
    rng: &mut RunRng,
) -> Result<()> {
    if plan.is_empty() {
        return sample_z_impl(state, data, None, rng);
    }
    let k = state.n_classes();
    let mut indices = Vec::with_capacity(plan.records.len());
    let mut values = Vec::with_capacity(plan.records.len() * k);
    for pr in &plan.records {
        let mut any_allowed = false;
        for class in 0..k {
            let mut disallowed = 0.0;
            for term in &pr.terms {
                let mut prod = term.sign;
                for &(j, level) in &term.cells {
                    prod *= state.theta.prob(class, j, level);
                }
                disallowed += prod;
            }
            let allowed = (1.0 - disallowed).clamp(0.0, 1.0);
            if allowed > 0.0 {
                any_allowed = true;
                values.push(allowed.ln());
            } else {
                values.push(f64::NEG_INFINITY);
            }
        }
        if !any_allowed {
            return Err(Error::Data(format!(
                "record {}: every class puts zero probability on completions \
                 outside the disallowed region",
                pr.record
            )));
        }
        indices.push(pr.record);
    }
    sample_z_impl(state, data, Some((&indices, &values)), rng)
}

/// Redraws missing cells from the assigned class, rejecting completions that
/// land in the disallowed region. After [`REJECTION_ATTEMPTS`] failures the
/// allowed completions are enumerated exactly.
pub fn impute_missing_truncated(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    set: &DisallowedPatternSet,
    rng: &mut RunRng,
) -> Result<()> {
    let p = data.n_vars();
    let dims = data.schema().dims();
    let mut row = vec![0u16; p];
    let mut missing: Vec<usize> = Vec::with_capacity(p);
    for i in 0..data.n_records() {
        missing.clear();
        for (j, cell) in data.row(i).iter().enumerate() {
            if cell.is_none() {
                missing.push(j);
            }
        }
        if missing.is_empty() {
            continue;
        }
        let class = state.assignments[i] as usize;
        row.copy_from_slice(&state.completed[i * p..(i + 1) * p]);
        let mut accepted = false;
        for _ in 0..REJECTION_ATTEMPTS {
            for &j in &missing {
                row[j] = categorical(state.theta.pmf(class, j), rng)? as u16;
            }
            if !set.matches(&row) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            draw_completion_exactly(state, set, &dims, &missing, &mut row, class, i, rng)?;
        }
        state.completed[i * p..(i + 1) * p].copy_from_slice(&row);
    }
    Ok(())
}

/// Enumerates every completion of `row` over the `missing` columns, drops the
/// disallowed ones, and draws one in proportion to the class pmf product.
#[allow(clippy::too_many_arguments)]
fn draw_completion_exactly(
    state: &DpmpmState,
    set: &DisallowedPatternSet,
    dims: &[usize],
    missing: &[usize],
    row: &mut [u16],
    class: usize,
    record: usize,
    rng: &mut RunRng,
) -> Result<()> {
    let space: u64 = missing.iter().map(|&j| dims[j] as u64).product();
    if space > ENUMERATION_CAP {
        return Err(Error::Data(format!(
            "record {record}: rejection failed and its completion space \
             ({space} combinations) is too large to enumerate"
        )));
    }
    let mut levels = vec![0u16; missing.len()];
    let mut weights = Vec::with_capacity(space as usize);
    let mut allowed: Vec<Vec<u16>> = Vec::new();
    loop {
        for (slot, &j) in missing.iter().enumerate() {
            row[j] = levels[slot];
        }
        if !set.matches(row) {
            let mut w = 1.0;
            for (slot, &j) in missing.iter().enumerate() {
                w *= state.theta.prob(class, j, levels[slot]);
            }
            weights.push(w);
            allowed.push(levels.clone());
        }
        // Odometer over the missing columns, last column fastest.
        let mut slot = missing.len();
        loop {
            if slot == 0 {
                if allowed.is_empty() {
                    return Err(Error::Data(format!(
                        "record {record}: every completion of its missing cells \
                         falls in the disallowed region"
                    )));
                }
                let pick = categorical(&weights, rng)?;
                for (slot, &j) in missing.iter().enumerate() {
                    row[j] = allowed[pick][slot];
                }
                return Ok(());
            }
            slot -= 1;
            levels[slot] += 1;
            if usize::from(levels[slot]) < dims[missing[slot]] {
                break;
            }
            levels[slot] = 0;
        }
    }
}

/// Complete rows drawn from the unrestricted mixture that landed inside the
/// disallowed region, kept with their classes so they can be pooled into the
/// parameter updates.
#[derive(Debug, Clone, Default)]
pub struct AugmentedSample {
    pub rows: Vec<u16>,
    pub classes: Vec<u32>,
    n_vars: usize,
}

impl AugmentedSample {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.rows[i * self.n_vars..(i + 1) * self.n_vars]
    }
}

/// Draws complete records from the unrestricted mixture until `target` of
/// them land outside the disallowed region, keeping the ones that landed
/// inside. Stops early once `cap` records have been kept; the second return
/// value reports whether that happened. An empty pattern set draws nothing.
pub fn draw_augmented(
    state: &DpmpmState,
    set: &DisallowedPatternSet,
    target: usize,
    cap: usize,
    rng: &mut RunRng,
) -> Result<(AugmentedSample, bool)> {
    let p = state.theta.dims().len();
    let mut sample = AugmentedSample { rows: Vec::new(), classes: Vec::new(), n_vars: p };
    if set.is_empty() {
        return Ok((sample, false));
    }
    let mut row = vec![0u16; p];
    let mut successes = 0usize;
    while successes < target {
        let class = categorical(&state.weights, rng)?;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = categorical(state.theta.pmf(class, j), rng)? as u16;
        }
        if set.matches(&row) {
            sample.rows.extend_from_slice(&row);
            sample.classes.push(class as u32);
            if sample.len() >= cap {
                return Ok((sample, true));
            }
        } else {
            successes += 1;
        }
    }
    Ok((sample, false))
}

/// What one structural-zero sweep produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedSweep {
    pub n_augmented: usize,
    pub cap_hit: bool,
}

/// One full sweep of the structural-zero kernel against a prebuilt plan:
/// classes, then missing cells, then the augmentation draw, then weights,
/// concentration, and level probabilities with the augmented counts pooled
/// in.
pub(crate) fn sweep_with_plan(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    set: &DisallowedPatternSet,
    plan: &TruncationPlan,
    hp: &HyperParams,
    cap: usize,
    rng: &mut RunRng,
) -> Result<TruncatedSweep> {
    sample_z_truncated(state, data, plan, rng)?;
    impute_missing_truncated(state, data, set, rng)?;
    let (augmented, cap_hit) = draw_augmented(state, set, data.n_records(), cap, rng)?;
    let mut counts = class_counts(&state.assignments, state.n_classes());
    for &class in &augmented.classes {
        counts[class as usize] += 1;
    }
    sample_v_and_pi_with_counts(state, &counts, rng)?;
    sample_alpha(state, hp, rng)?;
    sample_theta_with_extra(state, hp, &augmented.rows, &augmented.classes, rng)?;
    debug_assert!(completed_matches_observed(state, data));
    Ok(TruncatedSweep { n_augmented: augmented.len(), cap_hit })
}

/// One full sweep of the structural-zero kernel. Builds the record plan on
/// the fly; long runs should build a [`TruncationPlan`] once instead.
pub fn gibbs_step_truncated(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    set: &DisallowedPatternSet,
    hp: &HyperParams,
    cap: usize,
    rng: &mut RunRng,
) -> Result<TruncatedSweep> {
    let plan = TruncationPlan::build(data, set)?;
    sweep_with_plan(state, data, set, &plan, hp, cap, rng)
}
