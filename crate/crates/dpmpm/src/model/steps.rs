use rand::Rng;

use super::state::{stick_breaking, DpmpmState, HyperParams, Theta};
use crate::catdata::CategoricalDataset;
use crate::rng::RunRng;
use crate::samplers::{beta_with_log_complement, categorical, dirichlet, gamma};
use crate::{Error, Result};

/// Draws a fresh state from the priors: concentration 1 (or its pinned
/// value), stick fractions from their prior given that concentration, level
/// probabilities from their Dirichlet priors, classes uniform, and missing
/// cells filled from the per-class level probabilities.
pub fn init_state(
    data: &CategoricalDataset,
    hp: &HyperParams,
    rng: &mut RunRng,
) -> Result<DpmpmState> {
    hp.validate(data.schema())?;
    let k = hp.n_classes;
    let dims = data.schema().dims();
    let n = data.n_records();
    let p = data.n_vars();

    let alpha = hp.fixed_alpha.unwrap_or(1.0);
    let mut sticks = vec![0.0; k];
    let mut stick_log_complements = vec![f64::NEG_INFINITY; k];
    for class in 0..k - 1 {
        let (v, ln_w) = beta_with_log_complement(1.0, alpha, rng)?;
        sticks[class] = v;
        stick_log_complements[class] = ln_w;
    }
    sticks[k - 1] = 1.0;
    let weights = stick_breaking(&sticks);

    let mut theta = Theta::zeros(k, &dims);
    for class in 0..k {
        for j in 0..p {
            let mut pmf = vec![0.0; dims[j]];
            dirichlet(&hp.dirichlet_a[j], &mut pmf, rng)?;
            theta.pmf_mut(class, j).copy_from_slice(&pmf);
        }
    }

    let assignments: Vec<u32> = (0..n).map(|_| rng.random_range(0..k) as u32).collect();

    let mut completed = vec![0u16; n * p];
    for i in 0..n {
        let class = assignments[i] as usize;
        for j in 0..p {
            completed[i * p + j] = match data.get(i, j) {
                Some(v) => v,
                None => categorical(theta.pmf(class, j), rng)? as u16,
            };
        }
    }

    Ok(DpmpmState { assignments, sticks, stick_log_complements, weights, alpha, theta, completed })
}

/// Resamples every record's class from its conditional given the weights,
/// the level probabilities, and the record's *observed* cells only.
pub fn sample_z(state: &mut DpmpmState, data: &CategoricalDataset, rng: &mut RunRng) -> Result<()> {
    sample_z_impl(state, data, None, rng)
}

/// Engine room of [`sample_z`]. `adjust` optionally supplies per-record,
/// per-class additive log-weight corrections (sorted by record index); the
/// structural-zero sampler uses it to fold in allowed-completion masses.
pub(crate) fn sample_z_impl(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    adjust: Option<(&[usize], &[f64])>,
    rng: &mut RunRng,
) -> Result<()> {
    let k = state.n_classes();
    let stride = state.theta.stride();
    let offsets = state.theta.offsets().to_vec();
    let log_pi: Vec<f64> = state.weights.iter().map(|w| w.ln()).collect();
    let log_theta: Vec<f64> = state.theta.flat().iter().map(|t| t.ln()).collect();

    let mut scores = vec![0.0; k];
    let mut cell_offsets: Vec<usize> = Vec::with_capacity(data.n_vars());
    let (adj_records, adj_values) = adjust.unwrap_or((&[], &[]));
    let mut adj_cursor = 0usize;

    for i in 0..data.n_records() {
        cell_offsets.clear();
        for (j, cell) in data.row(i).iter().enumerate() {
            if let Some(x) = cell {
                cell_offsets.push(offsets[j] + usize::from(*x));
            }
        }
        for (class, score) in scores.iter_mut().enumerate() {
            let base = class * stride;
            let mut s = log_pi[class];
            for &off in &cell_offsets {
                s += log_theta[base + off];
            }
            *score = s;
        }
        if adj_cursor < adj_records.len() && adj_records[adj_cursor] == i {
            let row = &adj_values[adj_cursor * k..(adj_cursor + 1) * k];
            for (score, add) in scores.iter_mut().zip(row) {
                *score += add;
            }
            adj_cursor += 1;
        }
        state.assignments[i] = draw_from_log_scores(&mut scores, rng).map_err(|e| match e {
            Error::Internal(msg) => Error::Internal(format!("class draw for record {i}: {msg}")),
            other => other,
        })? as u32;
    }
    Ok(())
}

/// Exponentiates log scores in place (after subtracting their maximum) and
/// draws an index by inverse CDF in ascending order.
pub(crate) fn draw_from_log_scores(scores: &mut [f64], rng: &mut RunRng) -> Result<usize> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Internal(format!(
            "log-weights degenerated (max = {max})"
        )));
    }
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
    }
    categorical(scores, rng)
}

/// Draws a class for one fully observed row, conditioning on every cell.
/// Synthesis uses this at release time.
pub(crate) fn draw_class_given_full_row(
    log_pi: &[f64],
    log_theta: &[f64],
    stride: usize,
    offsets: &[usize],
    row: &[u16],
    scores: &mut [f64],
    rng: &mut RunRng,
) -> Result<usize> {
    for (class, score) in scores.iter_mut().enumerate() {
        let base = class * stride;
        let mut s = log_pi[class];
        for (j, &x) in row.iter().enumerate() {
            s += log_theta[base + offsets[j] + usize::from(x)];
        }
        *score = s;
    }
    draw_from_log_scores(scores, rng)
}

/// Redraws every missing cell from its class's level probabilities.
pub fn impute_missing_cells(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    rng: &mut RunRng,
) -> Result<()> {
    let p = data.n_vars();
    for i in 0..data.n_records() {
        let class = state.assignments[i] as usize;
        for (j, cell) in data.row(i).iter().enumerate() {
            if cell.is_none() {
                state.completed[i * p + j] =
                    categorical(state.theta.pmf(class, j), rng)? as u16;
            }
        }
    }
    Ok(())
}

pub(crate) fn class_counts(assignments: &[u32], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &z in assignments {
        counts[z as usize] += 1;
    }
    counts
}

/// Resamples the stick fractions from their Beta full conditionals and
/// recomputes the weights. `V_k ~ Beta(1 + n_k, alpha + sum_{l>k} n_l)`.
pub fn sample_v_and_pi(state: &mut DpmpmState, rng: &mut RunRng) -> Result<()> {
    let counts = class_counts(&state.assignments, state.n_classes());
    sample_v_and_pi_with_counts(state, &counts, rng)
}

pub(crate) fn sample_v_and_pi_with_counts(
    state: &mut DpmpmState,
    counts: &[u64],
    rng: &mut RunRng,
) -> Result<()> {
    let k = state.n_classes();
    debug_assert_eq!(counts.len(), k);
    let mut tail = 0u64; // records in classes above the current one
    let mut tails = vec![0u64; k];
    for class in (0..k).rev() {
        tails[class] = tail;
        tail += counts[class];
    }
    for class in 0..k - 1 {
        let (v, ln_w) = beta_with_log_complement(
            1.0 + counts[class] as f64,
            state.alpha + tails[class] as f64,
            rng,
        )?;
        state.sticks[class] = v;
        state.stick_log_complements[class] = ln_w;
    }
    state.sticks[k - 1] = 1.0;
    state.stick_log_complements[k - 1] = f64::NEG_INFINITY;
    state.weights = stick_breaking(&state.sticks);
    Ok(())
}

/// Resamples the concentration from its Gamma full conditional,
/// `Gamma(a_alpha + K - 1, b_alpha - sum_{k<K} log(1 - V_k))`, or keeps the
/// pinned value when one is configured. The log terms come from the state's
/// stored stick log-complements, not from the sticks themselves, so the rate
/// stays right even when sticks have saturated at 1.
pub fn sample_alpha(state: &mut DpmpmState, hp: &HyperParams, rng: &mut RunRng) -> Result<()> {
    if let Some(fixed) = hp.fixed_alpha {
        state.alpha = fixed;
        return Ok(());
    }
    let k = state.n_classes();
    let log_sum: f64 = state.stick_log_complements[..k - 1].iter().sum();
    let shape = hp.a_alpha + (k - 1) as f64;
    let rate = hp.b_alpha - log_sum;
    if !rate.is_finite() {
        return Err(Error::Internal(format!(
            "concentration update produced rate {rate}"
        )));
    }
    state.alpha = gamma(shape, rate, rng)?;
    Ok(())
}

/// Resamples every per-class, per-variable pmf from its Dirichlet full
/// conditional, with counts taken from the completed data.
pub fn sample_theta(state: &mut DpmpmState, hp: &HyperParams, rng: &mut RunRng) -> Result<()> {
    sample_theta_with_extra(state, hp, &[], &[], rng)
}

/// As [`sample_theta`], but pooling counts from extra complete rows with
/// known classes (the structural-zero augmentation sample).
pub(crate) fn sample_theta_with_extra(
    state: &mut DpmpmState,
    hp: &HyperParams,
    extra_rows: &[u16],
    extra_classes: &[u32],
    rng: &mut RunRng,
) -> Result<()> {
    let k = state.n_classes();
    let stride = state.theta.stride();
    let offsets = state.theta.offsets().to_vec();
    let dims = state.theta.dims().to_vec();
    let p = dims.len();

    let mut conc = vec![0.0; k * stride];
    for class in 0..k {
        let base = class * stride;
        for j in 0..p {
            conc[base + offsets[j]..base + offsets[j] + dims[j]]
                .copy_from_slice(&hp.dirichlet_a[j]);
        }
    }
    let n = state.completed.len() / p;
    for i in 0..n {
        let base = state.assignments[i] as usize * stride;
        for j in 0..p {
            conc[base + offsets[j] + usize::from(state.completed[i * p + j])] += 1.0;
        }
    }
    debug_assert_eq!(extra_rows.len(), extra_classes.len() * p);
    for (row, &class) in extra_rows.chunks_exact(p).zip(extra_classes) {
        let base = class as usize * stride;
        for (j, &x) in row.iter().enumerate() {
            conc[base + offsets[j] + usize::from(x)] += 1.0;
        }
    }

    let mut pmf = vec![0.0; *dims.iter().max().unwrap_or(&0)];
    for class in 0..k {
        let base = class * stride;
        for j in 0..p {
            let slice = &conc[base + offsets[j]..base + offsets[j] + dims[j]];
            dirichlet(slice, &mut pmf[..dims[j]], rng)?;
            state.theta.pmf_mut(class, j).copy_from_slice(&pmf[..dims[j]]);
        }
    }
    Ok(())
}

/// One full sweep. Drawing the missing cells immediately after the class
/// assignments makes the pair a valid blocked draw; see the module docs.
pub fn gibbs_step(
    state: &mut DpmpmState,
    data: &CategoricalDataset,
    hp: &HyperParams,
    rng: &mut RunRng,
) -> Result<()> {
    sample_z(state, data, rng)?;
    impute_missing_cells(state, data, rng)?;
    sample_v_and_pi(state, rng)?;
    sample_alpha(state, hp, rng)?;
    sample_theta(state, hp, rng)?;
    debug_assert!(completed_matches_observed(state, data));
    Ok(())
}

pub(crate) fn completed_matches_observed(state: &DpmpmState, data: &CategoricalDataset) -> bool {
    let p = data.n_vars();
    (0..data.n_records()).all(|i| {
        data.row(i)
            .iter()
            .enumerate()
            .all(|(j, cell)| cell.map_or(true, |v| state.completed[i * p + j] == v))
    })
}

/// Number of distinct classes currently assigned to records.
pub fn occupied_classes(assignments: &[u32]) -> u32 {
    let max = match assignments.iter().max() {
        Some(&m) => m as usize,
        None => return 0,
    };
    let mut seen = vec![false; max + 1];
    let mut count = 0;
    for &z in assignments {
        if !seen[z as usize] {
            seen[z as usize] = true;
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catdata::{Schema, Variable};
    use crate::rng::chain_rng;
    use std::sync::Arc;

    fn var(name: &str, levels: &[&str]) -> Variable {
        Variable { name: name.into(), levels: levels.iter().map(|s| s.to_string()).collect() }
    }

    fn binary_schema() -> Arc<Schema> {
        Arc::new(Schema::new(vec![var("X", &["x0", "x1"])]).unwrap())
    }

    fn two_class_state(pi: [f64; 2], theta0: [f64; 2], theta1: [f64; 2], n: usize) -> DpmpmState {
        let mut theta = Theta::zeros(2, &[2]);
        theta.pmf_mut(0, 0).copy_from_slice(&theta0);
        theta.pmf_mut(1, 0).copy_from_slice(&theta1);
        DpmpmState {
            assignments: vec![0; n],
            sticks: vec![pi[0], 1.0],
            stick_log_complements: vec![(-pi[0]).ln_1p(), f64::NEG_INFINITY],
            weights: pi.to_vec(),
            alpha: 1.0,
            theta,
            completed: vec![0; n],
        }
    }

    #[test]
    fn sample_z_matches_hand_posterior() {
        // One observed cell at level 0: P(class 0) = 0.5*0.9 / (0.5*0.9 + 0.5*0.1) = 9/10? no:
        // weights (.5,.5), theta (.9,.1) vs (.2,.8): P(class 0 | x=0) = .45/(.45+.10) = 9/11.
        let schema = binary_schema();
        let data = CategoricalDataset::from_complete(Arc::clone(&schema), &[0]).unwrap();
        let mut state = two_class_state([0.5, 0.5], [0.9, 0.1], [0.2, 0.8], 1);
        let mut rng = chain_rng(42, 0);
        let mut hits = 0;
        let draws = 40_000;
        for _ in 0..draws {
            sample_z(&mut state, &data, &mut rng).unwrap();
            if state.assignments[0] == 0 {
                hits += 1;
            }
        }
        let frac = hits as f64 / draws as f64;
        assert!((frac - 9.0 / 11.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn sample_z_on_all_missing_record_follows_weights() {
        let schema = binary_schema();
        let data = CategoricalDataset::new(Arc::clone(&schema), vec![None]).unwrap();
        let mut state = two_class_state([0.3, 0.7], [0.9, 0.1], [0.2, 0.8], 1);
        let mut rng = chain_rng(43, 0);
        let mut hits = 0;
        let draws = 40_000;
        for _ in 0..draws {
            sample_z(&mut state, &data, &mut rng).unwrap();
            if state.assignments[0] == 0 {
                hits += 1;
            }
        }
        let frac = hits as f64 / draws as f64;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }

    #[test]
    fn impute_from_degenerate_pmf_is_deterministic() {
        let schema = binary_schema();
        let data = CategoricalDataset::new(Arc::clone(&schema), vec![None, None]).unwrap();
        let mut state = two_class_state([0.5, 0.5], [1.0, 0.0], [0.0, 1.0], 2);
        state.assignments = vec![0, 1];
        let mut rng = chain_rng(44, 0);
        impute_missing_cells(&mut state, &data, &mut rng).unwrap();
        assert_eq!(state.completed, vec![0, 1]);
    }

    #[test]
    fn stick_conditional_has_expected_mean() {
        // counts (3, 7), alpha = 2: V_1 ~ Beta(4, 9), mean 4/13.
        let mut state = two_class_state([0.5, 0.5], [0.9, 0.1], [0.2, 0.8], 10);
        state.alpha = 2.0;
        state.assignments = vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
        let mut rng = chain_rng(45, 0);
        let mut sum = 0.0;
        let draws = 20_000;
        for _ in 0..draws {
            sample_v_and_pi(&mut state, &mut rng).unwrap();
            sum += state.sticks[0];
            assert_eq!(*state.sticks.last().unwrap(), 1.0);
            assert!((state.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let mean = sum / draws as f64;
        assert!((mean - 4.0 / 13.0).abs() < 0.005, "{mean}");
    }

    #[test]
    fn concentration_conditional_has_expected_mean() {
        // a = b = 0.25, K = 3, V = (0.5, 0.5, 1):
        // shape 2.25, rate 0.25 + 2 ln 2, mean = shape / rate.
        let schema = binary_schema();
        let hp = HyperParams {
            n_classes: 3,
            a_alpha: 0.25,
            b_alpha: 0.25,
            dirichlet_a: vec![vec![1.0, 1.0]],
            fixed_alpha: None,
        };
        hp.validate(&schema).unwrap();
        let mut theta = Theta::zeros(3, &[2]);
        for k in 0..3 {
            theta.pmf_mut(k, 0).copy_from_slice(&[0.5, 0.5]);
        }
        let mut state = DpmpmState {
            assignments: vec![0],
            sticks: vec![0.5, 0.5, 1.0],
            stick_log_complements: vec![0.5f64.ln(), 0.5f64.ln(), f64::NEG_INFINITY],
            weights: stick_breaking(&[0.5, 0.5, 1.0]),
            alpha: 1.0,
            theta,
            completed: vec![0],
        };
        let mut rng = chain_rng(46, 0);
        let mut sum = 0.0;
        let draws = 40_000;
        for _ in 0..draws {
            sample_alpha(&mut state, &hp, &mut rng).unwrap();
            sum += state.alpha;
        }
        let mean = sum / draws as f64;
        let expect = 2.25 / (0.25 + 2.0 * 2.0_f64.ln());
        assert!((mean - expect).abs() < 0.02, "{mean} vs {expect}");
    }

    #[test]
    fn fixed_alpha_short_circuits_sampling() {
        let schema = binary_schema();
        let mut hp = HyperParams::new(&schema, 2, 0.25, 0.25).unwrap();
        hp.fixed_alpha = Some(3.5);
        let mut state = two_class_state([0.5, 0.5], [0.9, 0.1], [0.2, 0.8], 1);
        let mut rng = chain_rng(47, 0);
        sample_alpha(&mut state, &hp, &mut rng).unwrap();
        assert_eq!(state.alpha, 3.5);
    }

    #[test]
    fn theta_conditional_has_expected_mean() {
        // Class 0 holds rows (0, 0, 1) with all-ones prior: Dirichlet(3, 2),
        // so the first coordinate has mean 0.6.
        let schema = binary_schema();
        let hp = HyperParams::new(&schema, 2, 0.25, 0.25).unwrap();
        let mut state = two_class_state([0.5, 0.5], [0.9, 0.1], [0.2, 0.8], 3);
        state.assignments = vec![0, 0, 0];
        state.completed = vec![0, 0, 1];
        let mut rng = chain_rng(48, 0);
        let mut sum = 0.0;
        let draws = 20_000;
        for _ in 0..draws {
            sample_theta(&mut state, &hp, &mut rng).unwrap();
            sum += state.theta.prob(0, 0, 0);
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.6).abs() < 0.005, "{mean}");
    }

    #[test]
    fn sweep_preserves_observed_cells() {
        let schema = Arc::new(
            Schema::new(vec![var("A", &["a", "b"]), var("B", &["u", "v", "w"])]).unwrap(),
        );
        let cells = vec![
            Some(0), Some(2),
            Some(1), None,
            None, Some(0),
            Some(1), Some(1),
        ];
        let data = CategoricalDataset::new(Arc::clone(&schema), cells).unwrap();
        let hp = HyperParams::new(&schema, 4, 0.25, 0.25).unwrap();
        let mut rng = chain_rng(49, 0);
        let mut state = init_state(&data, &hp, &mut rng).unwrap();
        assert_eq!(state.alpha, 1.0);
        for _ in 0..50 {
            gibbs_step(&mut state, &data, &hp, &mut rng).unwrap();
            assert!(completed_matches_observed(&state, &data));
            assert!((state.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(state.weights, stick_breaking(&state.sticks));
        }
    }

    #[test]
    fn occupied_class_count() {
        assert_eq!(occupied_classes(&[0, 0, 0]), 1);
        assert_eq!(occupied_classes(&[0, 3, 3, 7]), 3);
        assert_eq!(occupied_classes(&[]), 0);
    }
}
