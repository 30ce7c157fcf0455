//! Each Gibbs update, run repeatedly from a frozen state, must reproduce its
//! conditional distribution exactly. The reference CDFs come from statrs and
//! the comparison is a one-sample Kolmogorov-Smirnov test on ten thousand
//! draws, so a systematic error in any update's shape, rate, or counts shows
//! up as a vanishing p-value.

use dpmpm::catdata::{CategoricalDataset, Schema, Variable};
use dpmpm::model::{init_state, sample_alpha, sample_theta, sample_v_and_pi, HyperParams};
use dpmpm::rng::chain_rng;
use dpmpm_oracle::ks_test;
use statrs::distribution::{Beta, ContinuousCDF, Gamma};
use std::sync::Arc;

const DRAWS: usize = 10_000;
const P_MIN: f64 = 0.01;

fn toy_schema() -> Arc<Schema> {
    Arc::new(
        Schema::new(vec![
            Variable {
                name: "color".into(),
                levels: vec!["red".into(), "green".into(), "blue".into()],
            },
            Variable { name: "size".into(), levels: vec!["small".into(), "large".into()] },
        ])
        .unwrap(),
    )
}

/// Twelve fully observed records over (color, size).
fn toy_data(schema: Arc<Schema>) -> CategoricalDataset {
    let mut cells = Vec::new();
    for i in 0..12u16 {
        cells.push(Some(i % 3));
        cells.push(Some((i / 3) % 2));
    }
    CategoricalDataset::new(schema, cells).unwrap()
}

#[test]
fn stick_fraction_update_matches_its_beta_conditional() {
    let schema = toy_schema();
    let data = toy_data(schema.clone());
    let hp = HyperParams::new(&schema, 4, 0.25, 0.25).unwrap();
    let mut rng = chain_rng(61, 0);
    let mut state = init_state(&data, &hp, &mut rng).unwrap();

    // Freeze the class counts at 5, 4, 2, 1 and the concentration at 1.7.
    let plan = [5usize, 4, 2, 1];
    let mut z = Vec::new();
    for (class, &count) in plan.iter().enumerate() {
        z.extend(std::iter::repeat(class as u32).take(count));
    }
    state.assignments = z;
    state.alpha = 1.7;

    let mut first = Vec::with_capacity(DRAWS);
    let mut third = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        sample_v_and_pi(&mut state, &mut rng).unwrap();
        first.push(state.sticks[0]);
        third.push(state.sticks[2]);
    }

    // V_0 | counts ~ Beta(1 + 5, alpha + 7), V_2 ~ Beta(1 + 2, alpha + 1).
    let ref_first = Beta::new(6.0, 1.7 + 7.0).unwrap();
    let (d, p) = ks_test(&first, |x| ref_first.cdf(x));
    assert!(p > P_MIN, "first stick: d = {d}, p = {p}");
    let ref_third = Beta::new(3.0, 1.7 + 1.0).unwrap();
    let (d, p) = ks_test(&third, |x| ref_third.cdf(x));
    assert!(p > P_MIN, "third stick: d = {d}, p = {p}");
}

#[test]
fn concentration_update_matches_its_gamma_conditional() {
    let schema = toy_schema();
    let data = toy_data(schema.clone());
    let hp = HyperParams::new(&schema, 4, 0.25, 0.25).unwrap();
    let mut rng = chain_rng(62, 0);
    let mut state = init_state(&data, &hp, &mut rng).unwrap();

    // Freeze the stick log-complements; the update reads only these.
    state.stick_log_complements =
        vec![0.4f64.ln(), 0.7f64.ln(), 0.5f64.ln(), f64::NEG_INFINITY];

    let mut draws = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        sample_alpha(&mut state, &hp, &mut rng).unwrap();
        draws.push(state.alpha);
    }

    let shape = hp.a_alpha + 3.0;
    let rate = hp.b_alpha - (0.4f64.ln() + 0.7f64.ln() + 0.5f64.ln());
    let reference = Gamma::new(shape, rate).unwrap();
    let (d, p) = ks_test(&draws, |x| reference.cdf(x));
    assert!(p > P_MIN, "concentration: d = {d}, p = {p}");
}

#[test]
fn level_probability_update_matches_its_dirichlet_conditional() {
    let schema = toy_schema();
    let data = toy_data(schema.clone());
    let mut hp = HyperParams::new(&schema, 2, 0.25, 0.25).unwrap();
    // Lopsided concentrations so a mix-up between prior and counts shows.
    hp.dirichlet_a[0] = vec![0.5, 1.0, 2.0];
    let mut rng = chain_rng(63, 0);
    let mut state = init_state(&data, &hp, &mut rng).unwrap();

    // Class 0 gets the first eight records; its color counts are 3, 3, 2.
    state.assignments = (0..12).map(|i| u32::from(i >= 8)).collect();
    for i in 0..12 {
        state.completed[2 * i] = (i % 3) as u16;
        state.completed[2 * i + 1] = ((i / 3) % 2) as u16;
    }

    let mut draws = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        sample_theta(&mut state, &hp, &mut rng).unwrap();
        draws.push(state.theta.prob(0, 0, 0));
    }

    // Dirichlet marginal of the first coordinate:
    // Beta(0.5 + 3, (1.0 + 3) + (2.0 + 2)).
    let reference = Beta::new(3.5, 8.0).unwrap();
    let (d, p) = ks_test(&draws, |x| reference.cdf(x));
    assert!(p > P_MIN, "level probabilities: d = {d}, p = {p}");
}
