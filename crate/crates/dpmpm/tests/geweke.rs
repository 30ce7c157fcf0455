//! Prior-invariance check of the full Gibbs sweep.
//!
//! On a dataset whose cells are all missing, the sampler conditions on
//! nothing, so its stationary distribution is exactly the prior joint over
//! (alpha, sticks, theta, assignments, cells). Comparing a long thinned
//! chain against independent draws from the prior therefore exercises every
//! conditional at once: a wrong Beta tail, a dropped count, or a misplaced
//! rate would pull the chain off the prior.

use dpmpm::catdata::{CategoricalDataset, Schema, Variable};
use dpmpm::model::{gibbs_step, init_state, occupied_classes, stick_breaking, HyperParams};
use dpmpm::rng::{chain_rng, RunRng};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

const K: usize = 8;
const N: usize = 40;
const DIMS: [usize; 2] = [3, 2];
const A_ALPHA: f64 = 0.25;
const B_ALPHA: f64 = 0.25;
const SAMPLES: usize = 1500;
const THIN: usize = 20;
const BURN: usize = 500;

struct Stats {
    alpha: Vec<f64>,
    theta000: Vec<f64>,
    v0: Vec<f64>,
    kstar: Vec<f64>,
    share00: Vec<f64>,
}

impl Stats {
    fn with_capacity(n: usize) -> Stats {
        Stats {
            alpha: Vec::with_capacity(n),
            theta000: Vec::with_capacity(n),
            v0: Vec::with_capacity(n),
            kstar: Vec::with_capacity(n),
            share00: Vec::with_capacity(n),
        }
    }
}

fn categorical(probs: &[f64], rng: &mut RunRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn dirichlet_uniform(dim: usize, rng: &mut RunRng) -> Vec<f64> {
    let g = Gamma::new(1.0, 1.0).unwrap();
    let mut draw: Vec<f64> = (0..dim).map(|_| g.sample(rng)).collect();
    let total: f64 = draw.iter().sum();
    for x in &mut draw {
        *x /= total;
    }
    draw
}

/// One exact draw from the prior joint, reduced to the tracked statistics.
fn prior_draw(stats: &mut Stats, rng: &mut RunRng) {
    let alpha = Gamma::new(A_ALPHA, 1.0 / B_ALPHA).unwrap().sample(rng);
    let mut sticks: Vec<f64> = (0..K - 1)
        .map(|_| {
            // Beta(1, alpha) by inversion: 1 - U^(1/alpha).
            let u: f64 = rng.random();
            1.0 - u.powf(1.0 / alpha)
        })
        .collect();
    sticks.push(1.0);
    let weights = stick_breaking(&sticks);
    let theta: Vec<Vec<Vec<f64>>> = (0..K)
        .map(|_| DIMS.iter().map(|&d| dirichlet_uniform(d, rng)).collect())
        .collect();
    let mut z = vec![0u32; N];
    let mut x00 = 0usize;
    for zi in z.iter_mut() {
        let k = categorical(&weights, rng);
        *zi = k as u32;
        for (j, t) in theta[k].iter().enumerate() {
            let level = categorical(t, rng);
            if j == 0 && level == 0 {
                x00 += 1;
            }
        }
    }
    stats.alpha.push(alpha);
    stats.theta000.push(theta[0][0][0]);
    stats.v0.push(sticks[0]);
    stats.kstar.push(f64::from(occupied_classes(&z)));
    stats.share00.push(x00 as f64 / N as f64);
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
fn ks_p(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n1 && j < n2 {
        let t = a[i].min(b[j]);
        while i < n1 && a[i] <= t {
            i += 1;
        }
        while j < n2 && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
    }
    p.clamp(0.0, 1.0)
}

/// Difference of means in standard errors.
fn mean_gap_z(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (ma, mb) = (mean(a), mean(b));
    let se = (var(a, ma) / a.len() as f64 + var(b, mb) / b.len() as f64).sqrt();
    (ma - mb).abs() / se
}

#[test]
fn gibbs_sweep_leaves_the_prior_invariant() {
    let schema = std::sync::Arc::new(
        Schema::new(vec![
            Variable {
                name: "A".into(),
                levels: vec!["a0".into(), "a1".into(), "a2".into()],
            },
            Variable { name: "B".into(), levels: vec!["b0".into(), "b1".into()] },
        ])
        .unwrap(),
    );
    let all_missing =
        CategoricalDataset::new(std::sync::Arc::clone(&schema), vec![None; N * 2]).unwrap();
    let hp = HyperParams::new(&schema, K, A_ALPHA, B_ALPHA).unwrap();

    let mut prior = Stats::with_capacity(SAMPLES);
    let mut rng = chain_rng(2024, 0);
    for _ in 0..SAMPLES {
        prior_draw(&mut prior, &mut rng);
    }

    let mut chain = Stats::with_capacity(SAMPLES);
    let mut rng = chain_rng(2024, 1);
    let mut state = init_state(&all_missing, &hp, &mut rng).unwrap();
    for _ in 0..BURN {
        gibbs_step(&mut state, &all_missing, &hp, &mut rng).unwrap();
    }
    for _ in 0..SAMPLES {
        for _ in 0..THIN {
            gibbs_step(&mut state, &all_missing, &hp, &mut rng).unwrap();
        }
        chain.alpha.push(state.alpha);
        chain.theta000.push(state.theta.prob(0, 0, 0));
        chain.v0.push(state.sticks[0]);
        chain.kstar.push(f64::from(occupied_classes(&state.assignments)));
        let x00 = (0..N).filter(|&i| state.completed[i * 2] == 0).count();
        chain.share00.push(x00 as f64 / N as f64);
    }

    let p_alpha = ks_p(&prior.alpha, &chain.alpha);
    let p_theta = ks_p(&prior.theta000, &chain.theta000);
    let p_v0 = ks_p(&prior.v0, &chain.v0);
    let z_kstar = mean_gap_z(&prior.kstar, &chain.kstar);
    let z_share = mean_gap_z(&prior.share00, &chain.share00);
    println!(
        "alpha p={p_alpha:.4} theta p={p_theta:.4} v0 p={p_v0:.4} \
         kstar z={z_kstar:.2} share z={z_share:.2}"
    );
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "means prior vs chain: alpha {:.4}/{:.4} v0 {:.4}/{:.4} kstar {:.3}/{:.3}",
        mean(&prior.alpha),
        mean(&chain.alpha),
        mean(&prior.v0),
        mean(&chain.v0),
        mean(&prior.kstar),
        mean(&chain.kstar)
    );

    assert!(p_alpha > 1e-4, "alpha distribution drifted from the prior (p={p_alpha:e})");
    assert!(p_theta > 1e-4, "theta distribution drifted from the prior (p={p_theta:e})");
    assert!(p_v0 > 1e-4, "stick distribution drifted from the prior (p={p_v0:e})");
    assert!(z_kstar < 5.0, "occupied-class mean drifted (z={z_kstar:.2})");
    assert!(z_share < 5.0, "cell-frequency mean drifted (z={z_share:.2})");
}
