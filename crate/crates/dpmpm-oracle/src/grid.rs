use dpmpm::catdata::{CategoricalDataset, DisallowedPatternSet};
use dpmpm::model::HyperParams;
use dpmpm::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Exact (or numerically integrated) posterior over the joint values of a
/// dataset's missing cells under the truncated latent-class model.
#[derive(Debug, Clone)]
pub struct CompletionPosterior {
    /// (record, variable) positions of the missing cells, row-major.
    pub cells: Vec<(usize, usize)>,
    /// Level count of each missing cell's variable.
    pub dims: Vec<usize>,
    /// `probs[i]` is the posterior probability of the completion whose
    /// values are `index_values(i)`; completions are enumerated with the
    /// last missing cell fastest.
    pub probs: Vec<f64>,
}

impl CompletionPosterior {
    /// Flat index of a joint completion given its per-cell values.
    pub fn index_of(&self, values: &[u16]) -> usize {
        assert_eq!(values.len(), self.dims.len());
        let mut idx = 0usize;
        for (v, &d) in values.iter().zip(&self.dims) {
            idx = idx * d + usize::from(*v);
        }
        idx
    }

    /// Per-cell values of the completion at a flat index.
    pub fn index_values(&self, mut idx: usize) -> Vec<u16> {
        let mut values = vec![0u16; self.dims.len()];
        for (v, &d) in values.iter_mut().zip(&self.dims).rev() {
            *v = (idx % d) as u16;
            idx /= d;
        }
        values
    }

    pub fn n_completions(&self) -> usize {
        self.probs.len()
    }
}

const MAX_RECORDS: usize = 8;
const MAX_MISSING: usize = 6;
const MAX_COMPLETIONS: usize = 4096;
const MAX_AXES: usize = 8;
const MAX_NODES: f64 = 2e8;

struct Problem {
    n: usize,
    p: usize,
    k: usize,
    dims: Vec<usize>,
    alpha: f64,
    cells: Vec<(usize, usize)>,
    cell_dims: Vec<usize>,
    /// One completed data matrix per completion, row-major `n * p`.
    completions: Vec<Vec<u16>>,
}

fn set_up(data: &CategoricalDataset, hp: &HyperParams) -> Result<Problem> {
    let n = data.n_records();
    let p = data.n_vars();
    let dims = data.schema().dims();
    let alpha = hp.fixed_alpha.ok_or_else(|| {
        Error::Config("the completion posterior needs a pinned concentration".into())
    })?;
    if n > MAX_RECORDS {
        return Err(Error::Config(format!(
            "{n} records; the exact posterior enumerates at most {MAX_RECORDS}"
        )));
    }
    let cells = data.missing_cells();
    if cells.is_empty() {
        return Err(Error::Config("no missing cells to integrate over".into()));
    }
    if cells.len() > MAX_MISSING {
        return Err(Error::Config(format!(
            "{} missing cells; the exact posterior enumerates at most {MAX_MISSING}",
            cells.len()
        )));
    }
    let cell_dims: Vec<usize> = cells.iter().map(|&(_, j)| dims[j]).collect();
    let n_completions: usize = cell_dims.iter().product();
    if n_completions > MAX_COMPLETIONS {
        return Err(Error::Config(format!(
            "{n_completions} joint completions; at most {MAX_COMPLETIONS} are supported"
        )));
    }

    let mut base = vec![0u16; n * p];
    for i in 0..n {
        for j in 0..p {
            base[i * p + j] = data.get(i, j).unwrap_or(0);
        }
    }
    let mut completions = Vec::with_capacity(n_completions);
    let mut values = vec![0u16; cells.len()];
    loop {
        let mut filled = base.clone();
        for (&(i, j), &v) in cells.iter().zip(&values) {
            filled[i * p + j] = v;
        }
        completions.push(filled);
        let mut c = cells.len();
        loop {
            if c == 0 {
                break;
            }
            c -= 1;
            values[c] += 1;
            if usize::from(values[c]) < cell_dims[c] {
                break;
            }
            values[c] = 0;
        }
        if values.iter().all(|&v| v == 0) {
            break;
        }
    }

    Ok(Problem {
        n,
        p,
        k: hp.n_classes,
        dims,
        alpha,
        cells,
        cell_dims,
        completions,
    })
}

fn ln_beta(x: f64, y: f64) -> f64 {
    ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)
}

/// Closed-form completion posterior for the model *without* disallowed
/// cells, by summing the conjugate marginal likelihood over every class
/// assignment vector: K^n terms, each a product of a stick moment and
/// per-class Dirichlet-multinomial factors.
pub fn closed_form_completion_posterior(
    data: &CategoricalDataset,
    hp: &HyperParams,
) -> Result<CompletionPosterior> {
    let prob = set_up(data, hp)?;
    let (n, p, k) = (prob.n, prob.p, prob.k);
    let n_assign = (k as u64).checked_pow(n as u32).filter(|&t| t <= 1 << 24).ok_or_else(|| {
        Error::Config(format!("{k}^{n} assignment vectors is beyond enumeration"))
    })? as usize;

    let mut log_terms: Vec<f64> = Vec::new();
    let mut post = vec![0.0f64; prob.completions.len()];
    for (c, completed) in prob.completions.iter().enumerate() {
        log_terms.clear();
        for assign_code in 0..n_assign {
            let mut z = vec![0usize; n];
            let mut code = assign_code;
            for zi in z.iter_mut() {
                *zi = code % k;
                code /= k;
            }
            let mut counts = vec![0u64; k];
            for &zi in &z {
                counts[zi] += 1;
            }
            // Stick moment: every class below the last contributes
            // alpha * B(n_k + 1, tail_k + alpha).
            let mut ln_term = 0.0;
            let mut tail: u64 = counts.iter().skip(1).sum();
            for class in 0..k - 1 {
                ln_term += prob.alpha.ln()
                    + ln_beta(counts[class] as f64 + 1.0, tail as f64 + prob.alpha);
                if class + 1 < k {
                    tail -= counts[class + 1];
                }
            }
            // Dirichlet-multinomial factor per class and variable.
            for class in 0..k {
                for j in 0..p {
                    let a = &hp.dirichlet_a[j];
                    let mut level_counts = vec![0u64; prob.dims[j]];
                    for (i, &zi) in z.iter().enumerate() {
                        if zi == class {
                            level_counts[usize::from(completed[i * p + j])] += 1;
                        }
                    }
                    let a_sum: f64 = a.iter().sum();
                    let n_class: u64 = level_counts.iter().sum();
                    ln_term += ln_gamma(a_sum) - ln_gamma(a_sum + n_class as f64);
                    for (l, &cnt) in level_counts.iter().enumerate() {
                        if cnt > 0 {
                            ln_term += ln_gamma(a[l] + cnt as f64) - ln_gamma(a[l]);
                        }
                    }
                }
            }
            log_terms.push(ln_term);
        }
        let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        post[c] = max + log_terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    }

    let max = post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = post.iter().map(|t| (t - max).exp()).sum();
    let probs: Vec<f64> = post.iter().map(|t| (t - max).exp() / total).collect();
    Ok(CompletionPosterior { cells: prob.cells, dims: prob.cell_dims, probs })
}

/// Completion posterior by midpoint quadrature over the prior: one grid axis
/// per stick fraction and per free pmf coordinate, prior density as node
/// weight, everything normalized at the end so only density *ratios* matter.
/// Handles disallowed cells through the per-record renormalization factor
/// `(1 - disallowed mass)^-n`.
pub fn grid_completion_posterior(
    data: &CategoricalDataset,
    hp: &HyperParams,
    mcz: Option<&DisallowedPatternSet>,
    grid: usize,
) -> Result<CompletionPosterior> {
    let prob = set_up(data, hp)?;
    let (n, p, k) = (prob.n, prob.p, prob.k);
    if grid < 2 {
        return Err(Error::Config("the grid needs at least 2 points per axis".into()));
    }

    // Axis layout: K-1 stick fractions, then the first dim-1 coordinates of
    // each class-variable pmf.
    let mut axes = k - 1;
    for j in 0..p {
        axes += k * (prob.dims[j] - 1);
    }
    if axes > MAX_AXES {
        return Err(Error::Config(format!(
            "{axes} grid axes; at most {MAX_AXES} are tractable"
        )));
    }
    if (grid as f64).powi(axes as i32) > MAX_NODES {
        return Err(Error::Config(format!(
            "{grid}^{axes} grid nodes is beyond the evaluation budget"
        )));
    }

    // Full cross-product cells, last variable fastest, for the mixture and
    // the disallowed mass.
    let n_cells: usize = prob.dims.iter().product();
    let mut strides = vec![1usize; p];
    for j in (0..p - 1).rev() {
        strides[j] = strides[j + 1] * prob.dims[j + 1];
    }
    let mut disallowed_cells = vec![false; n_cells];
    if let Some(set) = mcz {
        let mut cell = vec![0u16; p];
        for flag in disallowed_cells.iter_mut() {
            *flag = set.matches(&cell);
            let mut j = p;
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                cell[j] += 1;
                if usize::from(cell[j]) < prob.dims[j] {
                    break;
                }
                cell[j] = 0;
            }
        }
    }
    // Flat cell index of every record under every completion. A completion
    // that puts any record into a disallowed cell has zero likelihood under
    // the truncated model, so it keeps zero posterior mass.
    let cell_index: Vec<Vec<usize>> = prob
        .completions
        .iter()
        .map(|completed| {
            (0..n)
                .map(|i| {
                    (0..p)
                        .map(|j| usize::from(completed[i * p + j]) * strides[j])
                        .sum()
                })
                .collect()
        })
        .collect();
    let completion_allowed: Vec<bool> = cell_index
        .iter()
        .map(|idxs| idxs.iter().all(|&idx| !disallowed_cells[idx]))
        .collect();

    let midpoints: Vec<f64> = (0..grid).map(|g| (g as f64 + 0.5) / grid as f64).collect();
    let mut node = vec![0usize; axes];
    let mut post = vec![0.0f64; prob.completions.len()];
    let mut pi = vec![0.0f64; k];
    let mut theta = vec![0.0f64; k * p * prob.dims.iter().max().copied().unwrap_or(1)];
    let dim_max = prob.dims.iter().max().copied().unwrap_or(1);
    let mut mix = vec![0.0f64; n_cells];
    'nodes: loop {
        // Prior weight accumulates as we decode the node; a node outside a
        // simplex gets weight zero and is skipped.
        let mut weight_ln = 0.0;
        let mut axis = 0;
        let mut valid = true;

        let mut remaining = 1.0;
        for class in 0..k {
            let v = if class + 1 < k { midpoints[node[axis]] } else { 1.0 };
            if class + 1 < k {
                // Beta(1, alpha) kernel.
                weight_ln += (prob.alpha - 1.0) * (1.0 - v).ln();
                axis += 1;
            }
            pi[class] = v * remaining;
            remaining *= 1.0 - v;
        }
        for class in 0..k {
            for j in 0..p {
                let d = prob.dims[j];
                let mut last = 1.0;
                for l in 0..d - 1 {
                    let t = midpoints[node[axis]];
                    axis += 1;
                    theta[(class * p + j) * dim_max + l] = t;
                    last -= t;
                }
                if last <= 0.0 {
                    valid = false;
                    break;
                }
                theta[(class * p + j) * dim_max + d - 1] = last;
                // Dirichlet kernel.
                let a = &hp.dirichlet_a[j];
                for l in 0..d {
                    weight_ln += (a[l] - 1.0) * theta[(class * p + j) * dim_max + l].ln();
                }
            }
            if !valid {
                break;
            }
        }

        if valid {
            for (idx, m) in mix.iter_mut().enumerate() {
                let mut total = 0.0;
                for (class, &w) in pi.iter().enumerate() {
                    let mut term = w;
                    let mut rest = idx;
                    for j in 0..p {
                        let level = rest / strides[j];
                        rest %= strides[j];
                        term *= theta[(class * p + j) * dim_max + level];
                    }
                    total += term;
                }
                *m = total;
            }
            let mass0: f64 = mix
                .iter()
                .zip(&disallowed_cells)
                .filter(|(_, &bad)| bad)
                .map(|(m, _)| m)
                .sum();
            let kept = 1.0 - mass0;
            if kept > 0.0 {
                let base_ln = weight_ln - n as f64 * kept.ln();
                for (c, idxs) in cell_index.iter().enumerate() {
                    if !completion_allowed[c] {
                        continue;
                    }
                    let mut like_ln = base_ln;
                    for &idx in idxs {
                        like_ln += mix[idx].ln();
                    }
                    post[c] += like_ln.exp();
                }
            }
        }

        // Advance the node odometer.
        let mut a = axes;
        loop {
            if a == 0 {
                break 'nodes;
            }
            a -= 1;
            node[a] += 1;
            if node[a] < grid {
                break;
            }
            node[a] = 0;
        }
    }

    let total: f64 = post.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Data(format!(
            "grid posterior normalizer degenerated to {total}"
        )));
    }
    for p in &mut post {
        *p /= total;
    }
    Ok(CompletionPosterior { cells: prob.cells, dims: prob.cell_dims, probs: post })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpmpm::catdata::{Schema, Variable};
    use std::sync::Arc;

    fn binary2() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                Variable { name: "A".into(), levels: vec!["0".into(), "1".into()] },
                Variable { name: "B".into(), levels: vec!["0".into(), "1".into()] },
            ])
            .unwrap(),
        )
    }

    fn hyper(schema: &Schema, k: usize) -> HyperParams {
        let mut hp = HyperParams::new(schema, k, 0.25, 0.25).unwrap();
        hp.fixed_alpha = Some(1.0);
        hp
    }

    #[test]
    fn completion_indexing_round_trips() {
        let post = CompletionPosterior {
            cells: vec![(0, 0), (2, 1)],
            dims: vec![3, 2],
            probs: vec![0.0; 6],
        };
        for idx in 0..6 {
            assert_eq!(post.index_of(&post.index_values(idx)), idx);
        }
        assert_eq!(post.index_values(5), vec![2, 1]);
    }

    #[test]
    fn single_missing_cell_in_a_symmetric_toy_splits_evenly() {
        let schema = binary2();
        // Mirror-image records make both values of the missing cell
        // exchangeable, so the posterior must be exactly even.
        let cells = vec![
            Some(0),
            Some(0),
            Some(1),
            Some(1),
            Some(0),
            Some(1),
            Some(1),
            Some(0),
            None,
            Some(0),
        ];
        let data = CategoricalDataset::new(Arc::clone(&schema), cells).unwrap();
        let hp = hyper(&schema, 2);
        let post = closed_form_completion_posterior(&data, &hp).unwrap();
        assert_eq!(post.n_completions(), 2);
        assert!((post.probs[0] - 0.5).abs() < 1e-12, "{:?}", post.probs);

        // The symmetry is an artifact of the mirrored records; checking a
        // lopsided dataset guards against the oracle being constant.
        let cells = vec![Some(0), Some(0), Some(0), Some(0), Some(0), Some(1), None, Some(0)];
        let data = CategoricalDataset::new(Arc::clone(&schema), cells).unwrap();
        let post = closed_form_completion_posterior(&data, &hp).unwrap();
        assert!(post.probs[0] > 0.6, "{:?}", post.probs);
    }

    #[test]
    fn grid_matches_the_closed_form_without_disallowed_cells() {
        let schema = binary2();
        let cells = vec![
            Some(0),
            Some(0),
            Some(1),
            Some(1),
            None,
            Some(0),
            Some(1),
            None,
            Some(0),
            Some(1),
        ];
        let data = CategoricalDataset::new(Arc::clone(&schema), cells).unwrap();
        let hp = hyper(&schema, 2);
        let exact = closed_form_completion_posterior(&data, &hp).unwrap();
        let coarse = grid_completion_posterior(&data, &hp, None, 10).unwrap();
        let fine = grid_completion_posterior(&data, &hp, None, 20).unwrap();
        let tv_coarse = crate::total_variation(&exact.probs, &coarse.probs);
        let tv_fine = crate::total_variation(&exact.probs, &fine.probs);
        println!("grid 10 tv {tv_coarse:.2e}, grid 20 tv {tv_fine:.2e}");
        assert!(tv_fine < 1e-3, "fine grid off by {tv_fine}");
        assert!(tv_fine <= tv_coarse + 1e-12, "refinement failed to improve");
    }

    #[test]
    fn disallowed_completions_get_no_mass() {
        let schema = binary2();
        let cells = vec![Some(1), None, Some(0), Some(0), Some(0), Some(1)];
        let data = CategoricalDataset::new(schema.clone(), cells).unwrap();
        let set =
            DisallowedPatternSet::new(schema.clone(), vec![vec![Some(1), Some(1)]]).unwrap();
        let hp = hyper(&schema, 2);
        let post = grid_completion_posterior(&data, &hp, Some(&set), 8).unwrap();
        // Record 0 is (1, ?); completing it as (1, 1) is impossible.
        assert_eq!(post.probs[post.index_of(&[1])], 0.0);
        assert!((post.probs[post.index_of(&[0])] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_limits_are_enforced() {
        let schema = binary2();
        let data =
            CategoricalDataset::new(Arc::clone(&schema), vec![None, None]).unwrap();
        let mut hp = hyper(&schema, 2);
        hp.fixed_alpha = None;
        assert!(closed_form_completion_posterior(&data, &hp).is_err());
        let hp = hyper(&schema, 2);
        assert!(grid_completion_posterior(&data, &hp, None, 1).is_err());
        let complete =
            CategoricalDataset::new(schema, vec![Some(0), Some(0)]).unwrap();
        assert!(closed_form_completion_posterior(&complete, &hp).is_err());
    }
}
