use dpmpm::catdata::CategoricalDataset;
use dpmpm::{Error, Result};

/// Joint cell probabilities of a latent-class mixture, enumerated over the
/// full cross product of levels. Cells are ordered row-major with the first
/// variable slowest. `pmfs[k][j][level]` gives the level probabilities of
/// variable `j` in class `k`. When `disallowed` marks a cell, its mass is
/// removed and the rest renormalized, mirroring a model that conditions on
/// never producing those cells.
pub fn mixture_cell_probs(
    weights: &[f64],
    pmfs: &[Vec<Vec<f64>>],
    disallowed: Option<&dyn Fn(&[u16]) -> bool>,
) -> Result<Vec<f64>> {
    let k = weights.len();
    if pmfs.len() != k || k == 0 {
        return Err(Error::Config(format!(
            "{} weight(s) against {} class pmf sets",
            k,
            pmfs.len()
        )));
    }
    let dims: Vec<usize> = pmfs[0].iter().map(|pmf| pmf.len()).collect();
    let n_cells: usize = dims.iter().product();
    if n_cells == 0 || n_cells > 1_000_000 {
        return Err(Error::Config(format!(
            "cross product has {n_cells} cells; enumeration supports 1..=1000000"
        )));
    }

    let mut probs = Vec::with_capacity(n_cells);
    let mut cell = vec![0u16; dims.len()];
    let mut removed = 0.0;
    loop {
        let mut mix = 0.0;
        for (class, w) in weights.iter().enumerate() {
            let mut term = *w;
            for (j, &level) in cell.iter().enumerate() {
                term *= pmfs[class][j][usize::from(level)];
            }
            mix += term;
        }
        if disallowed.is_some_and(|f| f(&cell)) {
            removed += mix;
            probs.push(0.0);
        } else {
            probs.push(mix);
        }
        // Advance the odometer, last variable fastest.
        let mut j = dims.len();
        loop {
            if j == 0 {
                break;
            }
            j -= 1;
            cell[j] += 1;
            if usize::from(cell[j]) < dims[j] {
                break;
            }
            cell[j] = 0;
        }
        if cell.iter().all(|&c| c == 0) {
            break;
        }
    }

    let kept: f64 = probs.iter().sum();
    if !(kept > 0.0) {
        return Err(Error::Data(format!(
            "disallowed cells absorb all probability mass ({removed} removed)"
        )));
    }
    for p in &mut probs {
        *p /= kept;
    }
    Ok(probs)
}

/// Empirical joint cell frequencies pooled over complete datasets, in the
/// same cell order as [`mixture_cell_probs`].
pub fn empirical_cell_probs(datasets: &[CategoricalDataset]) -> Result<Vec<f64>> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::Config("no datasets to tabulate".into()))?;
    let dims = first.schema().dims();
    let n_cells: usize = dims.iter().product();
    if n_cells > 1_000_000 {
        return Err(Error::Config(format!(
            "cross product has {n_cells} cells; enumeration supports up to 1000000"
        )));
    }
    let mut strides = vec![1usize; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * dims[j + 1];
    }
    let mut counts = vec![0u64; n_cells];
    let mut total = 0u64;
    for (d, ds) in datasets.iter().enumerate() {
        if ds.schema() != first.schema() {
            return Err(Error::Schema(format!("dataset {d} uses a different schema")));
        }
        for i in 0..ds.n_records() {
            let mut idx = 0usize;
            for j in 0..dims.len() {
                let x = ds.get(i, j).ok_or_else(|| {
                    Error::Data(format!("dataset {d} record {i} has a missing cell"))
                })?;
                idx += usize::from(x) * strides[j];
            }
            counts[idx] += 1;
            total += 1;
        }
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Total variation distance between two distributions on the same cells.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions live on different supports");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpmpm::catdata::{Schema, Variable};
    use std::sync::Arc;

    #[test]
    fn single_class_joint_is_the_product() {
        let probs = mixture_cell_probs(
            &[1.0],
            &[vec![vec![0.25, 0.75], vec![0.1, 0.2, 0.7]]],
            None,
        )
        .unwrap();
        assert_eq!(probs.len(), 6);
        // First variable slowest: cell order 00 01 02 10 11 12.
        assert!((probs[0] - 0.025).abs() < 1e-15);
        assert!((probs[5] - 0.525).abs() < 1e-15);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renormalization_divides_by_the_kept_mass() {
        let f = |cell: &[u16]| cell == [0, 0];
        let probs = mixture_cell_probs(
            &[0.5, 0.5],
            &[
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
            Some(&f),
        )
        .unwrap();
        assert_eq!(probs[0], 0.0);
        for &p in &probs[1..] {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_frequencies_line_up_with_the_cell_order() {
        let schema = Arc::new(
            Schema::new(vec![
                Variable { name: "A".into(), levels: vec!["0".into(), "1".into()] },
                Variable { name: "B".into(), levels: vec!["0".into(), "1".into()] },
            ])
            .unwrap(),
        );
        let ds =
            CategoricalDataset::from_complete(schema, &[0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        let freqs = empirical_cell_probs(std::slice::from_ref(&ds)).unwrap();
        assert_eq!(freqs, vec![0.25, 0.25, 0.0, 0.5]);
        assert_eq!(total_variation(&freqs, &[0.25, 0.25, 0.5, 0.0]), 0.5);
    }
}
