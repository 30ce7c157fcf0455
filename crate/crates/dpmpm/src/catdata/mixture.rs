use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{CategoricalDataset, DisallowedPatternSet, Schema};
use crate::samplers::categorical;
use crate::{Error, Result};

/// Ground-truth finite mixture used to simulate fixture data: class weights
/// plus, for every class and variable, a pmf over that variable's levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureTruth {
    pub weights: Vec<f64>,
    /// Indexed `[class][variable][level]`.
    pub component_pmfs: Vec<Vec<Vec<f64>>>,
}

const PMF_TOL: f64 = 1e-12;

impl MixtureTruth {
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.component_pmfs.len() {
            return Err(Error::Config(format!(
                "mixture has {} weights but {} components",
                self.weights.len(),
                self.component_pmfs.len()
            )));
        }
        check_pmf("class weights", &self.weights)?;
        for (k, comp) in self.component_pmfs.iter().enumerate() {
            if comp.len() != schema.p() {
                return Err(Error::Config(format!(
                    "component {k} covers {} variables, schema has {}",
                    comp.len(),
                    schema.p()
                )));
            }
            for (j, pmf) in comp.iter().enumerate() {
                if pmf.len() != schema.dim(j) {
                    return Err(Error::Config(format!(
                        "component {k} variable {} has {} probabilities, schema has {} levels",
                        schema.variables[j].name,
                        pmf.len(),
                        schema.dim(j)
                    )));
                }
                check_pmf(&format!("component {k} variable {}", schema.variables[j].name), pmf)?;
            }
        }
        Ok(())
    }

    /// Marginal probability of each level of variable `j`.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        let d = self.component_pmfs[0][j].len();
        let mut out = vec![0.0; d];
        for (w, comp) in self.weights.iter().zip(&self.component_pmfs) {
            for (o, p) in out.iter_mut().zip(&comp[j]) {
                *o += w * p;
            }
        }
        out
    }
}

fn check_pmf(what: &str, pmf: &[f64]) -> Result<()> {
    if pmf.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Config(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > PMF_TOL {
        return Err(Error::Config(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Hard cap on consecutive rejections when simulating under a disallowed
/// pattern set; hitting it means the truth puts essentially all of its mass
/// inside the disallowed region.
const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

/// Simulates `n` complete records from the mixture. When `mcz` is given,
/// draws landing in the disallowed region are rejected, so the result is a
/// sample from the truncated mixture.
pub fn generate_from_mixture(
    truth: &MixtureTruth,
    n: usize,
    schema: Arc<Schema>,
    seed: u64,
    mcz: Option<&DisallowedPatternSet>,
) -> Result<CategoricalDataset> {
    truth.validate(&schema)?;
    let p = schema.p();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cells: Vec<u16> = Vec::with_capacity(n * p);
    let mut row = vec![0u16; p];
    let mut rejections = 0u64;
    let mut produced = 0usize;
    while produced < n {
        let k = categorical(&truth.weights, &mut rng)?;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = categorical(&truth.component_pmfs[k][j], &mut rng)? as u16;
        }
        if let Some(mcz) = mcz {
            if mcz.matches(&row) {
                rejections += 1;
                if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                    return Err(Error::Config(format!(
                        "gave up simulating after {MAX_CONSECUTIVE_REJECTIONS} consecutive draws inside the disallowed set"
                    )));
                }
                continue;
            }
        }
        rejections = 0;
        cells.extend_from_slice(&row);
        produced += 1;
    }
    CategoricalDataset::from_complete(schema, &cells)
}

/// Returns a copy of `data` in which every cell was independently blanked
/// with probability `rate`.
pub fn inject_mcar(data: &CategoricalDataset, rate: f64, seed: u64) -> Result<CategoricalDataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("missingness rate {rate} is outside [0, 1]")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for i in 0..data.n_records() {
        for j in 0..data.n_vars() {
            if rng.random::<f64>() < rate {
                out.set(i, j, None);
            }
        }
    }
    Ok(out)
}

/// On-disk description of a simulation truth: the schema together with the
/// mixture parameters, as one JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema: Schema,
    pub weights: Vec<f64>,
    /// Indexed `[class][variable][level]`.
    pub components: Vec<Vec<Vec<f64>>>,
}

impl TruthFile {
    pub fn load(path: &Path) -> Result<(Arc<Schema>, MixtureTruth)> {
        let text = std::fs::read_to_string(path)?;
        let raw: TruthFile = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("truth file {}: {e}", path.display())))?;
        let schema = Arc::new(Schema::new(raw.schema.variables)?);
        let truth = MixtureTruth { weights: raw.weights, component_pmfs: raw.components };
        truth.validate(&schema)?;
        Ok((schema, truth))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catdata::Variable;

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                Variable { name: "A".into(), levels: vec!["a0".into(), "a1".into()] },
                Variable { name: "B".into(), levels: vec!["b0".into(), "b1".into(), "b2".into()] },
            ])
            .unwrap(),
        )
    }

    fn truth() -> MixtureTruth {
        MixtureTruth {
            weights: vec![0.6, 0.4],
            component_pmfs: vec![
                vec![vec![0.9, 0.1], vec![0.7, 0.2, 0.1]],
                vec![vec![0.2, 0.8], vec![0.1, 0.3, 0.6]],
            ],
        }
    }

    #[test]
    fn validation_catches_bad_sums() {
        let mut t = truth();
        t.component_pmfs[1][0] = vec![0.2, 0.9];
        assert!(t.validate(&schema()).is_err());
        assert!(truth().validate(&schema()).is_ok());
    }

    #[test]
    fn generation_is_deterministic_and_matches_marginals() {
        let s = schema();
        let a = generate_from_mixture(&truth(), 5000, Arc::clone(&s), 11, None).unwrap();
        let b = generate_from_mixture(&truth(), 5000, Arc::clone(&s), 11, None).unwrap();
        assert_eq!(a, b);
        let freq_a1 =
            (0..5000).filter(|&i| a.get(i, 0) == Some(1)).count() as f64 / 5000.0;
        let expect = truth().marginal(0)[1];
        assert!((freq_a1 - expect).abs() < 0.02, "{freq_a1} vs {expect}");
    }

    #[test]
    fn rejection_respects_patterns() {
        let s = schema();
        let mcz =
            DisallowedPatternSet::new(Arc::clone(&s), vec![vec![Some(1), Some(2)]]).unwrap();
        let data = generate_from_mixture(&truth(), 2000, Arc::clone(&s), 3, Some(&mcz)).unwrap();
        let mut row = [0u16; 2];
        for i in 0..data.n_records() {
            assert!(data.complete_row_into(i, &mut row));
            assert!(!mcz.matches(&row));
        }
    }

    #[test]
    fn mcar_rate_is_validated_and_applied() {
        let s = schema();
        let data = generate_from_mixture(&truth(), 4000, Arc::clone(&s), 5, None).unwrap();
        assert!(inject_mcar(&data, 1.5, 0).is_err());
        let holey = inject_mcar(&data, 0.3, 9).unwrap();
        let rate = holey.n_missing() as f64 / (4000.0 * 2.0);
        assert!((rate - 0.3).abs() < 0.02, "{rate}");
        // untouched cells keep their values
        for i in 0..data.n_records() {
            for j in 0..2 {
                if let Some(v) = holey.get(i, j) {
                    assert_eq!(Some(v), data.get(i, j));
                }
            }
        }
        assert_eq!(inject_mcar(&data, 0.3, 9).unwrap(), holey);
    }
}
