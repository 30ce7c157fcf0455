use crate::catdata::Schema;
use crate::{Error, Result};

/// Hyperparameters of the truncated mixture.
#[derive(Debug, Clone)]
pub struct HyperParams {
    /// Truncation level `K`: the maximum number of latent classes.
    pub n_classes: usize,
    /// Shape of the Gamma prior on the concentration.
    pub a_alpha: f64,
    /// Rate of the Gamma prior on the concentration.
    pub b_alpha: f64,
    /// Dirichlet concentrations for each variable's level probabilities,
    /// indexed `[variable][level]`.
    pub dirichlet_a: Vec<Vec<f64>>,
    /// Pin the concentration to a constant instead of sampling it. Exactness
    /// tests condition on a known concentration through this.
    pub fixed_alpha: Option<f64>,
}

impl HyperParams {
    /// Hyperparameters with all-ones Dirichlet concentrations (uniform over
    /// each simplex).
    pub fn new(schema: &Schema, n_classes: usize, a_alpha: f64, b_alpha: f64) -> Result<Self> {
        let hp = HyperParams {
            n_classes,
            a_alpha,
            b_alpha,
            dirichlet_a: schema.dims().iter().map(|&d| vec![1.0; d]).collect(),
            fixed_alpha: None,
        };
        hp.validate(schema)?;
        Ok(hp)
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.n_classes == 0 {
            return Err(Error::Config("the truncation level K must be at least 1".into()));
        }
        if !(self.a_alpha > 0.0) || !(self.b_alpha > 0.0) {
            return Err(Error::Config(format!(
                "concentration prior needs positive shape and rate, got ({}, {})",
                self.a_alpha, self.b_alpha
            )));
        }
        if self.dirichlet_a.len() != schema.p() {
            return Err(Error::Config(format!(
                "dirichlet_a covers {} variables, schema has {}",
                self.dirichlet_a.len(),
                schema.p()
            )));
        }
        for (j, a) in self.dirichlet_a.iter().enumerate() {
            if a.len() != schema.dim(j) {
                return Err(Error::Config(format!(
                    "dirichlet_a for variable {} has {} entries, schema has {} levels",
                    schema.variables[j].name,
                    a.len(),
                    schema.dim(j)
                )));
            }
            if a.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Config(format!(
                    "dirichlet_a for variable {} must be strictly positive",
                    schema.variables[j].name
                )));
            }
        }
        if let Some(alpha) = self.fixed_alpha {
            if !(alpha > 0.0) {
                return Err(Error::Config(format!("fixed concentration {alpha} must be positive")));
            }
        }
        Ok(())
    }
}

/// Per-class, per-variable level probabilities, stored contiguously:
/// class-major, then variable, then level.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    probs: Vec<f64>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    stride: usize,
    n_classes: usize,
}

impl Theta {
    pub fn zeros(n_classes: usize, dims: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut stride = 0;
        for &d in dims {
            offsets.push(stride);
            stride += d;
        }
        Theta {
            probs: vec![0.0; n_classes * stride],
            dims: dims.to_vec(),
            offsets,
            stride,
            n_classes,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Flat length of one class block.
    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn pmf(&self, class: usize, var: usize) -> &[f64] {
        let start = class * self.stride + self.offsets[var];
        &self.probs[start..start + self.dims[var]]
    }

    #[inline]
    pub fn pmf_mut(&mut self, class: usize, var: usize) -> &mut [f64] {
        let start = class * self.stride + self.offsets[var];
        &mut self.probs[start..start + self.dims[var]]
    }

    #[inline]
    pub fn prob(&self, class: usize, var: usize, level: u16) -> f64 {
        self.probs[class * self.stride + self.offsets[var] + usize::from(level)]
    }
}

/// Mutable sampler state over a dataset of `n` records and `p` variables.
#[derive(Debug, Clone)]
pub struct DpmpmState {
    /// Latent class of each record.
    pub assignments: Vec<u32>,
    /// Stick fractions `V`; the last entry is always exactly 1.
    pub sticks: Vec<f64>,
    /// `ln(1 - V_k)`, carried from the stick draw in log space. When the
    /// concentration is small a stick can sit closer to 1 than f64 resolves,
    /// so recomputing this from `sticks` would round to `ln(0)`; the
    /// concentration update depends on these values staying exact. The last
    /// entry is negative infinity and no update reads it.
    pub stick_log_complements: Vec<f64>,
    /// Class weights, always the stick-breaking image of `sticks`.
    pub weights: Vec<f64>,
    /// Concentration of the stick-breaking prior.
    pub alpha: f64,
    /// Level probabilities per class and variable.
    pub theta: Theta,
    /// Row-major completed data: observed cells verbatim, missing cells
    /// filled with their current imputations.
    pub completed: Vec<u16>,
}

impl DpmpmState {
    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }
}

/// Maps stick fractions to mixture weights:
/// `pi_k = V_k * prod_{l<k} (1 - V_l)`.
///
/// Panics if the fractions leave `[0, 1]` or the last entry is not exactly 1
/// (those are programmer errors, not data errors).
pub fn stick_breaking(sticks: &[f64]) -> Vec<f64> {
    assert!(!sticks.is_empty(), "stick fractions must be nonempty");
    assert_eq!(*sticks.last().unwrap(), 1.0, "the last stick fraction must be exactly 1");
    let mut remaining = 1.0;
    let mut weights = Vec::with_capacity(sticks.len());
    for &v in sticks {
        assert!((0.0..=1.0).contains(&v), "stick fraction {v} outside [0, 1]");
        weights.push(v * remaining);
        remaining *= 1.0 - v;
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stick_breaking_hand_values() {
        let pi = stick_breaking(&[0.5, 0.5, 1.0]);
        assert_eq!(pi, vec![0.5, 0.25, 0.25]);
        let pi = stick_breaking(&[0.2, 0.4, 1.0]);
        assert!((pi[0] - 0.2).abs() < 1e-15);
        assert!((pi[1] - 0.32).abs() < 1e-15);
        assert!((pi[2] - 0.48).abs() < 1e-15);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_first_stick() {
        assert_eq!(stick_breaking(&[1.0, 1.0]), vec![1.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "last stick fraction")]
    fn last_stick_must_be_one() {
        stick_breaking(&[0.5, 0.5]);
    }

    #[test]
    fn theta_layout_round_trips() {
        let mut t = Theta::zeros(2, &[2, 3]);
        t.pmf_mut(1, 1).copy_from_slice(&[0.2, 0.3, 0.5]);
        assert_eq!(t.prob(1, 1, 2), 0.5);
        assert_eq!(t.pmf(0, 0), &[0.0, 0.0]);
        assert_eq!(t.pmf(1, 1), &[0.2, 0.3, 0.5]);
    }
}
