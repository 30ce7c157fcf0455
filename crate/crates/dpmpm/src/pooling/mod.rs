//! Estimates computed on each released dataset and the rules for combining
//! them into a single inference, with variances that account for the
//! release design (imputation, full synthesis, or partial synthesis).

mod combine;
mod glm;
mod probs;

pub use combine::{
    combine, t_quantile, CombiningRule, PerDatasetEstimate, PooledEstimate, DF_CAP, DF_FLOOR,
};
pub use glm::{
    fit_logistic, fit_multinomial, pool_fitted_glms, GlmFit, MAX_ITERATIONS, SCORE_TOLERANCE,
    SEPARATION_BOUND,
};
pub use probs::{compute_probs, pool_estimated_probs, PooledProbs, ProbsTable};
