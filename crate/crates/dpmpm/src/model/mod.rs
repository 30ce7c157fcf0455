//! The latent-class model and its blocked Gibbs sampler.
//!
//! Records are assigned to one of `K` latent classes; within a class the
//! variables are independent multinomials. The class weights follow a
//! truncated stick-breaking construction
//!
//! ```text
//! pi_k = V_k * prod_{l<k} (1 - V_l),    V_k ~ Beta(1, alpha),  V_K = 1,
//! ```
//!
//! with a Gamma(a_alpha, b_alpha) prior on the concentration `alpha` and
//! independent Dirichlet priors on every per-class, per-variable pmf.
//!
//! One sweep updates, in order: class assignments (conditioning on observed
//! cells only), missing cells given the fresh assignments, stick fractions
//! and weights, the concentration, and finally the level probabilities from
//! completed-data counts. Drawing the missing cells immediately after the
//! assignments makes the pair (assignments, missing cells) a single blocked
//! draw from its joint conditional, which keeps the sweep a valid Gibbs
//! kernel; the remaining blocks are ordinary full conditionals.

mod run;
mod state;
mod steps;

pub use run::{run, RunMode, RunOutput, RunSchedule, TraceLog, Warning};
pub use state::{stick_breaking, DpmpmState, HyperParams, Theta};
pub use steps::{
    gibbs_step, impute_missing_cells, init_state, occupied_classes, sample_alpha, sample_theta,
    sample_v_and_pi, sample_z,
};
pub(crate) use steps::{
    class_counts, completed_matches_observed, sample_theta_with_extra,
    sample_v_and_pi_with_counts, sample_z_impl,
};
