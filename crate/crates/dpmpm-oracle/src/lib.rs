//! Reference computations for checking the main crate.
//!
//! Everything here recomputes quantities the main crate also produces, but
//! through a different route: brute-force enumeration, closed-form
//! marginalization, or deliberately re-derived algebra. The overlap in
//! results and the difference in method is the point; shared code would
//! share bugs.

mod grid;
mod joint;
mod pool;
mod stats;

pub use grid::{
    closed_form_completion_posterior, grid_completion_posterior, CompletionPosterior,
};
pub use joint::{empirical_cell_probs, mixture_cell_probs, total_variation};
pub use pool::{pool_reference, PoolReference};
pub use stats::{ks_p_value, ks_test};
