//! Convergence checks and release-vs-original comparisons: class-occupancy
//! summaries, autocorrelations, marginal tables, and the SVG plots of each.

mod acf;
mod compare;
mod kstar;
mod svg;

pub use acf::{acf, acf_csv, default_max_lag, Acf};
pub use compare::{comparison_csv, marginal_compare, CompareKind, MarginalComparison};
pub use kstar::{
    expected_trace_len, kstar_summary, kstar_trace_csv, validate_trace_length, KstarSummary,
};
pub use svg::{acf_svg, comparison_svg, kstar_trace_svg, xml_escape};
