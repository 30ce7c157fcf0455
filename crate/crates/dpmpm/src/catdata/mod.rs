//! Categorical data handling: variable schemas, integer-coded datasets,
//! CSV reading/writing, disallowed pattern sets (structural zeros), and a
//! finite-mixture simulator used to build test fixtures.

mod dataset;
mod io;
mod mcz;
mod mixture;
mod schema;

pub use dataset::CategoricalDataset;
pub use io::{load_csv, load_csv_with_schema, write_csv};
pub use mcz::DisallowedPatternSet;
pub use mixture::{generate_from_mixture, inject_mcar, MixtureTruth, TruthFile};
pub use schema::{Schema, Variable};

/// Default token standing for a missing cell in CSV files.
pub const DEFAULT_MISSING_TOKEN: &str = "NA";
