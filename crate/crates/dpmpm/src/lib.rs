//! Nonparametric multiple imputation and synthetic-data generation for
//! multivariate categorical data.
//!
//! The model is a finite-truncation Dirichlet-process mixture of products of
//! multinomials: every record belongs to a latent class, and within a class
//! the variables are independent with class-specific level probabilities.
//! A blocked Gibbs sampler fits the model to data with missing cells, with
//! optional support for *structural zeros* (combinations of levels that
//! cannot occur, such as twelve-year-old retirees), and releases either
//! multiply-imputed or partially/fully synthetic datasets drawn from the
//! fitted posterior.
//!
//! Module map:
//!
//! * [`catdata`] — schemas, coded datasets, CSV formats, disallowed pattern
//!   sets, and a mixture simulator for building test fixtures.
//! * [`model`] — the sampler state and the individual Gibbs updates, plus
//!   the run loop that schedules burn-in, thinning, and dataset release.
//! * [`truncation`] — the rejection/augmentation machinery that makes the
//!   sampler respect structural zeros.
//! * [`engines`] — the user-facing entry points: `impute_nozeros`,
//!   `impute_zeros`, `synthesize`.
//! * [`pooling`] — per-dataset estimates (cell probabilities, logistic and
//!   multinomial regressions) and the three variance-combining rules.
//! * [`diagnostics`] — autocorrelations, occupied-class summaries, marginal
//!   comparison tables, and the SVG renderings of each.

pub mod catdata;
pub mod diagnostics;
pub mod engines;
pub mod error;
pub mod model;
pub mod pooling;
pub mod rng;
pub mod truncation;
pub(crate) mod samplers;
pub mod util;

pub use error::{Error, Result};
