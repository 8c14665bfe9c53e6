//! ρ-estimation: robust density estimation, model selection, convex
//! aggregation and random-design regression under Hellinger loss.
//!
//! The crate is organised bottom-up:
//!
//! * [`measure`]: samples, one-dimensional densities, product densities,
//!   Hellinger distances and quadrature.
//! * [`psi`]: the bounded ψ kernels with their certified constants.
//! * [`criterion`]: the test statistic `T`, the criterion `Υ` and the
//!   ρ-estimator over a finite family.
//! * [`zoo`]: model builders and dimension-bound calculators.
//! * [`selection`]: penalized selection over weighted model collections.
//! * [`aggregation`]: candidate selection and saddle-point convex aggregation.
//! * [`regression`]: regression models `r(y - g(w))`.
//! * [`harness`]: Monte Carlo scenarios, risk estimation and export.

pub mod aggregation;
pub mod criterion;
pub mod error;
pub mod harness;
pub mod measure;
pub mod psi;
pub mod regression;
pub mod selection;
pub mod zoo;

pub use error::{Error, Result};
