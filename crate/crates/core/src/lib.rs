//! Desk-scale numerical laboratory for Carnot-Carathéodory (CC) metric
//! spaces with varying vector-field structure.
//!
//! The crate builds, from the bottom up:
//!
//! * [`vector_fields`] — polynomial-coefficient vector-field families
//!   `X = (X_1, …, X_m)` on `R^n`, commutators, Hörmander ranks and
//!   convergent family sequences `X^j → X`;
//! * [`flows`] — subunit-path integration `γ' = Σ h_i X_i(γ)` with
//!   Grönwall comparison bounds between the flows of nearby families;
//! * [`metric`] — CC distance estimation by two independent routes
//!   (lattice shortest paths and control optimization), certified lower
//!   bounds, ball-box checks and metric-deviation measurements;
//! * [`sample`] — finite weighted point clouds standing in for the metric
//!   measure space: balls, 5r-coverings with exact certificates, doubling
//!   ratios and ball means;
//! * [`grid`] / [`bv`] — rectangular grid functions, X-gradients, total
//!   variation measures, Poincaré quotients and adjoint pairings;
//! * [`engine`] — the compactness extraction pipeline: hypothesis audit,
//!   staged covering / ball-mean selection / measure-decay recursion and
//!   double diagonalization with Cauchy-modulus certification.

pub mod bv;
pub mod engine;
pub mod error;
pub mod flows;
pub mod grid;
pub mod linalg;
pub mod metric;
pub mod poly;
pub mod sample;
pub mod util;
pub mod vector_fields;

pub use error::{CoreError, Result};
