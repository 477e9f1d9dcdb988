//! Heat semigroups generated by Laplacians of infinite directed weighted graphs.
//!
//! The crate is organized around a lazily described graph ([`graph::Graph`]):
//!
//! - [`graph`]: generators, symmetric/skew weight splitting, Laplacian application
//!   on finitely supported sequences, generator validation and built-in families.
//! - [`geometry`]: vertex measure, graph distance and balls of the symmetric graph.
//! - [`hypotheses`]: sampled estimates of volume growth, local ellipticity,
//!   Poincaré constants and the total skew mass `W`.
//! - [`semigroup`]: simulation of `x(t) = e^{Lt} x0` on adaptively grown balls,
//!   norms and gradient semi-norms, decay-exponent fits and the pure advection
//!   closed form.
//! - [`oscillator`]: phase-lattice dynamics, phase-lock verification,
//!   linearization and nonlinear stability runs.

pub mod error;
pub mod geometry;
pub mod graph;
pub mod hypotheses;
pub mod oscillator;
pub mod semigroup;

pub use error::{Error, Result};

/// Schema tag embedded in every serialized report.
pub const SCHEMA_VERSION: &str = "v1";

pub fn report_schema_version() -> &'static str {
    SCHEMA_VERSION
}
