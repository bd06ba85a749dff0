//! Hua-Pickrell random matrices, their truncations, and the determinantal
//! point processes on the unit disc that the truncated spectra form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dpp;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod orthopoly;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod truncation;
pub mod weights;

pub use dpp::{CellPartition, CorrelationReport, ProjectionDpp};
pub use error::{Error, Result};
pub use matrix::ComplexSquareMatrix;
pub use num_complex::Complex64;
pub use orthopoly::{KernelSpec, PolynomialBasis};
pub use params::{HPParams, MHConfig};
pub use rng::RngStream;
pub use sampling::SamplerKind;
pub use truncation::PointConfiguration;
pub use weights::{GramMatrix, WeightKind, WeightSpec};

/// Round-trip float formatting used by every text output.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}
