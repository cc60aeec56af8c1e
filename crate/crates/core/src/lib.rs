//! Plasmon-resonance enhanced reconstruction of star-shaped inclusions.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: trigonometric star-shaped curves, their Nyström discretization
//!   and normal perturbations.
//! - [`layer_potentials`]: single layer, Neumann–Poincaré and hypersingular
//!   operators on a discretized curve.
//! - [`spectrum`]: eigen-decomposition of the Neumann–Poincaré operator in the
//!   energy (H*) inner product.
//! - [`material`]: Drude permittivity, contrast parameter and resonance frequencies.
//! - [`forward`]: transmission-problem solver and far-field synthesis.
//! - [`sensitivity`]: shape derivatives, eigenvalue perturbation and the spectral
//!   expansion of the shape sensitivity.
//! - [`inversion`]: Levenberg–Marquardt reconstruction, Laplace approximation and
//!   conditioning reports.
//! - [`experiment`]: preset experiment pipelines and their CSV/JSON outputs.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod forward;
pub mod geometry;
pub mod inversion;
pub mod layer_potentials;
pub mod material;
pub mod par;
pub mod sensitivity;
pub mod spectrum;

pub use error::{Error, Result};

/// Complex scalar used for densities, contrasts and far-field data.
pub type C64 = num_complex::Complex64;

/// Point or vector in the plane.
pub type Point = nalgebra::Vector2<f64>;
