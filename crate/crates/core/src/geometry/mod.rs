//! Curve parametrization, discretization and normal perturbation.

mod curve;
mod fourier;
mod shape;

pub use curve::{discretize, parameters, perturb, DiscreteCurve, NormalPerturbation, MIN_NODES};
pub use fourier::SpectralDiff;
pub use shape::{eval_shape, ClosedCurve, Ellipse, StarShape, TrigShape};
