//! Reduced-order PEM fuel-cell model with a multiplicative augmentation of
//! the ionomer sorption isotherm, a steady-state DAE solver, and a
//! weakly-coupled inference and learning loop that infers the augmentation
//! from water-content profiles.

#![no_std]

extern crate alloc;

pub mod augment;
pub mod dae;
pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fcmodel;
pub mod features;
pub mod iiml;
pub mod linalg;
pub mod math;
pub mod mlp;

pub use error::{AugmentError, DataError, FeatureError, IimlError, MlpError, ModelError, ShapeError, SolverError};
