//! Std companion to `fcaug-core`: case-set and weights files, run
//! configuration, manifests, a thread-pool executor and the batch commands.

pub mod cases;
pub mod config;
pub mod error;
pub mod exec;
pub mod manifest;
pub mod pipeline;
pub mod sealed;
pub mod weights;
