use crate::linalg::SingularMatrix;

/// Errors raised while evaluating the cell model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("parameter `{name}` has invalid value {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("case {case_id}: operating condition `{name}` = {value} is outside its valid range")]
    InvalidConditions { case_id: u32, name: &'static str, value: f64 },
    #[error("temperature {t} K is outside the correlation range [273, 373] K")]
    TemperatureOutOfRange { t: f64 },
    #[error("non-finite residual in `{field}` at node {node}")]
    NonFiniteResidual { field: &'static str, node: usize },
    #[error("augmentation field has length {got}, expected {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("augmentation value {value} at node {node} is negative or non-finite")]
    InvalidAugmentation { node: usize, value: f64 },
}

/// Errors from the time integrator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Newton did not converge within {iterations} iterations (step {step})")]
    NonConvergence { step: usize, iterations: usize },
    #[error("singular Jacobian at step {step}: {source}")]
    SingularJacobian { step: usize, source: SingularMatrix },
    #[error("case {case_id}: solver diverged after {halvings} step halvings; last good time {last_time} s")]
    SolverDiverged { case_id: u32, last_time: f64, halvings: usize },
    #[error("case {case_id}: no steady state within {steps} steps; reached {last_time} s")]
    StepLimit { case_id: u32, steps: usize, last_time: f64 },
    #[error("case {case_id}: steady state has {var} = {value} at node {node}, outside its validity range")]
    OutsideValidity { case_id: u32, node: usize, var: &'static str, value: f64 },
}

/// Errors from the augmented fixed-point solve.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("relaxation factor {0} is outside [0, 1)")]
    Relaxation(f64),
    #[error("case {case_id}: fixed-point iteration did not converge in {iterations} iterations (R_aug = {last_residual:e}, oscillating: {oscillating})")]
    NotConverged { case_id: u32, iterations: usize, last_residual: f64, oscillating: bool },
}

/// Shape and value errors for vectors handed to metric and norm helpers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

/// Errors from feature extraction and normalisation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("non-finite feature at node {node}, column {column}")]
    NonFinite { node: usize, column: usize },
    #[error("no feature rows to fit normalisation bounds")]
    Empty,
    #[error("feature row has {got} columns, expected {expected}")]
    Width { expected: usize, got: usize },
}

/// Errors from the network and its training.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlpError {
    #[error("layer sizes {0:?} are invalid: need at least an input and a single output")]
    Layout(alloc::vec::Vec<usize>),
    #[error("input has {got} entries, expected {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, expected {expected}")]
    ParameterCount { expected: usize, got: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

/// Errors from the inference and learning loop.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IimlError {
    #[error("no training cases")]
    NoCases,
    #[error("case {case_id}: baseline solve failed: {source}")]
    Baseline { case_id: u32, source: SolverError },
    #[error("case {case_id}: reference profile has {got} nodes, expected {expected}")]
    ProfileLength { case_id: u32, expected: usize, got: usize },
    #[error("case {case_id}: field was not produced by a converged augmented solve")]
    InconsistentField { case_id: u32 },
    #[error("configuration value `{name}` = {value} is invalid")]
    Config { name: &'static str, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

/// Errors from case selection and truth generation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("unknown case id {0}")]
    UnknownCase(u32),
    #[error("case id {0} listed twice")]
    DuplicateCase(u32),
    #[error("case {case_id}: {what}")]
    InvalidRecord { case_id: u32, what: &'static str },
    #[error("truth specification: `{name}` = {value} is invalid")]
    Spec { name: &'static str, value: f64 },
}
