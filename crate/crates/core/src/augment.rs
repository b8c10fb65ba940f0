//! Solves with a frozen augmentation field, and the relaxed fixed-point
//! iteration that applies an augmentation function between solves.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dae::{solve_steady, SolveReport, SolverSettings, WorkCounters};
use crate::error::{AugmentError, ModelError, ShapeError, SolverError};
use crate::features::{compute_features, FeatureMatrix};
use crate::fcmodel::{CellModel, CellState};

/// Per-node multiplier of the equilibrium water content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AugmentationField {
    values: Vec<f64>,
}

impl AugmentationField {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(ModelError::InvalidAugmentation { node, value });
        }
        Ok(Self { values })
    }

    /// The neutral field.
    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for AugmentationField {
    type Error = ModelError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<AugmentationField> for Vec<f64> {
    fn from(f: AugmentationField) -> Self {
        f.values
    }
}

/// A map from node features to augmentation values.
pub trait AugmentationFunction {
    fn predict(&self, features: &FeatureMatrix) -> Vec<f64>;
}

impl<F: Fn(&FeatureMatrix) -> Vec<f64>> AugmentationFunction for F {
    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        self(features)
    }
}

/// The same value at every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantAugmentation(pub f64);

impl AugmentationFunction for ConstantAugmentation {
    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        vec![self.0; features.n_rows()]
    }
}

/// `‖a - b‖₂`.
pub fn compute_r_aug(current: &[f64], previous: &[f64]) -> Result<f64, ShapeError> {
    if current.len() != previous.len() {
        return Err(ShapeError::LengthMismatch { left: current.len(), right: previous.len() });
    }
    Ok(crate::math::diff_norm2(current, previous))
}

/// Steady state with `field` multiplying the equilibrium water content.
pub fn solve_with_field(
    model: &CellModel,
    field: &AugmentationField,
    settings: &SolverSettings,
    warm_start: Option<&CellState>,
) -> Result<(CellState, SolveReport), SolverError> {
    solve_steady(model, Some(field.values()), settings, warm_start)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointSettings {
    /// Weight of the previous field in the relaxed update.
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without a decrease before the run counts as oscillating.
    pub oscillation_window: usize,
    /// Oscillations with every residual of the window below this are
    /// accepted with a warning.
    pub oscillation_threshold: f64,
}

impl Default for FixedPointSettings {
    fn default() -> Self {
        Self { relaxation: 0.5, tol: 1.0e-3, max_iter: 50, oscillation_window: 10, oscillation_threshold: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FixedPointTrace {
    pub r_aug_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub oscillation_detected: bool,
    /// Work of every inner solve, the initial one first.
    pub inner_work: Vec<WorkCounters>,
}

impl FixedPointTrace {
    pub fn total_work(&self) -> WorkCounters {
        let mut w = WorkCounters::default();
        for x in &self.inner_work {
            w.add(x);
        }
        w
    }

    pub fn final_residual(&self) -> f64 {
        self.r_aug_history.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOutcome {
    pub state: CellState,
    /// The field `state` was solved with.
    pub field: AugmentationField,
    pub trace: FixedPointTrace,
}

fn oscillating(history: &[f64], window: usize) -> bool {
    if window == 0 || history.len() <= window {
        return false;
    }
    let start = history[history.len() - 1 - window];
    // a converging run would have shrunk by orders of magnitude by now
    history[history.len() - window..].iter().cloned().fold(f64::INFINITY, f64::min) >= 0.5 * start
}

/// Relaxed fixed-point iteration `δ_i = ρ δ_{i-1} + (1 - ρ) β(η(u_i))`,
/// where `u_i` is the steady state with field `δ_{i-1}` and `δ_0 ≡ 1`
/// (or the warm-start field). Stops once `‖δ_i - δ_{i-1}‖₂ < tol` and
/// returns `u_i` with the field it was solved with. Every inner solve is
/// warm-started from the previous state.
pub fn fixed_point_solve<A: AugmentationFunction + ?Sized>(
    model: &CellModel,
    aug_fn: &A,
    fp: &FixedPointSettings,
    settings: &SolverSettings,
    warm_start: Option<(&CellState, &AugmentationField)>,
) -> Result<FixedPointOutcome, AugmentError> {
    if !(0.0..1.0).contains(&fp.relaxation) {
        return Err(AugmentError::Relaxation(fp.relaxation));
    }
    let n_y = model.n_y();
    let rho = fp.relaxation;
    let (mut field, warm_state) = match warm_start {
        Some((s, f)) if f.len() == n_y => (f.clone(), Some(s)),
        _ => (AugmentationField::ones(n_y), None),
    };
    model.check_field(field.values())?;
    let mut trace = FixedPointTrace::default();
    let (mut state, report) = solve_with_field(model, &field, settings, warm_state)?;
    trace.inner_work.push(report.work);

    for _ in 0..fp.max_iter {
        let features = compute_features(model, &state)?;
        let beta = aug_fn.predict(&features);
        if beta.len() != n_y {
            return Err(ModelError::FieldLength { expected: n_y, got: beta.len() }.into());
        }
        let next: Vec<f64> = field.values().iter().zip(&beta).map(|(d, b)| rho * d + (1.0 - rho) * b).collect();
        let next = AugmentationField::new(next)?;
        let r = crate::math::diff_norm2(next.values(), field.values());
        trace.r_aug_history.push(r);
        trace.iterations += 1;
        if r < fp.tol {
            trace.converged = true;
            return Ok(FixedPointOutcome { state, field, trace });
        }
        let (s, report) = solve_with_field(model, &next, settings, Some(&state))?;
        trace.inner_work.push(report.work);
        state = s;
        field = next;
    }

    trace.oscillation_detected = oscillating(&trace.r_aug_history, fp.oscillation_window);
    let window = fp.oscillation_window.min(trace.r_aug_history.len());
    let bounded = trace.r_aug_history[trace.r_aug_history.len() - window..]
        .iter()
        .all(|&r| r < fp.oscillation_threshold);
    if trace.oscillation_detected && bounded {
        return Ok(FixedPointOutcome { state, field, trace });
    }
    Err(AugmentError::NotConverged {
        case_id: model.conditions().case_id,
        iterations: trace.iterations,
        last_residual: trace.final_residual(),
        oscillating: trace.oscillation_detected,
    })
}
