//! Costs, the combined objective and the relative-improvement metrics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::{fixed_point_solve, FixedPointSettings};
use crate::dae::{solve_steady, SolverSettings};
use crate::data::CaseRecord;
use crate::error::ShapeError;
use crate::exec::Executor;
use crate::features::compute_features;
use crate::fcmodel::{CellModel, CellState, ModelParameters};
use crate::math::diff_norm2;
use crate::mlp::MlpModel;

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), ShapeError> {
    if a.len() != b.len() {
        return Err(ShapeError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

/// `‖prediction - data‖₂²`.
pub fn cost(prediction: &[f64], data: &[f64]) -> Result<f64, ShapeError> {
    check_pair(prediction, data)?;
    Ok(prediction.iter().zip(data).map(|(p, d)| (p - d) * (p - d)).sum())
}

/// `Σ_j w_j C_j`; missing weights default to 1.
pub fn combined_objective(costs: &[f64], weights: Option<&[f64]>) -> Result<f64, ShapeError> {
    match weights {
        Some(w) => {
            check_pair(costs, w)?;
            Ok(costs.iter().zip(w).map(|(c, w)| c * w).sum())
        }
        None => Ok(costs.iter().sum()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetrics {
    pub p1: f64,
    pub p2: f64,
    /// `‖q_b - q_d‖₂`.
    pub err_baseline: f64,
    /// `‖q_a - q_d‖₂`.
    pub err_augmented: f64,
    /// Both errors were zero; `p1` and `p2` are set to 0.
    pub degenerate: bool,
}

/// `P1 = 2 e_b / (e_a + e_b) - 1` and `P2 = P1 ‖q_a - q_b‖₂ / (e_a + e_b)`,
/// with `e_b`, `e_a` the baseline and augmented errors against the data.
pub fn performance_metrics(baseline: &[f64], augmented: &[f64], data: &[f64]) -> Result<PerformanceMetrics, ShapeError> {
    check_pair(baseline, data)?;
    check_pair(augmented, data)?;
    let e_b = diff_norm2(baseline, data);
    let e_a = diff_norm2(augmented, data);
    let sum = e_a + e_b;
    if sum == 0.0 {
        return Ok(PerformanceMetrics { p1: 0.0, p2: 0.0, err_baseline: 0.0, err_augmented: 0.0, degenerate: true });
    }
    let p1 = 2.0 * e_b / sum - 1.0;
    // the ratio is at most 1 by the triangle inequality; rounding can push it past
    let p2 = p1 * (diff_norm2(augmented, baseline) / sum).min(1.0);
    Ok(PerformanceMetrics { p1, p2, err_baseline: e_b, err_augmented: e_a, degenerate: false })
}

pub fn metric_p1(baseline: &[f64], augmented: &[f64], data: &[f64]) -> Result<f64, ShapeError> {
    performance_metrics(baseline, augmented, data).map(|m| m.p1)
}

pub fn metric_p2(baseline: &[f64], augmented: &[f64], data: &[f64]) -> Result<f64, ShapeError> {
    performance_metrics(baseline, augmented, data).map(|m| m.p2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub case_id: u32,
    pub lambda: PerformanceMetrics,
    /// Present when the case carries a reference current profile.
    pub current: Option<PerformanceMetrics>,
    pub training: bool,
    pub oscillation: bool,
    pub fixed_point_iterations: usize,
    /// Scaled feature entries clamped during the final prediction.
    pub extrapolated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case_id: u32,
    pub training: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub evaluated: usize,
    pub failed: usize,
    /// Cases with `P1_λ > 0`.
    pub improved: usize,
    /// `improved / total`; a failed case counts as not improved.
    pub improved_fraction: f64,
    /// Means over the evaluated cases.
    pub mean_p1: f64,
    pub mean_p2: f64,
    /// Same as above restricted to cases not used for training.
    pub held_out_total: usize,
    pub held_out_evaluated: usize,
    pub held_out_improved: usize,
    pub held_out_improved_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteReport {
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<CaseFailure>,
    pub summary: SuiteSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalSettings {
    pub solver: SolverSettings,
    pub fixed_point: FixedPointSettings,
}

fn fraction(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn summarize(records: &[MetricsRecord], failures: &[CaseFailure]) -> SuiteSummary {
    let evaluated = records.len();
    let failed = failures.len();
    let held_failed = failures.iter().filter(|f| !f.training).count();
    let improved = records.iter().filter(|r| r.lambda.p1 > 0.0).count();
    let held: Vec<&MetricsRecord> = records.iter().filter(|r| !r.training).collect();
    let held_improved = held.iter().filter(|r| r.lambda.p1 > 0.0).count();
    let mean = |f: &dyn Fn(&MetricsRecord) -> f64| {
        if evaluated == 0 {
            0.0
        } else {
            records.iter().map(f).sum::<f64>() / evaluated as f64
        }
    };
    SuiteSummary {
        total: evaluated + failed,
        evaluated,
        failed,
        improved,
        improved_fraction: fraction(improved, evaluated + failed),
        mean_p1: mean(&|r| r.lambda.p1),
        mean_p2: mean(&|r| r.lambda.p2),
        held_out_total: held.len() + held_failed,
        held_out_evaluated: held.len(),
        held_out_improved: held_improved,
        held_out_improved_fraction: fraction(held_improved, held.len() + held_failed),
    }
}

fn evaluate_case(
    params: &ModelParameters,
    case: &CaseRecord,
    baseline: Option<&CellState>,
    model: &MlpModel,
    settings: &EvalSettings,
    training: bool,
) -> Result<MetricsRecord, String> {
    let cell = CellModel::new(params, &case.conditions).map_err(|e| e.to_string())?;
    let base = match baseline {
        Some(s) => s.clone(),
        None => solve_steady(&cell, None, &settings.solver, None).map_err(|e| e.to_string())?.0,
    };
    let out = fixed_point_solve(&cell, model, &settings.fixed_point, &settings.solver, Some((&base, &crate::augment::AugmentationField::ones(cell.n_y()))))
        .map_err(|e| e.to_string())?;
    // a unit field is the unaugmented model, whose steady state is the baseline
    let augmented = if out.field.values().iter().all(|d| *d == 1.0) { &base } else { &out.state };
    let lambda = performance_metrics(&base.lambda_mb(), &augmented.lambda_mb(), &case.lambda_data).map_err(|e| e.to_string())?;
    let current = match &case.j_data {
        Some(j) => Some(performance_metrics(&base.i_loc(), &augmented.i_loc(), j).map_err(|e| e.to_string())?),
        None => None,
    };
    let features = compute_features(&cell, &out.state).map_err(|e| e.to_string())?;
    let (_, extrapolated) = model.predict_features(&features);
    Ok(MetricsRecord {
        case_id: case.case_id,
        lambda,
        current,
        training,
        oscillation: out.trace.oscillation_detected,
        fixed_point_iterations: out.trace.iterations,
        extrapolated,
    })
}

/// Fixed-point augmented solve of every case and its metrics against the
/// reference profiles. Baselines are solved on demand when not supplied.
/// Failed cases are listed and left out of the summary.
pub fn evaluate_suite<E: Executor>(
    params: &ModelParameters,
    cases: &[CaseRecord],
    baselines: Option<&[CellState]>,
    model: &MlpModel,
    training_ids: &[u32],
    settings: &EvalSettings,
    exec: &E,
) -> SuiteReport {
    let results = exec.map(cases.len(), |k| {
        let case = &cases[k];
        let base = baselines.and_then(|b| b.get(k));
        let training = training_ids.contains(&case.case_id);
        evaluate_case(params, case, base, model, settings, training).map_err(|message| CaseFailure { case_id: case.case_id, training, message })
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let summary = summarize(&records, &failures);
    SuiteReport { records, failures, summary }
}
