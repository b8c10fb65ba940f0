//! Weakly-coupled inference and learning: finite-difference field
//! inversion, synchronisation of the network on the inverted fields, and
//! field correction by fixed-point solves with the trained network.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::{fixed_point_solve, solve_with_field, AugmentationField, FixedPointSettings, FixedPointTrace};
use crate::dae::{solve_steady, SolverSettings, WorkCounters};
use crate::data::CaseRecord;
use crate::error::IimlError;
use crate::eval::cost;
use crate::exec::Executor;
use crate::features::{compute_features, FeatureMatrix, NormalizationBounds};
use crate::fcmodel::{CellModel, CellState, ModelParameters};
use crate::mlp::{train, AdamSettings, Dataset, MlpModel, AUGMENTATION_LAYERS};

/// Where a case's current field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldProvenance {
    /// The neutral field of the unaugmented solve.
    Baseline,
    /// A raw steepest-descent iterate, not yet corrected.
    Inversion,
    /// The converged field of a fixed-point solve with the network.
    FixedPoint,
}

/// A training case with its current field and converged state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCase {
    pub case_id: u32,
    pub model: CellModel,
    pub lambda_data: Vec<f64>,
    pub weight: f64,
    pub field: AugmentationField,
    pub state: CellState,
    pub cost: f64,
    pub provenance: FieldProvenance,
}

impl TrainingCase {
    /// Case at the unaugmented steady state.
    pub fn new(params: &ModelParameters, record: &CaseRecord, weight: f64, solver: &SolverSettings) -> Result<Self, IimlError> {
        let model = CellModel::new(params, &record.conditions)?;
        let n_y = model.n_y();
        if record.lambda_data.len() != n_y {
            return Err(IimlError::ProfileLength { case_id: record.case_id, expected: n_y, got: record.lambda_data.len() });
        }
        let (state, _) = solve_steady(&model, None, solver, None)
            .map_err(|source| IimlError::Baseline { case_id: record.case_id, source })?;
        let cost = cost(&state.lambda_mb(), &record.lambda_data).expect("profile length checked");
        Ok(Self {
            case_id: record.case_id,
            model,
            lambda_data: record.lambda_data.clone(),
            weight,
            field: AugmentationField::ones(n_y),
            state,
            cost,
            provenance: FieldProvenance::Baseline,
        })
    }

    pub fn n_y(&self) -> usize {
        self.model.n_y()
    }

    pub fn cost_of(&self, state: &CellState) -> f64 {
        cost(&state.lambda_mb(), &self.lambda_data).expect("profile length checked")
    }

    pub fn features(&self) -> Result<FeatureMatrix, IimlError> {
        Ok(compute_features(&self.model, &self.state)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IimlConfig {
    /// Forward-difference step on the field.
    pub fd_step: f64,
    /// Largest field change per inversion step.
    pub step_scale: f64,
    pub fixed_point: FixedPointSettings,
    pub max_outer_iterations: usize,
    pub ml_epochs: usize,
    pub adam: AdamSettings,
    /// A corrected objective above this multiple of the best one is rejected.
    pub rejection_factor: f64,
    /// Step halvings tried after a rejection before stopping.
    pub step_retries: usize,
    /// Stop once the best objective is at or below this.
    pub objective_tol: f64,
    pub model_seed: u64,
}

impl Default for IimlConfig {
    fn default() -> Self {
        Self {
            fd_step: 1.0e-4,
            step_scale: 0.05,
            fixed_point: FixedPointSettings::default(),
            max_outer_iterations: 30,
            ml_epochs: 500,
            adam: AdamSettings::default(),
            rejection_factor: 1.2,
            step_retries: 1,
            objective_tol: 1.0e-10,
            model_seed: 0,
        }
    }
}

impl IimlConfig {
    pub fn validate(&self) -> Result<(), IimlError> {
        let positive = [
            ("fd_step", self.fd_step),
            ("step_scale", self.step_scale),
            ("fixed_point.tol", self.fixed_point.tol),
            ("adam.lr", self.adam.lr),
            ("rejection_factor", self.rejection_factor),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(IimlError::Config { name, value });
            }
        }
        if !(0.0..1.0).contains(&self.fixed_point.relaxation) {
            return Err(IimlError::Config { name: "fixed_point.relaxation", value: self.fixed_point.relaxation });
        }
        if self.rejection_factor < 1.0 {
            return Err(IimlError::Config { name: "rejection_factor", value: self.rejection_factor });
        }
        if !(self.objective_tol >= 0.0) {
            return Err(IimlError::Config { name: "objective_tol", value: self.objective_tol });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FdGradient {
    pub gradient: Vec<f64>,
    /// Nodes whose perturbed solve was retried with a tenth of the step.
    pub retried: Vec<usize>,
    /// Nodes whose perturbed solves both failed; their entry is 0.
    pub failed: Vec<usize>,
    /// Cost evaluations, the unperturbed one included.
    pub evaluations: usize,
}

impl FdGradient {
    pub fn inf_norm(&self) -> f64 {
        self.gradient.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Forward differences `(C(δ + h e_n) - C(δ)) / h` of an arbitrary cost.
/// `cost` returns `None` when the perturbed evaluation fails; the node is
/// then retried once with `h / 10` and set to 0 if that fails too. Returns
/// `None` when the unperturbed evaluation fails.
pub fn fd_gradient_with<C: Fn(&[f64]) -> Option<f64>>(field: &[f64], h: f64, cost: C) -> Option<FdGradient> {
    let c0 = cost(field)?;
    let mut out = FdGradient { gradient: vec![0.0; field.len()], evaluations: 1, ..Default::default() };
    let mut probe = field.to_vec();
    for n in 0..field.len() {
        let mut value = None;
        for (attempt, step) in [h, 0.1 * h].into_iter().enumerate() {
            probe[n] = field[n] + step;
            out.evaluations += 1;
            if let Some(c) = cost(&probe) {
                value = Some((c - c0) / step);
                break;
            }
            if attempt == 0 {
                out.retried.push(n);
            }
        }
        probe[n] = field[n];
        match value {
            Some(g) => out.gradient[n] = g,
            None => out.failed.push(n),
        }
    }
    Some(out)
}

/// Gradient of the case cost with respect to its field. Every solve,
/// including a re-solve at the current field, starts from the case's
/// converged state, so all costs come from the same solver path.
pub fn fd_gradient(case: &TrainingCase, h: f64, solver: &SolverSettings) -> Option<FdGradient> {
    fd_gradient_with(case.field.values(), h, |field| {
        let field = AugmentationField::new(field.to_vec()).ok()?;
        let (state, _) = solve_with_field(&case.model, &field, solver, Some(&case.state)).ok()?;
        Some(case.cost_of(&state))
    })
}

/// `max(0, δ - α g)` with `α = step_scale / ‖g‖∞`. Returns `None` for a zero
/// gradient.
pub fn field_inversion_update(field: &[f64], gradient: &[f64], step_scale: f64) -> Option<Vec<f64>> {
    let norm = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if !(norm > 0.0 && norm.is_finite()) {
        return None;
    }
    let alpha = step_scale / norm;
    Some(field.iter().zip(gradient).map(|(d, g)| (d - alpha * g).max(0.0)).collect())
}

/// Collated training rows: raw features of every case paired with its field.
pub fn collate(cases: &[TrainingCase]) -> Result<(Vec<FeatureMatrix>, Vec<Vec<f64>>), IimlError> {
    let mut features = Vec::with_capacity(cases.len());
    let mut targets = Vec::with_capacity(cases.len());
    for case in cases {
        features.push(case.features()?);
        targets.push(case.field.values().to_vec());
    }
    Ok((features, targets))
}

/// Refits the normalisation bounds on the collated features and continues
/// training from the current weights on `(scaled features, field)` pairs.
/// Returns the loss history and the loss after the last update.
pub fn ml_sync(
    features: &[FeatureMatrix],
    targets: &[Vec<f64>],
    model: &mut MlpModel,
    epochs: usize,
    adam: AdamSettings,
) -> Result<(Vec<f64>, f64), IimlError> {
    model.bounds = NormalizationBounds::fit(features)?.bounds;
    let mut data = Dataset::new(model.n_inputs());
    for (m, t) in features.iter().zip(targets) {
        if m.n_rows() != t.len() {
            return Err(IimlError::ProfileLength { case_id: 0, expected: m.n_rows(), got: t.len() });
        }
        for (row, y) in m.rows().iter().zip(t) {
            data.push(&model.bounds.apply(row), *y);
        }
    }
    let history = train(model, &data, epochs, adam)?;
    let (loss, _) = model.loss_and_grad(&data)?;
    Ok((history, loss))
}

/// Fixed-point solve of one case with the network, warm-started from the
/// case's state and field.
pub fn field_correction(
    case: &TrainingCase,
    model: &MlpModel,
    fp: &FixedPointSettings,
    solver: &SolverSettings,
) -> Result<(TrainingCase, FixedPointTrace), String> {
    let out = fixed_point_solve(&case.model, model, fp, solver, Some((&case.state, &case.field))).map_err(|e| e.to_string())?;
    let mut next = case.clone();
    next.cost = case.cost_of(&out.state);
    next.state = out.state;
    next.field = out.field;
    next.provenance = FieldProvenance::FixedPoint;
    Ok((next, out.trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailureNote {
    pub case_id: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub accepted: bool,
    pub step_scale: f64,
    /// Combined objective after field correction; absent when a case failed.
    pub objective: Option<f64>,
    pub case_costs: Vec<f64>,
    pub gradient_norms: Vec<f64>,
    pub ml_loss: f64,
    pub fixed_point: Vec<FixedPointTrace>,
    pub failures: Vec<CaseFailureNote>,
    /// Nodes whose finite-difference entry was set to 0.
    pub fd_failed_nodes: usize,
    /// Solves spent on finite differences (zero when reused from a
    /// rejected attempt).
    pub fd_solves: usize,
    pub fixed_point_solves: usize,
    pub work: WorkCounters,
    /// Best accepted objective after this iteration.
    pub best_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    ObjectiveTolerance,
    ZeroGradient,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IimlHistory {
    pub case_ids: Vec<u32>,
    pub baseline_objective: f64,
    pub baseline_costs: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub stop: StopReason,
    /// Iteration that produced the returned model; 0 is the neutral start.
    pub best_iteration: usize,
    pub best_objective: f64,
}

impl IimlHistory {
    /// `(iteration, J)` for the baseline and every accepted iteration.
    pub fn accepted_objectives(&self) -> Vec<(usize, f64)> {
        let mut out = vec![(0, self.baseline_objective)];
        out.extend(self.iterations.iter().filter(|r| r.accepted).filter_map(|r| r.objective.map(|j| (r.iteration, j))));
        out
    }
}

fn combined(cases: &[TrainingCase]) -> f64 {
    cases.iter().map(|c| c.weight * c.cost).sum()
}

#[derive(Debug, Clone)]
pub struct IimlOutcome {
    pub model: MlpModel,
    pub history: IimlHistory,
    /// Cases at the returned model's fixed points.
    pub cases: Vec<TrainingCase>,
    /// Network after every accepted iteration.
    pub checkpoints: Vec<(usize, MlpModel)>,
}

/// Runs the weakly-coupled loop on unit-weight cases.
///
/// Each outer iteration takes one steepest-descent step on every case's
/// field, trains the network on the stepped fields and replaces every field
/// by the fixed point of the trained network. A correction that fails on a
/// case or raises the objective above `rejection_factor` times the best one
/// is discarded; the step is halved and retried up to `step_retries` times
/// before the loop stops. The best accepted network is returned.
pub fn run_wciiml<E: Executor>(
    params: &ModelParameters,
    records: &[CaseRecord],
    config: &IimlConfig,
    solver: &SolverSettings,
    exec: &E,
) -> Result<IimlOutcome, IimlError> {
    config.validate()?;
    if records.is_empty() {
        return Err(IimlError::NoCases);
    }
    let cases: Vec<TrainingCase> = exec
        .map(records.len(), |k| TrainingCase::new(params, &records[k], 1.0, solver))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let baseline_objective = combined(&cases);
    let mut history = IimlHistory {
        case_ids: cases.iter().map(|c| c.case_id).collect(),
        baseline_objective,
        baseline_costs: cases.iter().map(|c| c.cost).collect(),
        iterations: Vec::new(),
        stop: StopReason::MaxIterations,
        best_iteration: 0,
        best_objective: baseline_objective,
    };
    let mut model = MlpModel::new(&AUGMENTATION_LAYERS, config.model_seed)?;
    let mut current = cases;
    let mut best = (model.clone(), current.clone());
    let mut step_scale = config.step_scale;
    let mut retries_left = config.step_retries;
    let mut gradients: Option<Vec<Option<FdGradient>>> = None;
    let mut checkpoints = Vec::new();

    for iteration in 1..=config.max_outer_iterations {
        if history.best_objective <= config.objective_tol {
            history.stop = StopReason::ObjectiveTolerance;
            break;
        }
        let fresh_gradients = gradients.is_none();
        let grads =
            gradients.get_or_insert_with(|| exec.map(current.len(), |k| fd_gradient(&current[k], config.fd_step, solver)));
        let fd_solves = if fresh_gradients { grads.iter().flatten().map(|g| g.evaluations).sum() } else { 0 };
        let fd_failed_nodes = grads.iter().map(|g| g.as_ref().map_or(0, |g| g.failed.len())).sum();
        let gradient_norms: Vec<f64> = grads.iter().map(|g| g.as_ref().map_or(0.0, FdGradient::inf_norm)).collect();

        let mut trial = current.clone();
        let mut any_step = false;
        for (case, g) in trial.iter_mut().zip(grads.iter()) {
            let Some(g) = g else { continue };
            if let Some(next) = field_inversion_update(case.field.values(), &g.gradient, step_scale) {
                case.field = AugmentationField::new(next)?;
                case.provenance = FieldProvenance::Inversion;
                any_step = true;
            }
        }
        if !any_step {
            history.stop = StopReason::ZeroGradient;
            break;
        }

        // features of the converged states, targets from the stepped fields
        let (features, _) = collate(&current)?;
        let targets: Vec<Vec<f64>> = trial.iter().map(|c| c.field.values().to_vec()).collect();
        let mut trial_model = model.clone();
        let (_, ml_loss) = ml_sync(&features, &targets, &mut trial_model, config.ml_epochs, config.adam)?;

        let corrected = exec.map(trial.len(), |k| field_correction(&trial[k], &trial_model, &config.fixed_point, solver));
        let mut next_cases = Vec::with_capacity(trial.len());
        let mut traces = Vec::with_capacity(trial.len());
        let mut failures = Vec::new();
        let mut work = WorkCounters::default();
        for (case, r) in trial.iter().zip(corrected) {
            match r {
                Ok((c, t)) => {
                    work.add(&t.total_work());
                    next_cases.push(c);
                    traces.push(t);
                }
                Err(message) => failures.push(CaseFailureNote { case_id: case.case_id, message }),
            }
        }
        let objective = failures.is_empty().then(|| combined(&next_cases));
        let accepted = objective.is_some_and(|j| j.is_finite() && j <= config.rejection_factor * history.best_objective);
        let fixed_point_solves = traces.iter().map(|t| t.inner_work.len()).sum();

        if accepted {
            let j = objective.expect("accepted iterates have an objective");
            current = next_cases;
            model = trial_model;
            checkpoints.push((iteration, model.clone()));
            gradients = None;
            retries_left = config.step_retries;
            if j < history.best_objective {
                history.best_objective = j;
                history.best_iteration = iteration;
                best = (model.clone(), current.clone());
            }
        }
        history.iterations.push(IterationRecord {
            iteration,
            accepted,
            step_scale,
            objective,
            case_costs: if accepted { current.iter().map(|c| c.cost).collect() } else { Vec::new() },
            gradient_norms,
            ml_loss,
            fixed_point: traces,
            failures,
            fd_failed_nodes,
            fd_solves,
            fixed_point_solves,
            work,
            best_objective: history.best_objective,
        });
        if !accepted {
            if retries_left == 0 {
                history.stop = StopReason::Rejected;
                break;
            }
            retries_left -= 1;
            step_scale *= 0.5;
        }
    }
    if history.stop == StopReason::MaxIterations && history.best_objective <= config.objective_tol {
        history.stop = StopReason::ObjectiveTolerance;
    }
    let (model, cases) = best;
    Ok(IimlOutcome { model, history, cases, checkpoints })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(c: &[f64]) -> impl Fn(&[f64]) -> Option<f64> + '_ {
        move |d: &[f64]| Some(d.iter().zip(c).map(|(d, c)| (d - c) * (d - c)).sum())
    }

    #[test]
    fn step_rule_moves_the_largest_entry_by_step_scale() {
        let field = [1.0, 1.0, 1.0];
        let g = [0.5, -0.25, 0.1];
        let next = field_inversion_update(&field, &g, 0.05).unwrap();
        assert!((next[0] - 0.95).abs() < 1e-15);
        assert!((next[1] - 1.025).abs() < 1e-15);
        assert!(field_inversion_update(&field, &[0.0; 3], 0.05).is_none());
    }

    #[test]
    fn projection_keeps_fields_nonnegative() {
        let next = field_inversion_update(&[0.01, 0.02], &[1.0, 0.5], 10.0).unwrap();
        assert_eq!(next, vec![0.0, 0.0]);
    }

    #[test]
    fn retry_then_zero_on_failed_nodes() {
        let g = fd_gradient_with(&[1.0, 1.0], 1e-4, |d: &[f64]| if d[1] > 1.0 { None } else { Some(d[0]) }).unwrap();
        assert_eq!(g.retried, vec![1]);
        assert_eq!(g.failed, vec![1]);
        assert_eq!(g.gradient[1], 0.0);
        assert!((g.gradient[0] - 1.0).abs() < 1e-9);
        assert_eq!(g.evaluations, 4);
    }

    #[test]
    fn quadratic_gradient_and_descent() {
        let c = [0.7, 1.3, 1.0, 0.2];
        let mut d = vec![1.0, 1.0, 1.2, 0.9];
        let cost = quadratic(&c);
        let mut last = cost(&d).unwrap();
        for _ in 0..2 {
            let g = fd_gradient_with(&d, 1e-4, &cost).unwrap();
            d = field_inversion_update(&d, &g.gradient, 0.05).unwrap();
            let now = cost(&d).unwrap();
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn config_validation() {
        assert!(IimlConfig::default().validate().is_ok());
        let bad = IimlConfig { fd_step: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
