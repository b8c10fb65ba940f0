use fcaug_core::augment::{AugmentationFunction, FixedPointSettings};
use fcaug_core::dae::SolverSettings;
use fcaug_core::data::{generate_truth, CaseRecord, HiddenAugmentation, Provenance, TruthGeneratorSpec};
use fcaug_core::exec::Serial;
use fcaug_core::features::{FeatureMatrix, NUM_FEATURES};
use fcaug_core::fcmodel::{ModelParameters, OperatingConditions};
use fcaug_core::iiml::{
    collate, fd_gradient, fd_gradient_with, field_correction, field_inversion_update, ml_sync, run_wciiml, FieldProvenance,
    IimlConfig, StopReason, TrainingCase,
};
use fcaug_core::mlp::{AdamSettings, MlpModel};

fn truth(hidden: HiddenAugmentation, n: usize) -> Vec<CaseRecord> {
    let spec = TruthGeneratorSpec::new(hidden, n, 31);
    let set = generate_truth(&spec, &ModelParameters::default(), &FixedPointSettings::default(), &SolverSettings::default(), &Serial)
        .unwrap();
    assert!(set.dropped.is_empty());
    set.records
}

fn case(record: &CaseRecord) -> TrainingCase {
    TrainingCase::new(&ModelParameters::default(), record, 1.0, &SolverSettings::default()).unwrap()
}

fn smooth_cost(d: &[f64]) -> Option<f64> {
    Some(d.iter().enumerate().map(|(k, x)| (x * (k as f64 + 1.0)).sin() + x.powi(4)).sum())
}

#[test]
fn forward_difference_error_halves_with_the_step() {
    let d = [0.9, 1.1, 1.3, 0.6];
    let central: Vec<f64> = {
        let h = 1e-5;
        (0..d.len())
            .map(|n| {
                let (mut up, mut down) = (d.to_vec(), d.to_vec());
                up[n] += h;
                down[n] -= h;
                (smooth_cost(&up).unwrap() - smooth_cost(&down).unwrap()) / (2.0 * h)
            })
            .collect()
    };
    let err = |h: f64| {
        let g = fd_gradient_with(&d, h, smooth_cost).unwrap();
        g.gradient.iter().zip(&central).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}

#[test]
fn step_rule_with_half_norm_gradient() {
    let field = [1.0, 1.0, 1.0, 1.0];
    let g = [0.1, -0.5, 0.3, 0.0];
    let next = field_inversion_update(&field, &g, 0.05).unwrap();
    let moves: Vec<f64> = next.iter().zip(&field).map(|(a, b)| a - b).collect();
    assert!((moves[1] - 0.05).abs() < 1e-15);
    for (m, g) in moves.iter().zip(g) {
        assert!((m + 0.1 * g).abs() < 1e-15);
    }
}

#[test]
fn gradient_vanishes_at_a_perfect_fit() {
    let oc = OperatingConditions::nominal(1);
    let params = ModelParameters::default();
    let solver = SolverSettings::default();
    let probe = TrainingCase::new(
        &params,
        &CaseRecord { case_id: 1, conditions: oc, lambda_data: vec![0.0; 20], j_data: None, provenance: Provenance::External },
        1.0,
        &solver,
    )
    .unwrap();
    let record = CaseRecord {
        case_id: 1,
        conditions: oc,
        lambda_data: probe.state.lambda_mb(),
        j_data: None,
        provenance: Provenance::External,
    };
    let c = case(&record);
    assert_eq!(c.cost, 0.0);
    let h = IimlConfig::default().fd_step;
    let g = fd_gradient(&c, h, &solver).unwrap();
    // at the minimum a forward difference measures h times the curvature
    let small = fd_gradient(&c, 0.1 * h, &solver).unwrap();
    let ratio = g.inf_norm() / small.inf_norm();
    assert!((9.5..=10.5).contains(&ratio), "{ratio}");
    assert!(small.inf_norm() < 0.1 * g.inf_norm() + 10.0 * h);
    assert_eq!(g.evaluations, c.n_y() + 1);
    assert!(g.failed.is_empty());
}

#[test]
fn sync_on_neutral_fields_stays_neutral() {
    let records = truth(HiddenAugmentation::reference(), 2);
    let cases: Vec<TrainingCase> = records.iter().map(case).collect();
    let (features, targets) = collate(&cases).unwrap();
    assert_eq!(targets.iter().map(Vec::len).sum::<usize>(), cases.iter().map(|c| c.n_y()).sum::<usize>());
    let mut model = MlpModel::augmentation(5);
    ml_sync(&features, &targets, &mut model, 500, AdamSettings::default()).unwrap();
    for f in &features {
        assert!(model.predict(f).iter().all(|p| (p - 1.0).abs() < 1e-2));
    }
}

#[test]
fn sync_overfits_a_single_node() {
    let mut row = [0.0; NUM_FEATURES];
    row.iter_mut().enumerate().for_each(|(k, v)| *v = k as f64 * 0.7 + 0.1);
    let features = vec![FeatureMatrix::from_rows(vec![row]).unwrap()];
    let mut model = MlpModel::augmentation(2);
    let (_, loss) = ml_sync(&features, &[vec![1.4]], &mut model, 500, AdamSettings::default()).unwrap();
    assert!(loss < 1e-3, "{loss}");
    assert!(ml_sync(&features, &[vec![1.0, 2.0]], &mut model, 1, AdamSettings::default()).is_err());
}

#[test]
fn correction_with_neutral_model_keeps_the_baseline() {
    let records = truth(HiddenAugmentation::reference(), 1);
    let c = case(&records[0]);
    let (next, trace) =
        field_correction(&c, &MlpModel::augmentation(1), &FixedPointSettings::default(), &SolverSettings::default()).unwrap();
    assert!(trace.converged);
    assert!(next.field.values().iter().all(|d| *d == 1.0));
    assert!(next.state.max_scaled_difference(&c.state) < 1e-6);
    assert_eq!(next.provenance, FieldProvenance::FixedPoint);
}

#[test]
fn neutral_truth_stops_immediately() {
    let records = truth(HiddenAugmentation::Constant { value: 1.0 }, 2);
    let config = IimlConfig { max_outer_iterations: 3, ..Default::default() };
    let out = run_wciiml(&ModelParameters::default(), &records, &config, &SolverSettings::default(), &Serial).unwrap();
    assert!(out.history.baseline_objective < 1e-10, "{}", out.history.baseline_objective);
    assert_eq!(out.history.stop, StopReason::ObjectiveTolerance);
    assert!(out.history.iterations.is_empty());
    assert_eq!(out.model.forward(&[0.5; NUM_FEATURES]).unwrap(), 1.0);
}

#[test]
fn short_run_bookkeeping() {
    let records = truth(HiddenAugmentation::reference(), 2);
    let config = IimlConfig { max_outer_iterations: 3, ..Default::default() };
    let solver = SolverSettings::default();
    let out = run_wciiml(&ModelParameters::default(), &records, &config, &solver, &Serial).unwrap();
    let h = &out.history;
    assert_eq!(h.case_ids, vec![1, 2]);
    let accepted = h.accepted_objectives();
    assert!(accepted.len() > 1);
    let bests: Vec<f64> = h.iterations.iter().map(|r| r.best_objective).collect();
    assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    assert!(h.best_objective < h.baseline_objective);
    let n_y: usize = out.cases.iter().map(|c| c.n_y()).sum();
    for r in &h.iterations {
        assert!(r.fd_solves == 0 || r.fd_solves == n_y + out.cases.len());
        assert_eq!(r.fixed_point_solves, r.fixed_point.iter().map(|t| t.inner_work.len()).sum::<usize>());
        if r.accepted {
            assert_eq!(r.case_costs.len(), 2);
        }
    }
    assert_eq!(h.iterations[0].fd_solves, n_y + 2);
    assert!(out.checkpoints.iter().all(|(k, _)| h.iterations[k - 1].accepted));
    let bound = 2.0 * config.fixed_point.tol / (1.0 - config.fixed_point.relaxation);
    for c in &out.cases {
        assert_eq!(c.provenance, FieldProvenance::FixedPoint);
        let predicted = out.model.predict(&c.features().unwrap());
        let gap = predicted.iter().zip(c.field.values()).fold(0.0f64, |m, (p, d)| m.max((p - d).abs()));
        assert!(gap <= bound, "{gap}");
        assert!((c.cost_of(&c.state) - c.cost).abs() == 0.0);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let records = truth(HiddenAugmentation::reference(), 1);
    let solver = SolverSettings::default();
    for config in [
        IimlConfig { fd_step: 0.0, ..Default::default() },
        IimlConfig { rejection_factor: 0.9, ..Default::default() },
        IimlConfig { fixed_point: FixedPointSettings { relaxation: 1.0, ..Default::default() }, ..Default::default() },
    ] {
        assert!(run_wciiml(&ModelParameters::default(), &records, &config, &solver, &Serial).is_err());
    }
    assert!(run_wciiml(&ModelParameters::default(), &[], &IimlConfig::default(), &solver, &Serial).is_err());
}
