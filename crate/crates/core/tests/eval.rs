use fcaug_core::augment::{fixed_point_solve, FixedPointSettings};
use fcaug_core::dae::{solve_steady, SolverSettings};
use fcaug_core::data::{generate_truth, HiddenAugmentation, TruthGeneratorSpec};
use fcaug_core::eval::{
    combined_objective, cost, evaluate_suite, performance_metrics, summarize, CaseFailure, EvalSettings,
};
use fcaug_core::exec::Serial;
use fcaug_core::fcmodel::{CellModel, ModelParameters};
use fcaug_core::mlp::MlpModel;
use proptest::prelude::*;

fn norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |n, (x, y)| n.hypot(x - y))
}

fn profiles(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1..=n).prop_flat_map(|n| {
        let v = || prop::collection::vec(-20.0f64..20.0, n);
        (v(), v(), v())
    })
}

#[test]
fn metric_examples() {
    let d = [0.0, 0.0];
    let m = performance_metrics(&[3.0, 0.0], &[1.0, 0.0], &d).unwrap();
    assert_eq!((m.p1, m.p2, m.err_baseline, m.err_augmented), (0.5, 0.25, 3.0, 1.0));
    let perfect = performance_metrics(&[0.0, 2.0], &d, &d).unwrap();
    assert_eq!(perfect.p1, 1.0);
    let same = performance_metrics(&d, &d, &d).unwrap();
    assert!(same.degenerate && same.p1 == 0.0 && same.p2 == 0.0);
    assert!(performance_metrics(&d, &[0.0], &d).is_err());
}

#[test]
fn objective_examples() {
    assert_eq!(combined_objective(&[2.0, 3.0], Some(&[2.0, 1.0])).unwrap(), 7.0);
    assert_eq!(combined_objective(&[2.5], None).unwrap(), 2.5);
    assert!(combined_objective(&[2.0, 3.0], Some(&[1.0])).is_err());
}

#[test]
fn neutral_and_true_models() {
    let params = ModelParameters::default();
    let solver = SolverSettings::default();
    let fp = FixedPointSettings { tol: 1e-6, ..Default::default() };
    let set = generate_truth(&TruthGeneratorSpec::new(HiddenAugmentation::reference(), 3, 5), &params, &fp, &solver, &Serial).unwrap();
    let settings = EvalSettings { solver, fixed_point: fp };
    let neutral = evaluate_suite(&params, &set.records, None, &MlpModel::augmentation(1), &[1], &settings, &Serial);
    assert_eq!(neutral.summary.total, neutral.summary.evaluated + neutral.summary.failed);
    assert_eq!(neutral.summary.improved, 0);
    assert!(neutral.records.iter().all(|r| r.lambda.p1 == 0.0 && r.current.is_some_and(|c| c.p1 == 0.0)));

    let t = HiddenAugmentation::reference();
    for record in &set.records {
        let cell = CellModel::new(&params, &record.conditions).unwrap();
        let (base, _) = solve_steady(&cell, None, &solver, None).unwrap();
        let out = fixed_point_solve(&cell, &t, &fp, &solver, None).unwrap();
        let m = performance_metrics(&base.lambda_mb(), &out.state.lambda_mb(), &record.lambda_data).unwrap();
        assert!(m.p1 > 0.99, "{}", m.p1);
    }
}

#[test]
fn summary_counts_failures_as_not_improved() {
    let failures = vec![CaseFailure { case_id: 9, training: false, message: "diverged".into() }];
    let s = summarize(&[], &failures);
    assert_eq!((s.total, s.evaluated, s.failed, s.held_out_total), (1, 0, 1, 1));
    assert_eq!(s.improved_fraction, 0.0);
}

proptest! {
    #[test]
    fn cost_is_a_sum_of_squares(v in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 0..40)) {
        let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let mut oracle = 0.0;
        for k in 0..a.len() {
            oracle += (a[k] - b[k]).powi(2);
        }
        let c = cost(&a, &b).unwrap();
        prop_assert!((c - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }

    #[test]
    fn metric_bounds_and_sign((b, a, d) in profiles(30)) {
        let m = performance_metrics(&b, &a, &d).unwrap();
        let (e_b, e_a) = (norm(&b, &d), norm(&a, &d));
        prop_assume!(e_a + e_b > 0.0);
        let p1 = (e_b - e_a) / (e_a + e_b);
        prop_assert!((m.p1 - p1).abs() < 1e-12);
        prop_assert!(m.p1 > -1.0 && m.p1 <= 1.0);
        prop_assert!(m.p2.abs() <= m.p1.abs());
        prop_assert_eq!(m.p1 > 0.0, e_a < e_b);
        prop_assert!((m.p2 - p1 * norm(&a, &b) / (e_a + e_b)).abs() < 1e-12);
    }

    #[test]
    fn unchanged_prediction_is_neutral((b, _a, d) in profiles(30)) {
        let m = performance_metrics(&b, &b, &d).unwrap();
        prop_assert_eq!(m.p1, 0.0);
        prop_assert_eq!(m.p2, 0.0);
    }
}
