use fcaug_core::dae::{solve_steady, SolverSettings};
use fcaug_core::features::{
    compute_features, FeatureMatrix, FeatureRow, NormalizationBounds, EXTRAPOLATION_CLAMP, NUM_FEATURES,
};
use fcaug_core::fcmodel::{CellModel, ModelParameters, OperatingConditions, Var};
use proptest::prelude::*;

fn rows() -> impl Strategy<Value = Vec<FeatureRow>> {
    prop::collection::vec(prop::array::uniform8(-50.0f64..400.0), 1..30)
}

#[test]
fn fitted_bounds_example() {
    let mut a = [[0.0; NUM_FEATURES]; 2];
    a[0][0] = 2.0;
    a[1][0] = 4.0;
    let m = FeatureMatrix::from_rows(a.to_vec()).unwrap();
    let fit = NormalizationBounds::fit([&m]).unwrap();
    assert!((fit.bounds.min[0] - 1.9).abs() < 1e-12);
    assert!((fit.bounds.max[0] - 4.1).abs() < 1e-12);
    assert_eq!(fit.degenerate_columns, (1..NUM_FEATURES).collect::<Vec<_>>());
    assert!(fit.bounds.is_valid());
    assert!(NormalizationBounds::fit(core::iter::empty::<&FeatureMatrix>()).is_err());
}

#[test]
fn non_finite_rows_are_rejected() {
    let mut r = [0.5; NUM_FEATURES];
    r[3] = f64::NAN;
    assert!(FeatureMatrix::from_rows(vec![[0.0; NUM_FEATURES], r]).is_err());
}

#[test]
fn features_of_a_solved_cell() {
    let oc = OperatingConditions::nominal(1);
    let model = CellModel::new(&ModelParameters::default(), &oc).unwrap();
    let (state, _) = solve_steady(&model, None, &SolverSettings::default(), None).unwrap();
    let f = compute_features(&model, &state).unwrap();
    assert_eq!(f.n_rows(), model.n_y());
    for (n, row) in f.rows().iter().enumerate() {
        assert!(row.iter().all(|v| v.is_finite()));
        assert!((0.0..=1.0).contains(&row[0]) && (0.0..=1.0).contains(&row[2]));
        assert_eq!(row[1], model.context().profiles.t[n]);
        assert_eq!(row[7], state.get(n, Var::LambdaMb));
    }
}

proptest! {
    #[test]
    fn training_rows_scale_into_unit_box(data in rows()) {
        let m = FeatureMatrix::from_rows(data.clone()).unwrap();
        let b = NormalizationBounds::fit([&m]).unwrap().bounds;
        for row in &data {
            let (s, clamped) = b.apply_clamped(row);
            prop_assert_eq!(clamped, 0);
            prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn invert_undoes_apply(data in rows(), probe in prop::array::uniform8(-1e3f64..1e3)) {
        let m = FeatureMatrix::from_rows(data).unwrap();
        let b = NormalizationBounds::fit([&m]).unwrap().bounds;
        let back = b.invert(&b.apply(&probe));
        for c in 0..NUM_FEATURES {
            prop_assert!((back[c] - probe[c]).abs() <= 1e-9 * (1.0 + probe[c].abs()));
        }
    }

    #[test]
    fn extrapolation_is_clamped_and_counted(data in rows(), probe in prop::array::uniform8(-1e4f64..1e4)) {
        let m = FeatureMatrix::from_rows(data).unwrap();
        let b = NormalizationBounds::fit([&m]).unwrap().bounds;
        let raw = b.apply(&probe);
        let (s, clamped) = b.apply_clamped(&probe);
        let (lo, hi) = EXTRAPOLATION_CLAMP;
        let outside = raw.iter().filter(|v| **v < lo || **v > hi).count();
        prop_assert_eq!(clamped, outside);
        for c in 0..NUM_FEATURES {
            prop_assert!(s[c] >= lo && s[c] <= hi);
            prop_assert_eq!(s[c], raw[c].clamp(lo, hi));
        }
    }
}
