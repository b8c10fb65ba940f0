use fcaug_core::augment::FixedPointSettings;
use fcaug_core::dae::{solve_steady, SolverSettings};
use fcaug_core::data::{generate_truth, select_training, CaseRecord, HiddenAugmentation, Provenance, TruthGeneratorSpec};
use fcaug_core::eval::cost;
use fcaug_core::exec::{Executor, Serial};
use fcaug_core::fcmodel::{CellModel, ModelParameters, OperatingConditions};
use proptest::prelude::*;

/// Evaluates in reverse index order but returns results in index order.
struct Reversed;

impl Executor for Reversed {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let mut out: Vec<R> = (0..n).rev().map(f).collect();
        out.reverse();
        out
    }
}

fn record(id: u32) -> CaseRecord {
    CaseRecord {
        case_id: id,
        conditions: OperatingConditions::nominal(id),
        lambda_data: vec![7.0; 20],
        j_data: None,
        provenance: Provenance::External,
    }
}

const LISTED_IDS: [u32; 14] = [40, 100, 125, 155, 190, 230, 400, 685, 740, 840, 865, 1000, 1090, 1200];

#[test]
fn fourteen_of_1224() {
    let cases: Vec<CaseRecord> = (1..=1224).map(record).collect();
    let (train, test) = select_training(&cases, &LISTED_IDS).unwrap();
    assert_eq!((train.len(), test.len()), (14, 1210));
    assert_eq!(train.iter().map(|c| c.case_id).collect::<Vec<_>>(), LISTED_IDS);
    assert!(test.iter().all(|c| !LISTED_IDS.contains(&c.case_id)));
    assert!(select_training(&cases, &[40, 40]).is_err());
    assert!(select_training(&cases, &[1225]).is_err());
}

#[test]
fn neutral_truth_reproduces_the_baseline() {
    let params = ModelParameters::default();
    let solver = SolverSettings::default();
    let spec = TruthGeneratorSpec::new(HiddenAugmentation::Constant { value: 1.0 }, 3, 17);
    let set = generate_truth(&spec, &params, &FixedPointSettings::default(), &solver, &Serial).unwrap();
    assert_eq!(set.records.len(), 3);
    for r in &set.records {
        r.validate(20).unwrap();
        assert_eq!(r.provenance, Provenance::Synthetic);
        let model = CellModel::new(&params, &r.conditions).unwrap();
        let (base, _) = solve_steady(&model, None, &solver, None).unwrap();
        let c = cost(&base.lambda_mb(), &r.lambda_data).unwrap();
        assert!(c < 1e-10, "{c}");
    }
}

#[test]
fn truth_is_reproducible_and_order_free() {
    let params = ModelParameters::default();
    let solver = SolverSettings::default();
    let fp = FixedPointSettings::default();
    let spec = TruthGeneratorSpec::new(HiddenAugmentation::reference(), 4, 99);
    let a = generate_truth(&spec, &params, &fp, &solver, &Serial).unwrap();
    let b = generate_truth(&spec, &params, &fp, &solver, &Reversed).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.iter().map(|r| r.case_id).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    let other = generate_truth(&TruthGeneratorSpec { seed: 100, ..spec.clone() }, &params, &fp, &solver, &Serial).unwrap();
    assert_ne!(a.records[0].conditions, other.records[0].conditions);
}

#[test]
fn samples_stay_in_their_ranges() {
    let spec = TruthGeneratorSpec::new(HiddenAugmentation::reference(), 50, 3);
    let r = spec.ranges;
    for k in 0..50 {
        for attempt in 0..3 {
            let oc = spec.sample(k, attempt);
            assert_eq!(oc.case_id, k as u32 + 1);
            for (v, [lo, hi]) in [(oc.t_in, r.t_in), (oc.rh_ca_in, r.rh_ca_in), (oc.i_cell, r.i_cell), (oc.stoich_an, r.stoich_an)] {
                assert!(v >= lo && v <= hi);
            }
            oc.validate().unwrap();
        }
    }
    assert_ne!(spec.sample(0, 0), spec.sample(0, 1));
}

#[test]
fn bad_specs_are_rejected() {
    for hidden in [
        HiddenAugmentation::Constant { value: -0.1 },
        HiddenAugmentation::Logistic { base: 0.3, amplitude: -0.5, slope: 1.0, center: 8.0, feature: 7 },
        HiddenAugmentation::Logistic { base: 0.3, amplitude: 0.5, slope: 1.0, center: 8.0, feature: 8 },
    ] {
        assert!(TruthGeneratorSpec::new(hidden, 1, 0).validate().is_err());
    }
    let mut bad = record(1);
    bad.lambda_data[3] = 23.0;
    assert!(bad.validate(20).is_err());
    assert!(record(1).validate(19).is_err());
}

proptest! {
    #[test]
    fn hidden_augmentation_is_nonnegative(
        base in 0.0f64..2.0,
        amplitude in -2.0f64..2.0,
        slope in -10.0f64..10.0,
        center in 0.0f64..22.0,
        row in prop::array::uniform8(-1e3f64..1e3),
    ) {
        let h = HiddenAugmentation::Logistic { base, amplitude, slope, center, feature: 7 };
        prop_assume!(h.validate().is_ok());
        prop_assert!(h.value(&row) >= 0.0);
    }

    #[test]
    fn reference_hidden_augmentation_in_its_band(row in prop::array::uniform8(0.0f64..22.0)) {
        let v = HiddenAugmentation::reference().value(&row);
        prop_assert!((0.8..=1.2).contains(&v));
    }
}
