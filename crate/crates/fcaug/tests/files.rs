use std::fs;

use fcaug::cases::{load_cases, profile_path, save_cases, CONDITIONS_FILE};
use fcaug::config::RunConfig;
use fcaug::error::Error;
use fcaug::manifest::{to_table, Manifest};
use fcaug::weights::{load_weights, parse_weights, save_weights, weights_text};
use fcaug_core::data::{CaseRecord, Provenance};
use fcaug_core::features::{NormalizationBounds, NUM_FEATURES};
use fcaug_core::fcmodel::{CellGeometry, OperatingConditions};
use fcaug_core::mlp::MlpModel;
use proptest::prelude::*;

fn grid() -> Vec<f64> {
    CellGeometry::default().y_grid()
}

fn arb_record(id: u32) -> impl Strategy<Value = CaseRecord> {
    (
        (333.0f64..353.0, 0.0f64..10.0, 0.3f64..1.0, 0.3f64..1.0, 1.2f64..3.0, 2e3f64..15e3),
        prop::collection::vec(0.0f64..22.0, 20),
        prop::option::of(prop::collection::vec(-1e5f64..1e5, 20)),
        any::<bool>(),
    )
        .prop_map(move |((t_in, dt, rh_an, rh_ca, st, i), lambda_data, j_data, synthetic)| CaseRecord {
            case_id: id,
            conditions: OperatingConditions {
                t_in,
                dt,
                rh_an_in: rh_an,
                rh_ca_in: rh_ca,
                stoich_ca: st,
                i_cell: i,
                ..OperatingConditions::nominal(id)
            },
            lambda_data,
            j_data,
            provenance: if synthetic { Provenance::Synthetic } else { Provenance::External },
        })
}

fn sample_set() -> Vec<CaseRecord> {
    (1..=3)
        .map(|id| CaseRecord {
            case_id: id,
            conditions: OperatingConditions::nominal(id),
            lambda_data: (0..20).map(|n| 5.0 + 0.1 * n as f64).collect(),
            j_data: None,
            provenance: Provenance::Synthetic,
        })
        .collect()
}

fn trained_like_model() -> MlpModel {
    let mut m = MlpModel::augmentation(42);
    for (k, p) in m.params_mut().iter_mut().enumerate() {
        *p = ((k as f64) * 0.7310585786300049).sin() / 3.0;
    }
    let mut bounds = NormalizationBounds::default();
    for c in 0..NUM_FEATURES {
        bounds.min[c] = -0.1 * c as f64 + 1e-17;
        bounds.max[c] = 300.0 + std::f64::consts::PI * c as f64;
    }
    m.bounds = bounds;
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn case_sets_round_trip(records in (arb_record(1), arb_record(7), arb_record(12))) {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![records.0, records.1, records.2];
        save_cases(dir.path(), &records, &grid()).unwrap();
        prop_assert_eq!(load_cases(dir.path(), &grid()).unwrap(), records);
    }
}

#[test]
fn missing_column_names_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    save_cases(dir.path(), &sample_set(), &grid()).unwrap();
    let path = profile_path(dir.path(), 2);
    let text = fs::read_to_string(&path).unwrap().replace("lambda_data", "lambda");
    fs::write(&path, text).unwrap();
    match load_cases(dir.path(), &grid()) {
        Err(Error::Schema { path: p, column, .. }) => {
            assert_eq!(p, path);
            assert_eq!(column, "lambda_data");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_value_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    save_cases(dir.path(), &sample_set(), &grid()).unwrap();
    let path = dir.path().join(CONDITIONS_FILE);
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[3].split(',').map(String::from).collect();
    fields[4] = "warm".into();
    lines[3] = fields.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let err = load_cases(dir.path(), &grid()).unwrap_err();
    match &err {
        Error::Schema { line, column, .. } => assert_eq!((*line, column.as_str()), (4, "p_in_an")),
        other => panic!("{other:?}"),
    }
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn unknown_column_and_grid_mismatch_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_cases(dir.path(), &sample_set(), &grid()).unwrap();
    let path = profile_path(dir.path(), 1);
    let text = fs::read_to_string(&path).unwrap();
    let extra: String = text
        .lines()
        .enumerate()
        .map(|(k, l)| match k {
            0 => format!("{l}\n"),
            1 => format!("{l},extra\n"),
            _ => format!("{l},0\n"),
        })
        .collect();
    fs::write(&path, extra).unwrap();
    assert!(matches!(load_cases(dir.path(), &grid()), Err(Error::Schema { .. })));
    save_cases(dir.path(), &sample_set(), &grid()).unwrap();
    let shifted: Vec<f64> = grid().iter().map(|y| y + 1e-3).collect();
    assert!(load_cases(dir.path(), &shifted).is_err());
    assert!(load_cases(dir.path(), &grid()[..19]).is_err());
}

#[test]
fn weights_round_trip_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.txt");
    let m = trained_like_model();
    save_weights(&path, &m, "unit test").unwrap();
    let (back, provenance) = load_weights(&path).unwrap();
    assert_eq!(provenance, "unit test");
    assert_eq!(back.seed, m.seed);
    assert_eq!(back.sizes(), m.sizes());
    assert!(back.params().iter().zip(m.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
    for c in 0..NUM_FEATURES {
        assert_eq!(back.bounds.min[c].to_bits(), m.bounds.min[c].to_bits());
        assert_eq!(back.bounds.max[c].to_bits(), m.bounds.max[c].to_bits());
    }
    assert_eq!(weights_text(&back, "unit test"), fs::read_to_string(&path).unwrap());
}

#[test]
fn tampered_or_foreign_weights_are_refused() {
    let p = std::path::Path::new("w.txt");
    let text = weights_text(&trained_like_model(), "x");
    let flipped = text.replacen("seed = 42", "seed = 43", 1);
    assert!(matches!(parse_weights(p, &flipped), Err(Error::Artifact { .. })));
    // a consistent checksum over a different version
    let body = text[..text.rfind("sha256 = ").unwrap()].replacen("format_version = 1", "format_version = 2", 1);
    let resealed = format!("{body}sha256 = {}\n", fcaug::weights::sha256_hex(body.as_bytes()));
    let err = parse_weights(p, &resealed).unwrap_err();
    assert!(err.to_string().contains("format_version"), "{err}");
    assert!(parse_weights(p, "").is_err());
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "abc").unwrap();
    let mut m = Manifest::new("train", to_table(&RunConfig::default()));
    m.add_output(dir.path(), "a.txt").unwrap();
    m.inputs.insert("cases".into(), "/data/cases".into());
    m.results.insert("best_objective".into(), 0.125.into());
    m.wall_time_s = 1.5;
    m.save(dir.path()).unwrap();
    let back = Manifest::load(dir.path()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.outputs["a.txt"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    assert!(m.add_output(dir.path(), "missing.txt").is_err());
}

#[test]
fn config_defaults_overrides_and_errors() {
    let d = RunConfig::from_toml("", &[]).unwrap();
    assert_eq!(d, RunConfig::default());
    assert_eq!((d.iiml.fd_step, d.iiml.step_scale, d.iiml.max_outer_iterations, d.iiml.ml_epochs), (1e-4, 0.05, 30, 500));
    let c = RunConfig::from_toml("[truth]\nn_cases = 5\n", &["training_ids=[3,1]".into(), "solver.dt_max=5.0".into()]).unwrap();
    assert_eq!((c.truth.n_cases, c.training_ids.clone(), c.solver.dt_max), (5, vec![3, 1], 5.0));
    let err = RunConfig::from_toml("[solver]\nmax_steps = 0\n", &[]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(RunConfig::from_toml("workers = ", &[]).is_err());
    assert!(RunConfig::from_toml("", &["noequals".into()]).is_err());
    assert!(RunConfig::load(Some(std::path::Path::new("/nonexistent/cfg.toml")), &[]).is_err());
}
