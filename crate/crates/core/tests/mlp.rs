use fcaug_core::mlp::{adam_update, train, AdamSettings, AdamState, Dataset, MlpModel, AUGMENTATION_LAYERS};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_net(seed: u64, scale: f64) -> MlpModel {
    let mut m = MlpModel::augmentation(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    for p in m.params_mut() {
        *p = uniform(&mut rng, -scale, scale);
    }
    let n = m.n_params();
    m.params_mut()[n - 1] = 1.0;
    m
}

fn random_data(seed: u64, rows: usize, target: impl Fn(&[f64]) -> f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Dataset::new(AUGMENTATION_LAYERS[0]);
    for _ in 0..rows {
        let x: Vec<f64> = (0..AUGMENTATION_LAYERS[0]).map(|_| uniform(&mut rng, 0.0, 1.0)).collect();
        let y = target(&x);
        d.push(&x, y);
    }
    d
}

/// Layer-by-layer evaluation through the weight and bias accessors.
fn reference_forward(m: &MlpModel, x: &[f64]) -> f64 {
    let sizes = m.sizes();
    let mut a = x.to_vec();
    for l in 0..sizes.len() - 1 {
        let last = l + 2 == sizes.len();
        a = (0..sizes[l + 1])
            .map(|o| {
                let mut z = m.bias(l, o);
                for (i, ai) in a.iter().enumerate() {
                    z += m.weight(l, o, i) * ai;
                }
                if last {
                    z.max(0.0)
                } else {
                    1.0 / (1.0 + (-z).exp())
                }
            })
            .collect();
    }
    a[0]
}

fn mse(m: &MlpModel, d: &Dataset) -> f64 {
    d.rows().zip(&d.y).map(|(x, y)| (m.forward(x).unwrap() - y).powi(2)).sum::<f64>() / d.len() as f64
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..5 {
        let m = random_net(seed, 1.0);
        let d = random_data(seed + 100, 12, |x| 0.5 + x[0] * x[3]);
        let (loss, grad) = m.loss_and_grad(&d).unwrap();
        assert!((loss - mse(&m, &d)).abs() < 1e-12);
        let h = 1e-6;
        for k in 0..m.n_params() {
            let (mut up, mut down) = (m.clone(), m.clone());
            up.params_mut()[k] += h;
            down.params_mut()[k] -= h;
            let fd = (mse(&up, &d) - mse(&down, &d)) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "seed {seed} param {k}: {fd} vs {}", grad[k]);
        }
    }
}

#[test]
fn adam_minimises_a_quadratic() {
    let mut w = [1.0];
    let mut state = AdamState::new(1, AdamSettings { lr: 0.1, ..Default::default() });
    for _ in 0..100 {
        let g = [2.0 * (w[0] - 3.0)];
        adam_update(&mut w, &mut state, &g).unwrap();
    }
    assert!((w[0] - 3.0).abs() < 1e-2, "{}", w[0]);
    assert!(adam_update(&mut w, &mut state, &[1.0, 2.0]).is_err());
}

#[test]
fn first_adam_step_moves_by_the_learning_rate() {
    let mut w = [0.0, 5.0];
    let mut state = AdamState::new(2, AdamSettings { lr: 0.01, ..Default::default() });
    adam_update(&mut w, &mut state, &[3.0, -0.2]).unwrap();
    assert!((w[0] + 0.01).abs() < 1e-8 && (w[1] - 5.01).abs() < 1e-8);
}

#[test]
fn student_learns_teacher() {
    // hidden layers from the standard initialisation, random output layer
    let mut teacher = MlpModel::augmentation(7);
    let n = teacher.n_params();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    for p in &mut teacher.params_mut()[n - 8..n - 1] {
        *p = uniform(&mut rng, -0.5, 0.5);
    }
    let d = random_data(8, 200, |x| teacher.forward(x).unwrap());
    let mut student = MlpModel::augmentation(9);
    let history = train(&mut student, &d, 500, AdamSettings { lr: 1e-3, ..Default::default() }).unwrap();
    assert!(history.last().unwrap() < &history[0]);
    assert!(mse(&student, &d) < 1e-4, "{}", mse(&student, &d));
}

#[test]
fn constant_target_is_fitted() {
    let d = random_data(3, 50, |_| 0.8);
    let mut m = MlpModel::augmentation(4);
    train(&mut m, &d, 500, AdamSettings { lr: 1e-2, ..Default::default() }).unwrap();
    for x in d.rows() {
        assert!((m.forward(x).unwrap() - 0.8).abs() < 0.008);
    }
}

#[test]
fn initialisation_is_seeded() {
    assert_eq!(MlpModel::augmentation(11).params(), MlpModel::augmentation(11).params());
    assert_ne!(MlpModel::augmentation(11).params(), MlpModel::augmentation(12).params());
    let fresh = MlpModel::augmentation(11);
    assert!(fresh.forward(&[0.2; 8]).unwrap() == 1.0 && fresh.all_finite());
    assert!(fresh.forward(&[0.2; 7]).is_err());
    assert!(MlpModel::new(&[3], 1).is_err());
}

#[test]
fn empty_dataset_is_rejected() {
    let mut m = MlpModel::augmentation(1);
    assert!(train(&mut m, &Dataset::new(8), 3, AdamSettings::default()).is_err());
}

proptest! {
    #[test]
    fn forward_matches_reference(seed in 0u64..1000, x in prop::array::uniform8(-0.25f64..1.25)) {
        let m = random_net(seed, 2.0);
        let a = m.forward(&x).unwrap();
        let b = reference_forward(&m, &x);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn output_is_nonnegative(seed in 0u64..1000, x in prop::array::uniform8(-0.25f64..1.25), bias in -5.0f64..5.0) {
        let mut m = random_net(seed, 3.0);
        let n = m.n_params();
        m.params_mut()[n - 1] = bias;
        prop_assert!(m.forward(&x).unwrap() >= 0.0);
    }
}
