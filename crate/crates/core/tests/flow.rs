use lidl::density::{log_density_box_conv, LogDensity};
use lidl::flow::{build_masks, train_maf, train_maf_with_report, MafModel, TrainConfig};
use lidl::lidl::perturb;
use lidl::manifolds::{generate, Dataset, ManifoldKind, ManifoldSpec};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn randomized(dim: usize, hidden: &[usize], layers: usize, seed: u64) -> MafModel {
    let mut m = MafModel::new(dim, hidden, layers, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for v in m.params.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += 0.3 * e;
    }
    m.apply_masks();
    m
}

fn normal_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal))
}

fn permutation(d: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..d).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masks_are_autoregressive(
        d in 1usize..8,
        hidden in proptest::collection::vec(1usize..24, 1..4),
        perm_seed in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let ordering = permutation(d, perm_seed);
        let masks = build_masks(d, &hidden, &ordering, seed).unwrap();
        let c = masks.connectivity();
        let pos = |i: usize| ordering.iter().position(|&o| o == i).unwrap();
        for i in 0..d {
            for j in 0..d {
                if pos(j) >= pos(i) {
                    prop_assert_eq!(c[(i, j)], 0.0, "output {} sees input {}", i, j);
                }
            }
        }
    }

    #[test]
    fn round_trip_is_tight(d in 1usize..6, layers in 1usize..6, seed in 0u64..1000) {
        let m = randomized(d, &[16, 16], layers, seed);
        let pts = normal_points(20, d, seed + 1);
        for row in pts.rows() {
            let x = row.to_vec();
            let (z, _) = m.forward(&x).unwrap();
            let back = m.inverse(&z).unwrap();
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn different_seeds_give_valid_but_different_masks() {
    let ordering: Vec<usize> = (0..5).collect();
    let a = build_masks(5, &[32, 32], &ordering, 1).unwrap();
    let b = build_masks(5, &[32, 32], &ordering, 2).unwrap();
    assert_ne!(a.degrees, b.degrees);
    for m in [a, b] {
        let c = m.connectivity();
        for i in 0..5 {
            for j in i..5 {
                assert_eq!(c[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn hundred_point_round_trip() {
    let m = randomized(3, &[32, 32], 1, 5);
    let m5 = randomized(3, &[32, 32], 5, 6);
    let pts = normal_points(100, 3, 3);
    let mut worst = (0.0f64, 0.0f64);
    for row in pts.rows() {
        let x = row.to_vec();
        for (model, slot) in [(&m, 0), (&m5, 1)] {
            let back = model.inverse(&model.forward(&x).unwrap().0).unwrap();
            let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if slot == 0 {
                worst.0 = worst.0.max(err);
            } else {
                worst.1 = worst.1.max(err);
            }
        }
    }
    assert!(worst.0 < 1e-6 && worst.1 < 1e-5, "{worst:?}");
}

#[test]
fn identity_model_is_standard_normal_after_standardization() {
    let mean = vec![0.5, -1.0];
    let scale = vec![2.0, 0.25];
    let m = MafModel::new(2, &[8], 3, 0)
        .unwrap()
        .with_standardization(mean.clone(), scale.clone())
        .unwrap();
    let x = [1.5, -0.5];
    let u = [(x[0] - mean[0]) / scale[0], (x[1] - mean[1]) / scale[1]];
    let want = -(2.0 * std::f64::consts::PI).ln() - 0.5 * (u[0] * u[0] + u[1] * u[1]) - (scale[0] * scale[1]).ln();
    assert!((m.log_density(&x).unwrap() - want).abs() < 1e-12);
    assert_eq!(m.inverse(&[0.0, 0.0]).unwrap(), mean);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let m = randomized(3, &[8, 8], 4, 9);
    let back = MafModel::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.json");
    m.save(&path).unwrap();
    let loaded = MafModel::load(&path).unwrap();
    let x = [0.1, 0.2, -0.3];
    assert_eq!(loaded.log_density(&x).unwrap().to_bits(), m.log_density(&x).unwrap().to_bits());
}

fn normal_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    Dataset::from_points(normal_points(n, d, seed)).unwrap()
}

#[test]
fn training_improves_and_repeats() {
    let mut data = normal_dataset(2000, 2, 1);
    for mut row in data.points.rows_mut() {
        row[1] = 0.8 * row[0] + 0.6 * row[1];
    }
    let cfg = TrainConfig {
        hidden: vec![16, 16],
        layers: 2,
        epochs: 20,
        batch_size: 128,
        ..Default::default()
    };
    let (_, a) = train_maf_with_report(&data, &cfg).unwrap();
    let (_, b) = train_maf_with_report(&data, &cfg).unwrap();
    assert!(a.best_val_nll < a.initial_val_nll);
    assert_eq!(a.best_val_nll.to_bits(), b.best_val_nll.to_bits());
}

#[test]
fn one_dimensional_normal_reaches_entropy() {
    let data = normal_dataset(100_000, 1, 2);
    let cfg = TrainConfig {
        hidden: vec![8],
        layers: 1,
        epochs: 5,
        ..Default::default()
    };
    let model = train_maf(&data, &cfg).unwrap();
    let nll = model.nll(data.points.view()).unwrap();
    let entropy = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    assert!((nll - entropy).abs() < 0.02, "{nll} vs {entropy}");
}

#[test]
fn noisy_uniform_square_density_at_centre() {
    let delta = 0.05;
    let spec = ManifoldSpec::new(ManifoldKind::UniformHypercube { d: 2 });
    let clean = generate(&spec, 20_000, 4).unwrap();
    let noisy = perturb(&clean, delta, 5).unwrap();
    let cfg = TrainConfig {
        hidden: vec![64, 64],
        layers: 6,
        epochs: 60,
        learning_rate: 2e-3,
        patience: 60,
        rotations: true,
        ..Default::default()
    };
    let model = train_maf(&noisy, &cfg).unwrap();
    let got = model.log_density(&[0.5, 0.5]).unwrap();
    let want = log_density_box_conv(&[0.0, 0.0], &[1.0, 1.0], delta, &[0.5, 0.5]).unwrap();
    assert!((got - want).abs() < 0.1, "{got} vs {want}");
}

fn banana(n: usize, seed: u64) -> Dataset {
    // x0 depends on x1, so conditioning x0 first is the unfavorable order
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, 2));
    for mut row in pts.rows_mut() {
        let a: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        row[1] = a;
        row[0] = 0.5 * a * a + 0.2 * e;
    }
    Dataset::from_points(pts).unwrap()
}

#[test]
fn alternating_orderings_beat_a_single_unfavorable_layer() {
    let train = banana(4000, 6);
    let test = banana(4000, 7);
    let cfg = |layers| TrainConfig {
        hidden: vec![32, 32],
        layers,
        epochs: 40,
        learning_rate: 3e-3,
        ..Default::default()
    };
    let one = train_maf(&train, &cfg(1)).unwrap();
    let two = train_maf(&train, &cfg(2)).unwrap();
    let nll_one = one.nll(test.points.view()).unwrap();
    let nll_two = two.nll(test.points.view()).unwrap();
    assert!(nll_two < nll_one, "two layers {nll_two} vs one {nll_one}");
}

#[test]
fn rescaling_shifts_log_density_by_the_jacobian() {
    let data = banana(2000, 8);
    let (a, b) = ([3.0, 0.2], [-1.0, 5.0]);
    let mut scaled = data.clone();
    for mut row in scaled.points.rows_mut() {
        for k in 0..2 {
            row[k] = a[k] * row[k] + b[k];
        }
    }
    let cfg = TrainConfig {
        hidden: vec![16, 16],
        layers: 2,
        epochs: 15,
        ..Default::default()
    };
    let m = train_maf(&data, &cfg).unwrap();
    let ms = train_maf(&scaled, &cfg).unwrap();
    let log_jac = (a[0] * a[1]).ln();
    for x in [[0.5, 0.0], [1.0, -1.2], [2.0, 1.8]] {
        let y = [a[0] * x[0] + b[0], a[1] * x[1] + b[1]];
        let lhs = ms.log_density(&y).unwrap();
        let rhs = m.log_density(&x).unwrap() - log_jac;
        assert!((lhs - rhs).abs() < 0.05, "{lhs} vs {rhs}");
    }
}

#[test]
fn relative_gradient_check_on_single_layer() {
    let mut m = randomized(3, &[6], 1, 21);
    let x = normal_points(10, 3, 5);
    let (_, grad) = m.nll_and_grad(x.view()).unwrap();
    let mut checked = 0;
    for k in 0..m.params.len() {
        if grad[k] == 0.0 {
            continue;
        }
        let orig = m.params[k];
        let h = 1e-5 * orig.abs().max(1.0);
        m.params[k] = orig + h;
        let up = m.nll(x.view()).unwrap();
        m.params[k] = orig - h;
        let down = m.nll(x.view()).unwrap();
        m.params[k] = orig;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - grad[k]).abs() <= 1e-4 * grad[k].abs().max(1e-6), "param {k}");
        checked += 1;
    }
    assert!(checked > 20);
}
