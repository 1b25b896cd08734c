use lidl::baselines::{
    lpca_lid, mle_lid, twonn_lid, write_estimates_csv, BaselineConfig, IndexKind, NeighborIndex, ThresholdRule,
};
use lidl::lidl::QueryFailure;
use lidl::manifolds::{generate, preset, ManifoldKind, ManifoldSpec};
use lidl::Error;
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, d), || rng.random::<f64>())
}

fn disk(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((n, 2));
    let mut i = 0;
    while i < n {
        let (x, y) = (rng.random_range(-1.0..1.0f64), rng.random_range(-1.0..1.0f64));
        if x * x + y * y < 1.0 {
            out[(i, 0)] = x;
            out[(i, 1)] = y;
            i += 1;
        }
    }
    out
}

#[test]
fn tree_answers_match_brute_force() {
    for d in [2, 3, 5] {
        let pts = uniform(3000, d, d as u64);
        let tree = NeighborIndex::with_kind(pts.clone(), IndexKind::KdTree).unwrap();
        let brute = NeighborIndex::with_kind(pts.clone(), IndexKind::BruteForce).unwrap();
        assert!(tree.is_tree() && !brute.is_tree());
        let queries = uniform(1000, d, 100 + d as u64);
        for row in queries.rows() {
            let x = row.to_vec();
            assert_eq!(tree.query(&x, 12).unwrap(), brute.query(&x, 12).unwrap());
        }
        assert_eq!(
            tree.query_many(queries.view(), 7).unwrap(),
            brute.query_many(queries.view(), 7).unwrap()
        );
        let own = tree.query(&pts.row(10).to_vec(), 5).unwrap();
        assert!(own.iter().all(|n| n.index != 10));
        assert!(own.windows(2).all(|w| w[0].distance <= w[1].distance));
    }
}

#[test]
fn power_of_two_rescaling_changes_nothing() {
    let pts = uniform(800, 3, 4);
    let x = [0.4, 0.5, 0.6];
    for c in [0.25, 8.0] {
        let scaled = pts.mapv(|v| v * c);
        let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
        let (a, b) = (NeighborIndex::new(pts.clone()).unwrap(), NeighborIndex::new(scaled.clone()).unwrap());
        assert_eq!(mle_lid(&a, &x, 20).unwrap().to_bits(), mle_lid(&b, &xs, 20).unwrap().to_bits());
        assert_eq!(twonn_lid(&pts).unwrap().to_bits(), twonn_lid(&scaled).unwrap().to_bits());
        for rule in [ThresholdRule::default(), ThresholdRule::ExplainedVariance { fraction: 0.9 }] {
            assert_eq!(lpca_lid(&a, &x, 30, rule).unwrap(), lpca_lid(&b, &xs, 30, rule).unwrap());
        }
    }
}

fn disk_mle_mean(n: usize, k: usize, rep: u64) -> f64 {
    let index = NeighborIndex::new(disk(n, rep)).unwrap();
    let queries = disk(2000, 1000 + rep);
    queries
        .rows()
        .into_iter()
        .map(|q| mle_lid(&index, &q.to_vec(), k).unwrap())
        .sum::<f64>()
        / 2000.0
}

#[test]
fn mle_on_a_disk_improves_with_sample_size() {
    let error = |n: usize| {
        let k = (n as f64).powf(0.4).ceil() as usize;
        (0..3u64).map(|rep| (disk_mle_mean(n, k, rep) - 2.0).abs()).sum::<f64>() / 3.0
    };
    let (small, large) = (error(1000), error(10_000));
    assert!(large < small, "n=1e4 error {large} vs n=1e3 error {small}");
}

#[test]
fn mle_at_fixed_k_tends_to_its_gamma_mean() {
    // (k−1)/S with S ~ Gamma(k−1, d) has mean d(k−1)/(k−2)
    let want = 2.0 * 19.0 / 18.0;
    let got = disk_mle_mean(10_000, 20, 0);
    assert!((got - want).abs() < 0.03, "{got} vs {want}");
}

#[test]
fn mle_on_an_evenly_spaced_line() {
    let pts = Array2::from_shape_fn((201, 1), |(i, _)| i as f64 * 0.01);
    let index = NeighborIndex::new(pts).unwrap();
    let d = mle_lid(&index, &[1.005], 10).unwrap();
    assert!((0.8..=1.2).contains(&d), "{d}");
}

#[test]
fn duplicates_name_the_neighbor() {
    let mut pts = uniform(50, 2, 9);
    let row = pts.row(3).to_owned();
    pts.row_mut(17).assign(&row);
    let index = NeighborIndex::new(pts.clone()).unwrap();
    match mle_lid(&index, &row.to_vec(), 5) {
        Err(Error::DuplicatePoint { neighbor }) => assert_eq!(neighbor, 17),
        other => panic!("expected duplicate error, got {other:?}"),
    }
    assert!(matches!(twonn_lid(&pts), Err(Error::DuplicatePoint { .. })));
}

#[test]
fn lpca_recovers_the_hypercube() {
    let data = generate(&ManifoldSpec::new(ManifoldKind::UniformHypercube { d: 10 }), 10_000, 1).unwrap();
    let index = NeighborIndex::new(data.points.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(0.3..0.7)).collect();
        assert_eq!(lpca_lid(&index, &x, 100, ThresholdRule::default()).unwrap(), 10);
    }
}

#[test]
fn lollipop_point_mass() {
    let data = generate(&ManifoldSpec::new(ManifoldKind::lollipop()), 2000, 3).unwrap();
    let atom = data.component_id.as_ref().unwrap().iter().position(|&c| c == 0).unwrap();
    let x = data.points.row(atom).to_vec();
    let index = NeighborIndex::new(data.points.clone()).unwrap();
    assert_eq!(lpca_lid(&index, &x, 20, ThresholdRule::default()).unwrap(), 0);
    assert!(matches!(mle_lid(&index, &x, 20), Err(Error::DuplicatePoint { .. })));
}

#[test]
fn twonn_on_square_and_helix() {
    let square = generate(&ManifoldSpec::new(ManifoldKind::UniformHypercube { d: 2 }), 10_000, 5).unwrap();
    let d = twonn_lid(&square.points).unwrap();
    assert!((d - 2.0 * 0.97).abs() < 0.1, "{d}");
    let helix = generate(&preset("helix_r3").unwrap(), 10_000, 6).unwrap();
    let d = twonn_lid(&helix.points).unwrap();
    assert!((d - 1.0).abs() < 0.05, "{d}");
}

#[test]
fn config_dispatch_and_csv() {
    let data = generate(&ManifoldSpec::new(ManifoldKind::UniformHypercube { d: 2 }), 500, 7).unwrap();
    let mut queries = data.points.select(Axis(0), &[0, 1, 2]);
    queries.row_mut(2).fill(0.5);
    let configs: Vec<BaselineConfig> = serde_json::from_str(
        r#"[{"method":"mle"},{"method":"twonn"},{"method":"twonn","local_k":30},{"method":"lpca","k":25}]"#,
    )
    .unwrap();
    assert_eq!(configs[0], BaselineConfig::Mle { k: 20 });
    for cfg in &configs {
        let out = cfg.estimate(&data, queries.view()).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|o| o.as_ref().is_ok_and(|v| (0.5..4.0).contains(v))), "{}: {out:?}", cfg.id());
    }
    let twonn = configs[1].estimate(&data, queries.view()).unwrap();
    assert_eq!(twonn[0], twonn[2]);
    assert!(BaselineConfig::Mle { k: 1 }.estimate(&data, queries.view()).is_err());

    let outcomes = vec![
        Ok(1.5),
        Err(QueryFailure {
            query_index: 1,
            reason: "dup".into(),
        }),
    ];
    let mut buf = Vec::new();
    write_estimates_csv("mle", &outcomes, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "query_index,d_hat,r2,method\n0,1.50000000e0,,mle\n1,,,mle\n"
    );
}
