mod common;

use common::{materialized_degrees, materialized_laplacian, uniform};
use proptest::prelude::*;
use scal::affinity::{build_affinity_median, degree_vector, scaled_input, AffinityMatrix};
use scal::data::{generate_synthetic, Shape};
use scal::landmarks::select_random;

#[test]
fn degree_trick_matches_materialized_m() {
    let w = uniform(50, 400, 1e-3, 1.0, 17);
    let deg = degree_vector(&AffinityMatrix::new(w.clone(), 1.0).unwrap()).unwrap();
    let oracle = materialized_degrees(&w);
    for (a, b) in deg.d.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-10 * b.abs());
    }
}

#[test]
fn scaled_gram_is_the_normalized_similarity() {
    let w = uniform(20, 100, 1e-3, 1.0, 3);
    let aff = AffinityMatrix::new(w.clone(), 1.0).unwrap();
    let s = scaled_input(&aff, &degree_vector(&aff).unwrap()).unwrap();
    let gram = s.s.t().dot(&s.s);
    let oracle = materialized_laplacian(&w);
    for (a, b) in gram.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-10);
    }
    assert!(s.s.iter().all(|&v| (0.0..1.0).contains(&v)));
}

#[test]
fn real_affinity_is_strictly_positive() {
    let ds = generate_synthetic(Shape::ConcentricRings, 600, 0.05, 2).unwrap();
    let lm = select_random(&ds, 40, 2).unwrap();
    let w = build_affinity_median(&ds, &lm).unwrap();
    assert!(w.w.iter().all(|&v| v > 0.0 && v <= 1.0));
    let deg = degree_vector(&w).unwrap();
    assert!(deg.d.iter().all(|&v| v > 0.0));
    assert!(deg.ws.iter().all(|&v| v > 0.0));
    // a landmark sits on its own source row
    for (k, &i) in lm.indices.as_ref().unwrap().iter().enumerate() {
        assert_eq!(w.w[[k, i]], 1.0);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let ds = generate_synthetic(Shape::TwoMoons, 2000, 0.05, 4).unwrap();
    let lm = select_random(&ds, 64, 4).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let w = build_affinity_median(&ds, &lm).unwrap();
                let s = scaled_input(&w, &degree_vector(&w).unwrap()).unwrap();
                let net = scal::autoencoder::init_network(&[64, 16, 8, 2, 8, 16, 64], 1).unwrap();
                let cfg = scal::autoencoder::TrainConfig {
                    epochs: 1,
                    ..Default::default()
                };
                let (_, hist) = scal::autoencoder::train(net, &s, &cfg).unwrap();
                (w, s, hist[0])
            })
    };
    let (w1, s1, l1) = run(1);
    let (w4, s4, l4) = run(4);
    assert_eq!(w1, w4);
    assert_eq!(s1, s4);
    assert!((l1 - l4).abs() <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn factorization_holds_for_small_instances(p in 1usize..30, n in 2usize..200, seed in any::<u64>()) {
        let w = uniform(p, n, 1e-4, 1.0, seed);
        let aff = AffinityMatrix::new(w.clone(), 1.0).unwrap();
        let deg = degree_vector(&aff).unwrap();
        let s = scaled_input(&aff, &deg).unwrap();
        let gram = s.s.t().dot(&s.s);
        let oracle = materialized_laplacian(&w);
        for (a, b) in gram.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
