use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhbb_core::sampling::{draw_batch, draw_uniform_subset, draw_weighted_multiset, stream};
use rhbb_core::{Dataset, Distribution, Example};

fn dataset_from(rows: &[(Vec<f64>, f64)]) -> Dataset {
    let d = rows.iter().map(|r| r.0.len()).max().unwrap_or(1).max(1);
    let examples = rows
        .iter()
        .map(|(vals, label)| {
            let idx: Vec<usize> = (0..vals.len()).collect();
            Example::new(idx, vals.clone(), *label).unwrap()
        })
        .collect();
    Dataset::new(d, examples).unwrap()
}

fn rows_strategy() -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec(
        (prop::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], 0..6), prop_oneof![Just(1.0), Just(-1.0)]),
        1..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_builder_sums_to_one(rows in rows_strategy(), tau in 0.0f64..4.0) {
        let data = dataset_from(&rows);
        let builders = [
            Distribution::uniform(data.len()),
            Distribution::option1(&data, tau),
            Distribution::option2(&data, tau),
        ];
        for q in builders.into_iter().flatten() {
            let total: f64 = q.probs().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12, "{total}");
            prop_assert!(q.probs().iter().all(|&p| p > 0.0));
            prop_assert_eq!(*q.cumulative().last().unwrap(), 1.0);
        }
    }

    #[test]
    fn tau_zero_is_uniform(rows in rows_strategy()) {
        let data = dataset_from(&rows);
        let u = Distribution::uniform(data.len()).unwrap();
        prop_assert_eq!(Distribution::option1(&data, 0.0).unwrap(), u.clone());
        prop_assert_eq!(Distribution::option2(&data, 0.0).unwrap(), u);
    }

    #[test]
    fn weights_from_positive_inputs(weights in prop::collection::vec(0.0f64..10.0, 1..30)) {
        match Distribution::from_weights(&weights) {
            Ok(q) => {
                let total: f64 = q.probs().iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                prop_assert!(q.probs().iter().all(|&p| p > 0.0));
            }
            Err(_) => prop_assert!(weights.iter().all(|&w| w == 0.0)),
        }
    }
}

#[test]
fn uniform_subsets_sorted_distinct_in_range() {
    let mut meta = ChaCha8Rng::seed_from_u64(0xabc);
    for case in 0..10_000u64 {
        let n = meta.gen_range(1..200usize);
        let b = meta.gen_range(1..=n);
        let mut rng = stream(case, 0);
        let s = draw_uniform_subset(&mut rng, n, b).unwrap();
        assert_eq!(s.len(), b);
        assert!(s.windows(2).all(|w| w[0] < w[1]), "n={n} b={b}: {s:?}");
        assert!(s.iter().all(|&i| i < n));
    }
}

#[test]
fn subset_draws_reject_bad_sizes() {
    let mut rng = stream(1, 0);
    assert!(draw_uniform_subset(&mut rng, 5, 0).is_err());
    assert!(draw_uniform_subset(&mut rng, 5, 6).is_err());
    assert_eq!(draw_uniform_subset(&mut rng, 5, 5).unwrap(), vec![0, 1, 2, 3, 4]);
}

#[test]
fn empirical_law_within_four_sigma() {
    let draws = 1_000_000usize;
    let weight_sets: [&[f64]; 3] =
        [&[1.0, 2.0, 3.0, 4.0], &[0.05, 1.0, 1.0, 3.0, 0.5, 2.0, 0.25, 7.0], &[1.0, 1.0, 1.0]];
    for (k, weights) in weight_sets.iter().enumerate() {
        let q = Distribution::from_weights(weights).unwrap();
        let mut rng = stream(77 + k as u64, 1);
        let mut counts = vec![0usize; q.len()];
        for i in draw_weighted_multiset(&mut rng, &q, draws) {
            counts[i] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = q.probs()[i];
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            let dev = (c as f64 - draws as f64 * p).abs();
            assert!(dev <= 4.0 * sigma, "set {k} index {i}: count {c}, expected {}", draws as f64 * p);
        }
    }
}

#[test]
fn uniform_subset_law_within_four_sigma() {
    // each index lands in a size-b subset with probability b/n
    let (n, b, trials) = (7usize, 3usize, 200_000usize);
    let mut rng = stream(5, 0);
    let mut counts = vec![0usize; n];
    for _ in 0..trials {
        for i in draw_uniform_subset(&mut rng, n, b).unwrap() {
            counts[i] += 1;
        }
    }
    let p = b as f64 / n as f64;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    for &c in &counts {
        assert!((c as f64 - trials as f64 * p).abs() <= 4.0 * sigma);
    }
}

#[test]
fn uniform_batches_take_the_subset_path() {
    let q = Distribution::uniform(10).unwrap();
    let mut a = stream(3, 2);
    let mut b = stream(3, 2);
    for _ in 0..50 {
        assert_eq!(draw_batch(&mut a, &q, 4).unwrap(), draw_uniform_subset(&mut b, 10, 4).unwrap());
    }
}

#[test]
fn streams_are_independent_and_reproducible() {
    let mut a = stream(9, 0);
    let mut b = stream(9, 1);
    let mut c = stream(9, 0);
    let xa: Vec<u64> = (0..8).map(|_| a.gen()).collect();
    let xb: Vec<u64> = (0..8).map(|_| b.gen()).collect();
    let xc: Vec<u64> = (0..8).map(|_| c.gen()).collect();
    assert_eq!(xa, xc);
    assert_ne!(xa, xb);
}
