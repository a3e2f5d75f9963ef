use std::collections::BTreeSet;

use divex_core::catalog::ItemKey;
use divex_core::features::{FeatureKind, FeatureVector};
use divex_core::som::{
    assign_unique_cells, bmu, is_bijective, order_layout, quantization_error, train_som, GridShape,
    LayoutItem, LayoutMode, SomGrid, SomParams, SomTrainer,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn concept(values: Vec<f32>) -> FeatureVector {
    FeatureVector::new(FeatureKind::Concept, values).unwrap()
}

fn keyed(vectors: Vec<FeatureVector>) -> Vec<(ItemKey, FeatureVector)> {
    vectors
        .into_iter()
        .enumerate()
        .map(|(i, v)| (ItemKey::shot(format!("v{}", i % 7), i as u32), v))
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn single_point_converges_monotonically() {
    let v = concept(vec![0.3, 0.7, 0.1]);
    // Start every unit 0.17 away from v. The error shrinks by the product of
    // (1 - eta(t)) over the schedule, about 0.0023, so it ends near 4e-4.
    for shape in [
        GridShape {
            width: 1,
            height: 1,
        },
        GridShape {
            width: 3,
            height: 2,
        },
    ] {
        let weights = vec![vec![0.4, 0.6, 0.2]; shape.cells()];
        let grid = SomGrid::from_weights(shape, weights, FeatureKind::Concept).unwrap();
        let mut trainer =
            SomTrainer::with_initial_grid(grid, std::slice::from_ref(&v), SomParams::default())
                .unwrap();
        let mut prev = quantization_error(trainer.grid(), std::slice::from_ref(&v)).unwrap();
        while trainer.step_epoch() {
            let qe = quantization_error(trainer.grid(), std::slice::from_ref(&v)).unwrap();
            assert!(qe <= prev, "epoch {}: {qe} > {prev}", trainer.epoch());
            prev = qe;
        }
        assert!(prev < 1e-3, "{shape:?}: final error {prev}");
    }
    let grid = train_som(&keyed(vec![v.clone()]), SomParams::default()).unwrap();
    assert!(quantization_error(&grid, &[v]).unwrap() < 1e-3);
}

fn random_instance(rng: &mut ChaCha8Rng) -> Vec<(ItemKey, FeatureVector)> {
    let n = rng.random_range(1..=64);
    let dims = rng.random_range(1..=10);
    keyed(
        (0..n)
            .map(|_| {
                concept(
                    (0..dims)
                        .map(|_| f32::from(rng.random_range(0..4u8)) / 4.0)
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn same_seed_same_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let items = random_instance(&mut rng);
        let seed = rng.random();
        let a = train_som(&items, SomParams::with_seed(seed)).unwrap();
        let b = train_som(&items, SomParams::with_seed(seed)).unwrap();
        for u in 0..a.shape().cells() {
            assert_eq!(a.unit(u), b.unit(u));
        }
        assert_eq!(
            assign_unique_cells(&a, &items).unwrap(),
            assign_unique_cells(&b, &items).unwrap()
        );
    }
}

pub fn layouts_are_bijective_on_200_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for case in 0..200 {
        let items = random_instance(&mut rng);
        let keys: Vec<ItemKey> = items.iter().map(|(k, _)| k.clone()).collect();
        let shape = GridShape::for_items(items.len());
        let grid = train_som(&items, SomParams::with_seed(case)).unwrap();
        assert_eq!(grid.shape(), shape);
        assert!(
            is_bijective(&assign_unique_cells(&grid, &items).unwrap(), &keys),
            "case {case}"
        );
        let scored: Vec<LayoutItem> = items
            .iter()
            .map(|(k, v)| LayoutItem {
                key: k.clone(),
                score: f64::from(v.values()[0]),
            })
            .collect();
        for mode in [LayoutMode::Confidence, LayoutMode::Video] {
            assert!(
                is_bijective(&order_layout(&scored, mode, shape).unwrap(), &keys),
                "case {case} {mode:?}"
            );
        }
    }
}

pub fn two_clusters_get_disjoint_cells() {
    let mut separated = 0;
    for run in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let dims = 8;
        let mut vectors = Vec::new();
        for center in [0.2, 0.8] {
            for _ in 0..20 {
                let v: Vec<f32> = (0..dims)
                    .map(|_| (center + 0.02 * gaussian(&mut rng)).clamp(0.0, 1.0) as f32)
                    .collect();
                vectors.push(concept(v));
            }
        }
        let items = keyed(vectors);
        let grid = train_som(&items, SomParams::with_seed(run)).unwrap();
        let cells = |range: std::ops::Range<usize>| -> BTreeSet<usize> {
            items[range]
                .iter()
                .map(|(_, v)| bmu(&grid, v).unwrap())
                .collect()
        };
        if cells(0..20).is_disjoint(&cells(20..40)) {
            separated += 1;
        }
    }
    assert!(separated >= 18, "separated in {separated}/20 runs");
}

#[test]
fn single_point_converges_monotonically_test() {
    single_point_converges_monotonically();
}

#[test]
fn same_seed_same_layout_test() {
    same_seed_same_layout();
}

#[test]
fn layouts_are_bijective_on_200_instances_test() {
    layouts_are_bijective_on_200_instances();
}

#[test]
fn two_clusters_get_disjoint_cells_test() {
    two_clusters_get_disjoint_cells();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_input_gives_a_bijection(
        raw in proptest::collection::vec(proptest::collection::vec(0.0f32..=1.0, 3), 1..40),
        seed in any::<u64>(),
    ) {
        let items = keyed(raw.into_iter().map(concept).collect());
        let keys: Vec<ItemKey> = items.iter().map(|(k, _)| k.clone()).collect();
        let grid = train_som(&items, SomParams { epochs: 5, ..SomParams::with_seed(seed) }).unwrap();
        prop_assert!(is_bijective(&assign_unique_cells(&grid, &items).unwrap(), &keys));
    }

    #[test]
    fn quantization_error_matches_recomputation(
        raw in proptest::collection::vec(proptest::collection::vec(0.0f32..=1.0, 4), 1..20),
        seed in any::<u64>(),
    ) {
        let vectors: Vec<FeatureVector> = raw.into_iter().map(concept).collect();
        let grid = train_som(&keyed(vectors.clone()), SomParams { epochs: 3, ..SomParams::with_seed(seed) }).unwrap();
        let mut total = 0.0;
        for v in &vectors {
            let best = (0..grid.shape().cells())
                .map(|u| {
                    grid.unit(u)
                        .iter()
                        .zip(v.values())
                        .map(|(w, &x)| (w - f64::from(x)).powi(2))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            total += best.sqrt();
        }
        let expected = total / vectors.len() as f64;
        prop_assert!((quantization_error(&grid, &vectors).unwrap() - expected).abs() < 1e-12);
    }
}
