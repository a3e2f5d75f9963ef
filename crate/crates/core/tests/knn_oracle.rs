//! Exact kNN against a brute-force sort written independently of the
//! library: full pairwise distance list, sorted by (distance, key string).

use divex_core::catalog::testing::snapshot_with_layout;
use divex_core::catalog::{CatalogSnapshot, Granularity, ItemKey};
use divex_core::explore::{FilterCriteria, FilterUnit};
use divex_core::features::{ConceptDetection, FeatureKind, FeatureStore, FeatureVector};
use divex_core::search::{distance, knn, Measure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VIDEOS: usize = 10;
const PER_VIDEO: u32 = 100;

/// Quantized random vector valid for `kind`; coarse steps make exact
/// distance ties common so the tie-break is exercised.
fn random_vector(rng: &mut ChaCha8Rng, kind: FeatureKind) -> FeatureVector {
    let values = match kind {
        FeatureKind::Color => {
            let mut v = vec![0.0f32; 128];
            for _ in 0..4 {
                v[rng.random_range(0..6)] += 0.25;
            }
            v
        }
        FeatureKind::Texture => {
            let mut v = vec![0.0f32; 80];
            for block in v.chunks_mut(5) {
                if rng.random_bool(0.8) {
                    block[rng.random_range(0..5)] += 0.5;
                    block[rng.random_range(0..5)] += 0.5;
                }
            }
            v
        }
        FeatureKind::Motion => (0..16)
            .map(|_| rng.random_range(0..4) as f32 / 4.0)
            .collect(),
        FeatureKind::Concept => unreachable!("concept vectors come from detections"),
    };
    FeatureVector::new(kind, values).unwrap()
}

/// 1000 one-frame shots and 1000 samples: ten 100 s videos at 1 fps.
fn corpus(seed: u64) -> CatalogSnapshot {
    let lengths = vec![1u32; PER_VIDEO as usize];
    let ids: Vec<String> = (0..VIDEOS).map(|i| format!("vid{i:02}")).collect();
    let layout: Vec<_> = ids
        .iter()
        .map(|id| (id.as_str(), 1.0, f64::from(PER_VIDEO), lengths.as_slice()))
        .collect();
    let snap = snapshot_with_layout(&layout);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = FeatureStore::new();
    let mut detections = Vec::new();
    for id in &ids {
        for n in 0..PER_VIDEO {
            for key in [ItemKey::shot(id, n), ItemKey::frame(id, n)] {
                for kind in [
                    FeatureKind::Color,
                    FeatureKind::Texture,
                    FeatureKind::Motion,
                ] {
                    store.insert(key.clone(), random_vector(&mut rng, kind));
                }
            }
            for source in ["netA", "netB"] {
                for c in 0..6 {
                    if rng.random_bool(0.3) {
                        detections.push(ConceptDetection {
                            item: ItemKey::frame(id, n),
                            source: source.into(),
                            concept_id: format!("c{c}"),
                            score: f64::from(rng.random_range(1..=4u8)) / 4.0,
                        });
                    }
                }
            }
        }
    }
    snap.with_features(store)
        .with_frame_detections(detections)
        .unwrap()
}

fn oracle_distance(a: &[f32], b: &[f32], kind: FeatureKind) -> f64 {
    let a: Vec<f64> = a.iter().map(|&x| f64::from(x)).collect();
    let b: Vec<f64> = b.iter().map(|&x| f64::from(x)).collect();
    match kind {
        FeatureKind::Color | FeatureKind::Texture => {
            let mut s = 0.0;
            for i in 0..a.len() {
                s += (a[i] - b[i]).abs();
            }
            s
        }
        FeatureKind::Motion => {
            let mut s = 0.0;
            for i in 0..a.len() {
                s += (a[i] - b[i]) * (a[i] - b[i]);
            }
            s.sqrt()
        }
        FeatureKind::Concept => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for i in 0..a.len() {
                dot += a[i] * b[i];
                na += a[i] * a[i];
                nb += b[i] * b[i];
            }
            if na == 0.0 && nb == 0.0 {
                0.0
            } else if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                (1.0 - dot / (na * nb).sqrt()).max(0.0)
            }
        }
    }
}

fn brute_force(
    snap: &CatalogSnapshot,
    query: &ItemKey,
    kind: FeatureKind,
    granularity: Granularity,
    k: usize,
    admit: impl Fn(&ItemKey) -> bool,
) -> Vec<(String, f64)> {
    let qv = snap.features().get(query, kind).unwrap().values().to_vec();
    let mut all: Vec<(String, f64)> = snap
        .features()
        .iter(kind)
        .filter(|(key, _)| key.granularity() == granularity && *key != query && admit(key))
        .map(|(key, v)| (key.to_string(), oracle_distance(&qv, v.values(), kind)))
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn top10_matches_brute_force_for_every_measure_and_granularity() {
    let snap = corpus(11);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for kind in FeatureKind::ALL {
        for granularity in [Granularity::Shot, Granularity::Frame] {
            assert_eq!(
                snap.features().iter_granularity(kind, granularity).count(),
                1000
            );
            for _ in 0..25 {
                let v = format!("vid{:02}", rng.random_range(0..VIDEOS));
                let n = rng.random_range(0..PER_VIDEO);
                let q = ItemKey::new(granularity, &v, n);
                let got: Vec<(String, f64)> =
                    knn(&snap, &q, Measure::for_kind(kind), granularity, 10, None)
                        .unwrap()
                        .into_iter()
                        .map(|h| (h.item.to_string(), h.score))
                        .collect();
                assert_eq!(
                    got,
                    brute_force(&snap, &q, kind, granularity, 10, |_| true),
                    "{kind} {q}"
                );
            }
        }
    }
}

pub fn unbounded_k_is_a_total_order() {
    let snap = corpus(3);
    let q = ItemKey::shot("vid04", 17);
    let hits = knn(
        &snap,
        &q,
        Measure::for_kind(FeatureKind::Motion),
        Granularity::Shot,
        usize::MAX,
        None,
    )
    .unwrap();
    assert_eq!(hits.len(), 999);
    assert!(hits
        .windows(2)
        .all(|w| (w[0].score, &w[0].item) < (w[1].score, &w[1].item)));
    assert!(hits.iter().all(|h| h.item != q));
}

pub fn restricted_search_matches_filtered_oracle() {
    let snap = corpus(5);
    let criteria = FilterCriteria {
        concepts: vec!["c1".into(), "c4".into(), "c5".into()],
        unit: FilterUnit::Segment,
        segment_sec: 10.0,
        tau: 1.0,
        ..Default::default()
    };
    let admitted: std::collections::HashSet<(String, u32)> =
        divex_core::explore::filter_videos(&snap, &criteria)
            .unwrap()
            .into_iter()
            .map(|h| (h.video_id, h.seg_index.unwrap()))
            .collect();
    assert!(!admitted.is_empty() && admitted.len() < 100);
    let q = ItemKey::frame("vid00", 3);
    for kind in FeatureKind::ALL {
        let got: Vec<(String, f64)> = knn(
            &snap,
            &q,
            Measure::for_kind(kind),
            Granularity::Frame,
            20,
            Some(&criteria),
        )
        .unwrap()
        .into_iter()
        .map(|h| (h.item.to_string(), h.score))
        .collect();
        // Frame ordinal = tSec, and 1 fps shots start at their ordinal too.
        let want = brute_force(&snap, &q, kind, Granularity::Frame, 20, |k| {
            admitted.contains(&(k.video_id().to_string(), k.ordinal() / 10))
        });
        assert_eq!(got, want, "{kind}");
    }
}

fn arb_vector(kind: FeatureKind) -> BoxedStrategy<FeatureVector> {
    let dims = match kind {
        FeatureKind::Color => 128,
        FeatureKind::Texture => 80,
        FeatureKind::Motion => 16,
        FeatureKind::Concept => 12,
    };
    proptest::collection::vec(0.0f32..=1.0, dims)
        .prop_map(move |mut v| {
            match kind {
                FeatureKind::Color => {
                    v[0] += 1e-3;
                    let s: f32 = v.iter().sum();
                    v.iter_mut().for_each(|x| *x /= s);
                    let rest: f64 = v[1..].iter().map(|&x| f64::from(x)).sum();
                    v[0] = (1.0 - rest) as f32;
                }
                FeatureKind::Texture => {
                    for b in v.chunks_mut(5) {
                        let s: f32 = b.iter().sum();
                        if s > 0.0 {
                            b.iter_mut().for_each(|x| *x /= s);
                        }
                    }
                }
                _ => {}
            }
            FeatureVector::new(kind, v).unwrap()
        })
        .boxed()
}

fn arb_pair() -> impl Strategy<Value = (FeatureVector, FeatureVector)> {
    prop_oneof![
        Just(FeatureKind::Concept),
        Just(FeatureKind::Color),
        Just(FeatureKind::Texture),
        Just(FeatureKind::Motion)
    ]
    .prop_flat_map(|k| (arb_vector(k), arb_vector(k)))
}

#[test]
fn top10_matches_brute_force_for_every_measure_and_granularity_test() {
    top10_matches_brute_force_for_every_measure_and_granularity();
}

#[test]
fn unbounded_k_is_a_total_order_test() {
    unbounded_k_is_a_total_order();
}

#[test]
fn restricted_search_matches_filtered_oracle_test() {
    restricted_search_matches_filtered_oracle();
}

proptest! {
    #[test]
    fn distance_is_symmetric_nonnegative_and_zero_on_self((a, b) in arb_pair()) {
        let m = Measure::for_kind(a.kind());
        let ab = distance(&a, &b, m).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, distance(&b, &a, m).unwrap());
        prop_assert_eq!(distance(&a, &a, m).unwrap(), 0.0);
    }
}
