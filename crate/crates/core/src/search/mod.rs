//! Query core: distances, exact k-nearest-neighbour search, the inverted
//! concept index and metadata search.

mod index;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogError, CatalogSnapshot, Granularity, ItemKey};
use crate::explore::{candidate_filter, ExploreError, FilterCriteria};
use crate::features::{FeatureKind, FeatureVector};

pub use index::{
    concept_query, normalize_tokens, ConceptIndex, ConceptQuery, ConceptQueryResult, Posting,
};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("{item} has no {kind} feature")]
    MissingFeature { item: ItemKey, kind: FeatureKind },
    #[error("cannot compare vectors: {0}")]
    Mismatch(String),
    #[error("invalid parameter {param}: {message}")]
    InvalidArgument {
        param: &'static str,
        message: String,
    },
    #[error("unknown source {0:?}")]
    UnknownSource(String),
    #[error(transparent)]
    Filter(#[from] ExploreError),
}

impl SearchError {
    pub(crate) fn invalid(param: &'static str, message: impl Into<String>) -> Self {
        SearchError::InvalidArgument {
            param,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "cosineDistance")]
    CosineDistance,
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l2")]
    L2,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::CosineDistance => "cosineDistance",
            Metric::L1 => "l1",
            Metric::L2 => "l2",
        })
    }
}

/// A feature kind with its fixed metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Measure {
    kind: FeatureKind,
    metric: Metric,
}

impl Measure {
    pub fn for_kind(kind: FeatureKind) -> Self {
        let metric = match kind {
            FeatureKind::Concept => Metric::CosineDistance,
            FeatureKind::Color | FeatureKind::Texture => Metric::L1,
            FeatureKind::Motion => Metric::L2,
        };
        Measure { kind, metric }
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(Measure::for_kind)
    }
}

/// One ranked result. For similarity search `score` is a distance (lower
/// is better); for concept queries it is a summed confidence (higher is better).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub item: ItemKey,
    pub score: f64,
}

/// Distance between two vectors of the measure's kind.
///
/// Cosine distance is `1 - a.b / (|a||b|)`, defined as 0 for two zero
/// vectors and 1 when exactly one of them is zero.
pub fn distance(a: &FeatureVector, b: &FeatureVector, m: Measure) -> Result<f64, SearchError> {
    if a.kind() != m.kind || b.kind() != m.kind {
        return Err(SearchError::Mismatch(format!(
            "measure {} applied to {} and {} vectors",
            m.kind,
            a.kind(),
            b.kind()
        )));
    }
    if a.dims() != b.dims() {
        return Err(SearchError::Mismatch(format!(
            "dimensions differ: {} vs {}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(raw_distance(a.values(), b.values(), m.metric))
}

fn raw_distance(a: &[f32], b: &[f32], metric: Metric) -> f64 {
    let pairs = a.iter().zip(b).map(|(&x, &y)| (f64::from(x), f64::from(y)));
    match metric {
        Metric::L1 => pairs.map(|(x, y)| (x - y).abs()).sum(),
        Metric::L2 => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        Metric::CosineDistance => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for (x, y) in pairs {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            match (na == 0.0, nb == 0.0) {
                (true, true) => 0.0,
                (true, false) | (false, true) => 1.0,
                _ => (1.0 - dot / (na * nb).sqrt()).max(0.0),
            }
        }
    }
}

/// Exact top-`k` scan: ascending distance, ties by canonical key.
pub fn rank_by_distance<'a>(
    query: &FeatureVector,
    candidates: impl IntoIterator<Item = (&'a ItemKey, &'a FeatureVector)>,
    measure: Measure,
    k: usize,
) -> Result<Vec<RankedHit>, SearchError> {
    let mut scored = Vec::new();
    for (key, v) in candidates {
        scored.push((distance(query, v, measure)?, key));
    }
    let by_rank =
        |a: &(f64, &ItemKey), b: &(f64, &ItemKey)| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
    Ok(scored
        .into_iter()
        .map(|(score, key)| RankedHit {
            item: key.clone(),
            score,
        })
        .collect())
}

/// Similarity search around `query` over every item of `granularity` that
/// has a vector of the measure's kind, the query itself excluded.
///
/// When `restrict` is given, candidates must lie in a video (or segment)
/// admitted by the filter.
pub fn knn(
    snapshot: &CatalogSnapshot,
    query: &ItemKey,
    measure: Measure,
    granularity: Granularity,
    k: usize,
    restrict: Option<&FilterCriteria>,
) -> Result<Vec<RankedHit>, SearchError> {
    if k == 0 {
        return Err(SearchError::invalid("k", "must be positive"));
    }
    snapshot.resolve(query)?;
    let qv = snapshot
        .features()
        .get(query, measure.kind)
        .ok_or_else(|| SearchError::MissingFeature {
            item: query.clone(),
            kind: measure.kind,
        })?;
    let filter = restrict
        .map(|c| candidate_filter(snapshot, c))
        .transpose()?;
    let candidates = snapshot
        .features()
        .iter_granularity(measure.kind, granularity)
        .filter(|(key, _)| *key != query)
        .filter(|(key, _)| match &filter {
            None => true,
            Some(f) => snapshot
                .resolve(key)
                .is_ok_and(|r| f.admits(r.video, r.time_sec())),
        });
    rank_by_distance(qv, candidates, measure, k)
}

/// Case-insensitive substring search over video titles and descriptions,
/// returning video ids in ascending order.
pub fn metadata_query(
    snapshot: &CatalogSnapshot,
    text: &str,
    k: usize,
) -> Result<Vec<String>, SearchError> {
    let needle = text.trim().to_lowercase();
    if needle.is_empty() {
        return Err(SearchError::invalid("q", "search text must be non-empty"));
    }
    let mut ids: Vec<String> = snapshot
        .videos()
        .map(|e| e.record())
        .filter(|v| {
            v.title.to_lowercase().contains(&needle)
                || v.description.to_lowercase().contains(&needle)
        })
        .map(|v| v.video_id.clone())
        .collect();
    ids.sort();
    ids.truncate(k);
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::testing::{snapshot_from_videos, video};
    use crate::features::FeatureStore;
    use proptest::prelude::*;

    fn fv(kind: FeatureKind, values: &[f32]) -> FeatureVector {
        FeatureVector::new_unchecked(kind, values.to_vec())
    }

    #[test]
    fn measure_pairing_is_fixed() {
        assert_eq!(
            Measure::for_kind(FeatureKind::Concept).metric(),
            Metric::CosineDistance
        );
        assert_eq!(Measure::for_kind(FeatureKind::Color).metric(), Metric::L1);
        assert_eq!(Measure::for_kind(FeatureKind::Texture).metric(), Metric::L1);
        assert_eq!(Measure::for_kind(FeatureKind::Motion).metric(), Metric::L2);
    }

    #[test]
    fn identical_vectors_are_at_zero() {
        for kind in FeatureKind::ALL {
            let v = fv(kind, &[0.1, 0.7, 0.2, 0.3]);
            assert_eq!(distance(&v, &v, Measure::for_kind(kind)).unwrap(), 0.0);
        }
    }

    #[test]
    fn cosine_cases() {
        let m = Measure::for_kind(FeatureKind::Concept);
        let d = |a: &[f32], b: &[f32]| {
            distance(
                &fv(FeatureKind::Concept, a),
                &fv(FeatureKind::Concept, b),
                m,
            )
            .unwrap()
        };
        assert_eq!(d(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(d(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(d(&[0.0, 0.0], &[0.3, 0.0]), 1.0);
        assert_eq!(d(&[0.5, 0.5], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn l1_on_disjoint_histograms() {
        let mut a = vec![0.0f32; 128];
        let mut b = vec![0.0f32; 128];
        a[0] = 0.5;
        a[1] = 0.5;
        b[2] = 0.5;
        b[3] = 0.5;
        let m = Measure::for_kind(FeatureKind::Color);
        assert_eq!(
            distance(&fv(FeatureKind::Color, &a), &fv(FeatureKind::Color, &b), m).unwrap(),
            2.0
        );
    }

    #[test]
    fn mismatches_are_errors() {
        let m = Measure::for_kind(FeatureKind::Motion);
        let a = fv(FeatureKind::Motion, &[0.0, 1.0]);
        assert!(distance(&a, &fv(FeatureKind::Motion, &[0.0]), m).is_err());
        assert!(distance(&a, &fv(FeatureKind::Color, &[0.0, 1.0]), m).is_err());
        assert!(distance(&a, &a, Measure::for_kind(FeatureKind::Color)).is_err());
    }

    /// Three one-second, ten-frame videos x1, x2, x3 with one shot each.
    fn three_items() -> CatalogSnapshot {
        let videos = ["x1", "x2", "x3"]
            .iter()
            .map(|id| (video(id, 10.0, 1.0, "2010-01-01"), vec![10]))
            .collect();
        let mut store = FeatureStore::new();
        for (id, v) in [("x1", [1.0, 0.0]), ("x2", [0.0, 1.0]), ("x3", [1.0, 0.0])] {
            store.insert(ItemKey::shot(id, 0), fv(FeatureKind::Motion, &v));
        }
        snapshot_from_videos(videos).with_features(store)
    }

    #[test]
    fn knn_small_example() {
        let snap = three_items();
        let m = Measure::for_kind(FeatureKind::Motion);
        let hits = knn(
            &snap,
            &ItemKey::shot("x1", 0),
            m,
            Granularity::Shot,
            2,
            None,
        )
        .unwrap();
        assert_eq!(hits[0].item.as_str(), "v:x3/s:0");
        assert_eq!(hits[0].score, 0.0);
        assert_eq!(hits[1].item.as_str(), "v:x2/s:0");
        assert_eq!(hits[1].score, 2f64.sqrt());

        let all = knn(
            &snap,
            &ItemKey::shot("x1", 0),
            m,
            Granularity::Shot,
            50,
            None,
        )
        .unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn knn_errors() {
        let snap = three_items();
        let m = Measure::for_kind(FeatureKind::Motion);
        assert!(matches!(
            knn(
                &snap,
                &ItemKey::shot("zz", 0),
                m,
                Granularity::Shot,
                2,
                None
            ),
            Err(SearchError::Catalog(CatalogError::UnknownVideo { .. }))
        ));
        assert!(matches!(
            knn(
                &snap,
                &ItemKey::frame("x1", 0),
                m,
                Granularity::Shot,
                2,
                None
            ),
            Err(SearchError::MissingFeature { .. })
        ));
        assert!(matches!(
            knn(
                &snap,
                &ItemKey::shot("x1", 0),
                Measure::for_kind(FeatureKind::Color),
                Granularity::Shot,
                2,
                None
            ),
            Err(SearchError::MissingFeature { .. })
        ));
        assert!(knn(
            &snap,
            &ItemKey::shot("x1", 0),
            m,
            Granularity::Shot,
            0,
            None
        )
        .is_err());
    }

    #[test]
    fn metadata_search_is_case_insensitive() {
        let mut v1 = video("v1", 10.0, 1.0, "2010-01-01");
        v1.title = "City traffic".into();
        let mut v2 = video("v2", 10.0, 1.0, "2010-01-01");
        v2.title = "Beach day".into();
        let mut v3 = video("v3", 10.0, 1.0, "2010-01-01");
        v3.description = "sunset at the beach".into();
        let snap = snapshot_from_videos(vec![(v3, vec![10]), (v2, vec![10]), (v1, vec![10])]);
        assert_eq!(metadata_query(&snap, "beach", 10).unwrap(), ["v2", "v3"]);
        assert_eq!(metadata_query(&snap, "BEACH", 10).unwrap(), ["v2", "v3"]);
        assert_eq!(metadata_query(&snap, "BEACH", 1).unwrap(), ["v2"]);
        assert!(metadata_query(&snap, "mountain", 10).unwrap().is_empty());
        assert!(metadata_query(&snap, "  ", 10).is_err());
    }

    proptest! {
        #[test]
        fn distance_is_symmetric_and_nonnegative(
            a in proptest::collection::vec(0.0f32..1.0, 8),
            b in proptest::collection::vec(0.0f32..1.0, 8),
            kind_idx in 0usize..4,
        ) {
            let kind = FeatureKind::ALL[kind_idx];
            let m = Measure::for_kind(kind);
            let (va, vb) = (fv(kind, &a), fv(kind, &b));
            let ab = distance(&va, &vb, m).unwrap();
            let ba = distance(&vb, &va, m).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(distance(&va, &va, m).unwrap(), 0.0);
        }
    }
}
