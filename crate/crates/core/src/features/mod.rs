//! Per-item descriptors and precomputed deep-concept scores.

mod concepts;
mod descriptors;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{Granularity, ItemKey};

pub use concepts::{
    aggregate_shot_concepts, layout_concept_vector, load_concept_scores, vocabularies,
    ConceptDetection, ConceptSpace, ShotConcepts, Vocabularies, CONCEPT_CSV_HEADER,
};
pub use descriptors::{
    color_histogram, hsv_bin, motion_descriptor, rgb_to_hsv, texture_descriptor, COLOR_DIMS,
    EDGE_ACTIVITY_THRESHOLD, MOTION_DIMS, TEXTURE_DIMS,
};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("frame is {width}x{height}, texture needs at least 8x8")]
    FrameTooSmall { width: u32, height: u32 },
    #[error("frame is {}x{}, expected {}x{}", found.0, found.1, expected.0, expected.1)]
    MismatchedDimensions {
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("motion descriptor needs at least one frame")]
    EmptyShot,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header must be exactly {expected:?}, found {found:?}")]
    BadHeader {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },
    #[error("{path}, row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{path}, row {row}: unknown video {video_id:?}")]
    UnknownVideo {
        path: PathBuf,
        row: u64,
        video_id: String,
    },
    #[error("{path}, row {row}: tSec {t_sec} is not a sample time of video {video_id:?}")]
    NotASample {
        path: PathBuf,
        row: u64,
        video_id: String,
        t_sec: String,
    },
    #[error("{path}, row {row}: score {score} outside [0, 1]")]
    ScoreOutOfRange {
        path: PathBuf,
        row: u64,
        score: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Concept,
    Color,
    Texture,
    Motion,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Concept,
        FeatureKind::Color,
        FeatureKind::Texture,
        FeatureKind::Motion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Concept => "concept",
            FeatureKind::Color => "color",
            FeatureKind::Texture => "texture",
            FeatureKind::Motion => "motion",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!("unknown measure {s:?}, expected concept, color, texture or motion")
            })
    }
}

/// A fixed-dimension descriptor tagged with the measure it belongs to.
///
/// Values are single precision: their shortest decimal form never needs
/// more than nine significant digits, which is what the feature store file
/// promises.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    kind: FeatureKind,
    values: Vec<f32>,
}

impl FeatureVector {
    /// Builds a vector after checking the per-kind value invariants.
    pub fn new(kind: FeatureKind, values: Vec<f32>) -> Result<Self, String> {
        let v = FeatureVector { kind, values };
        v.validate()?;
        Ok(v)
    }

    pub(crate) fn new_unchecked(kind: FeatureKind, values: Vec<f32>) -> Self {
        FeatureVector { kind, values }
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("feature vector must have at least one dimension".into());
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(format!("{} vector holds invalid value {v}", self.kind));
        }
        let expect_dims = |d: usize| {
            if self.values.len() == d {
                Ok(())
            } else {
                Err(format!(
                    "{} vector must have {d} dims, has {}",
                    self.kind,
                    self.values.len()
                ))
            }
        };
        let unit_mass = |vals: &[f32]| {
            let s: f64 = vals.iter().map(|&v| f64::from(v)).sum();
            (s - 1.0).abs() <= 1e-6
        };
        match self.kind {
            FeatureKind::Color => {
                expect_dims(COLOR_DIMS)?;
                if !unit_mass(&self.values) {
                    return Err("color histogram must sum to 1".into());
                }
            }
            FeatureKind::Texture => {
                expect_dims(TEXTURE_DIMS)?;
                for block in self.values.chunks(5) {
                    if !(unit_mass(block) || block.iter().all(|&v| v == 0.0)) {
                        return Err("texture block must be L1-normalized or all-zero".into());
                    }
                }
            }
            FeatureKind::Motion => {
                expect_dims(MOTION_DIMS)?;
                if self.values.iter().any(|&v| v > 1.0) {
                    return Err("motion values must lie in [0, 1]".into());
                }
            }
            FeatureKind::Concept => {
                if self.values.iter().any(|&v| v > 1.0) {
                    return Err("concept scores must lie in [0, 1]".into());
                }
            }
        }
        Ok(())
    }
}

/// One line of `features.jsonl`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub item: ItemKey,
    pub kind: FeatureKind,
    pub dims: usize,
    pub values: Vec<f32>,
}

/// Vectors of every kind, keyed by item.
#[derive(Clone, Debug, Default)]
pub struct FeatureStore {
    by_kind: [BTreeMap<ItemKey, FeatureVector>; 4],
}

impl FeatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the vector of `key` for the vector's kind.
    pub fn insert(&mut self, key: ItemKey, vector: FeatureVector) {
        self.by_kind[vector.kind.slot()].insert(key, vector);
    }

    pub fn get(&self, key: &ItemKey, kind: FeatureKind) -> Option<&FeatureVector> {
        self.by_kind[kind.slot()].get(key)
    }

    /// All vectors of one kind in canonical key order.
    pub fn iter(&self, kind: FeatureKind) -> impl Iterator<Item = (&ItemKey, &FeatureVector)> {
        self.by_kind[kind.slot()].iter()
    }

    pub fn iter_granularity(
        &self,
        kind: FeatureKind,
        granularity: Granularity,
    ) -> impl Iterator<Item = (&ItemKey, &FeatureVector)> {
        self.iter(kind)
            .filter(move |(k, _)| k.granularity() == granularity)
    }

    pub fn len(&self, kind: FeatureKind) -> usize {
        self.by_kind[kind.slot()].len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_kind.iter().all(BTreeMap::is_empty)
    }

    pub fn clear_kind(&mut self, kind: FeatureKind) {
        self.by_kind[kind.slot()].clear();
    }

    /// Records for the persisted store: hand-crafted kinds only, ordered by
    /// item then kind. Concept vectors are derived from the concept index.
    pub fn records(&self) -> Vec<FeatureRecord> {
        let mut out = Vec::new();
        for kind in [
            FeatureKind::Color,
            FeatureKind::Texture,
            FeatureKind::Motion,
        ] {
            out.extend(self.iter(kind).map(|(k, v)| FeatureRecord {
                item: k.clone(),
                kind,
                dims: v.dims(),
                values: v.values.clone(),
            }));
        }
        out.sort_by(|a, b| a.item.cmp(&b.item).then(a.kind.cmp(&b.kind)));
        out
    }
}
