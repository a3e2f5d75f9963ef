//! Exploration views: per-concept featuremaps and the combinable
//! video/segment filter.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogSnapshot, CreationTime, Granularity, ItemKey, VideoRecord};
use crate::features::FeatureKind;
use crate::search::Measure;
use crate::som::{
    assign_unique_cells, order_layout, train_som, GridLayout, GridShape, LayoutItem, LayoutMode,
    SomError, SomParams,
};

pub const DEFAULT_TOP_N: usize = 64;
pub const DEFAULT_SEGMENT_SEC: f64 = 30.0;
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum ExploreError {
    #[error("invalid parameter {param}: {message}")]
    InvalidCriteria {
        param: &'static str,
        message: String,
    },
    #[error("source {source_name:?} has no concept {concept:?}")]
    UnknownFeaturemap {
        concept: String,
        source_name: String,
    },
    #[error("{item} has no {kind} feature")]
    MissingFeature { item: ItemKey, kind: FeatureKind },
    #[error(transparent)]
    Som(#[from] SomError),
}

fn invalid(param: &'static str, message: impl Into<String>) -> ExploreError {
    ExploreError::InvalidCriteria {
        param,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeaturemapDescriptor {
    pub concept: String,
    pub source: String,
    pub item_count: usize,
    pub width: u32,
    pub height: u32,
}

/// One featuremap: its descriptor plus the cell layout. Serializes to the
/// `featuremaps.jsonl` line format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Featuremap {
    pub concept: String,
    pub source: String,
    pub item_count: usize,
    pub width: u32,
    pub height: u32,
    pub mode: LayoutMode,
    pub measure: FeatureKind,
    pub cells: Vec<crate::som::Cell>,
}

impl Featuremap {
    pub fn descriptor(&self) -> FeaturemapDescriptor {
        FeaturemapDescriptor {
            concept: self.concept.clone(),
            source: self.source.clone(),
            item_count: self.item_count,
            width: self.width,
            height: self.height,
        }
    }

    pub fn layout(&self) -> GridLayout {
        GridLayout {
            mode: self.mode,
            width: self.width,
            height: self.height,
            cells: self.cells.clone(),
        }
    }
}

/// One featuremap per source whose vocabulary holds the (lower-cased)
/// concept. An empty list means no source knows it.
pub fn maps_for_concept(
    snapshot: &CatalogSnapshot,
    concept: &str,
    top_n: usize,
) -> Vec<FeaturemapDescriptor> {
    let concept = concept.trim().to_lowercase();
    let index = snapshot.index();
    index
        .sources_for(&concept)
        .into_iter()
        .map(|source| {
            let n = index
                .postings(source, &concept, Granularity::Shot)
                .len()
                .min(top_n.max(1));
            let shape = GridShape::for_items(n);
            FeaturemapDescriptor {
                concept: concept.clone(),
                source: source.to_string(),
                item_count: n,
                width: shape.width,
                height: shape.height,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeaturemapRequest {
    pub concept: String,
    pub source: String,
    pub top_n: usize,
    pub organization: LayoutMode,
    pub measure: Measure,
    pub seed: u64,
}

impl FeaturemapRequest {
    pub fn new(concept: &str, source: &str) -> Self {
        FeaturemapRequest {
            concept: concept.to_string(),
            source: source.to_string(),
            top_n: DEFAULT_TOP_N,
            organization: LayoutMode::Som,
            measure: Measure::for_kind(FeatureKind::Concept),
            seed: 0,
        }
    }
}

/// Lays out the top-N shots for (concept, source) by shot-level score.
pub fn build_featuremap(
    snapshot: &CatalogSnapshot,
    req: &FeaturemapRequest,
) -> Result<Featuremap, ExploreError> {
    if req.top_n == 0 {
        return Err(invalid("topN", "must be positive"));
    }
    let concept = req.concept.trim().to_lowercase();
    let known = snapshot
        .index()
        .vocabularies()
        .get(&req.source)
        .is_some_and(|words| words.contains(&concept));
    if !known {
        return Err(ExploreError::UnknownFeaturemap {
            concept,
            source_name: req.source.clone(),
        });
    }
    let postings = snapshot
        .index()
        .postings(&req.source, &concept, Granularity::Shot);
    let top = &postings[..postings.len().min(req.top_n)];
    let shape = GridShape::for_items(top.len());
    let kind = req.measure.kind();

    let layout = match req.organization {
        LayoutMode::Som => {
            let mut items = Vec::with_capacity(top.len());
            for p in top {
                let v = snapshot.features().get(&p.item, kind).ok_or_else(|| {
                    ExploreError::MissingFeature {
                        item: p.item.clone(),
                        kind,
                    }
                })?;
                items.push((p.item.clone(), v.clone()));
            }
            let grid = train_som(&items, SomParams::with_seed(req.seed))?;
            assign_unique_cells(&grid, &items)?
        }
        mode => {
            let items: Vec<LayoutItem> = top
                .iter()
                .map(|p| LayoutItem {
                    key: p.item.clone(),
                    score: p.score,
                })
                .collect();
            order_layout(&items, mode, shape)?
        }
    };
    Ok(Featuremap {
        concept,
        source: req.source.clone(),
        item_count: top.len(),
        width: layout.width,
        height: layout.height,
        mode: layout.mode,
        measure: kind,
        cells: layout.cells,
    })
}

/// A fixed-duration section `[startSec, endSec)` of a video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Segment {
    pub video_id: String,
    pub seg_index: u32,
    pub start_sec: f64,
    pub end_sec: f64,
}

/// Splits a video into consecutive segments of `segment_sec`; the last
/// one may be shorter.
pub fn segment_video(video: &VideoRecord, segment_sec: f64) -> Vec<Segment> {
    assert!(segment_sec > 0.0, "segment length must be positive");
    (0u32..)
        .map(|i| (i, f64::from(i) * segment_sec))
        .take_while(|&(_, start)| start < video.duration_sec)
        .map(|(i, start)| Segment {
            video_id: video.video_id.clone(),
            seg_index: i,
            start_sec: start,
            end_sec: (f64::from(i + 1) * segment_sec).min(video.duration_sec),
        })
        .collect()
}

/// Span of the timeline that frequency and confidence are computed over.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a> {
    Video(&'a VideoRecord),
    Segment(&'a Segment),
}

impl Scope<'_> {
    fn video_id(&self) -> &str {
        match self {
            Scope::Video(v) => &v.video_id,
            Scope::Segment(s) => &s.video_id,
        }
    }

    fn contains(&self, t_sec: u32) -> bool {
        let t = f64::from(t_sec);
        match self {
            Scope::Video(v) => t < v.duration_sec,
            Scope::Segment(s) => s.start_sec <= t && t < s.end_sec,
        }
    }
}

fn scope_scores(
    snapshot: &CatalogSnapshot,
    scope: Scope<'_>,
    concept: &str,
    source: Option<&str>,
) -> Vec<f64> {
    let concept = concept.trim().to_lowercase();
    snapshot
        .index()
        .frame_scores(&concept, source, scope.video_id())
        .into_iter()
        .filter(|&(t, _)| scope.contains(t))
        .map(|(_, s)| s)
        .collect()
}

/// Number of samples in scope whose best score for the concept is at least `tau`.
pub fn concept_frequency(
    snapshot: &CatalogSnapshot,
    scope: Scope<'_>,
    concept: &str,
    source: Option<&str>,
    tau: f64,
) -> u32 {
    scope_scores(snapshot, scope, concept, source)
        .into_iter()
        .filter(|&s| s >= tau)
        .count() as u32
}

/// Highest sample score for the concept in scope, 0 when absent.
pub fn concept_confidence(
    snapshot: &CatalogSnapshot,
    scope: Scope<'_>,
    concept: &str,
    source: Option<&str>,
) -> f64 {
    scope_scores(snapshot, scope, concept, source)
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Frequency,
    Confidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterUnit {
    Video,
    Segment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterOrder {
    Period,
    Value,
}

macro_rules! keyword_enum {
    ($ty:ident { $($name:literal => $variant:ident),+ }) => {
        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(format!(
                        "unknown value {other:?}, expected one of: {}",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name,)+ })
            }
        }
    };
}

keyword_enum!(FilterMode { "frequency" => Frequency, "confidence" => Confidence });
keyword_enum!(FilterUnit { "video" => Video, "segment" => Segment });
keyword_enum!(FilterOrder { "period" => Period, "value" => Value });

/// Conjunction of a creation-year range and per-concept presence tests,
/// plus the ordering of the result list.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterCriteria {
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    pub concepts: Vec<String>,
    pub mode: FilterMode,
    pub unit: FilterUnit,
    pub segment_sec: f64,
    pub tau: f64,
    pub order: FilterOrder,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        FilterCriteria {
            year_from: None,
            year_to: None,
            concepts: Vec::new(),
            mode: FilterMode::Frequency,
            unit: FilterUnit::Video,
            segment_sec: DEFAULT_SEGMENT_SEC,
            tau: DEFAULT_TAU,
            order: FilterOrder::Period,
        }
    }
}

impl FilterCriteria {
    pub fn validate(&self) -> Result<(), ExploreError> {
        if let (Some(from), Some(to)) = (self.year_from, self.year_to) {
            if from > to {
                return Err(invalid("yearFrom", format!("{from} is after yearTo {to}")));
            }
        }
        if !(self.segment_sec.is_finite() && self.segment_sec > 0.0) {
            return Err(invalid("segmentSec", "must be a positive number"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(invalid("tau", "must lie in [0, 1]"));
        }
        if self.order == FilterOrder::Value && self.normalized_concepts().is_empty() {
            return Err(invalid(
                "order",
                "ordering by value needs at least one concept",
            ));
        }
        Ok(())
    }

    fn normalized_concepts(&self) -> Vec<String> {
        crate::search::normalize_tokens(&self.concepts)
    }

    fn year_admits(&self, created: &CreationTime) -> bool {
        let y = created.year();
        self.year_from.is_none_or(|from| y >= from) && self.year_to.is_none_or(|to| y <= to)
    }
}

/// A video (no `segIndex`) or segment that passed the filter, with its value:
/// summed frequency or minimum confidence over the criteria's concepts.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FilterHit {
    pub video_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seg_index: Option<u32>,
    pub start_sec: f64,
    pub end_sec: f64,
    pub creation_time: CreationTime,
    pub value: f64,
}

/// Runs the video-based similarity filter over every video or segment.
pub fn filter_videos(
    snapshot: &CatalogSnapshot,
    criteria: &FilterCriteria,
) -> Result<Vec<FilterHit>, ExploreError> {
    criteria.validate()?;
    let concepts = criteria.normalized_concepts();
    let mut hits = Vec::new();
    for entry in snapshot.videos() {
        let video = entry.record();
        if !criteria.year_admits(&video.creation_time) {
            continue;
        }
        let segments;
        let scopes: Vec<(Option<u32>, f64, f64, Scope<'_>)> = match criteria.unit {
            FilterUnit::Video => vec![(None, 0.0, video.duration_sec, Scope::Video(video))],
            FilterUnit::Segment => {
                segments = segment_video(video, criteria.segment_sec);
                segments
                    .iter()
                    .map(|s| (Some(s.seg_index), s.start_sec, s.end_sec, Scope::Segment(s)))
                    .collect()
            }
        };
        'scopes: for (seg_index, start_sec, end_sec, scope) in scopes {
            let value = match criteria.mode {
                FilterMode::Frequency => {
                    let mut total = 0u32;
                    for c in &concepts {
                        let f = concept_frequency(snapshot, scope, c, None, criteria.tau);
                        if f == 0 {
                            continue 'scopes;
                        }
                        total += f;
                    }
                    f64::from(total)
                }
                FilterMode::Confidence => {
                    let mut min = f64::INFINITY;
                    for c in &concepts {
                        let conf = concept_confidence(snapshot, scope, c, None);
                        if conf <= 0.0 {
                            continue 'scopes;
                        }
                        min = min.min(conf);
                    }
                    if concepts.is_empty() {
                        0.0
                    } else {
                        min
                    }
                }
            };
            hits.push(FilterHit {
                video_id: video.video_id.clone(),
                seg_index,
                start_sec,
                end_sec,
                creation_time: video.creation_time,
                value,
            });
        }
    }
    match criteria.order {
        FilterOrder::Period => hits.sort_by(|a, b| {
            a.creation_time
                .cmp(&b.creation_time)
                .then_with(|| a.video_id.cmp(&b.video_id))
                .then(a.seg_index.cmp(&b.seg_index))
        }),
        FilterOrder::Value => hits.sort_by(|a, b| {
            b.value
                .total_cmp(&a.value)
                .then_with(|| a.video_id.cmp(&b.video_id))
                .then(a.seg_index.cmp(&b.seg_index))
        }),
    }
    Ok(hits)
}

/// Membership test for similarity-search candidates restricted by a filter.
#[derive(Clone, Debug)]
pub struct CandidateFilter {
    unit: FilterUnit,
    segment_sec: f64,
    admitted: HashSet<(String, Option<u32>)>,
}

impl CandidateFilter {
    /// Whether an item at `time_sec` of `video` falls in an admitted unit.
    pub fn admits(&self, video: &VideoRecord, time_sec: f64) -> bool {
        let seg = match self.unit {
            FilterUnit::Video => None,
            FilterUnit::Segment => Some((time_sec / self.segment_sec).floor() as u32),
        };
        self.admitted.contains(&(video.video_id.clone(), seg))
    }
}

pub fn candidate_filter(
    snapshot: &CatalogSnapshot,
    criteria: &FilterCriteria,
) -> Result<CandidateFilter, ExploreError> {
    let admitted = filter_videos(snapshot, criteria)?
        .into_iter()
        .map(|h| (h.video_id, h.seg_index))
        .collect();
    Ok(CandidateFilter {
        unit: criteria.unit,
        segment_sec: criteria.segment_sec,
        admitted,
    })
}
