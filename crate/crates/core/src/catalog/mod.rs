//! Data model (videos, shots, frame samples) and immutable read snapshots.

mod key;
mod records;
pub mod store;
#[doc(hidden)]
pub mod testing;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::features::{
    aggregate_shot_concepts, layout_concept_vector, vocabularies, ConceptDetection, ConceptSpace,
    FeatureKind, FeatureStore,
};
use crate::search::ConceptIndex;

pub use key::{Granularity, ItemKey, ParseKeyError};
pub use records::{load_manifest, CreationTime, FrameSampleRecord, ShotRecord, VideoRecord};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    ManifestLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate videoId {video_id:?} on manifest line {line}")]
    DuplicateVideo { video_id: String, line: usize },
    #[error("unknown video {video_id:?}")]
    UnknownVideo { video_id: String },
    #[error("{key}: ordinal out of range, video has {available} item(s) at this granularity")]
    OrdinalOutOfRange { key: ItemKey, available: usize },
    #[error("inconsistent records: {0}")]
    InvalidRecords(String),
    #[error("corrupt catalog file {path}, line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One video with its shots (by shot index) and samples (by second).
#[derive(Clone, Debug)]
pub struct VideoEntry {
    record: VideoRecord,
    shots: Vec<ShotRecord>,
    samples: Vec<FrameSampleRecord>,
}

impl VideoEntry {
    pub fn record(&self) -> &VideoRecord {
        &self.record
    }

    pub fn shots(&self) -> &[ShotRecord] {
        &self.shots
    }

    pub fn samples(&self) -> &[FrameSampleRecord] {
        &self.samples
    }

    pub fn shot_containing(&self, frame: u32) -> Option<&ShotRecord> {
        let i = self.shots.partition_point(|s| s.end_frame < frame);
        self.shots.get(i).filter(|s| s.contains_frame(frame))
    }
}

/// Record resolved from an [`ItemKey`].
#[derive(Clone, Copy, Debug)]
pub enum ItemRecord<'a> {
    Shot(&'a ShotRecord),
    Frame(&'a FrameSampleRecord),
}

#[derive(Clone, Copy, Debug)]
pub struct ResolvedItem<'a> {
    pub video: &'a VideoRecord,
    pub record: ItemRecord<'a>,
}

impl ResolvedItem<'_> {
    /// Position of the item on the video timeline: shot start or sample second.
    pub fn time_sec(&self) -> f64 {
        match self.record {
            ItemRecord::Shot(s) => f64::from(s.start_frame) / self.video.fps,
            ItemRecord::Frame(f) => f64::from(f.t_sec),
        }
    }

    /// Frame shown for the item: the shot keyframe or the sampled frame.
    pub fn frame_index(&self) -> u32 {
        match self.record {
            ItemRecord::Shot(s) => s.keyframe,
            ItemRecord::Frame(f) => f.frame_index,
        }
    }
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Immutable view of the catalog: records, feature vectors, concept
/// detections and the concept index built over them.
///
/// Builder methods consume the snapshot; once wrapped in an `Arc` it is
/// never mutated, so queries against it stay stable across re-ingestion.
#[derive(Clone, Debug)]
pub struct CatalogSnapshot {
    generation: u64,
    videos: Vec<VideoEntry>,
    by_id: HashMap<String, usize>,
    features: FeatureStore,
    frame_detections: Vec<ConceptDetection>,
    shot_detections: Vec<ConceptDetection>,
    concept_space: ConceptSpace,
    index: ConceptIndex,
}

impl CatalogSnapshot {
    pub fn empty() -> Self {
        CatalogSnapshot {
            generation: next_generation(),
            videos: Vec::new(),
            by_id: HashMap::new(),
            features: FeatureStore::new(),
            frame_detections: Vec::new(),
            shot_detections: Vec::new(),
            concept_space: ConceptSpace::default(),
            index: ConceptIndex::default(),
        }
    }

    /// Assembles a snapshot from record lists, checking that each video's
    /// shots partition its frame range and its samples follow the
    /// one-per-second rule.
    pub fn from_records(
        videos: Vec<VideoRecord>,
        shots: Vec<ShotRecord>,
        samples: Vec<FrameSampleRecord>,
    ) -> Result<Self, CatalogError> {
        let invalid = |m: String| CatalogError::InvalidRecords(m);
        let mut by_id = HashMap::new();
        let mut entries = Vec::with_capacity(videos.len());
        for (i, record) in videos.into_iter().enumerate() {
            record
                .validate()
                .map_err(|m| invalid(format!("video {:?}: {m}", record.video_id)))?;
            if by_id.insert(record.video_id.clone(), i).is_some() {
                return Err(invalid(format!("duplicate videoId {:?}", record.video_id)));
            }
            entries.push(VideoEntry {
                record,
                shots: Vec::new(),
                samples: Vec::new(),
            });
        }
        for shot in shots {
            let &i = by_id.get(&shot.video_id).ok_or_else(|| {
                invalid(format!("shot references unknown video {:?}", shot.video_id))
            })?;
            entries[i].shots.push(shot);
        }
        for sample in samples {
            let &i = by_id.get(&sample.video_id).ok_or_else(|| {
                invalid(format!(
                    "sample references unknown video {:?}",
                    sample.video_id
                ))
            })?;
            entries[i].samples.push(sample);
        }
        for entry in &mut entries {
            entry.shots.sort_by_key(|s| s.shot_index);
            entry.samples.sort_by_key(|s| s.t_sec);
            check_shots(entry).map_err(invalid)?;
            check_samples(entry).map_err(invalid)?;
        }
        Ok(CatalogSnapshot {
            videos: entries,
            by_id,
            ..Self::empty()
        })
    }

    /// Replaces the feature store; concept vectors are re-derived from the
    /// snapshot's detections.
    pub fn with_features(mut self, features: FeatureStore) -> Self {
        self.features = features;
        self.rebuild_concepts();
        self.generation = next_generation();
        self
    }

    /// Installs frame-level concept detections, then derives shot-level
    /// detections, concept vectors for every item and the concept index.
    /// Repeated (item, source, concept) triples keep their highest score.
    pub fn with_frame_detections(
        mut self,
        detections: Vec<ConceptDetection>,
    ) -> Result<Self, CatalogError> {
        let mut best: BTreeMap<(ItemKey, String, String), f64> = BTreeMap::new();
        for d in detections {
            if d.item.granularity() != Granularity::Frame {
                return Err(CatalogError::InvalidRecords(format!(
                    "detection on {} is not frame-level",
                    d.item
                )));
            }
            self.resolve(&d.item)?;
            if !(0.0..=1.0).contains(&d.score) {
                return Err(CatalogError::InvalidRecords(format!(
                    "detection score {} on {} outside [0, 1]",
                    d.score, d.item
                )));
            }
            let slot = best
                .entry((d.item, d.source, d.concept_id))
                .or_insert(d.score);
            *slot = slot.max(d.score);
        }
        self.frame_detections = best
            .into_iter()
            .map(|((item, source, concept_id), score)| ConceptDetection {
                item,
                source,
                concept_id,
                score,
            })
            .collect();
        self.rebuild_concepts();
        self.generation = next_generation();
        Ok(self)
    }

    fn rebuild_concepts(&mut self) {
        let agg = aggregate_shot_concepts(&self.frame_detections, self);
        let vocab = vocabularies(&self.frame_detections);
        let space = ConceptSpace::new(&vocab);
        self.features.clear_kind(FeatureKind::Concept);
        if !space.is_empty() {
            for (key, per_source) in &agg.vectors {
                self.features.insert(key.clone(), space.combine(per_source));
            }
            let mut frame_scores: HashMap<ItemKey, HashMap<&str, HashMap<&str, f64>>> =
                HashMap::new();
            for d in &self.frame_detections {
                frame_scores
                    .entry(d.item.clone())
                    .or_default()
                    .entry(d.source.as_str())
                    .or_default()
                    .insert(d.concept_id.as_str(), d.score);
            }
            let none = HashMap::new();
            for entry in &self.videos {
                for sample in &entry.samples {
                    let key = ItemKey::frame(&entry.record.video_id, sample.t_sec);
                    let scores = frame_scores.get(&key);
                    let per_source = vocab
                        .iter()
                        .map(|(source, words)| {
                            let s = scores.and_then(|m| m.get(source.as_str())).unwrap_or(&none);
                            (source.clone(), layout_concept_vector(words, s))
                        })
                        .collect();
                    self.features.insert(key, space.combine(&per_source));
                }
            }
        }
        self.index = ConceptIndex::build(self.frame_detections.iter().chain(&agg.detections));
        self.shot_detections = agg.detections;
        self.concept_space = space;
    }

    /// Identity of this snapshot; every constructed snapshot gets a new one.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }

    pub fn shot_count(&self) -> usize {
        self.videos.iter().map(|v| v.shots.len()).sum()
    }

    pub fn sample_count(&self) -> usize {
        self.videos.iter().map(|v| v.samples.len()).sum()
    }

    /// Videos in manifest order.
    pub fn videos(&self) -> impl ExactSizeIterator<Item = &VideoEntry> {
        self.videos.iter()
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoEntry> {
        self.by_id.get(video_id).map(|&i| &self.videos[i])
    }

    pub fn features(&self) -> &FeatureStore {
        &self.features
    }

    pub fn frame_detections(&self) -> &[ConceptDetection] {
        &self.frame_detections
    }

    pub fn shot_detections(&self) -> &[ConceptDetection] {
        &self.shot_detections
    }

    pub fn concept_space(&self) -> &ConceptSpace {
        &self.concept_space
    }

    pub fn index(&self) -> &ConceptIndex {
        &self.index
    }

    /// Detector names, sorted.
    pub fn sources(&self) -> Vec<String> {
        self.index.vocabularies().keys().cloned().collect()
    }

    pub fn resolve(&self, key: &ItemKey) -> Result<ResolvedItem<'_>, CatalogError> {
        let entry = self
            .video(key.video_id())
            .ok_or_else(|| CatalogError::UnknownVideo {
                video_id: key.video_id().to_string(),
            })?;
        let i = key.ordinal() as usize;
        let out_of_range = |available| CatalogError::OrdinalOutOfRange {
            key: key.clone(),
            available,
        };
        let record = match key.granularity() {
            Granularity::Shot => ItemRecord::Shot(
                entry
                    .shots
                    .get(i)
                    .ok_or_else(|| out_of_range(entry.shots.len()))?,
            ),
            Granularity::Frame => ItemRecord::Frame(
                entry
                    .samples
                    .get(i)
                    .ok_or_else(|| out_of_range(entry.samples.len()))?,
            ),
        };
        Ok(ResolvedItem {
            video: &entry.record,
            record,
        })
    }

    /// Every item key at `granularity`, in canonical order.
    pub fn items(&self, granularity: Granularity) -> Vec<ItemKey> {
        let mut keys: Vec<ItemKey> = self
            .videos
            .iter()
            .flat_map(|e| {
                let id = &e.record.video_id;
                let n = match granularity {
                    Granularity::Shot => e.shots.len(),
                    Granularity::Frame => e.samples.len(),
                };
                (0..n as u32).map(move |o| ItemKey::new(granularity, id.clone(), o))
            })
            .collect();
        keys.sort();
        keys
    }
}

fn check_shots(entry: &VideoEntry) -> Result<(), String> {
    let id = &entry.record.video_id;
    let last = entry.record.last_frame();
    if entry.shots.is_empty() {
        return Err(format!("video {id:?} has no shots"));
    }
    let mut next_start = 0u32;
    for (i, s) in entry.shots.iter().enumerate() {
        if s.shot_index as usize != i {
            return Err(format!(
                "video {id:?}: shot indices must be consecutive from 0"
            ));
        }
        if s.start_frame != next_start || s.end_frame < s.start_frame {
            return Err(format!("video {id:?}: shot {i} breaks the frame partition"));
        }
        if !(s.start_frame..=s.end_frame).contains(&s.keyframe) {
            return Err(format!("video {id:?}: shot {i} keyframe outside its range"));
        }
        next_start = s.end_frame + 1;
    }
    if next_start != last + 1 {
        return Err(format!(
            "video {id:?}: shots end at frame {}, video ends at {last}",
            next_start - 1
        ));
    }
    Ok(())
}

fn check_samples(entry: &VideoEntry) -> Result<(), String> {
    let v = &entry.record;
    let expected = crate::ingest::sample_uniform(v);
    if entry.samples != expected {
        return Err(format!(
            "video {:?}: samples do not follow the one-per-second rule",
            v.video_id
        ));
    }
    Ok(())
}

/// Holder of the current snapshot. Readers clone the `Arc`; ingestion
/// installs a replacement atomically without touching outstanding snapshots.
#[derive(Debug)]
pub struct Catalog {
    current: RwLock<Arc<CatalogSnapshot>>,
}

impl Catalog {
    pub fn new(snapshot: CatalogSnapshot) -> Self {
        Catalog {
            current: RwLock::new(Arc::new(snapshot)),
        }
    }

    pub fn snapshot(&self) -> Arc<CatalogSnapshot> {
        Arc::clone(&self.current.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Swaps in a new snapshot and returns the previous one.
    pub fn install(&self, snapshot: CatalogSnapshot) -> Arc<CatalogSnapshot> {
        let mut guard = self.current.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, Arc::new(snapshot))
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::new(CatalogSnapshot::empty())
    }
}
