//! End-to-end offline ingestion: manifest and score files in, catalog directory out.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::catalog::store::write_catalog;
use crate::catalog::{
    load_manifest, CatalogError, CatalogSnapshot, FrameSampleRecord, Granularity, ItemKey,
    ShotRecord, VideoRecord,
};
use crate::explore::{build_featuremap, ExploreError, Featuremap, FeaturemapRequest};
use crate::features::{
    color_histogram, load_concept_scores, motion_descriptor, texture_descriptor, FeatureError,
    FeatureStore, FeatureVector,
};
use crate::ingest::{
    detect_shots, list_frames, read_frames, sample_uniform, IngestError, ShotParams,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("video {video_id:?}: {source}")]
    Ingest {
        video_id: String,
        #[source]
        source: IngestError,
    },
    #[error("video {video_id:?}: {source}")]
    Feature {
        video_id: String,
        #[source]
        source: FeatureError,
    },
    #[error(transparent)]
    Concepts(FeatureError),
    #[error("featuremap {concept}/{source_name}: {error}")]
    Featuremap {
        concept: String,
        source_name: String,
        error: ExploreError,
    },
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    pub seed: u64,
    pub precompute_maps: bool,
    pub shot_params: ShotParams,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IngestSummary {
    pub videos: usize,
    pub shots: usize,
    pub samples: usize,
    pub detections: usize,
    pub sources: Vec<String>,
    pub featuremaps: Option<usize>,
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} videos, {} shots, {} frame samples, {} concept detections from {} source(s)",
            self.videos,
            self.shots,
            self.samples,
            self.detections,
            self.sources.len()
        )?;
        if let Some(n) = self.featuremaps {
            write!(f, ", {n} featuremaps")?;
        }
        Ok(())
    }
}

struct VideoOutput {
    shots: Vec<ShotRecord>,
    samples: Vec<FrameSampleRecord>,
    features: Vec<(ItemKey, FeatureVector)>,
}

/// Shots get color and texture from their keyframe and motion over all
/// their frames; a frame sample gets color and texture from its frame and
/// motion from that frame and its successor.
fn process_video(video: &VideoRecord, params: &ShotParams) -> Result<VideoOutput, PipelineError> {
    let ingest_err = |source| PipelineError::Ingest {
        video_id: video.video_id.clone(),
        source,
    };
    let feature_err = |source| PipelineError::Feature {
        video_id: video.video_id.clone(),
        source,
    };
    let found = list_frames(&video.frame_path).map_err(ingest_err)?.len();
    if found != video.frame_count() as usize {
        return Err(ingest_err(IngestError::FrameCountMismatch {
            video_id: video.video_id.clone(),
            dir: video.frame_path.clone(),
            expected: video.frame_count(),
            found,
        }));
    }
    let frames = read_frames(&video.frame_path).map_err(ingest_err)?;
    let shots = detect_shots(&video.video_id, &frames, params).map_err(ingest_err)?;
    let samples = sample_uniform(video);

    let mut features = Vec::new();
    let mut describe = |key: ItemKey, still: usize, span: &[crate::frame::Frame]| {
        features.push((key.clone(), color_histogram(&frames[still])));
        features.push((
            key.clone(),
            texture_descriptor(&frames[still]).map_err(feature_err)?,
        ));
        features.push((key, motion_descriptor(span).map_err(feature_err)?));
        Ok::<_, PipelineError>(())
    };
    for shot in &shots {
        let span = &frames[shot.start_frame as usize..=shot.end_frame as usize];
        describe(
            ItemKey::shot(&video.video_id, shot.shot_index),
            shot.keyframe as usize,
            span,
        )?;
    }
    for sample in &samples {
        let i = sample.frame_index as usize;
        let span = &frames[i..(i + 2).min(frames.len())];
        describe(ItemKey::frame(&video.video_id, sample.t_sec), i, span)?;
    }
    Ok(VideoOutput {
        shots,
        samples,
        features,
    })
}

/// Ingests every manifest video, merges the concept score files and writes
/// the catalog into `out_dir`. Videos are processed in parallel; results are
/// assembled in manifest order so the output does not depend on scheduling.
pub fn ingest_catalog(
    manifest: &Path,
    concept_files: &[PathBuf],
    out_dir: &Path,
    options: &IngestOptions,
) -> Result<(CatalogSnapshot, IngestSummary), PipelineError> {
    options
        .shot_params
        .validate()
        .map_err(|source| PipelineError::Ingest {
            video_id: String::new(),
            source,
        })?;
    let videos = load_manifest(manifest)?;
    let outputs: Vec<VideoOutput> = videos
        .par_iter()
        .map(|v| process_video(v, &options.shot_params))
        .collect::<Result<_, _>>()?;

    let mut shots = Vec::new();
    let mut samples = Vec::new();
    let mut store = FeatureStore::new();
    for out in outputs {
        shots.extend(out.shots);
        samples.extend(out.samples);
        for (key, vector) in out.features {
            store.insert(key, vector);
        }
    }
    let snapshot = CatalogSnapshot::from_records(videos, shots, samples)?.with_features(store);

    let mut detections = Vec::new();
    for path in concept_files {
        detections.extend(load_concept_scores(path, &snapshot).map_err(PipelineError::Concepts)?);
    }
    let snapshot = snapshot.with_frame_detections(detections)?;

    let featuremaps = if options.precompute_maps {
        Some(precompute_featuremaps(&snapshot, options.seed)?)
    } else {
        None
    };
    write_catalog(out_dir, &snapshot, options.seed, featuremaps.as_deref())?;

    let summary = IngestSummary {
        videos: snapshot.video_count(),
        shots: snapshot.shot_count(),
        samples: snapshot.sample_count(),
        detections: snapshot.frame_detections().len(),
        sources: snapshot.sources(),
        featuremaps: featuremaps.map(|m| m.len()),
    };
    Ok((snapshot, summary))
}

/// Default-parameter featuremaps for every (source, concept) with at least
/// one shot-level posting, in (source, concept) order.
pub fn precompute_featuremaps(
    snapshot: &CatalogSnapshot,
    seed: u64,
) -> Result<Vec<Featuremap>, PipelineError> {
    let pairs: Vec<(&str, &str)> = snapshot
        .index()
        .iter(Granularity::Shot)
        .filter(|(_, _, postings)| !postings.is_empty())
        .map(|(source, concept, _)| (source, concept))
        .collect();
    pairs
        .par_iter()
        .map(|&(source, concept)| {
            let req = FeaturemapRequest {
                seed,
                ..FeaturemapRequest::new(concept, source)
            };
            build_featuremap(snapshot, &req).map_err(|error| PipelineError::Featuremap {
                concept: concept.to_string(),
                source_name: source.to_string(),
                error,
            })
        })
        .collect()
}
