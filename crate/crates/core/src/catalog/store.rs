//! On-disk catalog: a directory of newline-delimited JSON files.
//!
//! Output is a pure function of the snapshot contents, so two ingests of the
//! same inputs give byte-identical directories.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    CatalogError, CatalogSnapshot, FrameSampleRecord, Granularity, ShotRecord, VideoRecord,
};
use crate::explore::Featuremap;
use crate::features::{ConceptDetection, FeatureKind, FeatureRecord, FeatureStore, FeatureVector};
use crate::search::Posting;
use crate::som::{Cell, LayoutMode};

pub const VIDEOS_FILE: &str = "videos.jsonl";
pub const SHOTS_FILE: &str = "shots.jsonl";
pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const FEATURES_FILE: &str = "features.jsonl";
pub const CONCEPTS_FILE: &str = "concepts.jsonl";
pub const FEATUREMAPS_FILE: &str = "featuremaps.jsonl";
pub const CATALOG_FILE: &str = "catalog.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CatalogMeta {
    format_version: u32,
    seed: u64,
}

/// One `concepts.jsonl` line: the ranked postings of one (source, concept)
/// at one granularity.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostingLine {
    source: String,
    concept: String,
    granularity: Granularity,
    postings: Vec<Posting>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturemapLine {
    concept: String,
    source: String,
    width: u32,
    height: u32,
    mode: LayoutMode,
    cells: Vec<Cell>,
}

/// Everything `load_catalog` recovers from a catalog directory.
#[derive(Debug)]
pub struct StoredCatalog {
    pub snapshot: CatalogSnapshot,
    pub seed: u64,
    /// Precomputed featuremaps; these are always built on concept vectors.
    pub featuremaps: Vec<Featuremap>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CatalogError + '_ {
    move |source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_lines<T: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> Result<(), CatalogError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut out, &row).map_err(|e| io_err(path)(e.into()))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CatalogError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| corrupt(path, i + 1, e.to_string()))?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

fn corrupt(path: &Path, line: usize, message: impl Into<String>) -> CatalogError {
    CatalogError::Corrupt {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Writes the snapshot, its features and concept index into `dir`
/// (created if missing). Featuremaps go to `featuremaps.jsonl` when given;
/// otherwise a stale file from an earlier run is removed.
pub fn write_catalog(
    dir: &Path,
    snapshot: &CatalogSnapshot,
    seed: u64,
    featuremaps: Option<&[Featuremap]>,
) -> Result<(), CatalogError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_lines(
        &dir.join(VIDEOS_FILE),
        snapshot.videos().map(|v| v.record()),
    )?;
    write_lines(
        &dir.join(SHOTS_FILE),
        snapshot.videos().flat_map(|v| v.shots()),
    )?;
    write_lines(
        &dir.join(SAMPLES_FILE),
        snapshot.videos().flat_map(|v| v.samples()),
    )?;
    write_lines(&dir.join(FEATURES_FILE), snapshot.features().records())?;

    let index = snapshot.index();
    let mut lines = Vec::new();
    for granularity in [Granularity::Shot, Granularity::Frame] {
        lines.extend(
            index
                .iter(granularity)
                .map(|(source, concept, postings)| PostingLine {
                    source: source.to_string(),
                    concept: concept.to_string(),
                    granularity,
                    postings: postings.to_vec(),
                }),
        );
    }
    lines.sort_by(|a, b| {
        (&a.source, &a.concept, a.granularity).cmp(&(&b.source, &b.concept, b.granularity))
    });
    write_lines(&dir.join(CONCEPTS_FILE), lines)?;

    let maps_path = dir.join(FEATUREMAPS_FILE);
    match featuremaps {
        Some(maps) => write_lines(
            &maps_path,
            maps.iter().map(|m| FeaturemapLine {
                concept: m.concept.clone(),
                source: m.source.clone(),
                width: m.width,
                height: m.height,
                mode: m.mode,
                cells: m.cells.clone(),
            }),
        )?,
        None if maps_path.exists() => fs::remove_file(&maps_path).map_err(io_err(&maps_path))?,
        None => {}
    }

    let meta = CatalogMeta {
        format_version: FORMAT_VERSION,
        seed,
    };
    let path = dir.join(CATALOG_FILE);
    let mut text = serde_json::to_string_pretty(&meta).expect("plain struct serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

/// Loads a catalog directory. Shot-level concept data is re-derived from the
/// frame postings and must agree with what the file records.
pub fn load_catalog(dir: &Path) -> Result<StoredCatalog, CatalogError> {
    let meta_path = dir.join(CATALOG_FILE);
    let meta_text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: CatalogMeta = serde_json::from_str(&meta_text)
        .map_err(|e| corrupt(&meta_path, e.line(), e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(corrupt(
            &meta_path,
            1,
            format!("unsupported formatVersion {}", meta.format_version),
        ));
    }

    let videos: Vec<VideoRecord> = read_lines(&dir.join(VIDEOS_FILE))?
        .into_iter()
        .map(|(_, mut v): (usize, VideoRecord)| {
            if v.frame_path.is_relative() {
                v.frame_path = dir.join(&v.frame_path);
            }
            v
        })
        .collect();
    let shots: Vec<ShotRecord> = read_lines(&dir.join(SHOTS_FILE))?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let samples: Vec<FrameSampleRecord> = read_lines(&dir.join(SAMPLES_FILE))?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let snapshot = CatalogSnapshot::from_records(videos, shots, samples)?;

    let features_path = dir.join(FEATURES_FILE);
    let mut store = FeatureStore::new();
    for (line, rec) in read_lines::<FeatureRecord>(&features_path)? {
        let bad = |m: String| corrupt(&features_path, line, m);
        if rec.kind == FeatureKind::Concept {
            return Err(bad("concept vectors are derived, not stored".into()));
        }
        if rec.dims != rec.values.len() {
            return Err(bad(format!(
                "dims {} but {} values",
                rec.dims,
                rec.values.len()
            )));
        }
        snapshot
            .resolve(&rec.item)
            .map_err(|e| bad(e.to_string()))?;
        let vector = FeatureVector::new(rec.kind, rec.values).map_err(bad)?;
        store.insert(rec.item, vector);
    }

    let concepts_path = dir.join(CONCEPTS_FILE);
    let posting_lines = read_lines::<PostingLine>(&concepts_path)?;
    let mut detections = Vec::new();
    for (_, l) in posting_lines
        .iter()
        .filter(|(_, l)| l.granularity == Granularity::Frame)
    {
        detections.extend(l.postings.iter().map(|p| ConceptDetection {
            item: p.item.clone(),
            source: l.source.clone(),
            concept_id: l.concept.clone(),
            score: p.score,
        }));
    }
    let snapshot = snapshot
        .with_features(store)
        .with_frame_detections(detections)
        .map_err(|e| corrupt(&concepts_path, 0, e.to_string()))?;
    let mut shot_lines = 0;
    for (line, l) in posting_lines
        .iter()
        .filter(|(_, l)| l.granularity == Granularity::Shot)
    {
        shot_lines += 1;
        let derived = snapshot
            .index()
            .postings(&l.source, &l.concept, Granularity::Shot);
        if derived != l.postings.as_slice() {
            return Err(corrupt(
                &concepts_path,
                *line,
                format!(
                    "shot postings for {}/{} disagree with frame postings",
                    l.source, l.concept
                ),
            ));
        }
    }
    let derived_lines = snapshot.index().iter(Granularity::Shot).count();
    if shot_lines != derived_lines {
        return Err(corrupt(
            &concepts_path,
            0,
            format!("{shot_lines} shot posting lines, frame postings imply {derived_lines}"),
        ));
    }

    let maps_path = dir.join(FEATUREMAPS_FILE);
    let mut featuremaps = Vec::new();
    if maps_path.exists() {
        for (line, m) in read_lines::<FeaturemapLine>(&maps_path)? {
            for c in &m.cells {
                snapshot
                    .resolve(&c.item)
                    .map_err(|e| corrupt(&maps_path, line, e.to_string()))?;
            }
            featuremaps.push(Featuremap {
                item_count: m.cells.len(),
                concept: m.concept,
                source: m.source,
                width: m.width,
                height: m.height,
                mode: m.mode,
                measure: FeatureKind::Concept,
                cells: m.cells,
            });
        }
    }

    Ok(StoredCatalog {
        snapshot,
        seed: meta.seed,
        featuremaps,
    })
}

/// Path of the frame file for `frame_index` of a video.
pub fn frame_file(video: &VideoRecord, frame_index: u32) -> PathBuf {
    video
        .frame_path
        .join(crate::ingest::frame_file_name(frame_index))
}
