use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureKind, FeatureVector};
use crate::catalog::{CatalogSnapshot, Granularity, ItemKey};

pub const CONCEPT_CSV_HEADER: &str = "videoId,tSec,source,conceptId,score";

/// A score one detector assigned to one concept on one item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConceptDetection {
    pub item: ItemKey,
    pub source: String,
    pub concept_id: String,
    pub score: f64,
}

/// Concept ids observed per source.
pub type Vocabularies = BTreeMap<String, BTreeSet<String>>;

pub fn vocabularies<'a>(
    detections: impl IntoIterator<Item = &'a ConceptDetection>,
) -> Vocabularies {
    let mut vocab = Vocabularies::new();
    for d in detections {
        vocab
            .entry(d.source.clone())
            .or_default()
            .insert(d.concept_id.clone());
    }
    vocab
}

/// Reads a `videoId,tSec,source,conceptId,score` file into frame-level
/// detections validated against `snapshot`.
///
/// Row numbers in errors are file line numbers, the header being row 1.
pub fn load_concept_scores(
    path: &Path,
    snapshot: &CatalogSnapshot,
) -> Result<Vec<ConceptDetection>, FeatureError> {
    let file = File::open(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);
    let malformed = |row: u64, message: String| FeatureError::MalformedRow {
        path: path.to_path_buf(),
        row,
        message,
    };
    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    let found = header.iter().collect::<Vec<_>>().join(",");
    if found != CONCEPT_CSV_HEADER {
        return Err(FeatureError::BadHeader {
            path: path.to_path_buf(),
            expected: CONCEPT_CSV_HEADER,
            found,
        });
    }

    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            malformed(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or_default();
        let (video_id, t_raw, source, concept, score_raw) =
            (field(0), field(1), field(2), field(3), field(4));

        let entry = snapshot
            .video(video_id)
            .ok_or_else(|| FeatureError::UnknownVideo {
                path: path.to_path_buf(),
                row,
                video_id: video_id.to_string(),
            })?;
        let t_sec = t_raw
            .parse::<u32>()
            .ok()
            .filter(|&t| (t as usize) < entry.samples().len())
            .ok_or_else(|| FeatureError::NotASample {
                path: path.to_path_buf(),
                row,
                video_id: video_id.to_string(),
                t_sec: t_raw.to_string(),
            })?;
        if source.is_empty() {
            return Err(malformed(row, "empty source".into()));
        }
        let concept_id = concept.trim().to_lowercase();
        if concept_id.is_empty() {
            return Err(malformed(row, "empty conceptId".into()));
        }
        let score = score_raw
            .parse::<f64>()
            .map_err(|e| malformed(row, format!("score {score_raw:?}: {e}")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(FeatureError::ScoreOutOfRange {
                path: path.to_path_buf(),
                row,
                score: score_raw.to_string(),
            });
        }
        out.push(ConceptDetection {
            item: ItemKey::frame(video_id, t_sec),
            source: source.to_string(),
            concept_id,
            score,
        });
    }
    Ok(out)
}

/// Shot-level detections plus one concept vector per (shot, source).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShotConcepts {
    /// Sorted by (item, source, conceptId).
    pub detections: Vec<ConceptDetection>,
    pub vectors: BTreeMap<ItemKey, BTreeMap<String, FeatureVector>>,
}

/// Lays a source's scores out over its vocabulary in lexicographic order;
/// concepts without a score are zero.
pub fn layout_concept_vector(
    vocab: &BTreeSet<String>,
    scores: &HashMap<&str, f64>,
) -> FeatureVector {
    let values = vocab
        .iter()
        .map(|c| scores.get(c.as_str()).copied().unwrap_or(0.0) as f32)
        .collect();
    FeatureVector::new_unchecked(FeatureKind::Concept, values)
}

/// Max-pools frame-level detections into the shots whose frame range holds
/// each sample.
pub fn aggregate_shot_concepts(
    detections: &[ConceptDetection],
    snapshot: &CatalogSnapshot,
) -> ShotConcepts {
    let vocab = vocabularies(detections);
    let mut best: BTreeMap<(ItemKey, &str, &str), f64> = BTreeMap::new();
    for d in detections {
        if d.item.granularity() != Granularity::Frame {
            continue;
        }
        let Some(entry) = snapshot.video(d.item.video_id()) else {
            continue;
        };
        let Some(sample) = entry.samples().get(d.item.ordinal() as usize) else {
            continue;
        };
        let Some(shot) = entry.shot_containing(sample.frame_index) else {
            continue;
        };
        let key = (
            ItemKey::shot(d.item.video_id(), shot.shot_index),
            d.source.as_str(),
            d.concept_id.as_str(),
        );
        let slot = best.entry(key).or_insert(d.score);
        if d.score > *slot {
            *slot = d.score;
        }
    }

    let mut per_shot: HashMap<&ItemKey, HashMap<&str, HashMap<&str, f64>>> = HashMap::new();
    for ((item, source, concept), score) in &best {
        per_shot
            .entry(item)
            .or_default()
            .entry(source)
            .or_default()
            .insert(concept, *score);
    }

    let empty = HashMap::new();
    let mut vectors = BTreeMap::new();
    if !vocab.is_empty() {
        for entry in snapshot.videos() {
            for shot in entry.shots() {
                let key = ItemKey::shot(&entry.record().video_id, shot.shot_index);
                let scores = per_shot.get(&key);
                let by_source = vocab
                    .iter()
                    .map(|(source, words)| {
                        let s = scores
                            .and_then(|m| m.get(source.as_str()))
                            .unwrap_or(&empty);
                        (source.clone(), layout_concept_vector(words, s))
                    })
                    .collect();
                vectors.insert(key, by_source);
            }
        }
    }

    let detections = best
        .iter()
        .map(|((item, source, concept), score)| ConceptDetection {
            item: item.clone(),
            source: source.to_string(),
            concept_id: concept.to_string(),
            score: *score,
        })
        .collect();
    ShotConcepts {
        detections,
        vectors,
    }
}

/// Layout of the combined concept vector: every source's vocabulary, sources
/// in lexicographic order, concepts in lexicographic order within a source.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConceptSpace {
    sources: Vec<(String, usize, usize)>,
    dims: usize,
}

impl ConceptSpace {
    pub fn new(vocab: &Vocabularies) -> Self {
        let mut sources = Vec::new();
        let mut offset = 0;
        for (source, words) in vocab {
            sources.push((source.clone(), offset, words.len()));
            offset += words.len();
        }
        ConceptSpace {
            sources,
            dims: offset,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.dims == 0
    }

    /// Index range of `source` inside the combined vector.
    pub fn source_range(&self, source: &str) -> Option<std::ops::Range<usize>> {
        self.sources
            .iter()
            .find(|(s, _, _)| s == source)
            .map(|&(_, off, len)| off..off + len)
    }

    /// Concatenates per-source vectors; missing sources contribute zeros.
    pub fn combine(&self, per_source: &BTreeMap<String, FeatureVector>) -> FeatureVector {
        let mut values = vec![0.0f32; self.dims];
        for (source, off, len) in &self.sources {
            if let Some(v) = per_source.get(source) {
                values[*off..off + len].copy_from_slice(&v.values()[..*len]);
            }
        }
        FeatureVector::new_unchecked(FeatureKind::Concept, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::testing::snapshot_with_layout;
    use std::io::Write;

    fn det(item: ItemKey, source: &str, concept: &str, score: f64) -> ConceptDetection {
        ConceptDetection {
            item,
            source: source.into(),
            concept_id: concept.into(),
            score,
        }
    }

    fn csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "{CONCEPT_CSV_HEADER}\n{body}").unwrap();
        f
    }

    #[test]
    fn loads_and_normalizes_rows() {
        // v1: 2 s at 10 fps, one shot over 20 frames.
        let snap = snapshot_with_layout(&[("v1", 10.0, 2.0, &[20])]);
        let f = csv("v1,0,netA,car,0.9\nv1,1,netA,CAR,0.4\n");
        let dets = load_concept_scores(f.path(), &snap).unwrap();
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0].item.as_str(), "v:v1/f:0");
        assert_eq!(dets[1].concept_id, "car");
    }

    #[test]
    fn row_errors_carry_row_numbers() {
        let snap = snapshot_with_layout(&[("v1", 10.0, 2.0, &[20])]);
        let f = csv("v1,0,netA,car,0.9\nv1,1,netA,car,1.5\n");
        assert!(matches!(
            load_concept_scores(f.path(), &snap).unwrap_err(),
            FeatureError::ScoreOutOfRange { row: 3, .. }
        ));
        let f = csv("zz,0,netA,car,0.9\n");
        assert!(matches!(
            load_concept_scores(f.path(), &snap).unwrap_err(),
            FeatureError::UnknownVideo { row: 2, .. }
        ));
        let f = csv("v1,2,netA,car,0.9\n");
        assert!(matches!(
            load_concept_scores(f.path(), &snap).unwrap_err(),
            FeatureError::NotASample { row: 2, .. }
        ));
        let f = csv("v1,0.5,netA,car,0.9\n");
        assert!(matches!(
            load_concept_scores(f.path(), &snap).unwrap_err(),
            FeatureError::NotASample { .. }
        ));
        let f = csv("v1,0,netA,car,high\n");
        assert!(matches!(
            load_concept_scores(f.path(), &snap).unwrap_err(),
            FeatureError::MalformedRow { row: 2, .. }
        ));
    }

    #[test]
    fn header_must_match_exactly() {
        let snap = snapshot_with_layout(&[("v1", 10.0, 2.0, &[20])]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "video,t,source,concept,score").unwrap();
        assert!(matches!(
            load_concept_scores(f.path(), &snap).unwrap_err(),
            FeatureError::BadHeader { .. }
        ));
        assert!(matches!(
            load_concept_scores(Path::new("/no/such/file.csv"), &snap).unwrap_err(),
            FeatureError::Io { .. }
        ));
    }

    #[test]
    fn shot_score_is_max_over_member_samples() {
        // 3 s at 10 fps: shot 0 = frames 0..=14 (samples t=0,1), shot 1 = 15..=29 (t=2).
        let snap = snapshot_with_layout(&[("v1", 10.0, 3.0, &[15, 15])]);
        let dets = vec![
            det(ItemKey::frame("v1", 0), "netA", "car", 0.9),
            det(ItemKey::frame("v1", 1), "netA", "car", 0.4),
            det(ItemKey::frame("v1", 1), "netA", "apple", 0.3),
        ];
        let agg = aggregate_shot_concepts(&dets, &snap);
        assert_eq!(
            agg.detections,
            vec![
                det(ItemKey::shot("v1", 0), "netA", "apple", 0.3),
                det(ItemKey::shot("v1", 0), "netA", "car", 0.9),
            ]
        );
        // vocabulary {apple, car}
        let s0 = &agg.vectors[&ItemKey::shot("v1", 0)]["netA"];
        assert_eq!(s0.values(), [0.3f32, 0.9]);
        let s1 = &agg.vectors[&ItemKey::shot("v1", 1)]["netA"];
        assert_eq!(s1.values(), [0.0f32, 0.0]);
    }

    #[test]
    fn lexicographic_layout() {
        let vocab: BTreeSet<String> = ["car", "apple"].iter().map(|s| s.to_string()).collect();
        let scores = HashMap::from([("car", 0.9)]);
        assert_eq!(
            layout_concept_vector(&vocab, &scores).values(),
            [0.0f32, 0.9]
        );
    }

    #[test]
    fn concept_space_concatenates_sources() {
        let mut vocab = Vocabularies::new();
        vocab.entry("netB".into()).or_default().insert("car".into());
        vocab
            .entry("netA".into())
            .or_default()
            .extend(["apple".to_string(), "car".to_string()]);
        let space = ConceptSpace::new(&vocab);
        assert_eq!(space.dims(), 3);
        assert_eq!(space.source_range("netB"), Some(2..3));
        let mut per = BTreeMap::new();
        per.insert(
            "netB".to_string(),
            FeatureVector::new_unchecked(FeatureKind::Concept, vec![0.7]),
        );
        assert_eq!(space.combine(&per).values(), [0.0f32, 0.0, 0.7]);
    }
}
