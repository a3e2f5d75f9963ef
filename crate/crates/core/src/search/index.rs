use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{RankedHit, SearchError};
use crate::catalog::{Granularity, ItemKey};
use crate::features::{ConceptDetection, Vocabularies};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    pub item: ItemKey,
    pub score: f64,
}

#[derive(Clone, Debug, Default)]
struct PostingLists {
    shots: Vec<Posting>,
    frames: Vec<Posting>,
    /// Frame postings regrouped per video as (tSec, score), sorted by tSec.
    frames_by_video: HashMap<String, Vec<(u32, f64)>>,
}

impl PostingLists {
    fn list(&self, granularity: Granularity) -> &[Posting] {
        match granularity {
            Granularity::Shot => &self.shots,
            Granularity::Frame => &self.frames,
        }
    }
}

/// Ranked postings per (source, conceptId) for both granularities, sorted
/// by score descending then canonical key ascending.
#[derive(Clone, Debug, Default)]
pub struct ConceptIndex {
    postings: BTreeMap<(String, String), PostingLists>,
    vocab: Vocabularies,
}

fn rank_order(a: &Posting, b: &Posting) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.item.cmp(&b.item))
}

impl ConceptIndex {
    /// Builds the index; a repeated (source, conceptId, item) keeps its highest score.
    pub fn build<'a>(detections: impl IntoIterator<Item = &'a ConceptDetection>) -> Self {
        let mut best: BTreeMap<(String, String), HashMap<ItemKey, f64>> = BTreeMap::new();
        let mut vocab = Vocabularies::new();
        for d in detections {
            vocab
                .entry(d.source.clone())
                .or_default()
                .insert(d.concept_id.clone());
            let slot = best
                .entry((d.source.clone(), d.concept_id.clone()))
                .or_default()
                .entry(d.item.clone())
                .or_insert(d.score);
            *slot = slot.max(d.score);
        }
        let postings = best
            .into_iter()
            .map(|(key, items)| {
                let mut lists = PostingLists::default();
                for (item, score) in items {
                    let p = Posting { item, score };
                    match p.item.granularity() {
                        Granularity::Shot => lists.shots.push(p),
                        Granularity::Frame => {
                            lists
                                .frames_by_video
                                .entry(p.item.video_id().to_string())
                                .or_default()
                                .push((p.item.ordinal(), p.score));
                            lists.frames.push(p);
                        }
                    }
                }
                lists.shots.sort_by(rank_order);
                lists.frames.sort_by(rank_order);
                for samples in lists.frames_by_video.values_mut() {
                    samples.sort_by_key(|&(t, _)| t);
                }
                (key, lists)
            })
            .collect();
        ConceptIndex { postings, vocab }
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    pub fn vocabularies(&self) -> &Vocabularies {
        &self.vocab
    }

    pub fn has_source(&self, source: &str) -> bool {
        self.vocab.contains_key(source)
    }

    /// Sources whose vocabulary holds `concept`, sorted.
    pub fn sources_for(&self, concept: &str) -> Vec<&str> {
        self.vocab
            .iter()
            .filter(|(_, words)| words.contains(concept))
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn postings(&self, source: &str, concept: &str, granularity: Granularity) -> &[Posting] {
        self.postings
            .get(&(source.to_string(), concept.to_string()))
            .map_or(&[], |l| l.list(granularity))
    }

    /// Every (source, conceptId) pair with its postings of one granularity.
    pub fn iter(&self, granularity: Granularity) -> impl Iterator<Item = (&str, &str, &[Posting])> {
        self.postings
            .iter()
            .map(move |((s, c), l)| (s.as_str(), c.as_str(), l.list(granularity)))
    }

    /// Sampled seconds of `video_id` carrying `concept`, each with its best
    /// score over the selected source (or all sources), sorted by second.
    pub fn frame_scores(
        &self,
        concept: &str,
        source: Option<&str>,
        video_id: &str,
    ) -> Vec<(u32, f64)> {
        let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
        for s in self.sources_for(concept) {
            if source.is_some_and(|want| want != s) {
                continue;
            }
            let lists = &self.postings[&(s.to_string(), concept.to_string())];
            for &(t, score) in lists.frames_by_video.get(video_id).into_iter().flatten() {
                let slot = merged.entry(t).or_insert(score);
                *slot = slot.max(score);
            }
        }
        merged.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum ConceptQueryResult {
    Hits { hits: Vec<RankedHit> },
    NoSuchConcept { unknown: Vec<String> },
}

impl ConceptQueryResult {
    pub fn hits(&self) -> Option<&[RankedHit]> {
        match self {
            ConceptQueryResult::Hits { hits } => Some(hits),
            ConceptQueryResult::NoSuchConcept { .. } => None,
        }
    }
}

/// Lower-cases, trims and de-duplicates query tokens, keeping first occurrences.
pub fn normalize_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokens {
        let t = t.as_ref().trim().to_lowercase();
        if !t.is_empty() && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptQuery<'a, S> {
    pub tokens: &'a [S],
    pub source: Option<&'a str>,
    pub threshold: f64,
    pub granularity: Granularity,
    pub k: usize,
}

/// Conjunctive concept search.
///
/// An item qualifies when every token has a detection on it, in the chosen
/// source or any source, scoring at least `threshold`. Its score is the sum
/// over tokens (in query order) of its best per-token score.
pub fn concept_query<S: AsRef<str>>(
    index: &ConceptIndex,
    query: &ConceptQuery<'_, S>,
) -> Result<ConceptQueryResult, SearchError> {
    let tokens = normalize_tokens(query.tokens);
    if tokens.is_empty() {
        return Err(SearchError::invalid(
            "q",
            "at least one concept token is required",
        ));
    }
    if !(0.0..=1.0).contains(&query.threshold) {
        return Err(SearchError::invalid("threshold", "must lie in [0, 1]"));
    }
    if query.k == 0 {
        return Err(SearchError::invalid("k", "must be positive"));
    }
    if let Some(s) = query.source {
        if !index.has_source(s) {
            return Err(SearchError::UnknownSource(s.to_string()));
        }
    }
    let sources_for = |token: &str| -> Vec<&str> {
        index
            .sources_for(token)
            .into_iter()
            .filter(|s| query.source.is_none_or(|want| want == *s))
            .collect()
    };
    let unknown: Vec<String> = tokens
        .iter()
        .filter(|t| sources_for(t).is_empty())
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Ok(ConceptQueryResult::NoSuchConcept { unknown });
    }

    let threshold = query.threshold.max(0.0);
    let mut acc: Option<HashMap<&ItemKey, f64>> = None;
    for token in &tokens {
        let mut best: HashMap<&ItemKey, f64> = HashMap::new();
        for source in sources_for(token) {
            for p in index.postings(source, token, query.granularity) {
                if p.score < threshold {
                    break;
                }
                let slot = best.entry(&p.item).or_insert(p.score);
                *slot = slot.max(p.score);
            }
        }
        acc = Some(match acc {
            None => best,
            Some(mut prev) => {
                prev.retain(|item, total| match best.get(item) {
                    Some(s) => {
                        *total += s;
                        true
                    }
                    None => false,
                });
                prev
            }
        });
    }
    let mut hits: Vec<RankedHit> = acc
        .unwrap_or_default()
        .into_iter()
        .map(|(item, score)| RankedHit {
            item: item.clone(),
            score,
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.item.cmp(&b.item))
    });
    hits.truncate(query.k);
    Ok(ConceptQueryResult::Hits { hits })
}
