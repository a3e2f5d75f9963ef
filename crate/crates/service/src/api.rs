//! Route table and handlers. Every handler reads the one snapshot loaded at
//! startup, so identical requests always produce identical bodies.

use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use divex_core::catalog::store::frame_file;
use divex_core::catalog::{CatalogSnapshot, Granularity, ItemKey, VideoEntry};
use divex_core::explore::{
    filter_videos, maps_for_concept, FeaturemapRequest, FilterCriteria, FilterHit, FilterMode,
    FilterOrder, FilterUnit,
};
use divex_core::features::FeatureKind;
use divex_core::frame::Frame;
use divex_core::search::{
    concept_query, knn, metadata_query, ConceptQuery, ConceptQueryResult, Measure, RankedHit,
};
use divex_core::som::LayoutMode;
use serde::Serialize;

use crate::cache::FeaturemapCache;
use crate::error::{ApiError, ErrorCode};
use crate::params::Params;
use crate::ServiceConfig;

type RawQuery = Result<Query<Vec<(String, String)>>, QueryRejection>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub struct AppState {
    pub snapshot: Arc<CatalogSnapshot>,
    pub config: ServiceConfig,
    pub maps: FeaturemapCache,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/videos", get(list_videos))
        .route("/videos/{id}", get(video_detail))
        .route("/search/concepts", get(search_concepts))
        .route("/search/metadata", get(search_metadata))
        .route("/similar/{*key}", get(similar))
        .route("/featuremaps", get(featuremap_list))
        .route("/featuremaps/{concept}/{source}", get(featuremap))
        .route("/filter", get(filter))
        .route("/thumbs/{video_id}/{file}", get(thumbnail))
        .fallback(not_found)
        .method_not_allowed_fallback(not_found)
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such route")
}

#[derive(Serialize)]
struct StatusBody {
    videos: usize,
    shots: usize,
    frames: usize,
    sources: Vec<String>,
}

async fn status(State(s): State<Arc<AppState>>, q: RawQuery) -> ApiResult<StatusBody> {
    Params::from_query(q)?.finish()?;
    let snap = &s.snapshot;
    Ok(Json(StatusBody {
        videos: snap.video_count(),
        shots: snap.shot_count(),
        frames: snap.sample_count(),
        sources: snap.sources(),
    }))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VideoSummary<'a> {
    video_id: &'a str,
    title: &'a str,
    description: &'a str,
    fps: f64,
    duration_sec: f64,
    creation_time: String,
    shot_count: usize,
    sample_count: usize,
}

impl<'a> VideoSummary<'a> {
    fn of(e: &'a VideoEntry) -> Self {
        let v = e.record();
        VideoSummary {
            video_id: &v.video_id,
            title: &v.title,
            description: &v.description,
            fps: v.fps,
            duration_sec: v.duration_sec,
            creation_time: v.creation_time.to_string(),
            shot_count: e.shots().len(),
            sample_count: e.samples().len(),
        }
    }
}

async fn list_videos(State(s): State<Arc<AppState>>, q: RawQuery) -> Result<Response, ApiError> {
    let mut p = Params::from_query(q)?;
    let k = p.take_count("k", usize::MAX)?;
    p.finish()?;
    let videos: Vec<VideoSummary> = s.snapshot.videos().take(k).map(VideoSummary::of).collect();
    Ok(Json(videos).into_response())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ShotView {
    item: ItemKey,
    shot_index: u32,
    start_frame: u32,
    end_frame: u32,
    keyframe: u32,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SampleView {
    item: ItemKey,
    t_sec: u32,
    frame_index: u32,
}

#[derive(Serialize)]
struct VideoDetail<'a> {
    video: VideoSummary<'a>,
    shots: Vec<ShotView>,
    samples: Vec<SampleView>,
}

async fn video_detail(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: RawQuery,
) -> Result<Response, ApiError> {
    Params::from_query(q)?.finish()?;
    let entry = s.snapshot.video(&id).ok_or_else(|| unknown_video(&id))?;
    let body = VideoDetail {
        video: VideoSummary::of(entry),
        shots: entry
            .shots()
            .iter()
            .map(|r| ShotView {
                item: ItemKey::shot(&id, r.shot_index),
                shot_index: r.shot_index,
                start_frame: r.start_frame,
                end_frame: r.end_frame,
                keyframe: r.keyframe,
            })
            .collect(),
        samples: entry
            .samples()
            .iter()
            .map(|r| SampleView {
                item: ItemKey::frame(&id, r.t_sec),
                t_sec: r.t_sec,
                frame_index: r.frame_index,
            })
            .collect(),
    };
    Ok(Json(body).into_response())
}

fn unknown_video(id: &str) -> ApiError {
    ApiError::new(ErrorCode::UnknownVideo, format!("unknown video {id:?}"))
        .with_detail(serde_json::json!({ "videoId": id }))
}

/// A ranked item plus what a client needs to show its thumbnail.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HitView {
    item: ItemKey,
    score: f64,
    video_id: String,
    frame_index: u32,
    time_sec: f64,
}

fn hit_views(snap: &CatalogSnapshot, hits: Vec<RankedHit>) -> Result<Vec<HitView>, ApiError> {
    hits.into_iter()
        .map(|h| {
            let r = snap.resolve(&h.item)?;
            Ok(HitView {
                video_id: h.item.video_id().to_string(),
                frame_index: r.frame_index(),
                time_sec: r.time_sec(),
                item: h.item,
                score: h.score,
            })
        })
        .collect()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConceptHits {
    tokens: Vec<String>,
    granularity: Granularity,
    hits: Vec<HitView>,
}

async fn search_concepts(State(s): State<Arc<AppState>>, q: RawQuery) -> ApiResult<ConceptHits> {
    let mut p = Params::from_query(q)?;
    let tokens = p.take_list("q");
    let source = p.take_string("source");
    let threshold = p.take_or("threshold", 0.0f64)?;
    let granularity = p.take_or("granularity", Granularity::Shot)?;
    let k = p.take_count("k", s.config.default_k)?;
    p.finish()?;
    let query = ConceptQuery {
        tokens: &tokens,
        source: source.as_deref(),
        threshold,
        granularity,
        k,
    };
    match concept_query(s.snapshot.index(), &query)? {
        ConceptQueryResult::Hits { hits } => Ok(Json(ConceptHits {
            tokens: divex_core::search::normalize_tokens(&tokens),
            granularity,
            hits: hit_views(&s.snapshot, hits)?,
        })),
        ConceptQueryResult::NoSuchConcept { unknown } => Err(ApiError::new(
            ErrorCode::NoSuchConcept,
            format!("no source knows concept(s): {}", unknown.join(", ")),
        )
        .with_detail(serde_json::json!({ "unknown": unknown }))),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MetadataHits {
    video_ids: Vec<String>,
}

async fn search_metadata(State(s): State<Arc<AppState>>, q: RawQuery) -> ApiResult<MetadataHits> {
    let mut p = Params::from_query(q)?;
    let text = p
        .take_string("q")
        .ok_or_else(|| ApiError::invalid("q", "search text is required"))?;
    let k = p.take_count("k", s.config.default_k)?;
    p.finish()?;
    Ok(Json(MetadataHits {
        video_ids: metadata_query(&s.snapshot, &text, k)?,
    }))
}

const FILTER_PARAMS: [&str; 8] = [
    "yearFrom",
    "yearTo",
    "concepts",
    "mode",
    "unit",
    "segmentSec",
    "tau",
    "order",
];

fn take_criteria(p: &mut Params, default_tau: f64) -> Result<FilterCriteria, ApiError> {
    Ok(FilterCriteria {
        year_from: p.take("yearFrom")?,
        year_to: p.take("yearTo")?,
        concepts: p.take_list("concepts"),
        mode: p.take_or("mode", FilterMode::Frequency)?,
        unit: p.take_or("unit", FilterUnit::Video)?,
        segment_sec: p.take_or("segmentSec", divex_core::explore::DEFAULT_SEGMENT_SEC)?,
        tau: p.take_or("tau", default_tau)?,
        order: p.take_or("order", FilterOrder::Period)?,
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimilarHits {
    query: ItemKey,
    measure: Measure,
    granularity: Granularity,
    hits: Vec<HitView>,
}

async fn similar(
    State(s): State<Arc<AppState>>,
    Path(raw): Path<String>,
    q: RawQuery,
) -> ApiResult<SimilarHits> {
    let key: ItemKey = raw
        .trim_start_matches('/')
        .parse()
        .map_err(|e| ApiError::invalid("itemKey", e))?;
    let mut p = Params::from_query(q)?;
    let measure = p.take_or("measure", Measure::for_kind(FeatureKind::Concept))?;
    let granularity = p.take_or("granularity", key.granularity())?;
    let k = p.take_count("k", s.config.default_k)?;
    let restrict = if FILTER_PARAMS.iter().any(|n| p.has(n)) {
        Some(take_criteria(&mut p, s.config.default_tau)?)
    } else {
        None
    };
    p.finish()?;
    let hits = knn(
        &s.snapshot,
        &key,
        measure,
        granularity,
        k,
        restrict.as_ref(),
    )?;
    Ok(Json(SimilarHits {
        hits: hit_views(&s.snapshot, hits)?,
        query: key,
        measure,
        granularity,
    }))
}

async fn featuremap_list(
    State(s): State<Arc<AppState>>,
    q: RawQuery,
) -> Result<Response, ApiError> {
    let mut p = Params::from_query(q)?;
    let concept = p
        .take_string("concept")
        .ok_or_else(|| ApiError::invalid("concept", "a concept is required"))?;
    let top_n = p.take_count("topN", s.config.default_top_n)?;
    p.finish()?;
    Ok(Json(maps_for_concept(&s.snapshot, &concept, top_n)).into_response())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CellView {
    cell: usize,
    item: ItemKey,
    video_id: String,
    frame_index: u32,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FeaturemapView {
    concept: String,
    source: String,
    item_count: usize,
    width: u32,
    height: u32,
    organization: LayoutMode,
    measure: Measure,
    cells: Vec<CellView>,
}

async fn featuremap(
    State(s): State<Arc<AppState>>,
    Path((concept, source)): Path<(String, String)>,
    q: RawQuery,
) -> ApiResult<FeaturemapView> {
    let mut p = Params::from_query(q)?;
    let req = FeaturemapRequest {
        top_n: p.take_count("topN", s.config.default_top_n)?,
        organization: p.take_or("organization", LayoutMode::Som)?,
        measure: p.take_or("measure", Measure::for_kind(FeatureKind::Concept))?,
        seed: s.config.som_seed,
        ..FeaturemapRequest::new(&concept, &source)
    };
    p.finish()?;
    let state = s.clone();
    let map = tokio::task::spawn_blocking(move || state.maps.get_or_build(&state.snapshot, &req))
        .await
        .map_err(ApiError::internal)??;
    let mut cells = Vec::with_capacity(map.cells.len());
    for c in &map.cells {
        let r = s.snapshot.resolve(&c.item)?;
        cells.push(CellView {
            cell: c.cell,
            video_id: c.item.video_id().to_string(),
            frame_index: r.frame_index(),
            item: c.item.clone(),
        });
    }
    Ok(Json(FeaturemapView {
        concept: map.concept.clone(),
        source: map.source.clone(),
        item_count: map.item_count,
        width: map.width,
        height: map.height,
        organization: map.mode,
        measure: Measure::for_kind(map.measure),
        cells,
    }))
}

#[derive(Serialize)]
struct FilterBody {
    total: usize,
    hits: Vec<FilterHit>,
}

async fn filter(State(s): State<Arc<AppState>>, q: RawQuery) -> ApiResult<FilterBody> {
    let mut p = Params::from_query(q)?;
    let criteria = take_criteria(&mut p, s.config.default_tau)?;
    let k = p.take_count("k", s.config.default_k)?;
    p.finish()?;
    let mut hits = filter_videos(&s.snapshot, &criteria)?;
    let total = hits.len();
    hits.truncate(k);
    Ok(Json(FilterBody { total, hits }))
}

async fn thumbnail(
    State(s): State<Arc<AppState>>,
    Path((video_id, file)): Path<(String, String)>,
    q: RawQuery,
) -> Result<Response, ApiError> {
    Params::from_query(q)?.finish()?;
    let index: u32 = file
        .strip_suffix(".ppm")
        .ok_or_else(|| ApiError::new(ErrorCode::NotFound, "thumbnails are served as .ppm"))?
        .parse()
        .map_err(|e| ApiError::invalid("frameIndex", e))?;
    let entry = s
        .snapshot
        .video(&video_id)
        .ok_or_else(|| unknown_video(&video_id))?;
    let video = entry.record();
    if index >= video.frame_count() {
        return Err(ApiError::new(
            ErrorCode::OrdinalOutOfRange,
            format!("video {video_id:?} has {} frames", video.frame_count()),
        )
        .with_detail(
            serde_json::json!({ "videoId": video_id, "available": video.frame_count() }),
        ));
    }
    let path = frame_file(video, index);
    let max_edge = s.config.thumb_max_edge;
    let bytes = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ApiError> {
        let raw = std::fs::read(&path)
            .map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
        let frame = Frame::decode_ppm(&raw)
            .map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
        Ok(frame.scaled_to_fit(max_edge).to_ppm())
    })
    .await
    .map_err(ApiError::internal)??;
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], bytes).into_response())
}
