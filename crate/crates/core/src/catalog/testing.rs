//! Builders for synthetic catalogs used by tests and benchmarks.

use std::path::PathBuf;

use super::{CatalogSnapshot, CreationTime, ShotRecord, VideoRecord};
use crate::ingest::sample_uniform;

pub fn video(id: &str, fps: f64, duration_sec: f64, created: &str) -> VideoRecord {
    VideoRecord {
        video_id: id.to_string(),
        frame_path: PathBuf::from(format!("frames/{id}")),
        fps,
        duration_sec,
        creation_time: created.parse::<CreationTime>().expect("fixture timestamp"),
        title: String::new(),
        description: String::new(),
    }
}

/// Consecutive shots of the given lengths with midpoint keyframes.
pub fn shots_from_lengths(video_id: &str, lengths: &[u32]) -> Vec<ShotRecord> {
    let mut start = 0;
    lengths
        .iter()
        .enumerate()
        .map(|(i, &len)| {
            let end = start + len - 1;
            let shot = ShotRecord {
                video_id: video_id.to_string(),
                shot_index: i as u32,
                start_frame: start,
                end_frame: end,
                keyframe: (start + end) / 2,
            };
            start = end + 1;
            shot
        })
        .collect()
}

/// Snapshot from `(videoId, fps, durationSec, shot lengths)` tuples.
/// Shot lengths must add up to the implied frame count.
pub fn snapshot_with_layout(layout: &[(&str, f64, f64, &[u32])]) -> CatalogSnapshot {
    snapshot_from_videos(
        layout
            .iter()
            .map(|&(id, fps, dur, lengths)| {
                (
                    video(id, fps, dur, "2010-01-01T00:00:00Z"),
                    lengths.to_vec(),
                )
            })
            .collect(),
    )
}

pub fn snapshot_from_videos(videos: Vec<(VideoRecord, Vec<u32>)>) -> CatalogSnapshot {
    let mut records = Vec::new();
    let mut shots = Vec::new();
    let mut samples = Vec::new();
    for (v, lengths) in videos {
        shots.extend(shots_from_lengths(&v.video_id, &lengths));
        samples.extend(sample_uniform(&v));
        records.push(v);
    }
    CatalogSnapshot::from_records(records, shots, samples).expect("consistent fixture layout")
}
