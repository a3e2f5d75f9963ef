//! Offline preprocessing: frame directories, shot boundaries and
//! one-second uniform samples.

use std::fs;
use std::path::{Path, PathBuf};

use crate::catalog::{FrameSampleRecord, ShotRecord, VideoRecord};
use crate::features::color_histogram;
pub use crate::frame::{Frame, PpmError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{dir}: frame numbering has a gap, frame_{missing:06}.ppm is missing")]
    FrameGap { dir: PathBuf, missing: u32 },
    #[error("{path}: {source}")]
    BadFrame {
        path: PathBuf,
        #[source]
        source: PpmError,
    },
    #[error("{path}: frame is {found:?}, earlier frames are {expected:?}")]
    MixedFrameSizes {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("shot detection needs at least one frame")]
    NoFrames,
    #[error("invalid shot parameters: {0}")]
    InvalidParams(String),
    #[error("video {video_id:?}: manifest implies {expected} frames, {dir} holds {found}")]
    FrameCountMismatch {
        video_id: String,
        dir: PathBuf,
        expected: u32,
        found: usize,
    },
}

/// File name of frame `index` inside a frame directory.
pub fn frame_file_name(index: u32) -> String {
    format!("frame_{index:06}.ppm")
}

fn parse_frame_index(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".ppm")?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Indices of all `frame_NNNNNN.ppm` files, checked to run 0, 1, 2, ... without gaps.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut indices = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if let Some(i) = entry.file_name().to_str().and_then(parse_frame_index) {
            indices.push(i);
        }
    }
    indices.sort_unstable();
    for (expected, &found) in indices.iter().enumerate() {
        if found != expected as u32 {
            return Err(IngestError::FrameGap {
                dir: dir.to_path_buf(),
                missing: expected as u32,
            });
        }
    }
    Ok(indices
        .iter()
        .map(|&i| dir.join(frame_file_name(i)))
        .collect())
}

pub fn read_frame(path: &Path) -> Result<Frame, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Frame::decode_ppm(&bytes).map_err(|source| IngestError::BadFrame {
        path: path.to_path_buf(),
        source,
    })
}

/// Decodes every frame of a directory in index order. All frames must
/// share one size.
pub fn read_frames(dir: &Path) -> Result<Vec<Frame>, IngestError> {
    let mut frames: Vec<Frame> = Vec::new();
    for path in list_frames(dir)? {
        let frame = read_frame(&path)?;
        if let Some(first) = frames.first() {
            if (first.width(), first.height()) != (frame.width(), frame.height()) {
                return Err(IngestError::MixedFrameSizes {
                    path,
                    expected: (first.width(), first.height()),
                    found: (frame.width(), frame.height()),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Writes frames as `frame_000000.ppm`, `frame_000001.ppm`, ... into `dir`.
pub fn write_frames(dir: &Path, frames: &[Frame]) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (i, frame) in frames.iter().enumerate() {
        let path = dir.join(frame_file_name(i as u32));
        fs::write(&path, frame.to_ppm()).map_err(|source| IngestError::Io { path, source })?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotParams {
    /// L1 distance between consecutive normalized color histograms above
    /// which a cut is declared. Lies in (0, 2].
    pub cut_threshold: f64,
    /// A cut is only accepted once the running shot has this many frames.
    pub min_shot_frames: u32,
}

impl Default for ShotParams {
    fn default() -> Self {
        ShotParams {
            cut_threshold: 0.5,
            min_shot_frames: 10,
        }
    }
}

impl ShotParams {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.cut_threshold > 0.0 && self.cut_threshold <= 2.0) {
            return Err(IngestError::InvalidParams(format!(
                "cutThreshold must lie in (0, 2], got {}",
                self.cut_threshold
            )));
        }
        if self.min_shot_frames == 0 {
            return Err(IngestError::InvalidParams(
                "minShotFrames must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Hard-cut detection by color-histogram differencing.
///
/// A new shot opens at frame `t` when the L1 distance between the
/// histograms of frames `t - 1` and `t` exceeds the threshold and the
/// running shot already spans at least `min_shot_frames` frames. Each
/// shot's keyframe is its midpoint `floor((start + end) / 2)`.
pub fn detect_shots(
    video_id: &str,
    frames: &[Frame],
    params: &ShotParams,
) -> Result<Vec<ShotRecord>, IngestError> {
    params.validate()?;
    if frames.is_empty() {
        return Err(IngestError::NoFrames);
    }
    let hists: Vec<_> = frames.iter().map(color_histogram).collect();
    let mut starts = vec![0u32];
    for t in 1..frames.len() {
        let d: f64 = hists[t - 1]
            .values()
            .iter()
            .zip(hists[t].values())
            .map(|(a, b)| f64::from((a - b).abs()))
            .sum();
        let current_len = t as u32 - starts.last().copied().unwrap_or(0);
        if d > params.cut_threshold && current_len >= params.min_shot_frames {
            starts.push(t as u32);
        }
    }
    let last = frames.len() as u32 - 1;
    Ok(starts
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let end = starts.get(i + 1).map_or(last, |next| next - 1);
            ShotRecord {
                video_id: video_id.to_string(),
                shot_index: i as u32,
                start_frame: start,
                end_frame: end,
                keyframe: (start + end) / 2,
            }
        })
        .collect())
}

/// One sample per whole second `t < durationSec`, at frame
/// `min(round(t * fps), lastFrame)`.
pub fn sample_uniform(video: &VideoRecord) -> Vec<FrameSampleRecord> {
    let last = video.last_frame();
    (0u32..)
        .take_while(|&t| f64::from(t) < video.duration_sec)
        .map(|t| FrameSampleRecord {
            video_id: video.video_id.clone(),
            t_sec: t,
            frame_index: ((f64::from(t) * video.fps).round() as u32).min(last),
        })
        .collect()
}
