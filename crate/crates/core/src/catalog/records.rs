use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, NaiveDateTime, SecondsFormat};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CatalogError;

/// Creation timestamp of a video.
///
/// Accepts RFC 3339 timestamps, offset-less `YYYY-MM-DDTHH:MM:SS` (taken as
/// UTC) and bare `YYYY-MM-DD` dates. Always written back as RFC 3339.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CreationTime(DateTime<FixedOffset>);

impl CreationTime {
    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn timestamp(&self) -> DateTime<FixedOffset> {
        self.0
    }
}

impl PartialOrd for CreationTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CreationTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl FromStr for CreationTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let utc = FixedOffset::east_opt(0).expect("zero offset");
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Ok(CreationTime(dt));
        }
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f") {
            return Ok(CreationTime(naive.and_utc().with_timezone(&utc)));
        }
        if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            let naive = date.and_hms_opt(0, 0, 0).expect("midnight");
            return Ok(CreationTime(naive.and_utc().with_timezone(&utc)));
        }
        Err(format!("invalid ISO 8601 timestamp {s:?}"))
    }
}

impl fmt::Display for CreationTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }
}

impl Serialize for CreationTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CreationTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VideoRecord {
    pub video_id: String,
    pub frame_path: PathBuf,
    pub fps: f64,
    pub duration_sec: f64,
    pub creation_time: CreationTime,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
}

impl VideoRecord {
    /// Number of frames the manifest implies: `round(durationSec * fps)`, at least one.
    pub fn frame_count(&self) -> u32 {
        ((self.duration_sec * self.fps).round() as u32).max(1)
    }

    pub fn last_frame(&self) -> u32 {
        self.frame_count() - 1
    }

    /// Checks the field invariants that do not need the file system.
    pub fn validate(&self) -> Result<(), String> {
        if self.video_id.is_empty() {
            return Err("videoId must be non-empty".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.duration_sec.is_finite() && self.duration_sec > 0.0) {
            return Err(format!(
                "durationSec must be positive, got {}",
                self.duration_sec
            ));
        }
        if (self.duration_sec * self.fps).round() > f64::from(u32::MAX) {
            return Err("implied frame count does not fit in 32 bits".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ShotRecord {
    pub video_id: String,
    pub shot_index: u32,
    pub start_frame: u32,
    pub end_frame: u32,
    pub keyframe: u32,
}

impl ShotRecord {
    pub fn len(&self) -> u32 {
        self.end_frame - self.start_frame + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_frame(&self, frame: u32) -> bool {
        (self.start_frame..=self.end_frame).contains(&frame)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameSampleRecord {
    pub video_id: String,
    pub t_sec: u32,
    pub frame_index: u32,
}

/// Reads a newline-delimited JSON manifest.
///
/// Relative `framePath` entries are resolved against the manifest's directory.
/// Blank lines are skipped; every other line must be one complete record.
pub fn load_manifest(path: &Path) -> Result<Vec<VideoRecord>, CatalogError> {
    let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: VideoRecord =
            serde_json::from_str(line).map_err(|e| CatalogError::ManifestLine {
                path: path.to_path_buf(),
                line: line_no,
                message: e.to_string(),
            })?;
        record
            .validate()
            .map_err(|message| CatalogError::ManifestLine {
                path: path.to_path_buf(),
                line: line_no,
                message,
            })?;
        if !seen.insert(record.video_id.clone()) {
            return Err(CatalogError::DuplicateVideo {
                video_id: record.video_id,
                line: line_no,
            });
        }
        if record.frame_path.is_relative() {
            record.frame_path = base.join(&record.frame_path);
        }
        records.push(record);
    }
    Ok(records)
}
