use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Level at which an item is addressed: a detected shot or a one-second sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Shot,
    Frame,
}

impl Granularity {
    fn tag(self) -> char {
        match self {
            Granularity::Shot => 's',
            Granularity::Frame => 'f',
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Shot => "shot",
            Granularity::Frame => "frame",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shot" => Ok(Granularity::Shot),
            "frame" => Ok(Granularity::Frame),
            other => Err(format!(
                "unknown granularity {other:?}, expected shot or frame"
            )),
        }
    }
}

/// Address of a retrievable unit.
///
/// The canonical string form is `v:{videoId}/s:{shotIndex}` for shots and
/// `v:{videoId}/f:{tSec}` for frame samples. Equality, hashing and ordering
/// all follow the canonical string, so sorting keys gives the tie-break order
/// used by every ranked list.
#[derive(Clone)]
pub struct ItemKey {
    granularity: Granularity,
    video_id: String,
    ordinal: u32,
    canonical: String,
}

impl ItemKey {
    pub fn new(granularity: Granularity, video_id: impl Into<String>, ordinal: u32) -> Self {
        let video_id = video_id.into();
        let canonical = format!("v:{}/{}:{}", video_id, granularity.tag(), ordinal);
        ItemKey {
            granularity,
            video_id,
            ordinal,
            canonical,
        }
    }

    pub fn shot(video_id: impl Into<String>, shot_index: u32) -> Self {
        Self::new(Granularity::Shot, video_id, shot_index)
    }

    pub fn frame(video_id: impl Into<String>, t_sec: u32) -> Self {
        Self::new(Granularity::Frame, video_id, t_sec)
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    /// Shot index for shot keys, whole second for frame keys.
    pub fn ordinal(&self) -> u32 {
        self.ordinal
    }

    pub fn as_str(&self) -> &str {
        &self.canonical
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed item key {input:?}: {reason}")]
pub struct ParseKeyError {
    pub input: String,
    pub reason: &'static str,
}

impl FromStr for ItemKey {
    type Err = ParseKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason| ParseKeyError {
            input: s.to_string(),
            reason,
        };
        let rest = s
            .strip_prefix("v:")
            .ok_or_else(|| fail("missing \"v:\" prefix"))?;
        let slash = rest
            .rfind('/')
            .ok_or_else(|| fail("missing '/' separator"))?;
        let (video_id, tail) = (&rest[..slash], &rest[slash + 1..]);
        if video_id.is_empty() {
            return Err(fail("empty video id"));
        }
        let granularity = match tail.get(..2) {
            Some("s:") => Granularity::Shot,
            Some("f:") => Granularity::Frame,
            _ => return Err(fail("expected \"s:\" or \"f:\" after '/'")),
        };
        let digits = &tail[2..];
        // Reject signs, whitespace and leading zeros so the form stays canonical.
        if digits.is_empty()
            || !digits.bytes().all(|b| b.is_ascii_digit())
            || (digits.len() > 1 && digits.starts_with('0'))
        {
            return Err(fail("ordinal must be a canonical non-negative integer"));
        }
        let ordinal = digits.parse().map_err(|_| fail("ordinal out of range"))?;
        Ok(ItemKey::new(granularity, video_id, ordinal))
    }
}

impl fmt::Display for ItemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl fmt::Debug for ItemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ItemKey({})", self.canonical)
    }
}

impl PartialEq for ItemKey {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for ItemKey {}

impl Hash for ItemKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl PartialOrd for ItemKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ItemKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl Serialize for ItemKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical)
    }
}

impl<'de> Deserialize<'de> for ItemKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
