//! A small synthetic corpus written to disk: three PPM frame directories,
//! a manifest and two concept score files (`netA`, `netB`).
//!
//! - `v1`: 20 frames at 10 fps, frames 0-9 solid red, 10-19 solid blue; created 2007.
//! - `v2`: 30 frames at 10 fps, a moving gradient that turns into stripes at frame 15; created 2009.
//! - `v3`: 25 frames at 5 fps of slowly drifting noise; created 2012.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::frame::Frame;
use crate::ingest::write_frames;

pub const WIDTH: u32 = 32;
pub const HEIGHT: u32 = 24;

#[derive(Clone, Debug)]
pub struct FixturePaths {
    pub manifest: PathBuf,
    pub concepts: Vec<PathBuf>,
}

const MANIFEST: &str = r#"{"videoId":"v1","framePath":"frames/v1","fps":10,"durationSec":2.0,"creationTime":"2007-05-01T12:00:00Z","title":"Red and blue","description":"Two solid colour shots"}
{"videoId":"v2","framePath":"frames/v2","fps":10,"durationSec":3.0,"creationTime":"2009-08-15T09:30:00Z","title":"Beach walk","description":"A person eating an apple by the sea"}
{"videoId":"v3","framePath":"frames/v3","fps":5,"durationSec":5.0,"creationTime":"2012-03-10T20:15:00Z","title":"City traffic","description":"Cars passing at night"}
"#;

const NET_A: &str = "videoId,tSec,source,conceptId,score
v1,0,netA,car,0.9
v1,1,netA,car,0.4
v2,0,netA,person,0.8
v2,0,netA,apple,0.6
v2,1,netA,person,0.9
v2,2,netA,apple,0.35
v3,0,netA,car,0.3
v3,1,netA,street,0.7
v3,3,netA,street,0.55
v3,4,netA,Person,0.45
";

const NET_B: &str = "videoId,tSec,source,conceptId,score
v1,0,netB,car,0.7
v1,1,netB,sky,0.65
v2,1,netB,apple,0.2
v2,2,netB,sea,0.85
v3,2,netB,car,0.3
v3,4,netB,street,0.6
";

fn v1_frames() -> Vec<Frame> {
    (0..20)
        .map(|i| {
            Frame::solid(
                WIDTH,
                HEIGHT,
                if i < 10 { [255, 0, 0] } else { [0, 0, 255] },
            )
        })
        .collect()
}

fn v2_frames() -> Vec<Frame> {
    (0..30u32)
        .map(|i| {
            if i < 15 {
                Frame::from_fn(WIDTH, HEIGHT, |x, y| {
                    let g = ((x * 6 + i * 3) % 256) as u8;
                    [40, g, (y * 8) as u8]
                })
            } else {
                Frame::from_fn(WIDTH, HEIGHT, |x, _| {
                    if (x + i) % 4 < 2 {
                        [230, 210, 60]
                    } else {
                        [20, 30, 90]
                    }
                })
            }
        })
        .collect()
}

fn v3_frames() -> Vec<Frame> {
    (0..25u32)
        .map(|i| {
            Frame::from_fn(WIDTH, HEIGHT, |x, y| {
                let h = (x.wrapping_mul(73_856_093) ^ y.wrapping_mul(19_349_663)) % 97;
                let v = (h * 2 + i) as u8;
                [v / 2, v / 2, v]
            })
        })
        .collect()
}

/// Writes the corpus under `dir` and returns the manifest and score file paths.
pub fn write_fixture(dir: &Path) -> io::Result<FixturePaths> {
    let frames = dir.join("frames");
    for (id, video_frames) in [
        ("v1", v1_frames()),
        ("v2", v2_frames()),
        ("v3", v3_frames()),
    ] {
        write_frames(&frames.join(id), &video_frames).map_err(io::Error::other)?;
    }
    let manifest = dir.join("manifest.jsonl");
    fs::write(&manifest, MANIFEST)?;
    let concepts = vec![dir.join("netA.csv"), dir.join("netB.csv")];
    fs::write(&concepts[0], NET_A)?;
    fs::write(&concepts[1], NET_B)?;
    Ok(FixturePaths { manifest, concepts })
}
