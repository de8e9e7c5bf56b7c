//! Observation directory layout.
//!
//! | file              | record                                  |
//! |-------------------|-----------------------------------------|
//! | `intrinsics.txt`  | `key value` for fx, fy, cx, cy, width, height |
//! | `lines.txt`       | `frame x1 y1 x2 y2` (pixels)            |
//! | `points.txt`      | `frame u v X Y Z` (pixels, meters)      |
//! | `frames.txt`      | `frame timestamp` (optional)            |
//! | `groundtruth.txt` | TUM trajectory (written by `synth`)     |
//!
//! Frames without a `frames.txt` entry are stamped at `index / 30` s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Vector2, Vector3};

use super::{parse_error, read_text, records, write_text};
use crate::error::Result;
use crate::geometry::{CameraIntrinsics, LineObservation};
use crate::pipeline::FrameObservation;
use crate::translation::PointCorrespondence;

pub const INTRINSICS_FILE: &str = "intrinsics.txt";
pub const LINES_FILE: &str = "lines.txt";
pub const POINTS_FILE: &str = "points.txt";
pub const FRAMES_FILE: &str = "frames.txt";
pub const GROUNDTRUTH_FILE: &str = "groundtruth.txt";

const DEFAULT_RATE_HZ: f64 = 30.0;

pub fn parse_intrinsics(text: &str, origin: &str) -> Result<CameraIntrinsics<f64>> {
    let mut values: BTreeMap<&str, f64> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [key, value] = fields[..] else {
            return Err(parse_error(origin, i + 1, "expected `key value`"));
        };
        if !["fx", "fy", "cx", "cy", "width", "height"].contains(&key) {
            return Err(parse_error(origin, i + 1, format!("unknown key `{key}`")));
        }
        let v: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_error(origin, i + 1, format!("invalid value `{value}`")))?;
        if values.insert(key, v).is_some() {
            return Err(parse_error(origin, i + 1, format!("duplicate key `{key}`")));
        }
    }
    let last = text.lines().count();
    let get = |key: &str| {
        values
            .get(key)
            .copied()
            .ok_or_else(|| parse_error(origin, last, format!("missing key `{key}`")))
    };
    let k = CameraIntrinsics::new(get("fx")?, get("fy")?, get("cx")?, get("cy")?)
        .map_err(|e| parse_error(origin, last, e.to_string()))?;
    match (values.get("width"), values.get("height")) {
        (None, None) => Ok(k),
        (Some(w), Some(h)) if w.fract() == 0.0 && h.fract() == 0.0 && *w >= 1.0 && *h >= 1.0 => k
            .with_image_size(*w as usize, *h as usize)
            .map_err(|e| parse_error(origin, last, e.to_string())),
        _ => Err(parse_error(
            origin,
            last,
            "width and height must both be positive integers",
        )),
    }
}

pub fn write_intrinsics(k: &CameraIntrinsics<f64>) -> String {
    let mut out = format!(
        "fx {:?}\nfy {:?}\ncx {:?}\ncy {:?}\n",
        k.fx, k.fy, k.cx, k.cy
    );
    if let Some((w, h)) = k.image_size {
        let _ = write!(out, "width {w}\nheight {h}\n");
    }
    out
}

fn frame_index(value: f64, origin: &str, line: usize) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(parse_error(
            origin,
            line,
            format!("invalid frame index {value}"),
        ));
    }
    Ok(value as usize)
}

pub fn parse_lines(
    text: &str,
    origin: &str,
    k: &CameraIntrinsics<f64>,
) -> Result<Vec<(usize, LineObservation<f64>)>> {
    records(text, origin, 5)
        .map(|rec| {
            let (line, f) = rec?;
            let frame = frame_index(f[0], origin, line)?;
            let obs = LineObservation::new(Vector2::new(f[1], f[2]), Vector2::new(f[3], f[4]), k)
                .map_err(|e| parse_error(origin, line, e.to_string()))?;
            Ok((frame, obs))
        })
        .collect()
}

pub fn parse_points(text: &str, origin: &str) -> Result<Vec<(usize, PointCorrespondence<f64>)>> {
    records(text, origin, 6)
        .map(|rec| {
            let (line, f) = rec?;
            let frame = frame_index(f[0], origin, line)?;
            Ok((
                frame,
                PointCorrespondence::new(Vector3::new(f[3], f[4], f[5]), Vector2::new(f[1], f[2])),
            ))
        })
        .collect()
}

pub fn parse_frames(text: &str, origin: &str) -> Result<Vec<(usize, f64)>> {
    records(text, origin, 2)
        .map(|rec| {
            let (line, f) = rec?;
            Ok((frame_index(f[0], origin, line)?, f[1]))
        })
        .collect()
}

pub fn write_lines(frames: &[FrameObservation<f64>]) -> String {
    let mut out = String::from("# frame x1 y1 x2 y2\n");
    for f in frames {
        for l in &f.lines {
            let _ = writeln!(
                out,
                "{} {:?} {:?} {:?} {:?}",
                f.frame_index, l.sp.x, l.sp.y, l.ep.x, l.ep.y
            );
        }
    }
    out
}

pub fn write_points(frames: &[FrameObservation<f64>]) -> String {
    let mut out = String::from("# frame u v X Y Z\n");
    for f in frames {
        for p in &f.points {
            let _ = writeln!(
                out,
                "{} {:?} {:?} {:?} {:?} {:?}",
                f.frame_index, p.pixel.x, p.pixel.y, p.world.x, p.world.y, p.world.z
            );
        }
    }
    out
}

pub fn write_frames(frames: &[FrameObservation<f64>]) -> String {
    let mut out = String::from("# frame timestamp\n");
    for f in frames {
        let _ = writeln!(out, "{} {:?}", f.frame_index, f.timestamp);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub intrinsics: CameraIntrinsics<f64>,
    pub frames: Vec<FrameObservation<f64>>,
}

/// Groups parsed records into frames ordered by index.
pub fn assemble_frames(
    lines: Vec<(usize, LineObservation<f64>)>,
    points: Vec<(usize, PointCorrespondence<f64>)>,
    stamps: &[(usize, f64)],
) -> Vec<FrameObservation<f64>> {
    let stamp_of: BTreeMap<usize, f64> = stamps.iter().copied().collect();
    let indices: BTreeSet<usize> = lines
        .iter()
        .map(|(i, _)| *i)
        .chain(points.iter().map(|(i, _)| *i))
        .chain(stamp_of.keys().copied())
        .collect();
    let mut frames: BTreeMap<usize, FrameObservation<f64>> = indices
        .into_iter()
        .map(|i| {
            let timestamp = stamp_of
                .get(&i)
                .copied()
                .unwrap_or(i as f64 / DEFAULT_RATE_HZ);
            (
                i,
                FrameObservation {
                    frame_index: i,
                    timestamp,
                    lines: Vec::new(),
                    points: Vec::new(),
                },
            )
        })
        .collect();
    for (i, l) in lines {
        frames.get_mut(&i).expect("index collected").lines.push(l);
    }
    for (i, p) in points {
        frames.get_mut(&i).expect("index collected").points.push(p);
    }
    frames.into_values().collect()
}

pub fn load_observations(dir: &Path) -> Result<ObservationSet> {
    let origin = |name: &str| dir.join(name).display().to_string();
    let intrinsics = parse_intrinsics(
        &read_text(&dir.join(INTRINSICS_FILE))?,
        &origin(INTRINSICS_FILE),
    )?;
    let lines = parse_lines(
        &read_text(&dir.join(LINES_FILE))?,
        &origin(LINES_FILE),
        &intrinsics,
    )?;
    let points = parse_points(&read_text(&dir.join(POINTS_FILE))?, &origin(POINTS_FILE))?;
    let frames_path = dir.join(FRAMES_FILE);
    let stamps = if frames_path.exists() {
        parse_frames(&read_text(&frames_path)?, &origin(FRAMES_FILE))?
    } else {
        Vec::new()
    };
    Ok(ObservationSet {
        intrinsics,
        frames: assemble_frames(lines, points, &stamps),
    })
}

pub fn save_observations(
    dir: &Path,
    k: &CameraIntrinsics<f64>,
    frames: &[FrameObservation<f64>],
) -> Result<()> {
    write_text(&dir.join(INTRINSICS_FILE), &write_intrinsics(k))?;
    write_text(&dir.join(LINES_FILE), &write_lines(frames))?;
    write_text(&dir.join(POINTS_FILE), &write_points(frames))?;
    write_text(&dir.join(FRAMES_FILE), &write_frames(frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn k() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
    }

    #[test]
    fn intrinsics_round_trip() {
        let k = k().with_image_size(640, 480).unwrap();
        assert_eq!(parse_intrinsics(&write_intrinsics(&k), "k").unwrap(), k);
    }

    #[test]
    fn intrinsics_errors_name_the_line() {
        let err =
            parse_intrinsics("fx 500\nfy 500\ncx 320\ncy 240\nfocal 3\n", "k.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        assert!(parse_intrinsics("fx 500\nfy 500\ncx 320\n", "k").is_err());
        assert!(parse_intrinsics("fx -1\nfy 500\ncx 320\ncy 240\n", "k").is_err());
    }

    #[test]
    fn frames_group_records_and_default_stamps() {
        let lines =
            parse_lines("0 10 10 100 10\n0 10 10 10 100\n3 0 0 50 50\n", "l", &k()).unwrap();
        let points = parse_points("# c\n2 1 2 0.5 0.5 4\n", "p").unwrap();
        let frames = assemble_frames(lines, points, &[(3, 7.5)]);
        let idx: Vec<_> = frames.iter().map(|f| f.frame_index).collect();
        assert_eq!(idx, vec![0, 2, 3]);
        assert_eq!(frames[0].lines.len(), 2);
        assert_eq!(frames[1].points.len(), 1);
        assert!(frames[1].lines.is_empty());
        assert_eq!(frames[1].timestamp, 2.0 / 30.0);
        assert_eq!(frames[2].timestamp, 7.5);
    }

    #[test]
    fn bad_records_are_rejected() {
        assert!(matches!(
            parse_lines("0 1 1 1 1\n", "l", &k()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_points("1.5 1 2 3 4 5\n", "p").is_err());
        assert!(parse_points("1 1 2 3 4 nan\n", "p").is_err());
    }
}
