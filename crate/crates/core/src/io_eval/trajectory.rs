//! TUM trajectory files: `timestamp tx ty tz qx qy qz qw` per line, where
//! `t` is the camera center and `q` the camera-to-world rotation.

use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{parse_error, read_text, records, write_text};
use crate::error::Result;
use crate::geometry::{Pose, Rotation};

pub const TRAJECTORY_HEADER: &str = "# timestamp tx ty tz qx qy qz qw";

pub fn parse_trajectory(text: &str, origin: &str) -> Result<Vec<Pose<f64>>> {
    let mut poses: Vec<Pose<f64>> = Vec::new();
    for rec in records(text, origin, 8) {
        let (line, f) = rec?;
        let q = Quaternion::new(f[7], f[4], f[5], f[6]);
        if q.norm() < 1e-9 {
            return Err(parse_error(origin, line, "zero quaternion"));
        }
        let cam_to_world = Rotation::from_quaternion(&UnitQuaternion::from_quaternion(q));
        if let Some(prev) = poses.last() {
            if f[0] <= prev.timestamp {
                return Err(parse_error(
                    origin,
                    line,
                    format!(
                        "timestamp {} does not increase (previous {})",
                        f[0], prev.timestamp
                    ),
                ));
            }
        }
        let center = Vector3::new(f[1], f[2], f[3]);
        poses.push(Pose::from_center(cam_to_world.transpose(), &center, f[0]));
    }
    Ok(poses)
}

/// Formats poses with shortest round-trip decimals (exponent form for very
/// small or large magnitudes); quaternions are written with `qw >= 0`.
pub fn write_trajectory(poses: &[Pose<f64>]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for p in poses {
        let c = p.center();
        let mut q = *p.rotation.transpose().to_quaternion().quaternion();
        if q.w < 0.0 {
            q = -q;
        }
        out.push_str(&format!(
            "{:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?}\n",
            p.timestamp,
            c.x + 0.0,
            c.y + 0.0,
            c.z + 0.0,
            q.i + 0.0,
            q.j + 0.0,
            q.k + 0.0,
            q.w
        ));
    }
    out
}

pub fn read_trajectory(path: &Path) -> Result<Vec<Pose<f64>>> {
    parse_trajectory(&read_text(path)?, &path.display().to_string())
}

pub fn write_trajectory_file(path: &Path, poses: &[Pose<f64>]) -> Result<()> {
    write_text(path, &write_trajectory(poses))
}
