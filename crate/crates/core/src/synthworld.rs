//! Deterministic synthetic Manhattan world.
//!
//! Axis-aligned 3D segments and free 3D points inside a box, a smooth camera
//! trajectory around it, and noisy pinhole renderings of both. Every random
//! draw comes from a ChaCha stream keyed by `(seed, stream)`, so any piece can
//! be regenerated independently.
//!
//! World coordinates use `z` up. Ground truth (poses, segment axis labels,
//! outlier masks) is returned in [`FrameTruth`], separate from the
//! observations handed to the tracker.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, CameraIntrinsics, LineObservation, Pose, Rotation};
use crate::pipeline::FrameObservation;
use crate::translation::PointCorrespondence;

pub const FRAME_RATE_HZ: f64 = 30.0;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Axis-aligned bounding box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extents {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Extents {
    pub fn cube(half: f64) -> Self {
        Self {
            min: [-half; 3],
            max: [half; 3],
        }
    }

    pub fn center(&self) -> Vector3<f64> {
        (Vector3::from(self.min) + Vector3::from(self.max)) * 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment3 {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    /// World axis the segment runs along (0 = x, 1 = y, 2 = z).
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub segments: Vec<Segment3>,
    pub points: Vec<Vector3<f64>>,
    pub extents: Extents,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Segments with lengths `U[0.5, 2.0]` m along each axis, placed inside
/// `extents` (shortened when the box is thinner than the draw), and
/// uniformly distributed points.
pub fn generate_scene(
    seed: u64,
    n_segments_per_axis: usize,
    n_points: usize,
    extents: Extents,
) -> SyntheticScene {
    let mut rng = rng_for(seed, 0);
    let mut segments = Vec::with_capacity(3 * n_segments_per_axis);
    for axis in 0..3 {
        for _ in 0..n_segments_per_axis {
            let span = extents.max[axis] - extents.min[axis];
            let len = rng.random_range(0.5..2.0f64).min(span);
            let mut a = Vector3::zeros();
            for c in 0..3 {
                a[c] = if c == axis {
                    uniform(&mut rng, extents.min[c], extents.max[c] - len)
                } else {
                    uniform(&mut rng, extents.min[c], extents.max[c])
                };
            }
            let mut b = a;
            b[axis] += len;
            segments.push(Segment3 { a, b, axis });
        }
    }
    let points = (0..n_points)
        .map(|_| Vector3::from_fn(|c, _| uniform(&mut rng, extents.min[c], extents.max[c])))
        .collect();
    SyntheticScene {
        segments,
        points,
        extents,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryStyle {
    Orbit,
    Corridor,
}

impl std::str::FromStr for TrajectoryStyle {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "orbit" => Ok(Self::Orbit),
            "corridor" => Ok(Self::Corridor),
            other => Err(format!("unknown trajectory style '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub target: [f64; 3],
    /// Camera distance from the target, meters.
    pub standoff: f64,
    pub pitch_deg: f64,
    /// Heading of the viewing direction, measured from +y toward +x.
    pub base_yaw_deg: f64,
    /// Corridor: yaw oscillation amplitude and period.
    pub yaw_amplitude_deg: f64,
    pub yaw_period_s: f64,
    /// Corridor: walking speed, m/s.
    pub speed: f64,
    /// Corridor: direction of travel relative to the horizontal viewing
    /// direction, degrees (0 walks forward, 90 slides right).
    pub heading_deg: f64,
    /// Corridor: vertical bob amplitude (m) and period (s).
    pub bob_amplitude: f64,
    pub bob_period_s: f64,
    /// Orbit: angular rate around the target, degrees per second.
    pub orbit_rate_deg: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            target: [0.0; 3],
            standoff: 3.5,
            pitch_deg: -20.0,
            base_yaw_deg: 35.0,
            yaw_amplitude_deg: 10.0,
            yaw_period_s: 4.0,
            speed: 0.25,
            heading_deg: 0.0,
            bob_amplitude: 0.03,
            bob_period_s: 1.0,
            orbit_rate_deg: 9.0,
        }
    }
}

fn viewing_direction(yaw: f64, pitch: f64) -> Vector3<f64> {
    Vector3::new(
        pitch.cos() * yaw.sin(),
        pitch.cos() * yaw.cos(),
        pitch.sin(),
    )
}

/// World-to-camera rotation looking along `forward` with world `z` up.
pub fn look_rotation(forward: &Vector3<f64>) -> Rotation<f64> {
    let z = forward.normalize();
    let x = z.cross(&Vector3::z()).normalize();
    let y = z.cross(&x);
    Rotation::from_matrix_unchecked(nalgebra::Matrix3::from_rows(&[
        x.transpose(),
        y.transpose(),
        z.transpose(),
    ]))
}

/// Smooth camera path around the target sampled at 30 Hz.
///
/// `Orbit` circles the target at fixed radius and pitch, always looking at
/// it. `Corridor` walks past the target in a straight line set by
/// `heading_deg` (0 is straight ahead) while the view swings sinusoidally by
/// `±yaw_amplitude_deg` and the height bobs slightly, so the camera centers
/// are never collinear. The seed picks the orbit start angle and the corridor
/// swing phase.
pub fn generate_trajectory(
    seed: u64,
    n_frames: usize,
    style: TrajectoryStyle,
    config: &TrajectoryConfig,
) -> Vec<Pose<f64>> {
    let mut rng = rng_for(seed, 1);
    let target = Vector3::from(config.target);
    let pitch = config.pitch_deg.to_radians();
    let duration = n_frames.saturating_sub(1) as f64 / FRAME_RATE_HZ;

    let pose_at = |yaw: f64, center: Vector3<f64>, ts: f64| {
        let rotation = look_rotation(&viewing_direction(yaw, pitch));
        Pose::from_center(rotation, &center, ts)
    };

    match style {
        TrajectoryStyle::Orbit => {
            let start = config.base_yaw_deg + rng.random_range(-10.0..10.0);
            (0..n_frames)
                .map(|i| {
                    let ts = i as f64 / FRAME_RATE_HZ;
                    let yaw = (start + config.orbit_rate_deg * ts).to_radians();
                    let center = target - viewing_direction(yaw, pitch) * config.standoff;
                    pose_at(yaw, center, ts)
                })
                .collect()
        }
        TrajectoryStyle::Corridor => {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let base_yaw = config.base_yaw_deg.to_radians();
            let base_dir = viewing_direction(base_yaw, pitch);
            let right = base_dir.cross(&Vector3::z()).normalize();
            let ahead = Vector3::z().cross(&right);
            let heading = config.heading_deg.to_radians();
            let travel = ahead * heading.cos() + right * heading.sin();
            let origin = target - base_dir * config.standoff;
            (0..n_frames)
                .map(|i| {
                    let ts = i as f64 / FRAME_RATE_HZ;
                    let swing = (std::f64::consts::TAU * ts / config.yaw_period_s + phase).sin();
                    let yaw = base_yaw + config.yaw_amplitude_deg.to_radians() * swing;
                    let bob = config.bob_amplitude
                        * (std::f64::consts::TAU * ts / config.bob_period_s).sin();
                    let center = origin
                        + travel * (config.speed * (ts - duration / 2.0))
                        + Vector3::z() * bob;
                    pose_at(yaw, center, ts)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub image_size: (usize, usize),
    pub pixel_noise_sigma: f64,
    pub outlier_fraction: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            image_size: (640, 480),
            pixel_noise_sigma: 0.0,
            outlier_fraction: 0.0,
        }
    }
}

/// Ground truth for one rendered frame; never read by the tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub pose: Pose<f64>,
    /// World axis of each emitted line.
    pub line_axes: Vec<usize>,
    /// Index into `SyntheticScene::segments` of each emitted line.
    pub line_segments: Vec<usize>,
    /// Index into `SyntheticScene::points` of each emitted point.
    pub point_ids: Vec<usize>,
    pub point_outliers: Vec<bool>,
    /// Noise-free pixel of each emitted point.
    pub clean_pixels: Vec<Vector2<f64>>,
    /// Noise-free endpoints of each emitted line.
    pub clean_endpoints: Vec<(Vector2<f64>, Vector2<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub observation: FrameObservation<f64>,
    pub truth: FrameTruth,
}

fn in_image(p: &Vector2<f64>, size: (usize, usize)) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x <= size.0 as f64 && p.y <= size.1 as f64
}

fn visible(
    x: &Vector3<f64>,
    pose: &Pose<f64>,
    k: &CameraIntrinsics<f64>,
    size: (usize, usize),
) -> Option<Vector2<f64>> {
    project(x, pose, k).ok().filter(|p| in_image(p, size))
}

/// Projects the scene from `gt_pose`, dropping anything behind the camera or
/// outside the image, then perturbs the surviving 2D coordinates.
pub fn render_frame(
    scene: &SyntheticScene,
    gt_pose: &Pose<f64>,
    k: &CameraIntrinsics<f64>,
    config: &RenderConfig,
    frame_index: usize,
    seed: u64,
) -> Result<RenderedFrame> {
    let mut rng = rng_for(seed, 2 + frame_index as u64);
    let sigma = config.pixel_noise_sigma.max(0.0);
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let jitter = |p: Vector2<f64>, rng: &mut ChaCha8Rng| {
        if sigma > 0.0 {
            p + Vector2::new(noise.sample(rng), noise.sample(rng))
        } else {
            p
        }
    };

    let mut lines = Vec::new();
    let mut line_axes = Vec::new();
    let mut line_segments = Vec::new();
    let mut clean_endpoints = Vec::new();
    for (idx, seg) in scene.segments.iter().enumerate() {
        let (Some(pa), Some(pb)) = (
            visible(&seg.a, gt_pose, k, config.image_size),
            visible(&seg.b, gt_pose, k, config.image_size),
        ) else {
            continue;
        };
        let (na, nb) = (jitter(pa, &mut rng), jitter(pb, &mut rng));
        if let Ok(obs) = LineObservation::new(na, nb, k) {
            lines.push(obs);
            line_axes.push(seg.axis);
            line_segments.push(idx);
            clean_endpoints.push((pa, pb));
        }
    }

    let mut points = Vec::new();
    let mut point_ids = Vec::new();
    let mut clean_pixels = Vec::new();
    for (idx, x) in scene.points.iter().enumerate() {
        if let Some(px) = visible(x, gt_pose, k, config.image_size) {
            points.push(PointCorrespondence::new(*x, jitter(px, &mut rng)));
            point_ids.push(idx);
            clean_pixels.push(px);
        }
    }

    if lines.is_empty() && points.is_empty() {
        return Err(Error::EmptyView);
    }

    let mut point_outliers = vec![false; points.len()];
    let n_out = ((config.outlier_fraction.clamp(0.0, 1.0)) * points.len() as f64).round() as usize;
    if n_out > 0 {
        let (w, h) = config.image_size;
        for i in rand::seq::index::sample(&mut rng, points.len(), n_out).into_iter() {
            points[i].pixel = Vector2::new(
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
            );
            point_outliers[i] = true;
        }
    }

    Ok(RenderedFrame {
        observation: FrameObservation {
            frame_index,
            timestamp: gt_pose.timestamp,
            lines,
            points,
        },
        truth: FrameTruth {
            pose: *gt_pose,
            line_axes,
            line_segments,
            point_ids,
            point_outliers,
            clean_pixels,
            clean_endpoints,
        },
    })
}

/// Everything needed for an end-to-end synthetic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    pub seed: u64,
    pub frames: usize,
    pub style: TrajectoryStyle,
    pub segments_per_axis: usize,
    pub points: usize,
    pub extents: Extents,
    pub trajectory: TrajectoryConfig,
    pub render: RenderConfig,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: 200,
            style: TrajectoryStyle::Corridor,
            segments_per_axis: 40,
            points: 100,
            extents: Extents::cube(1.5),
            trajectory: TrajectoryConfig::default(),
            render: RenderConfig::default(),
        }
    }
}

/// A rendered sequence re-expressed in the first camera's frame: frame 0 has
/// the identity pose and point correspondences carry first-camera
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub scene: SyntheticScene,
    pub intrinsics: CameraIntrinsics<f64>,
    /// World-to-first-camera transform applied to the scene.
    pub anchor: Pose<f64>,
    pub frames: Vec<RenderedFrame>,
}

impl SyntheticSequence {
    pub fn observations(&self) -> Vec<FrameObservation<f64>> {
        self.frames.iter().map(|f| f.observation.clone()).collect()
    }

    pub fn ground_truth(&self) -> Vec<Pose<f64>> {
        self.frames.iter().map(|f| f.truth.pose).collect()
    }
}

pub fn default_intrinsics() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0)
        .and_then(|k| k.with_image_size(640, 480))
        .expect("valid default intrinsics")
}

/// Generates scene, trajectory and frames, then rebases everything onto the
/// first camera.
pub fn generate_sequence(config: &SequenceConfig) -> Result<SyntheticSequence> {
    let k = default_intrinsics();
    let scene = generate_scene(
        config.seed,
        config.segments_per_axis,
        config.points,
        config.extents,
    );
    let mut traj_cfg = config.trajectory;
    traj_cfg.target = config.extents.center().into();
    let poses = generate_trajectory(config.seed, config.frames, config.style, &traj_cfg);
    let anchor = *poses.first().ok_or(Error::EmptySequence)?;

    let mut frames = Vec::with_capacity(poses.len());
    for (i, pose) in poses.iter().enumerate() {
        let mut frame = render_frame(&scene, pose, &k, &config.render, i, config.seed)?;
        let rebased = rebase(pose, &anchor);
        for p in &mut frame.observation.points {
            p.world = anchor.transform(&p.world);
        }
        frame.truth.pose = rebased;
        frames.push(frame);
    }
    Ok(SyntheticSequence {
        scene,
        intrinsics: k,
        anchor,
        frames,
    })
}

/// `pose` expressed relative to the camera of `anchor`.
pub fn rebase(pose: &Pose<f64>, anchor: &Pose<f64>) -> Pose<f64> {
    let rotation = pose.rotation * anchor.rotation.transpose();
    let translation = pose.translation - rotation * anchor.translation;
    Pose::new(rotation, translation, pose.timestamp)
}
