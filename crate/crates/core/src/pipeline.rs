//! Frame-by-frame tracking loop.
//!
//! Each frame: constant-velocity prediction, vanishing point detection and
//! line clustering, Manhattan-frame anchoring (once), rotation refinement
//! against the anchored axes, then robust translation from point
//! correspondences. Any stage that cannot run falls back to the prediction
//! and records a [`Fallback`] in the frame's diagnostics.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, LineObservation, Pose, Rotation};
use crate::manhattan_rotation::{
    dominant_direction, match_vps_to_frame, optimize_rotation, orthonormalize_frame, LmConfig,
    ManhattanFrame,
};
use crate::scalar::Real;
use crate::translation::{ransac_translation, PointCorrespondence, RansacConfig};
use crate::vp_detect::{cluster_lines, estimate_vps, VpConfig};

/// Everything observed in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation<T: Real> {
    pub frame_index: usize,
    pub timestamp: f64,
    pub lines: Vec<LineObservation<T>>,
    pub points: Vec<PointCorrespondence<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub vp: VpConfig,
    /// Minimum cluster size for a direction to be used.
    pub min_cluster_lines: usize,
    pub lm: LmConfig,
    pub ransac: RansacConfig,
    /// Angular gate for associating directions with frame axes, degrees.
    pub match_gate_deg: f64,
    /// Clustering tolerance around seed directions before SVD refinement,
    /// degrees.
    pub seed_tolerance_deg: f64,
    /// Once anchored, also seed clustering with the predicted axes and keep
    /// whichever seed set explains more lines.
    pub guided_clustering: bool,
    /// Weight each matched axis by its cluster size in the rotation cost.
    pub weight_by_cluster_size: bool,
    /// Observed directions required to anchor the Manhattan frame (2 or 3).
    pub anchor_min_axes: usize,
    pub optimize_rotation: bool,
    pub refine_translation: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            vp: VpConfig::default(),
            min_cluster_lines: 5,
            lm: LmConfig::default(),
            ransac: RansacConfig::default(),
            match_gate_deg: 20.0,
            seed_tolerance_deg: 3.0,
            guided_clustering: true,
            weight_by_cluster_size: false,
            anchor_min_axes: 3,
            optimize_rotation: true,
            refine_translation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fallback {
    /// Pose supplied by the caller instead of being estimated.
    KnownPose,
    VpDetectionFailed,
    /// No Manhattan frame anchored yet.
    Unanchored,
    /// Fewer than two directions matched the anchored frame.
    RotationUnderconstrained,
    RotationDisabled,
    RotationNonFinite,
    TranslationNoConsensus,
    TranslationDisabled,
    TranslationNonFinite,
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fallback::KnownPose => "known_pose",
            Fallback::VpDetectionFailed => "vp_failed",
            Fallback::Unanchored => "unanchored",
            Fallback::RotationUnderconstrained => "rotation_underconstrained",
            Fallback::RotationDisabled => "rotation_disabled",
            Fallback::RotationNonFinite => "rotation_nonfinite",
            Fallback::TranslationNoConsensus => "translation_no_consensus",
            Fallback::TranslationDisabled => "translation_disabled",
            Fallback::TranslationNonFinite => "translation_nonfinite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDiagnostics {
    pub frame_index: usize,
    pub timestamp: f64,
    pub n_lines: usize,
    pub n_points: usize,
    /// Lines per detected direction.
    pub cluster_sizes: [usize; 3],
    pub anchored_here: bool,
    /// Clusters were seeded by the predicted axes rather than the detection.
    pub guided: bool,
    pub matched_axes: usize,
    pub rotation_cost_before: Option<f64>,
    pub rotation_cost_after: Option<f64>,
    pub lm_iterations: usize,
    pub translation_inliers: Option<usize>,
    pub fallbacks: Vec<Fallback>,
}

impl FrameDiagnostics {
    pub const CSV_HEADER: &'static str = "frame,timestamp,lines,points,cluster1,cluster2,cluster3,anchored,guided,matched_axes,cost_before,cost_after,lm_iterations,inliers,fallbacks";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        let fallbacks: Vec<String> = self.fallbacks.iter().map(|f| f.to_string()).collect();
        format!(
            "{},{:.9},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.frame_index,
            self.timestamp,
            self.n_lines,
            self.n_points,
            self.cluster_sizes[0],
            self.cluster_sizes[1],
            self.cluster_sizes[2],
            u8::from(self.anchored_here),
            u8::from(self.guided),
            self.matched_axes,
            opt(self.rotation_cost_before),
            opt(self.rotation_cost_after),
            self.lm_iterations,
            self.translation_inliers
                .map(|n| n.to_string())
                .unwrap_or_default(),
            fallbacks.join("|"),
        )
    }
}

/// Constant-velocity prediction: reapplies the last inter-frame motion.
/// With a single prior the prior itself is returned.
pub fn propagate_pose<T: Real>(
    last: Option<&Pose<T>>,
    second_last: Option<&Pose<T>>,
) -> Result<Pose<T>> {
    let last = last.ok_or(Error::NoPrior)?;
    let Some(prev) = second_last else {
        return Ok(*last);
    };
    let delta = last.rotation * prev.rotation.transpose();
    let rotation = (delta * last.rotation).renormalized();
    let translation = last.translation + delta * (last.translation - prev.translation);
    Ok(Pose::new(rotation, translation, last.timestamp))
}

/// Directions of one frame after clustering and per-cluster SVD.
#[derive(Debug, Clone, PartialEq)]
struct Refined<T: Real> {
    dirs: Vec<Vector3<T>>,
    /// Cluster size behind each entry of `dirs`.
    dir_sizes: Vec<usize>,
    sizes: [usize; 3],
    clustered: usize,
}

fn refine_once<T: Real>(
    lines: &[LineObservation<T>],
    seeds: &[Vector3<T>],
    tau: T,
    min_lines: usize,
) -> Refined<T> {
    let labels = cluster_lines(lines, seeds, tau);
    let sizes = labels.counts();
    let mut dirs = Vec::new();
    let mut dir_sizes = Vec::new();
    let mut clustered = 0;
    for (k, &size) in sizes.iter().enumerate().take(seeds.len()) {
        if size < min_lines.max(2) {
            continue;
        }
        let normals: Vec<_> = labels.members(k).map(|i| lines[i].s).collect();
        if let Ok(d) = dominant_direction(&normals) {
            dirs.push(d.direction);
            dir_sizes.push(size);
            clustered += size;
        }
    }
    Refined {
        dirs,
        dir_sizes,
        sizes,
        clustered,
    }
}

const FINE_PASSES: usize = 3;

/// Clusters around `seeds` with the coarse tolerance and refines by SVD,
/// then reclusters around the refined directions with the fine tolerance
/// until the clusters stop growing. A missing third axis is seeded with the
/// cross product of the other two.
fn refine_directions<T: Real>(
    lines: &[LineObservation<T>],
    seeds: &[Vector3<T>],
    config: &TrackerConfig,
) -> Refined<T> {
    let coarse = T::lit(config.seed_tolerance_deg.to_radians());
    let fine = T::lit(config.vp.cluster_tolerance);
    let mut best = refine_once(lines, seeds, coarse, config.min_cluster_lines);
    for pass in 0..FINE_PASSES {
        let mut seeds = best.dirs.clone();
        if let [a, b] = seeds[..] {
            seeds.push(a.cross(&b).normalize());
        }
        if seeds.is_empty() {
            break;
        }
        let tau = if pass == 0 && seeds.len() > best.dirs.len() {
            coarse
        } else {
            fine
        };
        let next = refine_once(lines, &seeds, tau, config.min_cluster_lines);
        if next.dirs.len() < best.dirs.len() || (pass > 0 && next.clustered <= best.clustered) {
            break;
        }
        best = next;
    }
    best
}

fn frame_from_directions<T: Real>(dirs: &[Vector3<T>], at: usize) -> Option<ManhattanFrame<T>> {
    match dirs {
        [d1, d2] => orthonormalize_frame(d1, d2, &d1.cross(d2), at).ok(),
        [d1, d2, d3, ..] => orthonormalize_frame(d1, d2, d3, at).ok(),
        _ => None,
    }
}

struct Observed<T: Real> {
    dirs: Vec<Vector3<T>>,
    dir_sizes: Vec<usize>,
    sizes: [usize; 3],
    guided: bool,
}

/// Tracker state carried between frames.
#[derive(Debug, Clone)]
pub struct Tracker<T: Real> {
    pub config: TrackerConfig,
    pub intrinsics: CameraIntrinsics<T>,
    /// World-frame Manhattan axes, once anchored.
    pub frame: Option<ManhattanFrame<T>>,
    last: Option<Pose<T>>,
    second_last: Option<Pose<T>>,
    pub diagnostics: Vec<FrameDiagnostics>,
}

impl<T: Real> Tracker<T> {
    pub fn new(intrinsics: CameraIntrinsics<T>, config: TrackerConfig) -> Self {
        Self {
            config,
            intrinsics,
            frame: None,
            last: None,
            second_last: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn last_pose(&self) -> Option<&Pose<T>> {
        self.last.as_ref()
    }

    pub fn propagate(&self) -> Result<Pose<T>> {
        propagate_pose(self.last.as_ref(), self.second_last.as_ref())
    }

    fn push_pose(&mut self, pose: Pose<T>) {
        self.second_last = self.last.replace(pose);
    }

    /// Anchors the Manhattan frame if it is not set yet and `dirs` allow it.
    fn try_anchor(&mut self, dirs: &[Vector3<T>], rotation: &Rotation<T>, at: usize) -> bool {
        if self.frame.is_some() || dirs.len() < self.config.anchor_min_axes.clamp(2, 3) {
            return false;
        }
        match frame_from_directions(dirs, at) {
            Some(mf) => {
                self.frame = Some(mf.to_world(rotation));
                true
            }
            None => false,
        }
    }

    fn check_observations(obs: &FrameObservation<T>) -> Result<()> {
        if obs.lines.len() < 2 {
            return Err(Error::InsufficientObservations(format!(
                "need at least 2 lines, got {}",
                obs.lines.len()
            )));
        }
        if obs.points.len() < 2 {
            return Err(Error::InsufficientObservations(format!(
                "need at least 2 point correspondences, got {}",
                obs.points.len()
            )));
        }
        Ok(())
    }

    fn new_diagnostics(obs: &FrameObservation<T>) -> FrameDiagnostics {
        FrameDiagnostics {
            frame_index: obs.frame_index,
            timestamp: obs.timestamp,
            n_lines: obs.lines.len(),
            n_points: obs.points.len(),
            ..Default::default()
        }
    }

    /// Vanishing directions of a frame. Seeds come from the polar-grid
    /// detection and, once anchored, from the axes predicted by `rotation`;
    /// the seed set whose refined clusters hold more lines wins.
    fn observe(&self, lines: &[LineObservation<T>], rotation: &Rotation<T>) -> Option<Observed<T>> {
        let detected = estimate_vps(lines, &self.intrinsics, &self.config.vp)
            .ok()
            .map(|vps| refine_directions(lines, &vps.directions, &self.config));
        let guided = match (&self.frame, self.config.guided_clustering) {
            (Some(mf), true) => {
                let seeds: Vec<_> = (0..3).map(|k| rotation * &mf.axis(k)).collect();
                Some(refine_directions(lines, &seeds, &self.config))
            }
            _ => None,
        };
        let (best, guided) = match (detected, guided) {
            (Some(d), Some(g)) if g.clustered > d.clustered => (g, true),
            (Some(d), _) => (d, false),
            (None, Some(g)) => (g, true),
            (None, None) => return None,
        };
        Some(Observed {
            dirs: best.dirs,
            dir_sizes: best.dir_sizes,
            sizes: best.sizes,
            guided,
        })
    }

    /// Accepts a known pose for this frame and uses it for anchoring.
    pub fn accept_known(&mut self, obs: &FrameObservation<T>, pose: Pose<T>) -> Pose<T> {
        let mut diag = Self::new_diagnostics(obs);
        diag.fallbacks.push(Fallback::KnownPose);
        let pose = Pose::new(pose.rotation, pose.translation, obs.timestamp);
        if obs.lines.len() >= 2 {
            if let Some(found) = self.observe(&obs.lines, &pose.rotation) {
                diag.cluster_sizes = found.sizes;
                diag.guided = found.guided;
                diag.anchored_here = self.try_anchor(&found.dirs, &pose.rotation, obs.frame_index);
            }
        }
        self.diagnostics.push(diag);
        self.push_pose(pose);
        pose
    }

    pub fn track_frame(&mut self, obs: &FrameObservation<T>) -> Result<Pose<T>> {
        Self::check_observations(obs)?;
        let predicted = self.propagate()?;
        let mut diag = Self::new_diagnostics(obs);
        let cfg = self.config;

        let (dirs, dir_sizes) = match self.observe(&obs.lines, &predicted.rotation) {
            Some(found) => {
                diag.cluster_sizes = found.sizes;
                diag.guided = found.guided;
                (Some(found.dirs), found.dir_sizes)
            }
            None => {
                diag.fallbacks.push(Fallback::VpDetectionFailed);
                (None, Vec::new())
            }
        };

        let mut rotation = predicted.rotation;
        if let Some(dirs) = &dirs {
            diag.anchored_here = self.try_anchor(dirs, &predicted.rotation, obs.frame_index);
        }
        match (&self.frame, &dirs) {
            _ if diag.anchored_here => {}
            _ if !cfg.optimize_rotation => diag.fallbacks.push(Fallback::RotationDisabled),
            (None, _) => diag.fallbacks.push(Fallback::Unanchored),
            (Some(_), None) => {}
            (Some(mf), Some(dirs)) => {
                let gate = T::lit(cfg.match_gate_deg.to_radians());
                let estimate = match_vps_to_frame(dirs, mf, &predicted.rotation, gate).and_then(
                    |mut problem| {
                        diag.matched_axes = problem.pairs.len();
                        if cfg.weight_by_cluster_size {
                            let mean = problem
                                .pairs
                                .iter()
                                .map(|p| dir_sizes[p.observed])
                                .sum::<usize>() as f64
                                / problem.pairs.len() as f64;
                            for p in &mut problem.pairs {
                                p.weight = T::lit(dir_sizes[p.observed] as f64 / mean);
                            }
                        }
                        optimize_rotation(&problem, &cfg.lm)
                    },
                );
                match estimate {
                    Ok(est) => {
                        diag.rotation_cost_before = Some(est.initial_cost.as_f64());
                        diag.rotation_cost_after = Some(est.final_cost.as_f64());
                        diag.lm_iterations = est.iterations;
                        if est.rotation.matrix().iter().all(|v| v.as_f64().is_finite()) {
                            rotation = est.rotation.renormalized();
                        } else {
                            diag.fallbacks.push(Fallback::RotationNonFinite);
                        }
                    }
                    Err(_) => diag.fallbacks.push(Fallback::RotationUnderconstrained),
                }
            }
        }

        let mut translation = predicted.translation;
        if cfg.refine_translation {
            match ransac_translation(&obs.points, &rotation, &self.intrinsics, &cfg.ransac) {
                Ok(est) => {
                    diag.translation_inliers = Some(est.inlier_count());
                    if est.translation.iter().all(|v| v.as_f64().is_finite()) {
                        translation = est.translation;
                    } else {
                        diag.fallbacks.push(Fallback::TranslationNonFinite);
                    }
                }
                Err(_) => diag.fallbacks.push(Fallback::TranslationNoConsensus),
            }
        } else {
            diag.fallbacks.push(Fallback::TranslationDisabled);
        }

        let pose = Pose::new(rotation, translation, obs.timestamp);
        self.diagnostics.push(diag);
        self.push_pose(pose);
        Ok(pose)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput<T: Real> {
    pub poses: Vec<Pose<T>>,
    pub diagnostics: Vec<FrameDiagnostics>,
}

/// Tracks a whole sequence with frame 0 at the identity.
pub fn run_sequence<T: Real>(
    observations: &[FrameObservation<T>],
    k: &CameraIntrinsics<T>,
    config: &TrackerConfig,
) -> Result<TrackOutput<T>> {
    run_sequence_with_initial(observations, k, config, &[Pose::identity(0.0)])
}

/// Tracks a sequence whose first `initial.len()` poses are given.
pub fn run_sequence_with_initial<T: Real>(
    observations: &[FrameObservation<T>],
    k: &CameraIntrinsics<T>,
    config: &TrackerConfig,
    initial: &[Pose<T>],
) -> Result<TrackOutput<T>> {
    if observations.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut tracker = Tracker::new(*k, *config);
    let mut poses = Vec::with_capacity(observations.len());
    for (i, obs) in observations.iter().enumerate() {
        let pose = match initial.get(i) {
            Some(p) => tracker.accept_known(obs, *p),
            None => tracker
                .track_frame(obs)
                .map_err(|e| e.at_frame(obs.frame_index))?,
        };
        poses.push(pose);
    }
    Ok(TrackOutput {
        poses,
        diagnostics: tracker.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthworld::{generate_sequence, SequenceConfig};
    use nalgebra::Vector2;

    fn yaw(deg: f64) -> Rotation<f64> {
        Rotation::exp(&Vector3::new(0.0, 0.0, deg.to_radians()))
    }

    #[test]
    fn zero_velocity_prediction() {
        let p = Pose::new(yaw(10.0), Vector3::new(1.0, 2.0, 3.0), 0.0);
        let q = propagate_pose(Some(&p), Some(&p)).unwrap();
        assert!(q.rotation.angle_to(&p.rotation) < 1e-12);
        assert!((q.translation - p.translation).norm() < 1e-12);
    }

    #[test]
    fn prediction_repeats_yaw_step() {
        let a = Pose::new(yaw(0.0), Vector3::zeros(), 0.0);
        let b = Pose::new(yaw(2.0), Vector3::zeros(), 0.0);
        let c = propagate_pose(Some(&b), Some(&a)).unwrap();
        assert!((c.rotation.angle_to(&yaw(4.0))).abs() < 1e-12);
        assert!((c.rotation.angle_to(&b.rotation).to_degrees() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn prediction_needs_a_prior() {
        assert!(matches!(
            propagate_pose::<f64>(None, None),
            Err(Error::NoPrior)
        ));
        let p = Pose::new(yaw(5.0), Vector3::x(), 0.0);
        assert_eq!(propagate_pose(Some(&p), None).unwrap(), p);
    }

    #[test]
    fn prediction_extrapolates_rigid_motion() {
        let step = Pose::new(
            Rotation::exp(&Vector3::new(0.01, -0.03, 0.02)),
            Vector3::new(0.1, -0.2, 0.05),
            0.0,
        );
        let compose = |a: &Pose<f64>, b: &Pose<f64>| {
            Pose::new(
                a.rotation * b.rotation,
                a.rotation * b.translation + a.translation,
                0.0,
            )
        };
        let p0 = Pose::new(yaw(30.0), Vector3::new(1.0, 0.5, -2.0), 0.0);
        let p1 = compose(&step, &p0);
        let p2 = compose(&step, &p1);
        let pred = propagate_pose(Some(&p1), Some(&p0)).unwrap();
        assert!(pred.rotation.angle_to(&p2.rotation) < 1e-12);
        assert!((pred.translation - p2.translation).norm() < 1e-12);
    }

    fn sequence(frames: usize, seed: u64) -> crate::synthworld::SyntheticSequence {
        generate_sequence(&SequenceConfig {
            seed,
            frames,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn two_frame_sequence_matches_truth() {
        let seq = sequence(2, 1);
        let out = run_sequence(
            &seq.observations(),
            &seq.intrinsics,
            &TrackerConfig::default(),
        )
        .unwrap();
        let gt = seq.ground_truth();
        assert_eq!(out.diagnostics.len(), 2);
        assert!(out.diagnostics[0].anchored_here);
        assert!(out.poses[1].rotation.angle_to(&gt[1].rotation) < 1e-3);
        assert!((out.poses[1].translation - gt[1].translation).norm() < 1e-3);
    }

    #[test]
    fn cluster_size_weighting_keeps_noise_free_frames_exact() {
        let seq = sequence(3, 1);
        let cfg = TrackerConfig {
            weight_by_cluster_size: true,
            ..Default::default()
        };
        let out = run_sequence(&seq.observations(), &seq.intrinsics, &cfg).unwrap();
        let gt = seq.ground_truth();
        for (p, g) in out.poses.iter().zip(&gt) {
            assert!(p.rotation.angle_to(&g.rotation) < 1e-3);
            assert!((p.translation - g.translation).norm() < 1e-3);
        }
    }

    #[test]
    fn anchoring_waits_for_three_axes() {
        let seq = sequence(3, 1);
        let mut obs = seq.observations();
        // Keep only two of the three line families in the first frame.
        let keep: Vec<_> = seq.frames[0]
            .truth
            .line_axes
            .iter()
            .map(|&l| l != 2)
            .collect();
        obs[0].lines = obs[0]
            .lines
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(l, _)| *l)
            .collect();
        let out = run_sequence(&obs, &seq.intrinsics, &TrackerConfig::default()).unwrap();
        assert!(!out.diagnostics[0].anchored_here);
        assert!(out.diagnostics[1].anchored_here);
    }

    #[test]
    fn parallel_lines_fall_back_to_prediction() {
        let seq = sequence(3, 2);
        let k = seq.intrinsics;
        let mut obs = seq.observations();
        // Frame 2 sees only horizontal parallel image lines.
        obs[2].lines = (0..10)
            .map(|i| {
                let y = 40.0 + 30.0 * i as f64;
                LineObservation::new(Vector2::new(50.0, y), Vector2::new(500.0, y), &k).unwrap()
            })
            .collect();
        let out = run_sequence(&obs, &k, &TrackerConfig::default()).unwrap();
        let d = &out.diagnostics[2];
        assert!(
            d.fallbacks.contains(&Fallback::VpDetectionFailed)
                || d.fallbacks.contains(&Fallback::RotationUnderconstrained)
        );
        let predicted = propagate_pose(Some(&out.poses[1]), Some(&out.poses[0])).unwrap();
        assert!(out.poses[2].rotation.angle_to(&predicted.rotation) < 1e-12);
        assert!(d.translation_inliers.is_some());
        let gt = seq.ground_truth();
        assert!((out.poses[2].translation - gt[2].translation).norm() < 0.05);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let seq = sequence(2, 3);
        let mut obs = seq.observations();
        obs[1].points.truncate(1);
        let err = run_sequence(&obs, &seq.intrinsics, &TrackerConfig::default()).unwrap_err();
        match err {
            Error::Frame { frame, source } => {
                assert_eq!(frame, 1);
                assert!(matches!(*source, Error::InsufficientObservations(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let k = crate::synthworld::default_intrinsics();
        assert!(matches!(
            run_sequence::<f64>(&[], &k, &TrackerConfig::default()),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn replay_is_bit_identical() {
        let seq = generate_sequence(&SequenceConfig {
            seed: 9,
            frames: 20,
            render: crate::synthworld::RenderConfig {
                pixel_noise_sigma: 0.5,
                outlier_fraction: 0.1,
                ..Default::default()
            },
            ..Default::default()
        })
        .unwrap();
        let cfg = TrackerConfig::default();
        let a = run_sequence(&seq.observations(), &seq.intrinsics, &cfg).unwrap();
        let b = run_sequence(&seq.observations(), &seq.intrinsics, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diagnostics_csv_has_one_field_per_header_column() {
        let d = FrameDiagnostics {
            fallbacks: vec![Fallback::Unanchored, Fallback::TranslationNoConsensus],
            ..Default::default()
        };
        let cols = FrameDiagnostics::CSV_HEADER.split(',').count();
        assert_eq!(d.csv_row().split(',').count(), cols);
        assert!(d.csv_row().ends_with("unanchored|translation_no_consensus"));
    }
}
