#![allow(dead_code)]

use mwpose::geometry::{project, CameraIntrinsics, Pose, Rotation};
use mwpose::manhattan_rotation::{AxisPair, RotationProblem};
use mwpose::pipeline::{run_sequence, run_sequence_with_initial, FrameObservation, TrackerConfig};
use mwpose::synthworld::{generate_sequence, RenderConfig, SequenceConfig, SyntheticSequence};
use mwpose::translation::PointCorrespondence;
use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation<f64> {
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    Rotation::exp(&(unit_vector(rng) * angle))
}

/// `exp(angle · a) R` for a random unit axis `a`.
pub fn perturb(r: &Rotation<f64>, angle_rad: f64, rng: &mut ChaCha8Rng) -> Rotation<f64> {
    Rotation::exp(&(unit_vector(rng) * angle_rad)) * *r
}

pub fn desk_intrinsics() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
}

/// Three-axis problem: reference axes `frame`, observations `truth · d_k`
/// each tilted by an isotropic Gaussian rotation of `noise_rad` per
/// component.
pub fn axis_problem(
    frame: &Rotation<f64>,
    truth: &Rotation<f64>,
    initial: Rotation<f64>,
    noise_rad: f64,
    rng: &mut ChaCha8Rng,
) -> RotationProblem<f64> {
    let normal = Normal::new(0.0, noise_rad.max(f64::MIN_POSITIVE)).unwrap();
    let pairs = (0..3)
        .map(|k| {
            let dir = frame.matrix().column(k).into_owned();
            let mut delta = truth * &dir;
            if noise_rad > 0.0 {
                let tilt = Vector3::from_fn(|_, _| normal.sample(rng));
                delta = Rotation::exp(&tilt) * delta;
            }
            AxisPair {
                delta,
                dir,
                axis: k,
                observed: k,
                weight: 1.0,
            }
        })
        .collect();
    RotationProblem::new(pairs, initial)
}

/// Random points 2 to 10 m in front of `pose` and their exact pixels.
pub fn visible_points(
    pose: &Pose<f64>,
    k: &CameraIntrinsics<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<PointCorrespondence<f64>> {
    (0..n)
        .map(|_| {
            let cam = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(2.0..10.0),
            );
            let world = pose.rotation.transpose() * (cam - pose.translation);
            let pixel = project(&world, pose, k).unwrap();
            PointCorrespondence::new(world, pixel)
        })
        .collect()
}

pub fn add_pixel_noise(corrs: &mut [PointCorrespondence<f64>], sigma: f64, rng: &mut ChaCha8Rng) {
    let normal = Normal::new(0.0, sigma).unwrap();
    for c in corrs {
        c.pixel += Vector2::new(normal.sample(rng), normal.sample(rng));
    }
}

pub fn noisy_corridor(seed: u64) -> SyntheticSequence {
    generate_sequence(&SequenceConfig {
        seed,
        render: RenderConfig {
            pixel_noise_sigma: 0.5,
            outlier_fraction: 0.1,
            ..Default::default()
        },
        ..Default::default()
    })
    .unwrap()
}

pub fn clean_corridor(seed: u64, frames: usize) -> SyntheticSequence {
    generate_sequence(&SequenceConfig {
        seed,
        frames,
        ..Default::default()
    })
    .unwrap()
}

/// Constant-velocity propagation from the first two ground-truth poses with
/// no rotation or translation refinement.
pub fn dead_reckoning(seq: &SyntheticSequence) -> Vec<Pose<f64>> {
    let cfg = TrackerConfig {
        optimize_rotation: false,
        refine_translation: false,
        ..Default::default()
    };
    let gt = seq.ground_truth();
    run_sequence_with_initial(&seq.observations(), &seq.intrinsics, &cfg, &gt[..2])
        .unwrap()
        .poses
}

pub fn track(obs: &[FrameObservation<f64>], k: &CameraIntrinsics<f64>) -> Vec<Pose<f64>> {
    run_sequence(obs, k, &TrackerConfig::default())
        .unwrap()
        .poses
}

/// Orthogonal polar factor by the Newton iteration `X ← (X + X⁻ᵀ) / 2`.
pub fn polar_newton(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut x = *m;
    for _ in 0..100 {
        let next = (x + x.try_inverse().unwrap().transpose()) * 0.5;
        let done = (next - x).norm() < 1e-15;
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Horn's closed-form absolute orientation with scale: rotation from the
/// dominant eigenvector of the 4×4 quaternion matrix, scale from the
/// projected cross term. Returns `(s, R, t)` mapping `src` onto `dst`.
pub fn horn_similarity(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
) -> (f64, Matrix3<f64>, Vector3<f64>) {
    let n = src.len() as f64;
    let ms = src.iter().sum::<Vector3<f64>>() / n;
    let md = dst.iter().sum::<Vector3<f64>>() / n;
    let mut m = Matrix3::zeros();
    let mut ss = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s - ms, d - md);
        m += a * b.transpose();
        ss += a.norm_squared();
    }
    let (sxx, sxy, sxz) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let (syx, syy, syz) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
    let (szx, szy, szz) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);
    #[rustfmt::skip]
    let nmat = Matrix4::new(
        sxx + syy + szz, syz - szy,        szx - sxz,        sxy - syx,
        syz - szy,       sxx - syy - szz,  sxy + syx,        szx + sxz,
        szx - sxz,       sxy + syx,        -sxx + syy - szz, syz + szy,
        sxy - syx,       szx + sxz,        syz + szy,        -sxx - syy + szz,
    );
    let eig = nmat.symmetric_eigen();
    let q = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    #[rustfmt::skip]
    let r = Matrix3::new(
        w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z),         2.0 * (x * z + w * y),
        2.0 * (y * x + w * z),         w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
        2.0 * (z * x - w * y),         2.0 * (z * y + w * x),         w * w - x * x - y * y + z * z,
    );
    let cross: f64 = src
        .iter()
        .zip(dst)
        .map(|(s, d)| (d - md).dot(&(r * (s - ms))))
        .sum();
    let scale = cross / ss;
    (scale, r, md - r * ms * scale)
}

/// ATE from scratch: each estimate takes the nearest ground-truth stamp
/// within 20 ms, scanning everything.
pub fn naive_ate(est: &[Pose<f64>], gt: &[Pose<f64>]) -> f64 {
    let center = |p: &Pose<f64>| -(p.rotation.transpose() * p.translation);
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    for e in est {
        let nearest = gt.iter().min_by(|a, b| {
            (a.timestamp - e.timestamp)
                .abs()
                .total_cmp(&(b.timestamp - e.timestamp).abs())
        });
        if let Some(g) = nearest.filter(|g| (g.timestamp - e.timestamp).abs() <= 0.02) {
            src.push(center(e));
            dst.push(center(g));
        }
    }
    let (s, r, t) = horn_similarity(&src, &dst);
    let sum: f64 = src
        .iter()
        .zip(&dst)
        .map(|(a, b)| (b - (r * a * s + t)).norm_squared())
        .sum();
    (sum / src.len() as f64).sqrt()
}

/// A random smooth-ish trajectory at 30 Hz.
pub fn random_trajectory(n: usize, rng: &mut ChaCha8Rng) -> Vec<Pose<f64>> {
    let mut c = Vector3::zeros();
    let mut r = random_rotation(rng);
    (0..n)
        .map(|i| {
            c += Vector3::new(
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
            );
            r = perturb(&r, 0.02, rng);
            Pose::from_center(r, &c, i as f64 / 30.0)
        })
        .collect()
}
