//! Translation refinement with a known rotation.
//!
//! With `R` fixed, the pinhole equations become linear in `t`. Each
//! correspondence `(X, (u, v))` contributes two rows
//!
//! ```text
//! [-1  0  x̄] t = (R X)₁ - (R X)₃ x̄,    x̄ = (u - cx) / fx
//! [ 0 -1  ȳ] t = (R X)₂ - (R X)₃ ȳ,    ȳ = (v - cy) / fy
//! ```
//!
//! whose residual at the true `t` is the depth-scaled reprojection error.
//! The stacked system is solved robustly by RANSAC over two-point samples
//! followed by a least-squares refit on the consensus set.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, CameraIntrinsics, Pose, Rotation};
use crate::scalar::Real;

/// A 3D world point and its observed pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCorrespondence<T: Real> {
    pub world: Vector3<T>,
    pub pixel: Vector2<T>,
}

impl<T: Real> PointCorrespondence<T> {
    pub fn new(world: Vector3<T>, pixel: Vector2<T>) -> Self {
        Self { world, pixel }
    }
}

/// Stacked `A t = b` system, two rows per correspondence.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSystem<T: Real> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    /// Correspondence index of each row pair.
    pub row_map: Vec<usize>,
}

impl<T: Real> TranslationSystem<T> {
    /// `A t - b`.
    pub fn residual(&self, t: &Vector3<T>) -> DVector<T> {
        &self.a * t - &self.b
    }
}

fn append_rows<T: Real>(
    a: &mut DMatrix<T>,
    b: &mut DVector<T>,
    row: usize,
    c: &PointCorrespondence<T>,
    r: &Rotation<T>,
    k: &CameraIntrinsics<T>,
) {
    let rx = r * &c.world;
    let xn = (c.pixel.x - k.cx) / k.fx;
    let yn = (c.pixel.y - k.cy) / k.fy;
    a[(row, 0)] = -T::one();
    a[(row, 1)] = T::zero();
    a[(row, 2)] = xn;
    a[(row + 1, 0)] = T::zero();
    a[(row + 1, 1)] = -T::one();
    a[(row + 1, 2)] = yn;
    b[row] = rx.x - rx.z * xn;
    b[row + 1] = rx.y - rx.z * yn;
}

pub fn build_translation_system<T: Real>(
    corrs: &[PointCorrespondence<T>],
    r: &Rotation<T>,
    k: &CameraIntrinsics<T>,
) -> Result<TranslationSystem<T>> {
    build_subset(corrs, (0..corrs.len()).collect(), r, k)
}

fn build_subset<T: Real>(
    corrs: &[PointCorrespondence<T>],
    indices: Vec<usize>,
    r: &Rotation<T>,
    k: &CameraIntrinsics<T>,
) -> Result<TranslationSystem<T>> {
    if indices.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: indices.len(),
        });
    }
    let n = indices.len();
    let mut a = DMatrix::zeros(2 * n, 3);
    let mut b = DVector::zeros(2 * n);
    for (slot, &i) in indices.iter().enumerate() {
        append_rows(&mut a, &mut b, 2 * slot, &corrs[i], r, k);
    }
    Ok(TranslationSystem {
        a,
        b,
        row_map: indices,
    })
}

/// Solves `AᵀA t = Aᵀb`.
pub fn solve_normal_equations<T: Real>(system: &TranslationSystem<T>) -> Result<Vector3<T>> {
    let ata: Matrix3<T> = (system.a.transpose() * &system.a)
        .fixed_view::<3, 3>(0, 0)
        .into_owned();
    let atb: Vector3<T> = (system.a.transpose() * &system.b)
        .fixed_rows::<3>(0)
        .into_owned();
    let eig = SymmetricEigen::new(ata);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > T::zero() {
        (max / min).as_f64()
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition >= 1e12 {
        return Err(Error::RankDeficient { condition });
    }
    ata.cholesky()
        .map(|c| c.solve(&atb))
        .ok_or(Error::RankDeficient { condition })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Reprojection inlier threshold in pixels.
    pub threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            threshold: 2.0,
            min_inliers: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationEstimate<T: Real> {
    pub translation: Vector3<T>,
    pub inliers: Vec<bool>,
}

impl<T: Real> TranslationEstimate<T> {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|b| **b).count()
    }
}

fn consensus<T: Real>(
    corrs: &[PointCorrespondence<T>],
    pose: &Pose<T>,
    k: &CameraIntrinsics<T>,
    threshold: T,
) -> Vec<bool> {
    corrs
        .iter()
        .map(|c| match project(&c.world, pose, k) {
            Ok(p) => (p - c.pixel).norm() <= threshold,
            Err(_) => false,
        })
        .collect()
}

/// The two distinct correspondence indices drawn at one RANSAC iteration.
/// Depends only on `(seed, iteration)`.
fn sample_pair(seed: u64, iteration: usize, n: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Robust translation given `R`: two-point RANSAC scored by pixel
/// reprojection error, then a least-squares refit on the largest consensus
/// set (the first found wins ties).
pub fn ransac_translation<T: Real>(
    corrs: &[PointCorrespondence<T>],
    r: &Rotation<T>,
    k: &CameraIntrinsics<T>,
    config: &RansacConfig,
) -> Result<TranslationEstimate<T>> {
    let n = corrs.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let threshold = T::lit(config.threshold);
    let mut best: Option<(usize, Vec<bool>)> = None;
    for it in 0..config.iterations {
        let (i, j) = sample_pair(config.seed, it, n);
        let Ok(system) = build_subset(corrs, vec![i, j], r, k) else {
            continue;
        };
        let Ok(t) = solve_normal_equations(&system) else {
            continue;
        };
        let mask = consensus(corrs, &Pose::new(*r, t, 0.0), k, threshold);
        let count = mask.iter().filter(|b| **b).count();
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            best = Some((count, mask));
        }
    }
    let (count, inliers) = best.unwrap_or((0, vec![false; n]));
    if count < config.min_inliers {
        return Err(Error::NoConsensus {
            best: count,
            needed: config.min_inliers,
        });
    }
    let indices = inliers
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(i, _)| i)
        .collect();
    let translation = solve_normal_equations(&build_subset(corrs, indices, r, k)?)?;
    Ok(TranslationEstimate {
        translation,
        inliers,
    })
}
