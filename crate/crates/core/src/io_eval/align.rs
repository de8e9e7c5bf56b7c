//! Timestamp association, 7-DoF similarity alignment and ATE.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Rotation};
use crate::scalar::Real;

/// Maximum timestamp difference for two poses to be associated, seconds.
pub const ASSOCIATION_WINDOW_S: f64 = 0.02;

/// `x ↦ s R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity<T: Real> {
    pub scale: T,
    pub rotation: Rotation<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Similarity<T> {
    pub fn identity() -> Self {
        Self {
            scale: T::one(),
            rotation: Rotation::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vector3<T>) -> Vector3<T> {
        (&self.rotation * x) * self.scale + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.transpose();
        let scale = T::one() / self.scale;
        Self {
            scale,
            rotation,
            translation: -(rotation * self.translation) * scale,
        }
    }

    /// Camera pose after moving the world by this similarity. Positions map
    /// through [`Similarity::apply`]; orientation is rotated accordingly.
    pub fn transform_pose(&self, pose: &Pose<T>) -> Pose<T> {
        let rotation = pose.rotation * self.rotation.transpose();
        Pose::from_center(rotation, &self.apply(&pose.center()), pose.timestamp)
    }
}

fn check_spread<T: Real>(points: &[Vector3<T>], mean: &Vector3<T>) -> Result<()> {
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let mut ev: Vec<T> = cov.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let tol = T::default_epsilon() * T::lit(1e4);
    if ev[0].partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || ev[1] <= ev[0] * tol {
        return Err(Error::CollinearDegenerate);
    }
    Ok(())
}

fn centroid<T: Real>(points: &[Vector3<T>]) -> Vector3<T> {
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + p);
    sum / T::lit(points.len() as f64)
}

/// Least-squares similarity mapping `src` onto `dst`:
/// minimizes `Σ ‖dst_i − (s R src_i + t)‖²`.
pub fn umeyama<T: Real>(src: &[Vector3<T>], dst: &[Vector3<T>]) -> Result<Similarity<T>> {
    assert_eq!(src.len(), dst.len(), "point sets must be paired");
    if src.len() < 3 {
        return Err(Error::InsufficientPairs(src.len()));
    }
    let n = T::lit(src.len() as f64);
    let (mu_s, mu_d) = (centroid(src), centroid(dst));
    check_spread(src, &mu_s)?;
    check_spread(dst, &mu_d)?;

    let mut sigma = Matrix3::zeros();
    let mut var_s = T::zero();
    for (s, d) in src.iter().zip(dst) {
        let (cs, cd) = (s - mu_s, d - mu_d);
        sigma += cd * cs.transpose();
        var_s += cs.norm_squared();
    }
    sigma /= n;
    var_s /= n;

    let svd = sigma.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut signs = Vector3::repeat(T::one());
    if u.determinant() * v_t.determinant() < T::zero() {
        signs[2] = -T::one();
    }
    let r = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = svd.singular_values.component_mul(&signs).sum() / var_s;
    let rotation = Rotation::from_matrix_unchecked(r);
    let translation = mu_d - (rotation * mu_s) * scale;
    Ok(Similarity {
        scale,
        rotation,
        translation,
    })
}

/// One-to-one association by timestamp: candidate pairs within `max_dt` are
/// taken greedily in order of increasing time difference. Returned pairs
/// `(est, gt)` are sorted by estimate index.
pub fn associate<T: Real>(est: &[Pose<T>], gt: &[Pose<T>], max_dt: f64) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, e) in est.iter().enumerate() {
        let lo = gt.partition_point(|g| g.timestamp < e.timestamp - max_dt);
        for (j, g) in gt.iter().enumerate().skip(lo) {
            let dt = (g.timestamp - e.timestamp).abs();
            if g.timestamp > e.timestamp + max_dt {
                break;
            }
            if dt <= max_dt {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let (mut used_e, mut used_g) = (vec![false; est.len()], vec![false; gt.len()]);
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_e[i] && !used_g[j] {
            used_e[i] = true;
            used_g[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

fn paired_centers<T: Real>(
    est: &[Pose<T>],
    gt: &[Pose<T>],
    pairs: &[(usize, usize)],
) -> (Vec<Vector3<T>>, Vec<Vector3<T>>) {
    pairs
        .iter()
        .map(|&(i, j)| (est[i].center(), gt[j].center()))
        .unzip()
}

/// Similarity taking estimated camera centers onto ground truth, after
/// timestamp association.
pub fn umeyama_align_7dof<T: Real>(est: &[Pose<T>], gt: &[Pose<T>]) -> Result<Similarity<T>> {
    let pairs = associate(est, gt, ASSOCIATION_WINDOW_S);
    let (src, dst) = paired_centers(est, gt, &pairs);
    umeyama(&src, &dst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteReport<T: Real> {
    pub rmse: T,
    pub alignment: Similarity<T>,
    /// Associated `(est, gt)` index pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Aligned position error per pair, meters.
    pub residuals: Vec<T>,
    pub unmatched_est: usize,
    pub unmatched_gt: usize,
}

impl<T: Real> AteReport<T> {
    /// `timestamp,residual` rows keyed by the estimate timestamps.
    pub fn residual_csv(&self, est: &[Pose<T>]) -> String {
        let mut out = String::from("timestamp,residual\n");
        for (&(i, _), r) in self.pairs.iter().zip(&self.residuals) {
            out.push_str(&format!("{:.9},{:.9}\n", est[i].timestamp, r.as_f64()));
        }
        out
    }
}

pub fn evaluate_ate<T: Real>(est: &[Pose<T>], gt: &[Pose<T>]) -> Result<AteReport<T>> {
    let pairs = associate(est, gt, ASSOCIATION_WINDOW_S);
    let (src, dst) = paired_centers(est, gt, &pairs);
    let alignment = umeyama(&src, &dst)?;
    let residuals: Vec<T> = src
        .iter()
        .zip(&dst)
        .map(|(s, d)| (d - alignment.apply(s)).norm())
        .collect();
    let sum_sq = residuals.iter().fold(T::zero(), |acc, r| acc + *r * *r);
    let rmse = (sum_sq / T::lit(residuals.len() as f64)).sqrt();
    Ok(AteReport {
        rmse,
        alignment,
        unmatched_est: est.len() - pairs.len(),
        unmatched_gt: gt.len() - pairs.len(),
        pairs,
        residuals,
    })
}

/// Absolute trajectory error (RMSE of aligned camera centers), meters.
pub fn ate_rmse<T: Real>(est: &[Pose<T>], gt: &[Pose<T>]) -> Result<T> {
    evaluate_ate(est, gt).map(|r| r.rmse)
}
