//! Manhattan-frame rotation refinement.
//!
//! Each cluster of parallel 3D lines yields a dominant direction as the null
//! vector of its stacked great-circle normals. The directions found in the
//! anchor frame are frozen as the world Manhattan frame `d_k`; in later frames
//! the observed vanishing directions `δ_k` constrain the absolute rotation
//! through `δ_k ~ R d_k`, and `E(R) = Σ_k ∠(δ_k, R d_k)` is minimized with
//! Levenberg–Marquardt over left-multiplied SO(3) increments.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonical_hemisphere, Rotation};
use crate::scalar::Real;

/// A dominant direction together with `max_i |s_i · d|` over its cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantDirection<T: Real> {
    pub direction: Vector3<T>,
    pub residual: T,
}

/// Least-squares null direction of a cluster of great-circle normals.
pub fn dominant_direction<T: Real>(normals: &[Vector3<T>]) -> Result<DominantDirection<T>> {
    if normals.len() < 2 {
        return Err(Error::InsufficientLines {
            needed: 2,
            got: normals.len(),
        });
    }
    let rows: Vec<Vector3<T>> = normals.iter().map(|s| s.normalize()).collect();
    // Zero padding keeps the full right-singular basis when n < 3.
    let s = DMatrix::from_fn(rows.len().max(3), 3, |r, c| {
        rows.get(r).map_or(T::zero(), |v| v[c])
    });
    let svd = s.svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or(Error::DegenerateCluster)?;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let smallest = svd.singular_values[order[0]];
    let second = svd.singular_values[order[1]];
    if second - smallest < T::lit(1e-6) {
        return Err(Error::DegenerateCluster);
    }
    let row = v_t.row(order[0]);
    let direction = canonical_hemisphere(Vector3::new(row[0], row[1], row[2]).normalize());
    let residual = rows
        .iter()
        .map(|s| s.dot(&direction).abs())
        .fold(T::zero(), |a, b| a.max(b));
    Ok(DominantDirection {
        direction,
        residual,
    })
}

/// Three orthonormal Manhattan axes in world coordinates (matrix columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManhattanFrame<T: Real> {
    pub axes: Rotation<T>,
    /// Index of the frame that established the axes.
    pub established_at: usize,
}

impl<T: Real> ManhattanFrame<T> {
    pub fn axis(&self, k: usize) -> Vector3<T> {
        self.axes.matrix().column(k).into_owned()
    }

    /// Re-expresses camera-frame axes in the world, given the camera rotation.
    pub fn to_world(&self, camera_rotation: &Rotation<T>) -> Self {
        Self {
            axes: camera_rotation.transpose() * self.axes,
            established_at: self.established_at,
        }
    }
}

/// Nearest rotation to `[d1|d2|d3]` in Frobenius norm.
///
/// Axis signs are free in a Manhattan frame, so a left-handed input has its
/// third column negated before the polar decomposition.
pub fn orthonormalize_frame<T: Real>(
    d1: &Vector3<T>,
    d2: &Vector3<T>,
    d3: &Vector3<T>,
    established_at: usize,
) -> Result<ManhattanFrame<T>> {
    let cols = [d1.normalize(), d2.normalize(), d3.normalize()];
    let gate = T::lit(0.2);
    for i in 0..3 {
        if !cols[i].iter().all(|v| v.as_f64().is_finite()) {
            return Err(Error::NotFrameLike);
        }
        for j in i + 1..3 {
            if cols[i].dot(&cols[j]).abs() >= gate {
                return Err(Error::NotFrameLike);
            }
        }
    }
    let mut m = Matrix3::from_columns(&cols);
    if m.determinant() < T::zero() {
        m.set_column(2, &(-cols[2]));
    }
    let svd = m.svd(true, true);
    let (mut u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < T::zero() {
        let k = svd.singular_values.imin();
        u.column_mut(k).neg_mut();
        r = u * v_t;
    }
    Ok(ManhattanFrame {
        axes: Rotation::from_matrix_unchecked(r),
        established_at,
    })
}

/// One matched axis: observed direction, reference direction, weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisPair<T: Real> {
    pub delta: Vector3<T>,
    pub dir: Vector3<T>,
    /// Index of the reference axis in the Manhattan frame.
    pub axis: usize,
    /// Index into the observed directions passed to [`match_vps_to_frame`].
    pub observed: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationProblem<T: Real> {
    pub pairs: Vec<AxisPair<T>>,
    pub initial: Rotation<T>,
}

impl<T: Real> RotationProblem<T> {
    pub fn new(pairs: Vec<AxisPair<T>>, initial: Rotation<T>) -> Self {
        Self { pairs, initial }
    }
}

/// Greedy association of observed directions with the frame axes predicted
/// by `r_init`. Observed directions are sign-corrected toward their match and
/// associations weaker than `cos(gate)` are dropped.
pub fn match_vps_to_frame<T: Real>(
    deltas: &[Vector3<T>],
    frame: &ManhattanFrame<T>,
    r_init: &Rotation<T>,
    gate: T,
) -> Result<RotationProblem<T>> {
    let predicted: Vec<Vector3<T>> = (0..3).map(|k| r_init * &frame.axis(k)).collect();
    let mut used_obs = vec![false; deltas.len()];
    let mut used_axis = [false; 3];
    let min_dot = gate.cos();
    let mut pairs = Vec::new();

    for _ in 0..deltas.len().min(3) {
        let mut best: Option<(usize, usize, T)> = None;
        for (i, delta) in deltas.iter().enumerate() {
            if used_obs[i] {
                continue;
            }
            for (k, p) in predicted.iter().enumerate() {
                if used_axis[k] {
                    continue;
                }
                let d = delta.dot(p).abs();
                if best.is_none_or(|(_, _, b)| d > b) {
                    best = Some((i, k, d));
                }
            }
        }
        let Some((i, k, d)) = best else { break };
        used_obs[i] = true;
        used_axis[k] = true;
        if d < min_dot {
            continue;
        }
        let delta = deltas[i].normalize();
        let delta = if delta.dot(&predicted[k]) < T::zero() {
            -delta
        } else {
            delta
        };
        pairs.push(AxisPair {
            delta,
            dir: frame.axis(k),
            axis: k,
            observed: i,
            weight: T::one(),
        });
    }
    if pairs.is_empty() {
        return Err(Error::NoMatch);
    }
    pairs.sort_by_key(|p| p.axis);
    Ok(RotationProblem::new(pairs, *r_init))
}

/// Angle between `delta` and `R d`, computed as `atan2(|δ × Rd|, δ · Rd)`,
/// which equals `acos(clamp(δ · Rd, -1, 1))` for unit vectors.
fn axis_angle_error<T: Real>(r: &Rotation<T>, pair: &AxisPair<T>) -> T {
    let rd = r * &pair.dir;
    pair.delta.cross(&rd).norm().atan2(pair.delta.dot(&rd))
}

/// `E(R) = Σ_k w_k ∠(δ_k, R d_k)` in radians.
pub fn rotation_cost_at<T: Real>(r: &Rotation<T>, problem: &RotationProblem<T>) -> T {
    problem
        .pairs
        .iter()
        .map(|p| p.weight * axis_angle_error(r, p))
        .fold(T::zero(), |a, b| a + b)
}

/// Cost at `R = exp(ω)`.
pub fn rotation_cost<T: Real>(omega: &Vector3<T>, problem: &RotationProblem<T>) -> T {
    rotation_cost_at(&Rotation::exp(omega), problem)
}

/// Per-axis gradients of `∠(δ_k, R d_k)` with respect to a left increment
/// `R ← exp([ε]×) R`: `J_k = δ_kᵀ [R d_k]× / sqrt(1 - (δ_k · R d_k)²)`.
/// Axes with `|δ · R d| >= 1 - 1e-12` get a zero row.
pub fn rotation_jacobian_at<T: Real>(
    r: &Rotation<T>,
    problem: &RotationProblem<T>,
) -> Vec<Vector3<T>> {
    let limit = T::one() - T::lit(1e-12);
    problem
        .pairs
        .iter()
        .map(|p| {
            let rd = r * &p.dir;
            let c = p.delta.dot(&rd);
            if c.abs() >= limit {
                return Vector3::zeros();
            }
            let sin = (T::one() - c * c).sqrt();
            // δᵀ [a]× = (δ × a)ᵀ
            p.delta.cross(&rd) * (p.weight / sin)
        })
        .collect()
}

pub fn rotation_jacobian<T: Real>(
    omega: &Vector3<T>,
    problem: &RotationProblem<T>,
) -> Vec<Vector3<T>> {
    rotation_jacobian_at(&Rotation::exp(omega), problem)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub initial_lambda: f64,
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            initial_lambda: 1e-3,
            max_iterations: 20,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate<T: Real> {
    pub rotation: Rotation<T>,
    pub initial_cost: T,
    pub final_cost: T,
    pub iterations: usize,
}

/// Levenberg–Marquardt on the per-axis angular residuals.
///
/// A step is accepted only if it strictly lowers `E`, so the returned cost
/// never exceeds the initial one.
pub fn optimize_rotation<T: Real>(
    problem: &RotationProblem<T>,
    config: &LmConfig,
) -> Result<RotationEstimate<T>> {
    if problem.pairs.len() < 2 {
        return Err(Error::Underconstrained(problem.pairs.len()));
    }
    let mut r = problem.initial;
    let initial_cost = rotation_cost_at(&r, problem);
    let mut cost = initial_cost;
    let mut lambda = T::lit(config.initial_lambda);
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let jac = rotation_jacobian_at(&r, problem);
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for (j, p) in jac.iter().zip(&problem.pairs) {
            let e = p.weight * axis_angle_error(&r, p);
            h += j * j.transpose();
            g += j * e;
        }
        if g.norm() == T::zero() {
            break;
        }
        let damped = h + Matrix3::identity() * lambda;
        let Some(step) = damped.cholesky().map(|c| -c.solve(&g)) else {
            lambda *= T::lit(10.0);
            continue;
        };
        let candidate = Rotation::exp(&step) * r;
        let new_cost = rotation_cost_at(&candidate, problem);
        if new_cost < cost {
            let decrease = cost - new_cost;
            r = candidate;
            cost = new_cost;
            lambda /= T::lit(10.0);
            if decrease < T::lit(config.cost_tolerance) {
                break;
            }
        } else {
            lambda *= T::lit(10.0);
        }
        if step.norm() < T::lit(config.step_tolerance) {
            break;
        }
    }
    Ok(RotationEstimate {
        rotation: r,
        initial_cost,
        final_cost: cost,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn frame(r: Rotation<f64>) -> ManhattanFrame<f64> {
        ManhattanFrame {
            axes: r,
            established_at: 0,
        }
    }

    #[test]
    fn null_of_two_rows() {
        let d = dominant_direction(&[Vector3::<f64>::x(), Vector3::y()]).unwrap();
        assert_relative_eq!(d.direction, Vector3::z(), epsilon = 1e-15);
        assert!(d.residual < 1e-15);
    }

    #[test]
    fn identical_normals_are_degenerate() {
        assert!(matches!(
            dominant_direction(&[Vector3::<f64>::x(), Vector3::x()]),
            Err(Error::DegenerateCluster)
        ));
        assert!(matches!(
            dominant_direction(&[Vector3::<f64>::x()]),
            Err(Error::InsufficientLines { .. })
        ));
    }

    #[test]
    fn dominant_direction_ignores_scale_and_order() {
        let normals = [
            Vector3::new(1.0, 0.0, 0.01),
            Vector3::new(0.0, 1.0, -0.02),
            Vector3::new(0.7, 0.7, 0.0),
        ];
        let a = dominant_direction(&normals).unwrap().direction;
        let scaled = [normals[2] * 4.0, normals[0] * 0.1, normals[1] * 7.0];
        let b = dominant_direction(&scaled).unwrap().direction;
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn rotation_columns_pass_through() {
        let r = Rotation::exp(&Vector3::new(0.3, -0.2, 1.1));
        let m = r.matrix();
        let f = orthonormalize_frame(
            &m.column(0).into_owned(),
            &m.column(1).into_owned(),
            &m.column(2).into_owned(),
            0,
        )
        .unwrap();
        assert_relative_eq!(f.axes.matrix(), m, epsilon = 1e-12);
    }

    #[test]
    fn left_handed_frame_is_flipped() {
        let f =
            orthonormalize_frame(&Vector3::<f64>::x(), &Vector3::y(), &-Vector3::z(), 0).unwrap();
        assert_relative_eq!(f.axes.matrix(), &Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn repeated_axis_is_not_a_frame() {
        assert!(matches!(
            orthonormalize_frame(&Vector3::<f64>::x(), &Vector3::x(), &Vector3::z(), 0),
            Err(Error::NotFrameLike)
        ));
    }

    #[test]
    fn matching_recovers_permutation_and_signs() {
        let f = frame(Rotation::identity());
        let deltas = [-Vector3::z(), Vector3::x(), -Vector3::y()];
        let p = match_vps_to_frame(&deltas, &f, &Rotation::identity(), 20f64.to_radians()).unwrap();
        assert_eq!(p.pairs.len(), 3);
        for pair in &p.pairs {
            assert_relative_eq!(pair.delta, pair.dir);
        }
        assert_eq!(
            p.pairs.iter().map(|p| p.axis).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn matching_keeps_axes_after_small_rotation() {
        let f = frame(Rotation::exp(&Vector3::new(0.4, 0.1, -0.3)));
        let r_init = Rotation::exp(&Vector3::new(0.05, 0.2, 0.0));
        let turn = Rotation::exp(&(Vector3::new(1.0, 2.0, -1.0).normalize() * 5f64.to_radians()));
        let deltas: Vec<_> = (0..3).map(|k| turn * (r_init * f.axis(k))).collect();
        let p = match_vps_to_frame(&deltas, &f, &r_init, 20f64.to_radians()).unwrap();
        assert_eq!(p.pairs.len(), 3);
    }

    #[test]
    fn matching_is_permutation_invariant() {
        let f = frame(Rotation::exp(&Vector3::new(0.4, 0.1, -0.3)));
        let r_init = Rotation::exp(&Vector3::new(0.05, 0.2, 0.0));
        let turn = Rotation::exp(&Vector3::new(0.03, -0.02, 0.05));
        let deltas: Vec<_> = (0..3).map(|k| -(turn * (r_init * f.axis(k)))).collect();
        let gate = 20f64.to_radians();
        let a = match_vps_to_frame(&deltas, &f, &r_init, gate).unwrap();
        let shuffled = [deltas[2], deltas[0], deltas[1]];
        let b = match_vps_to_frame(&shuffled, &f, &r_init, gate).unwrap();
        let strip = |p: &RotationProblem<f64>| {
            p.pairs
                .iter()
                .map(|q| (q.delta, q.dir, q.axis))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        let order: Vec<_> = b.pairs.iter().map(|q| q.observed).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn unmatched_directions_error() {
        let f = frame(Rotation::identity());
        let tilt = Vector3::new(1.0, 1.0, 1.0).normalize();
        assert!(matches!(
            match_vps_to_frame(&[tilt], &f, &Rotation::identity(), 20f64.to_radians()),
            Err(Error::NoMatch)
        ));
    }

    #[test]
    fn cost_examples() {
        let r = Rotation::exp(&Vector3::new(0.1, 0.2, 0.3));
        let f = frame(Rotation::identity());
        let pairs = (0..3)
            .map(|k| AxisPair {
                delta: r * f.axis(k),
                dir: f.axis(k),
                axis: k,
                observed: k,
                weight: 1.0,
            })
            .collect();
        let p = RotationProblem::new(pairs, r);
        assert!(rotation_cost(&r.log(), &p) < 1e-15);

        let tilt = Rotation::exp(&Vector3::new(10f64.to_radians(), 0.0, 0.0));
        let single = RotationProblem::new(
            vec![AxisPair {
                delta: tilt * Vector3::z(),
                dir: Vector3::z(),
                axis: 2,
                observed: 0,
                weight: 1.0,
            }],
            Rotation::identity(),
        );
        assert_relative_eq!(
            rotation_cost(&Vector3::zeros(), &single),
            10f64.to_radians(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            rotation_cost(&Vector3::zeros(), &single),
            0.17453,
            epsilon = 1e-5
        );
    }

    #[test]
    fn jacobian_saturation_and_unit_norm() {
        let aligned = RotationProblem::new(
            vec![AxisPair {
                delta: Vector3::x(),
                dir: Vector3::x(),
                axis: 0,
                observed: 0,
                weight: 1.0,
            }],
            Rotation::identity(),
        );
        assert_eq!(
            rotation_jacobian(&Vector3::zeros(), &aligned)[0],
            Vector3::zeros()
        );

        let orthogonal = RotationProblem::new(
            vec![AxisPair {
                delta: Vector3::y(),
                dir: Vector3::x(),
                axis: 0,
                observed: 0,
                weight: 1.0,
            }],
            Rotation::identity(),
        );
        let j = rotation_jacobian(&Vector3::zeros(), &orthogonal)[0];
        assert_relative_eq!(j.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_axis_is_underconstrained() {
        let p = RotationProblem::new(
            vec![AxisPair {
                delta: Vector3::x(),
                dir: Vector3::x(),
                axis: 0,
                observed: 0,
                weight: 1.0,
            }],
            Rotation::identity(),
        );
        assert!(matches!(
            optimize_rotation(&p, &LmConfig::default()),
            Err(Error::Underconstrained(1))
        ));
    }

    #[test]
    fn two_axes_pin_the_rotation() {
        let truth = Rotation::exp(&Vector3::new(0.2, -0.4, 0.1));
        let f = frame(Rotation::exp(&Vector3::new(-0.3, 0.5, 0.2)));
        let init = Rotation::exp(&Vector3::new(0.03, 0.02, -0.04)) * truth;
        let pairs = (0..2)
            .map(|k| AxisPair {
                delta: truth * f.axis(k),
                dir: f.axis(k),
                axis: k,
                observed: k,
                weight: 1.0,
            })
            .collect();
        let est =
            optimize_rotation(&RotationProblem::new(pairs, init), &LmConfig::default()).unwrap();
        assert!(est.rotation.angle_to(&truth) < 1e-5);
        assert!(est.final_cost <= est.initial_cost);
    }

    #[test]
    fn single_precision_optimization() {
        let truth = Rotation::exp(&Vector3::new(0.2f32, -0.4, 0.1));
        let init = Rotation::exp(&Vector3::new(0.05f32, 0.0, -0.03)) * truth;
        let pairs = (0..3)
            .map(|k| {
                let mut d = Vector3::zeros();
                d[k] = 1.0f32;
                AxisPair {
                    delta: truth * d,
                    dir: d,
                    axis: k,
                    observed: k,
                    weight: 1.0,
                }
            })
            .collect();
        let est =
            optimize_rotation(&RotationProblem::new(pairs, init), &LmConfig::default()).unwrap();
        assert!(est.rotation.angle_to(&truth) < 1e-3);
    }
}
