//! Pinhole camera, homogeneous line algebra and SO(3) primitives.
//!
//! Poses follow the world-to-camera convention: a world point `X` maps to
//! camera coordinates `R * X + t`. Camera axes are x right, y down, z forward.

use std::ops::Mul;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pinhole intrinsics `K = [[fx, 0, cx], [0, fy, cy], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    /// Nominal image size in pixels, when declared.
    pub image_size: Option<(usize, usize)>,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            image_size: None,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn with_image_size(mut self, width: usize, height: usize) -> Result<Self> {
        self.image_size = Some((width, height));
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.as_f64().is_finite());
        if !finite {
            return Err(Error::InvalidIntrinsics("non-finite parameter".into()));
        }
        if self.fx <= T::zero() || self.fy <= T::zero() {
            return Err(Error::InvalidIntrinsics(
                "focal lengths must be positive".into(),
            ));
        }
        if let Some((w, h)) = self.image_size {
            let (cx, cy) = (self.cx.as_f64(), self.cy.as_f64());
            if !(0.0..=w as f64).contains(&cx) || !(0.0..=h as f64).contains(&cy) {
                return Err(Error::InvalidIntrinsics(format!(
                    "principal point ({cx}, {cy}) outside the {w}x{h} image"
                )));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(self.fx, z, self.cx, z, self.fy, self.cy, z, z, o)
    }

    /// `K⁻¹ (u, v, 1)`: the (unnormalized) viewing ray of a pixel.
    pub fn unproject(&self, pixel: &Vector2<T>) -> Vector3<T> {
        Vector3::new(
            (pixel.x - self.cx) / self.fx,
            (pixel.y - self.cy) / self.fy,
            T::one(),
        )
    }

    /// Whether a pixel lies inside the declared image rectangle. Always true
    /// when no image size is declared.
    pub fn contains(&self, pixel: &Vector2<T>) -> bool {
        match self.image_size {
            None => true,
            Some((w, h)) => {
                let (u, v) = (pixel.x.as_f64(), pixel.y.as_f64());
                u >= 0.0 && v >= 0.0 && u <= w as f64 && v <= h as f64
            }
        }
    }
}

/// A 2D image segment with its homogeneous line and great-circle normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineObservation<T: Real> {
    pub sp: Vector2<T>,
    pub ep: Vector2<T>,
    /// Unit homogeneous line coefficients, sign-canonical.
    pub l: Vector3<T>,
    /// Unit normal of the interpretation plane on the Gaussian sphere.
    pub s: Vector3<T>,
    pub length: T,
}

impl<T: Real> LineObservation<T> {
    pub fn new(sp: Vector2<T>, ep: Vector2<T>, k: &CameraIntrinsics<T>) -> Result<Self> {
        let l = line_coefficients(&sp, &ep)?;
        Ok(Self {
            sp,
            ep,
            l,
            s: great_circle_normal(&l, k),
            length: (ep - sp).norm(),
        })
    }

    /// Image-plane direction `ep - sp`.
    pub fn direction(&self) -> Vector2<T> {
        self.ep - self.sp
    }
}

/// Flips `v` so that its first nonzero component is positive.
pub fn canonical_sign<T: Real>(v: Vector3<T>) -> Vector3<T> {
    match v.iter().find(|c| **c != T::zero()) {
        Some(c) if *c < T::zero() => -v,
        _ => v,
    }
}

/// Flips `v` into the hemisphere `z >= 0`. Directions on the equator
/// (`|z| < 1e-12`) are resolved by `y >= 0`, then `x >= 0`.
pub fn canonical_hemisphere<T: Real>(v: Vector3<T>) -> Vector3<T> {
    let eps = T::lit(1e-12);
    let flip = if v.z.abs() >= eps {
        v.z < T::zero()
    } else if v.y.abs() >= eps {
        v.y < T::zero()
    } else {
        v.x < T::zero()
    };
    if flip {
        -v
    } else {
        v
    }
}

/// Unit homogeneous line through two pixels, `(sp,1) × (ep,1)` normalized.
pub fn line_coefficients<T: Real>(sp: &Vector2<T>, ep: &Vector2<T>) -> Result<Vector3<T>> {
    if (ep - sp).norm() < T::lit(1e-9) {
        return Err(Error::DegenerateSegment);
    }
    let a = Vector3::new(sp.x, sp.y, T::one());
    let b = Vector3::new(ep.x, ep.y, T::one());
    Ok(canonical_sign(a.cross(&b).normalize()))
}

/// `Kᵀ l` normalized: the normal of the plane through the camera center and
/// the image line.
pub fn great_circle_normal<T: Real>(l: &Vector3<T>, k: &CameraIntrinsics<T>) -> Vector3<T> {
    let s = Vector3::new(k.fx * l.x, k.fy * l.y, k.cx * l.x + k.cy * l.y + l.z);
    canonical_sign(s.normalize())
}

/// `[v]×`, the cross-product matrix.
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

fn vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// A 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T: Real>(Matrix3<T>);

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps a matrix without checking orthogonality.
    pub fn from_matrix_unchecked(m: Matrix3<T>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Rodrigues' formula.
    pub fn exp(omega: &Vector3<T>) -> Self {
        let theta = omega.norm();
        let w = skew(omega);
        let w2 = w * w;
        let (a, b) = if theta < T::lit(1e-6) {
            let t2 = theta * theta;
            (T::one() - t2 / T::lit(6.0), T::lit(0.5) - t2 / T::lit(24.0))
        } else {
            (
                theta.sin() / theta,
                (T::one() - theta.cos()) / (theta * theta),
            )
        };
        Self(Matrix3::identity() + w * a + w2 * b)
    }

    /// Inverse of [`Rotation::exp`], returning an angle in `[0, π]`.
    ///
    /// At exactly π the axis is chosen so that its largest-magnitude
    /// component is positive.
    pub fn log(&self) -> Vector3<T> {
        let m = &self.0;
        let cos = ((m.trace() - T::one()) * T::lit(0.5)).clamp(-T::one(), T::one());
        let v = vee(&(m - m.transpose())) * T::lit(0.5);
        let sin = v.norm();
        let theta = sin.atan2(cos);

        if cos > T::zero() {
            if sin < T::lit(1e-6) {
                return v * (T::one() + theta * theta / T::lit(6.0));
            }
            return v * (theta / sin);
        }
        if sin > T::lit(1e-5) {
            return v * (theta / sin);
        }

        // Near π: recover the axis from the symmetric part, (1 - cos) a aᵀ.
        let b = (m + m.transpose()) * T::lit(0.5) - Matrix3::identity() * cos;
        let i = (0..3)
            .max_by(|&p, &q| {
                b[(p, p)]
                    .partial_cmp(&b[(q, q)])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let denom = ((T::one() - cos) * b[(i, i)]).max(T::zero()).sqrt();
        let mut axis = b.column(i).into_owned() / denom;
        axis.normalize_mut();
        let exact_pi = sin <= T::default_epsilon() * T::lit(16.0);
        let flip = if exact_pi {
            let j = axis.iamax();
            axis[j] < T::zero()
        } else {
            axis.dot(&v) < T::zero()
        };
        if flip {
            axis = -axis;
        }
        axis * theta
    }

    /// Geodesic distance in radians.
    pub fn angle_to(&self, other: &Self) -> T {
        (self.transpose() * *other).log().norm()
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<T> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0))
    }

    pub fn from_quaternion(q: &UnitQuaternion<T>) -> Self {
        Self(q.to_rotation_matrix().into_inner())
    }

    /// Max deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> T {
        let e = (self.0.transpose() * self.0 - Matrix3::identity()).amax();
        e.max((self.0.determinant() - T::one()).abs())
    }

    /// Nearest rotation matrix, removing accumulated rounding drift.
    pub fn renormalized(&self) -> Self {
        let svd = self.0.svd(true, true);
        let (mut u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        if (u * v_t).determinant() < T::zero() {
            let k = svd.singular_values.imin();
            u.column_mut(k).neg_mut();
        }
        Self(u * v_t)
    }
}

impl<T: Real> Default for Rotation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Mul for Rotation<T> {
    type Output = Rotation<T>;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl<T: Real> Mul<Vector3<T>> for Rotation<T> {
    type Output = Vector3<T>;
    fn mul(self, rhs: Vector3<T>) -> Vector3<T> {
        self.0 * rhs
    }
}

impl<T: Real> Mul<&Vector3<T>> for &Rotation<T> {
    type Output = Vector3<T>;
    fn mul(self, rhs: &Vector3<T>) -> Vector3<T> {
        self.0 * rhs
    }
}

/// World-to-camera pose `(R_iw, t_iw)` with a timestamp in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub rotation: Rotation<T>,
    pub translation: Vector3<T>,
    pub timestamp: f64,
}

impl<T: Real> Pose<T> {
    pub fn new(rotation: Rotation<T>, translation: Vector3<T>, timestamp: f64) -> Self {
        Self {
            rotation,
            translation,
            timestamp,
        }
    }

    pub fn identity(timestamp: f64) -> Self {
        Self::new(Rotation::identity(), Vector3::zeros(), timestamp)
    }

    /// Builds a pose from a world-to-camera rotation and the camera center
    /// in world coordinates.
    pub fn from_center(rotation: Rotation<T>, center: &Vector3<T>, timestamp: f64) -> Self {
        let translation = -(&rotation * center);
        Self::new(rotation, translation, timestamp)
    }

    /// Camera center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> Vector3<T> {
        -(self.rotation.matrix().transpose() * self.translation)
    }

    /// World point into camera coordinates.
    pub fn transform(&self, x: &Vector3<T>) -> Vector3<T> {
        &self.rotation * x + self.translation
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.as_f64().is_finite())
            && self
                .rotation
                .matrix()
                .iter()
                .all(|v| v.as_f64().is_finite())
            && self.timestamp.is_finite()
    }
}

/// Pinhole projection of a world point.
pub fn project<T: Real>(
    x: &Vector3<T>,
    pose: &Pose<T>,
    k: &CameraIntrinsics<T>,
) -> Result<Vector2<T>> {
    let xc = pose.transform(x);
    if xc.z <= T::lit(1e-9) {
        return Err(Error::BehindCamera {
            depth: xc.z.as_f64(),
        });
    }
    Ok(Vector2::new(
        k.fx * xc.x / xc.z + k.cx,
        k.fy * xc.y / xc.z + k.cy,
    ))
}
