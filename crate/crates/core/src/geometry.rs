//! Homogeneous coordinates and 3D projective transforms.
//!
//! A [`Homography`] acts on Cartesian 3-vectors by lifting them to homogeneous
//! coordinates, multiplying by a 4×4 matrix and dividing by the fourth
//! component. The plane on which that component vanishes is the transform's
//! horizon.

use nalgebra::{Matrix3, Matrix4, RowVector4, Vector3, Vector4};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec4 = Vector4<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;

/// |h4| at or below this is a point on the horizon.
pub const HORIZON_EPS: f64 = 1e-300;
/// |h4| below this is flagged as ill-conditioned.
pub const ILL_CONDITIONED_EPS: f64 = 1e-12;
/// Minimum |det| of the max-entry-normalized matrix.
const SINGULAR_EPS: f64 = 1e-12;

pub fn to_homogeneous(c: &Vec3) -> Vec4 {
    Vec4::new(c.x, c.y, c.z, 1.0)
}

pub fn to_cartesian(h: &Vec4) -> Result<Vec3> {
    if h.w.abs() <= HORIZON_EPS {
        return Err(Error::DegeneratePoint(h.w));
    }
    Ok(Vec3::new(h.x / h.w, h.y / h.w, h.z / h.w))
}

/// A 3D projective transform stored as a 4×4 matrix acting on column vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Mat4,
}

impl Homography {
    pub fn new(m: Mat4) -> Result<Self> {
        let scale = m.amax();
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::SingularMatrix);
        }
        if (m / scale).determinant().abs() <= SINGULAR_EPS {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(Mat4::from_fn(|i, j| rows[i][j]))
    }

    pub fn identity() -> Self {
        Self { m: Mat4::identity() }
    }

    /// Embeds an invertible linear map of 3-space.
    pub fn from_linear(a: &Mat3) -> Result<Self> {
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(a);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[(i, j)];
            }
        }
        out
    }

    /// Same projective transform, rescaled so that p44 = 1.
    pub fn canonical(&self) -> Result<Self> {
        let p44 = self.m[(3, 3)];
        if p44.abs() <= ILL_CONDITIONED_EPS * self.m.amax() {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { m: self.m / p44 })
    }

    /// Same projective transform, rescaled so the largest-magnitude entry is 1.
    pub fn bounded(&self) -> Self {
        Self { m: self.m / self.m.amax() }
    }

    /// Homogeneous image of `c`, before the perspective division.
    pub fn apply_homogeneous(&self, c: &Vec3) -> Vec4 {
        self.m * to_homogeneous(c)
    }

    pub fn apply(&self, c: &Vec3) -> Result<Vec3> {
        to_cartesian(&self.apply_homogeneous(c))
    }

    /// Fourth homogeneous component of the image of `c`.
    pub fn denominator(&self, c: &Vec3) -> f64 {
        self.m.row(3).dot(&to_homogeneous(c).transpose())
    }

    /// True when `c` is close enough to the horizon that its image is
    /// numerically unreliable, though still finite.
    pub fn is_ill_conditioned(&self, c: &Vec3) -> bool {
        let scale = self.m.row(3).amax();
        self.denominator(c).abs() < ILL_CONDITIONED_EPS * scale
    }

    /// The horizon plane, as plane parameters in the source space.
    pub fn horizon(&self) -> Result<PlaneParams> {
        PlaneParams::new(self.m.row(3).transpose())
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        Self::new(self.m * other.m)
    }

    pub fn invert(&self) -> Result<Self> {
        let scale = self.m.amax();
        let inv = (self.m / scale).try_inverse().ok_or(Error::SingularMatrix)?;
        Self::new(inv / scale)
    }

    /// Closed-form Jacobian of the Cartesian map at `c`.
    pub fn jacobian(&self, c: &Vec3) -> Result<Mat3> {
        let h = self.apply_homogeneous(c);
        if h.w.abs() <= HORIZON_EPS {
            return Err(Error::DegeneratePoint(h.w));
        }
        let top = self.m.fixed_view::<3, 3>(0, 0);
        let bottom = self.m.fixed_view::<1, 3>(3, 0);
        let image = Vec3::new(h.x / h.w, h.y / h.w, h.z / h.w);
        Ok((top - image * bottom) / h.w)
    }
}

impl Serialize for Homography {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 4]; 4]>::deserialize(d)?;
        Homography::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Plane `l · [c; 1] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneParams {
    l: Vec4,
}

impl PlaneParams {
    pub fn new(l: Vec4) -> Result<Self> {
        if l.x == 0.0 && l.y == 0.0 && l.z == 0.0 {
            return Err(Error::InvalidArgument("plane normal is zero".into()));
        }
        Ok(Self { l })
    }

    pub fn coefficients(&self) -> &Vec4 {
        &self.l
    }

    pub fn normal(&self) -> Vec3 {
        self.l.xyz()
    }

    pub fn evaluate(&self, c: &Vec3) -> f64 {
        self.l.dot(&to_homogeneous(c))
    }

    /// Parameters, in the source space of `h`, of the plane whose image under
    /// `h` is `self`.
    pub fn pull_back(&self, h: &Homography) -> Result<Self> {
        let row: RowVector4<f64> = self.l.transpose() * h.matrix();
        Self::new(row.transpose())
    }
}

/// Sine of the angle at `p0` spanned by the three points; zero for collinear
/// triples, scale-free otherwise.
pub fn collinearity_defect(p0: &Vec3, p1: &Vec3, p2: &Vec3) -> f64 {
    let u = p1 - p0;
    let v = p2 - p0;
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return 0.0;
    }
    u.cross(&v).norm() / denom
}

/// Cross ratio (AC·BD)/(BC·AD) of four collinear points, from signed
/// positions along their common line.
pub fn cross_ratio(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let dir = (d - a).normalize();
    let t = |p: &Vec3| (p - a).dot(&dir);
    let (ta, tb, tc, td) = (0.0, t(b), t(c), t(d));
    ((tc - ta) * (td - tb)) / ((tc - tb) * (td - ta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn homogeneous_round_trip() {
        assert_eq!(to_homogeneous(&Vec3::zeros()), Vec4::new(0.0, 0.0, 0.0, 1.0));
        let white = Vec3::new(0.9505, 1.0, 1.0888);
        assert_eq!(to_homogeneous(&white), Vec4::new(0.9505, 1.0, 1.0888, 1.0));
        let c = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(to_homogeneous(&c), Vec4::new(1.0, 2.0, 3.0, 1.0));
        assert_eq!(to_cartesian(&to_homogeneous(&c)).unwrap(), c);
        assert_eq!(to_cartesian(&Vec4::new(2.0, 4.0, 6.0, 2.0)).unwrap(), c);
    }

    #[test]
    fn horizon_point_is_degenerate() {
        assert!(matches!(
            to_cartesian(&Vec4::new(1.0, 0.0, 0.0, 0.0)),
            Err(Error::DegeneratePoint(_))
        ));
    }

    #[test]
    fn identity_behaviour() {
        let i = Homography::identity();
        let c = Vec3::new(5.0, 6.0, 7.0);
        assert_eq!(i.apply(&c).unwrap(), c);
        assert_eq!(i.compose(&i).unwrap(), i);
        assert_eq!(i.invert().unwrap(), i);
    }

    #[test]
    fn singular_matrix_rejected() {
        let mut m = Mat4::identity();
        m[(2, 2)] = 0.0;
        assert_eq!(Homography::new(m), Err(Error::SingularMatrix));
        assert_eq!(Homography::new(Mat4::zeros()), Err(Error::SingularMatrix));
    }

    #[test]
    fn compose_applies_right_operand_first() {
        let a = Homography::from_rows([
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.1, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let b = Homography::from_rows([
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 3.0, 0.0],
            [0.0, 0.2, 0.0, 1.0],
        ])
        .unwrap();
        let c = Vec3::new(0.3, 0.4, 0.5);
        let direct = a.apply(&b.apply(&c).unwrap()).unwrap();
        let composed = a.compose(&b).unwrap().apply(&c).unwrap();
        assert_abs_diff_eq!(direct, composed, epsilon = 1e-12);
    }

    #[test]
    fn ill_conditioned_query() {
        let h = Homography::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let near = Vec3::new(-1.0 + 1e-14, 0.0, 0.0);
        assert!(h.is_ill_conditioned(&near));
        assert!(h.apply(&near).is_ok());
        assert!(!h.is_ill_conditioned(&Vec3::zeros()));
        let plane = h.horizon().unwrap();
        assert_abs_diff_eq!(plane.evaluate(&Vec3::new(-1.0, 5.0, 2.0)), 0.0);
    }

    #[test]
    fn canonical_form_has_unit_corner() {
        let h = Homography::new(Mat4::identity() * 4.0).unwrap();
        assert_eq!(h.canonical().unwrap().matrix()[(3, 3)], 1.0);
        assert_eq!(h.bounded().matrix().amax(), 1.0);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let h = Homography::from_rows([
            [2.0, 0.5, 0.0, 0.0],
            [0.1, 1.0, -0.3, 0.0],
            [0.0, 0.2, 1.5, 0.0],
            [0.3, 0.6, 0.2, 1.0],
        ])
        .unwrap();
        let c = Vec3::new(0.4, 0.5, 0.6);
        let j = h.jacobian(&c).unwrap();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = 1e-6;
            let fd = (h.apply(&(c + e)).unwrap() - h.apply(&(c - e)).unwrap()) / 2e-6;
            assert_abs_diff_eq!(j.column(k).into_owned(), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn plane_pull_back_tracks_images() {
        let h = Homography::from_rows([
            [2.0, 0.5, 0.0, 0.0],
            [0.1, 1.0, -0.3, 0.0],
            [0.0, 0.2, 1.5, 0.0],
            [0.3, 0.6, 0.2, 1.0],
        ])
        .unwrap();
        let image_plane = PlaneParams::new(Vec4::new(1.0, -2.0, 0.5, 0.3)).unwrap();
        let source_plane = image_plane.pull_back(&h).unwrap();
        // Two points on the source plane map onto the image plane.
        let n = source_plane.normal();
        let l4 = source_plane.coefficients().w;
        let p = -n * l4 / n.norm_squared();
        let q = p + n.cross(&Vec3::new(0.0, 0.0, 1.0)) * 0.1;
        for c in [p, q] {
            assert_abs_diff_eq!(source_plane.evaluate(&c), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(image_plane.evaluate(&h.apply(&c).unwrap()), 0.0, epsilon = 1e-12);
        }
        assert!(PlaneParams::new(Vec4::new(0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn json_is_row_major_nested_arrays() {
        let h = Homography::from_rows([
            [1.0, 2.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 3.0, 1.0],
        ])
        .unwrap();
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, "[[1.0,2.0,0.0,0.0],[0.0,1.0,0.0,0.0],[0.0,0.0,1.0,0.0],[0.0,0.0,3.0,1.0]]");
        let back: Homography = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<Homography>("[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]").is_err());
    }
}
