//! Construction of the proLab transform from metric parameters.
//!
//! The transform factors as `P = R1(φ1) R2(φ2) R3(φ3) Z(ρ) M(μ) N(w)`:
//! `N` divides by the white point, `M` carries all metric freedom, and the
//! rotations plus isotropic scale `Z` are fixed by sending the white point to
//! `[100, 0, 0]` and aligning four saturated CIELAB hues.

use std::sync::OnceLock;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::colorspaces::cielab_to_xyz;
use crate::error::{Error, Result};
use crate::geometry::{to_cartesian, to_homogeneous, Homography, Mat3, Mat4, Vec3, Vec4};

/// Number of feasibility polynomials.
pub const N_CONSTRAINTS: usize = 14;

/// The four CIELAB hue-orientation points at half lightness.
pub const KEY_POINTS: [[f64; 3]; 4] = [
    [50.0, -80.0, 0.0],
    [50.0, 80.0, 0.0],
    [50.0, 0.0, -80.0],
    [50.0, 0.0, 80.0],
];

pub fn key_points() -> [Vec3; 4] {
    KEY_POINTS.map(Vec3::from)
}

/// The eight metric parameters μ of the matrix `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricParams {
    mu: [f64; 8],
}

impl MetricParams {
    /// μ that makes `M` the identity.
    pub const IDENTITY: MetricParams = MetricParams {
        mu: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    };

    /// The metric parameters as printed, to four decimals.
    pub const PRINTED: MetricParams = MetricParams {
        mu: [2.1591, -1.7823, -0.0713, 2.0866, 0.2103, 0.7554, 3.8666, 1.6739],
    };

    pub const fn new(mu: [f64; 8]) -> Self {
        Self { mu }
    }

    /// The published optimum, with μ1..μ5 recovered at full precision from
    /// the published `Q` (they agree with [`MetricParams::PRINTED`] to its
    /// printed digits).
    pub fn published() -> Self {
        static CELL: OnceLock<MetricParams> = OnceLock::new();
        *CELL.get_or_init(|| {
            MetricParams::from_q_matrix(&reference_matrices().q)
                .expect("published Q has a valid metric factor")
        })
    }

    /// Recovers μ from a light-source-independent matrix `Q = R Z M`.
    ///
    /// `QᵀQ` restricted to the upper 3×3 block equals `ρ² M₃ᵀM₃`, so its
    /// Cholesky factor is `ρ M₃`; the unit corner of `M₃` fixes `ρ`.
    pub fn from_q_matrix(q: &Homography) -> Result<Self> {
        let q = q.canonical()?;
        let m = q.matrix();
        let q3: Mat3 = m.fixed_view::<3, 3>(0, 0).into_owned();
        let gram = q3.transpose() * q3;
        let chol = Cholesky::new(gram).ok_or(Error::SingularMatrix)?;
        let upper = chol.l().transpose();
        let rho = upper[(2, 2)];
        let m3 = upper / rho;
        Ok(Self::new([
            m3[(0, 0)],
            m3[(0, 1)],
            m3[(0, 2)],
            m3[(1, 1)],
            m3[(1, 2)],
            m[(3, 0)],
            m[(3, 1)],
            m[(3, 2)],
        ]))
    }

    pub fn as_array(&self) -> &[f64; 8] {
        &self.mu
    }

    pub fn determinant(&self) -> f64 {
        self.mu[0] * self.mu[3]
    }

    /// Horizon coefficients `[μ6, μ7, μ8]`.
    pub fn horizon(&self) -> Vec3 {
        Vec3::new(self.mu[5], self.mu[6], self.mu[7])
    }

    fn upper(&self) -> Mat3 {
        let mu = &self.mu;
        Mat3::new(mu[0], mu[1], mu[2], 0.0, mu[3], mu[4], 0.0, 0.0, 1.0)
    }
}

impl From<[f64; 8]> for MetricParams {
    fn from(mu: [f64; 8]) -> Self {
        Self::new(mu)
    }
}

/// White point tristimulus values, the von Kries adaptation target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct WhitePoint(Vec3);

impl WhitePoint {
    /// D65 as printed to four decimals.
    pub const D65_PRINTED: [f64; 3] = [0.9505, 1.0, 1.0888];
    /// D65 to five decimals; the published `P` is `Q·N` for this value.
    pub const D65_XYZ: [f64; 3] = [0.95047, 1.0, 1.08883];

    pub fn new(xyz: Vec3) -> Result<Self> {
        if xyz.iter().all(|v| *v > 0.0 && *v < 10.0) {
            Ok(Self(xyz))
        } else {
            Err(Error::InvalidWhitePoint([xyz.x, xyz.y, xyz.z]))
        }
    }

    pub fn d65() -> Self {
        Self(Vec3::from(Self::D65_XYZ))
    }

    pub fn xyz(&self) -> &Vec3 {
        &self.0
    }
}

impl Default for WhitePoint {
    fn default() -> Self {
        Self::d65()
    }
}

impl TryFrom<[f64; 3]> for WhitePoint {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(Vec3::from(v))
    }
}

impl From<WhitePoint> for [f64; 3] {
    fn from(w: WhitePoint) -> Self {
        [w.0.x, w.0.y, w.0.z]
    }
}

/// Rotation angles (radians) and isotropic scale that complete `M` to `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    pub phi: [f64; 3],
    pub rho: f64,
}

impl SimilarityParams {
    /// `ρ R1(φ1) R2(φ2) R3(φ3)` as a 3×3 matrix.
    pub fn linear_part(&self) -> Mat3 {
        rotation(0, self.phi[0]) * rotation(1, self.phi[1]) * rotation(2, self.phi[2]) * self.rho
    }
}

/// Values of the fourteen feasibility polynomials; feasible iff all ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstraintVector {
    pub f: [f64; N_CONSTRAINTS],
}

impl ConstraintVector {
    pub fn is_feasible(&self) -> bool {
        self.f.iter().all(|v| *v >= 0.0)
    }

    pub fn min(&self) -> f64 {
        self.f.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ max(0, −f_i)²`.
    pub fn violation(&self) -> f64 {
        self.f.iter().map(|v| (-v).max(0.0).powi(2)).sum()
    }
}

/// Right-handed rotation by `phi` about coordinate axis `axis` (0, 1 or 2).
pub fn rotation(axis: usize, phi: f64) -> Mat3 {
    let (s, c) = phi.sin_cos();
    match axis {
        0 => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        2 => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        _ => panic!("rotation axis must be 0, 1 or 2"),
    }
}

/// The metric matrix `M(μ)`.
pub fn metric_matrix(mu: &MetricParams) -> Result<Homography> {
    if mu.determinant() <= 0.0 {
        return Err(Error::InfeasibleParams(format!(
            "|M| = μ1·μ4 = {:e} must be positive",
            mu.determinant()
        )));
    }
    let m = mu.as_array();
    Homography::new(Mat4::new(
        m[0], m[1], m[2], 0.0, //
        0.0, m[3], m[4], 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        m[5], m[6], m[7], 1.0,
    ))
}

/// The von Kries matrix `N = diag(w, 1)⁻¹`.
pub fn adaptation_matrix(w: &WhitePoint) -> Homography {
    let w = w.xyz();
    Homography::new(Mat4::from_diagonal(&Vec4::new(1.0 / w.x, 1.0 / w.y, 1.0 / w.z, 1.0)))
        .expect("diagonal with positive entries is invertible")
}

/// Evaluates the feasibility polynomials.
///
/// `f1 = μ1μ4`; `f2..f8 = [μ6 μ7 μ8]·b + 1` over the seven non-zero
/// `b ∈ {0,1}³` (bit k of the index selects μ6+k); `f9..f14` are the entries
/// of the lightness-monotonicity product, first for the `L = 0` plane and
/// then for the `L = 100` plane.
pub fn constraint_values(mu: &MetricParams) -> ConstraintVector {
    let p = mu.as_array();
    let mut f = [0.0; N_CONSTRAINTS];
    f[0] = p[0] * p[3];
    let h = mu.horizon();
    for (k, fk) in f.iter_mut().enumerate().take(8).skip(1) {
        let b = Vec3::new((k & 1) as f64, ((k >> 1) & 1) as f64, ((k >> 2) & 1) as f64);
        *fk = h.dot(&b) + 1.0;
    }
    let mvec = Vec3::new(p[0] + p[1] + p[2], p[3] + p[4], 1.0);
    let mscal = p[5] + p[6] + p[7] + 1.0;
    let row = (mvec.transpose() * mu.upper()) * mscal;
    let far = row - h.transpose() * mvec.norm_squared();
    for j in 0..3 {
        f[8 + j] = row[j];
        f[11 + j] = far[j];
    }
    ConstraintVector { f }
}

/// White-point image in the space `B = M·N`.
fn white_in_metric_space(mu: &MetricParams, w: &WhitePoint) -> Result<Vec3> {
    let b = metric_matrix(mu)?.compose(&adaptation_matrix(w))?;
    b.apply(w.xyz())
}

/// Similarity parameters that send `w` to `[100, 0, 0]` and best align the
/// images of `key_points` (CIELAB) with themselves around the lightness axis.
pub fn solve_similarity(
    mu: &MetricParams,
    w: &WhitePoint,
    key_points: &[Vec3],
) -> Result<SimilarityParams> {
    let wb = white_in_metric_space(mu, w)?;
    let r = wb.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::DegeneratePoint(r));
    }
    let u = wb / r;
    let rho = 100.0 / r;
    let phi3 = -u.y.atan2(u.x);
    let phi2 = u.z.atan2(u.x.hypot(u.y));

    let partial = SimilarityParams { phi: [0.0, phi2, phi3], rho };
    let p0 = assemble(mu, &partial, w)?;
    let (mut num, mut den, mut mass) = (0.0, 0.0, 0.0);
    for k in key_points {
        let xyz = cielab_to_xyz(k, w);
        let img = p0.apply(&xyz)?;
        num += k.z * img.y - k.y * img.z;
        den += k.y * img.y + k.z * img.z;
        mass += k.yz().norm() * img.yz().norm();
    }
    if !(num.hypot(den) > 1e-12 * mass.max(f64::MIN_POSITIVE)) || mass == 0.0 {
        return Err(Error::DegenerateKeyPoints);
    }
    Ok(SimilarityParams { phi: [num.atan2(den), phi2, phi3], rho })
}

/// `P = R Z M N` from explicit similarity parameters, with `p44 = 1`.
pub fn assemble(mu: &MetricParams, sim: &SimilarityParams, w: &WhitePoint) -> Result<Homography> {
    let q = light_independent(mu, sim)?;
    q.compose(&adaptation_matrix(w))
}

/// `Q = R Z M`.
pub fn light_independent(mu: &MetricParams, sim: &SimilarityParams) -> Result<Homography> {
    let m = metric_matrix(mu)?;
    let mut q = *m.matrix();
    let top = sim.linear_part() * mu.upper();
    q.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
    Homography::new(q)
}

/// The proLab transform for metric parameters `mu` under white `w`, using
/// the default CIELAB key points.
pub fn build_p(mu: &MetricParams, w: &WhitePoint) -> Result<Homography> {
    let sim = solve_similarity(mu, w, &key_points())?;
    assemble(mu, &sim, w)
}

/// Sum of squared distances between the key points and their images.
pub fn key_point_objective(p: &Homography, w: &WhitePoint, key_points: &[Vec3]) -> Result<f64> {
    key_points.iter().try_fold(0.0, |acc, k| {
        let img = p.apply(&cielab_to_xyz(k, w))?;
        Ok(acc + (k - img).norm_squared())
    })
}

/// Published constants, verbatim as printed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMatrices {
    pub m: Homography,
    pub q: Homography,
    pub p: Homography,
    pub white: [f64; 3],
}

pub fn reference_matrices() -> ReferenceMatrices {
    let h = |rows| Homography::from_rows(rows).expect("published matrix is invertible");
    ReferenceMatrices {
        m: h([
            [2.1591, -1.7823, -0.0713, 0.0],
            [0.0, 2.0866, 0.2103, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.7554, 3.8666, 1.6739, 1.0],
        ]),
        q: h([
            [75.5362, 486.661, 167.387, 0.0],
            [617.7141, -595.4477, -22.2664, 0.0],
            [48.3433, 194.9377, -243.281, 0.0],
            [0.7554, 3.8666, 1.6739, 1.0],
        ]),
        p: h([
            [79.4725, 486.6610, 153.7311, 0.0],
            [649.9038, -595.4477, -20.4498, 0.0],
            [50.8625, 194.9377, -223.4334, 0.0],
            [0.7947, 3.8666, 1.5373, 1.0],
        ]),
        white: WhitePoint::D65_PRINTED,
    }
}

/// `build_p(published μ, D65)`, computed once.
pub fn reference_prolab() -> &'static Homography {
    static CELL: OnceLock<Homography> = OnceLock::new();
    CELL.get_or_init(|| {
        build_p(&MetricParams::published(), &WhitePoint::d65()).expect("published μ is feasible")
    })
}

/// The light-independent part `Q` of [`reference_prolab`].
pub fn reference_light_independent() -> &'static Homography {
    static CELL: OnceLock<Homography> = OnceLock::new();
    CELL.get_or_init(|| {
        let mu = MetricParams::published();
        let sim = solve_similarity(&mu, &WhitePoint::d65(), &key_points()).expect("published μ is feasible");
        light_independent(&mu, &sim).expect("published μ is feasible")
    })
}

/// proLab under another illuminant: the reference `Q` with a new `N`.
pub fn prolab_for_white(w: &WhitePoint) -> Result<Homography> {
    reference_light_independent().compose(&adaptation_matrix(w))
}

/// Homogeneous denominator of `P` at the box vertex `diag(w)·b`.
pub fn box_vertex_denominator(p: &Homography, w: &WhitePoint, b: [bool; 3]) -> f64 {
    let c = Vec3::from_fn(|i, _| if b[i] { w.xyz()[i] } else { 0.0 });
    p.apply_homogeneous(&c).w
}

/// Cartesian image of the homogeneous point, convenience for tests.
pub fn image_of(p: &Homography, c: &Vec3) -> Result<Vec3> {
    to_cartesian(&(p.matrix() * to_homogeneous(c)))
}
