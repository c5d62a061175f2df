//! Camera shot-noise model and noise propagation into colour spaces.
//!
//! A raw response is `s = g·n + ε` with `n` Poisson-distributed electrons and
//! `ε` signal-independent noise, so the response variance is affine in its
//! mean: `V = g·E + V(ε)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::colorspaces::{mat3, Transform, LINRGB_TO_XYZ};
use crate::difference::stress;
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::linalg::{sym3_eigen, sym3_eigenvalues};
use crate::par;

/// Fitted gain, counts per electron.
pub const GAIN: f64 = 3.38;
/// Fitted signal-independent variance, counts².
pub const VAR_EPS: f64 = 744.0;

/// deviceRGB → XYZ as printed, in units of 1e-6.
pub const DEVICE_TO_XYZ_E6: [[f64; 3]; 3] = [
    [5.5711, 3.0892, 10.0585],
    [-0.6066, 11.4383, 6.0363],
    [-0.4189, -13.2786, 80.9631],
];

/// deviceRGB → linRGB before the `0.03 / 2¹⁶` exposure factor.
pub const DEVICE_TO_LINRGB_RAW: [[f64; 3]; 3] = [
    [41.93, -2.08, -37.24],
    [-14.32, 39.13, 10.79],
    [-0.02, -35.39, 185.52],
];

/// Exposure normalization folded into the deviceRGB → linRGB matrix.
pub const DEVICE_EXPOSURE: f64 = 0.03 / 65536.0;

/// Eigenvalues above this negative bound are treated as rounding noise.
pub const EIGEN_FLOOR: f64 = -1e-9;

/// Printed deviceRGB → XYZ matrix.
pub fn device_to_xyz_printed() -> Mat3 {
    mat3(&DEVICE_TO_XYZ_E6) * 1e-6
}

/// deviceRGB → linRGB matrix.
pub fn device_to_linrgb() -> Mat3 {
    mat3(&DEVICE_TO_LINRGB_RAW) * DEVICE_EXPOSURE
}

/// Sensor noise parameters and the camera calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub g: f64,
    pub var_eps: f64,
    /// deviceRGB → XYZ.
    pub d_inv: Mat3,
    /// XYZ → deviceRGB.
    pub d: Mat3,
}

impl NoiseModel {
    pub fn new(g: f64, var_eps: f64, d_inv: Mat3) -> Result<Self> {
        if !(g >= 0.0) || !(var_eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("g = {g}, V(ε) = {var_eps} must be non-negative")));
        }
        let scale = d_inv.amax();
        if !(scale > 0.0) || (d_inv / scale).determinant().abs() <= 1e-12 {
            return Err(Error::SingularCalibration);
        }
        let d = d_inv.try_inverse().ok_or(Error::SingularCalibration)?;
        Ok(Self { g, var_eps, d_inv, d })
    }

    pub fn with_noise(&self, g: f64, var_eps: f64) -> Result<Self> {
        Self::new(g, var_eps, self.d_inv)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::new(GAIN, VAR_EPS, device_to_xyz_printed()).expect("printed calibration is invertible")
    }
}

/// Bayer mosaic element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    R,
    G1,
    G2,
    B,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::R => "R",
            Channel::G1 => "G1",
            Channel::G2 => "G2",
            Channel::B => "B",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "R" => Ok(Channel::R),
            "G1" => Ok(Channel::G1),
            "G2" => Ok(Channel::G2),
            "B" => Ok(Channel::B),
            other => Err(Error::InvalidArgument(format!("unknown channel '{other}'"))),
        }
    }
}

/// Mean and variance of one mosaic element over one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub channel: Channel,
    pub mean: f64,
    pub variance: f64,
}

/// Gain and additive variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JahneFit {
    pub g: f64,
    pub var_eps: f64,
}

/// Fits `V = g·E + V(ε)` along the first principal axis of the standardized
/// (mean, variance) scatter.
///
/// Standardizing makes the fit equivariant to rescaling the responses: with
/// responses multiplied by `k`, the fitted `g` scales by `k` and `V(ε)` by `k²`.
/// Points lying exactly on a line are recovered exactly.
pub fn fit_jahne(stats: &[PatchRecord]) -> Result<JahneFit> {
    if stats.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 records, got {}", stats.len())));
    }
    if let Some(r) = stats.iter().find(|r| !(r.mean >= 0.0) || !(r.variance >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or NaN statistics {r:?}")));
    }
    let n = stats.len() as f64;
    let me = stats.iter().map(|r| r.mean).sum::<f64>() / n;
    let mv = stats.iter().map(|r| r.variance).sum::<f64>() / n;
    let (mut see, mut svv, mut sev) = (0.0, 0.0, 0.0);
    for r in stats {
        let (de, dv) = (r.mean - me, r.variance - mv);
        see += de * de;
        svv += dv * dv;
        sev += de * dv;
    }
    if see <= 1e-24 * me.abs().max(1.0).powi(2) * n {
        return Err(Error::DegenerateFit("all patch means are equal".into()));
    }
    // The correlation matrix has principal axis (1, ±1); mapped back, the
    // slope is ±σ_V/σ_E with the sign of the covariance.
    let g = (svv / see).sqrt().copysign(sev);
    Ok(JahneFit { g, var_eps: mv - g * me })
}

/// `diag(1, ½, 1)·(g·diag(c_d) + V(ε)·I)`.
pub fn device_covariance(c_d: &Vec3, nm: &NoiseModel) -> Result<Mat3> {
    if let Some(v) = c_d.iter().find(|v| **v < -1e-9) {
        return Err(Error::NegativeResponse(*v));
    }
    let weights = Vec3::new(1.0, 0.5, 1.0);
    let diag = Vec3::from_fn(|i, _| weights[i] * (nm.g * c_d[i].max(0.0) + nm.var_eps));
    Ok(Mat3::from_diagonal(&diag))
}

/// Sensor noise covariance carried into XYZ.
pub fn xyz_covariance(c_x: &Vec3, nm: &NoiseModel) -> Result<Mat3> {
    let c_d = nm.d * c_x;
    if c_d.iter().any(|v| *v < -1e-9) {
        return Err(Error::NotReproducible([c_d.x, c_d.y, c_d.z]));
    }
    let sigma_d = device_covariance(&c_d, nm)?;
    Ok(symmetrize(&(nm.d_inv * sigma_d * nm.d_inv.transpose())))
}

fn symmetrize(m: &Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

/// Finite-difference step used by [`jacobian`].
pub fn default_step(c: f64) -> f64 {
    (1e-6 * c.abs()).max(1e-6)
}

/// Central-difference Jacobian of `target` at the XYZ colour `c_x`.
pub fn jacobian<T: Transform + ?Sized>(target: &T, c_x: &Vec3) -> Result<Mat3> {
    jacobian_with_step(target, c_x, default_step)
}

pub fn jacobian_with_step<T, S>(target: &T, c_x: &Vec3, step: S) -> Result<Mat3>
where
    T: Transform + ?Sized,
    S: Fn(f64) -> f64,
{
    let mut jac = Mat3::zeros();
    for k in 0..3 {
        let h = step(c_x[k]);
        let mut plus = *c_x;
        let mut minus = *c_x;
        plus[k] += h;
        minus[k] -= h;
        let probe = |c: &Vec3| target.forward(c).map_err(|e| Error::DomainEdge(e.to_string()));
        let col = (probe(&plus)? - probe(&minus)?) / (2.0 * h);
        jac.set_column(k, &col);
    }
    Ok(jac)
}

/// `J·Σ_x·Jᵀ` at `c_x`.
pub fn propagate<T: Transform + ?Sized>(target: &T, c_x: &Vec3, nm: &NoiseModel) -> Result<Mat3> {
    let jac = jacobian(target, c_x)?;
    Ok(symmetrize(&(jac * xyz_covariance(c_x, nm)? * jac.transpose())))
}

fn clamped_sqrt(eigs: [f64; 3]) -> Result<[f64; 3]> {
    if let Some(l) = eigs.iter().find(|l| **l < EIGEN_FLOOR * eigs[0].abs().max(1.0)) {
        return Err(Error::ModelDomain(format!("covariance eigenvalue {l:e} is negative")));
    }
    Ok(eigs.map(|l| l.max(0.0).sqrt()))
}

/// Standard deviations along the principal axes of the propagated noise.
pub fn noise_sigmas<T: Transform + ?Sized>(target: &T, c_x: &Vec3, nm: &NoiseModel) -> Result<[f64; 3]> {
    clamped_sqrt(sym3_eigenvalues(&propagate(target, c_x, nm)?))
}

/// Principal standard deviations (descending) and axes (columns) of the
/// propagated noise ellipsoid.
pub fn noise_frame<T: Transform + ?Sized>(target: &T, c_x: &Vec3, nm: &NoiseModel) -> Result<([f64; 3], Mat3)> {
    let (eigs, vecs) = sym3_eigen(&propagate(target, c_x, nm)?);
    Ok((clamped_sqrt(eigs)?, vecs))
}

/// Heteroscedasticity `H` of `target` over XYZ colours.
pub fn heteroscedasticity_h<T: Transform + ?Sized>(target: &T, colors_xyz: &[Vec3], nm: &NoiseModel) -> Result<f64> {
    let sigmas = par::try_map(colors_xyz, |index, c| {
        noise_sigmas(target, c, nm).map_err(|e| Error::Conversion { index, source: Box::new(e) })
    })?;
    let flat: Vec<f64> = sigmas.into_iter().flatten().collect();
    let ones = vec![1.0; flat.len()];
    stress(&flat, &ones)
}

/// `D₂·D₁`: the calibration chain the printed deviceRGB → XYZ matrix encodes.
pub fn calibration_chain() -> Mat3 {
    mat3(&LINRGB_TO_XYZ) * device_to_linrgb()
}
