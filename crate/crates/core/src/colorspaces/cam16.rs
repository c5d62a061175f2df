//! CAM16 colour appearance model and its uniform colour space CAM16-UCS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// CAT16 sharpened cone matrix.
pub const M16: [[f64; 3]; 3] = [
    [0.401288, 0.650173, -0.051461],
    [-0.250268, 1.204414, 0.045854],
    [-0.002079, 0.048952, 0.953127],
];

const UCS_C1: f64 = 0.007;
const UCS_C2: f64 = 0.0228;

/// Surround parameters `(F, c, N_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surround {
    pub f: f64,
    pub c: f64,
    pub n_c: f64,
}

impl Surround {
    pub const AVERAGE: Surround = Surround { f: 1.0, c: 0.69, n_c: 1.0 };
    pub const DIM: Surround = Surround { f: 0.9, c: 0.59, n_c: 0.9 };
    pub const DARK: Surround = Surround { f: 0.8, c: 0.525, n_c: 0.8 };
}

/// Viewing conditions. `white` is in the same 0..1 scale as the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewingConditions {
    pub white: [f64; 3],
    /// Adapting field luminance in cd/m².
    pub l_a: f64,
    /// Relative background luminance, in units where the white has Y = 100.
    pub y_b: f64,
    pub surround: Surround,
    /// Degree of adaptation; `None` derives it from `F` and `L_A`.
    pub degree: Option<f64>,
}

impl Default for ViewingConditions {
    fn default() -> Self {
        Self::with_white([0.95047, 1.0, 1.08883])
    }
}

impl ViewingConditions {
    /// Average surround, 20% grey background, full adaptation.
    pub fn with_white(white: [f64; 3]) -> Self {
        Self {
            white,
            l_a: 64.0 / std::f64::consts::PI * 0.2,
            y_b: 20.0,
            surround: Surround::AVERAGE,
            degree: Some(1.0),
        }
    }
}

/// Precomputed model state for one set of viewing conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Cam16 {
    m16: Mat3,
    m16_inv: Mat3,
    d_rgb: Vec3,
    f_l: f64,
    f_l_4: f64,
    n_bb: f64,
    z: f64,
    a_w: f64,
    c: f64,
    n_c: f64,
    chroma_k: f64,
}

fn compress(x: f64, f_l: f64) -> f64 {
    let p = (f_l * x.abs() / 100.0).powf(0.42);
    400.0 * x.signum() * p / (p + 27.13) + 0.1
}

fn decompress(y: f64, f_l: f64) -> Result<f64> {
    let v = y - 0.1;
    if v.abs() >= 400.0 {
        return Err(Error::ModelDomain(format!("compressed response {y} out of range")));
    }
    Ok(v.signum() * 100.0 / f_l * (27.13 * v.abs() / (400.0 - v.abs())).powf(1.0 / 0.42))
}

impl Cam16 {
    pub fn new(vc: &ViewingConditions) -> Result<Self> {
        if vc.white.iter().any(|v| !(*v > 0.0)) || !(vc.l_a > 0.0) || !(vc.y_b > 0.0) {
            return Err(Error::InvalidArgument("viewing conditions must be positive".into()));
        }
        let m16 = Mat3::from_fn(|i, j| M16[i][j]);
        let m16_inv = m16.try_inverse().ok_or(Error::SingularMatrix)?;
        let xyz_w = Vec3::from(vc.white) * 100.0;
        let y_w = xyz_w.y;
        let rgb_w = m16 * xyz_w;

        let f = vc.surround.f;
        let d = vc
            .degree
            .unwrap_or_else(|| f * (1.0 - (1.0 / 3.6) * ((-vc.l_a - 42.0) / 92.0).exp()))
            .clamp(0.0, 1.0);
        let d_rgb = rgb_w.map(|v| d * y_w / v + 1.0 - d);

        let k = 1.0 / (5.0 * vc.l_a + 1.0);
        let k4 = k.powi(4);
        let f_l = 0.2 * k4 * (5.0 * vc.l_a) + 0.1 * (1.0 - k4).powi(2) * (5.0 * vc.l_a).cbrt();
        let n = vc.y_b / y_w;
        let z = 1.48 + n.sqrt();
        let n_bb = 0.725 * (1.0 / n).powf(0.2);

        let rgb_aw = d_rgb.component_mul(&rgb_w).map(|v| compress(v, f_l));
        let a_w = (2.0 * rgb_aw.x + rgb_aw.y + rgb_aw.z / 20.0 - 0.305) * n_bb;
        Ok(Self {
            m16,
            m16_inv,
            d_rgb,
            f_l,
            f_l_4: f_l.powf(0.25),
            n_bb,
            z,
            a_w,
            c: vc.surround.c,
            n_c: vc.surround.n_c,
            chroma_k: (1.64 - 0.29f64.powf(n)).powf(0.73),
        })
    }

    /// Lightness `J`, colourfulness `M` and hue angle `h` in radians.
    pub fn jmh(&self, xyz: &Vec3) -> Result<[f64; 3]> {
        let rgb_c = (self.m16 * (xyz * 100.0)).component_mul(&self.d_rgb);
        let ra = rgb_c.map(|v| compress(v, self.f_l));
        let a = ra.x - 12.0 * ra.y / 11.0 + ra.z / 11.0;
        let b = (ra.x + ra.y - 2.0 * ra.z) / 9.0;
        let h = b.atan2(a);
        let achromatic = (2.0 * ra.x + ra.y + 0.05 * ra.z - 0.305) * self.n_bb;
        if achromatic < -1e-12 * self.a_w {
            return Err(Error::ModelDomain(format!("negative achromatic response {achromatic:e}")));
        }
        let j = 100.0 * (achromatic.max(0.0) / self.a_w).powf(self.c * self.z);
        let e_t = 0.25 * ((h + 2.0).cos() + 3.8);
        let denom = ra.x + ra.y + 21.0 / 20.0 * ra.z;
        if !(denom > 0.0) {
            return Err(Error::ModelDomain(format!("non-positive chroma denominator {denom:e}")));
        }
        let t = 50000.0 / 13.0 * self.n_c * self.n_bb * e_t * a.hypot(b) / denom;
        let chroma = t.powf(0.9) * (j / 100.0).sqrt() * self.chroma_k;
        Ok([j, chroma * self.f_l_4, h])
    }

    pub fn from_jmh(&self, jmh: [f64; 3]) -> Result<Vec3> {
        let [j, m, h] = jmh;
        if !(j >= 0.0) || !(m >= 0.0) {
            return Err(Error::ModelDomain(format!("J = {j}, M = {m} outside the model")));
        }
        let chroma = m / self.f_l_4;
        let t = if j == 0.0 {
            0.0
        } else {
            (chroma / ((j / 100.0).sqrt() * self.chroma_k)).powf(1.0 / 0.9)
        };
        let achromatic = self.a_w * (j / 100.0).powf(1.0 / (self.c * self.z));
        let p2 = achromatic / self.n_bb + 0.305;
        let p3 = 21.0 / 20.0;
        let (sin_h, cos_h) = h.sin_cos();
        let (a, b) = if t == 0.0 {
            (0.0, 0.0)
        } else {
            let e_t = 0.25 * ((h + 2.0).cos() + 3.8);
            let p1 = 50000.0 / 13.0 * self.n_c * self.n_bb * e_t / t;
            let num = p2 * (2.0 + p3) * (460.0 / 1403.0);
            if sin_h.abs() >= cos_h.abs() {
                let b = num
                    / (p1 / sin_h + (2.0 + p3) * (220.0 / 1403.0) * (cos_h / sin_h) - 27.0 / 1403.0
                        + p3 * (6300.0 / 1403.0));
                (b * cos_h / sin_h, b)
            } else {
                let a = num
                    / (p1 / cos_h + (2.0 + p3) * (220.0 / 1403.0)
                        - (27.0 / 1403.0 - p3 * (6300.0 / 1403.0)) * (sin_h / cos_h));
                (a, a * sin_h / cos_h)
            }
        };
        let ra = Vec3::new(
            (460.0 * p2 + 451.0 * a + 288.0 * b) / 1403.0,
            (460.0 * p2 - 891.0 * a - 261.0 * b) / 1403.0,
            (460.0 * p2 - 220.0 * a - 6300.0 * b) / 1403.0,
        );
        let rgb_c = Vec3::new(
            decompress(ra.x, self.f_l)?,
            decompress(ra.y, self.f_l)?,
            decompress(ra.z, self.f_l)?,
        );
        let xyz = self.m16_inv * rgb_c.component_div(&self.d_rgb) / 100.0;
        if xyz.iter().all(|v| v.is_finite()) {
            Ok(xyz)
        } else {
            Err(Error::ModelDomain("non-finite inverse".into()))
        }
    }

    /// CAM16-UCS `J'a'b'`.
    pub fn to_ucs(&self, xyz: &Vec3) -> Result<Vec3> {
        let [j, m, h] = self.jmh(xyz)?;
        let jp = (1.0 + 100.0 * UCS_C1) * j / (1.0 + UCS_C1 * j);
        let mp = (UCS_C2 * m).ln_1p() / UCS_C2;
        Ok(Vec3::new(jp, mp * h.cos(), mp * h.sin()))
    }

    pub fn from_ucs(&self, jab: &Vec3) -> Result<Vec3> {
        let jp = jab.x;
        let denom = 1.0 + 100.0 * UCS_C1 - UCS_C1 * jp;
        if !(denom > 0.0) {
            return Err(Error::ModelDomain(format!("J' = {jp} beyond the lightness scale")));
        }
        let j = jp / denom;
        let mp = jab.y.hypot(jab.z);
        let m = (UCS_C2 * mp).exp_m1() / UCS_C2;
        self.from_jmh([j, m, jab.z.atan2(jab.y)])
    }
}
