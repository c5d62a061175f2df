//! Colour differences and the STRESS agreement measure.

use serde::{Deserialize, Serialize};

use crate::colorspaces::{cielab_to_xyz, Transform};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::model::WhitePoint;
use crate::par;

pub fn euclidean_de(a: &Vec3, b: &Vec3) -> f64 {
    (a - b).norm()
}

/// CIEDE2000 with `k_L = k_C = k_H = 1`.
pub fn ciede2000(lab1: &Vec3, lab2: &Vec3) -> f64 {
    use std::f64::consts::PI;
    let (l1, a1, b1) = (lab1.x, lab1.y, lab1.z);
    let (l2, a2, b2) = (lab2.x, lab2.y, lab2.z);

    let c_bar = 0.5 * (a1.hypot(b1) + a2.hypot(b2));
    let c7 = c_bar.powi(7);
    let g = 0.5 * (1.0 - (c7 / (c7 + 25f64.powi(7))).sqrt());
    let (ap1, ap2) = ((1.0 + g) * a1, (1.0 + g) * a2);
    let (cp1, cp2) = (ap1.hypot(b1), ap2.hypot(b2));
    let hue = |b: f64, a: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            b.atan2(a).rem_euclid(2.0 * PI)
        }
    };
    let (hp1, hp2) = (hue(b1, ap1), hue(b2, ap2));

    let dl = l2 - l1;
    let dc = cp2 - cp1;
    let chroma_product = cp1 * cp2;
    let dh_angle = if chroma_product == 0.0 {
        0.0
    } else {
        let d = hp2 - hp1;
        if d > PI {
            d - 2.0 * PI
        } else if d < -PI {
            d + 2.0 * PI
        } else {
            d
        }
    };
    let dh = 2.0 * chroma_product.sqrt() * (0.5 * dh_angle).sin();

    let l_bar = 0.5 * (l1 + l2);
    let cp_bar = 0.5 * (cp1 + cp2);
    let hp_bar = if chroma_product == 0.0 {
        hp1 + hp2
    } else if (hp1 - hp2).abs() <= PI {
        0.5 * (hp1 + hp2)
    } else if hp1 + hp2 < 2.0 * PI {
        0.5 * (hp1 + hp2 + 2.0 * PI)
    } else {
        0.5 * (hp1 + hp2 - 2.0 * PI)
    };

    let deg = PI / 180.0;
    let t = 1.0 - 0.17 * (hp_bar - 30.0 * deg).cos() + 0.24 * (2.0 * hp_bar).cos()
        + 0.32 * (3.0 * hp_bar + 6.0 * deg).cos()
        - 0.20 * (4.0 * hp_bar - 63.0 * deg).cos();
    let d_theta = 30.0 * deg * (-((hp_bar / deg - 275.0) / 25.0).powi(2)).exp();
    let cp7 = cp_bar.powi(7);
    let r_c = 2.0 * (cp7 / (cp7 + 25f64.powi(7))).sqrt();
    let l50 = (l_bar - 50.0).powi(2);
    let s_l = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let s_c = 1.0 + 0.045 * cp_bar;
    let s_h = 1.0 + 0.015 * cp_bar * t;
    let r_t = -(2.0 * d_theta).sin() * r_c;

    let (tl, tc, th) = (dl / s_l, dc / s_c, dh / s_h);
    (tl * tl + tc * tc + th * th + r_t * tc * th).max(0.0).sqrt()
}

/// STRESS of `a` against `b`: `‖k·a − b‖ / ‖b‖` with the least-squares `k`.
pub fn stress(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let k = ab / aa;
    let residual: f64 = a.iter().zip(b).map(|(x, y)| (k * x - y).powi(2)).sum();
    Ok((residual / bb).sqrt().min(1.0))
}

/// CIELAB colour pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffPairSample {
    pub seed: u64,
    pub pairs: Vec<[Vec3; 2]>,
}

/// Caches the XYZ endpoints and ΔE₀₀ of a pair sample so several target
/// spaces can be scored against it.
#[derive(Debug, Clone)]
pub struct PairEvaluator {
    xyz: Vec<[Vec3; 2]>,
    de00: Vec<f64>,
}

impl PairEvaluator {
    pub fn new(pairs: &[[Vec3; 2]], white: &WhitePoint) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("pair sample is empty".into()));
        }
        let xyz = par::map(pairs, |[a, b]| [cielab_to_xyz(a, white), cielab_to_xyz(b, white)]);
        let de00 = par::map(pairs, |[a, b]| ciede2000(a, b));
        Ok(Self { xyz, de00 })
    }

    pub fn len(&self) -> usize {
        self.de00.len()
    }

    pub fn is_empty(&self) -> bool {
        self.de00.is_empty()
    }

    pub fn de00(&self) -> &[f64] {
        &self.de00
    }

    pub fn xyz_pairs(&self) -> &[[Vec3; 2]] {
        &self.xyz
    }

    /// Euclidean pair distances in the target space.
    pub fn distances<T: Transform + ?Sized>(&self, target: &T) -> Result<Vec<f64>> {
        par::try_map(&self.xyz, |index, [a, b]| {
            let wrap = |e| Error::Conversion { index, source: Box::new(e) };
            let pa = target.forward(a).map_err(wrap)?;
            let pb = target.forward(b).map_err(wrap)?;
            Ok(euclidean_de(&pa, &pb))
        })
    }

    pub fn uniformity<T: Transform + ?Sized>(&self, target: &T) -> Result<f64> {
        stress(&self.distances(target)?, &self.de00)
    }
}

/// Non-uniformity `U` of `target` over CIELAB pairs.
pub fn uniformity_u<T: Transform + ?Sized>(target: &T, pairs: &[[Vec3; 2]], white: &WhitePoint) -> Result<f64> {
    PairEvaluator::new(pairs, white)?.uniformity(target)
}
