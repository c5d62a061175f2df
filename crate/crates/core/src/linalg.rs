//! Closed-form eigen-decomposition of symmetric 3×3 matrices.

use std::f64::consts::PI;

use crate::geometry::{Mat3, Vec3};

/// Eigenvalues of a symmetric matrix in descending order, by the
/// trigonometric solution of the characteristic cubic. Only the upper
/// triangle of `a` is read.
pub fn sym3_eigenvalues(a: &Mat3) -> [f64; 3] {
    let (a00, a11, a22) = (a[(0, 0)], a[(1, 1)], a[(2, 2)]);
    let (a01, a02, a12) = (a[(0, 1)], a[(0, 2)], a[(1, 2)]);
    let off = a01 * a01 + a02 * a02 + a12 * a12;
    let q = (a00 + a11 + a22) / 3.0;
    let diag = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2);
    if off <= f64::EPSILON * f64::EPSILON * diag.max(q * q) || (off == 0.0) {
        let mut d = [a00, a11, a22];
        d.sort_by(|x, y| y.total_cmp(x));
        return d;
    }
    let p = ((diag + 2.0 * off) / 6.0).sqrt();
    let (b00, b11, b22) = ((a00 - q) / p, (a11 - q) / p, (a22 - q) / p);
    let (b01, b02, b12) = (a01 / p, a02 / p, a12 / p);
    let det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
}

fn symmetric(a: &Mat3) -> Mat3 {
    Mat3::new(
        a[(0, 0)], a[(0, 1)], a[(0, 2)],
        a[(0, 1)], a[(1, 1)], a[(1, 2)],
        a[(0, 2)], a[(1, 2)], a[(2, 2)],
    )
}

/// Unit vector spanning the null space of `m` (assumed rank 2).
fn null_vector(m: &Mat3) -> Option<Vec3> {
    let r0 = m.row(0).transpose();
    let r1 = m.row(1).transpose();
    let r2 = m.row(2).transpose();
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = candidates
        .iter()
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if best.norm() <= 1e-10 * scale * scale {
        None
    } else {
        Some(best.normalize())
    }
}

fn any_orthogonal(v: &Vec3) -> Vec3 {
    let trial = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    v.cross(&trial).normalize()
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors as
/// columns of the returned matrix.
///
/// The best separated eigenvalue fixes one vector through a null space;
/// the remaining pair is resolved by an exact 2×2 rotation in the
/// orthogonal complement, so near-repeated roots keep full precision.
pub fn sym3_eigen(a: &Mat3) -> ([f64; 3], Mat3) {
    let s = symmetric(a);
    let l = sym3_eigenvalues(&s);
    let iso = if l[0] - l[1] > l[1] - l[2] { 0 } else { 2 };
    let Some(v) = null_vector(&(s - Mat3::identity() * l[iso])) else {
        return (l, Mat3::identity());
    };
    let u = any_orthogonal(&v);
    let w = v.cross(&u);
    let (suu, suw, sww) = (u.dot(&(s * u)), u.dot(&(s * w)), w.dot(&(s * w)));
    let theta = 0.5 * (2.0 * suw).atan2(suu - sww);
    let (sn, cs) = theta.sin_cos();
    let e1 = u * cs + w * sn;
    let e2 = w * cs - u * sn;
    let mut pairs = [
        (v.dot(&(s * v)), v),
        (e1.dot(&(s * e1)), e1),
        (e2.dot(&(s * e2)), e2),
    ];
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    (
        [pairs[0].0, pairs[1].0, pairs[2].0],
        Mat3::from_columns(&[pairs[0].1, pairs[1].1, pairs[2].1]),
    )
}
