//! Comparison harness and plot-data generators.
//!
//! [`table1`] scores every colour space on the same samples: non-uniformity
//! `U`, noise heteroscedasticity `H` and whether straight lines survive the
//! map. The plot helpers emit coordinates only; rendering is left to external
//! tools.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspaces::{cielab_to_xyz, linrgb_to_xyz, srgb_to_linrgb, xyy_to_xyz, ColorContext, ColorSpaceId, Transform};
use crate::data::{macadam_ellipses, SpectralData};
use crate::difference::{stress, PairEvaluator};
use crate::error::{Error, Result};
use crate::gamut::{reproducible_subgamut_filter, sample_colors_filtered, sample_pairs, GamutHull, RNG_ID};
use crate::geometry::{collinearity_defect, Mat3, Vec3};
use crate::noise::{heteroscedasticity_h, jacobian, noise_frame, NoiseModel};
use crate::par;

/// Below this sine defect a triple counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-9;
/// Above this sine defect a triple is a counterexample.
pub const BROKEN_TOL: f64 = 1e-3;

/// How a map treats straight lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Collineation {
    /// Every line stays a line.
    Yes,
    /// Only lines through the origin stay lines.
    CentralPencil,
    No,
}

impl fmt::Display for Collineation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Collineation::Yes => "Yes",
            Collineation::CentralPencil => "Central pencil",
            Collineation::No => "No",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollineationTest {
    pub class: Collineation,
    /// Largest sine defect over general triples.
    pub general_defect: f64,
    /// Largest sine defect over triples on rays from the origin.
    pub central_defect: f64,
}

fn random_srgb_xyz(rng: &mut ChaCha8Rng) -> Vec3 {
    let s = Vec3::from_fn(|_, _| rng.gen_range(0.05..0.95));
    linrgb_to_xyz(&srgb_to_linrgb(&s))
}

/// Classifies `target` by mapping random collinear XYZ triples.
///
/// General triples are `a`, `a + t(b − a)`, `b`; central triples are three
/// multiples of one colour with log-uniform factors in `[1e-4, 1]`, so they
/// reach the linear toe of transfer curves.
pub fn classify_collineation<T: Transform + ?Sized>(target: &T, trials: usize, seed: u64) -> Result<CollineationTest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut general: f64 = 0.0;
    let mut central: f64 = 0.0;
    let defect = |pts: [Vec3; 3]| -> Result<f64> {
        let img = [target.forward(&pts[0])?, target.forward(&pts[1])?, target.forward(&pts[2])?];
        Ok(collinearity_defect(&img[0], &img[1], &img[2]))
    };
    for _ in 0..trials {
        let a = random_srgb_xyz(&mut rng);
        let b = random_srgb_xyz(&mut rng);
        let t = rng.gen_range(0.2..0.8);
        general = general.max(defect([a, a + (b - a) * t, b])?);
        let c = random_srgb_xyz(&mut rng);
        let mut s: [f64; 3] = std::array::from_fn(|_| 10f64.powf(rng.gen_range(-4.0..0.0)));
        s.sort_by(f64::total_cmp);
        central = central.max(defect(s.map(|k| c * k))?);
    }
    let class = if general < COLLINEAR_TOL {
        Collineation::Yes
    } else if central < COLLINEAR_TOL {
        Collineation::CentralPencil
    } else {
        Collineation::No
    };
    Ok(CollineationTest { class, general_defect: general, central_defect: central })
}

/// One row of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub space: ColorSpaceId,
    pub collineation: Collineation,
    pub u_t: f64,
    pub h_t: f64,
}

/// Everything needed to reproduce a table run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub n_test: usize,
    pub hull_resolution: usize,
    pub hull_faces: usize,
    pub hull_sha256: String,
    pub data_files: Vec<(String, String)>,
    pub rng: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(seed: u64, n_test: usize, hull: &GamutHull, spectra: &SpectralData) -> Self {
        Self {
            seed,
            n_test,
            hull_resolution: hull.resolution,
            hull_faces: hull.faces.len(),
            hull_sha256: hull.checksum(),
            data_files: spectra.sources.iter().map(|s| (s.name.clone(), s.sha256.clone())).collect(),
            rng: RNG_ID.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Seed of the H sample derived from the table seed.
pub fn h_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Reproducible colours for the H criterion, as XYZ.
pub fn h_sample_xyz(hull: &GamutHull, nm: &NoiseModel, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    let filter = reproducible_subgamut_filter(hull, nm);
    let lab = sample_colors_filtered(hull, n, seed, filter)?;
    Ok(par::map(&lab.colors, |c| cielab_to_xyz(c, &hull.white)))
}

/// Scores all nine spaces. `U` uses `n` pairs drawn with `seed`, `H` uses
/// `n` reproducible colours drawn with [`h_seed`].
pub fn table1(ctx: &ColorContext, hull: &GamutHull, nm: &NoiseModel, n: usize, seed: u64) -> Result<Vec<Table1Row>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let pairs = sample_pairs(hull, n, seed)?;
    let evaluator = PairEvaluator::new(&pairs.pairs, ctx.white())?;
    let h_colors = h_sample_xyz(hull, nm, n, h_seed(seed))?;
    ColorSpaceId::ALL
        .iter()
        .map(|&space| {
            let t = ctx.transform(space);
            let row = Table1Row {
                space,
                collineation: classify_collineation(&t, 2000, seed)?.class,
                u_t: evaluator.uniformity(&t)?,
                h_t: heteroscedasticity_h(&t, &h_colors, nm)?,
            };
            log::info!("{space}: U = {:.4}, H = {:.4}", row.u_t, row.h_t);
            Ok(row)
        })
        .collect()
}

/// Text rendering with six significant digits.
pub fn format_table(rows: &[Table1Row]) -> String {
    let mut s = format!("{:<11} {:<15} {:>10} {:>10}\n", "space", "collineation", "U_T", "H_T");
    for r in rows {
        s += &format!("{:<11} {:<15} {:>10.6} {:>10.6}\n", r.space.name(), r.collineation.to_string(), r.u_t, r.h_t);
    }
    s
}

/// A point of a plotted polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub curve: usize,
    pub t: f64,
    pub v: Vec3,
}

const CUBE_EDGES: [([f64; 3], [f64; 3]); 12] = [
    ([0., 0., 0.], [1., 0., 0.]),
    ([0., 0., 0.], [0., 1., 0.]),
    ([0., 0., 0.], [0., 0., 1.]),
    ([1., 0., 0.], [1., 1., 0.]),
    ([1., 0., 0.], [1., 0., 1.]),
    ([0., 1., 0.], [1., 1., 0.]),
    ([0., 1., 0.], [0., 1., 1.]),
    ([0., 0., 1.], [1., 0., 1.]),
    ([0., 0., 1.], [0., 1., 1.]),
    ([1., 1., 0.], [1., 1., 1.]),
    ([1., 0., 1.], [1., 1., 1.]),
    ([0., 1., 1.], [1., 1., 1.]),
];

/// The 12 sRGB cube edges, each sampled at `steps + 1` points, in `space`.
pub fn srgb_cube_edges(ctx: &ColorContext, space: ColorSpaceId, steps: usize) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::with_capacity(12 * (steps + 1));
    for (e, (a, b)) in CUBE_EDGES.iter().enumerate() {
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let srgb = Vec3::from(*a) + (Vec3::from(*b) - Vec3::from(*a)) * t;
            let xyz = linrgb_to_xyz(&srgb_to_linrgb(&srgb));
            out.push(CurvePoint { curve: e, t, v: ctx.from_xyz(space, &xyz)? });
        }
    }
    Ok(out)
}

/// Grid lines on the six cube faces (`lines` per direction per face).
pub fn srgb_cube_faces(ctx: &ColorContext, space: ColorSpaceId, lines: usize, steps: usize) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    let mut curve = 0;
    for axis in 0..3 {
        for level in [0.0, 1.0] {
            for dir in 0..2 {
                for l in 1..lines {
                    let u = l as f64 / lines as f64;
                    for k in 0..=steps {
                        let t = k as f64 / steps as f64;
                        let (p, q) = if dir == 0 { (u, t) } else { (t, u) };
                        let mut s = Vec3::zeros();
                        s[axis] = level;
                        s[(axis + 1) % 3] = p;
                        s[(axis + 2) % 3] = q;
                        let xyz = linrgb_to_xyz(&srgb_to_linrgb(&s));
                        out.push(CurvePoint { curve, t, v: ctx.from_xyz(space, &xyz)? });
                    }
                    curve += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Largest distance of any curve sample from its curve's end-to-end chord.
pub fn max_chord_deviation(points: &[CurvePoint]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start < points.len() {
        let curve = points[start].curve;
        let end = start + points[start..].iter().take_while(|p| p.curve == curve).count();
        let (a, b) = (points[start].v, points[end - 1].v);
        let dir = (b - a).normalize();
        for p in &points[start..end] {
            let d = p.v - a;
            worst = worst.max((d - dir * d.dot(&dir)).norm());
        }
        start = end;
    }
    worst
}

/// Hull vertices converted to `space`; triangles are unchanged.
pub fn gamut_vertices(ctx: &ColorContext, hull: &GamutHull, space: ColorSpaceId) -> Result<Vec<Vec3>> {
    par::try_map(&hull.vertices, |_, lab| ctx.from_xyz(space, &cielab_to_xyz(lab, &hull.white)))
}

/// Ellipse scale used for display.
pub const MACADAM_SCALE: f64 = 10.0;

/// MacAdam ellipse contours at `L* = 50`, scaled ×10 and pushed through the
/// local linearization of `space` at each centre. Curve `k` holds ellipse `k`;
/// the sample with `t = -1` is the mapped centre.
pub fn macadam_contours(ctx: &ColorContext, space: ColorSpaceId, steps: usize) -> Result<Vec<CurvePoint>> {
    let (ellipses, _) = macadam_ellipses()?;
    let y50 = ctx.white().xyz().y * ((50.0f64 + 16.0) / 116.0).powi(3);
    let target = ctx.transform(space);
    let mut out = Vec::new();
    for (k, e) in ellipses.iter().enumerate() {
        let centre = Vec3::new(e.x, e.y, y50);
        let xyz = xyy_to_xyz(&centre)?;
        let image = target.forward(&xyz)?;
        // d(target)/d(x, y) at fixed Y through the xyY → XYZ chain.
        let via_xyy = |c: &Vec3| -> Result<Vec3> { target.forward(&xyy_to_xyz(c)?) };
        let jac: Mat3 = jacobian(&via_xyy, &centre)?;
        out.push(CurvePoint { curve: k, t: -1.0, v: image });
        let (s, c) = e.theta_deg.to_radians().sin_cos();
        for i in 0..=steps {
            let phi = 2.0 * PI * i as f64 / steps as f64;
            let dx = MACADAM_SCALE * (e.a * phi.cos() * c - e.b * phi.sin() * s);
            let dy = MACADAM_SCALE * (e.a * phi.cos() * s + e.b * phi.sin() * c);
            let v = image + jac.column(0) * dx + jac.column(1) * dy;
            out.push(CurvePoint { curve: k, t: phi, v });
        }
    }
    Ok(out)
}

/// `(ΔE_Φ, ΔE₀₀)` per pair.
pub fn difference_scatter<T: Transform + ?Sized>(target: &T, pairs: &PairEvaluator) -> Result<Vec<(f64, f64)>> {
    let d = pairs.distances(target)?;
    Ok(d.into_iter().zip(pairs.de00().iter().copied()).collect())
}

/// STRESS recomputed from scatter rows.
pub fn scatter_stress(rows: &[(f64, f64)]) -> Result<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    stress(&a, &b)
}

/// Noise ellipsoid at one colour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEllipsoid {
    pub xyz: Vec3,
    pub centre: Vec3,
    /// Principal standard deviations, descending.
    pub sigmas: [f64; 3],
    /// Principal axes as columns.
    pub axes: Mat3,
}

pub fn noise_ellipsoids(ctx: &ColorContext, space: ColorSpaceId, colors_xyz: &[Vec3], nm: &NoiseModel) -> Result<Vec<NoiseEllipsoid>> {
    let t = ctx.transform(space);
    par::try_map(colors_xyz, |_, c| {
        let (sigmas, axes) = noise_frame(&t, c, nm)?;
        Ok(NoiseEllipsoid { xyz: *c, centre: t.forward(c)?, sigmas, axes })
    })
}

/// sRGB grid with `k` levels per channel, restricted to colours the camera
/// reproduces.
pub fn reproducible_srgb_grid(nm: &NoiseModel, k: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let s = Vec3::new(i as f64, j as f64, l as f64).map(|v| (v + 0.5) / k as f64);
                let xyz = linrgb_to_xyz(&srgb_to_linrgb(&s));
                if (nm.d * xyz).iter().all(|v| *v >= 0.0) {
                    out.push(xyz);
                }
            }
        }
    }
    out
}
