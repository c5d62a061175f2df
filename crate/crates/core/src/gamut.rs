//! The D65 object-colour solid in CIELAB and uniform sampling inside it.
//!
//! The solid's boundary is traced by optimal colours: reflectances that are 1
//! on one contiguous (cyclically wrapped) wavelength band and 0 elsewhere. Their
//! CIELAB images are convex-hulled into a polyhedron of inward half-spaces.
//! Membership queries go through a uniform grid that settles most points
//! without touching the face list.

use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspaces::{cielab_to_xyz, xyz_to_cielab};
use crate::data::{sha256_hex, SpectralData};
use crate::difference::DiffPairSample;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::model::WhitePoint;
use crate::noise::NoiseModel;
use crate::par::{self, CHUNK};

/// Inclusive tolerance of the face inequalities.
pub const FACE_TOL: f64 = 1e-9;
/// Sampling aborts when fewer than this fraction of proposals are accepted.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Generator identifier recorded in sample metadata.
pub const RNG_ID: &str = "ChaCha8 (rand_chacha 0.3), seed_from_u64(seed), stream = chunk index, chunk = 4096";

const GRID: usize = 24;
const MIN_PROPOSALS: u64 = 100_000;

/// Half-space `normal · c + offset ≥ 0` with a unit inward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub normal: Vec3,
    pub offset: f64,
}

impl Face {
    pub fn eval(&self, c: &Vec3) -> f64 {
        self.normal.dot(c) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub min: Vec3,
    pub max: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Inside,
    Outside,
    /// Index range into the straddling-face list.
    Boundary(u32, u32),
}

/// Convex polyhedron approximating the gamut.
#[derive(Debug, Clone)]
pub struct GamutHull {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub faces: Vec<Face>,
    pub bbox: Bbox,
    pub white: WhitePoint,
    pub resolution: usize,
    cells: Vec<Cell>,
    straddling: Vec<u32>,
    cell_size: Vec3,
}

/// Cumulative observer×illuminant weights with linear interpolation between
/// wavelength samples, normalized so the full band gives the white point.
struct BandIntegrator {
    cum: Vec<Vec3>,
}

impl BandIntegrator {
    fn new(spectra: &SpectralData, white: &WhitePoint) -> Self {
        let weights: Vec<Vec3> = spectra
            .cmf
            .iter()
            .zip(&spectra.illuminant)
            .map(|(c, s)| Vec3::new(c[0], c[1], c[2]) * *s)
            .collect();
        let total: Vec3 = weights.iter().sum();
        let scale = white.xyz().component_div(&total);
        let mut cum = Vec::with_capacity(weights.len() + 1);
        cum.push(Vec3::zeros());
        for w in &weights {
            let last = *cum.last().unwrap();
            cum.push(last + w.component_mul(&scale));
        }
        Self { cum }
    }

    fn bins(&self) -> f64 {
        (self.cum.len() - 1) as f64
    }

    fn at(&self, t: f64) -> Vec3 {
        let nb = self.cum.len() - 1;
        let k = (t.floor().max(0.0) as usize).min(nb - 1);
        let f = t - k as f64;
        self.cum[k] + (self.cum[k + 1] - self.cum[k]) * f
    }

    /// Tristimulus of the band starting at bin position `s` with width `w`,
    /// wrapping past the long-wavelength end.
    fn band(&self, s: f64, w: f64) -> Vec3 {
        let nb = self.bins();
        let e = s + w;
        if e <= nb {
            self.at(e) - self.at(s)
        } else {
            (self.at(nb) - self.at(s)) + self.at(e - nb)
        }
    }
}

/// Optimal-colour XYZ points: `resolution` band starts × `resolution` band
/// widths, plus black and white.
pub fn optimal_colors(spectra: &SpectralData, white: &WhitePoint, resolution: usize) -> Vec<Vec3> {
    let integ = BandIntegrator::new(spectra, white);
    let nb = integ.bins();
    let r = resolution as f64;
    let mut pts = Vec::with_capacity(resolution * resolution + 2);
    pts.push(Vec3::zeros());
    pts.push(*white.xyz());
    for i in 0..resolution {
        let s = i as f64 * nb / r;
        for j in 1..=resolution {
            pts.push(integ.band(s, j as f64 * nb / (r + 1.0)));
        }
    }
    pts
}

/// Builds the D65 gamut with bundled spectral data.
pub fn build_d65_gamut(resolution: usize) -> Result<GamutHull> {
    build_gamut(&SpectralData::load()?, &WhitePoint::d65(), resolution)
}

pub fn build_gamut(spectra: &SpectralData, white: &WhitePoint, resolution: usize) -> Result<GamutHull> {
    if resolution < 8 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} < 8")));
    }
    let lab: Vec<Vec3> = optimal_colors(spectra, white, resolution)
        .iter()
        .map(|x| xyz_to_cielab(x, white))
        .collect();
    GamutHull::from_points(&lab, *white, resolution)
}

impl GamutHull {
    /// Convex hull of CIELAB points.
    pub fn from_points(points: &[Vec3], white: WhitePoint, resolution: usize) -> Result<Self> {
        let pts: Vec<parry3d_f64::math::Vector> =
            points.iter().map(|p| parry3d_f64::math::Vector::new(p.x, p.y, p.z)).collect();
        let (hv, hi) = parry3d_f64::transformation::convex_hull(&pts);
        let vertices: Vec<Vec3> = hv.iter().map(|v| Vec3::new(v.x, v.y, v.z)).collect();
        if vertices.len() < 4 {
            return Err(Error::InvalidArgument("points span no volume".into()));
        }
        let inner: Vec3 = vertices.iter().sum::<Vec3>() / vertices.len() as f64;
        let mut triangles = Vec::with_capacity(hi.len());
        let mut faces = Vec::with_capacity(hi.len());
        for t in &hi {
            let [a, b, c] = t.map(|k| vertices[k as usize]);
            let n = (b - a).cross(&(c - a));
            let len = n.norm();
            if len <= 1e-14 * (b - a).norm().max((c - a).norm()).powi(2) {
                continue;
            }
            let mut normal = n / len;
            let mut tri = *t;
            if normal.dot(&(inner - a)) < 0.0 {
                normal = -normal;
                tri.swap(1, 2);
            }
            faces.push(Face { normal, offset: -normal.dot(&a) });
            triangles.push(tri);
        }
        // Sliver facets near black carry noisy normals; shift each plane to support every vertex.
        let support: Vec<f64> = par::map_range(faces.len(), |f| {
            vertices.iter().map(|v| faces[f].normal.dot(v)).fold(f64::MAX, f64::min)
        });
        for (face, s) in faces.iter_mut().zip(support) {
            face.offset = -s;
        }
        let mut min = vertices[0];
        let mut max = vertices[0];
        for v in &vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        let mut hull = Self {
            vertices,
            triangles,
            faces,
            bbox: Bbox { min, max },
            white,
            resolution,
            cells: Vec::new(),
            straddling: Vec::new(),
            cell_size: (max - min) / GRID as f64,
        };
        hull.build_grid();
        log::debug!(
            "gamut hull: {} vertices, {} faces, convexity residual {:e}",
            hull.vertices.len(),
            hull.faces.len(),
            hull.convexity_residual()
        );
        Ok(hull)
    }

    fn build_grid(&mut self) {
        let half = self.cell_size / 2.0;
        let classified: Vec<(Cell, Vec<u32>)> = par::map_range(GRID * GRID * GRID, |idx| {
            let (i, j, k) = (idx / (GRID * GRID), (idx / GRID) % GRID, idx % GRID);
            let center = self.bbox.min
                + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5).component_mul(&self.cell_size);
            let mut straddle = Vec::new();
            for (f, face) in self.faces.iter().enumerate() {
                let v = face.eval(&center);
                let reach = face.normal.abs().dot(&half);
                if v + reach < -FACE_TOL {
                    return (Cell::Outside, Vec::new());
                }
                if v - reach < 0.0 {
                    straddle.push(f as u32);
                }
            }
            if straddle.is_empty() {
                (Cell::Inside, straddle)
            } else {
                (Cell::Boundary(0, 0), straddle)
            }
        });
        self.cells = Vec::with_capacity(classified.len());
        for (cell, list) in classified {
            self.cells.push(match cell {
                Cell::Boundary(..) => {
                    let start = self.straddling.len() as u32;
                    self.straddling.extend_from_slice(&list);
                    Cell::Boundary(start, self.straddling.len() as u32)
                }
                other => other,
            });
        }
    }

    fn cell_of(&self, c: &Vec3) -> Option<usize> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            if c[a] < self.bbox.min[a] - FACE_TOL || c[a] > self.bbox.max[a] + FACE_TOL || c[a].is_nan() {
                return None;
            }
            let t = ((c[a] - self.bbox.min[a]) / self.cell_size[a]).floor();
            idx[a] = (t.max(0.0) as usize).min(GRID - 1);
        }
        Some((idx[0] * GRID + idx[1]) * GRID + idx[2])
    }

    /// True iff every face inequality holds within [`FACE_TOL`].
    pub fn contains(&self, c: &Vec3) -> bool {
        let Some(cell) = self.cell_of(c) else {
            return self.contains_exhaustive(c);
        };
        match self.cells[cell] {
            Cell::Inside => true,
            Cell::Outside => false,
            Cell::Boundary(s, e) => self.straddling[s as usize..e as usize]
                .iter()
                .all(|f| self.faces[*f as usize].eval(c) >= -FACE_TOL),
        }
    }

    /// Membership by scanning every face.
    pub fn contains_exhaustive(&self, c: &Vec3) -> bool {
        self.faces.iter().all(|f| f.eval(c) >= -FACE_TOL)
    }

    /// Largest violation of any face inequality by any vertex.
    pub fn convexity_residual(&self) -> f64 {
        par::map(&self.faces, |f| self.vertices.iter().map(|v| -f.eval(v)).fold(0.0, f64::max))
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Fraction of grid cells that need a face scan.
    pub fn boundary_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| matches!(c, Cell::Boundary(..))).count() as f64 / self.cells.len() as f64
    }

    fn tetrahedra(&self) -> impl Iterator<Item = (f64, Vec3)> + '_ {
        let o = self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64;
        self.triangles.iter().map(move |t| {
            let [a, b, c] = t.map(|k| self.vertices[k as usize]);
            let vol = (a - o).dot(&(b - o).cross(&(c - o))).abs() / 6.0;
            (vol, (o + a + b + c) / 4.0)
        })
    }

    pub fn volume(&self) -> f64 {
        self.tetrahedra().map(|(v, _)| v).sum()
    }

    pub fn centroid(&self) -> Vec3 {
        let (vol, moment) = self.tetrahedra().fold((0.0, Vec3::zeros()), |(v, m), (tv, tc)| (v + tv, m + tc * tv));
        moment / vol
    }

    /// Digest of vertices and faces, for sample provenance.
    pub fn checksum(&self) -> String {
        let mut bytes = Vec::with_capacity(self.vertices.len() * 24 + self.triangles.len() * 12);
        for v in &self.vertices {
            for x in v.iter() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        for t in &self.triangles {
            for k in t {
                bytes.extend_from_slice(&k.to_le_bytes());
            }
        }
        sha256_hex(&bytes)
    }

    /// Writes the hull in OFF format.
    pub fn write_off<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let span = self.bbox.max - self.bbox.min;
        self.bbox.min + Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()).component_mul(&span)
    }
}

/// i.i.d. CIELAB colours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorSample {
    pub seed: u64,
    pub colors: Vec<Vec3>,
}

/// Draws `n` colours uniformly from the hull, optionally restricted by
/// `filter`. Chunk `k` of 4096 outputs uses generator stream `k`, so the
/// result does not depend on the thread count.
pub fn sample_colors_filtered<F>(hull: &GamutHull, n: usize, seed: u64, filter: F) -> Result<ColorSample>
where
    F: Fn(&Vec3) -> bool + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts = par::try_map(&(0..chunks).collect::<Vec<_>>(), |_, &chunk| {
        let len = CHUNK.min(n - chunk * CHUNK);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let mut out = Vec::with_capacity(len);
        let mut proposals = 0u64;
        while out.len() < len {
            let c = hull.propose(&mut rng);
            proposals += 1;
            if hull.contains(&c) && filter(&c) {
                out.push(c);
            } else if proposals >= MIN_PROPOSALS && (out.len() as f64) < MIN_ACCEPTANCE * proposals as f64 {
                return Err(Error::RejectionStall(MIN_ACCEPTANCE));
            }
        }
        Ok(out)
    })?;
    Ok(ColorSample { seed, colors: parts.into_iter().flatten().collect() })
}

pub fn sample_colors(hull: &GamutHull, n: usize, seed: u64) -> Result<ColorSample> {
    sample_colors_filtered(hull, n, seed, |_| true)
}

/// Draws `2n` colours and pairs consecutive ones.
pub fn sample_pairs(hull: &GamutHull, n: usize, seed: u64) -> Result<DiffPairSample> {
    let colors = sample_colors(hull, n.checked_mul(2).ok_or_else(|| Error::InvalidArgument("n too large".into()))?, seed)?.colors;
    Ok(DiffPairSample { seed, pairs: colors.chunks_exact(2).map(|p| [p[0], p[1]]).collect() })
}

/// Membership in the hull and non-negative camera response.
pub fn reproducible_subgamut_filter<'a>(
    hull: &'a GamutHull,
    cal: &'a NoiseModel,
) -> impl Fn(&Vec3) -> bool + Sync + 'a {
    move |c: &Vec3| hull.contains(c) && is_reproducible(c, &hull.white, cal)
}

/// `D·L⁻¹(c) ≥ 0` componentwise.
pub fn is_reproducible(lab: &Vec3, white: &WhitePoint, cal: &NoiseModel) -> bool {
    (cal.d * cielab_to_xyz(lab, white)).iter().all(|v| *v >= 0.0)
}

/// Writes a sample as CSV with a provenance header.
pub fn write_sample_csv<W: Write>(mut out: W, hull: &GamutHull, sample: &ColorSample) -> std::io::Result<()> {
    writeln!(
        out,
        "# seed={} n={} hull_sha256={} rng={}",
        sample.seed,
        sample.colors.len(),
        hull.checksum(),
        RNG_ID
    )?;
    writeln!(out, "L,a,b")?;
    for c in &sample.colors {
        writeln!(out, "{},{},{}", c.x, c.y, c.z)?;
    }
    Ok(())
}

/// Counts of `colors` in the cells of a `bins³` grid over the bounding box
/// that lie entirely inside the hull. Other colours are ignored.
pub fn interior_bin_counts(hull: &GamutHull, colors: &[Vec3], bins: usize) -> Vec<u64> {
    let size = (hull.bbox.max - hull.bbox.min) / bins as f64;
    let corner = |i: usize, j: usize, k: usize| hull.bbox.min + Vec3::new(i as f64, j as f64, k as f64).component_mul(&size);
    let mut slot = vec![usize::MAX; bins * bins * bins];
    let mut n_inside = 0;
    for i in 0..bins {
        for j in 0..bins {
            for k in 0..bins {
                let inside = (0..8).all(|m| hull.contains_exhaustive(&corner(i + (m & 1), j + ((m >> 1) & 1), k + (m >> 2))));
                if inside {
                    slot[(i * bins + j) * bins + k] = n_inside;
                    n_inside += 1;
                }
            }
        }
    }
    let mut counts = vec![0u64; n_inside];
    for c in colors {
        let idx = Vec3::from_fn(|a, _| ((c[a] - hull.bbox.min[a]) / size[a]).floor());
        if idx.iter().any(|v| *v < 0.0 || *v >= bins as f64) {
            continue;
        }
        let s = slot[((idx.x as usize) * bins + idx.y as usize) * bins + idx.z as usize];
        if s != usize::MAX {
            counts[s] += 1;
        }
    }
    counts
}
