//! Randomized property suites shared by the `properties` and `acceptance`
//! targets. Each suite runs [`CASES`] cases from a fixed seed.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use prolab::colorspaces::{linrgb_to_xyz, srgb_to_linrgb, ColorContext, ColorSpaceId, Scaled, TaggedColor};
use prolab::difference::{stress, PairEvaluator};
use prolab::gamut::{interior_bin_counts, sample_colors, sample_pairs, GamutHull};
use prolab::geometry::{collinearity_defect, cross_ratio};
use prolab::linalg::sym3_eigenvalues;
use prolab::model::{reference_matrices, reference_prolab, WhitePoint};
use prolab::noise::{heteroscedasticity_h, propagate};
use prolab::{Homography, Mat4, NoiseModel, Vec3};

pub const CASES: u32 = 1000;

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, max_global_rejects: 100_000, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

fn unit3() -> impl Strategy<Value = Vec3> {
    [0.0..1.0f64, 0.0..1.0, 0.0..1.0].prop_map(Vec3::from)
}

fn srgb_xyz() -> impl Strategy<Value = Vec3> {
    [0.02..1.0f64, 0.02..1.0, 0.02..1.0].prop_map(|s| linrgb_to_xyz(&srgb_to_linrgb(&Vec3::from(s))))
}

/// Colour with strictly positive camera response.
fn reproducible_xyz() -> impl Strategy<Value = Vec3> {
    let nm = NoiseModel::default();
    srgb_xyz().prop_filter("camera response must be positive", move |xyz| (nm.d * xyz).iter().all(|v| *v > 0.0))
}

fn homography() -> impl Strategy<Value = Homography> {
    (prop::array::uniform9(-0.3..0.3f64), prop::array::uniform3(-0.1..0.1f64)).prop_map(|(lin, row)| {
        let mut m = Mat4::identity();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += lin[3 * i + j];
            }
            m[(3, i)] = row[i];
        }
        Homography::new(m).expect("perturbed identity is invertible")
    })
}

pub fn projective_lines() -> Result<(), String> {
    let ts = prop::array::uniform4(0.0..1.0f64);
    check((homography(), unit3(), unit3(), ts), |(h, a, b, mut t)| {
        prop_assume!((b - a).norm() > 1e-2);
        t.sort_by(f64::total_cmp);
        prop_assume!(t.windows(2).all(|w| w[1] - w[0] > 0.05));
        let pts = t.map(|s| a + (b - a) * s);
        let img: Vec<Vec3> = pts.iter().map(|p| h.apply(p).unwrap()).collect();
        for k in 1..3 {
            let d = collinearity_defect(&img[0], &img[k], &img[3]);
            prop_assert!(d < 1e-9, "defect {d:e}");
        }
        let before = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3]);
        let after = cross_ratio(&img[0], &img[1], &img[2], &img[3]);
        prop_assert!((before - after).abs() <= 1e-7 * before.abs(), "{before} vs {after}");
        Ok(())
    })
}

pub fn conversion_round_trips() -> Result<(), String> {
    let ctx = ColorContext::global();
    check(srgb_xyz(), |xyz| {
        for &s in &ColorSpaceId::ALL {
            let tol = if s.is_linear() { 1e-9 } else { 1e-6 };
            let back = ctx.to_xyz(s, &ctx.from_xyz(s, &xyz).unwrap()).unwrap();
            prop_assert!((back - xyz).amax() < tol, "{s}: {back:?} vs {xyz:?}");
            for &t in &ColorSpaceId::ALL {
                let start = TaggedColor::new(s, ctx.from_xyz(s, &xyz).unwrap());
                let there = ctx.convert(&start, t).unwrap();
                let again = ctx.convert(&there, s).unwrap();
                let scale = start.v.amax().max(1.0);
                prop_assert!((again.v - start.v).amax() < 1e-6 * scale, "{s} -> {t}");
            }
        }
        Ok(())
    })
}

pub fn stress_identities() -> Result<(), String> {
    let vectors = (2usize..60).prop_flat_map(|n| {
        (prop::collection::vec(0.01..10.0f64, n), prop::collection::vec(0.01..10.0f64, n), 1e-3..1e3f64, any::<u64>())
    });
    check(vectors, |(a, b, k, shuffle)| {
        let s = stress(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        let scaled: Vec<f64> = a.iter().map(|v| v * k).collect();
        prop_assert!((stress(&scaled, &b).unwrap() - s).abs() < 1e-9);
        let scaled_b: Vec<f64> = b.iter().map(|v| v * k).collect();
        prop_assert!((stress(&a, &scaled_b).unwrap() - s).abs() < 1e-9);
        let n = a.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + (shuffle as usize % n)) % n).rev().collect();
        let pa: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
        prop_assert!((stress(&pa, &pb).unwrap() - s).abs() < 1e-9);
        prop_assert!(stress(&a, &a).unwrap() < 1e-7);
        Ok(())
    })
}

pub fn lightness_monotonicity() -> Result<(), String> {
    let printed = reference_matrices().p;
    let built = *reference_prolab();
    let w = *WhitePoint::d65().xyz();
    check((unit3(), unit3()), |(u0, u1)| {
        let c0 = w.component_mul(&u0);
        let c1 = c0 + (w - c0).component_mul(&u1);
        for p in [&printed, &built] {
            let (l0, l1) = (p.apply(&c0).unwrap().x, p.apply(&c1).unwrap().x);
            prop_assert!(l1 >= l0 - 1e-9, "{l0} > {l1}");
        }
        Ok(())
    })
}

pub fn covariance_symmetric_psd() -> Result<(), String> {
    let ctx = ColorContext::global();
    let nm = NoiseModel::default();
    check(reproducible_xyz(), |xyz| {
        for &s in &ColorSpaceId::ALL {
            let c = propagate(&ctx.transform(s), &xyz, &nm).unwrap();
            let scale = c.amax();
            prop_assert!((c - c.transpose()).amax() <= 1e-12 * scale, "{s}");
            let eig = sym3_eigenvalues(&c);
            prop_assert!(eig[2] >= -1e-9 * scale, "{s}: {eig:?}");
        }
        Ok(())
    })
}

pub fn h_scale_invariance() -> Result<(), String> {
    let ctx = ColorContext::global();
    let nm = NoiseModel::default();
    let inputs = (prop::collection::vec(reproducible_xyz(), 8..24), 0usize..9, -3.0..3.0f64);
    check(inputs, |(colors, space, log_k)| {
        let t = ctx.transform(ColorSpaceId::ALL[space]);
        let h = heteroscedasticity_h(&t, &colors, &nm).unwrap();
        let scaled = Scaled { inner: t, k: 10f64.powf(log_k) };
        let hs = heteroscedasticity_h(&scaled, &colors, &nm).unwrap();
        prop_assert!((h - hs).abs() < 1e-9, "{h} vs {hs}");
        Ok(())
    })
}

/// Chi-square p-value of the interior bin counts of `n` samples.
pub fn sampler_chi_square(hull: &GamutHull, n: usize, seed: u64) -> f64 {
    let sample = sample_colors(hull, n, seed).unwrap();
    let counts = interior_bin_counts(hull, &sample.colors, 8);
    let total: u64 = counts.iter().sum();
    let expect = total as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&o| (o as f64 - expect).powi(2) / expect).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(chi2)
}

/// Fingerprint of sampler and criterion outputs, bit-exact.
pub fn fingerprint(hull: &GamutHull) -> Vec<u64> {
    let ctx = ColorContext::global();
    let nm = NoiseModel::default();
    let colors = sample_colors(hull, 3 * 4096 + 17, 9).unwrap().colors;
    let mut bits: Vec<u64> = colors.iter().flat_map(|c| c.iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect();
    let pairs = sample_pairs(hull, 5000, 4).unwrap();
    let eval = PairEvaluator::new(&pairs.pairs, ctx.white()).unwrap();
    let xyz = prolab::report::h_sample_xyz(hull, &nm, 5000, 11).unwrap();
    for &s in &ColorSpaceId::ALL {
        let t = ctx.transform(s);
        bits.push(eval.uniformity(&t).unwrap().to_bits());
        bits.push(heteroscedasticity_h(&t, &xyz, &nm).unwrap().to_bits());
    }
    bits
}

/// Runs [`fingerprint`] inside pools of 1, 2 and 5 threads.
pub fn thread_count_determinism(hull: &GamutHull) -> Result<(), String> {
    let runs: Vec<Vec<u64>> = [1, 2, 5]
        .iter()
        .map(|&n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| fingerprint(hull))
        })
        .collect();
    if runs.windows(2).all(|w| w[0] == w[1]) {
        Ok(())
    } else {
        Err("outputs differ between thread counts".into())
    }
}
