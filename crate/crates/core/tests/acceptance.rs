//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Criteria listed in [`KNOWN_UNATTAINABLE`] are evaluated and reported like
//! any other, but their failure does not fail the run. Should one start to
//! pass, the run fails so the list is kept honest.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use prolab::colorspaces::{ColorContext, ColorSpaceId};
use prolab::difference::{ciede2000, PairEvaluator};
use prolab::gamut::sample_pairs;
use prolab::model::{adaptation_matrix, reference_matrices, reference_prolab, MetricParams, WhitePoint};
use prolab::noise::{fit_jahne, Channel, PatchRecord};
use prolab::optimizer::{fit_metric_params, FitConfig};
use prolab::report::{table1, Collineation, Table1Row};
use prolab::{build_p, constraint_values, Homography, NoiseModel, Vec3};

use common::properties as props;

/// Criteria that cannot be met with the published constants.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

const P_TOL: f64 = 1e-2;
const QN_TOL: f64 = 1e-3;
const SHARMA_TOL: f64 = 1e-4;
const TABLE_N: usize = 100_000;
const TABLE_SEED: u64 = 1;
const U_TOL: f64 = 0.02;
const U_TOL_WIDE: f64 = 0.04;
const H_TOL: f64 = 0.05;
const FIT_U_MAX: f64 = 0.22;
const FIT_TEST_TOL: f64 = 0.02;
const FIT_TEST_SEED: u64 = 2;
const CHI2_ALPHA: f64 = 1e-3;
const JAHNE_G_REL: f64 = 0.10;
const JAHNE_V_REL: f64 = 0.20;
const EXACT_LINE_TOL: f64 = 1e-6;

/// Published `U_T`, `H_T` and collineation per space.
const TABLE: [(ColorSpaceId, f64, f64, Collineation); 9] = [
    (ColorSpaceId::Xyz, 0.479, 0.722, Collineation::Yes),
    (ColorSpaceId::Xyy, 0.296, 0.822, Collineation::CentralPencil),
    (ColorSpaceId::Lms, 0.475, 0.720, Collineation::Yes),
    (ColorSpaceId::LinRgb, 0.381, 0.607, Collineation::Yes),
    (ColorSpaceId::Srgb, 0.316, 0.830, Collineation::No),
    (ColorSpaceId::Cielab, 0.259, 0.848, Collineation::No),
    (ColorSpaceId::Cam16Ucs, 0.177, 0.696, Collineation::No),
    (ColorSpaceId::ProLab, 0.209, 0.565, Collineation::Yes),
    (ColorSpaceId::DeviceRgb, 0.474, 0.470, Collineation::Yes),
];

/// Reference CIEDE2000 pairs: `L₁ a₁ b₁ L₂ a₂ b₂ ΔE₀₀`.
const SHARMA: [[f64; 7]; 34] = [
    [50.0000, 2.6772, -79.7751, 50.0000, 0.0000, -82.7485, 2.0425],
    [50.0000, 3.1571, -77.2803, 50.0000, 0.0000, -82.7485, 2.8615],
    [50.0000, 2.8361, -74.0200, 50.0000, 0.0000, -82.7485, 3.4412],
    [50.0000, -1.3802, -84.2814, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, -1.1848, -84.8006, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, -0.9009, -85.5211, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, 0.0000, 0.0000, 50.0000, -1.0000, 2.0000, 2.3669],
    [50.0000, -1.0000, 2.0000, 50.0000, 0.0000, 0.0000, 2.3669],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0009, 7.1792],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0010, 7.1792],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0011, 7.2195],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0012, 7.2195],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0009, -2.4900, 4.8045],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0010, -2.4900, 4.8045],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0011, -2.4900, 4.7461],
    [50.0000, 2.5000, 0.0000, 50.0000, 0.0000, -2.5000, 4.3065],
    [50.0000, 2.5000, 0.0000, 73.0000, 25.0000, -18.0000, 27.1492],
    [50.0000, 2.5000, 0.0000, 61.0000, -5.0000, 29.0000, 22.8977],
    [50.0000, 2.5000, 0.0000, 56.0000, -27.0000, -3.0000, 31.9030],
    [50.0000, 2.5000, 0.0000, 58.0000, 24.0000, 15.0000, 19.4535],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.1736, 0.5854, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.2972, 0.0000, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 1.8634, 0.5757, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.2592, 0.3350, 1.0000],
    [60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644],
    [63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630],
    [61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731],
    [35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645],
    [22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373],
    [36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146],
    [90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441],
    [90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381],
    [6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377],
    [2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn max_entry_diff(a: &Homography, b: &Homography) -> f64 {
    (a.matrix() - b.matrix()).amax()
}

fn published_constants() -> Outcome {
    let t = Instant::now();
    let reference = reference_matrices();
    let built = build_p(&MetricParams::published(), &WhitePoint::d65()).unwrap();
    let dp = max_entry_diff(&built, &reference.p);
    let n = adaptation_matrix(&WhitePoint::d65());
    let dqn = max_entry_diff(&reference.q.compose(&n).unwrap(), &reference.p);
    let secs = t.elapsed();
    Outcome {
        pass: dp < P_TOL && dqn < QN_TOL && secs < Duration::from_secs(1),
        detail: format!("max |build_P − P| = {dp:.2e} (< {P_TOL:e}), max |Q·N − P| = {dqn:.2e} (< {QN_TOL:e})"),
    }
}

fn constraint_feasibility() -> Outcome {
    let printed = constraint_values(&MetricParams::PRINTED);
    let recovered = constraint_values(&MetricParams::published());
    let (worst, value) = printed.f.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    Outcome {
        pass: printed.is_feasible(),
        detail: format!(
            "printed μ: min f_{} = {value:.4e}; μ recovered from Q: min = {:.4e}",
            worst + 1,
            recovered.min()
        ),
    }
}

fn ciede2000_conformance() -> Outcome {
    let worst = SHARMA
        .iter()
        .map(|r| (ciede2000(&Vec3::new(r[0], r[1], r[2]), &Vec3::new(r[3], r[4], r[5])) - r[6]).abs())
        .fold(0.0, f64::max);
    Outcome { pass: worst < SHARMA_TOL, detail: format!("34 pairs, max deviation {worst:.2e} (< {SHARMA_TOL:e})") }
}

fn row(rows: &[Table1Row], s: ColorSpaceId) -> &Table1Row {
    rows.iter().find(|r| r.space == s).expect("every space is scored")
}

fn strictly_increasing(rows: &[Table1Row], order: &[ColorSpaceId], value: fn(&Table1Row) -> f64) -> bool {
    order.windows(2).all(|w| value(row(rows, w[0])) < value(row(rows, w[1])))
}

fn u_column(rows: &[Table1Row], secs: Duration) -> Outcome {
    let mut pass = secs < Duration::from_secs(600);
    let mut cells = Vec::new();
    for (s, u, _, _) in TABLE {
        let tol = if matches!(s, ColorSpaceId::Lms | ColorSpaceId::Cam16Ucs) { U_TOL_WIDE } else { U_TOL };
        let got = row(rows, s).u_t;
        pass &= (got - u).abs() <= tol;
        cells.push(format!("{} {got:.3}/{u:.3}±{tol}", s.name()));
    }
    use ColorSpaceId::*;
    let ordered = strictly_increasing(rows, &[Cam16Ucs, ProLab, Cielab, Xyy, Srgb], |r| r.u_t);
    pass &= ordered;
    Outcome { pass, detail: format!("{}; ordering {}", cells.join(", "), if ordered { "holds" } else { "broken" }) }
}

fn h_column(rows: &[Table1Row], secs: Duration) -> Outcome {
    let mut pass = secs < Duration::from_secs(900);
    let mut cells = Vec::new();
    for (s, _, h, _) in TABLE {
        let got = row(rows, s).h_t;
        pass &= (got - h).abs() <= H_TOL;
        cells.push(format!("{} {got:.3}/{h:.3}", s.name()));
    }
    use ColorSpaceId::*;
    let ordered = strictly_increasing(rows, &[DeviceRgb, ProLab, LinRgb], |r| r.h_t);
    pass &= ordered;
    Outcome { pass, detail: format!("±{H_TOL}: {}; ordering {}", cells.join(", "), if ordered { "holds" } else { "broken" }) }
}

fn collineation_column(rows: &[Table1Row]) -> Outcome {
    let wrong: Vec<String> = TABLE
        .iter()
        .filter(|(s, _, _, c)| row(rows, *s).collineation != *c)
        .map(|(s, _, _, c)| format!("{} is {} (expected {c})", s.name(), row(rows, *s).collineation))
        .collect();
    Outcome {
        pass: wrong.is_empty(),
        detail: if wrong.is_empty() { "all nine spaces match".into() } else { wrong.join("; ") },
    }
}

fn optimizer() -> Outcome {
    let t = Instant::now();
    let fit = match fit_metric_params(&FitConfig::default()) {
        Ok(f) => f,
        Err(e) => return Outcome { pass: false, detail: format!("fit failed: {e}") },
    };
    let feasible = constraint_values(&fit.mu).is_feasible();
    let hull = common::hull();
    let test = sample_pairs(hull, TABLE_N, FIT_TEST_SEED).unwrap();
    let eval = PairEvaluator::new(&test.pairs, &WhitePoint::d65()).unwrap();
    let u_fit = eval.uniformity(&fit.p).unwrap();
    let u_pub = eval.uniformity(reference_prolab()).unwrap();
    let secs = t.elapsed();
    Outcome {
        pass: feasible
            && fit.u_train <= FIT_U_MAX
            && (u_fit - u_pub).abs() <= FIT_TEST_TOL
            && secs < Duration::from_secs(1800),
        detail: format!(
            "feasible {feasible}, U_train {:.4} (≤ {FIT_U_MAX}), test U {u_fit:.4} vs published {u_pub:.4} (±{FIT_TEST_TOL})",
            fit.u_train
        ),
    }
}

fn property_suites() -> Outcome {
    let hull = common::hull();
    type Suite = Box<dyn Fn() -> Result<(), String>>;
    let suites: [(&str, Suite); 8] = [
        ("projective", Box::new(props::projective_lines)),
        ("round-trips", Box::new(props::conversion_round_trips)),
        ("stress", Box::new(props::stress_identities)),
        ("lightness", Box::new(props::lightness_monotonicity)),
        ("covariance", Box::new(props::covariance_symmetric_psd)),
        ("H-scale", Box::new(props::h_scale_invariance)),
        (
            "chi-square",
            Box::new(move || {
                let p = props::sampler_chi_square(hull, TABLE_N, TABLE_SEED);
                if p > CHI2_ALPHA { Ok(()) } else { Err(format!("p = {p:.2e}")) }
            }),
        ),
        ("threads", Box::new(move || props::thread_count_determinism(hull))),
    ];
    let mut failed = Vec::new();
    for (name, suite) in &suites {
        if let Err(e) = suite() {
            failed.push(format!("{name}: {e}"));
        }
    }
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} suites, {} cases each where randomized", suites.len(), props::CASES)
        } else {
            failed.join("; ")
        },
    }
}

/// Per-patch statistics of simulated sensor frames.
fn simulate_patches(g: f64, var_eps: f64, pixels: usize, seed: u64) -> Vec<PatchRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let read = Normal::new(0.0, var_eps.sqrt()).unwrap();
    let mut out = Vec::new();
    for channel in [Channel::R, Channel::G1, Channel::G2, Channel::B] {
        for k in 0..18 {
            let electrons = Poisson::new(20.0 + 600.0 * k as f64).unwrap();
            let values: Vec<f64> = (0..pixels).map(|_| g * electrons.sample(&mut rng) + read.sample(&mut rng)).collect();
            let mean = values.iter().sum::<f64>() / pixels as f64;
            let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (pixels - 1) as f64;
            out.push(PatchRecord { channel, mean, variance });
        }
    }
    out
}

fn exact_line_records() -> Vec<PatchRecord> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/data/patches_exact_line.csv");
    let text = std::fs::read_to_string(path).expect("shipped patch file");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            PatchRecord { channel: f[0].parse().unwrap(), mean: f[1].parse().unwrap(), variance: f[2].parse().unwrap() }
        })
        .collect()
}

fn noise_fit() -> Outcome {
    let (g, v) = (3.0, 500.0);
    let sim = fit_jahne(&simulate_patches(g, v, 20_000, 7)).unwrap();
    let line = exact_line_records();
    let exact = fit_jahne(&line).unwrap();
    let nm = NoiseModel::default();
    let pass = (sim.g - g).abs() <= JAHNE_G_REL * g
        && (sim.var_eps - v).abs() <= JAHNE_V_REL * v
        && line.len() == 72
        && (exact.g - nm.g).abs() <= EXACT_LINE_TOL
        && (exact.var_eps - nm.var_eps).abs() <= EXACT_LINE_TOL;
    Outcome {
        pass,
        detail: format!(
            "synthetic (g {g}, V {v}) → ({:.3}, {:.1}); exact line → ({:.9}, {:.7})",
            sim.g, sim.var_eps, exact.g, exact.var_eps
        ),
    }
}

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    let mut report = |id: u32, title: &str, secs: Duration, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let note = if known && !o.pass { " [known unattainable]" } else { "" };
        println!("criterion {id} [{status}]{note} {title}: {} ({:.1} s)", o.detail, secs.as_secs_f64());
        if o.pass == known {
            unexpected.push(id);
        }
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (t.elapsed(), o)
    };

    let (s, o) = timed(&published_constants);
    report(1, "published-constant consistency", s, o);
    let (s, o) = timed(&constraint_feasibility);
    report(2, "constraint feasibility of published μ", s, o);
    let (s, o) = timed(&ciede2000_conformance);
    report(3, "CIEDE2000 conformance", s, o);

    let t = Instant::now();
    let rows = table1(ColorContext::global(), common::hull(), &NoiseModel::default(), TABLE_N, TABLE_SEED).unwrap();
    let table_secs = t.elapsed();
    report(4, "comparison table, U column", table_secs, u_column(&rows, table_secs));
    report(5, "comparison table, H column", table_secs, h_column(&rows, table_secs));
    report(6, "comparison table, collineation column", table_secs, collineation_column(&rows));

    let (s, o) = timed(&optimizer);
    report(7, "optimizer at defaults", s, o);
    let (s, o) = timed(&property_suites);
    report(8, "property suites", s, o);
    let (s, o) = timed(&noise_fit);
    report(9, "noise fit", s, o);

    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
