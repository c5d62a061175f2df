//! Re-derivation of the metric parameters by penalized multistart search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::difference::PairEvaluator;
use crate::error::{Error, Result};
use crate::gamut::{build_d65_gamut, sample_pairs};
use crate::geometry::{to_cartesian, Homography, Vec3};
use crate::model::{build_p, constraint_values, MetricParams, WhitePoint};
use crate::par;

/// Outcome of a local search.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    /// Best objective after each iteration; non-increasing.
    pub trace: Vec<f64>,
}

/// A local minimizer of a scalar function.
pub trait Minimizer: Sync {
    fn minimize(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64]) -> Minimum;
}

/// Nelder–Mead simplex descent, restarted around the incumbent until a
/// restart stops improving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Stop when the simplex's objective spread falls below this.
    pub tolerance: f64,
    pub initial_step: f64,
    pub max_restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iters: 4000, tolerance: 1e-9, initial_step: 0.1, max_restarts: 4 }
    }
}

impl NelderMead {
    fn run(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64], fx0: f64, budget: usize, trace: &mut Vec<f64>) -> (Vec<f64>, f64, usize) {
        let n = x0.len();
        let mut evals = 0;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), fx0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += if x[i].abs() > 1e-8 { self.initial_step * x[i].abs().max(0.25) } else { self.initial_step };
            let fx = f(&x);
            evals += 1;
            simplex.push((x, fx));
        }
        let mut iters = 0;
        while iters < budget {
            iters += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            trace.push(simplex[0].1);
            if (simplex[n].1 - simplex[0].1).abs() <= self.tolerance * (1.0 + simplex[0].1.abs()) {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k])).collect() };
            let xr = along(-1.0);
            let fr = f(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = f(&xe);
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let x = along(-0.5);
                    let fx = f(&x);
                    (x, fx)
                } else {
                    let x = along(0.5);
                    let fx = f(&x);
                    (x, fx)
                };
                evals += 1;
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for p in simplex.iter_mut().skip(1) {
                        for (x, b) in p.0.iter_mut().zip(&best) {
                            *x = b + 0.5 * (*x - b);
                        }
                        p.1 = f(&p.0);
                        evals += 1;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, fx) = simplex.swap_remove(0);
        (x, fx, evals)
    }
}

impl Minimizer for NelderMead {
    fn minimize(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64]) -> Minimum {
        let mut x = x0.to_vec();
        let mut fx = f(&x);
        let mut evaluations = 1;
        let mut trace = vec![fx];
        for _ in 0..=self.max_restarts {
            let (xn, fxn, e) = self.run(f, &x, fx, self.max_iters, &mut trace);
            evaluations += e;
            let improved = fx - fxn > self.tolerance * (1.0 + fx.abs());
            if fxn <= fx {
                x = xn;
                fx = fxn;
            }
            if !improved {
                break;
            }
        }
        for k in 1..trace.len() {
            trace[k] = trace[k].min(trace[k - 1]);
        }
        Minimum { x, fx, evaluations, trace }
    }
}

/// Fit settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_pairs: usize,
    pub seed: u64,
    pub penalty_weight: f64,
    pub n_starts: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub hull_resolution: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_pairs: 10_000,
            seed: 1,
            penalty_weight: 1e6,
            n_starts: 32,
            max_iters: 4000,
            tolerance: 1e-9,
            hull_resolution: 100,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_weight > 0.0) || self.n_starts == 0 || self.n_pairs == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument(format!("invalid fit configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mu: MetricParams,
    pub objective: f64,
    pub u_train: f64,
    pub constraint_min: f64,
    pub start_index: usize,
    pub evaluations: usize,
    pub p: Homography,
    pub config: FitConfig,
}

/// proLab candidate that rejects colours at or beyond its horizon.
fn guarded(p: &Homography) -> impl Fn(&Vec3) -> Result<Vec3> + Sync + '_ {
    move |c: &Vec3| {
        let h = p.apply_homogeneous(c);
        if h.w <= 0.0 {
            return Err(Error::DegeneratePoint(h.w));
        }
        to_cartesian(&h)
    }
}

/// `U` of the proLab built from `mu`, plus `weight·Σ max(0, −f_i)²`.
/// Candidates whose transform cannot be built, or that send a sample colour
/// behind the horizon, score the penalty plus 1.
pub fn penalized_objective(mu: &MetricParams, pairs: &PairEvaluator, weight: f64) -> f64 {
    let penalty = weight * constraint_values(mu).violation();
    let u = build_p(mu, &WhitePoint::d65()).and_then(|p| {
        let u = pairs.uniformity(&guarded(&p));
        u
    });
    match u {
        Ok(u) => u + penalty,
        Err(_) => penalty + 1.0,
    }
}

/// Training `U` of explicit parameters.
pub fn training_u(mu: &MetricParams, pairs: &PairEvaluator) -> Result<f64> {
    let p = build_p(mu, &WhitePoint::d65())?;
    let u = pairs.uniformity(&guarded(&p));
    u
}

/// Start points: identity, published, then perturbed identities.
pub fn start_points(cfg: &FitConfig) -> Vec<MetricParams> {
    (0..cfg.n_starts)
        .map(|k| match k {
            0 => MetricParams::IDENTITY,
            1 => MetricParams::PRINTED,
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(k as u64 + (1 << 32));
                let mut mu = *MetricParams::IDENTITY.as_array();
                for v in mu.iter_mut() {
                    *v += rng.gen_range(-0.5..=0.5);
                }
                mu[0] = mu[0].max(0.05);
                mu[3] = mu[3].max(0.05);
                MetricParams::new(mu)
            }
        })
        .collect()
}

/// Runs the multistart fit against a prepared pair sample.
pub fn fit_with_pairs<M: Minimizer>(cfg: &FitConfig, pairs: &PairEvaluator, solver: &M) -> Result<FitResult> {
    cfg.validate()?;
    let starts = start_points(cfg);
    let objective = |x: &[f64]| {
        let mu: [f64; 8] = x.try_into().expect("eight parameters");
        penalized_objective(&MetricParams::new(mu), pairs, cfg.penalty_weight)
    };
    let runs = par::map(&starts, |mu| solver.minimize(&objective, mu.as_array()));
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let mut best: Option<(usize, MetricParams, f64, f64)> = None;
    for (k, run) in runs.iter().enumerate() {
        let mu = MetricParams::new(run.x.clone().try_into().expect("eight parameters"));
        let cmin = constraint_values(&mu).min();
        log::debug!("start {k}: objective {:.6}, constraint min {cmin:.3e}", run.fx);
        if cmin < -1e-9 || build_p(&mu, &WhitePoint::d65()).is_err() {
            continue;
        }
        if best.as_ref().is_none_or(|b| run.fx < b.2) {
            best = Some((k, mu, run.fx, cmin));
        }
    }
    let (start_index, mu, objective, constraint_min) = best.ok_or(Error::NoFeasibleResult)?;
    Ok(FitResult {
        mu,
        objective,
        u_train: training_u(&mu, pairs)?,
        constraint_min,
        start_index,
        evaluations,
        p: build_p(&mu, &WhitePoint::d65())?,
        config: *cfg,
    })
}

/// Draws the training sample and fits with the default solver.
pub fn fit_metric_params(cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let hull = build_d65_gamut(cfg.hull_resolution)?;
    let sample = sample_pairs(&hull, cfg.n_pairs, cfg.seed)?;
    let pairs = PairEvaluator::new(&sample.pairs, &WhitePoint::d65())?;
    let solver = NelderMead { max_iters: cfg.max_iters, tolerance: cfg.tolerance, ..NelderMead::default() };
    fit_with_pairs(cfg, &pairs, &solver)
}
