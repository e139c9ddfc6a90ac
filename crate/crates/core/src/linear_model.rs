//! The Gaussian-design linear model: penalized least squares, the
//! state-evolution fixed point (tau*, lambda*), the Gordon-value diagnostic,
//! and the joint-law concentration experiment.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{gaussian_convolve, w2_2d, EmpiricalMeasure1D, GridMeasure, JointSample2D, MeasureError};
use crate::penalties::{PenaltyError, PenaltySpec, DEFAULT_PROX_TOL};
use crate::rng::{normal_vec, sample_indices, stream_rng};
use crate::scalar_rep::{effective_scalar_rep, PR1Map, ScalarRepError};
use crate::sequence_model::{PriorSource, ThetaSpec};

/// Iteration cap for the accelerated proximal-gradient fit.
pub const MAX_FIT_ITERS: usize = 50_000;
/// Outer fixed-point iteration cap.
pub const MAX_OUTER_ITERS: usize = 500;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("no fixed point found: {diagnostics}")]
    NoSolution { diagnostics: String },
    #[error("fit did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("population prior requested but theta was given explicitly")]
    PopulationPriorUnavailable,
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<LmError>,
    },
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    ScalarRep(#[from] ScalarRepError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn default_tol() -> f64 {
    DEFAULT_PROX_TOL
}

fn default_fit_tol() -> f64 {
    1e-7
}

fn default_subsample() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub theta: ThetaSpec,
    /// n/p
    pub delta: f64,
    /// noise scale of w ~ N(0, sigma_star^2 I_n)
    pub sigma_star: f64,
    /// base penalty f_p, before the lambda multiplier of the fixed point
    pub penalty: PenaltySpec,
    pub grid_size: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub prox_tol: f64,
    #[serde(default = "default_fit_tol")]
    pub fit_tol: f64,
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default)]
    pub prior_source: PriorSource,
}

impl LinearConfig {
    pub fn n(&self) -> usize {
        ((self.delta * self.theta.dim() as f64).round() as usize).max(1)
    }

    fn prior_measure(&self, theta: &[f64]) -> Result<EmpiricalMeasure1D, LmError> {
        match self.prior_source {
            PriorSource::Empirical => Ok(EmpiricalMeasure1D::from_vector(theta)?),
            PriorSource::Population => self
                .theta
                .population_prior()
                .cloned()
                .ok_or(LmError::PopulationPriorUnavailable),
        }
    }
}

/// Row-major n x p design matrix.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(n: usize, p: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * p);
        DesignMatrix { n, p, data }
    }

    /// Entries iid N(0, 1/n).
    pub fn gaussian(n: usize, p: usize, rng: &mut impl Rng) -> Self {
        let s = 1.0 / (n as f64).sqrt();
        let data = (0..n * p)
            .map(|_| s * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        DesignMatrix { n, p, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    pub fn mat_vec(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.p);
        self.data
            .chunks_exact(self.p)
            .map(|row| row.iter().zip(b).map(|(x, v)| x * v).sum())
            .collect()
    }

    pub fn mat_t_vec(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.n);
        let mut out = vec![0.0; self.p];
        for (row, &ri) in self.data.chunks_exact(self.p).zip(r) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += ri * x;
            }
        }
        out
    }

    /// sigma_max(X)^2 by power iteration on X^T X.
    pub fn spectral_norm_sq(&self, iters: usize) -> f64 {
        let mut rng = stream_rng(0xF157A, 0);
        let mut v = normal_vec(&mut rng, self.p);
        let mut lam = 1.0;
        for _ in 0..iters {
            let u = self.mat_vec(&v);
            let w = self.mat_t_vec(&u);
            lam = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if lam <= 0.0 {
                return 0.0;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / lam;
            }
        }
        lam
    }
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// State-evolution expectations on a prebuilt measurement grid: the map
/// A = effective scalar rep of lambda * penalty, then the exact atomwise
/// Gaussian moments give mse = E[(A(Y) - Theta)^2] and cross = E[G A(Y)].
pub fn se_expectations_on_grid(
    penalty: &PenaltySpec,
    mu_theta: &EmpiricalMeasure1D,
    grid: &GridMeasure,
    tau: f64,
    lambda: f64,
    tol: f64,
) -> Result<(f64, f64), LmError> {
    let map = effective_scalar_rep(&penalty.scaled(lambda), grid, tol)?;
    Ok(se_moments_for_map(&map, mu_theta, tau))
}

/// (mse, cross) of a fixed scalar map under theta ~ mu and Y = theta + tau G.
pub fn se_moments_for_map(
    map: &PR1Map,
    mu_theta: &EmpiricalMeasure1D,
    tau: f64,
) -> (f64, f64) {
    let mut mse = 0.0;
    let mut cross = 0.0;
    for (&a, &w) in mu_theta.atoms().iter().zip(mu_theta.weights()) {
        let m = map.gauss_moments(a, tau);
        mse += w * (m.m2 - 2.0 * a * m.m1 + a * a);
        cross += w * m.cross;
    }
    (mse, cross)
}

/// mse and cross of the lambda-scaled penalty's effective map under
/// mu_theta * N(0, tau^2).
pub fn se_expectations(
    penalty: &PenaltySpec,
    mu_theta: &EmpiricalMeasure1D,
    tau: f64,
    lambda: f64,
    m: usize,
    tol: f64,
) -> Result<(f64, f64), LmError> {
    assert!(tau > 0.0 && lambda > 0.0);
    let grid = gaussian_convolve(mu_theta, tau, m)?;
    se_expectations_on_grid(penalty, mu_theta, &grid, tau, lambda, tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSolution {
    pub tau_star: f64,
    pub lambda_star: f64,
    /// delta (tau*^2 - sigma*^2)
    pub predicted_mse: f64,
    /// effective scalar map of lambda* f at mu^{* tau*}
    pub effective_map: PR1Map,
    /// Gordon value: (tau* delta / lambda*)^2 / 2 + lambda* f(prox grid)/m;
    /// absent when the penalty value is unavailable
    pub gordon_value: Option<f64>,
    pub residual_mse: f64,
    pub residual_lambda: f64,
    pub outer_iters: usize,
}

/// Solve delta = lambda (1 - cross(tau, lambda)/(delta tau)) for lambda by
/// bisection in log lambda, warm-started near the previous solution.
fn solve_lambda(
    mut cross_at: impl FnMut(f64) -> Result<f64, LmError>,
    delta: f64,
    tau: f64,
    warm: Option<f64>,
) -> Result<f64, LmError> {
    let mut h = |loglam: f64| -> Result<f64, LmError> {
        let lam = loglam.exp();
        let cross = cross_at(lam)?;
        Ok(lam * (1.0 - cross / (delta * tau)) - delta)
    };
    // establish a straddling bracket
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    if let Some(w) = warm {
        let lw = w.ln();
        brackets.push((lw - 0.7, lw + 0.7));
        brackets.push((lw - 2.8, lw + 2.8));
    }
    brackets.push((-12.0, 12.0));
    brackets.push((-24.0, 24.0));
    brackets.push((-48.0, 48.0));
    let mut chosen = None;
    let mut last_vals = (f64::NAN, f64::NAN);
    for (lo, hi) in brackets {
        let flo = h(lo)?;
        let fhi = h(hi)?;
        last_vals = (flo, fhi);
        if flo == 0.0 {
            return Ok(lo.exp());
        }
        if fhi == 0.0 {
            return Ok(hi.exp());
        }
        if flo < 0.0 && fhi > 0.0 {
            chosen = Some((lo, hi, flo, fhi));
            break;
        }
    }
    let (mut lo, mut hi, _, _) = chosen.ok_or_else(|| LmError::NoSolution {
        diagnostics: format!(
            "lambda bracket never straddles at tau {tau:.6e}: h = {:.3e} .. {:.3e}",
            last_vals.0, last_vals.1
        ),
    })?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = h(mid)?;
        if fm.abs() <= 1e-10 * delta {
            return Ok(mid.exp());
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Solve the two-equation fixed point by damped iteration on tau^2 with a
/// nested lambda bisection, then assemble the solution diagnostics.
pub fn solve_fixed_point(cfg: &LinearConfig) -> Result<FixedPointSolution, LmError> {
    let theta = cfg.theta.materialize();
    let mu = cfg.prior_measure(&theta)?;
    let delta = cfg.delta;
    let sigma2 = cfg.sigma_star * cfg.sigma_star;
    let e2 = mu.second_moment();
    let divergence_cap = 1e12 * (sigma2 + e2 + 1.0);
    let gamma = 0.5;

    let mut tau2 = sigma2 + e2 / delta;
    let mut warm: Option<f64> = None;
    let mut outer_iters = 0;
    let mut converged = false;
    for outer in 1..=MAX_OUTER_ITERS {
        outer_iters = outer;
        let tau = tau2.sqrt();
        let grid = gaussian_convolve(&mu, tau, cfg.grid_size)?;
        let lambda = solve_lambda(
            |lam| {
                se_expectations_on_grid(&cfg.penalty, &mu, &grid, tau, lam, cfg.prox_tol)
                    .map(|(_, cross)| cross)
            },
            delta,
            tau,
            warm,
        )?;
        let (mse, _) =
            se_expectations_on_grid(&cfg.penalty, &mu, &grid, tau, lambda, cfg.prox_tol)?;
        let target = sigma2 + mse / delta;
        let tau2_next = (1.0 - gamma) * tau2 + gamma * target;
        warm = Some(lambda);
        let done = (tau2_next - tau2).abs() <= 1e-8 * tau2;
        tau2 = tau2_next;
        if done {
            converged = true;
            break;
        }
        if tau2 > divergence_cap {
            return Err(LmError::NoSolution {
                diagnostics: format!(
                    "tau^2 diverged past {divergence_cap:.3e} after {outer} iterations \
                     (delta {delta}, sigma* {})",
                    cfg.sigma_star
                ),
            });
        }
    }
    if !converged {
        return Err(LmError::NoSolution {
            diagnostics: format!(
                "outer iteration still moving after {MAX_OUTER_ITERS} steps (tau^2 = {tau2:.6e})"
            ),
        });
    }

    // final pass at the converged noise level
    let tau_star = tau2.sqrt();
    let grid = gaussian_convolve(&mu, tau_star, cfg.grid_size)?;
    let lambda_star = solve_lambda(
        |lam| {
            se_expectations_on_grid(&cfg.penalty, &mu, &grid, tau_star, lam, cfg.prox_tol)
                .map(|(_, cross)| cross)
        },
        delta,
        tau_star,
        warm,
    )?;
    let (mse, cross) =
        se_expectations_on_grid(&cfg.penalty, &mu, &grid, tau_star, lambda_star, cfg.prox_tol)?;
    let residual_mse = (tau2 - sigma2 - mse / delta).abs() / tau2;
    let residual_lambda =
        (delta - lambda_star * (1.0 - cross / (delta * tau_star))).abs() / delta;
    let effective_map =
        effective_scalar_rep(&cfg.penalty.scaled(lambda_star), &grid, cfg.prox_tol)?;

    // Gordon value on the grid, per-coordinate convention
    let gordon_value = {
        let xhat = cfg
            .penalty
            .scaled(lambda_star)
            .prox(grid.grid(), cfg.prox_tol)?;
        match cfg.penalty.evaluate(&xhat) {
            Ok(f_val) => {
                let quad = 0.5 * (tau_star * delta / lambda_star).powi(2);
                Some(quad + lambda_star * f_val / grid.len() as f64)
            }
            Err(PenaltyError::Unevaluable) => None,
            Err(e) => return Err(e.into()),
        }
    };

    Ok(FixedPointSolution {
        tau_star,
        lambda_star,
        predicted_mse: delta * (tau2 - sigma2),
        effective_map,
        gordon_value,
        residual_mse,
        residual_lambda,
        outer_iters,
    })
}

/// Accelerated proximal gradient for
/// min (1/2n) ||y - X b||^2 + lambda * penalty(b), with restart on
/// objective increase (gradient-scheme restart when the penalty value is
/// unavailable). Returns one minimizer.
pub fn fit_penalized_ls(
    x: &DesignMatrix,
    y: &[f64],
    penalty: &PenaltySpec,
    lambda: f64,
    tol: f64,
) -> Result<Vec<f64>, LmError> {
    let (n, p) = x.shape();
    assert_eq!(y.len(), n);
    let nf = n as f64;
    let lip = (x.spectral_norm_sq(30) / nf).max(1e-12) * (1.0 + 1e-2);
    let step_penalty = penalty.scaled(lambda / lip);
    let full_penalty = penalty.scaled(lambda);
    let evaluable = penalty.is_evaluable();

    let objective = |b: &[f64], xb: &[f64]| -> Result<f64, LmError> {
        let quad: f64 = y
            .iter()
            .zip(xb)
            .map(|(yi, xi)| (yi - xi) * (yi - xi))
            .sum::<f64>()
            / (2.0 * nf);
        if evaluable {
            Ok(quad + full_penalty.evaluate(b)?)
        } else {
            Ok(quad)
        }
    };

    let grad = |xb: &[f64]| -> Vec<f64> {
        let r: Vec<f64> = y.iter().zip(xb).map(|(yi, xi)| (xi - yi) / nf).collect();
        x.mat_t_vec(&r)
    };

    let mut b = vec![0.0; p];
    let mut xb = vec![0.0; n];
    let mut obj_b = objective(&b, &xb)?;
    let mut v = b.clone();
    let mut xv = xb.clone();
    let mut t = 1.0f64;
    let mut residual = f64::INFINITY;

    for iter in 1..=MAX_FIT_ITERS {
        let g = grad(&xv);
        let u: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi - gi / lip).collect();
        let mut cand = step_penalty.prox(&u, tol.min(DEFAULT_PROX_TOL))?;
        let mut x_cand = x.mat_vec(&cand);
        let mut obj_cand = objective(&cand, &x_cand)?;

        let needs_restart = if evaluable {
            obj_cand > obj_b + 1e-15 * (1.0 + obj_b.abs())
        } else {
            // gradient-scheme restart
            v.iter()
                .zip(&cand)
                .zip(&b)
                .map(|((vi, ci), bi)| (vi - ci) * (ci - bi))
                .sum::<f64>()
                > 0.0
        };
        if needs_restart && t > 1.0 {
            t = 1.0;
            v = b.clone();
            xv = xb.clone();
            let g = grad(&xv);
            let u: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi - gi / lip).collect();
            cand = step_penalty.prox(&u, tol.min(DEFAULT_PROX_TOL))?;
            x_cand = x.mat_vec(&cand);
            obj_cand = objective(&cand, &x_cand)?;
        }

        let step_change = cand
            .iter()
            .zip(&b)
            .map(|(c, bi)| (c - bi) * (c - bi))
            .sum::<f64>()
            .sqrt();
        let b_prev = std::mem::replace(&mut b, cand);
        xb = x_cand;
        let obj_prev = obj_b;
        obj_b = obj_cand;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        v = b
            .iter()
            .zip(&b_prev)
            .map(|(bi, pi)| bi + beta * (bi - pi))
            .collect();
        xv = x.mat_vec(&v);
        t = t_next;

        let settled = if evaluable {
            (obj_prev - obj_b).abs() <= tol * (1.0 + obj_b.abs())
        } else {
            step_change <= tol * (1.0 + l2(&b))
        };
        if settled && (iter % 5 == 0 || iter < 10) {
            // prox fixed-point residual at unit step
            let g_b = grad(&xb);
            let u: Vec<f64> = b.iter().zip(&g_b).map(|(bi, gi)| bi - gi).collect();
            let pb = full_penalty.prox(&u, tol.min(DEFAULT_PROX_TOL))?;
            residual = b
                .iter()
                .zip(&pb)
                .map(|(bi, pi)| (bi - pi) * (bi - pi))
                .sum::<f64>()
                .sqrt()
                / (1.0 + l2(&b));
            if residual <= 10.0 * tol {
                return Ok(b);
            }
        }
    }
    Err(LmError::NoConvergence {
        iterations: MAX_FIT_ITERS,
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LmTrial {
    pub trial: usize,
    /// realized per-coordinate loss (1/p) || theta_hat - theta ||^2
    pub loss: f64,
    /// | loss - predicted_mse |
    pub scalar_gap: f64,
    /// exact W2 between equal-size subsamples of the realized and predicted
    /// joint laws
    pub w2_joint: f64,
    /// subsampled (theta_hat, theta) pairs, for plotting artifacts
    #[serde(skip)]
    pub observed_sub: Vec<(f64, f64)>,
    /// subsampled predicted pairs
    #[serde(skip)]
    pub predicted_sub: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LmReport {
    pub tau_star: f64,
    pub lambda_star: f64,
    pub predicted_mse: f64,
    pub median_loss: f64,
    pub median_scalar_gap: f64,
    pub median_w2: f64,
    pub trials: Vec<LmTrial>,
}

/// Per trial: draw the design and noise, fit, and compare the realized
/// joint law of (theta_hat, theta) to the predicted law
/// (A*(theta + tau* g), theta) built with fresh seeded noise.
///
/// The estimator is (1/2n)||y - X b||^2 + f_p(b)/p: the per-coordinate
/// penalty convention is the one the fixed-point system describes (for the
/// LASSO it reproduces the classical calibration threshold = lambda* xi).
pub fn lm_concentration_experiment(
    cfg: &LinearConfig,
    sol: &FixedPointSolution,
) -> Result<LmReport, LmError> {
    let theta = cfg.theta.materialize();
    let p = theta.len();
    let n = cfg.n();
    let k = cfg.subsample.min(p);

    let trials: Result<Vec<LmTrial>, LmError> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let wrap = |source: LmError| LmError::Trial {
                trial,
                source: Box::new(source),
            };
            let base = trial as u64 * 8;
            let mut rng_x = stream_rng(cfg.seed, base);
            let design = DesignMatrix::gaussian(n, p, &mut rng_x);
            let mut rng_w = stream_rng(cfg.seed, base + 1);
            let w: Vec<f64> = normal_vec(&mut rng_w, n)
                .into_iter()
                .map(|z| cfg.sigma_star * z)
                .collect();
            let mut y = design.mat_vec(&theta);
            for (yi, wi) in y.iter_mut().zip(&w) {
                *yi += wi;
            }
            let theta_hat =
                fit_penalized_ls(&design, &y, &cfg.penalty, 1.0 / p as f64, cfg.fit_tol)
                    .map_err(wrap)?;
            let loss = theta
                .iter()
                .zip(&theta_hat)
                .map(|(t, h)| (t - h) * (t - h))
                .sum::<f64>()
                / p as f64;
            let scalar_gap = (loss - sol.predicted_mse).abs();

            let mut rng_g = stream_rng(cfg.seed, base + 2);
            let g = normal_vec(&mut rng_g, p);
            let predicted: Vec<(f64, f64)> = theta
                .iter()
                .zip(&g)
                .map(|(&t, &gi)| (sol.effective_map.apply(t + sol.tau_star * gi), t))
                .collect();
            let observed: Vec<(f64, f64)> = theta_hat
                .iter()
                .zip(&theta)
                .map(|(&h, &t)| (h, t))
                .collect();
            // one common index set for both clouds: independent subsampling
            // would mismatch the theta marginals by hypergeometric noise and
            // that artifact (transport across the spike) would swamp the
            // estimator deviation being measured
            let mut rng_s = stream_rng(cfg.seed, base + 3);
            let idx = sample_indices(&mut rng_s, p, k);
            let observed_sub: Vec<(f64, f64)> = idx.iter().map(|&i| observed[i]).collect();
            let predicted_sub: Vec<(f64, f64)> = idx.iter().map(|&i| predicted[i]).collect();
            let obs = JointSample2D::equal_weight(observed_sub.clone())
                .map_err(|e| wrap(e.into()))?;
            let pred = JointSample2D::equal_weight(predicted_sub.clone())
                .map_err(|e| wrap(e.into()))?;
            let w2_joint = w2_2d(&obs, &pred).map_err(|e| wrap(e.into()))?;
            Ok(LmTrial {
                trial,
                loss,
                scalar_gap,
                w2_joint,
                observed_sub,
                predicted_sub,
            })
        })
        .collect();
    let trials = trials?;
    let losses: Vec<f64> = trials.iter().map(|t| t.loss).collect();
    let gaps: Vec<f64> = trials.iter().map(|t| t.scalar_gap).collect();
    let w2s: Vec<f64> = trials.iter().map(|t| t.w2_joint).collect();
    Ok(LmReport {
        tau_star: sol.tau_star,
        lambda_star: sol.lambda_star,
        predicted_mse: sol.predicted_mse,
        median_loss: crate::sequence_model::median(&losses),
        median_scalar_gap: crate::sequence_model::median(&gaps),
        median_w2: crate::sequence_model::median(&w2s),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalties::ScalarPenalty;
    use crate::sequence_model::three_point_prior;

    fn zero_penalty() -> PenaltySpec {
        PenaltySpec::abs_weight(0.0).unwrap()
    }

    #[test]
    fn se_identity_map_moments() {
        let mu = three_point_prior(1.0, 0.05);
        let (mse, cross) = se_expectations(&zero_penalty(), &mu, 0.8, 1.0, 64, 1e-8).unwrap();
        assert!((mse - 0.64).abs() < 1e-12, "mse {mse}");
        assert!((cross - 0.8).abs() < 1e-12, "cross {cross}");
    }

    #[test]
    fn se_zero_map_moments() {
        let mu = three_point_prior(1.0, 0.05);
        let zero_map = PenaltySpec::separable(ScalarPenalty::TabulatedProx {
            map: crate::scalar_rep::PR1Map::constant(0.0),
        })
        .unwrap();
        let (mse, cross) = se_expectations(&zero_map, &mu, 0.8, 1.0, 64, 1e-8).unwrap();
        assert!((mse - mu.second_moment()).abs() < 1e-12);
        assert!(cross.abs() < 1e-12);
    }

    // closed-form soft-threshold state-evolution integrals (independent of
    // the map-based path)
    fn soft_se_oracle(mu: &EmpiricalMeasure1D, tau: f64, t: f64) -> (f64, f64) {
        use crate::normal::{normal_cdf, normal_pdf, normal_sf};
        let mut mse = 0.0;
        let mut cross = 0.0;
        for (&a, &w) in mu.atoms().iter().zip(mu.weights()) {
            let a1 = (t - a) / tau;
            let a2 = (-t - a) / tau;
            let up0 = normal_sf(a1);
            let up1 = normal_pdf(a1);
            let up2 = up0 + a1 * normal_pdf(a1);
            let lo0 = normal_cdf(a2);
            let lo1 = -normal_pdf(a2);
            let lo2 = lo0 - a2 * normal_pdf(a2);
            // upper: err = (t... A - a = -t + tau g ; lower: A - a = t + tau g
            mse += w
                * (t * t * up0 - 2.0 * t * tau * up1 + tau * tau * up2
                    + t * t * lo0
                    + 2.0 * t * tau * lo1
                    + tau * tau * lo2
                    + a * a * (1.0 - up0 - lo0));
            cross += w * tau * (up0 + lo0);
        }
        (mse, cross)
    }

    #[test]
    fn se_matches_soft_threshold_closed_form() {
        let mu = three_point_prior(1.0, 0.05);
        let tau = 0.7;
        let lambda = 2.5;
        let xi = 0.3;
        let pen = PenaltySpec::abs_weight(xi).unwrap();
        let (mse, cross) = se_expectations(&pen, &mu, tau, lambda, 4096, 1e-8).unwrap();
        let (mse_o, cross_o) = soft_se_oracle(&mu, tau, lambda * xi);
        assert!((mse - mse_o).abs() < 1e-6, "{mse} vs {mse_o}");
        assert!((cross - cross_o).abs() < 1e-6, "{cross} vs {cross_o}");
    }

    #[test]
    fn fixed_point_zero_penalty_closed_form() {
        let cfg = LinearConfig {
            theta: ThetaSpec::Quantiles {
                prior: three_point_prior(1.0, 0.05),
                p: 400,
            },
            delta: 2.0,
            sigma_star: 0.5,
            penalty: zero_penalty(),
            grid_size: 256,
            trials: 1,
            seed: 1,
            prox_tol: 1e-8,
            fit_tol: 1e-7,
            subsample: 128,
            prior_source: PriorSource::Empirical,
        };
        let sol = solve_fixed_point(&cfg).unwrap();
        let tau2_expect = 0.25 * 2.0 / (2.0 - 1.0);
        assert!(
            (sol.tau_star * sol.tau_star - tau2_expect).abs() < 1e-6 * tau2_expect,
            "tau*^2 {}",
            sol.tau_star * sol.tau_star
        );
        // paper's second equation with identity map: lambda* = delta^2/(delta-1)
        let lam_expect = 4.0;
        assert!(
            (sol.lambda_star - lam_expect).abs() < 1e-5 * lam_expect,
            "lambda* {}",
            sol.lambda_star
        );
        assert!(sol.residual_mse < 1e-6 && sol.residual_lambda < 1e-6);
        assert!(sol.tau_star >= cfg.sigma_star);
        assert!(sol.effective_map.validate().is_empty());
        let g = sol.gordon_value.unwrap();
        assert!(g.is_finite() && g > 0.0);
    }

    #[test]
    fn fixed_point_zero_penalty_undersampled_has_no_solution() {
        let cfg = LinearConfig {
            theta: ThetaSpec::Quantiles {
                prior: three_point_prior(1.0, 0.05),
                p: 200,
            },
            delta: 0.5,
            sigma_star: 0.5,
            penalty: zero_penalty(),
            grid_size: 256,
            trials: 1,
            seed: 1,
            prox_tol: 1e-8,
            fit_tol: 1e-7,
            subsample: 128,
            prior_source: PriorSource::Empirical,
        };
        assert!(matches!(
            solve_fixed_point(&cfg),
            Err(LmError::NoSolution { .. })
        ));
    }

    #[test]
    fn tau_star_monotone_in_sigma() {
        let mut taus = Vec::new();
        for &sigma in &[0.1, 0.25, 0.5] {
            let cfg = LinearConfig {
                theta: ThetaSpec::Quantiles {
                    prior: three_point_prior(1.0, 0.05),
                    p: 300,
                },
                delta: 0.64,
                sigma_star: sigma,
                penalty: PenaltySpec::abs_weight(0.3).unwrap(),
                grid_size: 512,
                trials: 1,
                seed: 1,
                prox_tol: 1e-8,
                fit_tol: 1e-7,
                subsample: 128,
                prior_source: PriorSource::Empirical,
            };
            taus.push(solve_fixed_point(&cfg).unwrap().tau_star);
        }
        assert!(taus[0] <= taus[1] + 1e-9 && taus[1] <= taus[2] + 1e-9, "{taus:?}");
    }

    #[test]
    fn fit_unpenalized_matches_least_squares() {
        let mut rng = stream_rng(5, 0);
        let n = 12;
        let p = 5;
        let design = DesignMatrix::gaussian(n, p, &mut rng);
        let theta: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = design.mat_vec(&theta);
        for yi in y.iter_mut() {
            *yi += 0.05 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let bhat = fit_penalized_ls(&design, &y, &zero_penalty(), 1.0, 1e-10).unwrap();
        // normal equations by Gaussian elimination
        let mut ata = vec![vec![0.0f64; p]; p];
        let mut aty = vec![0.0f64; p];
        for i in 0..n {
            let row = &design.data[i * p..(i + 1) * p];
            for a in 0..p {
                aty[a] += row[a] * y[i];
                for b in 0..p {
                    ata[a][b] += row[a] * row[b];
                }
            }
        }
        let exact = solve_dense(&mut ata, &mut aty);
        for (g, e) in bhat.iter().zip(&exact) {
            assert!((g - e).abs() < 1e-6, "{g} vs {e}");
        }
    }

    fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col];
            for j in col..n {
                a[col][j] /= d;
            }
            b[col] /= d;
            for i in 0..n {
                if i != col && a[i][col] != 0.0 {
                    let f = a[i][col];
                    for j in col..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
        b.to_vec()
    }

    #[test]
    fn fit_objective_beats_zero_and_least_squares_points() {
        let mut rng = stream_rng(9, 0);
        let n = 16;
        let p = 6;
        let design = DesignMatrix::gaussian(n, p, &mut rng);
        let theta: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = design.mat_vec(&theta);
        for yi in y.iter_mut() {
            *yi += 0.2 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let pen = PenaltySpec::abs_weight(0.05).unwrap();
        let bhat = fit_penalized_ls(&design, &y, &pen, 1.0, 1e-9).unwrap();
        let objective = |b: &[f64]| -> f64 {
            let xb = design.mat_vec(b);
            let q: f64 = y
                .iter()
                .zip(&xb)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                / (2.0 * n as f64);
            q + pen.evaluate(b).unwrap()
        };
        let at_hat = objective(&bhat);
        assert!(at_hat <= objective(&vec![0.0; p]) + 1e-12);
        // least squares point via the unpenalized fit
        let ls = fit_penalized_ls(&design, &y, &PenaltySpec::abs_weight(0.0).unwrap(), 1.0, 1e-10)
            .unwrap();
        assert!(at_hat <= objective(&ls) + 1e-12);
    }

    #[test]
    fn fit_zero_observations_gives_zero() {
        let mut rng = stream_rng(6, 0);
        let design = DesignMatrix::gaussian(10, 6, &mut rng);
        let y = vec![0.0; 10];
        for pen in [
            PenaltySpec::abs_weight(0.4).unwrap(),
            PenaltySpec::l2_power(2.0).unwrap(),
            PenaltySpec::smoothed_owl(crate::sequence_model::figure_profile().unwrap()).unwrap(),
        ] {
            let b = fit_penalized_ls(&design, &y, &pen, 1.0, 1e-9).unwrap();
            assert!(b.iter().all(|&v| v.abs() < 1e-9), "{pen:?}");
        }
    }

    #[test]
    fn fit_lasso_matches_coordinate_descent() {
        let mut rng = stream_rng(7, 0);
        let n = 10;
        let p = 5;
        let design = DesignMatrix::gaussian(n, p, &mut rng);
        let theta = [1.0, 0.0, -0.5, 0.0, 0.25];
        let mut y = design.mat_vec(&theta);
        for yi in y.iter_mut() {
            *yi += 0.1 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let xi = 0.05;
        let pen = PenaltySpec::abs_weight(xi).unwrap();
        let got = fit_penalized_ls(&design, &y, &pen, 1.0, 1e-10).unwrap();

        // coordinate descent oracle on (1/2n)||y - Xb||^2 + xi ||b||_1
        let mut b = vec![0.0f64; p];
        let col = |j: usize| -> Vec<f64> { (0..n).map(|i| design.data[i * p + j]).collect() };
        let cols: Vec<Vec<f64>> = (0..p).map(col).collect();
        let col_sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        for _ in 0..20000 {
            let mut moved = 0.0f64;
            for j in 0..p {
                let mut rho = 0.0;
                for i in 0..n {
                    let mut pred = 0.0;
                    for (jj, bj) in b.iter().enumerate() {
                        if jj != j {
                            pred += design.data[i * p + jj] * bj;
                        }
                    }
                    rho += cols[j][i] * (y[i] - pred);
                }
                let st = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
                let new = st(rho, xi * n as f64) / col_sq[j];
                moved = moved.max((new - b[j]).abs());
                b[j] = new;
            }
            if moved < 1e-13 {
                break;
            }
        }
        for (g, e) in got.iter().zip(&b) {
            assert!((g - e).abs() < 1e-6, "{g} vs {e}");
        }
    }

    #[test]
    fn ridge_prediction_matches_direct_solve() {
        // f = c ||b||^2 admits a closed-form estimator; the realized loss
        // must track the fixed-point prediction
        let p = 300;
        let c = 0.5;
        let cfg = LinearConfig {
            theta: ThetaSpec::Quantiles {
                prior: three_point_prior(1.0, 0.05),
                p,
            },
            delta: 2.0,
            sigma_star: 0.3,
            penalty: PenaltySpec::l2_power(2.0).unwrap().scaled(c),
            grid_size: 512,
            trials: 1,
            seed: 3,
            prox_tol: 1e-8,
            fit_tol: 1e-8,
            subsample: 128,
            prior_source: PriorSource::Empirical,
        };
        let sol = solve_fixed_point(&cfg).unwrap();
        let theta = cfg.theta.materialize();
        let n = cfg.n();
        let mut losses = Vec::new();
        for trial in 0..4u64 {
            let mut rng = stream_rng(77, trial);
            let design = DesignMatrix::gaussian(n, p, &mut rng);
            let w: Vec<f64> = normal_vec(&mut rng, n)
                .into_iter()
                .map(|z| cfg.sigma_star * z)
                .collect();
            let mut y = design.mat_vec(&theta);
            for (yi, wi) in y.iter_mut().zip(&w) {
                *yi += wi;
            }
            // direct ridge: (X^T X + (2 c n / p) I) b = X^T y
            let mut ata = vec![vec![0.0f64; p]; p];
            let mut aty = vec![0.0f64; p];
            for i in 0..n {
                let row = &design.data[i * p..(i + 1) * p];
                for a in 0..p {
                    aty[a] += row[a] * y[i];
                    for b in a..p {
                        ata[a][b] += row[a] * row[b];
                    }
                }
            }
            for a in 0..p {
                for b in 0..a {
                    ata[a][b] = ata[b][a];
                }
                ata[a][a] += 2.0 * c * n as f64 / p as f64;
            }
            let bhat = solve_dense(&mut ata, &mut aty);
            let loss = theta
                .iter()
                .zip(&bhat)
                .map(|(t, h)| (t - h) * (t - h))
                .sum::<f64>()
                / p as f64;
            losses.push(loss);
        }
        let med = crate::sequence_model::median(&losses);
        assert!(
            (med - sol.predicted_mse).abs() <= 0.08 * sol.predicted_mse + 0.005,
            "ridge loss {med} vs predicted {}",
            sol.predicted_mse
        );
    }

    #[test]
    fn lm_experiment_runs_and_is_accurate_in_easy_regime() {
        // sigma ~ 0, delta >> 1, tiny penalty: theta_hat ~ theta
        let cfg = LinearConfig {
            theta: ThetaSpec::Quantiles {
                prior: three_point_prior(1.0, 0.05),
                p: 60,
            },
            delta: 4.0,
            sigma_star: 1e-4,
            penalty: PenaltySpec::abs_weight(1e-6).unwrap(),
            grid_size: 256,
            trials: 2,
            seed: 17,
            prox_tol: 1e-10,
            fit_tol: 1e-9,
            subsample: 60,
            prior_source: PriorSource::Empirical,
        };
        let sol = solve_fixed_point(&cfg).unwrap();
        let report = lm_concentration_experiment(&cfg, &sol).unwrap();
        for t in &report.trials {
            assert!(t.loss < 1e-4, "loss {}", t.loss);
            assert!(t.w2_joint < 0.05, "w2 {}", t.w2_joint);
        }
    }
}
