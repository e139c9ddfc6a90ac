//! Optimal separable risk in the scalar Gaussian channel, the Bayes
//! estimator, and the critical noise level at which the separable risk
//! lower bound stops binding.

use serde::Serialize;
use thiserror::Error;

use crate::measures::{gaussian_convolve, EmpiricalMeasure1D, MeasureError};
use crate::quadrature::GaussHermite;
use crate::scalar_rep::{project_pr1, PR1Map, ScalarRepError};

/// Gauss-Hermite nodes for the smooth posterior-variance integrals.
pub const RISK_GH_NODES: usize = 127;
/// Internal grid size for the critical-noise bisection.
pub const TAU_SEP_GRID: usize = 1024;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("grid size {0} below the minimum of 256")]
    GridTooSmall(usize),
    #[error("noise level must be positive, got {0}")]
    BadNoise(f64),
    #[error(
        "lower-bound inequality never flips on [{lo:.6e}, {hi:.6e}] (psi = {f_lo:.3e} .. {f_hi:.3e})"
    )]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error(transparent)]
    Projection(#[from] ScalarRepError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A tabulated scalar map that need not be monotone or 1-Lipschitz.
#[derive(Debug, Clone, Serialize)]
pub struct SampledMap {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledMap {
    pub fn max_slope(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..self.nodes.len() {
            let dy = self.nodes[i] - self.nodes[i - 1];
            if dy > 0.0 {
                worst = worst.max((self.values[i] - self.values[i - 1]) / dy);
            }
        }
        worst
    }
}

/// Posterior mean E[theta | theta + tau G = y] under a discrete prior,
/// stabilized by log-sum-exp.
pub fn posterior_mean(mu: &EmpiricalMeasure1D, tau: f64, y: f64) -> f64 {
    let atoms = mu.atoms();
    let weights = mu.weights();
    let inv2t2 = 1.0 / (2.0 * tau * tau);
    let mut best = f64::NEG_INFINITY;
    let logs: Vec<f64> = atoms
        .iter()
        .zip(weights)
        .map(|(a, w)| {
            let l = w.ln() - (y - a) * (y - a) * inv2t2;
            if l > best {
                best = l;
            }
            l
        })
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, l) in atoms.iter().zip(&logs) {
        let e = (l - best).exp();
        num += a * e;
        den += e;
    }
    num / den
}

/// Bayes estimator tabulated on the m-point quantile grid of mu * N(0,tau^2).
pub fn bayes_estimator(
    mu: &EmpiricalMeasure1D,
    tau: f64,
    m: usize,
) -> Result<SampledMap, RiskError> {
    if !(tau > 0.0) {
        return Err(RiskError::BadNoise(tau));
    }
    let grid = gaussian_convolve(mu, tau, m)?;
    let nodes = grid.grid().to_vec();
    let values = nodes.iter().map(|&y| posterior_mean(mu, tau, y)).collect();
    Ok(SampledMap { nodes, values })
}

/// Result of the optimal-separable-risk computation.
#[derive(Debug, Clone, Serialize)]
pub struct RiskResult {
    pub r_sep: f64,
    pub bayes_risk: f64,
    pub optimal_map: PR1Map,
    pub bayes_in_pr1: bool,
}

/// Minimal mean-squared error over monotone 1-Lipschitz maps in the channel
/// y = theta + tau z, via the decomposition
/// E[(eta(Y) - theta)^2] = E[(eta(Y) - E[theta|Y])^2] + E[Var(theta|Y)]:
/// the first term is minimized by projecting the Bayes map onto the class
/// under the measurement grid weights.
pub fn optimal_separable_risk(
    mu: &EmpiricalMeasure1D,
    tau: f64,
    m: usize,
) -> Result<RiskResult, RiskError> {
    if m < 256 {
        return Err(RiskError::GridTooSmall(m));
    }
    if !(tau > 0.0) {
        return Err(RiskError::BadNoise(tau));
    }
    let grid = gaussian_convolve(mu, tau, m)?;

    // merge grid duplicates so the projection nodes strictly increase
    let mut nodes: Vec<f64> = Vec::with_capacity(m);
    let mut weights: Vec<f64> = Vec::with_capacity(m);
    let w0 = 1.0 / m as f64;
    for &q in grid.grid() {
        if let Some(&last) = nodes.last() {
            if q - last <= 1e-12 {
                *weights.last_mut().unwrap() += w0;
                continue;
            }
        }
        nodes.push(q);
        weights.push(w0);
    }
    let targets: Vec<f64> = nodes
        .iter()
        .map(|&y| posterior_mean(mu, tau, y))
        .collect();
    let bayes = SampledMap {
        nodes: nodes.clone(),
        values: targets.clone(),
    };
    let bayes_in_pr1 = bayes.max_slope() <= 1.0 + 1e-6;

    let optimal_map = project_pr1(&nodes, &targets, &weights)?;
    let projection_term: f64 = optimal_map
        .values()
        .iter()
        .zip(&targets)
        .zip(&weights)
        .map(|((x, t), w)| w * (x - t) * (x - t))
        .sum();

    // E[Var(theta|Y)] = E[theta^2] - E[m(Y)^2], by the tensor rule over
    // prior atoms and Gauss-Hermite in the noise (smooth integrand)
    let gh = GaussHermite::new(RISK_GH_NODES);
    let mut e_post_sq = 0.0;
    for (&a, &w) in mu.atoms().iter().zip(mu.weights()) {
        e_post_sq += w * gh.expect_normal(|g| {
            let pm = posterior_mean(mu, tau, a + tau * g);
            pm * pm
        });
    }
    let bayes_risk = (mu.second_moment() - e_post_sq).max(0.0);

    Ok(RiskResult {
        r_sep: projection_term + bayes_risk,
        bayes_risk,
        optimal_map,
        bayes_in_pr1,
    })
}

/// Bisection harness for the critical level sup { tau^2 : delta (tau^2 -
/// sigma^2) < R(tau) }, generic over the risk curve so it can be unit-tested
/// against closed forms.
pub fn tau_sep_with(
    r_of_tau: impl Fn(f64) -> Result<f64, RiskError>,
    sigma: f64,
    delta: f64,
    bracket_top: f64,
) -> Result<f64, RiskError> {
    assert!(sigma >= 0.0 && delta > 0.0 && bracket_top > 0.0);
    let lo0 = sigma * sigma;
    let hi0 = lo0 + bracket_top;
    let psi = |t2: f64| -> Result<f64, RiskError> {
        let tau = t2.max(1e-300).sqrt();
        Ok(delta * (t2 - lo0) - r_of_tau(tau)?)
    };
    let probe = lo0 + 1e-9 * bracket_top;
    if psi(probe)? >= 0.0 {
        // the defining set is empty just above sigma^2
        return Ok(sigma);
    }
    let f_hi = psi(hi0)?;
    if f_hi < 0.0 {
        return Err(RiskError::BracketFailure {
            lo: lo0,
            hi: hi0,
            f_lo: psi(probe)?,
            f_hi,
        });
    }
    let mut lo = probe;
    let mut hi = hi0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if psi(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).sqrt())
}

/// Critical noise level for a prior: the separable-risk lower bound
/// delta (tau^2 - sigma^2) >= R_sep stops binding above this tau.
pub fn tau_sep(mu: &EmpiricalMeasure1D, sigma: f64, delta: f64) -> Result<f64, RiskError> {
    let bracket_top = mu.second_moment() / delta + 1.0;
    tau_sep_with(
        |tau| Ok(optimal_separable_risk(mu, tau, TAU_SEP_GRID)?.r_sep),
        sigma,
        delta,
        bracket_top,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point() -> EmpiricalMeasure1D {
        EmpiricalMeasure1D::new(vec![-1.0, 0.0, 1.0], vec![0.05, 0.9, 0.05]).unwrap()
    }

    fn gaussian_prior(k: usize) -> EmpiricalMeasure1D {
        let grid = gaussian_convolve(&EmpiricalMeasure1D::dirac(0.0), 1.0, k).unwrap();
        grid.to_measure()
    }

    #[test]
    fn bayes_constant_for_dirac_prior() {
        let map = bayes_estimator(&EmpiricalMeasure1D::dirac(2.0), 1.0, 64).unwrap();
        for v in &map.values {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bayes_conjugate_gaussian_is_half_identity() {
        // prior ~ N(0,1) discretized; posterior mean ~ y/2 at tau = 1
        let prior = gaussian_prior(4096);
        let map = bayes_estimator(&prior, 1.0, 512).unwrap();
        let mut worst = 0.0f64;
        for (y, v) in map.nodes.iter().zip(&map.values) {
            worst = worst.max((v - 0.5 * y).abs());
        }
        assert!(worst <= 0.02, "max deviation {worst}");
    }

    #[test]
    fn bayes_two_point_prior_exceeds_unit_slope() {
        let mu = EmpiricalMeasure1D::new(vec![-3.0, 3.0], vec![0.5, 0.5]).unwrap();
        let map = bayes_estimator(&mu, 1.0, 512).unwrap();
        assert!(map.max_slope() > 1.0, "slope {}", map.max_slope());
    }

    #[test]
    fn risk_zero_for_dirac_prior() {
        let r = optimal_separable_risk(&EmpiricalMeasure1D::dirac(0.0), 0.7, 256).unwrap();
        assert!(r.r_sep < 1e-12);
        assert!(r.bayes_risk < 1e-12);
        for v in r.optimal_map.values() {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn risk_conjugate_gaussian_near_half() {
        let prior = gaussian_prior(2048);
        let r = optimal_separable_risk(&prior, 1.0, 1024).unwrap();
        assert!((r.r_sep - 0.5).abs() <= 0.02, "r_sep {}", r.r_sep);
        assert!(r.bayes_in_pr1);
        assert!(r.r_sep - r.bayes_risk <= 1e-6 * (1.0 + r.bayes_risk));
        assert!(r.optimal_map.validate().is_empty());
    }

    #[test]
    fn risk_bounded_by_second_moment_and_noise() {
        let mu = three_point();
        for &tau in &[0.3, 1.0, 2.0] {
            let r = optimal_separable_risk(&mu, tau, 512).unwrap();
            assert!(r.r_sep <= mu.second_moment() + 1e-9);
            assert!(r.r_sep <= tau * tau + 1e-9);
            assert!(r.bayes_risk <= r.r_sep + 1e-12);
        }
    }

    #[test]
    fn risk_monotone_in_noise() {
        let mu = three_point();
        let taus = [0.25, 0.5, 1.0, 1.8, 2.5];
        let mut prev = -1.0;
        for &tau in &taus {
            let r = optimal_separable_risk(&mu, tau, 512).unwrap().r_sep;
            assert!(r >= prev - 1e-6, "risk decreased at tau {tau}: {r} < {prev}");
            prev = r;
        }
    }

    #[test]
    fn risk_beats_every_pr1_candidate() {
        let mu = three_point();
        let tau = 0.5;
        let r = optimal_separable_risk(&mu, tau, 1024).unwrap();
        let grid = gaussian_convolve(&mu, tau, 1024).unwrap();
        for candidate in [
            PR1Map::soft_threshold(0.3),
            PR1Map::soft_threshold(0.8),
            PR1Map::identity(),
            PR1Map::linear(0.5, 0.0),
        ] {
            // candidate risk by the same decomposition on the same grid
            let mut proj = 0.0;
            for &y in grid.grid() {
                let d = candidate.apply(y) - posterior_mean(&mu, tau, y);
                proj += d * d / grid.len() as f64;
            }
            let cand_risk = proj + r.bayes_risk;
            assert!(r.r_sep <= cand_risk + 1e-9, "candidate beat the optimum");
        }
    }

    #[test]
    fn tau_sep_harness_reproduces_closed_form() {
        // stub R = tau^2: flip point at delta sigma^2/(delta-1)
        let sigma = 0.25;
        let delta = 2.0;
        let t = tau_sep_with(|tau| Ok(tau * tau), sigma, delta, 10.0).unwrap();
        let expect = (delta * sigma * sigma / (delta - 1.0)).sqrt();
        assert!((t - expect).abs() <= 2e-6 * expect, "{t} vs {expect}");

        // delta <= 1 never flips
        assert!(matches!(
            tau_sep_with(|tau| Ok(tau * tau), sigma, 0.5, 10.0),
            Err(RiskError::BracketFailure { .. })
        ));
    }

    #[test]
    fn tau_sep_dirac_prior_is_sigma() {
        let t = tau_sep(&EmpiricalMeasure1D::dirac(0.0), 0.25, 0.64).unwrap();
        assert!((t - 0.25).abs() < 1e-12);
    }
}
