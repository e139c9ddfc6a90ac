//! Gaussian-sequence-model simulation and the approximate-separability
//! experiments: how far a symmetric prox is from its effective scalar map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{gaussian_convolve, w2_1d, EmpiricalMeasure1D, MeasureError};
use crate::normal::normal_quantile;
use crate::penalties::{PenaltyError, PenaltySpec, DEFAULT_PROX_TOL};
use crate::rng::{normal_vec, sample_indices, stream_rng};
use crate::scalar_rep::{effective_scalar_rep, PR1Map, ScalarRepError};

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: PenaltyError,
    },
    #[error("population prior requested but theta was given explicitly")]
    PopulationPriorUnavailable,
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    ScalarRep(#[from] ScalarRepError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Parameter vector: explicit, or materialized from a prior's quantiles at
/// the midpoints (j - 1/2)/p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSpec {
    Explicit { values: Vec<f64> },
    Quantiles { prior: EmpiricalMeasure1D, p: usize },
}

impl ThetaSpec {
    pub fn dim(&self) -> usize {
        match self {
            ThetaSpec::Explicit { values } => values.len(),
            ThetaSpec::Quantiles { p, .. } => *p,
        }
    }

    pub fn materialize(&self) -> Vec<f64> {
        match self {
            ThetaSpec::Explicit { values } => values.clone(),
            ThetaSpec::Quantiles { prior, p } => prior.quantiles_midpoint(*p),
        }
    }

    pub fn population_prior(&self) -> Option<&EmpiricalMeasure1D> {
        match self {
            ThetaSpec::Explicit { .. } => None,
            ThetaSpec::Quantiles { prior, .. } => Some(prior),
        }
    }
}

/// Which prior the effective scalar map is built from: the materialized
/// empirical distribution of theta (default) or the population prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorSource {
    #[default]
    Empirical,
    Population,
}

fn default_tol() -> f64 {
    DEFAULT_PROX_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    pub theta: ThetaSpec,
    pub tau: f64,
    pub penalty: PenaltySpec,
    pub grid_size: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub prox_tol: f64,
    #[serde(default)]
    pub prior_source: PriorSource,
}

/// y = theta + tau z with z from the given stream of the seed; identical
/// (seed, p, tau) give identical vectors.
pub fn simulate_y_stream(theta: &[f64], tau: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let z = normal_vec(&mut rng, theta.len());
    theta.iter().zip(&z).map(|(t, g)| t + tau * g).collect()
}

pub fn simulate_y(theta: &[f64], tau: f64, seed: u64) -> Vec<f64> {
    simulate_y_stream(theta, tau, seed, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialGap {
    pub trial: usize,
    /// (1/p) || prox(y) - A(y) ||^2
    pub gap_mean_sq: f64,
    /// max_j (prox(y)_j - A(y_j))^2
    pub gap_max_sq: f64,
    /// W2 between the empirical observation law and the measurement grid
    pub w2_obs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparabilityReport {
    pub p: usize,
    pub tau: f64,
    pub snr: f64,
    pub grid_second_moment: f64,
    pub median_gap: f64,
    pub q25_gap: f64,
    pub q75_gap: f64,
    pub trials: Vec<TrialGap>,
    pub config: SequenceConfig,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn quantile_nearest(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((v.len() as f64 - 1.0) * q).round() as usize;
    v[idx]
}

/// The measurement grid the effective scalar map is built from, honoring
/// the prior-source switch.
pub fn measurement_grid(
    cfg: &SequenceConfig,
    theta: &[f64],
) -> Result<crate::measures::GridMeasure, SequenceError> {
    let mu = match cfg.prior_source {
        PriorSource::Empirical => EmpiricalMeasure1D::from_vector(theta)?,
        PriorSource::Population => cfg
            .theta
            .population_prior()
            .ok_or(SequenceError::PopulationPriorUnavailable)?
            .clone(),
    };
    Ok(gaussian_convolve(&mu, cfg.tau, cfg.grid_size)?)
}

/// Build the effective scalar map once, then per trial draw y, prox it, and
/// record the per-coordinate gap to the map together with the observed
/// Wasserstein deviation of the data from the measurement grid.
pub fn separability_experiment(cfg: &SequenceConfig) -> Result<SeparabilityReport, SequenceError> {
    let theta = cfg.theta.materialize();
    let p = theta.len();
    let grid = measurement_grid(cfg, &theta)?;
    let map = effective_scalar_rep(&cfg.penalty, &grid, cfg.prox_tol)?;
    let grid_measure = grid.to_measure();

    let trials: Result<Vec<TrialGap>, SequenceError> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let y = simulate_y_stream(&theta, cfg.tau, cfg.seed, trial as u64);
            let prox = cfg
                .penalty
                .prox(&y, cfg.prox_tol)
                .map_err(|source| SequenceError::Trial { trial, source })?;
            let mut sum = 0.0;
            let mut worst = 0.0f64;
            for (xj, yj) in prox.iter().zip(&y) {
                let d = xj - map.apply(*yj);
                let d2 = d * d;
                sum += d2;
                worst = worst.max(d2);
            }
            let mu_y = EmpiricalMeasure1D::from_vector(&y).expect("finite observations");
            Ok(TrialGap {
                trial,
                gap_mean_sq: sum / p as f64,
                gap_max_sq: worst,
                w2_obs: w2_1d(&mu_y, &grid_measure),
            })
        })
        .collect();
    let trials = trials?;

    let gaps: Vec<f64> = trials.iter().map(|t| t.gap_mean_sq).collect();
    let theta_norm_sq: f64 = theta.iter().map(|t| t * t).sum();
    let snr = if cfg.tau > 0.0 {
        theta_norm_sq / (p as f64 * cfg.tau * cfg.tau)
    } else {
        f64::INFINITY
    };
    Ok(SeparabilityReport {
        p,
        tau: cfg.tau,
        snr,
        grid_second_moment: grid.second_moment(),
        median_gap: median(&gaps),
        q25_gap: quantile_nearest(&gaps, 0.25),
        q75_gap: quantile_nearest(&gaps, 0.75),
        trials,
        config: cfg.clone(),
    })
}

/// One scatter/theory panel of the appendix experiments.
#[derive(Debug, Clone, Serialize)]
pub struct PanelOutput {
    pub label: String,
    pub tau: f64,
    pub theory: PR1Map,
    /// 100 subsampled (y_j, prox_j) pairs
    pub scatter: Vec<(f64, f64)>,
}

/// theta whose entries are standard normal quantiles at midpoints.
pub fn gaussian_theta(p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| normal_quantile((j as f64 + 0.5) / p as f64))
        .collect()
}

/// Three-point prior (1-q-q) delta_0 + q delta_{-c} + q delta_c.
pub fn three_point_prior(c: f64, q: f64) -> EmpiricalMeasure1D {
    if c == 0.0 {
        return EmpiricalMeasure1D::dirac(0.0);
    }
    EmpiricalMeasure1D::new(vec![-c, 0.0, c], vec![q, 1.0 - 2.0 * q, q])
        .expect("valid three-point prior")
}

fn panel(
    label: String,
    penalty: &PenaltySpec,
    theta: &[f64],
    tau: f64,
    grid_size: usize,
    seed: u64,
    stream: u64,
    n_scatter: usize,
) -> Result<PanelOutput, SequenceError> {
    let mu = EmpiricalMeasure1D::from_vector(theta)?;
    let grid = gaussian_convolve(&mu, tau, grid_size)?;
    let theory = effective_scalar_rep(penalty, &grid, DEFAULT_PROX_TOL)?;
    let y = simulate_y_stream(theta, tau, seed, stream);
    let prox = penalty.prox(&y, DEFAULT_PROX_TOL)?;
    let mut rng = stream_rng(seed, stream ^ 0x5ca7);
    let idx = sample_indices(&mut rng, theta.len(), n_scatter.min(theta.len()));
    let scatter = idx.into_iter().map(|j| (y[j], prox[j])).collect();
    Ok(PanelOutput {
        label,
        tau,
        theory,
        scatter,
    })
}

/// Norm-power panels: one output per noise level.
pub fn l2_power_panels(
    alpha: f64,
    taus: &[f64],
    p: usize,
    grid_size: usize,
    seed: u64,
) -> Result<Vec<PanelOutput>, SequenceError> {
    let penalty = PenaltySpec::l2_power(alpha)?;
    let theta = gaussian_theta(p);
    taus.iter()
        .enumerate()
        .map(|(k, &tau)| {
            panel(
                format!("l2power_alpha{alpha}_tau{tau}"),
                &penalty,
                &theta,
                tau,
                grid_size,
                seed,
                k as u64,
                100,
            )
        })
        .collect()
}

pub fn l1_power_panels(
    alpha: f64,
    taus: &[f64],
    p: usize,
    grid_size: usize,
    seed: u64,
) -> Result<Vec<PanelOutput>, SequenceError> {
    let penalty = PenaltySpec::l1_power(alpha)?;
    let theta = ThetaSpec::Quantiles {
        prior: three_point_prior(1.0, 0.05),
        p,
    }
    .materialize();
    taus.iter()
        .enumerate()
        .map(|(k, &tau)| {
            panel(
                format!("l1power_alpha{alpha}_tau{tau}"),
                &penalty,
                &theta,
                tau,
                grid_size,
                seed,
                16 + k as u64,
                100,
            )
        })
        .collect()
}

/// Smoothed-OWL panels sweeping the signal strength M at fixed noise.
pub fn sowl_signal_panels(
    m_signals: &[f64],
    tau: f64,
    p: usize,
    grid_size: usize,
    seed: u64,
) -> Result<Vec<PanelOutput>, SequenceError> {
    let penalty = crate::penalties::PenaltySpec::smoothed_owl(figure_profile()?)?;
    m_signals
        .iter()
        .enumerate()
        .map(|(k, &m_sig)| {
            let theta = ThetaSpec::Quantiles {
                prior: three_point_prior(m_sig, 0.05),
                p,
            }
            .materialize();
            panel(
                format!("sowl_M{m_sig}_tau{tau}"),
                &penalty,
                &theta,
                tau,
                grid_size,
                seed,
                32 + k as u64,
                100,
            )
        })
        .collect()
}

/// The weight profile used throughout the smoothed-OWL experiments:
/// 2 on the first third, 1 on the second, 0.5 on the last.
pub fn figure_profile() -> Result<crate::penalties::WeightProfile, PenaltyError> {
    crate::penalties::WeightProfile::new(vec![(0.333, 2.0), (0.667, 1.0), (1.0, 0.5)])
}
