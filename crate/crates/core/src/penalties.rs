//! Symmetric convex penalties with evaluation, exact-or-iterative proximal
//! operators, and a probe-based KKT verifier.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isotonic::pav_nonincreasing;
use crate::rng::stream_rng;
use crate::scalar_rep::PR1Map;

/// Default KKT tolerance for iterative proximal operators.
pub const DEFAULT_PROX_TOL: f64 = 1e-8;
/// Iteration cap for iterative proximal operators.
pub const MAX_PROX_ITERS: usize = 10_000;

#[derive(Debug, Error)]
pub enum PenaltyError {
    #[error("prox did not converge within {iterations} iterations (kkt residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("penalty value is unavailable for tabulated-prox penalties")]
    Unevaluable,
    #[error("invalid penalty: {0}")]
    InvalidSpec(String),
}

/// Nonincreasing nonnegative weight profile on (0,1]. Weights for dimension
/// p are read off at the midpoints (j - 1/2)/p, so one profile drives
/// experiments across dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightProfile {
    steps: Vec<(f64, f64)>,
}

impl<'de> Deserialize<'de> for WeightProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let steps = Vec::<(f64, f64)>::deserialize(d)?;
        WeightProfile::new(steps).map_err(serde::de::Error::custom)
    }
}

impl WeightProfile {
    pub fn new(mut steps: Vec<(f64, f64)>) -> Result<Self, PenaltyError> {
        if steps.is_empty() {
            return Err(PenaltyError::InvalidSpec("empty weight profile".into()));
        }
        for i in 0..steps.len() {
            let (b, v) = steps[i];
            if !b.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(PenaltyError::InvalidSpec(format!(
                    "bad profile step ({b}, {v})"
                )));
            }
            if !(0.0 < b && b <= 1.0 + 1e-12) {
                return Err(PenaltyError::InvalidSpec(format!(
                    "profile breakpoint {b} outside (0,1]"
                )));
            }
            if i > 0 {
                if b <= steps[i - 1].0 {
                    return Err(PenaltyError::InvalidSpec(
                        "profile breakpoints must increase".into(),
                    ));
                }
                if v > steps[i - 1].1 {
                    return Err(PenaltyError::InvalidSpec(
                        "profile values must be nonincreasing".into(),
                    ));
                }
            }
        }
        let last = steps.len() - 1;
        if (steps[last].0 - 1.0).abs() > 1e-12 {
            return Err(PenaltyError::InvalidSpec(
                "profile must end at breakpoint 1.0".into(),
            ));
        }
        steps[last].0 = 1.0;
        Ok(WeightProfile { steps })
    }

    /// Profile taking the given weights on equal quantile blocks.
    pub fn from_weights(weights: &[f64]) -> Result<Self, PenaltyError> {
        let k = weights.len();
        let steps = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| ((i + 1) as f64 / k as f64, w))
            .collect();
        WeightProfile::new(steps)
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn value_at(&self, t: f64) -> f64 {
        for &(b, v) in &self.steps {
            if t <= b {
                return v;
            }
        }
        self.steps.last().unwrap().1
    }

    /// Weights of length p sampled at the midpoints (j - 1/2)/p.
    pub fn materialize(&self, p: usize) -> Vec<f64> {
        (0..p)
            .map(|j| self.value_at((j as f64 + 0.5) / p as f64))
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.steps.last().unwrap().1
    }
}

/// Scalar convex penalty for separable use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarPenalty {
    /// rho(x) = xi |x|
    AbsWeight { xi: f64 },
    /// rho(x) = c x^2
    Quadratic { c: f64 },
    /// rho given only through its prox, a monotone 1-Lipschitz map
    TabulatedProx { map: PR1Map },
}

/// Penalty family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PenaltyKind {
    Separable { scalar: ScalarPenalty },
    Slope { profile: WeightProfile },
    SmoothedOwl { profile: WeightProfile },
    L2Power { alpha: f64 },
    L1Power { alpha: f64 },
}

/// A penalty together with its global multiplier: the object prox and
/// evaluate work with is scale * f_p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltySpec {
    #[serde(flatten)]
    kind: PenaltyKind,
    scale: f64,
}

#[derive(Deserialize)]
struct PenaltySpecRaw {
    #[serde(flatten)]
    kind: PenaltyKind,
    #[serde(default = "default_scale")]
    scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl<'de> Deserialize<'de> for PenaltySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PenaltySpecRaw::deserialize(d)?;
        PenaltySpec::new(raw.kind, raw.scale).map_err(serde::de::Error::custom)
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn soft(v: f64, t: f64) -> f64 {
    sign0(v) * (v.abs() - t).max(0.0)
}

fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, scale: f64) -> Result<Self, PenaltyError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PenaltyError::InvalidSpec(format!(
                "scale must be positive, got {scale}"
            )));
        }
        match &kind {
            PenaltyKind::Separable { scalar } => match scalar {
                ScalarPenalty::AbsWeight { xi } => {
                    if !(*xi >= 0.0 && xi.is_finite()) {
                        return Err(PenaltyError::InvalidSpec(format!("bad weight {xi}")));
                    }
                }
                ScalarPenalty::Quadratic { c } => {
                    if !(*c >= 0.0 && c.is_finite()) {
                        return Err(PenaltyError::InvalidSpec(format!("bad curvature {c}")));
                    }
                }
                ScalarPenalty::TabulatedProx { map } => {
                    let violations = map.validate();
                    if !violations.is_empty() {
                        return Err(PenaltyError::InvalidSpec(format!(
                            "tabulated prox is not monotone 1-Lipschitz: {violations:?}"
                        )));
                    }
                }
            },
            PenaltyKind::Slope { .. } => {}
            PenaltyKind::SmoothedOwl { profile } => {
                if profile.min_value() <= 0.0 {
                    return Err(PenaltyError::InvalidSpec(
                        "smoothed OWL weights must be strictly positive".into(),
                    ));
                }
            }
            PenaltyKind::L2Power { alpha } | PenaltyKind::L1Power { alpha } => {
                if !(*alpha >= 1.0 && alpha.is_finite()) {
                    return Err(PenaltyError::InvalidSpec(format!(
                        "alpha must be >= 1, got {alpha}"
                    )));
                }
            }
        }
        Ok(PenaltySpec { kind, scale })
    }

    pub fn separable(scalar: ScalarPenalty) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::Separable { scalar }, 1.0)
    }

    pub fn abs_weight(xi: f64) -> Result<Self, PenaltyError> {
        Self::separable(ScalarPenalty::AbsWeight { xi })
    }

    pub fn slope(profile: WeightProfile) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::Slope { profile }, 1.0)
    }

    pub fn smoothed_owl(profile: WeightProfile) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::SmoothedOwl { profile }, 1.0)
    }

    pub fn l2_power(alpha: f64) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::L2Power { alpha }, 1.0)
    }

    pub fn l1_power(alpha: f64) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::L1Power { alpha }, 1.0)
    }

    pub fn kind(&self) -> &PenaltyKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same penalty with the multiplier scaled by k.
    pub fn scaled(&self, k: f64) -> PenaltySpec {
        assert!(k > 0.0 && k.is_finite());
        PenaltySpec {
            kind: self.kind.clone(),
            scale: self.scale * k,
        }
    }

    pub fn is_evaluable(&self) -> bool {
        !matches!(
            &self.kind,
            PenaltyKind::Separable {
                scalar: ScalarPenalty::TabulatedProx { .. }
            }
        )
    }

    /// scale * f_p(x).
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, PenaltyError> {
        let p = x.len() as f64;
        match &self.kind {
            PenaltyKind::Separable { scalar } => match scalar {
                ScalarPenalty::AbsWeight { xi } => {
                    Ok(self.scale * xi * x.iter().map(|v| v.abs()).sum::<f64>())
                }
                ScalarPenalty::Quadratic { c } => {
                    Ok(self.scale * c * x.iter().map(|v| v * v).sum::<f64>())
                }
                ScalarPenalty::TabulatedProx { .. } => Err(PenaltyError::Unevaluable),
            },
            PenaltyKind::Slope { profile } => {
                let lam = profile.materialize(x.len());
                let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
                Ok(self.scale
                    * mags
                        .iter()
                        .zip(&lam)
                        .map(|(m, l)| m * l)
                        .sum::<f64>())
            }
            PenaltyKind::SmoothedOwl { profile } => {
                let lam_eff = self.sowl_effective_weights(profile, x.len());
                let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
                Ok(sowl_value_sorted(&mags, &lam_eff))
            }
            PenaltyKind::L2Power { alpha } => {
                Ok(self.scale * p.powf(1.0 - alpha / 2.0) * l2_norm(x).powf(*alpha))
            }
            PenaltyKind::L1Power { alpha } => {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                Ok(self.scale * p.powf(1.0 - alpha) * l1.powf(*alpha))
            }
        }
    }

    /// argmin 1/2 ||y - x||^2 + scale * f_p(x), to a KKT residual of `tol`
    /// for the iterative variant.
    pub fn prox(&self, y: &[f64], tol: f64) -> Result<Vec<f64>, PenaltyError> {
        assert!(tol > 0.0);
        let p = y.len();
        match &self.kind {
            PenaltyKind::Separable { scalar } => Ok(y
                .iter()
                .map(|&v| scalar_prox(scalar, self.scale, v))
                .collect()),
            PenaltyKind::Slope { profile } => {
                let lam: Vec<f64> = profile
                    .materialize(p)
                    .into_iter()
                    .map(|l| l * self.scale)
                    .collect();
                Ok(slope_prox(y, &lam))
            }
            PenaltyKind::L2Power { alpha } => Ok(self.l2_power_prox(y, *alpha)),
            PenaltyKind::L1Power { alpha } => Ok(self.l1_power_prox(y, *alpha)),
            PenaltyKind::SmoothedOwl { profile } => Ok(self.sowl_prox(y, profile)),
        }
    }

    fn l2_power_prox(&self, y: &[f64], alpha: f64) -> Vec<f64> {
        let p = y.len() as f64;
        let norm = l2_norm(y);
        if norm == 0.0 {
            return vec![0.0; y.len()];
        }
        let c = self.scale * alpha * p.powf(1.0 - alpha / 2.0);
        if alpha == 1.0 && norm <= c {
            return vec![0.0; y.len()];
        }
        // monotone radial equation s + c s^{alpha-1} = norm
        let mut lo = 0.0;
        let mut hi = norm;
        while hi - lo > 1e-12 * norm {
            let mid = 0.5 * (lo + hi);
            if mid + c * mid.powf(alpha - 1.0) < norm {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi) / norm;
        y.iter().map(|&v| v * s).collect()
    }

    fn l1_power_prox(&self, y: &[f64], alpha: f64) -> Vec<f64> {
        let p = y.len() as f64;
        let amax = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if amax == 0.0 {
            return vec![0.0; y.len()];
        }
        if alpha == 1.0 {
            return y.iter().map(|&v| soft(v, self.scale)).collect();
        }
        let c = self.scale * alpha * p.powf(1.0 - alpha);
        let shrink_total = |t: f64| -> f64 { y.iter().map(|v| (v.abs() - t).max(0.0)).sum() };
        // t = c S(t)^{alpha-1} with S nonincreasing, so t - c S(t)^{alpha-1}
        // increases
        let mut lo = 0.0;
        let mut hi = amax;
        while hi - lo > 1e-13 * amax {
            let mid = 0.5 * (lo + hi);
            if mid - c * shrink_total(mid).powf(alpha - 1.0) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        y.iter().map(|&v| soft(v, t)).collect()
    }

    fn sowl_effective_weights(&self, profile: &WeightProfile, p: usize) -> Vec<f64> {
        // scale * sowl(lambda) = sowl(scale^2 * lambda)
        profile
            .materialize(p)
            .into_iter()
            .map(|l| l * self.scale * self.scale)
            .collect()
    }

    // Minimizing the joint objective over x first gives x_j = y_j eta_j /
    // (1 + eta_j) and leaves a separable convex problem in eta under the
    // nonincreasing order constraint. Pool-adjacent-violators with block
    // value sqrt(sum a^2 / sum lambda) solves it, and the block fixed point
    // is eta_B = max(0, sqrt(sum a^2 / sum lambda) - 1); the prox is exact.
    fn sowl_prox(&self, y: &[f64], profile: &WeightProfile) -> Vec<f64> {
        let p = y.len();
        let lam = self.sowl_effective_weights(profile, p);
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&a, &b| y[b].abs().partial_cmp(&y[a].abs()).unwrap());
        let a: Vec<f64> = idx.iter().map(|&j| y[j].abs()).collect();
        let pooled = sowl_pooled_sorted(&a, &lam);
        let mut out = vec![0.0; p];
        for (r, &j) in idx.iter().enumerate() {
            let m = pooled[r];
            if m > 1.0 {
                out[j] = sign0(y[j]) * a[r] * (m - 1.0) / m;
            }
        }
        out
    }

    /// Probe-based certificate that x = prox(y): with g = y - x, the largest
    /// normalized violation of the subgradient inequality
    /// f(x') >= f(x) + <g, x' - x> over the probe set.
    pub fn kkt_residual(
        &self,
        y: &[f64],
        x: &[f64],
        n_probes: usize,
        seed: u64,
    ) -> Result<f64, PenaltyError> {
        assert!(n_probes >= 1);
        assert_eq!(y.len(), x.len());
        let fx = self.evaluate(x)?;
        let g: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let norm_x = l2_norm(x);
        let p = x.len();
        let mut rng = stream_rng(seed, 0);
        let mut worst = 0.0f64;
        let mut used = 0usize;

        let check = |probe: &[f64], worst: &mut f64| -> Result<(), PenaltyError> {
            let fp = self.evaluate(probe)?;
            let mut inner = 0.0;
            let mut dist2 = 0.0;
            for i in 0..probe.len() {
                let d = probe[i] - x[i];
                inner += g[i] * d;
                dist2 += d * d;
            }
            let viol = fx + inner - fp;
            if viol > 0.0 {
                *worst = (*worst).max(viol / (1.0 + dist2.sqrt()));
            }
            Ok(())
        };

        let deterministic: [Vec<f64>; 4] = [
            x.to_vec(),
            y.to_vec(),
            vec![0.0; p],
            x.iter().map(|v| -v).collect(),
        ];
        for probe in deterministic.iter() {
            if used == n_probes {
                return Ok(worst);
            }
            check(probe, &mut worst)?;
            used += 1;
        }
        let gauss_scales = [0.01, 0.1, 1.0];
        let mut kind = 0usize;
        while used < n_probes {
            let probe: Vec<f64> = match kind {
                0 => x
                    .iter()
                    .map(|&v| if rng.gen_bool(0.5) { v } else { -v })
                    .collect(),
                1 => {
                    let mut perm = x.to_vec();
                    perm.shuffle(&mut rng);
                    perm
                }
                k => {
                    let s = gauss_scales[k - 2] * (1.0 + norm_x) / (p as f64).sqrt();
                    x.iter()
                        .map(|&v| v + s * rng.sample::<f64, _>(rand_distr::StandardNormal))
                        .collect()
                }
            };
            check(&probe, &mut worst)?;
            used += 1;
            kind = (kind + 1) % 5;
        }
        Ok(worst)
    }
}

fn scalar_prox(scalar: &ScalarPenalty, scale: f64, v: f64) -> f64 {
    match scalar {
        ScalarPenalty::AbsWeight { xi } => soft(v, scale * xi),
        ScalarPenalty::Quadratic { c } => v / (1.0 + 2.0 * scale * c),
        ScalarPenalty::TabulatedProx { map } => {
            if (scale - 1.0).abs() < 1e-15 {
                map.apply(v)
            } else {
                map.prox_scaled(v, scale)
            }
        }
    }
}

/// SLOPE prox: sort |y| decreasing, pool the shifted magnitudes monotone,
/// clip at zero, restore signs and order. `lam` must already carry the
/// global multiplier.
fn slope_prox(y: &[f64], lam: &[f64]) -> Vec<f64> {
    let p = y.len();
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| y[b].abs().partial_cmp(&y[a].abs()).unwrap());
    let shifted: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(r, &j)| y[j].abs() - lam[r])
        .collect();
    let pooled = pav_nonincreasing(&shifted);
    let mut out = vec![0.0; p];
    for (r, &j) in idx.iter().enumerate() {
        out[j] = sign0(y[j]) * pooled[r].max(0.0);
    }
    out
}

/// Pooled ratios sqrt(sum u^2 / sum lam) under the nonincreasing order
/// constraint. `u` must be sorted nonincreasing.
fn sowl_pooled_sorted(u: &[f64], lam: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut su2: Vec<f64> = Vec::with_capacity(n);
    let mut slam: Vec<f64> = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    let block_eta = |su2: f64, slam: f64| -> f64 {
        if su2 <= 0.0 {
            0.0
        } else {
            (su2 / slam).sqrt()
        }
    };
    for r in 0..n {
        su2.push(u[r] * u[r]);
        slam.push(lam[r]);
        count.push(1);
        while su2.len() > 1 {
            let k = su2.len();
            let cur = block_eta(su2[k - 1], slam[k - 1]);
            let prev = block_eta(su2[k - 2], slam[k - 2]);
            if cur > prev {
                let (a, b, c) = (su2.pop().unwrap(), slam.pop().unwrap(), count.pop().unwrap());
                *su2.last_mut().unwrap() += a;
                *slam.last_mut().unwrap() += b;
                *count.last_mut().unwrap() += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for ((s2, sl), c) in su2.iter().zip(&slam).zip(&count) {
        let e = block_eta(*s2, *sl);
        out.extend(std::iter::repeat_n(e, *c));
    }
    out
}

/// Value sum over pooled blocks; `u` sorted nonincreasing, `lam` the
/// effective (scale-folded) weights.
fn sowl_value_sorted(u: &[f64], lam: &[f64]) -> f64 {
    let n = u.len();
    let mut su2: Vec<f64> = Vec::with_capacity(n);
    let mut slam: Vec<f64> = Vec::with_capacity(n);
    let block_eta = |su2: f64, slam: f64| -> f64 {
        if su2 <= 0.0 {
            0.0
        } else {
            (su2 / slam).sqrt()
        }
    };
    for r in 0..n {
        su2.push(u[r] * u[r]);
        slam.push(lam[r]);
        while su2.len() > 1 {
            let k = su2.len();
            if block_eta(su2[k - 1], slam[k - 1]) > block_eta(su2[k - 2], slam[k - 2]) {
                let (a, b) = (su2.pop().unwrap(), slam.pop().unwrap());
                *su2.last_mut().unwrap() += a;
                *slam.last_mut().unwrap() += b;
            } else {
                break;
            }
        }
    }
    su2.iter()
        .zip(&slam)
        .map(|(s2, sl)| (s2 * sl).sqrt())
        .sum()
}
