//! Probability measures on the line and the plane with finite support:
//! quantiles, Gaussian convolution, and exact Wasserstein-2 distances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::solve_assignment;
use crate::normal::normal_cdf;

/// Atoms closer than this are merged on construction.
pub const MERGE_TOL: f64 = 1e-12;
/// Weights must sum to one within this tolerance before renormalization.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Hard cap on exact 2-D assignment size.
pub const W2_2D_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("measure needs at least one atom with positive weight")]
    EmptySupport,
    #[error("atom {0} is not finite")]
    NonFiniteAtom(f64),
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("weights sum to {0}, expected 1 within {WEIGHT_SUM_TOL:e}")]
    WeightSum(f64),
    #[error("atoms ({atoms}) and weights ({weights}) differ in length")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("samples have {a} and {b} atoms; exact 2-D W2 needs equal counts")]
    SizeMismatch { a: usize, b: usize },
    #[error("2-D W2 capped at {cap} atoms, got {n}; subsample with a seeded RNG")]
    TooLarge { n: usize, cap: usize },
    #[error("2-D W2 needs equal-weight atoms")]
    UnequalWeights,
    #[error("quantile grid needs at least 2 points, got {0}")]
    InvalidGrid(usize),
    #[error("quantile argument {0} outside (0,1)")]
    OutOfRange(f64),
}

/// Weighted atoms on the line: strictly increasing positions, positive
/// weights summing to one. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure1D {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

// Deserialization funnels through the validating constructor.
#[derive(Deserialize)]
struct MeasureRaw {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl<'de> Deserialize<'de> for EmpiricalMeasure1D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = MeasureRaw::deserialize(d)?;
        EmpiricalMeasure1D::new(raw.atoms, raw.weights).map_err(serde::de::Error::custom)
    }
}

impl EmpiricalMeasure1D {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if atoms.len() != weights.len() {
            return Err(MeasureError::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        for &a in &atoms {
            if !a.is_finite() {
                return Err(MeasureError::NonFiniteAtom(a));
            }
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(MeasureError::NegativeWeight(w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(MeasureError::WeightSum(sum));
        }
        let mut pairs: Vec<(f64, f64)> = atoms
            .into_iter()
            .zip(weights)
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if pairs.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // merge groups of atoms within MERGE_TOL of the running group mean
        let mut ga: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut gw: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            if let (Some(last_a), Some(last_w)) = (ga.last().copied(), gw.last().copied()) {
                if a - last_a <= MERGE_TOL {
                    let w_new = last_w + w;
                    *ga.last_mut().unwrap() = (last_a * last_w + a * w) / w_new;
                    *gw.last_mut().unwrap() = w_new;
                    continue;
                }
            }
            ga.push(a);
            gw.push(w);
        }
        let total: f64 = gw.iter().sum();
        for w in &mut gw {
            *w /= total;
        }
        Ok(EmpiricalMeasure1D {
            atoms: ga,
            weights: gw,
        })
    }

    /// Empirical distribution of a vector's coordinates (equal weights).
    pub fn from_vector(values: &[f64]) -> Result<Self, MeasureError> {
        let w = 1.0 / values.len() as f64;
        Self::new(values.to_vec(), vec![w; values.len()])
    }

    pub fn dirac(c: f64) -> Self {
        Self::new(vec![c], vec![1.0]).expect("dirac is always valid")
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * w)
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * a * w)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    /// Left-continuous generalized inverse CDF at t in (0,1).
    pub fn quantile(&self, t: f64) -> Result<f64, MeasureError> {
        if !(t > 0.0 && t < 1.0) {
            return Err(MeasureError::OutOfRange(t));
        }
        let mut cum = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            cum += w;
            if cum >= t {
                return Ok(*a);
            }
        }
        Ok(*self.atoms.last().unwrap())
    }

    /// Quantiles at the midpoints (j - 1/2)/p in one sweep.
    pub fn quantiles_midpoint(&self, p: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(p);
        let mut cum = 0.0;
        let mut k = 0;
        for j in 0..p {
            let t = (j as f64 + 0.5) / p as f64;
            while cum + self.weights[k] < t && k + 1 < self.atoms.len() {
                cum += self.weights[k];
                k += 1;
            }
            out.push(self.atoms[k]);
        }
        out
    }
}

/// Equal-weight measure given by its quantile function sampled at the
/// midpoints t_i = (i - 1/2)/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    grid: Vec<f64>,
}

impl GridMeasure {
    pub fn new(grid: Vec<f64>) -> Result<Self, MeasureError> {
        if grid.len() < 2 {
            return Err(MeasureError::InvalidGrid(grid.len()));
        }
        for &q in &grid {
            if !q.is_finite() {
                return Err(MeasureError::NonFiniteAtom(q));
            }
        }
        for i in 1..grid.len() {
            if grid[i] < grid[i - 1] {
                return Err(MeasureError::InvalidGrid(grid.len()));
            }
        }
        Ok(GridMeasure { grid })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn quantile(&self, t: f64) -> Result<f64, MeasureError> {
        if !(t > 0.0 && t < 1.0) {
            return Err(MeasureError::OutOfRange(t));
        }
        let m = self.grid.len() as f64;
        // smallest i with i/m >= t
        let i = (t * m).ceil() as usize;
        Ok(self.grid[i.clamp(1, self.grid.len()) - 1])
    }

    /// Collapse to an atom/weight measure, merging duplicate grid values.
    pub fn to_measure(&self) -> EmpiricalMeasure1D {
        let w = 1.0 / self.grid.len() as f64;
        EmpiricalMeasure1D::new(self.grid.clone(), vec![w; self.grid.len()])
            .expect("grid induces a valid measure")
    }

    pub fn mean(&self) -> f64 {
        self.grid.iter().sum::<f64>() / self.grid.len() as f64
    }

    pub fn second_moment(&self) -> f64 {
        self.grid.iter().map(|q| q * q).sum::<f64>() / self.grid.len() as f64
    }
}

/// Finite sample of pairs with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointSample2D {
    pairs: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct JointRaw {
    pairs: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl<'de> Deserialize<'de> for JointSample2D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = JointRaw::deserialize(d)?;
        JointSample2D::new(raw.pairs, raw.weights).map_err(serde::de::Error::custom)
    }
}

impl JointSample2D {
    pub fn new(pairs: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if pairs.len() != weights.len() {
            return Err(MeasureError::LengthMismatch {
                atoms: pairs.len(),
                weights: weights.len(),
            });
        }
        if pairs.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        for &(u, v) in &pairs {
            if !u.is_finite() {
                return Err(MeasureError::NonFiniteAtom(u));
            }
            if !v.is_finite() {
                return Err(MeasureError::NonFiniteAtom(v));
            }
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(MeasureError::NegativeWeight(w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(MeasureError::WeightSum(sum));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(JointSample2D { pairs, weights })
    }

    pub fn equal_weight(pairs: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        let w = 1.0 / pairs.len() as f64;
        let n = pairs.len();
        Self::new(pairs, vec![w; n])
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_equal_weight(&self) -> bool {
        let w = 1.0 / self.pairs.len() as f64;
        self.weights.iter().all(|&x| (x - w).abs() <= WEIGHT_SUM_TOL)
    }
}

/// Exact 1-D Wasserstein-2 distance by the quantile coupling: integrate the
/// squared quantile gap over the merged weight partition.
pub fn w2_1d(a: &EmpiricalMeasure1D, b: &EmpiricalMeasure1D) -> f64 {
    let (aa, aw) = (a.atoms(), a.weights());
    let (ba, bw) = (b.atoms(), b.weights());
    let mut i = 0;
    let mut j = 0;
    let mut ca = aw[0];
    let mut cb = bw[0];
    let mut cum = 0.0;
    let mut acc = 0.0;
    loop {
        let next = ca.min(cb).min(1.0);
        let seg = (next - cum).max(0.0);
        let d = aa[i] - ba[j];
        acc += d * d * seg;
        cum = next;
        if cum >= 1.0 - 1e-15 {
            break;
        }
        if ca <= cb && i + 1 < aa.len() {
            i += 1;
            ca += aw[i];
        } else if j + 1 < ba.len() {
            j += 1;
            cb += bw[j];
        } else if i + 1 < aa.len() {
            i += 1;
            ca += aw[i];
        } else {
            break;
        }
    }
    acc.max(0.0).sqrt()
}

/// Exact 2-D Wasserstein-2 distance between equal-weight samples of equal
/// size, by optimal assignment (cubic cost).
pub fn w2_2d(a: &JointSample2D, b: &JointSample2D) -> Result<f64, MeasureError> {
    let n = a.pairs.len();
    if n != b.pairs.len() {
        return Err(MeasureError::SizeMismatch {
            a: n,
            b: b.pairs.len(),
        });
    }
    if n > W2_2D_CAP {
        return Err(MeasureError::TooLarge { n, cap: W2_2D_CAP });
    }
    if !a.is_equal_weight() || !b.is_equal_weight() {
        return Err(MeasureError::UnequalWeights);
    }
    let pa = &a.pairs;
    let pb = &b.pairs;
    let (_, total) = solve_assignment(n, |i, j| {
        let du = pa[i].0 - pb[j].0;
        let dv = pa[i].1 - pb[j].1;
        du * du + dv * dv
    });
    Ok((total / n as f64).max(0.0).sqrt())
}

/// m-point quantile grid of mu * N(0, tau^2). The mixture CDF is inverted at
/// the midpoints by bracketed bisection; tau = 0 returns the grid of mu.
pub fn gaussian_convolve(
    mu: &EmpiricalMeasure1D,
    tau: f64,
    m: usize,
) -> Result<GridMeasure, MeasureError> {
    if m < 2 {
        return Err(MeasureError::InvalidGrid(m));
    }
    assert!(tau >= 0.0, "noise level must be nonnegative");
    if tau == 0.0 {
        return GridMeasure::new(mu.quantiles_midpoint(m));
    }
    let atoms = mu.atoms();
    let weights = mu.weights();
    let lo0 = atoms[0] - 10.0 * tau;
    let hi0 = atoms[atoms.len() - 1] + 10.0 * tau;
    let tol = 1e-10 * tau.max(1.0);
    let cdf = |x: f64| -> f64 {
        atoms
            .iter()
            .zip(weights)
            .map(|(a, w)| w * normal_cdf((x - a) / tau))
            .sum()
    };
    let mut grid = Vec::with_capacity(m);
    let mut lo_start = lo0;
    for i in 0..m {
        let t = (i as f64 + 0.5) / m as f64;
        let mut lo = lo_start;
        let mut hi = hi0;
        // the targets increase, so the previous solution brackets from below
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        grid.push(q);
        lo_start = lo;
    }
    GridMeasure::new(grid)
}
