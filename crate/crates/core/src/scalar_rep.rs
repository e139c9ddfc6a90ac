//! Effective scalar representations: piecewise-linear monotone 1-Lipschitz
//! maps, their validation, construction from a quantile-grid prox, and
//! weighted least-squares projection onto the class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::GridMeasure;
use crate::normal::{normal_cdf_diff, normal_pdf};
use crate::penalties::{PenaltyError, PenaltyKind, PenaltySpec, ScalarPenalty};

/// Slack allowed on the Lipschitz check (floating-point prox output).
pub const LIPSCHITZ_SLACK: f64 = 1e-12;
/// Duplicate grid points within this distance are merged.
pub const NODE_MERGE_TOL: f64 = 1e-12;
/// Dykstra stopping: max constraint violation.
pub const PROJECT_VIOLATION_TOL: f64 = 1e-9;
/// Dykstra stopping: objective change per sweep.
pub const PROJECT_OBJECTIVE_TOL: f64 = 1e-10;
/// Dykstra sweep cap.
pub const PROJECT_MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Error)]
pub enum ScalarRepError {
    #[error("grid size {0} below the minimum of 16")]
    GridTooSmall(usize),
    #[error("all grid points coincide; no scalar map is identified")]
    DegenerateGrid,
    #[error("projection did not converge within {sweeps} sweeps (violation {violation:e})")]
    NoConvergence { sweeps: usize, violation: f64 },
    #[error("nodes must be strictly increasing")]
    InvalidNodes,
    #[error("lengths differ: {0} nodes vs {1} values")]
    LengthMismatch(usize, usize),
    #[error("map violates the monotone 1-Lipschitz class: {0:?}")]
    InvalidMap(Vec<Pr1Violation>),
    #[error(transparent)]
    Prox(#[from] PenaltyError),
}

/// One violation of the monotone 1-Lipschitz invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Pr1Violation {
    /// values decrease across a segment; excess = drop size
    Monotonicity { segment: usize, excess: f64 },
    /// segment slope exceeds one; excess = slope - 1
    Lipschitz { segment: usize, excess: f64 },
    /// breakpoints not strictly increasing
    BreakpointOrder { segment: usize },
    /// extension slope outside the unit interval
    ExtensionSlope { left: bool, value: f64 },
    /// non-finite entry
    NonFinite,
    /// no nodes at all
    Empty,
}

/// Piecewise-linear nondecreasing 1-Lipschitz function: nodes plus linear
/// extension slopes on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PR1Map {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slope_left: f64,
    slope_right: f64,
}

/// Violations for raw map data; empty iff the data forms a valid map.
pub fn validate_pr1(
    breakpoints: &[f64],
    values: &[f64],
    slope_left: f64,
    slope_right: f64,
) -> Vec<Pr1Violation> {
    let mut out = Vec::new();
    if breakpoints.len() != values.len() || breakpoints.is_empty() {
        out.push(Pr1Violation::Empty);
        return out;
    }
    if breakpoints.iter().chain(values).any(|v| !v.is_finite())
        || !slope_left.is_finite()
        || !slope_right.is_finite()
    {
        out.push(Pr1Violation::NonFinite);
        return out;
    }
    for (left, slope) in [(true, slope_left), (false, slope_right)] {
        if !(0.0..=1.0).contains(&slope) {
            out.push(Pr1Violation::ExtensionSlope { left, value: slope });
        }
    }
    for i in 0..breakpoints.len() - 1 {
        let dy = breakpoints[i + 1] - breakpoints[i];
        let dx = values[i + 1] - values[i];
        if dy <= 0.0 {
            out.push(Pr1Violation::BreakpointOrder { segment: i });
            continue;
        }
        if dx < 0.0 {
            out.push(Pr1Violation::Monotonicity {
                segment: i,
                excess: -dx,
            });
        } else if dx - dy > LIPSCHITZ_SLACK {
            out.push(Pr1Violation::Lipschitz {
                segment: i,
                excess: dx / dy - 1.0,
            });
        }
    }
    out
}

/// First/second moment of A(Y) and the Gaussian cross moment E[G A(Y)] for
/// Y = mean + sd G.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMoments {
    pub m1: f64,
    pub m2: f64,
    pub cross: f64,
}

impl PR1Map {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        slope_left: f64,
        slope_right: f64,
    ) -> Result<Self, ScalarRepError> {
        let violations = validate_pr1(&breakpoints, &values, slope_left, slope_right);
        if !violations.is_empty() {
            return Err(ScalarRepError::InvalidMap(violations));
        }
        Ok(PR1Map {
            breakpoints,
            values,
            slope_left,
            slope_right,
        })
    }

    /// Skip validation; for tests and for deliberately invalid data.
    pub fn from_parts_unchecked(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        slope_left: f64,
        slope_right: f64,
    ) -> Self {
        PR1Map {
            breakpoints,
            values,
            slope_left,
            slope_right,
        }
    }

    /// Build from grid prox output: merge duplicate inputs, clip segment
    /// slopes into the unit interval by re-accumulating from the leftmost node (a
    /// rounding repair; the exact object is feasible). Extensions inherit
    /// the clipped end slopes.
    pub fn from_grid_clipped(ys: &[f64], xs: &[f64]) -> Result<Self, ScalarRepError> {
        if ys.len() != xs.len() {
            return Err(ScalarRepError::LengthMismatch(ys.len(), xs.len()));
        }
        if ys.is_empty() {
            return Err(ScalarRepError::DegenerateGrid);
        }
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by(|&a, &b| ys[a].partial_cmp(&ys[b]).unwrap());

        // merge duplicates, averaging values
        let mut by: Vec<f64> = Vec::with_capacity(ys.len());
        let mut bx: Vec<f64> = Vec::with_capacity(ys.len());
        let mut count: Vec<usize> = Vec::with_capacity(ys.len());
        for &k in &order {
            if let Some(&last) = by.last() {
                if ys[k] - last <= NODE_MERGE_TOL {
                    let c = *count.last().unwrap();
                    let v = bx.last_mut().unwrap();
                    *v = (*v * c as f64 + xs[k]) / (c + 1) as f64;
                    *count.last_mut().unwrap() = c + 1;
                    continue;
                }
            }
            by.push(ys[k]);
            bx.push(xs[k]);
            count.push(1);
        }
        if by.len() < 2 {
            return Err(ScalarRepError::DegenerateGrid);
        }
        // clip slopes and re-accumulate
        let mut vals = Vec::with_capacity(by.len());
        vals.push(bx[0]);
        let mut first_slope = None;
        let mut last_slope = 0.0;
        for i in 0..by.len() - 1 {
            let dy = by[i + 1] - by[i];
            let slope = ((bx[i + 1] - bx[i]) / dy).clamp(0.0, 1.0);
            if first_slope.is_none() {
                first_slope = Some(slope);
            }
            last_slope = slope;
            let prev = *vals.last().unwrap();
            vals.push(prev + slope * dy);
        }
        PR1Map::new(by, vals, first_slope.unwrap(), last_slope)
    }

    /// Identity map.
    pub fn identity() -> Self {
        PR1Map {
            breakpoints: vec![0.0],
            values: vec![0.0],
            slope_left: 1.0,
            slope_right: 1.0,
        }
    }

    /// Constant map.
    pub fn constant(c: f64) -> Self {
        PR1Map {
            breakpoints: vec![0.0],
            values: vec![c],
            slope_left: 0.0,
            slope_right: 0.0,
        }
    }

    /// Soft-thresholding at threshold t >= 0.
    pub fn soft_threshold(t: f64) -> Self {
        assert!(t >= 0.0);
        if t == 0.0 {
            return Self::identity();
        }
        PR1Map {
            breakpoints: vec![-t, t],
            values: vec![0.0, 0.0],
            slope_left: 1.0,
            slope_right: 1.0,
        }
    }

    /// Linear map x = c + k y with slope k in the unit interval.
    pub fn linear(k: f64, c: f64) -> Self {
        assert!((0.0..=1.0).contains(&k));
        PR1Map {
            breakpoints: vec![0.0],
            values: vec![c],
            slope_left: k,
            slope_right: k,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> (f64, f64) {
        (self.slope_left, self.slope_right)
    }

    pub fn validate(&self) -> Vec<Pr1Violation> {
        validate_pr1(
            &self.breakpoints,
            &self.values,
            self.slope_left,
            self.slope_right,
        )
    }

    /// Piecewise-linear interpolation inside the node range, linear
    /// extension outside.
    pub fn apply(&self, y: f64) -> f64 {
        let n = self.breakpoints.len();
        if y <= self.breakpoints[0] {
            return self.values[0] + self.slope_left * (y - self.breakpoints[0]);
        }
        if y >= self.breakpoints[n - 1] {
            return self.values[n - 1] + self.slope_right * (y - self.breakpoints[n - 1]);
        }
        let i = self.breakpoints.partition_point(|&b| b <= y) - 1;
        let dy = self.breakpoints[i + 1] - self.breakpoints[i];
        let t = (y - self.breakpoints[i]) / dy;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    pub fn apply_vec(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.apply(y)).collect()
    }

    /// Treat this map as `prox[rho]` for an (implicit) convex rho and
    /// evaluate `prox[s rho]` at v. The subgradient graph of rho is
    /// {(A(y), y - A(y))}, so `prox[s rho](v)` = A(y) at the y solving
    /// s y + (1-s) A(y) = v.
    pub fn prox_scaled(&self, v: f64, s: f64) -> f64 {
        assert!(s > 0.0);
        let n = self.breakpoints.len();
        let z = |i: usize| s * self.breakpoints[i] + (1.0 - s) * self.values[i];
        let z0 = z(0);
        if v <= z0 {
            let rate = s + (1.0 - s) * self.slope_left;
            let y = self.breakpoints[0] + (v - z0) / rate;
            return self.values[0] + self.slope_left * (y - self.breakpoints[0]);
        }
        let zn = z(n - 1);
        if v >= zn {
            let rate = s + (1.0 - s) * self.slope_right;
            let y = self.breakpoints[n - 1] + (v - zn) / rate;
            return self.values[n - 1] + self.slope_right * (y - self.breakpoints[n - 1]);
        }
        // z is strictly increasing, piecewise linear on the same segments
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if z(mid) <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let dy = self.breakpoints[hi] - self.breakpoints[lo];
        let slope = (self.values[hi] - self.values[lo]) / dy;
        let rate = s + (1.0 - s) * slope;
        self.values[lo] + slope * (v - z(lo)) / rate
    }

    /// The map of `prox[s rho]` as a PR1Map (same construction as
    /// `prox_scaled`, materialized at the transformed nodes).
    pub fn scaled_penalty_map(&self, s: f64) -> PR1Map {
        assert!(s > 0.0);
        if (s - 1.0).abs() < 1e-15 {
            return self.clone();
        }
        let transform = |slope: f64| slope / (s + (1.0 - s) * slope);
        let breakpoints: Vec<f64> = self
            .breakpoints
            .iter()
            .zip(&self.values)
            .map(|(&y, &x)| s * y + (1.0 - s) * x)
            .collect();
        PR1Map {
            breakpoints,
            values: self.values.clone(),
            slope_left: transform(self.slope_left).clamp(0.0, 1.0),
            slope_right: transform(self.slope_right).clamp(0.0, 1.0),
        }
    }

    /// Exact E[A(Y)], E[A(Y)^2], E[G A(Y)] for Y = mean + sd G, G ~ N(0,1),
    /// by closed-form Gaussian integrals over each linear segment.
    pub fn gauss_moments(&self, mean: f64, sd: f64) -> GaussMoments {
        if sd == 0.0 {
            let v = self.apply(mean);
            return GaussMoments {
                m1: v,
                m2: v * v,
                cross: 0.0,
            };
        }
        let gpdf = |g: f64| if g.is_finite() { g * normal_pdf(g) } else { 0.0 };
        let pdf = |g: f64| if g.is_finite() { normal_pdf(g) } else { 0.0 };
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let mut cross = 0.0;
        let mut add_piece = |gl: f64, gu: f64, beta: f64, gamma: f64| {
            if gu <= gl {
                return;
            }
            let i0 = if gl == f64::NEG_INFINITY && gu == f64::INFINITY {
                1.0
            } else if gl == f64::NEG_INFINITY {
                crate::normal::normal_cdf(gu)
            } else if gu == f64::INFINITY {
                crate::normal::normal_sf(gl)
            } else {
                normal_cdf_diff(gl, gu)
            };
            let i1 = pdf(gl) - pdf(gu);
            let i2 = i0 + gpdf(gl) - gpdf(gu);
            m1 += beta * i0 + gamma * i1;
            m2 += beta * beta * i0 + 2.0 * beta * gamma * i1 + gamma * gamma * i2;
            cross += beta * i1 + gamma * i2;
        };
        let n = self.breakpoints.len();
        let to_g = |y: f64| (y - mean) / sd;
        // left tail
        {
            let s = self.slope_left;
            let beta = self.values[0] + s * (mean - self.breakpoints[0]);
            add_piece(f64::NEG_INFINITY, to_g(self.breakpoints[0]), beta, s * sd);
        }
        for i in 0..n.saturating_sub(1) {
            let dy = self.breakpoints[i + 1] - self.breakpoints[i];
            let s = (self.values[i + 1] - self.values[i]) / dy;
            let beta = self.values[i] + s * (mean - self.breakpoints[i]);
            add_piece(
                to_g(self.breakpoints[i]),
                to_g(self.breakpoints[i + 1]),
                beta,
                s * sd,
            );
        }
        // right tail
        {
            let s = self.slope_right;
            let beta = self.values[n - 1] + s * (mean - self.breakpoints[n - 1]);
            add_piece(to_g(self.breakpoints[n - 1]), f64::INFINITY, beta, s * sd);
        }
        GaussMoments { m1, m2, cross }
    }

    /// Largest y >= 0 with A(y) <= eps, by bisection on the monotone map.
    /// Returns 0 when A is positive immediately to the right of 0.
    pub fn fitted_threshold(&self, eps: f64) -> f64 {
        let hi0 = self
            .breakpoints
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(1.0);
        if self.apply(0.0).abs() > eps {
            return 0.0;
        }
        if self.apply(hi0) <= eps {
            return hi0;
        }
        let mut lo = 0.0;
        let mut hi = hi0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.apply(mid) <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Build the effective scalar map of a penalty under a measurement grid:
/// materialize the penalty at the grid dimension, prox the grid, and read
/// off the map through the (input, output) pairs. Separable penalties get
/// their exact scalar prox, which is measure-independent.
pub fn effective_scalar_rep(
    penalty: &PenaltySpec,
    grid: &GridMeasure,
    tol: f64,
) -> Result<PR1Map, ScalarRepError> {
    let m = grid.len();
    if m < 16 {
        return Err(ScalarRepError::GridTooSmall(m));
    }
    if let PenaltyKind::Separable { scalar } = penalty.kind() {
        let s = penalty.scale();
        return Ok(match scalar {
            ScalarPenalty::AbsWeight { xi } => PR1Map::soft_threshold(s * xi),
            ScalarPenalty::Quadratic { c } => PR1Map::linear(1.0 / (1.0 + 2.0 * s * c), 0.0),
            ScalarPenalty::TabulatedProx { map } => map.scaled_penalty_map(s),
        });
    }
    let ys = grid.grid().to_vec();
    if ys[m - 1] - ys[0] <= NODE_MERGE_TOL {
        return Err(ScalarRepError::DegenerateGrid);
    }
    let xs = penalty.prox(&ys, tol)?;
    PR1Map::from_grid_clipped(&ys, &xs)
}

/// Weighted least-squares projection onto the monotone 1-Lipschitz class on
/// fixed nodes: minimize sum w_i (x_i - t_i)^2 subject to
/// 0 <= x_{i+1} - x_i <= y_{i+1} - y_i, by cyclic Dykstra projections onto
/// the two half-space families.
pub fn project_pr1(
    nodes: &[f64],
    targets: &[f64],
    weights: &[f64],
) -> Result<PR1Map, ScalarRepError> {
    let m = nodes.len();
    if targets.len() != m || weights.len() != m {
        return Err(ScalarRepError::LengthMismatch(m, targets.len()));
    }
    if m < 2 {
        return Err(ScalarRepError::DegenerateGrid);
    }
    for i in 1..m {
        if nodes[i] <= nodes[i - 1] {
            return Err(ScalarRepError::InvalidNodes);
        }
    }
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    if wmax <= 0.0 {
        return Err(ScalarRepError::InvalidNodes);
    }
    // zero weights would make the metric degenerate; floor them far below
    // every tolerance in play
    let w: Vec<f64> = weights.iter().map(|&x| x.max(1e-12 * wmax)).collect();
    let gaps: Vec<f64> = (0..m - 1).map(|i| nodes[i + 1] - nodes[i]).collect();

    let mut x = targets.to_vec();
    // Dykstra corrections, one scalar per half space
    let mut corr_mono = vec![0.0f64; m - 1];
    let mut corr_lip = vec![0.0f64; m - 1];

    let objective = |x: &[f64]| -> f64 {
        x.iter()
            .zip(targets)
            .zip(&w)
            .map(|((xi, ti), wi)| wi * (xi - ti) * (xi - ti))
            .sum()
    };

    let mut prev_obj = objective(&x);
    for sweep in 1..=PROJECT_MAX_SWEEPS {
        // constraint a.x <= b with a = +-(e_i - e_{i+1}); projection in the
        // w-metric moves along (a_i/w_i, a_{i+1}/w_{i+1})
        for i in 0..m - 1 {
            let denom = 1.0 / w[i] + 1.0 / w[i + 1];
            // monotone: x_i - x_{i+1} <= 0
            let c = corr_mono[i];
            if c != 0.0 {
                x[i] += c / w[i];
                x[i + 1] -= c / w[i + 1];
            }
            let viol = x[i] - x[i + 1];
            let lambda = (viol / denom).max(0.0);
            x[i] -= lambda / w[i];
            x[i + 1] += lambda / w[i + 1];
            corr_mono[i] = lambda;

            // Lipschitz: x_{i+1} - x_i <= gap_i
            let c = corr_lip[i];
            if c != 0.0 {
                x[i + 1] += c / w[i + 1];
                x[i] -= c / w[i];
            }
            let viol = x[i + 1] - x[i] - gaps[i];
            let lambda = (viol / denom).max(0.0);
            x[i + 1] -= lambda / w[i + 1];
            x[i] += lambda / w[i];
            corr_lip[i] = lambda;
        }
        let mut maxviol = 0.0f64;
        for i in 0..m - 1 {
            let d = x[i + 1] - x[i];
            maxviol = maxviol.max(-d).max(d - gaps[i]);
        }
        let obj = objective(&x);
        if maxviol <= PROJECT_VIOLATION_TOL && (obj - prev_obj).abs() <= PROJECT_OBJECTIVE_TOL {
            return PR1Map::from_grid_clipped(nodes, &x);
        }
        if sweep == PROJECT_MAX_SWEEPS {
            return Err(ScalarRepError::NoConvergence {
                sweeps: sweep,
                violation: maxviol,
            });
        }
        prev_obj = obj;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{gaussian_convolve, EmpiricalMeasure1D};
    use crate::normal::{normal_cdf, normal_pdf, normal_sf};
    use rand::Rng;

    #[test]
    fn apply_identity_constant_soft() {
        let id = PR1Map::identity();
        for &y in &[-3.0, 0.0, 7.5] {
            assert_eq!(id.apply(y), y);
        }
        let c = PR1Map::constant(2.5);
        for &y in &[-3.0, 0.0, 7.5] {
            assert_eq!(c.apply(y), 2.5);
        }
        let s = PR1Map::soft_threshold(0.5);
        assert_eq!(s.apply(0.5), 0.0);
        assert_eq!(s.apply(-0.5), 0.0);
        assert!((s.apply(2.0) - 1.5).abs() < 1e-15);
        assert!((s.apply(-2.0) + 1.5).abs() < 1e-15);
        assert_eq!(s.apply(0.2), 0.0);
    }

    #[test]
    fn validate_flags_violations() {
        let ok = PR1Map::soft_threshold(1.0);
        assert!(ok.validate().is_empty());

        let dec = PR1Map::from_parts_unchecked(vec![0.0, 1.0], vec![1.0, 0.5], 0.0, 0.0);
        let v = dec.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(
            v[0],
            Pr1Violation::Monotonicity { segment: 0, .. }
        ));

        let steep = PR1Map::from_parts_unchecked(vec![0.0, 1.0], vec![0.0, 1.2], 0.0, 0.0);
        let v = steep.validate();
        assert_eq!(v.len(), 1);
        match &v[0] {
            Pr1Violation::Lipschitz { segment, excess } => {
                assert_eq!(*segment, 0);
                assert!((excess - 0.2).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }

        let bad_ext = PR1Map::from_parts_unchecked(vec![0.0], vec![0.0], 1.5, 0.5);
        assert!(matches!(
            bad_ext.validate()[0],
            Pr1Violation::ExtensionSlope { left: true, .. }
        ));
    }

    #[test]
    fn apply_is_monotone_and_nonexpansive() {
        let mut rng = crate::rng::stream_rng(41, 0);
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let mut bp: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
            bp.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let mut vals = vec![rng.gen_range(-1.0..1.0)];
            for i in 1..bp.len() {
                let dy = bp[i] - bp[i - 1];
                let s: f64 = rng.gen_range(0.0..1.0);
                let prev = *vals.last().unwrap();
                vals.push(prev + s * dy);
            }
            let map = PR1Map::new(bp, vals, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
                .unwrap();
            let a = rng.gen_range(-5.0..5.0);
            let b = rng.gen_range(-5.0..5.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (fl, fh) = (map.apply(lo), map.apply(hi));
            assert!(fh >= fl - 1e-12);
            assert!(fh - fl <= hi - lo + 1e-12);
        }
    }

    // closed-form soft-threshold moments as an independent oracle
    fn soft_moments_oracle(a: f64, tau: f64, t: f64) -> GaussMoments {
        let a1 = (t - a) / tau;
        let a2 = (-t - a) / tau;
        let e0_hi = normal_sf(a1);
        let e1_hi = normal_pdf(a1);
        let e2_hi = e0_hi + a1 * normal_pdf(a1);
        let e0_lo = normal_cdf(a2);
        let e1_lo = -normal_pdf(a2);
        let e2_lo = e0_lo - a2 * normal_pdf(a2);
        // upper region: A = (a - t) + tau g ; lower: A = (a + t) + tau g
        let m1 = (a - t) * e0_hi + tau * e1_hi + (a + t) * e0_lo + tau * e1_lo;
        let m2 = (a - t) * (a - t) * e0_hi
            + 2.0 * (a - t) * tau * e1_hi
            + tau * tau * e2_hi
            + (a + t) * (a + t) * e0_lo
            + 2.0 * (a + t) * tau * e1_lo
            + tau * tau * e2_lo;
        let cross = (a - t) * e1_hi + tau * e2_hi + (a + t) * e1_lo + tau * e2_lo;
        GaussMoments { m1, m2, cross }
    }

    #[test]
    fn gauss_moments_match_soft_threshold_oracle() {
        for &(a, tau, t) in &[(0.0, 1.0, 0.5), (1.3, 0.7, 0.4), (-2.0, 2.5, 1.0)] {
            let map = PR1Map::soft_threshold(t);
            let got = map.gauss_moments(a, tau);
            let want = soft_moments_oracle(a, tau, t);
            assert!((got.m1 - want.m1).abs() < 1e-13, "m1 a={a}");
            assert!((got.m2 - want.m2).abs() < 1e-13, "m2 a={a}");
            assert!((got.cross - want.cross).abs() < 1e-13, "cross a={a}");
        }
    }

    #[test]
    fn gauss_moments_identity_and_constant() {
        let id = PR1Map::identity();
        let g = id.gauss_moments(1.5, 2.0);
        assert!((g.m1 - 1.5).abs() < 1e-12);
        assert!((g.m2 - (1.5 * 1.5 + 4.0)).abs() < 1e-12);
        assert!((g.cross - 2.0).abs() < 1e-12);
        let c = PR1Map::constant(3.0);
        let g = c.gauss_moments(-0.7, 1.3);
        assert!((g.m1 - 3.0).abs() < 1e-12);
        assert!((g.m2 - 9.0).abs() < 1e-12);
        assert!(g.cross.abs() < 1e-12);
    }

    #[test]
    fn prox_scaled_is_consistent_with_subgradient_graph() {
        // prox of s*rho where prox[rho] = soft threshold at t is soft
        // thresholding at s*t
        let map = PR1Map::soft_threshold(0.8);
        for &s in &[0.25, 1.0, 3.0] {
            for &v in &[-5.0, -1.0, -0.5, 0.0, 0.3, 2.0, 10.0] {
                let got = map.prox_scaled(v, s);
                let t = 0.8 * s;
                let want = (v.abs() - t).max(0.0) * v.signum();
                assert!((got - want).abs() < 1e-12, "s={s} v={v}: {got} vs {want}");
            }
            let scaled = map.scaled_penalty_map(s);
            assert!(scaled.validate().is_empty());
            for &v in &[-2.0, 0.1, 4.0] {
                assert!((scaled.apply(v) - map.prox_scaled(v, s)).abs() < 1e-12);
            }
        }
        // quadratic: prox[rho] = y/2 means rho = x^2/2... prox[s rho](v) = v/(1+s)
        let lin = PR1Map::linear(0.5, 0.0);
        for &s in &[0.5, 2.0] {
            for &v in &[-3.0, 1.0, 7.0] {
                assert!((lin.prox_scaled(v, s) - v / (1.0 + s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn project_feasible_point_is_unchanged() {
        let nodes = [0.0, 1.0, 2.0, 3.0, 4.0];
        let targets = [0.0, 0.5, 0.7, 1.5, 1.5];
        let w = [1.0; 5];
        let map = project_pr1(&nodes, &targets, &w).unwrap();
        for (v, t) in map.values().iter().zip(&targets) {
            assert!((v - t).abs() <= 1e-9);
        }
        assert!(map.validate().is_empty());
    }

    #[test]
    fn project_antitonic_gives_weighted_mean() {
        let nodes = [0.0, 1.0, 2.0];
        let targets = [3.0, 2.0, 1.0];
        let w = [1.0; 3];
        let map = project_pr1(&nodes, &targets, &w).unwrap();
        for v in map.values() {
            assert!((v - 2.0).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn project_matches_brute_force_on_five_nodes() {
        let mut rng = crate::rng::stream_rng(47, 0);
        for _ in 0..3 {
            let nodes = [0.0, 0.7, 1.3, 2.4, 3.0];
            let targets: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let w: Vec<f64> = (0..5).map(|_| rng.gen_range(0.2..2.0)).collect();
            let map = project_pr1(&nodes, &targets, &w).unwrap();
            let obj = |x: &[f64]| -> f64 {
                x.iter()
                    .zip(&targets)
                    .zip(&w)
                    .map(|((xi, ti), wi)| wi * (xi - ti) * (xi - ti))
                    .sum()
            };
            let got = obj(map.values());

            // dense search over (x0, slopes in [0,1]) refined to step 1e-3
            let gaps: Vec<f64> = (0..4).map(|i| nodes[i + 1] - nodes[i]).collect();
            let mut center = [0.0f64; 5]; // x0 plus 4 slope fractions
            center[0] = targets[0];
            let mut width_x = 3.0;
            let mut best = f64::INFINITY;
            let mut best_point = center;
            while width_x > 1e-3 {
                let steps = 10i64;
                for i0 in -steps..=steps {
                    let x0 = center[0] + width_x * i0 as f64 / steps as f64;
                    // coordinate refinement over slope fractions
                    let mut fr = [
                        center[1].clamp(0.0, 1.0),
                        center[2].clamp(0.0, 1.0),
                        center[3].clamp(0.0, 1.0),
                        center[4].clamp(0.0, 1.0),
                    ];
                    for _ in 0..3 {
                        for k in 0..4 {
                            let mut best_f = fr[k];
                            let mut best_o = f64::INFINITY;
                            for j in 0..=20 {
                                let cand = j as f64 / 20.0;
                                fr[k] = cand;
                                let x = expand(x0, &fr, &gaps);
                                let o = obj(&x);
                                if o < best_o {
                                    best_o = o;
                                    best_f = cand;
                                }
                            }
                            fr[k] = best_f;
                        }
                    }
                    let x = expand(x0, &fr, &gaps);
                    let o = obj(&x);
                    if o < best {
                        best = o;
                        best_point = [x0, fr[0], fr[1], fr[2], fr[3]];
                    }
                }
                center = best_point;
                width_x /= 5.0;
            }
            assert!(
                got <= best + 1e-4,
                "projection {got} worse than brute force {best}"
            );
        }
    }

    fn expand(x0: f64, fr: &[f64; 4], gaps: &[f64]) -> [f64; 5] {
        let mut x = [x0; 5];
        for i in 0..4 {
            x[i + 1] = x[i] + fr[i] * gaps[i];
        }
        x
    }

    #[test]
    fn from_grid_clipped_repairs_rounding() {
        // slope 1 + 1e-10 would violate Lipschitz without the repair
        let ys = [0.0, 1.0, 2.0];
        let xs = [0.0, 1.0 + 1e-10, 1.0 + 1e-10];
        let map = PR1Map::from_grid_clipped(&ys, &xs).unwrap();
        assert!(map.validate().is_empty());
        assert!((map.values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fitted_threshold_of_soft_map() {
        let map = PR1Map::soft_threshold(0.7);
        assert!((map.fitted_threshold(1e-12) - 0.7).abs() < 1e-9);
        let id = PR1Map::identity();
        assert!(id.fitted_threshold(1e-12) < 1e-9);
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let ys = [1.0, 1.0, 1.0];
        let xs = [0.5, 0.5, 0.5];
        assert!(matches!(
            PR1Map::from_grid_clipped(&ys, &xs),
            Err(ScalarRepError::DegenerateGrid)
        ));
    }

    #[test]
    fn separable_maps_do_not_depend_on_the_measure() {
        use crate::penalties::{PenaltySpec, ScalarPenalty};
        let pens = [
            PenaltySpec::abs_weight(0.4).unwrap(),
            PenaltySpec::separable(ScalarPenalty::Quadratic { c: 0.7 }).unwrap(),
            PenaltySpec::separable(ScalarPenalty::TabulatedProx {
                map: PR1Map::soft_threshold(0.9),
            })
            .unwrap()
            .scaled(1.5),
        ];
        let g1 = gaussian_convolve(&EmpiricalMeasure1D::dirac(0.0), 1.0, 64).unwrap();
        let g2 = gaussian_convolve(
            &EmpiricalMeasure1D::new(vec![-2.0, 3.0], vec![0.5, 0.5]).unwrap(),
            0.5,
            64,
        )
        .unwrap();
        for pen in &pens {
            let a = effective_scalar_rep(pen, &g1, 1e-8).unwrap();
            let b = effective_scalar_rep(pen, &g2, 1e-8).unwrap();
            for k in 0..=40 {
                let y = -3.0 + 6.0 * k as f64 / 40.0;
                assert!((a.apply(y) - b.apply(y)).abs() <= 2e-8, "{pen:?} at {y}");
            }
        }
    }

    #[test]
    fn grid_convolution_feeds_projection() {
        // posterior-mean-like smooth targets are projected without change
        let mu = EmpiricalMeasure1D::dirac(0.0);
        let grid = gaussian_convolve(&mu, 1.0, 64).unwrap();
        let targets: Vec<f64> = grid.grid().iter().map(|y| 0.5 * y).collect();
        let w = vec![1.0 / 64.0; 64];
        let map = project_pr1(grid.grid(), &targets, &w).unwrap();
        for (v, t) in map.values().iter().zip(&targets) {
            assert!((v - t).abs() < 1e-8);
        }
    }
}
