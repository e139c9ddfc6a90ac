//! Finite checkers for cyclic-monotonicity structure: support monotonicity
//! of one discrete coupling, and a necessary-condition audit of joint cyclic
//! monotonicity for a finite family via exact assignment.
//!
//! The audit is NOT a decision procedure: the defining property quantifies
//! over all cycle lengths and all joint realizations, while this module
//! checks cycles up to a small length against explicitly constructed
//! permutation matchings. A reported violation is conclusive; a pass is
//! evidence at the audited depth only.

use serde::Serialize;
use thiserror::Error;

use crate::assignment::solve_assignment;
use crate::measures::JointSample2D;
use crate::scalar_rep::validate_pr1;

/// Atom cap per coupling for the assignment-based audit.
pub const JOINT_CM_ATOM_CAP: usize = 256;
/// Cap on audited tuples.
pub const JOINT_CM_TUPLE_CAP: usize = 20_000;
/// Slack for the audit inequalities.
pub const JOINT_CM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("coupling has {n} atoms, audit capped at {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("audit would enumerate {tuples} tuples, capped at {cap}")]
    TooManyTuples { tuples: usize, cap: usize },
    #[error("couplings must share one atom count, found {a} and {b}; resample first")]
    MixedSizes { a: usize, b: usize },
    #[error("max_cycle must lie in 2..=4, got {0}")]
    BadCycleCap(usize),
    #[error("coupling must be equal-weight")]
    UnequalWeights,
    #[error("coupling atom {0} is not finite")]
    NonFinite(f64),
}

/// Equal-weight sample of (x, g) pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteCoupling {
    pairs: Vec<(f64, f64)>,
}

impl DiscreteCoupling {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self, AdaptError> {
        if pairs.is_empty() {
            return Err(AdaptError::TooLarge { n: 0, cap: 0 });
        }
        for &(x, g) in &pairs {
            if !x.is_finite() {
                return Err(AdaptError::NonFinite(x));
            }
            if !g.is_finite() {
                return Err(AdaptError::NonFinite(g));
            }
        }
        Ok(DiscreteCoupling { pairs })
    }

    pub fn from_joint(joint: &JointSample2D) -> Result<Self, AdaptError> {
        if !joint.is_equal_weight() {
            return Err(AdaptError::UnequalWeights);
        }
        Self::new(joint.pairs().to_vec())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// (1/m) sum x_a g_a.
    pub fn self_correlation(&self) -> f64 {
        self.pairs.iter().map(|(x, g)| x * g).sum::<f64>() / self.pairs.len() as f64
    }
}

/// A pair witnessing x_i < x_j with g_i > g_j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityWitness {
    pub low: (f64, f64),
    pub high: (f64, f64),
}

/// True iff no pair of support points has opposite orderings in the two
/// coordinates. Ties in x may carry any g order. Inversions within
/// 1e-9 (1 + max |g|) are treated as rounding of a tie, not a violation;
/// pairs computed through y - A(y) pipelines carry that much noise on
/// segments where g is constant.
pub fn support_cyclically_monotone(
    coupling: &DiscreteCoupling,
) -> Result<(), MonotonicityWitness> {
    let mut pts = coupling.pairs().to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let gmax = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let slack = 1e-9 * (1.0 + gmax);
    let mut i = 0;
    let mut best_prev: Option<(f64, f64)> = None;
    while i < pts.len() {
        // group of equal x
        let mut j = i;
        while j < pts.len() && pts[j].0 == pts[i].0 {
            j += 1;
        }
        if let Some(prev) = best_prev {
            for &pt in &pts[i..j] {
                if pt.1 < prev.1 - slack {
                    return Err(MonotonicityWitness {
                        low: prev,
                        high: pt,
                    });
                }
            }
        }
        let group_max = pts[i..j]
            .iter()
            .cloned()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if best_prev.map_or(true, |p| group_max.1 > p.1) {
            best_prev = Some(group_max);
        }
        i = j;
    }
    Ok(())
}

/// Audit record for one ordered tuple and the single-shift cycle.
#[derive(Debug, Clone, Serialize)]
pub struct TupleAudit {
    /// indices into the family, in cycle order
    pub indices: Vec<usize>,
    /// sum of E[X_j G_j]
    pub lhs: f64,
    /// best explicitly constructed joint realization of the cyclic cross sum
    pub constructed: f64,
    /// sum of pairwise assignment optima (upper bound on the supremum)
    pub pairwise_upper: f64,
    /// lhs - constructed; negative means a conclusive violation
    pub margin: f64,
    /// lhs >= pairwise_upper - tol: pass certified at any depth
    pub certified: bool,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JointCmReport {
    /// couplings failing the individual support-monotonicity condition
    pub marginal_failures: Vec<(usize, MonotonicityWitness)>,
    pub tuples: Vec<TupleAudit>,
    pub pass: bool,
}

fn max_product_assignment(xs: &[f64], gs: &[f64]) -> (Vec<usize>, f64) {
    let n = xs.len();
    let (assign, neg) = solve_assignment(n, |i, j| -(xs[i] * gs[j]));
    (assign, -neg)
}

/// Necessary-condition audit of joint cyclic monotonicity. Every coupling
/// must individually be support-monotone; then for each ordered tuple of
/// distinct couplings up to `max_cycle` and the one-step cyclic shift, the
/// self-correlation sum must dominate every constructed permutation
/// matching of the cyclic cross sum.
pub fn joint_cm_check(
    family: &[DiscreteCoupling],
    max_cycle: usize,
) -> Result<JointCmReport, AdaptError> {
    if !(2..=4).contains(&max_cycle) {
        return Err(AdaptError::BadCycleCap(max_cycle));
    }
    let m = family.first().map_or(0, |c| c.len());
    for c in family {
        if c.len() != m {
            return Err(AdaptError::MixedSizes { a: m, b: c.len() });
        }
        if c.len() > JOINT_CM_ATOM_CAP {
            return Err(AdaptError::TooLarge {
                n: c.len(),
                cap: JOINT_CM_ATOM_CAP,
            });
        }
    }

    let mut marginal_failures = Vec::new();
    for (i, c) in family.iter().enumerate() {
        if let Err(w) = support_cyclically_monotone(c) {
            marginal_failures.push((i, w));
        }
    }

    // ordered tuples of distinct couplings, first element fixed smallest so
    // rotations are not re-audited
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let k_max = max_cycle.min(family.len());
    for k in 2..=k_max {
        enumerate_cycles(family.len(), k, &mut tuples);
        if tuples.len() > JOINT_CM_TUPLE_CAP {
            return Err(AdaptError::TooManyTuples {
                tuples: tuples.len(),
                cap: JOINT_CM_TUPLE_CAP,
            });
        }
    }

    let mf = m as f64;
    let audits: Vec<TupleAudit> = tuples
        .iter()
        .map(|tuple| {
            let k = tuple.len();
            let lhs: f64 = tuple
                .iter()
                .map(|&i| family[i].self_correlation())
                .sum();

            // pairwise upper bound: each adjacent term maximized separately
            let mut pairwise_upper = 0.0;
            for j in 0..k {
                let a = &family[tuple[j]];
                let b = &family[tuple[(j + 1) % k]];
                let xs: Vec<f64> = a.pairs().iter().map(|p| p.0).collect();
                let gs: Vec<f64> = b.pairs().iter().map(|p| p.1).collect();
                let (_, v) = max_product_assignment(&xs, &gs);
                pairwise_upper += v / mf;
            }

            let constructed = if k == 2 {
                // a 2-cycle is one assignment problem on the combined cost,
                // so the constructed value is the exact supremum
                let a = family[tuple[0]].pairs();
                let b = family[tuple[1]].pairs();
                let (_, v) = solve_assignment(m, |omega, bi| {
                    -(a[omega].0 * b[bi].1 + b[bi].0 * a[omega].1)
                });
                -v / mf
            } else {
                // greedy chain: outcome omega carries atom beta_j(omega) of
                // coupling j; beta_1 = id, each next beta maximizes its
                // adjacent term by exact assignment, the closing term uses
                // beta_1
                let mut total = 0.0;
                let mut x_at_outcome: Vec<f64> =
                    family[tuple[0]].pairs().iter().map(|p| p.0).collect();
                for j in 0..k {
                    let next = &family[tuple[(j + 1) % k]];
                    if j + 1 < k {
                        let gs: Vec<f64> = next.pairs().iter().map(|p| p.1).collect();
                        let (assign, v) = max_product_assignment(&x_at_outcome, &gs);
                        total += v / mf;
                        x_at_outcome = assign.iter().map(|&b| next.pairs()[b].0).collect();
                    } else {
                        // closing term against beta_1 = identity
                        let first = &family[tuple[0]];
                        let term: f64 = x_at_outcome
                            .iter()
                            .enumerate()
                            .map(|(omega, &xv)| xv * first.pairs()[omega].1)
                            .sum();
                        total += term / mf;
                    }
                }
                total
            };

            let margin = lhs - constructed;
            TupleAudit {
                indices: tuple.clone(),
                lhs,
                constructed,
                pairwise_upper,
                margin,
                certified: lhs >= pairwise_upper - JOINT_CM_TOL,
                violation: margin < -JOINT_CM_TOL,
            }
        })
        .collect();

    let pass = marginal_failures.is_empty() && audits.iter().all(|a| !a.violation);
    Ok(JointCmReport {
        marginal_failures,
        tuples: audits,
        pass,
    })
}

fn enumerate_cycles(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    // tuples of distinct indices with the smallest index first (rotation
    // canonical form)
    let mut stack = vec![Vec::<usize>::new()];
    while let Some(cur) = stack.pop() {
        if cur.len() == k {
            out.push(cur);
            continue;
        }
        for i in 0..n {
            if cur.contains(&i) {
                continue;
            }
            if !cur.is_empty() && i <= cur[0] {
                continue;
            }
            if cur.is_empty() && n - i < k {
                continue;
            }
            let mut next = cur.clone();
            next.push(i);
            stack.push(next);
        }
    }
}

/// True iff the piecewise interpolant of the samples is a monotone
/// 1-Lipschitz map. Sample inputs must be distinct.
pub fn is_pr1(samples: &[(f64, f64)]) -> bool {
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let ys: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    validate_pr1(&ys, &vs, 0.0, 0.0).is_empty()
}
