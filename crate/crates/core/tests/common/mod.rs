//! Shared oracles for the integration suites. Everything here is an
//! independent computation path: closed-form Gaussian integrals, dense grid
//! searches, Dykstra projections, and brute-force enumeration.

use symprox::measures::EmpiricalMeasure1D;
use symprox::normal::{normal_cdf, normal_pdf, normal_sf};

/// Closed-form soft-threshold state evolution: mse and cross of
/// eta_soft(theta + tau g; t) under a discrete prior.
pub fn soft_se_oracle(mu: &EmpiricalMeasure1D, tau: f64, t: f64) -> (f64, f64) {
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
        mse += w
            * (t * t * up0 - 2.0 * t * tau * up1
                + tau * tau * up2
                + t * t * lo0
                + 2.0 * t * tau * lo1
                + tau * tau * lo2
                + a * a * (1.0 - up0 - lo0));
        cross += w * tau * (up0 + lo0);
    }
    (mse, cross)
}

/// Soft-threshold risk E[(eta_soft(theta + tau g; t) - theta)^2].
pub fn soft_risk_oracle(mu: &EmpiricalMeasure1D, tau: f64, t: f64) -> f64 {
    soft_se_oracle(mu, tau, t).0
}

/// Independent scalar solver for the LASSO fixed point: the same two
/// equations, but driven entirely by the closed-form integrals above.
/// Returns (tau_star, lambda_star).
pub fn lasso_fixed_point_oracle(
    mu: &EmpiricalMeasure1D,
    delta: f64,
    sigma: f64,
    xi: f64,
) -> (f64, f64) {
    let sigma2 = sigma * sigma;
    let solve_lambda = |tau: f64| -> f64 {
        let h = |loglam: f64| {
            let lam = loglam.exp();
            let (_, cross) = soft_se_oracle(mu, tau, lam * xi);
            lam * (1.0 - cross / (delta * tau)) - delta
        };
        let mut lo = -12.0;
        let mut hi = 12.0;
        assert!(h(lo) < 0.0 && h(hi) > 0.0, "oracle bracket failed");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    let mut tau2 = sigma2 + mu.second_moment() / delta;
    for _ in 0..2000 {
        let tau = tau2.sqrt();
        let lam = solve_lambda(tau);
        let (mse, _) = soft_se_oracle(mu, tau, lam * xi);
        let next = 0.5 * tau2 + 0.5 * (sigma2 + mse / delta);
        let done = (next - tau2).abs() <= 1e-12 * tau2;
        tau2 = next;
        if done {
            break;
        }
    }
    let tau = tau2.sqrt();
    (tau, solve_lambda(tau))
}

/// Dense multi-level grid search for argmin of a convex objective over a
/// box, refined until the step is at most `final_step`.
pub fn refine_grid_min(
    obj: &dyn Fn(&[f64]) -> f64,
    center: &[f64],
    half_width: f64,
    final_step: f64,
) -> Vec<f64> {
    let d = center.len();
    let steps_per_side = 10usize;
    let mut c = center.to_vec();
    let mut w = half_width;
    loop {
        let n_axis = 2 * steps_per_side + 1;
        let step = w / steps_per_side as f64;
        let mut idx = vec![0usize; d];
        let mut best = f64::INFINITY;
        let mut best_pt = c.clone();
        let mut point = vec![0.0; d];
        'outer: loop {
            for k in 0..d {
                point[k] = c[k] + (idx[k] as f64 - steps_per_side as f64) * step;
            }
            let v = obj(&point);
            if v < best {
                best = v;
                best_pt = point.clone();
            }
            // odometer
            for k in 0..d {
                idx[k] += 1;
                if idx[k] < n_axis {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        c = best_pt;
        if step <= final_step {
            return c;
        }
        // keep two grid cells of margin around the incumbent
        w = 2.0 * step;
    }
}

/// SLOPE prox oracle: project the shifted sorted magnitudes onto the
/// nonincreasing nonnegative cone by plain Euclidean Dykstra over the
/// pairwise half spaces, then restore signs and order.
pub fn dykstra_slope_prox(y: &[f64], lam: &[f64]) -> Vec<f64> {
    let p = y.len();
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| y[b].abs().partial_cmp(&y[a].abs()).unwrap());
    let v: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(r, &j)| y[j].abs() - lam[r])
        .collect();

    let mut x = v.clone();
    let mut corr = vec![0.0f64; p]; // p-1 order constraints plus the sign constraint
    let mut x_prev = x.clone();
    for sweep in 0..200_000 {
        for i in 0..p - 1 {
            // x_{i+1} - x_i <= 0, projection direction (1, -1)/2
            let c = corr[i];
            if c != 0.0 {
                x[i] -= c;
                x[i + 1] += c;
            }
            let viol = x[i + 1] - x[i];
            let lambda = (viol / 2.0).max(0.0);
            x[i] += lambda;
            x[i + 1] -= lambda;
            corr[i] = lambda;
        }
        {
            // -x_p <= 0
            let c = corr[p - 1];
            if c != 0.0 {
                x[p - 1] -= c;
            }
            let lambda = (-x[p - 1]).max(0.0);
            x[p - 1] += lambda;
            corr[p - 1] = lambda;
        }
        let mut maxviol = (-x[p - 1]).max(0.0);
        for i in 0..p - 1 {
            maxviol = maxviol.max(x[i + 1] - x[i]);
        }
        let moved = x
            .iter()
            .zip(&x_prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if sweep > 0 && maxviol <= 1e-12 && moved <= 1e-13 {
            break;
        }
        x_prev.copy_from_slice(&x);
    }
    let mut out = vec![0.0; p];
    for (r, &j) in idx.iter().enumerate() {
        let s = if y[j] > 0.0 {
            1.0
        } else if y[j] < 0.0 {
            -1.0
        } else {
            0.0
        };
        out[j] = s * x[r].max(0.0);
    }
    out
}

#[allow(dead_code)]
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

pub fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
