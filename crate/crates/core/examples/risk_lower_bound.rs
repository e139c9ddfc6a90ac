//! Optimal separable risk, the Bayes estimator, and the critical noise
//! level that sets the linear-model risk lower bound.

use symprox::linear_model::{solve_fixed_point, LinearConfig};
use symprox::measures::{gaussian_convolve, EmpiricalMeasure1D};
use symprox::penalties::PenaltySpec;
use symprox::risk::{bayes_estimator, optimal_separable_risk, tau_sep};
use symprox::sequence_model::{three_point_prior, PriorSource, ThetaSpec};

fn main() {
    // conjugate sanity point: N(0,1) prior at tau = 1 has risk 1/2
    let gauss = gaussian_convolve(&EmpiricalMeasure1D::dirac(0.0), 1.0, 2048)
        .unwrap()
        .to_measure();
    let r = optimal_separable_risk(&gauss, 1.0, 1024).unwrap();
    println!(
        "N(0,1) prior, tau = 1: r_sep = {:.4} (conjugate value 0.5), bayes map within the class: {}",
        r.r_sep, r.bayes_in_pr1
    );

    let sparse = three_point_prior(1.0, 0.05);
    for tau in [0.25, 0.5, 1.0] {
        let r = optimal_separable_risk(&sparse, tau, 1024).unwrap();
        println!(
            "sparse prior, tau = {tau}: r_sep = {:.5}, bayes risk = {:.5}, bayes in class: {}",
            r.r_sep, r.bayes_risk, r.bayes_in_pr1
        );
    }

    // a prior whose Bayes estimator is steeper than any scalar prox
    let spread = EmpiricalMeasure1D::new(vec![-3.0, 3.0], vec![0.5, 0.5]).unwrap();
    let map = bayes_estimator(&spread, 1.0, 512).unwrap();
    println!(
        "\ntwo-point prior at +-3, tau = 1: max Bayes slope = {:.2} (outside the prox class)",
        map.max_slope()
    );

    // the critical level lower-bounds every achievable fixed-point risk
    let (sigma, delta) = (0.25, 0.64);
    let t = tau_sep(&sparse, sigma, delta).unwrap();
    let bound = delta * (t * t - sigma * sigma);
    println!("\ntau_sep = {t:.5} -> risk lower bound {bound:.5}");
    for xi in [0.1, 0.3, 0.5] {
        let cfg = LinearConfig {
            theta: ThetaSpec::Quantiles {
                prior: sparse.clone(),
                p: 500,
            },
            delta,
            sigma_star: sigma,
            penalty: PenaltySpec::abs_weight(xi).unwrap(),
            grid_size: 1024,
            trials: 1,
            seed: 0,
            prox_tol: 1e-8,
            fit_tol: 1e-7,
            subsample: 512,
            prior_source: PriorSource::Population,
        };
        let sol = solve_fixed_point(&cfg).unwrap();
        println!(
            "  lasso xi = {xi}: predicted loss {:.5} (>= bound: {})",
            sol.predicted_mse,
            sol.predicted_mse >= bound
        );
    }
}
