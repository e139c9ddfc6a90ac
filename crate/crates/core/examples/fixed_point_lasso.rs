//! Solve the two-equation state-evolution fixed point for the LASSO and for
//! the unpenalized estimator, and show the closed-form check.

use symprox::linear_model::{solve_fixed_point, LinearConfig};
use symprox::penalties::PenaltySpec;
use symprox::sequence_model::{three_point_prior, PriorSource, ThetaSpec};

fn config(xi: f64, delta: f64, sigma: f64) -> LinearConfig {
    LinearConfig {
        theta: ThetaSpec::Quantiles {
            prior: three_point_prior(1.0, 0.05),
            p: 1000,
        },
        delta,
        sigma_star: sigma,
        penalty: PenaltySpec::abs_weight(xi).unwrap(),
        grid_size: 2048,
        trials: 1,
        seed: 0,
        prox_tol: 1e-8,
        fit_tol: 1e-7,
        subsample: 512,
        prior_source: PriorSource::Population,
    }
}

fn main() {
    let sol = solve_fixed_point(&config(0.3, 0.64, 0.25)).unwrap();
    println!("LASSO (xi = 0.3, delta = 0.64, sigma* = 0.25):");
    println!("  tau* = {:.6}, lambda* = {:.6}", sol.tau_star, sol.lambda_star);
    println!("  effective threshold lambda* xi = {:.6}", sol.lambda_star * 0.3);
    println!("  predicted per-coordinate loss = {:.6}", sol.predicted_mse);
    println!("  gordon value = {:.6}", sol.gordon_value.unwrap());
    println!(
        "  equation residuals: {:.2e} (noise), {:.2e} (lambda)\n",
        sol.residual_mse, sol.residual_lambda
    );

    let sol = solve_fixed_point(&config(0.0, 2.0, 0.5)).unwrap();
    let closed = 0.5f64 * 0.5 * 2.0 / (2.0 - 1.0);
    println!("unpenalized, delta = 2, sigma* = 0.5:");
    println!(
        "  tau*^2 = {:.8} vs closed form sigma^2 delta/(delta-1) = {closed:.8}",
        sol.tau_star * sol.tau_star
    );

    match solve_fixed_point(&config(0.0, 0.5, 0.5)) {
        Err(e) => println!("\nunpenalized at delta = 0.5: {e}"),
        Ok(_) => unreachable!("no solution exists below delta = 1 without a penalty"),
    }
}
