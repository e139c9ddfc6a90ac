//! Effective scalar maps of the smoothed-OWL penalty at three noise
//! levels, written as theory-curve CSVs.
//!
//! Usage: scalar_rep_curves [grid_size] [out_dir]

use std::path::PathBuf;

use symprox::io::write_pr1_csv;
use symprox::measures::{gaussian_convolve, EmpiricalMeasure1D};
use symprox::penalties::PenaltySpec;
use symprox::scalar_rep::effective_scalar_rep;
use symprox::sequence_model::{figure_profile, three_point_prior, ThetaSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let grid_size: usize = args.first().map(|s| s.parse().unwrap()).unwrap_or(4096);
    let out = PathBuf::from(
        args.get(1)
            .cloned()
            .unwrap_or_else(|| "examples-output/scalar_rep_curves".into()),
    );
    std::fs::create_dir_all(&out).unwrap();

    let penalty = PenaltySpec::smoothed_owl(figure_profile().unwrap()).unwrap();
    let theta = ThetaSpec::Quantiles {
        prior: three_point_prior(1.0, 0.05),
        p: 1000,
    }
    .materialize();
    let mu = EmpiricalMeasure1D::from_vector(&theta).unwrap();

    for tau in [0.5, 1.0, 2.5] {
        let grid = gaussian_convolve(&mu, tau, grid_size).unwrap();
        let map = effective_scalar_rep(&penalty, &grid, 1e-8).unwrap();
        let path = out.join(format!("sowl_theory_tau{tau}.csv"));
        write_pr1_csv(&path, &map).unwrap();
        let probes = [-3.0, -1.0, 0.0, 0.5, 1.0, 3.0];
        let values: Vec<String> = probes
            .iter()
            .map(|&y| format!("A({y}) = {:.5}", map.apply(y)))
            .collect();
        println!("tau = {tau}: {}  -> {}", values.join(", "), path.display());
    }
}
