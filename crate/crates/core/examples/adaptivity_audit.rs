//! Cyclic-monotonicity audits: which families of couplings can a symmetric
//! penalty implement?

use symprox::adaptivity::{is_pr1, joint_cm_check, support_cyclically_monotone, DiscreteCoupling};
use symprox::measures::{gaussian_convolve, EmpiricalMeasure1D};
use symprox::risk::bayes_estimator;
use symprox::scalar_rep::PR1Map;

fn residual_coupling(map: &PR1Map, ys: &[f64]) -> DiscreteCoupling {
    DiscreteCoupling::new(ys.iter().map(|&y| (map.apply(y), y - map.apply(y))).collect()).unwrap()
}

fn main() {
    let grid: Vec<f64> = (0..64).map(|i| -3.0 + 6.0 * i as f64 / 63.0).collect();

    // one scalar prox across several measurement laws: implementable
    let soft = PR1Map::soft_threshold(0.6);
    let family: Vec<DiscreteCoupling> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&tau| {
            let g = gaussian_convolve(&EmpiricalMeasure1D::dirac(0.0), tau, 64).unwrap();
            residual_coupling(&soft, g.grid())
        })
        .collect();
    let report = joint_cm_check(&family, 3).unwrap();
    println!(
        "single soft-threshold family: pass = {}, {} tuples audited, worst margin {:.2e}",
        report.pass,
        report.tuples.len(),
        report
            .tuples
            .iter()
            .map(|t| t.margin)
            .fold(f64::INFINITY, f64::min)
    );

    // two different thresholds: a genuinely different adaptive rule, the
    // joint audit reports violations
    let family = vec![
        residual_coupling(&PR1Map::soft_threshold(0.2), &grid),
        residual_coupling(&PR1Map::soft_threshold(1.2), &grid),
    ];
    let report = joint_cm_check(&family, 2).unwrap();
    println!(
        "two-threshold family: pass = {}, first margin {:.4}",
        report.pass, report.tuples[0].margin
    );

    // the full empirical-Bayes rule is not implementable: a wide two-point
    // prior makes the Bayes map steeper than any scalar prox
    let spread = EmpiricalMeasure1D::new(vec![-3.0, 3.0], vec![0.5, 0.5]).unwrap();
    let bayes = bayes_estimator(&spread, 1.0, 64).unwrap();
    let pairs: Vec<(f64, f64)> = bayes
        .nodes
        .iter()
        .zip(&bayes.values)
        .map(|(&y, &b)| (b, y - b))
        .collect();
    let coupling = DiscreteCoupling::new(pairs).unwrap();
    match support_cyclically_monotone(&coupling) {
        Err(w) => println!(
            "bayes residual coupling: support monotonicity fails, witness ({:.3}, {:.3}) vs ({:.3}, {:.3})",
            w.low.0, w.low.1, w.high.0, w.high.1
        ),
        Ok(()) => unreachable!("the wide two-point Bayes map is not 1-Lipschitz"),
    }
    let samples: Vec<(f64, f64)> = bayes.nodes.iter().cloned().zip(bayes.values.clone()).collect();
    println!("bayes map passes the scalar-prox class test: {}", is_pr1(&samples));
}
