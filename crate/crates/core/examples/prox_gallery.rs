//! The penalty families and their proximal operators on one input, with
//! KKT residuals certifying each output.

use symprox::penalties::{PenaltySpec, ScalarPenalty, WeightProfile};
use symprox::scalar_rep::PR1Map;

fn main() {
    let y = vec![2.0, -1.2, 0.6, -0.2, 0.05];
    let profile = WeightProfile::new(vec![(0.333, 2.0), (0.667, 1.0), (1.0, 0.5)]).unwrap();
    let penalties: Vec<(&str, PenaltySpec)> = vec![
        ("separable |.| (xi = 0.5)", PenaltySpec::abs_weight(0.5).unwrap()),
        (
            "separable quadratic (c = 1)",
            PenaltySpec::separable(ScalarPenalty::Quadratic { c: 1.0 }).unwrap(),
        ),
        (
            "tabulated prox (soft at 0.7)",
            PenaltySpec::separable(ScalarPenalty::TabulatedProx {
                map: PR1Map::soft_threshold(0.7),
            })
            .unwrap(),
        ),
        ("slope (2,1,0.5 thirds)", PenaltySpec::slope(profile.clone()).unwrap()),
        ("smoothed owl (same profile)", PenaltySpec::smoothed_owl(profile).unwrap()),
        ("l2 power (alpha = 4)", PenaltySpec::l2_power(4.0).unwrap()),
        ("l1 power (alpha = 2)", PenaltySpec::l1_power(2.0).unwrap()),
    ];

    println!("y = {y:?}\n");
    for (name, pen) in &penalties {
        let x = pen.prox(&y, 1e-10).unwrap();
        let value = pen
            .evaluate(&x)
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|_| "unavailable".into());
        let kkt = pen
            .kkt_residual(&y, &x, 200, 7)
            .map(|r| format!("{r:.2e}"))
            .unwrap_or_else(|_| "needs value".into());
        println!("{name}");
        println!("  prox  = {:?}", x.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
        println!("  value at prox = {value}, kkt residual = {kkt}\n");
    }
}
