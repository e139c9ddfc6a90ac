//! Exact Wasserstein-2 distances: quantile coupling on the line, optimal
//! assignment in the plane.

use symprox::measures::{gaussian_convolve, w2_1d, w2_2d, EmpiricalMeasure1D, JointSample2D};

fn main() {
    let d0 = EmpiricalMeasure1D::dirac(0.0);
    let d1 = EmpiricalMeasure1D::dirac(1.0);
    println!("W2(delta_0, delta_1) = {}", w2_1d(&d0, &d1));

    let sparse = EmpiricalMeasure1D::new(vec![-1.0, 0.0, 1.0], vec![0.05, 0.9, 0.05]).unwrap();
    let blurred = gaussian_convolve(&sparse, 0.5, 1024).unwrap().to_measure();
    println!(
        "W2(sparse prior, sparse * N(0, 0.25)) = {:.6}",
        w2_1d(&sparse, &blurred)
    );
    println!(
        "second moment: prior {:.4}, convolution {:.4} (analytic {:.4})",
        sparse.second_moment(),
        blurred.second_moment(),
        sparse.second_moment() + 0.25
    );

    let a = JointSample2D::equal_weight(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
    let b = JointSample2D::equal_weight(vec![(2.0, 2.0), (3.0, 2.0), (2.0, 3.0)]).unwrap();
    println!("W2_2d(triangle, shifted triangle) = {}", w2_2d(&a, &b).unwrap());

    // distances between the empirical joints of two noisy linear maps
    let xs: Vec<f64> = (0..64).map(|i| -2.0 + 4.0 * i as f64 / 63.0).collect();
    let c1 = JointSample2D::equal_weight(xs.iter().map(|&x| (x, 0.5 * x)).collect()).unwrap();
    let c2 = JointSample2D::equal_weight(xs.iter().map(|&x| (x, 0.8 * x)).collect()).unwrap();
    println!("W2_2d(slope 0.5 graph, slope 0.8 graph) = {:.6}", w2_2d(&c1, &c2).unwrap());
}
