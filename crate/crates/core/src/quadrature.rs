//! Gauss-Hermite quadrature for expectations of smooth functions of a
//! standard Gaussian.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss-Hermite rule for the weight
/// function e^{-x^2}: sum w_i f(x_i) ~ int e^{-x^2} f(x) dx.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Build the rule by Newton iteration on the orthonormal Hermite
    /// recurrence. Stable for n up to a few hundred.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = 1.0 / PI.powf(0.25);
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 * (1.0 + z.abs()) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        // store ascending
        nodes.reverse();
        weights.reverse();
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// E[f(G)] for G ~ N(0,1).
    pub fn expect_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let acc: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(std::f64::consts::SQRT_2 * x))
            .sum();
        acc / PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_exact() {
        for &n in &[21usize, 61, 127] {
            let q = GaussHermite::new(n);
            assert!((q.expect_normal(|_| 1.0) - 1.0).abs() < 1e-13, "n={n}");
            assert!(q.expect_normal(|g| g).abs() < 1e-13);
            assert!((q.expect_normal(|g| g * g) - 1.0).abs() < 1e-12);
            assert!((q.expect_normal(|g| g.powi(4)) - 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn smooth_expectation() {
        // E[cos(G)] = exp(-1/2)
        let q = GaussHermite::new(31);
        assert!((q.expect_normal(|g| g.cos()) - (-0.5f64).exp()).abs() < 1e-13);
    }
}
