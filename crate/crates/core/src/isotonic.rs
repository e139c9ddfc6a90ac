//! Pool-adjacent-violators for order-constrained problems.

/// Best nonincreasing fit to `values` in least squares (equal weights),
/// by the stack-based pool-adjacent-violators pass.
pub fn pav_nonincreasing(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut sums: Vec<f64> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        sums.push(v);
        counts.push(1);
        // nonincreasing target: merge while the new block mean exceeds the previous
        while sums.len() > 1 {
            let k = sums.len();
            let mean_prev = sums[k - 2] / counts[k - 2] as f64;
            let mean_cur = sums[k - 1] / counts[k - 1] as f64;
            if mean_cur > mean_prev {
                let s = sums.pop().unwrap();
                let c = counts.pop().unwrap();
                *sums.last_mut().unwrap() += s;
                *counts.last_mut().unwrap() += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        out.extend(std::iter::repeat_n(mean, *c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn already_monotone_is_unchanged() {
        let v = [5.0, 3.0, 3.0, 1.0];
        assert_eq!(pav_nonincreasing(&v), v.to_vec());
    }

    #[test]
    fn increasing_input_pools_to_mean() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(pav_nonincreasing(&v), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn output_is_nonincreasing_and_preserves_mean() {
        let mut rng = crate::rng::stream_rng(5, 0);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let out = pav_nonincreasing(&v);
            for i in 1..out.len() {
                assert!(out[i] <= out[i - 1] + 1e-12);
            }
            let sv: f64 = v.iter().sum();
            let so: f64 = out.iter().sum();
            assert!((sv - so).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_quadratic_program_on_small_cases() {
        // brute force over block partitions at n = 5
        let mut rng = crate::rng::stream_rng(6, 0);
        for _ in 0..5 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let out = pav_nonincreasing(&v);
            let obj: f64 = v.iter().zip(&out).map(|(a, b)| (a - b) * (a - b)).sum();
            // compare against dense search over nonincreasing vectors on a grid
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let steps = 24;
            let grid: Vec<f64> = (0..=steps)
                .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
                .collect();
            let mut best = f64::INFINITY;
            for &a in &grid {
                for &b in grid.iter().filter(|&&b| b <= a) {
                    for &c in grid.iter().filter(|&&c| c <= b) {
                        for &d in grid.iter().filter(|&&d| d <= c) {
                            for &e in grid.iter().filter(|&&e| e <= d) {
                                let x = [a, b, c, d, e];
                                let o: f64 = v
                                    .iter()
                                    .zip(&x)
                                    .map(|(p, q)| (p - q) * (p - q))
                                    .sum();
                                if o < best {
                                    best = o;
                                }
                            }
                        }
                    }
                }
            }
            assert!(obj <= best + 1e-6, "pav {obj} vs grid {best}");
        }
    }
}
