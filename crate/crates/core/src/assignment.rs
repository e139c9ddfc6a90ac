//! Exact solution of the square assignment problem in O(n^3) by shortest
//! augmenting paths with potentials.

/// Minimize sum_i cost(i, sigma(i)) over permutations sigma of 0..n.
/// Returns (sigma, total cost). Costs must be finite.
pub fn solve_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> (Vec<usize>, f64) {
    assert!(n >= 1);
    let inf = f64::INFINITY;
    // Virtual row/column n simplifies the augmenting loop.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row: Vec<usize> = vec![n; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 0..n {
        matched_row[n] = i;
        let mut j0 = n;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = n;
            for j in 0..n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            assert!(delta.is_finite(), "assignment costs must be finite");
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == n {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == n {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for j in 0..n {
        if matched_row[j] < n {
            assign[matched_row[j]] = j;
        }
    }
    let total = (0..n).map(|i| cost(i, assign[i])).sum();
    (assign, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute_force(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = (0..n).map(|i| cost(i, p[i])).sum();
            if c < best {
                best = c;
            }
        });
        best
    }

    fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            visit(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, visit);
            p.swap(k, i);
        }
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = crate::rng::stream_rng(11, 0);
        for trial in 0..40 {
            let n = 2 + trial % 6;
            let m: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let f = |i: usize, j: usize| m[i][j];
            let (assign, total) = solve_assignment(n, f);
            let mut seen = assign.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>(), "must be a permutation");
            let best = brute_force(n, &f);
            assert!((total - best).abs() < 1e-10, "n={n}: {total} vs {best}");
        }
    }

    #[test]
    fn single_element() {
        let (assign, total) = solve_assignment(1, |_, _| 3.5);
        assert_eq!(assign, vec![0]);
        assert!((total - 3.5).abs() < 1e-15);
    }
}
