//! Independent reference implementations used by the integration tests.
//!
//! Everything here is deliberately naive: exhaustive enumeration and grid
//! search, sharing no code with the library beyond plain data types.

#![allow(dead_code)]

/// All `k`-subsets of `0..m` in lexicographic order.
pub fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Subset of size `k` maximizing `sum scores`; among sums within `tol` of
/// the best, the lexicographically smallest sorted subset wins.
pub fn brute_force_top(scores: &[f64], k: usize, tol: f64) -> Vec<usize> {
    let all = subsets(scores.len(), k);
    let sum = |s: &[usize]| s.iter().map(|&i| scores[i]).sum::<f64>();
    let best = all.iter().map(|s| sum(s)).fold(f64::NEG_INFINITY, f64::max);
    all.into_iter()
        .find(|s| sum(s) >= best - tol)
        .expect("at least one subset")
}

/// Largest achievable value of `reward(S)` over all `k`-subsets.
pub fn brute_force_best_reward(m: usize, k: usize, reward: impl Fn(&[usize]) -> f64) -> f64 {
    subsets(m, k)
        .iter()
        .map(|s| reward(s))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Capped set of EXP3.M found by trying every subset `S` of size below `k`:
/// `S` is consistent when, with `alpha = c R / (1 - |S| c)` and `R` the sum of
/// the weights outside `S`, every weight in `S` is at least `alpha` and every
/// other weight is below it. Returns the consistent set of smallest size, or
/// `None` when the empty set is consistent.
pub fn brute_force_capped_set(weights: &[f64], k: usize, gamma: f64) -> Option<(Vec<usize>, f64)> {
    let m = weights.len();
    let kf = k as f64;
    let c = (1.0 / kf - gamma / m as f64) / (1.0 - gamma);
    for size in 0..k {
        for s in subsets(m, size) {
            let rest: f64 = (0..m).filter(|i| !s.contains(i)).map(|i| weights[i]).sum();
            let alpha = c * rest / (1.0 - size as f64 * c);
            let inside = s.iter().all(|&i| weights[i] >= alpha);
            let outside = (0..m)
                .filter(|i| !s.contains(i))
                .all(|i| weights[i] < alpha);
            if inside && outside {
                return if size == 0 { None } else { Some((s, alpha)) };
            }
        }
    }
    panic!("no consistent capped set for {weights:?}");
}

pub fn psi(x: f64, gamma: f64) -> f64 {
    let entropy = if x < 1.0 {
        (1.0 - x) * (1.0 - x).ln()
    } else {
        0.0
    };
    -x.sqrt() + gamma * entropy
}

/// Minimizer of `sum L_i x_i + psi(x_i)/eta` over `{x in [0,1]^3 : sum x = 1}`
/// on the grid with spacing `1/n`.
pub fn grid_argmin_m3(losses: [f64; 3], eta: f64, gamma: f64, n: usize) -> [f64; 3] {
    let h = 1.0 / n as f64;
    let tables: Vec<Vec<f64>> = losses
        .iter()
        .map(|&l| {
            (0..=n)
                .map(|j| {
                    let x = j as f64 * h;
                    l * x + psi(x, gamma) / eta
                })
                .collect()
        })
        .collect();
    let (mut best, mut arg) = (f64::INFINITY, (0, 0));
    for i in 0..=n {
        let a = tables[0][i];
        let (t1, t2) = (&tables[1], &tables[2]);
        for j in 0..=(n - i) {
            let v = a + t1[j] + t2[n - i - j];
            if v < best {
                best = v;
                arg = (i, j);
            }
        }
    }
    let (i, j) = arg;
    [i as f64 * h, j as f64 * h, (n - i - j) as f64 * h]
}

/// FTRL objective evaluated independently of the library.
pub fn ftrl_objective(losses: &[f64], eta: f64, gamma: f64, x: &[f64]) -> f64 {
    losses
        .iter()
        .zip(x)
        .map(|(&l, &xi)| l * xi + psi(xi, gamma) / eta)
        .sum()
}

/// Moves mass from `x` towards a random feasible point of the capped simplex
/// with integral sum `k`; the result stays feasible.
pub fn feasible_neighbour(x: &[f64], direction: &[f64], step: f64) -> Vec<f64> {
    let mean = direction.iter().sum::<f64>() / direction.len() as f64;
    let d: Vec<f64> = direction.iter().map(|v| v - mean).collect();
    // largest t keeping every coordinate in [0, 1]
    let mut t = step;
    for (&xi, &di) in x.iter().zip(&d) {
        if di > 0.0 {
            t = t.min((1.0 - xi) / di);
        } else if di < 0.0 {
            t = t.min(xi / -di);
        }
    }
    x.iter()
        .zip(&d)
        .map(|(&xi, &di)| (xi + t * di).clamp(0.0, 1.0))
        .collect()
}
