//! Dependent rounding: turns a fractional vector with integral sum `k` into a
//! random `k`-subset whose inclusion probabilities equal the input values.

use rand::Rng;

use crate::instance::Action;
use crate::{CmabError, Real, Result};

/// Values this close to 0 or 1 are treated as integral.
const SNAP: f64 = 1e-12;

/// Allowed distance of `sum p` from an integer.
const SUM_TOLERANCE: f64 = 1e-9;

/// Samples a `k`-subset with `P(i in S) = p[i]`.
pub fn depround<F: Real, R: Rng + ?Sized>(p: &[F], rng: &mut R) -> Result<Action> {
    depround_with_stats(p, rng).map(|(action, _)| action)
}

/// Like [`depround`], also returning the number of pairing iterations
/// (at most `m`, since every iteration fixes at least one coordinate).
///
/// Pairs are always the two lowest-index fractional coordinates.
pub fn depround_with_stats<F: Real, R: Rng + ?Sized>(
    p: &[F],
    rng: &mut R,
) -> Result<(Action, usize)> {
    let mut q = Vec::with_capacity(p.len());
    for (i, &v) in p.iter().enumerate() {
        let v = v.as_f64();
        if !(-SNAP..=1.0 + SNAP).contains(&v) {
            return Err(CmabError::input(format!("p[{i}] = {v} outside [0, 1]")));
        }
        q.push(snap(v));
    }
    let total: f64 = q.iter().sum();
    let k = total.round();
    if (total - k).abs() > SUM_TOLERANCE {
        return Err(CmabError::input(format!(
            "probabilities sum to {total}, which is not an integer"
        )));
    }
    let k = k as usize;
    if k == 0 {
        return Err(CmabError::input(
            "probabilities sum to zero; nothing to sample",
        ));
    }

    let fractional = |v: f64| v > 0.0 && v < 1.0;
    let m = q.len();
    let mut iterations = 0;
    let mut i = 0;
    loop {
        while i < m && !fractional(q[i]) {
            i += 1;
        }
        if i == m {
            break;
        }
        let mut j = i + 1;
        while j < m && !fractional(q[j]) {
            j += 1;
        }
        if j == m {
            // Only floating point drift can leave a lone fractional entry.
            q[i] = q[i].round();
            break;
        }
        iterations += 1;
        let alpha = (1.0 - q[i]).min(q[j]);
        let beta = q[i].min(1.0 - q[j]);
        let u: f64 = rng.gen();
        if u * (alpha + beta) < beta {
            q[i] += alpha;
            q[j] -= alpha;
        } else {
            q[i] -= beta;
            q[j] += beta;
        }
        q[i] = snap(q[i]);
        q[j] = snap(q[j]);
    }

    let arms: Vec<usize> = (0..m).filter(|&i| q[i] == 1.0).collect();
    if arms.len() != k {
        return Err(CmabError::Internal(format!(
            "dependent rounding produced {} arms, expected {k}",
            arms.len()
        )));
    }
    Ok((Action::new(arms)?, iterations))
}

fn snap(v: f64) -> f64 {
    if v <= SNAP {
        0.0
    } else if v >= 1.0 - SNAP {
        1.0
    } else {
        v
    }
}
