//! Scalar root finding and the FTRL step over the capped simplex
//! `{x in [0,1]^m : sum x = k}` with the separable hybrid regularizer.

use crate::{CmabError, Real, Result};

/// Tolerances for [`solve_capped_simplex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<F> {
    /// Accepted `|sum x - k|`.
    pub kkt_tolerance: F,
    /// Iteration cap of both the multiplier search and each coordinate solve.
    pub max_bisection_iters: usize,
    /// Relative step size at which a coordinate solve stops.
    pub coordinate_tolerance: F,
}

impl<F: Real> Default for SolverOptions<F> {
    fn default() -> Self {
        let eps = F::epsilon();
        SolverOptions {
            kkt_tolerance: F::lit(1e-10).max(eps * F::lit(64.0)),
            max_bisection_iters: 200,
            coordinate_tolerance: F::lit(1e-12).max(eps * F::lit(4.0)),
        }
    }
}

impl<F: Real> SolverOptions<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tolerance > F::zero()) || !(self.coordinate_tolerance > F::zero()) {
            return Err(CmabError::config(
                "solver tolerances must be strictly positive",
            ));
        }
        if self.max_bisection_iters == 0 {
            return Err(CmabError::config("max_bisection_iters must be positive"));
        }
        Ok(())
    }
}

/// Root of a monotone `f` on `[lo, hi]` by bisection.
///
/// Returns as soon as `|f(x)| <= tol` or the bracket is narrower than `tol`.
pub fn bisect<F: Real>(f: impl Fn(F) -> F, lo: F, hi: F, tol: F) -> Result<F> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    if f_lo.abs() <= tol {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(CmabError::input(format!(
            "no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}"
        )));
    }
    let increasing = f_lo < F::zero();
    let two = F::lit(2.0);
    loop {
        let mid = lo + (hi - lo) / two;
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if v.abs() <= tol {
            return Ok(mid);
        }
        if (v < F::zero()) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `psi(x) = -sqrt(x) + gamma (1 - x) ln(1 - x)`, the per-coordinate hybrid
/// regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridRegularizer<F> {
    pub gamma: F,
}

impl<F: Real> HybridRegularizer<F> {
    pub fn new(gamma: F) -> Self {
        HybridRegularizer { gamma }
    }

    pub fn value(&self, x: F) -> F {
        let rest = F::one() - x;
        let entropy = if rest > F::zero() {
            rest * (-x).ln_1p()
        } else {
            F::zero()
        };
        -x.sqrt() + self.gamma * entropy
    }

    /// `psi'(x) = -1/(2 sqrt x) - gamma ln(1 - x) - gamma`; increasing on (0, 1).
    pub fn derivative(&self, x: F) -> F {
        -F::lit(0.5) / x.sqrt() - self.gamma * (-x).ln_1p() - self.gamma
    }

    pub fn second_derivative(&self, x: F) -> F {
        F::lit(0.25) / (x * x.sqrt()) + self.gamma / (F::one() - x)
    }

    /// `sum_i L_i x_i + psi(x_i) / eta`.
    pub fn ftrl_objective(&self, losses: &[F], eta: F, x: &[F]) -> F {
        losses
            .iter()
            .zip(x)
            .map(|(&l, &xi)| l * xi + self.value(xi) / eta)
            .sum()
    }
}

/// Result of one FTRL step.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedSimplexSolution<F> {
    pub x: Vec<F>,
    /// Multiplier of the `sum x = k` constraint.
    pub lambda: F,
    /// `|sum x - k|` at return.
    pub residual: F,
    pub iterations: usize,
}

/// `argmin sum_i L_i x_i + psi(x_i)/eta` over the capped simplex.
pub fn capped_simplex_argmin<F: Real>(
    losses: &[F],
    eta: F,
    gamma: F,
    k: usize,
    options: &SolverOptions<F>,
) -> Result<Vec<F>> {
    solve_capped_simplex(losses, eta, gamma, k, options, None).map(|s| s.x)
}

/// Full solver with an optional warm start for the multiplier.
///
/// The sum constraint is dualized: for a multiplier `lambda` each coordinate
/// solves `psi'(x_i) = -eta (L_i + lambda)`, which has a unique root in
/// (0, 1) because `psi'` increases from -inf to +inf. `sum x_i(lambda)` is
/// decreasing, so `lambda` is found by a bracketed Newton iteration that falls
/// back to bisection whenever a step leaves the bracket. Coordinates are
/// clamped to `[1e-12, 1 - 1e-12]`.
pub fn solve_capped_simplex<F: Real>(
    losses: &[F],
    eta: F,
    gamma: F,
    k: usize,
    options: &SolverOptions<F>,
    warm_lambda: Option<F>,
) -> Result<CappedSimplexSolution<F>> {
    let m = losses.len();
    if k == 0 || k >= m {
        return Err(CmabError::input(format!(
            "capped simplex needs 1 <= k < m, got k={k}, m={m}"
        )));
    }
    if !(eta > F::zero()) || !eta.is_finite() {
        return Err(CmabError::input(format!("eta must be positive, got {eta}")));
    }
    if !(gamma > F::zero() && gamma <= F::one()) {
        return Err(CmabError::input(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if let Some(l) = losses.iter().find(|l| !l.is_finite()) {
        return Err(CmabError::input(format!("non-finite loss {l}")));
    }
    options.validate()?;

    let psi = HybridRegularizer::new(gamma);
    let kf = F::from_usize(k).expect("k as float");
    let level = kf / F::from_usize(m).expect("m as float");

    let (l_min, l_max) = losses
        .iter()
        .fold((F::infinity(), F::neg_infinity()), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
    let base = -psi.derivative(level) / eta;
    if l_min == l_max {
        return Ok(CappedSimplexSolution {
            x: vec![level; m],
            lambda: base - l_min,
            residual: F::zero(),
            iterations: 0,
        });
    }

    let margin = F::lit(1e-12).max(F::epsilon() * F::lit(4.0));
    let bounds = CoordinateBounds {
        lo: margin,
        hi: F::one() - margin,
        d_lo: psi.derivative(margin),
        d_hi: psi.derivative(F::one() - margin),
    };

    // sum x(lam_lo) >= k >= sum x(lam_hi)
    let mut lam_lo = base - l_max;
    let mut lam_hi = base - l_min;
    let mut lambda = match warm_lambda {
        Some(w) if w > lam_lo && w < lam_hi => w,
        _ => lam_lo + (lam_hi - lam_lo) / F::lit(2.0),
    };

    let mut x = vec![level; m];
    let mut residual = F::infinity();
    for iter in 1..=options.max_bisection_iters {
        let mut sum = F::zero();
        let mut slope = F::zero();
        for (xi, &l) in x.iter_mut().zip(losses) {
            let target = -eta * (l + lambda);
            *xi = solve_coordinate(&psi, target, &bounds, *xi, options);
            sum = sum + *xi;
            if *xi > bounds.lo && *xi < bounds.hi {
                slope = slope - eta / psi.second_derivative(*xi);
            }
        }
        let excess = sum - kf;
        residual = excess.abs();
        if residual <= options.kkt_tolerance {
            return Ok(CappedSimplexSolution {
                x,
                lambda,
                residual,
                iterations: iter,
            });
        }
        if excess > F::zero() {
            lam_lo = lambda;
        } else {
            lam_hi = lambda;
        }
        let mid = lam_lo + (lam_hi - lam_lo) / F::lit(2.0);
        if mid <= lam_lo || mid >= lam_hi {
            break;
        }
        let newton = lambda - excess / slope;
        lambda = if slope < F::zero() && newton > lam_lo && newton < lam_hi {
            newton
        } else {
            mid
        };
    }
    Err(CmabError::Solver {
        iterations: options.max_bisection_iters,
        residual: residual.as_f64(),
    })
}

struct CoordinateBounds<F> {
    lo: F,
    hi: F,
    d_lo: F,
    d_hi: F,
}

/// Solves `psi'(x) = target` on the clamped interval by safeguarded Newton.
fn solve_coordinate<F: Real>(
    psi: &HybridRegularizer<F>,
    target: F,
    bounds: &CoordinateBounds<F>,
    guess: F,
    options: &SolverOptions<F>,
) -> F {
    if target <= bounds.d_lo {
        return bounds.lo;
    }
    if target >= bounds.d_hi {
        return bounds.hi;
    }
    let (mut a, mut b) = (bounds.lo, bounds.hi);
    let mut x = if guess > a && guess < b {
        guess
    } else {
        a + (b - a) / F::lit(2.0)
    };
    for _ in 0..options.max_bisection_iters {
        let g = psi.derivative(x) - target;
        if g == F::zero() {
            return x;
        }
        if g < F::zero() {
            a = x;
        } else {
            b = x;
        }
        let mut next = x - g / psi.second_derivative(x);
        if !(next > a && next < b) {
            next = a + (b - a) / F::lit(2.0);
        }
        if (next - x).abs() <= options.coordinate_tolerance * x || b - a <= F::epsilon() * b {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_linear_and_log() {
        let r = bisect(|x: f64| x - 2.0, 0.0, 4.0, 1e-12).unwrap();
        assert!((r - 2.0).abs() <= 1e-12);
        let r = bisect(|x: f64| x.ln(), 0.1, 10.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() <= 1e-11);
    }

    #[test]
    fn bisect_decreasing_function() {
        let r = bisect(|x: f64| 3.0 - x, 0.0, 10.0, 1e-12).unwrap();
        assert!((r - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn bisect_without_sign_change_fails() {
        assert!(matches!(
            bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-9),
            Err(CmabError::Input(_))
        ));
    }

    #[test]
    fn regularizer_derivatives_match_finite_differences() {
        let psi = HybridRegularizer::new(0.7f64);
        for &x in &[0.05, 0.3, 0.5, 0.9] {
            let h = 1e-6;
            let fd = (psi.value(x + h) - psi.value(x - h)) / (2.0 * h);
            assert!((fd - psi.derivative(x)).abs() < 1e-7, "x={x}");
            let fd2 = (psi.derivative(x + h) - psi.derivative(x - h)) / (2.0 * h);
            assert!((fd2 - psi.second_derivative(x)).abs() < 1e-5 * psi.second_derivative(x));
        }
    }

    #[test]
    fn zero_losses_give_uniform_point() {
        let x =
            capped_simplex_argmin(&[0.0f64; 7], 0.3, 0.5, 3, &SolverOptions::default()).unwrap();
        assert!(x.iter().all(|&v| v == 3.0 / 7.0));
    }

    #[test]
    fn constraint_and_stationarity_hold() {
        let losses = [0.3, -1.2, 4.0, 0.0, 2.5, -0.7];
        let (eta, gamma) = (0.8, 0.4);
        let sol =
            solve_capped_simplex(&losses, eta, gamma, 2, &SolverOptions::default(), None).unwrap();
        let sum: f64 = sol.x.iter().sum();
        assert!((sum - 2.0).abs() <= 1e-10);
        let psi = HybridRegularizer::new(gamma);
        for (&l, &x) in losses.iter().zip(&sol.x) {
            let r = l + psi.derivative(x) / eta + sol.lambda;
            assert!(r.abs() <= 1e-6, "stationarity residual {r}");
        }
    }

    #[test]
    fn warm_start_reaches_same_point() {
        let losses = [1.0f64, 2.0, 3.0, -4.0];
        let opts = SolverOptions::default();
        let cold = solve_capped_simplex(&losses, 0.5, 1.0, 2, &opts, None).unwrap();
        let warm =
            solve_capped_simplex(&losses, 0.5, 1.0, 2, &opts, Some(cold.lambda + 0.01)).unwrap();
        for (a, b) in cold.x.iter().zip(&warm.x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let opts = SolverOptions::default();
        assert!(capped_simplex_argmin(&[0.0f64; 3], 1.0, 1.0, 3, &opts).is_err());
        assert!(capped_simplex_argmin(&[0.0f64; 3], 0.0, 1.0, 1, &opts).is_err());
        assert!(capped_simplex_argmin(&[0.0f64; 3], 1.0, 0.0, 1, &opts).is_err());
        assert!(capped_simplex_argmin(&[f64::NAN, 0.0, 0.0], 1.0, 1.0, 1, &opts).is_err());
        let bad = SolverOptions {
            kkt_tolerance: 0.0,
            ..opts
        };
        assert!(capped_simplex_argmin(&[1.0f64, 0.0, 0.0], 1.0, 1.0, 1, &bad).is_err());
    }

    #[test]
    fn non_convergence_reports_residual() {
        let opts = SolverOptions {
            max_bisection_iters: 1,
            ..SolverOptions::default()
        };
        match capped_simplex_argmin(&[0.0f64, 5.0, -3.0, 1.0], 1.0, 1.0, 2, &opts) {
            Err(CmabError::Solver { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn f32_solver_meets_its_tolerance() {
        let opts = SolverOptions::<f32>::default();
        let x = capped_simplex_argmin(&[0.5f32, -0.5, 1.5, 0.0], 1.0, 1.0, 2, &opts).unwrap();
        let sum: f32 = x.iter().sum();
        assert!((sum - 2.0).abs() <= opts.kkt_tolerance);
    }
}
