//! Confidence radii of the optimistic index policies.

use crate::{CmabError, Real, Result};

/// `ln(max(1, x))`.
pub fn lnplus<F: Real>(x: F) -> Result<F> {
    if !(x > F::zero()) {
        return Err(CmabError::input(format!("lnplus needs x > 0, got {x}")));
    }
    Ok(x.max(F::one()).ln())
}

/// MOSS-style radius `sqrt(ln+(1 / (delta T)) / T)`, infinite for an
/// unplayed arm.
pub fn moss_radius<F: Real>(count: u64, delta: F) -> Result<F> {
    if !(delta > F::zero() && delta < F::one()) {
        return Err(CmabError::config(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(moss_radius_unchecked(count, delta))
}

#[inline]
pub(crate) fn moss_radius_unchecked<F: Real>(count: u64, delta: F) -> F {
    if count == 0 {
        return F::infinity();
    }
    let n = F::from_count(count);
    let arg = F::one() / (delta * n);
    (arg.max(F::one()).ln() / n).sqrt()
}

/// UCB-style radius `sqrt(3 ln t / (2 T))`, infinite for an unplayed arm.
pub fn cucb_radius<F: Real>(count: u64, round: u64) -> Result<F> {
    if round < 1 {
        return Err(CmabError::input("round index must be at least 1"));
    }
    if count == 0 {
        return Ok(F::infinity());
    }
    let scale = F::lit(1.5) * F::from_count(round).ln();
    Ok(cucb_radius_scaled(count, scale))
}

/// `sqrt(scale / T)` with `scale = 3 ln t / 2` computed once per round.
#[inline]
pub(crate) fn cucb_radius_scaled<F: Real>(count: u64, scale: F) -> F {
    if count == 0 {
        return F::infinity();
    }
    (scale / F::from_count(count)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lnplus_values() {
        assert_eq!(lnplus(0.5f64).unwrap(), 0.0);
        assert!((lnplus(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        // ln 100 = 4.605170185988091368...
        assert!((lnplus(100.0f64).unwrap() - 4.605_170_185_988_091).abs() < 1e-14);
        assert!(lnplus(0.0f64).is_err());
        assert!(lnplus(-1.0f64).is_err());
    }

    #[test]
    fn moss_radius_values() {
        assert_eq!(moss_radius(0, 1e-5f64).unwrap(), f64::INFINITY);
        assert_eq!(moss_radius(10, 0.5f64).unwrap(), 0.0);
        // sqrt(ln 1e5) = 3.3930702122...
        assert!((moss_radius(1, 1e-5f64).unwrap() - 3.393_070_212_207_556).abs() < 1e-12);
        assert!(matches!(moss_radius(1, 0.0f64), Err(CmabError::Config(_))));
        assert!(moss_radius(1, 1.0f64).is_err());
    }

    #[test]
    fn cucb_radius_values() {
        assert_eq!(cucb_radius::<f64>(0, 5).unwrap(), f64::INFINITY);
        assert_eq!(cucb_radius::<f64>(5, 1).unwrap(), 0.0);
        assert!(cucb_radius::<f64>(5, 0).is_err());
        // t = e^2 is not an integer round; evaluate the formula directly.
        let scale = 1.5 * 2.0f64;
        assert!((cucb_radius_scaled(3, scale) - 1.0f64).abs() < 1e-15);
    }
}
