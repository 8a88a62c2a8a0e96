//! Intermittent interval map with a neutral fixed point at the origin.
//!
//! The degree-2 branch family g(x) = x(1 + 2^g x^g) on [0, 1/2), 2x - 1 on
//! [1/2, 1]. The left branch has derivative 1 at 0+ (laminar phase), the
//! right branch is affine with slope 2.

use crate::error::{Error, Result};

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!(
            "SRB measure requires gamma<1 (and gamma>0), got gamma={gamma}"
        )));
    }
    Ok(())
}

/// One application of the interval map.
pub fn lsv_map(x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x={x} outside [0,1]")));
    }
    Ok(lsv_step(x, gamma))
}

/// Map evaluation without argument checks, for validated inner loops.
#[inline]
pub(crate) fn lsv_step(x: f64, gamma: f64) -> f64 {
    if x < 0.5 {
        // x (1 + (2x)^gamma), continuous up to 1 at x -> 1/2-.
        let y = x * (1.0 + (2.0 * x).powf(gamma));
        // Guard against rounding just past the branch supremum.
        if y >= 1.0 {
            f64::from_bits(1.0f64.to_bits() - 1)
        } else {
            y
        }
    } else {
        2.0 * x - 1.0
    }
}

/// Supremum of the derivative over both branches.
///
/// The left-branch derivative 1 + 2^g (1+g) x^g increases to 2+g at x=1/2;
/// the right branch is constant 2.
pub fn lsv_sup_deriv(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(2.0 + gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn neutral_fixed_point() {
        assert_eq!(lsv_map(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(lsv_map(0.0, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn affine_right_branch() {
        assert_eq!(lsv_map(0.75, 0.5).unwrap(), 0.5);
        assert_eq!(lsv_map(1.0, 0.3).unwrap(), 1.0);
        assert_eq!(lsv_map(0.5, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn left_branch_value() {
        // 0.25 * (1 + sqrt(0.5)) = 0.25 * (1 + 0.70710678...) = 0.426776695...
        assert_relative_eq!(
            lsv_map(0.25, 0.5).unwrap(),
            0.25 * (1.0 + 0.5f64.sqrt()),
            max_relative = 1e-15
        );
        assert_relative_eq!(lsv_map(0.25, 0.5).unwrap(), 0.426776695, epsilon = 1e-9);
    }

    #[test]
    fn sup_deriv_values() {
        assert_eq!(lsv_sup_deriv(0.5).unwrap(), 2.5);
        assert_eq!(lsv_sup_deriv(0.25).unwrap(), 2.25);
        // Limit gamma -> 0+ approaches the doubling slope 2.
        assert!((lsv_sup_deriv(1e-12).unwrap() - 2.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(lsv_map(1.5, 0.5), Err(Error::Domain(_))));
        assert!(matches!(lsv_map(-0.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(lsv_map(0.3, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(lsv_sup_deriv(0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn left_branch_increasing_and_escaping() {
        for gamma in [0.25, 0.5, 0.75] {
            let mut prev = 0.0;
            for i in 1..10_000 {
                let x = 0.5 * (i as f64) / 10_000.0;
                let y = lsv_step(x, gamma);
                assert!(y > prev, "not increasing at x={x}");
                assert!(y > x, "no escape at x={x}");
                prev = y;
            }
        }
    }

    #[test]
    fn left_branch_sup_is_one() {
        let just_below_half = f64::from_bits(0.5f64.to_bits() - 1);
        let y = lsv_step(just_below_half, 0.5);
        assert!(y < 1.0 && y > 1.0 - 1e-12);
    }
}
