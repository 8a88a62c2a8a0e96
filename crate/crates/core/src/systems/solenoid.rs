//! Solenoid map over the intermittent base: f(x, z) = (g(x), th z + e^{2 i pi x}/2)
//! on the solid torus T^1 x D.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::systems::lsv::lsv_step;

fn check_fiber(z: Complex64) -> Result<()> {
    if z.norm_sqr() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("|z|={} outside unit disk", z.norm())));
    }
    Ok(())
}

/// One application of the solenoid map.
pub fn solenoid_map(x: f64, z: Complex64, spec: &SystemSpec) -> Result<(f64, Complex64)> {
    spec.require_solenoid()?;
    check_fiber(z)?;
    Ok(solenoid_step(x, z, spec.gamma(), spec.theta()))
}

#[inline]
pub(crate) fn solenoid_step(x: f64, z: Complex64, gamma: f64, theta: f64) -> (f64, Complex64) {
    let phase = Complex64::from_polar(0.5, TAU * x);
    (lsv_step(x, gamma), theta * z + phase)
}

/// n-th iterate evaluated through the closed form
/// f^n(x,z) = (g^n(x), th^n z + (1/2) sum_{j=0}^{n-1} th^{n-1-j} e^{2 i pi g^j(x)}).
///
/// Accumulates the base orbit g^j(x) in one pass and sums the fiber phases
/// directly, so it exercises an arithmetic path independent of repeated
/// `solenoid_map` composition. Used as a cross-validation oracle.
pub fn solenoid_iterate_closed_form(
    x: f64,
    z: Complex64,
    n: u32,
    spec: &SystemSpec,
) -> Result<(f64, Complex64)> {
    spec.require_solenoid()?;
    check_fiber(z)?;
    if n == 0 {
        return Err(Error::Parameter("closed form needs n >= 1".into()));
    }
    let (gamma, theta) = (spec.gamma(), spec.theta());
    let mut base = x;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let weight = theta.powi((n - 1 - j) as i32);
        sum += weight * Complex64::from_polar(1.0, TAU * base);
        base = lsv_step(base, gamma);
    }
    Ok((base, theta.powi(n as i32) * z + 0.5 * sum))
}
