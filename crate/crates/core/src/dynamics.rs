//! Phase spaces, system parameters, orbit iteration and invariant sampling.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::rng::unit_open;
use crate::systems::{
    check_gamma, doubling_step, lsv_step, lsv_sup_deriv, perimeter, solenoid_step, stadium_map,
};

/// Iterations used to push initial conditions onto the attractor when the
/// invariant measure has no closed form (lsv, solenoid).
pub const DEFAULT_BURN_IN: u32 = 1000;

/// A point of one of the four phase spaces.
///
/// Circle coordinates live in [0,1); billiard arclength is reduced modulo the
/// perimeter; the fiber coordinate stays in the closed unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum PhasePoint {
    Circle { x: f64 },
    TorusDisk { x: f64, z_re: f64, z_im: f64 },
    Billiard { r: f64, phi: f64 },
}

impl PhasePoint {
    /// Point of the circle, reduced modulo 1.
    pub fn circle(x: f64) -> Self {
        PhasePoint::Circle { x: wrap_unit(x) }
    }

    /// Point of the solid torus; fails if z leaves the closed unit disk.
    pub fn torus_disk(x: f64, z_re: f64, z_im: f64) -> Result<Self> {
        if z_re * z_re + z_im * z_im > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "fiber |z| = {} exceeds 1",
                (z_re * z_re + z_im * z_im).sqrt()
            )));
        }
        Ok(PhasePoint::TorusDisk {
            x: wrap_unit(x),
            z_re,
            z_im,
        })
    }

    /// Billiard configuration; arclength is wrapped, |phi| must stay < pi/2.
    pub fn billiard(r: f64, phi: f64, ell: f64) -> Result<Self> {
        if !(phi.abs() < FRAC_PI_2) {
            return Err(Error::Domain(format!("|phi|={} must be < pi/2", phi.abs())));
        }
        Ok(PhasePoint::Billiard {
            r: r.rem_euclid(perimeter(ell)),
            phi,
        })
    }

    fn space_name(&self) -> &'static str {
        match self {
            PhasePoint::Circle { .. } => "circle",
            PhasePoint::TorusDisk { .. } => "torus-disk",
            PhasePoint::Billiard { .. } => "billiard",
        }
    }
}

fn wrap_unit(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y == 1.0 {
        0.0
    } else {
        y
    }
}

/// Parameters of one dynamical system, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Doubling,
    Lsv { gamma: f64 },
    Solenoid { gamma: f64, theta: f64 },
    Stadium { ell: f64 },
}

impl SystemSpec {
    pub fn doubling() -> Self {
        SystemSpec::Doubling
    }

    pub fn lsv(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(SystemSpec::Lsv { gamma })
    }

    pub fn solenoid(gamma: f64, theta: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let sup = lsv_sup_deriv(gamma)?;
        if !(theta > 0.0) || theta * (1.0 + sup) >= 1.0 {
            return Err(Error::Parameter(format!(
                "theta*(1+sup_deriv) must be < 1: theta={theta}, sup_deriv={sup}, product={}",
                theta * (1.0 + sup)
            )));
        }
        Ok(SystemSpec::Solenoid { gamma, theta })
    }

    pub fn stadium(ell: f64) -> Result<Self> {
        if !(ell > 0.0) {
            return Err(Error::Parameter(format!("stadium needs ell > 0, got {ell}")));
        }
        Ok(SystemSpec::Stadium { ell })
    }

    /// Re-check the constructor constraints (hand-built values included).
    pub fn validate(&self) -> Result<()> {
        match *self {
            SystemSpec::Doubling => Ok(()),
            SystemSpec::Lsv { gamma } => check_gamma(gamma),
            SystemSpec::Solenoid { gamma, theta } => {
                Self::solenoid(gamma, theta).map(|_| ())
            }
            SystemSpec::Stadium { ell } => Self::stadium(ell).map(|_| ()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SystemSpec::Doubling => "doubling",
            SystemSpec::Lsv { .. } => "lsv",
            SystemSpec::Solenoid { .. } => "solenoid",
            SystemSpec::Stadium { .. } => "stadium",
        }
    }

    /// Supremum of the base-map derivative, where one exists.
    pub fn sup_deriv(&self) -> Option<f64> {
        match *self {
            SystemSpec::Doubling => Some(2.0),
            SystemSpec::Lsv { gamma } | SystemSpec::Solenoid { gamma, .. } => Some(2.0 + gamma),
            SystemSpec::Stadium { .. } => None,
        }
    }

    /// Polynomial return-time tail exponent of the modelling tower.
    pub fn zeta(&self) -> Option<f64> {
        match *self {
            SystemSpec::Lsv { gamma } | SystemSpec::Solenoid { gamma, .. } => Some(1.0 / gamma),
            SystemSpec::Stadium { .. } => Some(2.0),
            SystemSpec::Doubling => None,
        }
    }

    /// Polynomial contraction exponent along stable/unstable leaves.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            SystemSpec::Solenoid { gamma, .. } => Some(1.0 + 1.0 / gamma),
            SystemSpec::Stadium { .. } => Some(1.0),
            _ => None,
        }
    }

    pub(crate) fn gamma(&self) -> f64 {
        match *self {
            SystemSpec::Lsv { gamma } | SystemSpec::Solenoid { gamma, .. } => gamma,
            _ => unreachable!("gamma requested for {}", self.kind_name()),
        }
    }

    pub(crate) fn theta(&self) -> f64 {
        match *self {
            SystemSpec::Solenoid { theta, .. } => theta,
            _ => unreachable!("theta requested for {}", self.kind_name()),
        }
    }

    pub(crate) fn ell(&self) -> f64 {
        match *self {
            SystemSpec::Stadium { ell } => ell,
            _ => unreachable!("ell requested for {}", self.kind_name()),
        }
    }

    pub(crate) fn require_solenoid(&self) -> Result<()> {
        match self {
            SystemSpec::Solenoid { .. } => Ok(()),
            _ => Err(Error::PhaseSpaceMismatch(format!(
                "expected solenoid, got {}",
                self.kind_name()
            ))),
        }
    }

    /// Check that a point belongs to this system's phase space.
    pub fn check_point(&self, p: &PhasePoint) -> Result<()> {
        let ok = matches!(
            (self, p),
            (SystemSpec::Doubling, PhasePoint::Circle { .. })
                | (SystemSpec::Lsv { .. }, PhasePoint::Circle { .. })
                | (SystemSpec::Solenoid { .. }, PhasePoint::TorusDisk { .. })
                | (SystemSpec::Stadium { .. }, PhasePoint::Billiard { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(Error::PhaseSpaceMismatch(format!(
                "{} point fed to {} system",
                p.space_name(),
                self.kind_name()
            )))
        }
    }
}

/// One application of the system map. Assumes `spec.check_point` passed.
#[inline]
pub(crate) fn step(spec: &SystemSpec, p: PhasePoint) -> PhasePoint {
    match (spec, p) {
        (SystemSpec::Doubling, PhasePoint::Circle { x }) => PhasePoint::Circle {
            x: doubling_step(x),
        },
        (SystemSpec::Lsv { gamma }, PhasePoint::Circle { x }) => PhasePoint::Circle {
            x: lsv_step(x, *gamma),
        },
        (SystemSpec::Solenoid { gamma, theta }, PhasePoint::TorusDisk { x, z_re, z_im }) => {
            let (x1, z1) = solenoid_step(x, Complex64::new(z_re, z_im), *gamma, *theta);
            PhasePoint::TorusDisk {
                x: x1,
                z_re: z1.re,
                z_im: z1.im,
            }
        }
        (SystemSpec::Stadium { ell }, PhasePoint::Billiard { r, phi }) => {
            let (r1, phi1) =
                stadium_map(r, phi, *ell).expect("billiard geometry failure on a valid configuration");
            PhasePoint::Billiard { r: r1, phi: phi1 }
        }
        _ => unreachable!("phase-space mismatch past validation"),
    }
}

/// n-fold application of the system map; n = 0 returns the point unchanged.
pub fn iterate(spec: &SystemSpec, p: &PhasePoint, n: u64) -> Result<PhasePoint> {
    spec.validate()?;
    spec.check_point(p)?;
    let mut q = *p;
    for _ in 0..n {
        q = step(spec, q);
    }
    Ok(q)
}

fn circle_dist(a: f64, b: f64, circumference: f64) -> f64 {
    let d = (a - b).rem_euclid(circumference);
    d.min(circumference - d)
}

/// Max metric of the system's phase space. Circle-like coordinates use the
/// shortest arc at their circumference.
pub fn distance(spec: &SystemSpec, p: &PhasePoint, q: &PhasePoint) -> Result<f64> {
    spec.check_point(p)?;
    spec.check_point(q)?;
    Ok(dist_unchecked(spec, p, q))
}

#[inline]
pub(crate) fn dist_unchecked(spec: &SystemSpec, p: &PhasePoint, q: &PhasePoint) -> f64 {
    match (p, q) {
        (PhasePoint::Circle { x: a }, PhasePoint::Circle { x: b }) => circle_dist(*a, *b, 1.0),
        (
            PhasePoint::TorusDisk { x: a, z_re: ar, z_im: ai },
            PhasePoint::TorusDisk { x: b, z_re: br, z_im: bi },
        ) => {
            let base = circle_dist(*a, *b, 1.0);
            let fiber = ((ar - br) * (ar - br) + (ai - bi) * (ai - bi)).sqrt();
            base.max(fiber)
        }
        (
            PhasePoint::Billiard { r: a, phi: pa },
            PhasePoint::Billiard { r: b, phi: pb },
        ) => {
            let arc = circle_dist(*a, *b, perimeter(spec.ell()));
            arc.max((pa - pb).abs())
        }
        _ => unreachable!("phase-space mismatch past validation"),
    }
}

/// Draw one point distributed by the invariant measure.
///
/// Doubling and the stadium sample their explicit densities directly and
/// ignore `burn_in`. The interval map and the solenoid push a uniform initial
/// condition forward `burn_in` steps toward the SRB measure; for them
/// `burn_in` of at least [`DEFAULT_BURN_IN`] is recommended.
pub fn sample_invariant(
    spec: &SystemSpec,
    rng: &mut ChaCha8Rng,
    burn_in: u32,
) -> Result<PhasePoint> {
    spec.validate()?;
    Ok(sample_unchecked(spec, rng, burn_in))
}

#[inline]
pub(crate) fn sample_unchecked(
    spec: &SystemSpec,
    rng: &mut ChaCha8Rng,
    burn_in: u32,
) -> PhasePoint {
    match *spec {
        SystemSpec::Doubling => PhasePoint::Circle { x: rng.random() },
        SystemSpec::Lsv { gamma } => {
            let mut x: f64 = rng.random();
            for _ in 0..burn_in {
                x = lsv_step(x, gamma);
            }
            PhasePoint::Circle { x }
        }
        SystemSpec::Solenoid { gamma, theta } => {
            let mut x: f64 = rng.random();
            let mut z = Complex64::new(0.0, 0.0);
            for _ in 0..burn_in {
                (x, z) = solenoid_step(x, z, gamma, theta);
            }
            PhasePoint::TorusDisk {
                x,
                z_re: z.re,
                z_im: z.im,
            }
        }
        SystemSpec::Stadium { ell } => {
            // r uniform; phi = arcsin(2u - 1) has density cos(phi)/2.
            let r: f64 = rng.random::<f64>() * perimeter(ell);
            let phi = (2.0 * unit_open(rng) - 1.0).asin();
            PhasePoint::Billiard { r, phi }
        }
    }
}

/// Default burn-in for systems whose measure is reached by pushforward.
pub fn default_burn_in(spec: &SystemSpec) -> u32 {
    match spec {
        SystemSpec::Lsv { .. } | SystemSpec::Solenoid { .. } => DEFAULT_BURN_IN,
        _ => 0,
    }
}
