//! Constructive radius selection: find r in (theta^{n+1}, theta^n) whose
//! coronas are provably thin, by nested-interval dichotomy on the annulus
//! measure m([0,t]) = mu(B(x, theta^{n+1} + t(theta^n - theta^{n+1})))
//!                    - mu(B(x, theta^{n+1})),
//! then verify the corona inequality
//! mu(B(x,r+s) \ B(x,r)) <= C0 s^a r^{-a} mu(B(x,2r)) on a schedule of s.

use serde::{Deserialize, Serialize};

use crate::dynamics::{PhasePoint, SystemSpec};
use crate::ensemble::{count_below, distance_pool};
use crate::error::{Error, Result};
use crate::hitstats::exact_ball_measure;
use crate::rng::RngStream;

/// Minimum samples required in the smaller of two compared annuli.
const MIN_COMPARE_SUPPORT: u64 = 100;

/// Ball/annulus masses around one center, answered from a single shared
/// sample set so that comparisons between candidate intervals are consistent.
/// The doubling map uses its closed-form arc measure instead of samples.
pub struct AnnulusSampler {
    exact: Option<SystemSpec>,
    distances: Vec<f64>,
    budget: u64,
    center: PhasePoint,
}

impl AnnulusSampler {
    /// Sampler with the exact path enabled where the measure has a closed form.
    pub fn new(
        spec: &SystemSpec,
        center: &PhasePoint,
        budget: u64,
        stream: &RngStream,
    ) -> Result<Self> {
        Self::build(spec, center, budget, stream, false)
    }

    /// Sampler that always estimates by Monte Carlo, even for the doubling
    /// map. Used to exercise the sampling path against the exact one.
    pub fn monte_carlo(
        spec: &SystemSpec,
        center: &PhasePoint,
        budget: u64,
        stream: &RngStream,
    ) -> Result<Self> {
        Self::build(spec, center, budget, stream, true)
    }

    fn build(
        spec: &SystemSpec,
        center: &PhasePoint,
        budget: u64,
        stream: &RngStream,
        force_monte_carlo: bool,
    ) -> Result<Self> {
        spec.validate()?;
        spec.check_point(center)?;
        if !force_monte_carlo && exact_ball_measure(spec, center, 0.5).is_some() {
            return Ok(Self {
                exact: Some(*spec),
                distances: Vec::new(),
                budget: 0,
                center: *center,
            });
        }
        if budget < 1_000 {
            return Err(Error::Parameter(format!(
                "annulus sampling budget must be at least 1000, got {budget}"
            )));
        }
        Ok(Self {
            exact: None,
            distances: distance_pool(spec, center, stream, budget),
            budget,
            center: *center,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Estimated mu(B(center, radius)).
    pub fn ball_mass(&self, radius: f64) -> f64 {
        match &self.exact {
            Some(spec) => exact_ball_measure(spec, &self.center, radius).expect("exact path"),
            None => count_below(&self.distances, radius) as f64 / self.budget as f64,
        }
    }

    /// Samples inside the open ball (0 on the exact path).
    pub fn ball_hits(&self, radius: f64) -> u64 {
        if self.exact.is_some() {
            0
        } else {
            count_below(&self.distances, radius)
        }
    }

    /// Mass of the annulus r_in <= d < r_out and its sample support.
    /// Support is reported as the annulus hit count, or u64::MAX on the
    /// exact path where support is unlimited.
    fn annulus(&self, r_in: f64, r_out: f64) -> (f64, u64) {
        if self.exact.is_some() {
            (self.ball_mass(r_out) - self.ball_mass(r_in), u64::MAX)
        } else {
            let hits = count_below(&self.distances, r_out) - count_below(&self.distances, r_in);
            (hits as f64 / self.budget as f64, hits)
        }
    }

    fn samples(&self) -> u64 {
        self.budget
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!("theta must lie in (0,1), got {theta}")));
    }
    Ok(())
}

fn radius_at(theta: f64, n: u32, t: f64) -> f64 {
    let outer = theta.powi(n as i32);
    let inner = theta.powi(n as i32 + 1);
    inner + t * (outer - inner)
}

/// m((t1, t2]) for the scale-n annulus family at `x`: the invariant mass
/// between the radii parametrized by t1 and t2.
pub fn corona_mass(
    spec: &SystemSpec,
    x: &PhasePoint,
    n: u32,
    theta: f64,
    t1: f64,
    t2: f64,
    budget: u64,
    stream: &RngStream,
) -> Result<f64> {
    check_theta(theta)?;
    if !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) || t1 > t2 {
        return Err(Error::Parameter(format!(
            "need 0 <= t1 <= t2 <= 1, got t1={t1}, t2={t2}"
        )));
    }
    let sampler = AnnulusSampler::new(spec, x, budget, stream)?;
    if !sampler.is_exact() && sampler.ball_hits(radius_at(theta, n, t2)) == 0 {
        return Err(Error::Undersampled(format!(
            "outer ball at t={t2} contains no samples out of {budget}"
        )));
    }
    Ok(sampler
        .annulus(radius_at(theta, n, t1), radius_at(theta, n, t2))
        .0)
}

/// Which candidate subinterval the dichotomy kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Full record of one dichotomy run.
///
/// `theta` is the effective value actually used: inputs at or below 1/2 are
/// replaced by their smallest integer root above 1/2, as the construction
/// requires; `theta_input` keeps the caller's value. The produced radius is
/// theta^{n+1} + t_star (theta^n - theta^{n+1}) for the effective theta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyTrace {
    pub theta: f64,
    pub theta_input: f64,
    pub n: u32,
    pub lambda: f64,
    pub rho: f64,
    pub intervals: Vec<(f64, f64)>,
    pub chosen_sides: Vec<Side>,
    /// Estimated m(I_k) for each stored interval.
    pub masses: Vec<f64>,
    /// Relative-scale standard errors of the masses (0 on the exact path).
    pub mass_std_errors: Vec<f64>,
    pub t_star: f64,
    pub radius: f64,
}

/// Smallest integer root of theta that exceeds 1/2.
fn effective_theta(theta: f64) -> f64 {
    if theta > 0.5 {
        return theta;
    }
    let mut m = (1.0 / theta).log2().floor() as i32 + 1;
    let mut eff = (theta.ln() / m as f64).exp();
    while eff <= 0.5 {
        m += 1;
        eff = (theta.ln() / m as f64).exp();
    }
    eff
}

/// Run K dichotomy levels and return the full trace.
///
/// At each level the two candidates are the subintervals of length
/// lambda |I_k| at distance rho |I_k| = (1-2 lambda)/3 |I_k| from either
/// endpoint; the one with smaller estimated annulus mass survives. Masses
/// equal within one standard error tie toward the left candidate, which
/// makes the run deterministic (the exact doubling path always ties).
pub fn dichotomy_radius(
    spec: &SystemSpec,
    x: &PhasePoint,
    n: u32,
    theta: f64,
    lambda: f64,
    depth: u32,
    budget: u64,
    stream: &RngStream,
) -> Result<DichotomyTrace> {
    check_theta(theta)?;
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Parameter(format!("lambda must lie in (0, 1/2), got {lambda}")));
    }
    if depth < 1 {
        return Err(Error::Parameter("dichotomy depth must be at least 1".into()));
    }
    let sampler = AnnulusSampler::new(spec, x, budget, stream)?;
    dichotomy_with_sampler(&sampler, n, theta, lambda, depth)
}

/// Dichotomy over an existing sampler; lets tests force the Monte Carlo path.
pub fn dichotomy_with_sampler(
    sampler: &AnnulusSampler,
    n: u32,
    theta_input: f64,
    lambda: f64,
    depth: u32,
) -> Result<DichotomyTrace> {
    check_theta(theta_input)?;
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Parameter(format!("lambda must lie in (0, 1/2), got {lambda}")));
    }
    let theta = effective_theta(theta_input);
    let rho = (1.0 - 2.0 * lambda) / 3.0;

    let mass_of = |a: f64, b: f64| sampler.annulus(radius_at(theta, n, a), radius_at(theta, n, b));
    let rel_se = |hits: u64| {
        if hits == u64::MAX || hits == 0 {
            0.0
        } else {
            // binomial count noise, relative would be 1/sqrt(hits); keep the
            // absolute scale of the mass for comparisons
            (hits as f64).sqrt() / sampler.samples().max(1) as f64
        }
    };

    let mut intervals = vec![(0.0, 1.0)];
    let mut chosen_sides = Vec::with_capacity(depth as usize);
    let (m0, h0) = mass_of(0.0, 1.0);
    let mut masses = vec![m0];
    let mut mass_std_errors = vec![rel_se(h0)];

    let mut current = (0.0f64, 1.0f64);
    for level in 0..depth {
        let len = current.1 - current.0;
        let left = (current.0 + rho * len, current.0 + (rho + lambda) * len);
        let right = (current.1 - (rho + lambda) * len, current.1 - rho * len);
        let (m_left, h_left) = mass_of(left.0, left.1);
        let (m_right, h_right) = mass_of(right.0, right.1);
        if !sampler.is_exact() && h_left.min(h_right) < MIN_COMPARE_SUPPORT {
            return Err(Error::Undersampled(format!(
                "at level {level}: candidate annuli hold {h_left} and {h_right} samples, \
                 need {MIN_COMPARE_SUPPORT} in the smaller one"
            )));
        }
        // combined count noise of the two disjoint annuli; the exact path
        // still needs a rounding-level tolerance so mathematically equal
        // masses (Lebesgue candidates are always equal) resolve as ties
        let se_diff = if sampler.is_exact() {
            1e-12 * (m_left + m_right)
        } else {
            ((h_left + h_right) as f64).sqrt() / sampler.samples() as f64
        };
        let side = if (m_left - m_right).abs() <= se_diff || m_left <= m_right {
            Side::Left
        } else {
            Side::Right
        };
        current = match side {
            Side::Left => left,
            Side::Right => right,
        };
        chosen_sides.push(side);
        intervals.push(current);
        let (mk, hk) = mass_of(current.0, current.1);
        masses.push(mk);
        mass_std_errors.push(rel_se(hk));
    }

    let t_star = 0.5 * (current.0 + current.1);
    Ok(DichotomyTrace {
        theta,
        theta_input,
        n,
        lambda,
        rho,
        intervals,
        chosen_sides,
        masses,
        mass_std_errors,
        t_star,
        radius: radius_at(theta, n, t_star),
    })
}

/// One corona inequality check at a single s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoronaCheck {
    pub s: f64,
    pub corona_mass: f64,
    pub bound: f64,
    pub passes: bool,
    /// Smallest C0 that would make this s pass.
    pub implied_c0: f64,
}

/// Outcome of verifying the corona bound over a schedule of widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoronaReport {
    pub radius: f64,
    pub exponent: f64,
    pub c0: f64,
    pub ball_2r_mass: f64,
    pub checks: Vec<CoronaCheck>,
    /// Smallest C0 passing the whole schedule.
    pub smallest_passing_c0: f64,
}

/// Check mu(B(x,r+s) \ B(x,r)) <= C0 s^a r^{-a} mu(B(x,2r)) for each s.
pub fn verify_corona_bound(
    spec: &SystemSpec,
    x: &PhasePoint,
    radius: f64,
    a: f64,
    c0: f64,
    s_schedule: &[f64],
    budget: u64,
    stream: &RngStream,
) -> Result<CoronaReport> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    if !(a > 0.0) {
        return Err(Error::Parameter(format!("exponent a must be positive, got {a}")));
    }
    if s_schedule.is_empty() {
        return Err(Error::Parameter("s schedule must be nonempty".into()));
    }
    for &s in s_schedule {
        if !(s > 0.0 && s < radius) {
            return Err(Error::Parameter(format!(
                "every s must satisfy 0 < s < r = {radius}, got s={s}"
            )));
        }
    }
    let sampler = AnnulusSampler::new(spec, x, budget, stream)?;
    let ball_2r = sampler.ball_mass(2.0 * radius);
    if ball_2r <= 0.0 {
        return Err(Error::Undersampled(format!(
            "B(x, 2r) holds no samples at r = {radius}"
        )));
    }
    let mut checks = Vec::with_capacity(s_schedule.len());
    let mut smallest = 0.0f64;
    for &s in s_schedule {
        let (corona, _) = sampler.annulus(radius, radius + s);
        let scale = s.powf(a) * radius.powf(-a) * ball_2r;
        let bound = c0 * scale;
        let implied_c0 = corona / scale;
        smallest = smallest.max(implied_c0);
        checks.push(CoronaCheck {
            s,
            corona_mass: corona,
            bound,
            passes: corona <= bound,
            implied_c0,
        });
    }
    Ok(CoronaReport {
        radius,
        exponent: a,
        c0,
        ball_2r_mass: ball_2r,
        checks,
        smallest_passing_c0: smallest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn doubling_center() -> (SystemSpec, PhasePoint) {
        (SystemSpec::doubling(), PhasePoint::circle(0.37))
    }

    #[test]
    fn corona_mass_exact_doubling() {
        let (spec, x) = doubling_center();
        let stream = RngStream::new(41, 0);
        let full = corona_mass(&spec, &x, 3, 0.5, 0.0, 1.0, 1_000, &stream).unwrap();
        assert_relative_eq!(full, 0.125, max_relative = 1e-14);
        let empty = corona_mass(&spec, &x, 3, 0.5, 0.3, 0.3, 1_000, &stream).unwrap();
        assert_eq!(empty, 0.0);
        let part = corona_mass(&spec, &x, 3, 0.5, 0.25, 0.5, 1_000, &stream).unwrap();
        assert_relative_eq!(part, 0.03125, max_relative = 1e-14);
    }

    #[test]
    fn corona_mass_rejects_bad_t() {
        let (spec, x) = doubling_center();
        let stream = RngStream::new(41, 0);
        assert!(corona_mass(&spec, &x, 3, 0.5, 0.5, 0.4, 1_000, &stream).is_err());
        assert!(corona_mass(&spec, &x, 3, 0.5, -0.1, 0.4, 1_000, &stream).is_err());
    }

    #[test]
    fn effective_theta_reduction() {
        assert_eq!(effective_theta(0.7), 0.7);
        // 1/2 -> square root
        assert_relative_eq!(effective_theta(0.5), 0.5f64.sqrt(), max_relative = 1e-15);
        // 0.2 -> cube root (0.2^{1/2} = 0.447 <= 1/2, 0.2^{1/3} = 0.585 > 1/2)
        assert_relative_eq!(
            effective_theta(0.2),
            (0.2f64.ln() / 3.0).exp(),
            max_relative = 1e-15
        );
        assert!(effective_theta(0.2) > 0.5);
    }

    #[test]
    fn dichotomy_level_one_hand_trace() {
        // lambda = 1/4: rho = 1/6, candidates (1/6, 5/12) and (7/12, 5/6),
        // Lebesgue tie resolves left.
        let (spec, x) = doubling_center();
        let trace =
            dichotomy_radius(&spec, &x, 3, 0.5, 0.25, 1, 1_000, &RngStream::new(42, 0)).unwrap();
        let rho = (1.0 - 2.0 * 0.25) / 3.0;
        assert_eq!(trace.rho, rho);
        assert_eq!(trace.intervals[0], (0.0, 1.0));
        assert_eq!(trace.intervals[1], (rho, rho + 0.25));
        assert_eq!(trace.chosen_sides, vec![Side::Left]);
        // effective theta for input 1/2 is sqrt(1/2)
        assert_relative_eq!(trace.theta, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_eq!(trace.theta_input, 0.5);
    }

    #[test]
    fn dichotomy_exact_path_is_left_nested_and_deterministic() {
        let (spec, x) = doubling_center();
        let stream = RngStream::new(43, 0);
        let a = dichotomy_radius(&spec, &x, 2, 0.6, 0.25, 6, 1_000, &stream).unwrap();
        let b = dichotomy_radius(&spec, &x, 2, 0.6, 0.25, 6, 1_000, &stream).unwrap();
        assert_eq!(a, b);
        assert!(a.chosen_sides.iter().all(|s| *s == Side::Left));
        // interval lengths are lambda^k
        for (k, (lo, hi)) in a.intervals.iter().enumerate() {
            assert_relative_eq!(hi - lo, 0.25f64.powi(k as i32), epsilon = 1e-12);
        }
        // nesting with the rho gap
        for k in 0..a.intervals.len() - 1 {
            let (lo, hi) = a.intervals[k];
            let (lo1, hi1) = a.intervals[k + 1];
            let gap = a.rho * 0.25f64.powi(k as i32);
            assert!(lo1 >= lo + gap - 1e-12);
            assert!(hi1 <= hi - gap + 1e-12);
        }
    }

    #[test]
    fn dichotomy_radius_lies_in_bracket() {
        let (spec, x) = doubling_center();
        let stream = RngStream::new(44, 0);
        for (n, theta, lambda) in [(1u32, 0.7, 0.3), (3, 0.55, 0.25), (2, 0.3, 0.2), (0, 0.9, 0.4)]
        {
            let trace =
                dichotomy_radius(&spec, &x, n, theta, lambda, 5, 1_000, &stream).unwrap();
            let lo = trace.theta.powi(n as i32 + 1);
            let hi = trace.theta.powi(n as i32);
            assert!(
                trace.radius > lo && trace.radius < hi,
                "radius {} outside ({lo}, {hi})",
                trace.radius
            );
            assert_relative_eq!(
                trace.radius,
                lo + trace.t_star * (hi - lo),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn dichotomy_halving_on_exact_measure() {
        let (spec, x) = doubling_center();
        let trace =
            dichotomy_radius(&spec, &x, 3, 0.6, 0.25, 6, 1_000, &RngStream::new(45, 0)).unwrap();
        for (k, m) in trace.masses.iter().enumerate() {
            assert!(
                *m <= trace.masses[0] * 0.5f64.powi(k as i32) + 1e-15,
                "m(I_{k}) = {m} violates halving"
            );
        }
    }

    #[test]
    fn dichotomy_undersampled_error_names_level() {
        let (spec, x) = (
            SystemSpec::stadium(2.0).unwrap(),
            PhasePoint::billiard(1.0, 0.1, 2.0).unwrap(),
        );
        // tiny budget cannot support level-3 comparisons
        let err = dichotomy_radius(&spec, &x, 2, 0.6, 0.25, 6, 2_000, &RngStream::new(46, 0));
        assert!(matches!(err, Err(Error::Undersampled(_))), "{err:?}");
    }

    #[test]
    fn corona_bound_exact_doubling_passes() {
        // r = 2^-6, a = 1/2, C0 = 8, s in {r^2, r^3}: corona mass is 2s and
        // the bound is 8 s^{1/2} r^{-1/2} (4r); 2s <= 32 s^{1/2} r^{1/2} holds.
        let (spec, x) = doubling_center();
        let r = 2f64.powi(-6);
        let report = verify_corona_bound(
            &spec,
            &x,
            r,
            0.5,
            8.0,
            &[r * r, r * r * r],
            1_000,
            &RngStream::new(47, 0),
        )
        .unwrap();
        assert!(report.checks.iter().all(|c| c.passes));
        for c in &report.checks {
            assert_relative_eq!(c.corona_mass, 2.0 * c.s, max_relative = 1e-12);
        }
        assert!(report.smallest_passing_c0 <= 8.0);
    }

    #[test]
    fn corona_bound_rejects_s_at_or_beyond_r() {
        let (spec, x) = doubling_center();
        let r = 0.01;
        let err = verify_corona_bound(
            &spec,
            &x,
            r,
            0.5,
            8.0,
            &[r],
            1_000,
            &RngStream::new(48, 0),
        );
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn exponent_from_lambda_quarter() {
        // a = -ln 2 / ln(1/4) = 1/2
        let a = -(2.0f64.ln()) / 0.25f64.ln();
        assert_relative_eq!(a, 0.5, max_relative = 1e-15);
    }
}
