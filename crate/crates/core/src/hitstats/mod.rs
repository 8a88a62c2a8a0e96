//! Visit-count processes, first-return times, ball-measure estimation,
//! recurrence-rate and local-dimension slopes, corona ratios, Kac check.

mod fit;
mod pmf;

pub use fit::SlopeEstimate;
pub use pmf::EmpiricalPMF;

use serde::{Deserialize, Serialize};

use crate::dynamics::{dist_unchecked, step, PhasePoint, SystemSpec};
use crate::ensemble::{count_below, distance_pool, map_member_rngs};
use crate::error::{Error, Result};
use crate::orbit::Orbit;
use crate::rng::RngStream;

/// Attempts granted to rejection sampling before declaring a ball unreachable.
const REJECTION_ATTEMPTS: u64 = 2_000_000;

/// Closed-form invariant ball measure, where one exists.
///
/// Only the doubling map has one across all radii: the shortest-arc ball of
/// radius r has Lebesgue measure min(2r, 1).
pub fn exact_ball_measure(spec: &SystemSpec, _x: &PhasePoint, r: f64) -> Option<f64> {
    match spec {
        SystemSpec::Doubling => Some((2.0 * r).min(1.0)),
        _ => None,
    }
}

/// A ball-measure value with its sampling pedigree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_error: f64,
    /// True when the value came from a closed form rather than sampling.
    pub exact: bool,
    pub hits: u64,
    pub samples: u64,
}

impl MeasureEstimate {
    /// Zero hits out of a nonzero sampling budget: the ball was missed
    /// entirely and the estimate carries no information.
    pub fn is_undersampled(&self) -> bool {
        !self.exact && self.hits == 0
    }
}

/// Monte Carlo estimate of mu(B(x, r)) with binomial standard error.
pub fn estimate_ball_measure(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    budget: u64,
    stream: &RngStream,
) -> Result<MeasureEstimate> {
    spec.validate()?;
    spec.check_point(x)?;
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {r}")));
    }
    if let Some(value) = exact_ball_measure(spec, x, r) {
        return Ok(MeasureEstimate {
            value,
            std_error: 0.0,
            exact: true,
            hits: 0,
            samples: 0,
        });
    }
    if budget < 1_000 {
        return Err(Error::Parameter(format!(
            "measure budget must be at least 1000, got {budget}"
        )));
    }
    let distances = distance_pool(spec, x, stream, budget);
    let hits = count_below(&distances, r);
    let p = hits as f64 / budget as f64;
    Ok(MeasureEstimate {
        value: p,
        std_error: (p * (1.0 - p) / budget as f64).sqrt(),
        exact: false,
        hits,
        samples: budget,
    })
}

fn check_center(spec: &SystemSpec, x: &PhasePoint, r: f64) -> Result<()> {
    spec.validate()?;
    spec.check_point(x)?;
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Number of times the orbit of `y` visits B(x, r) at steps p..=q.
pub fn count_visits(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    y: &PhasePoint,
    p: u64,
    q: u64,
) -> Result<u64> {
    check_center(spec, x, r)?;
    spec.check_point(y)?;
    if p < 1 || q < p {
        return Err(Error::Range(format!("need 1 <= p <= q, got p={p}, q={q}")));
    }
    let mut point = *y;
    let mut hits = 0u64;
    for step_index in 1..=q {
        point = step(spec, point);
        if step_index >= p && dist_unchecked(spec, x, &point) < r {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Outcome of a capped first-return search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "n", rename_all = "snake_case")]
pub enum ReturnTime {
    Hit(u64),
    Exceeded(u64),
}

impl ReturnTime {
    pub fn value(&self) -> Option<u64> {
        match self {
            ReturnTime::Hit(n) => Some(*n),
            ReturnTime::Exceeded(_) => None,
        }
    }
}

/// Least n in 1..=cap with d(f^n x, x) < r.
pub fn first_return_time(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    cap: u64,
) -> Result<ReturnTime> {
    check_center(spec, x, r)?;
    if cap < 1 {
        return Err(Error::Parameter("cap must be at least 1".into()));
    }
    let mut point = *x;
    for n in 1..=cap {
        point = step(spec, point);
        if dist_unchecked(spec, x, &point) < r {
            return Ok(ReturnTime::Hit(n));
        }
    }
    Ok(ReturnTime::Exceeded(cap))
}

fn check_decreasing_radii(radii: &[f64]) -> Result<()> {
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Parameter("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// A slope fit together with the radii that had to be discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceRate {
    pub fit: SlopeEstimate,
    /// (radius, return time) for every requested radius; None hit the cap.
    pub taus: Vec<(f64, Option<u64>)>,
    pub dropped_radii: Vec<f64>,
}

/// Least-squares slope of log tau_r against -log r over a decreasing radii
/// schedule. Radii whose return time exceeds `cap` are dropped (imputing them
/// would bias the rate upward) and reported.
///
/// Runs on the orbit generator, so doubling centers are extended past their
/// 53 stored bits instead of collapsing onto the fixed point.
pub fn recurrence_rate(
    spec: &SystemSpec,
    x: &PhasePoint,
    radii: &[f64],
    cap: u64,
) -> Result<RecurrenceRate> {
    check_center(spec, x, radii.first().copied().unwrap_or(1.0))?;
    check_decreasing_radii(radii)?;
    if dist_unchecked(spec, x, &step(spec, *x)) == 0.0 {
        return Err(Error::Parameter(
            "center is an exact fixed point; recurrence rate is degenerate".into(),
        ));
    }
    // One orbit pass fills every tau: return times are monotone in the
    // radius, so radii complete in order from largest to smallest.
    let mut taus: Vec<Option<u64>> = vec![None; radii.len()];
    let mut next = 0usize;
    let mut orbit = Orbit::from_center(spec, x);
    for n in 1..=cap {
        let point = orbit.advance();
        let d = dist_unchecked(spec, x, &point);
        while next < radii.len() && d < radii[next] {
            taus[next] = Some(n);
            next += 1;
        }
        if next == radii.len() {
            break;
        }
    }
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (i, tau) in taus.iter().enumerate() {
        match tau {
            Some(n) => points.push((-radii[i].ln(), (*n as f64).ln())),
            None => dropped.push(radii[i]),
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} radii returned below cap {cap}; need 3 for a slope",
            points.len()
        )));
    }
    Ok(RecurrenceRate {
        fit: fit::fit_line(points),
        taus: radii.iter().copied().zip(taus).collect(),
        dropped_radii: dropped,
    })
}

/// A local-dimension slope fit with the radii whose measure estimate was zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub fit: SlopeEstimate,
    /// (radius, estimated measure) for every requested radius.
    pub measures: Vec<(f64, f64)>,
    pub dropped_radii: Vec<f64>,
}

/// Slope of log mu(B(x,r)) against log r.
///
/// Uses the exact measure for the doubling map; otherwise counts one shared
/// sample pool of size `budget` against every radius, which keeps the
/// per-radius estimates consistent and the total cost one pool.
pub fn local_dimension(
    spec: &SystemSpec,
    x: &PhasePoint,
    radii: &[f64],
    budget: u64,
    stream: &RngStream,
) -> Result<DimensionEstimate> {
    check_center(spec, x, radii.first().copied().unwrap_or(1.0))?;
    check_decreasing_radii(radii)?;
    if budget < 10_000 {
        return Err(Error::Parameter(format!(
            "dimension budget must be at least 10^4, got {budget}"
        )));
    }
    let mut points = Vec::new();
    let mut measures = Vec::new();
    let mut dropped = Vec::new();
    if exact_ball_measure(spec, x, radii[0]).is_some() {
        for &r in radii {
            let mu = exact_ball_measure(spec, x, r).expect("exact path");
            measures.push((r, mu));
            points.push((r.ln(), mu.ln()));
        }
    } else {
        let distances = distance_pool(spec, x, stream, budget);
        for &r in radii {
            let hits = count_below(&distances, r);
            let mu = hits as f64 / budget as f64;
            measures.push((r, mu));
            if hits == 0 {
                dropped.push(r);
            } else {
                points.push((r.ln(), mu.ln()));
            }
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} radii have nonzero measure estimates; need 3 for a slope",
            points.len()
        )));
    }
    Ok(DimensionEstimate {
        fit: fit::fit_line(points),
        measures,
        dropped_radii: dropped,
    })
}

/// Estimated mu(B(x, r + r^delta) \ B(x, r)) / mu(B(x, r)), numerator and
/// denominator counted on the same sample set.
pub fn corona_ratio(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    delta: f64,
    budget: u64,
    stream: &RngStream,
) -> Result<f64> {
    check_center(spec, x, r)?;
    if !(r < 1.0) {
        return Err(Error::Parameter(format!("corona radius must be in (0,1), got {r}")));
    }
    if !(delta > 1.0) {
        return Err(Error::Parameter(format!("delta must exceed 1, got {delta}")));
    }
    let outer = r + r.powf(delta);
    if let Some(inner_mass) = exact_ball_measure(spec, x, r) {
        let outer_mass = exact_ball_measure(spec, x, outer).expect("exact path");
        return Ok((outer_mass - inner_mass) / inner_mass);
    }
    let distances = distance_pool(spec, x, stream, budget);
    let inner_hits = count_below(&distances, r);
    if inner_hits == 0 {
        return Err(Error::Undersampled(format!(
            "no sample of {budget} landed in B(x, {r})"
        )));
    }
    let outer_hits = count_below(&distances, outer);
    Ok((outer_hits - inner_hits) as f64 / inner_hits as f64)
}

/// Conditioned mean entrance time and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanReturnTime {
    pub mean: f64,
    /// Members whose entrance search hit the cap (counted at the cap value).
    pub exceeded_members: u64,
    pub ensemble_size: u64,
}

/// Average first entrance time to B(x, r) over an ensemble drawn from the
/// invariant measure conditioned on the ball (rejection sampling). Kac's
/// bound makes mean * mu(B) at most 1 for ergodic systems.
pub fn mean_return_time(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    ensemble_size: u64,
    cap: u64,
    stream: &RngStream,
) -> Result<MeanReturnTime> {
    check_center(spec, x, r)?;
    if ensemble_size == 0 {
        return Err(Error::Undersampled("empty ensemble".into()));
    }
    if cap < 1 {
        return Err(Error::Parameter("cap must be at least 1".into()));
    }
    let burn = crate::dynamics::default_burn_in(spec);
    let outcomes: Vec<Result<(u64, bool)>> = map_member_rngs(stream, ensemble_size, |_, rng| {
        // draw from mu conditioned on the ball
        let mut orbit = Orbit::sampled(spec, rng, burn);
        let mut accepted = false;
        for _ in 0..REJECTION_ATTEMPTS {
            if dist_unchecked(spec, x, &orbit.position()) < r {
                accepted = true;
                break;
            }
            orbit.resample(burn);
        }
        if !accepted {
            return Err(Error::Undersampled(format!(
                "rejection sampling found no point of B(x, {r}) in {REJECTION_ATTEMPTS} attempts"
            )));
        }
        for n in 1..=cap {
            let point = orbit.advance();
            if dist_unchecked(spec, x, &point) < r {
                return Ok((n, false));
            }
        }
        Ok((cap, true))
    });
    let mut sum = 0u128;
    let mut exceeded = 0u64;
    for outcome in outcomes {
        let (n, hit_cap) = outcome?;
        sum += n as u128;
        exceeded += hit_cap as u64;
    }
    Ok(MeanReturnTime {
        mean: sum as f64 / ensemble_size as f64,
        exceeded_members: exceeded,
        ensemble_size,
    })
}

/// Empirical visit-count distribution with its horizon bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitCounts {
    pub pmf: EmpiricalPMF,
    /// Horizon floor(t / mu(B)) actually used.
    pub horizon: u64,
    pub measure: MeasureEstimate,
}

/// Distribution of the number of visits to B(x, r) up to time floor(t/mu(B))
/// over `ensemble_size` independent invariant-measure starting points.
pub fn visit_count_distribution(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    t: f64,
    ensemble_size: u64,
    measure_budget: u64,
    stream: &RngStream,
) -> Result<VisitCounts> {
    check_center(spec, x, r)?;
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("t must be positive, got {t}")));
    }
    if ensemble_size == 0 {
        return Err(Error::Parameter("ensemble_size must be positive".into()));
    }
    let measure = estimate_ball_measure(spec, x, r, measure_budget, &stream.substream(0))?;
    if measure.value <= 0.0 {
        return Err(Error::Undersampled(format!(
            "estimated measure of B(x, {r}) is zero; horizon undefined"
        )));
    }
    let horizon = (t / measure.value).floor() as u64;
    let burn = crate::dynamics::default_burn_in(spec);
    let ensemble_stream = stream.substream(1);
    let counts: Vec<u64> = map_member_rngs(&ensemble_stream, ensemble_size, |_, rng| {
        let mut orbit = Orbit::sampled(spec, rng, burn);
        let mut hits = 0u64;
        for _ in 0..horizon {
            let y = orbit.advance();
            if dist_unchecked(spec, x, &y) < r {
                hits += 1;
            }
        }
        hits
    });
    Ok(VisitCounts {
        pmf: EmpiricalPMF::from_samples(counts),
        horizon,
        measure,
    })
}
