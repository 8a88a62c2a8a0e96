//! Poisson distribution utilities, total-variation distance, and the
//! explicit error bound R = 2NM(R1 + R2) + R3 for the Poisson approximation
//! of sums of stationary 0/1 variables. R3 is a closed formula; R1 and R2
//! are estimated by Monte Carlo for a concrete system, ball and horizon.

use serde::{Deserialize, Serialize};

use crate::dynamics::{dist_unchecked, PhasePoint, SystemSpec};
use crate::ensemble::{map_member_rngs, map_members};
use crate::error::{Error, Result};
use crate::hitstats::EmpiricalPMF;
use crate::orbit::Orbit;
use crate::rng::RngStream;

/// Batches used for batch-means standard errors of covariance estimates.
const COV_BATCHES: usize = 30;

/// log(k!), exact summation. Accurate to ~1e-12 relative for the k used here.
fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// P(Poisson(lambda) = k). Direct arithmetic for small k, log-space beyond
/// k = 20 to avoid factorial overflow. lambda = 0 is the unit mass at 0.
pub fn poisson_pmf(lambda: f64, k: u64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if k <= 20 {
        let factorial: f64 = (2..=k).map(|i| i as f64).product();
        Ok(lambda.powi(k as i32) * (-lambda).exp() / factorial)
    } else {
        Ok((k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp())
    }
}

/// A discrete distribution on the nonnegative integers, as seen by
/// [`tv_distance`]: either an empirical tally or an analytic Poisson law.
#[derive(Debug, Clone, Copy)]
pub enum PmfView<'a> {
    Empirical(&'a EmpiricalPMF),
    Poisson(f64),
}

impl<'a> PmfView<'a> {
    pub fn empirical(pmf: &'a EmpiricalPMF) -> Self {
        PmfView::Empirical(pmf)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Parameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(PmfView::Poisson(lambda))
    }

    fn mass(&self, k: u64) -> f64 {
        match self {
            PmfView::Empirical(pmf) => pmf.frequency(k),
            PmfView::Poisson(lambda) => poisson_pmf(*lambda, k).expect("validated lambda"),
        }
    }

    /// Upper end of the summation window: full support for empirical data,
    /// lambda + 40 sqrt(lambda) + 40 for Poisson (cumulative mass beyond is
    /// under 1e-12 and is accounted for as a worst-case remainder).
    fn support_end(&self) -> u64 {
        match self {
            PmfView::Empirical(pmf) => pmf.max_value().unwrap_or(0),
            PmfView::Poisson(lambda) => (lambda + 40.0 * lambda.sqrt() + 40.0).ceil() as u64,
        }
    }
}

/// Total variation distance: half the l1 distance between the mass functions,
/// with truncated analytic tails added back as a worst case.
pub fn tv_distance(a: &PmfView, b: &PmfView) -> f64 {
    let end = a.support_end().max(b.support_end());
    let mut l1 = 0.0;
    let mut mass_a = 0.0;
    let mut mass_b = 0.0;
    for k in 0..=end {
        let pa = a.mass(k);
        let pb = b.mass(k);
        l1 += (pa - pb).abs();
        mass_a += pa;
        mass_b += pb;
    }
    let tail_a = (1.0 - mass_a).max(0.0);
    let tail_b = (1.0 - mass_b).max(0.0);
    0.5 * (l1 + tail_a + tail_b)
}

fn check_bound_params(epsilon: f64, n: u64, p: u64, m: u64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Parameter(format!("epsilon must lie in [0,1], got {epsilon}")));
    }
    if !(2 <= p && p < n) {
        return Err(Error::Parameter(format!("need 2 <= p < N, got p={p}, N={n}")));
    }
    if !(1 <= m && m <= n - 1) {
        return Err(Error::Parameter(format!("need 1 <= M <= N-1, got M={m}, N={n}")));
    }
    Ok(())
}

/// The closed-form block term
/// R3 = 4 ( M p eps (1 + N eps) + (eps N)^M / M! e^{-N eps} + N eps^2 ),
/// with the middle term evaluated in log-space.
pub fn r3_bound(epsilon: f64, n: u64, p: u64, m: u64) -> Result<f64> {
    check_bound_params(epsilon, n, p, m)?;
    let ne = n as f64 * epsilon;
    let first = m as f64 * p as f64 * epsilon * (1.0 + ne);
    let middle = if ne == 0.0 {
        0.0
    } else {
        (m as f64 * ne.ln() - ln_factorial(m) - ne).exp()
    };
    let last = n as f64 * epsilon * epsilon;
    Ok(4.0 * (first + middle + last))
}

/// One assembled error bound, together with the Monte Carlo pedigree of its
/// estimated components. `total = 2 N M (r1 + r2) + r3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub n: u64,
    pub p: u64,
    pub m: u64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub total: f64,
    pub r1_std_err: f64,
    pub r2_std_err: f64,
}

/// Assemble the full bound from its pieces.
pub fn total_bound(
    epsilon: f64,
    n: u64,
    p: u64,
    m: u64,
    r1: f64,
    r2: f64,
    r1_std_err: f64,
    r2_std_err: f64,
) -> Result<BoundReport> {
    check_bound_params(epsilon, n, p, m)?;
    if r1 < 0.0 || r2 < 0.0 || r1_std_err < 0.0 || r2_std_err < 0.0 {
        return Err(Error::Parameter("bound components must be nonnegative".into()));
    }
    let r3 = r3_bound(epsilon, n, p, m)?;
    let total = 2.0 * n as f64 * m as f64 * (r1 + r2) + r3;
    Ok(BoundReport {
        epsilon,
        n,
        p,
        m,
        r1,
        r2,
        r3,
        total,
        r1_std_err,
        r2_std_err,
    })
}

/// Monte Carlo estimate of the short-return term
/// R2 = mu({ y in B(x,r) : some f^l(y) in B(x,r), l = 2..p }).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R2Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Samples that landed in the ball at all.
    pub ball_hits: u64,
    pub samples: u64,
}

pub fn estimate_r2(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    p: u64,
    ensemble_size: u64,
    stream: &RngStream,
) -> Result<R2Estimate> {
    spec.validate()?;
    spec.check_point(x)?;
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {r}")));
    }
    if p < 2 {
        return Err(Error::Parameter(format!("need p >= 2, got {p}")));
    }
    if ensemble_size == 0 {
        return Err(Error::Parameter("ensemble_size must be positive".into()));
    }
    let burn = crate::dynamics::default_burn_in(spec);
    // per member: (landed in ball, returned within 2..=p)
    let flags: Vec<(bool, bool)> = map_member_rngs(stream, ensemble_size, |_, rng| {
        let mut orbit = Orbit::sampled(spec, rng, burn);
        if dist_unchecked(spec, x, &orbit.position()) >= r {
            return (false, false);
        }
        orbit.advance(); // l = 1, not counted
        for _ in 2..=p {
            let point = orbit.advance();
            if dist_unchecked(spec, x, &point) < r {
                return (true, true);
            }
        }
        (true, false)
    });
    let ball_hits = flags.iter().filter(|f| f.0).count() as u64;
    if ball_hits == 0 {
        return Err(Error::Undersampled(format!(
            "no sample of {ensemble_size} landed in B(x, {r})"
        )));
    }
    let returners = flags.iter().filter(|f| f.1).count() as u64;
    let value = returners as f64 / ensemble_size as f64;
    Ok(R2Estimate {
        value,
        std_error: (value * (1.0 - value) / ensemble_size as f64).sqrt(),
        ball_hits,
        samples: ensemble_size,
    })
}

/// Grid probe of the decorrelation term
/// R1 = sup_{j,q} |Cov(1_B, 1_{S_{p+1}^{N-j} = q})|.
///
/// The supremum over all legal (j, q) is not computable; this evaluates the
/// covariance on the supplied grids and reports the largest absolute value,
/// so it is a lower-bound probe of R1, labeled as such wherever reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R1Estimate {
    /// max |cov| over the grid; a lower bound for the true supremum.
    pub value: f64,
    pub std_error: f64,
    pub arg_j: u64,
    pub arg_q: u64,
    /// every probed pair: (j, q, covariance, std_error)
    pub pairs: Vec<(u64, u64, f64, f64)>,
}

fn check_r1_grids(n: u64, p: u64, j_grid: &[u64], q_grid: &[u64]) -> Result<()> {
    if j_grid.is_empty() || q_grid.is_empty() {
        return Err(Error::Parameter("j_grid and q_grid must be nonempty".into()));
    }
    if p < 2 || p >= n {
        return Err(Error::Parameter(format!("need 2 <= p < N, got p={p}, N={n}")));
    }
    for &j in j_grid {
        if j > n - p {
            return Err(Error::Parameter(format!(
                "j={j} leaves an empty window, need j <= N-p = {}",
                n - p
            )));
        }
    }
    Ok(())
}

/// Covariance grid over per-member data (b, S at each j checkpoint).
fn r1_from_members(
    members: &[(bool, Vec<u64>)],
    j_grid: &[u64],
    q_grid: &[u64],
) -> R1Estimate {
    let total = members.len() as f64;
    let batch_len = members.len().div_ceil(COV_BATCHES);
    let mut best: Option<(f64, f64, u64, u64)> = None;
    let mut pairs = Vec::with_capacity(j_grid.len() * q_grid.len());
    for (ji, &j) in j_grid.iter().enumerate() {
        for &q in q_grid {
            let mut mean_b = 0.0;
            let mut mean_z = 0.0;
            let mut mean_bz = 0.0;
            let mut batch_covs = Vec::with_capacity(COV_BATCHES);
            for chunk in members.chunks(batch_len) {
                let len = chunk.len() as f64;
                let mut cb = 0.0;
                let mut cz = 0.0;
                let mut cbz = 0.0;
                for (b, s) in chunk {
                    let zb = (s[ji] == q) as u64 as f64;
                    let bb = *b as u64 as f64;
                    cb += bb;
                    cz += zb;
                    cbz += bb * zb;
                }
                mean_b += cb;
                mean_z += cz;
                mean_bz += cbz;
                batch_covs.push(cbz / len - (cb / len) * (cz / len));
            }
            mean_b /= total;
            mean_z /= total;
            mean_bz /= total;
            let cov = mean_bz - mean_b * mean_z;
            let k = batch_covs.len() as f64;
            let bmean = batch_covs.iter().sum::<f64>() / k;
            let bvar = batch_covs.iter().map(|c| (c - bmean).powi(2)).sum::<f64>()
                / (k - 1.0).max(1.0);
            let se = (bvar / k).sqrt();
            pairs.push((j, q, cov, se));
            if best.map(|(v, ..)| cov.abs() > v).unwrap_or(true) {
                best = Some((cov.abs(), se, j, q));
            }
        }
    }
    let (value, std_error, arg_j, arg_q) = best.expect("nonempty grids");
    R1Estimate {
        value,
        std_error,
        arg_j,
        arg_q,
        pairs,
    }
}

/// Per-member checkpoint data for the dynamical process 1_B(f^l y).
pub fn estimate_r1(
    spec: &SystemSpec,
    x: &PhasePoint,
    r: f64,
    n: u64,
    p: u64,
    j_grid: &[u64],
    q_grid: &[u64],
    ensemble_size: u64,
    stream: &RngStream,
) -> Result<R1Estimate> {
    spec.validate()?;
    spec.check_point(x)?;
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {r}")));
    }
    check_r1_grids(n, p, j_grid, q_grid)?;
    if ensemble_size == 0 {
        return Err(Error::Parameter("ensemble_size must be positive".into()));
    }
    let burn = crate::dynamics::default_burn_in(spec);
    // S_{p+1}^{N-j} for every j is a checkpoint of one cumulative scan.
    let mut checkpoints: Vec<u64> = j_grid.iter().map(|&j| n - j).collect();
    let grid: Vec<u64> = j_grid.to_vec();
    checkpoints.sort_unstable();
    let members: Vec<(bool, Vec<u64>)> = map_member_rngs(stream, ensemble_size, |_, rng| {
        let mut orbit = Orbit::sampled(spec, rng, burn);
        let b = dist_unchecked(spec, x, &orbit.position()) < r;
        let mut cumulative = 0u64;
        let mut at_step = vec![0u64; checkpoints.len()];
        let mut ci = 0usize;
        for l in 1..=n {
            let point = orbit.advance();
            if l >= p + 1 && dist_unchecked(spec, x, &point) < r {
                cumulative += 1;
            }
            while ci < checkpoints.len() && checkpoints[ci] == l {
                at_step[ci] = cumulative;
                ci += 1;
            }
        }
        while ci < checkpoints.len() {
            at_step[ci] = cumulative;
            ci += 1;
        }
        // reorder back to j_grid order
        let s: Vec<u64> = grid
            .iter()
            .map(|&j| {
                let target = n - j;
                let idx = checkpoints.binary_search(&target).expect("own checkpoint");
                at_step[idx]
            })
            .collect();
        (b, s)
    });
    Ok(r1_from_members(&members, j_grid, q_grid))
}

/// Same probe on a synthetic i.i.d. Bernoulli(eps) process in place of the
/// orbit: a negative control whose true covariances are exactly zero.
pub fn estimate_r1_bernoulli(
    epsilon: f64,
    n: u64,
    p: u64,
    j_grid: &[u64],
    q_grid: &[u64],
    ensemble_size: u64,
    stream: &RngStream,
) -> Result<R1Estimate> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Parameter(format!("epsilon must lie in [0,1], got {epsilon}")));
    }
    check_r1_grids(n, p, j_grid, q_grid)?;
    if ensemble_size == 0 {
        return Err(Error::Parameter("ensemble_size must be positive".into()));
    }
    let mut checkpoints: Vec<u64> = j_grid.iter().map(|&j| n - j).collect();
    let grid: Vec<u64> = j_grid.to_vec();
    checkpoints.sort_unstable();
    let members: Vec<(bool, Vec<u64>)> = map_members(stream, ensemble_size, |_, rng| {
        let b = rand::Rng::random::<f64>(rng) < epsilon;
        let mut cumulative = 0u64;
        let mut at_step = vec![0u64; checkpoints.len()];
        let mut ci = 0usize;
        for l in 1..=n {
            if l >= p + 1 && rand::Rng::random::<f64>(rng) < epsilon {
                cumulative += 1;
            }
            while ci < checkpoints.len() && checkpoints[ci] == l {
                at_step[ci] = cumulative;
                ci += 1;
            }
        }
        while ci < checkpoints.len() {
            at_step[ci] = cumulative;
            ci += 1;
        }
        let s: Vec<u64> = grid
            .iter()
            .map(|&j| {
                let target = n - j;
                let idx = checkpoints.binary_search(&target).expect("own checkpoint");
                at_step[idx]
            })
            .collect();
        (b, s)
    });
    Ok(r1_from_members(&members, j_grid, q_grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step;
    use approx::assert_relative_eq;

    #[test]
    fn pmf_basics() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(0.0, 3).unwrap(), 0.0);
        assert_relative_eq!(poisson_pmf(1.0, 0).unwrap(), 0.3678794412, epsilon = 1e-10);
        assert_relative_eq!(poisson_pmf(2.0, 2).unwrap(), 0.2706705665, epsilon = 1e-10);
        assert!(poisson_pmf(-1.0, 0).is_err());
    }

    #[test]
    fn pmf_log_space_consistent_at_crossover() {
        // direct and log-space paths agree around k = 20
        for lambda in [0.5, 5.0, 25.0] {
            let direct = poisson_pmf(lambda, 20).unwrap();
            let logged = (20.0 * lambda.ln() - lambda - ln_factorial(20)).exp();
            assert_relative_eq!(direct, logged, max_relative = 1e-12);
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        for lambda in [0.3f64, 1.0, 7.0, 150.0] {
            let end = (lambda + 40.0 * lambda.sqrt() + 40.0).ceil() as u64;
            let sum: f64 = (0..=end).map(|k| poisson_pmf(lambda, k).unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-12, "lambda={lambda}: sum={sum}");
        }
    }

    #[test]
    fn tv_of_identical_poissons_is_zero() {
        let a = PmfView::poisson(1.0).unwrap();
        let b = PmfView::poisson(1.0).unwrap();
        assert_eq!(tv_distance(&a, &b), 0.0);
    }

    #[test]
    fn tv_unit_mass_vs_poisson_one() {
        let unit = EmpiricalPMF::from_samples([0]);
        let d = tv_distance(&PmfView::empirical(&unit), &PmfView::poisson(1.0).unwrap());
        assert_relative_eq!(d, 1.0 - (-1.0f64).exp(), epsilon = 1e-10);
        assert_relative_eq!(d, 0.6321205588, epsilon = 1e-9);
    }

    #[test]
    fn tv_empirical_identities() {
        let unit = EmpiricalPMF::from_samples([0]);
        let d = tv_distance(
            &PmfView::empirical(&unit),
            &PmfView::poisson(0.0).unwrap(),
        );
        assert_eq!(d, 0.0);
    }

    #[test]
    fn tv_is_symmetric_and_triangular() {
        let pmfs = [
            EmpiricalPMF::from_samples([0, 0, 1, 2, 2, 3]),
            EmpiricalPMF::from_samples([1, 1, 1, 4]),
            EmpiricalPMF::from_samples([0, 5, 5, 2]),
        ];
        let views: Vec<PmfView> = pmfs.iter().map(PmfView::empirical).collect();
        for a in &views {
            for b in &views {
                let ab = tv_distance(a, b);
                let ba = tv_distance(b, a);
                assert_eq!(ab, ba);
                for c in &views {
                    assert!(ab <= tv_distance(a, c) + tv_distance(c, b) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn r3_examples() {
        assert_eq!(r3_bound(0.0, 100, 2, 1).unwrap(), 0.0);
        // 4 (0.04 + e^{-1} + 0.01)
        assert_relative_eq!(
            r3_bound(0.01, 100, 2, 1).unwrap(),
            4.0 * (0.04 + (-1.0f64).exp() + 0.01),
            max_relative = 1e-14
        );
        assert_relative_eq!(r3_bound(0.01, 100, 2, 1).unwrap(), 1.6715177647, epsilon = 1e-9);
        // 4 (0.06 + e^{-1}/6 + 0.001)
        assert_relative_eq!(
            r3_bound(0.001, 1000, 10, 3).unwrap(),
            4.0 * (0.06 + (-1.0f64).exp() / 6.0 + 0.001),
            max_relative = 1e-14
        );
    }

    #[test]
    fn r3_rejects_bad_parameters() {
        assert!(r3_bound(1.5, 100, 2, 1).is_err());
        assert!(r3_bound(0.1, 100, 1, 1).is_err()); // p < 2
        assert!(r3_bound(0.1, 100, 100, 1).is_err()); // p >= N
        assert!(r3_bound(0.1, 100, 2, 100).is_err()); // M > N-1
    }

    #[test]
    fn r3_monotone_in_epsilon_and_p() {
        let eps_grid: Vec<f64> = (1..40).map(|i| i as f64 * 0.01).collect();
        for w in eps_grid.windows(2) {
            assert!(r3_bound(w[0], 500, 5, 3).unwrap() <= r3_bound(w[1], 500, 5, 3).unwrap());
        }
        for p in 2..30u64 {
            assert!(r3_bound(0.01, 500, p, 3).unwrap() <= r3_bound(0.01, 500, p + 1, 3).unwrap());
        }
    }

    #[test]
    fn total_bound_assembly() {
        let report = total_bound(0.01, 100, 2, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(report.total, report.r3);
        let report = total_bound(0.01, 100, 2, 1, 0.001, 0.002, 0.0, 0.0).unwrap();
        // 2*100*1*0.003 + r3
        assert_relative_eq!(
            report.total,
            0.6 + r3_bound(0.01, 100, 2, 1).unwrap(),
            max_relative = 1e-14
        );
        assert_relative_eq!(report.total, 2.2715177647, epsilon = 1e-9);
    }

    #[test]
    fn r2_near_fixed_point_matches_brute_force() {
        // Orbit calculus for x = 0, r = 0.01, p = 5 on the doubling map:
        // y in B returns iff 2^l |y| < r for some l in 2..=5, i.e. |y| < r/4.
        // The set has Lebesgue measure 2 * r/4 = 0.005; confirm by grid.
        let spec = SystemSpec::doubling();
        let x = PhasePoint::circle(0.0);
        let r = 0.01;
        let grid = 2_000_000u64;
        let mut inside = 0u64;
        for i in 0..grid {
            let y = (i as f64 + 0.5) / grid as f64;
            let yp = PhasePoint::circle(y);
            if dist_unchecked(&spec, &x, &yp) < r {
                let mut point = yp;
                point = step(&spec, point); // l = 1
                for _ in 2..=5u64 {
                    point = step(&spec, point);
                    if dist_unchecked(&spec, &x, &point) < r {
                        inside += 1;
                        break;
                    }
                }
            }
        }
        let brute = inside as f64 / grid as f64;
        assert_relative_eq!(brute, 0.005, max_relative = 1e-3);

        let est = estimate_r2(&spec, &x, r, 5, 400_000, &RngStream::new(31, 0)).unwrap();
        assert!(
            (est.value - brute).abs() < 0.1 * brute + 3.0 * est.std_error,
            "estimate {} vs brute force {brute}",
            est.value
        );
    }

    #[test]
    fn r2_everything_returns_when_ball_covers_space() {
        let spec = SystemSpec::doubling();
        let x = PhasePoint::circle(0.4);
        let est = estimate_r2(&spec, &x, 0.6, 2, 2_000, &RngStream::new(32, 0)).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn r1_bernoulli_control_is_zero_within_errors() {
        let est = estimate_r1_bernoulli(
            0.01,
            512,
            16,
            &[0, 128, 256],
            &[0, 1, 2],
            100_000,
            &RngStream::new(33, 0),
        )
        .unwrap();
        assert!(
            est.value <= 3.0 * est.std_error,
            "bernoulli control: {} vs se {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn r1_impossible_event_has_zero_covariance() {
        // q = N cannot happen: the window p+1..N holds fewer than N steps.
        let est = estimate_r1_bernoulli(
            0.05,
            128,
            4,
            &[0],
            &[128],
            5_000,
            &RngStream::new(34, 0),
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn r1_rejects_empty_grids() {
        let spec = SystemSpec::doubling();
        let x = PhasePoint::circle(0.3);
        assert!(matches!(
            estimate_r1(&spec, &x, 0.01, 100, 4, &[], &[0], 100, &RngStream::new(35, 0)),
            Err(Error::Parameter(_))
        ));
    }
}
