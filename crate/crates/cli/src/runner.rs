//! Experiment execution: composes the library operations per the config and
//! shapes results for the JSON report and CSV table.

use serde_json::{json, Value};

use orbitstat::hitstats::{
    corona_ratio, estimate_ball_measure, exact_ball_measure, local_dimension, mean_return_time,
    recurrence_rate, visit_count_distribution,
};
use orbitstat::poisson::{
    estimate_r1, estimate_r2, poisson_pmf, total_bound, tv_distance, PmfView,
};
use orbitstat::radius_select::dichotomy_radius;
use orbitstat::{default_burn_in, sample_invariant, PhasePoint, RngStream, SystemSpec};

use crate::config::{CenterSpec, Experiment, ExperimentConfig};
use crate::CliError;

// Top-level stream indices, one per sampling role.
const STREAM_CENTER: u64 = 0;
const STREAM_MEASURE: u64 = 1;
const STREAM_ENSEMBLE: u64 = 2;
const STREAM_R1: u64 = 3;
const STREAM_POOL: u64 = 4;
const STREAM_VISITS: u64 = 5;

pub struct RunOutput {
    pub results: Value,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn resolve_center(config: &ExperimentConfig) -> Result<PhasePoint, CliError> {
    match config.center {
        CenterSpec::Explicit(p) => Ok(p),
        CenterSpec::Sampled => {
            let mut rng = RngStream::new(config.seed, STREAM_CENTER).rng();
            Ok(sample_invariant(
                &config.system,
                &mut rng,
                default_burn_in(&config.system),
            )?)
        }
    }
}

pub fn execute(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let center = resolve_center(config)?;
    let spec = &config.system;
    let mut results = match config.experiment {
        Experiment::PoissonTest => poisson_test(config, spec, &center)?,
        Experiment::Recurrence => recurrence(config, spec, &center)?,
        Experiment::Dimension => dimension(config, spec, &center)?,
        Experiment::Kac => kac(config, spec, &center)?,
        Experiment::Corona => corona(config, spec, &center)?,
        Experiment::Dichotomy => dichotomy(config, spec, &center)?,
        Experiment::Bound => bound(config, spec, &center)?,
    };
    results.results["center"] = serde_json::to_value(center).expect("serializable point");
    Ok(results.into_output())
}

struct Pieces {
    results: Value,
    csv_header: Vec<&'static str>,
    csv_rows: Vec<Vec<String>>,
}

impl Pieces {
    fn into_output(self) -> RunOutput {
        RunOutput {
            results: self.results,
            csv_header: self.csv_header,
            csv_rows: self.csv_rows,
        }
    }
}

fn poisson_test(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let radius = config.radii[0];
    let vc = visit_count_distribution(
        spec,
        center,
        radius,
        config.t,
        config.ensemble_size,
        config.budget,
        &RngStream::new(config.seed, STREAM_VISITS),
    )?;
    let lambda = config.t;
    let tv = tv_distance(&PmfView::empirical(&vc.pmf), &PmfView::poisson(lambda)?);
    let lambda_n_eps = vc.horizon as f64 * vc.measure.value;
    let tv_n_eps = tv_distance(
        &PmfView::empirical(&vc.pmf),
        &PmfView::poisson(lambda_n_eps)?,
    );

    let mut rows = Vec::new();
    let max_k = vc.pmf.max_value().unwrap_or(0);
    for k in 0..=max_k {
        rows.push(vec![
            k.to_string(),
            vc.pmf.count(k).to_string(),
            fmt(vc.pmf.frequency(k)),
            fmt(poisson_pmf(lambda, k)?),
        ]);
    }
    Ok(Pieces {
        results: json!({
            "radius": radius,
            "lambda": lambda,
            "tv_distance": tv,
            "lambda_n_eps": lambda_n_eps,
            "tv_distance_n_eps": tv_n_eps,
            "horizon": vc.horizon,
            "measure": vc.measure,
            "pmf": vc.pmf,
        }),
        csv_header: vec!["k", "count", "frequency", "poisson_pmf"],
        csv_rows: rows,
    })
}

fn recurrence(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let rec = recurrence_rate(spec, center, &config.radii, config.horizon_cap)?;
    let rows = rec
        .taus
        .iter()
        .map(|(r, tau)| match tau {
            Some(n) => vec![fmt(*r), n.to_string(), "hit".to_string()],
            None => vec![fmt(*r), String::new(), "exceeded".to_string()],
        })
        .collect();
    Ok(Pieces {
        results: json!({
            "slope": rec.fit.slope,
            "intercept": rec.fit.intercept,
            "r2": rec.fit.r2,
            "points": rec.fit.points,
            "taus": rec.taus,
            "dropped_radii": rec.dropped_radii,
            "cap": config.horizon_cap,
        }),
        csv_header: vec!["radius", "tau", "status"],
        csv_rows: rows,
    })
}

fn dimension(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let dim = local_dimension(
        spec,
        center,
        &config.radii,
        config.budget,
        &RngStream::new(config.seed, STREAM_POOL),
    )?;
    let rows = dim
        .measures
        .iter()
        .map(|(r, mu)| vec![fmt(*r), fmt(*mu)])
        .collect();
    Ok(Pieces {
        results: json!({
            "slope": dim.fit.slope,
            "intercept": dim.fit.intercept,
            "r2": dim.fit.r2,
            "points": dim.fit.points,
            "measures": dim.measures,
            "dropped_radii": dim.dropped_radii,
            "budget": config.budget,
        }),
        csv_header: vec!["radius", "measure"],
        csv_rows: rows,
    })
}

fn kac(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let radius = config.radii[0];
    let measure = estimate_ball_measure(
        spec,
        center,
        radius,
        config.budget,
        &RngStream::new(config.seed, STREAM_MEASURE),
    )?;
    let mrt = mean_return_time(
        spec,
        center,
        radius,
        config.ensemble_size,
        config.horizon_cap,
        &RngStream::new(config.seed, STREAM_ENSEMBLE),
    )?;
    let product = mrt.mean * measure.value;
    Ok(Pieces {
        results: json!({
            "radius": radius,
            "mean_return_time": mrt.mean,
            "exceeded_members": mrt.exceeded_members,
            "ensemble_size": mrt.ensemble_size,
            "measure": measure,
            "kac_product": product,
        }),
        csv_header: vec!["radius", "mean_return_time", "measure", "kac_product", "exceeded"],
        csv_rows: vec![vec![
            fmt(radius),
            fmt(mrt.mean),
            fmt(measure.value),
            fmt(product),
            mrt.exceeded_members.to_string(),
        ]],
    })
}

fn corona(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for (i, &radius) in config.radii.iter().enumerate() {
        let ratio = corona_ratio(
            spec,
            center,
            radius,
            config.delta,
            config.budget,
            &RngStream::new(config.seed, STREAM_POOL).substream(i as u64 % 8),
        )?;
        let reference = radius.powf(config.delta - 1.0);
        ratios.push(json!({ "radius": radius, "ratio": ratio, "r_to_delta_minus_1": reference }));
        rows.push(vec![fmt(radius), fmt(ratio), fmt(reference)]);
    }
    Ok(Pieces {
        results: json!({
            "delta": config.delta,
            "exact_path": exact_ball_measure(spec, center, config.radii[0]).is_some(),
            "ratios": ratios,
        }),
        csv_header: vec!["radius", "ratio", "r_to_delta_minus_1"],
        csv_rows: rows,
    })
}

fn dichotomy(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let trace = dichotomy_radius(
        spec,
        center,
        config.scale_n,
        config.dichotomy_theta,
        config.lambda,
        config.depth,
        config.budget,
        &RngStream::new(config.seed, STREAM_POOL),
    )?;
    let mut rows = Vec::new();
    for (k, (lo, hi)) in trace.intervals.iter().enumerate() {
        let chosen = if k == 0 {
            String::new()
        } else {
            match trace.chosen_sides[k - 1] {
                orbitstat::radius_select::Side::Left => "left".to_string(),
                orbitstat::radius_select::Side::Right => "right".to_string(),
            }
        };
        rows.push(vec![
            k.to_string(),
            fmt(*lo),
            fmt(*hi),
            chosen,
            fmt(trace.masses[k]),
            fmt(trace.mass_std_errors[k]),
        ]);
    }
    Ok(Pieces {
        results: serde_json::to_value(&trace)
            .map(|t| json!({ "trace": t }))
            .expect("serializable trace"),
        csv_header: vec!["level", "left", "right", "chosen", "mass", "mass_std_error"],
        csv_rows: rows,
    })
}

fn bound(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    center: &PhasePoint,
) -> Result<Pieces, CliError> {
    let radius = config.radii[0];
    let measure = estimate_ball_measure(
        spec,
        center,
        radius,
        config.budget,
        &RngStream::new(config.seed, STREAM_MEASURE),
    )?;
    if measure.value <= 0.0 {
        return Err(CliError::Core(orbitstat::Error::Undersampled(format!(
            "ball measure at r={radius} estimated zero"
        ))));
    }
    let epsilon = measure.value;
    let n = (config.t / epsilon).floor() as u64;
    if n < 3 {
        return Err(CliError::Config(format!(
            "horizon N = floor(t/eps) = {n} too small for the bound (need N >= 3)"
        )));
    }
    // p defaults to r^{-1/2}, the short-return window of the theory.
    let p = config
        .p
        .unwrap_or_else(|| (radius.powf(-0.5).floor() as u64).max(2))
        .clamp(2, n - 1);
    let m = config.m.clamp(1, n - 1);
    let j_grid = config
        .j_grid
        .clone()
        .unwrap_or_else(|| vec![0, n / 4, n / 2]);
    for &j in &j_grid {
        if j > n - p {
            return Err(CliError::Config(format!(
                "j_grid entry {j} exceeds N - p = {}",
                n - p
            )));
        }
    }

    let r2 = estimate_r2(
        spec,
        center,
        radius,
        p,
        config.ensemble_size,
        &RngStream::new(config.seed, STREAM_ENSEMBLE),
    )?;
    let r1 = estimate_r1(
        spec,
        center,
        radius,
        n,
        p,
        &j_grid,
        &config.q_grid,
        config.ensemble_size,
        &RngStream::new(config.seed, STREAM_R1),
    )?;
    let report = total_bound(
        epsilon,
        n,
        p,
        m,
        r1.value,
        r2.value,
        r1.std_error,
        r2.std_error,
    )?;

    let vc = visit_count_distribution(
        spec,
        center,
        radius,
        config.t,
        config.ensemble_size,
        config.budget,
        &RngStream::new(config.seed, STREAM_VISITS),
    )?;
    let lambda = n as f64 * epsilon;
    let measured_tv = tv_distance(&PmfView::empirical(&vc.pmf), &PmfView::poisson(lambda)?);

    // noise floor of the empirical tv: half the summed per-k binomial errors
    let ens = vc.pmf.total() as f64;
    let tv_std_error: f64 = vc
        .pmf
        .counts()
        .iter()
        .map(|(_, &c)| {
            let p = c as f64 / ens;
            0.5 * (p * (1.0 - p) / ens).sqrt()
        })
        .sum();
    let combined_std_error =
        2.0 * n as f64 * m as f64 * (3.0 * r1.std_error + 3.0 * r2.std_error)
            + 3.0 * tv_std_error;
    let sound = measured_tv <= report.total + combined_std_error;

    let mut rows = Vec::new();
    for (j, q, cov, se) in &r1.pairs {
        rows.push(vec![j.to_string(), q.to_string(), fmt(*cov), fmt(*se)]);
    }
    Ok(Pieces {
        results: json!({
            "radius": radius,
            "bound": report,
            "r1_probe": {
                "lower_bound_probe": true,
                "j_grid": j_grid,
                "q_grid": config.q_grid,
                "arg_j": r1.arg_j,
                "arg_q": r1.arg_q,
                "pairs": r1.pairs,
            },
            "ball_hits_r2": r2.ball_hits,
            "measure": measure,
            "lambda": lambda,
            "tv_distance": measured_tv,
            "tv_std_error": tv_std_error,
            "combined_std_error": combined_std_error,
            "sound": sound,
            "pmf": vc.pmf,
            "horizon": vc.horizon,
        }),
        csv_header: vec!["j", "q", "covariance", "std_error"],
        csv_rows: rows,
    })
}
