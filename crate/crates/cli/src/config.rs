//! Flat key=value experiment configs with fail-fast validation.

use std::collections::BTreeMap;

use orbitstat::{PhasePoint, SystemSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PoissonTest,
    Recurrence,
    Dimension,
    Kac,
    Corona,
    Dichotomy,
    Bound,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PoissonTest => "poisson-test",
            Experiment::Recurrence => "recurrence",
            Experiment::Dimension => "dimension",
            Experiment::Kac => "kac",
            Experiment::Corona => "corona",
            Experiment::Dichotomy => "dichotomy",
            Experiment::Bound => "bound",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "poisson-test" => Experiment::PoissonTest,
            "recurrence" => Experiment::Recurrence,
            "dimension" => Experiment::Dimension,
            "kac" => Experiment::Kac,
            "corona" => Experiment::Corona,
            "dichotomy" => Experiment::Dichotomy,
            "bound" => Experiment::Bound,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterSpec {
    Sampled,
    Explicit(PhasePoint),
}

/// A fully resolved experiment description. `raw` holds every key=value pair
/// after defaulting, exactly as embedded in reports and re-read by `check`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub system: SystemSpec,
    pub center: CenterSpec,
    pub radii: Vec<f64>,
    pub t: f64,
    pub ensemble_size: u64,
    pub horizon_cap: u64,
    pub budget: u64,
    pub seed: u64,
    pub output_path: String,
    pub delta: f64,
    pub p: Option<u64>,
    pub m: u64,
    pub j_grid: Option<Vec<u64>>,
    pub q_grid: Vec<u64>,
    pub scale_n: u32,
    pub dichotomy_theta: f64,
    pub lambda: f64,
    pub depth: u32,
    raw: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "system",
    "gamma",
    "theta",
    "ell",
    "center",
    "center_x",
    "center_z_re",
    "center_z_im",
    "center_r",
    "center_phi",
    "radius",
    "radii",
    "radius_start",
    "radius_ratio",
    "radius_count",
    "t",
    "ensemble_size",
    "horizon_cap",
    "budget",
    "seed",
    "output_path",
    "delta",
    "p",
    "m",
    "j_grid",
    "q_grid",
    "scale_n",
    "dichotomy_theta",
    "lambda",
    "depth",
];

fn bad(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("key '{key}': {why}"))
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| bad(key, "missing required key"))
    }

    fn f64_of(&self, key: &str, raw: &str) -> Result<f64, CliError> {
        raw.parse::<f64>()
            .map_err(|_| bad(key, format!("'{raw}' is not a number")))
    }

    fn f64_req(&self, key: &str) -> Result<f64, CliError> {
        self.f64_of(key, self.required(key)?)
    }

    fn u64_default(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<u64>()
                .map_err(|_| bad(key, format!("'{raw}' is not a nonnegative integer"))),
        }
    }

    fn f64_default(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => self.f64_of(key, raw),
        }
    }

    fn u64_list(&self, key: &str) -> Result<Option<Vec<u64>>, CliError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|part| {
                part.trim()
                    .parse::<u64>()
                    .map_err(|_| bad(key, format!("'{part}' is not a nonnegative integer")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

/// Parse the key=value text format: one pair per line, '#' comments, blank
/// lines ignored. Unknown keys fail fast.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected key=value, got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        Self::from_map(parse_pairs(text)?)
    }

    pub fn from_map(map: BTreeMap<String, String>) -> Result<Self, CliError> {
        let keys = Keys { map };

        let experiment_raw = keys.required("experiment")?;
        let experiment = Experiment::parse(experiment_raw)
            .ok_or_else(|| bad("experiment", format!("unknown experiment '{experiment_raw}'")))?;

        let system = match keys.required("system")? {
            "doubling" => SystemSpec::doubling(),
            "lsv" => SystemSpec::lsv(keys.f64_req("gamma")?)
                .map_err(|e| bad("gamma", e))?,
            "solenoid" => {
                let gamma = keys.f64_req("gamma")?;
                let theta = keys.f64_req("theta")?;
                SystemSpec::solenoid(gamma, theta).map_err(|e| bad("theta", e))?
            }
            "stadium" => SystemSpec::stadium(keys.f64_req("ell")?)
                .map_err(|e| bad("ell", e))?,
            other => return Err(bad("system", format!("unknown system '{other}'"))),
        };

        let center = match keys.get("center").unwrap_or("sampled") {
            "sampled" => CenterSpec::Sampled,
            "explicit" => {
                let point = match system {
                    SystemSpec::Doubling | SystemSpec::Lsv { .. } => {
                        PhasePoint::circle(keys.f64_req("center_x")?)
                    }
                    SystemSpec::Solenoid { .. } => PhasePoint::torus_disk(
                        keys.f64_req("center_x")?,
                        keys.f64_req("center_z_re")?,
                        keys.f64_req("center_z_im")?,
                    )
                    .map_err(|e| bad("center_z_re", e))?,
                    SystemSpec::Stadium { ell } => PhasePoint::billiard(
                        keys.f64_req("center_r")?,
                        keys.f64_req("center_phi")?,
                        ell,
                    )
                    .map_err(|e| bad("center_phi", e))?,
                };
                CenterSpec::Explicit(point)
            }
            other => return Err(bad("center", format!("expected sampled|explicit, got '{other}'"))),
        };

        let radii = Self::resolve_radii(&keys, experiment)?;

        let t = keys.f64_default("t", 1.0)?;
        if !(t > 0.0) {
            return Err(bad("t", "must be positive"));
        }
        let ensemble_size = keys.u64_default("ensemble_size", 10_000)?;
        let horizon_cap = keys.u64_default("horizon_cap", 10_000_000)?;
        let budget = keys.u64_default("budget", 1_000_000)?;
        let seed = keys.u64_default("seed", 0)?;
        let output_path = keys
            .get("output_path")
            .unwrap_or("orbitstat-report")
            .to_string();

        let delta = keys.f64_default("delta", 1.5)?;
        if experiment == Experiment::Corona && !(delta > 1.0) {
            return Err(bad("delta", "must exceed 1"));
        }
        let p = match keys.get("p") {
            None => None,
            Some(_) => Some(keys.u64_default("p", 0)?),
        };
        let m = keys.u64_default("m", 3)?;
        let j_grid = keys.u64_list("j_grid")?;
        let q_grid = keys
            .u64_list("q_grid")?
            .unwrap_or_else(|| vec![0, 1, 2, 3]);
        let scale_n = keys.u64_default("scale_n", 2)? as u32;
        let dichotomy_theta = keys.f64_default("dichotomy_theta", 0.6)?;
        if experiment == Experiment::Dichotomy && !(dichotomy_theta > 0.0 && dichotomy_theta < 1.0)
        {
            return Err(bad("dichotomy_theta", "must lie in (0,1)"));
        }
        let lambda = keys.f64_default("lambda", 0.25)?;
        if experiment == Experiment::Dichotomy && !(lambda > 0.0 && lambda < 0.5) {
            return Err(bad("lambda", "must lie in (0, 1/2)"));
        }
        let depth = keys.u64_default("depth", 8)? as u32;

        let config = Self {
            experiment,
            system,
            center,
            radii,
            t,
            ensemble_size,
            horizon_cap,
            budget,
            seed,
            output_path,
            delta,
            p,
            m,
            j_grid,
            q_grid,
            scale_n,
            dichotomy_theta,
            lambda,
            depth,
            raw: keys.map,
        };
        config.check_experiment_shape()?;
        Ok(config)
    }

    fn resolve_radii(keys: &Keys, experiment: Experiment) -> Result<Vec<f64>, CliError> {
        let mut sources = 0;
        let mut radii: Vec<f64> = Vec::new();
        if let Some(raw) = keys.get("radius") {
            sources += 1;
            radii = vec![keys.f64_of("radius", raw)?];
        }
        if let Some(raw) = keys.get("radii") {
            sources += 1;
            radii = raw
                .split(',')
                .map(|part| keys.f64_of("radii", part.trim()))
                .collect::<Result<Vec<_>, _>>()?;
        }
        if keys.get("radius_start").is_some() {
            sources += 1;
            let start = keys.f64_req("radius_start")?;
            let ratio = keys.f64_req("radius_ratio")?;
            let count = keys.u64_default("radius_count", 0)?;
            if !(start > 0.0) {
                return Err(bad("radius_start", "must be positive"));
            }
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(bad("radius_ratio", "must lie in (0,1) for a decreasing schedule"));
            }
            if count < 1 {
                return Err(bad("radius_count", "must be at least 1"));
            }
            radii = (0..count).map(|i| start * ratio.powi(i as i32)).collect();
        }
        if sources > 1 {
            return Err(CliError::Config(
                "give exactly one of: radius, radii, radius_start/radius_ratio/radius_count".into(),
            ));
        }
        if sources == 0 && experiment != Experiment::Dichotomy {
            return Err(bad("radius", "missing required key (or radii / radius_start schedule)"));
        }
        for &r in &radii {
            if !(r > 0.0) {
                return Err(bad("radius", format!("radii must be positive, got {r}")));
            }
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("radii", "must be strictly decreasing"));
        }
        Ok(radii)
    }

    fn check_experiment_shape(&self) -> Result<(), CliError> {
        match self.experiment {
            Experiment::PoissonTest | Experiment::Kac | Experiment::Bound => {
                if self.radii.len() != 1 {
                    return Err(bad("radius", "this experiment takes exactly one radius"));
                }
            }
            Experiment::Recurrence | Experiment::Dimension => {
                if self.radii.len() < 3 {
                    return Err(bad("radii", "slope fits need at least 3 radii"));
                }
            }
            Experiment::Corona | Experiment::Dichotomy => {}
        }
        if self.experiment == Experiment::Dichotomy && self.depth < 1 {
            return Err(bad("depth", "must be at least 1"));
        }
        Ok(())
    }

    /// The resolved flat map embedded in reports: input keys plus every
    /// defaulted value, so a report alone reproduces the run.
    pub fn resolved_map(&self) -> BTreeMap<String, String> {
        let mut map = self.raw.clone();
        let mut put = |k: &str, v: String| {
            map.entry(k.to_string()).or_insert(v);
        };
        put("experiment", self.experiment.name().to_string());
        put("center", "sampled".to_string());
        put("t", format!("{}", self.t));
        put("ensemble_size", format!("{}", self.ensemble_size));
        put("horizon_cap", format!("{}", self.horizon_cap));
        put("budget", format!("{}", self.budget));
        put("seed", format!("{}", self.seed));
        put("output_path", self.output_path.clone());
        match self.experiment {
            Experiment::Corona => put("delta", format!("{}", self.delta)),
            Experiment::Bound => {
                put("m", format!("{}", self.m));
                put(
                    "q_grid",
                    self.q_grid
                        .iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                );
            }
            Experiment::Dichotomy => {
                put("scale_n", format!("{}", self.scale_n));
                put("dichotomy_theta", format!("{}", self.dichotomy_theta));
                put("lambda", format!("{}", self.lambda));
                put("depth", format!("{}", self.depth));
            }
            _ => {}
        }
        map
    }

    /// Override the seed (from --seed) keeping raw in sync.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.raw.insert("seed".into(), seed.to_string());
    }

    /// Override the output path (from --output-dir) keeping raw in sync.
    pub fn set_output_path(&mut self, path: String) {
        self.output_path = path.clone();
        self.raw.insert("output_path".into(), path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_poisson_config() {
        let cfg = ExperimentConfig::from_text(
            "experiment = poisson-test\nsystem = doubling\nradius = 0.01\nseed = 42\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::PoissonTest);
        assert_eq!(cfg.radii, vec![0.01]);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.t, 1.0);
    }

    #[test]
    fn rejects_unknown_key() {
        let err = ExperimentConfig::from_text("experiment = kac\nbogus = 1\n");
        assert!(matches!(err, Err(CliError::Config(ref m)) if m.contains("bogus")));
    }

    #[test]
    fn rejects_invalid_solenoid_theta() {
        let err = ExperimentConfig::from_text(
            "experiment = poisson-test\nsystem = solenoid\ngamma = 0.5\ntheta = 0.9\nradius = 0.02\n",
        );
        match err {
            Err(CliError::Config(m)) => {
                assert!(m.contains("theta"), "{m}");
                assert!(m.contains("sup_deriv"), "{m}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn geometric_schedule_resolves() {
        let cfg = ExperimentConfig::from_text(
            "experiment = recurrence\nsystem = doubling\nradius_start = 0.0625\nradius_ratio = 0.5\nradius_count = 11\n",
        )
        .unwrap();
        assert_eq!(cfg.radii.len(), 11);
        assert_eq!(cfg.radii[0], 0.0625);
        assert!(cfg.radii.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg = ExperimentConfig::from_text(
            "# poisson baseline\nexperiment = poisson-test\n\nsystem = doubling # the circle map\nradius = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment.name(), "poisson-test");
    }
}
