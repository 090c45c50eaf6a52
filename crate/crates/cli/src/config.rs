//! Flat `key=value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use rainfall_copula::diagnostics::{Center, DEFAULT_TAU_POINTS};
use rainfall_copula::estimation::{ScoreConfig, Subsample, ThetaSearchSpec};
use rainfall_copula::marginals::{FitConfig, GammaMixture, JglmCoefficients};
use rainfall_copula::spatial::{DistanceBlend, DistanceConfig, MaternParams};
use rainfall_copula::synth::{MarginalGenerator, SynthSpec};

/// Invalid configuration or command-line input.
#[derive(Debug, thiserror::Error)]
#[error("configuration: {0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// How per-location features are transformed before the GLM links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    Standardize,
}

/// How the synthetic generator draws marginals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMarginals {
    Homogeneous,
    Jglm,
}

/// Every setting a subcommand may read, with defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub locations: Option<PathBuf>,
    pub rainfall: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub marginals: Option<PathBuf>,
    pub ensemble: Option<PathBuf>,

    pub distance: DistanceConfig,
    pub nu: f64,

    pub score: ScoreConfig,
    pub search: ThetaSearchSpec,

    pub transform: TransformKind,
    pub fit: FitConfig,

    pub theta: Option<f64>,

    pub q_levels: Vec<f64>,
    pub tau_points: usize,
    pub ecdf_levels: Vec<f64>,
    pub rank_bins: Option<usize>,
    pub variogram_p: f64,
    pub center: Center,

    pub n_locations: usize,
    pub n_days: usize,
    pub theta_true: f64,
    pub p: f64,
    pub mu: f64,
    pub phi: f64,
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
    pub elev_range: (f64, f64),
    pub start_date: NaiveDate,
    pub synth_marginals: SynthMarginals,
    pub truth: JglmCoefficients,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthSpec::default();
        Self {
            out: PathBuf::from("out"),
            locations: None,
            rainfall: None,
            features: None,
            marginals: None,
            ensemble: None,
            distance: DistanceConfig::default(),
            nu: MaternParams::DEFAULT_NU,
            score: ScoreConfig::default(),
            search: ThetaSearchSpec::default(),
            transform: TransformKind::Identity,
            fit: FitConfig::default(),
            theta: None,
            q_levels: vec![0.0, 1.0, 5.0, 10.0],
            tau_points: DEFAULT_TAU_POINTS,
            ecdf_levels: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            rank_bins: None,
            variogram_p: 1.0,
            center: Center::CenterOfMass,
            n_locations: synth.n_locations,
            n_days: synth.n_days,
            theta_true: synth.theta,
            p: 0.6,
            mu: 3.0,
            phi: 1.2,
            lat_range: synth.lat_range,
            lon_range: synth.lon_range,
            elev_range: synth.elev_range,
            start_date: synth.start_date,
            synth_marginals: SynthMarginals::Homogeneous,
            truth: JglmCoefficients::new(0.4, vec![0.8, -0.5, 0.3], 1.0, vec![0.3, -0.2, 0.1], -0.2, vec![0.1, 0.05, -0.1])
                .expect("valid default coefficients"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(format!("{key}: cannot parse {value:?}")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn subsample(key: &str, value: &str) -> Result<Subsample, ConfigError> {
    value.parse().map_err(|_| bad(format!("{key}: expected \"all\" or a count, got {value:?}")))
}

impl RunConfig {
    /// Applies one setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let path = || Some(PathBuf::from(value));
        match key {
            "out" => self.out = PathBuf::from(value),
            "locations" => self.locations = path(),
            "rainfall" => self.rainfall = path(),
            "features" => self.features = path(),
            "marginals" => self.marginals = path(),
            "ensemble" => self.ensemble = path(),

            "a" => self.distance.a = parse(key, value)?,
            "topo_scale" => self.distance.topo_scale = parse(key, value)?,
            "geo_scale" => self.distance.geo_scale = parse(key, value)?,
            "blend" => {
                self.distance.blend = value
                    .parse::<DistanceBlend>()
                    .map_err(|_| bad(format!("blend: expected euclidean or linear, got {value:?}")))?
            }
            "nu" => self.nu = parse(key, value)?,

            "beta" => self.score.beta = parse(key, value)?,
            "m" => self.score.m = parse(key, value)?,
            "seed" => self.score.seed = parse(key, value)?,
            "day_subsample" => self.score.day_subsample = subsample(key, value)?,
            "location_subsample" => self.score.location_subsample = subsample(key, value)?,
            "profile_days" => self.search.profile_days = subsample(key, value)?,
            "theta_lower" => self.search.lower = parse(key, value)?,
            "theta_upper" => self.search.upper = parse(key, value)?,
            "grid" => self.search.grid_size = parse(key, value)?,
            "tol" => self.search.tol = parse(key, value)?,

            "transform" => {
                self.transform = match value {
                    "identity" => TransformKind::Identity,
                    "standardize" => TransformKind::Standardize,
                    _ => return Err(bad(format!("transform: expected identity or standardize, got {value:?}"))),
                }
            }
            "step" => self.fit.initial_step = parse(key, value)?,
            "max_iter" => self.fit.max_iter = parse(key, value)?,
            "rel_tol" => self.fit.rel_tol = parse(key, value)?,

            "theta" => self.theta = Some(parse(key, value)?),

            "q_levels" => self.q_levels = list(key, value)?,
            "tau_points" => self.tau_points = parse(key, value)?,
            "ecdf_levels" => self.ecdf_levels = list(key, value)?,
            "rank_bins" => {
                self.rank_bins = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "variogram_p" => self.variogram_p = parse(key, value)?,
            "center" => self.center = value.parse().map_err(|e| bad(format!("center: {e}")))?,

            "n_locations" => self.n_locations = parse(key, value)?,
            "n_days" => self.n_days = parse(key, value)?,
            "theta_true" => self.theta_true = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "phi" => self.phi = parse(key, value)?,
            "lat_min" => self.lat_range.0 = parse(key, value)?,
            "lat_max" => self.lat_range.1 = parse(key, value)?,
            "lon_min" => self.lon_range.0 = parse(key, value)?,
            "lon_max" => self.lon_range.1 = parse(key, value)?,
            "elev_min" => self.elev_range.0 = parse(key, value)?,
            "elev_max" => self.elev_range.1 = parse(key, value)?,
            "start_date" => {
                self.start_date = NaiveDate::parse_from_str(value, "%Y-%m-%d")
                    .map_err(|_| bad(format!("start_date: expected YYYY-MM-DD, got {value:?}")))?
            }
            "synth_marginals" => {
                self.synth_marginals = match value {
                    "homogeneous" => SynthMarginals::Homogeneous,
                    "jglm" => SynthMarginals::Jglm,
                    _ => return Err(bad(format!("synth_marginals: expected homogeneous or jglm, got {value:?}"))),
                }
            }
            "truth_alpha0" => self.truth.alpha0 = parse(key, value)?,
            "truth_alpha" => self.truth.alpha = list(key, value)?,
            "truth_beta0" => self.truth.beta0 = parse(key, value)?,
            "truth_beta" => self.truth.beta = list(key, value)?,
            "truth_gamma0" => self.truth.gamma0 = parse(key, value)?,
            "truth_gamma" => self.truth.gamma = list(key, value)?,
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_all(&mut self, entries: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        entries.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    fn input(&self, explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out.join(default_name))
    }

    pub fn locations_path(&self) -> PathBuf {
        self.input(&self.locations, "locations.csv")
    }

    pub fn rainfall_path(&self) -> PathBuf {
        self.input(&self.rainfall, "rainfall.csv")
    }

    pub fn features_path(&self) -> PathBuf {
        self.input(&self.features, "features.csv")
    }

    pub fn marginals_path(&self) -> PathBuf {
        self.input(&self.marginals, "marginals.csv")
    }

    pub fn ensemble_path(&self) -> PathBuf {
        self.input(&self.ensemble, "ensemble.csv")
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn search(&self) -> ThetaSearchSpec {
        ThetaSearchSpec {
            nu: self.nu,
            ..self.search.clone()
        }
    }

    pub fn kernel(&self, theta: f64) -> Result<MaternParams, ConfigError> {
        MaternParams::new(theta, self.nu).map_err(|e| bad(e.to_string()))
    }

    pub fn synth_spec(&self) -> Result<SynthSpec, ConfigError> {
        let marginals = match self.synth_marginals {
            SynthMarginals::Homogeneous => MarginalGenerator::Homogeneous(
                GammaMixture::new(self.p, self.mu, self.phi).map_err(|e| bad(e.to_string()))?,
            ),
            SynthMarginals::Jglm => {
                self.truth.validate().map_err(|e| bad(format!("truth coefficients: {e}")))?;
                MarginalGenerator::Jglm(self.truth.clone())
            }
        };
        let spec = SynthSpec {
            n_locations: self.n_locations,
            lat_range: self.lat_range,
            lon_range: self.lon_range,
            elev_range: self.elev_range,
            n_days: self.n_days,
            theta: self.theta_true,
            nu: self.nu,
            distance: self.distance.clone(),
            marginals,
            start_date: self.start_date,
            seed: self.score.seed,
        };
        spec.validate().map_err(|e| bad(e.to_string()))?;
        Ok(spec)
    }

    /// Checks the settings every command shares.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.distance.validate().map_err(|e| bad(e.to_string()))?;
        MaternParams::new(1.0, self.nu).map_err(|e| bad(e.to_string()))?;
        self.score.validate().map_err(|e| bad(e.to_string()))?;
        self.search().validate().map_err(|e| bad(e.to_string()))?;
        if self.tau_points < 2 {
            return Err(bad("tau_points must be at least 2"));
        }
        if let Some(l) = self.q_levels.iter().chain(&self.ecdf_levels).find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(bad(format!("levels must be finite and nonnegative, got {l}")));
        }
        if !(self.variogram_p > 0.0 && self.variogram_p.is_finite()) {
            return Err(bad("variogram_p must be positive"));
        }
        Ok(())
    }
}

/// Loads defaults, then the config file, then `--set` overrides.
pub fn load(file: Option<&Path>, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        let entries = rainfall_copula::io::read_key_values(path)?;
        cfg.apply_all(&entries)?;
    }
    for item in overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| bad(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}
