use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{censor_in_place, latent_replicate, obs_to_gaussian, CensorThresholds};
use crate::error::{Error, Result};
use crate::estimation::energy::{check_beta, energy_score_flat};
use crate::marginals::MarginalField;
use crate::numerics::DenseMatrix;
use crate::panel::RainPanel;
use crate::rng::{substream, Purpose};
use crate::spatial::{build_covariance, CovarianceMatrix, DistanceMatrix, MaternParams};

/// Which days or locations enter the objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsample {
    All,
    /// A random subset of this size (everything if the size exceeds the total).
    Count(usize),
    /// A fixed set of indices; order and duplicates are irrelevant.
    Indices(Vec<usize>),
}

impl std::fmt::Display for Subsample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subsample::All => write!(f, "all"),
            Subsample::Count(k) => write!(f, "{k}"),
            Subsample::Indices(ix) => write!(f, "{} fixed", ix.len()),
        }
    }
}

impl std::str::FromStr for Subsample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Subsample::All);
        }
        s.parse::<usize>()
            .map(Subsample::Count)
            .map_err(|_| Error::Invalid(format!("subsample must be \"all\" or a count, got {s:?}")))
    }
}

impl Subsample {
    /// Resolves to sorted, distinct indices below `total`; random subsets
    /// come from `rng`.
    fn resolve(&self, total: usize, rng: &mut impl rand::Rng) -> Result<Vec<usize>> {
        let mut ix = match self {
            Subsample::All => (0..total).collect(),
            Subsample::Count(k) if *k >= total => (0..total).collect(),
            Subsample::Count(k) => index::sample(rng, total, *k).into_vec(),
            Subsample::Indices(ix) => {
                if let Some(bad) = ix.iter().find(|&&i| i >= total) {
                    return Err(Error::Invalid(format!("subsample index {bad} out of range 0..{total}")));
                }
                ix.clone()
            }
        };
        ix.sort_unstable();
        ix.dedup();
        Ok(ix)
    }
}

/// Settings of the minimum-scoring-rule objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Energy-score exponent, in (0, 2).
    pub beta: f64,
    /// Simulated replicates per day (≥ 2).
    pub m: usize,
    pub day_subsample: Subsample,
    pub location_subsample: Subsample,
    pub seed: u64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            m: 30,
            day_subsample: Subsample::Count(64),
            location_subsample: Subsample::All,
            seed: 0,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.m < 2 {
            return Err(Error::Invalid(format!("m must be at least 2, got {}", self.m)));
        }
        if matches!(self.day_subsample, Subsample::Count(0))
            || matches!(self.location_subsample, Subsample::Count(0))
        {
            return Err(Error::Invalid("subsample sizes must be positive".into()));
        }
        Ok(())
    }

    /// Days entering the objective, ascending. Random subsets are drawn from
    /// the seed alone, so every θ sees the same days.
    pub fn select_days(&self, n_days: usize) -> Result<Vec<usize>> {
        let mut rng = substream(self.seed, Purpose::DaySubset, 0, 0);
        self.day_subsample.resolve(n_days, &mut rng)
    }

    /// Locations scored on `day`, ascending. Random subsets depend on the
    /// seed and the day only.
    pub fn select_locations(&self, n_locations: usize, day: usize) -> Result<Vec<usize>> {
        let mut rng = substream(self.seed, Purpose::LocationSubset, day as u64, 0);
        self.location_subsample.resolve(n_locations, &mut rng)
    }
}

/// Observations on the latent Gaussian scale together with the censoring
/// thresholds; computed once and reused for every θ.
#[derive(Debug, Clone)]
pub struct ScoringData {
    gaussian: DenseMatrix,
    thresholds: CensorThresholds,
    distances: DistanceMatrix,
}

impl ScoringData {
    pub fn new(data: &RainPanel, field: &MarginalField, distances: &DistanceMatrix) -> Result<Self> {
        if distances.len() != data.n_locations() {
            return Err(Error::DimensionMismatch(format!(
                "distance matrix covers {} locations, panel {}",
                distances.len(),
                data.n_locations()
            )));
        }
        Ok(Self {
            gaussian: obs_to_gaussian(data, field)?,
            thresholds: CensorThresholds::from_field(field),
            distances: distances.clone(),
        })
    }

    pub fn n_locations(&self) -> usize {
        self.gaussian.rows()
    }

    pub fn n_days(&self) -> usize {
        self.gaussian.cols()
    }
}

/// Per-day contributions of the objective at one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct DayScores {
    pub days: Vec<usize>,
    pub scores: Vec<f64>,
}

impl DayScores {
    /// Sum in ascending day order.
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Standard error of the total, treating day contributions as i.i.d.:
    /// `√k · sd(per-day score)`.
    pub fn standard_error(&self) -> f64 {
        let k = self.scores.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.total() / k as f64;
        let var = self.scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
        (k as f64 * var).sqrt()
    }
}

/// Score of one day against draws from `cov`, restricted to `locations`.
fn day_score(prep: &ScoringData, cov: &CovarianceMatrix, locations: &[usize], day: usize, cfg: &ScoreConfig) -> f64 {
    let n = locations.len();
    let obs: Vec<f64> = locations.iter().map(|&i| prep.gaussian[(i, day)]).collect();
    let thresholds: Vec<f64> = locations.iter().map(|&i| prep.thresholds.get(i, day)).collect();
    let mut samples = vec![0.0; cfg.m * n];
    let mut z = vec![0.0; n];
    for (j, out) in samples.chunks_exact_mut(n).enumerate() {
        latent_replicate(cov, cfg.seed, day as u64, j as u64, &mut z, out);
        censor_in_place(out, &thresholds);
    }
    energy_score_flat(&samples, &obs, cfg.beta)
}

/// Objective contributions of the given days at lengthscale `theta`.
pub fn day_scores(prep: &ScoringData, params: &MaternParams, days: &[usize], cfg: &ScoreConfig) -> Result<DayScores> {
    cfg.validate()?;
    if let Some(bad) = days.iter().find(|&&d| d >= prep.n_days()) {
        return Err(Error::Invalid(format!("day {bad} outside panel of {} days", prep.n_days())));
    }
    let n = prep.n_locations();
    let fixed_locations = !matches!(cfg.location_subsample, Subsample::Count(k) if k < n);
    let shared = if fixed_locations {
        let locations = cfg.select_locations(n, 0)?;
        let cov = build_covariance(&prep.distances.select(&locations), params)?;
        Some((locations, cov))
    } else {
        None
    };
    let scores = days
        .par_iter()
        .map(|&day| match &shared {
            Some((locations, cov)) => Ok(day_score(prep, cov, locations, day, cfg)),
            None => {
                let locations = cfg.select_locations(n, day)?;
                let cov = build_covariance(&prep.distances.select(&locations), params)?;
                Ok(day_score(prep, &cov, &locations, day, cfg))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DayScores {
        days: days.to_vec(),
        scores,
    })
}

/// Minimum-scoring-rule objective: the sum over (sub)sampled days of the
/// unbiased energy score between censored copula draws at `theta` and the
/// observations on the Gaussian scale.
pub fn sr_objective(
    theta: f64,
    data: &RainPanel,
    field: &MarginalField,
    distances: &DistanceMatrix,
    cfg: &ScoreConfig,
    nu: f64,
) -> Result<f64> {
    let prep = ScoringData::new(data, field, distances)?;
    let days = cfg.select_days(prep.n_days())?;
    Ok(day_scores(&prep, &MaternParams::new(theta, nu)?, &days, cfg)?.total())
}
