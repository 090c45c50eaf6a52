use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::objective::{day_scores, ScoreConfig, ScoringData, Subsample};
use crate::marginals::MarginalField;
use crate::panel::RainPanel;
use crate::spatial::{DistanceMatrix, MaternParams};

/// Search interval and resolution for the lengthscale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSearchSpec {
    pub lower: f64,
    pub upper: f64,
    /// Points in the coarse grid, endpoints included.
    pub grid_size: usize,
    /// Golden-section refinement stops once the bracket is this narrow.
    pub tol: f64,
    /// Days used for the reported coarse-grid profile; refinement uses the
    /// score configuration's own day subsample.
    pub profile_days: Subsample,
    /// Matérn smoothness.
    pub nu: f64,
}

impl Default for ThetaSearchSpec {
    fn default() -> Self {
        Self {
            lower: 200.0,
            upper: 800.0,
            grid_size: 13,
            tol: 1.0,
            profile_days: Subsample::All,
            nu: MaternParams::DEFAULT_NU,
        }
    }
}

impl ThetaSearchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower < self.upper && self.upper.is_finite()) {
            return Err(Error::Invalid(format!(
                "search bounds must satisfy 0 < lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.grid_size < 3 {
            return Err(Error::Invalid(format!("grid needs at least 3 points, got {}", self.grid_size)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        MaternParams::new(self.lower, self.nu)?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.upper - self.lower) / (self.grid_size - 1) as f64;
        (0..self.grid_size)
            .map(|k| if k + 1 == self.grid_size { self.upper } else { self.lower + step * k as f64 })
            .collect()
    }
}

/// One evaluated point of the objective profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub theta: f64,
    pub score: f64,
    pub mc_stderr: f64,
}

/// Result of [`estimate_theta`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub theta_hat: f64,
    /// Coarse-grid profile, ascending in θ.
    pub profile: Vec<ProfilePoint>,
    /// Points evaluated during golden-section refinement, in order.
    pub refinement: Vec<ProfilePoint>,
    /// The grid minimizer sits on a search boundary.
    pub on_boundary: bool,
}

fn evaluate(prep: &ScoringData, theta: f64, nu: f64, days: &[usize], cfg: &ScoreConfig) -> Result<ProfilePoint> {
    let scores = day_scores(prep, &MaternParams::new(theta, nu)?, days, cfg)?;
    let score = scores.total();
    if !score.is_finite() {
        return Err(Error::NonFinite(format!("objective at theta = {theta}")));
    }
    Ok(ProfilePoint {
        theta,
        score,
        mc_stderr: scores.standard_error(),
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimum-scoring-rule lengthscale estimate.
///
/// Every θ reuses the same latent normals and subsamples (common random
/// numbers). The coarse grid is scored on `search.profile_days`; golden-section
/// search then refines between the grid neighbours of the grid minimizer.
pub fn estimate_theta(
    data: &RainPanel,
    field: &MarginalField,
    distances: &DistanceMatrix,
    cfg: &ScoreConfig,
    search: &ThetaSearchSpec,
) -> Result<ThetaEstimate> {
    cfg.validate()?;
    search.validate()?;
    let prep = ScoringData::new(data, field, distances)?;
    let n_days = prep.n_days();
    if n_days == 0 {
        return Err(Error::InsufficientData("no days to score".into()));
    }

    let profile_cfg = ScoreConfig {
        day_subsample: search.profile_days.clone(),
        ..cfg.clone()
    };
    let profile_days = profile_cfg.select_days(n_days)?;
    let grid = search.grid();
    let profile = grid
        .par_iter()
        .map(|&theta| evaluate(&prep, theta, search.nu, &profile_days, &profile_cfg))
        .collect::<Result<Vec<_>>>()?;

    let best = profile
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.score.total_cmp(&b.1.score))
        .map(|(k, _)| k)
        .expect("grid is nonempty");
    let on_boundary = best == 0 || best + 1 == grid.len();
    if on_boundary {
        log::warn!(
            "score minimizer theta = {} lies on the search boundary [{}, {}]",
            grid[best],
            search.lower,
            search.upper
        );
    }

    let refine_days = cfg.select_days(n_days)?;
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let mut refinement = Vec::new();
    let mut probe = |theta: f64| -> Result<f64> {
        let point = evaluate(&prep, theta, search.nu, &refine_days, cfg)?;
        refinement.push(point);
        Ok(point.score)
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = probe(c)?;
    let mut fd = probe(d)?;
    while b - a > search.tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = probe(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = probe(d)?;
        }
    }
    let theta_hat = 0.5 * (a + b);

    Ok(ThetaEstimate {
        theta_hat,
        profile,
        refinement,
        on_boundary,
    })
}
