//! Energy score, the minimum-scoring-rule objective and the lengthscale search.

mod energy;
mod objective;
mod search;

pub use energy::energy_score_unbiased;
pub(crate) use energy::{check_beta, energy_score_flat};
pub use objective::{day_scores, sr_objective, DayScores, ScoreConfig, ScoringData, Subsample};
pub use search::{estimate_theta, ProfilePoint, ThetaEstimate, ThetaSearchSpec};
