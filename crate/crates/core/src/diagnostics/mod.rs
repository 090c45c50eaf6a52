//! Forecast verification: ROC/AUC, rank histogram, exceedance curves,
//! cross-correlation map, CRPS, variogram score, median bias and energy
//! score.

mod crosscorr;
mod ensemble;
mod roc;

pub use crosscorr::{center_of_mass, cross_correlation, Center, CrossCorrelation};
pub use ensemble::{
    crps_sample, ecdf_curve, energy_scores, mean_crps, rank_histogram, rmsb_mab, variogram_score,
    variogram_summary, variogram_weights, BiasSummary, EcdfPoint, RankHistogram, VariogramSummary,
    VerificationBlock,
};
pub use roc::{roc_auc, roc_exact, roc_from_scores, tau_grid, RocCurve, RocPoint, DEFAULT_TAU_POINTS};
