//! Probabilistic multi-site rainfall model.
//!
//! Each location and day carries a zero-gamma mixture marginal whose
//! parameters come from a joint GLM on user-supplied features. Spatial
//! dependence is a Gaussian copula on a latent field that is censored at
//! the per-cell dry threshold, with a Matérn covariance over a blended
//! geographic/topographic distance matrix. The Matérn lengthscale is
//! estimated by minimizing a simulated energy score.
//!
//! Module map:
//! - [`numerics`]: special functions and the jittered Cholesky factorization
//! - [`marginals`]: mixture law, losses, joint-GLM prediction and fitting
//! - [`spatial`]: locations, distance blending, Matérn covariance
//! - [`copula`]: latent sampling, censoring and joint forecasts
//! - [`estimation`]: energy score and lengthscale search
//! - [`diagnostics`]: forecast verification suite
//! - [`synth`]: synthetic datasets with known ground truth
//! - [`io`]: file formats shared with the command-line front-end

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copula;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod io;
pub mod marginals;
pub mod numerics;
pub mod panel;
pub mod rng;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
pub use panel::RainPanel;
