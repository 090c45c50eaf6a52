//! Zero-gamma mixture marginals and their joint-GLM parameterization.

mod field;
mod jglm;
mod mixture;
mod transform;

pub use field::{MarginalField, MarginalModel};
pub use jglm::{jglm_fit, jglm_predict, FitConfig, FitReport, JglmCoefficients};
pub use mixture::{gamma_nll, logistic_loss, observation_loss, GammaMixture};
pub use transform::{FeatureTransform, Transform};
