//! Blended geographic/topographic distances and the Matérn covariance.

mod distance;
mod kernel;
mod locations;

pub use distance::{build_distance_matrix, DistanceBlend, DistanceConfig, DistanceMatrix, KM_PER_DEGREE};
pub use kernel::{build_covariance, matern_kernel, CovarianceMatrix, MaternParams};
pub use locations::{Location, LocationTable};
