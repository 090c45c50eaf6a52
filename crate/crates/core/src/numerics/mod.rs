//! Special functions and dense linear algebra shared by the other modules.

mod bessel;
mod gamma;
mod linalg;
mod normal;

pub use bessel::bessel_k;
pub use gamma::{digamma, log_gamma, reg_lower_inc_gamma, reg_upper_inc_gamma};
pub use linalg::{spd_factorize, DenseMatrix, SpdFactor, JITTER_CEILING, JITTER_START};
pub use normal::{erfc, std_normal_cdf, std_normal_pdf, std_normal_quantile};

pub(crate) use bessel::half_integer_index;
pub(crate) use gamma::{
    digamma_unchecked, gamma_density_unit, ln_gamma_unchecked, lower_unchecked, upper_unchecked,
    unit_gamma_quantile,
};
