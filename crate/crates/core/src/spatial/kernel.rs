use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bessel_k, half_integer_index, ln_gamma_unchecked, spd_factorize, DenseMatrix, SpdFactor};
use crate::spatial::distance::DistanceMatrix;

/// Matérn lengthscale `theta` and smoothness `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub theta: f64,
    pub nu: f64,
}

impl MaternParams {
    pub const DEFAULT_NU: f64 = 3.5;

    pub fn new(theta: f64, nu: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Invalid(format!("lengthscale must be positive, got {theta}")));
        }
        if !(nu > 0.0 && nu <= 10.0) {
            return Err(Error::Invalid(format!("smoothness must lie in (0, 10], got {nu}")));
        }
        Ok(Self { theta, nu })
    }

    /// Lengthscale `theta` with the default smoothness 3.5.
    pub fn with_theta(theta: f64) -> Result<Self> {
        Self::new(theta, Self::DEFAULT_NU)
    }
}

/// Matérn correlation at distance `d`:
/// `2^{1-ν}/Γ(ν) · r^ν K_ν(r)` with `r = √(2ν)·d/θ`; exactly 1 at `d = 0`.
pub fn matern_kernel(d: f64, params: &MaternParams) -> f64 {
    debug_assert!(d >= 0.0);
    if d == 0.0 {
        return 1.0;
    }
    let nu = params.nu;
    let r = (2.0 * nu).sqrt() * d / params.theta;
    if let Some(n) = half_integer_index(nu) {
        return half_integer_matern(n, r);
    }
    match bessel_k(nu, r) {
        Ok(k) if k > 0.0 => {
            let log_value = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma_unchecked(nu) + nu * r.ln() + k.ln();
            log_value.exp().min(1.0)
        }
        Ok(_) => 0.0,
        // K_ν overflows only as r → 0, where the correlation tends to 1
        Err(_) => 1.0,
    }
}

/// `e^{-r} · n!/(2n)! · Σ_i (n+i)!/(i!(n−i)!) (2r)^{n−i}` for ν = n + 1/2.
fn half_integer_matern(n: u32, r: f64) -> f64 {
    // Horner in r over coefficients c_i = (n+i)!/(i!(n-i)!) 2^{n-i} n!/(2n)!,
    // evaluated from the highest power of r downwards.
    let nf = n as f64;
    let mut coeffs = Vec::with_capacity(n as usize + 1);
    // coefficient of r^n is (n!/(2n)!) · 2^n
    let mut c = (1..=n).fold(1.0, |acc, k| acc * 2.0 / (nf + k as f64));
    coeffs.push(c);
    for i in 1..=n {
        let i = i as f64;
        // ratio c_i / c_{i-1} = (n+i)(n-i+1) / (2 i)
        c *= (nf + i) * (nf - i + 1.0) / (2.0 * i);
        coeffs.push(c);
    }
    let poly = coeffs.iter().fold(0.0, |acc, c| acc * r + c);
    (-r).exp() * poly
}

/// Matérn correlation matrix with its validated Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    sigma: DenseMatrix,
    params: MaternParams,
    distances: DistanceMatrix,
    factor: SpdFactor,
}

impl CovarianceMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.sigma
    }

    pub fn params(&self) -> &MaternParams {
        &self.params
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    /// Diagonal jitter the factorization needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.factor.jitter_applied()
    }
}

/// Elementwise Matérn kernel over `distances`, factorized once.
pub fn build_covariance(distances: &DistanceMatrix, params: &MaternParams) -> Result<CovarianceMatrix> {
    let n = distances.len();
    let d = distances.matrix().as_slice();
    let data: Vec<f64> = d.par_iter().map(|&dij| matern_kernel(dij, params)).collect();
    let sigma = DenseMatrix::from_row_major(n, n, data)?;
    let factor = spd_factorize(&sigma)?;
    if factor.jitter_applied() > 0.0 {
        log::debug!(
            "covariance (theta={}, nu={}) needed jitter {:e}",
            params.theta,
            params.nu,
            factor.jitter_applied()
        );
    }
    Ok(CovarianceMatrix {
        sigma,
        params: *params,
        distances: distances.clone(),
        factor,
    })
}
