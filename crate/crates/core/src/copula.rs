//! Censored latent Gaussian copula: thresholds, latent sampling, censoring,
//! the observation transform and joint rainfall forecasts.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::marginals::{GammaMixture, MarginalField};
use crate::numerics::{std_normal_cdf, std_normal_quantile, DenseMatrix};
use crate::panel::RainPanel;
use crate::rng::{substream, Purpose};
use crate::spatial::CovarianceMatrix;

/// Probabilities in the observation transform are kept this far from 0 and 1.
pub const CDF_CLAMP: f64 = 1e-12;

/// Censoring threshold `Φ⁻¹(1 − p)` for one law: `+∞` when `p = 0`
/// (always dry) and `−∞` when `p = 1` (never censored).
pub fn threshold(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    // fails only when 1 - p rounds to 1
    std_normal_quantile(1.0 - p).unwrap_or(f64::INFINITY)
}

/// Thresholds `d[i, s]` for every location and day, location-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CensorThresholds {
    n_locations: usize,
    n_days: usize,
    values: Vec<f64>,
}

impl CensorThresholds {
    pub fn from_field(field: &MarginalField) -> Self {
        Self {
            n_locations: field.n_locations(),
            n_days: field.n_days(),
            values: field.cells().iter().map(|law| threshold(law.p())).collect(),
        }
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn get(&self, loc: usize, day: usize) -> f64 {
        self.values[loc * self.n_days + day]
    }

    /// Thresholds of all locations on one day.
    pub fn day(&self, day: usize) -> Vec<f64> {
        (0..self.n_locations).map(|i| self.get(i, day)).collect()
    }
}

/// Identifies the substream a draw came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId {
    pub seed: u64,
    pub day: u64,
    pub replicate: u64,
}

/// One draw `x*` from the uncensored latent Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDraw {
    pub values: Vec<f64>,
    /// Set when the draw came from a per-replicate substream.
    pub stream: Option<StreamId>,
}

/// A latent draw after censoring: `x′ = max(x*, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredDraw {
    pub values: Vec<f64>,
}

/// Writes `L z` for a fresh standard-normal `z` into `out`.
fn correlated_normal<R: Rng + ?Sized>(cov: &CovarianceMatrix, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
    cov.factor().mul_lower(z, out);
}

/// Replicate `replicate` of `day`: `L z` with `z` from its own substream.
pub(crate) fn latent_replicate(cov: &CovarianceMatrix, seed: u64, day: u64, replicate: u64, z: &mut [f64], out: &mut [f64]) {
    let mut rng = substream(seed, Purpose::Latent, day, replicate);
    correlated_normal(cov, &mut rng, z, out);
}

/// `m` draws `L z` sharing one random stream.
pub fn sample_latent<R: Rng + ?Sized>(cov: &CovarianceMatrix, m: usize, rng: &mut R) -> Result<Vec<LatentDraw>> {
    if m == 0 {
        return Err(Error::Invalid("number of draws must be at least 1".into()));
    }
    let n = cov.dim();
    let mut z = vec![0.0; n];
    Ok((0..m)
        .map(|_| {
            let mut values = vec![0.0; n];
            correlated_normal(cov, rng, &mut z, &mut values);
            LatentDraw { values, stream: None }
        })
        .collect())
}

/// `m` draws for one day, replicate `j` taken from its own substream of
/// `seed`. The underlying normals depend only on `(seed, day, j)` and the
/// dimension, never on Σ, so draws are common random numbers across Σ.
pub fn sample_latent_day(cov: &CovarianceMatrix, m: usize, seed: u64, day: u64) -> Result<Vec<LatentDraw>> {
    if m == 0 {
        return Err(Error::Invalid("number of draws must be at least 1".into()));
    }
    let n = cov.dim();
    let mut z = vec![0.0; n];
    Ok((0..m as u64)
        .map(|j| {
            let mut values = vec![0.0; n];
            latent_replicate(cov, seed, day, j, &mut z, &mut values);
            LatentDraw {
                values,
                stream: Some(StreamId {
                    seed,
                    day,
                    replicate: j,
                }),
            }
        })
        .collect())
}

/// Elementwise `max(x*, d)`, with ties going to `d`.
pub fn censor(draw: &[f64], thresholds: &[f64]) -> Result<CensoredDraw> {
    if draw.len() != thresholds.len() {
        return Err(Error::DimensionMismatch(format!(
            "draw of length {} against {} thresholds",
            draw.len(),
            thresholds.len()
        )));
    }
    let mut values = draw.to_vec();
    censor_in_place(&mut values, thresholds);
    Ok(CensoredDraw { values })
}

pub(crate) fn censor_in_place(values: &mut [f64], thresholds: &[f64]) {
    for (x, &d) in values.iter_mut().zip(thresholds) {
        if *x <= d {
            *x = d;
        }
    }
}

/// Latent Gaussian value of one observation; dry observations land exactly
/// on the law's threshold. Returns whether the probability was clamped.
fn gaussian_value(law: &GammaMixture, y: f64) -> (f64, bool) {
    if y == 0.0 {
        return (threshold(law.p()), false);
    }
    let u = law.cdf_unchecked(y);
    let clamped = u.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
    let x = std_normal_quantile(clamped).expect("clamped probability is interior");
    (x, clamped != u)
}

/// `Φ⁻¹(F(y))` for every panel cell, as an `n × T` matrix.
///
/// Probabilities that round to 0 or 1 are clamped to `[1e-12, 1 − 1e-12]`
/// and counted in a warning.
pub fn obs_to_gaussian(rain: &RainPanel, field: &MarginalField) -> Result<DenseMatrix> {
    let (n, t) = (rain.n_locations(), rain.n_days());
    if field.n_locations() != n || field.n_days() != t {
        return Err(Error::DimensionMismatch(format!(
            "panel is {n}x{t} but marginal field is {}x{}",
            field.n_locations(),
            field.n_days()
        )));
    }
    let mut clamped = 0usize;
    let mut data = Vec::with_capacity(n * t);
    for i in 0..n {
        for s in 0..t {
            let (x, c) = gaussian_value(field.get(i, s), rain.get(i, s));
            clamped += usize::from(c);
            data.push(x);
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} observation(s) had CDF values clamped to [{CDF_CLAMP:e}, 1 - {CDF_CLAMP:e}]");
    }
    DenseMatrix::from_row_major(n, t, data)
}

/// `m` joint rainfall draws for one day, replicate-major
/// (`values[r * n_locations + i]`). Dry outcomes are exactly `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleBlock {
    pub day: usize,
    pub n_locations: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl EnsembleBlock {
    pub fn replicate(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_locations..(r + 1) * self.n_locations]
    }

    /// All replicates at one location.
    pub fn location(&self, i: usize) -> Vec<f64> {
        (0..self.m).map(|r| self.values[r * self.n_locations + i]).collect()
    }
}

/// Maps latent draws to rainfall through each location's law, via the
/// uniform `Φ(x*)` and the mixture quantile.
pub(crate) fn latent_to_rain(latent: &[f64], laws: &[GammaMixture], out: &mut [f64]) {
    for ((y, &x), law) in out.iter_mut().zip(latent).zip(laws) {
        *y = law.quantile_unchecked(std_normal_cdf(x));
    }
}

fn check_forecast_args(cov: &CovarianceMatrix, field: &MarginalField, day: usize, m: usize) -> Result<()> {
    if field.n_locations() != cov.dim() {
        return Err(Error::DimensionMismatch(format!(
            "covariance has {} locations, marginal field {}",
            cov.dim(),
            field.n_locations()
        )));
    }
    if day >= field.n_days() {
        return Err(Error::Invalid(format!("day {day} outside field of {} days", field.n_days())));
    }
    if m == 0 {
        return Err(Error::Invalid("number of draws must be at least 1".into()));
    }
    Ok(())
}

/// Joint rainfall forecast for `day` from a caller-supplied stream.
pub fn joint_forecast<R: Rng + ?Sized>(
    cov: &CovarianceMatrix,
    field: &MarginalField,
    day: usize,
    m: usize,
    rng: &mut R,
) -> Result<EnsembleBlock> {
    check_forecast_args(cov, field, day, m)?;
    let laws = field.day(day);
    let n = cov.dim();
    let mut values = vec![0.0; m * n];
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    for out in values.chunks_exact_mut(n.max(1)).take(m) {
        correlated_normal(cov, rng, &mut z, &mut x);
        latent_to_rain(&x, &laws, out);
    }
    Ok(EnsembleBlock {
        day,
        n_locations: n,
        m,
        values,
    })
}

/// Joint rainfall forecast for `day` with per-replicate substreams of `seed`
/// (the same latent draws as [`sample_latent_day`]).
pub fn joint_forecast_day(
    cov: &CovarianceMatrix,
    field: &MarginalField,
    day: usize,
    m: usize,
    seed: u64,
) -> Result<EnsembleBlock> {
    check_forecast_args(cov, field, day, m)?;
    let laws = field.day(day);
    let n = cov.dim();
    let latent = sample_latent_day(cov, m, seed, day as u64)?;
    let mut values = vec![0.0; m * n];
    for (out, draw) in values.chunks_exact_mut(n.max(1)).zip(&latent) {
        latent_to_rain(&draw.values, &laws, out);
    }
    Ok(EnsembleBlock {
        day,
        n_locations: n,
        m,
        values,
    })
}

/// Forecasts for every day of `field`, generated in parallel; output is
/// independent of the thread count.
pub fn joint_forecast_all(cov: &CovarianceMatrix, field: &MarginalField, m: usize, seed: u64) -> Result<Vec<EnsembleBlock>> {
    (0..field.n_days())
        .into_par_iter()
        .map(|day| joint_forecast_day(cov, field, day, m, seed))
        .collect()
}
