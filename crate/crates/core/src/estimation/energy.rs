use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// `a − b` where equal values (including equal infinities, which arise from
/// always-dry locations pinned at a `+∞` threshold) differ by exactly zero.
#[inline]
pub(crate) fn coordinate_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        a - b
    }
}

/// `‖a − b‖₂^β`.
#[inline]
pub(crate) fn powered_distance(a: &[f64], b: &[f64], beta: f64) -> f64 {
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let g = coordinate_gap(*x, *y);
            g * g
        })
        .sum();
    if beta == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(0.5 * beta)
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Invalid(format!("energy-score exponent must lie in (0, 2), got {beta}")));
    }
    Ok(())
}

/// Unbiased energy-score estimate from `m` samples stored row-wise in a
/// flat slice of `m * obs.len()` values.
pub(crate) fn energy_score_flat(samples: &[f64], obs: &[f64], beta: f64) -> f64 {
    let n = obs.len();
    let m = samples.len() / n.max(1);
    let row = |j: usize| &samples[j * n..(j + 1) * n];
    let mut to_obs = 0.0;
    for j in 0..m {
        to_obs += powered_distance(row(j), obs, beta);
    }
    let mut pairs = 0.0;
    for j in 0..m {
        for k in 0..j {
            pairs += powered_distance(row(j), row(k), beta);
        }
    }
    let m = m as f64;
    // each unordered pair appears twice in the j ≠ k sum
    2.0 * to_obs / m - 2.0 * pairs / (m * (m - 1.0))
}

/// Unbiased estimator of the energy score,
/// `(2/m) Σ_j ‖x_j − y‖^β − 1/(m(m−1)) Σ_{j≠k} ‖x_j − x_k‖^β`,
/// with one sample per row of `samples`.
pub fn energy_score_unbiased(samples: &DenseMatrix, obs: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if samples.rows() < 2 {
        return Err(Error::Invalid(format!(
            "the unbiased estimator needs at least 2 samples, got {}",
            samples.rows()
        )));
    }
    if samples.cols() != obs.len() {
        return Err(Error::DimensionMismatch(format!(
            "samples have dimension {}, observation {}",
            samples.cols(),
            obs.len()
        )));
    }
    Ok(energy_score_flat(samples.as_slice(), obs, beta))
}
