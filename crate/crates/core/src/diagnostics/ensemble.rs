use rand::Rng;
use serde::Serialize;

use crate::copula::EnsembleBlock;
use crate::error::{Error, Result};
use crate::estimation::energy_score_flat;
use crate::numerics::reg_upper_inc_gamma;
use crate::rng::{substream, Purpose};
use crate::spatial::DistanceMatrix;

/// One day's ensemble of `m` rainfall fields together with the observed
/// field it is verified against.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationBlock {
    pub day: usize,
    n: usize,
    m: usize,
    /// Replicate-major: member `r` occupies `values[r*n..(r+1)*n]`.
    values: Vec<f64>,
    obs: Vec<f64>,
}

impl VerificationBlock {
    pub fn new(day: usize, m: usize, values: Vec<f64>, obs: Vec<f64>) -> Result<Self> {
        let n = obs.len();
        if m < 2 {
            return Err(Error::Invalid(format!("ensembles need at least 2 members, got {m}")));
        }
        if n == 0 || values.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "{} ensemble values for {m} members of {n} locations",
                values.len()
            )));
        }
        if let Some(v) = values.iter().chain(&obs).find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("rainfall values must be finite and nonnegative, got {v}")));
        }
        Ok(Self { day, n, m, values, obs })
    }

    /// Pairs a simulated ensemble with its observation.
    pub fn from_ensemble(block: EnsembleBlock, obs: Vec<f64>) -> Result<Self> {
        if block.n_locations != obs.len() {
            return Err(Error::DimensionMismatch(format!(
                "ensemble covers {} locations, observation {}",
                block.n_locations,
                obs.len()
            )));
        }
        Self::new(block.day, block.m, block.values, obs)
    }

    pub fn n_locations(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn obs(&self) -> &[f64] {
        &self.obs
    }

    pub fn member(&self, r: usize) -> &[f64] {
        &self.values[r * self.n..(r + 1) * self.n]
    }

    /// All members at location `i`.
    pub fn samples_at(&self, i: usize) -> Vec<f64> {
        (0..self.m).map(|r| self.values[r * self.n + i]).collect()
    }
}

fn check_blocks(blocks: &[VerificationBlock]) -> Result<usize> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InsufficientData("no verification blocks".into()))?;
    if let Some(b) = blocks.iter().find(|b| b.m != first.m) {
        return Err(Error::DimensionMismatch(format!(
            "ensemble sizes differ: {} on day {}, {} on day {}",
            first.m, first.day, b.m, b.day
        )));
    }
    Ok(first.m)
}

/// Rank-histogram counts with a chi-square test of uniformity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankHistogram {
    pub counts: Vec<u64>,
    /// Counts divided by the number of ranked cells.
    pub frequencies: Vec<f64>,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Rank of each observation among its `m` ensemble members, i.e. the count
/// of members strictly below it plus a uniform draw from `0..=ties` for the
/// members equal to it; ranks `0..=m` are grouped into `bins` equal-width
/// bins (`None` gives one bin per rank). Tie draws come from `seed`.
pub fn rank_histogram(blocks: &[VerificationBlock], bins: Option<usize>, seed: u64) -> Result<RankHistogram> {
    let m = check_blocks(blocks)?;
    let ranks = m + 1;
    let bins = bins.unwrap_or(ranks);
    if bins == 0 || bins > ranks {
        return Err(Error::Invalid(format!("bins must lie in 1..={ranks}, got {bins}")));
    }
    let bin_of = |r: usize| r * bins / ranks;
    let mut counts = vec![0u64; bins];
    for block in blocks {
        let mut rng = substream(seed, Purpose::RankTies, block.day as u64, 0);
        for (i, &y) in block.obs.iter().enumerate() {
            let (mut below, mut tied) = (0usize, 0usize);
            for r in 0..m {
                let x = block.values[r * block.n + i];
                if x < y {
                    below += 1;
                } else if x == y {
                    tied += 1;
                }
            }
            let rank = if tied == 0 { below } else { below + rng.random_range(0..=tied) };
            counts[bin_of(rank)] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let mut width = vec![0usize; bins];
    for r in 0..ranks {
        width[bin_of(r)] += 1;
    }
    let chi_square: f64 = counts
        .iter()
        .zip(&width)
        .map(|(&c, &w)| {
            let expected = total as f64 * w as f64 / ranks as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    let p_value = if bins < 2 {
        1.0
    } else {
        reg_upper_inc_gamma(0.5 * (bins - 1) as f64, 0.5 * chi_square)?
    };
    Ok(RankHistogram {
        frequencies: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        counts,
        chi_square,
        p_value,
    })
}

/// Pooled exceedance frequencies at one rainfall level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcdfPoint {
    pub level: f64,
    /// Fraction of ensemble values above the level.
    pub model: f64,
    /// Fraction of observations above the level.
    pub observed: f64,
}

/// Fractions of ensemble values and of observations exceeding each level,
/// pooled over all locations and days.
pub fn ecdf_curve(blocks: &[VerificationBlock], levels: &[f64]) -> Result<Vec<EcdfPoint>> {
    check_blocks(blocks)?;
    if let Some(l) = levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Invalid(format!("levels must be finite and nonnegative, got {l}")));
    }
    let model_total: usize = blocks.iter().map(|b| b.values.len()).sum();
    let obs_total: usize = blocks.iter().map(|b| b.obs.len()).sum();
    Ok(levels
        .iter()
        .map(|&level| {
            let above = |v: &[f64]| v.iter().filter(|&&x| x > level).count();
            EcdfPoint {
                level,
                model: blocks.iter().map(|b| above(&b.values)).sum::<usize>() as f64 / model_total as f64,
                observed: blocks.iter().map(|b| above(&b.obs)).sum::<usize>() as f64 / obs_total as f64,
            }
        })
        .collect())
}

/// Sample CRPS, `(1/m) Σ|x_j − y| − 1/(2m(m−1)) Σ_{j≠k} |x_j − x_k|`;
/// nonnegative and equal to `|x − y|` for a point forecast.
pub fn crps_sample(samples: &[f64], y: f64) -> Result<f64> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::Invalid(format!("CRPS needs at least 2 samples, got {m}")));
    }
    if let Some(v) = samples.iter().chain(std::iter::once(&y)).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("CRPS input {v}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| x * (2.0 * i as f64 - (m as f64 - 1.0)))
        .sum();
    let to_obs = samples.iter().map(|x| (x - y).abs()).sum::<f64>() / m as f64;
    // `spread` is the sum over unordered pairs; the ordered-pair sum is twice it
    Ok((to_obs - spread / (m as f64 * (m as f64 - 1.0))).max(0.0))
}

/// Mean CRPS over every (location, day) of the blocks.
pub fn mean_crps(blocks: &[VerificationBlock]) -> Result<f64> {
    check_blocks(blocks)?;
    let mut total = 0.0;
    let mut cells = 0usize;
    for b in blocks {
        for i in 0..b.n {
            total += crps_sample(&b.samples_at(i), b.obs[i])?;
            cells += 1;
        }
    }
    Ok(total / cells as f64)
}

/// Pair weights `1/D_kl`, zero on the diagonal and for coincident locations.
pub fn variogram_weights(distances: &DistanceMatrix) -> Vec<f64> {
    let n = distances.len();
    let mut w = vec![0.0; n * n];
    let mut coincident = 0usize;
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let d = distances.get(k, l);
            if d > 0.0 {
                w[k * n + l] = 1.0 / d;
            } else {
                coincident += 1;
            }
        }
    }
    if coincident > 0 {
        log::warn!("{} location pairs at zero distance get variogram weight 0", coincident / 2);
    }
    w
}

fn variogram_with_weights(block: &VerificationBlock, weights: &[f64], p: f64) -> f64 {
    let (n, m) = (block.n, block.m);
    let mut score = 0.0;
    for k in 0..n {
        for l in 0..n {
            let w = weights[k * n + l];
            if w == 0.0 {
                continue;
            }
            let observed = (block.obs[k] - block.obs[l]).abs().powf(p);
            let expected = (0..m)
                .map(|r| {
                    let x = block.member(r);
                    (x[k] - x[l]).abs().powf(p)
                })
                .sum::<f64>()
                / m as f64;
            score += w * (observed - expected).powi(2);
        }
    }
    score
}

/// Variogram score of order `p` with inverse-distance pair weights, summed
/// over ordered location pairs.
pub fn variogram_score(block: &VerificationBlock, distances: &DistanceMatrix, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Invalid(format!("variogram order must be positive, got {p}")));
    }
    if distances.len() != block.n {
        return Err(Error::DimensionMismatch(format!(
            "distance matrix covers {} locations, block {}",
            distances.len(),
            block.n
        )));
    }
    Ok(variogram_with_weights(block, &variogram_weights(distances), p))
}

/// Per-day variogram scores with their mean and sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariogramSummary {
    pub per_day: Vec<f64>,
    pub mean: f64,
    pub sum: f64,
}

pub fn variogram_summary(blocks: &[VerificationBlock], distances: &DistanceMatrix, p: f64) -> Result<VariogramSummary> {
    check_blocks(blocks)?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Invalid(format!("variogram order must be positive, got {p}")));
    }
    if let Some(b) = blocks.iter().find(|b| b.n != distances.len()) {
        return Err(Error::DimensionMismatch(format!(
            "distance matrix covers {} locations, block for day {} has {}",
            distances.len(),
            b.day,
            b.n
        )));
    }
    let weights = variogram_weights(distances);
    let per_day: Vec<f64> = blocks.iter().map(|b| variogram_with_weights(b, &weights, p)).collect();
    let sum: f64 = per_day.iter().sum();
    Ok(VariogramSummary {
        mean: sum / per_day.len() as f64,
        sum,
        per_day,
    })
}

/// Root mean squared and mean absolute bias of the ensemble median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasSummary {
    pub rmsb: f64,
    pub mab: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Bias of the per-cell ensemble median against the observations, pooled
/// over all locations and days.
pub fn rmsb_mab(blocks: &[VerificationBlock]) -> Result<BiasSummary> {
    check_blocks(blocks)?;
    let (mut sq, mut abs, mut cells) = (0.0, 0.0, 0usize);
    for b in blocks {
        for i in 0..b.n {
            let e = b.obs[i] - median(b.samples_at(i));
            sq += e * e;
            abs += e.abs();
            cells += 1;
        }
    }
    Ok(BiasSummary {
        rmsb: (sq / cells as f64).sqrt(),
        mab: abs / cells as f64,
    })
}

/// Unbiased energy score of each day's ensemble on the rainfall scale.
pub fn energy_scores(blocks: &[VerificationBlock], beta: f64) -> Result<Vec<f64>> {
    check_blocks(blocks)?;
    crate::estimation::check_beta(beta)?;
    Ok(blocks.iter().map(|b| energy_score_flat(&b.values, &b.obs, beta)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;

    fn block(m: usize, values: Vec<f64>, obs: Vec<f64>) -> VerificationBlock {
        VerificationBlock::new(0, m, values, obs).unwrap()
    }

    #[test]
    fn validates_blocks() {
        assert!(VerificationBlock::new(0, 1, vec![0.0], vec![0.0]).is_err());
        assert!(VerificationBlock::new(0, 2, vec![0.0; 3], vec![0.0]).is_err());
        assert!(VerificationBlock::new(0, 2, vec![-1.0, 0.0], vec![0.0]).is_err());
    }

    #[test]
    fn crps_hand_values() {
        assert_eq!(crps_sample(&[2.0, 2.0, 2.0], 2.0).unwrap(), 0.0);
        assert_eq!(crps_sample(&[1.0, 1.0], 4.0).unwrap(), 3.0);
        // samples {0, 2}, y = 1: mean |x−y| = 1, pair term (2+2)/(2·2·1) = 1
        assert_eq!(crps_sample(&[0.0, 2.0], 1.0).unwrap(), 0.0);
        assert!(crps_sample(&[1.0], 0.0).is_err());
    }

    #[test]
    fn variogram_hand_case() {
        let b = block(2, vec![0.0, 0.0, 0.0, 4.0], vec![0.0, 2.0]);
        let d = DistanceMatrix::from_matrix(DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(), 1.0)
            .unwrap();
        assert_eq!(variogram_score(&b, &d, 1.0).unwrap(), 0.0);
        // obs (0,3): each ordered pair contributes (3 − 2)² = 1
        let b = block(2, vec![0.0, 0.0, 0.0, 4.0], vec![0.0, 3.0]);
        assert_eq!(variogram_score(&b, &d, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn single_cell_bias() {
        let b = block(3, vec![0.0, 1.0, 5.0], vec![3.0]);
        let s = rmsb_mab(&[b]).unwrap();
        assert_eq!((s.rmsb, s.mab), (2.0, 2.0));
    }

    #[test]
    fn rank_counts_strictly_below_without_ties() {
        let b = block(3, vec![1.0, 2.0, 3.0], vec![2.5]);
        let h = rank_histogram(&[b], None, 0).unwrap();
        assert_eq!(h.counts, vec![0, 0, 1, 0]);
    }

    #[test]
    fn ecdf_beyond_maximum_is_zero() {
        let b = block(2, vec![0.0, 1.0, 2.0, 0.0], vec![0.0, 3.0]);
        let c = ecdf_curve(&[b], &[0.0, 10.0]).unwrap();
        assert_eq!((c[0].model, c[0].observed), (0.5, 0.5));
        assert_eq!((c[1].model, c[1].observed), (0.0, 0.0));
    }
}
