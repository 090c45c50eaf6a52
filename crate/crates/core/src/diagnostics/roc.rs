use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginals::MarginalField;
use crate::panel::RainPanel;

/// Default number of evenly spaced thresholds in `[0, 1]`.
pub const DEFAULT_TAU_POINTS: usize = 1001;

/// `k` evenly spaced thresholds from 0 to 1 inclusive.
pub fn tau_grid(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::Invalid(format!("threshold grid needs at least 2 points, got {k}")));
    }
    Ok((0..k)
        .map(|i| if i + 1 == k { 1.0 } else { i as f64 / (k - 1) as f64 })
        .collect())
}

/// One operating point; `tau` is `None` for the closing `(1, 1)` anchor
/// where every cell is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub tau: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

/// Receiver operating characteristic for exceedance of `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub q: f64,
    /// Operating points as the threshold sweeps from high to low.
    pub points: Vec<RocPoint>,
    /// Trapezoidal area under `points`; `None` when the sample contains no
    /// events or only events.
    pub auc: Option<f64>,
    pub events: usize,
    pub non_events: usize,
}

fn trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * 0.5 * (w[0].tpr + w[1].tpr))
        .sum()
}

/// ROC of forecast probabilities `scores` against binary `events`: a cell is
/// flagged at threshold τ when its score exceeds τ. Thresholds are visited
/// in descending order and the curve is closed at `(1, 1)`.
pub fn roc_from_scores(q: f64, scores: &[f64], events: &[bool], taus: &[f64]) -> Result<RocCurve> {
    if scores.len() != events.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} events",
            scores.len(),
            events.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("forecast score {s}")));
    }
    let pos = events.iter().filter(|&&e| e).count();
    let neg = events.len() - pos;
    if pos == 0 || neg == 0 {
        log::warn!("ROC at q = {q} is undefined: {pos} events among {} cells", events.len());
        return Ok(RocCurve {
            q,
            points: Vec::new(),
            auc: None,
            events: pos,
            non_events: neg,
        });
    }

    // sort cells by score, descending, so each threshold is one pointer move
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut sorted_taus = taus.to_vec();
    sorted_taus.sort_by(|a, b| b.total_cmp(a));
    sorted_taus.dedup();

    let mut points = Vec::with_capacity(sorted_taus.len() + 1);
    let (mut k, mut tp, mut fp) = (0usize, 0usize, 0usize);
    for &tau in &sorted_taus {
        while k < order.len() && scores[order[k]] > tau {
            if events[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            tau: Some(tau),
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    points.push(RocPoint {
        tau: None,
        fpr: 1.0,
        tpr: 1.0,
    });
    let auc = trapezoid(&points);
    Ok(RocCurve {
        q,
        points,
        auc: Some(auc),
        events: pos,
        non_events: neg,
    })
}

/// ROC using every distinct score as a threshold, which traces the complete
/// empirical curve; depends only on the ordering of the scores.
pub fn roc_exact(q: f64, scores: &[f64], events: &[bool]) -> Result<RocCurve> {
    let mut taus = scores.to_vec();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    roc_from_scores(q, scores, events, &taus)
}

/// ROC for the event "rain exceeds `q`", pooling every (location, day) as
/// an independent case and scoring each by its forecast exceedance
/// probability `1 − F(q)`.
pub fn roc_auc(field: &MarginalField, obs: &RainPanel, q: f64, taus: &[f64]) -> Result<RocCurve> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Invalid(format!("exceedance level must be finite and nonnegative, got {q}")));
    }
    let (n, t) = (obs.n_locations(), obs.n_days());
    if field.n_locations() != n || field.n_days() != t {
        return Err(Error::DimensionMismatch(format!(
            "marginal field is {}x{}, observations {n}x{t}",
            field.n_locations(),
            field.n_days()
        )));
    }
    let mut scores = Vec::with_capacity(n * t);
    let mut events = Vec::with_capacity(n * t);
    for i in 0..n {
        for s in 0..t {
            scores.push(field.get(i, s).sf_unchecked(q));
            events.push(obs.get(i, s) > q);
        }
    }
    roc_from_scores(q, &scores, &events, taus)
}
