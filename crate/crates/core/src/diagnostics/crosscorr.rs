use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::RainPanel;
use crate::spatial::LocationTable;

/// Reference location for the correlation map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Center {
    /// The location nearest the mean (lat, lon) of all locations.
    CenterOfMass,
    Id(String),
}

impl std::str::FromStr for Center {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" => Err(Error::Invalid("empty center".into())),
            "center-of-mass" => Ok(Center::CenterOfMass),
            id => Ok(Center::Id(id.to_string())),
        }
    }
}

/// Correlation across days between the center series and every location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCorrelation {
    pub center_index: usize,
    pub center_id: String,
    /// `None` where either series has zero variance.
    pub correlations: Vec<Option<f64>>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    (va > 0.0 && vb > 0.0).then(|| (cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Index of the location nearest the mean latitude/longitude.
pub fn center_of_mass(locations: &LocationTable) -> Result<usize> {
    if locations.is_empty() {
        return Err(Error::InsufficientData("no locations".into()));
    }
    let n = locations.len() as f64;
    let lat = locations.iter().map(|l| l.lat).sum::<f64>() / n;
    let lon = locations.iter().map(|l| l.lon).sum::<f64>() / n;
    let dist = |i: usize| {
        let l = locations.get(i);
        (l.lat - lat).hypot(l.lon - lon)
    };
    Ok((0..locations.len())
        .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
        .expect("nonempty"))
}

/// Pearson correlation across days between the center location's series
/// and each location's series.
pub fn cross_correlation(panel: &RainPanel, locations: &LocationTable, center: &Center) -> Result<CrossCorrelation> {
    if panel.n_days() < 3 {
        return Err(Error::InsufficientData(format!(
            "cross-correlation needs at least 3 days, got {}",
            panel.n_days()
        )));
    }
    if panel.location_ids() != locations.ids().as_slice() {
        return Err(Error::DimensionMismatch("panel and location table list different ids".into()));
    }
    let center_index = match center {
        Center::CenterOfMass => center_of_mass(locations)?,
        Center::Id(id) => locations
            .position(id)
            .ok_or_else(|| Error::Invalid(format!("unknown center location {id:?}")))?,
    };
    let reference = panel.series(center_index);
    Ok(CrossCorrelation {
        center_index,
        center_id: locations.get(center_index).id.clone(),
        correlations: (0..panel.n_locations())
            .map(|i| pearson(reference, panel.series(i)))
            .collect(),
    })
}
