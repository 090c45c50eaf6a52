//! Synthetic datasets with known lengthscale and marginals.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::copula::latent_to_rain;
use crate::error::{Error, Result};
use crate::marginals::{jglm_predict, GammaMixture, JglmCoefficients, MarginalField};
use crate::numerics::DenseMatrix;
use crate::panel::RainPanel;
use crate::rng::{substream, Purpose};
use crate::spatial::{
    build_covariance, build_distance_matrix, DistanceConfig, DistanceMatrix, Location, LocationTable,
    MaternParams,
};

/// How the per-cell marginal laws are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalGenerator {
    /// One law for every location and day.
    Homogeneous(GammaMixture),
    /// One law per location, constant over days.
    PerLocation(Vec<GammaMixture>),
    /// Laws from link coefficients applied to standard-normal features drawn
    /// independently for every (location, day).
    Jglm(JglmCoefficients),
}

/// Settings of a synthetic study.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_locations: usize,
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
    pub elev_range: (f64, f64),
    pub n_days: usize,
    pub theta: f64,
    pub nu: f64,
    pub distance: DistanceConfig,
    pub marginals: MarginalGenerator,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_locations: 50,
            lat_range: (49.9, 58.7),
            lon_range: (-8.2, 1.8),
            elev_range: (0.0, 1000.0),
            n_days: 500,
            theta: 450.0,
            nu: MaternParams::DEFAULT_NU,
            distance: DistanceConfig::default(),
            marginals: MarginalGenerator::Homogeneous(default_law()),
            start_date: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
            seed: 0,
        }
    }
}

/// Fixture marginals: p = 0.6, μ = 3 mm, φ = 1.2.
pub fn default_law() -> GammaMixture {
    GammaMixture::new(0.6, 3.0, 1.2).expect("valid default law")
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_locations < 2 {
            return Err(Error::Invalid(format!("need at least 2 locations, got {}", self.n_locations)));
        }
        if self.n_days == 0 {
            return Err(Error::Invalid("need at least 1 day".into()));
        }
        MaternParams::new(self.theta, self.nu)?;
        self.distance.validate()?;
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ordered(self.lat_range) && ordered(self.lon_range) && ordered(self.elev_range)) {
            return Err(Error::Invalid("coordinate ranges must be finite with lower <= upper".into()));
        }
        if self.lat_range.0 < -90.0 || self.lat_range.1 > 90.0 || self.lon_range.0 < -180.0 || self.lon_range.1 > 180.0 {
            return Err(Error::Invalid("bounding box outside valid latitude/longitude".into()));
        }
        match &self.marginals {
            MarginalGenerator::PerLocation(laws) if laws.len() != self.n_locations => Err(Error::DimensionMismatch(
                format!("{} per-location laws for {} locations", laws.len(), self.n_locations),
            )),
            MarginalGenerator::Jglm(c) => c.validate(),
            _ => Ok(()),
        }
    }

    pub fn day_labels(&self) -> Result<Vec<String>> {
        (0..self.n_days as u64)
            .map(|s| {
                self.start_date
                    .checked_add_days(Days::new(s))
                    .map(|d| d.format("%Y-%m-%d").to_string())
                    .ok_or_else(|| Error::Invalid("day labels overflow the calendar".into()))
            })
            .collect()
    }
}

/// Summary of the generating settings, written next to the data.
#[derive(Debug, Clone, Serialize)]
pub struct Truth {
    pub theta: f64,
    pub nu: f64,
    pub a: f64,
    pub topo_scale: f64,
    pub geo_scale: f64,
    pub blend: crate::spatial::DistanceBlend,
    pub n_locations: usize,
    pub n_days: usize,
    pub seed: u64,
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
    pub elev_range: (f64, f64),
    pub marginals: serde_json::Value,
}

impl Truth {
    pub fn from_spec(spec: &SynthSpec) -> Self {
        let law = |l: &GammaMixture| serde_json::json!({"p": l.p(), "mu": l.mu(), "phi": l.phi()});
        let marginals = match &spec.marginals {
            MarginalGenerator::Homogeneous(l) => serde_json::json!({"kind": "homogeneous", "law": law(l)}),
            MarginalGenerator::PerLocation(ls) => {
                serde_json::json!({"kind": "per_location", "laws": ls.iter().map(law).collect::<Vec<_>>()})
            }
            MarginalGenerator::Jglm(c) => serde_json::json!({
                "kind": "jglm",
                "alpha0": c.alpha0, "alpha": c.alpha,
                "beta0": c.beta0, "beta": c.beta,
                "gamma0": c.gamma0, "gamma": c.gamma,
            }),
        };
        Self {
            theta: spec.theta,
            nu: spec.nu,
            a: spec.distance.a,
            topo_scale: spec.distance.topo_scale,
            geo_scale: spec.distance.geo_scale,
            blend: spec.distance.blend,
            n_locations: spec.n_locations,
            n_days: spec.n_days,
            seed: spec.seed,
            lat_range: spec.lat_range,
            lon_range: spec.lon_range,
            elev_range: spec.elev_range,
            marginals,
        }
    }
}

/// Locations uniform in the box, ids `S001`, `S002`, ….
pub fn generate_locations(spec: &SynthSpec) -> Result<LocationTable> {
    spec.validate()?;
    let mut rng = substream(spec.seed, Purpose::Locations, 0, 0);
    let width = spec.n_locations.to_string().len().max(3);
    let mut uniform = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    let locations = (0..spec.n_locations)
        .map(|i| {
            let lat = uniform(spec.lat_range);
            let lon = uniform(spec.lon_range);
            let elev = uniform(spec.elev_range);
            Location {
                id: format!("S{:0width$}", i + 1),
                lat,
                lon,
                elev,
            }
        })
        .collect();
    LocationTable::new(locations)
}

/// A simulated study with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub locations: LocationTable,
    pub panel: RainPanel,
    pub field: MarginalField,
    pub distances: DistanceMatrix,
    /// Raw features (location-major rows) when marginals come from a GLM.
    pub features: Option<DenseMatrix>,
}

fn build_field(spec: &SynthSpec) -> Result<(MarginalField, Option<DenseMatrix>)> {
    let (n, t) = (spec.n_locations, spec.n_days);
    Ok(match &spec.marginals {
        MarginalGenerator::Homogeneous(law) => (MarginalField::homogeneous(n, t, *law), None),
        MarginalGenerator::PerLocation(laws) => (MarginalField::per_location(laws, t), None),
        MarginalGenerator::Jglm(coeffs) => {
            let d = coeffs.dim();
            let mut data = Vec::with_capacity(n * t * d);
            for i in 0..n {
                let mut rng = substream(spec.seed, Purpose::Features, i as u64, 0);
                data.extend((0..t * d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            }
            let features = DenseMatrix::from_row_major(n * t, d, data)?;
            let cells = (0..n * t)
                .map(|row| jglm_predict(features.row(row), coeffs))
                .collect::<Result<Vec<_>>>()?;
            (MarginalField::new(n, t, cells)?, Some(features))
        }
    })
}

/// Draws one latent field per day from Σ(D | θ), censors it at the day's
/// thresholds and maps it to rainfall; days are independent.
pub fn simulate_dataset(spec: &SynthSpec) -> Result<SyntheticDataset> {
    let locations = generate_locations(spec)?;
    let distances = build_distance_matrix(&locations, &spec.distance)?;
    let cov = build_covariance(&distances, &MaternParams::new(spec.theta, spec.nu)?)?;
    let (field, features) = build_field(spec)?;
    let (n, t) = (spec.n_locations, spec.n_days);

    let days: Vec<Vec<f64>> = (0..t)
        .into_par_iter()
        .map(|s| {
            let mut rng = substream(spec.seed, Purpose::Truth, s as u64, 0);
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mut latent = vec![0.0; n];
            cov.factor().mul_lower(&z, &mut latent);
            let mut rain = vec![0.0; n];
            latent_to_rain(&latent, &field.day(s), &mut rain);
            rain
        })
        .collect();
    let mut values = vec![0.0; n * t];
    for (s, day) in days.iter().enumerate() {
        for (i, y) in day.iter().enumerate() {
            values[i * t + s] = *y;
        }
    }
    let panel = RainPanel::new(locations.ids(), spec.day_labels()?, values)?;
    Ok(SyntheticDataset {
        locations,
        panel,
        field,
        distances,
        features,
    })
}
