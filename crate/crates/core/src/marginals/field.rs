use crate::error::{Error, Result};
use crate::marginals::jglm::{jglm_predict, JglmCoefficients};
use crate::marginals::mixture::GammaMixture;
use crate::marginals::transform::{FeatureTransform, Transform};
use crate::numerics::DenseMatrix;

/// Mixture laws for every (location, day) cell, location-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalField {
    n_locations: usize,
    n_days: usize,
    cells: Vec<GammaMixture>,
}

impl MarginalField {
    pub fn new(n_locations: usize, n_days: usize, cells: Vec<GammaMixture>) -> Result<Self> {
        if cells.len() != n_locations * n_days {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for {n_locations} locations x {n_days} days",
                cells.len()
            )));
        }
        Ok(Self {
            n_locations,
            n_days,
            cells,
        })
    }

    /// The same law everywhere.
    pub fn homogeneous(n_locations: usize, n_days: usize, law: GammaMixture) -> Self {
        Self {
            n_locations,
            n_days,
            cells: vec![law; n_locations * n_days],
        }
    }

    /// One law per location, constant over days.
    pub fn per_location(laws: &[GammaMixture], n_days: usize) -> Self {
        let cells = laws
            .iter()
            .flat_map(|law| std::iter::repeat_n(*law, n_days))
            .collect();
        Self {
            n_locations: laws.len(),
            n_days,
            cells,
        }
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn get(&self, loc: usize, day: usize) -> &GammaMixture {
        &self.cells[loc * self.n_days + day]
    }

    pub fn cells(&self) -> &[GammaMixture] {
        &self.cells
    }

    /// Laws of all locations on one day.
    pub fn day(&self, day: usize) -> Vec<GammaMixture> {
        (0..self.n_locations).map(|i| *self.get(i, day)).collect()
    }
}

/// A fitted marginal model: feature transform plus link coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalModel {
    pub transform: Transform,
    pub coefficients: JglmCoefficients,
}

impl MarginalModel {
    pub fn new(transform: Transform, coefficients: JglmCoefficients) -> Result<Self> {
        if transform.output_dim() != coefficients.dim() {
            return Err(Error::DimensionMismatch(format!(
                "transform yields {} features but coefficients expect {}",
                transform.output_dim(),
                coefficients.dim()
            )));
        }
        Ok(Self {
            transform,
            coefficients,
        })
    }

    /// Law for one raw predictor vector.
    pub fn predict(&self, raw: &[f64]) -> Result<GammaMixture> {
        jglm_predict(&self.transform.transform(raw)?, &self.coefficients)
    }

    /// Laws for a location-major feature matrix (`row = loc * n_days + day`).
    pub fn field(&self, features: &DenseMatrix, n_locations: usize, n_days: usize) -> Result<MarginalField> {
        if features.rows() != n_locations * n_days {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {n_locations} x {n_days} cells",
                features.rows()
            )));
        }
        let cells = (0..features.rows())
            .map(|i| self.predict(features.row(i)))
            .collect::<Result<Vec<_>>>()?;
        MarginalField::new(n_locations, n_days, cells)
    }
}
