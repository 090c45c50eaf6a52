//! Observed rainfall panel.

use crate::error::{Error, Result};

/// Rainfall in mm for `n` locations over `T` days, stored location-major.
///
/// Dry cells hold exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct RainPanel {
    location_ids: Vec<String>,
    day_labels: Vec<String>,
    values: Vec<f64>,
}

impl RainPanel {
    /// `values[loc * n_days + day]`.
    pub fn new(location_ids: Vec<String>, day_labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = location_ids.len();
        let t = day_labels.len();
        if values.len() != n * t {
            return Err(Error::DimensionMismatch(format!(
                "panel of {n} locations x {t} days needs {} values, got {}",
                n * t,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid(format!(
                "rainfall must be finite and nonnegative; location {} day {} holds {}",
                location_ids[idx / t],
                day_labels[idx % t],
                values[idx]
            )));
        }
        Ok(Self {
            location_ids,
            day_labels,
            values,
        })
    }

    /// Panel with generated labels `L0..`, `D0..`; handy for in-memory work.
    pub fn from_values(n_locations: usize, n_days: usize, values: Vec<f64>) -> Result<Self> {
        let ids = (0..n_locations).map(|i| format!("L{i}")).collect();
        let days = (0..n_days).map(|t| format!("D{t}")).collect();
        Self::new(ids, days, values)
    }

    pub fn n_locations(&self) -> usize {
        self.location_ids.len()
    }

    pub fn n_days(&self) -> usize {
        self.day_labels.len()
    }

    pub fn location_ids(&self) -> &[String] {
        &self.location_ids
    }

    pub fn day_labels(&self) -> &[String] {
        &self.day_labels
    }

    pub fn get(&self, loc: usize, day: usize) -> f64 {
        self.values[loc * self.n_days() + day]
    }

    /// Rainfall across all locations on one day.
    pub fn day(&self, day: usize) -> Vec<f64> {
        (0..self.n_locations()).map(|i| self.get(i, day)).collect()
    }

    /// One location's time series.
    pub fn series(&self, loc: usize) -> &[f64] {
        let t = self.n_days();
        &self.values[loc * t..(loc + 1) * t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn wet_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }
}
