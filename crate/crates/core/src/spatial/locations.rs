use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One station or grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    /// Degrees north.
    pub lat: f64,
    /// Degrees east.
    pub lon: f64,
    /// Elevation (geopotential height units).
    pub elev: f64,
}

/// Validated set of locations with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationTable {
    locations: Vec<Location>,
}

impl LocationTable {
    pub fn new(locations: Vec<Location>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(locations.len());
        for loc in &locations {
            if !seen.insert(loc.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate location id {:?}", loc.id)));
            }
            if !(loc.lat.is_finite() && loc.lon.is_finite() && loc.elev.is_finite()) {
                return Err(Error::NonFinite(format!("coordinates of location {:?}", loc.id)));
            }
            if !(-90.0..=90.0).contains(&loc.lat) {
                return Err(Error::Invalid(format!("latitude {} of {:?} outside [-90, 90]", loc.lat, loc.id)));
            }
            if !(-180.0..=180.0).contains(&loc.lon) {
                return Err(Error::Invalid(format!(
                    "longitude {} of {:?} outside [-180, 180]",
                    loc.lon, loc.id
                )));
            }
        }
        Ok(Self { locations })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn get(&self, i: usize) -> &Location {
        &self.locations[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Location> {
        self.locations.iter()
    }

    pub fn ids(&self) -> Vec<String> {
        self.locations.iter().map(|l| l.id.clone()).collect()
    }

    /// Index of the location with this id.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.id == id)
    }

    /// Table restricted to (and reordered by) `indices`.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.locations[i].clone()).collect())
    }
}
