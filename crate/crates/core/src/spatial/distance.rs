use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::spatial::locations::LocationTable;

/// Kilometres per degree of arc on a sphere of radius 6371 km.
pub const KM_PER_DEGREE: f64 = 111.195;

/// How the geographic and topographic distances are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceBlend {
    /// `sqrt((a·D)² + ((1−a)·T/s)²)`: a Euclidean distance in the scaled
    /// (lat, lon, elev) space, so every Matérn covariance stays positive definite.
    Euclidean,
    /// `a·D + (1−a)·T/s`. Not a Euclidean metric; Matérn-3.5 matrices built
    /// from it can be indefinite when elevations vary.
    Linear,
}

impl std::str::FromStr for DistanceBlend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Invalid(format!("unknown distance blend {other:?}"))),
        }
    }
}

/// Parameters of the blended distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    /// Weight on the geographic part, in `[0, 1]`.
    pub a: f64,
    /// Divisor applied to elevation differences.
    pub topo_scale: f64,
    /// Multiplier turning Euclidean (lat, lon) degree distances into
    /// lengthscale units; `1.0` keeps plain degrees.
    pub geo_scale: f64,
    pub blend: DistanceBlend,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            a: 0.9,
            topo_scale: 70.0,
            geo_scale: KM_PER_DEGREE,
            blend: DistanceBlend::Euclidean,
        }
    }
}

impl DistanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::Invalid(format!("blend coefficient a must lie in [0, 1], got {}", self.a)));
        }
        if !(self.topo_scale > 0.0 && self.topo_scale.is_finite()) {
            return Err(Error::Invalid(format!("topo_scale must be positive, got {}", self.topo_scale)));
        }
        if !(self.geo_scale > 0.0 && self.geo_scale.is_finite()) {
            return Err(Error::Invalid(format!("geo_scale must be positive, got {}", self.geo_scale)));
        }
        Ok(())
    }

    /// Blended distance between two points given their geographic and
    /// elevation separations.
    pub fn combine(&self, geo: f64, topo: f64) -> f64 {
        // exact endpoints regardless of blend
        if self.a == 1.0 {
            return geo;
        }
        if self.a == 0.0 {
            return topo / self.topo_scale;
        }
        let g = self.a * geo;
        let t = (1.0 - self.a) * topo / self.topo_scale;
        match self.blend {
            DistanceBlend::Euclidean => g.hypot(t),
            DistanceBlend::Linear => g + t,
        }
    }
}

/// Symmetric, zero-diagonal matrix of blended distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    matrix: DenseMatrix,
    a: f64,
}

impl DistanceMatrix {
    /// Wraps a precomputed matrix after checking the invariants.
    pub fn from_matrix(matrix: DenseMatrix, a: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("distance matrix must be square".into()));
        }
        let n = matrix.rows();
        for i in 0..n {
            if matrix[(i, i)] != 0.0 {
                return Err(Error::Invalid(format!("distance matrix diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = matrix[(i, j)];
                if !(v >= 0.0 && v.is_finite()) || v != matrix[(j, i)] {
                    return Err(Error::Invalid(format!(
                        "distance matrix entry ({i}, {j}) must be finite, nonnegative and symmetric"
                    )));
                }
            }
        }
        Ok(Self { matrix, a })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Restriction to a subset of locations (in the given order).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select(indices, indices),
            a: self.a,
        }
    }

    /// Smallest off-diagonal distance; `None` for fewer than two points.
    pub fn min_off_diagonal(&self) -> Option<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .reduce(f64::min)
    }
}

/// Pairwise blended distances between locations.
///
/// Coincident locations are allowed (off-diagonal zero) but logged, since
/// positive definiteness then rests on the jitter policy.
pub fn build_distance_matrix(locs: &LocationTable, config: &DistanceConfig) -> Result<DistanceMatrix> {
    config.validate()?;
    let n = locs.len();
    if n == 0 {
        return Err(Error::InsufficientData("no locations".into()));
    }
    let mut matrix = DenseMatrix::zeros(n, n);
    let mut coincident = 0usize;
    for i in 0..n {
        let li = locs.get(i);
        for j in 0..i {
            let lj = locs.get(j);
            let geo = config.geo_scale * (li.lat - lj.lat).hypot(li.lon - lj.lon);
            let topo = (li.elev - lj.elev).abs();
            let d = config.combine(geo, topo);
            if d == 0.0 {
                coincident += 1;
            }
            matrix[(i, j)] = d;
            matrix[(j, i)] = d;
        }
    }
    if coincident > 0 {
        log::warn!("{coincident} location pair(s) at zero blended distance; covariance will rely on jitter");
    }
    Ok(DistanceMatrix { matrix, a: config.a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::locations::Location;

    fn table(points: &[(f64, f64, f64)]) -> LocationTable {
        LocationTable::new(
            points
                .iter()
                .enumerate()
                .map(|(i, &(lat, lon, elev))| Location {
                    id: format!("s{i}"),
                    lat,
                    lon,
                    elev,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_three_points() {
        let locs = table(&[(50.0, -1.0, 0.0), (51.0, -1.0, 140.0), (50.0, 1.0, 70.0)]);
        let degrees = |blend| DistanceConfig {
            a: 0.9,
            topo_scale: 70.0,
            geo_scale: 1.0,
            blend,
        };
        let lin = build_distance_matrix(&locs, &degrees(DistanceBlend::Linear)).unwrap();
        // geo 1, topo 2: 0.9 + 0.1 * 2
        assert!((lin.get(0, 1) - 1.1).abs() < 1e-15);
        // geo 2, topo 1: 1.8 + 0.1
        assert!((lin.get(0, 2) - 1.9).abs() < 1e-15);
        // geo √5, topo 1
        assert!((lin.get(1, 2) - (0.9 * 5f64.sqrt() + 0.1)).abs() < 1e-15);

        let euc = build_distance_matrix(&locs, &degrees(DistanceBlend::Euclidean)).unwrap();
        assert!((euc.get(0, 1) - (0.81f64 + 0.04).sqrt()).abs() < 1e-15);
        assert!((euc.get(0, 2) - (3.24f64 + 0.01).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn endpoints_are_exact() {
        let locs = table(&[(50.0, -1.0, 10.0), (51.3, 0.7, 900.0), (49.1, 1.2, 35.0)]);
        for blend in [DistanceBlend::Euclidean, DistanceBlend::Linear] {
            let geo_only = DistanceConfig { a: 1.0, blend, ..DistanceConfig::default() };
            let d = build_distance_matrix(&locs, &geo_only).unwrap();
            let expected = KM_PER_DEGREE * (51.3f64 - 50.0).hypot(0.7 - -1.0);
            assert_eq!(d.get(0, 1), expected);
            let topo_only = DistanceConfig { a: 0.0, blend, ..DistanceConfig::default() };
            let d = build_distance_matrix(&locs, &topo_only).unwrap();
            assert_eq!(d.get(0, 1), 890.0 / 70.0);
        }
    }

    #[test]
    fn coincident_points_give_zero_distance() {
        let locs = table(&[(50.0, 0.0, 5.0), (50.0, 0.0, 5.0)]);
        let d = build_distance_matrix(&locs, &DistanceConfig::default()).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
    }

    #[test]
    fn rejects_bad_blend_coefficient() {
        let locs = table(&[(50.0, 0.0, 5.0)]);
        let cfg = DistanceConfig { a: 1.5, ..DistanceConfig::default() };
        assert!(build_distance_matrix(&locs, &cfg).is_err());
    }
}
