use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Maps a raw predictor vector to the refined features fed to the GLM links.
///
/// Implementations must be deterministic and have a fixed output dimension.
pub trait FeatureTransform: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Writes the refined features of `raw` into `out` (`out.len() == output_dim()`).
    fn apply(&self, raw: &[f64], out: &mut [f64]);

    fn transform(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "transform expects {} features, got {}",
                self.input_dim(),
                raw.len()
            )));
        }
        let mut out = vec![0.0; self.output_dim()];
        self.apply(raw, &mut out);
        Ok(out)
    }

    /// Applies the transform to every row.
    fn transform_rows(&self, raw: &DenseMatrix) -> Result<DenseMatrix> {
        if raw.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "transform expects {} feature columns, got {}",
                self.input_dim(),
                raw.cols()
            )));
        }
        let d = self.output_dim();
        let mut data = vec![0.0; raw.rows() * d];
        for i in 0..raw.rows() {
            self.apply(raw.row(i), &mut data[i * d..(i + 1) * d]);
        }
        DenseMatrix::from_row_major(raw.rows(), d, data)
    }
}

/// The shipped transforms.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Identity { dim: usize },
    /// `(x - mean) / scale` per feature.
    Standardize { mean: Vec<f64>, scale: Vec<f64> },
}

impl Transform {
    pub fn identity(dim: usize) -> Self {
        Transform::Identity { dim }
    }

    /// Learns per-feature mean and population standard deviation.
    /// Constant columns get scale 1 so they pass through centred.
    pub fn standardize(raw: &DenseMatrix) -> Result<Self> {
        let n = raw.rows();
        if n == 0 {
            return Err(Error::InsufficientData("cannot standardize an empty feature matrix".into()));
        }
        let d = raw.cols();
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, x) in mean.iter_mut().zip(raw.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for i in 0..n {
            for ((v, x), m) in var.iter_mut().zip(raw.row(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self::from_parts(mean, scale)
    }

    pub fn from_parts(mean: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if mean.len() != scale.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} means but {} scales",
                mean.len(),
                scale.len()
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) || scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Invalid("standardization needs finite means and positive scales".into()));
        }
        Ok(Transform::Standardize { mean, scale })
    }

    /// Name used in serialized coefficient documents.
    pub fn name(&self) -> &'static str {
        match self {
            Transform::Identity { .. } => "identity",
            Transform::Standardize { .. } => "standardize",
        }
    }
}

impl FeatureTransform for Transform {
    fn input_dim(&self) -> usize {
        match self {
            Transform::Identity { dim } => *dim,
            Transform::Standardize { mean, .. } => mean.len(),
        }
    }

    fn output_dim(&self) -> usize {
        self.input_dim()
    }

    fn apply(&self, raw: &[f64], out: &mut [f64]) {
        match self {
            Transform::Identity { .. } => out.copy_from_slice(raw),
            Transform::Standardize { mean, scale } => {
                for (((o, x), m), s) in out.iter_mut().zip(raw).zip(mean).zip(scale) {
                    *o = (x - m) / s;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_centres_and_scales() {
        let raw = DenseMatrix::from_row_major(4, 2, vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0]).unwrap();
        let t = Transform::standardize(&raw).unwrap();
        let z = t.transform_rows(&raw).unwrap();
        let col0: Vec<f64> = (0..4).map(|i| z[(i, 0)]).collect();
        assert!(col0.iter().sum::<f64>().abs() < 1e-12);
        assert!((col0.iter().map(|v| v * v).sum::<f64>() / 4.0 - 1.0).abs() < 1e-12);
        // constant column: centred, unit scale
        assert!((0..4).all(|i| z[(i, 1)] == 0.0));
    }

    #[test]
    fn identity_passes_through() {
        let t = Transform::identity(3);
        assert_eq!(t.transform(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        assert!(t.transform(&[1.0]).is_err());
    }
}
