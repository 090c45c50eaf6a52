use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::marginals::mixture::GammaMixture;
use crate::marginals::transform::FeatureTransform;
use crate::numerics::{digamma_unchecked, ln_gamma_unchecked, DenseMatrix};
use crate::panel::RainPanel;

/// Regression coefficients of the three links:
/// logit(p) = α₀ + ⟨α, z⟩, log μ = β₀ + ⟨β, z⟩, log φ = γ₀ + ⟨γ, z⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct JglmCoefficients {
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub gamma0: f64,
    pub gamma: Vec<f64>,
}

impl JglmCoefficients {
    pub fn new(
        alpha0: f64,
        alpha: Vec<f64>,
        beta0: f64,
        beta: Vec<f64>,
        gamma0: f64,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        let c = Self {
            alpha0,
            alpha,
            beta0,
            beta,
            gamma0,
            gamma,
        };
        c.validate()?;
        Ok(c)
    }

    /// All-zero coefficients: p = 0.5, μ = 1, φ = 1 everywhere.
    pub fn zeros(dim: usize) -> Self {
        Self {
            alpha0: 0.0,
            alpha: vec![0.0; dim],
            beta0: 0.0,
            beta: vec![0.0; dim],
            gamma0: 0.0,
            gamma: vec![0.0; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.alpha.len();
        if self.beta.len() != d || self.gamma.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vectors have lengths {}, {}, {}",
                d,
                self.beta.len(),
                self.gamma.len()
            )));
        }
        if !self.to_vec().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("regression coefficients".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Flat layout `[α₀, α…, β₀, β…, γ₀, γ…]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * (self.dim() + 1));
        v.push(self.alpha0);
        v.extend_from_slice(&self.alpha);
        v.push(self.beta0);
        v.extend_from_slice(&self.beta);
        v.push(self.gamma0);
        v.extend_from_slice(&self.gamma);
        v
    }

    pub fn from_slice(dim: usize, v: &[f64]) -> Result<Self> {
        let k = dim + 1;
        if v.len() != 3 * k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients for feature dim {dim}, got {}",
                3 * k,
                v.len()
            )));
        }
        Self::new(
            v[0],
            v[1..k].to_vec(),
            v[k],
            v[k + 1..2 * k].to_vec(),
            v[2 * k],
            v[2 * k + 1..].to_vec(),
        )
    }

    /// The three linear predictors at refined features `z`.
    pub fn linear_predictors(&self, z: &[f64]) -> [f64; 3] {
        let dot = |w: &[f64]| w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        [
            self.alpha0 + dot(&self.alpha),
            self.beta0 + dot(&self.beta),
            self.gamma0 + dot(&self.gamma),
        ]
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + eˣ) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mixture law at refined features `z`.
pub fn jglm_predict(z: &[f64], coeffs: &JglmCoefficients) -> Result<GammaMixture> {
    if z.len() != coeffs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients expect {} features, got {}",
            coeffs.dim(),
            z.len()
        )));
    }
    let [e1, e2, e3] = coeffs.linear_predictors(z);
    if !(e1.is_finite() && e2.is_finite() && e3.is_finite()) {
        return Err(Error::NonFinite(format!("linear predictor ({e1}, {e2}, {e3})")));
    }
    let (mu, phi) = (e2.exp(), e3.exp());
    if !(mu > 0.0 && mu.is_finite() && phi > 0.0 && phi.is_finite()) {
        return Err(Error::Overflow {
            func: "jglm_predict",
            x: if mu > 0.0 && mu.is_finite() { e3 } else { e2 },
        });
    }
    GammaMixture::new(logistic(e1), mu, phi)
}

/// Optimizer settings for [`jglm_fit`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Length of the first trial step along the normalized gradient.
    pub initial_step: f64,
    pub max_iter: usize,
    /// Stop when |ΔL| / |L| falls below this.
    pub rel_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_iter: 10_000,
            rel_tol: 1e-8,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

/// Result of [`jglm_fit`]; `converged == false` flags a non-converged fit
/// whose coefficients are still usable (loss never exceeds the starting loss).
#[derive(Debug, Clone)]
pub struct FitReport {
    pub coefficients: JglmCoefficients,
    pub converged: bool,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub grad_norm: f64,
    /// Total loss after each accepted step, starting with the initial loss.
    pub loss_trace: Vec<f64>,
}

/// Observations per partial sum; fixes the reduction order so fits are
/// bit-reproducible whatever the thread count.
const CHUNK: usize = 2048;

struct Objective<'a> {
    z: &'a DenseMatrix,
    y: &'a [f64],
    dim: usize,
}

impl Objective<'_> {
    fn n_params(&self) -> usize {
        3 * (self.dim + 1)
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        let c = JglmCoefficients::from_slice(self.dim, theta).expect("parameter layout");
        let partial: Vec<f64> = (0..self.y.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| idx.iter().map(|&i| point_loss(&c, self.z.row(i), self.y[i]).0).sum())
            .collect();
        partial.iter().sum()
    }

    fn loss_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let c = JglmCoefficients::from_slice(self.dim, theta).expect("parameter layout");
        let k = self.dim + 1;
        let np = self.n_params();
        let partial: Vec<(f64, Vec<f64>)> = (0..self.y.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut loss = 0.0;
                let mut grad = vec![0.0; np];
                for &i in idx {
                    let z = self.z.row(i);
                    let (l, g) = point_loss(&c, z, self.y[i]);
                    loss += l;
                    for (link, gl) in g.iter().enumerate() {
                        if *gl == 0.0 {
                            continue;
                        }
                        let block = &mut grad[link * k..(link + 1) * k];
                        block[0] += gl;
                        for (b, zj) in block[1..].iter_mut().zip(z) {
                            *b += gl * zj;
                        }
                    }
                }
                (loss, grad)
            })
            .collect();
        let mut loss = 0.0;
        let mut grad = vec![0.0; np];
        for (l, g) in &partial {
            loss += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        (loss, grad)
    }
}

/// Loss of one observation and its derivatives in the three linear predictors.
fn point_loss(c: &JglmCoefficients, z: &[f64], y: f64) -> (f64, [f64; 3]) {
    let [e1, e2, e3] = c.linear_predictors(z);
    let p = logistic(e1);
    if y <= 0.0 {
        return (softplus(e1), [p, 0.0, 0.0]);
    }
    let occurrence = softplus(-e1);
    let shape = (-e3).exp();
    // y / (φ μ) and ln(y / (φ μ))
    let log_ratio = y.ln() - e2 - e3;
    let ratio = log_ratio.exp();
    let nll = -shape * log_ratio + y.ln() + ratio + ln_gamma_unchecked(shape);
    let g2 = shape - ratio;
    let g3 = shape * (log_ratio + 1.0 - digamma_unchecked(shape)) - ratio;
    (occurrence + nll, [p - 1.0, g2, g3])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits the joint GLM by gradient descent with Barzilai-Borwein steps and
/// Armijo backtracking, starting from all-zero coefficients.
///
/// `features` has one row per panel cell in location-major order
/// (`row = loc * n_days + day`); rows are passed through `transform` first.
pub fn jglm_fit(
    features: &DenseMatrix,
    rain: &RainPanel,
    transform: &dyn FeatureTransform,
    config: &FitConfig,
) -> Result<FitReport> {
    let n_obs = rain.n_locations() * rain.n_days();
    if features.rows() != n_obs {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {n_obs} panel cells",
            features.rows()
        )));
    }
    let wet = rain.wet_count();
    if wet == 0 || wet == n_obs {
        return Err(Error::InsufficientData(format!(
            "fitting needs both wet and dry observations ({wet} of {n_obs} wet)"
        )));
    }
    let z = transform.transform_rows(features)?;
    if z.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("transformed features".into()));
    }
    let objective = Objective {
        z: &z,
        y: rain.values(),
        dim: transform.output_dim(),
    };
    Ok(minimize(&objective, config))
}

fn minimize(obj: &Objective<'_>, config: &FitConfig) -> FitReport {
    let mut theta = vec![0.0; obj.n_params()];
    let (mut loss, mut grad) = obj.loss_and_grad(&theta);
    let initial_loss = loss;
    let mut trace = vec![loss];
    let mut step = config.initial_step / norm(&grad).max(f64::MIN_POSITIVE);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 == 0.0 {
            converged = true;
            break;
        }
        // Armijo backtracking from the current trial step.
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let l = obj.loss(&trial);
            if l.is_finite() && l <= loss - config.armijo * step * g2 {
                accepted = Some((trial, l));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss)) = accepted else {
            // No decrease representable at this precision: stationary.
            converged = norm(&grad) <= 1e-6 * loss.abs().max(1.0);
            break;
        };
        iterations += 1;
        let (l, g) = obj.loss_and_grad(&next);
        debug_assert_eq!(l, next_loss);
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&dy).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let rel_change = (loss - l).abs() / loss.abs().max(f64::MIN_POSITIVE);
        theta = next;
        loss = l;
        grad = g;
        trace.push(loss);
        if rel_change < config.rel_tol {
            converged = true;
            break;
        }
        step = if sy > 0.0 { ss / sy } else { 2.0 * step };
    }

    let grad_norm = norm(&grad);
    if !converged {
        log::warn!("joint GLM fit did not converge after {iterations} iterations (gradient norm {grad_norm:e})");
    }
    FitReport {
        coefficients: JglmCoefficients::from_slice(obj.dim, &theta).expect("finite coefficients"),
        converged,
        iterations,
        initial_loss,
        final_loss: loss,
        grad_norm,
        loss_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        let law = jglm_predict(&[0.0, 0.0], &JglmCoefficients::zeros(2)).unwrap();
        assert_eq!((law.p(), law.mu(), law.phi()), (0.5, 1.0, 1.0));
        let mut c = JglmCoefficients::zeros(0);
        c.alpha0 = 2.0;
        let law = jglm_predict(&[], &c).unwrap();
        assert!((law.p() - 0.880_797_078_0).abs() < 1e-10);
        assert!(jglm_predict(&[1.0], &c).is_err());
    }

    #[test]
    fn overflowing_predictor_is_an_error() {
        let mut c = JglmCoefficients::zeros(1);
        c.beta = vec![1e3];
        assert!(jglm_predict(&[1.0], &c).is_err());
        c.beta = vec![f64::MAX];
        assert!(jglm_predict(&[10.0], &c).is_err());
    }

    #[test]
    fn flat_layout_round_trips() {
        let c = JglmCoefficients::new(1.0, vec![2.0, 3.0], 4.0, vec![5.0, 6.0], 7.0, vec![8.0, 9.0]).unwrap();
        let v = c.to_vec();
        assert_eq!(v, (1..=9).map(f64::from).collect::<Vec<_>>());
        assert_eq!(JglmCoefficients::from_slice(2, &v).unwrap(), c);
        assert!(JglmCoefficients::new(0.0, vec![1.0], 0.0, vec![], 0.0, vec![1.0]).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let z = DenseMatrix::from_row_major(4, 2, vec![0.3, -1.0, 1.2, 0.5, -0.7, 0.1, 0.0, 2.0]).unwrap();
        let y = [0.0, 2.5, 0.4, 7.0];
        let obj = Objective { z: &z, y: &y, dim: 2 };
        let theta = [0.1, -0.2, 0.3, 0.5, 0.1, -0.1, -0.3, 0.2, 0.05];
        let (_, g) = obj.loss_and_grad(&theta);
        for j in 0..theta.len() {
            let h = 1e-6;
            let mut up = theta;
            let mut dn = theta;
            up[j] += h;
            dn[j] -= h;
            let fd = (obj.loss(&up) - obj.loss(&dn)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6, "param {j}: fd {fd} analytic {}", g[j]);
        }
    }
}
