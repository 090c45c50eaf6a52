use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gamma_density_unit, ln_gamma_unchecked, lower_unchecked, unit_gamma_quantile, upper_unchecked};

/// Zero-gamma mixture: mass `1 - p` at zero, and with probability `p` a
/// gamma amount with mean `mu` and dispersion `phi`
/// (shape `1/phi`, scale `phi * mu`, variance `phi * mu²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaMixture {
    p: f64,
    mu: f64,
    phi: f64,
}

impl GammaMixture {
    pub fn new(p: f64, mu: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("p must lie in [0, 1], got {p}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Invalid(format!("mu must be positive and finite, got {mu}")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::Invalid(format!("phi must be positive and finite, got {phi}")));
        }
        Ok(Self { p, mu, phi })
    }

    /// Probability of positive rainfall.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn shape(&self) -> f64 {
        1.0 / self.phi
    }

    pub fn scale(&self) -> f64 {
        self.phi * self.mu
    }

    /// Probability mass at exactly zero.
    pub fn dry_mass(&self) -> f64 {
        1.0 - self.p
    }

    /// Distribution function; exactly `1 - p` at zero.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::domain("gm_cdf", format!("y must be nonnegative, got {y}")));
        }
        Ok(self.cdf_unchecked(y))
    }

    pub(crate) fn cdf_unchecked(&self, y: f64) -> f64 {
        let dry = self.dry_mass();
        if y == 0.0 || self.p == 0.0 {
            return dry;
        }
        dry + self.p * lower_unchecked(self.shape(), y / self.scale())
    }

    /// Survival function `P(Y > y) = 1 − F(y)`, computed without
    /// cancellation; equals `p` at `y = 0`.
    pub fn sf(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::domain("gm_sf", format!("y must be nonnegative, got {y}")));
        }
        Ok(self.sf_unchecked(y))
    }

    pub(crate) fn sf_unchecked(&self, y: f64) -> f64 {
        if y == 0.0 || self.p == 0.0 {
            return self.p;
        }
        self.p * upper_unchecked(self.shape(), y / self.scale())
    }

    /// Density of the continuous part on `y > 0` (integrates to `p`).
    pub fn wet_density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.p * gamma_density_unit(self.shape(), y / self.scale()) / self.scale()
    }

    /// Smallest `y ≥ 0` with `cdf(y) ≥ u`; zero whenever `u ≤ 1 - p`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain("gm_quantile", format!("u must lie in (0, 1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        let dry = self.dry_mass();
        if u <= dry {
            return 0.0;
        }
        let v = ((u - dry) / self.p).min(1.0 - f64::EPSILON / 2.0);
        if v <= 0.0 {
            return 0.0;
        }
        self.scale() * unit_gamma_quantile(self.shape(), v)
    }

    /// Inverse-CDF draw; dry outcomes are exactly `0.0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_unchecked(u)
    }
}

/// Binary cross-entropy between rain occurrence and `p = P(rain)`.
///
/// `p` is clipped to `[1e-12, 1 - 1e-12]`, so the loss is always finite.
pub fn logistic_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    if y > 0.0 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Negative log density of the gamma component at a positive amount.
pub fn gamma_nll(mu: f64, phi: f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::domain("gamma_nll", format!("y must be positive, got {y}")));
    }
    if !(mu > 0.0 && mu.is_finite()) || !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::domain(
            "gamma_nll",
            format!("mu and phi must be positive, got mu={mu} phi={phi}"),
        ));
    }
    let shape = 1.0 / phi;
    let scale = phi * mu;
    let log_density = shape * (y / scale).ln() - y.ln() - y / scale - ln_gamma_unchecked(shape);
    Ok(-log_density)
}

/// Total per-observation loss: logistic part always, gamma part on wet days.
pub fn observation_loss(law: &GammaMixture, y: f64) -> Result<f64> {
    let occurrence = logistic_loss(law.p(), y);
    if y > 0.0 {
        Ok(occurrence + gamma_nll(law.mu(), law.phi(), y)?)
    } else {
        Ok(occurrence)
    }
}
