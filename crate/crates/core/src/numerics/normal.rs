//! Standard normal distribution: density, CDF and quantile.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Switch from the power series to the continued fraction.
const ERFC_SERIES_LIMIT: f64 = 2.0;

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < ERFC_SERIES_LIMIT {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// erf(x) = 2/√π e^{-x²} Σ (2x²)^n x / (1·3···(2n+1)); all terms positive.
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let two_x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    loop {
        k += 2.0;
        term *= two_x2 / k;
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x * x).exp() * sum
}

/// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))) for x ≥ 2.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * (-x * x).exp() / f
}

/// Φ(x). Exactly 0.5 at x = 0.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x <= 0.0 {
        0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Φ⁻¹(u) for u ∈ (0, 1). Endpoints are infinite and rejected.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if u == 0.0 || u == 1.0 {
        return Err(Error::InfiniteTail { u });
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(
            "std_normal_quantile",
            format!("u must lie in (0, 1), got {u}"),
        ));
    }
    if u == 0.5 {
        return Ok(0.0);
    }
    // 1 - u is exact for u ≥ 0.5
    Ok(if u < 0.5 {
        lower_tail_quantile(u)
    } else {
        -lower_tail_quantile(1.0 - u)
    })
}

/// Quantile for u ≤ 0.5: a rational starting value refined by Halley steps.
fn lower_tail_quantile(u: f64) -> f64 {
    let t = (-2.0 * u.ln()).sqrt();
    let num = 2.515_517 + t * (0.802_853 + t * 0.010_328);
    let den = 1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308));
    let mut x = -(t - num / den);
    for _ in 0..8 {
        let pdf = std_normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let e = (std_normal_cdf(x) - u) / pdf;
        let step = e / (1.0 + 0.5 * x * e);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_endpoints_are_infinite_tail_errors() {
        assert!(matches!(std_normal_quantile(0.0), Err(Error::InfiniteTail { .. })));
        assert!(matches!(std_normal_quantile(1.0), Err(Error::InfiniteTail { .. })));
        assert!(std_normal_quantile(1.5).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn round_trip() {
        let x = std_normal_quantile(std_normal_cdf(1.7)).unwrap();
        assert!((x - 1.7).abs() < 1e-9);
        for k in 1..=12 {
            let u = 10f64.powi(-k);
            for &v in &[u, 1.0 - u] {
                let back = std_normal_cdf(std_normal_quantile(v).unwrap());
                assert!((back - v).abs() < 1e-9 * v.max(1e-3), "u={v}");
            }
        }
    }

    #[test]
    fn erfc_reference_values() {
        // erfc(1), erfc(3) to 16 digits
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!((erfc(3.0) / 2.209_049_699_858_544e-5 - 1.0).abs() < 1e-13);
        assert!((erfc(-1.0) - 1.842_700_792_949_715).abs() < 1e-15);
    }
}
