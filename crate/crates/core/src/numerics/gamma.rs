//! Gamma-family special functions.

use crate::error::{Error, Result};
use crate::numerics::normal::std_normal_quantile;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Γ` is shifted upward by recurrence before the
/// asymptotic series is applied.
const STIRLING_CUTOFF: f64 = 10.0;

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("log_gamma", format!("x must be positive, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x >= STIRLING_CUTOFF {
        return stirling(x);
    }
    // ln Γ(x) = ln Γ(x + k) - ln(x (x+1) ... (x+k-1))
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < STIRLING_CUTOFF {
        prod *= shifted;
        shifted += 1.0;
    }
    stirling(shifted) - prod.ln()
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number tail of the Stirling series, Horner form.
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// Digamma function ψ(x) = d/dx ln Γ(x), `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("digamma", format!("x must be positive, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (5.0 / 660.0)))));
    acc + x.ln() - 0.5 * inv - tail
}

const INC_GAMMA_EPS: f64 = 1e-16;
const INC_GAMMA_MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma function P(shape, x).
pub fn reg_lower_inc_gamma(shape: f64, x: f64) -> Result<f64> {
    check_inc_gamma_args("reg_lower_inc_gamma", shape, x)?;
    Ok(lower_unchecked(shape, x))
}

/// Regularized upper incomplete gamma function Q(shape, x) = 1 - P(shape, x),
/// computed without cancellation in the upper tail.
pub fn reg_upper_inc_gamma(shape: f64, x: f64) -> Result<f64> {
    check_inc_gamma_args("reg_upper_inc_gamma", shape, x)?;
    Ok(upper_unchecked(shape, x))
}

pub(crate) fn upper_unchecked(shape: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < shape + 1.0 {
        1.0 - lower_series(shape, x)
    } else {
        upper_continued_fraction(shape, x)
    }
}

fn check_inc_gamma_args(func: &'static str, shape: f64, x: f64) -> Result<()> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::domain(func, format!("shape must be positive, got {shape}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(func, format!("x must be nonnegative, got {x}")));
    }
    Ok(())
}

pub(crate) fn lower_unchecked(shape: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < shape + 1.0 {
        lower_series(shape, x)
    } else {
        1.0 - upper_continued_fraction(shape, x)
    }
}

/// exp(-x + a ln x - ln Γ(a)), the common prefactor of both expansions.
fn prefactor(shape: f64, x: f64) -> f64 {
    (-x + shape * x.ln() - ln_gamma_unchecked(shape)).exp()
}

fn lower_series(shape: f64, x: f64) -> f64 {
    let mut ap = shape;
    let mut term = 1.0 / shape;
    let mut sum = term;
    for _ in 0..INC_GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * INC_GAMMA_EPS {
            break;
        }
    }
    (sum * prefactor(shape, x)).min(1.0)
}

/// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn upper_continued_fraction(shape: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - shape;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..INC_GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - shape);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < INC_GAMMA_EPS {
            break;
        }
    }
    (prefactor(shape, x) * h).clamp(0.0, 1.0)
}

/// Density of the unit-scale gamma law with the given shape.
pub(crate) fn gamma_density_unit(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((shape - 1.0) * x.ln() - x - ln_gamma_unchecked(shape)).exp()
}

/// Inverse of `x -> P(shape, x)`: the unit-scale gamma quantile.
///
/// Safeguarded Newton iteration inside a bisection bracket, seeded with
/// the Wilson-Hilferty approximation.
pub(crate) fn unit_gamma_quantile(shape: f64, u: f64) -> f64 {
    debug_assert!(shape > 0.0 && u > 0.0 && u < 1.0);

    let mut guess = {
        let z = std_normal_quantile(u).unwrap_or(0.0);
        let c = 1.0 / (9.0 * shape);
        let wh = shape * (1.0 - c + z * c.sqrt()).powi(3);
        if shape < 1.0 || !(wh > 0.0) {
            // P(a, x) ~ x^a / Γ(a + 1) near zero
            (u.ln() + ln_gamma_unchecked(shape + 1.0)).exp().powf(1.0 / shape)
        } else {
            wh
        }
    };
    if !(guess > 0.0) || !guess.is_finite() {
        guess = shape;
    }

    let mut lo = 0.0_f64;
    let mut hi = guess.max(shape).max(1.0);
    while lower_unchecked(shape, hi) < u {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::MAX;
        }
    }
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let f = lower_unchecked(shape, x) - u;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = gamma_density_unit(shape, x);
        let mut next = if dens > 0.0 { x - f / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}
