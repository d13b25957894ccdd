//! Standard normal distribution function and upper quantiles.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};

const SERIES_CUTOFF: f64 = 2.5;

/// `erf(z)` for `0 <= z < SERIES_CUTOFF` via the all-positive series
/// `erf z = 2/sqrt(pi) exp(-z^2) sum 2^k z^(2k+1) / (1*3*...*(2k+1))`.
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * z2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-z2).exp() * sum
}

/// `erfc(z)` for `z >= SERIES_CUTOFF` by the continued fraction
/// `erfc z = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))`,
/// evaluated with the modified Lentz method.
fn erfc_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for m in 1..500 {
        let a = m as f64 / 2.0;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
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
    (-z * z).exp() / (PI.sqrt() * f)
}

/// Complementary error function for `z >= 0`.
fn erfc_nonneg(z: f64) -> f64 {
    if z < SERIES_CUTOFF {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

/// Upper tail `P(N(0,1) > x)`.
pub fn normal_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs() * FRAC_1_SQRT_2;
    let tail = 0.5 * erfc_nonneg(z);
    if x >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs() * FRAC_1_SQRT_2;
    let tail = 0.5 * erfc_nonneg(z);
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper quantile `z_a` with `P(N(0,1) > z_a) = a`, found by safeguarded
/// Newton iteration on the tail function inside a shrinking bracket.
pub fn normal_quantile(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid(format!("quantile level {a} outside (0, 1)")));
    }
    if a == 0.5 {
        return Ok(0.0);
    }
    // normal_sf is decreasing; keep sf(lo) > a > sf(hi).
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut z = if a < 0.5 {
        (-2.0 * a.ln()).sqrt().min(38.0)
    } else {
        -(-2.0 * (1.0 - a).ln()).sqrt().min(38.0)
    };
    for _ in 0..200 {
        let f = normal_sf(z) - a;
        if f == 0.0 {
            return Ok(z);
        }
        if f > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        // d sf / dz = -pdf
        let step = f / normal_pdf(z);
        let mut next = z + step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) || hi - lo <= 1e-15 * z.abs().max(1.0) {
            return Ok(next);
        }
        z = next;
    }
    Ok(z)
}
