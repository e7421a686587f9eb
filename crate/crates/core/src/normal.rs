//! Standard normal helpers. `libm` supplies an `erfc` accurate to a few ulps;
//! `statrs`' inverse only seeds the Newton polish in [`quantile`].

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub(crate) fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `P(Z <= x)`.
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `P(Z > x)`.
pub(crate) fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `P(a <= Z < b)` without cancellation in either tail.
pub(crate) fn mass(a: f64, b: f64) -> f64 {
    if b <= a {
        0.0
    } else if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        cdf(b) - cdf(a)
    } else {
        1.0 - cdf(a) - sf(b)
    }
}

/// Inverse of [`cdf`], polished with two Newton steps.
pub(crate) fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    newton(newton(x, p), p)
}

/// Inverse of [`sf`].
pub(crate) fn inverse_sf(q: f64) -> f64 {
    -quantile(q)
}

fn newton(x: f64, p: f64) -> f64 {
    let density = pdf(x);
    if !x.is_finite() || density < 1e-300 {
        return x;
    }
    // cdf(x) - p, evaluated in whichever tail is better conditioned
    let residual = if x > 0.0 {
        (1.0 - p) - sf(x)
    } else {
        cdf(x) - p
    };
    x - residual / density
}
