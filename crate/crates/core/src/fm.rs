// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Float math routed through `libm` so the crate builds without `std` and
//! produces bit-identical results across platforms.

#![allow(dead_code)]

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Integer power by squaring; exact for the small exponents used here.
pub fn powi(x: f64, n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut e = n.unsigned_abs();
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Direct evaluation overflows for x ≳ 26; beyond x = 7 the asymptotic
/// series 1/(x√π)·Σ (-1)ᵏ (2k-1)!!/(2x²)ᵏ is accurate to below 1e-11.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfcx(-x) = 2·exp(x²) − erfcx(x); only safe while exp(x²) is finite.
        // Callers in this crate never need large negative arguments.
        return 2.0 * exp(x * x) - erfcx(-x);
    }
    if x <= 7.0 {
        return exp(x * x) * erfc(x);
    }
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=10u32 {
        term *= -((2 * k - 1) as f64) * inv2x2;
        sum += term;
    }
    sum / (x * SQRT_PI)
}

pub const SQRT_PI: f64 = 1.772_453_850_905_516;
pub const SQRT_2: f64 = core::f64::consts::SQRT_2;
pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_pow() {
        for &(x, n) in &[(2.0, 10), (1.5, 3), (0.9, -4), (3.3, 0)] {
            let expect = powf(x, n as f64);
            assert!((powi(x, n) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn erfcx_continuous_across_switch() {
        // The asymptotic branch must agree with direct exp(x²)·erfc(x)
        // everywhere the latter stays finite.
        for &x in &[6.9, 6.99, 7.0, 7.01, 7.5, 8.0, 12.0, 20.0] {
            let direct = exp(x * x) * erfc(x);
            assert!(
                (erfcx(x) - direct).abs() <= 1e-9 * direct,
                "x={x}: {} vs {}",
                erfcx(x),
                direct
            );
        }
        // Far tail stays finite and close to the leading term.
        let x = 80.0;
        assert!((erfcx(x) * x * SQRT_PI - 1.0).abs() < 1e-4);
    }

    #[test]
    fn erfcx_small_and_negative() {
        assert!((erfcx(0.0) - 1.0).abs() < 1e-15);
        // erfcx(-1) = 2e - erfcx(1)
        let expect = 2.0 * exp(1.0) - exp(1.0) * erfc(1.0);
        assert!((erfcx(-1.0) - expect).abs() < 1e-12);
    }
}
