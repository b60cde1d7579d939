// Copyright 2026 Molspin Contributors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic pseudo-random numbers for stochastic simulation.
//!
//! xoshiro256++ seeded through SplitMix64. Not cryptographic; chosen for
//! reproducibility without external dependencies. A given seed produces a
//! bit-identical stream on every platform.

use crate::fm;

#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
    spare_normal: Option<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng {
            state,
            spare_normal: None,
        }
    }

    /// Independent stream for a sweep point: seed ⊕ mixed index.
    pub fn derive(seed: u64, index: u64) -> Self {
        let mut sm = index.wrapping_mul(0xA076_1D64_78BD_642F);
        Rng::new(seed ^ splitmix64(&mut sm))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Exponential variate with the given rate (mean 1/rate).
    pub fn exponential(&mut self, rate: f64) -> f64 {
        let mut u = self.uniform();
        if u == 0.0 {
            u = f64::MIN_POSITIVE;
        }
        -fm::ln(u) / rate
    }

    /// Standard normal via Box-Muller; one spare is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let mut u1 = self.uniform();
        if u1 == 0.0 {
            u1 = f64::MIN_POSITIVE;
        }
        let u2 = self.uniform();
        let r = fm::sqrt(-2.0 * fm::ln(u1));
        let theta = fm::TAU * u2;
        self.spare_normal = Some(r * fm::sin(theta));
        r * fm::cos(theta)
    }

    /// Poisson variate. Knuth's product method below mean 30, normal
    /// approximation with continuity correction above.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        if mean < 30.0 {
            let limit = fm::exp(-mean);
            let mut k = 0u64;
            let mut p = 1.0;
            loop {
                p *= self.uniform();
                if p <= limit {
                    return k;
                }
                k += 1;
            }
        }
        let z = self.normal();
        let v = mean + fm::sqrt(mean) * z + 0.5;
        if v < 0.0 {
            0
        } else {
            v as u64
        }
    }

    /// Binomial(n, p) by direct Bernoulli draws; n stays small here.
    pub fn binomial(&mut self, n: u32, p: f64) -> u32 {
        let mut k = 0;
        for _ in 0..n {
            if self.uniform() < p {
                k += 1;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..200 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_streams_differ() {
        let mut a = Rng::derive(7, 0);
        let mut b = Rng::derive(7, 1);
        let same = (0..100).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn uniform_in_range() {
        let mut rng = Rng::new(99);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn exponential_mean() {
        let mut rng = Rng::new(3);
        let n = 50_000;
        let mean: f64 = (0..n).map(|_| rng.exponential(2.0)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn normal_moments() {
        let mut rng = Rng::new(11);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn poisson_mean_small_and_large() {
        let mut rng = Rng::new(5);
        for &mean in &[3.0, 80.0] {
            let n = 20_000;
            let m = (0..n).map(|_| rng.poisson(mean)).sum::<u64>() as f64 / n as f64;
            assert!((m - mean).abs() < 0.05 * mean, "target {mean}, got {m}");
        }
    }

    #[test]
    fn binomial_bounds() {
        let mut rng = Rng::new(17);
        for _ in 0..1000 {
            let k = rng.binomial(25, 0.011);
            assert!(k <= 25);
        }
    }
}
