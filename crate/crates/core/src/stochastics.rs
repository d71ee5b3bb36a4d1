//! Seeded random substreams and the uniform, normal and Poisson samplers.
//!
//! A [`RandomSource`] is a xoshiro256++ generator whose initial state is a
//! pure function of `(master_seed, stream_label)`. Work that must be
//! reproducible independently of scheduling (one entity, one frame) gets its
//! own label instead of sharing a generator.
//!
//! Model code draws through the [`Sampler`] trait so tests can substitute
//! scripted draws for the generator.

use core::f64::consts::TAU;

use crate::error::{invalid, Result};

/// Largest rate drawn with a single product-method pass. Larger rates are
/// split into chunks of at most this size and summed.
const POISSON_CHUNK: f64 = 30.0;

/// Source of random draws used by the simulation.
///
/// Only [`Sampler::next_u64`] is required. The provided methods implement
/// the laws on top of it; they do no validation, which is the job of the
/// `sample_*` functions.
pub trait Sampler {
    fn next_u64(&mut self) -> u64;

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    fn draw_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[a, b)`; returns `a` when `a == b`.
    fn draw_uniform(&mut self, a: f64, b: f64) -> f64 {
        if a == b {
            return a;
        }
        let x = a + (b - a) * self.draw_unit();
        // rounding can land exactly on the open bound
        if x >= b {
            b.next_down()
        } else {
            x
        }
    }

    /// Standard normal draw (Box-Muller, one output per call).
    fn draw_standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.draw_unit();
        let u2 = self.draw_unit();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(TAU * u2)
    }

    fn draw_normal(&mut self, mu: f64, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return mu;
        }
        mu + sigma * self.draw_standard_normal()
    }

    /// Poisson draw by the sequential product method.
    fn draw_poisson(&mut self, lambda: f64) -> u32 {
        let mut remaining = lambda;
        let mut total = 0u32;
        while remaining > 0.0 {
            let chunk = remaining.min(POISSON_CHUNK);
            remaining -= chunk;
            let limit = libm::exp(-chunk);
            let mut product = 1.0;
            loop {
                product *= self.draw_unit();
                if product <= limit {
                    break;
                }
                total = total.saturating_add(1);
            }
        }
        total
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    fn draw_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        // Lemire's multiply-and-reject
        let threshold = n.wrapping_neg() % n;
        loop {
            let wide = u128::from(self.next_u64()) * u128::from(n);
            if (wide as u64) >= threshold {
                return (wide >> 64) as usize;
            }
        }
    }
}

impl<S: Sampler + ?Sized> Sampler for &mut S {
    fn next_u64(&mut self) -> u64 {
        (**self).next_u64()
    }
    fn draw_unit(&mut self) -> f64 {
        (**self).draw_unit()
    }
    fn draw_uniform(&mut self, a: f64, b: f64) -> f64 {
        (**self).draw_uniform(a, b)
    }
    fn draw_standard_normal(&mut self) -> f64 {
        (**self).draw_standard_normal()
    }
    fn draw_normal(&mut self, mu: f64, sigma: f64) -> f64 {
        (**self).draw_normal(mu, sigma)
    }
    fn draw_poisson(&mut self, lambda: f64) -> u32 {
        (**self).draw_poisson(lambda)
    }
    fn draw_index(&mut self, n: usize) -> usize {
        (**self).draw_index(n)
    }
}

/// Deterministic generator bound to a `(master_seed, stream_label)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSource {
    state: [u64; 4],
}

impl RandomSource {
    fn from_key(key: u64) -> Self {
        let mut sm = key;
        let mut state = [0u64; 4];
        for word in &mut state {
            *word = splitmix64(&mut sm);
        }
        // xoshiro must not start from the all-zero state
        if state == [0; 4] {
            state[0] = 0x9E37_79B9_7F4A_7C15;
        }
        Self { state }
    }
}

impl Sampler for RandomSource {
    fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }
}

/// Derives the substream for `stream_label` under `master_seed`.
///
/// The label is hashed with FNV-1a and mixed with the seed, so the result is
/// independent of how many other streams exist or in which order they were
/// created. Panics if `stream_label` is empty.
pub fn derive_stream(master_seed: u64, stream_label: &str) -> RandomSource {
    assert!(!stream_label.is_empty(), "stream label must be non-empty");
    let label_hash = fnv1a64(stream_label.as_bytes());
    let mut key = master_seed ^ 0x6A09_E667_F3BC_C908;
    let seed_mix = splitmix64(&mut key);
    RandomSource::from_key(seed_mix ^ label_hash.rotate_left(29) ^ mix64(label_hash))
}

/// Uniform draw on `[a, b)`. Rejects `a > b` and non-finite bounds.
pub fn sample_uniform<S: Sampler + ?Sized>(src: &mut S, a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid("uniform bounds", "must be finite"));
    }
    if a > b {
        return Err(invalid("uniform bounds", "lower bound exceeds upper bound"));
    }
    Ok(src.draw_uniform(a, b))
}

/// Normal draw with mean `mu` and standard deviation `sigma`.
pub fn sample_normal<S: Sampler + ?Sized>(src: &mut S, mu: f64, sigma: f64) -> Result<f64> {
    if !mu.is_finite() || !sigma.is_finite() {
        return Err(invalid("normal parameters", "must be finite"));
    }
    if sigma < 0.0 {
        return Err(invalid("sigma", "must be non-negative"));
    }
    Ok(src.draw_normal(mu, sigma))
}

/// Poisson draw with rate `lambda`; `lambda == 0` always yields 0.
pub fn sample_poisson<S: Sampler + ?Sized>(src: &mut S, lambda: f64) -> Result<u32> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(invalid("lambda", "must be finite and non-negative"));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    Ok(src.draw_poisson(lambda))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    mix64(*state)
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
