//! Reproducible Brownian increments.
//!
//! Every path owns an independent ChaCha8 stream keyed by
//! `(master_seed, path_index)`:
//!
//! - the 256-bit key is four consecutive SplitMix64 outputs seeded with
//!   `master_seed`, each written little-endian;
//! - the ChaCha stream id is `path_index`; the word position starts at zero.
//!
//! Uniforms take the top 53 bits of a `u64`. Standard normals come in pairs
//! from the Box–Muller transform with `u1 ∈ (0, 1]`, `u2 ∈ [0, 1)`:
//! `r = √(-2 ln u1)`, `(r cos 2πu2, r sin 2πu2)`.
//!
//! Nothing here depends on call order or threads, so paths can be generated
//! concurrently and still be bit-identical. This layout is part of the
//! reproducibility contract and must not change between releases.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;
use crate::{Error, Result};

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The random stream of one path.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl StreamRng {
    /// Stream `path_index` under `master_seed`.
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        let mut sm = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut sm).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(path_index);
        Self { inner, spare: None }
    }

    /// Raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_M53
    }

    /// A pair of independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let (s, c) = math::sin_cos(core::f64::consts::TAU * u2);
        (r * c, r * s)
    }

    /// One standard normal; the second of each Box–Muller pair is kept for
    /// the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.normal_pair();
        self.spare = Some(b);
        a
    }
}

/// Brownian increments of one path on a uniform grid: an `n_steps × m`
/// row-major matrix whose entries are independent `N(0, Δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementGrid {
    master_seed: u64,
    path_index: u64,
    n_steps: usize,
    noise_dim: usize,
    delta: f64,
    values: Vec<f64>,
}

impl IncrementGrid {
    /// Draws the increments of path `path_index`.
    ///
    /// Row `k` holds `B(t_{k+1}) - B(t_k)`. Normals are consumed row by row
    /// in pairs, so the output depends only on the arguments.
    pub fn generate(master_seed: u64, path_index: u64, n_steps: usize, noise_dim: usize, delta: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::OutOfDomain { name: "n_steps", value: 0.0, expected: "n_steps >= 1" });
        }
        if noise_dim == 0 {
            return Err(Error::OutOfDomain { name: "m", value: 0.0, expected: "m >= 1" });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::OutOfDomain { name: "delta", value: delta, expected: "delta > 0" });
        }
        let mut rng = StreamRng::new(master_seed, path_index);
        let scale = math::sqrt(delta);
        let mut values = vec![0.0; n_steps * noise_dim];
        let mut pairs = values.chunks_exact_mut(2);
        for pair in &mut pairs {
            let (a, b) = rng.normal_pair();
            pair[0] = a * scale;
            pair[1] = b * scale;
        }
        if let [last] = pairs.into_remainder() {
            *last = rng.normal_pair().0 * scale;
        }
        Ok(Self { master_seed, path_index, n_steps, noise_dim, delta, values })
    }

    /// Wraps explicit increments; mainly for tests and deterministic inputs.
    pub fn from_values(delta: f64, noise_dim: usize, values: Vec<f64>) -> Result<Self> {
        if noise_dim == 0 || values.is_empty() || !values.len().is_multiple_of(noise_dim) {
            return Err(Error::DimensionMismatch {
                what: "increment values",
                expected: noise_dim.max(1),
                found: values.len(),
            });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::OutOfDomain { name: "delta", value: delta, expected: "delta > 0" });
        }
        Ok(Self { master_seed: 0, path_index: 0, n_steps: values.len() / noise_dim, noise_dim, delta, values })
    }

    /// Block sums over `factor` consecutive steps: the increments of the same
    /// Brownian path on the grid with step `factor · Δ`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::OutOfDomain { name: "factor", value: factor as f64, expected: "factor >= 2" });
        }
        if !self.n_steps.is_multiple_of(factor) {
            return Err(Error::NotDivisible { n_steps: self.n_steps, factor });
        }
        let m = self.noise_dim;
        let n = self.n_steps / factor;
        let mut values = vec![0.0; n * m];
        for (k, coarse) in values.chunks_exact_mut(m).enumerate() {
            for fine in self.values[k * factor * m..(k + 1) * factor * m].chunks_exact(m) {
                for (c, f) in coarse.iter_mut().zip(fine) {
                    *c += f;
                }
            }
        }
        Ok(Self {
            master_seed: self.master_seed,
            path_index: self.path_index,
            n_steps: n,
            noise_dim: m,
            delta: self.delta * factor as f64,
            values,
        })
    }

    /// Increment vector of step `k`.
    #[inline]
    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.noise_dim..(k + 1) * self.noise_dim]
    }

    /// All increments, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Brownian dimension `m`.
    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Step size.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Seed the grid was drawn from.
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Path index the grid was drawn for.
    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// `B(t_k) - B(0)` for `k = 0..=N`, row-major `(N+1) × m`.
    pub fn brownian_path(&self) -> Vec<f64> {
        let m = self.noise_dim;
        let mut path = vec![0.0; (self.n_steps + 1) * m];
        for k in 0..self.n_steps {
            for j in 0..m {
                path[(k + 1) * m + j] = path[k * m + j] + self.values[k * m + j];
            }
        }
        path
    }
}
