//! Seeded random streams.
//!
//! Every random draw in the crate comes from `ChaCha8Rng` (the 8-round ChaCha
//! stream cipher used as a counter-based generator, from `rand_chacha`),
//! seeded with `seed_from_u64` and split into independent streams with
//! `set_stream`. Runs are bit-reproducible given the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent sub-streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Graph = 1,
    Problem = 2,
    Init = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Uniform draw on `[lo, hi)`.
pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Standard normal pair via Box–Muller on two uniforms from the stream.
pub fn standard_normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    // u1 in (0, 1] keeps the log finite
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// `count` standard normals, consuming uniforms in pairs.
pub fn standard_normals(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let (a, b) = standard_normal_pair(rng);
        out.push(a);
        out.push(b);
    }
    out.truncate(count);
    out
}

/// Uniform point in the closed ball of `radius` around the origin.
pub fn uniform_in_ball(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    let dir = standard_normals(rng, dim);
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    if norm == 0.0 {
        return vec![0.0; dim];
    }
    dir.into_iter().map(|x| x / norm * r).collect()
}
