//! Seeded random inputs. Every purpose draws from its own ChaCha20 stream of
//! the run seed, so changing how many values one purpose consumes never shifts
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::SphereConfig;
use crate::numlin::{Antisym, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Omega = 1,
    Bodies = 2,
    Quads = 3,
    Coupling = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Antisymmetric matrix with independent N(0, scale²) upper entries.
pub fn random_antisym(rng: &mut ChaCha20Rng, n: usize, scale: f64) -> Result<Antisym> {
    let upper = (0..n * (n - 1) / 2).map(|_| scale * gaussian(rng)).collect();
    Antisym::from_upper(n, upper)
}

/// Uniform point on S^{n−1}: a normalized standard Gaussian vector.
pub fn random_unit_vector(rng: &mut ChaCha20Rng, n: usize) -> Vector {
    loop {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let r = crate::numlin::norm(&v);
        if r > 1e-12 {
            return Vector::from_raw(v.into_iter().map(|x| x / r).collect());
        }
    }
}

pub fn random_sphere_config(rng: &mut ChaCha20Rng, n: usize, bodies: usize) -> Result<SphereConfig> {
    let points: Vec<Vector> = (0..bodies).map(|_| random_unit_vector(rng, n)).collect();
    SphereConfig::new(&points)
}

/// Uniform angles in (−π, π], drawn through the planar sphere sampler.
pub fn random_angles(rng: &mut ChaCha20Rng, bodies: usize) -> Vec<f64> {
    (0..bodies)
        .map(|_| {
            let v = random_unit_vector(rng, 2);
            v[1].atan2(v[0])
        })
        .collect()
}
