//! Counter-based sampling: every draw is keyed by `(seed, index)`, so
//! results do not depend on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Vec3;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Uniform point in `[0,1)³` for sample `index`.
pub fn unit_point(seed: u64, index: u64) -> Vec3 {
    let mut r = stream(seed, index);
    Vec3::new(r.gen(), r.gen(), r.gen())
}

pub fn unit_points(seed: u64, n: usize) -> Vec<Vec3> {
    (0..n as u64).map(|i| unit_point(seed, i)).collect()
}

/// Uniform direction on the unit sphere.
pub fn unit_vector(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
