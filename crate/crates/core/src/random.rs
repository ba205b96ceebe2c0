//! Seeded randomness. Every parallel task gets its own ChaCha stream derived
//! from the job seed, so results do not depend on scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Uniformly distributed on the unit sphere of `R^dim` (`dim ≥ 1`).
pub(crate) fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, dim);
        let norm = v.norm();
        if norm > 1e-300 {
            return v / norm;
        }
    }
}

/// `cols` orthonormal Gaussian columns in `R^dim` (`cols ≤ dim`).
pub(crate) fn orthonormal_columns<R: Rng>(rng: &mut R, dim: usize, cols: usize) -> DMatrix<f64> {
    debug_assert!(cols <= dim);
    let g = DMatrix::from_fn(dim, cols, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}
