//! Seeded fixtures shared by the benchmarks.

use gaussgeo_core::{Matrix, Mvn, SpdMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SPD matrix with eigenvalues `e^u`, `u` uniform in `[-spread, spread]`.
pub fn spd(d: usize, spread: f64, r: &mut ChaCha8Rng) -> SpdMatrix {
    let g = Matrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    let q = g.qr().q();
    let w = Vector::from_fn(d, |_, _| r.random_range(-spread..=spread).exp());
    let m = &q * Matrix::from_diagonal(&w) * q.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).expect("SPD by construction")
}

pub fn mvn(d: usize, r: &mut ChaCha8Rng) -> Mvn {
    let mean = Vector::from_fn(d, |_, _| r.random_range(-1.0..1.0));
    Mvn::new(mean, spd(d, 1.0, r)).expect("valid normal")
}

pub fn mvns(n: usize, d: usize, seed: u64) -> Vec<Mvn> {
    let mut r = rng(seed);
    (0..n).map(|_| mvn(d, &mut r)).collect()
}

pub fn reference_pair() -> (Mvn, Mvn) {
    (
        Mvn::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 0.1]).expect("valid"),
        Mvn::from_slices(&[1.0, 1.0], &[0.1, 0.0, 0.0, 1.0]).expect("valid"),
    )
}
