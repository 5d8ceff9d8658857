#![allow(dead_code)]

use gaussgeo_core::{AffineMap, Matrix, Mvn, SpdMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| -> f64 { StandardNormal.sample(rng) })
}

pub fn gaussian_vector(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Matrix {
    gaussian_matrix(d, d, rng).qr().q()
}

/// `O diag(e^{u_i}) Oᵀ` with `u_i` uniform in `[lo, hi]`.
pub fn random_spd_logspec(d: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let o = random_orthogonal(d, rng);
    let w = Vector::from_fn(d, |_, _| rng.random_range(lo..=hi).exp());
    let m = &o * Matrix::from_diagonal(&w) * o.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// Spectrum log-uniform over a condition number of at most `cond`.
pub fn random_spd_cond(d: usize, cond: f64, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let h = 0.5 * cond.ln();
    let shift = rng.random_range(-1.0..1.0);
    random_spd_logspec(d, shift - h, shift + h, rng)
}

pub fn random_mvn(d: usize, rng: &mut ChaCha8Rng) -> Mvn {
    let mean = gaussian_vector(d, 1.0, rng);
    Mvn::new(mean, random_spd_logspec(d, -1.0, 1.0, rng)).unwrap()
}

pub fn random_mvn_zero_mean(d: usize, rng: &mut ChaCha8Rng) -> Mvn {
    Mvn::new(Vector::zeros(d), random_spd_logspec(d, -1.0, 1.0, rng)).unwrap()
}

pub fn random_affine(d: usize, rng: &mut ChaCha8Rng) -> AffineMap {
    let mut a = gaussian_matrix(d, d, rng) + Matrix::identity(d, d) * 0.5;
    if a.determinant() < 0.0 {
        a.column_mut(0).neg_mut();
    }
    AffineMap::new(gaussian_vector(d, 1.0, rng), a).unwrap()
}

pub fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Relative gap between two normals over stacked parameters.
pub fn mvn_gap(a: &Mvn, b: &Mvn) -> f64 {
    let dm = (a.mean() - b.mean()).norm();
    let dc = (a.cov().matrix() - b.cov().matrix()).norm();
    (dm + dc) / (1.0 + b.mean().norm() + b.cov().matrix().norm())
}

pub fn reference_pair() -> (Mvn, Mvn) {
    (
        Mvn::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 0.1]).unwrap(),
        Mvn::from_slices(&[1.0, 1.0], &[0.1, 0.0, 0.0, 1.0]).unwrap(),
    )
}
