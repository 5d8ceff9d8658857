//! Dense symmetric and SPD matrix kernel.
//!
//! Everything here works on small dense matrices (dimension up to a few
//! hundred). Eigendecompositions use the cyclic Jacobi method, which keeps
//! small eigenvalues of well-scaled SPD matrices accurate to high relative
//! precision.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, numerical, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const MAX_SWEEPS: usize = 64;
const SPD_REL_TOL: f64 = 1e-12;
const AHM_MAX_ITERS: usize = 64;
const POWER_RESTARTS: usize = 8;
const POWER_MAX_COND: f64 = 1e14;

/// Symmetric matrix; the input is symmetrized as `(M + Mᵀ)/2` on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(Matrix);

/// Symmetric positive-definite matrix.
///
/// Validated on construction: the smallest eigenvalue must exceed
/// `dim · 1e-12 · λ_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(Matrix);

/// `M = O · diag(λ) · Oᵀ` with eigenvalues sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub rotation: Matrix,
    pub eigenvalues: Vector,
}

/// Scalar function applied spectrally by [`sym_func`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymFunc {
    Exp,
    Sinh,
    Cosh,
    Log,
}

/// Arithmetic-harmonic mean iteration record.
#[derive(Clone, Debug)]
pub struct AhmTrace {
    pub mean: SpdMatrix,
    /// Number of `(A, H)` updates performed.
    pub iterations: usize,
    /// Relative gaps `‖A_t − H_t‖_F / ‖A_t‖_F` for `t = 0..=iterations`.
    pub gaps: Vec<f64>,
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn check_square_finite(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return invalid(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols()));
    }
    if m.nrows() == 0 {
        return invalid("matrix has dimension 0");
    }
    if m.iter().any(|x| !x.is_finite()) {
        return invalid("matrix has non-finite entries");
    }
    Ok(())
}

fn check_same_dim(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return invalid(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        ));
    }
    Ok(())
}

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        check_square_finite(&m)?;
        Ok(Self(symmetrize(&m)))
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return invalid(format!("expected {} entries, got {}", dim * dim, entries.len()));
        }
        Self::new(Matrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Validates as SPD.
    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.0.clone())
    }
}

impl AsRef<Matrix> for SymMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

impl SpdMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        check_square_finite(&m)?;
        let m = symmetrize(&m);
        validate_spd(&m)?;
        Ok(Self(m))
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return invalid(format!("expected {} entries, got {}", dim * dim, entries.len()));
        }
        Self::new(Matrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    /// Wraps a matrix that is SPD by construction; only symmetrizes.
    pub(crate) fn from_trusted(m: Matrix) -> Self {
        Self(symmetrize(&m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn to_sym(&self) -> SymMatrix {
        SymMatrix(self.0.clone())
    }

    /// Lower Cholesky factor `L` with `P = L Lᵀ`.
    pub fn cholesky_lower(&self) -> Result<Matrix> {
        match self.0.clone().cholesky() {
            Some(c) => Ok(c.l()),
            None => numerical("Cholesky factorization failed"),
        }
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        match self.0.clone().cholesky() {
            Some(c) => Ok(Self::from_trusted(c.inverse())),
            None => numerical("Cholesky factorization failed"),
        }
    }

    /// `c · P` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<SpdMatrix> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("scale factor must be positive, got {c}"));
        }
        Ok(Self(&self.0 * c))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl AsRef<Matrix> for SpdMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

fn validate_spd(m: &Matrix) -> Result<()> {
    let (w, _) = jacobi(m)?;
    let n = m.nrows() as f64;
    let max = w[0];
    let min = w[w.len() - 1];
    if !(max > 0.0) || !(min > n * SPD_REL_TOL * max) {
        return invalid(format!(
            "matrix is not positive definite (eigenvalue range [{min:e}, {max:e}])"
        ));
    }
    Ok(())
}

/// Cyclic Jacobi eigensolver. Returns eigenvalues (descending) and the
/// matching orthonormal eigenvectors as columns.
pub(crate) fn jacobi(m: &Matrix) -> Result<(Vector, Matrix)> {
    check_square_finite(m)?;
    let n = m.nrows();
    let mut a = symmetrize(m);
    let mut v = Matrix::identity(n, n);
    let floor = a.norm() * 1e-30;
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq.abs() <= floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    a[(k, p)] = nkp;
                    a[(p, k)] = nkp;
                    a[(k, q)] = nkq;
                    a[(q, k)] = nkq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return numerical(format!("Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let w = Vector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut o = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        o.set_column(col, &v.column(i));
    }
    Ok((w, o))
}

/// Full symmetric eigendecomposition.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenDecomposition> {
    let (eigenvalues, rotation) = jacobi(&m.0)?;
    Ok(EigenDecomposition { rotation, eigenvalues })
}

impl EigenDecomposition {
    /// `O · diag(f(λ)) · Oᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let fw = self.eigenvalues.map(f);
        let scaled = Matrix::from_fn(self.rotation.nrows(), self.rotation.ncols(), |i, j| {
            self.rotation[(i, j)] * fw[j]
        });
        scaled * self.rotation.transpose()
    }
}

/// Applies `f` spectrally to a symmetric matrix.
pub(crate) fn spectral(m: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    let (eigenvalues, rotation) = jacobi(m)?;
    Ok(symmetrize(&EigenDecomposition { rotation, eigenvalues }.map(f)))
}

/// `O · diag(f(λ)) · Oᵀ` for exp, sinh, cosh or log.
pub fn sym_func(m: &SymMatrix, kind: SymFunc) -> Result<SymMatrix> {
    let e = sym_eig(m)?;
    if kind == SymFunc::Log {
        let max = e.eigenvalues[0];
        let min = e.eigenvalues[e.eigenvalues.len() - 1];
        if !(max > 0.0) || !(min > m.dim() as f64 * SPD_REL_TOL * max) {
            return invalid("matrix logarithm requires an SPD argument");
        }
    }
    let f: fn(f64) -> f64 = match kind {
        SymFunc::Exp => f64::exp,
        SymFunc::Sinh => f64::sinh,
        SymFunc::Cosh => f64::cosh,
        SymFunc::Log => f64::ln,
    };
    Ok(SymMatrix(symmetrize(&e.map(f))))
}

/// `P^p` through the eigendecomposition.
pub fn spd_power(p: &SpdMatrix, exponent: f64) -> Result<SpdMatrix> {
    if !exponent.is_finite() {
        return invalid("exponent must be finite");
    }
    if exponent == 0.0 {
        return Ok(SpdMatrix::identity(p.dim()));
    }
    Ok(SpdMatrix::from_trusted(spectral(&p.0, |x| x.powf(exponent))?))
}

/// Eigenvalues of `P0⁻¹ P1` (descending), computed from `L⁻¹ P1 L⁻ᵀ`.
pub fn generalized_eigenvalues(p0: &SpdMatrix, p1: &SpdMatrix) -> Result<Vector> {
    check_same_dim(&p0.0, &p1.0)?;
    let (_, w) = whitened(p0, p1)?;
    Ok(w.0)
}

/// Returns `L` (Cholesky of `P0`) and the eigensystem of `L⁻¹ P1 L⁻ᵀ`.
fn whitened(p0: &SpdMatrix, p1: &SpdMatrix) -> Result<(Matrix, (Vector, Matrix))> {
    let l = p0.cholesky_lower()?;
    let m = whiten_with(&l, &p1.0)?;
    Ok((l, jacobi(&m)?))
}

/// `L⁻¹ M L⁻ᵀ` for lower-triangular `L`.
pub(crate) fn whiten_with(l: &Matrix, m: &Matrix) -> Result<Matrix> {
    let a = l
        .solve_lower_triangular(m)
        .ok_or_else(|| crate::GeoError::NumericalFailure("singular triangular factor".into()))?;
    let b = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| crate::GeoError::NumericalFailure("singular triangular factor".into()))?;
    Ok(symmetrize(&b))
}

/// Affine-invariant geodesic `P0 #_t P1 = P0^{1/2} (P0^{-1/2} P1 P0^{-1/2})^t P0^{1/2}`.
pub fn spd_geodesic(p0: &SpdMatrix, p1: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_same_dim(&p0.0, &p1.0)?;
    if !t.is_finite() {
        return invalid("geodesic parameter must be finite");
    }
    if t == 0.0 {
        return Ok(p0.clone());
    }
    let (l, (w, o)) = whitened(p0, p1)?;
    let mid = EigenDecomposition { rotation: o, eigenvalues: w }.map(|x| x.powf(t));
    Ok(SpdMatrix::from_trusted(&l * mid * l.transpose()))
}

/// `scale · ‖Log(P0^{-1/2} P1 P0^{-1/2})‖_F`. Use `scale = 1/√2` for the half-trace metric.
pub fn spd_trace_distance(p0: &SpdMatrix, p1: &SpdMatrix, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("scale must be positive, got {scale}"));
    }
    if p0 == p1 {
        return Ok(0.0);
    }
    let w = generalized_eigenvalues(p0, p1)?;
    Ok(scale * w.iter().map(|x| x.ln().powi(2)).sum::<f64>().sqrt())
}

/// Matrix geometric mean `X # Y` by the arithmetic-harmonic iteration.
pub fn ahm_mean(x: &SpdMatrix, y: &SpdMatrix, tol: f64) -> Result<SpdMatrix> {
    Ok(ahm_mean_trace(x, y, tol)?.mean)
}

/// As [`ahm_mean`], also reporting iteration count and the gap sequence.
pub fn ahm_mean_trace(x: &SpdMatrix, y: &SpdMatrix, tol: f64) -> Result<AhmTrace> {
    check_same_dim(&x.0, &y.0)?;
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let mut a = x.clone();
    let mut h = y.clone();
    let mut gaps = Vec::new();
    for iterations in 0..=AHM_MAX_ITERS {
        let gap = (&a.0 - &h.0).norm() / a.0.norm();
        gaps.push(gap);
        if gap <= tol {
            let mean = SpdMatrix::from_trusted((&a.0 + &h.0) * 0.5);
            return Ok(AhmTrace { mean, iterations, gaps });
        }
        if iterations == AHM_MAX_ITERS {
            break;
        }
        let na = SpdMatrix::from_trusted((&a.0 + &h.0) * 0.5);
        let sum_inv = SpdMatrix::from_trusted(a.inverse()?.0 + h.inverse()?.0);
        let nh = SpdMatrix::from_trusted(sum_inv.inverse()?.0 * 2.0);
        a = na;
        h = nh;
    }
    numerical(format!("arithmetic-harmonic mean did not converge in {AHM_MAX_ITERS} iterations"))
}

fn best_rayleigh(p: &Matrix, iterations: usize, rng: &mut ChaCha8Rng) -> f64 {
    let n = p.nrows();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..POWER_RESTARTS {
        let mut x = Vector::from_fn(n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        x /= x.norm();
        for _ in 0..iterations {
            let y = p * &x;
            let norm = y.norm();
            if !(norm > 0.0) {
                break;
            }
            x = y / norm;
        }
        let rq = x.dot(&(p * &x)) / x.dot(&x);
        if rq > best {
            best = rq;
        }
    }
    best
}

/// Power-method estimates of `(λ_max, λ_min)`.
///
/// Each estimate keeps the best Rayleigh quotient over 8 seeded restarts from
/// random `±1` vectors; `λ_min` runs the same procedure on the explicit inverse.
pub fn power_method_extreme(p: &SpdMatrix, iterations: usize, seed: u64) -> Result<(f64, f64)> {
    if iterations == 0 {
        return invalid("iterations must be at least 1");
    }
    let l = p.cholesky_lower()?;
    let diag = l.diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(lo > 0.0) || (hi / lo).powi(2) > POWER_MAX_COND {
        return numerical("matrix too ill-conditioned for an explicit inverse");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lmax = best_rayleigh(&p.0, iterations, &mut rng);
    let inv = p.inverse()?;
    let lmin = 1.0 / best_rayleigh(&inv.0, iterations, &mut rng);
    Ok((lmax, lmin))
}
