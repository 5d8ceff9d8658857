//! Multivariate normals, mixtures, cone embeddings, affine actions and
//! divergences.

use std::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::matcore::{generalized_eigenvalues, Matrix, SpdMatrix, SymMatrix, Vector};

const WEIGHT_TOL: f64 = 1e-9;

/// `N(μ, Σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mvn {
    mean: Vector,
    cov: SpdMatrix,
}

/// Finite mixture of same-dimension normals with normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Gmm {
    weights: Vec<f64>,
    components: Vec<Mvn>,
}

/// Element `(a, A)` of the positive affine group, acting by `x ↦ a + A x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    shift: Vector,
    linear: Matrix,
}

/// Tangent data `(vector, symmetric matrix)`.
///
/// Each consumer states its coordinates: the initial-value geodesic solvers
/// take natural-parameter velocities `(ξ̇, Ξ̇)` with `ξ = Σ⁻¹μ`, `Ξ = Σ⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub vector: Vector,
    pub matrix: SymMatrix,
}

impl Mvn {
    pub fn new(mean: Vector, cov: SpdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return invalid(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            ));
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return invalid("mean has non-finite entries");
        }
        Ok(Self { mean, cov })
    }

    /// Builds from a mean slice and a row-major covariance slice.
    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let d = mean.len();
        let cov = SpdMatrix::from_row_slice(d, cov_row_major)?;
        Self::new(Vector::from_column_slice(mean), cov)
    }

    /// `N(0, I_d)`.
    pub fn standard(d: usize) -> Self {
        Self { mean: Vector::zeros(d), cov: SpdMatrix::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn precision(&self) -> Result<SpdMatrix> {
        self.cov.inverse()
    }

    /// Natural parameters `(Σ⁻¹μ, Σ⁻¹)`.
    pub fn natural(&self) -> Result<(Vector, SpdMatrix)> {
        let prec = self.precision()?;
        Ok((prec.matrix() * &self.mean, prec))
    }

    /// Inverse of [`Mvn::natural`].
    pub fn from_natural(xi: &Vector, big_xi: &SpdMatrix) -> Result<Self> {
        let cov = big_xi.inverse()?;
        let mean = cov.matrix() * xi;
        Self::new(mean, cov)
    }
}

fn check_dims(a: &Mvn, b: &Mvn) -> Result<()> {
    if a.dim() != b.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.dim()));
    }
    Ok(())
}

impl Gmm {
    /// Weights must be positive and sum to 1 within `1e-9`; they are then
    /// renormalized exactly.
    pub fn new(weights: Vec<f64>, components: Vec<Mvn>) -> Result<Self> {
        if components.is_empty() {
            return invalid("mixture needs at least one component");
        }
        if weights.len() != components.len() {
            return invalid(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return invalid("mixture weights must be positive and finite");
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return invalid("mixture components differ in dimension");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return invalid(format!("mixture weights sum to {total}, expected 1"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { weights, components })
    }

    /// Like [`Gmm::new`] but accepts any positive weights and normalizes them.
    pub fn normalized(weights: Vec<f64>, components: Vec<Mvn>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return invalid("mixture weights must have a positive finite sum");
        }
        Self::new(weights.into_iter().map(|w| w / total).collect(), components)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Mvn] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }
}

impl AffineMap {
    /// Requires `det(linear) > 0`.
    pub fn new(shift: Vector, linear: Matrix) -> Result<Self> {
        if linear.nrows() != linear.ncols() || linear.nrows() != shift.len() {
            return invalid("affine map shift and linear part disagree in dimension");
        }
        if shift.iter().chain(linear.iter()).any(|x| !x.is_finite()) {
            return invalid("affine map has non-finite entries");
        }
        let det = linear.clone().lu().determinant();
        if !(det > 0.0) {
            return invalid(format!("affine map linear part has determinant {det}, expected > 0"));
        }
        Ok(Self { shift, linear })
    }

    pub fn identity(d: usize) -> Self {
        Self { shift: Vector::zeros(d), linear: Matrix::identity(d, d) }
    }

    pub fn translation(shift: Vector) -> Self {
        let d = shift.len();
        Self { shift, linear: Matrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn shift(&self) -> &Vector {
        &self.shift
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }
}

/// `(a, A) · N(μ, Σ) = N(a + Aμ, AΣAᵀ)`.
pub fn affine_apply(map: &AffineMap, n: &Mvn) -> Result<Mvn> {
    if map.dim() != n.dim() {
        return invalid(format!("map of dimension {} applied to normal of dimension {}", map.dim(), n.dim()));
    }
    let mean = &map.shift + &map.linear * &n.mean;
    let cov = SpdMatrix::new(&map.linear * n.cov.matrix() * map.linear.transpose())?;
    Mvn::new(mean, cov)
}

/// Group law `(a₁, A₁)(a₂, A₂) = (a₁ + A₁a₂, A₁A₂)`.
pub fn affine_compose(m1: &AffineMap, m2: &AffineMap) -> Result<AffineMap> {
    if m1.dim() != m2.dim() {
        return invalid("composing affine maps of different dimension");
    }
    Ok(AffineMap {
        shift: &m1.shift + &m1.linear * &m2.shift,
        linear: &m1.linear * &m2.linear,
    })
}

/// `(a, A)⁻¹ = (−A⁻¹a, A⁻¹)`.
pub fn affine_inverse(m: &AffineMap) -> Result<AffineMap> {
    let inv = match m.linear.clone().try_inverse() {
        Some(inv) => inv,
        None => return invalid("affine map linear part is singular"),
    };
    Ok(AffineMap { shift: -(&inv * &m.shift), linear: inv })
}

/// `f_a(N) = [[Σ + a μμᵀ, a μ], [a μᵀ, a]]`.
pub fn embed(n: &Mvn, a: f64) -> Result<SpdMatrix> {
    if !(a > 0.0 && a.is_finite()) {
        return invalid(format!("embedding parameter must be positive, got {a}"));
    }
    let d = n.dim();
    let mu = &n.mean;
    let mut p = Matrix::zeros(d + 1, d + 1);
    p.view_mut((0, 0), (d, d)).copy_from(&(n.cov.matrix() + mu * mu.transpose() * a));
    for i in 0..d {
        p[(i, d)] = a * mu[i];
        p[(d, i)] = a * mu[i];
    }
    p[(d, d)] = a;
    Ok(SpdMatrix::from_trusted(p))
}

/// Reads `(N, a)` back from `P = f_a(N)`.
///
/// Accepts any symmetric matrix; fails with `InvalidInput` when `a ≤ 0` or the
/// recovered covariance is not SPD.
pub fn embed_inverse<M: AsRef<Matrix>>(p: &M) -> Result<(Mvn, f64)> {
    let p = p.as_ref();
    if p.nrows() != p.ncols() || p.nrows() < 2 {
        return invalid("embedded matrix must be square with dimension at least 2");
    }
    let d = p.nrows() - 1;
    let a = p[(d, d)];
    if !(a > 0.0 && a.is_finite()) {
        return invalid(format!("last diagonal entry {a} is not positive"));
    }
    let mu = p.view((0, d), (d, 1)).column(0).into_owned() / a;
    let sigma = p.view((0, 0), (d, d)).into_owned() - &mu * mu.transpose() * a;
    let cov = SpdMatrix::new(sigma).map_err(|e| {
        crate::GeoError::InvalidInput(format!("recovered covariance is not SPD ({e})"))
    })?;
    Ok((Mvn::new(mu, cov)?, a))
}

/// `x − 1 − ln x`, accurate near `x = 1`.
fn itakura_saito_term(x: f64) -> f64 {
    let u = x - 1.0;
    u - u.ln_1p()
}

fn mahalanobis_sq(cov: &SpdMatrix, delta: &Vector) -> Result<f64> {
    let l = cov.cholesky_lower()?;
    let z = l
        .solve_lower_triangular(delta)
        .ok_or_else(|| crate::GeoError::NumericalFailure("singular covariance factor".into()))?;
    Ok(z.norm_squared())
}

/// `KL(N0 ‖ N1)`.
pub fn kl_divergence(n0: &Mvn, n1: &Mvn) -> Result<f64> {
    check_dims(n0, n1)?;
    if n0 == n1 {
        return Ok(0.0);
    }
    // eigenvalues of Σ1⁻¹Σ0
    let w = generalized_eigenvalues(&n1.cov, &n0.cov)?;
    let trace_part: f64 = w.iter().map(|&x| itakura_saito_term(x)).sum();
    let delta = &n1.mean - &n0.mean;
    Ok(0.5 * (trace_part + mahalanobis_sq(&n1.cov, &delta)?))
}

/// Total order on parameters, used to evaluate symmetric quantities in a
/// fixed argument order so that they are symmetric to the last bit.
pub(crate) fn canonical_order(a: &Mvn, b: &Mvn) -> Ordering {
    let lhs = a.mean.iter().chain(a.cov.matrix().iter());
    let rhs = b.mean.iter().chain(b.cov.matrix().iter());
    lhs.zip(rhs).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Jeffreys divergence `KL(N0‖N1) + KL(N1‖N0)`.
pub fn jeffreys(n0: &Mvn, n1: &Mvn) -> Result<f64> {
    check_dims(n0, n1)?;
    let (n0, n1) = match canonical_order(n0, n1) {
        Ordering::Equal => return Ok(0.0),
        Ordering::Less => (n0, n1),
        Ordering::Greater => (n1, n0),
    };
    let w = generalized_eigenvalues(&n0.cov, &n1.cov)?;
    // tr((Σ1⁻¹Σ0 + Σ0⁻¹Σ1)/2 − I) written as Σ (w−1)²/(2w)
    let trace_part: f64 = w.iter().map(|&x| (x - 1.0).powi(2) / (2.0 * x)).sum();
    let delta = &n1.mean - &n0.mean;
    let mean_part = 0.5 * (mahalanobis_sq(&n0.cov, &delta)? + mahalanobis_sq(&n1.cov, &delta)?);
    Ok(trace_part + mean_part)
}

/// Mixture geodesic: first and second moments interpolate linearly.
pub fn mixture_geodesic(n0: &Mvn, n1: &Mvn, t: f64) -> Result<Mvn> {
    check_dims(n0, n1)?;
    let delta = &n1.mean - &n0.mean;
    let mean = &n0.mean * (1.0 - t) + &n1.mean * t;
    let cov = n0.cov.matrix() * (1.0 - t)
        + n1.cov.matrix() * t
        + &delta * delta.transpose() * (t * (1.0 - t));
    Mvn::new(mean, SpdMatrix::new(cov)?)
}

/// Exponential geodesic: natural parameters interpolate linearly.
pub fn exponential_geodesic(n0: &Mvn, n1: &Mvn, t: f64) -> Result<Mvn> {
    check_dims(n0, n1)?;
    let (x0, p0) = n0.natural()?;
    let (x1, p1) = n1.natural()?;
    let xi = x0 * (1.0 - t) + x1 * t;
    let big_xi = SpdMatrix::new(p0.matrix() * (1.0 - t) + p1.matrix() * t)?;
    Mvn::from_natural(&xi, &big_xi)
}
