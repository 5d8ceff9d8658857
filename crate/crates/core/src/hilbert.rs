//! Hilbert projective geometry of the SPD cone and its pullback to normals.

use crate::error::{invalid, GeoError, Result};
use crate::gaussian::{embed, embed_inverse, Mvn};
use crate::matcore::{
    generalized_eigenvalues, power_method_extreme, whiten_with, SpdMatrix, SymMatrix,
};

const DEGENERATE_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HilbertMethod {
    /// Full eigendecomposition.
    #[default]
    Exact,
    /// Power iterations with seeded restarts.
    Power { iterations: usize, seed: u64 },
}

/// Extreme eigenvalues `α ≤ β` of `P0⁻¹ P1`.
///
/// With this orientation `c0 P0 + c1 P1` sits at Hilbert distance `t · d(P0, P1)` from `P0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HilbertGeodesicCoeffs {
    pub alpha: f64,
    pub beta: f64,
}

impl HilbertGeodesicCoeffs {
    pub fn new(p0: &SpdMatrix, p1: &SpdMatrix) -> Result<Self> {
        let w = generalized_eigenvalues(p0, p1)?;
        Ok(Self { alpha: w[w.len() - 1], beta: w[0] })
    }

    fn is_degenerate(&self) -> bool {
        self.beta - self.alpha < DEGENERATE_REL * self.beta
    }

    /// Weights `(c0, c1)` with `γ(t) = c0 P0 + c1 P1`.
    pub fn weights(&self, t: f64) -> (f64, f64) {
        if self.is_degenerate() {
            return (1.0 - t, t);
        }
        let (a, b) = (self.alpha, self.beta);
        let (at, bt) = (a.powf(t), b.powf(t));
        ((b * at - a * bt) / (b - a), (bt - at) / (b - a))
    }
}

/// `log(λ_max / λ_min)` of `P0⁻¹ P1`.
pub fn hilbert_distance_spd(p0: &SpdMatrix, p1: &SpdMatrix, method: HilbertMethod) -> Result<f64> {
    if p0.dim() != p1.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", p0.dim(), p1.dim()));
    }
    if p0 == p1 {
        return Ok(0.0);
    }
    let (hi, lo) = match method {
        HilbertMethod::Exact => {
            let w = generalized_eigenvalues(p0, p1)?;
            (w[0], w[w.len() - 1])
        }
        HilbertMethod::Power { iterations, seed } => {
            let l = p0.cholesky_lower()?;
            let m = SpdMatrix::new(whiten_with(&l, p1.matrix())?)?;
            power_method_extreme(&m, iterations, seed)?
        }
    };
    Ok((hi / lo).ln().max(0.0))
}

/// Hilbert distance between the embedded matrices `f(N0)`, `f(N1)`.
pub fn hilbert_distance_mvn(n0: &Mvn, n1: &Mvn, method: HilbertMethod) -> Result<f64> {
    hilbert_distance_spd(&embed(n0, 1.0)?, &embed(n1, 1.0)?, method)
}

/// Straight-line Hilbert geodesic parameterized proportionally to Hilbert arc length.
pub fn hilbert_geodesic_spd(p0: &SpdMatrix, p1: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    if p0.dim() != p1.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", p0.dim(), p1.dim()));
    }
    if !t.is_finite() {
        return invalid("geodesic parameter must be finite");
    }
    if t == 0.0 {
        return Ok(p0.clone());
    }
    if t == 1.0 {
        return Ok(p1.clone());
    }
    let (c0, c1) = HilbertGeodesicCoeffs::new(p0, p1)?.weights(t);
    SpdMatrix::new(p0.matrix() * c0 + p1.matrix() * c1)
}

/// Pullback of [`hilbert_geodesic_spd`] through the `a = 1` embedding.
pub fn hilbert_geodesic_mvn(n0: &Mvn, n1: &Mvn, t: f64) -> Result<Mvn> {
    if t == 0.0 {
        return Ok(n0.clone());
    }
    if t == 1.0 {
        return Ok(n1.clone());
    }
    let p = hilbert_geodesic_spd(&embed(n0, 1.0)?, &embed(n1, 1.0)?, t)?;
    let d = n0.dim();
    let rescaled = SymMatrix::new(p.matrix() / p.matrix()[(d, d)])?;
    embed_inverse(&rescaled)
        .map(|(n, _)| n)
        .map_err(|e| GeoError::NumericalFailure(format!("pullback left the embedded region ({e})")))
}

/// Orthogonal projection onto the `a = 1` slice.
///
/// With `β = P[d][d]`, `μ = P[0..d, d] / β` and `Σ = P[0..d, 0..d] − β μμᵀ`, the
/// projection is `f_1(N(μ, Σ))` and the distance is `scale · |log β|`.
pub fn project_to_embedded(p: &SpdMatrix, scale: f64) -> Result<(SpdMatrix, f64)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("scale must be positive, got {scale}"));
    }
    let (n, beta) = embed_inverse(p)?;
    Ok((embed(&n, 1.0)?, scale * beta.ln().abs()))
}

