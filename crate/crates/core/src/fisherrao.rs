//! Fisher-Rao geometry of multivariate normals.
//!
//! Boundary-value geodesics are computed in the `(2d+1)`-dimensional SPD
//! cone. A normal `N(μ, Σ)` is lifted to `R R^T` with
//!
//! ```text
//!       [ L^-T            0    0 ]
//!   R = [ μ^T L^-T        1    0 ]        Σ = L L^T
//!       [ -½ μ μ^T L^-T  -μ    L ]
//! ```
//!
//! These lifts lie in the totally geodesic set `S = {G : G⁻¹ = Q G Q}` where
//! `Q` swaps the first and last `d × d` blocks. The projection `S → N` reads
//! `Σ⁻¹` from the top-left block and `Σ⁻¹μ` from the middle column. Its fibres
//! are orbits of a unipotent group `U(C)`, with `C` antisymmetric. A
//! cone geodesic `R0 exp(tW) R0^T` projects onto a Fisher-Rao geodesic exactly
//! when `W` is horizontal, i.e. its top-right block is symmetric. The
//! boundary-value problem therefore reduces to a `d(d-1)/2`-dimensional root
//! find for `C`. It is solved by Newton's method with continuation along the
//! block-Cholesky curve. The geodesic length is `½ ‖W‖_F`.

use rayon::join;

use crate::error::{invalid, numerical, GeoError, Result};
use crate::gaussian::{embed, embed_inverse, jeffreys, kl_divergence, Mvn, TangentVector};
use crate::matcore::{
    ahm_mean, jacobi, spd_trace_distance, spectral, sym_eig, symmetrize, whiten_with,
    EigenDecomposition, Matrix, SpdMatrix, SymMatrix, Vector,
};

const SAME_PARAM_TOL: f64 = 1e-12;
const DEGENERATE_JEFFREYS: f64 = 1e-24;
const DEFAULT_MAX_DEPTH: usize = 48;
const PAIRING_LOG_THRESHOLD: f64 = 1.0;
const NEWTON_TOL: f64 = 1e-13;
const NEWTON_STALL_TOL: f64 = 1e-10;
const CONTINUATION_MIN_STEP: f64 = 1e-6;

/// A point of a sampled curve.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: Mvn,
}

/// Output of [`fr_distance_approx`].
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxResult {
    /// Reported distance; equals `upper`.
    pub value: f64,
    /// Sum of the lower bounds over terminated segments.
    pub lower: f64,
    /// Sum of the upper bounds over terminated segments.
    pub upper: f64,
    pub segments: usize,
    /// Largest `upper/lower` ratio among terminated segments (1 when none).
    pub worst_ratio: f64,
}

/// Divergence used for each step of [`fr_length_approx_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepDivergence {
    /// `√D_J`.
    #[default]
    Jeffreys,
    /// `√(2 D_KL)`.
    Kl,
}

/// Midpoint rule for [`fr_distance_approx_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Midpoint {
    /// Dyadic points of the exact boundary-value geodesic.
    #[default]
    Geodesic,
    /// Arithmetic-harmonic mean of the embedded matrices, read back on the
    /// `a = 1` slice. Approximate: the slice is not totally geodesic.
    Ahm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxConfig {
    pub epsilon: f64,
    pub midpoint: Midpoint,
    pub max_depth: usize,
}

impl ApproxConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, midpoint: Midpoint::Geodesic, max_depth: DEFAULT_MAX_DEPTH }
    }
}

fn check_dims(n0: &Mvn, n1: &Mvn) -> Result<()> {
    if n0.dim() != n1.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", n0.dim(), n1.dim()));
    }
    Ok(())
}

/// Closed form for `d = 1`: `√2 log((1+Δ)/(1−Δ))` with
/// `Δ² = ((μ0−μ1)²/2 + (σ0−σ1)²) / ((μ0−μ1)²/2 + (σ0+σ1)²)`.
pub fn fr_distance_univariate(n0: &Mvn, n1: &Mvn) -> Result<f64> {
    if n0.dim() != 1 || n1.dim() != 1 {
        return invalid("univariate formula needs one-dimensional normals");
    }
    let dm = n0.mean()[0] - n1.mean()[0];
    let s0 = n0.cov().matrix()[(0, 0)].sqrt();
    let s1 = n1.cov().matrix()[(0, 0)].sqrt();
    let half = 0.5 * dm * dm;
    let delta = ((half + (s0 - s1).powi(2)) / (half + (s0 + s1).powi(2))).sqrt();
    Ok(2.0 * std::f64::consts::SQRT_2 * delta.atanh())
}

/// Closed form on a fixed-mean slice: `√(½ Σ log² λᵢ(Σ0⁻¹Σ1))`.
pub fn fr_distance_same_mean(n0: &Mvn, n1: &Mvn) -> Result<f64> {
    check_dims(n0, n1)?;
    let gap = (n0.mean() - n1.mean()).norm();
    if gap > SAME_PARAM_TOL * (1.0 + n0.mean().norm()) {
        return invalid(format!("means differ by {gap:e}"));
    }
    spd_trace_distance(n0.cov(), n1.cov(), std::f64::consts::FRAC_1_SQRT_2)
}

/// Closed form for a shared covariance: `√2 arccosh(1 + Δ²/4)` with `Δ` the
/// Mahalanobis distance between the means.
pub fn fr_distance_same_cov(n0: &Mvn, n1: &Mvn) -> Result<f64> {
    check_dims(n0, n1)?;
    let s0 = n0.cov().matrix();
    let gap = (s0 - n1.cov().matrix()).norm();
    if gap > SAME_PARAM_TOL * s0.norm() {
        return invalid(format!("covariances differ by {gap:e}"));
    }
    let l = n0.cov().cholesky_lower()?;
    let delta = n0.mean() - n1.mean();
    let z = l
        .solve_lower_triangular(&delta)
        .ok_or_else(|| GeoError::NumericalFailure("singular covariance factor".into()))?;
    let x = 0.25 * z.norm_squared();
    // arccosh(1 + x) = log1p(x + √(x(2 + x)))
    Ok(std::f64::consts::SQRT_2 * (x + (x * (2.0 + x)).sqrt()).ln_1p())
}

/// `√(½ Σ log² λᵢ)` between the embedded matrices `f(N0)`, `f(N1)`.
pub fn calvo_oller_lower_bound(n0: &Mvn, n1: &Mvn) -> Result<f64> {
    check_dims(n0, n1)?;
    spd_trace_distance(&embed(n0, 1.0)?, &embed(n1, 1.0)?, std::f64::consts::FRAC_1_SQRT_2)
}

// ---------------------------------------------------------------------------
// (2d+1)-dimensional lift

/// Applies the block reversal `Q` to the rows of `m`.
fn q_rows(m: &Matrix, d: usize) -> Matrix {
    let n = 2 * d + 1;
    Matrix::from_fn(n, m.ncols(), |i, j| {
        let src = if i < d {
            i + d + 1
        } else if i == d {
            d
        } else {
            i - d - 1
        };
        m[(src, j)]
    })
}

/// `Q M Q`.
fn q_conj(m: &Matrix, d: usize) -> Matrix {
    q_rows(&q_rows(m, d).transpose(), d).transpose()
}

fn lift(n: &Mvn) -> Result<Matrix> {
    let d = n.dim();
    let l = n.cov().cholesky_lower()?;
    let li = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GeoError::NumericalFailure("singular covariance factor".into()))?;
    let lit = li.transpose();
    let mu = n.mean();
    let mut r = Matrix::zeros(2 * d + 1, 2 * d + 1);
    r.view_mut((0, 0), (d, d)).copy_from(&lit);
    r.view_mut((d, 0), (1, d)).copy_from(&(mu.transpose() * &lit));
    r[(d, d)] = 1.0;
    r.view_mut((d + 1, 0), (d, d)).copy_from(&(mu * mu.transpose() * &lit * -0.5));
    r.view_mut((d + 1, d), (d, 1)).copy_from(&(-mu));
    r.view_mut((d + 1, d + 1), (d, d)).copy_from(&l);
    Ok(r)
}

/// Inverse of a lift matrix: `R⁻¹ = Q Rᵀ Q`.
fn lift_inverse(r: &Matrix, d: usize) -> Matrix {
    q_conj(&r.transpose(), d)
}

/// Reads `N` from `G ∈ S`: `Σ⁻¹ = G[0..d, 0..d]`, `Σ⁻¹μ = G[0..d, d]`.
fn project(g: &Matrix, d: usize) -> Result<Mvn> {
    let prec = SpdMatrix::new(g.view((0, 0), (d, d)).into_owned())
        .map_err(|e| GeoError::NumericalFailure(format!("projected precision is not SPD ({e})")))?;
    let xi = g.view((0, d), (d, 1)).column(0).into_owned();
    Mvn::from_natural(&xi, &prec)
}

/// Matrix logarithm of `G ∈ S`.
///
/// The spectrum of `G` is closed under `s ↦ 1/s` with `Q` mapping the
/// eigenvector of `s` to that of `1/s`. Large eigenpairs are computed
/// accurately, so their partners are rebuilt from them instead of being read
/// off the badly conditioned low end of the spectrum.
fn log_s(g: &Matrix, d: usize) -> Result<Matrix> {
    let (w, o) = jacobi(g)?;
    let n = 2 * d + 1;
    if w[n - 1] <= 0.0 && w[0].ln() <= PAIRING_LOG_THRESHOLD {
        return numerical("lifted matrix is not positive definite");
    }
    let paired = (0..d).take_while(|&i| w[i].ln() >= PAIRING_LOG_THRESHOLD).count();
    let mut out = Matrix::zeros(n, n);
    for i in 0..paired {
        let v = o.column(i).into_owned();
        let qv = q_rows(&Matrix::from_column_slice(n, 1, v.as_slice()), d).column(0).into_owned();
        let l = w[i].ln();
        out += (&v * v.transpose() - &qv * qv.transpose()) * l;
    }
    for i in paired..(n - paired) {
        if !(w[i] > 0.0) {
            return numerical("lifted matrix is not positive definite");
        }
        let v = o.column(i);
        out += v * v.transpose() * w[i].ln();
    }
    Ok(symmetrize(&out))
}

struct Fiber {
    d: usize,
    /// `R0⁻¹ R1`.
    a: Matrix,
}

impl Fiber {
    fn new(r0_inv: &Matrix, target: &Mvn) -> Result<Self> {
        Ok(Self { d: target.dim(), a: r0_inv * lift(target)? })
    }

    /// Returns `W = log(X Xᵀ)` with `X = A U(c)` and the horizontality residual.
    fn eval(&self, c: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let d = self.d;
        let mut x = self.a.clone();
        if !c.is_empty() {
            let mut cm = Matrix::zeros(d, d);
            let mut k = 0;
            for i in 0..d {
                for j in (i + 1)..d {
                    cm[(i, j)] = c[k];
                    cm[(j, i)] = -c[k];
                    k += 1;
                }
            }
            // X U(c): columns 0..d receive −A[:, d+1..] C
            let upd = self.a.columns(d + 1, d) * &cm;
            let mut left = x.columns_mut(0, d);
            left -= upd;
        }
        let g = symmetrize(&(&x * x.transpose()));
        let w = log_s(&g, d)?;
        let mut r = Vec::with_capacity(c.len());
        for i in 0..d {
            for j in (i + 1)..d {
                r.push(0.5 * (w[(i, d + 1 + j)] - w[(j, d + 1 + i)]));
            }
        }
        if r.iter().any(|x| !x.is_finite()) {
            return numerical("non-finite residual");
        }
        Ok((r, w))
    }

    fn newton(&self, mut c: Vec<f64>, max_iter: usize) -> Option<Vec<f64>> {
        let k = c.len();
        let (mut r, mut w) = self.eval(&c).ok()?;
        for _ in 0..max_iter {
            let nr = norm(&r);
            let scale = 1.0 + w.norm();
            if nr <= NEWTON_TOL * scale {
                return Some(c);
            }
            let mut jac = Matrix::zeros(k, k);
            for col in 0..k {
                let h = 1e-6 * c[col].abs().max(1.0);
                let mut cp = c.clone();
                let mut cm = c.clone();
                cp[col] += h;
                cm[col] -= h;
                let (rp, _) = self.eval(&cp).ok()?;
                let (rm, _) = self.eval(&cm).ok()?;
                for row in 0..k {
                    jac[(row, col)] = (rp[row] - rm[row]) / (2.0 * h);
                }
            }
            let rhs = -Vector::from_column_slice(&r);
            let step = match jac.lu().solve(&rhs) {
                Some(s) if s.iter().all(|x| x.is_finite()) => s,
                _ => return (nr <= NEWTON_STALL_TOL * scale).then_some(c),
            };
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-4 {
                let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                if let Ok((r2, w2)) = self.eval(&trial) {
                    if norm(&r2) < (1.0 - 1e-4 * t) * nr {
                        accepted = Some((trial, r2, w2));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((c2, r2, w2)) => {
                    c = c2;
                    r = r2;
                    w = w2;
                }
                None => return (nr <= NEWTON_STALL_TOL * scale).then_some(c),
            }
        }
        (norm(&r) <= NEWTON_STALL_TOL * (1.0 + w.norm())).then_some(c)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact Fisher-Rao geodesic between two normals, parameterized
/// proportionally to arc length on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct FrGeodesic {
    d: usize,
    r0: Matrix,
    w: EigenDecomposition,
    start: Mvn,
    end: Mvn,
    length: f64,
}

impl FrGeodesic {
    pub fn new(n0: &Mvn, n1: &Mvn) -> Result<Self> {
        check_dims(n0, n1)?;
        let d = n0.dim();
        let r0 = lift(n0)?;
        let r0_inv = lift_inverse(&r0, d);
        let k = d * (d - 1) / 2;
        let w = if n0 == n1 {
            Matrix::zeros(2 * d + 1, 2 * d + 1)
        } else {
            let target = Fiber::new(&r0_inv, n1)?;
            let c = if k == 0 { Vec::new() } else { solve_fiber(&r0_inv, &target, n0, n1, k)? };
            target.eval(&c)?.1
        };
        let length = 0.5 * w.norm();
        let (eigenvalues, rotation) = jacobi(&w)?;
        Ok(Self {
            d,
            r0,
            w: EigenDecomposition { rotation, eigenvalues },
            start: n0.clone(),
            end: n1.clone(),
            length,
        })
    }

    /// Fisher-Rao length of the geodesic.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> &Mvn {
        &self.start
    }

    pub fn end(&self) -> &Mvn {
        &self.end
    }

    /// Point at parameter `t`; `t = 0` and `t = 1` return the stored endpoints.
    pub fn at(&self, t: f64) -> Result<Mvn> {
        if !t.is_finite() {
            return invalid("geodesic parameter must be finite");
        }
        if t == 0.0 {
            return Ok(self.start.clone());
        }
        if t == 1.0 {
            return Ok(self.end.clone());
        }
        self.evaluate(t)
    }

    /// Evaluates the lifted curve without snapping to the stored endpoints.
    pub fn evaluate(&self, t: f64) -> Result<Mvn> {
        let e = self.w.map(|x| (t * x).exp());
        project(&symmetrize(&(&self.r0 * e * self.r0.transpose())), self.d)
    }

    /// `samples ≥ 2` points at `t = i/(samples−1)`.
    pub fn sample(&self, samples: usize) -> Result<Vec<GeodesicSample>> {
        sample_curve(samples, |t| self.at(t))
    }
}

pub(crate) fn sample_curve(
    samples: usize,
    f: impl Fn(f64) -> Result<Mvn>,
) -> Result<Vec<GeodesicSample>> {
    if samples < 2 {
        return invalid("need at least two samples");
    }
    (0..samples)
        .map(|i| {
            let t = if i + 1 == samples { 1.0 } else { i as f64 / (samples - 1) as f64 };
            Ok(GeodesicSample { t, point: f(t)? })
        })
        .collect()
}

/// Finds the fibre coordinate of the horizontal lift through `R0` ending over `N1`.
fn solve_fiber(r0_inv: &Matrix, target: &Fiber, n0: &Mvn, n1: &Mvn, k: usize) -> Result<Vec<f64>> {
    let path = BlockCholeskyCurve::new(n0, n1)?;
    let mut s = 0.0;
    let mut ds: f64 = 1.0;
    let mut c = vec![0.0; k];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    while s < 1.0 {
        let sn = (s + ds).min(1.0);
        let guess: Vec<f64> = match &prev {
            Some((sp, cp)) => {
                let f = (sn - s) / (s - sp);
                c.iter().zip(cp).map(|(a, b)| a + (a - b) * f).collect()
            }
            None => c.clone(),
        };
        let fiber = if sn >= 1.0 {
            None
        } else {
            Some(Fiber::new(r0_inv, &path.at(sn)?)?)
        };
        let fiber_ref = fiber.as_ref().unwrap_or(target);
        let solved = fiber_ref.newton(guess.clone(), 8).filter(|cn| {
            let jump: f64 = norm(&cn.iter().zip(&guess).map(|(a, b)| a - b).collect::<Vec<_>>());
            jump <= 0.5 * (1.0 + norm(&c))
        });
        match solved {
            Some(cn) => {
                prev = Some((s, std::mem::replace(&mut c, cn)));
                s = sn;
                ds = (ds * 1.5).min(1.0);
            }
            None => {
                ds *= 0.5;
                if ds < CONTINUATION_MIN_STEP {
                    return numerical(format!("boundary-value geodesic solve stalled at s = {s}"));
                }
            }
        }
    }
    Ok(c)
}

/// Point `t` of the exact Fisher-Rao geodesic from `N0` to `N1`.
pub fn fr_geodesic_bvp(n0: &Mvn, n1: &Mvn, t: f64) -> Result<Mvn> {
    FrGeodesic::new(n0, n1)?.at(t)
}

// ---------------------------------------------------------------------------
// Block-Cholesky curve

/// Curve obtained by joining the block-Cholesky lifts
/// `G = M diag(Σ⁻¹, 1, Σ) Mᵀ`, `M = [[I,0,0],[μᵀ,1,0],[0,−μ,I]]`, with the
/// affine-invariant cone geodesic and reading `N` back from the top blocks.
///
/// The lift omits the `−½μμᵀ` block, so the curve is smooth and joins the
/// endpoints but is not a Fisher-Rao geodesic once both means and
/// covariances differ. It serves as the continuation path for the exact solver.
#[derive(Clone, Debug)]
pub struct BlockCholeskyCurve {
    d: usize,
    l0: Matrix,
    mid: EigenDecomposition,
    start: Mvn,
    end: Mvn,
}

fn block_cholesky_lift(n: &Mvn) -> Result<Matrix> {
    let d = n.dim();
    let size = 2 * d + 1;
    let mut m = Matrix::identity(size, size);
    for i in 0..d {
        m[(d, i)] = n.mean()[i];
        m[(d + 1 + i, d)] = -n.mean()[i];
    }
    let mut dm = Matrix::zeros(size, size);
    dm.view_mut((0, 0), (d, d)).copy_from(n.precision()?.matrix());
    dm[(d, d)] = 1.0;
    dm.view_mut((d + 1, d + 1), (d, d)).copy_from(n.cov().matrix());
    Ok(symmetrize(&(&m * dm * m.transpose())))
}

impl BlockCholeskyCurve {
    pub fn new(n0: &Mvn, n1: &Mvn) -> Result<Self> {
        check_dims(n0, n1)?;
        let g0 = SpdMatrix::from_trusted(block_cholesky_lift(n0)?);
        let g1 = block_cholesky_lift(n1)?;
        let l0 = g0.cholesky_lower()?;
        let (eigenvalues, rotation) = jacobi(&whiten_with(&l0, &g1)?)?;
        Ok(Self {
            d: n0.dim(),
            l0,
            mid: EigenDecomposition { rotation, eigenvalues },
            start: n0.clone(),
            end: n1.clone(),
        })
    }

    pub fn at(&self, t: f64) -> Result<Mvn> {
        if t == 0.0 {
            return Ok(self.start.clone());
        }
        if t == 1.0 {
            return Ok(self.end.clone());
        }
        if self.mid.eigenvalues.iter().any(|&x| !(x > 0.0)) {
            return numerical("block-Cholesky lift is not positive definite");
        }
        let p = self.mid.map(|x| x.powf(t));
        project(&symmetrize(&(&self.l0 * p * self.l0.transpose())), self.d)
    }
}

/// Point `t` of the block-Cholesky curve from `N0` to `N1`.
pub fn block_cholesky_curve(n0: &Mvn, n1: &Mvn, t: f64) -> Result<Mvn> {
    BlockCholeskyCurve::new(n0, n1)?.at(t)
}

// ---------------------------------------------------------------------------
// Initial-value solvers

/// Geodesic from `N(0, I)` with natural-parameter velocity `(ξ̇(0), Ξ̇(0))`,
/// via `M(t) = exp(tA)` with `A = [[−B, a, 0], [aᵀ, 0, −aᵀ], [0, −a, B]]`,
/// `a = ξ̇(0)`, `B = −Ξ̇(0)`; `Ξ(t) = M[0..d, 0..d]`, `ξ(t) = M[0..d, d]`.
pub fn fr_geodesic_ivp_eriksen(v: &TangentVector, t: f64) -> Result<Mvn> {
    let d = v.vector.len();
    if v.matrix.dim() != d {
        return invalid("tangent vector and matrix parts disagree in dimension");
    }
    if v.vector.iter().any(|x| !x.is_finite()) || !t.is_finite() {
        return invalid("non-finite tangent or parameter");
    }
    let b = -v.matrix.matrix();
    let a = &v.vector;
    let n = 2 * d + 1;
    let mut big = Matrix::zeros(n, n);
    big.view_mut((0, 0), (d, d)).copy_from(&(-&b));
    big.view_mut((d + 1, d + 1), (d, d)).copy_from(&b);
    for i in 0..d {
        big[(i, d)] = a[i];
        big[(d, i)] = a[i];
        big[(d, d + 1 + i)] = -a[i];
        big[(d + 1 + i, d)] = -a[i];
    }
    let m = spectral(&(big * t), f64::exp)?;
    project(&m, d)
}

/// Closed-form geodesic from an arbitrary `N0` with natural-parameter
/// velocity `(ξ̇(0), Ξ̇(0))`:
///
/// ```text
/// B = −Ξ0^{-1/2} Ξ̇ Ξ0^{-1/2},   a = Ξ0^{-1/2} ξ̇ + B Ξ0^{-1/2} ξ0,   G = (B² + 2aaᵀ)^{1/2}
/// R(t) = cosh(Gt/2) − B G⁺ sinh(Gt/2)
/// Ξ(t) = Ξ0^{1/2} R Rᵀ Ξ0^{1/2},   ξ(t) = 2 Ξ0^{1/2} R G⁺ sinh(Gt/2) a + Ξ(t) μ0
/// ```
///
/// `G⁺ sinh(Gt/2)` is evaluated as the entire function `sinh(gt/2)/g`, which
/// equals `t/2` on the kernel of `G`.
pub fn fr_geodesic_ivp_calvo_oller(n0: &Mvn, v: &TangentVector, t: f64) -> Result<Mvn> {
    let d = n0.dim();
    if v.vector.len() != d || v.matrix.dim() != d {
        return invalid("tangent vector dimension does not match the base point");
    }
    if v.vector.iter().any(|x| !x.is_finite()) || !t.is_finite() {
        return invalid("non-finite tangent or parameter");
    }
    let (xi0, prec) = n0.natural()?;
    let pe = sym_eig(&prec.to_sym())?;
    let xh = pe.map(f64::sqrt);
    let xmh = pe.map(|x| 1.0 / x.sqrt());
    let b = symmetrize(&(-(&xmh * v.matrix.matrix() * &xmh)));
    let a = &xmh * &v.vector + &b * (&xmh * &xi0);
    let g2 = symmetrize(&(&b * &b + &a * a.transpose() * 2.0));
    let (w, o) = jacobi(&g2)?;
    let g = w.map(|x| x.max(0.0).sqrt());
    let ge = |f: &dyn Fn(f64) -> f64| EigenDecomposition { rotation: o.clone(), eigenvalues: g.clone() }.map(f);
    let cosh = ge(&|x| (0.5 * t * x).cosh());
    let sinhc = ge(&|x| if x == 0.0 { 0.5 * t } else { (0.5 * t * x).sinh() / x });
    let r = cosh - &b * &sinhc;
    let big_xi = SpdMatrix::new(symmetrize(&(&xh * &r * r.transpose() * &xh)))
        .map_err(|e| GeoError::NumericalFailure(format!("geodesic left the SPD cone ({e})")))?;
    let xi = &xh * &r * &sinhc * &a * 2.0 + big_xi.matrix() * n0.mean();
    if xi.iter().any(|x| !x.is_finite()) {
        return numerical("non-finite geodesic point");
    }
    Mvn::from_natural(&xi, &big_xi)
}

/// Converts a moment velocity `(μ̇, Σ̇)` at `n` to natural coordinates `(ξ̇, Ξ̇)`.
pub fn natural_velocity(n: &Mvn, dmean: &Vector, dcov: &Matrix) -> Result<TangentVector> {
    let prec = n.precision()?;
    let p = prec.matrix();
    let dxi_mat = -(p * dcov * p);
    let dxi = &dxi_mat * n.mean() + p * dmean;
    Ok(TangentVector { vector: dxi, matrix: SymMatrix::new(dxi_mat)? })
}

/// Fisher norm of a natural-coordinate velocity at `n`:
/// `ds² = μ̇ᵀΣ⁻¹μ̇ + ½ tr((Σ⁻¹Σ̇)²)`.
pub fn fisher_norm(n: &Mvn, v: &TangentVector) -> Result<f64> {
    let s = n.cov().matrix();
    let prec = n.precision()?;
    let dsigma = -(s * v.matrix.matrix() * s);
    let dmu = s * (&v.vector - v.matrix.matrix() * n.mean());
    let ps = prec.matrix() * &dsigma;
    let quad = dmu.dot(&(prec.matrix() * &dmu));
    Ok((quad + 0.5 * (&ps * &ps).trace()).sqrt())
}

// ---------------------------------------------------------------------------
// Discretized length and guaranteed approximation

fn step_length(a: &Mvn, b: &Mvn, step: StepDivergence) -> Result<f64> {
    Ok(match step {
        StepDivergence::Jeffreys => jeffreys(a, b)?.max(0.0).sqrt(),
        StepDivergence::Kl => (2.0 * kl_divergence(a, b)?).max(0.0).sqrt(),
    })
}

/// Sum of step divergences along consecutive points.
pub fn polyline_length(points: &[Mvn], step: StepDivergence) -> Result<f64> {
    points.windows(2).map(|w| step_length(&w[0], &w[1], step)).sum()
}

/// `ρ̃_T = Σᵢ √D_J(N_{i/T}, N_{(i+1)/T})` along the exact geodesic.
pub fn fr_length_approx(n0: &Mvn, n1: &Mvn, steps: usize) -> Result<f64> {
    fr_length_approx_with(n0, n1, steps, StepDivergence::Jeffreys)
}

pub fn fr_length_approx_with(n0: &Mvn, n1: &Mvn, steps: usize, step: StepDivergence) -> Result<f64> {
    if steps == 0 {
        return invalid("step count must be at least 1");
    }
    check_dims(n0, n1)?;
    if n0 == n1 {
        return Ok(0.0);
    }
    if steps == 1 {
        return step_length(n0, n1, step);
    }
    let geo = FrGeodesic::new(n0, n1)?;
    let points: Vec<Mvn> = geo.sample(steps + 1)?.into_iter().map(|s| s.point).collect();
    polyline_length(&points, step)
}

/// Guaranteed `(1+ε)` approximation with default settings.
pub fn fr_distance_approx(n0: &Mvn, n1: &Mvn, epsilon: f64) -> Result<ApproxResult> {
    fr_distance_approx_with(n0, n1, &ApproxConfig::new(epsilon))
}

#[derive(Clone, Copy)]
struct Partial {
    lower: f64,
    upper: f64,
    segments: usize,
    worst: f64,
}

impl Partial {
    fn join(self, o: Partial) -> Partial {
        Partial {
            lower: self.lower + o.lower,
            upper: self.upper + o.upper,
            segments: self.segments + o.segments,
            worst: self.worst.max(o.worst),
        }
    }
}

enum MidpointSource<'a> {
    Geodesic(&'a FrGeodesic),
    Ahm,
}

fn ahm_midpoint(a: &Mvn, b: &Mvn) -> Result<Mvn> {
    let m = ahm_mean(&embed(a, 1.0)?, &embed(b, 1.0)?, 1e-12)?;
    embed_inverse(&m).map(|(n, _)| n).map_err(|e| GeoError::NumericalFailure(e.to_string()))
}

const PARALLEL_DEPTH: usize = 4;

fn recurse(
    src: &MidpointSource,
    cfg: &ApproxConfig,
    (t0, a): (f64, &Mvn),
    (t1, b): (f64, &Mvn),
    depth: usize,
) -> Result<Partial> {
    let j = jeffreys(a, b)?;
    let u = j.max(0.0).sqrt();
    let l = calvo_oller_lower_bound(a, b)?;
    if j < DEGENERATE_JEFFREYS || u <= (1.0 + cfg.epsilon) * l {
        let worst = if l > 0.0 { u / l } else { 1.0 };
        return Ok(Partial { lower: l, upper: u, segments: 1, worst });
    }
    if depth >= cfg.max_depth {
        return numerical(format!("approximation recursion exceeded depth {}", cfg.max_depth));
    }
    let tm = 0.5 * (t0 + t1);
    let mid = match src {
        MidpointSource::Geodesic(g) => g.at(tm)?,
        MidpointSource::Ahm => ahm_midpoint(a, b)?,
    };
    let (left, right) = if depth < PARALLEL_DEPTH {
        join(
            || recurse(src, cfg, (t0, a), (tm, &mid), depth + 1),
            || recurse(src, cfg, (tm, &mid), (t1, b), depth + 1),
        )
    } else {
        (
            recurse(src, cfg, (t0, a), (tm, &mid), depth + 1),
            recurse(src, cfg, (tm, &mid), (t1, b), depth + 1),
        )
    };
    Ok(left?.join(right?))
}

/// Recursive bisection: a segment terminates once `√D_J ≤ (1+ε) ρ_CO` and
/// contributes `√D_J`; otherwise it is split at its geodesic midpoint.
/// Segments are summed left to right, so the result is independent of
/// thread scheduling.
pub fn fr_distance_approx_with(n0: &Mvn, n1: &Mvn, cfg: &ApproxConfig) -> Result<ApproxResult> {
    check_dims(n0, n1)?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return invalid(format!("epsilon must be positive, got {}", cfg.epsilon));
    }
    if jeffreys(n0, n1)? < DEGENERATE_JEFFREYS {
        return Ok(ApproxResult { value: 0.0, lower: 0.0, upper: 0.0, segments: 1, worst_ratio: 1.0 });
    }
    let geo;
    let src = match cfg.midpoint {
        Midpoint::Geodesic => {
            geo = FrGeodesic::new(n0, n1)?;
            MidpointSource::Geodesic(&geo)
        }
        Midpoint::Ahm => MidpointSource::Ahm,
    };
    let p = recurse(&src, cfg, (0.0, n0), (1.0, n1), 0)?;
    Ok(ApproxResult {
        value: p.upper,
        lower: p.lower,
        upper: p.upper,
        segments: p.segments,
        worst_ratio: p.worst,
    })
}
