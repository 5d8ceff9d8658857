//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails when the set of failing criteria differs from
//! `EXPECTED_FAILURES`, i.e. both on a regression and on an unexpected fix.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gaussgeo_core::cluster::*;
use gaussgeo_core::fisherrao::*;
use gaussgeo_core::gaussian::*;
use gaussgeo_core::hilbert::*;
use gaussgeo_core::matcore::*;
use gaussgeo_core::{AffineMap, Gmm, Mvn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

/// Criteria that cannot pass as stated (see the README).
///
/// 1: the stated value belongs to a non-geodesic curve; the true geodesic gives 3.1330.
/// 9: the block projection maps `c·f(N)` to `f(N(μ, cΣ))`, not to `f(N)`.
/// 12: the relative Frobenius gap decays quadratically, but its constant
///     depends on conditioning and reaches 11.5 on one pair at condition 1e4.
const EXPECTED_FAILURES: &[u32] = &[1, 9, 12];

type Outcome = (bool, String);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn gauss_matrix(n: usize, m: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| normal(r))
}

fn spd_logspec(d: usize, lo: f64, hi: f64, r: &mut ChaCha8Rng) -> SpdMatrix {
    let o = gauss_matrix(d, d, r).qr().q();
    let w = DVector::from_fn(d, |_, _| r.random_range(lo..=hi).exp());
    let m = &o * DMatrix::from_diagonal(&w) * o.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

fn spd_cond(d: usize, cond: f64, r: &mut ChaCha8Rng) -> SpdMatrix {
    let h = 0.5 * cond.ln();
    let s = r.random_range(-1.0..1.0);
    spd_logspec(d, s - h, s + h, r)
}

fn mvn(d: usize, r: &mut ChaCha8Rng) -> Mvn {
    let mean = DVector::from_fn(d, |_, _| normal(r));
    Mvn::new(mean, spd_logspec(d, -1.0, 1.0, r)).unwrap()
}

fn mvn_zero_mean(d: usize, r: &mut ChaCha8Rng) -> Mvn {
    Mvn::new(DVector::zeros(d), spd_logspec(d, -1.0, 1.0, r)).unwrap()
}

fn affine(d: usize, r: &mut ChaCha8Rng) -> AffineMap {
    let mut a = gauss_matrix(d, d, r) + DMatrix::identity(d, d) * 0.5;
    if a.determinant() < 0.0 {
        a.column_mut(0).neg_mut();
    }
    AffineMap::new(DVector::from_fn(d, |_, _| normal(r)), a).unwrap()
}

fn tangent(d: usize, scale: f64, r: &mut ChaCha8Rng) -> TangentVector {
    let m = gauss_matrix(d, d, r) * scale;
    TangentVector {
        vector: DVector::from_fn(d, |_, _| scale * normal(r)),
        matrix: SymMatrix::new((&m + m.transpose()) * 0.5).unwrap(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn rel_m(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn gap(a: &Mvn, b: &Mvn) -> f64 {
    let num = (a.mean() - b.mean()).norm() + (a.cov().matrix() - b.cov().matrix()).norm();
    num / (1.0 + b.mean().norm() + b.cov().matrix().norm())
}

fn reference_pair() -> (Mvn, Mvn) {
    (
        Mvn::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 0.1]).unwrap(),
        Mvn::from_slices(&[1.0, 1.0], &[0.1, 0.0, 0.0, 1.0]).unwrap(),
    )
}

/// Σ √J over `steps` equal pieces of any curve.
fn jeffreys_length(curve: impl Fn(f64) -> Mvn, steps: usize) -> f64 {
    let pts: Vec<Mvn> = (0..=steps).map(|k| curve(k as f64 / steps as f64)).collect();
    pts.windows(2).map(|w| jeffreys(&w[0], &w[1]).unwrap().sqrt()).sum()
}

fn c1_reference_value() -> Outcome {
    let (n0, n1) = reference_pair();
    let start = Instant::now();
    let v = fr_length_approx(&n0, &n1, 100).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let bc = BlockCholeskyCurve::new(&n0, &n1).unwrap();
    let bc_len = jeffreys_length(|t| bc.at(t).unwrap(), 100);
    (
        (v - 3.1996).abs() <= 5e-4 && secs < 1.0,
        format!("ρ̃_100 = {v:.5} along the geodesic ({secs:.3}s); block-Cholesky curve gives {bc_len:.5}"),
    )
}

#[allow(clippy::approx_constant)] // bounds are a distance window, not pi
fn c2_guaranteed_approximation() -> Outcome {
    let (n0, n1) = reference_pair();
    let start = Instant::now();
    let r = fr_distance_approx(&n0, &n1, 1e-4).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = (3.13..=3.14).contains(&r.upper)
        && r.lower <= r.upper
        && r.worst_ratio <= 1.0 + 1e-4
        && secs < 5.0;
    (ok, format!("[{:.6}, {:.6}], {} segments, worst u/l {:.7}, {secs:.2}s", r.lower, r.upper, r.segments, r.worst_ratio))
}

fn c3_monotone_refinement() -> Outcome {
    let (n0, n1) = reference_pair();
    let vals: Vec<f64> = (0..=7).map(|k| fr_length_approx(&n0, &n1, 1 << k).unwrap()).collect();
    let ok = vals.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    (ok, format!("T=1..128: {}", vals.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ≥ ")))
}

fn c4_closed_forms() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4);
    let mut worst_uni: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    for _ in 0..20 {
        let (a, b) = (mvn(1, &mut r), mvn(1, &mut r));
        let v = fr_distance_approx(&a, &b, 1e-5).unwrap().value;
        worst_uni = worst_uni.max(rel(v, fr_distance_univariate(&a, &b).unwrap()));
        let (a, b) = (mvn_zero_mean(2, &mut r), mvn_zero_mean(2, &mut r));
        let v = fr_distance_approx(&a, &b, 1e-5).unwrap().value;
        worst_mean = worst_mean.max(rel(v, fr_distance_same_mean(&a, &b).unwrap()));
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst_uni < 1e-3 && worst_mean < 1e-3 && secs < 30.0,
        format!("worst rel. error univariate {worst_uni:.1e}, same-mean {worst_mean:.1e}, {secs:.2}s"),
    )
}

fn c5_sandwich() -> Outcome {
    let mut r = rng(5);
    let mut violations = 0;
    for _ in 0..100 {
        let (a, b) = (mvn(2, &mut r), mvn(2, &mut r));
        let lb = calvo_oller_lower_bound(&a, &b).unwrap();
        let ub = jeffreys(&a, &b).unwrap().sqrt();
        let v = fr_distance_approx(&a, &b, 1e-3).unwrap().upper;
        if !(lb <= v + 1e-9 && v <= ub + 1e-9) {
            violations += 1;
        }
    }
    (violations == 0, format!("{violations} violations on 100 pairs"))
}

fn c6_affine() -> Outcome {
    let mut r = rng(6);
    let (mut dist_err, mut geo_err): (f64, f64) = (0.0, 0.0);
    for i in 0..20 {
        let d = 1 + i % 3;
        let (a, b) = (mvn(d, &mut r), mvn(d, &mut r));
        let m = affine(d, &mut r);
        let (ma, mb) = (affine_apply(&m, &a).unwrap(), affine_apply(&m, &b).unwrap());
        let g = FrGeodesic::new(&a, &b).unwrap();
        let mg = FrGeodesic::new(&ma, &mb).unwrap();
        dist_err = dist_err.max(rel(mg.length(), g.length()));
        let x = fr_distance_approx(&a, &b, 1e-3).unwrap().value;
        let y = fr_distance_approx(&ma, &mb, 1e-3).unwrap().value;
        dist_err = dist_err.max(rel(y, x));
        for t in [0.25, 0.5, 0.75] {
            geo_err = geo_err.max(gap(&mg.at(t).unwrap(), &affine_apply(&m, &g.at(t).unwrap()).unwrap()));
        }
    }
    (dist_err < 1e-6 && geo_err < 1e-6, format!("distance {dist_err:.1e}, geodesic {geo_err:.1e}"))
}

fn c7_embedding_identities() -> Outcome {
    let mut r = rng(7);
    let (mut jeff, mut lerp): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let d = 1 + i % 4;
        let (a, b) = (mvn(d, &mut r), mvn(d, &mut r));
        let (fa, fb) = (embed(&a, 1.0).unwrap(), embed(&b, 1.0).unwrap());
        let za = Mvn::new(DVector::zeros(d + 1), fa.clone()).unwrap();
        let zb = Mvn::new(DVector::zeros(d + 1), fb.clone()).unwrap();
        jeff = jeff.max(rel(jeffreys(&za, &zb).unwrap(), jeffreys(&a, &b).unwrap()));
        for t in [0.2, 0.5, 0.9] {
            let lhs = embed(&mixture_geodesic(&a, &b, t).unwrap(), 1.0).unwrap();
            let rhs = fa.matrix() * (1.0 - t) + fb.matrix() * t;
            lerp = lerp.max(rel_m(lhs.matrix(), &rhs));
        }
    }
    (jeff < 1e-10 && lerp < 1e-12, format!("Jeffreys preservation {jeff:.1e}, mixture/LERP {lerp:.1e}"))
}

fn c8_hilbert() -> Outcome {
    let mut r = rng(8);
    let exact = HilbertMethod::Exact;
    let mut triangle = 0;
    let mut projective: f64 = 0.0;
    for i in 0..1000 {
        let d = 1 + i % 3;
        let p: Vec<Mvn> = (0..3).map(|_| mvn(d, &mut r)).collect();
        let h = |a: usize, b: usize| hilbert_distance_mvn(&p[a], &p[b], exact).unwrap();
        if h(0, 2) > h(0, 1) + h(1, 2) + 1e-12 {
            triangle += 1;
        }
        let (x, y) = (spd_cond(d + 1, 1e3, &mut r), spd_cond(d + 1, 1e3, &mut r));
        let (c0, c1) = (r.random_range(0.01..10.0), r.random_range(0.01..10.0));
        let base = hilbert_distance_spd(&x, &y, exact).unwrap();
        let scaled = hilbert_distance_spd(&x.scaled(c0).unwrap(), &y.scaled(c1).unwrap(), exact).unwrap();
        projective = projective.max((scaled - base).abs() / (1.0 + base));
    }
    let (mut pull, mut additive): (f64, f64) = (0.0, 0.0);
    for i in 0..50 {
        let d = 1 + i % 3;
        let (a, b) = (mvn(d, &mut r), mvn(d, &mut r));
        let (fa, fb) = (embed(&a, 1.0).unwrap(), embed(&b, 1.0).unwrap());
        let coeffs = HilbertGeodesicCoeffs::new(&fa, &fb).unwrap();
        let total = hilbert_distance_spd(&fa, &fb, exact).unwrap();
        let grid = [0.0, 0.2, 0.5, 0.7, 1.0];
        let pts: Vec<SpdMatrix> = grid.iter().map(|&t| hilbert_geodesic_spd(&fa, &fb, t).unwrap()).collect();
        for x in 0..grid.len() {
            for y in x + 1..grid.len() {
                let seg = hilbert_distance_spd(&pts[x], &pts[y], exact).unwrap();
                additive = additive.max((seg - (grid[y] - grid[x]) * total).abs());
            }
        }
        for t in [0.1, 0.4, 0.6, 0.9] {
            let (c0, c1) = coeffs.weights(t);
            let m = mixture_geodesic(&a, &b, c1 / (c0 + c1)).unwrap();
            pull = pull.max(gap(&hilbert_geodesic_mvn(&a, &b, t).unwrap(), &m));
        }
    }
    (
        triangle == 0 && projective < 1e-9 && pull < 1e-9 && additive < 1e-9,
        format!("triangle violations {triangle}, projective {projective:.1e}, pullback {pull:.1e}, additivity {additive:.1e}"),
    )
}

fn c9_projection() -> Outcome {
    let mut r = rng(9);
    let (mut proj, mut dist, mut leaf): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..100 {
        let d = 1 + i % 3;
        let n = mvn(d, &mut r);
        let c = r.random_range(0.1..10.0);
        let f1 = embed(&n, 1.0).unwrap();
        let (q, dd) = project_to_embedded(&f1.scaled(c).unwrap(), 1.0).unwrap();
        proj = proj.max(rel_m(q.matrix(), f1.matrix()));
        dist = dist.max((dd - c.ln().abs()).abs());
        let (q, _) = project_to_embedded(&embed(&n, c).unwrap(), 1.0).unwrap();
        leaf = leaf.max(rel_m(q.matrix(), f1.matrix()));
    }
    (
        proj < 1e-10 && dist < 1e-10,
        format!("projection of c·f(N) vs f(N) {proj:.1e}; distance vs |log c| {dist:.1e}; leaf f_c(N) → f(N) {leaf:.1e}"),
    )
}

fn c10_ivp_agreement() -> Outcome {
    let mut r = rng(10);
    let (mut agree, mut reconnect): (f64, f64) = (0.0, 0.0);
    for i in 0..20 {
        let d = 1 + i % 3;
        let v = tangent(d, 0.5, &mut r);
        let std = Mvn::standard(d);
        for t in [0.25, 0.5, 0.75, 1.0] {
            let e = fr_geodesic_ivp_eriksen(&v, t).unwrap();
            let c = fr_geodesic_ivp_calvo_oller(&std, &v, t).unwrap();
            agree = agree.max(gap(&e, &c));
        }
        let end = fr_geodesic_ivp_eriksen(&v, 1.0).unwrap();
        let g = FrGeodesic::new(&std, &end).unwrap();
        for t in [0.25, 0.5, 0.75] {
            reconnect = reconnect.max(gap(&g.at(t).unwrap(), &fr_geodesic_ivp_eriksen(&v, t).unwrap()));
        }
    }
    (agree < 1e-6 && reconnect < 1e-6, format!("solver gap {agree:.1e}, boundary-value reconnection {reconnect:.1e}"))
}

fn c11_energy() -> Outcome {
    let mut r = rng(11);
    let steps = 2000;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 1 + i % 3;
        let (a, b) = (mvn(d, &mut r), mvn(d, &mut r));
        let j = jeffreys(&a, &b).unwrap();
        for curve in [mixture_geodesic, exponential_geodesic] {
            let pts: Vec<Mvn> = (0..=steps).map(|k| curve(&a, &b, k as f64 / steps as f64).unwrap()).collect();
            let energy = steps as f64 * pts.windows(2).map(|w| jeffreys(&w[0], &w[1]).unwrap()).sum::<f64>();
            worst = worst.max(rel(energy, j));
        }
    }
    (worst < 1e-2, format!("worst rel. error {worst:.1e} at {steps} steps"))
}

/// `λ_max(H⁻¹A) − 1` along an independent run of the `(A, H)` iteration.
fn invariant_gaps(x: &SpdMatrix, y: &SpdMatrix, iterations: usize) -> Vec<f64> {
    let (mut a, mut h) = (x.matrix().clone(), y.matrix().clone());
    let a0 = (&a + &h) * 0.5;
    h = ((a.clone().try_inverse().unwrap() + h.try_inverse().unwrap()) * 0.5).try_inverse().unwrap();
    a = a0;
    let mut out = Vec::new();
    for _ in 0..iterations {
        let l = h.clone().cholesky().unwrap().l();
        let li = l.clone().try_inverse().unwrap();
        let m = &li * &a * li.transpose();
        out.push(m.symmetric_eigen().eigenvalues.max() - 1.0);
        let next_a = (&a + &h) * 0.5;
        h = ((a.try_inverse().unwrap() + h.try_inverse().unwrap()) * 0.5).try_inverse().unwrap();
        a = next_a;
    }
    out
}

/// `g_(t+1)/g_t²` over steps past the transient (`g_t < 0.1`) and above `floor`.
fn decay_range(gaps: &[f64], floor: f64, range: &mut (f64, f64)) {
    for w in gaps.windows(2) {
        if w[0] < 0.1 && w[1] > floor {
            let q = w[1] / (w[0] * w[0]);
            range.0 = range.0.min(q);
            range.1 = range.1.max(q);
        }
    }
}

fn c12_ahm() -> Outcome {
    let mut r = rng(12);
    let (mut mid, mut iters) = (0.0f64, 0usize);
    let mut frob = (f64::INFINITY, 0.0f64);
    let mut inv = (f64::INFINITY, 0.0f64);
    for i in 0..100 {
        let d = 2 + i % 4;
        let (x, y) = (spd_cond(d, 1e4, &mut r), spd_cond(d, 1e4, &mut r));
        let tr = ahm_mean_trace(&x, &y, 1e-9).unwrap();
        iters = iters.max(tr.iterations);
        mid = mid.max(rel_m(tr.mean.matrix(), spd_geodesic(&x, &y, 0.5).unwrap().matrix()));
        decay_range(&tr.gaps, 1e-13, &mut frob);
        // Whitening by H costs ~cond·ε, so this diagnostic stops earlier.
        decay_range(&invariant_gaps(&x, &y, tr.iterations), 1e-8, &mut inv);
    }
    (
        mid < 1e-9 && iters <= 10 && frob.0 >= 0.1 && frob.1 <= 10.0,
        format!(
            "midpoint gap {mid:.1e}, max {iters} iterations, Frobenius g_(t+1)/g_t² in [{:.2}, {:.2}] \
             (congruence-invariant gap: [{:.3}, {:.3}])",
            frob.0, frob.1, inv.0, inv.1
        ),
    )
}

fn c13_power_method() -> Outcome {
    let mut r = rng(13);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = 2 + i % 5;
        let p = spd_cond(d, 1e4, &mut r);
        let (hi, lo) = power_method_extreme(&p, 200, i as u64).unwrap();
        let w = sym_eig(&p.to_sym()).unwrap().eigenvalues;
        worst = worst.max(rel(hi, w[0])).max(rel(lo, w[d - 1]));
    }
    (worst < 1e-4, format!("worst rel. error {worst:.1e} (200 iterations × 8 restarts)"))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|j| m >> j & 1 == 1).collect()).collect()
}

fn c14_clustering() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let plan = [
        (MetricSpace::new(Distance::Hilbert(HilbertMethod::Exact)), 300),
        (MetricSpace::new(Distance::JeffreysSqrt), 150),
        (MetricSpace::new(Distance::CalvoOller), 150),
        (MetricSpace::new(Distance::FisherRaoT { steps: 10 }), 70),
    ];
    let (mut checks, mut mismatches) = (0, 0);
    for (m, queries) in plan {
        let seeds = if queries == 70 { 2u64 } else { 3 };
        let queries = if seeds == 2 { 100 } else { queries };
        for seed in 0..seeds {
            let mut r = rng(1400 + seed);
            let pts: Vec<Mvn> = (0..100).map(|_| mvn(2, &mut r)).collect();
            let tree = VpTree::build(&pts, m, seed).unwrap();
            for _ in 0..queries {
                let q = mvn(2, &mut r);
                let (ti, td) = tree.nn(&q).unwrap();
                let (si, sd) = linear_scan_nn(&pts, &m, &q).unwrap();
                checks += 1;
                if td != sd || (ti != si && m.distance(&q, &pts[ti]).unwrap() != sd) {
                    mismatches += 1;
                }
            }
        }
    }
    ok &= mismatches == 0 && checks >= 2000;
    notes.push(format!("VP-tree {mismatches}/{checks} mismatches"));

    let h = MetricSpace::with_geodesic(Distance::Hilbert(HilbertMethod::Exact), Geodesic::Hilbert);
    let mut over = 0;
    for seed in 0..50u64 {
        let n = 4 + (seed as usize % 5);
        let k = 1 + (seed as usize % 3);
        let mut r = rng(1450 + seed);
        let pts: Vec<Mvn> = (0..n).map(|_| mvn(2, &mut r)).collect();
        let dm: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| h.distance(a, b).unwrap()).collect()).collect();
        let opt = subsets(n, k)
            .iter()
            .map(|c| (0..n).map(|i| c.iter().map(|&j| dm[i][j]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        if kcenter_gonzalez(&pts, k, h, seed).unwrap().radius > 2.0 * opt + 1e-12 {
            over += 1;
        }
    }
    ok &= over == 0;
    notes.push(format!("k-center over 2·OPT {over}/50"));

    let (mut hits, mut monotone) = (0, true);
    for seed in 0..50u64 {
        let mut r = rng(1500 + seed);
        let pts: Vec<Mvn> = (0..6).map(|_| mvn(2, &mut r)).collect();
        let dm: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| h.distance(a, b).unwrap()).collect()).collect();
        let opt = subsets(6, 2)
            .iter()
            .map(|c| (0..6).map(|i| c.iter().map(|&j| dm[i][j]).fold(f64::INFINITY, f64::min)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let c = kmedioid(&pts, None, 2, h, seed).unwrap();
        monotone &= c.cost_history.windows(2).all(|w| w[1] <= w[0]) && c.cost >= opt - 1e-12;
        if c.cost <= opt + 1e-12 {
            hits += 1;
        }
    }
    ok &= monotone && hits >= 35;
    notes.push(format!("k-medioid optimum {hits}/50, monotone {monotone}"));

    let mut worst: f64 = 0.0;
    let mut r = rng(1550);
    let fr = MetricSpace::with_geodesic(Distance::FisherRao, Geodesic::FisherRao);
    for m in [h, fr] {
        for _ in 0..3 {
            let pair = vec![mvn(2, &mut r), mvn(2, &mut r)];
            let d = m.distance(&pair[0], &pair[1]).unwrap();
            worst = worst.max(rel(miniball(&pair, m, 2000).unwrap().radius, 0.5 * d));
        }
    }
    ok &= worst < 0.01;
    notes.push(format!("miniball two-point {worst:.1e}"));
    (ok, notes.join("; "))
}

fn c15_cli_pipeline() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let protos = [([-10.0, 0.0], 1.0), ([10.0, 0.0], 1.0), ([0.0, 10.0], 0.2), ([0.0, -10.0], 5.0)];
    let mut r = rng(15);
    let mut gmms = Vec::new();
    let mut want = Vec::new();
    for _ in 0..3 {
        let mut comps = Vec::new();
        let raw: Vec<f64> = (0..4).map(|_| r.random_range(0.1..1.0)).collect();
        for (mean, s) in protos {
            let jitter = [r.random_range(-0.01..0.01), r.random_range(-0.01..0.01)];
            comps.push(json!({"mean": [mean[0] + jitter[0], mean[1] + jitter[1]], "cov": [[s, 0.0], [0.0, s]]}));
        }
        let g = Gmm::normalized(raw.clone(), vec![Mvn::standard(1); 4]).unwrap();
        want.push(g.weights().to_vec());
        gmms.push(json!({"weights": raw, "components": comps}));
    }
    let path = dir.path().join("quantize.json");
    std::fs::write(&path, json!({ "gmms": gmms }).to_string()).unwrap();
    let run = |p: &Path| {
        Command::new(env!("CARGO_BIN_EXE_gaussgeo"))
            .args(["quantize", p.to_str().unwrap(), "--k", "4", "--metric", "hilbert", "--seed", "7"])
            .output()
            .unwrap()
    };
    let (a, b) = (run(&path), run(&path));
    if !a.status.success() {
        return (false, format!("exit {:?}: {}", a.status.code(), String::from_utf8_lossy(&a.stderr)));
    }
    let identical = a.stdout == b.stdout;
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let code: Vec<[f64; 2]> = v["outputs"]["codebook"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| [c["mean"][0].as_f64().unwrap(), c["mean"][1].as_f64().unwrap()])
        .collect();
    // Codeword nearest (in mean) to each prototype.
    let slot: Vec<usize> = protos
        .iter()
        .map(|(m, _)| {
            (0..4)
                .min_by(|&x, &y| {
                    let dx = (code[x][0] - m[0]).hypot(code[x][1] - m[1]);
                    let dy = (code[y][0] - m[0]).hypot(code[y][1] - m[1]);
                    dx.total_cmp(&dy)
                })
                .unwrap()
        })
        .collect();
    let mut exact = true;
    for (g, w) in want.iter().enumerate() {
        let got: Vec<f64> = v["outputs"]["weights"][g].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let mut expect = vec![0.0; 4];
        for (p, &s) in slot.iter().enumerate() {
            expect[s] += w[p];
        }
        exact &= got == expect;
    }
    (identical && exact, format!("prototype sums exact: {exact}; byte-identical reruns: {identical}"))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 15] = [
        (1, "reference pair ρ̃_100 = 3.1996 ± 5e-4", c1_reference_value),
        (2, "guaranteed approximation on the reference pair", c2_guaranteed_approximation),
        (3, "monotone refinement of ρ̃_T", c3_monotone_refinement),
        (4, "closed-form cross-checks", c4_closed_forms),
        (5, "lower bound ≤ approximation ≤ √Jeffreys", c5_sandwich),
        (6, "affine invariance and equivariance", c6_affine),
        (7, "embedding preserves Jeffreys and mixture geodesics", c7_embedding_identities),
        (8, "Hilbert metric properties", c8_hilbert),
        (9, "projection onto the embedded normals", c9_projection),
        (10, "initial-value solver agreement", c10_ivp_agreement),
        (11, "energy identity along e/m-geodesics", c11_energy),
        (12, "arithmetic-harmonic mean", c12_ahm),
        (13, "power-method extreme eigenvalues", c13_power_method),
        (14, "clustering oracles", c14_clustering),
        (15, "end-to-end CLI quantization", c15_cli_pipeline),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let (pass, detail) = check();
        let tag = match (pass, EXPECTED_FAILURES.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        println!("{tag} [{id:>2}] {name}: {detail} ({:.1}s)", start.elapsed().as_secs_f64());
        if !pass {
            failed.push(id);
        }
    }
    let passed = 15 - failed.len();
    println!("acceptance: {passed}/15 passed; failing {failed:?}; expected failing {EXPECTED_FAILURES:?}");
    if failed != EXPECTED_FAILURES {
        eprintln!("acceptance: failing set differs from the expected set");
        std::process::exit(1);
    }
}
