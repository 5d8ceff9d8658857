mod common;

use common::*;
use gaussgeo_core::gaussian::{embed, embed_inverse, mixture_geodesic};
use gaussgeo_core::hilbert::*;
use gaussgeo_core::matcore::{Matrix, SpdMatrix};
use gaussgeo_core::Mvn;
use proptest::prelude::*;

fn exact(p0: &SpdMatrix, p1: &SpdMatrix) -> f64 {
    hilbert_distance_spd(p0, p1, HilbertMethod::Exact).unwrap()
}

fn diag(v: &[f64]) -> SpdMatrix {
    SpdMatrix::from_diagonal(v).unwrap()
}

#[test]
fn distance_examples() {
    let p = SpdMatrix::from_row_slice(2, &[2.0, 0.4, 0.4, 1.0]).unwrap();
    assert!(exact(&p, &p.scaled(3.0).unwrap()) < 1e-14);
    let ln4 = 4.0_f64.ln();
    assert!((exact(&SpdMatrix::identity(2), &diag(&[4.0, 1.0])) - ln4).abs() < 1e-14);
    assert!((exact(&SpdMatrix::identity(2), &diag(&[8.0, 2.0])) - ln4).abs() < 1e-14);
    assert!(hilbert_distance_spd(&SpdMatrix::identity(2), &SpdMatrix::identity(3), HilbertMethod::Exact).is_err());
}

#[test]
fn mvn_distance_examples() {
    let n = Mvn::from_slices(&[0.5, -1.0], &[1.0, 0.2, 0.2, 2.0]).unwrap();
    assert_eq!(hilbert_distance_mvn(&n, &n, HilbertMethod::Exact).unwrap(), 0.0);
    let a = Mvn::standard(2);
    let b = Mvn::from_slices(&[0.0, 0.0], &[4.0, 0.0, 0.0, 4.0]).unwrap();
    let v = hilbert_distance_mvn(&a, &b, HilbertMethod::Exact).unwrap();
    assert!((v - 4.0_f64.ln()).abs() < 1e-14);
}

#[test]
fn mvn_distance_is_a_metric() {
    let mut r = rng(40);
    for i in 0..1000 {
        let d = 1 + i % 3;
        let p: Vec<Mvn> = (0..3).map(|_| random_mvn(d, &mut r)).collect();
        let h = |a: usize, b: usize| hilbert_distance_mvn(&p[a], &p[b], HilbertMethod::Exact).unwrap();
        assert!(h(0, 2) <= h(0, 1) + h(1, 2) + 1e-12);
        assert!((h(0, 1) - h(1, 0)).abs() <= 1e-12 * (1.0 + h(0, 1)));
        assert!(h(0, 1) > 1e-12);
    }
}

#[test]
fn projective_invariance() {
    let mut r = rng(41);
    for i in 0..1000 {
        let d = 2 + i % 4;
        let p0 = random_spd_cond(d, 1e3, &mut r);
        let p1 = random_spd_cond(d, 1e3, &mut r);
        let c0 = (i as f64 * 0.37).sin().abs() * 10.0 + 0.01;
        let c1 = (i as f64 * 0.73).cos().abs() * 10.0 + 0.01;
        let a = exact(&p0, &p1);
        let b = exact(&p0.scaled(c0).unwrap(), &p1.scaled(c1).unwrap());
        assert!((a - b).abs() < 1e-12 * (1.0 + a) * 10.0, "{a} {b}");
    }
}

#[test]
fn power_method_agrees_with_exact() {
    let mut r = rng(42);
    for i in 0..100 {
        let d = 2 + i % 4;
        let p0 = random_spd_cond(d, 1e2, &mut r);
        let p1 = random_spd_cond(d, 1e2, &mut r);
        let a = exact(&p0, &p1);
        let b = hilbert_distance_spd(&p0, &p1, HilbertMethod::Power { iterations: 200, seed: i as u64 }).unwrap();
        assert!(rel_scalar(b, a) < 1e-4, "{a} {b}");
    }
}

#[test]
fn geodesic_endpoints_and_degenerate_branch() {
    let mut r = rng(43);
    let p0 = random_spd_cond(3, 1e2, &mut r);
    let p1 = random_spd_cond(3, 1e2, &mut r);
    assert_eq!(hilbert_geodesic_spd(&p0, &p1, 0.0).unwrap(), p0);
    assert_eq!(hilbert_geodesic_spd(&p0, &p1, 1.0).unwrap(), p1);
    let q = p0.scaled(5.0).unwrap();
    let m = hilbert_geodesic_spd(&p0, &q, 0.25).unwrap();
    assert!(rel(m.matrix(), &(p0.matrix() * 2.0)) < 1e-14);
    let c = HilbertGeodesicCoeffs::new(&p0, &p1).unwrap();
    assert!(c.alpha > 0.0 && c.alpha <= c.beta);
    let (w0, w1) = c.weights(0.0);
    assert!((w0 - 1.0).abs() < 1e-14 && w1.abs() < 1e-14);
    let (w0, w1) = c.weights(1.0);
    assert!(w0.abs() < 1e-12 && (w1 - 1.0).abs() < 1e-12);
}

#[test]
fn geodesic_has_constant_speed() {
    let mut r = rng(44);
    for i in 0..30 {
        let d = 2 + i % 3;
        let p0 = random_spd_cond(d, 1e3, &mut r);
        let p1 = random_spd_cond(d, 1e3, &mut r);
        let total = exact(&p0, &p1);
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let pts: Vec<SpdMatrix> = grid.iter().map(|&t| hilbert_geodesic_spd(&p0, &p1, t).unwrap()).collect();
        for a in 0..grid.len() {
            for b in 0..grid.len() {
                let v = exact(&pts[a], &pts[b]);
                assert!((v - (grid[a] - grid[b]).abs() * total).abs() < 1e-9, "{v} {total}");
            }
        }
    }
}

/// Mixture-curve parameter of a point `c0 f(N0) + c1 f(N1)` of the embedded segment.
fn lerp_parameter(n0: &Mvn, n1: &Mvn, t: f64) -> f64 {
    let (c0, c1) = HilbertGeodesicCoeffs::new(&embed(n0, 1.0).unwrap(), &embed(n1, 1.0).unwrap()).unwrap().weights(t);
    c1 / (c0 + c1)
}

#[test]
fn pullback_curve_is_a_mixture_geodesic() {
    let mut r = rng(45);
    for i in 0..50 {
        let d = 1 + i % 3;
        let n0 = random_mvn(d, &mut r);
        let n1 = random_mvn(d, &mut r);
        assert_eq!(hilbert_geodesic_mvn(&n0, &n1, 0.0).unwrap(), n0);
        assert_eq!(hilbert_geodesic_mvn(&n0, &n1, 1.0).unwrap(), n1);
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let h = hilbert_geodesic_mvn(&n0, &n1, t).unwrap();
            let m = mixture_geodesic(&n0, &n1, lerp_parameter(&n0, &n1, t)).unwrap();
            assert!(mvn_gap(&h, &m) < 1e-9);
        }
    }
}

#[test]
fn pullback_midpoint_by_hand() {
    let a = Mvn::from_slices(&[0.0], &[1.0]).unwrap();
    let b = Mvn::from_slices(&[0.0], &[4.0]).unwrap();
    // The embedded segment diag(1,1)..diag(4,1) passes through diag(2.5,1).
    assert!((lerp_parameter(&a, &b, 0.5) - 1.0 / 3.0).abs() < 1e-12);
    let s = 0.5;
    let t = {
        // invert the monotone reparameterization by bisection
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if lerp_parameter(&a, &b, mid) < s { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    };
    let p = hilbert_geodesic_mvn(&a, &b, t).unwrap();
    assert!((p.cov().matrix()[(0, 0)] - 2.5).abs() < 1e-9);
    assert!(p.mean()[0].abs() < 1e-12);
}

#[test]
fn projection_examples() {
    let n = Mvn::from_slices(&[0.3, -0.4], &[1.0, 0.1, 0.1, 2.0]).unwrap();
    let p = embed(&n, 1.0).unwrap();
    let (q, dist) = project_to_embedded(&p, 1.0).unwrap();
    assert!(rel(q.matrix(), p.matrix()) < 1e-15 && dist == 0.0);

    // 2I: β = 2, μ = 0, Σ = 2 → diag(2, 1).
    let (q, dist) = project_to_embedded(&SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap(), 1.0).unwrap();
    assert!(rel(q.matrix(), &Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])) < 1e-15);
    assert!((dist - 2.0_f64.ln()).abs() < 1e-15);

    let (q, half) = project_to_embedded(&SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap(), 0.5).unwrap();
    assert!((half - 0.5 * 2.0_f64.ln()).abs() < 1e-15);
    let (back, a) = embed_inverse(&q).unwrap();
    assert_eq!(a, 1.0);
    assert!(rel(embed(&back, 1.0).unwrap().matrix(), q.matrix()) < 1e-12);
    assert!(project_to_embedded(&q, 0.0).is_err());
}

#[test]
fn projection_of_foliation_leaves() {
    let mut r = rng(46);
    for i in 0..100 {
        let d = 1 + i % 4;
        let n = random_mvn(d, &mut r);
        let a = 0.1 + 9.9 * ((i * 37 % 100) as f64 / 100.0);
        let (q, dist) = project_to_embedded(&embed(&n, a).unwrap(), 1.0).unwrap();
        assert!(rel(q.matrix(), embed(&n, 1.0).unwrap().matrix()) < 1e-12);
        assert!((dist - a.ln().abs()).abs() < 1e-12);
    }
}

#[test]
fn projection_block_formula_on_scaled_points() {
    let mut r = rng(47);
    for i in 0..50 {
        let d = 1 + i % 3;
        let n = random_mvn(d, &mut r);
        let c = 0.1 + 9.9 * (i as f64 / 50.0);
        let p = embed(&n, 1.0).unwrap().scaled(c).unwrap();
        let (q, dist) = project_to_embedded(&p, 1.0).unwrap();
        // Direct evaluation of the block formula.
        let m = p.matrix();
        let beta = m[(d, d)];
        let mu = m.view((0, d), (d, 1)).into_owned() / beta;
        let sigma = m.view((0, 0), (d, d)).into_owned() - &mu * mu.transpose() * beta;
        let mut want = Matrix::zeros(d + 1, d + 1);
        want.view_mut((0, 0), (d, d)).copy_from(&(&sigma + &mu * mu.transpose()));
        want.view_mut((0, d), (d, 1)).copy_from(&mu);
        want.view_mut((d, 0), (1, d)).copy_from(&mu.transpose());
        want[(d, d)] = 1.0;
        assert!(rel(q.matrix(), &want) < 1e-12);
        assert!((dist - c.ln().abs()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spd_triangle_and_symmetry(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let p: Vec<SpdMatrix> = (0..3).map(|_| random_spd_cond(d, 1e3, &mut r)).collect();
        prop_assert!(exact(&p[0], &p[2]) <= exact(&p[0], &p[1]) + exact(&p[1], &p[2]) + 1e-12);
        let (a, b) = (exact(&p[0], &p[1]), exact(&p[1], &p[0]));
        prop_assert!((a - b).abs() <= 1e-11 * (1.0 + a));
    }

    #[test]
    fn geodesic_points_are_spd(seed in any::<u64>(), d in 2usize..=4, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let p0 = random_spd_cond(d, 1e4, &mut r);
        let p1 = random_spd_cond(d, 1e4, &mut r);
        prop_assert!(hilbert_geodesic_spd(&p0, &p1, t).is_ok());
    }
}
