//! Operation examples checked against independent oracles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use projsmooth::bounds::{inverse_seminorm_check, proposition_bound_check};
use projsmooth::bundles::{
    chern_number, fixture_loring, fixture_random_near_projection, random_gapped_matrix,
};
use projsmooth::calculus::{
    apply_calculus, audit_edge_bounds, contour_projection, eigen_hermitian, spectral_gap_field,
    upper_spectral_projection, ContourSpec,
};
use projsmooth::grid_field::{
    is_projection, lipschitz_constant, operator_norm, sup_distance, MatrixField, TorusGrid,
};
use projsmooth::mollifier::{discretize, smooth, MollifierKernel};
use projsmooth::pipeline::{smooth_project, PipelineConfig};
use projsmooth::{CMatrix, C64};

fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> CMatrix {
    CMatrix::from_fn(m, m, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_hermitian(rng: &mut ChaCha8Rng, m: usize) -> CMatrix {
    let a = random_matrix(rng, m);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Number of eigenvalues of Hermitian `a` below `x`, by Sylvester inertia of
/// the LDL* factorization of a − xI (no pivoting).
fn count_below(a: &CMatrix, x: f64) -> usize {
    let n = a.nrows();
    let mut w = a.clone();
    for i in 0..n {
        w[(i, i)] -= C64::new(x, 0.0);
    }
    let mut negatives = 0;
    for k in 0..n {
        let pivot = w[(k, k)].re;
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let factor = w[(i, k)] / pivot;
            for j in k..n {
                let v = w[(k, j)];
                w[(i, j)] -= factor * v;
            }
        }
    }
    negatives
}

#[test]
fn operator_norm_matches_gram_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 4);
        let gram = a.adjoint() * &a;
        let e = eigen_hermitian(&((&gram + gram.adjoint()) * C64::new(0.5, 0.0))).unwrap();
        let oracle = e.eigenvalues.last().unwrap().sqrt();
        assert!((operator_norm(&a).unwrap() - oracle).abs() < 1e-10);
    }
}

#[test]
fn eigen_hermitian_against_inertia_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let a = random_hermitian(&mut rng, 6);
        let e = eigen_hermitian(&a).unwrap();
        let scale = 1.0 + operator_norm(&a).unwrap();
        assert!(operator_norm(&(e.reconstruct() - &a)).unwrap() <= 1e-10 * scale);
        let u = &e.vectors;
        assert!(operator_norm(&(u * u.adjoint() - CMatrix::identity(6, 6))).unwrap() <= 6e-12);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        for _ in 0..20 {
            let lo = rng.random_range(-3.0..3.0);
            let hi = lo + rng.random_range(0.0..2.0);
            let want = count_below(&a, hi) - count_below(&a, lo);
            let got = e.eigenvalues.iter().filter(|&&l| l >= lo && l < hi).count();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn kernel_mass_monte_carlo() {
    let k = MollifierKernel::new(2, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 10_000_000usize;
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let v = 4.0 * k.profile((x * x + y * y).sqrt());
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let sd = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - 1.0).abs() <= 3.0 * sd, "mean {mean}, sd {sd}");
    assert!((k.radial_mass() - 1.0).abs() <= 1e-8);
}

#[test]
fn sawtooth_lipschitz_brute_force() {
    let n = 8;
    let grid = TorusGrid::circle(n).unwrap();
    let value = |i: usize| {
        let x = i as f64 / n as f64;
        x.min(1.0 - x)
    };
    let f = MatrixField::from_fn(grid, 1, true, |x| {
        CMatrix::from_element(1, 1, C64::new(x[0].min(1.0 - x[0]), 0.0))
    })
    .unwrap();
    let mut oracle = 0.0f64;
    let mut pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = (j - i) as f64 / n as f64;
            let rho = d.min(1.0 - d);
            oracle = oracle.max((value(i) - value(j)).abs() / rho);
            pairs += 1;
        }
    }
    assert_eq!(pairs, 28);
    let est = lipschitz_constant(&f).unwrap();
    assert_eq!(est.value, oracle);
    assert_eq!(oracle, 1.0);
}

#[test]
fn witness_reproduces_value() {
    let g = TorusGrid::square(20).unwrap();
    let p = fixture_loring(2, &g).unwrap();
    let est = lipschitz_constant(&p).unwrap();
    let (i, j) = est.witness;
    let q = operator_norm(&(p.matrix(i) - p.matrix(j))).unwrap() / g.geodesic_distance(i, j).unwrap();
    assert!((q - est.value).abs() <= 1e-15 * est.value);
}

fn scan_sup(f: &MatrixField, g: &MatrixField) -> f64 {
    (0..f.len())
        .map(|i| operator_norm(&(f.matrix(i) - g.matrix(i))).unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn loring_smoothing_within_l_eps() {
    let g = TorusGrid::square(64).unwrap();
    let p = fixture_loring(1, &g).unwrap();
    let l = lipschitz_constant(&p).unwrap().value;
    let kernel = MollifierKernel::new(2, 0.5).unwrap();
    for eps in [1.0 / 16.0, 4.0 / 64.0] {
        let p1 = smooth(&p, &discretize(&kernel, &g, eps).unwrap()).unwrap();
        let d = sup_distance(&p, &p1).unwrap();
        assert!((d - scan_sup(&p, &p1)).abs() < 1e-14);
        assert!(d <= l * eps);
    }
}

#[test]
fn smoothed_loring_eigenvalues_stay_near_01() {
    let g = TorusGrid::square(64).unwrap();
    let p = fixture_loring(1, &g).unwrap();
    let kernel = MollifierKernel::new(2, 0.5).unwrap();
    let p1 = smooth(&p, &discretize(&kernel, &g, 4.0 / 64.0).unwrap()).unwrap();
    let gap = spectral_gap_field(&p1, 0.1).unwrap();
    assert!(gap.max_distance_from_01 <= sup_distance(&p, &p1).unwrap());
    assert!(gap.certified());
    let q = apply_calculus(&p1, 0.1).unwrap();
    assert!(is_projection(&q, 1e-10).ok);
    assert_eq!(chern_number(&q).unwrap().chern, chern_number(&p).unwrap().chern);
}

#[test]
fn contour_is_independent_of_rectangle_height() {
    for seed in 0..10 {
        let a = random_gapped_matrix(seed, 4, 0.2);
        let q = upper_spectral_projection(&a, 0.2).unwrap();
        for s in [5.0, 50.0] {
            let c = contour_projection(&a, &ContourSpec::new(s, 16, 0.2).unwrap()).unwrap();
            assert!(operator_norm(&(c.projection - &q)).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn contour_on_projection_returns_it() {
    let h = 0.5f64.sqrt();
    let v = [C64::new(h, 0.0), C64::new(0.0, -h)];
    let p = CMatrix::from_fn(2, 2, |r, c| v[r] * v[c].conj());
    for (s, delta) in [(3.0, 0.1), (20.0, 0.45)] {
        let c = contour_projection(&p, &ContourSpec::new(s, 32, delta).unwrap()).unwrap();
        assert!(operator_norm(&(c.projection - &p)).unwrap() <= 1e-6);
    }
}

#[test]
fn edge_bounds_hold_nodewise() {
    for seed in 0..10 {
        let a = random_gapped_matrix(50 + seed, 5, 0.3);
        for s in [2.0, 40.0] {
            let audit = audit_edge_bounds(&a, &ContourSpec::new(s, 16, 0.3).unwrap(), 512).unwrap();
            assert!(audit.ok, "worst {}", audit.worst_ratio);
        }
    }
}

#[test]
fn inverse_inequality_for_shifted_sine() {
    let g = TorusGrid::circle(64).unwrap();
    let b = MatrixField::from_fn(g, 1, true, |x| {
        CMatrix::from_element(1, 1, C64::new(2.0 + (2.0 * PI * x[0]).sin(), 0.0))
    })
    .unwrap();
    let r = inverse_seminorm_check(&b).unwrap();
    assert!(r.ok);
    assert!(r.ratio > 0.0 && r.ratio <= 1.0);
}

#[test]
fn random_fixture_satisfies_bound() {
    let a = fixture_random_near_projection(7, &TorusGrid::circle(32).unwrap(), 3, 0.2).unwrap();
    assert!(proposition_bound_check(&a, 0.2).unwrap().ok);
}

#[test]
fn chern_refinement_is_stable() {
    let c64 = chern_number(&fixture_loring(1, &TorusGrid::square(64).unwrap()).unwrap()).unwrap();
    let c128 = chern_number(&fixture_loring(1, &TorusGrid::square(128).unwrap()).unwrap()).unwrap();
    assert_eq!(c64.chern, -1);
    assert_eq!(c128.chern, c64.chern);
    let c3 = chern_number(&fixture_loring(3, &TorusGrid::square(128).unwrap()).unwrap()).unwrap();
    assert_eq!(c3.chern.abs(), 3);
}

#[test]
fn pipeline_output_is_projection_at_64() {
    let p = fixture_loring(1, &TorusGrid::square(64).unwrap()).unwrap();
    let out = smooth_project(&p, &PipelineConfig::new(0.2)).unwrap();
    assert!(is_projection(&out.q, 1e-10).ok);
    assert!(out.report.certified());
}
