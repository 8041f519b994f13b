//! Property tests for the seminorm, smoothing and calculus invariants.

use proptest::prelude::*;

use projsmooth::bundles::{fixture_random_near_projection, random_gapped_matrix};
use projsmooth::calculus::{upper_projection_with_cut, upper_spectral_projection};
use projsmooth::grid_field::io::{from_json_str, to_json_string};
use projsmooth::grid_field::{lipschitz_constant, sup_distance, FiniteMetric, MatrixField, TorusGrid};
use projsmooth::mollifier::{discretize, smooth, MollifierKernel};
use projsmooth::{CMatrix, C64};

fn grid_strategy() -> impl Strategy<Value = TorusGrid> {
    prop_oneof![
        (4usize..40).prop_map(|n| TorusGrid::circle(n).unwrap()),
        (4usize..12, 4usize..12).prop_map(|(a, b)| TorusGrid::new(&[a, b]).unwrap()),
    ]
}

fn unitary(seed: u64, m: usize) -> CMatrix {
    // eigenvectors of a random Hermitian matrix form a unitary
    let a = random_gapped_matrix(seed, m, 0.3);
    projsmooth::calculus::eigen_hermitian(&a).unwrap().vectors
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn geodesic_triangle_inequality(grid in grid_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = grid.point_count();
        for _ in 0..50 {
            let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            prop_assert!(grid.dist(i, k) <= grid.dist(i, j) + grid.dist(j, k) + 1e-15);
            prop_assert_eq!(grid.dist(i, j), grid.dist(j, i));
            prop_assert_eq!(grid.dist(i, j) == 0.0, i == j);
        }
    }

    #[test]
    fn lipschitz_is_a_seminorm(grid in grid_strategy(), seed in 0u64..1000, alpha in -5.0f64..5.0, m in 1usize..4) {
        let f = fixture_random_near_projection(seed, &grid, m, 0.2).unwrap();
        let g = fixture_random_near_projection(seed + 7, &grid, m, 0.3).unwrap();
        let lf = lipschitz_constant(&f).unwrap().value;
        let lg = lipschitz_constant(&g).unwrap().value;
        let scaled = lipschitz_constant(&f.scale(C64::new(alpha, 0.0))).unwrap().value;
        // rounding in f(x) - f(y) is amplified by at most 1/min_step
        let noise = f.sup_norm() / grid.min_step();
        prop_assert!((scaled - alpha.abs() * lf).abs() <= 1e-12 * alpha.abs() * (lf + noise));
        let sum = lipschitz_constant(&f.axpy(C64::new(1.0, 0.0), &g).unwrap()).unwrap().value;
        prop_assert!(sum <= (lf + lg) * (1.0 + 1e-12) + 1e-12 * (noise + g.sup_norm() / grid.min_step()));
    }

    #[test]
    fn lipschitz_unitary_invariance(grid in grid_strategy(), seed in 0u64..1000, m in 2usize..4) {
        let f = fixture_random_near_projection(seed, &grid, m, 0.2).unwrap();
        let u = unitary(seed + 1, m);
        let lf = lipschitz_constant(&f).unwrap().value;
        let lu = lipschitz_constant(&f.conjugate_by(&u).unwrap()).unwrap().value;
        prop_assert!((lf - lu).abs() <= 1e-12 * lf.max(1.0));
    }

    #[test]
    fn smoothing_contracts_and_approximates(grid in grid_strategy(), seed in 0u64..1000, steps in 1.2f64..3.5) {
        let f = fixture_random_near_projection(seed, &grid, 2, 0.2).unwrap();
        let kernel = MollifierKernel::new(grid.dim(), 0.5).unwrap();
        let eps = (steps * grid.max_step()).min(0.49);
        let stencil = match discretize(&kernel, &grid, eps) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let fs = smooth(&f, &stencil).unwrap();
        let l = lipschitz_constant(&f).unwrap().value;
        prop_assert!(lipschitz_constant(&fs).unwrap().value <= l * (1.0 + 1e-12));
        prop_assert!(sup_distance(&f, &fs).unwrap() <= l * eps);
        prop_assert!(fs.max_hermitian_defect() <= f.max_hermitian_defect() + 1e-13);
    }

    #[test]
    fn smoothing_is_linear(grid in grid_strategy(), seed in 0u64..1000, alpha in -3.0f64..3.0) {
        let f = fixture_random_near_projection(seed, &grid, 2, 0.2).unwrap();
        let g = fixture_random_near_projection(seed + 3, &grid, 2, 0.2).unwrap();
        let kernel = MollifierKernel::new(grid.dim(), 0.5).unwrap();
        let stencil = discretize(&kernel, &grid, (2.0 * grid.max_step()).min(0.49)).unwrap();
        let a = C64::new(alpha, 0.0);
        let lhs = smooth(&f.axpy(a, &g).unwrap(), &stencil).unwrap();
        let rhs = smooth(&f, &stencil).unwrap().axpy(a, &smooth(&g, &stencil).unwrap()).unwrap();
        prop_assert!(sup_distance(&lhs, &rhs).unwrap() <= 1e-13);
    }

    #[test]
    fn cut_point_does_not_matter(seed in any::<u64>(), m in 1usize..7, delta in 0.01f64..0.49) {
        let a = random_gapped_matrix(seed, m, delta);
        let q = upper_spectral_projection(&a, delta).unwrap();
        for cut in [(delta + 0.5) / 2.0, 1.0 - delta - 1e-9] {
            prop_assert_eq!(&upper_projection_with_cut(&a, delta, cut).unwrap(), &q);
        }
    }

    #[test]
    fn field_file_roundtrip_is_bit_exact(grid in grid_strategy(), seed in 0u64..1000, m in 1usize..4, hermitian in any::<bool>()) {
        let f = fixture_random_near_projection(seed, &grid, m, 0.2).unwrap();
        let f = if hermitian { f } else {
            let u = unitary(seed, m);
            f.map(false, |_, a| &u * a).unwrap()
        };
        let back = from_json_str(&to_json_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back.is_hermitian(), f.is_hermitian());
        for (x, y) in back.data().iter().zip(f.data()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}

#[test]
fn constant_field_zero_and_self_distance_zero() {
    let g = TorusGrid::square(9).unwrap();
    let f = MatrixField::constant(g, &unitary(3, 3), false).unwrap();
    assert_eq!(lipschitz_constant(&f).unwrap().value, 0.0);
    assert_eq!(sup_distance(&f, &f).unwrap(), 0.0);
}
