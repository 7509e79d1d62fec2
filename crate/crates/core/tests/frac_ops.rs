use std::f64::consts::PI;

use frachs_core::frac_ops::{
    apply_extended, first_derivative, left_frac_derivative, left_frac_derivative_quadrature,
    left_frac_integral, left_frac_integral_quadrature, right_frac_derivative,
    right_frac_derivative_quadrature, Extension, FracOperator, FracOrder,
};
use frachs_core::grid::{forward_transform, inverse_transform, quadrature, Grid, GridFunction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

fn rel_l2_on(a: &GridFunction, oracle: &[f64], first: usize) -> f64 {
    let vals = &a.values()[first..first + oracle.len()];
    let num: f64 = vals.iter().zip(oracle).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = oracle.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Zero-mean trigonometric polynomial on modes `1..=modes`.
fn band_limited(grid: Grid, modes: usize, coeffs: &[(f64, f64)]) -> GridFunction {
    let l = 2.0 * grid.half_width();
    GridFunction::from_scalar_fn(grid, |t| {
        coeffs
            .iter()
            .take(modes)
            .enumerate()
            .map(|(m, (a, b))| {
                let w = 2.0 * PI * (m + 1) as f64 / l;
                a * (w * t).cos() + b * (w * t).sin()
            })
            .sum()
    })
    .unwrap()
}

fn seminorms(u: &GridFunction, alpha: FracOrder) -> (f64, f64) {
    let grid = *u.grid();
    let d = left_frac_derivative(u, alpha, Extension::Periodic).unwrap();
    let physical = d.l2_norm();
    let a = alpha.value();
    let spectral = forward_transform(u)
        .weighted_energy(|idx| grid.frequency(idx).abs().powf(2.0 * a))
        .sqrt();
    (physical, spectral)
}

#[test]
fn gaussian_derivative_matches_marchaud_quadrature() {
    let grid = Grid::new(20.0, 4096).unwrap();
    let u = GridFunction::from_scalar_fn(grid, |t| (-t * t).exp()).unwrap();
    for a in [0.3, 0.5, 0.75] {
        let spectral = left_frac_derivative(&u, order(a), Extension::default()).unwrap();
        let oracle = left_frac_derivative_quadrature(&u, order(a));
        let err = rel_l2_on(&spectral, &oracle.values, oracle.first_index);
        assert!(err <= 1e-4, "alpha {a}: {err:e}");
    }
}

#[test]
fn right_derivative_is_the_mirror_image() {
    let grid = Grid::new(20.0, 2048).unwrap();
    let u = GridFunction::from_scalar_fn(grid, |t| (-(t - 0.7) * (t - 0.7)).exp()).unwrap();
    let alpha = order(0.6);
    let right = right_frac_derivative(&u, alpha, Extension::default()).unwrap();
    let oracle = right_frac_derivative_quadrature(&u, alpha);
    assert!(rel_l2_on(&right, &oracle.values, oracle.first_index) <= 1e-4);

    let periodic = right_frac_derivative(&u, alpha, Extension::Periodic).unwrap();
    let mirrored = left_frac_derivative(&u.reflected(), alpha, Extension::Periodic)
        .unwrap()
        .reflected();
    assert!(mirrored.sub(&periodic).unwrap().sup_norm() <= 1e-12 * periodic.sup_norm());
}

#[test]
fn integral_matches_riemann_liouville_quadrature() {
    let grid = Grid::new(20.0, 2048).unwrap();
    let u = GridFunction::from_scalar_fn(grid, |t| t * (-t * t).exp()).unwrap();
    for a in [0.3, 0.6] {
        let spectral = left_frac_integral(&u, order(a), Extension::default()).unwrap();
        let oracle = left_frac_integral_quadrature(&u, order(a));
        let err = rel_l2_on(&spectral, &oracle.values, oracle.first_index);
        assert!(err <= 1e-3, "alpha {a}: {err:e}");
    }
}

#[test]
fn derivative_undoes_integral_on_random_band_limited_input() {
    let grid = Grid::new(20.0, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let coeffs: Vec<(f64, f64)> = (0..32)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let u = band_limited(grid, 32, &coeffs);
        let a = order(rng.random_range(0.05..0.95));
        let back = left_frac_derivative(
            &left_frac_integral(&u, a, Extension::Periodic).unwrap(),
            a,
            Extension::Periodic,
        )
        .unwrap();
        assert!(back.sub(&u).unwrap().l2_norm() <= 1e-8 * u.l2_norm());
    }
}

#[test]
fn seminorm_agrees_in_both_spaces() {
    let grid = Grid::new(20.0, 2048).unwrap();
    let corpus = [
        GridFunction::from_scalar_fn(grid, |t| (-t * t).exp()).unwrap(),
        GridFunction::from_scalar_fn(grid, |t| t * (-t * t).exp()).unwrap(),
        GridFunction::from_scalar_fn(grid, |t| 1.0 / t.cosh()).unwrap(),
        band_limited(grid, 3, &[(1.0, 0.5), (-0.25, 0.0), (0.0, 2.0)]),
    ];
    for u in &corpus {
        for a in [0.3, 0.5, 0.6, 0.75] {
            let (p, s) = seminorms(u, order(a));
            assert!((p - s).abs() <= 1e-8 * s, "{p} vs {s}");
        }
    }
}

#[test]
fn seminorm_of_a_single_mode() {
    // |cos(w t)|_α² = w^{2α} · T on [-T, T)
    let grid = Grid::new(10.0, 256).unwrap();
    let w = 2.0 * PI * 3.0 / 20.0;
    let u = GridFunction::from_scalar_fn(grid, |t| (w * t).cos()).unwrap();
    let (p, _) = seminorms(&u, order(0.5));
    assert!((p * p - w * 10.0).abs() <= 1e-12 * w * 10.0);
}

#[test]
fn near_one_the_derivative_is_classical() {
    let grid = Grid::new(20.0, 2048).unwrap();
    let u = GridFunction::from_scalar_fn(grid, |t| (-t * t).exp()).unwrap();
    let exact = GridFunction::from_scalar_fn(grid, |t| -2.0 * t * (-t * t).exp()).unwrap();
    for ext in [Extension::Periodic, Extension::default()] {
        let d = left_frac_derivative(&u, order(0.999), ext).unwrap();
        let err = d.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
        assert!(err <= 1e-2, "{ext:?}: {err:e}");
    }
    let spectral = first_derivative(&u);
    assert!(spectral.sub(&exact).unwrap().sup_norm() <= 1e-12);
}

#[test]
fn padded_output_keeps_the_heavy_tail() {
    let grid = Grid::new(20.0, 512).unwrap();
    let u = GridFunction::from_scalar_fn(grid, |t| (-t * t).exp()).unwrap();
    let big = apply_extended(&u, FracOperator::LeftDerivative, order(0.5), Extension::default()).unwrap();
    assert_eq!(big.grid().len(), Extension::DEFAULT_PADDING * 512);
    // Far to the right of the bump, D^α u(t) ≈ -α/Γ(1-α) ‖u‖₁ t^{-1-α}.
    let t = 60.0;
    let k = ((t + big.grid().half_width()) / big.grid().spacing()).round() as usize;
    let mass = PI.sqrt();
    let expect = -0.5 / PI.sqrt() * mass * t.powf(-1.5);
    let got = big.values()[k];
    assert!((got - expect).abs() <= 0.05 * expect.abs(), "{got} vs {expect}");
    assert!(quadrature(&big).unwrap().abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let u = GridFunction::new(Grid::new(3.0, 64).unwrap(), 1, values).unwrap();
        let back = inverse_transform(&forward_transform(&u));
        prop_assert!(back.sub(&u).unwrap().sup_norm() <= 1e-12 * (1.0 + u.sup_norm()));
    }

    #[test]
    fn discrete_parseval(values in prop::collection::vec(-10.0f64..10.0, 128)) {
        let u = GridFunction::new(Grid::new(5.0, 64).unwrap(), 2, values).unwrap();
        let e = forward_transform(&u).energy();
        let n = u.l2_norm().powi(2);
        prop_assert!((e - n).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn operators_are_linear(
        a in prop::collection::vec(-1.0f64..1.0, 64),
        b in prop::collection::vec(-1.0f64..1.0, 64),
        s in -3.0f64..3.0,
        alpha in 0.05f64..0.95,
    ) {
        let grid = Grid::new(4.0, 64).unwrap();
        let (u, v) = (GridFunction::new(grid, 1, a).unwrap(), GridFunction::new(grid, 1, b).unwrap());
        let alpha = order(alpha);
        let d = |w: &GridFunction| left_frac_derivative(w, alpha, Extension::Periodic).unwrap();
        let lhs = d(&u.add_scaled(s, &v).unwrap());
        let rhs = d(&u).add_scaled(s, &d(&v)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-11 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn left_and_right_derivatives_are_adjoint(
        a in prop::collection::vec(-1.0f64..1.0, 64),
        b in prop::collection::vec(-1.0f64..1.0, 64),
        alpha in 0.05f64..0.95,
    ) {
        let grid = Grid::new(4.0, 64).unwrap();
        let (u, v) = (GridFunction::new(grid, 1, a).unwrap(), GridFunction::new(grid, 1, b).unwrap());
        let alpha = order(alpha);
        let du = left_frac_derivative(&u, alpha, Extension::Periodic).unwrap();
        let dv = right_frac_derivative(&v, alpha, Extension::Periodic).unwrap();
        let (x, y) = (du.l2_inner(&v).unwrap(), u.l2_inner(&dv).unwrap());
        prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
    }

    #[test]
    fn band_limited_left_inverse(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        alpha in 0.05f64..0.95,
    ) {
        let u = band_limited(Grid::new(6.0, 128).unwrap(), 12, &coeffs);
        prop_assume!(u.l2_norm() > 1e-6);
        let a = order(alpha);
        let back = left_frac_integral(
            &left_frac_derivative(&u, a, Extension::Periodic).unwrap(), a, Extension::Periodic,
        ).unwrap();
        prop_assert!(back.sub(&u).unwrap().l2_norm() <= 1e-10 * u.l2_norm());
    }
}
