//! Property tests over randomized fields and parameters: the structural
//! invariants that must hold for every input, not just the hand-picked ones.

use proptest::prelude::*;

use nsalpha::evolution::heat_semigroup;
use nsalpha::filter::{
    solve_filter_default, verify_h1_bound, FilterProblem, IndicatorSpec, MollifierSpec,
};
use nsalpha::io::{read_snapshot, write_snapshot};
use nsalpha::spectral::{SolenoidalField, TorusGrid, DIVERGENCE_TOL};

fn grid() -> TorusGrid {
    TorusGrid::new(8, 2.0 * std::f64::consts::PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Leray projection: idempotent, norm-nonincreasing, Pythagoras.
    #[test]
    fn leray_projection_structure(seed in 0u64..1000, slope in -2.0f64..0.0) {
        let grid = grid();
        let u = SolenoidalField::random(grid, seed, slope);
        let again = u.field().leray_project();
        prop_assert!(again.sub(&u).l2_norm() <= 1e-12 * u.l2_norm());
        prop_assert!(u.divergence_residual() <= DIVERGENCE_TOL);

        // mix in a gradient and split
        let w = SolenoidalField::random(grid, seed ^ 0xabcd, slope).into_field();
        let mixed = u.field().add(&w);
        let p = mixed.leray_project();
        let q = mixed.sub(p.field());
        let lhs = p.l2_norm_sq() + q.l2_norm_sq();
        prop_assert!((lhs - mixed.l2_norm_sq()).abs() <= 1e-12 * mixed.l2_norm_sq());
        prop_assert!(p.l2_norm() <= mixed.l2_norm() * (1.0 + 1e-13));
    }

    /// Poincare inequality with constant L / (2 pi) on every generated field.
    #[test]
    fn poincare_holds(seed in 0u64..1000, slope in -2.0f64..0.5) {
        let grid = grid();
        let u = SolenoidalField::random(grid, seed, slope);
        let rhs = grid.l() / (2.0 * std::f64::consts::PI) * u.hdot_norm(1.0);
        prop_assert!(u.l2_norm() <= rhs * (1.0 + 1e-12));
    }

    /// Physical/spectral round trip is the identity on dealiased fields.
    #[test]
    fn transform_round_trip(seed in 0u64..1000, slope in -2.0f64..0.0) {
        let grid = grid();
        let u = SolenoidalField::random(grid, seed, slope);
        let back = nsalpha::spectral::SpectralField::from_physical(grid, &u.to_physical());
        prop_assert!(back.sub(u.field()).l2_norm() <= 1e-12 * u.l2_norm());
    }

    /// Filter solve: L^2 contraction, divergence-free output, residual within
    /// tolerance and the sharp H^1 bound, across the (alpha, beta) range.
    #[test]
    fn filter_solve_invariants(
        seed in 0u64..500,
        alpha in 0.1f64..2.0,
        beta in 0.1f64..0.9,
    ) {
        let grid = grid();
        let problem = FilterProblem::new(
            grid,
            alpha,
            IndicatorSpec::smooth_local(beta, 0.7),
            MollifierSpec::Cutoff { kappa: 2.0 },
        ).unwrap();
        let u = SolenoidalField::random(grid, seed, -1.0);
        let sol = solve_filter_default(&problem, &u).unwrap();
        prop_assert!(sol.residual <= FilterProblem::DEFAULT_TOL * u.l2_norm());
        prop_assert!(sol.u_alpha.l2_norm() <= u.l2_norm() * (1.0 + 1e-8));
        prop_assert!(sol.u_alpha.divergence_residual() <= DIVERGENCE_TOL);
        prop_assert!(sol.coefficient_field.iter().all(|&a| a >= beta && a <= 1.0));
        let rep = verify_h1_bound(&problem, &u, &sol);
        prop_assert!(rep.satisfied, "H1 bound: {} > {}", rep.measured, rep.bound);
    }

    /// Heat semigroup property e^{s} e^{t} = e^{s+t} for random splits.
    #[test]
    fn heat_semigroup_composes(seed in 0u64..500, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let grid = grid();
        let u = SolenoidalField::random(grid, seed, -1.0);
        let nu = 0.7;
        let two = heat_semigroup(&heat_semigroup(&u, s, nu), t, nu);
        let one = heat_semigroup(&u, s + t, nu);
        prop_assert!(two.sub(&one).l2_norm() <= 1e-12 * one.l2_norm().max(1e-30));
    }

    /// Snapshot round trips preserve every coefficient bit.
    #[test]
    fn snapshot_round_trip(seed in 0u64..1000, t in 0.0f64..10.0) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.snap");
        let grid = grid();
        let u = SolenoidalField::random(grid, seed, -1.0);
        write_snapshot(u.field(), t, &path).unwrap();
        let (back, t2) = read_snapshot(&path).unwrap();
        prop_assert_eq!(t2, t);
        prop_assert_eq!(&back, u.field());
    }
}
