//! Verification of the a-priori estimates satisfied by the filter solver.
//!
//! Each check separates the explicit constant chain (computable from `alpha`,
//! `beta`, the indicator Lipschitz data and the mollifier norms) from a single
//! scalar fudge factor standing in for the generic constants the estimates
//! suppress. The fudge factors below were fitted once on the calibration seed
//! set (seeds 9000..9020, N = 8, L = 2*pi, slope -1 data) and are frozen;
//! every other seed must respect the frozen bound. The `calibrate_*` tests
//! (run with `--ignored`) re-print the fitted maxima.

use super::{solve_filter_default, FilterError, FilterProblem, FilterSolution, IndicatorKind};
use crate::spectral::SolenoidalField;

/// Fitted generic constant of the H^2 regularity bound.
/// Calibration maximum of measured/explicit was 4.05e-3; frozen with headroom.
pub const H2_BOUND_FUDGE: f64 = 0.05;

/// Fitted generic constant of the H^2 continuous-dependence bound.
/// Calibration maximum of measured/explicit was 2.69e-6; frozen with headroom.
pub const H2_DEPENDENCE_FUDGE: f64 = 3e-5;

/// Relative slack granted to every verified inequality.
pub const VERIFY_REL_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    pub measured: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl BoundReport {
    fn check(measured: f64, bound: f64) -> Self {
        Self {
            measured,
            bound,
            satisfied: measured <= bound * (1.0 + VERIFY_REL_SLACK) + VERIFY_REL_SLACK,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DependenceReport {
    /// Norm of the solution difference in the estimate's norm.
    pub difference_norm: f64,
    /// `difference_norm` divided by the data factor of the estimate.
    pub measured_ratio: f64,
    pub analytic_constant: f64,
    pub satisfied: bool,
}

/// `||u_alpha||_{H^1}^2 <= ||u||_{L^2}^2 / (2 min(alpha^2 beta, 1/2))`,
/// the sharp form of the existence bound.
pub fn verify_h1_bound(
    problem: &FilterProblem,
    u: &SolenoidalField,
    solution: &FilterSolution,
) -> BoundReport {
    let datum = u.l2_norm_sq();
    let bound = 1.0 / (2.0 * (problem.alpha * problem.alpha * problem.indicator.beta).min(0.5));
    if datum == 0.0 {
        return BoundReport {
            measured: 0.0,
            bound,
            satisfied: true,
        };
    }
    BoundReport::check(solution.u_alpha.h_norm_sq(1.0) / datum, bound)
}

/// Data factor `alpha^2 C ||phi||-style` of the H^1 dependence constant; the
/// pointwise indicators pick up `||phi||_{L^2}` through the sup bound on
/// `phi * (u1 - u2)`, the global-energy indicator is Lipschitz from `L^2`
/// directly and needs no mollifier norm.
fn h1_dependence_factor(problem: &FilterProblem) -> Result<f64, FilterError> {
    let c_a = problem.indicator.lipschitz();
    match problem.indicator.kind {
        IndicatorKind::GlobalEnergy { .. } => Ok(c_a),
        _ => {
            let phi_l2 = problem
                .mollifier
                .phi_l2_sq(problem.grid.l())
                .ok_or(FilterError::CutoffRequired("verify_h1_continuous_dependence"))?
                .sqrt();
            Ok(c_a * phi_l2)
        }
    }
}

/// `||u_{1,alpha} - u_{2,alpha}||_{H^1} <= K1 (||u2||_{L^2} + 1) ||u1 - u2||_{L^2}`
/// with the proof-exact `K1 = max(alpha^2 C_A ||phi||_{L^2} sqrt(K0), 1) / min(alpha^2 beta, 1)`.
pub fn verify_h1_continuous_dependence(
    problem: &FilterProblem,
    u1: &SolenoidalField,
    u2: &SolenoidalField,
) -> Result<DependenceReport, FilterError> {
    if matches!(problem.mollifier, super::MollifierSpec::None) {
        return Err(FilterError::CutoffRequired("verify_h1_continuous_dependence"));
    }
    let s1 = solve_filter_default(problem, u1)?;
    let s2 = solve_filter_default(problem, u2)?;
    let difference_norm = s1.u_alpha.sub(&s2.u_alpha).h_norm(1.0);

    let k0 = 1.0 / (2.0 * (problem.alpha * problem.alpha * problem.indicator.beta).min(0.5));
    let c_ab = problem.coercivity();
    let a2 = problem.alpha * problem.alpha;
    let k1 = (a2 * h1_dependence_factor(problem)? * k0.sqrt()).max(1.0) / c_ab;

    let denom = (u2.l2_norm() + 1.0) * u1.sub(u2).l2_norm();
    let (measured_ratio, satisfied) = ratio_check(difference_norm, denom, k1);
    Ok(DependenceReport {
        difference_norm,
        measured_ratio,
        analytic_constant: k1,
        satisfied,
    })
}

/// `||u_alpha||_{H^2} <= fudge * max(alpha^2 sqrt(K0) ||grad A||_inf ||phi||_{H^1}, 1)
///  / min(alpha^2 beta, 1) * (||u||_{L^2} + 1) ||u||_{L^2}`.
pub fn verify_h2_bound(
    problem: &FilterProblem,
    u: &SolenoidalField,
    solution: &FilterSolution,
) -> Result<BoundReport, FilterError> {
    problem
        .indicator
        .gradient_lipschitz()
        .ok_or(FilterError::GradientDataRequired("verify_h2_bound"))?;
    let phi_h1 = problem
        .mollifier
        .phi_h1_sq(problem.grid.l())
        .ok_or(FilterError::CutoffRequired("verify_h2_bound"))?
        .sqrt();
    let k0 = 1.0 / (2.0 * (problem.alpha * problem.alpha * problem.indicator.beta).min(0.5));
    let c_ab = problem.coercivity();
    let a2 = problem.alpha * problem.alpha;
    let grad_a_sup = problem.indicator.lipschitz();
    let datum = u.l2_norm();
    let explicit = (a2 * k0.sqrt() * grad_a_sup * phi_h1).max(1.0) / c_ab * (datum + 1.0) * datum;
    Ok(BoundReport::check(
        solution.u_alpha.h_norm(2.0),
        H2_BOUND_FUDGE * explicit,
    ))
}

/// `||u_{1,alpha} - u_{2,alpha}||_{H^2} <= fudge * K3 (||u1|| + ||u2|| + 1)^2 ||u1 - u2||_{L^2}`
/// with `K3` assembled exactly as in the constants ledger.
pub fn verify_h2_continuous_dependence(
    problem: &FilterProblem,
    u1: &SolenoidalField,
    u2: &SolenoidalField,
) -> Result<DependenceReport, FilterError> {
    let c_a_prime = problem
        .indicator
        .gradient_lipschitz()
        .ok_or(FilterError::GradientDataRequired("verify_h2_continuous_dependence"))?;
    let l = problem.grid.l();
    let phi_l2 = problem
        .mollifier
        .phi_l2_sq(l)
        .ok_or(FilterError::CutoffRequired("verify_h2_continuous_dependence"))?
        .sqrt();
    let phi_h1 = problem.mollifier.phi_h1_sq(l).unwrap().sqrt();

    let params = crate::constants::ModelParams {
        alpha: problem.alpha,
        beta: problem.indicator.beta,
        nu: 1.0,
        l,
        phi_l2,
        phi_h1,
        c_a: problem.indicator.lipschitz(),
        c_a_prime,
        f_hminus1: 0.0,
        u0_l2: 0.0,
        t_horizon: 1.0,
        f_l2: None,
        kappa0: None,
    };
    let k3 = crate::constants::compute_chain(&params)
        .expect("filter problem data yields valid chain parameters")
        .k3;

    let s1 = solve_filter_default(problem, u1)?;
    let s2 = solve_filter_default(problem, u2)?;
    let difference_norm = s1.u_alpha.sub(&s2.u_alpha).h_norm(2.0);
    let denom = (u1.l2_norm() + u2.l2_norm() + 1.0).powi(2) * u1.sub(u2).l2_norm();
    let constant = H2_DEPENDENCE_FUDGE * k3;
    let (measured_ratio, satisfied) = ratio_check(difference_norm, denom, constant);
    Ok(DependenceReport {
        difference_norm,
        measured_ratio,
        analytic_constant: constant,
        satisfied,
    })
}

fn ratio_check(norm: f64, denom: f64, constant: f64) -> (f64, bool) {
    if denom == 0.0 {
        // identical data: difference must vanish to solver precision
        return (0.0, norm <= 1e-9);
    }
    let ratio = norm / denom;
    (
        ratio,
        norm <= constant * denom * (1.0 + VERIFY_REL_SLACK) + VERIFY_REL_SLACK,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{helmholtz_filter_exact, IndicatorSpec, MollifierSpec};
    use crate::spectral::{SpectralField, TorusGrid};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid8() -> TorusGrid {
        TorusGrid::new(8, 2.0 * PI).unwrap()
    }

    fn problem(grid: TorusGrid, alpha: f64, beta: f64) -> FilterProblem {
        FilterProblem::new(
            grid,
            alpha,
            IndicatorSpec::smooth_local(beta, 1.0),
            MollifierSpec::Cutoff { kappa: 2.0 },
        )
        .unwrap()
    }

    fn helmholtz(grid: TorusGrid, alpha: f64) -> FilterProblem {
        FilterProblem::new(
            grid,
            alpha,
            IndicatorSpec::constant_one(),
            MollifierSpec::Cutoff { kappa: 2.0 },
        )
        .unwrap()
    }

    #[test]
    fn h1_bound_exact_for_helmholtz_unit_alpha() {
        let grid = grid8();
        let p = helmholtz(grid, 1.0);
        let u = SolenoidalField::random(grid, 1, -1.0);
        let sol = solve_filter_default(&p, &u).unwrap();
        let rep = verify_h1_bound(&p, &u, &sol);
        // symbol calculus: ratio <= 1 <= bound = 1
        assert!(rep.measured <= 1.0 + 1e-12);
        assert!((rep.bound - 1.0).abs() < 1e-15);
        assert!(rep.satisfied);
    }

    #[test]
    fn h1_bound_sweep_no_violations() {
        let grid = grid8();
        for i in 0..100 {
            let alpha = 0.1 + 1.9 * (i as f64 * 0.618).fract();
            let beta = 0.1 + 0.8 * (i as f64 * 0.382).fract();
            let p = problem(grid, alpha, beta);
            let u = SolenoidalField::random(grid, 1000 + i, -1.0);
            let sol = solve_filter_default(&p, &u).unwrap();
            let rep = verify_h1_bound(&p, &u, &sol);
            assert!(rep.satisfied, "alpha={alpha} beta={beta}: {rep:?}");
        }
    }

    #[test]
    fn h1_bound_scales_with_alpha() {
        // bound = 1/(2 alpha^2 beta) once alpha^2 beta < 1/2; the measured
        // ratio stays below it along the sweep.
        let grid = grid8();
        let u = SolenoidalField::random(grid, 17, -1.0);
        let beta = 0.5;
        for alpha in [1.0, 0.5, 0.25] {
            let p = problem(grid, alpha, beta);
            let sol = solve_filter_default(&p, &u).unwrap();
            let rep = verify_h1_bound(&p, &u, &sol);
            let expected = 1.0 / (2.0 * (alpha * alpha * beta).min(0.5));
            assert!((rep.bound - expected).abs() < 1e-13);
            assert!(rep.satisfied);
        }
    }

    #[test]
    fn h1_dependence_trivial_cases() {
        let grid = grid8();
        let p = problem(grid, 0.9, 0.4);
        let u = SolenoidalField::random(grid, 3, -1.0);
        let rep = verify_h1_continuous_dependence(&p, &u, &u).unwrap();
        assert_eq!(rep.measured_ratio, 0.0);
        assert!(rep.satisfied);

        // A = 1: the difference solves the Helmholtz problem on u1 - u2 and
        // the H^1/L^2 ratio is at most 1.
        let ph = helmholtz(grid, 1.0);
        let u2 = SolenoidalField::random(grid, 4, -1.0);
        let rep = verify_h1_continuous_dependence(&ph, &u, &u2).unwrap();
        let raw = rep.difference_norm / u.sub(&u2).l2_norm();
        assert!(raw <= 1.0 + 1e-10);
        assert!(rep.satisfied);
    }

    #[test]
    fn h1_dependence_sweep_no_violations() {
        let grid = grid8();
        for i in 0..100 {
            let alpha = 0.2 + 1.5 * (i as f64 * 0.37).fract();
            let beta = 0.15 + 0.7 * (i as f64 * 0.71).fract();
            let p = problem(grid, alpha, beta);
            let u1 = SolenoidalField::random(grid, 2000 + i, -1.0);
            let u2 = SolenoidalField::random(grid, 3000 + i, -1.0);
            let rep = verify_h1_continuous_dependence(&p, &u1, &u2).unwrap();
            assert!(
                rep.satisfied,
                "alpha={alpha} beta={beta}: ratio {} vs {}",
                rep.measured_ratio, rep.analytic_constant
            );
        }
    }

    #[test]
    fn h2_single_mode_closed_form() {
        // A = 1, single mode k: ||u_alpha||_{H^2} = ||u|| (1+|k|^2)/(1+alpha^2 |k|^2)
        let grid = grid8();
        let alpha = 0.6;
        let p = helmholtz(grid, alpha);
        let mut f = SpectralField::zeros(grid);
        f.set_mode_pair(
            [0, 0, 2],
            [
                Complex64::new(0.4, 0.1),
                Complex64::new(-0.2, 0.3),
                Complex64::default(),
            ],
        );
        let u = f.leray_project();
        let sol = solve_filter_default(&p, &u).unwrap();
        let ksq = 4.0;
        let expected = u.l2_norm() * (1.0 + ksq) / (1.0 + alpha * alpha * ksq);
        assert!((sol.u_alpha.h_norm(2.0) - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn h2_bound_finite_and_satisfied_on_smooth_data() {
        let grid = grid8();
        let p = problem(grid, 0.7, 0.3);
        for seed in 0..20 {
            let u = SolenoidalField::random(grid, 4000 + seed, -2.0);
            let sol = solve_filter_default(&p, &u).unwrap();
            assert!(sol.residual <= FilterProblem::DEFAULT_TOL * u.l2_norm());
            let rep = verify_h2_bound(&p, &u, &sol).unwrap();
            assert!(rep.measured.is_finite());
            assert!(rep.satisfied, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn h2_bound_tracks_mollifier_norm() {
        let grid = grid8();
        let u = SolenoidalField::random(grid, 50, -2.0);
        let mut bounds = Vec::new();
        for kappa in [2.0, 4.0] {
            let p = FilterProblem::new(
                grid,
                0.7,
                IndicatorSpec::smooth_local(0.3, 1.0),
                MollifierSpec::Cutoff { kappa },
            )
            .unwrap();
            let sol = solve_filter_default(&p, &u).unwrap();
            let rep = verify_h2_bound(&p, &u, &sol).unwrap();
            assert!(rep.satisfied);
            bounds.push(rep.bound);
        }
        // ||phi||_{H^1} grows with kappa, and with it the analytic bound
        assert!(bounds[1] > bounds[0]);
    }

    #[test]
    fn h2_dependence_trivial_and_sweep() {
        let grid = grid8();
        let p = problem(grid, 0.8, 0.35);
        let u = SolenoidalField::random(grid, 60, -2.0);
        let rep = verify_h2_continuous_dependence(&p, &u, &u).unwrap();
        assert!(rep.satisfied);

        // A = 1 reduces to the linear case; the Helmholtz symbol bounds the
        // H^2/L^2 ratio of the difference by max_k (1+k^2)/(1+alpha^2 k^2).
        let ph = helmholtz(grid, 1.0);
        let u2 = SolenoidalField::random(grid, 61, -2.0);
        let s1 = solve_filter_default(&ph, &u).unwrap();
        let s2 = solve_filter_default(&ph, &u2).unwrap();
        let diff = s1.u_alpha.sub(&s2.u_alpha);
        let helm_diff = helmholtz_filter_exact(1.0, &u.sub(&u2));
        assert!(diff.sub(&helm_diff).h_norm(2.0) <= 1e-9);

        for i in 0..50 {
            let u1 = SolenoidalField::random(grid, 5000 + i, -2.0);
            let u2 = SolenoidalField::random(grid, 6000 + i, -2.0);
            let rep = verify_h2_continuous_dependence(&p, &u1, &u2).unwrap();
            assert!(
                rep.satisfied,
                "seed {i}: ratio {} vs {}",
                rep.measured_ratio, rep.analytic_constant
            );
        }
    }

    /// Fitting procedure for the frozen fudge factors. Prints the maxima of
    /// measured/explicit over the calibration seeds.
    #[test]
    #[ignore]
    fn calibrate_h2_fudges() {
        let grid = grid8();
        let mut worst_bound = 0.0_f64;
        let mut worst_dep = 0.0_f64;
        for i in 0..20 {
            for (alpha, beta) in [(0.5, 0.25), (0.8, 0.35), (1.2, 0.6), (0.3, 0.15)] {
                let p = problem(grid, alpha, beta);
                let u1 = SolenoidalField::random(grid, 9000 + i, -1.0);
                let u2 = SolenoidalField::random(grid, 9100 + i, -1.0);
                let s1 = solve_filter_default(&p, &u1).unwrap();
                let rep = verify_h2_bound(&p, &u1, &s1).unwrap();
                worst_bound = worst_bound.max(rep.measured / (rep.bound / H2_BOUND_FUDGE));
                let dep = verify_h2_continuous_dependence(&p, &u1, &u2).unwrap();
                worst_dep = worst_dep
                    .max(dep.measured_ratio / (dep.analytic_constant / H2_DEPENDENCE_FUDGE));
            }
        }
        println!("h2 bound measured/explicit max:      {worst_bound:.6e}");
        println!("h2 dependence measured/explicit max: {worst_dep:.6e}");
    }
}
