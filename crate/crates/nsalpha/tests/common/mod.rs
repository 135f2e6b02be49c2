//! Shared test-only machinery: a dense direct solver for the filter equation,
//! independent of the conjugate-gradient path it checks.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use nsalpha::filter::{apply_filter_operator, FilterProblem};
use nsalpha::spectral::{SolenoidalField, SpectralField, TorusGrid};

/// Real orthonormal basis of the retained divergence-free subspace: for every
/// lexicographically positive mode `z`, two unit tangents `e ⊥ k` each with a
/// real and an imaginary phase, normalized so `||b||_{L^2} = 1`.
pub fn solenoidal_basis(grid: TorusGrid) -> Vec<SolenoidalField> {
    let mut out = Vec::new();
    let norm = 1.0 / (2.0 * grid.l().powi(3)).sqrt();
    for z in grid.half_spectrum() {
        let k = grid.k_vec(z);
        let k3 = Vector3::new(k[0], k[1], k[2]);
        let helper = if z[1] == 0 && z[2] == 0 {
            Vector3::y()
        } else {
            Vector3::x()
        };
        let e1 = k3.cross(&helper).normalize();
        let e2 = k3.cross(&e1).normalize();
        for e in [e1, e2] {
            for phase in [Complex64::new(norm, 0.0), Complex64::new(0.0, norm)] {
                let mut f = SpectralField::zeros(grid);
                f.set_mode_pair(z, [phase * e[0], phase * e[1], phase * e[2]]);
                let b = SolenoidalField::validated(f).expect("basis fields are solenoidal");
                out.push(b);
            }
        }
    }
    out
}

/// Assemble the frozen-coefficient operator on the solenoidal basis and solve
/// the projected linear system by dense LU factorization.
pub fn dense_filter_solve(
    problem: &FilterProblem,
    coeff: &[f64],
    u: &SolenoidalField,
) -> SolenoidalField {
    let grid = problem.grid;
    let basis = solenoidal_basis(grid);
    let n = basis.len();
    let images: Vec<SolenoidalField> = basis
        .iter()
        .map(|b| apply_filter_operator(problem, coeff, b))
        .collect();
    let matrix = DMatrix::from_fn(n, n, |p, q| images[q].field().inner(basis[p].field()));
    let rhs = DVector::from_fn(n, |p, _| u.field().inner(basis[p].field()));
    let sol = matrix
        .lu()
        .solve(&rhs)
        .expect("operator is positive definite on the solenoidal subspace");
    let mut out = SolenoidalField::zeros(grid);
    for (q, b) in basis.iter().enumerate() {
        out.axpy(sol[q], b);
    }
    out
}
