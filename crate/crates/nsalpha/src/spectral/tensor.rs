use num_complex::Complex64;

use super::field::{enforce_spectrum, scalar_forward, scalar_inverse, RealSamples, SpectralField};
use super::grid::TorusGrid;

/// Rank-2 tensor field stored spectrally. Entry `(i, j)` produced by
/// [`grad_tensor`] holds the coefficients of `d_j u_i`, i.e. the transpose
/// gradient `(grad ⊗ u)^T`, and [`TensorField::divergence`] contracts the
/// derivative index `j` so that `div(grad_tensor(u)) = Laplacian(u)`.
#[derive(Clone, Debug)]
pub struct TensorField {
    grid: TorusGrid,
    entries: [[Vec<Complex64>; 3]; 3],
}

impl TensorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let len = grid.point_count();
        Self {
            grid,
            entries: std::array::from_fn(|_| {
                std::array::from_fn(|_| vec![Complex64::default(); len])
            }),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Complex64] {
        &self.entries[i][j]
    }

    /// `(div T)_i = sum_j d_j T_ij`, as a spectral vector field.
    pub fn divergence(&self) -> SpectralField {
        let grid = self.grid;
        let mut out = SpectralField::zeros(grid);
        for (idx, z) in grid.iter_lattice() {
            if !grid.retained(z) || z == [0, 0, 0] {
                continue;
            }
            let k = grid.k_vec(z);
            for i in 0..3 {
                let mut acc = Complex64::default();
                for j in 0..3 {
                    acc += Complex64::new(0.0, k[j]) * self.entries[i][j][idx];
                }
                out.comp_mut(i)[idx] = acc;
            }
        }
        out
    }

    /// Collocation samples of every entry.
    pub fn to_physical(&self) -> [[RealSamples; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| scalar_inverse(&self.grid, &self.entries[i][j])))
    }

    /// Forward transform of physical entries, dealiased and symmetrized.
    /// Tensor entries may carry a nonzero mean (e.g. `A |grad u|^2` does); the
    /// mean is kept since divergence annihilates it anyway.
    pub fn from_physical(grid: TorusGrid, samples: &[[RealSamples; 3]; 3]) -> Self {
        let entries = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut coeffs = scalar_forward(&grid, &samples[i][j]);
                enforce_spectrum(&grid, &mut coeffs);
                coeffs
            })
        });
        Self { grid, entries }
    }
}

/// Transpose gradient `T_ij = d_j u_i`, exact Fourier multipliers `i k_j`.
pub fn grad_tensor(u: &SpectralField) -> TensorField {
    let grid = *u.grid();
    let mut out = TensorField::zeros(grid);
    for (idx, z) in grid.iter_lattice() {
        if !grid.retained(z) || z == [0, 0, 0] {
            continue;
        }
        let k = grid.k_vec(z);
        for i in 0..3 {
            let v = u.comp(i)[idx];
            for j in 0..3 {
                out.entries[i][j][idx] = Complex64::new(0.0, k[j]) * v;
            }
        }
    }
    out
}

/// `Laplacian(u)`: multiplier `-|k|^2`.
pub fn laplacian(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    out.apply_multiplier(|ksq| -ksq);
    out
}

/// Dealiased spectral tensor of the pointwise outer product
/// `T_ij(x) = a_i(x) b_j(x)` of two sets of collocation samples.
pub fn outer_product(grid: TorusGrid, a: &[RealSamples; 3], b: &[RealSamples; 3]) -> TensorField {
    let len = grid.point_count();
    let samples: [[RealSamples; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..len).map(|p| a[i][p] * b[j][p]).collect())
    });
    TensorField::from_physical(grid, &samples)
}
