use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fft::fft3;
use super::grid::TorusGrid;
use super::DIVERGENCE_TOL;

pub type RealSamples = Vec<f64>;

pub(crate) fn scalar_inverse(grid: &TorusGrid, coeffs: &[Complex64]) -> RealSamples {
    let n = grid.n();
    let mut buf = coeffs.to_vec();
    fft3(&mut buf, n, false);
    buf.iter().map(|c| c.re).collect()
}

pub(crate) fn scalar_forward(grid: &TorusGrid, samples: &[f64]) -> Vec<Complex64> {
    let n = grid.n();
    assert_eq!(samples.len(), grid.point_count(), "sample count mismatch");
    let mut buf: Vec<Complex64> = samples.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft3(&mut buf, n, true);
    let scale = 1.0 / grid.point_count() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Dealias mask + Hermitian symmetrization on a raw coefficient array.
/// Does not touch the mean; vector fields pin it separately.
pub(crate) fn enforce_spectrum(grid: &TorusGrid, coeffs: &mut [Complex64]) {
    for (idx, z) in grid.iter_lattice() {
        if !grid.retained(z) {
            coeffs[idx] = Complex64::default();
        }
    }
    for (idx, z) in grid.iter_lattice() {
        if !grid.retained(z) || z == [0, 0, 0] {
            continue;
        }
        let cidx = grid.index_of([-z[0], -z[1], -z[2]]);
        if idx < cidx {
            let h = 0.5 * (coeffs[idx] + coeffs[cidx].conj());
            coeffs[idx] = h;
            coeffs[cidx] = h.conj();
        }
    }
}

/// Zero-mean real vector field on the torus, stored spectrally.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    comps: [Vec<Complex64>; 3],
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let len = grid.point_count();
        Self {
            grid,
            comps: std::array::from_fn(|_| vec![Complex64::default(); len]),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn comp(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }

    pub fn mode(&self, z: [i32; 3]) -> [Complex64; 3] {
        let idx = self.grid.index_of(z);
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// Set the coefficient at `z` and its conjugate partner at `-z`.
    pub fn set_mode_pair(&mut self, z: [i32; 3], value: [Complex64; 3]) {
        assert!(self.grid.retained(z), "mode {z:?} outside retained cube");
        assert!(z != [0, 0, 0], "zero mode is pinned to 0");
        let idx = self.grid.index_of(z);
        let cidx = self.grid.index_of([-z[0], -z[1], -z[2]]);
        for c in 0..3 {
            self.comps[c][idx] = value[c];
            self.comps[c][cidx] = value[c].conj();
        }
    }

    /// Re-impose the representation invariants: dealias cube, zero mean,
    /// Hermitian symmetry. Warns if a nonneglible mean had crept in.
    pub fn enforce(&mut self) {
        let rms = self.coeff_rms();
        for comp in &mut self.comps {
            let mean = comp[0];
            if mean.norm() > 1e-12 * rms.max(1e-300) {
                eprintln!(
                    "warning: zero mode re-pinned (|u_hat_0| = {:.3e}, rms = {:.3e})",
                    mean.norm(),
                    rms
                );
            }
            comp[0] = Complex64::default();
        }
        for comp in &mut self.comps {
            enforce_spectrum(&self.grid, comp);
        }
    }

    fn coeff_rms(&self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum();
        s.sqrt()
    }

    // ---- algebra ----------------------------------------------------------

    pub fn scale(&mut self, a: f64) {
        for comp in &mut self.comps {
            for v in comp.iter_mut() {
                *v *= a;
            }
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for c in 0..3 {
            for (s, o) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *s += a * o;
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Multiply every retained mode by the real symbol `f(|k|^2)`.
    pub fn apply_multiplier(&mut self, f: impl Fn(f64) -> f64) {
        let grid = self.grid;
        for (idx, z) in grid.iter_lattice() {
            if z == [0, 0, 0] || !grid.retained(z) {
                continue;
            }
            let m = f(grid.k_sq(z));
            for c in 0..3 {
                self.comps[c][idx] *= m;
            }
        }
    }

    // ---- inner products and norms ----------------------------------------

    /// `L^2` inner product `int u . v dx = L^3 sum_k u_hat_k . conj(v_hat_k)`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let mut acc = 0.0;
        for c in 0..3 {
            for (a, b) in self.comps[c].iter().zip(&other.comps[c]) {
                acc += (a * b.conj()).re;
            }
        }
        acc * self.grid.l().powi(3)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum();
        s * self.grid.l().powi(3)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Homogeneous Sobolev norm squared `L^3 sum |k|^{2s} |u_hat_k|^2`
    /// (the zero mode is excluded; it is pinned to 0 anyway).
    pub fn hdot_norm_sq(&self, s: f64) -> f64 {
        self.weighted_norm_sq(|ksq| ksq.powf(s))
    }

    pub fn hdot_norm(&self, s: f64) -> f64 {
        self.hdot_norm_sq(s).sqrt()
    }

    /// Non-homogeneous Sobolev norm squared `L^3 sum (1+|k|^2)^s |u_hat_k|^2`.
    pub fn h_norm_sq(&self, s: f64) -> f64 {
        self.weighted_norm_sq(|ksq| (1.0 + ksq).powf(s))
    }

    pub fn h_norm(&self, s: f64) -> f64 {
        self.h_norm_sq(s).sqrt()
    }

    fn weighted_norm_sq(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let grid = self.grid;
        let mut acc = 0.0;
        for (idx, z) in grid.iter_lattice() {
            if z == [0, 0, 0] {
                continue;
            }
            let w = weight(grid.k_sq(z));
            let m: f64 = (0..3).map(|c| self.comps[c][idx].norm_sqr()).sum();
            acc += w * m;
        }
        acc * grid.l().powi(3)
    }

    // ---- transforms -------------------------------------------------------

    /// Collocation samples on the `N^3` grid, one array per component.
    pub fn to_physical(&self) -> [RealSamples; 3] {
        [0, 1, 2].map(|c| scalar_inverse(&self.grid, &self.comps[c]))
    }

    /// Forward transform of real collocation samples; the result is dealiased,
    /// zero-mean and Hermitian by construction.
    pub fn from_physical(grid: TorusGrid, samples: &[RealSamples; 3]) -> Self {
        let comps = [0, 1, 2].map(|c| scalar_forward(&grid, &samples[c]));
        let mut out = Self { grid, comps };
        out.enforce();
        out
    }

    /// Largest pointwise Euclidean norm `max_x |u(x)|` on the collocation grid.
    pub fn max_pointwise_norm(&self) -> f64 {
        let phys = self.to_physical();
        let mut best = 0.0_f64;
        for j in 0..self.grid.point_count() {
            let m = phys[0][j] * phys[0][j] + phys[1][j] * phys[1][j] + phys[2][j] * phys[2][j];
            best = best.max(m);
        }
        best.sqrt()
    }

    // ---- Leray decomposition ----------------------------------------------

    /// Orthogonal projection onto divergence-free fields:
    /// `u_hat_k - (u_hat_k . k / |k|^2) k`, exact per mode.
    pub fn leray_project(&self) -> SolenoidalField {
        let mut out = self.clone();
        let grid = out.grid;
        for (idx, z) in grid.iter_lattice() {
            if z == [0, 0, 0] {
                for c in 0..3 {
                    out.comps[c][idx] = Complex64::default();
                }
                continue;
            }
            if !grid.retained(z) {
                continue;
            }
            let k = grid.k_vec(z);
            let ksq = grid.k_sq(z);
            let dot = out.comps[0][idx] * k[0] + out.comps[1][idx] * k[1] + out.comps[2][idx] * k[2];
            for c in 0..3 {
                out.comps[c][idx] -= dot * (k[c] / ksq);
            }
        }
        SolenoidalField { field: out }
    }

    /// `max_k |k . u_hat_k|` relative to the largest retained wavenumber times
    /// the coefficient rms. Zero (to round-off) for Leray-projected fields.
    pub fn divergence_residual(&self) -> f64 {
        let grid = self.grid;
        let scale = grid.k_unit() * (grid.kmax() as f64) * 3f64.sqrt() * self.coeff_rms();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for (idx, z) in grid.iter_lattice() {
            if z == [0, 0, 0] {
                continue;
            }
            let k = grid.k_vec(z);
            let dot =
                self.comps[0][idx] * k[0] + self.comps[1][idx] * k[1] + self.comps[2][idx] * k[2];
            worst = worst.max(dot.norm());
        }
        worst / scale
    }
}

/// Divergence-free zero-mean field. Constructed by Leray projection or by
/// validating an existing field; closed under the linear operations below.
#[derive(Clone, Debug, PartialEq)]
pub struct SolenoidalField {
    field: SpectralField,
}

impl std::ops::Deref for SolenoidalField {
    type Target = SpectralField;

    fn deref(&self) -> &SpectralField {
        &self.field
    }
}

impl SolenoidalField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            field: SpectralField::zeros(grid),
        }
    }

    /// Accept a field as solenoidal if its relative divergence residual is
    /// within [`DIVERGENCE_TOL`].
    pub fn validated(field: SpectralField) -> Result<Self, f64> {
        let r = field.divergence_residual();
        if r <= DIVERGENCE_TOL {
            Ok(Self { field })
        } else {
            Err(r)
        }
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn into_field(self) -> SpectralField {
        self.field
    }

    pub fn scale(&mut self, a: f64) {
        self.field.scale(a);
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.field.axpy(a, &other.field);
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            field: self.field.add(&other.field),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            field: self.field.sub(&other.field),
        }
    }

    /// Real Fourier multipliers preserve the divergence-free constraint.
    pub fn apply_multiplier(&mut self, f: impl Fn(f64) -> f64) {
        self.field.apply_multiplier(f);
    }

    /// Reproducible random divergence-free field with coefficient envelope
    /// `|u_hat_k| ~ |k|^slope`, normalized to unit `L^2` norm.
    pub fn random(grid: TorusGrid, seed: u64, slope: f64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut field = SpectralField::zeros(grid);
        for z in grid.half_spectrum() {
            let kn = grid.k_sq(z).sqrt();
            let env = kn.powf(slope);
            let mut v = [Complex64::default(); 3];
            for comp in &mut v {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *comp = Complex64::new(re, im) * env;
            }
            field.set_mode_pair(z, v);
        }
        let mut out = field.leray_project();
        let norm = out.l2_norm();
        if norm > 0.0 {
            out.scale(1.0 / norm);
        }
        out
    }
}

/// Zero-mean real scalar field on the torus (pressure, test scalars).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.point_count()],
        }
    }

    pub fn from_coeffs(grid: TorusGrid, mut coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.point_count());
        coeffs[0] = Complex64::default();
        enforce_spectrum(&grid, &mut coeffs);
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mode(&self, z: [i32; 3]) -> Complex64 {
        self.coeffs[self.grid.index_of(z)]
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|v| v.norm_sqr()).sum();
        s * self.grid.l().powi(3)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn to_physical(&self) -> RealSamples {
        scalar_inverse(&self.grid, &self.coeffs)
    }

    /// Gradient as a vector field: `(grad p)_hat = i k p_hat`.
    pub fn gradient(&self) -> SpectralField {
        let grid = self.grid;
        let mut out = SpectralField::zeros(grid);
        for (idx, z) in grid.iter_lattice() {
            if !grid.retained(z) {
                continue;
            }
            let k = grid.k_vec(z);
            let v = self.coeffs[idx];
            for c in 0..3 {
                out.comps[c][idx] = Complex64::new(0.0, k[c]) * v;
            }
        }
        out
    }
}
