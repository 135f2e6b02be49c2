//! Fourier representation of zero-mean periodic vector fields on the 3-torus
//! `[0,L]^3`.
//!
//! A field is stored by its Fourier coefficients `u_hat_k` on the integer
//! lattice `k = (2*pi/L) z`, `z` in `Z^3`, with the conventions
//!
//! ```text
//! u(x)     = sum_k  u_hat_k e^{i k.x},
//! u_hat_k  = (1/L^3) int_T3 e^{-i k.x} u(x) dx,
//! ```
//!
//! so that Parseval reads `||u||_{L^2}^2 = L^3 sum_k |u_hat_k|^2` and the
//! homogeneous Sobolev norms are `||u||_{Hdot^s}^2 = L^3 sum_k |k|^{2s} |u_hat_k|^2`.
//!
//! Every field is zero-mean (`u_hat_0 = 0`), real (`conj(u_hat_k) = u_hat_{-k}`),
//! and band-limited to the dealiased cube `|z_i| <= kmax` fixed by the grid.
//! Physical-space products are evaluated on the `N^3` collocation grid and
//! re-truncated to the cube afterwards (2/3 rule by default), so quadratic
//! products of retained modes are alias-free.

mod fft;
mod field;
mod grid;
mod tensor;

pub use field::{RealSamples, ScalarField, SolenoidalField, SpectralField};
pub use grid::{GridError, TorusGrid};
pub use tensor::{grad_tensor, laplacian, outer_product, TensorField};

/// Relative tolerance on `|k . u_hat_k|` below which a field counts as
/// divergence-free. Headroom for double-precision FFT round-off.
pub const DIVERGENCE_TOL: f64 = 1e-12;
