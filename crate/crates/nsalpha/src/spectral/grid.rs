use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("modes per axis must be an even integer >= 4, got {0}")]
    BadModeCount(usize),
    #[error("period length must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("dealias fraction must be a rational in (0, 1], got {num}/{den}")]
    BadDealiasFraction { num: u32, den: u32 },
}

/// Discretization of the torus `[0,L]^3`: `N` collocation points per axis and
/// the retained spectral cube `|z_i| <= kmax`.
///
/// `kmax = floor(fraction * N/2)`, additionally capped at `N/2 - 1` so the
/// unpaired Nyquist plane of an even-length DFT is never populated (it has no
/// conjugate partner, which would break reality of derivatives).
#[derive(Clone, Copy, Debug)]
pub struct TorusGrid {
    n: usize,
    l: f64,
    kmax: i32,
    dealias_num: u32,
    dealias_den: u32,
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.l == other.l && self.kmax == other.kmax
    }
}

impl TorusGrid {
    /// Grid with the standard 2/3 dealiasing rule.
    pub fn new(n: usize, l: f64) -> Result<Self, GridError> {
        Self::with_dealias(n, l, 2, 3)
    }

    pub fn with_dealias(n: usize, l: f64, num: u32, den: u32) -> Result<Self, GridError> {
        if n < 4 || n % 2 != 0 {
            return Err(GridError::BadModeCount(n));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(GridError::BadPeriod(l));
        }
        if num == 0 || den == 0 || num > den {
            return Err(GridError::BadDealiasFraction { num, den });
        }
        let half = (n / 2) as u64;
        let kmax = ((u64::from(num) * half) / u64::from(den)).min(half - 1) as i32;
        Ok(Self {
            n,
            l,
            kmax,
            dealias_num: num,
            dealias_den: den,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Largest retained integer frequency per axis.
    pub fn kmax(&self) -> i32 {
        self.kmax
    }

    pub fn dealias_fraction(&self) -> (u32, u32) {
        (self.dealias_num, self.dealias_den)
    }

    /// Total number of collocation points / stored coefficients.
    pub fn point_count(&self) -> usize {
        self.n * self.n * self.n
    }

    /// `2*pi/L`, the physical wavenumber of the first lattice mode.
    pub fn k_unit(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// Integer frequency associated with DFT index `i` on one axis.
    #[inline]
    pub fn freq_of(&self, i: usize) -> i32 {
        debug_assert!(i < self.n);
        if i <= self.n / 2 {
            i as i32
        } else {
            i as i32 - self.n as i32
        }
    }

    /// DFT index holding integer frequency `z` on one axis.
    #[inline]
    pub fn index_of_freq(&self, z: i32) -> usize {
        let n = self.n as i32;
        (z.rem_euclid(n)) as usize
    }

    /// Flat index of the lattice point `z = (z1,z2,z3)`.
    pub fn index_of(&self, z: [i32; 3]) -> usize {
        let (i, j, k) = (
            self.index_of_freq(z[0]),
            self.index_of_freq(z[1]),
            self.index_of_freq(z[2]),
        );
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn retained(&self, z: [i32; 3]) -> bool {
        z[0].abs() <= self.kmax && z[1].abs() <= self.kmax && z[2].abs() <= self.kmax
    }

    /// Physical wavenumber vector `(2*pi/L) z`.
    #[inline]
    pub fn k_vec(&self, z: [i32; 3]) -> [f64; 3] {
        let u = self.k_unit();
        [u * z[0] as f64, u * z[1] as f64, u * z[2] as f64]
    }

    #[inline]
    pub fn k_sq(&self, z: [i32; 3]) -> f64 {
        let u = self.k_unit();
        let zz = (z[0] as f64).powi(2) + (z[1] as f64).powi(2) + (z[2] as f64).powi(2);
        u * u * zz
    }

    /// Iterate all `N^3` lattice points as `(flat_index, z)`.
    pub fn iter_lattice(&self) -> impl Iterator<Item = (usize, [i32; 3])> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (0..n).flat_map(move |j| {
                (0..n).map(move |k| {
                    let idx = (i * n + j) * n + k;
                    (idx, [self.freq_of(i), self.freq_of(j), self.freq_of(k)])
                })
            })
        })
    }

    /// Lexicographically positive representatives of the retained nonzero
    /// modes, in lexicographic order over `(z1, z2, z3)`. Together with the
    /// reality constraint `u_hat_{-z} = conj(u_hat_z)` these determine a field
    /// completely; snapshots and random-field generation use this order.
    pub fn half_spectrum(&self) -> Vec<[i32; 3]> {
        let m = self.kmax;
        let mut out = Vec::new();
        for z1 in 0..=m {
            for z2 in -m..=m {
                for z3 in -m..=m {
                    let z = [z1, z2, z3];
                    let positive = z1 > 0 || (z1 == 0 && z2 > 0) || (z1 == 0 && z2 == 0 && z3 > 0);
                    if positive {
                        out.push(z);
                    }
                }
            }
        }
        out
    }
}
