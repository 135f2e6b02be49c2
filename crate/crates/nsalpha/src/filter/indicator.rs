use crate::spectral::{RealSamples, SpectralField, TorusGrid};

/// Indicator function `A(.)` selecting where the filter acts, with pointwise
/// bounds `beta <= A <= 1`.
///
/// * `ConstantOne` — `A = 1`: the linear Helmholtz filter.
/// * `SmoothLocal` — `A(v) = beta + (1-beta) exp(-|v|^2/c^2)`, evaluated
///   pointwise on the mollified velocity.
/// * `GlobalEnergy` — `A(g) = beta + (1-beta) exp(-||g||_{L^2}^2/c^2)`,
///   spatially constant; satisfies the `L^inf <- L^2` Lipschitz condition
///   that makes the problem well-posed without a mollifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndicatorKind {
    ConstantOne,
    SmoothLocal { c: f64 },
    GlobalEnergy { c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndicatorSpec {
    pub kind: IndicatorKind,
    pub beta: f64,
}

impl IndicatorSpec {
    pub fn constant_one() -> Self {
        // The bounds hold for any beta; keep the nominal lower bound at 1.
        Self {
            kind: IndicatorKind::ConstantOne,
            beta: 1.0 - f64::EPSILON,
        }
    }

    pub fn smooth_local(beta: f64, c: f64) -> Self {
        assert!(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
        assert!(c > 0.0, "shape parameter c must be positive");
        Self {
            kind: IndicatorKind::SmoothLocal { c },
            beta,
        }
    }

    pub fn global_energy(beta: f64, c: f64) -> Self {
        assert!(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
        assert!(c > 0.0, "shape parameter c must be positive");
        Self {
            kind: IndicatorKind::GlobalEnergy { c },
            beta,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            IndicatorKind::ConstantOne => "constant_one",
            IndicatorKind::SmoothLocal { .. } => "smooth_local",
            IndicatorKind::GlobalEnergy { .. } => "global_energy",
        }
    }

    /// Lipschitz constant of `A`. For the smooth kinds the supremum of
    /// `|grad A|` is attained at `|v| = c/sqrt(2)`:
    /// `C_A = sqrt(2) e^{-1/2} (1-beta)/c`. The global kind satisfies the
    /// same constant as an `L^inf <- L^2` modulus in its functional argument.
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            IndicatorKind::ConstantOne => 0.0,
            IndicatorKind::SmoothLocal { c } | IndicatorKind::GlobalEnergy { c } => {
                2f64.sqrt() * (-0.5f64).exp() * (1.0 - self.beta) / c
            }
        }
    }

    /// Lipschitz constant of `grad A` (spectral norm of the Hessian, attained
    /// at `v = 0`): `C'_A = 2 (1-beta)/c^2`. `None` for the global kind, which
    /// is not a pointwise function of `v`.
    pub fn gradient_lipschitz(&self) -> Option<f64> {
        match self.kind {
            IndicatorKind::ConstantOne => Some(0.0),
            IndicatorKind::SmoothLocal { c } => Some(2.0 * (1.0 - self.beta) / (c * c)),
            IndicatorKind::GlobalEnergy { .. } => None,
        }
    }

    /// Collocation samples of `A` applied to the (already mollified) field.
    /// All samples lie in `[beta, 1]`.
    pub fn evaluate(&self, grid: &TorusGrid, filtered: &SpectralField) -> RealSamples {
        let len = grid.point_count();
        match self.kind {
            IndicatorKind::ConstantOne => vec![1.0; len],
            IndicatorKind::SmoothLocal { c } => {
                let phys = filtered.to_physical();
                let inv_c2 = 1.0 / (c * c);
                (0..len)
                    .map(|j| {
                        let v2 = phys[0][j] * phys[0][j]
                            + phys[1][j] * phys[1][j]
                            + phys[2][j] * phys[2][j];
                        self.beta + (1.0 - self.beta) * (-v2 * inv_c2).exp()
                    })
                    .collect()
            }
            IndicatorKind::GlobalEnergy { c } => {
                let value =
                    self.beta + (1.0 - self.beta) * (-filtered.l2_norm_sq() / (c * c)).exp();
                vec![value; len]
            }
        }
    }
}

/// Spectral low-pass mollifier: the convolution kernel with
/// `phi_hat_k = 1` for `|k| <= kappa` and `0` beyond, or no mollifier at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MollifierSpec {
    Cutoff { kappa: f64 },
    None,
}

impl MollifierSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MollifierSpec::Cutoff { .. } => "cutoff",
            MollifierSpec::None => "none",
        }
    }

    /// `phi * v`: zero the coefficients with `|k| > kappa`, keep the rest.
    pub fn convolve(&self, v: &SpectralField) -> SpectralField {
        match self {
            MollifierSpec::None => v.clone(),
            MollifierSpec::Cutoff { kappa } => {
                let mut out = v.clone();
                let kap2 = kappa * kappa;
                out.apply_multiplier(|ksq| if ksq <= kap2 { 1.0 } else { 0.0 });
                out
            }
        }
    }

    /// `||phi||_{L^2}^2 = L^3 * #{k : |k| <= kappa}` — the coefficient count
    /// over the full lattice `(2 pi / L) Z^3`, including `k = 0`.
    pub fn phi_l2_sq(&self, l: f64) -> Option<f64> {
        match self {
            MollifierSpec::None => None,
            MollifierSpec::Cutoff { kappa } => {
                if !kappa.is_finite() {
                    return Some(f64::INFINITY);
                }
                Some(l.powi(3) * Self::sum_in_ball(l, *kappa, |_| 1.0))
            }
        }
    }

    /// `||phi||_{H^1}^2 = L^3 * sum_{|k| <= kappa} (1 + |k|^2)`.
    pub fn phi_h1_sq(&self, l: f64) -> Option<f64> {
        match self {
            MollifierSpec::None => None,
            MollifierSpec::Cutoff { kappa } => {
                if !kappa.is_finite() {
                    return Some(f64::INFINITY);
                }
                Some(l.powi(3) * Self::sum_in_ball(l, *kappa, |ksq| 1.0 + ksq))
            }
        }
    }

    fn sum_in_ball(l: f64, kappa: f64, weight: impl Fn(f64) -> f64) -> f64 {
        let unit = 2.0 * std::f64::consts::PI / l;
        let radius = kappa / unit;
        let zmax = radius.floor() as i64;
        let mut acc = 0.0;
        for z1 in -zmax..=zmax {
            for z2 in -zmax..=zmax {
                for z3 in -zmax..=zmax {
                    let zz = (z1 * z1 + z2 * z2 + z3 * z3) as f64;
                    if zz.sqrt() <= radius {
                        acc += weight(unit * unit * zz);
                    }
                }
            }
        }
        acc
    }
}
