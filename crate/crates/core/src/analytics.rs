//! Closed-form effective SINR under MRC with LS or MMSE channel estimates,
//! its Rayleigh special case, and its limits for large `M` and large `K`.
//!
//! Everything here is linear scale and assumes half-wavelength spacing: the
//! LOS cross-correlation `φ_nt` below hard-codes `d/λ = 0.5`, so any other
//! spacing is rejected with [`Error::Spacing`].

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::estimation::{contamination, mmse_shrinkage, EstimatorKind};
use crate::model::{LargeScaleRealization, ValidatedConfig};

/// Below this `|sin(π/2·Δ)|` the ratio is replaced by its analytic limit.
const SINGULAR_THRESHOLD: f64 = 1e-12;

/// `φ_nt = sin(Mπ/2·Δ) / sin(π/2·Δ)` with `Δ = sin θ_n − sin θ_t`.
///
/// `|los_n† los_t| = |φ_nt|·√(β_n β_t)` for half-wavelength arrays. At the
/// singular points `Δ ∈ {0, ±2}` the limit `M·(−1)^{k(M−1)}` is returned,
/// where `π/2·Δ = kπ`.
pub fn phi_coefficient(antennas: usize, theta_n: f64, theta_t: f64) -> f64 {
    let m = antennas as f64;
    let x = FRAC_PI_2 * (theta_n.sin() - theta_t.sin());
    let den = x.sin();
    if den.abs() < SINGULAR_THRESHOLD {
        let k = (x / std::f64::consts::PI).round() as i64;
        if (k * (antennas as i64 - 1)).rem_euclid(2) == 0 {
            m
        } else {
            -m
        }
    } else {
        (m * x).sin() / den
    }
}

/// Per-user quantities entering the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrIngredients {
    /// Pilot contamination `ψ_jn = Σ_{l≠j} ρ_ln (K_ln+1) β_jln²`.
    pub psi: f64,
    /// `ζ_jn = Σ_c ρ_cn (K_cn+1) β_jcn + 1`.
    pub zeta: f64,
    /// `ϑ_j = Σ_{l,t} β_jlt + 1/ρ_u`.
    pub vartheta: f64,
    /// `ς_jn = Σ_{t≠n} K_jt/(K_jt+1)·φ_nt²/M·β_jjt − Σ_t K_jt/(K_jt+1)·β_jjt`.
    pub varsigma: f64,
    /// MMSE shrinkage `χ_jn`.
    pub chi: f64,
    /// `φ_nt` for every pair of users in cell `j`.
    pub phi: Array2<f64>,
    /// `ϱ_jn`: `ς_jn` with every `K/(K+1)` weight set to one.
    pub varrho: f64,
}

/// `φ_nt` over all pairs of users in cell `j`.
pub fn phi_matrix(antennas: usize, ls: &LargeScaleRealization, j: usize) -> Array2<f64> {
    let users = ls.users();
    Array2::from_shape_fn((users, users), |(n, t)| {
        phi_coefficient(antennas, ls.aoa(j, n), ls.aoa(j, t))
    })
}

pub fn ingredients(cfg: &ValidatedConfig, ls: &LargeScaleRealization, j: usize, n: usize) -> Result<SinrIngredients> {
    cfg.require_half_wavelength()?;
    ls.check_against(cfg)?;
    let (cells, users) = (cfg.cells, cfg.users);
    let m = cfg.antennas as f64;

    let psi = (0..cells)
        .filter(|&l| l != j)
        .map(|l| cfg.pilot_power(l, n) * (ls.k(l, n) + 1.0) * ls.beta(j, l, n).powi(2))
        .sum();
    let zeta = (0..cells)
        .map(|c| cfg.pilot_power(c, n) * (ls.k(c, n) + 1.0) * ls.beta(j, c, n))
        .sum::<f64>()
        + 1.0;
    let vartheta = ls.beta_tensor().index_axis(ndarray::Axis(0), j).sum() + 1.0 / cfg.data_power;

    let phi = phi_matrix(cfg.antennas, ls, j);
    let (mut varsigma, mut varrho) = (0.0, 0.0);
    for t in 0..users {
        let beta = ls.beta(j, j, t);
        let w = ls.k(j, t) / (ls.k(j, t) + 1.0);
        if t != n {
            let lobe = phi[[n, t]].powi(2) / m * beta;
            varsigma += w * lobe;
            varrho += lobe;
        }
        varsigma -= w * beta;
        varrho -= beta;
    }

    Ok(SinrIngredients {
        psi,
        zeta,
        vartheta,
        varsigma,
        chi: mmse_shrinkage(cfg, ls, j, n),
        phi,
        varrho,
    })
}

/// Exact effective SINR of user `n` in cell `j`.
pub fn sinr_closed(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    j: usize,
    n: usize,
    kind: EstimatorKind,
) -> Result<f64> {
    let g = ingredients(cfg, ls, j, n)?;
    let m = cfg.antennas as f64;
    let rho = cfg.pilot_power(j, n);
    let k = ls.k(j, n);
    let beta = ls.beta(j, j, n);
    Ok(match kind {
        EstimatorKind::Ls => {
            m * rho * (k + 1.0) * beta * beta / (m * g.psi + g.zeta * g.vartheta + rho * k * beta * g.varsigma)
        }
        EstimatorKind::Mmse => {
            let chi = g.chi;
            m * rho * (k + chi).powi(2) * beta * beta
                / (m * chi * chi * (k + 1.0) * g.psi
                    + rho * (k + chi) * (k + 1.0) * beta * g.vartheta
                    + rho * k * (k + 1.0) * beta * g.varsigma)
        }
    })
}

/// Rayleigh-fading SINR; every Ricean factor is treated as zero.
pub fn sinr_rayleigh(cfg: &ValidatedConfig, ls: &LargeScaleRealization, j: usize, n: usize) -> Result<f64> {
    cfg.require_half_wavelength()?;
    ls.check_against(cfg)?;
    let m = cfg.antennas as f64;
    let rho = cfg.pilot_power(j, n);
    let beta = ls.beta(j, j, n);
    let psi0: f64 = (0..cfg.cells)
        .filter(|&l| l != j)
        .map(|l| cfg.pilot_power(l, n) * ls.beta(j, l, n).powi(2))
        .sum();
    let zeta0 = (0..cfg.cells)
        .map(|c| cfg.pilot_power(c, n) * ls.beta(j, c, n))
        .sum::<f64>()
        + 1.0;
    let vartheta = ls.beta_tensor().index_axis(ndarray::Axis(0), j).sum() + 1.0 / cfg.data_power;
    Ok(m * rho * beta * beta / (m * psi0 + zeta0 * vartheta))
}

/// Limit of [`sinr_closed`] as `M → ∞`.
///
/// Fails with [`Error::UnboundedLimit`] when `ψ_jn = 0` (no cell shares the
/// pilot), since the SINR then grows without bound.
pub fn sinr_limit_large_m(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    j: usize,
    n: usize,
    kind: EstimatorKind,
) -> Result<f64> {
    let g = ingredients(cfg, ls, j, n)?;
    if g.psi <= 0.0 {
        return Err(Error::UnboundedLimit { user: n });
    }
    let rho = cfg.pilot_power(j, n);
    let k = ls.k(j, n);
    let beta = ls.beta(j, j, n);
    Ok(match kind {
        EstimatorKind::Ls => rho * (k + 1.0) * beta * beta / g.psi,
        EstimatorKind::Mmse => rho * (k + g.chi).powi(2) * beta * beta / (g.chi.powi(2) * (k + 1.0) * g.psi),
    })
}

/// Rayleigh large-`M` limit `ρ_jn β_jjn² / Σ_{l≠j} ρ_ln β_jln²`.
pub fn sinr_limit_large_m_rayleigh(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    j: usize,
    n: usize,
) -> Result<f64> {
    ls.check_against(cfg)?;
    let den: f64 = (0..cfg.cells)
        .filter(|&l| l != j)
        .map(|l| cfg.pilot_power(l, n) * ls.beta(j, l, n).powi(2))
        .sum();
    if den <= 0.0 {
        return Err(Error::UnboundedLimit { user: n });
    }
    Ok(cfg.pilot_power(j, n) * ls.beta(j, j, n).powi(2) / den)
}

/// Limit of [`sinr_closed`] as a Ricean factor shared by every user grows
/// without bound. Mixed factors are rejected.
///
/// The MMSE limit is `M β_jjn / (Σ_{l≠j,t} β_jlt + 1/ρ_u + Σ_{t≠n} φ_nt² β_jjt / M)`,
/// which is `M β_jjn / (ϑ_j + ϱ_jn)`.
pub fn sinr_limit_large_k(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    j: usize,
    n: usize,
    kind: EstimatorKind,
) -> Result<f64> {
    ls.shared_k()?;
    let g = ingredients(cfg, ls, j, n)?;
    let m = cfg.antennas as f64;
    let rho = cfg.pilot_power(j, n);
    let beta = ls.beta(j, j, n);
    Ok(match kind {
        EstimatorKind::Ls => {
            let cross: f64 = (0..cfg.cells)
                .filter(|&l| l != j)
                .map(|l| cfg.pilot_power(l, n) * ls.beta(j, l, n).powi(2))
                .sum();
            let all: f64 = (0..cfg.cells).map(|c| cfg.pilot_power(c, n) * ls.beta(j, c, n)).sum();
            m * rho * beta * beta / (m * cross + all * g.vartheta + rho * beta * g.varrho)
        }
        EstimatorKind::Mmse => {
            let cross: f64 = (0..cfg.cells)
                .filter(|&l| l != j)
                .flat_map(|l| (0..cfg.users).map(move |t| (l, t)))
                .map(|(l, t)| ls.beta(j, l, t))
                .sum();
            let lobes: f64 = (0..cfg.users)
                .filter(|&t| t != n)
                .map(|t| g.phi[[n, t]].powi(2) / m * ls.beta(j, j, t))
                .sum();
            m * beta / (cross + 1.0 / cfg.data_power + lobes)
        }
    })
}

/// `(T − τ)/T · log2(1 + SINR)` in bit/s/Hz.
pub fn spectral_efficiency(sinr: f64, coherence: usize, pilot_len: usize) -> f64 {
    debug_assert!(pilot_len < coherence);
    (coherence - pilot_len) as f64 / coherence as f64 * sinr.log2_1p()
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

pub fn sum_se(per_user: &[f64]) -> f64 {
    per_user.iter().sum()
}

/// LS interference-plus-noise factor `ε_jn = (Σ_{l≠j} ρ_ln(K_ln+1)β_jln + 1)/ρ_jn`.
pub(crate) fn estimate_noise(cfg: &ValidatedConfig, ls: &LargeScaleRealization, j: usize, n: usize) -> f64 {
    contamination(cfg, ls, j, n) / cfg.pilot_power(j, n)
}
