//! Shared configuration and large-scale realization types.
//!
//! Powers and Ricean factors are linear. Noise variance is normalized to 1,
//! so every power is an SNR. `K = 0` is Rayleigh fading.

use std::ops::Deref;

use crate::error::{ConfigError, Error, Result, Violation};
use ndarray::{Array2, Array3};

/// Antenna spacing (in wavelengths) for which the φ closed form is exact.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// System dimensions and transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of cells `L`.
    pub cells: usize,
    /// Users per cell `N`.
    pub users: usize,
    /// BS antennas `M`.
    pub antennas: usize,
    /// Pilot length `τ` in symbols.
    pub pilot_len: usize,
    /// Coherence interval `T` in symbols.
    pub coherence: usize,
    /// Uplink data power `ρ_u`.
    pub data_power: f64,
    /// Pilot powers `ρ_ln`, shape `[cells, users]`.
    pub pilot_powers: Array2<f64>,
    /// Antenna spacing over wavelength `d/λ`.
    pub spacing: f64,
}

impl SystemConfig {
    /// Config in which every user transmits pilots with the same power.
    pub fn uniform(
        cells: usize,
        users: usize,
        antennas: usize,
        pilot_len: usize,
        coherence: usize,
        data_power: f64,
        pilot_power: f64,
    ) -> Self {
        Self {
            cells,
            users,
            antennas,
            pilot_len,
            coherence,
            data_power,
            pilot_powers: Array2::from_elem((cells, users), pilot_power),
            spacing: HALF_WAVELENGTH,
        }
    }

    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self
    }

    pub fn pilot_power(&self, cell: usize, user: usize) -> f64 {
        self.pilot_powers[[cell, user]]
    }
}

/// A [`SystemConfig`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(SystemConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> SystemConfig {
        self.0
    }

    /// True when `d/λ = 0.5`, the only spacing the closed forms cover.
    pub fn closed_form_exact(&self) -> bool {
        self.0.spacing == HALF_WAVELENGTH
    }

    pub fn require_half_wavelength(&self) -> Result<()> {
        if self.closed_form_exact() {
            Ok(())
        } else {
            Err(Error::Spacing(self.0.spacing))
        }
    }

    /// Same config with a different antenna count.
    pub fn with_antennas(&self, antennas: usize) -> Result<Self> {
        let cfg = self.0.clone().with_antennas(antennas);
        if self.closed_form_exact() {
            validate_config(cfg).map_err(Error::from)
        } else {
            validate_config_for_simulation(cfg).map_err(Error::from)
        }
    }
}

impl Deref for ValidatedConfig {
    type Target = SystemConfig;

    fn deref(&self) -> &SystemConfig {
        &self.0
    }
}

fn collect_violations(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    for (name, value) in [
        ("cells", cfg.cells),
        ("users", cfg.users),
        ("antennas", cfg.antennas),
        ("coherence", cfg.coherence),
    ] {
        if value == 0 {
            out.push(Violation::Dimension(format!("{name} must be positive")));
        }
    }
    if cfg.pilot_len < cfg.users {
        out.push(Violation::Dimension(format!(
            "pilot length {} shorter than users per cell {}",
            cfg.pilot_len, cfg.users
        )));
    }
    if cfg.pilot_len > cfg.coherence {
        out.push(Violation::Dimension(format!(
            "pilot length {} exceeds coherence interval {}",
            cfg.pilot_len, cfg.coherence
        )));
    }
    if cfg.pilot_powers.dim() != (cfg.cells, cfg.users) {
        out.push(Violation::Dimension(format!(
            "pilot power matrix is {:?}, expected ({}, {})",
            cfg.pilot_powers.dim(),
            cfg.cells,
            cfg.users
        )));
    }
    if !(cfg.data_power.is_finite() && cfg.data_power > 0.0) {
        out.push(Violation::Power(format!(
            "data power {} must be positive",
            cfg.data_power
        )));
    }
    if let Some(p) = cfg.pilot_powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        out.push(Violation::Power(format!("pilot power {p} must be positive")));
    }
    if !(cfg.spacing.is_finite() && cfg.spacing > 0.0) {
        out.push(Violation::Dimension(format!(
            "antenna spacing {} must be positive",
            cfg.spacing
        )));
    }
    out
}

/// Checks every invariant, including `d/λ = 0.5` for the closed forms.
pub fn validate_config(cfg: SystemConfig) -> Result<ValidatedConfig, ConfigError> {
    let mut violations = collect_violations(&cfg);
    if cfg.spacing.is_finite() && cfg.spacing > 0.0 && cfg.spacing != HALF_WAVELENGTH {
        violations.push(Violation::Spacing(cfg.spacing));
    }
    if violations.is_empty() {
        Ok(ValidatedConfig(cfg))
    } else {
        Err(ConfigError { violations })
    }
}

/// Like [`validate_config`] but accepts any positive antenna spacing. Configs
/// validated this way can be simulated, but the closed forms reject them.
pub fn validate_config_for_simulation(cfg: SystemConfig) -> Result<ValidatedConfig, ConfigError> {
    let violations = collect_violations(&cfg);
    if violations.is_empty() {
        Ok(ValidatedConfig(cfg))
    } else {
        Err(ConfigError { violations })
    }
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Large-scale state of one drop: gains, Ricean factors and angles of arrival.
///
/// Indexing: `beta[[j, l, n]]` is the gain from user `n` of cell `l` to the BS
/// of cell `j`. `ricean_k[[l, n]]` and `aoa[[l, n]]` describe user `n` of cell
/// `l` as seen by its own BS.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleRealization {
    beta: Array3<f64>,
    ricean_k: Array2<f64>,
    aoa: Array2<f64>,
}

impl LargeScaleRealization {
    pub fn new(beta: Array3<f64>, ricean_k: Array2<f64>, aoa: Array2<f64>) -> Result<Self> {
        let (l0, l1, n) = beta.dim();
        if l0 != l1 {
            return Err(Error::Realization(format!(
                "beta must be L x L x N, got {:?}",
                beta.dim()
            )));
        }
        if ricean_k.dim() != (l0, n) || aoa.dim() != (l0, n) {
            return Err(Error::Realization(format!(
                "K {:?} and aoa {:?} must be ({l0}, {n})",
                ricean_k.dim(),
                aoa.dim()
            )));
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Realization(format!("gain {b} must be positive")));
        }
        if let Some(k) = ricean_k.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::Realization(format!("Ricean factor {k} must be >= 0")));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        if let Some(t) = aoa.iter().find(|t| !(**t >= 0.0 && **t < two_pi)) {
            return Err(Error::Realization(format!("angle {t} outside [0, 2pi)")));
        }
        Ok(Self { beta, ricean_k, aoa })
    }

    /// Every own-cell gain equals `own`, every cross-cell gain equals `cross`,
    /// and all users share one Ricean factor.
    pub fn symmetric(cells: usize, users: usize, own: f64, cross: f64, k: f64, aoa: Array2<f64>) -> Result<Self> {
        let beta = Array3::from_shape_fn((cells, cells, users), |(j, l, _)| if j == l { own } else { cross });
        Self::new(beta, Array2::from_elem((cells, users), k), aoa)
    }

    pub fn cells(&self) -> usize {
        self.beta.dim().0
    }

    pub fn users(&self) -> usize {
        self.beta.dim().2
    }

    #[inline]
    pub fn beta(&self, j: usize, l: usize, n: usize) -> f64 {
        self.beta[[j, l, n]]
    }

    #[inline]
    pub fn k(&self, l: usize, n: usize) -> f64 {
        self.ricean_k[[l, n]]
    }

    #[inline]
    pub fn aoa(&self, l: usize, n: usize) -> f64 {
        self.aoa[[l, n]]
    }

    pub fn beta_tensor(&self) -> &Array3<f64> {
        &self.beta
    }

    pub fn ricean_k(&self) -> &Array2<f64> {
        &self.ricean_k
    }

    pub fn aoa_matrix(&self) -> &Array2<f64> {
        &self.aoa
    }

    /// The same drop with every Ricean factor replaced by `k`.
    pub fn with_shared_k(&self, k: f64) -> Result<Self> {
        Self::new(
            self.beta.clone(),
            Array2::from_elem(self.ricean_k.dim(), k),
            self.aoa.clone(),
        )
    }

    /// The common Ricean factor, or the first two distinct values found.
    pub fn shared_k(&self) -> Result<f64> {
        let first = self.ricean_k[[0, 0]];
        match self.ricean_k.iter().find(|k| **k != first) {
            None => Ok(first),
            Some(other) => Err(Error::MixedKFactor(first, *other)),
        }
    }

    pub(crate) fn check_against(&self, cfg: &SystemConfig) -> Result<()> {
        if self.cells() != cfg.cells || self.users() != cfg.users {
            return Err(Error::Dimension(format!(
                "realization is {} cells x {} users, config is {} x {}",
                self.cells(),
                self.users(),
                cfg.cells,
                cfg.users
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_like() -> SystemConfig {
        SystemConfig::uniform(7, 10, 128, 10, 196, 100.0, 1000.0)
    }

    #[test]
    fn reference_config_is_valid() {
        let cfg = reference_like();
        assert_eq!(validate_config(cfg.clone()).unwrap().into_inner(), cfg);
    }

    #[test]
    fn short_pilot_is_dimension_error() {
        let mut cfg = reference_like();
        cfg.pilot_len = 5;
        let err = validate_config(cfg).unwrap_err();
        assert!(err.has_dimension_error());
        assert!(!err.has_power_error());
    }

    #[test]
    fn zero_data_power_is_power_error() {
        let mut cfg = reference_like();
        cfg.data_power = 0.0;
        assert!(validate_config(cfg).unwrap_err().has_power_error());
    }

    #[test]
    fn every_violation_is_reported() {
        let mut cfg = reference_like();
        cfg.pilot_len = 3;
        cfg.data_power = -1.0;
        cfg.spacing = 0.25;
        let err = validate_config(cfg.clone()).unwrap_err();
        assert!(err.has_dimension_error() && err.has_power_error() && err.has_spacing_error());

        let err = validate_config_for_simulation(cfg).unwrap_err();
        assert!(!err.has_spacing_error());
        assert_eq!(err.violations.len(), 2);
    }

    #[test]
    fn off_grid_spacing_only_fails_closed_form_validation() {
        let mut cfg = reference_like();
        cfg.spacing = 0.3;
        assert!(validate_config(cfg.clone()).unwrap_err().has_spacing_error());
        let v = validate_config_for_simulation(cfg).unwrap();
        assert!(v.require_half_wavelength().is_err());
    }

    #[test]
    fn db_examples() {
        assert!((db_to_linear(30.0) - 1000.0).abs() < 1e-9);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert_eq!(db_to_linear(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn realization_rejects_bad_entries() {
        let aoa = Array2::zeros((2, 1));
        assert!(LargeScaleRealization::symmetric(2, 1, 1.0, 0.0, 0.0, aoa.clone()).is_err());
        assert!(LargeScaleRealization::symmetric(2, 1, 1.0, 0.5, -1.0, aoa).is_err());
        let bad_angle = Array2::from_elem((2, 1), 7.0);
        assert!(LargeScaleRealization::symmetric(2, 1, 1.0, 0.5, 0.0, bad_angle).is_err());
    }

    #[test]
    fn shared_k_detects_mixed_factors() {
        let aoa = Array2::zeros((2, 2));
        let ls = LargeScaleRealization::symmetric(2, 2, 1.0, 0.5, 3.0, aoa).unwrap();
        assert_eq!(ls.shared_k().unwrap(), 3.0);
        let mut k = ls.ricean_k().clone();
        k[[1, 1]] = 2.0;
        let mixed = LargeScaleRealization::new(ls.beta_tensor().clone(), k, ls.aoa_matrix().clone()).unwrap();
        assert!(matches!(mixed.shared_k(), Err(Error::MixedKFactor(..))));
    }

    proptest! {
        #[test]
        fn db_round_trip(x in -100.0f64..100.0) {
            let back = linear_to_db(db_to_linear(x));
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
            let lin = db_to_linear(x);
            prop_assert!((db_to_linear(linear_to_db(lin)) - lin).abs() <= 1e-12 * lin);
        }

        #[test]
        fn validation_is_idempotent(l in 1usize..8, n in 1usize..6, extra in 0usize..4, m in 1usize..64) {
            let cfg = SystemConfig::uniform(l, n, m, n + extra, 196, 10.0, 100.0);
            let once = validate_config(cfg).unwrap();
            let twice = validate_config(once.clone().into_inner()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
