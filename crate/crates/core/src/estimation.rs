//! LS and MMSE estimation of the NLOS channel from the pilot observation, and
//! the composite (LOS + estimated NLOS) channel estimate used by MRC.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{LosVectors, PilotObservation};
use crate::model::{LargeScaleRealization, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ls,
    Mmse,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::Ls, EstimatorKind::Mmse];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Ls => "ls",
            EstimatorKind::Mmse => "mmse",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(EstimatorKind::Ls),
            "mmse" => Ok(EstimatorKind::Mmse),
            other => Err(format!("unknown estimator '{other}' (expected ls or mmse)")),
        }
    }
}

/// Composite estimates `ĥ_jjn` for the observed cell's users.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    pub kind: EstimatorKind,
    /// Rows are users, columns antennas.
    pub h_hat: Array2<Complex64>,
    /// MMSE shrinkage per user; all ones for LS.
    pub chi: Vec<f64>,
}

impl EstimateSet {
    #[inline]
    pub fn get(&self, n: usize) -> &[Complex64] {
        let m = self.h_hat.ncols();
        &self.h_hat.as_slice().expect("standard layout")[n * m..(n + 1) * m]
    }

    pub fn users(&self) -> usize {
        self.h_hat.nrows()
    }
}

/// Interference-plus-noise power in the LS NLOS estimate, scaled by `ρ_jn`:
/// `Σ_{l≠j} ρ_ln (K_ln + 1) β_jln + 1`.
pub fn contamination(cfg: &SystemConfig, ls: &LargeScaleRealization, j: usize, n: usize) -> f64 {
    (0..cfg.cells)
        .filter(|&l| l != j)
        .map(|l| cfg.pilot_power(l, n) * (ls.k(l, n) + 1.0) * ls.beta(j, l, n))
        .sum::<f64>()
        + 1.0
}

/// MMSE shrinkage `χ_jn = ρ_jn β_jjn / (ρ_jn β_jjn + Σ_{l≠j} ρ_ln (K_ln+1) β_jln + 1)`.
pub fn mmse_shrinkage(cfg: &SystemConfig, ls: &LargeScaleRealization, j: usize, n: usize) -> f64 {
    let own = cfg.pilot_power(j, n) * ls.beta(j, j, n);
    own / (own + contamination(cfg, ls, j, n))
}

/// Subtracts the known LOS contribution `Σ_t √(ρ_jt K_jt) h_jjt,LOS φ_t†`
/// from the pilot observation.
pub fn remove_los(
    obs: &PilotObservation,
    phi: &Array2<Complex64>,
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    j: usize,
    los: &LosVectors,
) -> PilotObservation {
    let mut out = obs.clone();
    remove_los_in_place(&mut out, phi, cfg, ls, j, los);
    out
}

pub(crate) fn remove_los_in_place(
    obs: &mut PilotObservation,
    phi: &Array2<Complex64>,
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    j: usize,
    los: &LosVectors,
) {
    let m = cfg.antennas;
    let y = obs.y.as_slice_memory_order_mut().expect("column-major");
    for t in 0..cfg.users {
        let gain = (cfg.pilot_power(j, t) * ls.k(j, t)).sqrt();
        if gain == 0.0 {
            continue;
        }
        let v = los.get(t);
        for s in 0..phi.nrows() {
            let w = phi[[s, t]].conj() * gain;
            y[s * m..(s + 1) * m].iter_mut().zip(v).for_each(|(y, v)| *y -= v * w);
        }
    }
}

/// `Y' φ_n / √ρ_jn` for a LOS-free observation `Y'`, written into `out`.
pub(crate) fn correlate(
    obs: &PilotObservation,
    phi: &Array2<Complex64>,
    cfg: &SystemConfig,
    j: usize,
    n: usize,
    out: &mut [Complex64],
) {
    let scale = cfg.pilot_power(j, n).sqrt().recip();
    out.iter_mut().for_each(|z| *z = Complex64::default());
    for s in 0..phi.nrows() {
        let w = phi[[s, n]] * scale;
        out.iter_mut().zip(obs.column(s)).for_each(|(o, y)| *o += y * w);
    }
}

/// LS estimate of `h_jjn,NLOS`: the true NLOS part plus pilot contamination
/// `Σ_{l≠j} √(ρ_ln(K_ln+1)/ρ_jn) h_jln,NLOS` plus noise `ñ_jn/√ρ_jn`.
pub fn ls_estimate_nlos(
    obs: &PilotObservation,
    phi: &Array2<Complex64>,
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    j: usize,
    los: &LosVectors,
    n: usize,
) -> Vec<Complex64> {
    let clean = remove_los(obs, phi, cfg, ls, j, los);
    let mut out = vec![Complex64::default(); cfg.antennas];
    correlate(&clean, phi, cfg, j, n, &mut out);
    out
}

/// `√(K/(K+1))·los + √(1/(K+1))·c·nlos_hat` into `out`.
#[inline]
pub(crate) fn compose(k: f64, los: &[Complex64], nlos_hat: &[Complex64], c: f64, out: &mut [Complex64]) {
    let a = (k / (k + 1.0)).sqrt();
    let b = (1.0 / (k + 1.0)).sqrt() * c;
    for ((o, l), g) in out.iter_mut().zip(los).zip(nlos_hat) {
        *o = l * a + g * b;
    }
}

/// Composite estimates for every user of cell `j`.
pub fn estimate(
    obs: &PilotObservation,
    phi: &Array2<Complex64>,
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    j: usize,
    los: &LosVectors,
    kind: EstimatorKind,
) -> EstimateSet {
    let clean = remove_los(obs, phi, cfg, ls, j, los);
    let (users, m) = (cfg.users, cfg.antennas);
    let mut h_hat = Array2::zeros((users, m));
    let mut nlos = vec![Complex64::default(); m];
    let mut chi = Vec::with_capacity(users);
    for n in 0..users {
        correlate(&clean, phi, cfg, j, n, &mut nlos);
        let c = match kind {
            EstimatorKind::Ls => 1.0,
            EstimatorKind::Mmse => mmse_shrinkage(cfg, ls, j, n),
        };
        chi.push(c);
        let row = h_hat.row_mut(n).into_slice().expect("standard layout");
        compose(ls.k(j, n), los.get(n), &nlos, c, row);
    }
    EstimateSet { kind, h_hat, chi }
}
