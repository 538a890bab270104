//! Closed-form second-order statistics of the MRC output.
//!
//! With `ĥ = ĥ_jjn` the composite estimate of user `n` in cell `j` and
//! `h_lt = h_jlt` the true channels, the effective SINR is assembled from
//!
//! ```text
//! A = |E{ĥ† h_jn}|²          B = E{|ĥ† h_jn|²}
//! C = E{|ĥ† h_jt|²}, t ≠ n   D = E{|ĥ† h_ln|²}, l ≠ j
//! E = E{|ĥ† h_lt|²}, l ≠ j, t ≠ n
//! F = E{‖ĥ‖²}
//! ```
//!
//! as `ρ_u A / (ρ_u (B + ΣC + ΣD + ΣE − A) + F)`. The forms below hold for a
//! composite estimate whose NLOS part is shrunk by `c`, so `c = 1` gives LS
//! and `c = χ_jn` gives MMSE.

use crate::analytics::{estimate_noise, phi_coefficient};
use crate::error::{Error, Result};
use crate::estimation::{mmse_shrinkage, EstimatorKind};
use crate::model::{LargeScaleRealization, ValidatedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentTerm {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl MomentTerm {
    pub const ALL: [MomentTerm; 6] = [Self::A, Self::B, Self::C, Self::D, Self::E, Self::F];
}

impl std::fmt::Display for MomentTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Which user pair a moment refers to. `t` is only read by C and E, `l` only
/// by D and E.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentIndices {
    /// Observed cell `j`.
    pub cell: usize,
    /// User `n` whose estimate is used.
    pub user: usize,
    /// Interfering cell `l`.
    pub other_cell: usize,
    /// Interfering user `t`.
    pub other_user: usize,
}

impl MomentIndices {
    pub fn own(cell: usize, user: usize) -> Self {
        Self {
            cell,
            user,
            other_cell: cell,
            other_user: user,
        }
    }

    pub fn with_other(self, other_cell: usize, other_user: usize) -> Self {
        Self {
            other_cell,
            other_user,
            ..self
        }
    }

    /// Cell and user whose true channel enters the moment.
    pub(crate) fn target(&self, term: MomentTerm) -> (usize, usize) {
        match term {
            MomentTerm::A | MomentTerm::B | MomentTerm::F => (self.cell, self.user),
            MomentTerm::C => (self.cell, self.other_user),
            MomentTerm::D => (self.other_cell, self.user),
            MomentTerm::E => (self.other_cell, self.other_user),
        }
    }

    pub(crate) fn check(&self, term: MomentTerm, cells: usize, users: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Index(format!("moment {term}: {msg}")));
        if self.cell >= cells || self.other_cell >= cells {
            return bad(format!("cell index out of range for {cells} cells"));
        }
        if self.user >= users || self.other_user >= users {
            return bad(format!("user index out of range for {users} users"));
        }
        let other_cell = self.other_cell != self.cell;
        let other_user = self.other_user != self.user;
        match term {
            MomentTerm::C if !other_user || other_cell => bad("needs t ≠ n in the observed cell".into()),
            MomentTerm::D if !other_cell || other_user => bad("needs l ≠ j with the same user index".into()),
            MomentTerm::E if !other_cell || !other_user => bad("needs l ≠ j and t ≠ n".into()),
            _ => Ok(()),
        }
    }
}

/// Shrinkage applied to the NLOS estimate.
pub(crate) fn shrinkage(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    j: usize,
    n: usize,
) -> f64 {
    match kind {
        EstimatorKind::Ls => 1.0,
        EstimatorKind::Mmse => mmse_shrinkage(cfg, ls, j, n),
    }
}

/// Exact value of a moment under the model.
///
/// Only C depends on the array geometry, through `φ_nt`; it therefore needs
/// half-wavelength spacing like the SINR closed forms.
pub fn closed_form_moment(
    term: MomentTerm,
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    idx: MomentIndices,
) -> Result<f64> {
    ls.check_against(cfg)?;
    idx.check(term, cfg.cells, cfg.users)?;
    let (j, n) = (idx.cell, idx.user);
    let m = cfg.antennas as f64;
    let k = ls.k(j, n);
    let (a2, b2) = (k / (k + 1.0), 1.0 / (k + 1.0));
    let beta = ls.beta(j, j, n);
    let eps = estimate_noise(cfg, ls, j, n);
    let c = shrinkage(cfg, ls, kind, j, n);
    let f = a2 * m * beta + b2 * c * c * m * (beta + eps);

    Ok(match term {
        MomentTerm::A => (m * beta * (k + c) / (k + 1.0)).powi(2),
        MomentTerm::B => {
            (m * beta * (k + c) / (k + 1.0)).powi(2)
                + m * beta * beta * (k * (1.0 + c * c) + c * c) * b2 * b2
                + c * c * m * beta * eps * b2
        }
        MomentTerm::C => {
            cfg.require_half_wavelength()?;
            let t = idx.other_user;
            let kt = ls.k(j, t);
            let beta_t = ls.beta(j, j, t);
            let phi = phi_coefficient(cfg.antennas, ls.aoa(j, n), ls.aoa(j, t));
            beta_t * f + kt / (kt + 1.0) * a2 * beta * beta_t * (phi * phi - m)
        }
        MomentTerm::D => {
            let l = idx.other_cell;
            let beta_l = ls.beta(j, l, n);
            let s2 = cfg.pilot_power(l, n) * (ls.k(l, n) + 1.0) / cfg.pilot_power(j, n);
            beta_l * f + b2 * c * c * s2 * m * m * beta_l * beta_l
        }
        MomentTerm::E => ls.beta(j, idx.other_cell, idx.other_user) * f,
        MomentTerm::F => f,
    })
}

/// Denominator sum `B + Σ_{t≠n} C + Σ_{l≠j} D + Σ_{l≠j,t≠n} E` for one user.
pub fn closed_form_interference(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    cell: usize,
    user: usize,
) -> Result<f64> {
    let own = MomentIndices::own(cell, user);
    let mut total = closed_form_moment(MomentTerm::B, cfg, ls, kind, own)?;
    for l in 0..cfg.cells {
        for t in 0..cfg.users {
            let term = match (l == cell, t == user) {
                (true, true) => continue,
                (true, false) => MomentTerm::C,
                (false, true) => MomentTerm::D,
                (false, false) => MomentTerm::E,
            };
            total += closed_form_moment(term, cfg, ls, kind, own.with_other(l, t))?;
        }
    }
    Ok(total)
}

/// SINR assembled from the moments.
pub fn sinr_from_moments(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    cell: usize,
    user: usize,
) -> Result<f64> {
    let own = MomentIndices::own(cell, user);
    let a = closed_form_moment(MomentTerm::A, cfg, ls, kind, own)?;
    let f = closed_form_moment(MomentTerm::F, cfg, ls, kind, own)?;
    let sigma = closed_form_interference(cfg, ls, kind, cell, user)?;
    let rho_u = cfg.data_power;
    Ok(rho_u * a / (rho_u * (sigma - a) + f))
}
