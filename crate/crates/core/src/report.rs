//! Per-user SINR and spectral efficiency of one drop, with provenance.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::analytics::{sinr_closed, sinr_limit_large_k, sinr_limit_large_m, spectral_efficiency};
use crate::error::{Error, Result};
use crate::estimation::EstimatorKind;
use crate::exec::Executor;
use crate::model::{LargeScaleRealization, ValidatedConfig};
use crate::montecarlo::{simulate_drop, McSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    MonteCarlo,
    AsymptoticM,
    AsymptoticK,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::MonteCarlo => "monte_carlo",
            Provenance::AsymptoticM => "asymptotic_m",
            Provenance::AsymptoticK => "asymptotic_k",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub user: usize,
    pub estimator: EstimatorKind,
    pub provenance: Provenance,
    /// Linear SINR.
    pub sinr: f64,
    /// `(T−τ)/T·log2(1+SINR)`, bit/s/Hz.
    pub se: f64,
    /// Standard error of the SINR, for simulated entries.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub cell: usize,
    pub entries: Vec<ReportEntry>,
}

impl SinrReport {
    pub fn get(&self, user: usize, kind: EstimatorKind, provenance: Provenance) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .find(|e| e.user == user && e.estimator == kind && e.provenance == provenance)
    }

    /// Sum SE over users, if every user has an entry of this provenance.
    pub fn sum_se(&self, kind: EstimatorKind, provenance: Provenance) -> Option<f64> {
        let v: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.estimator == kind && e.provenance == provenance)
            .map(|e| e.se)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for e in &self.entries {
            out.serialize(e).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Closed-form and asymptotic values for every user of `cell`, plus
/// simulated values when `mc` is given (drop index 0).
///
/// Large-M limits are omitted when no other cell shares the pilot, and
/// large-K limits when the Ricean factors are not shared.
pub fn build_report(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    cell: usize,
    mc: Option<(&McSettings, &Executor)>,
) -> Result<SinrReport> {
    let se = |s: f64| spectral_efficiency(s, cfg.coherence, cfg.pilot_len);
    let empirical = match mc {
        Some((settings, exec)) => {
            let settings = McSettings {
                target_cell: cell,
                ..*settings
            };
            Some(simulate_drop(cfg, ls, &settings, 0, exec)?)
        }
        None => None,
    };
    let shared_k = ls.shared_k().is_ok();
    let mut entries = Vec::new();
    for (ki, kind) in EstimatorKind::ALL.into_iter().enumerate() {
        for n in 0..cfg.users {
            let mut push = |provenance, sinr: f64, std_error| {
                entries.push(ReportEntry {
                    user: n,
                    estimator: kind,
                    provenance,
                    sinr,
                    se: se(sinr),
                    std_error,
                })
            };
            push(Provenance::ClosedForm, sinr_closed(cfg, ls, cell, n, kind)?, None);
            if let Some(e) = &empirical {
                push(Provenance::MonteCarlo, e[ki].sinr[n], Some(e[ki].std_error[n]));
            }
            match sinr_limit_large_m(cfg, ls, cell, n, kind) {
                Ok(v) => push(Provenance::AsymptoticM, v, None),
                Err(Error::UnboundedLimit { .. }) => {}
                Err(e) => return Err(e),
            }
            if shared_k {
                push(
                    Provenance::AsymptoticK,
                    sinr_limit_large_k(cfg, ls, cell, n, kind)?,
                    None,
                );
            }
        }
    }
    Ok(SinrReport { cell, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, SystemConfig};
    use ndarray::Array2;

    fn case() -> (ValidatedConfig, LargeScaleRealization) {
        let cfg = validate_config(SystemConfig::uniform(3, 2, 16, 2, 196, 10.0, 10.0)).unwrap();
        let aoa = Array2::from_shape_fn((3, 2), |(l, n)| 0.2 + 0.9 * (2 * l + n) as f64);
        (cfg, LargeScaleRealization::symmetric(3, 2, 1.0, 0.2, 3.0, aoa).unwrap())
    }

    #[test]
    fn se_fields_follow_sinr() {
        let (cfg, ls) = case();
        let settings = McSettings {
            n_small_scale: 500,
            ..McSettings::default()
        };
        let r = build_report(&cfg, &ls, 0, Some((&settings, &Executor::sequential()))).unwrap();
        assert_eq!(r.entries.len(), 2 * 2 * 4);
        for e in &r.entries {
            assert!(e.sinr >= 0.0);
            assert!((e.se - spectral_efficiency(e.sinr, 196, 2)).abs() < 1e-12);
        }
        let total = r.sum_se(EstimatorKind::Mmse, Provenance::ClosedForm).unwrap();
        let parts: f64 = (0..2)
            .map(|n| r.get(n, EstimatorKind::Mmse, Provenance::ClosedForm).unwrap().se)
            .sum();
        assert!((total - parts).abs() < 1e-12);
    }

    #[test]
    fn report_is_independent_of_workers() {
        let (cfg, ls) = case();
        let settings = McSettings {
            n_small_scale: 400,
            seed: 5,
            ..McSettings::default()
        };
        let a = build_report(&cfg, &ls, 1, Some((&settings, &Executor::new(1)))).unwrap();
        let b = build_report(&cfg, &ls, 1, Some((&settings, &Executor::new(8)))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mixed_k_omits_large_k_entries() {
        let (cfg, ls) = case();
        let mut k = ls.ricean_k().clone();
        k[[0, 1]] = 9.0;
        let mixed = LargeScaleRealization::new(ls.beta_tensor().clone(), k, ls.aoa_matrix().clone()).unwrap();
        let r = build_report(&cfg, &mixed, 0, None).unwrap();
        assert!(r.entries.iter().all(|e| e.provenance != Provenance::AsymptoticK));
        assert!(r.sum_se(EstimatorKind::Ls, Provenance::AsymptoticM).is_some());
    }
}
