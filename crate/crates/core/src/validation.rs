//! Self-check suites run against a scenario's first drop.
//!
//! Each check reports a measured deviation and the bound it must not exceed.

use std::fmt;
use std::str::FromStr;

use crate::analytics::{phi_matrix, sinr_closed, sinr_limit_large_k, sinr_limit_large_m, sinr_rayleigh};
use crate::error::{Error, Result};
use crate::estimation::{mmse_shrinkage, EstimatorKind};
use crate::exec::Executor;
use crate::model::ValidatedConfig;
use crate::moments::{sinr_from_moments, MomentIndices, MomentTerm};
use crate::montecarlo::{estimate_moment, moment_a_exact, simulate_drop, McSettings};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Oracle,
    Moments,
    Asymptotes,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Identities, Suite::Oracle, Suite::Moments, Suite::Asymptotes];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "oracle" => Ok(Suite::Oracle),
            "moments" => Ok(Suite::Moments),
            "asymptotes" => Ok(Suite::Asymptotes),
            other => Err(Error::Scenario(format!(
                "unknown suite {other:?}; expected identities, oracle, moments or asymptotes"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        self.measured <= self.bound
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} measured={:.6e} bound={:.6e} {}",
            self.name,
            self.measured,
            self.bound,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Coherence blocks for the simulated checks.
    pub samples: usize,
    pub workers: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            workers: 0,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run_suite(suite: Suite, scenario: &Scenario, opts: &SuiteOptions) -> Result<SuiteReport> {
    let cfg = scenario.config(None)?;
    let ls = scenario.drop(0, None)?;
    let j = scenario.simulation.target_cell;
    let users = cfg.users;
    let mut checks = Vec::new();
    let settings = McSettings {
        n_small_scale: opts.samples,
        workers: opts.workers,
        ..scenario.mc_settings(opts.workers)
    };

    match suite {
        Suite::Identities => {
            let rayleigh = ls.with_shared_k(0.0)?;
            let mut worst = 0.0f64;
            for n in 0..users {
                let r = sinr_rayleigh(&cfg, &rayleigh, j, n)?;
                for kind in EstimatorKind::ALL {
                    worst = worst.max(rel(sinr_closed(&cfg, &rayleigh, j, n, kind)?, r));
                }
            }
            checks.push(Check::new("rayleigh_reduction", worst, 1e-12));

            let mut worst = 0.0f64;
            for n in 0..users {
                for kind in EstimatorKind::ALL {
                    worst = worst.max(rel(
                        sinr_from_moments(&cfg, &ls, kind, j, n)?,
                        sinr_closed(&cfg, &ls, j, n, kind)?,
                    ));
                }
            }
            checks.push(Check::new("moment_assembly", worst, 1e-10));

            let phi = phi_matrix(cfg.antennas, &ls, j);
            let diag = (0..users)
                .map(|n| (phi[[n, n]] - cfg.antennas as f64).abs())
                .fold(0.0, f64::max);
            let off = phi.iter().map(|v| v.abs()).fold(0.0, f64::max) - cfg.antennas as f64;
            checks.push(Check::new("phi_diagonal_equals_m", diag, 0.0));
            checks.push(Check::new("phi_bounded_by_m", off.max(0.0), 1e-9 * cfg.antennas as f64));

            let chi_out = (0..users)
                .map(|n| {
                    let c = mmse_shrinkage(&cfg, &ls, j, n);
                    if c > 0.0 && c <= 1.0 {
                        0.0
                    } else {
                        1.0
                    }
                })
                .fold(0.0, f64::max);
            checks.push(Check::new("shrinkage_in_unit_interval", chi_out, 0.0));
        }
        Suite::Oracle => {
            let exec = Executor::new(opts.workers);
            let est = simulate_drop(&cfg, &ls, &settings, 0, &exec)?;
            for e in &est {
                for n in 0..users {
                    let exact = sinr_closed(&cfg, &ls, j, n, e.kind)?;
                    checks.push(Check::new(
                        format!("oracle_{}_user{n}", e.kind),
                        (e.sinr[n] - exact).abs(),
                        (3.0 * e.std_error[n]).max(0.01 * exact),
                    ));
                }
            }
        }
        Suite::Moments => {
            moment_checks(&cfg, &ls, j, &settings, &mut checks)?;
        }
        Suite::Asymptotes => {
            let big_m = cfg.with_antennas(100_000_000)?;
            let big_k = ls.with_shared_k(1e8)?;
            for kind in EstimatorKind::ALL {
                for n in 0..users {
                    match sinr_limit_large_m(&cfg, &ls, j, n, kind) {
                        Ok(lim) => checks.push(Check::new(
                            format!("large_m_{kind}_user{n}"),
                            rel(sinr_closed(&big_m, &ls, j, n, kind)?, lim),
                            1e-3,
                        )),
                        Err(Error::UnboundedLimit { .. }) => {}
                        Err(e) => return Err(e),
                    }
                    let lim = sinr_limit_large_k(&cfg, &big_k, j, n, kind)?;
                    checks.push(Check::new(
                        format!("large_k_{kind}_user{n}"),
                        rel(sinr_closed(&cfg, &big_k, j, n, kind)?, lim),
                        1e-3,
                    ));
                }
            }
        }
    }
    Ok(SuiteReport { checks })
}

fn moment_checks(
    cfg: &ValidatedConfig,
    ls: &crate::model::LargeScaleRealization,
    j: usize,
    settings: &McSettings,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let n = 0;
    let own = MomentIndices::own(j, n);
    let mut cases = vec![(MomentTerm::A, own), (MomentTerm::B, own), (MomentTerm::F, own)];
    if cfg.users > 1 {
        cases.push((MomentTerm::C, own.with_other(j, 1)));
    }
    if cfg.cells > 1 {
        let l = (j + 1) % cfg.cells;
        cases.push((MomentTerm::D, own.with_other(l, n)));
        if cfg.users > 1 {
            cases.push((MomentTerm::E, own.with_other(l, 1)));
        }
    }
    for kind in EstimatorKind::ALL {
        let exact = moment_a_exact(cfg, ls, kind, j, n)?;
        let closed = crate::moments::closed_form_moment(MomentTerm::A, cfg, ls, kind, own)?;
        checks.push(Check::new(format!("moment_A_exact_{kind}"), rel(exact, closed), 1e-12));
        for &(term, idx) in &cases {
            let est = estimate_moment(term, cfg, ls, kind, idx, settings)?;
            if let Some(cf) = est.closed_form {
                checks.push(Check::new(
                    format!("moment_{term}_{kind}"),
                    (est.mean - cf).abs(),
                    3.0 * est.std_error,
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> Scenario {
        Scenario::parse(
            r#"
            [network]
            cells = 2
            users = 1
            [system]
            antennas = 4
            pilot_len = 1
            coherence = 196
            data_power_db = 0.0
            pilot_power_db = 0.0
            [fixed_gains]
            beta = [[[1.0], [1.0]], [[1.0], [1.0]]]
            k = [[0.0], [0.0]]
            aoa = [[0.0], [0.0]]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn identities_pass_on_reference() {
        let r = run_suite(Suite::Identities, &Scenario::reference(), &SuiteOptions::default()).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn oracle_passes_on_e1() {
        let opts = SuiteOptions {
            samples: 100_000,
            workers: 0,
        };
        let r = run_suite(Suite::Oracle, &e1(), &opts).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 2);
    }

    #[test]
    fn a_is_exact() {
        let opts = SuiteOptions {
            samples: 2_000,
            workers: 0,
        };
        let r = run_suite(Suite::Moments, &e1(), &opts).unwrap();
        let a: Vec<_> = r
            .checks
            .iter()
            .filter(|c| c.name.starts_with("moment_A_exact"))
            .collect();
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|c| c.passed()));
    }

    #[test]
    fn line_format() {
        let c = Check::new("x", 0.5, 1.0);
        assert_eq!(c.to_string(), "x measured=5.000000e-1 bound=1.000000e0 PASS");
        assert!(!Check::new("y", 2.0, 1.0).passed());
    }
}
