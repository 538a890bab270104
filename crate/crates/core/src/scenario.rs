//! Scenario files.
//!
//! A scenario is a TOML document describing the network, propagation,
//! powers, Ricean factor policy and simulation sizes. Unknown keys are
//! rejected. Gains are either drawn from the hexagonal layout, one drop per
//! large-scale index, or given explicitly in a `[fixed_gains]` table.
//!
//! ```toml
//! [network]
//! cells = 7
//! users = 10
//! radius = 500.0
//!
//! [propagation]
//! shadowing_db = 8.0
//! path_loss_exponent = 3.8
//! reference_distance = 200.0
//!
//! [system]
//! antennas = 100
//! pilot_len = 10
//! coherence = 196
//! data_power_db = 20.0
//! pilot_power_db = 30.0
//! spacing = 0.5
//!
//! [ricean]
//! k_db = 6.0            # or per_cell_k_db = [..], one entry per cell
//!
//! [simulation]
//! seed = 1
//! drops = 50
//! blocks = 50
//! target_cell = 0
//! ```

use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_hex_layout, drop_users, realize_large_scale, KPolicy, Propagation};
use crate::model::{
    db_to_linear, validate_config_for_simulation, LargeScaleRealization, SystemConfig, ValidatedConfig,
};
use crate::montecarlo::McSettings;
use crate::stream::{stream_for, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: Network,
    #[serde(default)]
    pub propagation: PropagationSection,
    pub system: SystemSection,
    #[serde(default)]
    pub ricean: Ricean,
    #[serde(default)]
    pub simulation: Simulation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_gains: Option<FixedGains>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub cells: usize,
    pub users: usize,
    /// Center-to-vertex cell radius in meters.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    500.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub shadowing_db: f64,
    pub path_loss_exponent: f64,
    pub reference_distance: f64,
}

impl Default for PropagationSection {
    fn default() -> Self {
        let p = Propagation::reference();
        Self {
            shadowing_db: p.shadowing_db,
            path_loss_exponent: p.alpha,
            reference_distance: p.eta_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: usize,
    pub pilot_len: usize,
    pub coherence: usize,
    pub data_power_db: f64,
    pub pilot_power_db: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ricean {
    /// Shared factor in dB; `-inf` gives Rayleigh fading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_db: Option<f64>,
    /// One factor per cell in dB, shared by that cell's users.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_cell_k_db: Option<Vec<f64>>,
}

impl Default for Ricean {
    fn default() -> Self {
        Self {
            k_db: Some(f64::NEG_INFINITY),
            per_cell_k_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    pub seed: u64,
    /// Large-scale drops averaged per sweep point.
    pub drops: usize,
    /// Coherence blocks per drop.
    pub blocks: usize,
    pub target_cell: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            seed: 1,
            drops: 50,
            blocks: 50,
            target_cell: 0,
        }
    }
}

/// Explicit large-scale state; replaces the random drops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedGains {
    /// `beta[j][l][n]`, linear.
    pub beta: Vec<Vec<Vec<f64>>>,
    /// `k[l][n]`, linear. Overrides `[ricean]` unless a sweep sets K.
    pub k: Vec<Vec<f64>>,
    /// `aoa[l][n]` in radians.
    pub aoa: Vec<Vec<f64>>,
}

impl Scenario {
    /// Seven-cell hexagonal network, ten users per cell, 30 dB pilots and
    /// 20 dB data.
    pub fn reference() -> Self {
        Self {
            network: Network {
                cells: 7,
                users: 10,
                radius: 500.0,
            },
            propagation: PropagationSection::default(),
            system: SystemSection {
                antennas: 100,
                pilot_len: 10,
                coherence: 196,
                data_power_db: 20.0,
                pilot_power_db: 30.0,
                spacing: 0.5,
            },
            ricean: Ricean {
                k_db: Some(6.0),
                per_cell_k_db: None,
            },
            simulation: Simulation::default(),
            fixed_gains: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        match (&self.ricean.k_db, &self.ricean.per_cell_k_db) {
            (Some(_), Some(_)) => return bad("[ricean] sets both k_db and per_cell_k_db".into()),
            (None, None) if self.fixed_gains.is_none() => return bad("[ricean] needs k_db or per_cell_k_db".into()),
            (_, Some(v)) if v.len() != self.network.cells => {
                return bad(format!(
                    "per_cell_k_db has {} entries for {} cells",
                    v.len(),
                    self.network.cells
                ))
            }
            _ => {}
        }
        if self.simulation.target_cell >= self.network.cells {
            return bad(format!("target_cell {} out of range", self.simulation.target_cell));
        }
        if self.fixed_gains.is_none() {
            build_hex_layout(self.network.cells, self.network.radius)?;
        }
        if let Some(g) = &self.fixed_gains {
            g.realization()?;
        }
        Ok(())
    }

    /// System configuration at `antennas` BS antennas (the file's value if
    /// `None`). Off-grid spacing is accepted; closed forms reject it later.
    pub fn config(&self, antennas: Option<usize>) -> Result<ValidatedConfig> {
        let s = &self.system;
        let mut cfg = SystemConfig::uniform(
            self.network.cells,
            self.network.users,
            antennas.unwrap_or(s.antennas),
            s.pilot_len,
            s.coherence,
            db_to_linear(s.data_power_db),
            db_to_linear(s.pilot_power_db),
        );
        cfg.spacing = s.spacing;
        Ok(validate_config_for_simulation(cfg)?)
    }

    /// Ricean factors, optionally replaced by one shared linear value.
    pub fn k_policy(&self, shared_k: Option<f64>) -> KPolicy {
        if let Some(k) = shared_k {
            return KPolicy::Shared(k);
        }
        match (&self.ricean.k_db, &self.ricean.per_cell_k_db) {
            (_, Some(v)) => KPolicy::PerCell(v.iter().map(|&d| db_to_linear(d)).collect()),
            (Some(d), None) => KPolicy::Shared(db_to_linear(*d)),
            (None, None) => KPolicy::Shared(0.0),
        }
    }

    pub fn propagation(&self) -> Propagation {
        Propagation {
            shadowing_db: self.propagation.shadowing_db,
            alpha: self.propagation.path_loss_exponent,
            eta_min: self.propagation.reference_distance,
        }
    }

    /// Large-scale state of drop `index`. The geometry, shadowing and angles
    /// depend only on the seed and the index, so every sweep point sees the
    /// same drops.
    pub fn drop(&self, index: u64, shared_k: Option<f64>) -> Result<LargeScaleRealization> {
        if let Some(g) = &self.fixed_gains {
            let ls = g.realization()?;
            return match shared_k {
                Some(k) => ls.with_shared_k(k),
                None => Ok(ls),
            };
        }
        let cfg = self.config(None)?;
        let layout = build_hex_layout(self.network.cells, self.network.radius)?;
        let mut rng = stream_for(self.simulation.seed, Domain::LargeScale, index, 0);
        let users = drop_users(&layout, self.network.users, &mut rng);
        realize_large_scale(
            &cfg,
            &layout,
            &users,
            &self.propagation(),
            &self.k_policy(shared_k),
            &mut rng,
        )
    }

    pub fn mc_settings(&self, workers: usize) -> McSettings {
        McSettings {
            n_large_scale: self.simulation.drops,
            n_small_scale: self.simulation.blocks,
            seed: self.simulation.seed,
            target_cell: self.simulation.target_cell,
            workers,
        }
    }
}

impl FixedGains {
    pub fn realization(&self) -> Result<LargeScaleRealization> {
        let shape_err = |what: &str| Error::Scenario(format!("[fixed_gains] {what} is not rectangular"));
        let l = self.beta.len();
        let n = self.k.first().map_or(0, Vec::len);
        let flat: Vec<f64> = self.beta.iter().flatten().flatten().copied().collect();
        let beta = Array3::from_shape_vec((l, l, n), flat).map_err(|_| shape_err("beta"))?;
        let k = Array2::from_shape_vec((self.k.len(), n), self.k.concat()).map_err(|_| shape_err("k"))?;
        let aoa = Array2::from_shape_vec((self.aoa.len(), n), self.aoa.concat()).map_err(|_| shape_err("aoa"))?;
        if self.beta.iter().any(|r| r.len() != l || r.iter().any(|v| v.len() != n)) {
            return Err(shape_err("beta"));
        }
        LargeScaleRealization::new(beta, k, aoa).map_err(|e| Error::Scenario(format!("[fixed_gains] {e}")))
    }
}
