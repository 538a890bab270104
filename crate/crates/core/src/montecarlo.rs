//! Monte-Carlo estimation of the effective SINR and of its moments.
//!
//! Each coherence block draws fresh NLOS channels and pilot noise, forms the
//! LS and MMSE composite estimates at the observed BS, and records the
//! inner products the SINR is built from. Blocks are grouped into at most
//! [`MAX_BATCHES`] contiguous batches; batch sums are reduced in index order
//! and also drive a jackknife for the standard errors.

use std::ops::Range;

use ndarray::Array2;
use num_complex::Complex64;

use crate::analytics::spectral_efficiency;
use crate::channel::{
    complex_gaussian, draw_symbols, known_los, observe_data, observe_pilots_into, pilot_matrix, ChannelRealization,
    LosVectors, PilotObservation,
};
use crate::error::{Error, Result};
use crate::estimation::{compose, correlate, remove_los_in_place, EstimateSet, EstimatorKind};
use crate::exec::Executor;
use crate::model::{LargeScaleRealization, SystemConfig, ValidatedConfig};
use crate::moments::{closed_form_moment, shrinkage, MomentIndices, MomentTerm};
use crate::stream::{stream_for, Domain};

pub const MAX_BATCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    /// Number of user drops, used by sweeps.
    pub n_large_scale: usize,
    /// Coherence blocks per drop.
    pub n_small_scale: usize,
    pub seed: u64,
    /// Observed BS `j`.
    pub target_cell: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_large_scale: 1,
            n_small_scale: 10_000,
            seed: 0,
            target_cell: 0,
            workers: 0,
        }
    }
}

/// Empirical SINR of every user in the observed cell for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSinr {
    pub kind: EstimatorKind,
    pub sinr: Vec<f64>,
    pub std_error: Vec<f64>,
    pub sum_se: f64,
    pub sum_se_std_error: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub term: MomentTerm,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// `None` when the closed form does not apply (off-grid spacing for C).
    pub closed_form: Option<f64>,
    pub indices: MomentIndices,
}

/// MRC outputs `r_n = ĥ_n† y` for every user of the observed cell.
pub fn mrc_combine(estimates: &EstimateSet, y: &[Complex64]) -> Vec<Complex64> {
    (0..estimates.users()).map(|n| dot(estimates.get(n), y)).collect()
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(a, b)| a.conj() * b).sum()
}

// ============================================================================
// Block sampler
// ============================================================================

struct Sampler<'a> {
    cfg: &'a SystemConfig,
    ls: &'a LargeScaleRealization,
    phi: &'a Array2<Complex64>,
    los: &'a LosVectors,
    j: usize,
    ch: ChannelRealization,
    obs: PilotObservation,
    /// LS NLOS estimates `ĝ_n`, one row per user.
    ghat: Array2<Complex64>,
}

impl<'a> Sampler<'a> {
    fn new(
        cfg: &'a SystemConfig,
        ls: &'a LargeScaleRealization,
        phi: &'a Array2<Complex64>,
        los: &'a LosVectors,
        j: usize,
    ) -> Result<Self> {
        Ok(Self {
            cfg,
            ls,
            phi,
            los,
            j,
            ch: ChannelRealization::empty(cfg, ls, j)?,
            obs: PilotObservation::zeros(cfg.antennas, cfg.pilot_len),
            ghat: Array2::zeros((cfg.users, cfg.antennas)),
        })
    }

    /// Channels, pilots and LS NLOS estimates for block `sample` of `drop`.
    fn draw(&mut self, seed: u64, drop: u64, sample: u64) {
        let mut rng = stream_for(seed, Domain::SmallScale, drop, sample);
        self.ch.redraw(self.ls, &mut rng);
        observe_pilots_into(
            self.cfg,
            self.ls,
            &self.ch,
            self.phi,
            || complex_gaussian(1.0, &mut rng),
            &mut self.obs,
        );
        remove_los_in_place(&mut self.obs, self.phi, self.cfg, self.ls, self.j, self.los);
        for n in 0..self.cfg.users {
            let row = self.ghat.row_mut(n).into_slice().expect("standard layout");
            correlate(&self.obs, self.phi, self.cfg, self.j, n, row);
        }
    }

    fn ghat(&self, n: usize) -> &[Complex64] {
        self.ghat.row(n).to_slice().expect("standard layout")
    }

    fn composite(&self, n: usize, c: f64, out: &mut [Complex64]) {
        compose(self.ls.k(self.j, n), self.los.get(n), self.ghat(n), c, out);
    }
}

struct Shared {
    phi: Array2<Complex64>,
    los: LosVectors,
}

impl Shared {
    fn new(cfg: &SystemConfig, ls: &LargeScaleRealization, j: usize) -> Result<Self> {
        ls.check_against(cfg)?;
        if j >= cfg.cells {
            return Err(Error::Index(format!(
                "target cell {j} out of range for {} cells",
                cfg.cells
            )));
        }
        Ok(Self {
            phi: pilot_matrix(cfg.pilot_len, cfg.users)?,
            los: known_los(cfg, ls, j),
        })
    }
}

// ============================================================================
// Batching and jackknife
// ============================================================================

struct Batch {
    sums: Vec<f64>,
    count: usize,
}

fn batch_range(n: usize, batches: usize, b: usize) -> Range<usize> {
    b * n / batches..(b + 1) * n / batches
}

fn run_batches<F>(exec: &Executor, n: usize, f: F) -> Vec<Batch>
where
    F: Fn(Range<usize>) -> Vec<f64> + Sync + Send,
{
    let batches = n.min(MAX_BATCHES);
    exec.map_indexed(batches, |b| {
        let r = batch_range(n, batches, b);
        Batch {
            count: r.len(),
            sums: f(r),
        }
    })
}

fn totals(batches: &[Batch]) -> Batch {
    let mut sums = vec![0.0; batches[0].sums.len()];
    let mut count = 0;
    for b in batches {
        sums.iter_mut().zip(&b.sums).for_each(|(s, x)| *s += x);
        count += b.count;
    }
    Batch { sums, count }
}

/// Plug-in estimate `θ(mean)` and delete-one-batch jackknife standard errors.
fn jackknife<F>(batches: &[Batch], theta: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let total = totals(batches);
    let mean = |sums: &[f64], count: usize| sums.iter().map(|s| s / count as f64).collect::<Vec<_>>();
    let full = theta(&mean(&total.sums, total.count));
    let b = batches.len() as f64;
    let loo: Vec<Vec<f64>> = batches
        .iter()
        .map(|batch| {
            let rest: Vec<f64> = total.sums.iter().zip(&batch.sums).map(|(t, s)| t - s).collect();
            theta(&mean(&rest, total.count - batch.count))
        })
        .collect();
    let se = (0..full.len())
        .map(|i| {
            let avg = loo.iter().map(|v| v[i]).sum::<f64>() / b;
            let ss: f64 = loo.iter().map(|v| (v[i] - avg).powi(2)).sum();
            ((b - 1.0) / b * ss).sqrt()
        })
        .collect();
    (full, se)
}

fn require_samples(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InsufficientSamples(n))
    } else {
        Ok(())
    }
}

// ============================================================================
// Empirical SINR
// ============================================================================

const SINR_FIELDS: usize = 4;

/// Per-block sums for both estimators: for each `(kind, user)` the fields
/// `Re x, Im x, q, f` with `x = ĥ†h_jjn`, `q = Σ_{l,t} |ĥ†h_jlt|²`, `f = ‖ĥ‖²`.
fn accumulate_sinr(s: &Sampler, chi: &[f64], sums: &mut [f64]) {
    let (cells, users, j) = (s.cfg.cells, s.cfg.users, s.j);
    let mut p_los = vec![Complex64::default(); cells * users];
    let mut p_g = vec![Complex64::default(); cells * users];
    for n in 0..users {
        let los = s.los.get(n);
        let g = s.ghat(n);
        for l in 0..cells {
            for t in 0..users {
                let h = s.ch.h(l, t);
                p_los[l * users + t] = dot(los, h);
                p_g[l * users + t] = dot(g, h);
            }
        }
        let los2: f64 = los.iter().map(|z| z.norm_sqr()).sum();
        let g2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        let cross = dot(los, g).re;
        let k = s.ls.k(j, n);
        let a = (k / (k + 1.0)).sqrt();
        for (ki, c) in [1.0, chi[n]].into_iter().enumerate() {
            let b = (1.0 / (k + 1.0)).sqrt() * c;
            let x = p_los[j * users + n] * a + p_g[j * users + n] * b;
            let q: f64 = p_los
                .iter()
                .zip(&p_g)
                .map(|(pl, pg)| (pl * a + pg * b).norm_sqr())
                .sum();
            let f = a * a * los2 + b * b * g2 + 2.0 * a * b * cross;
            let base = (ki * users + n) * SINR_FIELDS;
            sums[base] += x.re;
            sums[base + 1] += x.im;
            sums[base + 2] += q;
            sums[base + 3] += f;
        }
    }
}

/// Empirical SINR of every user in `settings.target_cell`, for both
/// estimators from the same draws, using small-scale streams of `drop`.
pub fn simulate_drop(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    settings: &McSettings,
    drop: u64,
    exec: &Executor,
) -> Result<[EmpiricalSinr; 2]> {
    let n = settings.n_small_scale;
    require_samples(n)?;
    let j = settings.target_cell;
    let shared = Shared::new(cfg, ls, j)?;
    let users = cfg.users;
    let chi: Vec<f64> = (0..users)
        .map(|t| shrinkage(cfg, ls, EstimatorKind::Mmse, j, t))
        .collect();

    let batches = run_batches(exec, n, |range| {
        let mut s = Sampler::new(cfg, ls, &shared.phi, &shared.los, j).expect("checked above");
        let mut sums = vec![0.0; 2 * users * SINR_FIELDS];
        for sample in range {
            s.draw(settings.seed, drop, sample as u64);
            accumulate_sinr(&s, &chi, &mut sums);
        }
        sums
    });

    let rho_u = cfg.data_power;
    let (coherence, tau) = (cfg.coherence, cfg.pilot_len);
    // Output layout: SINR per (kind, user), then sum SE per kind.
    let theta = |m: &[f64]| {
        let mut out = Vec::with_capacity(2 * users + 2);
        for ki in 0..2 {
            for n in 0..users {
                let b = (ki * users + n) * SINR_FIELDS;
                let a = m[b] * m[b] + m[b + 1] * m[b + 1];
                out.push(rho_u * a / (rho_u * (m[b + 2] - a) + m[b + 3]));
            }
        }
        for ki in 0..2 {
            let se = out[ki * users..(ki + 1) * users]
                .iter()
                .map(|&s| spectral_efficiency(s, coherence, tau))
                .sum();
            out.push(se);
        }
        out
    };
    let (est, se) = jackknife(&batches, theta);

    Ok(EstimatorKind::ALL.map(|kind| {
        let ki = kind_index(kind);
        EmpiricalSinr {
            kind,
            sinr: est[ki * users..(ki + 1) * users].to_vec(),
            std_error: se[ki * users..(ki + 1) * users].to_vec(),
            sum_se: est[2 * users + ki],
            sum_se_std_error: se[2 * users + ki],
            n_samples: n,
        }
    }))
}

fn kind_index(kind: EstimatorKind) -> usize {
    match kind {
        EstimatorKind::Ls => 0,
        EstimatorKind::Mmse => 1,
    }
}

/// Empirical SINR for one estimator on drop 0.
pub fn estimate_sinr_empirical(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    settings: &McSettings,
) -> Result<EmpiricalSinr> {
    let exec = Executor::new(settings.workers);
    let [ls_est, mmse_est] = simulate_drop(cfg, ls, settings, 0, &exec)?;
    Ok(match kind {
        EstimatorKind::Ls => ls_est,
        EstimatorKind::Mmse => mmse_est,
    })
}

// ============================================================================
// Moments
// ============================================================================

/// Sample estimate of one moment, drawn on drop 0 at the cell `indices.cell`.
///
/// B to F are plain sample means with `sd/√n` errors. A is `|x̄|²`, whose
/// error comes from the delta method on the real and imaginary parts of `x`.
pub fn estimate_moment(
    term: MomentTerm,
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    indices: MomentIndices,
    settings: &McSettings,
) -> Result<MomentEstimate> {
    let n = settings.n_small_scale;
    require_samples(n)?;
    indices.check(term, cfg.cells, cfg.users)?;
    let (j, user) = (indices.cell, indices.user);
    let shared = Shared::new(cfg, ls, j)?;
    let c = shrinkage(cfg, ls, kind, j, user);
    let (tl, tt) = indices.target(term);
    let exec = Executor::new(settings.workers);

    let batches = run_batches(&exec, n, |range| {
        let mut s = Sampler::new(cfg, ls, &shared.phi, &shared.los, j).expect("checked above");
        let mut h_hat = vec![Complex64::default(); cfg.antennas];
        // A: Re, Im, Re², Im², Re·Im. Others: x, x².
        let mut sums = vec![0.0; 5];
        for sample in range {
            s.draw(settings.seed, 0, sample as u64);
            s.composite(user, c, &mut h_hat);
            if term == MomentTerm::A {
                let x = dot(&h_hat, s.ch.h(tl, tt));
                sums[0] += x.re;
                sums[1] += x.im;
                sums[2] += x.re * x.re;
                sums[3] += x.im * x.im;
                sums[4] += x.re * x.im;
            } else {
                let v = match term {
                    MomentTerm::F => h_hat.iter().map(|z| z.norm_sqr()).sum(),
                    _ => dot(&h_hat, s.ch.h(tl, tt)).norm_sqr(),
                };
                sums[0] += v;
                sums[1] += v * v;
            }
        }
        sums
    });

    let t = totals(&batches);
    let nf = n as f64;
    let m: Vec<f64> = t.sums.iter().map(|s| s / nf).collect();
    let (mean, std_error) = if term == MomentTerm::A {
        let (re, im) = (m[0], m[1]);
        let vrr = (m[2] - re * re) * nf / (nf - 1.0);
        let vii = (m[3] - im * im) * nf / (nf - 1.0);
        let vri = (m[4] - re * im) * nf / (nf - 1.0);
        let var = 4.0 * (re * re * vrr + im * im * vii + 2.0 * re * im * vri) / nf;
        (re * re + im * im, var.max(0.0).sqrt())
    } else {
        let var = (m[1] - m[0] * m[0]) * nf / (nf - 1.0);
        (m[0], (var.max(0.0) / nf).sqrt())
    };

    let closed_form = match closed_form_moment(term, cfg, ls, kind, indices) {
        Ok(v) => Some(v),
        Err(Error::Spacing(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MomentEstimate {
        term,
        mean,
        std_error,
        n_samples: n,
        closed_form,
        indices,
    })
}

/// `A` from the realized LOS vectors with the NLOS part averaged out:
/// `(a²‖los‖² + b²·c·Mβ)²`. Noise-free, so it checks the LOS bookkeeping
/// independently of the sampler.
pub fn moment_a_exact(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    cell: usize,
    user: usize,
) -> Result<f64> {
    MomentIndices::own(cell, user).check(MomentTerm::A, cfg.cells, cfg.users)?;
    let los = known_los(cfg, ls, cell);
    let los2: f64 = los.get(user).iter().map(|z| z.norm_sqr()).sum();
    let k = ls.k(cell, user);
    let c = shrinkage(cfg, ls, kind, cell, user);
    let m = cfg.antennas as f64;
    Ok((k / (k + 1.0) * los2 + c / (k + 1.0) * m * ls.beta(cell, cell, user)).powi(2))
}

// ============================================================================
// Symbol-level path
// ============================================================================

/// SINR measured on MRC outputs of simulated data symbols:
/// `|E{r x*}|² / (E|r|² − |E{r x*}|²)`.
///
/// Each coherence block carries `symbols_per_block` symbol periods.
pub fn estimate_sinr_symbol_level(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    kind: EstimatorKind,
    settings: &McSettings,
    symbols_per_block: usize,
) -> Result<EmpiricalSinr> {
    let n = settings.n_small_scale;
    require_samples(n)?;
    if symbols_per_block == 0 {
        return Err(Error::InsufficientSamples(0));
    }
    let j = settings.target_cell;
    let shared = Shared::new(cfg, ls, j)?;
    let users = cfg.users;
    let c: Vec<f64> = (0..users).map(|t| shrinkage(cfg, ls, kind, j, t)).collect();
    let exec = Executor::new(settings.workers);

    let batches = run_batches(&exec, n, |range| {
        let mut s = Sampler::new(cfg, ls, &shared.phi, &shared.los, j).expect("checked above");
        let mut est = EstimateSet {
            kind,
            h_hat: Array2::zeros((users, cfg.antennas)),
            chi: c.clone(),
        };
        let mut sums = vec![0.0; 3 * users];
        for sample in range {
            s.draw(settings.seed, 0, sample as u64);
            for (t, &ct) in c.iter().enumerate() {
                let row = est.h_hat.row_mut(t).into_slice().expect("standard layout");
                s.composite(t, ct, row);
            }
            let mut rng = stream_for(settings.seed, Domain::Symbols, 0, sample as u64);
            for _ in 0..symbols_per_block {
                let x = draw_symbols(cfg.cells, users, &mut rng);
                let y = observe_data(cfg, &s.ch, &x, &mut rng);
                for (t, r) in mrc_combine(&est, &y).into_iter().enumerate() {
                    let rx = r * x[[j, t]].conj();
                    sums[3 * t] += rx.re;
                    sums[3 * t + 1] += rx.im;
                    sums[3 * t + 2] += r.norm_sqr();
                }
            }
        }
        sums
    });

    let (coherence, tau) = (cfg.coherence, cfg.pilot_len);
    // Batch means are per block; rescale to per symbol.
    let per = symbols_per_block as f64;
    let theta = |m: &[f64]| {
        let mut out: Vec<f64> = (0..users)
            .map(|t| {
                let p = (m[3 * t].powi(2) + m[3 * t + 1].powi(2)) / (per * per);
                p / (m[3 * t + 2] / per - p)
            })
            .collect();
        out.push(out.iter().map(|&s| spectral_efficiency(s, coherence, tau)).sum());
        out
    };
    let (est, se) = jackknife(&batches, theta);
    Ok(EmpiricalSinr {
        kind,
        sinr: est[..users].to_vec(),
        std_error: se[..users].to_vec(),
        sum_se: est[users],
        sum_se_std_error: se[users],
        n_samples: n,
    })
}
