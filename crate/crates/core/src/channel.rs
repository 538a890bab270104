//! Small-scale channels, pilot observations and data observations at one BS.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use ndarray::{Array2, Array3, ShapeBuilder};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{LargeScaleRealization, SystemConfig};

/// Circularly-symmetric complex Gaussian with `E|z|² = variance`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Uniform-linear-array LOS response: entry `m` is
/// `√β · exp(−i·m·2π·(d/λ)·sin θ)` for `m = 0..M`.
pub fn los_steering(antennas: usize, beta: f64, theta: f64, spacing: f64) -> Vec<Complex64> {
    let amp = beta.sqrt();
    let step = -2.0 * PI * spacing * theta.sin();
    (0..antennas)
        .map(|m| Complex64::from_polar(amp, step * m as f64))
        .collect()
}

/// LOS vectors `h_jjn,LOS` of cell `j`'s own users, rows indexed by user.
///
/// These are known at the BS, which is what lets the estimator strip the LOS
/// part from the pilot observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LosVectors(pub Array2<Complex64>);

impl LosVectors {
    #[inline]
    pub fn get(&self, n: usize) -> &[Complex64] {
        let m = self.0.ncols();
        &self.0.as_slice().expect("standard layout")[n * m..(n + 1) * m]
    }
}

pub fn known_los(cfg: &SystemConfig, ls: &LargeScaleRealization, observed: usize) -> LosVectors {
    let (n, m) = (cfg.users, cfg.antennas);
    let mut los = Array2::zeros((n, m));
    for u in 0..n {
        let v = los_steering(m, ls.beta(observed, observed, u), ls.aoa(observed, u), cfg.spacing);
        los.row_mut(u).assign(&ndarray::Array1::from(v));
    }
    LosVectors(los)
}

/// Channels from every user to the observed BS `j` for one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    observed: usize,
    /// `h[[l, n, ..]] = h_jln`.
    h: Array3<Complex64>,
    /// Full-power LOS vectors `h_jjn,LOS` of the observed cell's users.
    los: Array2<Complex64>,
    /// `nlos[[l, n, ..]] = h_jln,NLOS`.
    nlos: Array3<Complex64>,
}

impl ChannelRealization {
    /// Allocates buffers and computes the LOS vectors, which depend only on the
    /// large-scale state. Call [`redraw`](Self::redraw) to fill the channels.
    pub fn empty(cfg: &SystemConfig, ls: &LargeScaleRealization, observed: usize) -> Result<Self> {
        ls.check_against(cfg)?;
        if observed >= cfg.cells {
            return Err(Error::Dimension(format!(
                "observed cell {observed} out of range for {} cells",
                cfg.cells
            )));
        }
        let (l, n, m) = (cfg.cells, cfg.users, cfg.antennas);
        Ok(Self {
            observed,
            h: Array3::zeros((l, n, m)),
            los: known_los(cfg, ls, observed).0,
            nlos: Array3::zeros((l, n, m)),
        })
    }

    /// Draws fresh NLOS components and recomposes the channels.
    pub fn redraw<R: Rng + ?Sized>(&mut self, ls: &LargeScaleRealization, rng: &mut R) {
        let j = self.observed;
        let (cells, users, _) = self.h.dim();
        for l in 0..cells {
            for n in 0..users {
                let var = ls.beta(j, l, n);
                let mut nlos = self.nlos.slice_mut(ndarray::s![l, n, ..]);
                nlos.iter_mut().for_each(|z| *z = complex_gaussian(var, rng));
                let mut h = self.h.slice_mut(ndarray::s![l, n, ..]);
                if l == j {
                    let k = ls.k(j, n);
                    let (a, b) = ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt());
                    let los = self.los.row(n);
                    ndarray::Zip::from(&mut h)
                        .and(&los)
                        .and(&nlos)
                        .for_each(|h, los, g| *h = los * a + g * b);
                } else {
                    h.assign(&nlos);
                }
            }
        }
    }

    pub fn observed_cell(&self) -> usize {
        self.observed
    }

    pub fn cells(&self) -> usize {
        self.h.dim().0
    }

    pub fn users(&self) -> usize {
        self.h.dim().1
    }

    pub fn antennas(&self) -> usize {
        self.h.dim().2
    }

    /// `h_jln` as a contiguous slice.
    #[inline]
    pub fn h(&self, l: usize, n: usize) -> &[Complex64] {
        let m = self.antennas();
        let off = (l * self.users() + n) * m;
        &self.h.as_slice().expect("standard layout")[off..off + m]
    }

    #[inline]
    pub fn nlos(&self, l: usize, n: usize) -> &[Complex64] {
        let m = self.antennas();
        let off = (l * self.users() + n) * m;
        &self.nlos.as_slice().expect("standard layout")[off..off + m]
    }

    #[inline]
    pub fn los(&self, n: usize) -> &[Complex64] {
        let m = self.antennas();
        &self.los.as_slice().expect("standard layout")[n * m..(n + 1) * m]
    }

    pub fn channels(&self) -> &Array3<Complex64> {
        &self.h
    }
}

pub fn draw_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    observed: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let mut ch = ChannelRealization::empty(cfg, ls, observed)?;
    ch.redraw(ls, rng);
    Ok(ch)
}

/// First `users` columns of the normalized `τ`-point DFT matrix (`τ × N`).
pub fn pilot_matrix(pilot_len: usize, users: usize) -> Result<Array2<Complex64>> {
    if pilot_len < users || users == 0 {
        return Err(Error::Dimension(format!(
            "pilot length {pilot_len} must be >= users {users} >= 1"
        )));
    }
    let norm = (pilot_len as f64).sqrt().recip();
    Ok(Array2::from_shape_fn((pilot_len, users), |(s, t)| {
        let phase = -2.0 * PI * ((s * t) % pilot_len) as f64 / pilot_len as f64;
        Complex64::from_polar(norm, phase)
    }))
}

/// Received pilot matrix `Y` (`M × τ`, columns contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub y: Array2<Complex64>,
}

impl PilotObservation {
    pub fn zeros(antennas: usize, pilot_len: usize) -> Self {
        Self {
            y: Array2::zeros((antennas, pilot_len).f()),
        }
    }

    #[inline]
    pub fn column(&self, s: usize) -> &[Complex64] {
        let m = self.y.nrows();
        &self.y.as_slice_memory_order().expect("column-major")[s * m..(s + 1) * m]
    }
}

/// `Y = Σ_l H_jl (Ω_l + I)^{1/2} P_l^{1/2} Φ† + noise`, written into `out`.
pub fn observe_pilots_into(
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    ch: &ChannelRealization,
    phi: &Array2<Complex64>,
    noise: impl FnMut() -> Complex64,
    out: &mut PilotObservation,
) {
    let (m, tau) = (cfg.antennas, phi.nrows());
    debug_assert_eq!(out.y.dim(), (m, tau));
    let y = out.y.as_slice_memory_order_mut().expect("column-major");
    y.iter_mut()
        .zip(std::iter::repeat_with(noise))
        .for_each(|(v, z)| *v = z);
    for l in 0..cfg.cells {
        for t in 0..cfg.users {
            let gain = ((ls.k(l, t) + 1.0) * cfg.pilot_power(l, t)).sqrt();
            let h = ch.h(l, t);
            for s in 0..tau {
                let w = phi[[s, t]].conj() * gain;
                let col = &mut y[s * m..(s + 1) * m];
                col.iter_mut().zip(h).for_each(|(c, h)| *c += h * w);
            }
        }
    }
}

/// [`observe_pilots_into`] with an explicit `M × τ` noise matrix.
pub fn observe_pilots_with_noise(
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    ch: &ChannelRealization,
    phi: &Array2<Complex64>,
    noise: &Array2<Complex64>,
) -> PilotObservation {
    let mut out = PilotObservation::zeros(cfg.antennas, phi.nrows());
    let mut it = noise.t().iter().copied().collect::<Vec<_>>().into_iter();
    observe_pilots_into(cfg, ls, ch, phi, || it.next().expect("noise shape"), &mut out);
    out
}

/// Pilot observation with unit-variance AWGN drawn from `rng`.
pub fn observe_pilots<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ls: &LargeScaleRealization,
    ch: &ChannelRealization,
    phi: &Array2<Complex64>,
    rng: &mut R,
) -> PilotObservation {
    let mut out = PilotObservation::zeros(cfg.antennas, phi.nrows());
    observe_pilots_into(cfg, ls, ch, phi, || complex_gaussian(1.0, rng), &mut out);
    out
}

/// `y = √ρ_u Σ_l H_jl x_l + n` with `x[[l, n]]` the symbol of user `n` in cell `l`.
pub fn observe_data_with_noise(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    x: &Array2<Complex64>,
    noise: &[Complex64],
) -> Vec<Complex64> {
    let amp = cfg.data_power.sqrt();
    let mut y = noise.to_vec();
    for l in 0..cfg.cells {
        for t in 0..cfg.users {
            let w = x[[l, t]] * amp;
            y.iter_mut().zip(ch.h(l, t)).for_each(|(y, h)| *y += h * w);
        }
    }
    y
}

pub fn observe_data<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    x: &Array2<Complex64>,
    rng: &mut R,
) -> Vec<Complex64> {
    let noise: Vec<_> = (0..cfg.antennas).map(|_| complex_gaussian(1.0, rng)).collect();
    observe_data_with_noise(cfg, ch, x, &noise)
}

/// Unit-modulus symbols with uniform phase, shape `[cells, users]`.
pub fn draw_symbols<R: Rng + ?Sized>(cells: usize, users: usize, rng: &mut R) -> Array2<Complex64> {
    Array2::from_shape_simple_fn((cells, users), || {
        Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
    })
}

// ---------------------------------------------------------------------------
// Binary dump
//
// Layout (little endian):
//   u32            number of dimensions (3)
//   u64 x 3        L, N, M
//   f64 x 2·L·N·M  h[l][n][m] as (re, im), row-major
// ---------------------------------------------------------------------------

pub fn write_dump<W: Write>(ch: &ChannelRealization, mut w: W) -> io::Result<()> {
    let (l, n, m) = ch.h.dim();
    w.write_all(&3u32.to_le_bytes())?;
    for d in [l, n, m] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for z in ch.h.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> io::Result<Array3<Complex64>> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != 3 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "expected 3 dimensions"));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        r.read_exact(&mut b8)?;
        *d = u64::from_le_bytes(b8) as usize;
    }
    let mut data = Vec::with_capacity(dims.iter().product());
    for _ in 0..dims.iter().product::<usize>() {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        data.push(Complex64::new(re, f64::from_le_bytes(b8)));
    }
    Array3::from_shape_vec((dims[0], dims[1], dims[2]), data).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
