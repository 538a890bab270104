//! Hexagonal layout, user drops and the path-loss / shadowing model.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{LargeScaleRealization, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// BS positions of a hexagonal layout.
///
/// Cells are pointy-top hexagons with circumradius `radius`; neighbor centers
/// sit at angles `k·60°` and distance `√3·radius` from the center cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    bs: Vec<Point>,
    radius: f64,
    observed: usize,
}

pub fn build_hex_layout(cells: usize, radius: f64) -> Result<CellLayout> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Dimension(format!("cell radius {radius} must be positive")));
    }
    let bs = match cells {
        1 => vec![Point::ORIGIN],
        7 => {
            let ring = 3f64.sqrt() * radius;
            std::iter::once(Point::ORIGIN)
                .chain((0..6).map(|k| {
                    let a = k as f64 * PI / 3.0;
                    Point::new(ring * a.cos(), ring * a.sin())
                }))
                .collect()
        }
        other => return Err(Error::UnsupportedLayout(other)),
    };
    Ok(CellLayout {
        bs,
        radius,
        observed: 0,
    })
}

impl CellLayout {
    pub fn cells(&self) -> usize {
        self.bs.len()
    }

    pub fn bs_position(&self, cell: usize) -> Point {
        self.bs[cell]
    }

    pub fn bs_positions(&self) -> &[Point] {
        &self.bs
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Index of the target cell (the center cell).
    pub fn observed_cell(&self) -> usize {
        self.observed
    }

    /// Point-in-hexagon test against `cell`, boundary included.
    pub fn contains(&self, cell: usize, p: Point) -> bool {
        let c = self.bs[cell];
        in_hexagon(p.x - c.x, p.y - c.y, self.radius)
    }
}

fn in_hexagon(dx: f64, dy: f64, radius: f64) -> bool {
    let apothem = radius * 3f64.sqrt() / 2.0;
    let tol = 1e-9 * radius;
    (0..3).all(|k| {
        let a = k as f64 * PI / 3.0;
        (dx * a.cos() + dy * a.sin()).abs() <= apothem + tol
    })
}

/// User positions, `positions[cell][user]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDrop {
    pub positions: Vec<Vec<Point>>,
}

/// Uniform point in a hexagon centered at the origin, by rejection from the
/// bounding box (acceptance rate 3/4).
pub fn sample_in_hexagon<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let half_width = radius * 3f64.sqrt() / 2.0;
    loop {
        let x = rng.random_range(-half_width..=half_width);
        let y = rng.random_range(-radius..=radius);
        if in_hexagon(x, y, radius) {
            return Point::new(x, y);
        }
    }
}

pub fn drop_users<R: Rng + ?Sized>(layout: &CellLayout, users: usize, rng: &mut R) -> UserDrop {
    let positions = layout
        .bs
        .iter()
        .map(|c| {
            (0..users)
                .map(|_| {
                    let p = sample_in_hexagon(layout.radius, rng);
                    Point::new(c.x + p.x, c.y + p.y)
                })
                .collect()
        })
        .collect();
    UserDrop { positions }
}

/// `v / (1 + (η/η_min)^α)`.
pub fn large_scale_gain(distance: f64, shadow: f64, alpha: f64, eta_min: f64) -> f64 {
    shadow / (1.0 + (distance / eta_min).powf(alpha))
}

/// Log-normal shadowing factor with `xi_db` dB standard deviation.
pub fn shadowing_draw<R: Rng + ?Sized>(xi_db: f64, rng: &mut R) -> f64 {
    if xi_db == 0.0 {
        return 1.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    10f64.powf(xi_db * z / 10.0)
}

/// Path-loss and shadowing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub shadowing_db: f64,
    pub alpha: f64,
    pub eta_min: f64,
}

impl Propagation {
    pub fn reference() -> Self {
        Self {
            shadowing_db: 8.0,
            alpha: 3.8,
            eta_min: 200.0,
        }
    }
}

/// How Ricean factors are assigned to users.
#[derive(Debug, Clone, PartialEq)]
pub enum KPolicy {
    /// One factor for every user.
    Shared(f64),
    /// One factor per cell, shared by that cell's users.
    PerCell(Vec<f64>),
}

impl KPolicy {
    fn matrix(&self, cells: usize, users: usize) -> Result<Array2<f64>> {
        match self {
            KPolicy::Shared(k) => Ok(Array2::from_elem((cells, users), *k)),
            KPolicy::PerCell(ks) if ks.len() == cells => Ok(Array2::from_shape_fn((cells, users), |(l, _)| ks[l])),
            KPolicy::PerCell(ks) => Err(Error::Dimension(format!(
                "{} per-cell Ricean factors for {cells} cells",
                ks.len()
            ))),
        }
    }
}

/// Fills `β_jln` from distances with independent shadowing per link, then the
/// Ricean factors from `k_policy` and uniform angles of arrival.
pub fn realize_large_scale<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    layout: &CellLayout,
    drop: &UserDrop,
    propagation: &Propagation,
    k_policy: &KPolicy,
    rng: &mut R,
) -> Result<LargeScaleRealization> {
    let (cells, users) = (cfg.cells, cfg.users);
    if layout.cells() != cells || drop.positions.len() != cells || drop.positions.iter().any(|p| p.len() != users) {
        return Err(Error::Dimension(format!(
            "layout/drop shape does not match {cells} cells x {users} users"
        )));
    }
    let mut beta = Array3::zeros((cells, cells, users));
    for j in 0..cells {
        let bs = layout.bs_position(j);
        for l in 0..cells {
            for n in 0..users {
                let shadow = shadowing_draw(propagation.shadowing_db, rng);
                let eta = bs.distance(drop.positions[l][n]);
                beta[[j, l, n]] = large_scale_gain(eta, shadow, propagation.alpha, propagation.eta_min);
            }
        }
    }
    let two_pi = 2.0 * PI;
    let aoa = Array2::from_shape_simple_fn((cells, users), || rng.random_range(0.0..two_pi));
    LargeScaleRealization::new(beta, k_policy.matrix(cells, users)?, aoa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::split_stream;

    #[test]
    fn single_cell_layout() {
        let layout = build_hex_layout(1, 500.0).unwrap();
        assert_eq!(layout.bs_positions(), &[Point::ORIGIN]);
    }

    #[test]
    fn seven_cell_ring_distance() {
        let layout = build_hex_layout(7, 500.0).unwrap();
        assert_eq!(layout.observed_cell(), 0);
        for k in 1..7 {
            let d = layout.bs_position(k).distance(Point::ORIGIN);
            assert!((d - 866.025_403_784_438_6).abs() < 1e-9, "{d}");
        }
        for a in 0..7 {
            for b in (a + 1)..7 {
                assert!(layout.bs_position(a).distance(layout.bs_position(b)) > 1.0);
            }
        }
    }

    #[test]
    fn neighbors_share_an_edge() {
        // The midpoint between two adjacent BSs is on both hexagons' boundary.
        let layout = build_hex_layout(7, 500.0).unwrap();
        let c = layout.bs_position(1);
        let mid = Point::new(c.x / 2.0, c.y / 2.0);
        assert!(layout.contains(0, mid) && layout.contains(1, mid));
        let beyond = Point::new(c.x * 0.51, c.y * 0.51);
        assert!(!layout.contains(0, beyond));
    }

    #[test]
    fn other_cell_counts_are_unsupported() {
        assert!(matches!(build_hex_layout(3, 500.0), Err(Error::UnsupportedLayout(3))));
    }

    #[test]
    fn drops_are_reproducible_and_inside() {
        let layout = build_hex_layout(7, 500.0).unwrap();
        let a = drop_users(&layout, 10, &mut split_stream(9, 0));
        let b = drop_users(&layout, 10, &mut split_stream(9, 0));
        assert_eq!(a, b);
        for (cell, users) in a.positions.iter().enumerate() {
            assert_eq!(users.len(), 10);
            assert!(users.iter().all(|p| layout.contains(cell, *p)));
        }
    }

    #[test]
    fn drop_mean_is_the_cell_center() {
        let layout = build_hex_layout(1, 500.0).unwrap();
        let mut rng = split_stream(11, 0);
        let n = 100_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let p = sample_in_hexagon(500.0, &mut rng);
            assert!(layout.contains(0, p));
            sx += p.x;
            sy += p.y;
        }
        let mean = Point::new(sx / n as f64, sy / n as f64);
        assert!(mean.distance(Point::ORIGIN) < 0.01 * 500.0);
    }

    #[test]
    fn gain_examples() {
        assert_eq!(large_scale_gain(200.0, 1.0, 3.8, 200.0), 0.5);
        let expected = 1.0 / (1.0 + 2f64.powf(3.8));
        assert!((large_scale_gain(400.0, 1.0, 3.8, 200.0) - expected).abs() < 1e-15);
        assert!((expected - 0.066_985).abs() < 1e-6);
        assert_eq!(large_scale_gain(0.0, 1.0, 3.8, 200.0), 1.0);
    }

    #[test]
    fn gain_decreases_with_distance() {
        let mut prev = f64::INFINITY;
        for i in 0..2000 {
            let g = large_scale_gain(i as f64, 1.3, 3.8, 200.0);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn shadowing_spread_matches_xi() {
        let mut rng = split_stream(5, 0);
        let n = 1_000_000;
        let (mut s, mut ss) = (0.0, 0.0);
        for _ in 0..n {
            let db = 10.0 * shadowing_draw(8.0, &mut rng).log10();
            s += db;
            ss += db * db;
        }
        let mean = s / n as f64;
        let sd = (ss / n as f64 - mean * mean).sqrt();
        assert!((sd - 8.0).abs() < 0.02 * 8.0, "sd {sd}");
    }

    fn reference_cfg() -> SystemConfig {
        SystemConfig::uniform(7, 10, 64, 10, 196, 100.0, 1000.0)
    }

    #[test]
    fn realization_follows_policy() {
        let cfg = reference_cfg();
        let layout = build_hex_layout(7, 500.0).unwrap();
        let mut rng = split_stream(1, 0);
        let drop = drop_users(&layout, 10, &mut rng);
        let ls = realize_large_scale(
            &cfg,
            &layout,
            &drop,
            &Propagation::reference(),
            &KPolicy::Shared(4.0),
            &mut rng,
        )
        .unwrap();
        assert!(ls.ricean_k().iter().all(|k| *k == 4.0));

        let flat = Propagation {
            shadowing_db: 0.0,
            ..Propagation::reference()
        };
        let ls = realize_large_scale(&cfg, &layout, &drop, &flat, &KPolicy::Shared(0.0), &mut rng).unwrap();
        for j in 0..7 {
            for l in 0..7 {
                for n in 0..10 {
                    let eta = layout.bs_position(j).distance(drop.positions[l][n]);
                    assert_eq!(ls.beta(j, l, n), large_scale_gain(eta, 1.0, 3.8, 200.0));
                }
            }
        }
    }

    #[test]
    fn realization_is_deterministic() {
        let cfg = reference_cfg();
        let layout = build_hex_layout(7, 500.0).unwrap();
        let run = || {
            let mut rng = split_stream(77, 3);
            let drop = drop_users(&layout, 10, &mut rng);
            realize_large_scale(
                &cfg,
                &layout,
                &drop,
                &Propagation::reference(),
                &KPolicy::Shared(2.0),
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn own_cell_gains_dominate() {
        let cfg = reference_cfg();
        let layout = build_hex_layout(7, 500.0).unwrap();
        let (mut own, mut cross) = (Vec::new(), Vec::new());
        for d in 0..10_000u64 {
            let mut rng = split_stream(2024, d);
            let drop = drop_users(&layout, 10, &mut rng);
            let ls = realize_large_scale(
                &cfg,
                &layout,
                &drop,
                &Propagation::reference(),
                &KPolicy::Shared(0.0),
                &mut rng,
            )
            .unwrap();
            own.push(ls.beta(0, 0, (d % 10) as usize));
            cross.push(ls.beta(0, 1 + (d % 6) as usize, (d % 10) as usize));
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let (mo, mc) = (median(&mut own), median(&mut cross));
        assert!(mo > 10.0 * mc, "own {mo} cross {mc}");
    }

    #[test]
    fn per_cell_policy_shape_is_checked() {
        let cfg = reference_cfg();
        let layout = build_hex_layout(7, 500.0).unwrap();
        let mut rng = split_stream(1, 1);
        let drop = drop_users(&layout, 10, &mut rng);
        let bad = KPolicy::PerCell(vec![1.0; 3]);
        assert!(realize_large_scale(&cfg, &layout, &drop, &Propagation::reference(), &bad, &mut rng).is_err());
        let ok = KPolicy::PerCell((0..7).map(f64::from).collect());
        let ls = realize_large_scale(&cfg, &layout, &drop, &Propagation::reference(), &ok, &mut rng).unwrap();
        assert_eq!(ls.k(3, 9), 3.0);
    }
}
