//! Parameter sweeps of the sum spectral efficiency.
//!
//! A sweep varies the antenna count or the shared Ricean factor along the
//! x-axis, optionally over a family of values of the other parameter, and
//! records for each point and estimator the drop-averaged sum SE from the
//! closed form, from simulation, and from the matching asymptote.
//!
//! Every point reuses the same drops and the same small-scale streams, so
//! differences between points are not masked by resampling noise.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analytics::{sinr_closed, sinr_limit_large_k, sinr_limit_large_m, spectral_efficiency};
use crate::channel::{draw_channel, write_dump};
use crate::error::{Error, Result};
use crate::estimation::EstimatorKind;
use crate::exec::Executor;
use crate::model::{db_to_linear, LargeScaleRealization, ValidatedConfig};
use crate::montecarlo::{simulate_drop, McSettings};
use crate::scenario::Scenario;
use crate::stream::{stream_for, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// BS antenna count `M`.
    Antennas,
    /// Shared Ricean factor in dB; `-inf` is Rayleigh.
    KDb,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Antennas => "M",
            Axis::KDb => "K_dB",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M" => Ok(Axis::Antennas),
            "K_dB" => Ok(Axis::KDb),
            other => Err(Error::Sweep(format!("unknown axis {other:?}; expected M or K_dB"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub points: Vec<f64>,
    /// Curve family over the other parameter.
    pub series: Option<(Axis, Vec<f64>)>,
    pub estimators: Vec<EstimatorKind>,
    pub include_asymptotes: bool,
    pub include_monte_carlo: bool,
}

impl SweepSpec {
    /// Parses `AXIS:POINTS[;AXIS:POINTS][;est:KINDS]`, where POINTS is a
    /// comma list or an inclusive range `start..end:step`. Example:
    /// `M:50..500:50;K_dB:-inf,3,6,10;est:ls,mmse`.
    ///
    /// The flags start off and are set by the caller.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes = Vec::new();
        let mut estimators = None;
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once(':')
                .ok_or_else(|| Error::Sweep(format!("expected KEY:VALUES in {part:?}")))?;
            if key.trim() == "est" {
                let kinds = values
                    .split(',')
                    .map(|v| v.trim().parse::<EstimatorKind>().map_err(Error::Sweep))
                    .collect::<Result<Vec<_>>>()?;
                estimators = Some(kinds);
                continue;
            }
            let axis: Axis = key.parse()?;
            axes.push((axis, parse_points(axis, values)?));
        }
        let mut axes = axes.into_iter();
        let (axis, points) = axes.next().ok_or_else(|| Error::Sweep("no sweep axis given".into()))?;
        let series = axes.next();
        if axes.next().is_some() {
            return Err(Error::Sweep("at most two axes are supported".into()));
        }
        if let Some((s, _)) = &series {
            if *s == axis {
                return Err(Error::Sweep(format!("axis {} given twice", axis.as_str())));
            }
        }
        let estimators = estimators.unwrap_or_else(|| EstimatorKind::ALL.to_vec());
        if estimators.is_empty() {
            return Err(Error::Sweep("no estimators".into()));
        }
        Ok(Self {
            axis,
            points,
            series,
            estimators,
            include_asymptotes: false,
            include_monte_carlo: false,
        })
    }
}

fn parse_points(axis: Axis, text: &str) -> Result<Vec<f64>> {
    let err = |m: String| Error::Sweep(format!("{}: {m}", axis.as_str()));
    let text = text.trim();
    let mut points = Vec::new();
    for item in text.split(',').map(str::trim).filter(|v| !v.is_empty()) {
        let Some((start, rest)) = item.split_once("..") else {
            points.push(num(item)?);
            continue;
        };
        let (end, step) = rest
            .split_once(':')
            .ok_or_else(|| err(format!("range {item:?} needs a step, as in 50..500:50")))?;
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if step.is_nan() || step <= 0.0 || !start.is_finite() || !end.is_finite() {
            return Err(err(format!("bad range {item:?}")));
        }
        let count = ((end - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Err(err(format!("empty range {item:?}")));
        }
        points.extend((0..=count as usize).map(|i| start + step * i as f64));
    }
    if points.is_empty() {
        return Err(err("no points".into()));
    }
    if points
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(err("points must be strictly increasing".into()));
    }
    for &p in &points {
        let ok = match axis {
            Axis::Antennas => p >= 1.0 && p.fract() == 0.0,
            Axis::KDb => !p.is_nan() && p != f64::INFINITY,
        };
        if !ok {
            return Err(err(format!("invalid point {p}")));
        }
    }
    Ok(points)
}

fn num(s: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Sweep(format!("not a number: {s:?}"))),
    }
}

// ============================================================================
// Results
// ============================================================================

/// One CSV row. Column order is part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub axis: &'static str,
    pub axis_value: f64,
    pub series: &'static str,
    pub series_value: Option<f64>,
    pub estimator: &'static str,
    pub sum_se_closed: f64,
    pub sum_se_empirical: Option<f64>,
    pub sum_se_empirical_stderr: Option<f64>,
    pub sum_se_asymptote: Option<f64>,
    pub asymptote: &'static str,
    pub seed: u64,
    pub drops: usize,
    pub blocks: usize,
}

pub const CSV_HEADER: &str = "axis,axis_value,series,series_value,estimator,sum_se_closed,sum_se_empirical,\
sum_se_empirical_stderr,sum_se_asymptote,asymptote,seed,drops,blocks";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<ResultRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Rows of one curve, in axis order.
    pub fn curve(&self, kind: EstimatorKind, series_value: Option<f64>) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.estimator == kind.as_str() && same(r.series_value, series_value))
            .collect()
    }

    pub fn series_values(&self) -> Vec<Option<f64>> {
        match &self.spec.series {
            Some((_, v)) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }
}

fn same(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y || (x.is_infinite() && y.is_infinite() && x.signum() == y.signum()),
        (None, None) => true,
        _ => false,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

// ============================================================================
// Execution
// ============================================================================

struct PointJob {
    antennas: usize,
    k: Option<f64>,
}

struct PerKind {
    closed: f64,
    empirical: Option<(f64, f64)>,
    asymptote: Option<f64>,
}

/// Sum SE over the observed cell's users for one drop.
fn drop_values(
    cfg: &ValidatedConfig,
    ls: &LargeScaleRealization,
    spec: &SweepSpec,
    settings: &McSettings,
    drop: u64,
    exec: &Executor,
) -> Result<Vec<PerKind>> {
    let j = settings.target_cell;
    let se = |s: f64| spectral_efficiency(s, cfg.coherence, cfg.pilot_len);
    let empirical = if spec.include_monte_carlo {
        Some(simulate_drop(cfg, ls, settings, drop, exec)?)
    } else {
        None
    };
    spec.estimators
        .iter()
        .map(|&kind| {
            let mut closed = 0.0;
            let mut asym = Some(0.0);
            for n in 0..cfg.users {
                closed += se(sinr_closed(cfg, ls, j, n, kind)?);
                if spec.include_asymptotes {
                    let limit = match spec.axis {
                        Axis::Antennas => sinr_limit_large_m(cfg, ls, j, n, kind),
                        Axis::KDb => sinr_limit_large_k(cfg, ls, j, n, kind),
                    };
                    asym = match (asym, limit) {
                        (Some(a), Ok(v)) => Some(a + se(v)),
                        (_, Err(Error::UnboundedLimit { .. })) | (None, _) => None,
                        (_, Err(e)) => return Err(e),
                    };
                }
            }
            let empirical = empirical.as_ref().map(|e| {
                let e = &e[kind_slot(kind)];
                (e.sum_se, e.sum_se_std_error)
            });
            Ok(PerKind {
                closed,
                empirical,
                asymptote: asym.filter(|_| spec.include_asymptotes),
            })
        })
        .collect()
}

fn kind_slot(kind: EstimatorKind) -> usize {
    match kind {
        EstimatorKind::Ls => 0,
        EstimatorKind::Mmse => 1,
    }
}

/// Runs the sweep. Drops are indexed `0..settings.n_large_scale` and shared
/// by every point; the output does not depend on the worker count.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec, exec: &Executor, settings: &McSettings) -> Result<SweepResult> {
    if settings.n_large_scale == 0 {
        return Err(Error::InsufficientSamples(0));
    }
    let series: Vec<Option<f64>> = match &spec.series {
        Some((_, v)) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut jobs = Vec::new();
    for &x in &spec.points {
        for &s in &series {
            let (mut antennas, mut k) = (None, None);
            for (axis, v) in [(Some(spec.axis), Some(x)), (spec.series.as_ref().map(|p| p.0), s)] {
                match (axis, v) {
                    (Some(Axis::Antennas), Some(v)) => antennas = Some(v as usize),
                    (Some(Axis::KDb), Some(v)) => k = Some(db_to_linear(v)),
                    _ => {}
                }
            }
            jobs.push(PointJob {
                antennas: antennas.unwrap_or(scenario.system.antennas),
                k,
            });
        }
    }

    let drops = settings.n_large_scale;
    let values: Vec<Result<Vec<PerKind>>> = exec.map_indexed(jobs.len() * drops, |i| {
        let (job, d) = (&jobs[i / drops], (i % drops) as u64);
        let cfg = scenario.config(Some(job.antennas))?;
        let ls = scenario.drop(d, job.k)?;
        drop_values(&cfg, &ls, spec, settings, d, exec)
    });

    let mut rows = Vec::new();
    let mut it = values.into_iter();
    for &x in &spec.points {
        for &s in &series {
            let per_drop: Vec<Vec<PerKind>> = it.by_ref().take(drops).collect::<Result<_>>()?;
            for (ki, &kind) in spec.estimators.iter().enumerate() {
                let d = drops as f64;
                let closed = per_drop.iter().map(|v| v[ki].closed).sum::<f64>() / d;
                let empirical = per_drop.iter().map(|v| v[ki].empirical).collect::<Option<Vec<_>>>();
                let (emp, emp_se) = match empirical {
                    Some(e) => (
                        Some(e.iter().map(|p| p.0).sum::<f64>() / d),
                        Some(e.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt() / d),
                    ),
                    None => (None, None),
                };
                let asym = per_drop
                    .iter()
                    .map(|v| v[ki].asymptote)
                    .collect::<Option<Vec<_>>>()
                    .map(|v| v.iter().sum::<f64>() / d);
                rows.push(ResultRow {
                    axis: spec.axis.as_str(),
                    axis_value: x,
                    series: spec.series.as_ref().map_or("", |p| p.0.as_str()),
                    series_value: s,
                    estimator: kind.as_str(),
                    sum_se_closed: closed,
                    sum_se_empirical: emp,
                    sum_se_empirical_stderr: emp_se,
                    sum_se_asymptote: asym,
                    asymptote: match (spec.include_asymptotes, spec.axis) {
                        (false, _) => "",
                        (true, Axis::Antennas) => "large_m",
                        (true, Axis::KDb) => "large_k",
                    },
                    seed: settings.seed,
                    drops,
                    blocks: if spec.include_monte_carlo {
                        settings.n_small_scale
                    } else {
                        0
                    },
                });
            }
        }
    }
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}

// ============================================================================
// Files
// ============================================================================

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub plot: PathBuf,
    pub metadata: PathBuf,
}

/// Writes `sweep.csv`, `sweep.svg` and `metadata.json` into `dir`.
///
/// Only the metadata file carries a timestamp, so reruns with the same
/// scenario and seed produce identical CSV and SVG files.
pub fn write_outputs(result: &SweepResult, dir: &Path, metadata: &RunMetadata) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let files = OutputFiles {
        csv: dir.join("sweep.csv"),
        plot: dir.join("sweep.svg"),
        metadata: dir.join("metadata.json"),
    };
    result.write_csv(std::fs::File::create(&files.csv)?)?;
    std::fs::write(&files.plot, crate::plot::render_svg(result))?;
    let json = serde_json::to_string_pretty(metadata).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(&files.metadata, json + "\n")?;
    Ok(files)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool_version: &'static str,
    pub scenario: String,
    pub sweep: String,
    pub seed: u64,
    pub workers: usize,
    pub drops: usize,
    pub blocks: usize,
    pub monte_carlo: bool,
    pub asymptotes: bool,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub elapsed_seconds: f64,
}

impl RunMetadata {
    pub fn now_unix() -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    }
}

/// Dumps one channel realization (drop 0, block 0) of the scenario at its
/// configured antenna count.
pub fn dump_channel(scenario: &Scenario, path: &Path) -> Result<()> {
    let cfg = scenario.config(None)?;
    let ls = scenario.drop(0, None)?;
    let mut rng = stream_for(scenario.simulation.seed, Domain::SmallScale, 0, 0);
    let ch = draw_channel(&cfg, &ls, scenario.simulation.target_cell, &mut rng)?;
    write_dump(&ch, std::io::BufWriter::new(std::fs::File::create(path)?))?;
    Ok(())
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts = |v: &[f64]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}:{}", self.axis.as_str(), pts(&self.points))?;
        if let Some((a, v)) = &self.series {
            write!(f, ";{}:{}", a.as_str(), pts(v))?;
        }
        let kinds: Vec<_> = self.estimators.iter().map(|k| k.as_str()).collect();
        write!(f, ";est:{}", kinds.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges_and_lists() {
        let s = SweepSpec::parse("M:50..500:50;K_dB:-inf,3,6,10;est:ls,mmse").unwrap();
        assert_eq!(s.axis, Axis::Antennas);
        assert_eq!(s.points.len(), 10);
        assert_eq!(s.points[9], 500.0);
        let (axis, ks) = s.series.unwrap();
        assert_eq!(axis, Axis::KDb);
        assert_eq!(ks[0], f64::NEG_INFINITY);
        assert_eq!(s.estimators, EstimatorKind::ALL.to_vec());

        let k = SweepSpec::parse("K_dB:-10..30:5").unwrap();
        assert_eq!(k.points, vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        let mixed = SweepSpec::parse("K_dB:-inf,-10..10:10,40").unwrap();
        assert_eq!(mixed.points, vec![f64::NEG_INFINITY, -10.0, 0.0, 10.0, 40.0]);
        assert!(k.series.is_none());
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            "",
            "M:",
            "M:100,50",
            "M:50,50",
            "M:10.5",
            "M:0",
            "Q:1,2",
            "M:1,2;M:3",
            "K_dB:1,inf",
            "M:1,2;est:zf",
            "M:50..10:5",
            "M:1..10",
        ] {
            assert!(SweepSpec::parse(bad).is_err(), "{bad:?} parsed");
        }
    }

    #[test]
    fn display_round_trips() {
        let s = SweepSpec::parse("K_dB:-inf,0,10;M:64,128;est:mmse").unwrap();
        assert_eq!(SweepSpec::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn header_matches_row_layout() {
        let r = SweepResult {
            spec: SweepSpec::parse("M:8").unwrap(),
            rows: vec![ResultRow {
                axis: "M",
                axis_value: 8.0,
                series: "",
                series_value: None,
                estimator: "ls",
                sum_se_closed: 1.5,
                sum_se_empirical: None,
                sum_se_empirical_stderr: None,
                sum_se_asymptote: None,
                asymptote: "",
                seed: 1,
                drops: 1,
                blocks: 0,
            }],
        };
        let text = r.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "M,8.0,,,ls,1.5,,,,,1,1,0");
    }
}
