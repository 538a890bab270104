//! Minimal SVG rendering of sweep results.
//!
//! Closed-form curves are solid (MMSE) or dashed (LS), simulated points are
//! markers with ±1 standard error bars, and asymptotes are thin dotted lines
//! in the curve's color. A `-inf` Ricean point is drawn one step left of the
//! first finite point.

use std::fmt::Write;

use crate::estimation::EstimatorKind;
use crate::sweep::SweepResult;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|i| first + step * i as f64)
        .take_while(|v| *v <= hi + 1e-9 * span)
        .collect()
}

fn fmt_num(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

pub fn render_svg(result: &SweepResult) -> String {
    let spec = &result.spec;
    let finite: Vec<f64> = spec.points.iter().copied().filter(|p| p.is_finite()).collect();
    let step = if finite.len() > 1 {
        (finite[finite.len() - 1] - finite[0]) / (finite.len() - 1) as f64
    } else {
        1.0
    };
    let place = |x: f64| {
        if x.is_finite() {
            x
        } else {
            finite.first().copied().unwrap_or(0.0) - step
        }
    };
    let xs: Vec<f64> = spec.points.iter().map(|&p| place(p)).collect();
    let (mut x0, mut x1) = (xs[0], xs[xs.len() - 1]);
    if x0 == x1 {
        x0 -= 1.0;
        x1 += 1.0;
    }

    let mut ys: Vec<f64> = Vec::new();
    for r in &result.rows {
        ys.push(r.sum_se_closed);
        if let (Some(e), Some(s)) = (r.sum_se_empirical, r.sum_se_empirical_stderr) {
            ys.extend([e - s, e + s]);
        }
        ys.extend(r.sum_se_asymptote);
    }
    ys.retain(|v| v.is_finite());
    let y_hi = ys.iter().copied().fold(f64::MIN, f64::max).max(1e-9) * 1.05;
    // Spectral efficiencies are nonnegative, so the axis starts at zero.
    let y_lo = 0.0;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    for t in nice_ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_num(t)
        );
    }
    for (&p, &x) in spec.points.iter().zip(&xs) {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            fmt_num(p)
        );
    }
    let xlabel = match spec.axis {
        crate::sweep::Axis::Antennas => "Number of BS antennas M",
        crate::sweep::Axis::KDb => "Ricean K-factor (dB)",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">Sum SE (bit/s/Hz)</text>"#,
        TOP + ph / 2.0
    );

    let mut legend_y = TOP + 10.0;
    for (si, sv) in result.series_values().into_iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        for kind in &spec.estimators {
            let rows = result.curve(*kind, sv);
            let dash = if *kind == EstimatorKind::Ls {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let pts: Vec<String> = rows
                .iter()
                .map(|r| format!("{:.2},{:.2}", sx(place(r.axis_value)), sy(r.sum_se_closed)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                pts.join(" ")
            );
            let asym: Vec<String> = rows
                .iter()
                .filter_map(|r| {
                    r.sum_se_asymptote
                        .map(|a| format!("{:.2},{:.2}", sx(place(r.axis_value)), sy(a)))
                })
                .collect();
            if !asym.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="0.8" stroke-dasharray="1 3"/>"#,
                    asym.join(" ")
                );
            }
            for r in &rows {
                if let Some(e) = r.sum_se_empirical {
                    let (px, py) = (sx(place(r.axis_value)), sy(e));
                    let se = r.sum_se_empirical_stderr.unwrap_or(0.0);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                        sy(e - se),
                        sy(e + se)
                    );
                    let marker = if *kind == EstimatorKind::Ls {
                        format!(
                            r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="none" stroke="{color}"/>"#,
                            px - 3.0,
                            py - 3.0
                        )
                    } else {
                        format!(r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.2" fill="none" stroke="{color}"/>"#)
                    };
                    let _ = writeln!(s, "{marker}");
                }
            }
            let label = match (&spec.series, sv) {
                (Some((axis, _)), Some(v)) => {
                    format!("{} {}={}", kind.as_str().to_uppercase(), axis.as_str(), fmt_num(v))
                }
                _ => kind.as_str().to_uppercase(),
            };
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                lx + 24.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
                lx + 30.0,
                legend_y + 4.0
            );
            legend_y += 18.0;
        }
    }
    s.push_str("</svg>\n");
    s
}
