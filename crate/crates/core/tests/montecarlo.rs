use ndarray::{Array2, Array3};
use ricean_se::analytics::sinr_closed;
use ricean_se::moments::{closed_form_moment, MomentIndices, MomentTerm};
use ricean_se::montecarlo::{
    estimate_moment, estimate_sinr_empirical, estimate_sinr_symbol_level, moment_a_exact, McSettings,
};
use ricean_se::{validate_config, validate_config_for_simulation, EstimatorKind, LargeScaleRealization, SystemConfig};

fn uneven() -> (ricean_se::ValidatedConfig, LargeScaleRealization) {
    let mut sc = SystemConfig::uniform(3, 3, 12, 3, 196, 3.0, 1.0);
    sc.pilot_powers = Array2::from_shape_fn((3, 3), |(l, n)| 0.7 + 0.3 * l as f64 + 0.2 * n as f64);
    let beta = Array3::from_shape_fn((3, 3, 3), |(j, l, n)| {
        if j == l {
            1.0 - 0.1 * n as f64
        } else {
            0.15 + 0.05 * (l + n) as f64
        }
    });
    let k = Array2::from_shape_fn((3, 3), |(l, n)| [0.0, 1.5, 6.0][n] + 0.5 * l as f64);
    let aoa = Array2::from_shape_fn((3, 3), |(l, n)| 0.3 + 1.1 * n as f64 + 0.2 * l as f64);
    (
        validate_config(sc).unwrap(),
        LargeScaleRealization::new(beta, k, aoa).unwrap(),
    )
}

fn settings(n: usize) -> McSettings {
    McSettings {
        n_small_scale: n,
        seed: 7,
        ..McSettings::default()
    }
}

#[test]
fn every_moment_matches_its_closed_form() {
    let (cfg, ls) = uneven();
    let own = MomentIndices::own(0, 1);
    let cases = [
        (MomentTerm::A, own),
        (MomentTerm::B, own),
        (MomentTerm::C, own.with_other(0, 2)),
        (MomentTerm::D, own.with_other(2, 1)),
        (MomentTerm::E, own.with_other(1, 0)),
        (MomentTerm::F, own),
    ];
    for kind in EstimatorKind::ALL {
        for (term, idx) in cases {
            let est = estimate_moment(term, &cfg, &ls, kind, idx, &settings(100_000)).unwrap();
            let exact = est.closed_form.unwrap();
            assert_eq!(exact, closed_form_moment(term, &cfg, &ls, kind, idx).unwrap());
            let z = (est.mean - exact) / est.std_error;
            assert!(
                z.abs() < 4.0,
                "{kind} {term}: {} ± {} vs {exact}",
                est.mean,
                est.std_error
            );
        }
        let exact = moment_a_exact(&cfg, &ls, kind, 0, 1).unwrap();
        let closed = closed_form_moment(MomentTerm::A, &cfg, &ls, kind, own).unwrap();
        assert!((exact - closed).abs() < 1e-10 * closed);
    }
}

#[test]
fn empirical_sinr_matches_closed_form_multicell() {
    let (cfg, ls) = uneven();
    for kind in EstimatorKind::ALL {
        let est = estimate_sinr_empirical(&cfg, &ls, kind, &settings(50_000)).unwrap();
        for n in 0..3 {
            let exact = sinr_closed(&cfg, &ls, 0, n, kind).unwrap();
            let tol = (3.0 * est.std_error[n]).max(0.01 * exact);
            assert!(
                (est.sinr[n] - exact).abs() < tol,
                "{kind} user {n}: {} vs {exact}",
                est.sinr[n]
            );
        }
    }
}

#[test]
fn symbol_level_agrees_with_effective_sinr() {
    let (cfg, ls) = uneven();
    for kind in EstimatorKind::ALL {
        let sym = estimate_sinr_symbol_level(&cfg, &ls, kind, &settings(20_000), 5).unwrap();
        for n in 0..3 {
            let exact = sinr_closed(&cfg, &ls, 0, n, kind).unwrap();
            assert!(
                (sym.sinr[n] - exact).abs() < 0.05 * exact,
                "{kind} user {n}: {} vs {exact}",
                sym.sinr[n]
            );
        }
    }
}

#[test]
fn off_grid_spacing_simulates_without_closed_form_for_c() {
    let mut sc = SystemConfig::uniform(2, 2, 8, 2, 196, 1.0, 1.0);
    sc.spacing = 0.3;
    let cfg = validate_config_for_simulation(sc).unwrap();
    let ls = LargeScaleRealization::symmetric(2, 2, 1.0, 0.3, 2.0, Array2::from_elem((2, 2), 0.5)).unwrap();
    let idx = MomentIndices::own(0, 0).with_other(0, 1);
    let est = estimate_moment(MomentTerm::C, &cfg, &ls, EstimatorKind::Ls, idx, &settings(1_000)).unwrap();
    assert!(est.closed_form.is_none());
    assert!(est.mean > 0.0);
}

/// The pooled denominator of the SINR pipeline and the per-term moment
/// estimates come from the same draws, so assembling the moments must give
/// the simulated SINR up to summation order.
#[test]
fn moment_pipeline_assembles_to_sinr_pipeline() {
    let (cfg, ls) = uneven();
    let s = settings(3_000);
    let rho = cfg.data_power;
    for kind in EstimatorKind::ALL {
        let sim = estimate_sinr_empirical(&cfg, &ls, kind, &s).unwrap();
        for n in 0..3 {
            let own = MomentIndices::own(0, n);
            let mean = |term, idx| estimate_moment(term, &cfg, &ls, kind, idx, &s).unwrap().mean;
            let mut q = 0.0;
            for l in 0..3 {
                for t in 0..3 {
                    let term = match (l == 0, t == n) {
                        (true, true) => MomentTerm::B,
                        (true, false) => MomentTerm::C,
                        (false, true) => MomentTerm::D,
                        (false, false) => MomentTerm::E,
                    };
                    let idx = if term == MomentTerm::B {
                        own
                    } else {
                        own.with_other(l, t)
                    };
                    q += mean(term, idx);
                }
            }
            let a = mean(MomentTerm::A, own);
            let f = mean(MomentTerm::F, own);
            let assembled = rho * a / (rho * (q - a) + f);
            let rel = (assembled - sim.sinr[n]).abs() / sim.sinr[n];
            assert!(rel < 1e-9, "{kind} user {n}: {assembled} vs {}", sim.sinr[n]);
        }
    }
}
