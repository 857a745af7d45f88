use lattice_fracheat::counterexample::*;
use lattice_fracheat::semigroup::{dyadic_times, Accuracy};
use lattice_fracheat::FracOrder;

fn quarter(t: f64) -> f64 {
    t.powf(-0.25)
}

#[test]
fn four_levels_verify_with_recorded_constants() {
    let sd = build_slow_datum(quarter, FracOrder::ONE, 1, 4).unwrap();
    assert_eq!(sd.t_star, 1.0);
    assert!((sd.rho_star - 2.40).abs() < 1e-12);
    assert!((sd.c_star - 5.0 / 12.0 * sd.phi0).abs() < 1e-15);
    assert!((sd.phi0 - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
    assert_eq!(sd.times, vec![2f64.powi(25), 2f64.powi(33), 2f64.powi(39), 2f64.powi(45)]);
    let mass: f64 = sd.datum.sum();
    assert!((mass + sd.truncated_mass - 1.0).abs() < 1e-15);
    for k in 1..=4 {
        let b = verify_slow_bound(&sd, k, quarter).unwrap();
        assert!(b.pass, "{b:?}");
        assert!((b.rhs - k as f64 * quarter(b.t)).abs() < 1e-15);
    }
    assert!(matches!(verify_slow_bound(&sd, 5, quarter), Err(CounterexampleError::MissingLevel(5))));
}

#[test]
fn first_moment_grows_with_levels() {
    let moments: Vec<f64> = (2..=4)
        .map(|k| build_slow_datum(quarter, FracOrder::ONE, 1, k).unwrap().partial_first_moment())
        .collect();
    assert!(moments.windows(2).all(|w| w[1] > 2.0 * w[0]), "{moments:?}");
}

#[test]
fn moment_datum_decays_below_level_bounds() {
    let sd = build_slow_datum(quarter, FracOrder::ONE, 1, 4).unwrap();
    let dipole = [(vec![0i64], 0.5), (vec![-1i64], 0.5)];
    for (k, &t) in sd.times.iter().enumerate() {
        let lhs = origin_error(&dipole, t, FracOrder::ONE, 1).unwrap();
        assert!(lhs < (k + 1) as f64 * quarter(t), "level {}: {lhs}", k + 1);
    }
}

#[test]
fn point_mass_has_no_origin_error() {
    for t in [1e3, 2f64.powi(33)] {
        assert!(origin_error(&[(vec![0], 1.0)], t, FracOrder::ONE, 1).unwrap() < 1e-12);
    }
}

#[test]
fn logarithmic_profile_overflows_the_box() {
    let r = build_slow_datum(|t: f64| 1.0 / (std::f64::consts::E + t).ln(), FracOrder::ONE, 1, 4);
    assert!(matches!(r, Err(CounterexampleError::BoxOverflow { level: 1, achieved: 0, .. })), "{r:?}");
}

#[test]
fn rejects_bad_profiles() {
    assert!(matches!(build_slow_datum(|t: f64| t, FracOrder::ONE, 1, 2), Err(CounterexampleError::InvalidProfile)));
    assert!(matches!(build_slow_datum(quarter, FracOrder::ONE, 1, 0), Err(CounterexampleError::InvalidLevels(0))));
}

#[test]
fn finite_moment_datum_beats_slow_profile() {
    let cmp = moment_datum_beats(quarter, FracOrder::ONE, 1, &dyadic_times(6, 12), Accuracy::PeakRelative(1e-4)).unwrap();
    assert!(cmp.beats);
    assert!((cmp.profile_slope + 0.25).abs() < 1e-12);
    assert!((cmp.report.slope + 0.5).abs() < 0.05);
    assert!(cmp.last_ratio < cmp.first_ratio);
}
