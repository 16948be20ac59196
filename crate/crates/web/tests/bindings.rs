use cvqkd_web::{cutoff_curve_impl, max_distance_impl, rate_curve_impl, MAX_GRID_POINTS};

const V_A: f64 = 18.0;
const EPS_C: f64 = 0.02;

#[test]
fn baseline_curve_matches_reach() {
    let rates = rate_curve_impl("case0", "point", 0.0, V_A, EPS_C, 150.0, 1.0).unwrap();
    assert_eq!(rates.len(), 151);
    let last = rates.iter().rposition(|r| *r > 0.0).unwrap();
    let reach = max_distance_impl("case0", "point", 0.0, V_A, EPS_C).unwrap();
    assert_eq!(last as f64, reach.floor());
    assert!((reach - 94.0).abs() <= 5.0);
}

#[test]
fn refined_reach_beats_plain() {
    let plain = max_distance_impl("case1", "uniform", 0.1, V_A, EPS_C).unwrap();
    let refined = max_distance_impl("case1r", "uniform", 0.1, V_A, EPS_C).unwrap();
    assert!(refined > plain + 20.0, "{plain} {refined}");
}

#[test]
fn uniform_cutoff_curve_pins_support_max() {
    let v = cutoff_curve_impl("uniform", 0.05, V_A, EPS_C, 60.0, 5.0).unwrap();
    assert_eq!(v.len(), 2 * 13);
    for pair in v.chunks(2) {
        assert_eq!(pair[0], 1.05);
    }
}

#[test]
fn never_positive_gives_zero_reach() {
    // No modulation, no key.
    let reach = max_distance_impl("case0", "point", 0.0, 0.0, EPS_C).unwrap();
    assert_eq!(reach, 0.0);
    let reach = max_distance_impl("case2b", "gaussian", 1e-2, V_A, EPS_C).unwrap();
    assert!(reach > 0.0 && reach < 60.0, "{reach}");
}

#[test]
fn bad_inputs_are_errors() {
    assert!(rate_curve_impl("case9", "point", 0.0, V_A, EPS_C, 10.0, 1.0).is_err());
    assert!(rate_curve_impl("case0", "cauchy", 0.0, V_A, EPS_C, 10.0, 1.0).is_err());
    assert!(rate_curve_impl("case0", "point", 0.0, V_A, EPS_C, 10.0, 0.0).is_err());
    // Truncation at zero moves the mean of a wide Gaussian off 1.
    assert!(rate_curve_impl("case1", "gaussian", 0.05, V_A, EPS_C, 10.0, 1.0).is_err());
    assert!(rate_curve_impl("case1", "uniform", 1.5, V_A, EPS_C, 10.0, 1.0).is_err());
    assert!(rate_curve_impl(
        "case0",
        "point",
        0.0,
        V_A,
        EPS_C,
        MAX_GRID_POINTS as f64,
        1.0
    )
    .is_err());
}
