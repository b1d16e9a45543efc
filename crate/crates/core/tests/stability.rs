mod common;

use bec_cavity::stability::analyze;
use bec_cavity::steady::{solve_from_seed, ImaginaryTimeConfig};
use common::{linearization_error, params};

#[test]
fn linearization_matches_nonlinear_propagation() {
    let cfg = ImaginaryTimeConfig::default();
    for (eta, seed) in [(5.2, 1), (8.0, 2), (12.0, 3)] {
        let p = params(9.0, eta);
        let ss = solve_from_seed(&p, true, &cfg).unwrap();
        let err = linearization_error(&ss, &p, 1e-5, 0.1, seed);
        assert!(err < 0.05, "eta {eta}: relative error {err}");
    }
}

#[test]
fn normal_state_linearization_is_exact_to_first_order() {
    let p = params(10.0, 3.0);
    let ss = solve_from_seed(&p, true, &ImaginaryTimeConfig::default()).unwrap();
    assert!(ss.theta().abs() < 1e-8);
    let err = linearization_error(&ss, &p, 1e-5, 0.1, 7);
    assert!(err < 0.05, "relative error {err}");
}

#[test]
fn growth_switches_on_across_the_steady_state_boundary() {
    let cfg = ImaginaryTimeConfig::default();
    let growth = |eta: f64| {
        let p = params(9.0, eta);
        analyze(&solve_from_seed(&p, true, &cfg).unwrap(), &p).unwrap().max_growth
    };
    assert_eq!(growth(3.0), 0.0);
    assert_eq!(growth(5.2), 0.0);
    assert!(growth(6.4) > 1e-3);
    assert!(growth(14.0) > growth(8.0));
}
