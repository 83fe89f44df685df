use std::f64::consts::PI;

use kirchhoff_core::grid::leq;
use kirchhoff_core::{
    build_pair_concave_convex, build_pair_logistic, build_pair_sublinear, solve_in_interval, verify_pair, Error,
    GridFunction, Interval, KirchhoffM, Nonlinearity, PairConstruction, Scheme, SolveConfig,
};

fn domain() -> Interval {
    Interval::new(0.0, PI, 2001).unwrap()
}

fn one_plus_t() -> KirchhoffM {
    KirchhoffM::power_shift(1.0, 1.0, 0.0, 1.0).unwrap()
}

fn solve_and_check(c: &PairConstruction, m: &KirchhoffM, f: &Nonlinearity, scheme: Scheme) -> GridFunction {
    assert!(c.feasible);
    assert!(verify_pair(&c.pair, m, f).unwrap().ok);
    let sol = solve_in_interval(&c.pair, m, f, &SolveConfig::with_scheme(scheme)).unwrap();
    assert!(sol.converged, "{scheme:?} did not converge");
    assert!(sol.residual_sup <= 1e-6);
    assert!(sol.self_consistency_gap <= 1e-6 * (1.0 + sol.mass.abs()));
    assert!(leq(c.pair.lower(), &sol.u).unwrap().holds && leq(&sol.u, c.pair.upper()).unwrap().holds);
    sol.u
}

#[test]
fn sublinear_iff_claim() {
    let m = one_plus_t();
    for lambda in [-1.0, 0.0] {
        assert!(matches!(
            build_pair_sublinear(lambda, 0.5, &m, domain()),
            Err(Error::NoPositiveSolution { .. })
        ));
    }
    for lambda in [0.1, 1.0, 10.0] {
        let f = Nonlinearity::sublinear(lambda, 0.5).unwrap();
        let c = build_pair_sublinear(lambda, 0.5, &m, domain()).unwrap();
        let u = solve_and_check(&c, &m, &f, Scheme::Picard);
        let d = domain();
        assert!(d.interior().all(|i| u[i] > 0.0 && u[i] >= c.pair.lower()[i]));
    }
}

#[test]
fn sublinear_schemes_agree() {
    let m = one_plus_t();
    let f = Nonlinearity::sublinear(1.0, 0.5).unwrap();
    let c = build_pair_sublinear(1.0, 0.5, &m, domain()).unwrap();
    let base = solve_and_check(&c, &m, &f, Scheme::Picard);
    for scheme in [Scheme::Shifted, Scheme::MonotoneFromBelow, Scheme::MonotoneFromAbove] {
        let u = solve_and_check(&c, &m, &f, scheme);
        assert!(u.sup_distance(&base).unwrap() < 1e-8, "{scheme:?}");
    }
}

#[test]
fn concave_convex_below_threshold() {
    let m = one_plus_t();
    let probe = build_pair_concave_convex(1e-3, 0.5, 2.0, &m, domain()).unwrap();
    let lambda0 = probe.threshold_info.lambda0.unwrap();
    let lambda = lambda0 / 2.0;
    let f = Nonlinearity::concave_convex(lambda, 0.5, 2.0).unwrap();
    let c = build_pair_concave_convex(lambda, 0.5, 2.0, &m, domain()).unwrap();
    solve_and_check(&c, &m, &f, Scheme::Picard);
    assert!(matches!(
        build_pair_concave_convex(lambda0, 0.5, 2.0, &m, domain()),
        Err(Error::LambdaTooLarge { .. })
    ));
}

#[test]
fn logistic_end_to_end() {
    let m = KirchhoffM::power_shift(1.0, 0.01, 0.0, 1.0).unwrap();
    let f = Nonlinearity::logistic(5.0, 2.0).unwrap();
    let c = build_pair_logistic(5.0, 2.0, &m, domain()).unwrap();
    let info = c.threshold_info;
    assert!(info.lambda1_m_inf.unwrap() < 5.0);
    let u = solve_and_check(&c, &m, &f, Scheme::Shifted);
    assert!(u.max() <= 5.0);
}

#[test]
fn logistic_with_strong_nonlocal_term_is_infeasible() {
    match build_pair_logistic(5.0, 2.0, &one_plus_t(), domain()) {
        Err(Error::LambdaBelowThreshold { lambda, threshold }) => {
            assert_eq!(lambda, 5.0);
            assert!(threshold > 8.0 && threshold < 8.3, "threshold {threshold}");
        }
        other => panic!("expected LambdaBelowThreshold, got {other:?}"),
    }
}
