//! Counterexamples to the comparison principle for Kirchhoff operators.
//!
//! On `(0, pi)` take `lower = sin x` and `upper = rho x (pi - x)`. Then
//! `-M(||upper||^2) upper'' >= -M(||lower||^2) lower''` holds at every point
//! exactly when `M(pi/2) <= 2 rho M(rho^2 pi^3 / 3)`, while `lower <= upper`
//! fails for every `rho < 4/pi^2`. Any `(M, rho)` meeting both is a witness.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{norm_sq_h1, GridFunction, Interval};
use crate::kirchhoff::{KirchhoffM, MFamily};
use crate::optimize::golden_max;

/// Default grid size for pointwise verification.
pub const DEFAULT_N: usize = 4001;
/// Standoff from the ends of `(0, rho*)` in rho searches.
pub const RHO_STANDOFF: f64 = 1e-6;

fn ratio(x: f64) -> f64 {
    x.sin() / (x * (PI - x))
}

/// `max sin x / (x (pi - x))` over `(0, pi)`, which is `4 / pi^2`.
pub fn rho_star() -> f64 {
    golden_max(ratio, 0.1, PI - 0.1, 1e-12).1
}

/// `||sin||^2` on `(0, pi)`.
pub fn lower_norm_sq() -> f64 {
    PI / 2.0
}

/// `||rho x (pi - x)||^2` on `(0, pi)`.
pub fn upper_norm_sq(rho: f64) -> f64 {
    rho * rho * PI.powi(3) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondiCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Evaluates `M(pi/2) <= 2 rho M(rho^2 pi^3 / 3)`.
pub fn condi_check(m: &KirchhoffM, rho: f64) -> Result<CondiCheck> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let lhs = m.eval_m(lower_norm_sq())?;
    let rhs = 2.0 * rho * m.eval_m(upper_norm_sq(rho))?;
    let margin = rhs - lhs;
    Ok(CondiCheck { holds: margin >= 0.0, lhs, rhs, margin })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleWitness {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub rho: f64,
    pub condi_lhs: f64,
    pub condi_rhs: f64,
    pub condi_margin: f64,
    /// `max (lower - upper)` over the grid.
    pub order_violation_gap: f64,
    pub order_violation_x: f64,
    /// `min (-M(||upper||^2) upper'' + M(||lower||^2) lower'')` over the grid.
    pub pointwise_min_margin: f64,
    /// Largest gap between the closed-form norms and grid quadrature.
    pub norm_crosscheck_error: f64,
    pub valid: bool,
}

fn family_params(m: &KirchhoffM) -> (f64, f64, f64, f64) {
    match m.family() {
        MFamily::PowerShift { a, b, c, p } => (*a, *b, *c, *p),
        MFamily::Constant { m } => (*m, 0.0, 0.0, 0.0),
        MFamily::Custom(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    }
}

/// Checks the pair `(sin x, rho x (pi - x))` on an `n`-point grid over
/// `(0, pi)`, using exact second derivatives and norms.
///
/// A failed candidate comes back with `valid == false`, not as an error.
pub fn pointwise_verify(m: &KirchhoffM, rho: f64, n: usize) -> Result<CounterexampleWitness> {
    let cond = condi_check(m, rho)?;
    let d = Interval::new(0.0, PI, n)?;
    let lower = GridFunction::from_fn(d, f64::sin);
    let upper = GridFunction::from_fn(d, |x| rho * x * (PI - x));

    let m_lower = m.eval_m(lower_norm_sq())?;
    let m_upper = m.eval_m(upper_norm_sq(rho))?;
    let mut pointwise = f64::INFINITY;
    let (mut gap, mut gap_x) = (f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        let x = d.x(i);
        if i > 0 && i < n - 1 {
            pointwise = pointwise.min(m_upper * 2.0 * rho - m_lower * x.sin());
        }
        let g = lower[i] - upper[i];
        if g > gap {
            gap = g;
            gap_x = x;
        }
    }
    let crosscheck = (norm_sq_h1(&lower) - lower_norm_sq())
        .abs()
        .max((norm_sq_h1(&upper) - upper_norm_sq(rho)).abs());

    let (a, b, c, p) = family_params(m);
    Ok(CounterexampleWitness {
        a,
        b,
        c,
        p,
        rho,
        condi_lhs: cond.lhs,
        condi_rhs: cond.rhs,
        condi_margin: cond.margin,
        order_violation_gap: gap,
        order_violation_x: gap_x,
        pointwise_min_margin: pointwise,
        norm_crosscheck_error: crosscheck,
        valid: cond.holds && gap > 0.0 && pointwise >= 0.0,
    })
}

/// `(8/pi^2) (32/(3 pi^2))^p`, the large-`b` form of the increasing-case
/// condition at `rho = rho*`.
pub fn case1_scalar(p: f64) -> f64 {
    8.0 / (PI * PI) * (32.0 / (3.0 * PI * PI)).powf(p)
}

/// Smallest integer `p` in range with `case1_scalar(p) > 1`.
pub fn case1_scalar_min_p(p_range: RangeInclusive<i32>) -> Option<i32> {
    p_range.into_iter().find(|&p| case1_scalar(p as f64) > 1.0)
}

fn rho_grid(points: usize) -> Vec<f64> {
    let (lo, hi) = (RHO_STANDOFF, 4.0 / (PI * PI) - RHO_STANDOFF);
    if points < 2 {
        return vec![hi];
    }
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

/// Witness search over `M(t) = a + b t^p` with increasing `M`.
///
/// Returns the candidate with the smallest `p`, then the smallest `rho`
/// on a uniform grid of `rho_points` values in `(0, rho*)`.
pub fn search_case1(
    a: f64,
    b: f64,
    p_range: RangeInclusive<i32>,
    rho_points: usize,
    n: usize,
) -> Result<CounterexampleWitness> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
    }
    let rhos = rho_grid(rho_points);
    for p in p_range {
        if p < 1 {
            continue;
        }
        let m = KirchhoffM::power_shift(a, b, 0.0, p as f64)?;
        for &rho in &rhos {
            if !condi_check(&m, rho)?.holds {
                continue;
            }
            let w = pointwise_verify(&m, rho, n)?;
            if w.valid {
                log::info!("increasing-case witness at p = {p}, rho = {rho}");
                return Ok(w);
            }
        }
    }
    Err(Error::NoWitness)
}

/// Smallest `b` making `a (1 - 2 rho) <= b (2 rho (T + c)^p - (pi/2 + c)^p)`
/// hold, with `T = rho^2 pi^3 / 3`. `None` when the bracket on the right is
/// not positive, so no `b` works.
pub fn case2_b_threshold(a: f64, c: f64, rho: f64, p: f64) -> Option<f64> {
    let base = 2.0 * rho * (upper_norm_sq(rho) + c).powf(p) - (lower_norm_sq() + c).powf(p);
    (base > 0.0).then(|| a * (1.0 - 2.0 * rho) / base)
}

/// Log-spaced grid of `points` values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..points).map(|k| (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp()).collect()
}

/// Witness search over `M(t) = a + b (t + c)^p` with `p < 0`.
///
/// Tries `p = -1, -2, ...` down to `-max(|p|)` over `abs_p_range`, and for
/// the first admissible `p` the smallest `b` in `b_grid` that yields a
/// verified witness.
pub fn search_case2(
    a: f64,
    c: f64,
    rho: f64,
    abs_p_range: RangeInclusive<i32>,
    b_grid: &[f64],
    n: usize,
) -> Result<CounterexampleWitness> {
    if !(a > 0.0 && c > 0.0) {
        return Err(Error::InvalidParameter(format!("a and c must be positive, got a = {a}, c = {c}")));
    }
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1/2), got {rho}")));
    }
    let mut b_sorted: Vec<f64> = b_grid.iter().copied().filter(|b| *b > 0.0 && b.is_finite()).collect();
    b_sorted.sort_by(f64::total_cmp);
    for abs_p in abs_p_range {
        if abs_p < 1 {
            continue;
        }
        let p = -(abs_p as f64);
        let Some(threshold) = case2_b_threshold(a, c, rho, p) else { continue };
        for &b in b_sorted.iter().filter(|&&b| b >= threshold * (1.0 - 1e-12)) {
            let m = KirchhoffM::power_shift(a, b, c, p)?;
            let w = pointwise_verify(&m, rho, n)?;
            if w.valid {
                log::info!("decreasing-case witness at p = {p}, b = {b} (threshold {threshold})");
                return Ok(w);
            }
        }
    }
    Err(Error::NoWitness)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_star_examples() {
        let r = rho_star();
        assert!((r - 4.0 / (PI * PI)).abs() < 1e-8);
        assert!((r - 0.405_284_7).abs() < 1e-7);
        assert!((ratio(1e-3) - 1.0 / PI).abs() < 1e-3);
        assert!(ratio(1e-3) < r);
        assert!((ratio(PI / 2.0 - 0.3) - ratio(PI / 2.0 + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn rho_star_matches_brute_force() {
        let n = 1_000_000;
        let best = (1..n).map(|k| ratio(PI * k as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
        assert!((rho_star() - best).abs() < 1e-10);
    }

    #[test]
    fn condi_examples() {
        let one = KirchhoffM::constant(1.0).unwrap();
        let c = condi_check(&one, 0.4).unwrap();
        assert!(!c.holds);
        assert!((c.rhs - 0.8).abs() < 1e-15);

        let m1 = KirchhoffM::power_shift(1.0, 1e4, 0.0, 3.0).unwrap();
        let c1 = condi_check(&m1, 0.405).unwrap();
        assert!(c1.holds);
        assert!((c1.lhs - 38758.85).abs() < 0.01);
        let t = 0.405_f64.powi(2) * PI.powi(3) / 3.0;
        assert!((c1.rhs - 0.81 * (1.0 + 1e4 * t.powi(3))).abs() < 1e-9);
        assert!((c1.rhs - 39465.5).abs() < 1.0);

        let m2 = KirchhoffM::power_shift(1.0, 100.0, 1.0, -2.0).unwrap();
        let c2 = condi_check(&m2, 0.1).unwrap();
        assert!(c2.holds);
        assert!((c2.lhs - 16.131).abs() < 1e-3);
        assert!((c2.rhs - 16.629).abs() < 1e-3);

        assert!(condi_check(&m2, 0.0).is_err());
    }

    #[test]
    fn pointwise_examples() {
        let m1 = KirchhoffM::power_shift(1.0, 1e4, 0.0, 3.0).unwrap();
        let w = pointwise_verify(&m1, 0.405, 4001).unwrap();
        assert!(w.valid);
        assert!(w.pointwise_min_margin >= 0.0);
        assert!((w.order_violation_gap - (1.0 - 0.405 * PI * PI / 4.0)).abs() < 1e-12);
        assert!((w.order_violation_x - PI / 2.0).abs() < 1e-12);
        assert!(w.norm_crosscheck_error <= 1e-4);

        let m2 = KirchhoffM::power_shift(1.0, 100.0, 1.0, -2.0).unwrap();
        let w2 = pointwise_verify(&m2, 0.1, 4001).unwrap();
        assert!(w2.valid);
        assert!((w2.order_violation_gap - 0.753).abs() < 1e-3);

        let one = KirchhoffM::constant(1.0).unwrap();
        let w3 = pointwise_verify(&one, 0.3, 4001).unwrap();
        assert!(!w3.valid);
        assert!(w3.condi_margin < 0.0);
    }

    #[test]
    fn closed_form_norms_match_quadrature() {
        let d = Interval::new(0.0, PI, 4001).unwrap();
        let s = GridFunction::from_fn(d, f64::sin);
        assert!((norm_sq_h1(&s) - PI / 2.0).abs() <= 1e-4);
        for rho in [0.1, 0.405] {
            let u = GridFunction::from_fn(d, |x| rho * x * (PI - x));
            assert!((norm_sq_h1(&u) - upper_norm_sq(rho)).abs() <= 1e-4);
        }
    }

    #[test]
    fn scalar_test_threshold() {
        assert!((case1_scalar(2.0) - 0.947).abs() < 1e-3);
        assert!((case1_scalar(3.0) - 1.023).abs() < 1e-3);
        assert_eq!(case1_scalar_min_p(1..=10), Some(3));
        assert_eq!(case1_scalar_min_p(1..=2), None);
    }

    #[test]
    fn case1_search() {
        let w = search_case1(1.0, 1e4, 1..=6, 1000, 4001).unwrap();
        assert_eq!(w.p, 3.0);
        assert!(w.valid);
        assert!(w.rho > 0.4 && w.rho < rho_star());
        // smallest grid rho: the previous grid point must fail
        let m = KirchhoffM::power_shift(1.0, 1e4, 0.0, 3.0).unwrap();
        let grid = rho_grid(1000);
        let k = grid.iter().position(|&r| r == w.rho).unwrap();
        assert!(!condi_check(&m, grid[k - 1]).unwrap().holds);

        assert_eq!(search_case1(1.0, 1e-6, 1..=6, 200, 401), Err(Error::NoWitness));
        assert!(search_case1(1.0, 0.0, 1..=6, 200, 401).is_err());
    }

    #[test]
    fn case1_margin_nondecreasing_in_p() {
        let mut prev = f64::NEG_INFINITY;
        for p in 1..=6 {
            let m = KirchhoffM::power_shift(1.0, 1e4, 0.0, p as f64).unwrap();
            let margin = condi_check(&m, 0.405).unwrap().margin;
            assert!(margin >= prev, "p = {p}");
            prev = margin;
        }
    }

    #[test]
    fn case2_threshold_and_search() {
        assert!(case2_b_threshold(1.0, 1.0, 0.1, -1.0).is_none());
        let b_star = case2_b_threshold(1.0, 1.0, 0.1, -2.0).unwrap();
        assert!((b_star - 61.66).abs() < 0.05);
        let p_star = 0.2_f64.ln() / ((PI / 2.0 + 1.0) / (1.0 + upper_norm_sq(0.1))).ln();
        assert!((p_star + 1.902).abs() < 1e-3);

        let grid = log_grid(1e-2, 1e6, 801);
        let w = search_case2(1.0, 1.0, 0.1, 1..=10, &grid, 4001).unwrap();
        assert_eq!(w.p, -2.0);
        assert!(w.b >= b_star && w.b < 1.05 * b_star);
        assert!(w.valid);

        // once rho^2 pi^3 / 3 exceeds pi / 2 no negative power helps
        assert_eq!(search_case2(1.0, 1.0, 0.45, 1..=20, &grid, 401), Err(Error::NoWitness));
        assert!(search_case2(1.0, 1.0, 0.5, 1..=4, &grid, 401).is_err());
        assert!(search_case2(1.0, 0.0, 0.1, 1..=4, &grid, 401).is_err());
    }

    #[test]
    fn every_returned_witness_is_genuine() {
        let grid = log_grid(1e-2, 1e6, 201);
        for rho in [0.05, 0.1, 0.2, 0.3, 0.35] {
            if let Ok(w) = search_case2(1.0, 1.0, rho, 1..=12, &grid, 1001) {
                assert!(w.condi_margin >= 0.0 && w.order_violation_gap > 0.0 && w.pointwise_min_margin >= 0.0);
            }
        }
        for b in [1e2, 1e3, 1e4, 1e5] {
            if let Ok(w) = search_case1(1.0, b, 1..=8, 300, 1001) {
                assert!(w.condi_margin >= 0.0 && w.order_violation_gap > 0.0 && w.pointwise_min_margin >= 0.0);
            }
        }
    }
}
