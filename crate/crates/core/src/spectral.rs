//! Torsion function and principal Dirichlet eigenpair of `-d^2/dx^2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{solve_poisson, GridFunction, Interval};

pub const MAX_EIGEN_ITERATIONS: usize = 10_000;

/// Smallest Dirichlet eigenvalue and its eigenfunction, normalized to
/// `max phi1 = 1` and positive inside the interval.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi1: GridFunction,
    pub iterations: usize,
}

/// Solution of `-e'' = 1`, `e = 0` at both endpoints.
pub fn torsion(domain: Interval) -> GridFunction {
    solve_poisson(&GridFunction::constant(domain, 1.0), 0.0, 0.0)
}

/// Inverse power iteration on the discrete Dirichlet Laplacian.
///
/// Stops once successive Rayleigh quotients differ by at most `tol` and the
/// normalized iterate moves by at most `tol` in the sup norm. Starts from the
/// all-ones vector, so results are reproducible.
pub fn principal_eigenpair(domain: Interval, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("eigen tolerance must be positive, got {tol}")));
    }
    let n = domain.n();
    let mut v = GridFunction::constant(domain, 1.0).into_values();
    v[0] = 0.0;
    v[n - 1] = 0.0;
    let mut lambda_prev = f64::INFINITY;

    for it in 1..=MAX_EIGEN_ITERATIONS {
        let rhs = GridFunction::new(domain, v.clone())?;
        let w = solve_poisson(&rhs, 0.0, 0.0).into_values();
        let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let ww: f64 = w.iter().map(|b| b * b).sum();
        let lambda = vw / ww;

        let mean: f64 = w[1..n - 1].iter().sum();
        let scale = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let sign = if mean < 0.0 { -1.0 } else { 1.0 };
        let next: Vec<f64> = w.iter().map(|x| sign * x / scale).collect();

        let step = next.iter().zip(&v).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let settled = (lambda - lambda_prev).abs() <= tol && step <= tol;
        v = next;
        lambda_prev = lambda;
        if settled {
            log::debug!("eigenpair converged after {it} iterations, lambda1 = {lambda}");
            return Ok(EigenPair { lambda1: lambda, phi1: GridFunction::new(domain, v)?, iterations: it });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_EIGEN_ITERATIONS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian, norm_sq_h1};
    use std::f64::consts::PI;

    #[test]
    fn torsion_examples() {
        let d = Interval::new(0.0, PI, 2001).unwrap();
        let e = torsion(d);
        assert!((e[1000] - PI * PI / 8.0).abs() < 1e-10);

        let d1 = Interval::new(0.0, 1.0, 1001).unwrap();
        let e1 = torsion(d1);
        assert!((e1.max() - 0.125).abs() < 1e-12);
        assert!((e1[500] - 0.125).abs() < 1e-12);

        let d = Interval::new(0.0, PI, 4001).unwrap();
        assert!((norm_sq_h1(&torsion(d)) - PI.powi(3) / 12.0).abs() < 1e-4);
    }

    #[test]
    fn torsion_is_nonnegative_and_concave() {
        let d = Interval::new(-2.0, 5.0, 701).unwrap();
        let e = torsion(d);
        assert!(e.values().iter().all(|&v| v >= 0.0));
        let lap = laplacian(&e);
        assert!(d.interior().all(|i| lap[i] <= 0.0));
    }

    #[test]
    fn eigen_examples() {
        let d = Interval::new(0.0, PI, 2001).unwrap();
        let ep = principal_eigenpair(d, 1e-12).unwrap();
        assert!((ep.lambda1 - 1.0).abs() < 1e-5);
        let sin = GridFunction::from_fn(d, f64::sin);
        assert!(ep.phi1.sup_distance(&sin).unwrap() < 1e-5);

        let d1 = Interval::new(0.0, 1.0, 2001).unwrap();
        let ep1 = principal_eigenpair(d1, 1e-12).unwrap();
        assert!((ep1.lambda1 - PI * PI).abs() < 1e-3);

        let d2 = Interval::new(0.0, 2.0 * PI, 2001).unwrap();
        let ep2 = principal_eigenpair(d2, 1e-12).unwrap();
        assert!((ep2.lambda1 - ep.lambda1 / 4.0).abs() <= 1e-5 * ep2.lambda1);
    }

    #[test]
    fn eigen_matches_discrete_closed_form() {
        // Dirichlet eigenvalue of the 3-point stencil: (4/h^2) sin^2(pi h / (2L)).
        let d = Interval::new(0.0, 3.0, 301).unwrap();
        let h = d.h();
        let exact = 4.0 / (h * h) * (PI * h / 6.0).sin().powi(2);
        let ep = principal_eigenpair(d, 1e-13).unwrap();
        assert!((ep.lambda1 - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn eigenfunction_invariants() {
        let d = Interval::new(0.0, PI, 201).unwrap();
        let tol = 1e-9;
        let ep = principal_eigenpair(d, tol).unwrap();
        let phi = &ep.phi1;
        assert!(d.interior().all(|i| phi[i] > 0.0));
        assert!((phi.max() - 1.0).abs() < 1e-15);
        let lap = laplacian(phi);
        for i in d.interior() {
            assert!((-lap[i] - ep.lambda1 * phi[i]).abs() <= tol, "node {i}");
        }
        let num: f64 = d.interior().map(|i| -lap[i] * phi[i]).sum();
        let den: f64 = d.interior().map(|i| phi[i] * phi[i]).sum();
        assert!((num / den - ep.lambda1).abs() < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let d = Interval::new(0.0, 1.0, 11).unwrap();
        assert!(principal_eigenpair(d, 0.0).is_err());
    }
}
