//! Reaction terms `f(x, u)` and constructors of verified sub-supersolution
//! pairs for the three model problems:
//!
//! * sublinear `f = lambda u^q`, `0 < q < 1`, pair `(eps phi1, K e)`;
//! * concave-convex `f = lambda u^q + u^p`, `0 < q < 1 < p`, same pair shape;
//! * logistic `f = lambda u - u^p`, `p > 1`, pair `(eps phi1, const)`.
//!
//! Every constructor returns a pair that has passed [`verify_pair`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{leq, GridFunction, Interval};
use crate::kirchhoff::{Direction, KirchhoffM};
use crate::optimize::golden_max;
use crate::spectral::{principal_eigenpair, torsion, EigenPair};
use crate::subsuper::{m_range_over_interval, verify_pair, OrderInterval, PairReport, DEFAULT_SAMPLES_PER_NODE};

/// Smallest epsilon tried before a constructor gives up.
pub const EPSILON_FLOOR: f64 = 1e-14;
/// Tolerance for the eigenpair used by the constructors.
pub const EIGEN_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneHint {
    Nondecreasing,
    Nonincreasing,
    None,
}

#[derive(Clone)]
pub struct PointFn(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl fmt::Debug for PointFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PointFn(..)")
    }
}

#[derive(Debug, Clone)]
pub enum Nonlinearity {
    Sublinear { lambda: f64, q: f64 },
    ConcaveConvex { lambda: f64, q: f64, p: f64 },
    Logistic { lambda: f64, p: f64 },
    Custom { f: PointFn, hint: MonotoneHint },
}

fn pow_checked(u: f64, e: f64) -> Result<f64> {
    if u < 0.0 && e.fract() != 0.0 {
        return Err(Error::DomainError(format!("u = {u} < 0 raised to non-integer power {e}")));
    }
    Ok(u.powf(e))
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl Nonlinearity {
    pub fn sublinear(lambda: f64, q: f64) -> Result<Self> {
        finite("lambda", lambda)?;
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("sublinear needs 0 < q < 1, got q = {q}")));
        }
        Ok(Self::Sublinear { lambda, q })
    }

    pub fn concave_convex(lambda: f64, q: f64, p: f64) -> Result<Self> {
        finite("lambda", lambda)?;
        if !(q > 0.0 && q < 1.0 && p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "concave-convex needs 0 < q < 1 < p, got q = {q}, p = {p}"
            )));
        }
        Ok(Self::ConcaveConvex { lambda, q, p })
    }

    pub fn logistic(lambda: f64, p: f64) -> Result<Self> {
        finite("lambda", lambda)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("logistic needs p > 1, got p = {p}")));
        }
        Ok(Self::Logistic { lambda, p })
    }

    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, hint: MonotoneHint) -> Self {
        Self::Custom { f: PointFn(Arc::new(f)), hint }
    }

    pub fn eval(&self, x: f64, u: f64) -> Result<f64> {
        match *self {
            Self::Sublinear { lambda, q } => Ok(lambda * pow_checked(u, q)?),
            Self::ConcaveConvex { lambda, q, p } => Ok(lambda * pow_checked(u, q)? + pow_checked(u, p)?),
            Self::Logistic { lambda, p } => Ok(lambda * u - pow_checked(u, p)?),
            Self::Custom { ref f, .. } => {
                let v = (f.0)(x, u);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::DomainError(format!("custom f is not finite at ({x}, {u})")))
                }
            }
        }
    }

    /// Whether `u -> f(x, u)` is nondecreasing for `u >= 0`.
    pub fn is_nondecreasing(&self) -> bool {
        match *self {
            Self::Sublinear { lambda, .. } | Self::ConcaveConvex { lambda, .. } => lambda >= 0.0,
            Self::Logistic { .. } => false,
            Self::Custom { hint, .. } => hint == MonotoneHint::Nondecreasing,
        }
    }

    /// Direction of `s -> f(x, s) s` on `s >= 0`, when it is monotone for
    /// structural reasons.
    pub fn product_monotone_on_nonnegative(&self) -> Option<Direction> {
        match *self {
            Self::Sublinear { lambda, .. } if lambda >= 0.0 => Some(Direction::Increasing),
            Self::Sublinear { .. } => Some(Direction::Decreasing),
            Self::ConcaveConvex { lambda, .. } if lambda >= 0.0 => Some(Direction::Increasing),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Sublinear { .. } => "sublinear",
            Self::ConcaveConvex { .. } => "concave_convex",
            Self::Logistic { .. } => "logistic",
            Self::Custom { .. } => "custom",
        }
    }
}

/// `f(x, u)`.
pub fn eval_f(f: &Nonlinearity, x: f64, u: f64) -> Result<f64> {
    f.eval(x, u)
}

/// Thresholds and auxiliary quantities behind a construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdInfo {
    pub lambda1: f64,
    pub e_sup: f64,
    /// Estimated upper bound on lambda for the concave-convex construction.
    pub lambda0: Option<f64>,
    /// Certified `max M(R(w))` over the final interval (logistic).
    pub m_inf: Option<f64>,
    pub lambda1_m_inf: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairConstruction {
    pub pair: OrderInterval,
    pub epsilon: f64,
    /// Scale of the supersolution: `K` in `K e`, or the constant value.
    pub k: f64,
    pub mu_max_used: f64,
    pub feasible: bool,
    pub threshold_info: ThresholdInfo,
    pub report: PairReport,
}

struct Ingredients {
    e: GridFunction,
    e_sup: f64,
    eig: EigenPair,
}

fn ingredients(domain: Interval) -> Result<Ingredients> {
    let e = torsion(domain);
    let e_sup = e.max();
    let eig = principal_eigenpair(domain, EIGEN_TOL)?;
    Ok(Ingredients { e, e_sup, eig })
}

/// Pair `(eps phi1, upper)` with `-(eps phi1)'' = eps lambda1 phi1`.
fn eigen_lower_pair(
    ing: &Ingredients,
    eps: f64,
    upper: GridFunction,
    upper_neg_lap: GridFunction,
) -> Result<OrderInterval> {
    let lower = ing.eig.phi1.scaled(eps);
    let lower_lap = ing.eig.phi1.scaled(eps * ing.eig.lambda1);
    OrderInterval::new(lower, upper)?.with_neg_laplacians(Some(lower_lap), Some(upper_neg_lap))
}

/// Largest `eps` with `eps phi1 <= K e` at every interior node.
fn ordering_epsilon(ing: &Ingredients, k: f64) -> f64 {
    let d = *ing.e.domain();
    d.interior().map(|i| k * ing.e[i] / ing.eig.phi1[i]).fold(f64::INFINITY, f64::min)
}

/// Halves `eps` from `eps0` until `accept(pair, mu_max)` holds and the pair
/// verifies, or `eps` drops below [`EPSILON_FLOOR`].
fn shrink_epsilon(
    eps0: f64,
    mut make_pair: impl FnMut(f64) -> Result<OrderInterval>,
    m: &KirchhoffM,
    f: &Nonlinearity,
    mut accept: impl FnMut(f64, f64) -> bool,
    last_mu_max: &mut f64,
) -> Result<Option<(f64, OrderInterval, PairReport)>> {
    let mut eps = eps0;
    while eps >= EPSILON_FLOOR {
        let pair = make_pair(eps)?;
        if leq(pair.lower(), pair.upper())?.holds {
            let range = m_range_over_interval(&pair, m, f, DEFAULT_SAMPLES_PER_NODE)?;
            *last_mu_max = range.mu_max;
            if accept(eps, range.mu_max) {
                let report = verify_pair(&pair, m, f)?;
                if report.ok {
                    log::debug!("accepted eps = {eps:e}, mu_max = {}", range.mu_max);
                    return Ok(Some((eps, pair, report)));
                }
            }
        }
        eps *= 0.5;
    }
    Ok(None)
}

/// Pair for `-M(||u||^2) u'' = lambda u^q`.
///
/// `K = (lambda ||e||_inf^q / m0)^{1/(1-q)}` makes `K e` a supersolution for
/// every admissible coefficient; `eps` is then halved until
/// `mu_max eps^{1-q} <= lambda / lambda1` with `mu_max` recomputed on the
/// current interval.
pub fn build_pair_sublinear(lambda: f64, q: f64, m: &KirchhoffM, domain: Interval) -> Result<PairConstruction> {
    if !(lambda > 0.0) {
        return Err(Error::NoPositiveSolution { lambda });
    }
    let f = Nonlinearity::sublinear(lambda, q)?;
    let ing = ingredients(domain)?;
    let k = (lambda * ing.e_sup.powf(q) / m.m0()).powf(1.0 / (1.0 - q)) * (1.0 + 1e-9);
    let upper = ing.e.scaled(k);
    let upper_lap = GridFunction::constant(domain, k);
    let lambda1 = ing.eig.lambda1;

    let mut mu_max = f64::NAN;
    let found = shrink_epsilon(
        ordering_epsilon(&ing, k),
        |eps| eigen_lower_pair(&ing, eps, upper.clone(), upper_lap.clone()),
        m,
        &f,
        |eps, mu| mu * eps.powf(1.0 - q) <= lambda / lambda1,
        &mut mu_max,
    )?;
    let (epsilon, pair, report) = found.ok_or(Error::NoEpsilon { floor: EPSILON_FLOOR })?;
    Ok(PairConstruction {
        pair,
        epsilon,
        k,
        mu_max_used: report.m_range.mu_max,
        feasible: true,
        threshold_info: ThresholdInfo { lambda1, e_sup: ing.e_sup, lambda0: None, m_inf: None, lambda1_m_inf: None },
        report,
    })
}

/// `lambda0 = max_K (m0 K^{1-q} - K^{p-q} ||e||^p) / ||e||^q` and its
/// maximizer, by golden-section search on `log K`.
pub fn concave_convex_lambda0(m0: f64, e_sup: f64, q: f64, p: f64) -> (f64, f64) {
    let objective = |y: f64| {
        let k = y.exp();
        (m0 * k.powf(1.0 - q) - k.powf(p - q) * e_sup.powf(p)) / e_sup.powf(q)
    };
    let (y, lambda0) = golden_max(objective, -60.0, 60.0, 1e-14);
    (lambda0, y.exp())
}

/// Pair for `-M(||u||^2) u'' = lambda u^q + u^p`, available for
/// `0 < lambda < lambda0`.
pub fn build_pair_concave_convex(
    lambda: f64,
    q: f64,
    p: f64,
    m: &KirchhoffM,
    domain: Interval,
) -> Result<PairConstruction> {
    let f = Nonlinearity::concave_convex(lambda, q, p)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "concave-convex construction needs lambda > 0, got {lambda}"
        )));
    }
    let ing = ingredients(domain)?;
    let (lambda0, k) = concave_convex_lambda0(m.m0(), ing.e_sup, q, p);
    if lambda >= lambda0 {
        return Err(Error::LambdaTooLarge { lambda, lambda0 });
    }
    let upper = ing.e.scaled(k);
    let upper_lap = GridFunction::constant(domain, k);
    let lambda1 = ing.eig.lambda1;
    let phi = &ing.eig.phi1;
    let interior = domain.interior();

    let mut mu_max = f64::NAN;
    let found = shrink_epsilon(
        ordering_epsilon(&ing, k),
        |eps| eigen_lower_pair(&ing, eps, upper.clone(), upper_lap.clone()),
        m,
        &f,
        |eps, mu| {
            let lhs = mu * eps.powf(1.0 - q) * lambda1;
            let rhs = interior
                .clone()
                .map(|i| lambda + (eps * phi[i]).powf(p - q))
                .fold(f64::INFINITY, f64::min);
            lhs <= rhs
        },
        &mut mu_max,
    )?;
    let (epsilon, pair, report) = found.ok_or(Error::NoEpsilon { floor: EPSILON_FLOOR })?;
    Ok(PairConstruction {
        pair,
        epsilon,
        k,
        mu_max_used: report.m_range.mu_max,
        feasible: true,
        threshold_info: ThresholdInfo {
            lambda1,
            e_sup: ing.e_sup,
            lambda0: Some(lambda0),
            m_inf: None,
            lambda1_m_inf: None,
        },
        report,
    })
}

/// Constant supersolution for the logistic term: the larger of `lambda` and
/// the positive zero `lambda^{1/(p-1)}` of `f`, so that `f(upper) <= 0`.
pub fn logistic_upper_level(lambda: f64, p: f64) -> f64 {
    lambda.max(lambda.powf(1.0 / (p - 1.0)))
}

/// Pair for `-M(||u||^2) u'' = lambda u - u^p`: constant upper function and
/// `eps phi1` below, feasible when
/// `mu_max lambda1 + (eps phi1)^{p-1} <= lambda` at every node, with
/// `mu_max` (the working `m_inf`) certified over the current interval.
pub fn build_pair_logistic(lambda: f64, p: f64, m: &KirchhoffM, domain: Interval) -> Result<PairConstruction> {
    let f = Nonlinearity::logistic(lambda, p)?;
    let ing = ingredients(domain)?;
    let lambda1 = ing.eig.lambda1;
    if !(lambda > 0.0) {
        return Err(Error::LambdaBelowThreshold { lambda, threshold: lambda1 * m.m0() });
    }
    let level = logistic_upper_level(lambda, p);
    let upper = GridFunction::constant(domain, level);
    let upper_lap = GridFunction::zeros(domain);
    let phi = &ing.eig.phi1;
    let interior = domain.interior();

    let mut m_inf = f64::NAN;
    let found = shrink_epsilon(
        level,
        |eps| eigen_lower_pair(&ing, eps, upper.clone(), upper_lap.clone()),
        m,
        &f,
        |eps, mu| {
            interior.clone().all(|i| mu * lambda1 + (eps * phi[i]).powf(p - 1.0) <= lambda)
        },
        &mut m_inf,
    )?;
    let Some((epsilon, pair, report)) = found else {
        return Err(Error::LambdaBelowThreshold { lambda, threshold: lambda1 * m_inf });
    };
    let m_inf = report.m_range.mu_max;
    Ok(PairConstruction {
        pair,
        epsilon,
        k: level,
        mu_max_used: m_inf,
        feasible: true,
        threshold_info: ThresholdInfo {
            lambda1,
            e_sup: ing.e_sup,
            lambda0: None,
            m_inf: Some(m_inf),
            lambda1_m_inf: Some(lambda1 * m_inf),
        },
        report,
    })
}
