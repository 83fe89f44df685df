//! Order intervals and certification of sub-supersolution pairs.
//!
//! The hypothesis to check quantifies over every `w` in `[lower, upper]`,
//! but `M(R(w))` depends on `w` only through the scalar
//! `s(w) = int f(x,w) w dx`. Bounding `s` over the interval, nodewise, and
//! pushing the bounds through the monotone maps `R` and `M` gives a range
//! `[mu_min, mu_max]` that contains every admissible coefficient. The
//! pointwise inequalities are then checked at the worst end of that range.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{integrate, laplacian, leq, GridFunction, ORDER_SLACK};
use crate::kirchhoff::{KirchhoffM, Monotonicity};
use crate::models::Nonlinearity;
use crate::optimize::{golden_max, golden_min};

pub const DEFAULT_SAMPLES_PER_NODE: usize = 64;
/// Margins at or above this value count as satisfied.
pub const MARGIN_TOL: f64 = -1e-10;

/// A candidate pair `lower <= upper`, optionally carrying exact values of
/// `-lower''` and `-upper''` at the nodes.
#[derive(Debug, Clone, Serialize)]
pub struct OrderInterval {
    lower: GridFunction,
    upper: GridFunction,
    #[serde(skip)]
    lower_neg_lap: Option<GridFunction>,
    #[serde(skip)]
    upper_neg_lap: Option<GridFunction>,
}

impl OrderInterval {
    /// Builds a pair on a common grid. Ordering is checked by [`Self::check`],
    /// not here, so invalid pairs can still be reported on.
    pub fn new(lower: GridFunction, upper: GridFunction) -> Result<Self> {
        lower.same_domain(&upper)?;
        Ok(Self { lower, upper, lower_neg_lap: None, upper_neg_lap: None })
    }

    /// Attaches known values of `-lower''` and `-upper''`. When present they
    /// replace the finite-difference Laplacian in [`verify_pair`].
    pub fn with_neg_laplacians(
        mut self,
        lower: Option<GridFunction>,
        upper: Option<GridFunction>,
    ) -> Result<Self> {
        for g in lower.iter().chain(upper.iter()) {
            self.lower.same_domain(g)?;
        }
        self.lower_neg_lap = lower;
        self.upper_neg_lap = upper;
        Ok(self)
    }

    pub fn lower(&self) -> &GridFunction {
        &self.lower
    }

    pub fn upper(&self) -> &GridFunction {
        &self.upper
    }

    /// `-lower''`, exact when supplied, otherwise by central differences.
    pub fn lower_neg_laplacian(&self) -> GridFunction {
        self.lower_neg_lap.clone().unwrap_or_else(|| laplacian(&self.lower).scaled(-1.0))
    }

    pub fn upper_neg_laplacian(&self) -> GridFunction {
        self.upper_neg_lap.clone().unwrap_or_else(|| laplacian(&self.upper).scaled(-1.0))
    }

    /// Checks `lower <= upper` everywhere and `lower <= 0 <= upper` at both
    /// boundary nodes.
    pub fn check(&self) -> Result<()> {
        let ord = leq(&self.lower, &self.upper)?;
        if !ord.holds {
            return Err(Error::OrderViolated { node: ord.worst_node, gap: ord.worst_gap });
        }
        let last = self.lower.len() - 1;
        for node in [0, last] {
            if self.lower[node] > ORDER_SLACK || self.upper[node] < -ORDER_SLACK {
                return Err(Error::BoundaryViolated { node });
            }
        }
        Ok(())
    }

    /// Nodewise projection of `v` onto `[lower, upper]`.
    pub fn truncate(&self, v: &GridFunction) -> GridFunction {
        let vals = v
            .values()
            .iter()
            .zip(self.lower.values().iter().zip(self.upper.values()))
            .map(|(&x, (&lo, &hi))| x.max(lo).min(hi))
            .collect();
        GridFunction::new(*v.domain(), vals).expect("projection of finite values is finite")
    }
}

/// Bounds on `s(w) = int f(x,w) w` and on `M(R(w))` over an order interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MRange {
    pub s_min: f64,
    pub s_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub ok: bool,
    /// `mu * (-upper'') - f(x, upper)` at the worst admissible `mu`.
    #[serde(skip)]
    pub super_margin: GridFunction,
    /// `f(x, lower) - mu * (-lower'')` at the worst admissible `mu`.
    #[serde(skip)]
    pub sub_margin: GridFunction,
    pub m_range: MRange,
    pub worst_super_margin: f64,
    pub worst_super_node: usize,
    pub worst_sub_margin: f64,
    pub worst_sub_node: usize,
}

/// Extrema of `s -> f(x, s) s` on `[lo, hi]`.
fn extremize_product(f: &Nonlinearity, x: f64, lo: f64, hi: f64, samples: usize) -> Result<(f64, f64)> {
    let g = |s: f64| f.eval(x, s).map(|v| v * s);
    if hi <= lo {
        let v = g(lo)?;
        return Ok((v, v));
    }
    if lo >= 0.0 && f.product_monotone_on_nonnegative().is_some() {
        let (a, b) = (g(lo)?, g(hi)?);
        return Ok((a.min(b), a.max(b)));
    }

    let step = (hi - lo) / (samples - 1) as f64;
    let pts: Vec<f64> = (0..samples).map(|k| if k + 1 == samples { hi } else { lo + k as f64 * step }).collect();
    let vals: Vec<f64> = pts.iter().map(|&s| g(s)).collect::<Result<_>>()?;
    let (imin, _) = vals.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let (imax, _) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });

    let bracket = |i: usize| (pts[i.saturating_sub(1)], pts[(i + 1).min(samples - 1)]);
    let (a, b) = bracket(imin);
    let (_, refined_min) = golden_min(|s| g(s).unwrap_or(f64::INFINITY), a, b, 1e-12);
    let (a, b) = bracket(imax);
    let (_, refined_max) = golden_max(|s| g(s).unwrap_or(f64::NEG_INFINITY), a, b, 1e-12);
    Ok((vals[imin].min(refined_min), vals[imax].max(refined_max)))
}

/// Bounds `M(R(w))` over every `w` in the pair.
pub fn m_range_over_interval(
    pair: &OrderInterval,
    m: &KirchhoffM,
    f: &Nonlinearity,
    samples_per_node: usize,
) -> Result<MRange> {
    if samples_per_node < 2 {
        return Err(Error::InvalidParameter(format!("samples_per_node must be >= 2, got {samples_per_node}")));
    }
    let d = *pair.lower.domain();
    let mut lo_env = Vec::with_capacity(d.n());
    let mut hi_env = Vec::with_capacity(d.n());
    for i in 0..d.n() {
        let (a, b) = (pair.lower[i], pair.upper[i]);
        let (gmin, gmax) = extremize_product(f, d.x(i), a.min(b), a.max(b), samples_per_node)?;
        lo_env.push(gmin);
        hi_env.push(gmax);
    }
    // Trapezoid weights are nonnegative, so the envelopes bound the discrete
    // mass of every w in the interval.
    let s_min = integrate(&GridFunction::new(d, lo_env)?);
    let s_max = integrate(&GridFunction::new(d, hi_env)?);

    if m.is_constant() {
        let mu = m.mu_of_mass(0.0)?;
        return Ok(MRange { s_min, s_max, mu_min: mu, mu_max: mu });
    }
    let t_lo = m.r_of_mass(s_min)?;
    let t_hi = m.r_of_mass(s_max)?;
    let (mu_min, mu_max) = match m.monotonicity() {
        Monotonicity::Increasing => (m.eval_m(t_lo)?, m.eval_m(t_hi)?),
        Monotonicity::Nonincreasing => (m.eval_m(t_hi)?, m.eval_m(t_lo)?),
        Monotonicity::Unknown => {
            let k = DEFAULT_SAMPLES_PER_NODE;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for j in 0..k {
                let t = t_lo + (t_hi - t_lo) * j as f64 / (k - 1) as f64;
                let v = m.eval_m(t)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let eval = |t: f64| m.eval_m(t).unwrap_or(f64::NAN);
            let w = (t_hi - t_lo) / (k - 1) as f64;
            // Refine around the sampled extremes.
            for j in 0..k {
                let t = t_lo + w * j as f64;
                let v = eval(t);
                if v == lo {
                    lo = lo.min(golden_min(eval, (t - w).max(t_lo), (t + w).min(t_hi), 1e-12).1);
                }
                if v == hi {
                    hi = hi.max(golden_max(eval, (t - w).max(t_lo), (t + w).min(t_hi), 1e-12).1);
                }
            }
            (lo, hi)
        }
    };
    Ok(MRange { s_min, s_max, mu_min, mu_max })
}

/// Smallest super- and subsolution margins for a single coefficient `mu`.
///
/// Returns `(min_i mu (-upper'')_i - f(x_i, upper_i), min_i f(x_i, lower_i) - mu (-lower'')_i)`
/// over interior nodes.
pub fn margins_for_mu(pair: &OrderInterval, f: &Nonlinearity, mu: f64) -> Result<(f64, f64)> {
    let d = *pair.lower.domain();
    let lu = pair.upper_neg_laplacian();
    let ll = pair.lower_neg_laplacian();
    let mut sup = f64::INFINITY;
    let mut sub = f64::INFINITY;
    for i in d.interior() {
        let x = d.x(i);
        sup = sup.min(mu * lu[i] - f.eval(x, pair.upper[i])?);
        sub = sub.min(f.eval(x, pair.lower[i])? - mu * ll[i]);
    }
    Ok((sup, sub))
}

pub fn verify_pair(pair: &OrderInterval, m: &KirchhoffM, f: &Nonlinearity) -> Result<PairReport> {
    verify_pair_with(pair, m, f, DEFAULT_SAMPLES_PER_NODE)
}

/// Checks both inequalities at every interior node for every `mu` in the
/// certified range. Each inequality is linear in `mu`, so only one end of the
/// range needs testing, chosen by the sign of the Laplacian.
pub fn verify_pair_with(
    pair: &OrderInterval,
    m: &KirchhoffM,
    f: &Nonlinearity,
    samples_per_node: usize,
) -> Result<PairReport> {
    pair.check()?;
    let range = m_range_over_interval(pair, m, f, samples_per_node)?;
    check_margins(pair, f, range)
}

/// Checks both inequalities for every `mu` in `range`.
pub fn check_margins(pair: &OrderInterval, f: &Nonlinearity, range: MRange) -> Result<PairReport> {
    let d = *pair.lower.domain();
    let lu = pair.upper_neg_laplacian();
    let ll = pair.lower_neg_laplacian();

    let mut sup = vec![0.0; d.n()];
    let mut sub = vec![0.0; d.n()];
    for i in d.interior() {
        let x = d.x(i);
        let mu_sup = if lu[i] >= 0.0 { range.mu_min } else { range.mu_max };
        sup[i] = mu_sup * lu[i] - f.eval(x, pair.upper[i])?;
        let mu_sub = if ll[i] >= 0.0 { range.mu_max } else { range.mu_min };
        sub[i] = f.eval(x, pair.lower[i])? - mu_sub * ll[i];
    }
    let worst = |v: &[f64]| {
        d.interior().fold((0, f64::INFINITY), |(bi, bv), i| if v[i] < bv { (i, v[i]) } else { (bi, bv) })
    };
    let (worst_super_node, worst_super_margin) = worst(&sup);
    let (worst_sub_node, worst_sub_margin) = worst(&sub);
    Ok(PairReport {
        ok: worst_super_margin >= MARGIN_TOL && worst_sub_margin >= MARGIN_TOL,
        super_margin: GridFunction::new(d, sup)?,
        sub_margin: GridFunction::new(d, sub)?,
        m_range: range,
        worst_super_margin,
        worst_super_node,
        worst_sub_margin,
        worst_sub_node,
    })
}
