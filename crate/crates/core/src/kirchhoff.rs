//! Kirchhoff coefficient functions `M`, the derived maps `G(t) = M(t) t` and
//! `H(t) = M(t^2) t`, their inverses, and the nonlocal operator
//! `R(w) = G^{-1}(int f(x,w) w dx)`.
//!
//! Hypotheses on `M` are checked once, when a [`KirchhoffM`] is built, over
//! the working range `[0, scan_max]`. The resulting [`Classification`] is
//! stored with the value and never changes afterwards.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{integrate, GridFunction};
use crate::models::Nonlinearity;

pub const DEFAULT_SCAN_MAX: f64 = 1e6;
pub const DEFAULT_SAMPLES: usize = 4096;
/// Upper cap for the bracket used when inverting `G` or `H`.
pub const BRACKET_CAP: f64 = 1e12;
/// Relative residual target for the inversions.
pub const INVERSION_TOL: f64 = 1e-12;

/// Scalar callable used for custom Kirchhoff functions.
#[derive(Clone)]
pub struct ScalarFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl ScalarFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    fn call(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarFn(..)")
    }
}

/// The family a Kirchhoff function belongs to.
#[derive(Debug, Clone)]
pub enum MFamily {
    /// `M(t) = a + b (t + c)^p`.
    PowerShift { a: f64, b: f64, c: f64, p: f64 },
    Constant { m: f64 },
    Custom(ScalarFn),
}

impl MFamily {
    fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::DomainError(format!("M evaluated at t = {t} < 0")));
        }
        match *self {
            MFamily::PowerShift { a, b, c, p } => {
                let base = t + c;
                if p < 0.0 && base <= 0.0 {
                    return Err(Error::DomainError(format!(
                        "M(t) = a + b(t+c)^p with p = {p} < 0 needs t + c > 0, got {base}"
                    )));
                }
                Ok(a + b * base.powf(p))
            }
            MFamily::Constant { m } => Ok(m),
            MFamily::Custom(ref f) => {
                let v = f.call(t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::DomainError(format!("custom M is not finite at t = {t}")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Nonincreasing,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Hypothesis flags for `M` on the scanned working range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    /// `M >= m0 > 0` on the scan.
    pub m0_holds: bool,
    pub m0: f64,
    /// `M` nonincreasing.
    pub m1: bool,
    /// `M` strictly increasing.
    pub m2: bool,
    /// `M` nondecreasing (constants included).
    pub m2_weak: bool,
    /// `G` strictly monotone, hence invertible.
    pub m3: bool,
    pub g_direction: Option<Direction>,
    pub h_increasing: bool,
    pub monotonicity: Monotonicity,
}

/// The verified bracket on which `G` is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GInversionTable {
    pub t_max: f64,
    pub direction: Direction,
    pub tolerance: f64,
}

/// A classified Kirchhoff function.
#[derive(Debug, Clone)]
pub struct KirchhoffM {
    family: MFamily,
    scan_max: f64,
    class: Classification,
}

impl KirchhoffM {
    /// `M(t) = a + b (t + c)^p`, classified on `[0, DEFAULT_SCAN_MAX]`.
    pub fn power_shift(a: f64, b: f64, c: f64, p: f64) -> Result<Self> {
        Self::new(MFamily::PowerShift { a, b, c, p }, DEFAULT_SCAN_MAX)
    }

    pub fn constant(m: f64) -> Result<Self> {
        Self::new(MFamily::Constant { m }, DEFAULT_SCAN_MAX)
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, scan_max: f64) -> Result<Self> {
        Self::new(MFamily::Custom(ScalarFn::new(f)), scan_max)
    }

    /// Validates family parameters, then runs [`classify`] with the default
    /// sample count. Fails if `M` is not bounded below by a positive constant.
    pub fn new(family: MFamily, scan_max: f64) -> Result<Self> {
        if !(scan_max > 0.0 && scan_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("scan_max must be positive, got {scan_max}")));
        }
        match family {
            MFamily::PowerShift { a, b, c, p } => {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("power_shift needs a >= 0, got {a}")));
                }
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!("power_shift needs b > 0, got {b}")));
                }
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidParameter(format!("power_shift needs c >= 0, got {c}")));
                }
                if !p.is_finite() {
                    return Err(Error::InvalidParameter(format!("power_shift needs finite p, got {p}")));
                }
                if p < 0.0 && c <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "power_shift with p < 0 needs c > 0 so M(0) is finite".into(),
                    ));
                }
            }
            MFamily::Constant { m } => {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::InvalidParameter(format!("constant M needs m > 0, got {m}")));
                }
            }
            MFamily::Custom(_) => {}
        }
        let class = classify_family(&family, scan_max, DEFAULT_SAMPLES)?;
        if !class.m0_holds {
            return Err(Error::InvalidParameter(format!(
                "M is not bounded below by a positive constant on [0, {scan_max:e}] (min sample {})",
                class.m0
            )));
        }
        Ok(Self { family, scan_max, class })
    }

    pub fn family(&self) -> &MFamily {
        &self.family
    }

    pub fn scan_max(&self) -> f64 {
        self.scan_max
    }

    pub fn classification(&self) -> &Classification {
        &self.class
    }

    pub fn m0(&self) -> f64 {
        self.class.m0
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.class.monotonicity
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, MFamily::Constant { .. })
    }

    pub fn eval_m(&self, t: f64) -> Result<f64> {
        self.family.eval(t)
    }

    /// `G(t) = M(t) t`.
    pub fn eval_g(&self, t: f64) -> Result<f64> {
        Ok(self.eval_m(t)? * t)
    }

    /// `H(t) = M(t^2) t`.
    pub fn eval_h(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::DomainError(format!("H evaluated at t = {t} < 0")));
        }
        Ok(self.eval_m(t * t)? * t)
    }

    pub fn g_table(&self) -> Option<GInversionTable> {
        self.class.g_direction.map(|direction| GInversionTable {
            t_max: self.scan_max,
            direction,
            tolerance: INVERSION_TOL,
        })
    }

    /// `R(s) = G^{-1}(s)` by bisection.
    pub fn invert_g(&self, s: f64) -> Result<f64> {
        if self.class.g_direction != Some(Direction::Increasing) {
            return Err(Error::NonMonotone);
        }
        invert_increasing(|t| self.eval_g(t), s, self.scan_max)
    }

    /// `H^{-1}(s)` on `[0, inf)` by bisection.
    pub fn invert_h(&self, s: f64) -> Result<f64> {
        if !self.class.h_increasing {
            return Err(Error::NonMonotone);
        }
        invert_increasing(|t| self.eval_h(t), s, self.scan_max.sqrt())
    }

    /// Reclassifies with a different sample count. The stored classification
    /// is not changed.
    pub fn classify(&self, samples: usize) -> Result<Classification> {
        classify_family(&self.family, self.scan_max, samples)
    }

    /// `R(int f(x,w) w dx)`.
    pub fn nonlocal_r(&self, f: &Nonlinearity, w: &GridFunction) -> Result<f64> {
        let s = nonlocal_mass(f, w)?;
        self.r_of_mass(s)
    }

    /// `R(s)` with the negative-mass check applied first.
    pub fn r_of_mass(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::NegativeMass { integral: s });
        }
        self.invert_g(s)
    }

    /// `M(R(s))`. For a constant `M` this is the constant, whatever `s` is.
    pub fn mu_of_mass(&self, s: f64) -> Result<f64> {
        if let MFamily::Constant { m } = self.family {
            return Ok(m);
        }
        self.eval_m(self.r_of_mass(s)?)
    }
}

/// `int f(x, w) w dx` by the trapezoid rule.
pub fn nonlocal_mass(f: &Nonlinearity, w: &GridFunction) -> Result<f64> {
    let d = *w.domain();
    let mut prod = Vec::with_capacity(d.n());
    for (i, &u) in w.values().iter().enumerate() {
        prod.push(f.eval(d.x(i), u)? * u);
    }
    Ok(integrate(&GridFunction::new(d, prod)?))
}

/// Classifies `M` on `[0, scan_max]` from a mixed linear/logarithmic sample
/// set. Power-shift and constant families get their `M` monotonicity from
/// the sign of `b p`; `G` and `H` are always judged from samples.
pub fn classify(m: &KirchhoffM, samples: usize) -> Result<Classification> {
    m.classify(samples)
}

fn classify_family(family: &MFamily, scan_max: f64, samples: usize) -> Result<Classification> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!("classify needs >= 2 samples, got {samples}")));
    }
    let ts = sample_points(scan_max, samples);
    let ms: Vec<f64> = ts.iter().map(|&t| family.eval(t)).collect::<Result<_>>()?;
    let gs: Vec<f64> = ts.iter().zip(&ms).map(|(t, m)| t * m).collect();
    // H is scanned where its argument of M stays inside the scan range.
    let hs: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let r = t.sqrt();
            family.eval(t).map(|m| m * r)
        })
        .collect::<Result<_>>()?;

    let sampled_min = ms.iter().copied().fold(f64::INFINITY, f64::min);

    let (monotonicity, m0) = match *family {
        MFamily::PowerShift { a, b, p, .. } => {
            if p > 0.0 {
                (Monotonicity::Increasing, family.eval(0.0)?)
            } else if p < 0.0 {
                (Monotonicity::Nonincreasing, family.eval(scan_max)?)
            } else {
                (Monotonicity::Nonincreasing, a + b)
            }
        }
        MFamily::Constant { m } => (Monotonicity::Nonincreasing, m),
        MFamily::Custom(_) => {
            let mono = if strictly_increasing(&ms) {
                Monotonicity::Increasing
            } else if nonincreasing(&ms) {
                Monotonicity::Nonincreasing
            } else {
                Monotonicity::Unknown
            };
            (mono, sampled_min)
        }
    };
    // Never report a bound above what the samples show.
    let m0 = m0.min(sampled_min);

    let g_direction = if strictly_increasing(&gs) {
        Some(Direction::Increasing)
    } else if gs.windows(2).all(|w| w[1] < w[0]) {
        Some(Direction::Decreasing)
    } else {
        None
    };

    Ok(Classification {
        m0_holds: m0 > 0.0 && ms.iter().all(|v| v.is_finite()),
        m0,
        m1: matches!(monotonicity, Monotonicity::Nonincreasing),
        m2: matches!(monotonicity, Monotonicity::Increasing),
        m2_weak: matches!(monotonicity, Monotonicity::Increasing) || nondecreasing(&ms),
        m3: g_direction.is_some(),
        g_direction,
        h_increasing: strictly_increasing(&hs),
        monotonicity,
    })
}

/// Half linear, half logarithmic points on `[0, scan_max]`, sorted and
/// deduplicated, always containing both endpoints.
fn sample_points(scan_max: f64, samples: usize) -> Vec<f64> {
    let n_lin = (samples / 2).max(2);
    let n_log = (samples - samples / 2).max(2);
    let mut ts: Vec<f64> =
        (0..n_lin).map(|i| scan_max * i as f64 / (n_lin - 1) as f64).collect();
    let lo = (scan_max * 1e-12).ln();
    let hi = scan_max.ln();
    ts.extend((0..n_log).map(|i| (lo + (hi - lo) * i as f64 / (n_log - 1) as f64).exp()));
    ts.push(scan_max);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts.retain(|&t| t <= scan_max);
    ts
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Bisection for `f(t) = s` with `f` increasing and `f(0) = 0`. The bracket
/// `[0, hi]` doubles from `start_hi` up to [`BRACKET_CAP`].
fn invert_increasing(f: impl Fn(f64) -> Result<f64>, s: f64, start_hi: f64) -> Result<f64> {
    let f0 = f(0.0)?;
    if s < f0 || !s.is_finite() {
        return Err(Error::OutOfRange { target: s, cap: BRACKET_CAP });
    }
    let tol = INVERSION_TOL.max(INVERSION_TOL * s.abs());
    if (s - f0).abs() <= tol {
        return Ok(0.0);
    }

    let mut hi = start_hi.min(BRACKET_CAP);
    let mut f_hi = f(hi)?;
    while f_hi < s {
        if hi >= BRACKET_CAP {
            return Err(Error::OutOfRange { target: s, cap: BRACKET_CAP });
        }
        let next = (2.0 * hi).min(BRACKET_CAP);
        let f_next = f(next)?;
        if !(f_next > f_hi) {
            return Err(Error::NonMonotone);
        }
        hi = next;
        f_hi = f_next;
    }

    let mut lo = 0.0;
    let mut f_lo = f0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(if (s - f_lo).abs() <= (f_hi - s).abs() { lo } else { hi });
        }
        let fm = f(mid)?;
        if (fm - s).abs() <= tol {
            return Ok(mid);
        }
        if fm < s {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
}
