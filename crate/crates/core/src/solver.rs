//! Fixed-point solvers for `-u'' = f(x,u) / M(R(u))` inside a verified order
//! interval, and the closed-form solver for constant right-hand sides.
//!
//! Every iterate is projected onto `[lower, upper]` before the nonlocal
//! coefficient is evaluated, so the coefficient stays inside the certified
//! range of the pair.
//!
//! Schemes:
//! * `picard`: `v <- (-d2)^{-1} [f(Tv) / mu(Tv)]`;
//! * `shifted`: `(-d2 + c) v <- f(Tv) / mu(Tv) + c Tv`;
//! * `monotone_from_below` / `monotone_from_above`: for a frozen coefficient
//!   `mu` the local problem is solved by monotone iteration started at the
//!   lower (upper) function; `mu` itself is then found as a root of
//!   `mu -> M(R(u_mu)) - mu` on `[mu_min, mu_max]` by the Illinois method.
//!   Freezing `mu` is what keeps the inner iterates ordered: the coupled map
//!   is not order-preserving when `M` increases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{laplacian, norm_sq_h1, solve_shifted_poisson, GridFunction, Interval};
use crate::kirchhoff::{nonlocal_mass, KirchhoffM};
use crate::models::Nonlinearity;
use crate::spectral::torsion;
use crate::subsuper::{verify_pair, MRange, OrderInterval};

/// Slack for membership of the raw fixed point in the order interval.
pub const IN_INTERVAL_SLACK: f64 = 1e-10;
/// Safety factor applied to the estimated Lipschitz constant for `shifted`.
pub const SHIFT_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    MonotoneFromBelow,
    MonotoneFromAbove,
    Picard,
    Shifted,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::MonotoneFromBelow => "monotone_from_below",
            Scheme::MonotoneFromAbove => "monotone_from_above",
            Scheme::Picard => "picard",
            Scheme::Shifted => "shifted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    pub tol_step: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
    /// Shift for the `shifted` scheme; estimated from `f` when `None`.
    pub shift_c: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol_step: 1e-10, tol_residual: 1e-8, max_iter: 500, scheme: Scheme::Picard, shift_c: None }
    }
}

impl SolveConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_step > 0.0 && self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if let Some(c) = self.shift_c {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("shift_c must be >= 0, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Total number of linear solves.
    pub iterations: usize,
    /// Coefficient updates; only the monotone schemes use more than one.
    pub outer_iterations: usize,
    pub scheme: Scheme,
    #[serde(skip)]
    pub u: GridFunction,
    /// `R(u) = G^{-1}(int f(x,u) u)`.
    pub r_value: f64,
    /// `M(R(u))`.
    pub mu: f64,
    /// `int f(x,u) u`.
    pub mass: f64,
    /// `||u||^2`.
    pub norm_sq: f64,
    /// Sup-norm residual of `-u'' - f(x,u) / mu` over interior nodes.
    pub residual_sup: f64,
    /// `tol_residual * max(1, sup |f(x,u) / mu|)`, the bound `residual_sup`
    /// is held to.
    pub residual_tolerance: f64,
    /// Sup-norm residual of `-M(||u||^2) u'' - f(x,u)`.
    pub kirchhoff_residual_sup: f64,
    /// `|G(||u||^2) - int f(x,u) u|`.
    pub self_consistency_gap: f64,
    pub in_interval: bool,
    pub final_step: f64,
    pub shift_c: Option<f64>,
}

/// One linear solve inside a run, as seen by an observer.
#[derive(Debug)]
pub struct IterateEvent<'a> {
    /// Index of the coefficient value being used (0 for coupled schemes).
    pub sweep: usize,
    pub iteration: usize,
    pub mu: f64,
    pub step: f64,
    pub iterate: &'a GridFunction,
}

pub fn solve_in_interval(
    pair: &OrderInterval,
    m: &KirchhoffM,
    f: &Nonlinearity,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    solve_in_interval_observed(pair, m, f, cfg, |_| {})
}

/// As [`solve_in_interval`], calling `observer` after every linear solve.
///
/// A run that exhausts `max_iter` is returned as `Ok` with
/// `converged == false`.
pub fn solve_in_interval_observed(
    pair: &OrderInterval,
    m: &KirchhoffM,
    f: &Nonlinearity,
    cfg: &SolveConfig,
    mut observer: impl FnMut(&IterateEvent<'_>),
) -> Result<SolveReport> {
    cfg.validate()?;
    let report = verify_pair(pair, m, f)?;
    if !report.ok {
        return Err(Error::NotVerified {
            worst_margin: report.worst_super_margin.min(report.worst_sub_margin),
        });
    }
    let mut run = Run { pair, m, f, cfg, observer: &mut observer, solves: 0 };
    match cfg.scheme {
        Scheme::Picard => run.coupled(0.0, None),
        Scheme::Shifted => {
            let c = match cfg.shift_c {
                Some(c) => c,
                None => estimate_shift(pair, f, m.m0())?,
            };
            run.coupled(c, Some(c))
        }
        Scheme::MonotoneFromBelow | Scheme::MonotoneFromAbove => {
            if !f.is_nondecreasing() {
                return Err(Error::SchemeRequiresMonotone { scheme: cfg.scheme.name() });
            }
            run.nested(&report.m_range)
        }
    }
}

/// `SHIFT_SAFETY * max |df/du| / m0`, with the derivative estimated by
/// finite differences over the value range of the pair.
pub fn estimate_shift(pair: &OrderInterval, f: &Nonlinearity, m0: f64) -> Result<f64> {
    const U_SAMPLES: usize = 257;
    const X_SAMPLES: usize = 33;
    let d = *pair.lower().domain();
    let u_lo = pair.lower().min().min(0.0);
    let u_hi = pair.upper().max();
    if u_hi <= u_lo {
        return Ok(0.0);
    }
    let du = (u_hi - u_lo) / (U_SAMPLES - 1) as f64;
    let stride = ((d.n() - 1) / (X_SAMPLES - 1)).max(1);
    let mut lip = 0.0_f64;
    for i in (0..d.n()).step_by(stride) {
        let x = d.x(i);
        let mut prev = f.eval(x, u_lo)?;
        for k in 1..U_SAMPLES {
            let cur = f.eval(x, u_lo + k as f64 * du)?;
            lip = lip.max((cur - prev).abs() / du);
            prev = cur;
        }
    }
    Ok(SHIFT_SAFETY * lip / m0)
}

struct Run<'a, O> {
    pair: &'a OrderInterval,
    m: &'a KirchhoffM,
    f: &'a Nonlinearity,
    cfg: &'a SolveConfig,
    observer: &'a mut O,
    solves: usize,
}

/// Tracks the step history and decides when an iteration has settled.
///
/// The step must be below `tol`, and so must the geometric tail estimate
/// `step * rho / (1 - rho)` with `rho` the latest step ratio. `tol` is
/// relative to the iterate once its sup norm exceeds one, since absolute
/// steps cannot fall below rounding for large solutions.
struct StepTracker {
    prev: f64,
}

impl StepTracker {
    fn new() -> Self {
        Self { prev: f64::INFINITY }
    }

    fn settled(&mut self, step: f64, tol: f64, iterate: &GridFunction) -> bool {
        let tol = tol * iterate.sup_norm().max(1.0);
        let rho = if self.prev.is_finite() && self.prev > 0.0 { (step / self.prev).min(0.99) } else { 0.99 };
        self.prev = step;
        step <= tol && step * rho / (1.0 - rho) <= tol
    }
}

impl<O: FnMut(&IterateEvent<'_>)> Run<'_, O> {
    fn domain(&self) -> Interval {
        *self.pair.lower().domain()
    }

    fn mu_of(&self, v: &GridFunction) -> Result<f64> {
        self.m.mu_of_mass(nonlocal_mass(self.f, v)?)
    }

    /// Solves `(-d2 + shift) v = f(x, w) / mu + shift w` with zero boundary data.
    fn linear_step(&mut self, w: &GridFunction, mu: f64, shift: f64) -> Result<GridFunction> {
        let d = self.domain();
        let mut rhs = Vec::with_capacity(d.n());
        for (i, &wi) in w.values().iter().enumerate() {
            rhs.push(self.f.eval(d.x(i), wi)? / mu + shift * wi);
        }
        self.solves += 1;
        Ok(solve_shifted_poisson(&GridFunction::new(d, rhs)?, shift, 0.0, 0.0))
    }

    fn coupled(&mut self, shift: f64, reported_shift: Option<f64>) -> Result<SolveReport> {
        let mut v = self.pair.lower().clone();
        let mut tracker = StepTracker::new();
        let mut step = f64::INFINITY;
        for it in 1..=self.cfg.max_iter {
            let tv = self.pair.truncate(&v);
            let mu = self.mu_of(&tv)?;
            let next = self.linear_step(&tv, mu, shift)?;
            step = next.sup_distance(&v)?;
            (self.observer)(&IterateEvent { sweep: 0, iteration: it, mu, step, iterate: &next });
            v = next;
            if tracker.settled(step, self.cfg.tol_step, &v) {
                let rep = self.finish(&v, step, 1, reported_shift)?;
                if rep.converged {
                    return Ok(rep);
                }
            }
        }
        log::info!("{} did not converge in {} iterations", self.cfg.scheme.name(), self.cfg.max_iter);
        let mut rep = self.finish(&v, step, 1, reported_shift)?;
        rep.converged = false;
        Ok(rep)
    }

    /// Monotone iteration for a frozen coefficient. Returns the limit and
    /// whether it settled within `max_iter`.
    fn frozen(&mut self, mu: f64, sweep: usize) -> Result<(GridFunction, bool)> {
        let from_below = self.cfg.scheme == Scheme::MonotoneFromBelow;
        let mut v = if from_below { self.pair.lower().clone() } else { self.pair.upper().clone() };
        let mut tracker = StepTracker::new();
        for it in 1..=self.cfg.max_iter {
            let tv = self.pair.truncate(&v);
            let next = self.linear_step(&tv, mu, 0.0)?;
            let step = next.sup_distance(&v)?;
            (self.observer)(&IterateEvent { sweep, iteration: it, mu, step, iterate: &next });
            v = next;
            if tracker.settled(step, self.cfg.tol_step, &v) {
                return Ok((v, true));
            }
        }
        Ok((v, false))
    }

    fn nested(&mut self, range: &MRange) -> Result<SolveReport> {
        let mut sweep = 0;
        let mut eval = |run: &mut Self, mu: f64| -> Result<(GridFunction, bool, f64)> {
            let (u, ok) = run.frozen(mu, sweep)?;
            sweep += 1;
            let resid = run.mu_of(&run.pair.truncate(&u))? - mu;
            Ok((u, ok, resid))
        };
        let mu_tol = |mu: f64| 1e-14 * mu.abs().max(1.0);

        let (mut a, mut b) = (range.mu_min, range.mu_max);
        let (ua, ok_a, mut fa) = eval(self, a)?;
        let mut best = (ua, ok_a, fa);
        if (b - a).abs() > mu_tol(a) && fa.abs() > mu_tol(a) {
            let (ub, ok_b, mut fb) = eval(self, b)?;
            if fb.abs() < best.2.abs() {
                best = (ub, ok_b, fb);
            }
            if fa * fb < 0.0 {
                // Illinois variant of regula falsi.
                let mut side = 0;
                for _ in 0..self.cfg.max_iter {
                    let c = (a * fb - b * fa) / (fb - fa);
                    let (uc, ok_c, fc) = eval(self, c)?;
                    let done = fc.abs() <= mu_tol(c) || (b - a).abs() <= 4.0 * mu_tol(c);
                    if fc.abs() <= best.2.abs() {
                        best = (uc, ok_c, fc);
                    }
                    if done {
                        break;
                    }
                    if fc * fb < 0.0 {
                        a = b;
                        fa = fb;
                        side = 0;
                    } else {
                        fa *= 0.5;
                        side += 1;
                        if side > 1 {
                            fa *= 0.5;
                        }
                    }
                    b = c;
                    fb = fc;
                }
            }
        }
        let (u, inner_ok, _) = best;
        let mut rep = self.finish(&u, 0.0, sweep, None)?;
        rep.converged &= inner_ok;
        Ok(rep)
    }

    fn finish(&self, raw: &GridFunction, step: f64, outer: usize, shift_c: Option<f64>) -> Result<SolveReport> {
        let in_interval = raw.values().iter().zip(self.pair.lower().values().iter().zip(self.pair.upper().values())).all(
            |(&v, (&lo, &hi))| v >= lo - IN_INTERVAL_SLACK && v <= hi + IN_INTERVAL_SLACK,
        );
        let u = self.pair.truncate(raw);
        let diag = diagnostics(&u, self.m, self.f)?;
        let residual_tolerance = self.cfg.tol_residual * diag.rhs_sup.max(1.0);
        let converged = diag.residual_sup <= residual_tolerance && in_interval;
        Ok(SolveReport {
            converged,
            iterations: self.solves,
            outer_iterations: outer,
            scheme: self.cfg.scheme,
            u,
            r_value: diag.r_value,
            mu: diag.mu,
            mass: diag.mass,
            norm_sq: diag.norm_sq,
            residual_sup: diag.residual_sup,
            residual_tolerance,
            kirchhoff_residual_sup: diag.kirchhoff_residual_sup,
            self_consistency_gap: diag.self_consistency_gap,
            in_interval,
            final_step: step,
            shift_c,
        })
    }
}

struct Diagnostics {
    mass: f64,
    mu: f64,
    r_value: f64,
    norm_sq: f64,
    residual_sup: f64,
    rhs_sup: f64,
    kirchhoff_residual_sup: f64,
    self_consistency_gap: f64,
}

fn diagnostics(u: &GridFunction, m: &KirchhoffM, f: &Nonlinearity) -> Result<Diagnostics> {
    let d = *u.domain();
    let mass = nonlocal_mass(f, u)?;
    let (r_value, mu) = if m.is_constant() {
        let mu = m.eval_m(0.0)?;
        (mass / mu, mu)
    } else {
        let r = m.r_of_mass(mass)?;
        (r, m.eval_m(r)?)
    };
    let norm_sq = norm_sq_h1(u);
    let m_norm = m.eval_m(norm_sq)?;
    let lap = laplacian(u);
    let mut residual = 0.0_f64;
    let mut rhs_sup = 0.0_f64;
    let mut kres = 0.0_f64;
    for i in d.interior() {
        let fi = f.eval(d.x(i), u[i])?;
        residual = residual.max((-lap[i] - fi / mu).abs());
        rhs_sup = rhs_sup.max((fi / mu).abs());
        kres = kres.max((-m_norm * lap[i] - fi).abs());
    }
    Ok(Diagnostics {
        mass,
        mu,
        r_value,
        norm_sq,
        residual_sup: residual,
        rhs_sup,
        kirchhoff_residual_sup: kres,
        self_consistency_gap: (m_norm * norm_sq - mass).abs(),
    })
}

/// Solution of `-M(||u||^2) u'' = fbar` with zero boundary data.
///
/// Any such `u` is `(fbar / M(s^2)) e` where `e` is the torsion function and
/// `s = ||u||` solves `H(s) = fbar ||e||`.
pub fn solve_constant_rhs(fbar: f64, m: &KirchhoffM, domain: Interval) -> Result<GridFunction> {
    if !(fbar > 0.0 && fbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("constant right-hand side must be positive, got {fbar}")));
    }
    let e = torsion(domain);
    let e_norm = norm_sq_h1(&e).sqrt();
    let s = m.invert_h(fbar * e_norm)?;
    Ok(e.scaled(fbar / m.eval_m(s * s)?))
}
