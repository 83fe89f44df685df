//! Uniform 1D grids, nodal functions and the finite-difference kernels built
//! on them.
//!
//! Nodes are `x_i = a + i*h`, `i = 0..n`, with both endpoints included.
//! Laplacian values at the two boundary nodes are defined as zero and are
//! never read by verification code.

use std::io::{Read, Write};
use std::ops::Index;

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack used by [`leq`] to absorb rounding.
pub const ORDER_SLACK: f64 = 1e-12;

/// Closed interval `[a, b]` discretized with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    a: f64,
    b: f64,
    n: usize,
}

impl Interval {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInterval(format!("endpoints must be finite, got [{a}, {b}]")));
        }
        if b <= a {
            return Err(Error::InvalidInterval(format!("need b > a, got [{a}, {b}]")));
        }
        if n < 3 {
            return Err(Error::InvalidInterval(format!("need at least 3 nodes, got {n}")));
        }
        Ok(Self { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Total node count, boundary nodes included.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n - 1) as f64
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Indices of interior nodes.
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.n - 1
    }
}

/// Nodal values of a function on an [`Interval`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    domain: Interval,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Interval, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n() {
            return Err(Error::InvalidParameter(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                domain.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {i}")));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Interval) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: Interval, c: f64) -> Self {
        Self { domain, values: vec![c; domain.n()] }
    }

    /// Samples `f` at every node.
    pub fn from_fn(domain: Interval, f: impl Fn(f64) -> f64) -> Self {
        Self { domain, values: domain.nodes().map(f).collect() }
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nodewise `f(x_i, u_i)`.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().enumerate().map(|(i, &u)| f(self.domain.x(i), u)).collect();
        Self { domain: self.domain, values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { domain: self.domain, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_i |u_i - v_i|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.same_domain(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// Writes the `x,value` CSV representation with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"]).map_err(csv_err)?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.domain.x(i)), format!("{v:.16e}")])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    /// Reads the `x,value` CSV representation. Nodes must be uniformly spaced.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(csv_err)?;
        if headers.iter().collect::<Vec<_>>() != ["x", "value"] {
            return Err(Error::Csv(format!("expected header `x,value`, got {headers:?}")));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Csv(format!("bad number {s:?}: {e}")))
            };
            xs.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        let n = xs.len();
        if n < 3 {
            return Err(Error::Csv(format!("need at least 3 rows, got {n}")));
        }
        let domain = Interval::new(xs[0], xs[n - 1], n)?;
        let h = domain.h();
        for (i, &x) in xs.iter().enumerate() {
            if (x - domain.x(i)).abs() > 1e-9 * h.max(domain.len()) {
                return Err(Error::Csv(format!("row {i}: x = {x} is not on a uniform grid")));
            }
        }
        GridFunction::new(domain, values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

impl Index<usize> for GridFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Discrete Laplacian `(u_{i-1} - 2u_i + u_{i+1}) / h^2`; zero at boundary nodes.
pub fn laplacian(u: &GridFunction) -> GridFunction {
    let d = u.domain;
    let h2 = d.h() * d.h();
    let v = &u.values;
    let mut out = vec![0.0; d.n()];
    for i in d.interior() {
        out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
    }
    GridFunction { domain: d, values: out }
}

/// Solves `-u'' = g` on the interior with Dirichlet data `u(a) = bc_left`,
/// `u(b) = bc_right`. Boundary entries of `g` are ignored.
pub fn solve_poisson(g: &GridFunction, bc_left: f64, bc_right: f64) -> GridFunction {
    solve_shifted_poisson(g, 0.0, bc_left, bc_right)
}

/// Solves `-u'' + shift*u = g` on the interior with Dirichlet data.
///
/// `shift` must be nonnegative so the tridiagonal system stays diagonally
/// dominant.
pub fn solve_shifted_poisson(g: &GridFunction, shift: f64, bc_left: f64, bc_right: f64) -> GridFunction {
    debug_assert!(shift >= 0.0);
    let d = g.domain;
    let n = d.n();
    let h2 = d.h() * d.h();
    let m = n - 2;

    let off = -1.0 / h2;
    let diag = 2.0 / h2 + shift;
    let mut rhs: Vec<f64> = g.values[1..n - 1].to_vec();
    rhs[0] -= off * bc_left;
    rhs[m - 1] -= off * bc_right;

    // Thomas algorithm with constant coefficients.
    let mut c_prime = vec![0.0; m];
    c_prime[0] = off / diag;
    rhs[0] /= diag;
    for i in 1..m {
        let denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }

    let mut values = Vec::with_capacity(n);
    values.push(bc_left);
    values.extend_from_slice(&rhs);
    values.push(bc_right);
    GridFunction { domain: d, values }
}

/// Discrete `||u||^2 = int |u'|^2`, summing squared forward-difference
/// quotients over cells.
pub fn norm_sq_h1(u: &GridFunction) -> f64 {
    let h = u.domain.h();
    u.values.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / h
}

/// Composite trapezoid rule.
///
/// For `u` vanishing at both ends, `integrate(-laplacian(u) * u)` equals
/// `norm_sq_h1(u)` exactly (summation by parts), which the solver's
/// self-consistency check relies on.
pub fn integrate(u: &GridFunction) -> f64 {
    let v = &u.values;
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().sum();
    u.domain.h() * (inner + 0.5 * (v[0] + v[n - 1]))
}

/// Outcome of a nodewise order comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderCheck {
    pub holds: bool,
    pub worst_node: usize,
    /// `max_i (u_i - v_i)`, unslacked.
    pub worst_gap: f64,
}

/// Checks `u <= v` at every node, up to [`ORDER_SLACK`].
pub fn leq(u: &GridFunction, v: &GridFunction) -> Result<OrderCheck> {
    u.same_domain(v)?;
    let (worst_node, worst_gap) = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a - b)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bg), (i, g)| if g > bg { (i, g) } else { (bi, bg) });
    Ok(OrderCheck { holds: worst_gap <= ORDER_SLACK, worst_node, worst_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero_pi(n: usize) -> Interval {
        Interval::new(0.0, PI, n).unwrap()
    }

    #[test]
    fn interval_rejects_bad_input() {
        assert!(Interval::new(1.0, 1.0, 10).is_err());
        assert!(Interval::new(0.0, 1.0, 2).is_err());
        assert!(Interval::new(0.0, f64::INFINITY, 10).is_err());
        let d = Interval::new(0.0, 1.0, 11).unwrap();
        assert_eq!(d.h(), 0.1);
    }

    #[test]
    fn grid_function_rejects_non_finite_and_wrong_length() {
        let d = zero_pi(5);
        assert!(GridFunction::new(d, vec![0.0; 4]).is_err());
        assert!(GridFunction::new(d, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let d = zero_pi(101);
        assert!(laplacian(&GridFunction::zeros(d)).values().iter().all(|&v| v == 0.0));

        let parab = GridFunction::from_fn(d, |x| x * (PI - x));
        let lap = laplacian(&parab);
        for i in d.interior() {
            assert!((lap[i] + 2.0).abs() < 1e-9, "node {i}: {}", lap[i]);
        }
        assert_eq!(lap[0], 0.0);
        assert_eq!(lap[100], 0.0);

        let d = zero_pi(1001);
        let s = GridFunction::from_fn(d, f64::sin);
        let lap = laplacian(&s);
        let err = d.interior().map(|i| (lap[i] + s[i]).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-5, "sup error {err}");
    }

    #[test]
    fn poisson_examples() {
        let d = zero_pi(2001);
        let u = solve_poisson(&GridFunction::zeros(d), 0.0, 0.0);
        assert!(u.values().iter().all(|&v| v == 0.0));

        let u = solve_poisson(&GridFunction::constant(d, 1.0), 0.0, 0.0);
        let exact = GridFunction::from_fn(d, |x| x * (PI - x) / 2.0);
        assert!(u.sup_distance(&exact).unwrap() < 1e-11);
        assert!((u[1000] - PI * PI / 8.0).abs() < 1e-11);

        let g = GridFunction::from_fn(d, f64::sin);
        let u = solve_poisson(&g, 0.0, 0.0);
        assert!(u.sup_distance(&g).unwrap() <= 1e-6);
    }

    #[test]
    fn poisson_residual_and_boundary_data() {
        let d = Interval::new(-1.0, 2.0, 301).unwrap();
        let g = GridFunction::from_fn(d, |x| (3.0 * x).cos() + x * x);
        let u = solve_poisson(&g, 0.7, -1.3);
        assert_eq!(u[0], 0.7);
        assert_eq!(u[300], -1.3);
        let lap = laplacian(&u);
        let gmax = g.sup_norm();
        for i in d.interior() {
            assert!((-lap[i] - g[i]).abs() <= 1e-12 * gmax.max(1.0) * 1e3, "node {i}");
        }
    }

    #[test]
    fn norm_and_integral_examples() {
        let d = zero_pi(4001);
        assert_eq!(norm_sq_h1(&GridFunction::zeros(d)), 0.0);
        assert!((norm_sq_h1(&GridFunction::from_fn(d, f64::sin)) - PI / 2.0).abs() < 1e-5);
        let parab = GridFunction::from_fn(d, |x| x * (PI - x));
        assert!((norm_sq_h1(&parab) - PI.powi(3) / 3.0).abs() < 1e-4);

        let d = zero_pi(2001);
        assert_eq!(integrate(&GridFunction::zeros(d)), 0.0);
        assert!((integrate(&GridFunction::from_fn(d, f64::sin)) - 2.0).abs() < 1e-6);
        let parab = GridFunction::from_fn(d, |x| x * (PI - x));
        // trapezoid error on a quadratic is exactly (b - a) h^2 / 12 * |u''|
        let h = d.h();
        assert!((integrate(&parab) - (PI.powi(3) / 6.0 - PI * h * h / 6.0)).abs() < 1e-12);
        assert!((integrate(&parab) - PI.powi(3) / 6.0).abs() < 1.3e-6);
    }

    #[test]
    fn summation_by_parts_is_exact() {
        let d = Interval::new(-1.0, 2.5, 317).unwrap();
        let u = GridFunction::from_fn(d, |x| (x + 1.0) * (2.5 - x) * (1.0 + x * x).cos());
        let lap = laplacian(&u);
        let prod = GridFunction::new(d, (0..d.n()).map(|i| -lap[i] * u[i]).collect()).unwrap();
        let nsq = norm_sq_h1(&u);
        assert!((integrate(&prod) - nsq).abs() < 1e-12 * nsq);
    }

    #[test]
    fn leq_examples() {
        let d = zero_pi(2001);
        let e = solve_poisson(&GridFunction::constant(d, 1.0), 0.0, 0.0);
        assert!(leq(&GridFunction::zeros(d), &e).unwrap().holds);

        let s = GridFunction::from_fn(d, f64::sin);
        let p = GridFunction::from_fn(d, |x| 0.405 * x * (PI - x));
        let chk = leq(&s, &p).unwrap();
        assert!(!chk.holds);
        assert_eq!(chk.worst_node, 1000);
        let expected = 1.0 - 0.405 * PI * PI / 4.0;
        assert!((chk.worst_gap - expected).abs() < 1e-12);

        let chk = leq(&s, &s).unwrap();
        assert!(chk.holds);
        assert_eq!(chk.worst_gap, 0.0);

        let other = GridFunction::zeros(zero_pi(11));
        assert_eq!(leq(&s, &other), Err(Error::DomainMismatch));
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let d = Interval::new(0.0, PI, 17).unwrap();
        let u = GridFunction::from_fn(d, |x| x.sin() / 3.0);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        let back = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.domain().n(), 17);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let text = "t,u\n0,0\n1,1\n2,0\n";
        assert!(matches!(GridFunction::read_csv(text.as_bytes()), Err(Error::Csv(_))));
    }
}
