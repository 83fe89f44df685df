//! Finite-difference tools for the nonlocal Kirchhoff problem
//! `-M(||u||^2) u'' = f(x, u)` on a bounded interval with zero boundary data,
//! where `||u||^2 = int |u'|^2`.
//!
//! Solutions are found through the equivalent local problem
//! `-u'' = f(x, u) / M(R(u))` with `R(u) = G^{-1}(int f(x,u) u)` and
//! `G(t) = M(t) t`. The crate checks the hypotheses on `M`, certifies
//! sub/supersolution pairs over their whole order interval, iterates inside
//! them, builds pairs for standard model nonlinearities, and reproduces the
//! explicit failures of the comparison principle for Kirchhoff operators.

// NaN must fail parameter checks, so `!(x > 0.0)` is the intended spelling.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexamples;
pub mod error;
pub mod grid;
pub mod kirchhoff;
pub mod models;
pub mod optimize;
pub mod solver;
pub mod spectral;
pub mod subsuper;

pub use counterexamples::{condi_check, pointwise_verify, rho_star, search_case1, search_case2, CondiCheck, CounterexampleWitness};
pub use error::{Error, Result};
pub use grid::{integrate, laplacian, leq, norm_sq_h1, solve_poisson, GridFunction, Interval, OrderCheck};
pub use kirchhoff::{Classification, Direction, KirchhoffM, MFamily, Monotonicity};
pub use models::{
    build_pair_concave_convex, build_pair_logistic, build_pair_sublinear, eval_f, MonotoneHint, Nonlinearity,
    PairConstruction, ThresholdInfo,
};
pub use solver::{solve_constant_rhs, solve_in_interval, Scheme, SolveConfig, SolveReport};
pub use spectral::{principal_eigenpair, torsion, EigenPair};
pub use subsuper::{m_range_over_interval, verify_pair, MRange, OrderInterval, PairReport};
