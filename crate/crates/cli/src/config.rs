//! JSON run configuration and its validation.

use std::fs;
use std::path::{Path, PathBuf};

use kirchhoff_core::{
    build_pair_concave_convex, build_pair_logistic, build_pair_sublinear, GridFunction, Interval, KirchhoffM,
    MFamily, Nonlinearity, OrderInterval, PairConstruction, Scheme, SolveConfig,
};
use serde::{Deserialize, Serialize};

use crate::report::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(rename = "M")]
    pub m: MSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Explicit pair given as two CSV grid functions; otherwise the model's
    /// constructor builds one.
    #[serde(default)]
    pub pair: Option<PairSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MSpec {
    PowerShift { a: f64, b: f64, c: f64, p: f64, scan_max: Option<f64> },
    Constant { m: f64, scan_max: Option<f64> },
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Sublinear { lambda: f64, q: f64 },
    ConcaveConvex { lambda: f64, q: f64, p: f64 },
    Logistic { lambda: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol_step: Option<f64>,
    pub tol_residual: Option<f64>,
    pub max_iter: Option<usize>,
    pub scheme: Option<Scheme>,
    pub shift_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub lower: PathBuf,
    pub upper: PathBuf,
}

/// A configuration whose parts have all been checked.
pub struct Problem {
    pub domain: Interval,
    pub m: KirchhoffM,
    pub model: ModelSpec,
    pub f: Nonlinearity,
    pub solver: SolveConfig,
    pub output: OutputSpec,
    pub pair: Option<PairSpec>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::invalid("io", format!("cannot read {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        CliError::invalid("config", format!("{at}: {}", e.inner()))
    })
}

fn at<T>(section: &str, r: kirchhoff_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::invalid(e.kind(), format!("{section}: {e}")))
}

pub fn build_m(spec: MSpec) -> kirchhoff_core::Result<KirchhoffM> {
    let scan = |s: Option<f64>| s.unwrap_or(kirchhoff_core::kirchhoff::DEFAULT_SCAN_MAX);
    match spec {
        MSpec::PowerShift { a, b, c, p, scan_max } => {
            KirchhoffM::new(MFamily::PowerShift { a, b, c, p }, scan(scan_max))
        }
        MSpec::Constant { m, scan_max } => KirchhoffM::new(MFamily::Constant { m }, scan(scan_max)),
    }
}

pub fn build_f(spec: ModelSpec) -> kirchhoff_core::Result<Nonlinearity> {
    match spec {
        ModelSpec::Sublinear { lambda, q } => Nonlinearity::sublinear(lambda, q),
        ModelSpec::ConcaveConvex { lambda, q, p } => Nonlinearity::concave_convex(lambda, q, p),
        ModelSpec::Logistic { lambda, p } => Nonlinearity::logistic(lambda, p),
    }
}

impl RunConfig {
    pub fn validate(self) -> Result<Problem, CliError> {
        let domain = at("domain", Interval::new(self.domain.a, self.domain.b, self.domain.n))?;
        let m = at("M", build_m(self.m))?;
        let f = at("model", build_f(self.model))?;
        let defaults = SolveConfig::default();
        let solver = SolveConfig {
            tol_step: self.solver.tol_step.unwrap_or(defaults.tol_step),
            tol_residual: self.solver.tol_residual.unwrap_or(defaults.tol_residual),
            max_iter: self.solver.max_iter.unwrap_or(defaults.max_iter),
            scheme: self.solver.scheme.unwrap_or(defaults.scheme),
            shift_c: self.solver.shift_c,
        };
        at("solver", solver.validate())?;
        Ok(Problem { domain, m, model: self.model, f, solver, output: self.output, pair: self.pair })
    }
}

impl Problem {
    pub fn construct(&self) -> kirchhoff_core::Result<PairConstruction> {
        let (m, d) = (&self.m, self.domain);
        match self.model {
            ModelSpec::Sublinear { lambda, q } => build_pair_sublinear(lambda, q, m, d),
            ModelSpec::ConcaveConvex { lambda, q, p } => build_pair_concave_convex(lambda, q, p, m, d),
            ModelSpec::Logistic { lambda, p } => build_pair_logistic(lambda, p, m, d),
        }
    }

    /// Reads an explicit pair from CSV. Both files must match the configured grid.
    pub fn explicit_pair(&self) -> Result<Option<OrderInterval>, CliError> {
        let Some(spec) = &self.pair else { return Ok(None) };
        let read = |which: &str, p: &Path| -> Result<GridFunction, CliError> {
            let file = fs::File::open(p)
                .map_err(|e| CliError::invalid("io", format!("pair.{which}: cannot open {}: {e}", p.display())))?;
            let g = at(&format!("pair.{which}"), GridFunction::read_csv(file))?;
            if *g.domain() != self.domain {
                return Err(CliError::invalid(
                    "domain_mismatch",
                    format!("pair.{which}: grid does not match the configured domain"),
                ));
            }
            Ok(g)
        };
        let lower = read("lower", &spec.lower)?;
        let upper = read("upper", &spec.upper)?;
        Ok(Some(at("pair", OrderInterval::new(lower, upper))?))
    }
}
