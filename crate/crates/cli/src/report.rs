//! Exit codes, error diagnostics and deterministic JSON output.

use std::io::{self, Write};

use kirchhoff_core::{Error, GridFunction, PairConstruction, PairReport};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn invalid(kind: &str, message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, kind: kind.to_string(), message: message.into() }
    }

    /// Writes the one-line JSON diagnostic to standard error.
    pub fn emit(&self) {
        let line = to_json(&serde_json::json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
        }));
        let _ = writeln!(io::stderr(), "{line}");
    }
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::NoEpsilon { .. } | Error::OutOfRange { .. } => EXIT_NO_CONVERGENCE,
        Error::NotVerified { .. }
        | Error::OrderViolated { .. }
        | Error::BoundaryViolated { .. }
        | Error::NoWitness => EXIT_FAILED,
        _ => EXIT_INVALID,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: exit_code_for(&e), kind: e.kind().to_string(), message: e.to_string() }
    }
}

/// Compact JSON with every float printed to 17 significant digits.
struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser).expect("report types serialize");
    String::from_utf8(buf).expect("serde_json writes utf-8")
}

/// Prints to standard output; a closed pipe is not an error.
pub fn print_json<T: Serialize + ?Sized>(value: &T) {
    let _ = writeln!(io::stdout().lock(), "{}", to_json(value));
}

#[derive(Debug, Serialize)]
pub struct WorstNodes {
    pub super_node: usize,
    pub super_x: f64,
    pub sub_node: usize,
    pub sub_x: f64,
}

#[derive(Debug, Serialize)]
pub struct PairSummary {
    pub ok: bool,
    pub mu_min: f64,
    pub mu_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub worst_super_margin: f64,
    pub worst_sub_margin: f64,
    pub worst_nodes: WorstNodes,
}

impl PairSummary {
    pub fn new(r: &PairReport) -> Self {
        let d = *r.super_margin.domain();
        Self {
            ok: r.ok,
            mu_min: r.m_range.mu_min,
            mu_max: r.m_range.mu_max,
            s_min: r.m_range.s_min,
            s_max: r.m_range.s_max,
            worst_super_margin: r.worst_super_margin,
            worst_sub_margin: r.worst_sub_margin,
            worst_nodes: WorstNodes {
                super_node: r.worst_super_node,
                super_x: d.x(r.worst_super_node),
                sub_node: r.worst_sub_node,
                sub_x: d.x(r.worst_sub_node),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ConstructionSummary {
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub mu_max_used: f64,
    pub feasible: bool,
    pub threshold_info: kirchhoff_core::ThresholdInfo,
}

impl ConstructionSummary {
    pub fn new(c: &PairConstruction) -> Self {
        Self {
            epsilon: c.epsilon,
            k: c.k,
            mu_max_used: c.mu_max_used,
            feasible: c.feasible,
            threshold_info: c.threshold_info,
        }
    }
}

#[derive(Serialize)]
struct GridJson<'a> {
    x: Vec<f64>,
    value: &'a [f64],
}

/// Writes a grid function as CSV or as `{"x": [...], "value": [...]}`.
pub fn write_grid(g: &GridFunction, format: crate::config::Format, out: impl Write) -> Result<(), CliError> {
    match format {
        crate::config::Format::Csv => g.write_csv(out).map_err(CliError::from),
        crate::config::Format::Json => {
            let body = GridJson { x: g.domain().nodes().collect(), value: g.values() };
            let mut out = out;
            writeln!(out, "{}", to_json(&body)).map_err(|e| CliError::invalid("io", e.to_string()))
        }
    }
}

pub fn write_grid_to(g: &GridFunction, format: crate::config::Format, path: &std::path::Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::invalid("io", format!("cannot create {}: {e}", path.display())))?;
    write_grid(g, format, io::BufWriter::new(file))
}
