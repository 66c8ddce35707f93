//! Text serialization of run artifacts: solution profiles, evolution traces,
//! state snapshots, stability and scan reports, and exponent tables.
//!
//! Every format is line-oriented UTF-8: `# key: value` header lines, then
//! whitespace-separated data rows. Floats are written with the shortest
//! representation that round-trips exactly, so re-serializing a parsed
//! document reproduces it byte for byte. Parsers ignore unknown header keys
//! (a `# timestamp: ...` line added by front ends is skipped), which keeps
//! outputs comparable across runs modulo that one line.

use std::collections::HashMap;
use std::str::FromStr;

use num_complex::Complex64;

use crate::analysis::{GnExponents, HylomorphyReport, StabilityReport};
use crate::error::{CoreError, Result};
use crate::evolution::EvolutionTrace;
use crate::field::{Field, FieldKind};
use crate::functionals::ChargeConvention;
use crate::grid::make_grid;
use crate::soliton::{localization_ratio, SolitonSolution, SolveMethod, LOCALIZATION_THRESHOLD};

/// A solution profile together with the model it solves.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    /// Fractional order of the dispersion.
    pub s: f64,
    /// Catalog key of the potential.
    pub potential: String,
    pub solution: SolitonSolution,
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

struct Doc {
    headers: HashMap<String, String>,
    warnings: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn split_doc(text: &str) -> Doc {
    let mut headers = HashMap::new();
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once(':') {
                let key = key.trim();
                let value = value.trim();
                if key == "warning" {
                    warnings.push(value.to_string());
                } else {
                    headers.entry(key.to_string()).or_insert_with(|| value.to_string());
                }
            }
        } else if !line.trim().is_empty() {
            rows.push(line.split_whitespace().map(str::to_string).collect());
        }
    }
    Doc {
        headers,
        warnings,
        rows,
    }
}

fn header<'a>(doc: &'a Doc, key: &str) -> Result<&'a str> {
    doc.headers
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| CoreError::Invalid(format!("missing header '{key}'")))
}

fn header_f64(doc: &Doc, key: &str) -> Result<f64> {
    parse_f64(header(doc, key)?)
}

fn parse_f64(cell: &str) -> Result<f64> {
    f64::from_str(cell)
        .map_err(|_| CoreError::Invalid(format!("not a number: '{cell}'")))
}

fn row_f64(row: &[String], width: usize) -> Result<Vec<f64>> {
    if row.len() != width {
        return Err(CoreError::Invalid(format!(
            "expected {width} columns, found {}",
            row.len()
        )));
    }
    row.iter().map(|c| parse_f64(c)).collect()
}

fn check_kind(doc: &Doc, expected: &str) -> Result<()> {
    let found = header(doc, "hylo")?;
    if found != expected {
        return Err(CoreError::Invalid(format!(
            "expected a '{expected}' document, found '{found}'"
        )));
    }
    Ok(())
}

fn grid_from_headers(doc: &Doc) -> Result<crate::grid::Grid> {
    let length = header_f64(doc, "grid_length")?;
    let points = header(doc, "grid_points")?
        .parse::<usize>()
        .map_err(|_| CoreError::Invalid("grid_points is not an integer".into()))?;
    make_grid(length, points)
}

impl std::fmt::Display for ChargeConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChargeConvention::Fkdv => write!(f, "fkdv"),
            ChargeConvention::Fns => write!(f, "fns"),
        }
    }
}

impl FromStr for ChargeConvention {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fkdv" => Ok(ChargeConvention::Fkdv),
            "fns" => Ok(ChargeConvention::Fns),
            other => Err(CoreError::Invalid(format!(
                "unknown charge convention '{other}' (expected fkdv or fns)"
            ))),
        }
    }
}

impl FromStr for SolveMethod {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient_flow" => Ok(SolveMethod::GradientFlow),
            "petviashvili" => Ok(SolveMethod::Petviashvili),
            "exact_bo" => Ok(SolveMethod::ExactProfile),
            other => Err(CoreError::Invalid(format!(
                "unknown solve method '{other}'"
            ))),
        }
    }
}

/// Serializes a solution profile. Real profiles use two columns (x, u);
/// complex ones three (x, re, im).
pub fn solution_to_text(record: &SolutionRecord) -> String {
    let sol = &record.solution;
    let grid = sol.profile.grid();
    let mut out = String::new();
    out.push_str("# hylo: solution\n");
    out.push_str(&format!("# s: {}\n", fmt_f(record.s)));
    out.push_str(&format!("# potential: {}\n", record.potential));
    out.push_str(&format!("# convention: {}\n", sol.convention));
    out.push_str(&format!("# multiplier: {}\n", fmt_f(sol.multiplier)));
    out.push_str(&format!("# charge: {}\n", fmt_f(sol.charge)));
    out.push_str(&format!("# energy: {}\n", fmt_f(sol.energy)));
    out.push_str(&format!("# residual: {}\n", fmt_f(sol.residual_norm)));
    out.push_str(&format!("# method: {}\n", sol.method));
    out.push_str(&format!("# iterations: {}\n", sol.iterations));
    out.push_str(&format!("# grid_length: {}\n", fmt_f(grid.length())));
    out.push_str(&format!("# grid_points: {}\n", grid.points()));
    for w in &sol.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    if sol.profile.is_real() {
        out.push_str("# columns: x u\n");
        for (x, v) in grid.nodes().iter().zip(sol.profile.values()) {
            out.push_str(&format!("{}\t{}\n", fmt_f(*x), fmt_f(v.re)));
        }
    } else {
        out.push_str("# columns: x re im\n");
        for (x, v) in grid.nodes().iter().zip(sol.profile.values()) {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                fmt_f(*x),
                fmt_f(v.re),
                fmt_f(v.im)
            ));
        }
    }
    out
}

/// Parses a solution document; the stored diagnostics are taken from the
/// header rather than recomputed, so parse/serialize round-trips exactly.
pub fn solution_from_text(text: &str) -> Result<SolutionRecord> {
    let doc = split_doc(text);
    check_kind(&doc, "solution")?;
    let grid = grid_from_headers(&doc)?;
    if doc.rows.len() != grid.points() {
        return Err(CoreError::Invalid(format!(
            "profile has {} rows but the grid has {} points",
            doc.rows.len(),
            grid.points()
        )));
    }
    let columns = header(&doc, "columns")?;
    let profile = match columns {
        "x u" => {
            let mut vals = Vec::with_capacity(grid.points());
            for row in &doc.rows {
                vals.push(row_f64(row, 2)?[1]);
            }
            Field::real(&grid, vals)?
        }
        "x re im" => {
            let mut vals = Vec::with_capacity(grid.points());
            for row in &doc.rows {
                let r = row_f64(row, 3)?;
                vals.push(Complex64::new(r[1], r[2]));
            }
            Field::complex(&grid, vals)?
        }
        other => {
            return Err(CoreError::Invalid(format!(
                "unknown solution column layout '{other}'"
            )))
        }
    };
    let solution = SolitonSolution {
        multiplier: header_f64(&doc, "multiplier")?,
        convention: header(&doc, "convention")?.parse()?,
        charge: header_f64(&doc, "charge")?,
        energy: header_f64(&doc, "energy")?,
        residual_norm: header_f64(&doc, "residual")?,
        iterations: header(&doc, "iterations")?
            .parse::<usize>()
            .map_err(|_| CoreError::Invalid("iterations is not an integer".into()))?,
        method: header(&doc, "method")?.parse()?,
        localized: localization_ratio(&profile) >= LOCALIZATION_THRESHOLD,
        warnings: doc.warnings.clone(),
        profile,
    };
    Ok(SolutionRecord {
        s: header_f64(&doc, "s")?,
        potential: header(&doc, "potential")?.to_string(),
        solution,
    })
}

/// Serializes the sampled series of a run: time, energy, charge, and tail
/// mass per row. Warnings travel as `# warning:` lines.
pub fn trace_to_text(trace: &EvolutionTrace) -> String {
    let mut out = String::new();
    out.push_str("# hylo: trace\n");
    for w in &trace.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    out.push_str("# columns: t energy charge tail_mass\n");
    for i in 0..trace.times.len() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            fmt_f(trace.times[i]),
            fmt_f(trace.energy[i]),
            fmt_f(trace.charge[i]),
            fmt_f(trace.tail[i])
        ));
    }
    out
}

/// The series content of a trace document (snapshots are stored separately).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub charge: Vec<f64>,
    pub tail: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn trace_from_text(text: &str) -> Result<TraceRecord> {
    let doc = split_doc(text);
    check_kind(&doc, "trace")?;
    let mut record = TraceRecord {
        times: Vec::new(),
        energy: Vec::new(),
        charge: Vec::new(),
        tail: Vec::new(),
        warnings: doc.warnings.clone(),
    };
    for row in &doc.rows {
        let r = row_f64(row, 4)?;
        record.times.push(r[0]);
        record.energy.push(r[1]);
        record.charge.push(r[2]);
        record.tail.push(r[3]);
    }
    Ok(record)
}

/// Serializes one state at one time: rows of x, Re, Im (the imaginary column
/// is zero for real states).
pub fn snapshot_to_text(time: f64, state: &Field) -> String {
    let grid = state.grid();
    let mut out = String::new();
    out.push_str("# hylo: snapshot\n");
    out.push_str(&format!("# time: {}\n", fmt_f(time)));
    out.push_str(&format!(
        "# kind: {}\n",
        if state.is_real() { "real" } else { "complex" }
    ));
    out.push_str(&format!("# grid_length: {}\n", fmt_f(grid.length())));
    out.push_str(&format!("# grid_points: {}\n", grid.points()));
    out.push_str("# columns: x re im\n");
    for (x, v) in grid.nodes().iter().zip(state.values()) {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            fmt_f(*x),
            fmt_f(v.re),
            fmt_f(v.im)
        ));
    }
    out
}

pub fn snapshot_from_text(text: &str) -> Result<(f64, Field)> {
    let doc = split_doc(text);
    check_kind(&doc, "snapshot")?;
    let grid = grid_from_headers(&doc)?;
    if doc.rows.len() != grid.points() {
        return Err(CoreError::Invalid(format!(
            "snapshot has {} rows but the grid has {} points",
            doc.rows.len(),
            grid.points()
        )));
    }
    let time = header_f64(&doc, "time")?;
    let kind = match header(&doc, "kind")? {
        "real" => FieldKind::Real,
        "complex" => FieldKind::Complex,
        other => {
            return Err(CoreError::Invalid(format!(
                "unknown snapshot kind '{other}'"
            )))
        }
    };
    let mut vals = Vec::with_capacity(grid.points());
    for row in &doc.rows {
        let r = row_f64(row, 3)?;
        vals.push(Complex64::new(r[1], r[2]));
    }
    let state = match kind {
        FieldKind::Real => {
            if vals.iter().any(|c| c.im != 0.0) {
                return Err(CoreError::Invalid(
                    "real snapshot carries nonzero imaginary entries".into(),
                ));
            }
            Field::real(&grid, vals.iter().map(|c| c.re).collect())?
        }
        FieldKind::Complex => Field::complex(&grid, vals)?,
    };
    Ok((time, state))
}

/// Serializes a stability run: headers for the scalar outcome, rows of
/// time, translation-modded distance, and unwrapped center shift.
pub fn stability_to_text(report: &StabilityReport) -> String {
    let mut out = String::new();
    out.push_str("# hylo: stability\n");
    out.push_str(&format!("# epsilon: {}\n", fmt_f(report.epsilon)));
    out.push_str(&format!("# max_distance: {}\n", fmt_f(report.max_distance)));
    out.push_str(&format!("# fitted_speed: {}\n", fmt_f(report.fitted_speed)));
    out.push_str(&format!(
        "# reference_speed: {}\n",
        fmt_f(report.reference_speed)
    ));
    out.push_str(&format!("# center_drift: {}\n", fmt_f(report.center_drift)));
    out.push_str("# columns: t distance shift\n");
    for i in 0..report.times.len() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            fmt_f(report.times[i]),
            fmt_f(report.distances[i]),
            fmt_f(report.shifts[i])
        ));
    }
    out
}

pub fn stability_from_text(text: &str) -> Result<StabilityReport> {
    let doc = split_doc(text);
    check_kind(&doc, "stability")?;
    let mut report = StabilityReport {
        epsilon: header_f64(&doc, "epsilon")?,
        times: Vec::new(),
        distances: Vec::new(),
        max_distance: header_f64(&doc, "max_distance")?,
        shifts: Vec::new(),
        fitted_speed: header_f64(&doc, "fitted_speed")?,
        reference_speed: header_f64(&doc, "reference_speed")?,
        center_drift: header_f64(&doc, "center_drift")?,
    };
    for row in &doc.rows {
        let r = row_f64(row, 3)?;
        report.times.push(r[0]);
        report.distances.push(r[1]);
        report.shifts.push(r[2]);
    }
    Ok(report)
}

/// Serializes an energy-per-charge scan: headers for the fit and verdict,
/// rows of plateau radius, ratio, and squared seminorm.
pub fn hylomorphy_to_text(report: &HylomorphyReport) -> String {
    let mut out = String::new();
    out.push_str("# hylo: hylomorphy\n");
    out.push_str(&format!("# s0: {}\n", fmt_f(report.s0)));
    out.push_str(&format!("# e0: {}\n", fmt_f(report.e0)));
    out.push_str(&format!(
        "# limit_estimate: {}\n",
        fmt_f(report.limit_estimate)
    ));
    out.push_str(&format!(
        "# fitted_intercept: {}\n",
        fmt_f(report.fitted_intercept)
    ));
    out.push_str(&format!("# fitted_slope: {}\n", fmt_f(report.fitted_slope)));
    out.push_str(&format!("# fit_residual: {}\n", fmt_f(report.fit_residual)));
    out.push_str(&format!("# verdict: {}\n", report.verdict));
    out.push_str("# columns: R ratio seminorm_sq\n");
    for i in 0..report.r_values.len() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            fmt_f(report.r_values[i]),
            fmt_f(report.ratios[i]),
            fmt_f(report.seminorms_sq[i])
        ));
    }
    out
}

pub fn hylomorphy_from_text(text: &str) -> Result<HylomorphyReport> {
    let doc = split_doc(text);
    check_kind(&doc, "hylomorphy")?;
    let verdict = match header(&doc, "verdict")? {
        "true" => true,
        "false" => false,
        other => {
            return Err(CoreError::Invalid(format!(
                "verdict must be true or false, found '{other}'"
            )))
        }
    };
    let mut report = HylomorphyReport {
        s0: header_f64(&doc, "s0")?,
        e0: header_f64(&doc, "e0")?,
        r_values: Vec::new(),
        ratios: Vec::new(),
        seminorms_sq: Vec::new(),
        limit_estimate: header_f64(&doc, "limit_estimate")?,
        fitted_intercept: header_f64(&doc, "fitted_intercept")?,
        fitted_slope: header_f64(&doc, "fitted_slope")?,
        fit_residual: header_f64(&doc, "fit_residual")?,
        verdict,
    };
    for row in &doc.rows {
        let r = row_f64(row, 3)?;
        report.r_values.push(r[0]);
        report.ratios.push(r[1]);
        report.seminorms_sq.push(r[2]);
    }
    Ok(report)
}

/// Serializes an exponent table: rows of p, s, theta, beta, admissible
/// (0/1).
pub fn gn_table_to_text(rows: &[(f64, f64, GnExponents)]) -> String {
    let mut out = String::new();
    out.push_str("# hylo: gn-table\n");
    out.push_str("# columns: p s theta beta admissible\n");
    for (p, s, e) in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            fmt_f(*p),
            fmt_f(*s),
            fmt_f(e.theta),
            fmt_f(e.beta),
            u8::from(e.admissible)
        ));
    }
    out
}

pub fn gn_table_from_text(text: &str) -> Result<Vec<(f64, f64, GnExponents)>> {
    let doc = split_doc(text);
    check_kind(&doc, "gn-table")?;
    let mut rows = Vec::new();
    for row in &doc.rows {
        let r = row_f64(row, 5)?;
        let admissible = match r[4] {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => {
                return Err(CoreError::Invalid(format!(
                    "admissible flag must be 0 or 1, found {v}"
                )))
            }
        };
        rows.push((
            r[0],
            r[1],
            GnExponents {
                theta: r[2],
                beta: r[3],
                admissible,
            },
        ));
    }
    Ok(rows)
}
