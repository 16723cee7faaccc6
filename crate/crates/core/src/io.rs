//! Wage data ingestion, artificial top-coding, run configuration and report files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bootstrap::BootstrapPlan;
use crate::error::{Error, Result};
use crate::lrr::region::{ConfidenceReport, Method};
use crate::lrr::sensitivity::SensitivityReport;
use crate::models::interval::IntervalObservation;
use crate::param::{Axis, ParameterGrid};
use crate::sim::{CoverageGrid, REGIONS};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WageRecord {
    pub wage: f64,
    pub gender: u8,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads a `wage,gender` CSV file. Wages must be positive, gender 0 or 1.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<WageRecord>> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.is_empty() {
        return Err(Error::NoData { path: path.to_path_buf() });
    }
    if header.len() != 2 || &header[0] != "wage" || &header[1] != "gender" {
        return Err(parse_error(path, 1, format!("expected header `wage,gender`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| match e.position() {
            Some(pos) => parse_error(path, pos.line(), e.to_string()),
            None => csv_err(e),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let wage: f64 = row[0].parse().map_err(|_| parse_error(path, line, format!("wage `{}` is not a number", &row[0])))?;
        if !(wage > 0.0 && wage.is_finite()) {
            return Err(parse_error(path, line, format!("wage must be positive, got {wage}")));
        }
        let gender = match &row[1] {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_error(path, line, format!("gender must be 0 or 1, got `{other}`"))),
        };
        out.push(WageRecord { wage, gender });
    }
    if out.is_empty() {
        return Err(Error::NoData { path: path.to_path_buf() });
    }
    Ok(out)
}

/// Log-wage dataset with an artificial top-coding threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopCoded {
    /// `Z₁`, on the log scale.
    pub z1: f64,
    /// `Z₂`, on the log scale.
    pub z2: f64,
    pub observations: Vec<IntervalObservation>,
}

impl TopCoded {
    pub fn censored(&self) -> usize {
        self.observations.iter().filter(|o| o.censored).count()
    }
}

/// Censors the top `fraction` of log wages: `Z₁` is the `⌈(1−f)·n⌉`-th order
/// statistic of the log wages and every row strictly above it becomes the
/// bracket `[Z₁, ln z2_raw]`.
pub fn apply_topcoding(records: &[WageRecord], fraction: f64, z2_raw: f64) -> Result<TopCoded> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("top-coding fraction must lie in (0, 1), got {fraction}")));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let logs: Vec<f64> = records.iter().map(|r| r.wage.ln()).collect();
    let mut sorted = logs.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = (((1.0 - fraction) * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let z1 = sorted[k - 1];
    if !(z2_raw > 0.0) || !(z2_raw.ln() > z1) {
        return Err(Error::InvalidParameter(format!(
            "upper bound {z2_raw} must exceed the top-coding threshold {}",
            z1.exp()
        )));
    }
    let z2 = z2_raw.ln();
    let observations = logs
        .iter()
        .zip(records)
        .map(|(&y, r)| IntervalObservation::from_latent(y, r.gender, z1, z2))
        .collect();
    Ok(TopCoded { z1, z2, observations })
}

/// Parses `lo:hi:steps` into an axis.
pub fn parse_axis(text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let bad = || Error::InvalidGrid(format!("axis `{text}` is not of the form lo:hi:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Axis::new(lo, hi, steps)
}

/// Parses `lo:hi:steps,lo:hi:steps` into a (β, γ) plane.
pub fn parse_grid(text: &str) -> Result<ParameterGrid> {
    let axes: Vec<&str> = text.split(',').collect();
    if axes.len() != 2 {
        return Err(Error::InvalidGrid(format!("grid `{text}` needs exactly two axes (beta, gamma)")));
    }
    ParameterGrid::plane(parse_axis(axes[0])?, parse_axis(axes[1])?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub beta: Vec<Axis>,
    pub gamma: Vec<Axis>,
}

impl GridSpec {
    pub fn build(&self) -> Result<ParameterGrid> {
        ParameterGrid::new(self.beta.clone(), self.gamma.clone())
    }
}

impl From<&ParameterGrid> for GridSpec {
    fn from(grid: &ParameterGrid) -> Self {
        Self { beta: grid.beta.axes.clone(), gamma: grid.gamma.axes.clone() }
    }
}

/// Counterfactual covariate atom for the top-coded model: regressor `X̃` and weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorAtom {
    pub x: f64,
    pub weight: f64,
}

/// Everything needed to rerun a job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "format_version")]
    pub format_version: u32,
    /// `mc`, `infer` or `lrr-check`.
    pub command: String,
    #[serde(default = "interval")]
    pub model: String,
    #[serde(default)]
    pub spec: Option<u8>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub plan: BootstrapPlan,
    #[serde(default = "conservative")]
    pub method: Method,
    #[serde(default)]
    pub atoms: Option<Vec<RegressorAtom>>,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub topcode_fraction: Option<f64>,
    #[serde(default)]
    pub z2: Option<f64>,
    #[serde(default)]
    pub shock_scale: Option<f64>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub eta_bins: Option<usize>,
    #[serde(default)]
    pub perturbations: Option<usize>,
    #[serde(default)]
    pub scale_k: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn interval() -> String {
    "interval".into()
}

fn conservative() -> Method {
    Method::Conservative
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command: command.into(),
            model: interval(),
            spec: None,
            n: None,
            replications: None,
            grid: None,
            plan: BootstrapPlan::default(),
            method: Method::Conservative,
            atoms: None,
            data: None,
            topcode_fraction: None,
            z2: None,
            shock_scale: None,
            theta: None,
            eta_bins: None,
            perturbations: None,
            scale_k: None,
            output: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks values and that referenced input files exist.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Unsupported(format!("config format_version {} (expected {FORMAT_VERSION})", self.format_version)));
        }
        if !matches!(self.command.as_str(), "mc" | "infer" | "lrr-check") {
            return Err(Error::InvalidParameter(format!("unknown command `{}`", self.command)));
        }
        if !matches!(self.model.as_str(), "interval" | "entry") {
            return Err(Error::InvalidParameter(format!("unknown model `{}`", self.model)));
        }
        self.plan.validate()?;
        if let Some(grid) = &self.grid {
            grid.build()?;
        }
        if let Some(f) = self.topcode_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidParameter(format!("top-coding fraction must lie in (0, 1), got {f}")));
            }
        }
        if let Some(s) = self.shock_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("shock scale must be positive, got {s}")));
            }
        }
        if let Some(atoms) = &self.atoms {
            if atoms.is_empty() || atoms.iter().any(|a| !(a.weight >= 0.0) || !a.x.is_finite()) || atoms.iter().all(|a| a.weight == 0.0) {
                return Err(Error::InvalidParameter("counterfactual atoms need finite values and non-negative weights with positive total".into()));
            }
        }
        if let Some(path) = &self.data {
            if !path.is_file() {
                return Err(Error::Io {
                    path: path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "data file not found"),
                });
            }
        }
        Ok(())
    }
}

/// Result handed to [`emit_report`].
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Confidence(&'a ConfidenceReport),
    Coverage(&'a CoverageGrid),
    Sensitivity(&'a SensitivityReport),
}

/// Run metadata recorded next to the result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub config: Option<RunConfig>,
    pub seeds: Vec<u64>,
    pub timings_ms: Vec<(String, f64)>,
}

/// Writes a number so that parsing it back yields the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn axis_names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (0..dim).map(|i| format!("{prefix}_{i}")).collect()
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn grid_csv(grid: &ParameterGrid, extra: &[String], mut row: impl FnMut(usize) -> Vec<String>) -> String {
    let mut header = axis_names("beta", grid.beta.dim());
    header.extend(axis_names("gamma", grid.gamma.dim()));
    header.extend(extra.iter().cloned());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..grid.len() {
        let p = grid.point(i);
        let mut fields: Vec<String> = p.beta.iter().chain(&p.gamma).map(|&v| format_number(v)).collect();
        fields.extend(row(i));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Writes the grid CSV (when the report has one) and `summary.json` into
/// `outdir`, creating it if needed. Returns the paths written.
pub fn emit_report(report: Report<'_>, info: &RunInfo, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let outdir = outdir.as_ref();
    fs::create_dir_all(outdir).map_err(|source| Error::Io { path: outdir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let (kind, body) = match report {
        Report::Confidence(rep) => {
            let cols: Vec<String> = [
                "statistic", "c_conservative", "c_bonferroni", "kappa_hat", "q_lrr", "identified", "gamma_minus", "lrr_upper", "lrr",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let csv = grid_csv(&rep.grid, &cols, |i| {
                let p = &rep.points[i];
                vec![
                    format_number(p.statistic),
                    format_number(p.critical.c_conservative),
                    format_number(p.critical.c_bonferroni),
                    format_number(p.critical.kappa_hat),
                    format_number(p.q_lrr),
                    flag(rep.identified.get(i)),
                    flag(rep.gamma_minus.get(i)),
                    flag(rep.lrr_upper.get(i)),
                    flag(rep.lrr.get(i)),
                ]
            });
            let path = outdir.join("confidence.csv");
            write_file(&path, csv.as_bytes())?;
            written.push(path);
            let body = json!({
                "method": rep.method,
                "plan": rep.plan,
                "grid": GridSpec::from(&rep.grid),
                "grid_points": rep.grid.len(),
                "identified_points": rep.identified.count(),
                "lrr_points": rep.lrr.count(),
                "empty": rep.empty,
                "identified_empty": rep.identified.none(),
            });
            ("confidence", body)
        }
        Report::Coverage(cov) => {
            let mut cols: Vec<String> = REGIONS.iter().map(|r| r.0.to_string()).collect();
            cols.push("population_identified".into());
            let csv = grid_csv(&cov.grid, &cols, |i| {
                let mut row: Vec<String> = (0..4).map(|k| format_number(cov.frequency(k, i))).collect();
                row.push(flag(cov.population_identified.get(i)));
                row
            });
            let path = outdir.join("coverage.csv");
            write_file(&path, csv.as_bytes())?;
            written.push(path);
            let cardinality: serde_json::Map<String, Value> =
                REGIONS.iter().zip(cov.mean_cardinality).map(|(r, c)| (r.0.to_string(), json!(c))).collect();
            let body = json!({
                "spec": cov.spec,
                "grid": GridSpec::from(&cov.grid),
                "replications": cov.replications,
                "mean_cardinality": cardinality,
                "containment_violations": cov.containment_violations,
                "strict_containment": cov.strict_containment,
                "comparison_checks": cov.comparison_checks,
                "comparison_hits": cov.comparison_hits,
                "empty": cov.counts.iter().all(|c| c.iter().all(|&v| v == 0)),
            });
            ("coverage", body)
        }
        Report::Sensitivity(rep) => ("sensitivity", serde_json::to_value(rep).expect("report serializes")),
    };
    let timings: serde_json::Map<String, Value> = info.timings_ms.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let summary = json!({
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": info.config,
        "seeds": info.seeds,
        "timings_ms": timings,
        "result": body,
    });
    let path = outdir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&path, text.as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Reads a numeric report CSV back: header names and one row of values per line.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let values = row
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_error(path, line, format!("`{f}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    Ok((header, rows))
}
