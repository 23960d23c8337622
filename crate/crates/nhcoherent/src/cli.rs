//! Batch front-end: JSON scenario configs, deterministic trajectory files,
//! and the validation suite behind the `nhc` binary.
//!
//! Complex arrays are split into `_re`/`_im` real arrays in both configs and
//! JSONL records. CSV files carry one header row, `Display`-formatted floats
//! (shortest round-trip decimals) and, after an early stop, a final comment
//! line `# breakdown t=<value> reason=<enum>`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_complex, propagate_real, project_trajectory, BreakdownReason, BreakdownReport,
    ComplexSample, ComplexTrajectory, IntegratorOptions, NormVariant, RealSample, RealTrajectory,
};
use crate::error::{Error, Result};
use crate::geometry::{
    frame_from_shape, metric_from_shape, reduce_state, structure_from_shape, Metric, ShapeMatrix,
};
use crate::oracles::{
    ablate_alpha_trace, adjudicate_norm_variant, run_example, schrodinger_residual,
    wigner_transform_numeric, ExampleSpec,
};
use crate::phasespace::{omega, PhasePoint, QuadraticHamiltonian, RealPhasePoint};
use crate::sampling;
use crate::states::{evaluate_coherent_state, wigner_of_state, GridSpec};
use crate::{C64, CMat, CVec, RMat, RVec};

/// Asymmetry in a configured Hamiltonian above this is a config error.
const CONFIG_SYMMETRY_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// scenario schema
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Complex,
    Real,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Jsonl,
}

impl FileFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "jsonl" => Ok(FileFormat::Jsonl),
            other => Err(Error::Config(format!(
                "unknown output format {other:?}, expected csv or jsonl"
            ))),
        }
    }

    fn extension(self) -> &'static str {
        match self {
            FileFormat::Csv => "csv",
            FileFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub hbar: Option<f64>,
    pub hamiltonian: HamiltonianConfig,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub output: Option<OutputConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    #[serde(rename = "H_re")]
    pub h_re: Vec<f64>,
    #[serde(rename = "H_im")]
    pub h_im: Option<Vec<f64>>,
    pub c_re: Option<Vec<f64>>,
    pub c_im: Option<Vec<f64>>,
    pub time_dependence: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub route: Route,
    pub z_re: Option<Vec<f64>>,
    pub z_im: Option<Vec<f64>>,
    #[serde(rename = "Z")]
    pub z_real: Option<Vec<f64>>,
    #[serde(rename = "B_re")]
    pub b_re: Option<Vec<f64>>,
    #[serde(rename = "B_im")]
    pub b_im: Option<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub t1: f64,
    pub dt_sample: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<FileFormat>,
    pub stride: Option<usize>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid scenario: {e}")))
}

/// Default integrator tolerances, overridable by `NHC_DEFAULT_TOL` (which
/// sets `rel_tol = v`, `abs_tol = v * 1e-3`); explicit config values win.
pub fn resolve_tolerances(
    cfg: &IntegratorConfig,
    env_default: Option<&str>,
) -> Result<(f64, f64)> {
    let base = IntegratorOptions::default();
    let (mut rel, mut abs) = (base.rel_tol, base.abs_tol);
    if let Some(text) = env_default {
        let v: f64 = text.trim().parse().map_err(|_| {
            Error::Config(format!("NHC_DEFAULT_TOL is not a number: {text:?}"))
        })?;
        if !(v > 0.0) {
            return Err(Error::Config(format!(
                "NHC_DEFAULT_TOL must be positive, got {v}"
            )));
        }
        rel = v;
        abs = v * 1e-3;
    }
    if let Some(v) = cfg.rel_tol {
        rel = v;
    }
    if let Some(v) = cfg.abs_tol {
        abs = v;
    }
    if !(rel > 0.0 && abs > 0.0) {
        return Err(Error::Config(format!(
            "tolerances must be positive: rel_tol={rel}, abs_tol={abs}"
        )));
    }
    Ok((rel, abs))
}

fn parse_square(name: &str, data: &[f64], dim: usize) -> Result<RMat> {
    if data.len() != dim * dim {
        return Err(Error::Config(format!(
            "{name} must hold {dim}x{dim} = {} row-major entries, got {}",
            dim * dim,
            data.len()
        )));
    }
    Ok(RMat::from_row_slice(dim, dim, data))
}

fn parse_vector(name: &str, data: &[f64], len: usize) -> Result<RVec> {
    if data.len() != len {
        return Err(Error::Config(format!(
            "{name} must hold {len} entries, got {}",
            data.len()
        )));
    }
    Ok(RVec::from_row_slice(data))
}

/// Reject asymmetry above the config tolerance, naming every offending
/// entry pair.
fn check_symmetry(name: &str, m: &RMat) -> Result<()> {
    let mut offending = Vec::new();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > CONFIG_SYMMETRY_TOL {
                offending.push(format!(
                    "{name}[{i}][{j}]={} vs {name}[{j}][{i}]={}",
                    m[(i, j)],
                    m[(j, i)]
                ));
            }
        }
    }
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} is not symmetric: {}",
            offending.join(", ")
        )))
    }
}

/// A scenario converted to typed inputs for the propagators.
pub struct BuiltScenario {
    pub n: usize,
    pub hbar: f64,
    pub ham: QuadraticHamiltonian,
    pub route: Route,
    pub complex_init: Option<(PhasePoint, ShapeMatrix)>,
    pub real_init: Option<(RealPhasePoint, Metric)>,
    pub t0: f64,
    pub t1: f64,
    pub opts: IntegratorOptions,
    pub format: FileFormat,
    pub path: Option<PathBuf>,
    pub stride: usize,
}

pub fn build_scenario(scn: &Scenario, env_default: Option<&str>) -> Result<BuiltScenario> {
    if scn.n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let n = scn.n;
    let dim = 2 * n;
    let hbar = scn.hbar.unwrap_or(1.0);
    if !(hbar > 0.0) {
        return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
    }

    let h_re = parse_square("H_re", &scn.hamiltonian.h_re, dim)?;
    let h_im = match &scn.hamiltonian.h_im {
        Some(data) => parse_square("H_im", data, dim)?,
        None => RMat::zeros(dim, dim),
    };
    check_symmetry("H_re", &h_re)?;
    check_symmetry("H_im", &h_im)?;
    let h = CMat::from_fn(dim, dim, |i, j| C64::new(h_re[(i, j)], h_im[(i, j)]));
    let c_re = match &scn.hamiltonian.c_re {
        Some(data) => parse_vector("c_re", data, dim)?,
        None => RVec::zeros(dim),
    };
    let c_im = match &scn.hamiltonian.c_im {
        Some(data) => parse_vector("c_im", data, dim)?,
        None => RVec::zeros(dim),
    };
    let c = CVec::from_fn(dim, |i, _| C64::new(c_re[i], c_im[i]));

    let ham = match scn.hamiltonian.time_dependence.as_deref() {
        None | Some("constant") => QuadraticHamiltonian::constant(h, c)?,
        Some("ramp") => {
            QuadraticHamiltonian::from_provider(n, move |t| Ok((&h * C64::new(t, 0.0), &c * C64::new(t, 0.0))))
        }
        Some("cosine") => QuadraticHamiltonian::from_provider(n, move |t| {
            let f = C64::new(t.cos(), 0.0);
            Ok((&h * f, &c * f))
        }),
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown time_dependence preset {other:?}, expected constant, ramp or cosine"
            )));
        }
    };

    // initial data; invalid shapes or metrics are config errors here
    let init = &scn.initial;
    let complex_given = init.z_re.is_some() || init.b_re.is_some() || init.b_im.is_some();
    let complex_init = if complex_given || matches!(init.route, Route::Complex | Route::Both) {
        let z_re = parse_vector(
            "z_re",
            init.z_re
                .as_deref()
                .ok_or_else(|| Error::Config("initial z_re is required".into()))?,
            dim,
        )?;
        let z_im = match &init.z_im {
            Some(data) => parse_vector("z_im", data, dim)?,
            None => RVec::zeros(dim),
        };
        let z = PhasePoint::new(CVec::from_fn(dim, |i, _| C64::new(z_re[i], z_im[i])))?;
        let b_im = parse_square(
            "B_im",
            init.b_im
                .as_deref()
                .ok_or_else(|| Error::Config("initial B_im is required".into()))?,
            n,
        )?;
        let b_re = match &init.b_re {
            Some(data) => parse_square("B_re", data, n)?,
            None => RMat::zeros(n, n),
        };
        let b = ShapeMatrix::new(CMat::from_fn(n, n, |i, j| {
            C64::new(b_re[(i, j)], b_im[(i, j)])
        }))
        .map_err(|e| Error::Config(format!("invalid B: {e}")))?;
        Some((z, b))
    } else {
        None
    };

    let real_init = match init.route {
        Route::Complex => None,
        Route::Real | Route::Both => {
            if init.z_real.is_some() || init.g.is_some() {
                let zv = parse_vector(
                    "Z",
                    init.z_real
                        .as_deref()
                        .ok_or_else(|| Error::Config("initial Z is required".into()))?,
                    dim,
                )?;
                let gm = parse_square(
                    "G",
                    init.g
                        .as_deref()
                        .ok_or_else(|| Error::Config("initial G is required".into()))?,
                    dim,
                )?;
                let g = Metric::new(gm).map_err(|e| Error::Config(format!("invalid G: {e}")))?;
                Some((RealPhasePoint::new(zv)?, g))
            } else {
                // derive the real data from (z, B) by projection
                let (z, b) = complex_init
                    .as_ref()
                    .ok_or_else(|| Error::Config("initial Z/G or z/B is required".into()))?;
                let red = reduce_state(z, b).map_err(|e| Error::Config(e.to_string()))?;
                let g = metric_from_shape(b).map_err(|e| Error::Config(e.to_string()))?;
                Some((red.real_centre, g))
            }
        }
    };
    let complex_init = match init.route {
        Route::Real => None,
        _ => complex_init,
    };

    if scn.time.dt_sample <= 0.0 {
        return Err(Error::Config(format!(
            "dt_sample must be positive, got {}",
            scn.time.dt_sample
        )));
    }
    if !(scn.time.t1 > scn.time.t0) {
        return Err(Error::Config(format!(
            "time span must satisfy t1 > t0, got [{}, {}]",
            scn.time.t0, scn.time.t1
        )));
    }
    let (rel_tol, abs_tol) = resolve_tolerances(&scn.integrator, env_default)?;
    let opts = IntegratorOptions {
        rel_tol,
        abs_tol,
        dt_sample: scn.time.dt_sample,
        hbar,
        ..Default::default()
    };

    let (path, format, stride) = match &scn.output {
        Some(out) => {
            let stride = out.stride.unwrap_or(1);
            if stride == 0 {
                return Err(Error::Config("output stride must be at least 1".into()));
            }
            (
                out.path.as_ref().map(PathBuf::from),
                out.format.unwrap_or(FileFormat::Csv),
                stride,
            )
        }
        None => (None, FileFormat::Csv, 1),
    };

    Ok(BuiltScenario {
        n,
        hbar,
        ham,
        route: init.route,
        complex_init,
        real_init,
        t0: scn.time.t0,
        t1: scn.time.t1,
        opts,
        format,
        path,
        stride,
    })
}

// ---------------------------------------------------------------------------
// trajectory files
// ---------------------------------------------------------------------------

fn footer_line(report: &BreakdownReport) -> String {
    format!("# breakdown t={} reason={}", report.t_breakdown, report.reason)
}

fn parse_reason(s: &str) -> Result<BreakdownReason> {
    match s {
        "positivity-loss" => Ok(BreakdownReason::PositivityLoss),
        "step-failure" => Ok(BreakdownReason::StepFailure),
        "provider-failure" => Ok(BreakdownReason::ProviderFailure),
        other => Err(Error::Config(format!("unknown breakdown reason {other:?}"))),
    }
}

/// Indices retained by a stride: every stride-th sample plus the final one.
fn strided(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if let Some(&last) = idx.last() {
        if last != len - 1 {
            idx.push(len - 1);
        }
    }
    idx
}

pub fn complex_csv(ct: &ComplexTrajectory, stride: usize) -> String {
    let n = ct.n();
    let mut out = String::new();
    out.push('t');
    for k in 1..=2 * n {
        write!(out, ",Re_z_{k}").unwrap();
    }
    for k in 1..=2 * n {
        write!(out, ",Im_z_{k}").unwrap();
    }
    for i in 1..=n {
        for j in 1..=n {
            write!(out, ",Re_B_{i}_{j}").unwrap();
        }
    }
    for i in 1..=n {
        for j in 1..=n {
            write!(out, ",Im_B_{i}_{j}").unwrap();
        }
    }
    out.push_str(",Re_alpha,Im_alpha\n");
    for &k in &strided(ct.samples.len(), stride) {
        let s = &ct.samples[k];
        write!(out, "{}", s.t).unwrap();
        for v in s.z.as_vector().iter() {
            write!(out, ",{}", v.re).unwrap();
        }
        for v in s.z.as_vector().iter() {
            write!(out, ",{}", v.im).unwrap();
        }
        for i in 0..n {
            for j in 0..n {
                write!(out, ",{}", s.b.matrix()[(i, j)].re).unwrap();
            }
        }
        for i in 0..n {
            for j in 0..n {
                write!(out, ",{}", s.b.matrix()[(i, j)].im).unwrap();
            }
        }
        writeln!(out, ",{},{}", s.alpha.re, s.alpha.im).unwrap();
    }
    if let Some(report) = &ct.breakdown {
        out.push_str(&footer_line(report));
        out.push('\n');
    }
    out
}

pub fn real_csv(rt: &RealTrajectory, stride: usize) -> String {
    let n = rt.n();
    let mut out = String::new();
    out.push('t');
    for k in 1..=2 * n {
        write!(out, ",Z_{k}").unwrap();
    }
    for i in 1..=2 * n {
        for j in 1..=2 * n {
            write!(out, ",G_{i}_{j}").unwrap();
        }
    }
    out.push_str(",beta\n");
    for &k in &strided(rt.samples.len(), stride) {
        let s = &rt.samples[k];
        write!(out, "{}", s.t).unwrap();
        for v in s.z.as_vector().iter() {
            write!(out, ",{v}").unwrap();
        }
        for i in 0..2 * n {
            for j in 0..2 * n {
                write!(out, ",{}", s.g.matrix()[(i, j)]).unwrap();
            }
        }
        writeln!(out, ",{}", s.beta).unwrap();
    }
    if let Some(report) = &rt.breakdown {
        out.push_str(&footer_line(report));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ComplexRow {
    t: f64,
    z_re: Vec<f64>,
    z_im: Vec<f64>,
    #[serde(rename = "B_re")]
    b_re: Vec<f64>,
    #[serde(rename = "B_im")]
    b_im: Vec<f64>,
    alpha_re: f64,
    alpha_im: f64,
}

#[derive(Serialize, Deserialize)]
struct RealRow {
    t: f64,
    #[serde(rename = "Z")]
    z: Vec<f64>,
    #[serde(rename = "G")]
    g: Vec<f64>,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct FooterRow {
    breakdown: FooterBody,
}

#[derive(Serialize, Deserialize)]
struct FooterBody {
    t: f64,
    reason: String,
}

pub fn complex_jsonl(ct: &ComplexTrajectory, stride: usize) -> String {
    let n = ct.n();
    let mut out = String::new();
    for &k in &strided(ct.samples.len(), stride) {
        let s = &ct.samples[k];
        let row = ComplexRow {
            t: s.t,
            z_re: s.z.as_vector().iter().map(|v| v.re).collect(),
            z_im: s.z.as_vector().iter().map(|v| v.im).collect(),
            b_re: (0..n * n)
                .map(|k| s.b.matrix()[(k / n, k % n)].re)
                .collect(),
            b_im: (0..n * n)
                .map(|k| s.b.matrix()[(k / n, k % n)].im)
                .collect(),
            alpha_re: s.alpha.re,
            alpha_im: s.alpha.im,
        };
        out.push_str(&serde_json::to_string(&row).expect("serializable row"));
        out.push('\n');
    }
    if let Some(report) = &ct.breakdown {
        let row = FooterRow {
            breakdown: FooterBody {
                t: report.t_breakdown,
                reason: report.reason.to_string(),
            },
        };
        out.push_str(&serde_json::to_string(&row).expect("serializable footer"));
        out.push('\n');
    }
    out
}

pub fn real_jsonl(rt: &RealTrajectory, stride: usize) -> String {
    let n = rt.n();
    let mut out = String::new();
    for &k in &strided(rt.samples.len(), stride) {
        let s = &rt.samples[k];
        let row = RealRow {
            t: s.t,
            z: s.z.as_vector().iter().cloned().collect(),
            g: (0..4 * n * n)
                .map(|k| s.g.matrix()[(k / (2 * n), k % (2 * n))])
                .collect(),
            beta: s.beta,
        };
        out.push_str(&serde_json::to_string(&row).expect("serializable row"));
        out.push('\n');
    }
    if let Some(report) = &rt.breakdown {
        let row = FooterRow {
            breakdown: FooterBody {
                t: report.t_breakdown,
                reason: report.reason.to_string(),
            },
        };
        out.push_str(&serde_json::to_string(&row).expect("serializable footer"));
        out.push('\n');
    }
    out
}

fn parse_floats(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number in trajectory file: {tok:?}")))
        })
        .collect()
}

fn parse_footer(line: &str) -> Result<BreakdownReport> {
    // "# breakdown t=<value> reason=<enum>"
    let rest = line.trim_start_matches('#').trim();
    let mut t = None;
    let mut reason = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("t=") {
            t = Some(v.parse::<f64>().map_err(|_| {
                Error::Config(format!("bad breakdown time in footer: {v:?}"))
            })?);
        } else if let Some(v) = tok.strip_prefix("reason=") {
            reason = Some(parse_reason(v)?);
        }
    }
    match (t, reason) {
        (Some(t), Some(reason)) => Ok(BreakdownReport {
            t_breakdown: t,
            min_eig: f64::NAN,
            reason,
        }),
        _ => Err(Error::Config(format!("malformed breakdown footer: {line}"))),
    }
}

/// Re-parse an emitted complex-route file (either format) to full precision.
pub fn parse_complex_file(text: &str, format: FileFormat, hbar: f64) -> Result<ComplexTrajectory> {
    let mut samples = Vec::new();
    let mut breakdown = None;
    match format {
        FileFormat::Csv => {
            let mut lines = text.lines();
            let header = lines
                .next()
                .ok_or_else(|| Error::Config("empty trajectory file".into()))?;
            let twice_n = header.split(',').filter(|h| h.starts_with("Re_z_")).count();
            if twice_n == 0 || twice_n % 2 != 0 {
                return Err(Error::Config("malformed complex CSV header".into()));
            }
            let n = twice_n / 2;
            for line in lines {
                if line.starts_with('#') {
                    breakdown = Some(parse_footer(line)?);
                    continue;
                }
                let row = parse_floats(line)?;
                if row.len() != 1 + 4 * n + 2 * n * n + 2 {
                    return Err(Error::Config(format!(
                        "complex CSV row has {} columns, expected {}",
                        row.len(),
                        1 + 4 * n + 2 * n * n + 2
                    )));
                }
                let z = CVec::from_fn(2 * n, |i, _| C64::new(row[1 + i], row[1 + 2 * n + i]));
                let off = 1 + 4 * n;
                let b = CMat::from_fn(n, n, |i, j| {
                    C64::new(row[off + i * n + j], row[off + n * n + i * n + j])
                });
                let alpha = C64::new(row[off + 2 * n * n], row[off + 2 * n * n + 1]);
                samples.push(ComplexSample {
                    t: row[0],
                    z: PhasePoint::new(z)?,
                    b: ShapeMatrix::new(b)?,
                    alpha,
                });
            }
        }
        FileFormat::Jsonl => {
            for line in text.lines() {
                if line.contains("\"breakdown\"") {
                    let row: FooterRow = serde_json::from_str(line)
                        .map_err(|e| Error::Config(format!("bad footer row: {e}")))?;
                    breakdown = Some(BreakdownReport {
                        t_breakdown: row.breakdown.t,
                        min_eig: f64::NAN,
                        reason: parse_reason(&row.breakdown.reason)?,
                    });
                    continue;
                }
                let row: ComplexRow = serde_json::from_str(line)
                    .map_err(|e| Error::Config(format!("bad trajectory row: {e}")))?;
                let dim = row.z_re.len();
                let n = dim / 2;
                let z = CVec::from_fn(dim, |i, _| C64::new(row.z_re[i], row.z_im[i]));
                let b = CMat::from_fn(n, n, |i, j| {
                    C64::new(row.b_re[i * n + j], row.b_im[i * n + j])
                });
                samples.push(ComplexSample {
                    t: row.t,
                    z: PhasePoint::new(z)?,
                    b: ShapeMatrix::new(b)?,
                    alpha: C64::new(row.alpha_re, row.alpha_im),
                });
            }
        }
    }
    Ok(ComplexTrajectory {
        hbar,
        samples,
        breakdown,
    })
}

/// Re-parse an emitted real-route file (either format) to full precision.
pub fn parse_real_file(text: &str, format: FileFormat, hbar: f64) -> Result<RealTrajectory> {
    let mut samples = Vec::new();
    let mut breakdown = None;
    match format {
        FileFormat::Csv => {
            let mut lines = text.lines();
            let header = lines
                .next()
                .ok_or_else(|| Error::Config("empty trajectory file".into()))?;
            let twice_n = header
                .split(',')
                .filter(|h| h.starts_with("Z_"))
                .count();
            if twice_n == 0 || twice_n % 2 != 0 {
                return Err(Error::Config("malformed real CSV header".into()));
            }
            for line in lines {
                if line.starts_with('#') {
                    breakdown = Some(parse_footer(line)?);
                    continue;
                }
                let row = parse_floats(line)?;
                if row.len() != 1 + twice_n + twice_n * twice_n + 1 {
                    return Err(Error::Config(format!(
                        "real CSV row has {} columns, expected {}",
                        row.len(),
                        1 + twice_n + twice_n * twice_n + 1
                    )));
                }
                let z = RVec::from_row_slice(&row[1..1 + twice_n]);
                let off = 1 + twice_n;
                let g = RMat::from_row_slice(
                    twice_n,
                    twice_n,
                    &row[off..off + twice_n * twice_n],
                );
                samples.push(RealSample {
                    t: row[0],
                    z: RealPhasePoint::new(z)?,
                    g: Metric::new(g)?,
                    beta: row[off + twice_n * twice_n],
                });
            }
        }
        FileFormat::Jsonl => {
            for line in text.lines() {
                if line.contains("\"breakdown\"") {
                    let row: FooterRow = serde_json::from_str(line)
                        .map_err(|e| Error::Config(format!("bad footer row: {e}")))?;
                    breakdown = Some(BreakdownReport {
                        t_breakdown: row.breakdown.t,
                        min_eig: f64::NAN,
                        reason: parse_reason(&row.breakdown.reason)?,
                    });
                    continue;
                }
                let row: RealRow = serde_json::from_str(line)
                    .map_err(|e| Error::Config(format!("bad trajectory row: {e}")))?;
                let dim = row.z.len();
                samples.push(RealSample {
                    t: row.t,
                    z: RealPhasePoint::new(RVec::from_row_slice(&row.z))?,
                    g: Metric::new(RMat::from_row_slice(dim, dim, &row.g))?,
                    beta: row.beta,
                });
            }
        }
    }
    Ok(RealTrajectory {
        hbar,
        samples,
        breakdown,
    })
}

fn with_route_tag(path: &Path, tag: &str, format: FileFormat) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trajectory".into());
    let name = format!("{stem}.{tag}.{}", format.extension());
    path.with_file_name(name)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    err.exit_code()
}

fn run_propagate(
    config: &Path,
    out: Option<&Path>,
    format: Option<&str>,
) -> Result<i32> {
    let scn = load_scenario(config)?;
    let env = std::env::var("NHC_DEFAULT_TOL").ok();
    let mut built = build_scenario(&scn, env.as_deref())?;
    if let Some(f) = format {
        built.format = FileFormat::parse(f)?;
    }
    let base = out
        .map(Path::to_path_buf)
        .or_else(|| built.path.clone())
        .ok_or_else(|| Error::Config("no output path: set output.path or pass --out".into()))?;

    let mut broke = false;
    let emit = |text: String, path: PathBuf| -> Result<()> {
        write_file(&path, &text)?;
        println!("wrote {}", path.display());
        Ok(())
    };

    if let Some((z0, b0)) = &built.complex_init {
        let ct = propagate_complex(
            &built.ham,
            z0,
            b0,
            C64::new(0.0, 0.0),
            built.t0,
            built.t1,
            &built.opts,
        )?;
        if let Some(report) = &ct.breakdown {
            broke = true;
            println!("{}", footer_line(report).trim_start_matches("# "));
        }
        let text = match built.format {
            FileFormat::Csv => complex_csv(&ct, built.stride),
            FileFormat::Jsonl => complex_jsonl(&ct, built.stride),
        };
        let path = if built.route == Route::Both {
            with_route_tag(&base, "complex", built.format)
        } else {
            base.clone()
        };
        emit(text, path)?;
    }
    if let Some((z0, g0)) = &built.real_init {
        let rt = propagate_real(&built.ham, z0, g0, 0.0, built.t0, built.t1, &built.opts)?;
        if let Some(report) = &rt.breakdown {
            broke = true;
            println!("{}", footer_line(report).trim_start_matches("# "));
        }
        let text = match built.format {
            FileFormat::Csv => real_csv(&rt, built.stride),
            FileFormat::Jsonl => real_jsonl(&rt, built.stride),
        };
        let path = if built.route == Route::Both {
            with_route_tag(&base, "real", built.format)
        } else {
            base.clone()
        };
        emit(text, path)?;
    }
    Ok(if broke { 3 } else { 0 })
}

pub fn cmd_propagate(config: &Path, out: Option<&Path>, format: Option<&str>) -> i32 {
    match run_propagate(config, out, format) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn fmt_complex(v: C64) -> String {
    format!("({}, {})", v.re, v.im)
}

fn run_project(config: &Path) -> Result<i32> {
    let scn = load_scenario(config)?;
    let env = std::env::var("NHC_DEFAULT_TOL").ok();
    let built = build_scenario(&scn, env.as_deref())?;
    let (z, b) = built
        .complex_init
        .as_ref()
        .ok_or_else(|| Error::Config("project needs initial z and B".into()))?;
    let red = reduce_state(z, b)?;
    let zv = red.real_centre.as_vector();
    let entries: Vec<String> = zv.iter().map(|v| v.to_string()).collect();
    println!("Z = [{}]", entries.join(", "));
    println!("sigma = {}", fmt_complex(red.sigma));
    let frame = frame_from_shape(b);
    println!("frame basis (columns of (B; I)):");
    for k in 0..built.n {
        let col: Vec<String> = (0..2 * built.n)
            .map(|i| fmt_complex(frame.matrix()[(i, k)]))
            .collect();
        println!("  v{} = [{}]", k + 1, col.join(", "));
    }
    Ok(0)
}

pub fn cmd_project(config: &Path) -> i32 {
    match run_project(config) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

/// Parameter overrides for the reference examples, from CLI flags.
#[derive(Clone, Debug, Default)]
pub struct ExampleParams {
    pub gamma: Option<Vec<f64>>,
    pub b: Option<f64>,
    pub delta: Option<Vec<f64>>,
    pub omega: Option<f64>,
    pub z0: Option<Vec<f64>>,
    pub t1: Option<f64>,
}

fn example_spec(id: &str, params: &ExampleParams) -> Result<ExampleSpec> {
    let pair = |v: &Option<Vec<f64>>, name: &str| -> Result<Option<(f64, f64)>> {
        match v {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(v) => Err(Error::Config(format!(
                "{name} expects two values, got {}",
                v.len()
            ))),
        }
    };
    match id {
        "contraction" => {
            let ExampleSpec::Contraction {
                mut gamma,
                s,
                g0,
                mut z0,
                mut t1,
            } = ExampleSpec::contraction()
            else {
                unreachable!()
            };
            if let Some(g) = &params.gamma {
                if g.len() != 1 {
                    return Err(Error::Config(format!(
                        "--gamma expects one value for contraction, got {}",
                        g.len()
                    )));
                }
                gamma = g[0];
            }
            if let Some((p, q)) = pair(&params.z0, "--z0")? {
                z0 = RVec::from_vec(vec![p, q]);
            }
            if let Some(t) = params.t1 {
                t1 = t;
            }
            Ok(ExampleSpec::Contraction {
                gamma,
                s,
                g0,
                z0,
                t1,
            })
        }
        "blowup" => {
            let ExampleSpec::Blowup {
                mut b,
                mut p0,
                mut q0,
                mut t1,
            } = ExampleSpec::blowup()
            else {
                unreachable!()
            };
            if let Some(v) = params.b {
                b = v;
            }
            if let Some((p, q)) = pair(&params.z0, "--z0")? {
                p0 = p;
                q0 = q;
            }
            if let Some(t) = params.t1 {
                t1 = t;
            }
            Ok(ExampleSpec::Blowup { b, p0, q0, t1 })
        }
        "damped_oscillator" => {
            let ExampleSpec::DampedOscillator {
                mut delta,
                mut omega,
                mut p0,
                mut q0,
                mut t1,
            } = ExampleSpec::damped_oscillator()
            else {
                unreachable!()
            };
            if let Some((re, im)) = pair(&params.delta, "--delta")? {
                delta = C64::new(re, im);
            }
            if let Some(w) = params.omega {
                omega = w;
            }
            if let Some((p, q)) = pair(&params.z0, "--z0")? {
                p0 = p;
                q0 = q;
            }
            if let Some(t) = params.t1 {
                t1 = t;
            }
            Ok(ExampleSpec::DampedOscillator {
                delta,
                omega,
                p0,
                q0,
                t1,
            })
        }
        "pt_shifted" => {
            let ExampleSpec::PtShifted {
                mut gamma,
                mut p0,
                mut q0,
                mut t1,
            } = ExampleSpec::pt_shifted()
            else {
                unreachable!()
            };
            if let Some((gp, gq)) = pair(&params.gamma, "--gamma")? {
                gamma = RVec::from_vec(vec![gp, gq]);
            }
            if let Some((p, q)) = pair(&params.z0, "--z0")? {
                p0 = p;
                q0 = q;
            }
            if let Some(t) = params.t1 {
                t1 = t;
            }
            Ok(ExampleSpec::PtShifted { gamma, p0, q0, t1 })
        }
        other => Err(Error::Config(format!(
            "unknown example id {other:?}, expected contraction, blowup, damped_oscillator or pt_shifted"
        ))),
    }
}

fn run_example_cmd(
    id: &str,
    params: &ExampleParams,
    out: Option<&Path>,
    format: Option<&str>,
) -> Result<i32> {
    let spec = example_spec(id, params)?;
    let format = match format {
        Some(f) => FileFormat::parse(f)?,
        None => FileFormat::Csv,
    };
    let env = std::env::var("NHC_DEFAULT_TOL").ok();
    let (rel_tol, abs_tol) = resolve_tolerances(&IntegratorConfig::default(), env.as_deref())?;
    let opts = IntegratorOptions {
        rel_tol,
        abs_tol,
        ..Default::default()
    };
    let run = run_example(&spec, &opts)?;

    let base = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(run.id));
    let emit = |tag: &str, text: String| -> Result<()> {
        let path = with_route_tag(&base, tag, format);
        write_file(&path, &text)?;
        println!("wrote {}", path.display());
        Ok(())
    };
    if let Some(ct) = &run.numeric_complex {
        let text = match format {
            FileFormat::Csv => complex_csv(ct, 1),
            FileFormat::Jsonl => complex_jsonl(ct, 1),
        };
        emit("numeric.complex", text)?;
        if let Some(report) = &ct.breakdown {
            println!("{}", footer_line(report).trim_start_matches("# "));
        }
    }
    if let Some(rt) = &run.numeric_real {
        let text = match format {
            FileFormat::Csv => real_csv(rt, 1),
            FileFormat::Jsonl => real_jsonl(rt, 1),
        };
        emit("numeric.real", text)?;
        if let Some(report) = &rt.breakdown {
            println!("{}", footer_line(report).trim_start_matches("# "));
        }
    }
    if let Some(ct) = &run.closed_complex {
        let text = match format {
            FileFormat::Csv => complex_csv(ct, 1),
            FileFormat::Jsonl => complex_jsonl(ct, 1),
        };
        emit("closed.complex", text)?;
    }
    if let Some(rt) = &run.closed_real {
        let text = match format {
            FileFormat::Csv => real_csv(rt, 1),
            FileFormat::Jsonl => real_jsonl(rt, 1),
        };
        emit("closed.real", text)?;
    }
    for d in &run.deviations {
        println!(
            "deviation {} value={:.6e} threshold={:.0e} status={}",
            d.name,
            d.value,
            d.threshold,
            if d.pass() { "pass" } else { "fail" }
        );
    }
    let ok = run.passed();
    println!("result {}", if ok { "pass" } else { "fail" });
    Ok(if ok { 0 } else { 1 })
}

pub fn cmd_example(
    id: &str,
    params: &ExampleParams,
    out: Option<&Path>,
    format: Option<&str>,
) -> i32 {
    match run_example_cmd(id, params, out, format) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

// ---------------------------------------------------------------------------
// validation suite
// ---------------------------------------------------------------------------

struct SuiteReport {
    lines: Vec<String>,
    failed: bool,
}

impl SuiteReport {
    fn new() -> Self {
        SuiteReport {
            lines: Vec::new(),
            failed: false,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let status = if ok { "PASS" } else { "FAIL" };
        self.lines.push(format!("{status} {name} {detail}"));
        if !ok {
            self.failed = true;
        }
    }

    fn info(&mut self, name: &str, detail: String) {
        self.lines.push(format!("INFO {name} {detail}"));
    }
}

fn geometry_checks(seed: u64, inject: Option<&str>, report: &mut SuiteReport) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut symplectic_defect: f64 = 0.0;
    let mut square_defect: f64 = 0.0;
    let mut tame_min = f64::INFINITY;
    let mut round_trip: f64 = 0.0;
    let mut kernel_gap: f64 = 0.0;
    for n in 1..=3usize {
        for _ in 0..12 {
            let b = sampling::random_shape(n, &mut rng);
            let g = metric_from_shape(&b)?;
            let j = structure_from_shape(&b)?;
            let om = omega(n);
            symplectic_defect = symplectic_defect
                .max((g.matrix() * &om * g.matrix() - &om).amax());
            square_defect = square_defect.max(
                (j.matrix() * j.matrix() + RMat::identity(2 * n, 2 * n)).amax(),
            );
            let omj = (&om * j.matrix() + (&om * j.matrix()).transpose()) * 0.5;
            tame_min = tame_min.min(
                nalgebra::SymmetricEigen::new(omj)
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
            );
            let frame = frame_from_shape(&b);
            let b_back = crate::geometry::shape_from_frame(&frame);
            round_trip = round_trip.max(
                (b_back.matrix() - b.matrix())
                    .iter()
                    .fold(0.0_f64, |a, v| a.max(v.norm())),
            );
            // kernel column u = (B e_k, e_k) must be annihilated by P_J
            for k in 0..n {
                let mut u = CVec::zeros(2 * n);
                for i in 0..n {
                    u[i] = b.matrix()[(i, k)];
                }
                u[n + k] = C64::new(1.0, 0.0);
                let re = u.map(|v| v.re);
                let im = u.map(|v| v.im);
                let proj = &re + j.matrix() * &im;
                kernel_gap = kernel_gap.max(proj.amax() / u.norm());
            }
        }
    }
    if inject == Some("non-symplectic-g") {
        // negative control: a deliberately perturbed metric must be caught
        let b = sampling::random_shape(2, &mut rng);
        let mut g = metric_from_shape(&b)?.matrix().clone();
        g[(0, 1)] += 1e-3;
        g[(1, 0)] += 1e-3;
        let om = omega(2);
        let defect = (&g * &om * &g - &om).amax();
        symplectic_defect = symplectic_defect.max(defect);
        report.check(
            "geometry.metric-symplectic",
            symplectic_defect <= 1e-9,
            format!("GΩG=Ω max_defect={symplectic_defect:.3e} (injected perturbation)"),
        );
    } else {
        report.check(
            "geometry.metric-symplectic",
            symplectic_defect <= 1e-9,
            format!("GΩG=Ω max_defect={symplectic_defect:.3e}"),
        );
    }
    report.check(
        "geometry.structure-square",
        square_defect <= 1e-9,
        format!("J²=-I max_defect={square_defect:.3e}"),
    );
    report.check(
        "geometry.structure-tame",
        tame_min > 0.0,
        format!("ΩJ≻0 min_eig={tame_min:.3e}"),
    );
    report.check(
        "geometry.frame-round-trip",
        round_trip <= 1e-9,
        format!("max_gap={round_trip:.3e}"),
    );
    report.check(
        "geometry.kernel-projection",
        kernel_gap <= 1e-9,
        format!("max_relative_gap={kernel_gap:.3e}"),
    );
    Ok(())
}

fn route_equivalence_check(seed: u64, report: &mut SuiteReport) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x517e);
    let opts = IntegratorOptions {
        dt_sample: 0.05,
        norm_variant: NormVariant::NormExact,
        ..Default::default()
    };
    let mut gap_z: f64 = 0.0;
    let mut gap_g: f64 = 0.0;
    for _ in 0..5 {
        let ham = sampling::random_damped_hamiltonian(1, true, &mut rng);
        let b0 = sampling::random_shape(1, &mut rng);
        let z0 = sampling::random_complex_point(1, &mut rng);
        let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 1.0, &opts)?;
        if ct.breakdown.is_some() {
            continue;
        }
        let projected = project_trajectory(&ct)?;
        let red0 = reduce_state(&z0, &b0)?;
        let g0 = metric_from_shape(&b0)?;
        let beta0 = 2.0 * red0.sigma.im / opts.hbar;
        let rt = propagate_real(&ham, &red0.real_centre, &g0, beta0, 0.0, 1.0, &opts)?;
        for (a, b) in projected.samples.iter().zip(rt.samples.iter()) {
            gap_z = gap_z.max((a.z.as_vector() - b.z.as_vector()).amax());
            gap_g = gap_g.max((a.g.matrix() - b.g.matrix()).amax());
        }
    }
    report.check(
        "dynamics.route-equivalence",
        gap_z <= 1e-5 && gap_g <= 1e-5,
        format!("max_gap_Z={gap_z:.3e} max_gap_G={gap_g:.3e}"),
    );
    Ok(())
}

fn phase_equivalence_check(seed: u64, report: &mut SuiteReport) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let b = sampling::random_shape(1, &mut rng);
        let z = sampling::random_complex_point(1, &mut rng);
        let red = reduce_state(&z, &b)?;
        let q = red.real_centre.q()[0];
        let width = (1.0 / b.im()[(0, 0)]).sqrt();
        let grid = GridSpec::centered(q, (8.0 * width).max(4.0), 512)?;
        let psi = evaluate_coherent_state(&grid, &z, &b, C64::new(0.0, 0.0), 1.0)?;
        let zc = PhasePoint::new(
            red.real_centre.as_vector().map(|v| C64::new(v, 0.0)),
        )?;
        let alpha_eq = red.sigma / 1.0; // sigma / hbar enters as e^{i sigma/hbar}
        let psi_eq = evaluate_coherent_state(&grid, &zc, &b, alpha_eq, 1.0)?;
        let peak = psi.max_abs();
        let mut gap: f64 = 0.0;
        for (a, b) in psi.values().iter().zip(psi_eq.values().iter()) {
            gap = gap.max((a - b).norm());
        }
        worst = worst.max(gap / peak);
    }
    report.check(
        "states.phase-equivalence",
        worst <= 1e-9,
        format!("max_relative_gap={worst:.3e}"),
    );
    Ok(())
}

fn wigner_check(report: &mut SuiteReport) -> Result<()> {
    let z = PhasePoint::from_real(&[0.0, 0.0])?;
    let b = ShapeMatrix::scalar(C64::new(0.0, 2.0))?;
    let grid = GridSpec::centered(0.0, 6.0, 512)?;
    let psi = evaluate_coherent_state(&grid, &z, &b, C64::new(0.0, 0.0), 1.0)?;
    let p_grid = GridSpec::centered(0.0, 9.0, 301)?;
    let w = wigner_transform_numeric(&psi, &p_grid, 1.0)?;
    let reference = wigner_of_state(&z, &b, C64::new(0.0, 0.0), 1.0)?;
    let mass_gap = (w.mass() - reference.mass).abs() / reference.mass;
    let centroid_gap = w.centroid().as_vector().amax();
    let cov = w.covariance();
    let cov_ref = reference.covariance();
    let cov_gap = (cov - cov_ref).amax();
    report.check(
        "states.wigner-moments",
        mass_gap <= 1e-4 && centroid_gap <= grid.dx().max(p_grid.dx()) && cov_gap <= 1e-3,
        format!("mass_gap={mass_gap:.3e} centroid_gap={centroid_gap:.3e} cov_gap={cov_gap:.3e}"),
    );
    Ok(())
}

fn residual_checks(report: &mut SuiteReport) -> Result<()> {
    let opts = IntegratorOptions {
        dt_sample: 1e-3,
        ..Default::default()
    };
    // harmonic oscillator
    let ham = QuadraticHamiltonian::quadratic(CMat::identity(2, 2))?;
    let z0 = PhasePoint::from_real(&[0.0, 1.0])?;
    let b0 = ShapeMatrix::scalar(C64::new(0.0, 1.0))?;
    let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 0.2, &opts)?;
    let grid = GridSpec::centered(0.0, 8.0, 512)?;
    let res_h = schrodinger_residual(&ct, &ham, &grid)?.max_residual;
    report.check(
        "oracles.residual-harmonic",
        res_h <= 1e-4,
        format!("max_residual={res_h:.3e}"),
    );

    // gain-driven blowup before breakdown
    let h = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 1.0),
        ],
    );
    let ham_b = QuadraticHamiltonian::quadratic(h)?;
    let zb = PhasePoint::from_real(&[0.0, 1.0])?;
    let ctb = propagate_complex(&ham_b, &zb, &b0, C64::new(0.0, 0.0), 0.0, 0.5, &opts)?;
    let grid_b = GridSpec::centered(1.5, 14.0, 512)?;
    let res_b = schrodinger_residual(&ctb, &ham_b, &grid_b)?.max_residual;
    report.check(
        "oracles.residual-blowup",
        res_b <= 1e-4,
        format!("max_residual={res_b:.3e}"),
    );

    // negative control
    let ablated = ablate_alpha_trace(&ct, &ham)?;
    let res_a = schrodinger_residual(&ablated, &ham, &grid)?.max_residual;
    report.check(
        "oracles.ablation-control",
        res_a >= 1e-1,
        format!("max_residual={res_a:.3e}"),
    );
    Ok(())
}

fn example_checks(report: &mut SuiteReport) -> Result<()> {
    let opts = IntegratorOptions::default();
    let mut all = true;
    let mut detail = String::new();
    for spec in [
        ExampleSpec::contraction(),
        ExampleSpec::blowup(),
        ExampleSpec::damped_oscillator(),
        ExampleSpec::pt_shifted(),
    ] {
        let run = run_example(&spec, &opts)?;
        let worst = run
            .deviations
            .iter()
            .map(|d| d.value / d.threshold.max(f64::MIN_POSITIVE))
            .fold(0.0_f64, f64::max);
        if !run.passed() {
            all = false;
        }
        if !detail.is_empty() {
            detail.push(' ');
        }
        write!(detail, "{}={:.3e}", run.id, worst).unwrap();
    }
    report.check("oracles.examples", all, format!("worst_ratio: {detail}"));
    Ok(())
}

fn adjudication_check(report: &mut SuiteReport) -> Result<()> {
    let adj = adjudicate_norm_variant(&IntegratorOptions::default())?;
    let verdict = match adj.verdict {
        NormVariant::ClosedForm => "closed-form",
        NormVariant::NormExact => "norm-exact",
    };
    report.info(
        "dynamics.log-norm-variant",
        format!(
            "verdict={verdict} closed_form_gap={:.3e} norm_exact_gap={:.3e}",
            adj.closed_form_gap, adj.norm_exact_gap
        ),
    );
    report.check(
        "oracles.adjudication-residual",
        adj.reference_residual <= 1e-4,
        format!("max_residual={:.3e}", adj.reference_residual),
    );
    Ok(())
}

fn run_validate(level: &str, seed: u64, inject: Option<&str>) -> Result<i32> {
    if let Some(mode) = inject {
        if mode != "non-symplectic-g" {
            return Err(Error::Config(format!(
                "unknown injection {mode:?}, expected non-symplectic-g"
            )));
        }
    }
    let full = match level {
        "fast" => false,
        "full" => true,
        other => {
            return Err(Error::Config(format!(
                "unknown level {other:?}, expected fast or full"
            )));
        }
    };
    println!("nhc validate {level} seed={seed}");
    let mut report = SuiteReport::new();
    geometry_checks(seed, inject, &mut report)?;
    route_equivalence_check(seed, &mut report)?;
    if full {
        phase_equivalence_check(seed, &mut report)?;
        wigner_check(&mut report)?;
        residual_checks(&mut report)?;
        example_checks(&mut report)?;
        adjudication_check(&mut report)?;
    }
    for line in &report.lines {
        println!("{line}");
    }
    println!("RESULT {}", if report.failed { "fail" } else { "pass" });
    Ok(if report.failed { 1 } else { 0 })
}

pub fn cmd_validate(level: &str, seed: u64, inject: Option<&str>) -> i32 {
    match run_validate(level, seed, inject) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::propagate_complex;

    fn harmonic_scenario(route: &str, path: &str) -> String {
        format!(
            r#"{{
  "n": 1,
  "hbar": 1.0,
  "hamiltonian": {{ "H_re": [1, 0, 0, 1] }},
  "initial": {{ "route": "{route}", "z_re": [0, 1], "B_im": [1] }},
  "time": {{ "t0": 0, "t1": 1, "dt_sample": 0.01 }},
  "integrator": {{ "rel_tol": 1e-9, "abs_tol": 1e-12 }},
  "output": {{ "path": "{path}", "format": "csv" }}
}}"#
        )
    }

    #[test]
    fn asymmetric_hamiltonian_names_the_entries() {
        let text = r#"{
  "n": 1,
  "hamiltonian": { "H_re": [1, 0.5, 0, 1] },
  "initial": { "route": "complex", "z_re": [0, 1], "B_im": [1] },
  "time": { "t0": 0, "t1": 1, "dt_sample": 0.01 }
}"#;
        let scn: Scenario = serde_json::from_str(text).unwrap();
        let Err(err) = build_scenario(&scn, None) else {
            panic!("asymmetric H_re must be rejected");
        };
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(
            msg.contains("H_re[0][1]") && msg.contains("H_re[1][0]"),
            "diagnostic must name the entries: {msg}"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
  "n": 1,
  "hamiltonian": { "H_re": [1, 0, 0, 1], "bogus": 3 },
  "initial": { "route": "complex", "z_re": [0, 1], "B_im": [1] },
  "time": { "t0": 0, "t1": 1, "dt_sample": 0.01 }
}"#;
        assert!(serde_json::from_str::<Scenario>(text).is_err());
    }

    #[test]
    fn env_tolerance_applies_when_config_is_silent() {
        let cfg = IntegratorConfig::default();
        let (rel, abs) = resolve_tolerances(&cfg, Some("1e-6")).unwrap();
        assert_eq!(rel, 1e-6);
        assert_eq!(abs, 1e-9);
        let explicit = IntegratorConfig {
            rel_tol: Some(1e-10),
            abs_tol: None,
        };
        let (rel, abs) = resolve_tolerances(&explicit, Some("1e-6")).unwrap();
        assert_eq!(rel, 1e-10);
        assert_eq!(abs, 1e-9);
        assert!(resolve_tolerances(&cfg, Some("zero")).is_err());
    }

    #[test]
    fn csv_round_trips_to_full_precision() {
        let ham = QuadraticHamiltonian::quadratic(CMat::identity(2, 2)).unwrap();
        let z0 = PhasePoint::from_real(&[0.3, 0.7]).unwrap();
        let b0 = ShapeMatrix::scalar(C64::new(0.4, 1.3)).unwrap();
        let opts = IntegratorOptions {
            dt_sample: 0.1,
            ..Default::default()
        };
        let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 1.0, &opts).unwrap();
        let text = complex_csv(&ct, 1);
        let back = parse_complex_file(&text, FileFormat::Csv, 1.0).unwrap();
        assert_eq!(back.samples.len(), ct.samples.len());
        for (a, b) in ct.samples.iter().zip(back.samples.iter()) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.alpha, b.alpha);
            for k in 0..2 {
                assert_eq!(a.z.as_vector()[k], b.z.as_vector()[k]);
            }
            assert_eq!(a.b.matrix()[(0, 0)], b.b.matrix()[(0, 0)]);
        }
        // byte-identical re-serialization
        assert_eq!(text, complex_csv(&back, 1));
    }

    #[test]
    fn jsonl_round_trips_with_breakdown_footer() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 1.0),
            ],
        );
        let ham = QuadraticHamiltonian::quadratic(h).unwrap();
        let z0 = PhasePoint::from_real(&[0.0, 1.0]).unwrap();
        let b0 = ShapeMatrix::scalar(C64::new(0.0, 1.0)).unwrap();
        let opts = IntegratorOptions {
            dt_sample: 0.01,
            ..Default::default()
        };
        let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 2.0, &opts).unwrap();
        assert!(ct.breakdown.is_some());
        let text = complex_jsonl(&ct, 1);
        let back = parse_complex_file(&text, FileFormat::Jsonl, 1.0).unwrap();
        let report = back.breakdown.as_ref().expect("footer parsed");
        assert!((report.t_breakdown - 1.0).abs() < 1e-3);
        assert_eq!(text, complex_jsonl(&back, 1));
    }

    #[test]
    fn real_csv_round_trips() {
        let ham = QuadraticHamiltonian::quadratic(CMat::identity(2, 2)).unwrap();
        let z0 = RealPhasePoint::from_slice(&[0.0, 1.0]).unwrap();
        let g0 = Metric::identity(1);
        let opts = IntegratorOptions {
            dt_sample: 0.1,
            ..Default::default()
        };
        let rt = propagate_real(&ham, &z0, &g0, 0.0, 0.0, 1.0, &opts).unwrap();
        let text = real_csv(&rt, 1);
        let back = parse_real_file(&text, FileFormat::Csv, 1.0).unwrap();
        assert_eq!(text, real_csv(&back, 1));
        let jtext = real_jsonl(&rt, 1);
        let jback = parse_real_file(&jtext, FileFormat::Jsonl, 1.0).unwrap();
        assert_eq!(jtext, real_jsonl(&jback, 1));
    }

    #[test]
    fn stride_keeps_the_final_sample() {
        assert_eq!(strided(10, 3), vec![0, 3, 6, 9]);
        assert_eq!(strided(11, 3), vec![0, 3, 6, 9, 10]);
        assert_eq!(strided(1, 5), vec![0]);
    }

    #[test]
    fn propagate_both_routes_writes_agreeing_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("traj.csv");
        let cfg_path = dir.path().join("scenario.json");
        std::fs::write(
            &cfg_path,
            harmonic_scenario("both", out.to_str().unwrap()),
        )
        .unwrap();
        let code = cmd_propagate(&cfg_path, None, None);
        assert_eq!(code, 0);
        let complex_text =
            std::fs::read_to_string(dir.path().join("traj.complex.csv")).unwrap();
        let real_text = std::fs::read_to_string(dir.path().join("traj.real.csv")).unwrap();
        let ct = parse_complex_file(&complex_text, FileFormat::Csv, 1.0).unwrap();
        let rt = parse_real_file(&real_text, FileFormat::Csv, 1.0).unwrap();
        assert_eq!(ct.samples.len(), rt.samples.len());
        for (a, b) in ct.samples.iter().zip(rt.samples.iter()) {
            for k in 0..2 {
                let re = a.z.as_vector()[k].re;
                assert!((re - b.z.as_vector()[k]).abs() < 1e-6);
                assert!(a.z.as_vector()[k].im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn example_ids_build_and_unknown_ids_fail() {
        let params = ExampleParams::default();
        for id in ["contraction", "blowup", "damped_oscillator", "pt_shifted"] {
            assert!(example_spec(id, &params).is_ok(), "{id}");
        }
        let err = example_spec("squeezed", &params).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let bad = ExampleParams {
            gamma: Some(vec![1.0, 2.0]),
            ..Default::default()
        };
        assert!(example_spec("contraction", &bad).is_err());
    }
}
