//! Execution of one validated configuration and of parameter sweeps.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use trimlump::assembly::LumpingScheme;
use trimlump::dynamics::{critical_timestep, IntegratorConfig, Trajectory};
use trimlump::eigen::eigen_project;
use trimlump::experiment::{MassTreatment, Model, SpectrumReport, SPECTRUM_MODES};
use trimlump::sparse::{fmt_g17, CsrMatrix};
use trimlump::Point;

use crate::config::{ExperimentConfig, Output, Param, Resolved};
use crate::plot::{Plot, Series};

/// Modes written by the `modes` output.
const MODES_WRITTEN: usize = 6;
/// Sample grid per direction for 2D field output.
const SAMPLES_2D: usize = 33;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Unstable { step: usize, time: f64 },
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Unstable { .. } => 3,
            Self::Runtime(_) => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        match self {
            Self::Config(m) => ErrorReport {
                kind: "invalid-config",
                message: m.clone(),
                step: None,
                time: None,
            },
            Self::Unstable { step, time } => ErrorReport {
                kind: "unstable",
                message: format!(
                    "explicit integration became unstable at step {step} (t = {time})"
                ),
                step: Some(*step),
                time: Some(*time),
            },
            Self::Runtime(m) => ErrorReport {
                kind: "runtime",
                message: m.clone(),
                step: None,
                time: None,
            },
        }
    }
}

impl From<trimlump::Error> for Failure {
    fn from(e: trimlump::Error) -> Self {
        match e {
            trimlump::Error::Unstable { step, time } => Self::Unstable { step, time },
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Runtime(format!("i/o error: {e}"))
    }
}

/// Machine-readable failure description, written as `error.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub step: Option<usize>,
    pub time: Option<f64>,
}

impl ErrorReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|_| format!("kind = \"{}\"\n", self.kind))
    }
}

/// Key figures of a run, written as `summary.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub example: String,
    pub mass: String,
    pub unknowns: usize,
    pub lambda_max: f64,
    pub dt_critical: f64,
    pub dt: f64,
    pub steps: usize,
    pub min_spurious: Option<f64>,
    pub max_l2_error: Option<f64>,
}

/// Files written into one directory, for the manifest.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn adopt(&mut self, name: String) {
        self.files.push(name);
    }

    /// `manifest.csv` with the SHA-256 of every file written so far.
    fn finish(self) -> io::Result<()> {
        let mut out = String::from("file,sha256,bytes\n");
        for f in &self.files {
            let bytes = fs::read(self.dir.join(f))?;
            let _ = writeln!(
                out,
                "{f},{},{}",
                hex::encode(Sha256::digest(&bytes)),
                bytes.len()
            );
        }
        fs::write(self.dir.join("manifest.csv"), out)
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_default()
}

fn svg(title: &str, x: &str, y: &str, log_y: bool, series: &[Series]) -> String {
    Plot {
        title,
        x_label: x,
        y_label: y,
        log_y,
    }
    .render(series)
}

/// Field sample points: mesh vertices in 1D, a uniform grid inside Ω in 2D.
fn sample_points(model: &Model) -> Vec<Point> {
    if model.space.dim() == 1 {
        return model.nodes();
    }
    let n = SAMPLES_2D - 1;
    (0..=n)
        .flat_map(|j| (0..=n).map(move |i| [i as f64 / n as f64, j as f64 / n as f64]))
        .filter(|&x| model.problem.domain.contains(x))
        .collect()
}

fn rowsum_of(model: &Model) -> Result<CsrMatrix, Failure> {
    Ok(model.mass(MassTreatment::Lumped(LumpingScheme::RowSum))?)
}

fn write_spectrum(a: &mut Artifacts, report: &SpectrumReport) -> io::Result<()> {
    let values = &report.decomposition.values;
    let mut csv = String::from("index,lambda_h,exact,ratio,spurious\n");
    for (i, &l) in values.iter().enumerate() {
        if i < report.reference.len() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                i + 1,
                fmt_g17(l),
                fmt_g17(report.reference[i]),
                fmt_g17(report.pairing.ratios[i]),
                report.pairing.spurious[i]
            );
        } else {
            let _ = writeln!(csv, "{},{},,,", i + 1, fmt_g17(l));
        }
    }
    a.write("spectrum.csv", &csv)?;
    let n = report.reference.len();
    let computed: Vec<(f64, f64)> = (0..n).map(|i| ((i + 1) as f64, values[i])).collect();
    let reference: Vec<(f64, f64)> = (0..n)
        .map(|i| ((i + 1) as f64, report.reference[i]))
        .collect();
    let label = if report.exact_reference {
        "exact"
    } else {
        "consistent"
    };
    a.write(
        "spectrum.svg",
        &svg(
            "Low spectrum",
            "index",
            "eigenvalue",
            true,
            &[
                Series::new("computed", computed),
                Series::new(label, reference),
            ],
        ),
    )
}

fn write_modes(
    a: &mut Artifacts,
    model: &Model,
    report: &SpectrumReport,
    points: &[Point],
) -> Result<(), Failure> {
    let count = MODES_WRITTEN.min(report.decomposition.len());
    let mut columns = Vec::with_capacity(count);
    for j in 0..count {
        let mut v = report.decomposition.vector(j);
        // deterministic sign: largest coefficient positive
        let big = v
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        columns.push(model.point_values(&v, points)?);
    }
    let mut csv = String::from("x,y");
    for j in 0..count {
        let _ = write!(csv, ",mode_{}", j + 1);
    }
    csv.push('\n');
    for (k, x) in points.iter().enumerate() {
        let _ = write!(csv, "{},{}", fmt_g17(x[0]), fmt_g17(x[1]));
        for c in &columns {
            let _ = write!(csv, ",{}", fmt_g17(c[k]));
        }
        csv.push('\n');
    }
    a.write("modes.csv", &csv)?;
    // 1D: along x; 2D: along the horizontal midline
    let line: Vec<usize> = (0..points.len())
        .filter(|&k| model.space.dim() == 1 || points[k][1] == 0.5)
        .collect();
    let series: Vec<Series> = columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            Series::new(
                format!("mode {}", j + 1),
                line.iter().map(|&k| (points[k][0], c[k])).collect(),
            )
        })
        .collect();
    a.write(
        "modes.svg",
        &svg("Low modes", "x", "mode value", false, &series),
    )?;
    Ok(())
}

fn write_projection(
    a: &mut Artifacts,
    model: &Model,
    mass: &CsrMatrix,
    report: &SpectrumReport,
) -> Result<(), Failure> {
    let x = model.ops.l2_project(|p| model.problem.profile_value(p))?;
    let c = eigen_project(&x, &report.decomposition, mass)?;
    let mut csv = String::from("index,lambda_h,coefficient\n");
    for (i, v) in c.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{}",
            i + 1,
            fmt_g17(report.decomposition.values[i]),
            fmt_g17(*v)
        );
    }
    a.write("projection_coefficients.csv", &csv)?;
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64, v.abs()))
        .collect();
    a.write(
        "projection_coefficients.svg",
        &svg(
            "Eigenbasis coefficients of the projected profile",
            "index",
            "|coefficient|",
            true,
            &[Series::new("|c_i|", pts)],
        ),
    )?;
    Ok(())
}

fn write_trajectory(
    a: &mut Artifacts,
    model: &Model,
    traj: &Trajectory,
    points: &[Point],
) -> Result<(), Failure> {
    let mut csv = String::from("t,x,y,u_h,u_exact\n");
    let probe = (0..points.len())
        .max_by(|&i, &j| {
            let (a, b) = (
                model.problem.profile_value(points[i]).abs(),
                model.problem.profile_value(points[j]).abs(),
            );
            a.total_cmp(&b).then(j.cmp(&i))
        })
        .unwrap_or(0);
    let (mut discrete, mut exact) = (Vec::new(), Vec::new());
    for (&t, u) in traj.times.iter().zip(&traj.states) {
        let values = model.point_values(u, points)?;
        for (x, v) in points.iter().zip(&values) {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_g17(t),
                fmt_g17(x[0]),
                fmt_g17(x[1]),
                fmt_g17(*v),
                fmt_g17(model.problem.u(*x, t))
            );
        }
        if !points.is_empty() {
            discrete.push((t, values[probe]));
            exact.push((t, model.problem.u(points[probe], t)));
        }
    }
    a.write("trajectory.csv", &csv)?;
    let title = match points.get(probe) {
        Some(x) => format!("Displacement at ({:.4}, {:.4})", x[0], x[1]),
        None => "Displacement".into(),
    };
    a.write(
        "trajectory.svg",
        &svg(
            &title,
            "t",
            "u",
            false,
            &[
                Series::new("discrete", discrete),
                Series::new("exact", exact),
            ],
        ),
    )?;
    Ok(())
}

/// Run one configuration into `r.output_dir`.
pub fn run_resolved(config: &ExperimentConfig, r: &Resolved) -> Result<RunSummary, Failure> {
    let mut art = Artifacts::new(&r.output_dir)?;
    let text = toml::to_string(config).map_err(|e| Failure::Runtime(e.to_string()))?;
    art.write("config.toml", &text)?;

    let model = Model::build(r.discretization)?;
    let mass = model.mass(r.mass)?;
    let lambda_max = model.lambda_max(&mass, r.seed)?;
    let dt_critical = critical_timestep(lambda_max)?;
    let dt = match r.dt {
        Some(dt) => dt,
        None if r.mass.is_lumped() => r.safeguard * dt_critical,
        // implicit runs use the explicit step of the row-sum mass
        None => r.safeguard * critical_timestep(model.lambda_max(&rowsum_of(&model)?, r.seed)?)?,
    };
    let steps = IntegratorConfig::new(r.scheme, dt, r.final_time).num_steps();
    let points = sample_points(&model);

    let mut min_spurious = None;
    if r.outputs.iter().any(|o| o.needs_spectrum()) {
        let report = model.spectrum_report(&mass, SPECTRUM_MODES)?;
        min_spurious = report.min_spurious();
        if r.outputs.contains(&Output::Spectrum) {
            write_spectrum(&mut art, &report)?;
        }
        if r.outputs.contains(&Output::Modes) {
            write_modes(&mut art, &model, &report, &points)?;
        }
        if r.outputs.contains(&Output::ProjectionCoefficients) {
            write_projection(&mut art, &model, &mass, &report)?;
        }
    }

    let mut max_l2_error = None;
    if r.outputs.iter().any(|o| o.needs_simulation()) {
        let traj = model.simulate(&mass, r.scheme, dt, r.final_time, r.stride)?;
        let series = model.error_series(&traj);
        max_l2_error = Some(series.max());
        if r.outputs.contains(&Output::ErrorSeries) {
            let mut buf = Vec::new();
            series.write_csv(&mut buf)?;
            art.write("error_series.csv", &String::from_utf8_lossy(&buf))?;
            let pts: Vec<(f64, f64)> = series
                .times
                .iter()
                .copied()
                .zip(series.values.iter().copied())
                .collect();
            art.write(
                "error_series.svg",
                &svg(
                    "L2 error over time",
                    "t",
                    "L2 error",
                    false,
                    &[Series::new(r.mass.to_string(), pts)],
                ),
            )?;
        }
        if r.outputs.contains(&Output::Trajectory) {
            write_trajectory(&mut art, &model, &traj, &points)?;
        }
    }

    let summary = RunSummary {
        example: r.discretization.example.to_string(),
        mass: r.mass.to_string(),
        unknowns: model.ops.len(),
        lambda_max,
        dt_critical,
        dt,
        steps,
        min_spurious,
        max_l2_error,
    };
    let text = toml::to_string(&summary).map_err(|e| Failure::Runtime(e.to_string()))?;
    art.write("summary.toml", &text)?;
    art.finish()?;
    Ok(summary)
}

/// Directory name of a sweep member.
fn member_dir(param: Param, value: &str) -> String {
    let clean: String = value
        .trim()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-()+".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{param}={clean}")
}

pub struct SweepOutcome {
    pub failed: usize,
}

/// Run every member in its own directory, then write the summary.
pub fn sweep(
    base: &ExperimentConfig,
    param: Param,
    values: &[String],
    root: &Path,
) -> Result<SweepOutcome, Failure> {
    if values.is_empty() {
        return Err(Failure::Config("sweep needs at least one value".into()));
    }
    base.resolve().map_err(Failure::Config)?;
    let results: Vec<(String, Result<RunSummary, Failure>)> = values
        .par_iter()
        .map(|v| {
            let dir = member_dir(param, v);
            let outcome = base
                .with_param(param, v)
                .and_then(|c| c.resolve().map(|r| (c, r)))
                .map_err(Failure::Config)
                .and_then(|(mut c, mut r)| {
                    r.output_dir = root.join(&dir);
                    c.output_dir = Some(r.output_dir.clone());
                    let out = run_resolved(&c, &r);
                    if let Err(f) = &out {
                        let _ = fs::create_dir_all(&r.output_dir);
                        let _ = fs::write(r.output_dir.join("error.toml"), f.report().to_toml());
                    }
                    out
                });
            (dir, outcome)
        })
        .collect();

    let mut art = Artifacts::new(root)?;
    let mut csv =
        String::from("value,lambda_min_spurious,lambda_max,dt_c,max_l2_error,steps,status\n");
    let mut failed = 0;
    for (v, (dir, res)) in values.iter().zip(&results) {
        match res {
            Ok(s) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},ok",
                    v.trim(),
                    csv_opt(s.min_spurious),
                    fmt_g17(s.lambda_max),
                    fmt_g17(s.dt_critical),
                    csv_opt(s.max_l2_error),
                    s.steps
                );
            }
            Err(f) => {
                failed += 1;
                let _ = writeln!(csv, "{},,,,,,failed ({})", v.trim(), f.report().kind);
            }
        }
        let member = root.join(dir);
        if let Ok(entries) = fs::read_dir(&member) {
            let mut names: Vec<String> = entries
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            for n in names {
                art.adopt(format!("{dir}/{n}"));
            }
        }
    }
    art.write("sweep_summary.csv", &csv)?;
    art.finish()?;
    Ok(SweepOutcome { failed })
}
