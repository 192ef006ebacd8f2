//! Experiment configuration file and its validation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use trimlump::dynamics::Scheme;
use trimlump::experiment::{Discretization, MassTreatment, DEFAULT_GAMMA, SAFEGUARD};
use trimlump::problems::Example;
use trimlump::spline::MAX_DEGREE;

pub const DEFAULT_FINAL_TIME: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub example: String,
    pub eps: Option<f64>,
    pub degree: Option<usize>,
    pub continuity: Option<usize>,
    pub elements: Option<usize>,
    #[serde(default = "default_mass")]
    pub mass: String,
    #[serde(default)]
    pub stabilization: Stabilization,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// `"off"`, `"on"` (default threshold) or `{ gamma = ... }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stabilization {
    Switch(String),
    On { gamma: f64 },
}

impl Default for Stabilization {
    fn default() -> Self {
        Self::Switch("off".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IntegratorSection {
    /// `central-difference` or `newmark`; by default central differences for
    /// lumped masses and Newmark for the consistent mass.
    pub scheme: Option<String>,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    #[serde(default = "default_safeguard")]
    pub safeguard: f64,
    /// Fixed step replacing `safeguard · Δt_c`.
    pub dt: Option<f64>,
    pub stride: Option<usize>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            scheme: None,
            final_time: DEFAULT_FINAL_TIME,
            safeguard: SAFEGUARD,
            dt: None,
            stride: None,
        }
    }
}

fn default_mass() -> String {
    "rowsum".into()
}

fn default_outputs() -> Vec<String> {
    vec!["spectrum".into(), "error-series".into()]
}

fn default_final_time() -> f64 {
    DEFAULT_FINAL_TIME
}

fn default_safeguard() -> f64 {
    SAFEGUARD
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Spectrum,
    Modes,
    Trajectory,
    ErrorSeries,
    ProjectionCoefficients,
}

impl Output {
    pub fn needs_simulation(self) -> bool {
        matches!(self, Self::Trajectory | Self::ErrorSeries)
    }

    pub fn needs_spectrum(self) -> bool {
        matches!(
            self,
            Self::Spectrum | Self::Modes | Self::ProjectionCoefficients
        )
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spectrum" => Ok(Self::Spectrum),
            "modes" => Ok(Self::Modes),
            "trajectory" => Ok(Self::Trajectory),
            "error-series" => Ok(Self::ErrorSeries),
            "projection-coefficients" => Ok(Self::ProjectionCoefficients),
            _ => Err(format!(
                "unknown output '{s}' (expected spectrum, modes, trajectory, error-series or projection-coefficients)"
            )),
        }
    }
}

/// Sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Eps,
    Degree,
    Elements,
    Gamma,
    Mass,
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eps" | "ε" => Ok(Self::Eps),
            "p" | "degree" => Ok(Self::Degree),
            "N" | "n" | "elements" => Ok(Self::Elements),
            "gamma" | "γ" => Ok(Self::Gamma),
            "mass" => Ok(Self::Mass),
            _ => Err(format!(
                "unknown sweep parameter '{s}' (expected eps, p, N, gamma or mass)"
            )),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eps => "eps",
            Self::Degree => "p",
            Self::Elements => "N",
            Self::Gamma => "gamma",
            Self::Mass => "mass",
        })
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub discretization: Discretization,
    pub mass: MassTreatment,
    pub scheme: Scheme,
    pub final_time: f64,
    pub safeguard: f64,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub outputs: BTreeSet<Output>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("cannot parse configuration: {e}"))
    }

    /// Override one parameter from its textual sweep value.
    pub fn with_param(&self, param: Param, value: &str) -> Result<Self, String> {
        let mut c = self.clone();
        let number = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("sweep value '{value}' is not a number"))
        };
        let integer = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("sweep value '{value}' is not a nonnegative integer"))
        };
        match param {
            Param::Eps => c.eps = Some(number()?),
            Param::Degree => {
                let p = integer()?;
                c.degree = Some(p);
                c.continuity = Some(p.saturating_sub(1));
            }
            Param::Elements => c.elements = Some(integer()?),
            Param::Gamma => {
                c.stabilization = match value.trim() {
                    "off" => Stabilization::Switch("off".into()),
                    _ => Stabilization::On { gamma: number()? },
                }
            }
            Param::Mass => c.mass = value.trim().to_string(),
        }
        Ok(c)
    }

    pub fn resolve(&self) -> Result<Resolved, String> {
        let example: Example = self.example.parse().map_err(|e| format!("{e}"))?;
        let mut d = Discretization::reference(example);
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(format!("eps must be positive, got {eps}"));
            }
            d = d.with_eps(eps);
        }
        if let Some(p) = self.degree {
            if !(1..=MAX_DEGREE).contains(&p) {
                return Err(format!("degree must lie in 1..={MAX_DEGREE}, got {p}"));
            }
            d = d.with_degree(p);
        }
        if let Some(k) = self.continuity {
            if k >= d.degree {
                return Err(format!(
                    "continuity {k} must be below the degree {}",
                    d.degree
                ));
            }
            d.continuity = k;
        }
        if let Some(n) = self.elements {
            if n == 0 {
                return Err("elements must be positive".into());
            }
            d = d.with_elements(n);
        }
        let gamma = match &self.stabilization {
            Stabilization::Switch(s) if s == "off" => None,
            Stabilization::Switch(s) if s == "on" => Some(DEFAULT_GAMMA),
            Stabilization::Switch(s) => {
                return Err(format!(
                    "stabilization must be \"off\", \"on\" or {{ gamma = ... }}, got '{s}'"
                ))
            }
            Stabilization::On { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(format!("gamma must lie in (0, 1], got {gamma}"));
                }
                Some(*gamma)
            }
        };
        d = d.with_gamma(gamma);
        let mass: MassTreatment = self.mass.parse().map_err(|e| format!("{e}"))?;
        let scheme = match self.integrator.scheme.as_deref() {
            None if mass.is_lumped() => Scheme::CentralDifference,
            None => Scheme::Newmark,
            Some("central-difference") => Scheme::CentralDifference,
            Some("newmark") => Scheme::Newmark,
            Some(s) => {
                return Err(format!(
                    "unknown integrator '{s}' (expected central-difference or newmark)"
                ))
            }
        };
        if scheme == Scheme::CentralDifference && !mass.is_lumped() {
            return Err(
                "invalid combination: central-difference requires a lumped mass, got consistent"
                    .into(),
            );
        }
        let it = &self.integrator;
        if !(it.final_time > 0.0 && it.final_time.is_finite()) {
            return Err(format!(
                "final-time must be positive, got {}",
                it.final_time
            ));
        }
        if !(it.safeguard > 0.0 && it.safeguard <= 1.0) {
            return Err(format!(
                "safeguard must lie in (0, 1], got {}",
                it.safeguard
            ));
        }
        if let Some(dt) = it.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(format!("dt must be positive, got {dt}"));
            }
        }
        if it.stride == Some(0) {
            return Err("stride must be positive".into());
        }
        let outputs = self
            .outputs
            .iter()
            .map(|s| s.parse())
            .collect::<Result<BTreeSet<Output>, String>>()?;
        Ok(Resolved {
            discretization: d,
            mass,
            scheme,
            final_time: it.final_time,
            safeguard: it.safeguard,
            dt: it.dt,
            stride: it.stride,
            outputs,
            output_dir: self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed,
        })
    }
}
