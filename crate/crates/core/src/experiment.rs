//! End-to-end pipeline for one discretized example: assembly, mass
//! treatment, spectra, critical step and trajectories with error series.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::assembly::{assemble, lump, LumpingScheme, Operators};
use crate::dynamics::{
    central_difference, critical_timestep, newmark, IntegratorConfig, Scheme, Trajectory,
};
use crate::eigen::{
    max_eigenvalue, normalize_and_pair, solve_gevp, EigenDecomposition, SpectrumPairing,
};
use crate::error::{Error, Result};
use crate::metrics::{ErrorEvaluator, ErrorSeries};
use crate::problems::{exact_modes_1d, make_problem, Example, ManufacturedProblem};
use crate::space::DiscreteSpace;
use crate::sparse::CsrMatrix;
use crate::spline::{LocalPolynomial, Point, SplineSpace};

/// Safety factor applied to the critical step.
pub const SAFEGUARD: f64 = 0.85;

/// Bad-element threshold used when stabilization is on by default.
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Number of low modes paired against a reference spectrum.
pub const SPECTRUM_MODES: usize = 20;

/// Low end of a computed spectrum paired against a reference: the exact
/// eigenvalues in 1D, the consistent-mass spectrum of the same space in 2D.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub decomposition: EigenDecomposition,
    pub reference: Vec<f64>,
    pub exact_reference: bool,
    pub pairing: SpectrumPairing,
}

impl SpectrumReport {
    /// Smallest eigenvalue flagged as spurious.
    pub fn min_spurious(&self) -> Option<f64> {
        self.pairing
            .spurious_indices()
            .into_iter()
            .map(|i| self.decomposition.values[i])
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassTreatment {
    Consistent,
    Lumped(LumpingScheme),
}

impl MassTreatment {
    pub fn is_lumped(self) -> bool {
        matches!(self, Self::Lumped(_))
    }
}

impl fmt::Display for MassTreatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Consistent => f.write_str("consistent"),
            Self::Lumped(LumpingScheme::RowSum) => f.write_str("rowsum"),
            Self::Lumped(LumpingScheme::AbsRowSum) => f.write_str("absrowsum"),
            Self::Lumped(LumpingScheme::BlockDiagonal(b)) => write!(f, "block({b})"),
        }
    }
}

impl FromStr for MassTreatment {
    type Err = Error;

    /// `consistent`, `rowsum`, `absrowsum` or `block(b)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "consistent" => return Ok(Self::Consistent),
            "rowsum" => return Ok(Self::Lumped(LumpingScheme::RowSum)),
            "absrowsum" => return Ok(Self::Lumped(LumpingScheme::AbsRowSum)),
            _ => {}
        }
        t.strip_prefix("block(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|b| b.trim().parse::<usize>().ok())
            .filter(|&b| b > 0)
            .map(|b| Self::Lumped(LumpingScheme::BlockDiagonal(b)))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mass treatment '{s}'")))
    }
}

/// Example, trimming parameter, background mesh and stabilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub example: Example,
    pub eps: f64,
    pub elements: usize,
    pub degree: usize,
    pub continuity: usize,
    /// `Some(γ)` enables polynomial-extension stabilization.
    pub gamma: Option<f64>,
}

impl Discretization {
    pub fn reference(example: Example) -> Self {
        let (elements, degree, continuity) = example.default_discretization();
        Self {
            example,
            eps: example.default_eps(),
            elements,
            degree,
            continuity,
            gamma: None,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_elements(mut self, n: usize) -> Self {
        self.elements = n;
        self
    }

    /// Degree `p` with maximal smoothness `k = p - 1`.
    pub fn with_degree(mut self, p: usize) -> Self {
        self.degree = p;
        self.continuity = p.saturating_sub(1);
        self
    }

    pub fn with_gamma(mut self, gamma: Option<f64>) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Assembled model of one discretization.
#[derive(Debug)]
pub struct Model {
    pub discretization: Discretization,
    pub problem: ManufacturedProblem,
    pub space: DiscreteSpace,
    pub ops: Operators,
    evaluator: OnceLock<ErrorEvaluator>,
}

impl Model {
    pub fn build(d: Discretization) -> Result<Self> {
        let problem = make_problem(d.example, d.eps)?;
        let spline = SplineSpace::unit(d.example.dim(), d.degree, d.continuity, d.elements)?;
        let space = DiscreteSpace::build(
            spline,
            problem.domain,
            d.gamma.unwrap_or(0.0),
            &problem.dirichlet,
        )?;
        let ops = assemble(&space, d.gamma.is_some());
        Ok(Self {
            discretization: d,
            problem,
            space,
            ops,
            evaluator: OnceLock::new(),
        })
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.ops.k
    }

    pub fn mass(&self, treatment: MassTreatment) -> Result<CsrMatrix> {
        match treatment {
            MassTreatment::Consistent => Ok(self.ops.m.clone()),
            MassTreatment::Lumped(s) => {
                Ok(lump(&self.ops.m, s, &self.ops.dofs, self.space.spline())?.matrix)
            }
        }
    }

    pub fn evaluator(&self) -> &ErrorEvaluator {
        self.evaluator
            .get_or_init(|| ErrorEvaluator::new(&self.space, &self.ops))
    }

    /// Spatial load `b` with `f(t) = sin(nπt) b`.
    pub fn load_vector(&self) -> Vec<f64> {
        let p = &self.problem;
        self.ops
            .load(|x| p.forcing_profile(x), |x, n| p.neumann_profile(x, n))
    }

    /// L² projection of the initial velocity (the initial displacement is zero).
    pub fn initial_velocity(&self) -> Result<Vec<f64>> {
        self.ops.l2_project(|x| self.problem.v0(x))
    }

    pub fn lambda_max(&self, mass: &CsrMatrix, seed: u64) -> Result<f64> {
        max_eigenvalue(&self.ops.k, mass, seed)
    }

    /// `0.85 · 2/√λ_max`.
    pub fn timestep(&self, mass: &CsrMatrix, seed: u64) -> Result<f64> {
        Ok(SAFEGUARD * critical_timestep(self.lambda_max(mass, seed)?)?)
    }

    pub fn spectrum(&self, mass: &CsrMatrix) -> Result<EigenDecomposition> {
        solve_gevp(&self.ops.k, mass)
    }

    /// First `count` exact eigenvalues when known (1D only).
    pub fn exact_spectrum(&self, count: usize) -> Option<Vec<f64>> {
        match self.discretization.example {
            Example::Ex1D => exact_modes_1d(self.problem.domain.measure(), count)
                .ok()
                .map(|m| m.eigenvalues()),
            _ => None,
        }
    }

    /// Spectrum of `(K, mass)` with its first `count` modes paired.
    pub fn spectrum_report(&self, mass: &CsrMatrix, count: usize) -> Result<SpectrumReport> {
        let decomposition = self.spectrum(mass)?;
        let count = count.min(decomposition.len());
        let (reference, exact_reference) = match self.exact_spectrum(count) {
            Some(r) => (r, true),
            None if *mass == self.ops.m => (decomposition.values[..count].to_vec(), false),
            None => (self.spectrum(&self.ops.m)?.values[..count].to_vec(), false),
        };
        let pairing = normalize_and_pair(&decomposition.values[..count], &reference);
        Ok(SpectrumReport {
            decomposition,
            reference,
            exact_reference,
            pairing,
        })
    }

    /// Fully discrete solution from zero displacement and the projected
    /// initial velocity.
    pub fn simulate(
        &self,
        mass: &CsrMatrix,
        scheme: Scheme,
        dt: f64,
        final_time: f64,
        stride: Option<usize>,
    ) -> Result<Trajectory> {
        let b = self.load_vector();
        let w = self.problem.omega();
        let load = |t: f64| {
            let s = (w * t).sin();
            b.iter().map(|v| s * v).collect::<Vec<f64>>()
        };
        let u0 = vec![0.0; self.ops.len()];
        let v0 = self.initial_velocity()?;
        let mut cfg = IntegratorConfig::new(scheme, dt, final_time);
        if let Some(s) = stride {
            cfg = cfg.with_stride(s);
        }
        match scheme {
            Scheme::CentralDifference => {
                central_difference(&self.ops.k, mass, load, &u0, &v0, &cfg)
            }
            Scheme::Newmark => newmark(&self.ops.k, mass, load, &u0, &v0, &cfg),
        }
    }

    /// Values at `points` of the discrete function with reduced coefficients
    /// `reduced`; points off the background mesh give an error.
    pub fn point_values(&self, reduced: &[f64], points: &[Point]) -> Result<Vec<f64>> {
        let spline = self.space.spline();
        let mut extensions: HashMap<usize, Vec<LocalPolynomial>> = HashMap::new();
        points
            .iter()
            .map(|&x| {
                let e = spline
                    .locate(x)
                    .ok_or(Error::OutsideDomain { point: x.to_vec() })?;
                let source = self.space.source_element(e, self.ops.stabilized);
                let indices = spline.element_basis(source);
                let values: Vec<f64> = if source == e {
                    spline.eval_on_element(e, x, false).values
                } else {
                    extensions
                        .entry(source)
                        .or_insert_with(|| LocalPolynomial::extract_all(spline, source))
                        .iter()
                        .map(|p| p.eval(x))
                        .collect()
                };
                Ok(indices
                    .iter()
                    .zip(values)
                    .map(|(&i, v)| self.ops.coefficient(reduced, i) * v)
                    .sum())
            })
            .collect()
    }

    /// Background mesh vertices inside the physical domain.
    pub fn nodes(&self) -> Vec<Point> {
        let spline = self.space.spline();
        let n = self.discretization.elements;
        let coord = |k: usize| k as f64 / n as f64;
        let grid: Vec<Point> = if spline.dim() == 1 {
            (0..=n).map(|k| [coord(k), 0.0]).collect()
        } else {
            (0..=n)
                .flat_map(|ky| (0..=n).map(move |kx| [coord(kx), coord(ky)]))
                .collect()
        };
        grid.into_iter()
            .filter(|&x| self.problem.domain.contains(x))
            .collect()
    }

    /// Absolute L² error of every stored state.
    pub fn error_series(&self, trajectory: &Trajectory) -> ErrorSeries {
        let ev = self.evaluator();
        let values = trajectory
            .times
            .iter()
            .zip(&trajectory.states)
            .map(|(&t, u)| ev.error(u, |x| self.problem.u(x, t)))
            .collect();
        ErrorSeries {
            times: trajectory.times.clone(),
            values,
            relative: false,
        }
    }
}
