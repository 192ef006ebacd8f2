//! L² errors on the trimmed domain and the modal error bounds for the
//! consistent mass in 1D.

use std::io::Write;
use std::sync::Arc;

use crate::assembly::{Operators, QuadratureCache, FINE_ORDER_BOOST};
use crate::dynamics::scalar_ode_solution;
use crate::eigen::EigenDecomposition;
use crate::error::Result;
use crate::gauss::adaptive;
use crate::problems::ExactModes1D;
use crate::space::DiscreteSpace;
use crate::sparse::fmt_g17;
use crate::spline::Point;

/// Extra polynomial exactness of the error quadrature over assembly.
pub const ERROR_ORDER_BOOST: usize = FINE_ORDER_BOOST;

/// Relative slack on the modal bound inequalities.
pub const BOUND_SLACK: f64 = 1e-8;

/// Cut-cell quadrature for `‖u^h - u‖_{L²(Ω)}` on a fixed discretization.
#[derive(Debug, Clone)]
pub struct ErrorEvaluator {
    cache: Arc<QuadratureCache>,
    position: Vec<usize>,
}

impl ErrorEvaluator {
    pub fn new(space: &DiscreteSpace, ops: &Operators) -> Self {
        let cache = ops.fine_cache();
        let position = (0..space.spline().num_basis())
            .map(|i| ops.position(i).unwrap_or(usize::MAX))
            .collect();
        Self { cache, position }
    }

    fn coefficient(&self, reduced: &[f64], i: usize) -> f64 {
        match self.position[i] {
            usize::MAX => 0.0,
            k => reduced[k],
        }
    }

    fn integrate(&self, reduced: Option<&[f64]>, exact: impl Fn(Point) -> f64) -> f64 {
        let mut s = 0.0;
        for eq in &self.cache.interior {
            for (q, &w) in eq.weights.iter().enumerate() {
                let uh = reduced.map_or(0.0, |r| eq.interpolate(q, |i| self.coefficient(r, i)));
                let d = uh - exact(eq.points[q]);
                s += w * d * d;
            }
        }
        s.sqrt()
    }

    /// `‖u^h - u‖` for reduced coefficients `reduced`.
    pub fn error(&self, reduced: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
        self.integrate(Some(reduced), exact)
    }

    pub fn norm(&self, exact: impl Fn(Point) -> f64) -> f64 {
        self.integrate(None, exact)
    }

    /// Error divided by `‖u‖`, falling back to the absolute error when the
    /// exact field vanishes.
    pub fn relative_error(&self, reduced: &[f64], exact: impl Fn(Point) -> f64 + Copy) -> f64 {
        let e = self.error(reduced, exact);
        let n = self.norm(exact);
        if n > 0.0 {
            e / n
        } else {
            e
        }
    }
}

/// One-shot `‖u^h - u‖_{L²(Ω)}`.
pub fn l2_error(
    space: &DiscreteSpace,
    ops: &Operators,
    reduced: &[f64],
    exact: impl Fn(Point) -> f64,
) -> f64 {
    ErrorEvaluator::new(space, ops).error(reduced, exact)
}

/// L² error sampled over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub relative: bool,
}

impl ErrorSeries {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,l2_error")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt_g17(*t), fmt_g17(*v))?;
        }
        Ok(())
    }
}

/// Bound value and the measured modal error it controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalBound {
    pub bound: f64,
    pub measured: f64,
}

impl ModalBound {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound * (1.0 + BOUND_SLACK)
    }
}

/// Discrete and exact eigenpairs of one mode, sign-aligned.
struct ModePair {
    lambda: f64,
    lambda_h: f64,
    vector: Vec<f64>,
    eigenfunction_error: f64,
}

/// Everything the modal bounds need about a 1D consistent discretization.
pub struct ModalContext<'a> {
    pub ops: &'a Operators,
    pub evaluator: &'a ErrorEvaluator,
    pub decomposition: &'a EigenDecomposition,
    pub exact: &'a ExactModes1D,
}

impl ModalContext<'_> {
    fn mode(&self, j: usize) -> Result<ModePair> {
        self.exact.check(j)?;
        if j >= self.decomposition.len() {
            return Err(crate::Error::ModeOutOfRange {
                requested: j,
                available: self.decomposition.len(),
            });
        }
        let uj = |x: Point| self.exact.eigenfunction(j, x[0]);
        let mut vector = self.decomposition.vector(j);
        let overlap: f64 = crate::sparse::dot(&vector, &self.ops.moments(uj));
        if overlap < 0.0 {
            vector.iter_mut().for_each(|v| *v = -*v);
        }
        let eigenfunction_error = self.evaluator.error(&vector, uj);
        Ok(ModePair {
            lambda: self.exact.eigenvalue(j),
            lambda_h: self.decomposition.values[j],
            vector,
            eigenfunction_error,
        })
    }

    /// `(g, u_j)` and `(g, u_j^h)`, both with the error quadrature so that
    /// Cauchy-Schwarz holds for the discrete inner product as well.
    fn coefficients(&self, pair: &ModePair, j: usize, g: &impl Fn(Point) -> f64) -> (f64, f64) {
        let exact = self
            .evaluator
            .inner_with_exact(g, |x| self.exact.eigenfunction(j, x[0]));
        let discrete = self.evaluator.inner_with_discrete(g, &pair.vector);
        (exact, discrete)
    }
}

impl ErrorEvaluator {
    /// `(f, g)_{L²(Ω)}` with the error quadrature.
    fn inner_with_exact(&self, f: impl Fn(Point) -> f64, g: impl Fn(Point) -> f64) -> f64 {
        self.cache
            .interior
            .iter()
            .flat_map(|eq| eq.points.iter().zip(&eq.weights))
            .map(|(&x, &w)| w * f(x) * g(x))
            .sum()
    }

    /// `(f, u^h)_{L²(Ω)}` for reduced coefficients `reduced`.
    fn inner_with_discrete(&self, f: impl Fn(Point) -> f64, reduced: &[f64]) -> f64 {
        let mut s = 0.0;
        for eq in &self.cache.interior {
            for (q, &w) in eq.weights.iter().enumerate() {
                s += w * f(eq.points[q]) * eq.interpolate(q, |i| self.coefficient(reduced, i));
            }
        }
        s
    }

    /// `‖a φ_h - b φ‖` where `φ_h` has reduced coefficients `vector`.
    fn scaled_difference(
        &self,
        vector: &[f64],
        a: f64,
        b: f64,
        exact: impl Fn(Point) -> f64,
    ) -> f64 {
        let scaled: Vec<f64> = vector.iter().map(|v| a * v).collect();
        self.error(&scaled, |x| b * exact(x))
    }
}

/// Data of a separable problem `f(x, t) = s(t) g(x)` with `h = 0`.
pub struct SeparableData<'a> {
    pub u0: &'a dyn Fn(Point) -> f64,
    pub v0: &'a dyn Fn(Point) -> f64,
    pub temporal: &'a dyn Fn(f64) -> f64,
    pub spatial: &'a dyn Fn(Point) -> f64,
}

/// `max_{τ∈[0,t]} |sin(a τ) - sin(b τ)|` by dense sampling and local
/// golden-section refinement.
fn max_sine_gap(a: f64, b: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let f = |tau: f64| ((a * tau).sin() - (b * tau).sin()).abs();
    let n = ((a.max(b) * t * 40.0).ceil() as usize).clamp(2000, 2_000_000);
    let h = t / n as f64;
    let mut best = (f(t), n);
    for k in 0..n {
        let v = f(k as f64 * h);
        if v > best.0 {
            best = (v, k);
        }
    }
    let (mut lo, mut hi) = ((best.1 as f64 - 1.0) * h, (best.1 as f64 + 1.0) * h);
    lo = lo.max(0.0);
    hi = hi.min(t);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.0.max(f(0.5 * (lo + hi)))
}

/// `∫_0^t |s(τ)| dτ` over 20 panels per unit time, each integrated by
/// adaptive Gauss so kinks of `|s|` are resolved.
pub fn time_integral_abs(s: impl Fn(f64) -> f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let panels = ((20.0 * t).ceil() as usize).max(1);
    let h = t / panels as f64;
    let f = |tau: f64| s(tau).abs();
    (0..panels)
        .map(|k| adaptive(&f, k as f64 * h, (k + 1) as f64 * h, 1e-14))
        .sum()
}

/// Hyperbolic modal bound for mode `j` (zero-based) at time `t`, for the
/// consistent mass and a separable forcing.
pub fn modal_bound_hyperbolic(
    ctx: &ModalContext<'_>,
    j: usize,
    data: &SeparableData<'_>,
    t: f64,
) -> Result<ModalBound> {
    let pair = ctx.mode(j)?;
    let norm_u0 = ctx.evaluator.norm(data.u0);
    let norm_v0 = ctx.evaluator.norm(data.v0);
    let norm_g = ctx.evaluator.norm(data.spatial);
    let f_path = norm_g * time_integral_abs(data.temporal, t);
    let (w, wh) = (pair.lambda.sqrt(), pair.lambda_h.sqrt());
    let de = 2.0 * pair.eigenfunction_error;
    let dw = (wh - w) / w;
    let bound = norm_u0 * (de + ((wh * t).cos() - (w * t).cos()).abs())
        + norm_v0 / w * (dw + de + ((wh * t).sin() - (w * t).sin()).abs())
        + f_path / w * (dw + de + max_sine_gap(wh, w, t));

    let (u0j, u0h) = ctx.coefficients(&pair, j, &data.u0);
    let (v0j, v0h) = ctx.coefficients(&pair, j, &data.v0);
    let (gj, gh) = ctx.coefficients(&pair, j, &data.spatial);
    let d = scalar_ode_solution(pair.lambda, u0j, v0j, |tau| gj * (data.temporal)(tau), t)?;
    let dh = scalar_ode_solution(pair.lambda_h, u0h, v0h, |tau| gh * (data.temporal)(tau), t)?;
    let measured = ctx
        .evaluator
        .scaled_difference(&pair.vector, dh, d, |x| ctx.exact.eigenfunction(j, x[0]));
    Ok(ModalBound { bound, measured })
}

/// Elliptic modal bound for `-Δu = f` and mode `j` (zero-based).
pub fn modal_bound_elliptic(
    ctx: &ModalContext<'_>,
    j: usize,
    f: &dyn Fn(Point) -> f64,
) -> Result<ModalBound> {
    let pair = ctx.mode(j)?;
    let norm_f = ctx.evaluator.norm(f);
    let bound = norm_f / pair.lambda
        * ((pair.lambda_h - pair.lambda) / pair.lambda + 2.0 * pair.eigenfunction_error);
    let (fj, fh) = ctx.coefficients(&pair, j, &f);
    let measured =
        ctx.evaluator
            .scaled_difference(&pair.vector, fh / pair.lambda_h, fj / pair.lambda, |x| {
                ctx.exact.eigenfunction(j, x[0])
            });
    Ok(ModalBound { bound, measured })
}
