//! Manufactured solutions `u(x, t) = w(x) sin(nπt)` for the four trimmed
//! examples, their forcing and Neumann data, and the exact 1D spectrum.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{to_global, to_local, Side, TrimmedDomain};
use crate::spline::Point;

/// Oscillatory profile `q(x) = C^{(x/x_r)^a} x sin(π / (x_l - x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QProfile {
    pub x_r: f64,
    pub x_l: f64,
    pub c: f64,
    pub a: i32,
    pub w: f64,
}

/// Arguments closer than this to the pole `x_l` evaluate to zero.
const POLE_GUARD: f64 = 1e-12;

impl QProfile {
    pub fn new(x_r: f64, c: f64, a: i32, w: f64) -> Self {
        Self {
            x_r,
            x_l: 1.0 / w + x_r,
            c,
            a,
            w,
        }
    }

    /// `[q, q', q'']` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        if x >= self.x_l - POLE_GUARD {
            return [0.0; 3];
        }
        let lc = self.c.ln();
        let a = self.a;
        let xr_a = self.x_r.powi(a);
        // E = exp(ln C (x/x_r)^a)
        let e = (lc * x.powi(a) / xr_a).exp();
        let p1 = lc * a as f64 * x.powi(a - 1) / xr_a;
        let p2 = lc * (a * (a - 1)) as f64 * x.powi(a - 2) / xr_a;
        let e1 = e * p1;
        let e2 = e * (p1 * p1 + p2);
        let d = self.x_l - x;
        let phi = PI / d;
        let phi1 = PI / (d * d);
        let phi2 = 2.0 * PI / (d * d * d);
        let (sp, cp) = phi.sin_cos();
        let s = sp;
        let s1 = cp * phi1;
        let s2 = -sp * phi1 * phi1 + cp * phi2;
        [
            e * x * s,
            e1 * x * s + e * s + e * x * s1,
            e2 * x * s + 2.0 * e1 * s + 2.0 * e1 * x * s1 + 2.0 * e * s1 + e * x * s2,
        ]
    }

    /// `[Q, Q', Q'']` for the symmetrised `Q(x) = q(x) + q(-x)`.
    pub fn eval_even(&self, x: f64) -> [f64; 3] {
        let p = self.eval(x);
        let m = self.eval(-x);
        [p[0] + m[0], p[1] - m[1], p[2] + m[2]]
    }
}

/// Spatial profile parameters of each example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileParams {
    Interval {
        q: QProfile,
    },
    /// `ŵ(x̂) = Q(x̂) Q(ŷ)` on `[-s, s]²`, pulled back through
    /// `F(x̂) = R x̂ + τ`.
    RotatedSquare {
        q: QProfile,
        half_side: f64,
        angle: f64,
        center: Point,
    },
    /// `x(x-1) exp(-((|x-½| - r)/σ)²) sin(m |x-½|)`.
    Plate {
        r: f64,
        sigma: f64,
        m: f64,
    },
    /// `x(x-1) exp(-(ρ/σ)²) sin(g(ρ))` with `ρ = |x - c|` and
    /// `g = k exp(-((ρ - 0.9 r)/η)²)`.
    Perforated {
        sigma: f64,
        k: f64,
        eta_width: f64,
        center: Point,
        r: f64,
    },
}

/// Value, gradient and Laplacian of a spatial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValue {
    pub value: f64,
    pub gradient: Point,
    pub laplacian: f64,
}

impl ProfileParams {
    pub fn eval(&self, x: Point) -> ProfileValue {
        match *self {
            Self::Interval { q } => {
                let [v, d1, d2] = q.eval(x[0]);
                ProfileValue {
                    value: v,
                    gradient: [d1, 0.0],
                    laplacian: d2,
                }
            }
            Self::RotatedSquare {
                q, angle, center, ..
            } => {
                let l = to_local(x, angle, center);
                let [a0, a1, a2] = q.eval_even(l[0]);
                let [b0, b1, b2] = q.eval_even(l[1]);
                let g_ref = [a1 * b0, a0 * b1];
                // ∇u = R ∇̂ŵ, Laplacian is rotation invariant
                let (s, c) = angle.sin_cos();
                ProfileValue {
                    value: a0 * b0,
                    gradient: [c * g_ref[0] - s * g_ref[1], s * g_ref[0] + c * g_ref[1]],
                    laplacian: a2 * b0 + a0 * b2,
                }
            }
            Self::Plate { r, sigma, m } => {
                let d = x[0] - 0.5;
                let rho = d.abs();
                let sg = if d < 0.0 { -1.0 } else { 1.0 };
                let z = (rho - r) / sigma;
                let g = (-z * z).exp();
                let g1 = g * (-2.0 * z / sigma);
                let g2 = g * (4.0 * z * z - 2.0) / (sigma * sigma);
                let (sn, cs) = (m * rho).sin_cos();
                let f = g * sn;
                let f1 = g1 * sn + g * m * cs;
                let f2 = g2 * sn + 2.0 * g1 * m * cs - g * m * m * sn;
                let p = x[0] * (x[0] - 1.0);
                let p1 = 2.0 * x[0] - 1.0;
                ProfileValue {
                    value: p * f,
                    gradient: [p1 * f + p * f1 * sg, 0.0],
                    laplacian: 2.0 * f + 2.0 * p1 * f1 * sg + p * f2,
                }
            }
            Self::Perforated {
                sigma,
                k,
                eta_width,
                center,
                r,
            } => {
                let dx = [x[0] - center[0], x[1] - center[1]];
                let rho = dx[0].hypot(dx[1]).max(f64::MIN_POSITIVE);
                let e = (-(rho * rho) / (sigma * sigma)).exp();
                let e1 = e * (-2.0 * rho / (sigma * sigma));
                let e2 = e * (4.0 * rho * rho / sigma.powi(4) - 2.0 / (sigma * sigma));
                let z = (rho - 0.9 * r) / eta_width;
                let g = k * (-z * z).exp();
                let g1 = g * (-2.0 * z / eta_width);
                let g2 = g * (4.0 * z * z - 2.0) / (eta_width * eta_width);
                let (sn, cs) = g.sin_cos();
                let s1 = cs * g1;
                let s2 = -sn * g1 * g1 + cs * g2;
                let rad = e * sn;
                let rad1 = e1 * sn + e * s1;
                let rad2 = e2 * sn + 2.0 * e1 * s1 + e * s2;
                let p = x[0] * (x[0] - 1.0);
                let p1 = 2.0 * x[0] - 1.0;
                let (ux, uy) = (dx[0] / rho, dx[1] / rho);
                ProfileValue {
                    value: p * rad,
                    gradient: [p1 * rad + p * rad1 * ux, p * rad1 * uy],
                    laplacian: 2.0 * rad + 2.0 * p1 * rad1 * ux + p * (rad2 + rad1 / rho),
                }
            }
        }
    }

    pub fn value(&self, x: Point) -> f64 {
        self.eval(x).value
    }

    /// `ŵ(x̂)` in the reference square of the rotated example.
    pub fn reference_value(&self, xhat: Point) -> Option<f64> {
        match *self {
            Self::RotatedSquare { q, .. } => {
                Some(q.eval_even(xhat[0])[0] * q.eval_even(xhat[1])[0])
            }
            _ => None,
        }
    }

    /// `F(x̂)` for the rotated example, identity otherwise.
    pub fn to_physical(&self, xhat: Point) -> Point {
        match *self {
            Self::RotatedSquare { angle, center, .. } => to_global(xhat, angle, center),
            _ => xhat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    Ex1D,
    RotSquare,
    Plate,
    Perforated,
}

impl Example {
    pub const ALL: [Example; 4] = [Self::Ex1D, Self::RotSquare, Self::Plate, Self::Perforated];

    pub fn dim(self) -> usize {
        match self {
            Self::Ex1D => 1,
            _ => 2,
        }
    }

    pub fn default_eps(self) -> f64 {
        match self {
            Self::Plate => 1e-7,
            _ => 1e-6,
        }
    }

    /// `(N, p, k)` of the reference discretization.
    pub fn default_discretization(self) -> (usize, usize, usize) {
        match self {
            Self::Ex1D => (256, 3, 2),
            Self::RotSquare => (128, 3, 2),
            Self::Plate => (48, 2, 1),
            Self::Perforated => (56, 3, 2),
        }
    }

    pub fn domain(self, eps: f64) -> TrimmedDomain {
        match self {
            Self::Ex1D => TrimmedDomain::interval_1d(eps),
            Self::RotSquare => TrimmedDomain::rotated_square(eps),
            Self::Plate => TrimmedDomain::extruded_plate(eps),
            Self::Perforated => TrimmedDomain::perforated_plate(eps),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ex1D => "ex1d",
            Self::RotSquare => "rotsquare",
            Self::Plate => "plate",
            Self::Perforated => "perforated",
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown example '{s}'")))
    }
}

/// Exact solution of `u_tt - Δu = f` with its data.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedProblem {
    pub example: Example,
    pub eps: f64,
    pub domain: TrimmedDomain,
    pub profile: ProfileParams,
    /// Temporal frequency `n` in `sin(nπt)`.
    pub n: u32,
    pub dirichlet: Vec<Side>,
}

pub fn make_problem(example: Example, eps: f64) -> Result<ManufacturedProblem> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let domain = example.domain(eps);
    let (profile, dirichlet) = match domain {
        TrimmedDomain::Interval1D { end } => (
            ProfileParams::Interval {
                q: QProfile::new(end, 8.0, 8, 15.0),
            },
            vec![Side::Left],
        ),
        TrimmedDomain::RotatedSquare {
            half_side,
            angle,
            center,
        } => (
            ProfileParams::RotatedSquare {
                q: QProfile::new(half_side, 8.0, 8, 10.0),
                half_side,
                angle,
                center,
            },
            vec![],
        ),
        TrimmedDomain::ExtrudedPlate { radius, .. } => (
            ProfileParams::Plate {
                r: radius,
                sigma: 0.05,
                m: 100.0,
            },
            vec![Side::Left, Side::Right],
        ),
        TrimmedDomain::PerforatedPlate { radius, center } => (
            ProfileParams::Perforated {
                sigma: 0.5,
                k: 10.0,
                eta_width: 0.005f64.sqrt(),
                center,
                r: radius,
            },
            vec![Side::Left, Side::Right],
        ),
    };
    Ok(ManufacturedProblem {
        example,
        eps,
        domain,
        profile,
        n: 3,
        dirichlet,
    })
}

impl ManufacturedProblem {
    /// Angular frequency `nπ`.
    pub fn omega(&self) -> f64 {
        self.n as f64 * PI
    }

    pub fn profile_value(&self, x: Point) -> f64 {
        self.profile.value(x)
    }

    pub fn u(&self, x: Point, t: f64) -> f64 {
        self.profile.value(x) * (self.omega() * t).sin()
    }

    pub fn u_t(&self, x: Point, t: f64) -> f64 {
        let w = self.omega();
        self.profile.value(x) * w * (w * t).cos()
    }

    /// Spatial factor `g` of `f = sin(nπt) g`.
    pub fn forcing_profile(&self, x: Point) -> f64 {
        let p = self.profile.eval(x);
        -(self.omega().powi(2) * p.value + p.laplacian)
    }

    /// Spatial factor of `h = sin(nπt) ∂ₙw`.
    pub fn neumann_profile(&self, x: Point, normal: Point) -> f64 {
        let g = self.profile.eval(x).gradient;
        g[0] * normal[0] + g[1] * normal[1]
    }

    pub fn forcing(&self, x: Point, t: f64) -> f64 {
        (self.omega() * t).sin() * self.forcing_profile(x)
    }

    pub fn neumann(&self, x: Point, normal: Point, t: f64) -> f64 {
        (self.omega() * t).sin() * self.neumann_profile(x, normal)
    }

    pub fn u0(&self, _x: Point) -> f64 {
        0.0
    }

    pub fn v0(&self, x: Point) -> f64 {
        self.omega() * self.profile.value(x)
    }
}

/// Exact spectrum of `-u'' = λu` on `(0, L)`, Dirichlet left, Neumann right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactModes1D {
    pub length: f64,
    pub count: usize,
}

pub fn exact_modes_1d(length: f64, count: usize) -> Result<ExactModes1D> {
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "length must be positive, got {length}"
        )));
    }
    Ok(ExactModes1D { length, count })
}

impl ExactModes1D {
    fn wavenumber(&self, j: usize) -> f64 {
        (2 * j + 1) as f64 * PI / (2.0 * self.length)
    }

    /// `λ_{j+1}` (zero-based `j`).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.wavenumber(j).powi(2)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.eigenvalue(j)).collect()
    }

    /// L²-normalised eigenfunction `√(2/L) sin(k_j x)`.
    pub fn eigenfunction(&self, j: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (self.wavenumber(j) * x).sin()
    }

    pub fn check(&self, j: usize) -> Result<()> {
        if j >= self.count {
            return Err(Error::ModeOutOfRange {
                requested: j,
                available: self.count,
            });
        }
        Ok(())
    }
}
