//! Time integration of `M ü + K u = f(t)`: central differences, average
//! acceleration Newmark, and the exact semi-discrete solution in the
//! generalized eigenbasis.

use nalgebra::DVector;

use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::gauss::adaptive;
use crate::sparse::{norm2, CsrMatrix, ProfileCholesky};

/// Growth factor over the initial scale that counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CentralDifference,
    Newmark,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub final_time: f64,
    /// Store every `stride`-th step (the first and last are always stored).
    pub stride: usize,
    pub beta: f64,
    pub gamma: f64,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, final_time: f64) -> Self {
        let mut c = Self {
            scheme,
            dt,
            final_time,
            stride: 1,
            beta: 0.25,
            gamma: 0.5,
        };
        c.stride = (c.num_steps() / 100).max(1);
        c
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    /// `⌈T / Δt⌉`, ignoring roundoff just above an integer.
    pub fn num_steps(&self) -> usize {
        let r = self.final_time / self.dt;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.final_time >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step {} and final time {} must be positive",
                self.dt, self.final_time
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
    pub steps: usize,
}

/// `Δt_c = 2 / √λ_max`.
pub fn critical_timestep(lambda_max: f64) -> Result<f64> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "largest eigenvalue {lambda_max} must be positive"
        )));
    }
    Ok(2.0 / lambda_max.sqrt())
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_dims(n: usize, vs: &[&[f64]]) -> Result<()> {
    for v in vs {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// Explicit central differences with a (block-)diagonal mass.
pub fn central_difference(
    k: &CsrMatrix,
    m: &CsrMatrix,
    load: impl Fn(f64) -> Vec<f64>,
    u0: &[f64],
    v0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let n = k.nrows();
    check_dims(n, &[u0, v0])?;
    let minv = ProfileCholesky::factor(m)?;
    let dt = config.dt;
    let dt2 = dt * dt;
    let steps = config.num_steps();

    let f0 = load(0.0);
    let a0 = minv.solve(&sub(&f0, &k.mul_vec(u0)));
    let mut prev: Vec<f64> = (0..n)
        .map(|i| u0[i] - dt * v0[i] + 0.5 * dt2 * a0[i])
        .collect();
    let mut cur = u0.to_vec();
    let mut scale = norm2(u0)
        .max(dt * norm2(v0))
        .max(dt2 * norm2(&minv.solve(&f0)));

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![cur.clone()],
        velocities: None,
        steps,
    };
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        let fn_ = if step == 1 { f0.clone() } else { load(t) };
        let acc = minv.solve(&sub(&fn_, &k.mul_vec(&cur)));
        let next: Vec<f64> = (0..n)
            .map(|i| 2.0 * cur[i] - prev[i] + dt2 * acc[i])
            .collect();
        if step == 1 {
            scale = scale.max(norm2(&next));
        }
        scale = scale.max(dt2 * norm2(&minv.solve(&fn_)));
        let nn = norm2(&next);
        if !nn.is_finite() || (scale > 0.0 && nn > BLOWUP_FACTOR * scale) {
            return Err(Error::Unstable {
                step,
                time: step as f64 * dt,
            });
        }
        prev = cur;
        cur = next;
        if step % config.stride == 0 || step == steps {
            traj.times.push(step as f64 * dt);
            traj.states.push(cur.clone());
        }
    }
    Ok(traj)
}

/// Newmark average acceleration (`β = 1/4`, `γ = 1/2` by default).
pub fn newmark(
    k: &CsrMatrix,
    m: &CsrMatrix,
    load: impl Fn(f64) -> Vec<f64>,
    u0: &[f64],
    v0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let n = k.nrows();
    check_dims(n, &[u0, v0])?;
    let dt = config.dt;
    let (beta, gamma) = (config.beta, config.gamma);
    let steps = config.num_steps();
    let lhs = ProfileCholesky::factor(&m.add_scaled(k, beta * dt * dt))?;
    let mass = ProfileCholesky::factor(m)?;

    let mut u = u0.to_vec();
    let mut v = v0.to_vec();
    let mut a = mass.solve(&sub(&load(0.0), &k.mul_vec(u0)));
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u.clone()],
        velocities: Some(vec![v.clone()]),
        steps,
    };
    for step in 1..=steps {
        let t = step as f64 * dt;
        let mut pu = u.clone();
        axpy(dt, &v, &mut pu);
        axpy((0.5 - beta) * dt * dt, &a, &mut pu);
        let mut pv = v.clone();
        axpy((1.0 - gamma) * dt, &a, &mut pv);
        let rhs = sub(&load(t), &k.mul_vec(&pu));
        let mut an = lhs.solve(&rhs);
        // one refinement sweep keeps the solve residual at roundoff level
        let lhs_an = m.mul_vec(&an);
        let k_an = k.mul_vec(&an);
        let r: Vec<f64> = (0..n)
            .map(|i| rhs[i] - lhs_an[i] - beta * dt * dt * k_an[i])
            .collect();
        axpy(1.0, &lhs.solve(&r), &mut an);
        axpy(beta * dt * dt, &an, &mut pu);
        axpy(gamma * dt, &an, &mut pv);
        u = pu;
        v = pv;
        a = an;
        if !norm2(&u).is_finite() {
            return Err(Error::Unstable { step, time: t });
        }
        if step % config.stride == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(u.clone());
            traj.velocities.as_mut().unwrap().push(v.clone());
        }
    }
    Ok(traj)
}

/// `sin(x) / x` with a series near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Right-hand sides with closed-form modal solutions.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Constant(Vec<f64>),
    /// `sin(ω t) b`
    Sinusoidal {
        omega: f64,
        b: Vec<f64>,
    },
}

impl Forcing {
    pub fn eval(&self, t: f64, n: usize) -> Vec<f64> {
        match self {
            Forcing::Zero => vec![0.0; n],
            Forcing::Constant(b) => b.clone(),
            Forcing::Sinusoidal { omega, b } => {
                let s = (omega * t).sin();
                b.iter().map(|v| s * v).collect()
            }
        }
    }
}

/// Exact solution of the semi-discrete system expressed in the
/// eigenbasis of `(K, M)`.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSolution<'a> {
    decomposition: &'a EigenDecomposition,
    lambda: Vec<f64>,
    c0: Vec<f64>,
    cv: Vec<f64>,
    forcing: Option<(Option<f64>, Vec<f64>)>,
}

impl<'a> SemiDiscreteSolution<'a> {
    pub fn new(
        decomposition: &'a EigenDecomposition,
        m: &CsrMatrix,
        forcing: &Forcing,
        u0: &[f64],
        v0: &[f64],
    ) -> Result<Self> {
        let n = decomposition.len();
        check_dims(n, &[u0, v0])?;
        let ut = decomposition.vectors.transpose();
        let project = |x: &[f64]| -> Vec<f64> {
            (&ut * DVector::from_vec(m.mul_vec(x)))
                .iter()
                .copied()
                .collect()
        };
        let modal = |b: &[f64]| -> Result<Vec<f64>> {
            check_dims(n, &[b])?;
            Ok((&ut * DVector::from_column_slice(b))
                .iter()
                .copied()
                .collect())
        };
        let lambda: Vec<f64> = decomposition.values.iter().map(|&l| l.max(0.0)).collect();
        let forcing = match forcing {
            Forcing::Zero => None,
            Forcing::Constant(b) => Some((None, modal(b)?)),
            Forcing::Sinusoidal { omega, b } => {
                let w2 = omega * omega;
                for &l in &lambda {
                    if (w2 - l).abs() <= 1e-10 * l.abs().max(w2) {
                        return Err(Error::Resonance {
                            omega_sq: w2,
                            eigenvalue: l,
                        });
                    }
                }
                Some((Some(*omega), modal(b)?))
            }
        };
        Ok(Self {
            decomposition,
            lambda,
            c0: project(u0),
            cv: project(v0),
            forcing,
        })
    }

    /// Modal displacement and velocity coefficients at time `t`.
    pub fn modal_state(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.lambda.len();
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..n {
            let l = self.lambda[i];
            let w = l.sqrt();
            let c = (w * t).cos();
            let ts = t * sinc(w * t);
            x[i] = c * self.c0[i] + ts * self.cv[i];
            v[i] = -l * ts * self.c0[i] + c * self.cv[i];
            match &self.forcing {
                None => {}
                Some((None, g)) => {
                    let half = sinc(0.5 * w * t);
                    x[i] += 0.5 * t * t * half * half * g[i];
                    v[i] += ts * g[i];
                }
                Some((Some(om), g)) => {
                    let den = om * om - l;
                    x[i] += (om * ts - (om * t).sin()) / den * g[i];
                    v[i] += om * (c - (om * t).cos()) / den * g[i];
                }
            }
        }
        (x, v)
    }

    pub fn displacement(&self, t: f64) -> Vec<f64> {
        let (x, _) = self.modal_state(t);
        (&self.decomposition.vectors * DVector::from_vec(x))
            .iter()
            .copied()
            .collect()
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let (_, v) = self.modal_state(t);
        (&self.decomposition.vectors * DVector::from_vec(v))
            .iter()
            .copied()
            .collect()
    }
}

/// Convenience wrapper evaluating the semi-discrete solution once.
pub fn exact_semidiscrete(
    decomposition: &EigenDecomposition,
    m: &CsrMatrix,
    forcing: &Forcing,
    u0: &[f64],
    v0: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    Ok(SemiDiscreteSolution::new(decomposition, m, forcing, u0, v0)?.displacement(t))
}

/// Solution of `x'' + λ x = f(t)`, with the Duhamel integral evaluated by
/// adaptive quadrature.
pub fn scalar_ode_solution(
    lambda: f64,
    u0: f64,
    v0: f64,
    f: impl Fn(f64) -> f64,
    t: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue {lambda} must be positive"
        )));
    }
    let w = lambda.sqrt();
    let kernel = |tau: f64| (t - tau) * sinc(w * (t - tau)) * f(tau);
    let duhamel = adaptive(&kernel, 0.0, t, 1e-12);
    Ok(u0 * (w * t).cos() + t * v0 * sinc(w * t) + duhamel)
}
