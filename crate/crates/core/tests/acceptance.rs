//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with the regular `cargo test`. The binary exits nonzero when any
//! criterion fails and `TRIMLUMP_ACCEPTANCE_STRICT` is set; otherwise the
//! verdicts are reported and the run continues.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trimlump::assembly::{lump, LumpingScheme};
use trimlump::dynamics::{
    central_difference, critical_timestep, newmark, scalar_ode_solution, Forcing, IntegratorConfig,
    Scheme, SemiDiscreteSolution,
};
use trimlump::eigen::solve_gevp;
use trimlump::experiment::{Discretization, MassTreatment, Model, DEFAULT_GAMMA, SPECTRUM_MODES};
use trimlump::metrics::{
    modal_bound_elliptic, modal_bound_hyperbolic, ModalContext, SeparableData,
};
use trimlump::problems::{exact_modes_1d, Example};
use trimlump::sparse::CsrMatrix;
use trimlump::Error;

const ROWSUM: MassTreatment = MassTreatment::Lumped(LumpingScheme::RowSum);
const BLOCK: MassTreatment = MassTreatment::Lumped(LumpingScheme::BlockDiagonal(4));
const SEED: u64 = 2024;

// criterion 1
const SPECTRUM_TOL: f64 = 1e-3;
const SPECTRUM_MODES_CHECKED: usize = 10;
// criterion 2
const SPURIOUS_DROP: f64 = 1e2;
// criterion 3
const SLOPE_TOL: f64 = 0.25;
// criterion 4
const LUMPED_VARIATION: f64 = 0.05;
const CONSISTENT_GROWTH: f64 = 10.0;
// criterion 5
const ORDER_RATIO: f64 = 4.0;
const ORDER_RATIO_TOL: f64 = 0.5;
const STABLE_STEPS: usize = 10_000;
// criterion 6
const ISOLATION_TOL: f64 = 1e-2;
const ORACLE_TOL: f64 = 1e-8;
// criteria 7, 8, 11
const FAILURE_FACTOR: f64 = 10.0;
const CURE_FACTOR: f64 = 3.0;
const RATIO_BAND: (f64, f64) = (0.9, 1.2);
const FAILURE_FACTOR_2D: f64 = 5.0;
// criterion 9
const LUMP_SUM_TOL: f64 = 1e-12;
const MEASURE_TOL: f64 = 1e-8;
// criterion 12
const BLOCK_STEP_FACTOR: f64 = 2.0;

const FINAL_TIME: f64 = 3.0;
const FINAL_TIME_2D: f64 = 1.5;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

type Check = fn() -> Result<Verdict, Error>;

fn model(d: Discretization) -> Result<Model, Error> {
    Model::build(d)
}

fn ex1d(eps: f64, p: usize, gamma: Option<f64>) -> Discretization {
    Discretization::reference(Example::Ex1D)
        .with_eps(eps)
        .with_degree(p)
        .with_gamma(gamma)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn check_untrimmed_spectrum() -> Result<Verdict, Error> {
    // ε = 0.25 extends the interval to the whole background [0, 1]
    let d = ex1d(0.25, 3, None);
    let m = model(d)?;
    let consistent = m.spectrum(&m.ops.m)?;
    let exact = exact_modes_1d(1.0, SPECTRUM_MODES_CHECKED)?.eigenvalues();
    let worst = exact
        .iter()
        .zip(&consistent.values)
        .map(|(e, c)| ((c - e) / e).abs())
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        worst <= SPECTRUM_TOL,
        format!("max relative error of first 10 = {worst:.2e} (tol {SPECTRUM_TOL:.0e})"),
    ))
}

fn spurious_between(p: usize, eps: f64) -> Result<(Vec<f64>, Option<f64>, f64, f64), Error> {
    let m = model(ex1d(eps, p, None))?;
    let rep = m.spectrum_report(&m.mass(ROWSUM)?, SPECTRUM_MODES)?;
    let (l1, l2) = (rep.reference[0], rep.reference[1]);
    let between: Vec<f64> = rep
        .pairing
        .spurious_indices()
        .into_iter()
        .map(|i| rep.decomposition.values[i])
        .filter(|&v| v > l1 && v < l2)
        .collect();
    Ok((between, rep.min_spurious(), l1, l2))
}

fn check_spurious_mode() -> Result<Verdict, Error> {
    let (between, flagged3, l1, l2) = spurious_between(3, 1e-6)?;
    let (_, flagged4, _, _) = spurious_between(4, 1e-6)?;
    let drop = match (flagged3, flagged4) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    Ok(Verdict::new(
        between.len() == 1 && drop >= SPURIOUS_DROP,
        format!(
            "p=3: {} flagged in ({l1:.4}, {l2:.4}) {:?}; p=4 flagged {:.3e}, drop {drop:.2e} (need >= {SPURIOUS_DROP:.0e})",
            between.len(),
            between,
            flagged4.unwrap_or(f64::NAN)
        ),
    ))
}

fn check_decay_law() -> Result<Verdict, Error> {
    let eps = [1e-4, 1e-5, 1e-6];
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [3usize, 4] {
        let mut values = Vec::new();
        for &e in &eps {
            let (_, flagged, _, _) = spurious_between(p, e)?;
            values.push(flagged.unwrap_or(f64::NAN));
        }
        let s = slope(&eps, &values);
        let target = p as f64 - 2.0;
        pass &= (s - target).abs() <= SLOPE_TOL;
        detail.push(format!("p={p} slope {s:.3} (target {target})"));
    }
    Ok(Verdict::new(pass, detail.join("; ")))
}

fn check_lumped_invariance() -> Result<Verdict, Error> {
    let mut lumped = Vec::new();
    for eps in [1e-2, 1e-6, 1e-10] {
        let m = model(ex1d(eps, 3, None))?;
        lumped.push(m.lambda_max(&m.mass(ROWSUM)?, SEED)?);
    }
    let (lo, hi) = lumped
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let variation = (hi - lo) / lo;
    let mut consistent = Vec::new();
    for eps in [1e-2, 1e-8] {
        let m = model(ex1d(eps, 3, None))?;
        consistent.push(m.lambda_max(&m.ops.m, SEED)?);
    }
    let growth = consistent[1] / consistent[0];
    Ok(Verdict::new(
        variation < LUMPED_VARIATION && growth >= CONSISTENT_GROWTH,
        format!("lumped variation {variation:.2e} (< {LUMPED_VARIATION}); consistent growth {growth:.2e} (>= {CONSISTENT_GROWTH})"),
    ))
}

fn scalar_error(scheme: Scheme, dt: f64) -> Result<f64, Error> {
    let (lambda, u0, v0, w) = (4.0, 1.0, 0.5, 1.3);
    let k = CsrMatrix::from_diagonal(&[lambda]);
    let m = CsrMatrix::from_diagonal(&[1.0]);
    let cfg = IntegratorConfig::new(scheme, dt, 2.0).with_stride(1);
    let load = |t: f64| vec![(w * t).sin()];
    let tr = match scheme {
        Scheme::CentralDifference => central_difference(&k, &m, load, &[u0], &[v0], &cfg)?,
        Scheme::Newmark => newmark(&k, &m, load, &[u0], &[v0], &cfg)?,
    };
    let mut worst: f64 = 0.0;
    for (t, u) in tr.times.iter().zip(&tr.states) {
        let exact = scalar_ode_solution(lambda, u0, v0, |s| (w * s).sin(), *t)?;
        worst = worst.max((u[0] - exact).abs());
    }
    Ok(worst)
}

fn check_time_integration() -> Result<Verdict, Error> {
    let mut pass = true;
    let mut detail = Vec::new();
    for scheme in [Scheme::CentralDifference, Scheme::Newmark] {
        let ratio = scalar_error(scheme, 0.02)? / scalar_error(scheme, 0.01)?;
        pass &= (ratio - ORDER_RATIO).abs() <= ORDER_RATIO_TOL;
        detail.push(format!("{scheme:?} ratio {ratio:.3}"));
    }
    let m = model(Discretization::reference(Example::Ex1D).with_elements(64))?;
    let l = m.mass(ROWSUM)?;
    let dtc = critical_timestep(m.lambda_max(&l, SEED)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let u0: Vec<f64> = (0..m.ops.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v0 = vec![0.0; u0.len()];
    let zero = |_t: f64| vec![0.0; u0.len()];
    let run = |factor: f64| {
        let dt = factor * dtc;
        let cfg = IntegratorConfig::new(Scheme::CentralDifference, dt, STABLE_STEPS as f64 * dt)
            .with_stride(100);
        central_difference(&m.ops.k, &l, zero, &u0, &v0, &cfg)
    };
    // a stable step keeps every modal amplitude bounded, hence the mass norm
    let mass_norm = |u: &[f64]| {
        u.iter()
            .zip(l.diagonal())
            .map(|(x, d)| d * x * x)
            .sum::<f64>()
            .sqrt()
    };
    let scale = mass_norm(&u0);
    match run(0.85) {
        Ok(tr) => {
            let peak = tr
                .states
                .iter()
                .map(|u| mass_norm(u))
                .fold(0.0f64, f64::max);
            let bounded = tr.steps == STABLE_STEPS && peak <= 10.0 * scale;
            pass &= bounded;
            detail.push(format!(
                "0.85·Δt_c: {} steps, peak/initial mass norm {:.2}",
                tr.steps,
                peak / scale
            ));
        }
        Err(e) => {
            pass = false;
            detail.push(format!("0.85·Δt_c failed: {e}"));
        }
    }
    match run(1.5) {
        Err(Error::Unstable { step, .. }) => {
            detail.push(format!("1.5·Δt_c diverged at step {step}"))
        }
        other => {
            pass = false;
            detail.push(format!(
                "1.5·Δt_c not detected: {:?}",
                other.map(|t| t.steps)
            ));
        }
    }
    Ok(Verdict::new(pass, detail.join("; ")))
}

fn random_oracle_gap(n: usize, seed: u64) -> Result<f64, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k = CsrMatrix::from_dense(&(&b * b.transpose() + DMatrix::identity(n, n)));
    let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
    let m = CsrMatrix::from_dense(&(&c * c.transpose() + DMatrix::identity(n, n)));
    let load: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let omega = 0.77;
    let dec = solve_gevp(&k, &m)?;
    let sol = SemiDiscreteSolution::new(
        &dec,
        &m,
        &Forcing::Sinusoidal {
            omega,
            b: load.clone(),
        },
        &u0,
        &v0,
    )?;
    let ut = dec.vectors.transpose();
    let mu0 = &ut * nalgebra::DVector::from_vec(m.mul_vec(&u0));
    let mv0 = &ut * nalgebra::DVector::from_vec(m.mul_vec(&v0));
    let g = &ut * nalgebra::DVector::from_vec(load);
    let mut worst: f64 = 0.0;
    for t in [0.3, 1.0, 2.7] {
        let mut modal = nalgebra::DVector::zeros(n);
        for i in 0..n {
            modal[i] = scalar_ode_solution(
                dec.values[i],
                mu0[i],
                mv0[i],
                |s| (omega * s).sin() * g[i],
                t,
            )?;
        }
        let oracle = &dec.vectors * modal;
        let closed = sol.displacement(t);
        let scale = oracle.amax().max(1.0);
        for i in 0..n {
            worst = worst.max((closed[i] - oracle[i]).abs() / scale);
        }
    }
    Ok(worst)
}

fn check_isolation() -> Result<Verdict, Error> {
    let m = model(ex1d(1e-6, 3, None))?;
    let l = m.mass(ROWSUM)?;
    let dt = m.timestep(&l, SEED)?;
    let tr = m.simulate(&l, Scheme::CentralDifference, dt, FINAL_TIME, None)?;
    let dec = m.spectrum(&l)?;
    let forcing = Forcing::Sinusoidal {
        omega: m.problem.omega(),
        b: m.load_vector(),
    };
    let u0 = vec![0.0; m.ops.len()];
    let sol = SemiDiscreteSolution::new(&dec, &l, &forcing, &u0, &m.initial_velocity()?)?;
    let (mut diff, mut peak, mut per_time) = (0.0f64, 0.0f64, 0.0f64);
    for (t, u) in tr.times.iter().zip(&tr.states) {
        let exact = sol.displacement(*t);
        let d = u
            .iter()
            .zip(&exact)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let s = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        diff = diff.max(d);
        peak = peak.max(s);
        if s > 0.0 {
            per_time = per_time.max(d / s);
        }
    }
    let rel = diff / peak;
    let mut oracle: f64 = 0.0;
    for (k, n) in (1..=10).enumerate() {
        oracle = oracle.max(random_oracle_gap(n, SEED + k as u64)?);
    }
    Ok(Verdict::new(
        rel <= ISOLATION_TOL && oracle <= ORACLE_TOL,
        format!(
            "peak-normalized coefficient difference {rel:.2e} (tol {ISOLATION_TOL:.0e}; per-time max {per_time:.2e}); closed form vs convolution quadrature {oracle:.2e} (tol {ORACLE_TOL:.0e})"
        ),
    ))
}

struct Runs {
    lumped: Vec<f64>,
    consistent: Vec<f64>,
    times: Vec<f64>,
}

impl Runs {
    fn max_ratio(&self) -> f64 {
        max(&self.lumped) / max(&self.consistent)
    }

    /// Largest pointwise ratio over output times after the initial state.
    fn worst_ratio(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(self.lumped.iter().zip(&self.consistent))
            .skip(1)
            .map(|(&t, (l, c))| (l / c, t))
            .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn paired_runs(m: &Model, reference: Option<&Model>, final_time: f64) -> Result<Runs, Error> {
    let l = m.mass(ROWSUM)?;
    let dt = m.timestep(&l, SEED)?;
    let lumped =
        m.error_series(&m.simulate(&l, Scheme::CentralDifference, dt, final_time, None)?);
    let r = reference.unwrap_or(m);
    let consistent =
        r.error_series(&r.simulate(&r.ops.m, Scheme::Newmark, dt, final_time, None)?);
    Ok(Runs {
        lumped: lumped.values,
        consistent: consistent.values,
        times: lumped.times,
    })
}

fn check_failure() -> Result<Verdict, Error> {
    let m = model(ex1d(1e-6, 3, None))?;
    let runs = paired_runs(&m, None, FINAL_TIME)?;
    let ratio = runs.max_ratio();
    Ok(Verdict::new(
        ratio >= FAILURE_FACTOR,
        format!(
            "max L2 error rowsum {:.3e} vs consistent {:.3e}, ratio {ratio:.2} (need >= {FAILURE_FACTOR})",
            max(&runs.lumped),
            max(&runs.consistent)
        ),
    ))
}

fn check_cure() -> Result<Verdict, Error> {
    let mut pass = true;
    let mut detail = Vec::new();
    let m = model(ex1d(1e-6, 3, Some(DEFAULT_GAMMA)))?;
    let runs = paired_runs(&m, None, FINAL_TIME)?;
    let (worst, at) = runs.worst_ratio();
    pass &= worst <= CURE_FACTOR;
    detail.push(format!(
        "p=3 max L2 {:.3e} vs {:.3e}, worst pointwise ratio {worst:.2} at t={at:.3}",
        max(&runs.lumped),
        max(&runs.consistent)
    ));
    for p in [2usize, 3, 4] {
        let m = model(ex1d(1e-6, p, Some(DEFAULT_GAMMA)))?;
        let rep = m.spectrum_report(&m.mass(ROWSUM)?, SPECTRUM_MODES)?;
        let flags = rep.pairing.spurious_indices().len();
        let (lo, hi) = rep
            .pairing
            .ratios
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        pass &= flags == 0 && lo >= RATIO_BAND.0 && hi <= RATIO_BAND.1;
        detail.push(format!("p={p}: {flags} flags, ratios [{lo:.3}, {hi:.3}]"));
    }
    Ok(Verdict::new(pass, detail.join("; ")))
}

fn check_structure() -> Result<Verdict, Error> {
    let mut pass = true;
    let mut detail = Vec::new();
    for ex in Example::ALL {
        let d = Discretization::reference(ex);
        let d = if ex.dim() == 2 {
            d.with_elements(32)
        } else {
            d
        };
        let plain = model(d)?;
        let stab = model(d.with_gamma(Some(DEFAULT_GAMMA)))?;
        let (pu, ps) = (&plain.ops, &stab.ops);
        let k_ok = ps
            .k_full
            .pattern(&ps.support)
            .is_subset(&pu.k_full.pattern(&pu.support));
        let m_ok = ps
            .m_full
            .pattern(&ps.support)
            .is_subset(&pu.m_full.pattern(&pu.support));
        let measure = plain.problem.domain.measure();
        let mut sums: f64 = 0.0;
        let mut area: f64 = 0.0;
        for (ops, space) in [(pu, &plain.space), (ps, &stab.space)] {
            area = area.max((ops.m_full.total() - measure).abs() / measure);
            for s in [LumpingScheme::RowSum, LumpingScheme::BlockDiagonal(4)] {
                let l = lump(&ops.m, s, &ops.dofs, space.spline())?.matrix;
                sums = sums.max((l.total() - ops.m.total()).abs() / ops.m.total());
            }
        }
        pass &= k_ok && m_ok && sums <= LUMP_SUM_TOL && area <= MEASURE_TOL;
        detail.push(format!(
            "{ex}: K {} M {} lump {sums:.1e} area {area:.1e}",
            if k_ok { "⊆" } else { "⊄" },
            if m_ok { "⊆" } else { "⊄" }
        ));
    }
    Ok(Verdict::new(pass, detail.join("; ")))
}

fn check_modal_bounds() -> Result<Verdict, Error> {
    let m = model(ex1d(1e-6, 3, None))?;
    let dec = m.spectrum(&m.ops.m)?;
    let exact = exact_modes_1d(m.problem.domain.measure(), 11)?;
    let ctx = ModalContext {
        ops: &m.ops,
        evaluator: m.evaluator(),
        decomposition: &dec,
        exact: &exact,
    };
    let p = &m.problem;
    let w = p.omega();
    let u0 = |x| p.u0(x);
    let v0 = |x| p.v0(x);
    let temporal = |t: f64| (w * t).sin();
    let spatial = |x| p.forcing_profile(x);
    let data = SeparableData {
        u0: &u0,
        v0: &v0,
        temporal: &temporal,
        spatial: &spatial,
    };
    let (mut checked, mut violations, mut tightest) = (0, 0, 0.0f64);
    for j in 0..10 {
        for t in [0.5, 1.0, 2.0] {
            let b = modal_bound_hyperbolic(&ctx, j, &data, t)?;
            checked += 1;
            violations += usize::from(!b.holds());
            tightest = tightest.max(b.measured / b.bound);
        }
        let b = modal_bound_elliptic(&ctx, j, &spatial)?;
        checked += 1;
        violations += usize::from(!b.holds());
        tightest = tightest.max(b.measured / b.bound);
    }
    Ok(Verdict::new(
        violations == 0,
        format!(
            "{violations} violations in {checked} checks (largest measured/bound {tightest:.3})"
        ),
    ))
}

fn check_rotated_square() -> Result<Verdict, Error> {
    let d = Discretization::reference(Example::RotSquare).with_elements(64);
    let plain = model(d)?;
    let stab = model(d.with_gamma(Some(DEFAULT_GAMMA)))?;
    let base = paired_runs(&plain, None, FINAL_TIME_2D)?;
    let cured = paired_runs(&stab, Some(&plain), FINAL_TIME_2D)?;
    let (r1, r2) = (base.max_ratio(), cured.max_ratio());
    Ok(Verdict::new(
        r1 >= FAILURE_FACTOR_2D && r2 <= CURE_FACTOR,
        format!(
            "consistent {:.3e}; rowsum {:.3e} ratio {r1:.2} (need >= {FAILURE_FACTOR_2D}); stabilized {:.3e} ratio {r2:.2} (need <= {CURE_FACTOR})",
            max(&base.consistent),
            max(&base.lumped),
            max(&cured.lumped)
        ),
    ))
}

fn check_block_lumping() -> Result<Verdict, Error> {
    let mut pass = true;
    let mut detail = Vec::new();
    for gamma in [None, Some(DEFAULT_GAMMA)] {
        let m = model(
            Discretization::reference(Example::Perforated)
                .with_elements(32)
                .with_gamma(gamma),
        )?;
        let steps = |t: MassTreatment| -> Result<usize, Error> {
            let dt = m.timestep(&m.mass(t)?, SEED)?;
            Ok(IntegratorConfig::new(Scheme::CentralDifference, dt, FINAL_TIME).num_steps())
        };
        let (rs, bl) = (steps(ROWSUM)?, steps(BLOCK)?);
        pass &= bl as f64 > BLOCK_STEP_FACTOR * rs as f64;
        let label = gamma.map_or("plain".to_string(), |g| format!("γ={g}"));
        detail.push(format!("{label}: block(4) {bl} vs rowsum {rs} steps"));
    }
    Ok(Verdict::new(pass, detail.join("; ")))
}

fn main() {
    let checks: [(&str, Check, Option<Duration>); 12] = [
        (
            "1D spectrum fidelity",
            check_untrimmed_spectrum,
            Some(Duration::from_secs(10)),
        ),
        (
            "spurious low mode",
            check_spurious_mode,
            Some(Duration::from_secs(30)),
        ),
        ("decay law", check_decay_law, None),
        ("lumped λ_max invariance", check_lumped_invariance, None),
        ("time-integration soundness", check_time_integration, None),
        ("lumping-not-time-stepping isolation", check_isolation, None),
        (
            "failure reproduction",
            check_failure,
            Some(Duration::from_secs(120)),
        ),
        ("stabilization cure", check_cure, None),
        ("structural lemmas", check_structure, None),
        ("modal bounds", check_modal_bounds, None),
        (
            "2D desk-scale reproduction",
            check_rotated_square,
            Some(Duration::from_secs(900)),
        ),
        ("block-lumping step count", check_block_lumping, None),
    ];
    let mut failed = Vec::new();
    for (k, (name, check, budget)) in checks.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed < b);
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = budget.map_or(String::new(), |b| format!(" / budget {}s", b.as_secs()));
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.2}s{budget}]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    println!(
        "acceptance: {}/12 criteria passed; failed {:?}",
        12 - failed.len(),
        failed
    );
    if !failed.is_empty() && std::env::var_os("TRIMLUMP_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
