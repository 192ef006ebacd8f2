//! Generalized symmetric-definite eigenproblems `K u = λ M u`: dense
//! decompositions, the largest eigenvalue by accelerated power iteration,
//! pairing of computed and exact spectra, and eigenbasis projections.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{dot, CsrMatrix, ProfileCholesky};

/// Eigenvalues ascending with M-orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ω_i = √λ_i` (zero for roundoff-negative eigenvalues).
    pub fn frequencies(&self) -> Vec<f64> {
        self.values.iter().map(|&l| l.max(0.0).sqrt()).collect()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }

    /// `max |UᵀKU − D|` and `max |UᵀMU − I|`.
    pub fn residuals(&self, k: &CsrMatrix, m: &CsrMatrix) -> (f64, f64) {
        let ku = sparse_times_dense(k, &self.vectors);
        let mu = sparse_times_dense(m, &self.vectors);
        let utku = self.vectors.transpose() * ku;
        let utmu = self.vectors.transpose() * mu;
        let n = self.len();
        let mut rk: f64 = 0.0;
        let mut rm: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dk = if i == j { self.values[i] } else { 0.0 };
                let dm = if i == j { 1.0 } else { 0.0 };
                rk = rk.max((utku[(i, j)] - dk).abs());
                rm = rm.max((utmu[(i, j)] - dm).abs());
            }
        }
        (rk, rm)
    }
}

fn sparse_times_dense(a: &CsrMatrix, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for (i, j, v) in a.iter() {
        for c in 0..b.ncols() {
            out[(i, c)] += v * b[(j, c)];
        }
    }
    out
}

/// Solve `A x = λ B x` for SPD `B` through the Cholesky factor of the
/// Jacobi-scaled `B`. Returns ascending values and B-orthonormal vectors.
fn reduce_and_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut s = DVector::zeros(n);
    for i in 0..n {
        let d = b[(i, i)];
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i, value: d });
        }
        s[i] = 1.0 / d.sqrt();
    }
    let bs = DMatrix::from_fn(n, n, |i, j| s[i] * b[(i, j)] * s[j]);
    let as_ = DMatrix::from_fn(n, n, |i, j| s[i] * a[(i, j)] * s[j]);
    let chol = bs.cholesky().ok_or(Error::NotPositiveDefinite {
        pivot: 0,
        value: 0.0,
    })?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let y = l
        .solve_lower_triangular(&as_)
        .ok_or(Error::NotPositiveDefinite {
            pivot: 0,
            value: 0.0,
        })?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::NotPositiveDefinite {
            pivot: 0,
            value: 0.0,
        })?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let x = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or(Error::NotPositiveDefinite {
            pivot: 0,
            value: 0.0,
        })?;
    let x = DMatrix::from_fn(n, n, |r, c| s[r] * x[(r, c)]);
    Ok((values, x))
}

/// Full generalized decomposition of `(K, M)`.
///
/// The mass-reduced problem resolves large eigenvalues well but loses
/// absolute accuracy `~ u·λ_max` on small ones when `M` is badly
/// conditioned. When `K` is positive definite the inverted pencil `(M, K)`
/// is solved as well and the lower half of the spectrum (on a log scale) is
/// taken from it.
pub fn solve_gevp(k: &CsrMatrix, m: &CsrMatrix) -> Result<EigenDecomposition> {
    if k.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: k.nrows(),
        });
    }
    let n = k.nrows();
    let kd = k.to_dense();
    let md = m.to_dense();
    let (mvals, mvecs) = reduce_and_solve(&kd, &md)?;
    if n < 2 || mvals[0] <= 0.0 {
        return Ok(EigenDecomposition {
            values: mvals,
            vectors: mvecs,
        });
    }
    let Ok((mu, kvecs)) = reduce_and_solve(&md, &kd) else {
        return Ok(EigenDecomposition {
            values: mvals,
            vectors: mvecs,
        });
    };
    // μ ascending ⇔ λ = 1/μ descending
    let lam_low: Vec<f64> = mu.iter().rev().map(|&x| 1.0 / x).collect();
    let split = (mvals[0].max(lam_low[0]) * mvals[n - 1]).sqrt();
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &lam) in lam_low.iter().enumerate() {
        if lam >= split {
            break;
        }
        let src = n - 1 - c;
        // K-orthonormal columns: rescale to unit M-norm
        let scale = mu[src].sqrt();
        for r in 0..n {
            vectors[(r, c)] = kvecs[(r, src)] / scale;
        }
        values.push(lam);
    }
    let low = values.len();
    for c in low..n {
        values.push(mvals[c]);
        vectors.set_column(c, &mvecs.column(c));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Largest eigenvalue of `(K, M)`.
///
/// Power iteration on `M⁻¹K` accelerated by Lanczos in the `M` inner
/// product (full reorthogonalization, explicit restarts from the top Ritz
/// vector). Stops when the Ritz residual `‖Kx − θMx‖_{M⁻¹}` drops below
/// `1e-8·θ` for an `M`-unit `x`.
pub fn max_eigenvalue(k: &CsrMatrix, m: &CsrMatrix, seed: u64) -> Result<f64> {
    const TOL: f64 = 1e-8;
    const MAX_PRODUCTS: usize = 100_000;
    const MAX_BASIS: usize = 400;
    let n = k.nrows();
    if n == 0 {
        return Err(Error::InvalidParameter("empty system".into()));
    }
    let chol = ProfileCholesky::factor(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // highly oscillatory start vector with a small random perturbation
    let mut x: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } + 0.1 * rng.gen_range(-1.0..1.0))
        .collect();
    let mut products = 0;
    let basis_cap = MAX_BASIS.min(n);
    while products < MAX_PRODUCTS {
        let nx = dot(&x, &m.mul_vec(&x)).sqrt();
        if nx == 0.0 || !nx.is_finite() {
            return Err(Error::NoConvergence {
                iterations: products,
            });
        }
        let mut q: Vec<Vec<f64>> = vec![x.iter().map(|v| v / nx).collect()];
        let mut mq: Vec<Vec<f64>> = vec![m.mul_vec(&q[0])];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let j = q.len() - 1;
            let kq = k.mul_vec(&q[j]);
            products += 1;
            let mut w = chol.solve(&kq);
            alpha.push(dot(&q[j], &kq));
            // two passes of Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for (qi, mqi) in q.iter().zip(&mq) {
                    let c = dot(mqi, &w);
                    w.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
                }
            }
            let mw = m.mul_vec(&w);
            let b = dot(&w, &mw).max(0.0).sqrt();
            let size = alpha.len();
            let check = size == basis_cap || size % 5 == 0 || b == 0.0 || products >= MAX_PRODUCTS;
            if check {
                let t = DMatrix::from_fn(size, size, |r, c| {
                    if r == c {
                        alpha[r]
                    } else if r + 1 == c {
                        beta[r]
                    } else if c + 1 == r {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let top = (0..size)
                    .max_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]))
                    .unwrap();
                let theta = eig.eigenvalues[top];
                let s_last = eig.eigenvectors[(size - 1, top)];
                if (b * s_last).abs() <= TOL * theta.abs() || b <= f64::EPSILON * theta.abs() {
                    return Ok(theta);
                }
                if size == basis_cap || products >= MAX_PRODUCTS {
                    // restart from the current Ritz vector
                    x = vec![0.0; n];
                    for (i, qi) in q.iter().enumerate() {
                        let c = eig.eigenvectors[(i, top)];
                        x.iter_mut().zip(qi).for_each(|(a, v)| *a += c * v);
                    }
                    break;
                }
            }
            beta.push(b);
            q.push(w.iter().map(|v| v / b).collect());
            mq.push(mw.iter().map(|v| v / b).collect());
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_PRODUCTS,
    })
}

/// Relative eigenvalue error above which a computed eigenvalue is flagged.
pub const SPURIOUS_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPairing {
    /// `λ_i^h / λ_i` by index.
    pub ratios: Vec<f64>,
    /// Index of the closest exact eigenvalue on a log scale.
    pub partner: Vec<usize>,
    pub spurious: Vec<bool>,
}

impl SpectrumPairing {
    pub fn spurious_indices(&self) -> Vec<usize> {
        (0..self.spurious.len())
            .filter(|&i| self.spurious[i])
            .collect()
    }
}

pub fn normalize_and_pair(computed: &[f64], exact: &[f64]) -> SpectrumPairing {
    let ratios: Vec<f64> = computed.iter().zip(exact).map(|(a, b)| a / b).collect();
    let log_gap = |a: f64, b: f64| {
        if a > 0.0 && b > 0.0 {
            (a / b).ln().abs()
        } else {
            f64::INFINITY
        }
    };
    let partner: Vec<usize> = computed
        .iter()
        .map(|&l| {
            let mut best = 0;
            for (j, &e) in exact.iter().enumerate() {
                if log_gap(l, e) < log_gap(l, exact[best]) {
                    best = j;
                }
            }
            best
        })
        .collect();
    let rel = |i: usize| ((computed[i] - exact[partner[i]]) / exact[partner[i]]).abs();
    let mut spurious: Vec<bool> = (0..computed.len())
        .map(|i| !(rel(i) <= SPURIOUS_THRESHOLD))
        .collect();
    for j in 0..exact.len() {
        let mut claim: Vec<usize> = (0..computed.len())
            .filter(|&i| partner[i] == j && !spurious[i])
            .collect();
        if claim.len() >= 2 {
            claim.sort_by(|&a, &b| rel(a).total_cmp(&rel(b)).then(a.cmp(&b)));
            for &i in &claim[1..] {
                spurious[i] = true;
            }
        }
    }
    SpectrumPairing {
        ratios,
        partner,
        spurious,
    }
}

/// Coefficients `c = UᵀMx` of `x` in the eigenbasis.
pub fn eigen_project(
    x: &[f64],
    decomposition: &EigenDecomposition,
    m: &CsrMatrix,
) -> Result<Vec<f64>> {
    let n = decomposition.vectors.nrows();
    if x.len() != n || m.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let mx = DVector::from_vec(m.mul_vec(x));
    Ok((decomposition.vectors.transpose() * mx)
        .iter()
        .copied()
        .collect())
}
