//! Stiffness and mass assembly on trimmed spaces, with and without
//! polynomial-extension stabilization, load vectors, L² projection and mass
//! lumping.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{boundary_rule_filtered, interior_rule, BoundaryTag, QuadratureRule};
use crate::space::DiscreteSpace;
use crate::sparse::{CsrMatrix, ProfileCholesky};
use crate::spline::{LocalPolynomial, Point, SplineSpace};

/// Quadrature points of one element with the values and gradients of the
/// functions representing the discrete solution there.
#[derive(Debug, Clone)]
pub struct ElementQuadrature {
    pub element: usize,
    pub indices: Vec<usize>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Option<Vec<Point>>,
    /// `values[q * indices.len() + a]`
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
}

impl ElementQuadrature {
    pub fn local_size(&self) -> usize {
        self.indices.len()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// Value of `Σ c_i φ_i` at point `q`; `coef` maps global basis indices.
    pub fn interpolate(&self, q: usize, coef: impl Fn(usize) -> f64) -> f64 {
        let n = self.indices.len();
        self.indices
            .iter()
            .enumerate()
            .map(|(a, &i)| coef(i) * self.values[q * n + a])
            .sum()
    }
}

/// Evaluate the element's (possibly extended) functions on a quadrature rule.
fn evaluate_rule(
    space: &DiscreteSpace,
    e: usize,
    stabilized: bool,
    rule: QuadratureRule,
    extensions: Option<&[LocalPolynomial]>,
) -> ElementQuadrature {
    let spline = space.spline();
    let source = space.source_element(e, stabilized);
    let indices = spline.element_basis(source);
    let n = indices.len();
    let mut values = Vec::with_capacity(rule.len() * n);
    let mut gradients = Vec::with_capacity(rule.len() * n);
    for &x in &rule.points {
        match extensions {
            Some(polys) => {
                for poly in polys {
                    let (v, g) = poly.eval_with_gradient(x);
                    values.push(v);
                    gradients.push(g);
                }
            }
            None => {
                let eval = spline.eval_on_element(e, x, true);
                values.extend(eval.values);
                gradients.extend(eval.gradients.unwrap());
            }
        }
    }
    ElementQuadrature {
        element: e,
        indices,
        points: rule.points,
        weights: rule.weights,
        normals: rule.normals,
        values,
        gradients,
    }
}

/// Interior and Neumann-boundary quadrature data for every active element.
#[derive(Debug, Clone)]
pub struct QuadratureCache {
    pub stabilized: bool,
    pub order: usize,
    pub interior: Vec<ElementQuadrature>,
    pub neumann: Vec<ElementQuadrature>,
}

impl QuadratureCache {
    pub fn new(space: &DiscreteSpace, stabilized: bool, order: usize) -> Self {
        let domain = *space.domain();
        let dirichlet = space.dirichlet_sides().to_vec();
        let is_neumann = move |tag: &BoundaryTag| match tag {
            BoundaryTag::Trim => true,
            BoundaryTag::Fictitious(s) => !dirichlet.contains(s),
        };
        let data: Vec<(ElementQuadrature, Option<ElementQuadrature>)> = space
            .active_elements()
            .par_iter()
            .map(|&e| {
                let bx = space.element_box(e);
                let ext = (stabilized && !space.is_good(e)).then(|| {
                    LocalPolynomial::extract_all(space.spline(), space.source_element(e, true))
                });
                let inner = evaluate_rule(
                    space,
                    e,
                    stabilized,
                    interior_rule(&domain, bx, order),
                    ext.as_deref(),
                );
                let brule = boundary_rule_filtered(&domain, bx, order, &is_neumann);
                let bnd = (!brule.is_empty())
                    .then(|| evaluate_rule(space, e, stabilized, brule, ext.as_deref()));
                (inner, bnd)
            })
            .collect();
        let mut interior = Vec::with_capacity(data.len());
        let mut neumann = Vec::new();
        for (i, b) in data {
            interior.push(i);
            neumann.extend(b);
        }
        Self {
            stabilized,
            order,
            interior,
            neumann,
        }
    }
}

/// Extra polynomial exactness of the rule used for linear forms and errors.
pub const FINE_ORDER_BOOST: usize = 6;

/// Assembled system on the reduced unknowns together with the operators
/// before Dirichlet reduction.
#[derive(Debug, Clone)]
pub struct Operators {
    pub stabilized: bool,
    /// Global basis indices of the reduced unknowns, ascending.
    pub dofs: Vec<usize>,
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    /// Global basis indices before Dirichlet reduction (`I`, or `I^L` when
    /// stabilized).
    pub support: Vec<usize>,
    pub k_full: CsrMatrix,
    pub m_full: CsrMatrix,
    pub cache: QuadratureCache,
    position: Vec<usize>,
    space: Arc<DiscreteSpace>,
    fine: OnceLock<Arc<QuadratureCache>>,
}

/// Consistent `(K, M)` of the plain trimmed space.
pub fn assemble_consistent(space: &DiscreteSpace) -> Operators {
    assemble(space, false)
}

/// Stabilized `(K̃, M̃)` with the small functions removed.
pub fn assemble_stabilized(space: &DiscreteSpace) -> Operators {
    assemble(space, true)
}

pub fn assemble(space: &DiscreteSpace, stabilized: bool) -> Operators {
    let cache = QuadratureCache::new(space, stabilized, space.order());
    let support: Vec<usize> = if stabilized {
        space.large_basis()
    } else {
        space.active_basis().to_vec()
    };
    let mut local_pos = vec![usize::MAX; space.spline().num_basis()];
    for (k, &i) in support.iter().enumerate() {
        local_pos[i] = k;
    }
    let locals: Vec<(Vec<f64>, Vec<f64>)> = cache
        .interior
        .par_iter()
        .map(|eq| {
            let n = eq.local_size();
            let mut kl = vec![0.0; n * n];
            let mut ml = vec![0.0; n * n];
            for (q, &w) in eq.weights.iter().enumerate() {
                let v = &eq.values[q * n..(q + 1) * n];
                let g = &eq.gradients[q * n..(q + 1) * n];
                for a in 0..n {
                    for b in 0..n {
                        kl[a * n + b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                        ml[a * n + b] += w * v[a] * v[b];
                    }
                }
            }
            (kl, ml)
        })
        .collect();
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for (eq, (kl, ml)) in cache.interior.iter().zip(&locals) {
        let n = eq.local_size();
        for a in 0..n {
            let ia = local_pos[eq.indices[a]];
            for b in 0..n {
                let ib = local_pos[eq.indices[b]];
                // symmetrise the local contribution exactly
                let kv = 0.5 * (kl[a * n + b] + kl[b * n + a]);
                let mv = 0.5 * (ml[a * n + b] + ml[b * n + a]);
                kt.push((ia, ib, kv));
                mt.push((ia, ib, mv));
            }
        }
    }
    let k_full = CsrMatrix::from_triplets(support.len(), kt);
    let m_full = CsrMatrix::from_triplets(support.len(), mt);
    let dofs = space.free_dofs(stabilized);
    let keep: Vec<usize> = dofs.iter().map(|&i| local_pos[i]).collect();
    let k = k_full.submatrix(&keep);
    let m = m_full.submatrix(&keep);
    let mut position = vec![usize::MAX; space.spline().num_basis()];
    for (k, &i) in dofs.iter().enumerate() {
        position[i] = k;
    }
    Operators {
        stabilized,
        dofs,
        k,
        m,
        support,
        k_full,
        m_full,
        cache,
        position,
        space: Arc::new(space.clone()),
        fine: OnceLock::new(),
    }
}

impl Operators {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Reduced position of global basis index `i`.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.position.get(i).copied().filter(|&k| k != usize::MAX)
    }

    /// Coefficient of global index `i` in a reduced vector (zero for removed
    /// or Dirichlet functions).
    pub fn coefficient(&self, reduced: &[f64], i: usize) -> f64 {
        self.position(i).map_or(0.0, |k| reduced[k])
    }

    /// Quadrature of order `2p + 2 + FINE_ORDER_BOOST` on the same functions,
    /// built on first use; resolves oscillatory data in linear forms.
    pub fn fine_cache(&self) -> Arc<QuadratureCache> {
        self.fine
            .get_or_init(|| {
                Arc::new(QuadratureCache::new(
                    &self.space,
                    self.stabilized,
                    self.space.order() + FINE_ORDER_BOOST,
                ))
            })
            .clone()
    }

    /// `F_i = (f, φ_i)_Ω + (h, φ_i)_{∂Ω_N}` on the reduced unknowns with the
    /// fine rule; `h` receives the point and the outward normal.
    pub fn load(&self, f: impl Fn(Point) -> f64, h: impl Fn(Point, Point) -> f64) -> Vec<f64> {
        self.linear_form(&self.fine_cache(), f, h)
    }

    /// `(g, φ_i)_Ω` on the reduced unknowns with the assembly rule, so that
    /// projection onto the space is exact for its members.
    pub fn moments(&self, g: impl Fn(Point) -> f64) -> Vec<f64> {
        self.linear_form(&self.cache, g, |_, _| 0.0)
    }

    fn linear_form(
        &self,
        cache: &QuadratureCache,
        f: impl Fn(Point) -> f64,
        h: impl Fn(Point, Point) -> f64,
    ) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for eq in &cache.interior {
            self.accumulate(eq, &mut out, |q| f(eq.points[q]));
        }
        for eq in &cache.neumann {
            let normals = eq.normals.as_ref().unwrap();
            self.accumulate(eq, &mut out, |q| h(eq.points[q], normals[q]));
        }
        out
    }

    fn accumulate(&self, eq: &ElementQuadrature, out: &mut [f64], field: impl Fn(usize) -> f64) {
        let n = eq.local_size();
        for (q, &w) in eq.weights.iter().enumerate() {
            let fq = w * field(q);
            if fq == 0.0 {
                continue;
            }
            for (a, &i) in eq.indices.iter().enumerate() {
                if let Some(k) = self.position(i) {
                    out[k] += fq * eq.values[q * n + a];
                }
            }
        }
    }

    /// L² projection with the consistent (or stabilized consistent) mass.
    pub fn l2_project(&self, field: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
        let rhs = self.moments(field);
        let chol = ProfileCholesky::factor(&self.m)?;
        let mut x = chol.solve(&rhs);
        // iterative refinement against the ill-conditioned mass
        for _ in 0..2 {
            let r: Vec<f64> = self
                .m
                .mul_vec(&x)
                .iter()
                .zip(&rhs)
                .map(|(a, b)| b - a)
                .collect();
            let dx = chol.solve(&r);
            x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
        }
        Ok(x)
    }

    /// Dump `K` and `M` (reduced) in coordinate format.
    pub fn write_coordinate(
        &self,
        k: impl std::io::Write,
        m: impl std::io::Write,
    ) -> std::io::Result<()> {
        self.k.write_coordinate(k)?;
        self.m.write_coordinate(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LumpingScheme {
    RowSum,
    AbsRowSum,
    /// Diagonal blocks of `b` consecutive unknowns along x, rescaled to
    /// reproduce the row sums.
    BlockDiagonal(usize),
}

/// Result of lumping: the lumped matrix and the starts of blocks that
/// needed the additive fallback instead of a symmetric diagonal rescale.
#[derive(Debug, Clone)]
pub struct LumpedMass {
    pub matrix: CsrMatrix,
    pub additive_blocks: Vec<usize>,
}

/// Lump `m`, whose unknowns are the global basis functions `dofs` of
/// `spline` (used only to group blocks).
pub fn lump(
    m: &CsrMatrix,
    scheme: LumpingScheme,
    dofs: &[usize],
    spline: &SplineSpace,
) -> Result<LumpedMass> {
    match scheme {
        LumpingScheme::RowSum => {
            let d = m.row_sums();
            if let Some((i, &v)) = d.iter().enumerate().find(|(_, &v)| v <= 0.0) {
                return Err(Error::NonPositiveLumpedEntry { dof: i, value: v });
            }
            Ok(LumpedMass {
                matrix: CsrMatrix::from_diagonal(&d),
                additive_blocks: vec![],
            })
        }
        LumpingScheme::AbsRowSum => Ok(LumpedMass {
            matrix: CsrMatrix::from_diagonal(&m.abs_row_sums()),
            additive_blocks: vec![],
        }),
        LumpingScheme::BlockDiagonal(b) => block_lump(m, b, dofs, spline),
    }
}

/// Lumping of a square matrix given directly as diagonal schemes only.
pub fn lump_diagonal(m: &CsrMatrix, scheme: LumpingScheme) -> Result<CsrMatrix> {
    match scheme {
        LumpingScheme::BlockDiagonal(_) => Err(Error::InvalidParameter(
            "block lumping needs the basis layout".into(),
        )),
        s => Ok(lump(m, s, &[], &SplineSpace::unit(1, 1, 0, 1)?)?.matrix),
    }
}

/// Contiguous blocks of at most `b` unknowns that are neighbours along x.
pub fn block_partition(
    b: usize,
    dofs: &[usize],
    spline: &SplineSpace,
) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=dofs.len() {
        let split = k == dofs.len() || k - start == b || {
            let (p, c) = (spline.basis_multi(dofs[k - 1]), spline.basis_multi(dofs[k]));
            c[1] != p[1] || c[0] != p[0] + 1
        };
        if split {
            out.push(start..k);
            start = k;
        }
    }
    out
}

fn block_lump(m: &CsrMatrix, b: usize, dofs: &[usize], spline: &SplineSpace) -> Result<LumpedMass> {
    if b == 0 {
        return Err(Error::InvalidParameter(
            "block size must be positive".into(),
        ));
    }
    let rows = m.row_sums();
    let mut triplets = Vec::new();
    let mut additive = Vec::new();
    for range in block_partition(b, dofs, spline) {
        let s = range.start;
        let n = range.len();
        let block = DMatrix::from_fn(n, n, |i, j| m.get(s + i, s + j));
        let r = &rows[range.clone()];
        let scaled = match rescale(&block, r) {
            Some(d) => DMatrix::from_fn(n, n, |i, j| d[i] * block[(i, j)] * d[j]),
            None => {
                let mut a = block.clone();
                for i in 0..n {
                    let si: f64 = block.row(i).sum();
                    a[(i, i)] += r[i] - si;
                }
                if a.clone().cholesky().is_none() {
                    return Err(Error::BlockRescale { start: s });
                }
                additive.push(s);
                a
            }
        };
        for i in 0..n {
            for j in 0..n {
                let v = 0.5 * (scaled[(i, j)] + scaled[(j, i)]);
                if v != 0.0 {
                    triplets.push((s + i, s + j, v));
                }
            }
        }
    }
    Ok(LumpedMass {
        matrix: CsrMatrix::from_triplets(m.nrows(), triplets),
        additive_blocks: additive,
    })
}

/// Positive `d` with `d_i (B d)_i = r_i`, by a symmetric Sinkhorn iteration.
fn rescale(block: &DMatrix<f64>, r: &[f64]) -> Option<Vec<f64>> {
    let n = r.len();
    if r.iter().any(|&v| v <= 0.0) || block.iter().any(|&v| v < 0.0) {
        return None;
    }
    let mut d = vec![1.0; n];
    for _ in 0..10_000 {
        let bd: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| block[(i, j)] * d[j]).sum())
            .collect();
        let err = (0..n)
            .map(|i| (d[i] * bd[i] - r[i]).abs() / r[i])
            .fold(0.0, f64::max);
        if err < 1e-14 {
            return Some(d);
        }
        for i in 0..n {
            if bd[i] <= 0.0 {
                return None;
            }
            d[i] = (d[i] * r[i] / bd[i]).sqrt();
        }
    }
    None
}
