//! Univariate and tensor-product B-spline bases on uniform open knot vectors,
//! and local polynomial extraction used by the extension stabilization.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest polynomial degree supported by the spaces in this crate.
pub const MAX_DEGREE: usize = 4;

/// Points are stored as `[x, y]`; univariate spaces ignore the second entry.
pub type Point = [f64; 2];

/// Open, uniform knot vector with uniform interior continuity.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    continuity: usize,
    start: f64,
    end: f64,
    elements: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Uniform open knot vector on `[start, end]` with `elements` elements and
    /// each interior breakpoint repeated `degree - continuity` times.
    pub fn uniform(
        degree: usize,
        continuity: usize,
        start: f64,
        end: f64,
        elements: usize,
    ) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "degree {degree} outside 1..={MAX_DEGREE}"
            )));
        }
        if continuity >= degree {
            return Err(Error::InvalidParameter(format!(
                "continuity {continuity} must be below degree {degree}"
            )));
        }
        if elements == 0 || !(end > start) {
            return Err(Error::InvalidParameter(
                "knot vector needs at least one element of positive length".into(),
            ));
        }
        let mult = degree - continuity;
        let mut knots = vec![start; degree + 1];
        for j in 1..elements {
            let xi = start + (end - start) * j as f64 / elements as f64;
            knots.extend(std::iter::repeat_n(xi, mult));
        }
        knots.extend(std::iter::repeat_n(end, degree + 1));
        Ok(Self {
            degree,
            continuity,
            start,
            end,
            elements,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn continuity(&self) -> usize {
        self.continuity
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_elements(&self) -> usize {
        self.elements
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn multiplicity(&self) -> usize {
        self.degree - self.continuity
    }

    /// Dimension `n_el (p - k) + k + 1`.
    pub fn num_basis(&self) -> usize {
        self.elements * self.multiplicity() + self.continuity + 1
    }

    pub fn element_size(&self) -> f64 {
        (self.end - self.start) / self.elements as f64
    }

    /// Bounds `[x_e, x_{e+1}]` of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let h = self.element_size();
        let lo = self.start + h * e as f64;
        let hi = if e + 1 == self.elements {
            self.end
        } else {
            self.start + h * (e + 1) as f64
        };
        (lo, hi)
    }

    /// Element containing `x`; the right end point belongs to the last element.
    pub fn element_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.start && x <= self.end) {
            return None;
        }
        let e = ((x - self.start) / self.element_size()).floor() as usize;
        Some(e.min(self.elements - 1))
    }

    /// Index of the first of the `p + 1` functions nonzero on element `e`.
    pub fn first_basis(&self, e: usize) -> usize {
        e * self.multiplicity()
    }

    /// Elements on which basis function `i` is not identically zero.
    pub fn support_elements(&self, i: usize) -> std::ops::Range<usize> {
        let m = self.multiplicity();
        // first element e with e*m + p >= i
        let lo = (i.saturating_sub(self.degree)).div_ceil(m);
        let hi = (i / m + 1).min(self.elements);
        lo..hi
    }

    /// Values and derivatives up to order `nders` of the `p + 1` functions
    /// living on element `e`, evaluated at `x` (Cox–de Boor with derivative
    /// recursion). Row `k` of the result holds the `k`-th derivatives.
    pub fn derivatives_on_element(&self, e: usize, x: f64, nders: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let span = p + e * self.multiplicity();
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let nders = nders.min(p);
        let mut ders = vec![vec![0.0; p + 1]; nders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nders {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize {
                    k - 1
                } else {
                    p - r
                };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=nders {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }
}

/// Evaluated basis: global indices of the active functions with their values
/// and (optionally) gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub gradients: Option<Vec<Point>>,
}

/// Tensor-product B-spline space on the unit interval or the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    directions: Vec<KnotVector>,
}

impl SplineSpace {
    pub fn new(directions: Vec<KnotVector>) -> Result<Self> {
        if directions.is_empty() || directions.len() > 2 {
            return Err(Error::InvalidParameter(
                "only univariate and bivariate spaces are supported".into(),
            ));
        }
        let p = directions[0].degree();
        if directions.iter().any(|kv| kv.degree() != p) {
            return Err(Error::InvalidParameter(
                "all directions must share the same degree".into(),
            ));
        }
        Ok(Self { directions })
    }

    /// Uniform space on the unit interval (`dim = 1`) or unit square (`dim = 2`)
    /// with `n` elements per direction.
    pub fn unit(dim: usize, degree: usize, continuity: usize, n: usize) -> Result<Self> {
        let kv = KnotVector::uniform(degree, continuity, 0.0, 1.0, n)?;
        Self::new(vec![kv; dim])
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn degree(&self) -> usize {
        self.directions[0].degree()
    }

    pub fn direction(&self, d: usize) -> &KnotVector {
        &self.directions[d]
    }

    pub fn num_basis(&self) -> usize {
        self.directions.iter().map(KnotVector::num_basis).product()
    }

    pub fn num_elements(&self) -> usize {
        self.directions
            .iter()
            .map(KnotVector::num_elements)
            .product()
    }

    /// Number of functions nonzero on any element, `(p + 1)^d`.
    pub fn local_size(&self) -> usize {
        (self.degree() + 1).pow(self.dim() as u32)
    }

    pub fn element_multi(&self, e: usize) -> [usize; 2] {
        let nx = self.directions[0].num_elements();
        [e % nx, e / nx]
    }

    pub fn element_index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.directions[0].num_elements() * multi[1]
    }

    pub fn basis_multi(&self, i: usize) -> [usize; 2] {
        let nx = self.directions[0].num_basis();
        [i % nx, i / nx]
    }

    pub fn basis_index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.directions[0].num_basis() * multi[1]
    }

    /// Lower and upper corners of element `e`.
    pub fn element_box(&self, e: usize) -> (Point, Point) {
        let m = self.element_multi(e);
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for (d, kv) in self.directions.iter().enumerate() {
            let (a, b) = kv.element_bounds(m[d]);
            lo[d] = a;
            hi[d] = b;
        }
        (lo, hi)
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        let (lo, hi) = self.element_box(e);
        (0..self.dim()).map(|d| hi[d] - lo[d]).product()
    }

    /// Connectivity `I_T`: global indices of the functions nonzero on `e`,
    /// x-index fastest.
    pub fn element_basis(&self, e: usize) -> Vec<usize> {
        let m = self.element_multi(e);
        let p = self.degree();
        let fx = self.directions[0].first_basis(m[0]);
        if self.dim() == 1 {
            return (fx..=fx + p).collect();
        }
        let fy = self.directions[1].first_basis(m[1]);
        let mut out = Vec::with_capacity(self.local_size());
        for b in 0..=p {
            for a in 0..=p {
                out.push(self.basis_index([fx + a, fy + b]));
            }
        }
        out
    }

    /// Elements touched by the support of basis function `i`.
    pub fn support_elements(&self, i: usize) -> Vec<usize> {
        let m = self.basis_multi(i);
        let rx = self.directions[0].support_elements(m[0]);
        if self.dim() == 1 {
            return rx.collect();
        }
        let ry = self.directions[1].support_elements(m[1]);
        let mut out = Vec::new();
        for ey in ry {
            for ex in rx.clone() {
                out.push(self.element_index([ex, ey]));
            }
        }
        out
    }

    pub fn contains(&self, x: Point) -> bool {
        self.directions.iter().enumerate().all(|(d, kv)| {
            let (a, b) = kv.interval();
            x[d] >= a && x[d] <= b
        })
    }

    /// Element containing `x`, if inside the fictitious domain.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let mut m = [0usize; 2];
        for (d, kv) in self.directions.iter().enumerate() {
            m[d] = kv.element_of(x[d])?;
        }
        Some(self.element_index(m))
    }

    /// Evaluate all functions nonzero at `x`; `deriv` is 0 (values) or 1
    /// (values and gradients).
    pub fn eval_basis(&self, x: Point, deriv: usize) -> Result<BasisEval> {
        if deriv > 1 {
            return Err(Error::InvalidParameter(format!(
                "derivative order {deriv} not supported"
            )));
        }
        let e = self.locate(x).ok_or_else(|| Error::OutsideDomain {
            point: x[..self.dim()].to_vec(),
        })?;
        Ok(self.eval_on_element(e, x, deriv == 1))
    }

    /// Evaluate the functions of element `e` at `x` (which should lie in the
    /// closure of `e`).
    pub fn eval_on_element(&self, e: usize, x: Point, gradients: bool) -> BasisEval {
        let m = self.element_multi(e);
        let p = self.degree();
        let nd = usize::from(gradients);
        let dx = self.directions[0].derivatives_on_element(m[0], x[0], nd);
        let indices = self.element_basis(e);
        if self.dim() == 1 {
            let grads = gradients.then(|| dx[1].iter().map(|&g| [g, 0.0]).collect());
            return BasisEval {
                indices,
                values: dx[0].clone(),
                gradients: grads,
            };
        }
        let dy = self.directions[1].derivatives_on_element(m[1], x[1], nd);
        let mut values = Vec::with_capacity(self.local_size());
        let mut grads = gradients.then(|| Vec::with_capacity(self.local_size()));
        for b in 0..=p {
            for a in 0..=p {
                values.push(dx[0][a] * dy[0][b]);
                if let Some(g) = grads.as_mut() {
                    g.push([dx[1][a] * dy[0][b], dx[0][a] * dy[1][b]]);
                }
            }
        }
        BasisEval {
            indices,
            values,
            gradients: grads,
        }
    }
}

/// Chebyshev points of the first kind on `[-1, 1]`.
fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

/// Polynomial piece of a basis function on a source element, stored as a
/// tensor grid of monomial coefficients in the element's local coordinates
/// `xi = (x - center) / half`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolynomial {
    source: usize,
    dim: usize,
    degree: usize,
    center: Point,
    half: Point,
    coefficients: Vec<f64>,
}

impl LocalPolynomial {
    /// Extract the polynomial segment of basis function `i` on element
    /// `source` by interpolation on a tensor grid of Chebyshev points.
    pub fn extract(space: &SplineSpace, i: usize, source: usize) -> Result<Self> {
        let k = space
            .element_basis(source)
            .iter()
            .position(|&j| j == i)
            .ok_or(Error::NotInConnectivity {
                index: i,
                element: source,
            })?;
        Ok(Self::extract_all(space, source).swap_remove(k))
    }

    /// Polynomial segments of every function in `I_T` of element `source`,
    /// in connectivity order.
    pub fn extract_all(space: &SplineSpace, source: usize) -> Vec<Self> {
        let p = space.degree();
        let n = p + 1;
        let dim = space.dim();
        let (lo, hi) = space.element_box(source);
        let mut center = [0.0; 2];
        let mut half = [1.0; 2];
        for d in 0..dim {
            center[d] = 0.5 * (lo[d] + hi[d]);
            half[d] = 0.5 * (hi[d] - lo[d]);
        }
        let nodes = chebyshev_nodes(n);
        let vandermonde = DMatrix::from_fn(n, n, |k, a| nodes[k].powi(a as i32));
        let vinv = vandermonde
            .try_inverse()
            .expect("Chebyshev Vandermonde matrix is nonsingular");
        let local = space.local_size();
        let make = |coefficients: Vec<f64>| Self {
            source,
            dim,
            degree: p,
            center,
            half,
            coefficients,
        };

        if dim == 1 {
            let mut vals = DMatrix::zeros(n, local);
            for (k, &xi) in nodes.iter().enumerate() {
                let eval = space.eval_on_element(source, [center[0] + half[0] * xi, 0.0], false);
                for (f, v) in eval.values.iter().enumerate() {
                    vals[(k, f)] = *v;
                }
            }
            let c = &vinv * vals;
            return (0..local)
                .map(|f| make(c.column(f).iter().copied().collect()))
                .collect();
        }
        let mut grids = vec![DMatrix::zeros(n, n); local];
        for (kx, &xi) in nodes.iter().enumerate() {
            for (ky, &eta) in nodes.iter().enumerate() {
                let x = [center[0] + half[0] * xi, center[1] + half[1] * eta];
                let eval = space.eval_on_element(source, x, false);
                for (f, v) in eval.values.iter().enumerate() {
                    grids[f][(kx, ky)] = *v;
                }
            }
        }
        grids
            .into_iter()
            .map(|grid| {
                let c = &vinv * grid * vinv.transpose();
                let mut out = vec![0.0; n * n];
                for b in 0..n {
                    for a in 0..n {
                        out[a + n * b] = c[(a, b)];
                    }
                }
                make(out)
            })
            .collect()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn powers(&self, d: usize, x: f64) -> ([f64; MAX_DEGREE + 1], [f64; MAX_DEGREE + 1]) {
        let xi = (x - self.center[d]) / self.half[d];
        let mut pw = [0.0; MAX_DEGREE + 1];
        let mut dpw = [0.0; MAX_DEGREE + 1];
        pw[0] = 1.0;
        for a in 1..=self.degree {
            pw[a] = pw[a - 1] * xi;
            dpw[a] = a as f64 * pw[a - 1] / self.half[d];
        }
        (pw, dpw)
    }

    /// Value and gradient of the extended polynomial at `x` (anywhere).
    pub fn eval_with_gradient(&self, x: Point) -> (f64, Point) {
        let n = self.degree + 1;
        let (px, dpx) = self.powers(0, x[0]);
        if self.dim == 1 {
            let mut v = 0.0;
            let mut g = 0.0;
            for a in 0..n {
                v += self.coefficients[a] * px[a];
                g += self.coefficients[a] * dpx[a];
            }
            return (v, [g, 0.0]);
        }
        let (py, dpy) = self.powers(1, x[1]);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for b in 0..n {
            for a in 0..n {
                let c = self.coefficients[a + n * b];
                v += c * px[a] * py[b];
                gx += c * dpx[a] * py[b];
                gy += c * px[a] * dpy[b];
            }
        }
        (v, [gx, gy])
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.eval_with_gradient(x).0
    }
}

/// Value at `x` of the canonical polynomial extension of basis function `i`
/// from element `source`.
pub fn extract_extend(space: &SplineSpace, i: usize, source: usize, x: Point) -> Result<f64> {
    Ok(LocalPolynomial::extract(space, i, source)?.eval(x))
}
