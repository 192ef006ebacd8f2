//! Compressed sparse row storage for symmetric matrices (both triangles
//! stored) and a profile Cholesky factorization.

use std::collections::BTreeSet;
use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sum duplicate triplets; entries with equal coordinates are added in
    /// the order given, so the result is deterministic.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_triplets(
            d.len(),
            d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), t)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.vals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(i, j, _)| i == j)
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// Principal submatrix on the sorted index list `keep`.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut t = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if map[j] != usize::MAX {
                    t.push((k, map[j], x));
                }
            }
        }
        Self::from_triplets(keep.len(), t)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, other: &Self, a: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut t: Vec<_> = self.iter().collect();
        t.extend(other.iter().map(|(i, j, v)| (i, j, a * v)));
        Self::from_triplets(self.n, t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            a[(i, j)] = v;
        }
        a
    }

    /// Positions of nonzero entries, relabelled through `labels`.
    pub fn pattern(&self, labels: &[usize]) -> BTreeSet<(usize, usize)> {
        self.iter()
            .filter(|&(_, _, v)| v != 0.0)
            .map(|(i, j, _)| (labels[i], labels[j]))
            .collect()
    }

    /// Coordinate text format: one `row col value` line per entry, 1-based.
    pub fn write_coordinate(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{} {} {}", i + 1, j + 1, fmt_g17(v))?;
        }
        Ok(())
    }
}

/// Shortest round-trip representation, equivalent to `%.17g` for parsing.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{:.16e}", v);
    // normalise to C-style exponent and strip redundant zeros
    let (mant, exp) = s.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let digits = (16 - exp).max(0) as usize;
        let f = format!("{:.*}", digits, v);
        if f.contains('.') {
            f.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            f
        }
    } else {
        let m = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{}e{}{:02}", m, if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

/// Cholesky factor of a symmetric positive definite matrix stored in its
/// lower envelope, after symmetric diagonal scaling.
#[derive(Debug, Clone)]
pub struct ProfileCholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
    scale: Vec<f64>,
}

impl ProfileCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let diag = a.diagonal();
        let mut scale = vec![0.0; n];
        for i in 0..n {
            if diag[i] <= 0.0 || !diag[i].is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: i,
                    value: diag[i],
                });
            }
            scale[i] = 1.0 / diag[i].sqrt();
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).0.first().copied().unwrap_or(i).min(i))
            .collect();
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    values[start[i] + j - first[i]] = x * scale[i] * scale[j];
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let ri = start[i] - fi;
                let rj = start[j] - fj;
                let mut s = values[ri + j];
                for k in k0..j {
                    s -= values[ri + k] * values[rj + k];
                }
                if j < i {
                    values[ri + j] = s / values[rj + j];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    values[ri + i] = s.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            first,
            start,
            values,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = b.iter().zip(&self.scale).map(|(x, s)| x * s).collect();
        for i in 0..self.n {
            let r = self.start[i] - self.first[i];
            let mut s = y[i];
            for k in self.first[i]..i {
                s -= self.values[r + k] * y[k];
            }
            y[i] = s / self.values[r + i];
        }
        for i in (0..self.n).rev() {
            let r = self.start[i] - self.first[i];
            y[i] /= self.values[r + i];
            let yi = y[i];
            for k in self.first[i]..i {
                y[k] -= self.values[r + k] * yi;
            }
        }
        y.iter().zip(&self.scale).map(|(x, s)| x * s).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
