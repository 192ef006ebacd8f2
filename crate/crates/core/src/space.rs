//! Active mesh and basis over a trimmed domain, the good/bad element
//! partition, the neighbor map for bad elements and the large/small DOF sets.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{volume_fraction, ElementBox, Side, TrimmedDomain};
use crate::spline::SplineSpace;

/// Polynomial exactness of the default quadrature, `2p + 2`.
pub fn default_order(degree: usize) -> usize {
    2 * degree + 2
}

#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    spline: SplineSpace,
    domain: TrimmedDomain,
    gamma: f64,
    order: usize,
    fractions: Vec<f64>,
    active_elements: Vec<usize>,
    good: Vec<bool>,
    neighbor: Vec<Option<usize>>,
    active_basis: Vec<usize>,
    large: Vec<bool>,
    dirichlet: Vec<bool>,
    dirichlet_sides: Vec<Side>,
}

impl DiscreteSpace {
    /// Build the active space. `gamma = 0` marks every active element good.
    pub fn build(
        spline: SplineSpace,
        domain: TrimmedDomain,
        gamma: f64,
        dirichlet_sides: &[Side],
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma {gamma} outside [0, 1]"
            )));
        }
        if spline.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: spline.dim(),
            });
        }
        let order = default_order(spline.degree());
        let ne = spline.num_elements();
        let fractions: Vec<f64> = (0..ne)
            .map(|e| {
                let (lo, hi) = spline.element_box(e);
                volume_fraction(&domain, ElementBox::new(lo, hi), order)
            })
            .collect();
        let active_elements: Vec<usize> = (0..ne).filter(|&e| fractions[e] > 0.0).collect();
        let good: Vec<bool> = fractions.iter().map(|&f| f > 0.0 && f >= gamma).collect();

        let mut neighbor = vec![None; ne];
        for &e in &active_elements {
            if good[e] {
                continue;
            }
            neighbor[e] = Some(
                choose_neighbor(&spline, &fractions, &good, e)
                    .ok_or(Error::NoGoodNeighbor { element: e, gamma })?,
            );
        }

        let nb = spline.num_basis();
        let mut active = vec![false; nb];
        let mut large = vec![false; nb];
        for &e in &active_elements {
            for i in spline.element_basis(e) {
                active[i] = true;
                if good[e] {
                    large[i] = true;
                }
            }
        }
        let active_basis: Vec<usize> = (0..nb).filter(|&i| active[i]).collect();

        let mut dirichlet = vec![false; nb];
        for &i in &active_basis {
            let m = spline.basis_multi(i);
            dirichlet[i] = dirichlet_sides.iter().any(|side| match side {
                Side::Left => m[0] == 0,
                Side::Right => m[0] + 1 == spline.direction(0).num_basis(),
                Side::Bottom => spline.dim() == 2 && m[1] == 0,
                Side::Top => spline.dim() == 2 && m[1] + 1 == spline.direction(1).num_basis(),
            });
        }

        Ok(Self {
            spline,
            domain,
            gamma,
            order,
            fractions,
            active_elements,
            good,
            neighbor,
            active_basis,
            large,
            dirichlet,
            dirichlet_sides: dirichlet_sides.to_vec(),
        })
    }

    pub fn spline(&self) -> &SplineSpace {
        &self.spline
    }

    pub fn domain(&self) -> &TrimmedDomain {
        &self.domain
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Quadrature exactness used for the bilinear forms.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.spline.dim()
    }

    pub fn dirichlet_sides(&self) -> &[Side] {
        &self.dirichlet_sides
    }

    /// `|T ∩ Ω| / |T|` for every background element.
    pub fn fraction(&self, e: usize) -> f64 {
        self.fractions[e]
    }

    pub fn element_box(&self, e: usize) -> ElementBox {
        let (lo, hi) = self.spline.element_box(e);
        ElementBox::new(lo, hi)
    }

    pub fn active_elements(&self) -> &[usize] {
        &self.active_elements
    }

    pub fn is_good(&self, e: usize) -> bool {
        self.good[e]
    }

    pub fn good_elements(&self) -> Vec<usize> {
        self.active_elements
            .iter()
            .copied()
            .filter(|&e| self.good[e])
            .collect()
    }

    pub fn bad_elements(&self) -> Vec<usize> {
        self.active_elements
            .iter()
            .copied()
            .filter(|&e| !self.good[e])
            .collect()
    }

    /// `S_h(T)` for bad elements, `None` otherwise.
    pub fn neighbor(&self, e: usize) -> Option<usize> {
        self.neighbor[e]
    }

    /// Active basis indices `I`, ascending.
    pub fn active_basis(&self) -> &[usize] {
        &self.active_basis
    }

    /// `I^L`, ascending.
    pub fn large_basis(&self) -> Vec<usize> {
        self.active_basis
            .iter()
            .copied()
            .filter(|&i| self.large[i])
            .collect()
    }

    /// `I^S`, ascending.
    pub fn small_basis(&self) -> Vec<usize> {
        self.active_basis
            .iter()
            .copied()
            .filter(|&i| !self.large[i])
            .collect()
    }

    pub fn is_large(&self, i: usize) -> bool {
        self.large[i]
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        self.dirichlet[i]
    }

    pub fn dirichlet_basis(&self) -> Vec<usize> {
        self.active_basis
            .iter()
            .copied()
            .filter(|&i| self.dirichlet[i])
            .collect()
    }

    /// Unknowns after Dirichlet reduction (and removal of `I^S` when
    /// stabilized), ascending global indices.
    pub fn free_dofs(&self, stabilized: bool) -> Vec<usize> {
        self.active_basis
            .iter()
            .copied()
            .filter(|&i| !self.dirichlet[i] && (!stabilized || self.large[i]))
            .collect()
    }

    /// Element whose basis functions (possibly extended) represent the
    /// solution on `e`.
    pub fn source_element(&self, e: usize, stabilized: bool) -> usize {
        if stabilized {
            self.neighbor[e].unwrap_or(e)
        } else {
            e
        }
    }

    pub fn large_set(&self) -> BTreeSet<usize> {
        self.large_basis().into_iter().collect()
    }
}

/// Good active neighbor in the `3^d - 1` stencil with the largest volume
/// fraction, ties to the smallest element index.
fn choose_neighbor(
    space: &SplineSpace,
    fractions: &[f64],
    good: &[bool],
    e: usize,
) -> Option<usize> {
    let m = space.element_multi(e);
    let dim = space.dim();
    let n: Vec<usize> = (0..dim)
        .map(|d| space.direction(d).num_elements())
        .collect();
    let range = |c: usize, len: usize| c.saturating_sub(1)..=(c + 1).min(len - 1);
    let ys: Vec<usize> = if dim == 2 {
        range(m[1], n[1]).collect()
    } else {
        vec![0]
    };
    let mut best: Option<usize> = None;
    for &y in &ys {
        for x in range(m[0], n[0]) {
            let cand = space.element_index([x, y]);
            if cand == e || !good[cand] {
                continue;
            }
            best = match best {
                None => Some(cand),
                Some(b)
                    if fractions[cand] > fractions[b]
                        || (fractions[cand] == fractions[b] && cand < b) =>
                {
                    Some(cand)
                }
                keep => keep,
            };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1d(gamma: f64) -> DiscreteSpace {
        let s = SplineSpace::unit(1, 3, 2, 256).unwrap();
        DiscreteSpace::build(s, TrimmedDomain::interval_1d(1e-6), gamma, &[Side::Left]).unwrap()
    }

    #[test]
    fn single_bad_element_in_1d() {
        let d = ex1d(0.1);
        assert_eq!(d.bad_elements(), vec![192]);
        assert_eq!(d.neighbor(192), Some(191));
        assert_eq!(d.active_elements().len(), 193);
        // the trimmed element carries exactly one function of its own
        assert_eq!(d.small_basis(), vec![195]);
        assert_eq!(d.dirichlet_basis(), vec![0]);
        assert_eq!(d.free_dofs(true).len(), 194);
        assert_eq!(d.free_dofs(false).len(), 195);
    }

    #[test]
    fn zero_threshold_keeps_everything() {
        let d = ex1d(0.0);
        assert!(d.bad_elements().is_empty());
        assert!(d.small_basis().is_empty());
    }

    #[test]
    fn untrimmed_square_is_fully_active() {
        let s = SplineSpace::unit(2, 2, 1, 8).unwrap();
        let dom = TrimmedDomain::PerforatedPlate {
            radius: 0.0,
            center: [0.5, 0.5],
        };
        let d = DiscreteSpace::build(s.clone(), dom, 1.0, &[]).unwrap();
        assert_eq!(d.active_basis().len(), s.num_basis());
        assert!(d.bad_elements().is_empty());
    }

    #[test]
    fn neighbor_prefers_largest_then_smallest_index() {
        let s = SplineSpace::unit(2, 1, 0, 3).unwrap();
        let mut fr = vec![1.0; 9];
        let mut good = vec![true; 9];
        good[4] = false;
        fr[4] = 0.01;
        assert_eq!(choose_neighbor(&s, &fr, &good, 4), Some(0));
        fr[7] = 1.0;
        fr[0] = 0.4;
        fr[1] = 0.9;
        for k in [2, 3, 5, 6, 7, 8] {
            fr[k] = 0.5;
        }
        assert_eq!(choose_neighbor(&s, &fr, &good, 4), Some(1));
    }

    #[test]
    fn good_set_shrinks_with_gamma() {
        let s = SplineSpace::unit(2, 3, 2, 32).unwrap();
        let dom = TrimmedDomain::rotated_square(1e-6);
        let mut prev: Option<Vec<usize>> = None;
        for g in [0.0, 0.05, 0.1, 0.3] {
            let d = DiscreteSpace::build(s.clone(), dom, g, &[]).unwrap();
            let good = d.good_elements();
            if let Some(p) = prev {
                assert!(good.iter().all(|e| p.contains(e)));
            }
            for &e in &d.bad_elements() {
                let t = d.neighbor(e).unwrap();
                assert!(d.is_good(t));
                let (a, b) = (s.element_multi(e), s.element_multi(t));
                assert!(a[0].abs_diff(b[0]) <= 1 && a[1].abs_diff(b[1]) <= 1);
            }
            // small functions only meet Ω on bad elements
            for i in d.small_basis() {
                for e in s.support_elements(i) {
                    assert!(d.fraction(e) == 0.0 || !d.is_good(e));
                }
            }
            prev = Some(good);
        }
    }

    #[test]
    fn invalid_gamma_is_rejected() {
        let s = SplineSpace::unit(1, 2, 1, 4).unwrap();
        assert!(DiscreteSpace::build(s, TrimmedDomain::interval_1d(0.1), 1.5, &[]).is_err());
    }
}
