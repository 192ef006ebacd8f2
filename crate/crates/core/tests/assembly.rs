use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trimlump::assembly::{assemble, lump, LumpingScheme};
use trimlump::eigen::solve_gevp;
use trimlump::experiment::{Discretization, Model};
use trimlump::gauss::composite;
use trimlump::geometry::{Side, TrimmedDomain};
use trimlump::problems::{make_problem, Example};
use trimlump::space::DiscreteSpace;
use trimlump::sparse::{CsrMatrix, ProfileCholesky};
use trimlump::SplineSpace;

fn interval_space(eps: f64, p: usize, n: usize, gamma: f64, dirichlet: &[Side]) -> DiscreteSpace {
    let spline = SplineSpace::unit(1, p, p - 1, n).unwrap();
    DiscreteSpace::build(spline, TrimmedDomain::interval_1d(eps), gamma, dirichlet).unwrap()
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Extended B-splines built directly: each large function living on the
/// neighbor of the bad element absorbs a multiple of the small function so
/// that the sum is one polynomial across the shared knot.
#[test]
fn stabilized_1d_matches_extended_bsplines() {
    let (n, p) = (256, 3);
    let space = interval_space(1e-6, p, n, 0.1, &[]);
    let bad = space.bad_elements();
    assert_eq!(bad.len(), 1);
    let t = bad[0];
    let tp = space.neighbor(t).unwrap();
    assert_eq!(tp + 1, t);
    let small = space.small_basis();
    assert_eq!(small.len(), 1);
    let s = small[0];

    let kv = space.spline().direction(0).clone();
    let knot = kv.element_bounds(t).0;
    // p-th derivatives are constant per element
    let top = |e: usize| -> Vec<(usize, f64)> {
        let (a, b) = kv.element_bounds(e);
        let d = kv.derivatives_on_element(e, 0.5 * (a + b), p);
        let first = kv.first_basis(e);
        (0..=p).map(|k| (first + k, d[p][k])).collect()
    };
    let jump = |i: usize| -> f64 {
        let on = |e: usize| {
            top(e)
                .into_iter()
                .find(|&(j, _)| j == i)
                .map_or(0.0, |(_, v)| v)
        };
        on(t) - on(tp)
    };
    assert!(knot > 0.0);

    let plain = assemble(&space, false);
    let stab = assemble(&space, true);
    let col = |i: usize| plain.support.iter().position(|&j| j == i).unwrap();
    let mut c = DMatrix::zeros(stab.support.len(), plain.support.len());
    for (r, &j) in stab.support.iter().enumerate() {
        c[(r, col(j))] = 1.0;
        if top(tp).iter().any(|&(i, _)| i == j) {
            c[(r, col(s))] = -jump(j) / jump(s);
        }
    }
    let k_oracle = &c * plain.k_full.to_dense() * c.transpose();
    let m_oracle = &c * plain.m_full.to_dense() * c.transpose();
    let k = stab.k_full.to_dense();
    let m = stab.m_full.to_dense();
    assert!(max_abs_diff(&k, &k_oracle) <= 1e-10 * k_oracle.amax());
    assert!(max_abs_diff(&m, &m_oracle) <= 1e-10 * m_oracle.amax());
}

#[test]
fn stabilization_without_bad_elements_changes_nothing() {
    let space = interval_space(1e-6, 3, 64, 1e-9, &[Side::Left]);
    assert!(space.bad_elements().is_empty());
    let a = assemble(&space, false);
    let b = assemble(&space, true);
    assert_eq!(a.dofs, b.dofs);
    assert_eq!(a.k, b.k);
    assert_eq!(a.m, b.m);
}

#[test]
fn unit_load_sums_to_the_measure() {
    let space = interval_space(0.25, 3, 16, 0.0, &[]);
    let ops = assemble(&space, false);
    let f = ops.load(|_| 1.0, |_, _| 0.0);
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn point_neumann_load_is_basis_values_at_the_end() {
    let space = interval_space(1e-6, 3, 32, 0.0, &[Side::Left]);
    let ops = assemble(&space, false);
    let f = ops.load(|_| 0.0, |_, n| n[0]);
    let end = 0.75 + 1e-6;
    let b = space.spline().eval_basis([end, 0.0], 0).unwrap();
    for (k, &i) in ops.dofs.iter().enumerate() {
        let expected = b
            .indices
            .iter()
            .position(|&j| j == i)
            .map_or(0.0, |a| b.values[a]);
        assert!(
            (f[k] - expected).abs() < 1e-14,
            "dof {i}: {} vs {expected}",
            f[k]
        );
    }
}

#[test]
fn manufactured_load_matches_refined_quadrature() {
    let d = Discretization::reference(Example::Ex1D);
    let m = Model::build(d).unwrap();
    let p = &m.problem;
    let t = 0.5;
    let f = m.ops.load(|x| p.forcing(x, t), |x, n| p.neumann(x, n, t));
    let end = p.domain.measure();
    let kv = m.space.spline().direction(0);
    let mut worst: f64 = 0.0;
    for (k, &i) in m.ops.dofs.iter().enumerate() {
        let phi = |x: f64| {
            let b = m.space.spline().eval_basis([x, 0.0], 0).unwrap();
            b.indices
                .iter()
                .position(|&j| j == i)
                .map_or(0.0, |a| b.values[a])
        };
        let support = kv.support_elements(i);
        let a = kv.element_bounds(support.start).0;
        let b = kv.element_bounds(support.end - 1).1.min(end);
        let interior = composite(|x| p.forcing([x, 0.0], t) * phi(x), a, b, 64, 12);
        let boundary = p.neumann([end, 0.0], [1.0, 0.0], t) * phi(end);
        let oracle = interior + boundary;
        worst = worst.max((f[k] - oracle).abs() / oracle.abs().max(1.0));
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn lumping_examples_from_matrices() {
    let m = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
    let rs = trimlump::assembly::lump_diagonal(&m, LumpingScheme::RowSum).unwrap();
    let abs = trimlump::assembly::lump_diagonal(&m, LumpingScheme::AbsRowSum).unwrap();
    assert_eq!(rs.diagonal(), vec![1.0, 1.0]);
    assert_eq!(abs.diagonal(), vec![3.0, 3.0]);
}

fn random_pencil(n: usize, seed: u64) -> (CsrMatrix, CsrMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k = &b * b.transpose() + DMatrix::identity(n, n) * 0.1;
    // entrywise nonnegative and diagonally dominant
    let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
    m = (&m + m.transpose()) * 0.5;
    for i in 0..n {
        m[(i, i)] += n as f64;
    }
    (CsrMatrix::from_dense(&k), CsrMatrix::from_dense(&m))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rowsum_never_raises_the_largest_eigenvalue(n in 2usize..9, seed in any::<u64>()) {
        let (k, m) = random_pencil(n, seed);
        let l = trimlump::assembly::lump_diagonal(&m, LumpingScheme::RowSum).unwrap();
        let lc = *solve_gevp(&k, &m).unwrap().values.last().unwrap();
        let ll = *solve_gevp(&k, &l).unwrap().values.last().unwrap();
        prop_assert!(ll <= lc * (1.0 + 1e-12));
    }
}

fn desk(ex: Example) -> Discretization {
    let d = Discretization::reference(ex);
    if ex.dim() == 2 {
        d.with_elements(32)
    } else {
        d
    }
}

#[test]
fn operators_are_positive_definite_on_all_examples() {
    for ex in Example::ALL {
        for gamma in [None, Some(0.1)] {
            let m = Model::build(desk(ex).with_gamma(gamma)).unwrap();
            assert!(ProfileCholesky::factor(&m.ops.m).is_ok(), "{ex} mass");
            if !m.problem.dirichlet.is_empty() {
                assert!(ProfileCholesky::factor(&m.ops.k).is_ok(), "{ex} stiffness");
            }
        }
    }
}

#[test]
fn stabilization_preserves_totals_approximately() {
    for ex in Example::ALL {
        let m = Model::build(desk(ex).with_gamma(Some(0.1))).unwrap();
        let space = &m.space;
        let h = 1.0 / m.discretization.elements as f64;
        let bad = space.bad_elements().len() as f64;
        let gap = (m.ops.m_full.total() - m.problem.domain.measure()).abs();
        assert!(
            gap <= 2.0 * h.powi(ex.dim() as i32) * bad.max(1.0),
            "{ex}: {gap}"
        );
    }
}

#[test]
fn containment_and_conservation_on_all_examples() {
    for ex in Example::ALL {
        for gamma in [0.1, 0.3] {
            let plain = Model::build(desk(ex)).unwrap();
            let stab = Model::build(desk(ex).with_gamma(Some(gamma))).unwrap();
            let (a, b) = (&plain.ops, &stab.ops);
            assert!(b
                .k_full
                .pattern(&b.support)
                .is_subset(&a.k_full.pattern(&a.support)));
            assert!(b
                .m_full
                .pattern(&b.support)
                .is_subset(&a.m_full.pattern(&a.support)));
            for ops in [a, b] {
                let l = lump(
                    &ops.m,
                    LumpingScheme::RowSum,
                    &ops.dofs,
                    plain.space.spline(),
                )
                .unwrap();
                assert!((l.matrix.total() - ops.m.total()).abs() <= 1e-12 * ops.m.total());
            }
        }
    }
}

#[test]
fn constant_projects_to_unit_coefficients() {
    let space = interval_space(0.25, 3, 16, 0.0, &[]);
    let ops = assemble(&space, false);
    let c = ops.l2_project(|_| 1.0).unwrap();
    assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-10));
    let p = make_problem(Example::Ex1D, 1e-6).unwrap();
    assert_eq!(p.dirichlet, vec![Side::Left]);
}
