//! Trimmed physical domains embedded in the unit interval/square, with
//! membership tests, cut-cell interior quadrature and boundary quadrature.

use std::f64::consts::PI;

use crate::gauss::{gauss_interval, gauss_legendre};
use crate::spline::Point;

/// Points closer than this to a trimming curve count as outside.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-14;

/// Rotation applied to the square of the rotated-square example (radians).
pub const ROTATION_ANGLE: f64 = 0.85;

/// Sides of the fictitious box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn outward_normal(self) -> Point {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

/// Where a boundary piece comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Fictitious(Side),
    Trim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    /// Boundary of a univariate domain.
    Point { x: f64, normal: f64 },
    /// Straight segment with a constant outward normal.
    Segment { a: Point, b: Point, normal: Point },
    /// Circular arc swept counter-clockwise from `start` to `end`; the
    /// outward normal is `sign * (x - center) / radius`.
    Arc {
        center: Point,
        radius: f64,
        start: f64,
        end: f64,
        sign: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPiece {
    pub curve: Curve,
    pub tag: BoundaryTag,
}

/// The four trimmed geometries, all embedded in the unit interval or square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrimmedDomain {
    /// `(0, end)` inside `(0, 1)`.
    Interval1D { end: f64 },
    /// Square of half side `half_side`, rotated by `angle` and centred at `center`.
    RotatedSquare {
        half_side: f64,
        angle: f64,
        center: Point,
    },
    /// Unit square minus the stadium of radius `radius` around the segment
    /// joining `lower` and `upper`.
    ExtrudedPlate {
        radius: f64,
        lower: Point,
        upper: Point,
    },
    /// Unit square minus a disc.
    PerforatedPlate { radius: f64, center: Point },
}

impl TrimmedDomain {
    pub fn interval_1d(eps: f64) -> Self {
        Self::Interval1D { end: 0.75 + eps }
    }

    pub fn rotated_square(eps: f64) -> Self {
        Self::RotatedSquare {
            half_side: 0.25 + eps,
            angle: ROTATION_ANGLE,
            center: [0.5, 0.5],
        }
    }

    pub fn extruded_plate(eps: f64) -> Self {
        Self::ExtrudedPlate {
            radius: 0.125 - eps,
            lower: [0.5, 0.25],
            upper: [0.5, 0.75],
        }
    }

    pub fn perforated_plate(eps: f64) -> Self {
        Self::PerforatedPlate {
            radius: 0.125 * 2f64.sqrt() + eps,
            center: [0.5, 0.5],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval1D { .. } => 1,
            _ => 2,
        }
    }

    /// Exact measure of the physical domain.
    pub fn measure(&self) -> f64 {
        match *self {
            Self::Interval1D { end } => end,
            Self::RotatedSquare { half_side, .. } => 4.0 * half_side * half_side,
            Self::ExtrudedPlate {
                radius,
                lower,
                upper,
            } => {
                let len = upper[1] - lower[1];
                1.0 - PI * radius * radius - 2.0 * radius * len
            }
            Self::PerforatedPlate { radius, .. } => 1.0 - PI * radius * radius,
        }
    }

    /// Distance-like function, positive inside the physical domain.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match *self {
            Self::Interval1D { end } => x[0].min(end - x[0]),
            Self::RotatedSquare {
                half_side,
                angle,
                center,
            } => {
                let l = to_local(x, angle, center);
                half_side - l[0].abs().max(l[1].abs())
            }
            Self::ExtrudedPlate {
                radius,
                lower,
                upper,
            } => {
                let d = distance_to_segment(x, lower, upper) - radius;
                d.min(box_distance(x))
            }
            Self::PerforatedPlate { radius, center } => {
                let d = norm(sub(x, center)) - radius;
                d.min(box_distance(x))
            }
        }
    }

    /// Membership test; ties within [`MEMBERSHIP_TOLERANCE`] resolve to outside.
    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) > MEMBERSHIP_TOLERANCE
    }

    /// Fictitious sides that are part of the physical boundary.
    pub fn untrimmed_sides(&self) -> Vec<Side> {
        match self {
            Self::Interval1D { .. } => vec![Side::Left],
            Self::RotatedSquare { .. } => vec![],
            _ => vec![Side::Left, Side::Right, Side::Bottom, Side::Top],
        }
    }

    /// All pieces of the physical boundary.
    pub fn boundary_pieces(&self) -> Vec<BoundaryPiece> {
        let side = |s: Side, a: Point, b: Point| BoundaryPiece {
            curve: Curve::Segment {
                a,
                b,
                normal: s.outward_normal(),
            },
            tag: BoundaryTag::Fictitious(s),
        };
        let box_sides = || {
            vec![
                side(Side::Left, [0.0, 0.0], [0.0, 1.0]),
                side(Side::Right, [1.0, 0.0], [1.0, 1.0]),
                side(Side::Bottom, [0.0, 0.0], [1.0, 0.0]),
                side(Side::Top, [0.0, 1.0], [1.0, 1.0]),
            ]
        };
        match *self {
            Self::Interval1D { end } => vec![
                BoundaryPiece {
                    curve: Curve::Point {
                        x: 0.0,
                        normal: -1.0,
                    },
                    tag: BoundaryTag::Fictitious(Side::Left),
                },
                BoundaryPiece {
                    curve: Curve::Point {
                        x: end,
                        normal: 1.0,
                    },
                    tag: BoundaryTag::Trim,
                },
            ],
            Self::RotatedSquare {
                half_side,
                angle,
                center,
            } => {
                let s = half_side;
                let corners = [[-s, -s], [s, -s], [s, s], [-s, s]];
                let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
                (0..4)
                    .map(|k| BoundaryPiece {
                        curve: Curve::Segment {
                            a: to_global(corners[k], angle, center),
                            b: to_global(corners[(k + 1) % 4], angle, center),
                            normal: rotate(normals[k], angle),
                        },
                        tag: BoundaryTag::Trim,
                    })
                    .collect()
            }
            Self::ExtrudedPlate {
                radius,
                lower,
                upper,
            } => {
                let mut pieces = box_sides();
                pieces.push(BoundaryPiece {
                    curve: Curve::Segment {
                        a: [lower[0] - radius, lower[1]],
                        b: [upper[0] - radius, upper[1]],
                        normal: [1.0, 0.0],
                    },
                    tag: BoundaryTag::Trim,
                });
                pieces.push(BoundaryPiece {
                    curve: Curve::Segment {
                        a: [lower[0] + radius, lower[1]],
                        b: [upper[0] + radius, upper[1]],
                        normal: [-1.0, 0.0],
                    },
                    tag: BoundaryTag::Trim,
                });
                pieces.push(BoundaryPiece {
                    curve: Curve::Arc {
                        center: upper,
                        radius,
                        start: 0.0,
                        end: PI,
                        sign: -1.0,
                    },
                    tag: BoundaryTag::Trim,
                });
                pieces.push(BoundaryPiece {
                    curve: Curve::Arc {
                        center: lower,
                        radius,
                        start: PI,
                        end: 2.0 * PI,
                        sign: -1.0,
                    },
                    tag: BoundaryTag::Trim,
                });
                pieces
            }
            Self::PerforatedPlate { radius, center } => {
                let mut pieces = box_sides();
                pieces.push(BoundaryPiece {
                    curve: Curve::Arc {
                        center,
                        radius,
                        start: 0.0,
                        end: 2.0 * PI,
                        sign: -1.0,
                    },
                    tag: BoundaryTag::Trim,
                });
                pieces
            }
        }
    }
}

/// Quadrature points and positive weights, with unit outward normals for
/// boundary rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Option<Vec<Point>>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of the weights (the measure of the integrated region).
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    fn push(&mut self, x: Point, w: f64) {
        self.points.push(x);
        self.weights.push(w);
    }

    fn append(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
        if let Some(n) = other.normals {
            self.normals.get_or_insert_with(Vec::new).extend(n);
        }
    }
}

/// Axis-aligned background element `[lo, hi]` (second coordinate unused in 1D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBox {
    pub lo: Point,
    pub hi: Point,
}

impl ElementBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    fn corners(&self) -> [Point; 4] {
        [
            self.lo,
            [self.hi[0], self.lo[1]],
            self.hi,
            [self.lo[0], self.hi[1]],
        ]
    }

    fn contains_closed(&self, x: Point, tol: f64) -> bool {
        x[0] >= self.lo[0] - tol
            && x[0] <= self.hi[0] + tol
            && x[1] >= self.lo[1] - tol
            && x[1] <= self.hi[1] + tol
    }
}

/// Gauss points per direction for exactness of degree `order`, including
/// the extra degree introduced by collapsed-triangle Jacobians.
pub fn points_for_order(order: usize) -> usize {
    (order + 3) / 2
}

/// Whether the closed element lies entirely in the closure of `Ω`.
pub fn is_untrimmed(domain: &TrimmedDomain, element: ElementBox) -> bool {
    match *domain {
        TrimmedDomain::Interval1D { end } => element.hi[0] <= end,
        TrimmedDomain::RotatedSquare {
            half_side,
            angle,
            center,
        } => {
            let planes = square_half_planes(half_side, angle, center);
            element
                .corners()
                .iter()
                .all(|&c| planes.iter().all(|hp| hp.value(c) <= 0.0))
        }
        TrimmedDomain::ExtrudedPlate {
            radius,
            lower,
            upper,
        } => {
            // the stadium axis is axis-aligned, so this is a box-box distance
            let gap = |a0: f64, a1: f64, b0: f64, b1: f64| (b0 - a1).max(a0 - b1).max(0.0);
            let dx = gap(
                lower[0].min(upper[0]),
                lower[0].max(upper[0]),
                element.lo[0],
                element.hi[0],
            );
            let dy = gap(
                lower[1].min(upper[1]),
                lower[1].max(upper[1]),
                element.lo[1],
                element.hi[1],
            );
            dx.hypot(dy) >= radius
        }
        TrimmedDomain::PerforatedPlate { radius, center } => {
            let q = [
                center[0].clamp(element.lo[0], element.hi[0]),
                center[1].clamp(element.lo[1], element.hi[1]),
            ];
            norm(sub(q, center)) >= radius
        }
    }
}

/// `|T ∩ Ω| / |T|`.
pub fn volume_fraction(domain: &TrimmedDomain, element: ElementBox, order: usize) -> f64 {
    if is_untrimmed(domain, element) {
        return 1.0;
    }
    let rule = interior_rule(domain, element, order);
    let size = if domain.dim() == 1 {
        element.hi[0] - element.lo[0]
    } else {
        element.area()
    };
    (rule.measure() / size).clamp(0.0, 1.0)
}

/// Quadrature over `T ∩ Ω`, exact for polynomials of degree `order` on
/// straight cuts; circular cuts use adaptively refined polar panels.
pub fn interior_rule(domain: &TrimmedDomain, element: ElementBox, order: usize) -> QuadratureRule {
    let n = points_for_order(order);
    match *domain {
        TrimmedDomain::Interval1D { end } => {
            let (a, b) = (element.lo[0].max(0.0), element.hi[0].min(end));
            let mut rule = QuadratureRule::default();
            if b > a {
                for (x, w) in gauss_interval(n, a, b) {
                    rule.push([x, 0.0], w);
                }
            }
            rule
        }
        TrimmedDomain::RotatedSquare {
            half_side,
            angle,
            center,
        } => {
            let planes = square_half_planes(half_side, angle, center);
            let inside = element
                .corners()
                .iter()
                .all(|&c| planes.iter().all(|hp| hp.value(c) <= 0.0));
            if inside {
                return box_rule(element, n);
            }
            let poly = clip_polygon(element.corners().to_vec(), &planes);
            polygon_rule(&poly, n)
        }
        TrimmedDomain::ExtrudedPlate {
            radius,
            lower,
            upper,
        } => {
            let mut rule = QuadratureRule::default();
            let mut cuts = vec![element.lo[1]];
            for y in [lower[1], upper[1]] {
                if y > element.lo[1] && y < element.hi[1] {
                    cuts.push(y);
                }
            }
            cuts.push(element.hi[1]);
            for w in cuts.windows(2) {
                let sub = ElementBox::new([element.lo[0], w[0]], [element.hi[0], w[1]]);
                let ymid = 0.5 * (w[0] + w[1]);
                if ymid > upper[1] {
                    rule.append(box_minus_disc(sub, upper, radius, n));
                } else if ymid < lower[1] {
                    rule.append(box_minus_disc(sub, lower, radius, n));
                } else {
                    let left = HalfPlane {
                        normal: [1.0, 0.0],
                        offset: lower[0] - radius,
                    };
                    let right = HalfPlane {
                        normal: [-1.0, 0.0],
                        offset: -(lower[0] + radius),
                    };
                    for hp in [left, right] {
                        if sub.corners().iter().all(|&c| hp.value(c) <= 0.0) {
                            rule.append(box_rule(sub, n));
                        } else {
                            let poly = clip_polygon(sub.corners().to_vec(), &[hp]);
                            rule.append(polygon_rule(&poly, n));
                        }
                    }
                }
            }
            rule
        }
        TrimmedDomain::PerforatedPlate { radius, center } => {
            box_minus_disc(element, center, radius, n)
        }
    }
}

/// Quadrature on the part of the physical boundary inside `T` (closed),
/// restricted to pieces accepted by `keep`. Normals point out of `Ω`.
pub fn boundary_rule_filtered(
    domain: &TrimmedDomain,
    element: ElementBox,
    order: usize,
    keep: impl Fn(&BoundaryTag) -> bool,
) -> QuadratureRule {
    let n = points_for_order(order);
    let mut rule = QuadratureRule {
        normals: Some(Vec::new()),
        ..Default::default()
    };
    for piece in domain.boundary_pieces() {
        if !keep(&piece.tag) {
            continue;
        }
        match piece.curve {
            Curve::Point { x, normal } => {
                // a boundary point belongs to the element that contains it,
                // with right-closed elements except at the left end
                let inside = if x == element.lo[0] {
                    x == 0.0
                } else {
                    x > element.lo[0] && x <= element.hi[0]
                };
                if inside {
                    rule.push([x, 0.0], 1.0);
                    rule.normals.as_mut().unwrap().push([normal, 0.0]);
                }
            }
            Curve::Segment { a, b, normal } => {
                if let Some((t0, t1)) = clip_segment(a, b, element) {
                    let len = norm(sub(b, a));
                    for (t, w) in gauss_interval(n, t0, t1) {
                        rule.push(lerp(a, b, t), w * len);
                        rule.normals.as_mut().unwrap().push(normal);
                    }
                }
            }
            Curve::Arc {
                center,
                radius,
                start,
                end,
                sign,
            } => {
                let mut breaks = vec![start, end];
                for th in circle_box_crossings(center, radius, element) {
                    let th = wrap_into(th, start);
                    if th > start && th < end {
                        breaks.push(th);
                    }
                }
                breaks.sort_by(f64::total_cmp);
                for w in breaks.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b - a <= 0.0 {
                        continue;
                    }
                    let mid = 0.5 * (a + b);
                    let pm = polar(center, radius, mid);
                    if !element.contains_closed(pm, 0.0) {
                        continue;
                    }
                    for (th, wt) in gauss_interval(n, a, b) {
                        let x = polar(center, radius, th);
                        rule.push(x, wt * radius);
                        rule.normals
                            .as_mut()
                            .unwrap()
                            .push([sign * th.cos(), sign * th.sin()]);
                    }
                }
            }
        }
    }
    rule
}

/// Quadrature on all physical boundary pieces inside `T`.
pub fn boundary_rule(domain: &TrimmedDomain, element: ElementBox, order: usize) -> QuadratureRule {
    boundary_rule_filtered(domain, element, order, |_| true)
}

// ---------------------------------------------------------------------------
// geometric helpers

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn polar(c: Point, r: f64, th: f64) -> Point {
    [c[0] + r * th.cos(), c[1] + r * th.sin()]
}

fn rotate(v: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Map from the square's reference configuration to the physical one.
pub fn to_global(local: Point, angle: f64, center: Point) -> Point {
    let r = rotate(local, angle);
    [r[0] + center[0], r[1] + center[1]]
}

/// Inverse of [`to_global`].
pub fn to_local(x: Point, angle: f64, center: Point) -> Point {
    rotate(sub(x, center), -angle)
}

fn box_distance(x: Point) -> f64 {
    x[0].min(1.0 - x[0]).min(x[1]).min(1.0 - x[1])
}

fn distance_to_segment(x: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(x, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    norm(sub(x, lerp(a, b, t)))
}

fn wrap_into(th: f64, start: f64) -> f64 {
    let mut t = th;
    while t < start {
        t += 2.0 * PI;
    }
    while t >= start + 2.0 * PI {
        t -= 2.0 * PI;
    }
    t
}

/// Half-plane `normal · x <= offset`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    normal: Point,
    offset: f64,
}

impl HalfPlane {
    fn value(&self, x: Point) -> f64 {
        dot(self.normal, x) - self.offset
    }
}

fn square_half_planes(s: f64, angle: f64, center: Point) -> [HalfPlane; 4] {
    let e1 = rotate([1.0, 0.0], angle);
    let e2 = rotate([0.0, 1.0], angle);
    let mk = |n: Point| HalfPlane {
        normal: n,
        offset: s + dot(n, center),
    };
    [mk(e1), mk([-e1[0], -e1[1]]), mk(e2), mk([-e2[0], -e2[1]])]
}

/// Sutherland–Hodgman clipping of a convex polygon by half-planes.
fn clip_polygon(mut poly: Vec<Point>, planes: &[HalfPlane]) -> Vec<Point> {
    for hp in planes {
        if poly.is_empty() {
            break;
        }
        let mut out = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let cur = poly[k];
            let next = poly[(k + 1) % poly.len()];
            let (vc, vn) = (hp.value(cur), hp.value(next));
            if vc <= 0.0 {
                out.push(cur);
            }
            if (vc < 0.0 && vn > 0.0) || (vc > 0.0 && vn < 0.0) {
                out.push(lerp(cur, next, vc / (vc - vn)));
            }
        }
        poly = out;
    }
    poly
}

fn box_rule(b: ElementBox, n: usize) -> QuadratureRule {
    let gx = gauss_interval(n, b.lo[0], b.hi[0]);
    let gy = gauss_interval(n, b.lo[1], b.hi[1]);
    let mut rule = QuadratureRule::default();
    for &(y, wy) in &gy {
        for &(x, wx) in &gx {
            rule.push([x, y], wx * wy);
        }
    }
    rule
}

/// Fan triangulation of a convex polygon with collapsed Gauss rules.
fn polygon_rule(poly: &[Point], n: usize) -> QuadratureRule {
    let mut rule = QuadratureRule::default();
    if poly.len() < 3 {
        return rule;
    }
    let (u, wu) = gauss_legendre(n);
    for k in 1..poly.len() - 1 {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let det = cross(sub(b, a), sub(c, b));
        if det.abs() <= 0.0 {
            continue;
        }
        for (i, &ui) in u.iter().enumerate() {
            let s = 0.5 * (ui + 1.0);
            for (j, &vj) in u.iter().enumerate() {
                let t = 0.5 * (vj + 1.0);
                let x = [
                    a[0] + s * (b[0] - a[0]) + s * t * (c[0] - b[0]),
                    a[1] + s * (b[1] - a[1]) + s * t * (c[1] - b[1]),
                ];
                rule.push(x, 0.25 * wu[i] * wu[j] * s * det.abs());
            }
        }
    }
    rule
}

/// Parameter range of segment `a + t (b - a)` inside the closed box.
fn clip_segment(a: Point, b: Point, bx: ElementBox) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = sub(b, a);
    for k in 0..2 {
        if d[k] == 0.0 {
            if a[k] < bx.lo[k] || a[k] > bx.hi[k] {
                return None;
            }
        } else {
            let mut ta = (bx.lo[k] - a[k]) / d[k];
            let mut tb = (bx.hi[k] - a[k]) / d[k];
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    (t1 > t0).then_some((t0, t1))
}

/// Angles where the circle crosses the lines bounding the box edges,
/// restricted to crossings on the edges themselves.
fn circle_box_crossings(c: Point, r: f64, bx: ElementBox) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..2 {
        let o = 1 - k;
        for &line in &[bx.lo[k], bx.hi[k]] {
            let d = line - c[k];
            if d.abs() > r {
                continue;
            }
            let h = (r * r - d * d).sqrt();
            for s in [-1.0, 1.0] {
                let mut p = [0.0; 2];
                p[k] = line;
                p[o] = c[o] + s * h;
                if p[o] >= bx.lo[o] && p[o] <= bx.hi[o] {
                    out.push((p[1] - c[1]).atan2(p[0] - c[0]));
                }
            }
        }
    }
    out
}

/// Exit/entry parameters of the ray `c + t (cos θ, sin θ)`, `t >= 0`, for the box.
fn ray_box(c: Point, th: f64, bx: ElementBox) -> Option<(f64, f64)> {
    let d = [th.cos(), th.sin()];
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for k in 0..2 {
        if d[k].abs() < 1e-300 {
            if c[k] < bx.lo[k] || c[k] > bx.hi[k] {
                return None;
            }
        } else {
            let mut ta = (bx.lo[k] - c[k]) / d[k];
            let mut tb = (bx.hi[k] - c[k]) / d[k];
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    (t1 > t0).then_some((t0, t1))
}

/// Quadrature on `box \ disc(c, r)`: full tensor rule when the disc misses
/// the box, polar panels about `c` otherwise.
fn box_minus_disc(bx: ElementBox, c: Point, r: f64, n: usize) -> QuadratureRule {
    let nearest = [
        c[0].clamp(bx.lo[0], bx.hi[0]),
        c[1].clamp(bx.lo[1], bx.hi[1]),
    ];
    let dmin = norm(sub(nearest, c));
    let dmax = bx
        .corners()
        .iter()
        .map(|&p| norm(sub(p, c)))
        .fold(0.0, f64::max);
    if dmin >= r {
        return box_rule(bx, n);
    }
    if dmax <= r {
        return QuadratureRule::default();
    }
    // angular range seen from the centre
    let c_inside = bx.contains_closed(c, 0.0);
    let (th_lo, th_hi) = if c_inside {
        (0.0, 2.0 * PI)
    } else {
        let mid = [0.5 * (bx.lo[0] + bx.hi[0]), 0.5 * (bx.lo[1] + bx.hi[1])];
        let rf = sub(mid, c);
        let base = rf[1].atan2(rf[0]);
        let rel: Vec<f64> = bx
            .corners()
            .iter()
            .map(|&p| {
                let v = sub(p, c);
                cross(rf, v).atan2(dot(rf, v))
            })
            .collect();
        let lo = rel.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (base + lo, base + hi)
    };
    let mut breaks = vec![th_lo, th_hi];
    let mut candidates: Vec<f64> = bx
        .corners()
        .iter()
        .map(|&p| (p[1] - c[1]).atan2(p[0] - c[0]))
        .collect();
    candidates.extend(circle_box_crossings(c, r, bx));
    for th in candidates {
        let t = wrap_into(th, th_lo);
        if t > th_lo && t < th_hi {
            breaks.push(t);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let (rho_nodes, rho_weights) = gauss_legendre(n);
    let panel_rule = |a: f64, b: f64, pieces: usize, nt: usize| -> QuadratureRule {
        let mut rule = QuadratureRule::default();
        let step = (b - a) / pieces as f64;
        for piece in 0..pieces {
            let pa = a + step * piece as f64;
            for (th, wt) in gauss_interval(nt, pa, pa + step) {
                let Some((t0, t1)) = ray_box(c, th, bx) else {
                    continue;
                };
                let lo = t0.max(r);
                if t1 <= lo {
                    continue;
                }
                let half = 0.5 * (t1 - lo);
                let mid = 0.5 * (t1 + lo);
                let (s, co) = th.sin_cos();
                for (k, &xi) in rho_nodes.iter().enumerate() {
                    let rho = mid + half * xi;
                    rule.push(
                        [c[0] + rho * co, c[1] + rho * s],
                        wt * rho_weights[k] * half * rho,
                    );
                }
            }
        }
        rule
    };
    let moments = |q: &QuadratureRule| -> [f64; 3] {
        [
            q.measure(),
            q.integrate(|x| (x[0] - bx.lo[0]).powi(2)),
            q.integrate(|x| (x[0] - bx.lo[0]) * (x[1] - bx.lo[1]).powi(3)),
        ]
    };
    let scale = bx.area();
    let mut rule = QuadratureRule::default();
    let nt = n + 4;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 1e-15 {
            continue;
        }
        let mut pieces = 1;
        let mut current = panel_rule(a, b, pieces, nt);
        let mut m0 = moments(&current);
        for _ in 0..12 {
            pieces *= 2;
            let refined = panel_rule(a, b, pieces, nt);
            let m1 = moments(&refined);
            let change = m0
                .iter()
                .zip(&m1)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            current = refined;
            m0 = m1;
            if change <= 1e-10 * scale * 1e-2 {
                break;
            }
        }
        rule.append(current);
    }
    rule
}
