//! PSL(2,R) acting on the upper half-plane.
//!
//! Elements with determinant -1 are allowed as well; they act by
//! `z -> (a*conj(z) + b) / (c*conj(z) + d)` and represent reflections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Mul;
use thiserror::Error;

pub type Point = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("element is not hyperbolic (|trace| = {0})")]
    NotHyperbolic(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// 2x2 real matrix taken modulo sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        GroupElement { a, b, c, d }
    }

    /// a_t = diag(e^{t/2}, e^{-t/2})
    pub fn geodesic(t: f64) -> Self {
        let e = (t / 2.0).exp();
        Self::new(e, 0.0, 0.0, 1.0 / e)
    }

    /// u_s = [[1, s], [0, 1]]
    pub fn horocycle(s: f64) -> Self {
        Self::new(1.0, s, 0.0, 1.0)
    }

    /// Rotation about i turning tangent vectors counterclockwise by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new(c, s, -s, c)
    }

    /// Transvection along the geodesic through i and z, carrying i to z.
    pub fn translation_to(z: Point) -> Self {
        let x = z.re;
        let y = z.im;
        let sy = y.sqrt();
        let dist = dist_h2_unchecked(Point::new(0.0, 1.0), z);
        if dist < 1e-300 {
            return Self::IDENTITY;
        }
        // Polar part of the affine map z -> y*z + x, which also sends i to z.
        let m = Self::new(sy, x / sy, 0.0, 1.0 / sy);
        let phi = (m.c - m.b).atan2(m.a + m.d);
        m * Self::rotation(-2.0 * phi).inverse()
    }

    /// Unit tangent vector at `z` pointing in direction `angle`
    /// (angle measured counterclockwise from the positive real axis).
    pub fn from_point_angle(z: Point, angle: f64) -> Self {
        let y = z.im;
        let sy = y.sqrt();
        let p = Self::new(sy, z.re / sy, 0.0, 1.0 / sy);
        p * Self::rotation(angle - PI / 2.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.det() > 0.0
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }

    /// Divide by sqrt(|det|) to remove accumulated drift.
    pub fn renormalized(&self) -> Self {
        let k = 1.0 / self.det().abs().sqrt();
        Self::new(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    /// Representative with the first nonzero entry positive.
    pub fn canonical(&self) -> Self {
        for v in [self.a, self.b, self.c, self.d] {
            if v != 0.0 {
                return if v < 0.0 { self.neg() } else { *self };
            }
        }
        *self
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Entrywise distance modulo sign.
    pub fn dist_mod_sign(&self, o: &Self) -> f64 {
        let p = (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs());
        let m = (self.a + o.a)
            .abs()
            .max((self.b + o.b).abs())
            .max((self.c + o.c).abs())
            .max((self.d + o.d).abs());
        p.min(m)
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        self.dist_mod_sign(o) <= tol
    }

    /// Action on the upper half-plane (anti-holomorphic when det < 0).
    pub fn act(&self, z: Point) -> Point {
        let w = if self.det() < 0.0 { z.conj() } else { z };
        (w * self.a + self.b) / (w * self.c + self.d)
    }

    /// Action on a boundary point given projectively as (x, y) ~ x/y.
    pub fn act_proj(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Basepoint g*i of the unit tangent vector g.
    pub fn base_point(&self) -> Point {
        let n = self.c * self.c + self.d * self.d;
        Point::new((self.a * self.c + self.b * self.d) / n, self.det().abs() / n)
    }

    /// Direction of the tangent vector at the basepoint, in (-pi, pi].
    pub fn direction(&self) -> f64 {
        let w = Point::new(self.d, self.c);
        wrap_angle(PI / 2.0 - 2.0 * w.arg())
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, o: GroupElement) -> GroupElement {
        GroupElement::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

pub fn compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    (*g * *h).renormalized()
}

pub fn geodesic_step(x: &GroupElement, t: f64) -> GroupElement {
    *x * GroupElement::geodesic(t)
}

pub fn horocycle_step(x: &GroupElement, s: f64) -> GroupElement {
    *x * GroupElement::horocycle(s)
}

pub fn trace_to_length(tr: f64) -> Result<f64, GeomError> {
    let t = tr.abs();
    if !(t > 2.0) {
        return Err(GeomError::NotHyperbolic(t));
    }
    Ok(2.0 * (t / 2.0).acosh())
}

fn dist_h2_unchecked(p: Point, q: Point) -> f64 {
    2.0 * ((p - q).norm() / (2.0 * (p.im * q.im).sqrt())).asinh()
}

pub fn dist_h2(p: Point, q: Point) -> Result<f64, GeomError> {
    if !(p.im > 0.0 && q.im > 0.0) {
        return Err(GeomError::Domain(format!("points must lie in the upper half-plane: {p}, {q}")));
    }
    Ok(dist_h2_unchecked(p, q))
}

/// Left-invariant proxy metric on the unit tangent bundle:
/// sqrt(d(i, g i)^2 + theta^2) for g = x^{-1} y, theta the rotation part of g.
pub fn dist_ut(x: &GroupElement, y: &GroupElement) -> f64 {
    let g = x.inverse() * *y;
    // cosh d - 1 = ((a - d)^2 + (b + c)^2) / 2 for det 1, without cancellation
    let d = 2.0 * ((g.a - g.d).hypot(g.b + g.c) / 2.0).asinh();
    let phi = (g.c - g.b).atan2(g.a + g.d);
    let theta = wrap_angle(2.0 * phi).abs();
    (d * d + theta * theta).sqrt()
}

/// A geodesic in the upper half-plane stored as the Hermitian form
/// `A|z|^2 - 2B Re z + C`, normalized so that `B^2 - AC = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Boundary point of the half-plane; `f64::INFINITY` stands for the point at infinity.
pub type IdealPoint = f64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineDistance {
    pub distance: f64,
    pub coincident: bool,
}

impl GeodesicLine {
    pub fn from_form(a: f64, b: f64, c: f64) -> Self {
        let n = (b * b - a * c).sqrt();
        GeodesicLine { a: a / n, b: b / n, c: c / n }
    }

    pub fn from_endpoints(p: IdealPoint, q: IdealPoint) -> Result<Self, GeomError> {
        if p == q || (p.is_infinite() && q.is_infinite()) {
            return Err(GeomError::Domain("geodesic endpoints must be distinct".into()));
        }
        if p.is_infinite() || q.is_infinite() {
            let x = if p.is_infinite() { q } else { p };
            return Ok(Self::from_form(0.0, 1.0, 2.0 * x));
        }
        Ok(Self::from_form(1.0, (p + q) / 2.0, p * q))
    }

    /// Line through the projective boundary points u, v.
    pub fn from_proj(u: [f64; 2], v: [f64; 2]) -> Self {
        // form vanishing at u and v: proportional to the symmetric product of the covectors
        let (x1, y1) = (u[0], u[1]);
        let (x2, y2) = (v[0], v[1]);
        // q(x,y) = (x*y1 - y*x1)(x*y2 - y*x2) = A x^2 - 2B x y + C y^2
        let a = y1 * y2;
        let b = (x1 * y2 + x2 * y1) / 2.0;
        let c = x1 * x2;
        Self::from_form(a, b, c)
    }

    pub fn imaginary_axis() -> Self {
        Self::from_form(0.0, 1.0, 0.0)
    }

    /// Ordered endpoints p < q (infinity last).
    pub fn endpoints(&self) -> (IdealPoint, IdealPoint) {
        if self.a.abs() < 1e-14 * (self.b.abs() + self.c.abs()) {
            return (self.c / (2.0 * self.b), f64::INFINITY);
        }
        let m = self.b / self.a;
        let r = 1.0 / self.a.abs();
        (m - r, m + r)
    }

    /// Value of the form at z; the sign tells the side of the line.
    pub fn eval(&self, z: Point) -> f64 {
        self.a * z.norm_sqr() - 2.0 * self.b * z.re + self.c
    }

    /// Value of the quadratic form at a projective boundary point.
    pub fn eval_proj(&self, v: [f64; 2]) -> f64 {
        self.a * v[0] * v[0] - 2.0 * self.b * v[0] * v[1] + self.c * v[1] * v[1]
    }

    /// Image under g (either orientation).
    pub fn transform(&self, g: &GroupElement) -> Self {
        let h = g.inverse();
        // Q' = h^T Q h, Q = [[A, -B], [-B, C]]
        let q = GroupElement::new(self.a, -self.b, -self.b, self.c);
        let r = h.transpose() * q * h;
        // B^2 - AC scales by det(h)^2; avoid recomputing it from large entries
        let s = 1.0 / h.det().abs();
        GeodesicLine { a: r.a * s, b: -r.b * s, c: r.d * s }
    }

    /// Minkowski pairing; |.| is cosh of the distance for disjoint lines and
    /// cos of the angle for crossing lines.
    pub fn pairing(&self, o: &Self) -> f64 {
        self.b * o.b - (self.a * o.c + o.a * self.c) / 2.0
    }

    /// Reflection across this line as a determinant -1 matrix.
    pub fn reflection(&self) -> GroupElement {
        // z -> (B conj z - C) / (A conj z - B)
        GroupElement::new(self.b, -self.c, self.a, -self.b)
    }

    pub fn same_line(&self, o: &Self, tol: f64) -> bool {
        let d1 = (self.a - o.a).abs().max((self.b - o.b).abs()).max((self.c - o.c).abs());
        let d2 = (self.a + o.a).abs().max((self.b + o.b).abs()).max((self.c + o.c).abs());
        d1.min(d2) <= tol
    }

    /// Parameter t at which the geodesic t -> g*a_t*i meets this line, if any.
    pub fn crossing_time(&self, g: &GroupElement) -> Option<f64> {
        let fwd = self.eval_proj([g.a, g.c]);
        let bwd = self.eval_proj([g.b, g.d]);
        if fwd == 0.0 || bwd == 0.0 || (fwd > 0.0) == (bwd > 0.0) {
            return None;
        }
        Some(0.5 * (-bwd / fwd).ln())
    }
}

pub fn dist_geodesics(l1: &GeodesicLine, l2: &GeodesicLine) -> LineDistance {
    if l1.same_line(l2, 1e-12) {
        return LineDistance { distance: 0.0, coincident: true };
    }
    let p = l1.pairing(l2).abs();
    let distance = if p > 1.0 { p.acosh() } else { 0.0 };
    LineDistance { distance, coincident: false }
}

/// Dilogarithm Li2(x) on [0, 1].
pub fn dilog(x: f64) -> Result<f64, GeomError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(GeomError::Domain(format!("dilog argument {x} outside [0,1]")));
    }
    if x == 1.0 {
        return Ok(PI * PI / 6.0);
    }
    if x <= 0.5 {
        return Ok(li2_series(x));
    }
    let y = 1.0 - x;
    Ok(PI * PI / 6.0 - x.ln() * y.ln() - li2_series(y))
}

fn li2_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut p = x;
    let mut k = 1.0f64;
    while p > 1e-18 * k * k {
        sum += p / (k * k);
        k += 1.0;
        p *= x;
    }
    sum
}

/// Rogers dilogarithm Li2(x) + log(x)log(1-x)/2 with y = 1 - x supplied exactly.
pub fn rogers(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return PI * PI / 6.0;
    }
    if x <= 0.5 {
        li2_series(x) + 0.5 * x.ln() * y.ln()
    } else {
        PI * PI / 6.0 - 0.5 * x.ln() * y.ln() - li2_series(y)
    }
}

/// Group element stored as (normalized matrix, log scale) so that long
/// products do not overflow.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Scaled {
    pub m: GroupElement,
    pub log_scale: f64,
}

impl Scaled {
    pub fn identity() -> Self {
        Scaled { m: GroupElement::IDENTITY, log_scale: 0.0 }
    }

    pub fn from(m: GroupElement) -> Self {
        Scaled { m, log_scale: 0.0 }.rescaled()
    }

    fn rescaled(self) -> Self {
        let k = self.m.max_abs();
        if k == 0.0 || (0.5..2.0).contains(&k) {
            return self;
        }
        let m = GroupElement::new(self.m.a / k, self.m.b / k, self.m.c / k, self.m.d / k);
        Scaled { m, log_scale: self.log_scale + k.ln() }
    }

    pub fn mul(&self, o: &GroupElement) -> Self {
        Scaled { m: self.m * *o, log_scale: self.log_scale }.rescaled()
    }

    pub fn premul(&self, o: &GroupElement) -> Self {
        Scaled { m: *o * self.m, log_scale: self.log_scale }.rescaled()
    }

    pub fn mul_scaled(&self, o: &Scaled) -> Self {
        Scaled { m: self.m * o.m, log_scale: self.log_scale + o.log_scale }.rescaled()
    }

    pub fn conj_by(&self, r: &GroupElement) -> Self {
        Scaled { m: r.inverse() * self.m * *r, log_scale: self.log_scale }.rescaled()
    }

    /// Plain matrix, if it fits in a double.
    pub fn to_matrix(&self) -> Option<GroupElement> {
        if self.log_scale > 700.0 {
            return None;
        }
        let k = self.log_scale.exp();
        Some(GroupElement::new(self.m.a * k, self.m.b * k, self.m.c * k, self.m.d * k))
    }

    /// log |trace|
    pub fn log_abs_trace(&self) -> f64 {
        self.log_scale + self.m.trace().abs().ln()
    }

    pub fn translation_length(&self) -> Result<f64, GeomError> {
        let lt = self.log_abs_trace();
        if lt > 30.0 {
            return Ok(2.0 * lt);
        }
        trace_to_length(lt.exp())
    }

    /// Equality up to sign, comparing normalized matrices and scales.
    pub fn approx_eq_proj(&self, o: &Scaled, tol: f64) -> bool {
        let ka = self.m.max_abs();
        let kb = o.m.max_abs();
        if ((self.log_scale + ka.ln()) - (o.log_scale + kb.ln())).abs() > tol {
            return false;
        }
        let a = GroupElement::new(self.m.a / ka, self.m.b / ka, self.m.c / ka, self.m.d / ka);
        let b = GroupElement::new(o.m.a / kb, o.m.b / kb, o.m.c / kb, o.m.d / kb);
        a.dist_mod_sign(&b) <= tol
    }

    /// Attracting and repelling fixed points (projective), for a hyperbolic element.
    pub fn axis(&self) -> Result<([f64; 2], [f64; 2]), GeomError> {
        let mut m = self.m;
        if m.trace() < 0.0 {
            m = m.neg();
        }
        let tr = m.trace();
        // det of the normalized matrix is e^{-2 log_scale}
        let det = if self.log_scale > 350.0 { 0.0 } else { m.det() };
        let disc = tr * tr - 4.0 * det;
        if !(disc > 0.0) || self.log_abs_trace() <= 2f64.ln() {
            return Err(GeomError::NotHyperbolic(self.log_abs_trace().exp()));
        }
        let sq = disc.sqrt();
        let lam = (tr + sq) / 2.0;
        let mu = if lam != 0.0 { det / lam } else { 0.0 };
        Ok((eigvec(&m, lam), eigvec(&m, mu)))
    }
}

fn eigvec(m: &GroupElement, lam: f64) -> [f64; 2] {
    let v1 = [m.b, lam - m.a];
    let v2 = [lam - m.d, m.c];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    if n1 >= n2 {
        [v1[0] / n1, v1[1] / n1]
    } else {
        [v2[0] / n2, v2[1] / n2]
    }
}

/// Unit tangent vector along the oriented geodesic from `minus` to `plus`.
pub fn frame_on_axis(plus: [f64; 2], minus: [f64; 2]) -> GroupElement {
    let mut g = GroupElement::new(plus[0], minus[0], plus[1], minus[1]);
    if g.det() < 0.0 {
        g = GroupElement::new(plus[0], -minus[0], plus[1], -minus[1]);
    }
    g.renormalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flows_are_one_parameter_groups() {
        let g = GroupElement::geodesic(0.3) * GroupElement::geodesic(0.9);
        assert!(g.approx_eq(&GroupElement::geodesic(1.2), 1e-14));
        let x = GroupElement::from_point_angle(Point::new(0.4, 1.7), 0.8);
        let h = horocycle_step(&horocycle_step(&x, 1.0), 2.0);
        assert!(h.approx_eq(&horocycle_step(&x, 3.0), 1e-12));
        assert!(geodesic_step(&x, 0.0).approx_eq(&x, 0.0));
    }

    #[test]
    fn geodesic_from_identity_moves_up_the_axis() {
        for t in [0.5, 1.0, 3.0] {
            let z = geodesic_step(&GroupElement::IDENTITY, t).base_point();
            assert!((z - Point::new(0.0, t.exp())).norm() < 1e-12 * t.exp());
        }
    }

    #[test]
    fn conjugation_identity() {
        let x = GroupElement::from_point_angle(Point::new(-0.3, 0.6), 2.0);
        let (t, s) = (1.3, -0.7);
        let lhs = geodesic_step(&horocycle_step(&geodesic_step(&x, t), s), -t);
        let rhs = horocycle_step(&x, t.exp() * s);
        assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn trace_length_examples() {
        assert!((trace_to_length(2.0 * 1.0f64.cosh()).unwrap() - 2.0).abs() < 1e-12);
        assert!((trace_to_length(-2.0 * 1.5f64.cosh()).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(trace_to_length(2.0), Err(GeomError::NotHyperbolic(_))));
    }

    #[test]
    fn half_plane_distance() {
        let i = Point::new(0.0, 1.0);
        assert_eq!(dist_h2(i, i).unwrap(), 0.0);
        let e = Point::new(0.0, 1f64.exp());
        assert!((dist_h2(i, e).unwrap() - 1.0).abs() < 1e-14);
        assert!(dist_h2(i, Point::new(0.0, 0.0)).is_err());
        // arccosh form
        let p = Point::new(0.3, 0.2);
        let q = Point::new(-1.1, 2.5);
        let ac = (1.0 + (p - q).norm_sqr() / (2.0 * p.im * q.im)).acosh();
        assert!((dist_h2(p, q).unwrap() - ac).abs() < 1e-12);
    }

    #[test]
    fn line_distances() {
        let l1 = GeodesicLine::from_endpoints(-1.0, 1.0).unwrap();
        let e = 1f64.exp();
        let l2 = GeodesicLine::from_endpoints(-e, e).unwrap();
        let d = dist_geodesics(&l1, &l2);
        assert!((d.distance - 1.0).abs() < 1e-14 && !d.coincident);
        assert!(dist_geodesics(&l1, &l1).coincident);
        let l3 = GeodesicLine::from_endpoints(0.0, 5.0).unwrap();
        assert_eq!(dist_geodesics(&l1, &l3).distance, 0.0);
        let v = GeodesicLine::imaginary_axis();
        assert_eq!(v.endpoints(), (0.0, f64::INFINITY));
        assert_eq!(l2.endpoints(), (-e, e));
    }

    #[test]
    fn reflection_fixes_line() {
        let l = GeodesicLine::from_endpoints(0.5, 3.0).unwrap();
        let r = l.reflection();
        assert!((r.det() + 1.0).abs() < 1e-12);
        let z = Point::new(1.75, 1.25);
        assert!((r.act(z) - z).norm() < 1e-12);
        let w = Point::new(0.1, 0.3);
        assert!((r.act(r.act(w)) - w).norm() < 1e-12);
        assert!(l.eval(w) * l.eval(r.act(w)) < 0.0);
    }

    #[test]
    fn crossing_time_on_axis() {
        let l = GeodesicLine::from_endpoints(-2.0, 2.0).unwrap();
        let t = l.crossing_time(&GroupElement::IDENTITY).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn dilog_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-15);
        // Li2(1/2) = pi^2/12 - ln(2)^2/2
        let half = PI * PI / 12.0 - 2f64.ln().powi(2) / 2.0;
        assert!((dilog(0.5).unwrap() - half).abs() < 1e-14);
        assert!(dilog(1.5).is_err() && dilog(-0.1).is_err());
        for x in [0.51, 0.7, 0.9, 0.999] {
            assert!((rogers(x, 1.0 - x) - dilog(x).unwrap() - 0.5 * x.ln() * (1.0 - x).ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn dist_ut_basics() {
        let g = GroupElement::from_point_angle(Point::new(0.2, 1.4), -1.0);
        assert!(dist_ut(&g, &g) < 1e-12);
        assert!(dist_ut(&g, &g.neg()) < 1e-12);
        let mut prev = 0.0;
        for k in 1..=100 {
            let d = dist_ut(&GroupElement::IDENTITY, &GroupElement::geodesic(k as f64 / 100.0));
            assert!(d > prev);
            prev = d;
        }
    }

    #[test]
    fn scaled_products_track_length() {
        let h = GroupElement::new(2.0, 1.0, 1.0, 1.0);
        let l = trace_to_length(h.trace()).unwrap();
        let mut s = Scaled::identity();
        for _ in 0..2000 {
            s = s.mul(&h);
        }
        assert!((s.translation_length().unwrap() - 2000.0 * l).abs() < 1e-8);
        let (p, q) = Scaled::from(h).axis().unwrap();
        let (pp, qq) = s.axis().unwrap();
        assert!((p[0] * pp[1] - p[1] * pp[0]).abs() < 1e-10);
        assert!((q[0] * qq[1] - q[1] * qq[0]).abs() < 1e-10);
    }

    #[test]
    fn frame_points_along_axis() {
        let g = frame_on_axis([3.0, 1.0], [-1.0, 1.0]);
        let f = g * GroupElement::geodesic(40.0);
        assert!((f.base_point() - Point::new(3.0, 0.0)).norm() < 1e-6);
        let b = g * GroupElement::geodesic(-40.0);
        assert!((b.base_point() - Point::new(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn translation_to_moves_i() {
        let z = Point::new(0.7, 0.2);
        let g = GroupElement::translation_to(z);
        assert!((g.base_point() - z).norm() < 1e-12);
        // a pure transvection has no rotation part
        assert!((g.b - g.c).abs() < 1e-12);
    }
}
