//! The right-angled hexagon with three cuff sides of length c/2 and its
//! reflection tiling of the hyperbolic plane.
//!
//! Letters 0,1,2 are the seam reflections s1,s2,s3 and letters 3,4,5 the cuff
//! reflections r1,r2,r3. Seam S_k is opposite cuff C_k. Cyclic order of the
//! sides is C1, S3, C2, S1, C3, S2, so r_i and s_j commute when i != j.

use crate::moebius::{dist_h2, GeodesicLine, GroupElement, Point};

pub type Letter = u8;

pub const SEAMS: [Letter; 3] = [0, 1, 2];
pub const CUFFS: [Letter; 3] = [3, 4, 5];

pub fn is_cuff(l: Letter) -> bool {
    l >= 3
}

/// Cuff letter for cuff index k in 0..3, seam letter for seam index k.
pub fn cuff_letter(k: u8) -> Letter {
    3 + k
}

/// Image in (Z/2)^2 encoded as bit 0 = seam parity, bit 1 = cuff parity.
pub fn label_of(l: Letter) -> u8 {
    if is_cuff(l) {
        2
    } else {
        1
    }
}

pub fn word_label(w: &[Letter]) -> u8 {
    w.iter().fold(0, |acc, &l| acc ^ label_of(l))
}

/// Two distinct letters commute iff their sides are adjacent.
pub fn commute(x: Letter, y: Letter) -> bool {
    x == y || (is_cuff(x) != is_cuff(y) && x % 3 != y % 3)
}

/// Representatives of the four tiles of the fundamental domain, by label.
pub const DOMAIN_TILES: [&[Letter]; 4] = [&[], &[0], &[5], &[0, 5]];

#[derive(Clone, Debug)]
pub struct Hexagon {
    pub cuff_length: f64,
    pub seam_length: f64,
    /// Side lines indexed by letter.
    pub lines: [GeodesicLine; 6],
    /// Sign of each side form at interior points.
    pub inside: [f64; 6],
    pub refl: [GroupElement; 6],
    pub center: Point,
    /// Vertices with the two letters of the sides meeting there.
    pub vertices: Vec<(Point, [Letter; 2])>,
    /// Largest distance from the center to a vertex.
    pub circumradius: f64,
}

fn circle(p: f64, q: f64) -> GeodesicLine {
    GeodesicLine::from_endpoints(p, q).expect("distinct endpoints")
}

fn perpendicular_endpoints(radius: f64, seam: f64) -> (f64, f64) {
    // Geodesic meeting |z| = radius orthogonally at distance `seam` from i*radius.
    let sum = 2.0 * radius / seam.tanh();
    let prod = radius * radius;
    let d = (sum * sum - 4.0 * prod).sqrt();
    ((sum - d) / 2.0, (sum + d) / 2.0)
}

/// Fixed point in the upper half-plane of an elliptic element.
fn elliptic_fixed_point(m: &GroupElement) -> Point {
    // c z^2 + (d - a) z - b = 0
    let a = m.c;
    let b = m.d - m.a;
    let c = -m.b;
    let disc = b * b - 4.0 * a * c;
    let sq = Point::new(disc, 0.0).sqrt();
    let z1 = (-b + sq) / (2.0 * a);
    let z2 = (-b - sq) / (2.0 * a);
    if z1.im > 0.0 {
        z1
    } else {
        z2
    }
}

/// Axis endpoints of a hyperbolic element (finite case).
fn hyperbolic_fixed_points(m: &GroupElement) -> (f64, f64) {
    let a = m.c;
    let b = m.d - m.a;
    let c = -m.b;
    let sq = (b * b - 4.0 * a * c).sqrt();
    let z1 = (-b + sq) / (2.0 * a);
    let z2 = (-b - sq) / (2.0 * a);
    (z1.min(z2), z1.max(z2))
}

fn klein_center(points: &[Point]) -> Point {
    // average in the Klein model, mapped back to the half-plane
    let i = Point::new(0.0, 1.0);
    let mut acc = Point::new(0.0, 0.0);
    for &z in points {
        let w = (z - i) / (z + i);
        acc += w * 2.0 / (1.0 + w.norm_sqr());
    }
    let k = acc / points.len() as f64;
    let w = k / (1.0 + (1.0 - k.norm_sqr()).sqrt());
    i * (Point::new(1.0, 0.0) + w) / (Point::new(1.0, 0.0) - w)
}

impl Hexagon {
    pub fn new(cuff_length: f64) -> Self {
        let h = cuff_length / 2.0;
        let seam = (h.cosh() / (h.cosh() - 1.0)).acosh();
        let r = h.exp();
        let c1 = GeodesicLine::imaginary_axis();
        let s2 = circle(-1.0, 1.0);
        let s3 = circle(-r, r);
        let (p2, q2) = perpendicular_endpoints(r, seam);
        let c2 = circle(p2, q2);
        let (p3, q3) = perpendicular_endpoints(1.0, seam);
        let c3 = circle(p3, q3);
        let (p1, q1) = hyperbolic_fixed_points(&(c2.reflection() * c3.reflection()));
        let s1 = circle(p1, q1);
        let raw = [s1, s2, s3, c1, c2, c3];

        let corners: [[Letter; 2]; 6] = [[3, 2], [2, 4], [4, 0], [0, 5], [5, 1], [1, 3]];
        let verts: Vec<Point> = corners
            .iter()
            .map(|&[x, y]| elliptic_fixed_point(&(raw[x as usize].reflection() * raw[y as usize].reflection())))
            .collect();
        let center = klein_center(&verts);
        // move the center to i
        let t = GroupElement::translation_to(center).inverse();
        let lines = raw.map(|l| l.transform(&t));
        let refl = lines.map(|l| l.reflection());
        let ci = Point::new(0.0, 1.0);
        let inside = lines.map(|l| l.eval(ci).signum());
        let vertices: Vec<(Point, [Letter; 2])> =
            verts.iter().zip(corners.iter()).map(|(&v, &c)| (t.act(v), c)).collect();
        let circumradius = vertices.iter().map(|(v, _)| dist_h2(ci, *v).unwrap()).fold(0.0, f64::max);
        Hexagon {
            cuff_length,
            seam_length: seam,
            lines,
            inside,
            refl,
            center: ci,
            vertices,
            circumradius,
        }
    }

    pub fn side_value(&self, j: usize, z: Point) -> f64 {
        self.lines[j].eval(z) * self.inside[j]
    }

    pub fn contains(&self, z: Point, tol: f64) -> bool {
        (0..6).all(|j| self.side_value(j, z) >= -tol)
    }

    /// Product of the reflections of a word, left to right.
    pub fn element(&self, w: &[Letter]) -> GroupElement {
        w.iter().fold(GroupElement::IDENTITY, |acc, &l| acc * self.refl[l as usize])
    }

    /// Reflect z into the hexagon; returns (z0, w) with z = w(z0).
    pub fn locate(&self, z: Point, max_steps: usize) -> Option<(Point, Vec<Letter>)> {
        self.locate_tol(z, max_steps, 0.0)
    }

    /// As `locate`, ignoring side violations of size at most `tol`.
    pub fn locate_tol(&self, z: Point, max_steps: usize, tol: f64) -> Option<(Point, Vec<Letter>)> {
        let mut z = z;
        let mut word = Vec::new();
        for _ in 0..max_steps {
            let mut worst = None;
            let mut worst_v = -tol;
            for j in 0..6 {
                let v = self.side_value(j, z);
                if v < worst_v {
                    worst_v = v;
                    worst = Some(j);
                }
            }
            match worst {
                None => return Some((z, word)),
                Some(j) => {
                    z = self.refl[j].act(z);
                    if word.last() == Some(&(j as Letter)) {
                        word.pop();
                    } else {
                        word.push(j as Letter);
                    }
                }
            }
        }
        None
    }
}

/// Free reduction for words in W: cancels equal letters separated only by
/// letters commuting with them.
pub fn reduce(word: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(word.len());
    for &l in word {
        let mut cancel = None;
        for i in (0..out.len()).rev() {
            if out[i] == l {
                cancel = Some(i);
                break;
            }
            if !commute(out[i], l) {
                break;
            }
        }
        match cancel {
            Some(i) => {
                out.remove(i);
            }
            None => out.push(l),
        }
    }
    out
}

pub fn inverse_word(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::dist_geodesics;

    #[test]
    fn hexagon_side_lengths() {
        for c in [0.5, 1.5, 2.0, 4.0] {
            let h = Hexagon::new(c);
            let l = &h.lines;
            // cuff C_k is the common perpendicular of the two seams other than S_k
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let d = dist_geodesics(&l[i], &l[j]).distance;
                assert!((d - c / 2.0).abs() < 1e-9, "c={c} k={k} d={d}");
                let e = dist_geodesics(&l[3 + i], &l[3 + j]).distance;
                assert!((e - h.seam_length).abs() < 1e-9);
            }
            // adjacent sides are orthogonal
            for &(_, [x, y]) in &h.vertices {
                assert!(l[x as usize].pairing(&l[y as usize]).abs() < 1e-9);
            }
            assert!(h.contains(h.center, 0.0));
        }
    }

    #[test]
    fn locate_reflects_into_hexagon() {
        let h = Hexagon::new(1.5);
        for z in [Point::new(3.0, 0.2), Point::new(-2.0, 5.0), Point::new(0.01, 0.01)] {
            let (z0, w) = h.locate(z, 10_000).unwrap();
            assert!(h.contains(z0, 1e-12));
            let back = h.element(&w).act(z0);
            assert!((back - z).norm() < 1e-8 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn reduce_uses_commutations() {
        // s2 r1 s2 = r1 since S2 and C1 are adjacent
        assert_eq!(reduce(&[1, 3, 1]), vec![3]);
        // s1 s2 s1 does not reduce
        assert_eq!(reduce(&[0, 1, 0]), vec![0, 1, 0]);
        assert!(commute(0, 4) && !commute(0, 3) && !commute(0, 1));
    }

    #[test]
    fn commuting_reflections_commute() {
        let h = Hexagon::new(1.5);
        for x in 0..6u8 {
            for y in 0..6u8 {
                let a = h.refl[x as usize] * h.refl[y as usize];
                let b = h.refl[y as usize] * h.refl[x as usize];
                assert_eq!(commute(x, y), a.approx_eq(&b, 1e-9), "{x} {y}");
            }
        }
    }
}
