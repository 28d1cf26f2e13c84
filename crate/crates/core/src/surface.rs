//! The closed genus-2 surface glued from two copies of the pants without
//! twist, its fundamental domain and closed geodesics.
//!
//! The surface group is the kernel of the label map from the hexagon
//! reflection group onto (Z/2)^2. Pants Q0 is made of the tiles with cuff
//! parity 0, pants Q1 of those with cuff parity 1. The fundamental domain is
//! the union of the four tiles I, s1, r3, s1 r3 around the S1/C3 corner.

use crate::moebius::{frame_on_axis, GeodesicLine, GroupElement, Point, Scaled};
use crate::pants::{build_pants, PantsGroup};
use crate::tiling::{commute, inverse_word, is_cuff, label_of, reduce, word_label, Hexagon, Letter, DOMAIN_TILES};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("normalization did not terminate for basepoint {0}")]
    Normalization(String),
    #[error("closed geodesic budget of {0} records exceeded")]
    BudgetExceeded(usize),
    #[error("element is not hyperbolic (|tr| = {0})")]
    NotHyperbolic(f64),
    #[error("axis walk failed: {0}")]
    Walk(String),
}

impl From<crate::moebius::GeomError> for SurfaceError {
    fn from(e: crate::moebius::GeomError) -> Self {
        match e {
            crate::moebius::GeomError::NotHyperbolic(t) => SurfaceError::NotHyperbolic(t),
            other => SurfaceError::Walk(other.to_string()),
        }
    }
}

pub const MAX_NORMALIZE_MOVES: usize = 10_000;
/// Side violations below this are treated as on the boundary.
const LOCATE_TOL: f64 = 1e-12;
/// Crossing parameters closer than this are a corner passage.
const CORNER_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct DomainTile {
    pub word: Vec<Letter>,
    pub element: GroupElement,
    pub lines: [GeodesicLine; 6],
    pub inside: [f64; 6],
    pub vertices: Vec<Point>,
}

/// Fundamental polygon as four labelled tiles, with the deck move attached
/// to every tile side (none for the four internal edges).
#[derive(Clone, Debug)]
pub struct DomainNormalizer {
    pub tiles: Vec<DomainTile>,
    pub moves: [[Option<GroupElement>; 6]; 4],
    pub move_words: Vec<Vec<Vec<Letter>>>,
}

#[derive(Clone, Debug)]
pub struct PantsCurve {
    pub element: GroupElement,
    pub axis: GeodesicLine,
    pub length: f64,
}

/// A deck transformation near the identity tile: g is a word in the
/// reflection group with g*H close to H.
#[derive(Clone, Debug)]
pub struct Neighbour {
    pub word: Vec<Letter>,
    pub g: GroupElement,
    pub label: u8,
    pub dist: f64,
}

#[derive(Clone, Debug)]
pub struct DeckCandidate {
    /// Index into `SurfaceGroup::neighbours`.
    pub neighbour: usize,
    pub delta: GroupElement,
}

#[derive(Clone, Debug)]
pub struct SurfaceGroup {
    pub genus: u32,
    pub cuff_length: f64,
    pub hex: Hexagon,
    /// Both pants are this group; Q1 is its conjugate by r3.
    pub pants: PantsGroup,
    pub pants_conjugators: [Vec<Letter>; 2],
    pub generators: [GroupElement; 4],
    pub generator_words: [Vec<Letter>; 4],
    /// Relator in generator indices (1-based, negative for inverses).
    pub relator: Vec<i8>,
    pub pants_curves: [PantsCurve; 3],
    pub euler_abs: u32,
    pub domain: DomainNormalizer,
    pub neighbour_radius: f64,
    pub neighbours: Vec<Neighbour>,
    /// Candidates indexed by [label of x][label of y].
    pub candidates: Vec<Vec<Vec<DeckCandidate>>>,
}

pub const NEIGHBOUR_RADIUS: f64 = 1.5;

pub fn build_surface(c: f64) -> Result<SurfaceGroup, SurfaceError> {
    if !(c > 0.0 && c <= 4.0) {
        return Err(SurfaceError::Construction(format!("cuff length {c} outside (0, 4]")));
    }
    let pants = build_pants(c).map_err(|e| SurfaceError::Construction(e.to_string()))?;
    let hex = pants.hex.clone();
    let generator_words: [Vec<Letter>; 4] = [vec![1, 2], vec![2, 0], vec![3, 5], vec![4, 5]];
    let generators = generator_words.clone().map(|w| hex.element(&w));
    // g1 g2 = h1 h2 with h_i = t_i^{-1} g_i t_i the cuffs of the second pants
    let relator = vec![1, 2, -4, -2, 4, -3, -1, 3];
    let r = eval_relator(&generators, &relator);
    let res = r.dist_mod_sign(&GroupElement::IDENTITY);
    if res > 1e-6 {
        return Err(SurfaceError::Construction(format!("relator residual {res}")));
    }
    let g = pants.generators;
    let pants_curves = [0u8, 1, 2].map(|k| PantsCurve {
        element: g[k as usize],
        axis: pants.cuff_axis(k),
        length: crate::moebius::trace_to_length(g[k as usize].trace()).unwrap_or(0.0),
    });
    for pc in &pants_curves {
        if (pc.length - c).abs() > 1e-6 {
            return Err(SurfaceError::Construction(format!("pants curve length {}", pc.length)));
        }
    }
    let domain = build_domain(&hex);
    let neighbour_radius = NEIGHBOUR_RADIUS;
    let neighbours: Vec<Neighbour> = tiles_within(&hex, neighbour_radius + 2.0 * hex.circumradius, true)
        .into_iter()
        .map(|t| Neighbour { dist: t.dist, label: t.label, g: t.g, word: t.word })
        .collect();
    let mut candidates = vec![vec![Vec::new(); 4]; 4];
    for (kx, row) in candidates.iter_mut().enumerate() {
        for (ky, cell) in row.iter_mut().enumerate() {
            let wx_inv = domain.tiles[kx].element.inverse();
            let wy = domain.tiles[ky].element;
            for (i, n) in neighbours.iter().enumerate() {
                if n.label == (kx ^ ky) as u8 {
                    cell.push(DeckCandidate { neighbour: i, delta: (wy * n.g * wx_inv).renormalized() });
                }
            }
        }
    }
    let s = SurfaceGroup {
        genus: 2,
        cuff_length: c,
        hex,
        pants,
        pants_conjugators: [vec![], vec![5]],
        generators,
        generator_words,
        relator,
        pants_curves,
        euler_abs: 2,
        domain,
        neighbour_radius,
        neighbours,
        candidates,
    };
    let sys = s.shortest_translation(6);
    if (sys - c).abs() > 1e-6 {
        return Err(SurfaceError::Construction(format!("shortest translation {sys} differs from c")));
    }
    Ok(s)
}

fn eval_relator(gens: &[GroupElement; 4], rel: &[i8]) -> GroupElement {
    rel.iter().fold(GroupElement::IDENTITY, |acc, &l| {
        let g = gens[(l.unsigned_abs() - 1) as usize];
        acc * if l > 0 { g } else { g.inverse() }
    })
}

fn build_domain(hex: &Hexagon) -> DomainNormalizer {
    let tiles: Vec<DomainTile> = DOMAIN_TILES
        .iter()
        .map(|w| {
            let element = hex.element(w);
            let lines = hex.lines.map(|l| l.transform(&element));
            let center = element.act(hex.center);
            let inside = lines.map(|l| l.eval(center).signum());
            let vertices = hex.vertices.iter().map(|(v, _)| element.act(*v)).collect();
            DomainTile { word: w.to_vec(), element, lines, inside, vertices }
        })
        .collect();
    let mut moves = [[None; 6]; 4];
    let mut move_words = vec![vec![Vec::new(); 6]; 4];
    for k in 0..4 {
        for j in 0..6u8 {
            let k2 = k ^ label_of(j) as usize;
            let mut w = DOMAIN_TILES[k2].to_vec();
            w.push(j);
            w.extend(inverse_word(DOMAIN_TILES[k]));
            let w = reduce(&w);
            if !w.is_empty() {
                moves[k][j as usize] = Some(hex.element(&w));
            }
            move_words[k][j as usize] = w;
        }
    }
    DomainNormalizer { tiles, moves, move_words }
}

/// A tile g*H found by the ball search.
#[derive(Clone, Debug)]
pub struct Tile {
    pub word: Vec<Letter>,
    pub g: GroupElement,
    pub label: u8,
    pub dist: f64,
}

/// All tiles whose centre lies within distance r of the centre of H. Each
/// tile is reached from its parent across its smallest wall facing H.
pub fn tiles_within(hex: &Hexagon, r: f64, keep_words: bool) -> Vec<Tile> {
    let mut out = Vec::new();
    for_each_tile_within(hex, r, |word, g, label, dist| {
        out.push(Tile { word: if keep_words { word.to_vec() } else { vec![] }, g: *g, label, dist });
    });
    out.sort_by(|a, b| a.word.len().cmp(&b.word.len()).then_with(|| a.dist.total_cmp(&b.dist)));
    out
}

/// Depth-first walk of the same tile tree as `tiles_within`, without
/// storing it. The callback gets the word, element, label and distance.
///
/// The walls of gH separating it from H are the right descents of g, so the
/// parent rule is decided on words: a letter j extends w when it is not a
/// descent of w and is the smallest descent of wj.
pub fn for_each_tile_within(hex: &Hexagon, r: f64, mut f: impl FnMut(&[Letter], &GroupElement, u8, f64)) {
    fn visit(
        hex: &Hexagon,
        r: f64,
        word: &mut Vec<Letter>,
        g: GroupElement,
        label: u8,
        descents: u8,
        f: &mut dyn FnMut(&[Letter], &GroupElement, u8, f64),
    ) {
        let ci = hex.center;
        for j in 0..6u8 {
            if descents & (1 << j) != 0 {
                continue;
            }
            let kept = (0..6u8).filter(|&l| descents & (1 << l) != 0 && commute(l, j)).fold(0u8, |m, l| m | (1 << l));
            if kept & ((1 << j) - 1) != 0 {
                continue;
            }
            let child = g * hex.refl[j as usize];
            let dist = crate::moebius::dist_h2(ci, child.act(ci)).unwrap_or(f64::INFINITY);
            if dist > r {
                continue;
            }
            word.push(j);
            let lab = label ^ label_of(j);
            f(word, &child, lab, dist);
            visit(hex, r, word, child, lab, kept | (1 << j), f);
            word.pop();
        }
    }
    f(&[], &GroupElement::IDENTITY, 0, 0.0);
    visit(hex, r, &mut Vec::new(), GroupElement::IDENTITY, 0, 0, &mut f);
}

/// Result of walking the axis of a closed geodesic through the tiling.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CuttingSequence {
    /// Letters crossed over one period, each with the label of the tile entered.
    Regular(Vec<(Letter, u8)>),
    /// Axis on a cuff line: the pants curve itself, traversed `power` times.
    Cuff { curve: u8, power: u32, orientation: i8 },
    /// Axis on a seam line: the closed curve made of the two seams S_k.
    Seam { seam: u8, power: u32, orientation: i8 },
}

/// Compact text form: `R:` followed by letter and label digit pairs, or
/// `C:curve:power:sign` and `S:seam:power:sign` for the special axes.
impl fmt::Display for CuttingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CuttingSequence::Regular(s) => {
                write!(f, "R:")?;
                for &(l, lab) in s {
                    write!(f, "{l}{lab}")?;
                }
                Ok(())
            }
            CuttingSequence::Cuff { curve, power, orientation } => {
                write!(f, "C:{curve}:{power}:{}", if *orientation > 0 { '+' } else { '-' })
            }
            CuttingSequence::Seam { seam, power, orientation } => {
                write!(f, "S:{seam}:{power}:{}", if *orientation > 0 { '+' } else { '-' })
            }
        }
    }
}

impl FromStr for CuttingSequence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad cutting sequence {s:?}");
        if let Some(body) = s.strip_prefix("R:") {
            let d: Vec<u8> = body.bytes().map(|b| b.wrapping_sub(b'0')).collect();
            if d.is_empty() || !d.len().is_multiple_of(2) || d.chunks(2).any(|p| p[0] > 5 || p[1] > 3) {
                return Err(bad());
            }
            return Ok(CuttingSequence::Regular(d.chunks(2).map(|p| (p[0], p[1])).collect()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let k: u8 = parts[1].parse().map_err(|_| bad())?;
        let power: u32 = parts[2].parse().map_err(|_| bad())?;
        let orientation = match parts[3] {
            "+" => 1,
            "-" => -1,
            _ => return Err(bad()),
        };
        if k > 2 || power == 0 {
            return Err(bad());
        }
        match parts[0] {
            "C" => Ok(CuttingSequence::Cuff { curve: k, power, orientation }),
            "S" => Ok(CuttingSequence::Seam { seam: k, power, orientation }),
            _ => Err(bad()),
        }
    }
}

impl CuttingSequence {
    /// Canonical representative up to the starting point.
    pub fn canonical(&self) -> CuttingSequence {
        match self {
            CuttingSequence::Regular(s) => CuttingSequence::Regular(least_rotation(&seams_first(s))),
            other => other.clone(),
        }
    }

    pub fn power(&self) -> u32 {
        match self {
            CuttingSequence::Regular(s) => (s.len() / primitive_period(s)) as u32,
            CuttingSequence::Cuff { power, .. } | CuttingSequence::Seam { power, .. } => *power,
        }
    }

    /// The primitive closed geodesic underlying this one.
    pub fn root(&self) -> CuttingSequence {
        match self {
            CuttingSequence::Regular(s) => CuttingSequence::Regular(s[..primitive_period(s)].to_vec()),
            CuttingSequence::Cuff { curve, orientation, .. } => {
                CuttingSequence::Cuff { curve: *curve, power: 1, orientation: *orientation }
            }
            CuttingSequence::Seam { seam, orientation, .. } => {
                CuttingSequence::Seam { seam: *seam, power: 1, orientation: *orientation }
            }
        }
    }

    /// Word in the reflection letters whose product is conjugate to the element.
    pub fn word(&self) -> Vec<Letter> {
        match self {
            CuttingSequence::Regular(s) => s.iter().map(|&(l, _)| l).collect(),
            CuttingSequence::Cuff { curve, power, orientation } => {
                let (a, b) = other_two(*curve);
                let unit = if *orientation > 0 { [a, b] } else { [b, a] };
                unit.repeat(*power as usize)
            }
            CuttingSequence::Seam { seam, power, orientation } => {
                let (a, b) = other_two(*seam);
                let unit = if *orientation > 0 { [3 + a, 3 + b] } else { [3 + b, 3 + a] };
                unit.repeat(*power as usize)
            }
        }
    }
}

/// Commutation normal form of a cyclic symbol sequence: every seam moves
/// back past the cuffs it commutes with. The order in which a geodesic
/// crosses two perpendicular sides at a corner is not a conjugacy invariant
/// of the word, so classes are compared in this form.
pub fn seams_first(s: &[(Letter, u8)]) -> Vec<(Letter, u8)> {
    let mut s = s.to_vec();
    let n = s.len();
    if n < 2 {
        return s;
    }
    // a seam commuting with every other letter would circle forever
    let movable = |s: &[(Letter, u8)], i: usize| {
        let (l, _) = s[i];
        !is_cuff(l) && (0..n).any(|j| j != i && !commute(s[j].0, l))
    };
    loop {
        let mut changed = false;
        for q in 0..n {
            let p = (q + n - 1) % n;
            let (lp, _) = s[p];
            let (lq, _) = s[q];
            if is_cuff(lp) && !is_cuff(lq) && commute(lp, lq) && movable(&s, q) {
                let before = s[(p + n - 1) % n].1;
                s[p] = (lq, before ^ label_of(lq));
                s[q] = (lp, before ^ label_of(lq) ^ label_of(lp));
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

/// Cyclically reduce a reflection word read in the frame of a tile with the
/// given label: returns the reduced word and the label of its frame.
pub fn cyclic_reduce(word: &[Letter], label: u8) -> (Vec<Letter>, u8) {
    let mut w = reduce(word);
    let mut label = label;
    'outer: loop {
        for x in 0..6u8 {
            let first = w.iter().position(|&l| l == x);
            let last = w.iter().rposition(|&l| l == x);
            let (Some(i), Some(j)) = (first, last) else { continue };
            if i == j {
                continue;
            }
            if w[..i].iter().all(|&l| commute(l, x)) && w[j + 1..].iter().all(|&l| commute(l, x)) {
                w.remove(j);
                w.remove(i);
                label ^= label_of(x);
                continue 'outer;
            }
        }
        return (w, label);
    }
}

/// Axes on a tile side: words in the two seams adjacent to a cuff run
/// along that cuff, words in two cuffs along the seam between them.
fn special_from_symbols(s: &[(Letter, u8)]) -> Option<CuttingSequence> {
    let cuffs = s.iter().all(|&(l, _)| !is_cuff(l));
    let seams = s.iter().all(|&(l, _)| is_cuff(l));
    if !cuffs && !seams {
        return None;
    }
    let letters: Vec<u8> = s.iter().map(|&(l, _)| l % 3).collect();
    let (a, b) = (*letters.iter().min()?, *letters.iter().max()?);
    if a == b || letters.iter().any(|&l| l != a && l != b) {
        return None;
    }
    let k = 3 - a - b;
    let n = s.len();
    let i = letters.iter().position(|&l| l == a)?;
    let before = s[(i + n - 1) % n].1;
    let orientation = SPECIAL_ORIENTATION[seams as usize][(before & 1) as usize][(before >> 1) as usize];
    let power = (n / 2) as u32;
    Some(if cuffs {
        CuttingSequence::Cuff { curve: k, power, orientation }
    } else {
        CuttingSequence::Seam { seam: k, power, orientation }
    })
}

/// Orientation of a side axis whose word starts with the smaller letter,
/// by [seam axis][seam parity][cuff parity] of the tile before it.
const SPECIAL_ORIENTATION: [[[i8; 2]; 2]; 2] = [[[-1, -1], [1, 1]], [[-1, 1], [-1, 1]]];

fn other_two(k: u8) -> (u8, u8) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Booth's least rotation.
pub fn least_rotation<T: Ord + Clone>(s: &[T]) -> Vec<T> {
    let n = s.len();
    if n == 0 {
        return vec![];
    }
    let mut f: Vec<isize> = vec![-1; 2 * n];
    let mut k = 0usize;
    // i ranges over -1.., so offsets are taken in signed arithmetic
    let at = |k: usize, i: isize| &s[(k as isize + i + 1) as usize % n];
    for j in 1..2 * n {
        let sj = &s[j % n];
        let mut i = f[j - k - 1];
        while i != -1 && sj != at(k, i) {
            if sj < at(k, i) {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != at(k, i) {
            if *sj < s[k % n] {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    (0..n).map(|i| s[(k + i) % n].clone()).collect()
}

/// Least period p (dividing the length) under cyclic rotation.
pub fn primitive_period<T: PartialEq>(s: &[T]) -> usize {
    let n = s.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && (0..n).all(|i| s[i] == s[(i + p) % n]) {
            return p;
        }
    }
    n
}

/// Primitive root of a cyclic word and the power it is raised to.
pub fn primitive_root<T: PartialEq + Clone>(word: &[T]) -> (Vec<T>, usize) {
    if word.is_empty() {
        return (vec![], 1);
    }
    let p = primitive_period(word);
    (word[..p].to_vec(), word.len() / p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesicRecord {
    pub word: Vec<Letter>,
    pub cutting: CuttingSequence,
    pub length: f64,
    pub primitive: bool,
    pub power: u32,
}

impl SurfaceGroup {
    /// Label of the domain tile containing the basepoint of a normalized x.
    pub fn tile_label(&self, x: &GroupElement) -> Result<u8, SurfaceError> {
        let z = x.base_point();
        let (_, w) = self
            .hex
            .locate_tol(z, MAX_NORMALIZE_MOVES, LOCATE_TOL)
            .ok_or_else(|| SurfaceError::Normalization(z.to_string()))?;
        Ok(word_label(&w))
    }

    /// Deck transformation bringing the basepoint of x into the domain:
    /// returns (gamma*x, label of its tile, word of gamma).
    pub fn normalize(&self, x: &GroupElement) -> Result<(GroupElement, u8, Vec<Letter>), SurfaceError> {
        let z = x.base_point();
        let (_, w) = self
            .hex
            .locate_tol(z, MAX_NORMALIZE_MOVES, LOCATE_TOL)
            .ok_or_else(|| SurfaceError::Normalization(z.to_string()))?;
        let k = word_label(&w);
        let mut gw = DOMAIN_TILES[k as usize].to_vec();
        gw.extend(inverse_word(&w));
        let gw = reduce(&gw);
        if gw.is_empty() {
            return Ok((*x, k, gw));
        }
        let g = self.hex.element(&gw);
        Ok(((g * *x).renormalized(), k, gw))
    }

    pub fn domain_contains(&self, z: Point, tol: f64) -> bool {
        self.domain
            .tiles
            .iter()
            .any(|t| (0..6).all(|j| t.lines[j].eval(z) * t.inside[j] >= -tol))
    }

    /// Best deck transformation for comparing normalized x (label kx) with y
    /// (label ky): (dist_ut(delta*x, y), candidate index).
    pub fn nearest_deck(&self, x: &GroupElement, kx: u8, y: &GroupElement, ky: u8, radius: f64) -> (f64, Option<usize>) {
        let yb = y.base_point();
        let cosh_r = radius.cosh();
        let mut best = (radius, None);
        for (i, cand) in self.candidates[kx as usize][ky as usize].iter().enumerate() {
            let dx = cand.delta * *x;
            let xb = dx.base_point();
            let ch = 1.0 + (xb - yb).norm_sqr() / (2.0 * xb.im * yb.im);
            if ch > cosh_r {
                continue;
            }
            let d = crate::moebius::dist_ut(&dx, y);
            if d < best.0 {
                best = (d, Some(i));
            }
        }
        best
    }

    /// Distance in the quotient, saturating at `radius`.
    pub fn quotient_distance(&self, x: &GroupElement, y: &GroupElement, radius: f64) -> Result<f64, SurfaceError> {
        let (xn, kx, _) = self.normalize(x)?;
        let (yn, ky, _) = self.normalize(y)?;
        Ok(self.nearest_deck(&xn, kx, &yn, ky, radius.min(self.neighbour_radius)).0)
    }

    /// Shortest translation length over words of length <= n in the generators.
    pub fn shortest_translation(&self, n: usize) -> f64 {
        let mut all = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            all.push((i as i8 + 1, *g));
            all.push((-(i as i8) - 1, g.inverse()));
        }
        let mut best = f64::INFINITY;
        let mut layer: Vec<(i8, GroupElement)> = vec![(0, GroupElement::IDENTITY)];
        for _ in 0..n {
            let mut next = Vec::with_capacity(layer.len() * 7);
            for &(last, m) in &layer {
                for &(l, g) in &all {
                    if l == -last {
                        continue;
                    }
                    let p = m * g;
                    if let Ok(len) = crate::moebius::trace_to_length(p.trace()) {
                        best = best.min(len);
                    }
                    next.push((l, p));
                }
            }
            layer = next;
        }
        best
    }

    /// Cutting sequence of the closed geodesic of a reflection word read in
    /// the frame of a tile with the given label. Exact: in the right-angled
    /// reflection group the walls crossed by the axis over one period are
    /// those of a cyclically reduced word, up to commutation.
    pub fn word_cutting_sequence(&self, word: &[Letter], label: u8) -> Result<CuttingSequence, SurfaceError> {
        let (w, label) = cyclic_reduce(word, label);
        if w.is_empty() || word_label(&w) != 0 {
            return Err(SurfaceError::NotHyperbolic(word_element(&self.hex, word).log_abs_trace().exp()));
        }
        let mut lab = label;
        let symbols: Vec<(Letter, u8)> = w
            .iter()
            .map(|&l| {
                lab ^= label_of(l);
                (l, lab)
            })
            .collect();
        if let Some(sp) = special_from_symbols(&symbols) {
            return Ok(sp);
        }
        if w.len() < 3 {
            return Err(SurfaceError::NotHyperbolic(word_element(&self.hex, word).log_abs_trace().exp()));
        }
        Ok(CuttingSequence::Regular(symbols).canonical())
    }

    /// Walk the axis of x (expressed in the frame of a tile with the given
    /// label) through the tiling over one period of length `length`.
    pub fn cutting_sequence(&self, x: Scaled, label: u8, length: f64) -> Result<CuttingSequence, SurfaceError> {
        let hex = &self.hex;
        let mut x = x;
        let mut label = label;
        let (plus, minus) = x.axis()?;
        // start in the tile containing the foot of the perpendicular from i
        let f = frame_on_axis(plus, minus);
        let q = f.inverse().act(hex.center);
        let p = (f * GroupElement::geodesic(q.norm().ln())).base_point();
        let (_, w) = hex
            .locate_tol(p, MAX_NORMALIZE_MOVES, LOCATE_TOL)
            .ok_or_else(|| SurfaceError::Walk("axis foot not located".into()))?;
        for &l in &w {
            x = x.conj_by(&hex.refl[l as usize]);
        }
        label ^= word_label(&w);
        let (mut plus, mut minus) = x.axis()?;
        let ax = GeodesicLine::from_proj(plus, minus);
        for j in 0..6u8 {
            if ax.same_line(&hex.lines[j as usize], 1e-7) {
                return self.special_sequence(&x, label, j, plus, length);
            }
        }
        let mut start_skipped = false;
        let x0 = loop {
            let f = frame_on_axis(plus, minus);
            let (entry, exit, exits) = self.tile_passage(&f, plus)?;
            if exit - entry > CORNER_TOL || start_skipped {
                break x;
            }
            // the axis only touches this tile at a corner; start at the next one
            for &j in &exits {
                x = x.conj_by(&hex.refl[j as usize]);
                label ^= label_of(j);
            }
            (plus, minus) = x.axis()?;
            start_skipped = true;
        };
        let label0 = label;
        let mut groups: Vec<Vec<Letter>> = Vec::new();
        let mut sum = 0.0;
        let max_steps = ((length + 10.0) * 100.0) as usize;
        for _ in 0..max_steps {
            let f = frame_on_axis(plus, minus);
            let (entry, exit, exits) = self.tile_passage(&f, plus)?;
            sum += (exit - entry).max(0.0);
            for &j in &exits {
                x = x.conj_by(&hex.refl[j as usize]);
                label ^= label_of(j);
            }
            // a zero-length visit is the middle of a corner passage
            match groups.last_mut() {
                Some(g) if exit - entry < CORNER_TOL => g.extend(exits),
                _ => groups.push(exits),
            }
            (plus, minus) = x.axis()?;
            if sum >= length - 1e-6 && label == label0 && x.approx_eq_proj(&x0, 1e-6) {
                let mut symbols = Vec::new();
                let mut lab = label0;
                for mut g in groups {
                    g.sort_unstable();
                    for l in g {
                        lab ^= label_of(l);
                        symbols.push((l, lab));
                    }
                }
                return Ok(CuttingSequence::Regular(symbols));
            }
        }
        Err(SurfaceError::Walk(format!("no return after {max_steps} tiles (length {length})")))
    }

    /// Entry and exit parameters of the axis frame f in H, and the sides
    /// crossed on exit (two at a corner).
    fn tile_passage(&self, f: &GroupElement, plus: [f64; 2]) -> Result<(f64, f64, Vec<Letter>), SurfaceError> {
        let hex = &self.hex;
        let mut entry = f64::NEG_INFINITY;
        let mut exit = f64::INFINITY;
        let mut ts = [(f64::NAN, false); 6];
        for j in 0..6 {
            if let Some(t) = hex.lines[j].crossing_time(f) {
                let out = hex.inside[j] * hex.lines[j].eval_proj(plus) < 0.0;
                ts[j] = (t, out);
                if out {
                    exit = exit.min(t);
                } else {
                    entry = entry.max(t);
                }
            }
        }
        if !exit.is_finite() || !entry.is_finite() {
            return Err(SurfaceError::Walk("axis does not cross the tile".into()));
        }
        let exits: Vec<Letter> = (0..6u8)
            .filter(|&j| {
                let (t, out) = ts[j as usize];
                out && t <= exit + CORNER_TOL
            })
            .collect();
        Ok((entry, exit, exits))
    }

    fn special_sequence(
        &self,
        x: &Scaled,
        label: u8,
        side: Letter,
        plus: [f64; 2],
        length: f64,
    ) -> Result<CuttingSequence, SurfaceError> {
        let hex = &self.hex;
        let mut label = label;
        let mut plus = plus;
        let x = *x;
        // use the tile on the pants-0 side of a cuff, or the even side of a seam
        let flip = if is_cuff(side) { label & 2 != 0 } else { label & 1 != 0 };
        if flip {
            let r = hex.refl[side as usize];
            plus = r.act_proj(plus);
            label ^= label_of(side);
        }
        let k = side % 3;
        let (a, b) = other_two(k);
        // direction: heading towards the corner with the second neighbouring side
        let toward = if is_cuff(side) { b } else { 3 + b };
        let d = if hex.inside[toward as usize] * hex.lines[toward as usize].eval_proj(plus) < 0.0 { 1 } else { -1 };
        let det = if word_parity(label) == 0 { 1 } else { -1 };
        let orientation = (d * det) as i8;
        let _ = (a, x);
        if is_cuff(side) {
            let power = (length / self.cuff_length).round().max(1.0) as u32;
            Ok(CuttingSequence::Cuff { curve: k, power, orientation })
        } else {
            let power = (length / (2.0 * hex.seam_length)).round().max(1.0) as u32;
            Ok(CuttingSequence::Seam { seam: k, power, orientation })
        }
    }

    /// Oriented closed geodesics of length <= r, one record per class,
    /// sorted by length.
    pub fn enumerate_closed_geodesics(&self, r: f64, budget: usize) -> Result<Vec<ClosedGeodesicRecord>, SurfaceError> {
        let hex = &self.hex;
        // Every class of the reflection group has a representative h whose
        // axis meets H at some p; then d(i, h i) <= 2 circumradius + r. The
        // surface-group classes inside it are the conjugates by the domain
        // tile words.
        let reach = r + 2.0 * hex.circumradius;
        let mut found: HashMap<CuttingSequence, ClosedGeodesicRecord> = HashMap::new();
        let mut failure = None;
        for_each_tile_within(hex, reach, |word, g, label, _| {
            if failure.is_some() || label != 0 {
                return;
            }
            let tr = g.trace().abs();
            if tr <= 2.0 + 1e-9 {
                return;
            }
            let length = 2.0 * (tr / 2.0).acosh();
            if length > r + 1e-9 {
                return;
            }
            for dk in DOMAIN_TILES {
                let mut w = dk.to_vec();
                w.extend_from_slice(word);
                w.extend(dk.iter().rev());
                let cs = match self.word_cutting_sequence(&w, 0) {
                    Ok(cs) => cs,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                };
                if found.contains_key(&cs) {
                    // a conjugate of an earlier element: its whole class is in
                    if dk.is_empty() {
                        return;
                    }
                    continue;
                }
                if found.len() >= budget {
                    failure = Some(SurfaceError::BudgetExceeded(budget));
                    return;
                }
                let power = cs.power();
                found.insert(cs.clone(), ClosedGeodesicRecord { word: cs.word(), length, primitive: power == 1, power, cutting: cs });
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let mut out: Vec<ClosedGeodesicRecord> = found.into_values().collect();
        out.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.cutting.cmp(&b.cutting)));
        Ok(out)
    }
}

/// Orientation parity of the tiles with this label.
fn word_parity(label: u8) -> u8 {
    (label & 1) ^ (label >> 1)
}

/// Hyperbolic element of a reflection word, in log-scaled form.
pub fn word_element(hex: &Hexagon, w: &[Letter]) -> Scaled {
    let mut s = Scaled::identity();
    for &l in w {
        s = s.mul(&hex.refl[l as usize]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn surface() -> SurfaceGroup {
        build_surface(1.5).unwrap()
    }

    #[test]
    fn relator_and_curves() {
        let s = surface();
        let r = eval_relator(&s.generators, &s.relator);
        assert!(r.dist_mod_sign(&GroupElement::IDENTITY) < 1e-9);
        for pc in &s.pants_curves {
            assert!((pc.length - 1.5).abs() < 1e-9);
        }
        assert!((s.shortest_translation(6) - 1.5).abs() < 1e-9);
        assert!(build_surface(5.0).is_err());
    }

    #[test]
    fn gluing_is_consistent() {
        // the cuffs of the second pants are conjugate to those of the first
        let s = surface();
        let r3 = s.hex.refl[5];
        for k in 0..2 {
            let h = r3 * s.pants.generators[k] * r3;
            let t = s.generators[2 + k];
            assert!((t.inverse() * s.pants.generators[k] * t).approx_eq(&h, 1e-9));
        }
    }

    #[test]
    fn deck_moves_preserve_labels() {
        let s = surface();
        for k in 0..4 {
            for j in 0..6 {
                let w = &s.domain.move_words[k][j];
                assert_eq!(word_label(w), 0);
                // internal edges are exactly the four shared sides of the domain tiles
                assert_eq!(w.is_empty(), matches!((k, j), (0, 0) | (0, 5) | (1, 0) | (1, 5) | (2, 0) | (2, 5) | (3, 0) | (3, 5)));
            }
        }
    }

    #[test]
    fn normalize_is_retraction() {
        let s = surface();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let z = Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(0.01..20.0));
            let x = GroupElement::from_point_angle(z, rng.gen_range(0.0..std::f64::consts::TAU));
            let (xn, k, w) = s.normalize(&x).unwrap();
            assert!(s.domain_contains(xn.base_point(), 1e-9));
            assert_eq!(word_label(&w), 0);
            assert_eq!(s.tile_label(&xn).unwrap(), k);
            let (xn2, _, w2) = s.normalize(&xn).unwrap();
            assert!(w2.is_empty());
            assert_eq!(xn2, xn);
            for g in &s.generators {
                let (y, _, _) = s.normalize(&(*g * xn)).unwrap();
                assert!(y.approx_eq(&xn, 1e-8));
            }
        }
    }

    #[test]
    fn quotient_distance_properties() {
        let s = surface();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = Point::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.8..1.5));
            let x = GroupElement::from_point_angle(z, rng.gen_range(0.0..std::f64::consts::TAU));
            let (x, _, _) = s.normalize(&x).unwrap();
            assert!(s.quotient_distance(&x, &x, 1.0).unwrap() < 1e-12);
            for g in &s.generators {
                assert!(s.quotient_distance(&x, &(*g * x), 1.0).unwrap() < 1e-7);
            }
            let y = x * GroupElement::geodesic(rng.gen_range(0.0..0.5)) * GroupElement::rotation(0.3);
            let d1 = s.quotient_distance(&x, &y, 1.5).unwrap();
            let d2 = s.quotient_distance(&y, &x, 1.5).unwrap();
            assert!((d1 - d2).abs() < 1e-9);
        }
    }

    #[test]
    fn cyclic_words() {
        assert_eq!(least_rotation(&[3, 1, 2, 1, 1]), vec![1, 1, 3, 1, 2]);
        assert_eq!(primitive_root(&[1, 2, 1, 2, 1, 2]), (vec![1, 2], 3));
        assert_eq!(primitive_root(&[1, 2, 3]), (vec![1, 2, 3], 1));
    }

    #[test]
    fn shortest_classes_are_pants_and_seam_curves() {
        let s = surface();
        let recs = s.enumerate_closed_geodesics(4.5, 100_000).unwrap();
        let cuffs: Vec<_> = recs.iter().filter(|r| matches!(r.cutting, CuttingSequence::Cuff { power: 1, .. })).collect();
        assert_eq!(cuffs.len(), 6);
        assert!(cuffs.iter().all(|r| (r.length - 1.5).abs() < 1e-9));
        assert!((recs[0].length - 1.5).abs() < 1e-9);
        let seams = recs.iter().filter(|r| matches!(r.cutting, CuttingSequence::Seam { .. })).count();
        assert_eq!(seams, 6);
        for r in &recs {
            let l = word_element(&s.hex, &r.word).translation_length().unwrap();
            assert!((l - r.length).abs() < 1e-7, "{r:?}");
        }
    }
}
