//! Geodesic and horocycle orbits on the surface, tracked through the tiling
//! of the fundamental domain, with return detection and closing.

use crate::arcs::{closed_arc_census, ArcCensus};
use crate::moebius::{dist_ut, GroupElement, Point, Scaled};
use crate::surface::{CuttingSequence, SurfaceError, SurfaceGroup};
use crate::tiling::{is_cuff, label_of, Letter, DOMAIN_TILES};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("closing word is not hyperbolic")]
    NotHyperbolic,
    #[error("closing length {length} differs from return time {t} by more than {rho}")]
    AnosovViolation { length: f64, t: f64, rho: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    Geodesic,
    Horocycle,
}

/// Passage through a tile side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub letter: Letter,
    /// Label of the tile entered.
    pub label: u8,
    /// Normalized state at the crossing, in the entered tile.
    pub state: GroupElement,
}

impl Crossing {
    pub fn is_pants_curve(&self) -> bool {
        is_cuff(self.letter)
    }

    /// Pants curve id 0..3 for cuff crossings.
    pub fn curve(&self) -> Option<u8> {
        is_cuff(self.letter).then(|| self.letter - 3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub start: GroupElement,
    pub start_label: u8,
    pub t_max: f64,
    pub dt: f64,
    /// All tile-side crossings in time order. Geodesic trajectories extend
    /// back to the last pants-curve crossing before 0 and forward to the
    /// first one after t_max.
    pub crossings: Vec<Crossing>,
    /// Deck word bringing the caller's start vector into the domain.
    pub start_move: Vec<Letter>,
}

/// Longest stretch searched for a pants-curve crossing beyond the window.
pub const EXTENSION_LIMIT: f64 = 200.0;

impl Trajectory {
    /// Index of the first crossing with time > 0.
    pub fn first_forward(&self) -> usize {
        self.crossings.partition_point(|c| c.time <= 0.0)
    }

    /// Normalized state and tile label at time s in [0, t_max].
    pub fn state_at(&self, s: f64) -> (GroupElement, u8) {
        let i = self.crossings.partition_point(|c| c.time <= s);
        let f = self.first_forward();
        let (t0, x, k) = if i > f {
            let c = &self.crossings[i - 1];
            (c.time, c.state, c.label)
        } else {
            (0.0, self.start, self.start_label)
        };
        let step = match self.kind {
            FlowKind::Geodesic => GroupElement::geodesic(s - t0),
            FlowKind::Horocycle => GroupElement::horocycle(s - t0),
        };
        (x * step, k)
    }

    /// Sample times 0, dt, 2dt, ... up to t_max.
    pub fn sample_times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = (self.t_max / self.dt).floor() as usize;
        (0..=n).map(move |i| i as f64 * self.dt)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, GroupElement, u8)> + '_ {
        self.sample_times().map(move |s| {
            let (x, k) = self.state_at(s);
            (s, x, k)
        })
    }

    pub fn pants_crossings(&self) -> impl Iterator<Item = &Crossing> {
        self.crossings.iter().filter(|c| c.is_pants_curve())
    }

    /// Letters crossed in (0, t].
    pub fn accumulated_word(&self, t: f64) -> Vec<Letter> {
        self.crossings.iter().filter(|c| c.time > 0.0 && c.time <= t).map(|c| c.letter).collect()
    }

    /// Unnormalized state v*a_t rebuilt from the start tile and the crossed letters.
    pub fn replay(&self, surface: &SurfaceGroup, t: f64) -> GroupElement {
        let (x, k) = self.state_at(t);
        let mut w = DOMAIN_TILES[self.start_label as usize].to_vec();
        w.extend(self.accumulated_word(t));
        w.extend(DOMAIN_TILES[k as usize].iter().rev());
        surface.hex.element(&w) * x
    }
}

/// Time to leave the current tile (clamped at 0) and the side crossed.
fn next_exit(surface: &SurfaceGroup, kind: FlowKind, x: &GroupElement, label: u8) -> Option<(f64, Letter)> {
    let tile = &surface.domain.tiles[label as usize];
    let mut best: Option<(f64, Letter)> = None;
    for j in 0..6 {
        let line = &tile.lines[j];
        let sign = tile.inside[j];
        let t = match kind {
            FlowKind::Geodesic => {
                if sign * line.eval_proj([x.a, x.c]) >= 0.0 {
                    continue;
                }
                match line.crossing_time(x) {
                    Some(t) => t,
                    None => continue,
                }
            }
            FlowKind::Horocycle => match horocycle_exit(line, sign, x) {
                Some(t) => t,
                None => continue,
            },
        };
        if best.is_none_or(|(b, _)| t < b) {
            best = Some((t, j as Letter));
        }
    }
    best.map(|(t, j)| (t.max(0.0), j))
}

/// First parameter where the horocycle s -> x*u_s*i leaves the half-plane.
fn horocycle_exit(line: &crate::moebius::GeodesicLine, sign: f64, x: &GroupElement) -> Option<f64> {
    // in coordinates w = s + i the side is A'(s^2 + 1) - 2B's + C'
    let l = line.transform(&x.inverse());
    let (qa, qb, qc) = (sign * l.a, -2.0 * sign * l.b, sign * (l.a + l.c));
    let roots: Vec<f64> = if qa.abs() < 1e-14 * (qb.abs() + qc.abs()) {
        if qb == 0.0 {
            vec![]
        } else {
            vec![-qc / qb]
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            let mut r = vec![q / qa];
            if q != 0.0 {
                r.push(qc / q);
            }
            r
        }
    };
    roots
        .into_iter()
        .filter(|&r| r > -1e-9 && 2.0 * qa * r + qb < 0.0)
        .min_by(f64::total_cmp)
}

/// Flow from (x, label) until time `until` or, with `stop_at_cuff`, the first
/// pants-curve crossing after `until`. Crossing times are offset by t0.
fn walk(
    surface: &SurfaceGroup,
    kind: FlowKind,
    x: GroupElement,
    label: u8,
    t0: f64,
    until: f64,
    stop_at_cuff: bool,
    out: &mut Vec<Crossing>,
) -> Result<(GroupElement, u8), FlowError> {
    let mut x = x;
    let mut k = label;
    let mut t = t0;
    let limit = until + if stop_at_cuff { EXTENSION_LIMIT } else { 0.0 };
    let mut stalls = 0;
    loop {
        let Some((tau, j)) = next_exit(surface, kind, &x, k) else {
            return Err(FlowError::Surface(SurfaceError::Walk("no exit from tile".into())));
        };
        if t + tau > limit {
            return Ok((x, k));
        }
        stalls = if tau == 0.0 { stalls + 1 } else { 0 };
        if stalls > 8 {
            return Err(FlowError::Surface(SurfaceError::Walk("stuck at a tile corner".into())));
        }
        let step = match kind {
            FlowKind::Geodesic => GroupElement::geodesic(tau),
            FlowKind::Horocycle => GroupElement::horocycle(tau),
        };
        x = x * step;
        if let Some(m) = &surface.domain.moves[k as usize][j as usize] {
            x = *m * x;
        }
        x = x.renormalized();
        k ^= label_of(j);
        t += tau;
        out.push(Crossing { time: t, letter: j, label: k, state: x });
        if t > until && (!stop_at_cuff || is_cuff(j)) {
            return Ok((x, k));
        }
    }
}

/// Rotation by pi in the fibre: reverses the direction of a unit vector.
fn flip() -> GroupElement {
    GroupElement::new(0.0, 1.0, -1.0, 0.0)
}

pub fn simulate(surface: &SurfaceGroup, v: &GroupElement, t_max: f64, dt: f64) -> Result<Trajectory, FlowError> {
    check_params(t_max, dt)?;
    let (start, start_label, start_move) = surface.normalize(v)?;
    // backward to the last pants-curve crossing, as a forward walk of the reversed vector
    let mut back = Vec::new();
    walk(surface, FlowKind::Geodesic, start * flip(), start_label, 0.0, 0.0, true, &mut back)?;
    let mut crossings = Vec::with_capacity(back.len() + (t_max * 2.0) as usize);
    let mut prev_label = start_label;
    let mut rev: Vec<Crossing> = Vec::with_capacity(back.len());
    for c in &back {
        // crossing at -time from the tile c.label into prev_label, forward state before the move
        let pre = match &surface.domain.moves[(c.label ^ label_of(c.letter)) as usize][c.letter as usize] {
            Some(m) => m.inverse() * c.state,
            None => c.state,
        };
        rev.push(Crossing { time: -c.time, letter: c.letter, label: prev_label, state: (pre * flip().inverse()).renormalized() });
        prev_label = c.label;
    }
    rev.reverse();
    crossings.extend(rev);
    walk(surface, FlowKind::Geodesic, start, start_label, 0.0, t_max, true, &mut crossings)?;
    Ok(Trajectory { kind: FlowKind::Geodesic, start, start_label, t_max, dt, crossings, start_move })
}

pub fn simulate_horocycle(surface: &SurfaceGroup, x: &GroupElement, s_max: f64, dt: f64) -> Result<Trajectory, FlowError> {
    check_params(s_max, dt)?;
    let (start, start_label, start_move) = surface.normalize(x)?;
    let mut crossings = Vec::new();
    walk(surface, FlowKind::Horocycle, start, start_label, 0.0, s_max, false, &mut crossings)?;
    // drop the crossing past the end
    while crossings.last().is_some_and(|c| c.time > s_max) {
        crossings.pop();
    }
    Ok(Trajectory { kind: FlowKind::Horocycle, start, start_label, t_max: s_max, dt, crossings, start_move })
}

fn check_params(t_max: f64, dt: f64) -> Result<(), FlowError> {
    if !(t_max >= 0.0) || !(dt > 0.0 && dt <= 0.01) {
        return Err(FlowError::Parameter(format!("need t_max >= 0 and 0 < dt <= 0.01, got {t_max}, {dt}")));
    }
    Ok(())
}

/// A local minimum of the distance to the start, below epsilon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnEvent {
    pub time: f64,
    pub distance: f64,
    /// Index into `SurfaceGroup::neighbours` of the reflection word g with
    /// the deck transformation w_{k0} g w_k^{-1} realizing the distance.
    pub neighbour: usize,
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let m = (a + b) / 2.0;
    (m, f(m))
}

pub fn detect_returns(surface: &SurfaceGroup, traj: &Trajectory, eps: f64) -> Vec<ReturnEvent> {
    let y = traj.start;
    let ky = traj.start_label;
    let c = surface.cuff_length;
    let dt = traj.dt;
    // dist_ut moves at most ~2 per unit time along the flow
    let scan = eps + 4.0 * dt;
    let times: Vec<f64> = traj.sample_times().filter(|&s| s >= c / 2.0).collect();
    let vals: Vec<(f64, Option<usize>, GroupElement)> = times
        .iter()
        .map(|&s| {
            let (x, k) = traj.state_at(s);
            let (d, i) = surface.nearest_deck(&x, k, &y, ky, scan);
            (d, i, x)
        })
        .collect();
    let mut events: Vec<ReturnEvent> = Vec::new();
    for n in 0..vals.len() {
        let (d, cand, x) = vals[n];
        let Some(ci) = cand else { continue };
        let left = if n > 0 { vals[n - 1].0 } else { f64::INFINITY };
        let right = if n + 1 < vals.len() { vals[n + 1].0 } else { f64::INFINITY };
        if !(d <= left && d <= right) {
            continue;
        }
        let k = traj.state_at(times[n]).1;
        let delta = surface.candidates[k as usize][ky as usize][ci].delta;
        let s0 = times[n];
        let f = |s: f64| dist_ut(&(delta * x * GroupElement::geodesic(s - s0)), &y);
        let (t, dist) = golden_min(f, s0 - dt, s0 + dt, 1e-9);
        if dist >= eps || t > traj.t_max {
            continue;
        }
        let ev = ReturnEvent { time: t, distance: dist, neighbour: surface.candidates[k as usize][ky as usize][ci].neighbour };
        match events.last_mut() {
            // returns closer than a cuff length are one event; allow for rounding at exact multiples
            Some(last) if t - last.time < c - dt => {
                if dist < last.distance {
                    *last = ev;
                }
            }
            _ => events.push(ev),
        }
    }
    events
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    /// Reflection word of the closing element in the frame of the start tile.
    pub word: Vec<Letter>,
    pub length: f64,
    pub cutting: CuttingSequence,
    pub root: CuttingSequence,
    pub power: u32,
    pub census: ArcCensus,
    pub source: Option<(GroupElement, f64)>,
}

/// Close the segment [0, t] at a return event into a closed geodesic.
pub fn close_up(surface: &SurfaceGroup, traj: &Trajectory, event: &ReturnEvent, rho: f64) -> Result<ClosedGeodesic, FlowError> {
    let mut word = traj.accumulated_word(event.time);
    word.extend(surface.neighbours[event.neighbour].word.iter().rev());
    let x = word_scaled(surface, &word);
    let length = x.translation_length().map_err(|_| FlowError::NotHyperbolic)?;
    if (length - event.time).abs() > rho {
        return Err(FlowError::AnosovViolation { length, t: event.time, rho });
    }
    closed_from_word(surface, word, traj.start_label, length, Some((traj.start, event.time)))
}

fn word_scaled(surface: &SurfaceGroup, w: &[Letter]) -> Scaled {
    w.iter().fold(Scaled::identity(), |s, &l| s.mul(&surface.hex.refl[l as usize]))
}

/// Closed geodesic of a reflection word read in the frame of a tile with the given label.
pub fn closed_from_word(
    surface: &SurfaceGroup,
    word: Vec<Letter>,
    label: u8,
    length: f64,
    source: Option<(GroupElement, f64)>,
) -> Result<ClosedGeodesic, FlowError> {
    let cutting = surface.word_cutting_sequence(&word, label)?;
    let root = cutting.root();
    let power = cutting.power();
    let census = closed_arc_census(&cutting);
    Ok(ClosedGeodesic { word, length, cutting, root, power, census, source })
}

/// True iff the geodesic crosses every pants curve and, in each pants, its
/// arcs join all three pairs of distinct cuffs.
pub fn filling_proxy(cg: &ClosedGeodesic) -> bool {
    cg.census.filling_proxy()
}

/// The segment's pants-curve crossing sequence in (0, t) must occur in the
/// cyclic crossing sequence of the closed geodesic once one crossing is
/// dropped at each end.
pub fn crossing_sequence_consistent(traj: &Trajectory, cg: &ClosedGeodesic) -> bool {
    let seg: Vec<(Letter, u8)> = traj
        .pants_crossings()
        .filter(|c| c.time > 0.0 && c.time < cg.source.map_or(traj.t_max, |s| s.1))
        .map(|c| (c.letter, c.label >> 1))
        .collect();
    let cyc: Vec<(Letter, u8)> = match &cg.cutting {
        CuttingSequence::Regular(s) => s.iter().filter(|(l, _)| is_cuff(*l)).map(|&(l, lab)| (l, lab >> 1)).collect(),
        _ => return seg.len() <= 2,
    };
    if seg.len() <= 2 {
        return true;
    }
    let inner = &seg[1..seg.len() - 1];
    let n = cyc.len();
    if n == 0 {
        return false;
    }
    (0..n).any(|r| inner.iter().enumerate().all(|(i, x)| cyc[(r + i) % n] == *x))
}

/// Liouville-uniform unit tangent vector in the fundamental domain.
pub fn random_unit_vector<R: rand::Rng + ?Sized>(surface: &SurfaceGroup, rng: &mut R) -> GroupElement {
    let hex = &surface.hex;
    let big_r = hex.circumradius;
    let z = loop {
        // hyperbolic-uniform point in the disk of radius big_r around i
        let r = (1.0 + rng.gen::<f64>() * (big_r.cosh() - 1.0)).acosh();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = Point::from_polar((r / 2.0).tanh(), phi);
        let z = Point::new(0.0, 1.0) * (Point::new(1.0, 0.0) + w) / (Point::new(1.0, 0.0) - w);
        if hex.contains(z, 0.0) {
            break z;
        }
    };
    let k = rng.gen_range(0..4usize);
    let z = surface.domain.tiles[k].element.act(z);
    GroupElement::from_point_angle(z, rng.gen_range(0.0..std::f64::consts::TAU))
}
