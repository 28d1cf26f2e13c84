//! Arcs of geodesics cut by the pants curves: censuses of segments and closed
//! geodesics, the visited-cell counter and the volume lower bound.

use crate::flow::{simulate, FlowError, Trajectory};
use crate::moebius::GroupElement;
use crate::pants::OrthoTable;
use crate::surface::SurfaceGroup;
use crate::pants::{canonical_key, ArcKey};
use crate::surface::CuttingSequence;
use crate::tiling::{is_cuff, Letter};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Volume of the regular ideal tetrahedron.
pub const V3: f64 = 1.0149416064096536;

/// A directed arc class in one of the two pants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcClassKey {
    pub pants: u8,
    pub key: ArcKey,
}

impl ArcClassKey {
    pub fn undirected(&self) -> ArcClassKey {
        ArcClassKey { pants: self.pants, key: self.key.undirected() }
    }
}

/// Key of the arc entering a pants through cuff `k_in` into a tile with the
/// given label, crossing `seams`, and leaving through cuff `k_out`.
pub fn arc_key(k_in: u8, entry_label: u8, seams: &[Letter], k_out: u8) -> Option<ArcClassKey> {
    let mut w = Vec::with_capacity(seams.len() + 1);
    if entry_label & 1 == 1 {
        w.push(if k_in == 0 { 1 } else { 0 });
    }
    w.extend_from_slice(seams);
    canonical_key(k_in, k_out, &w).map(|key| ArcClassKey { pants: entry_label >> 1, key })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcCensus {
    pub directed: BTreeSet<ArcClassKey>,
    pub undirected: [BTreeSet<ArcKey>; 2],
    /// No pants-curve crossing at all (cuff powers, curves inside one pants).
    pub empty: bool,
    /// Arcs whose ends were not found within the extension limit.
    pub unresolved: usize,
}

impl ArcCensus {
    pub fn insert(&mut self, k: ArcClassKey) {
        self.undirected[k.pants as usize].insert(k.key.undirected());
        self.directed.insert(k);
    }

    /// Number of distinct directed classes traversed.
    pub fn a_directed(&self) -> usize {
        self.directed.len()
    }

    pub fn undirected_total(&self) -> usize {
        self.undirected[0].len() + self.undirected[1].len()
    }

    pub fn self_inverse(&self) -> usize {
        self.undirected.iter().flatten().filter(|k| k.is_self_inverse()).count()
    }

    /// Every traversed class is counted once or in both directions.
    pub fn is_consistent(&self) -> bool {
        let u = self.undirected_total();
        let a = self.a_directed();
        u <= a && a <= 2 * u - self.self_inverse()
    }

    pub fn is_subset(&self, o: &ArcCensus) -> bool {
        self.directed.is_subset(&o.directed)
    }

    pub fn filling_proxy(&self) -> bool {
        if self.empty {
            return false;
        }
        self.undirected.iter().all(|keys| {
            let pairs: BTreeSet<(u8, u8)> =
                keys.iter().filter(|k| k.k_in != k.k_out).map(|k| (k.k_in.min(k.k_out), k.k_in.max(k.k_out))).collect();
            pairs.len() == 3
        })
    }

    /// Swap the roles of the two pants.
    pub fn relabeled(&self) -> ArcCensus {
        let mut c = ArcCensus { empty: self.empty, unresolved: self.unresolved, ..Default::default() };
        for k in &self.directed {
            c.insert(ArcClassKey { pants: 1 - k.pants, key: k.key.clone() });
        }
        c
    }
}

/// Arcs between consecutive pants-curve crossings, given as (index, letter,
/// entered label) over a crossing list.
fn arcs_between(letters: &[(Letter, u8)], first: usize, last: usize) -> Vec<ArcClassKey> {
    let mut out = Vec::new();
    let mut i = first;
    while i < last {
        let (li, lab) = letters[i];
        let mut j = i + 1;
        let mut seams = Vec::new();
        while j <= last && !is_cuff(letters[j].0) {
            seams.push(letters[j].0);
            j += 1;
        }
        if j > last {
            break;
        }
        if let Some(k) = arc_key(li - 3, lab, &seams, letters[j].0 - 3) {
            out.push(k);
        }
        i = j;
    }
    out
}

/// Census of the arcs of the segment [t0, t1], extended to the pants-curve
/// crossings just outside the window.
pub fn segment_arc_census(traj: &Trajectory, t0: f64, t1: f64) -> ArcCensus {
    let cuffs: Vec<usize> = (0..traj.crossings.len()).filter(|&i| traj.crossings[i].is_pants_curve()).collect();
    let mut census = ArcCensus::default();
    let inside = cuffs.iter().any(|&i| {
        let t = traj.crossings[i].time;
        t >= t0 && t <= t1
    });
    if !inside {
        census.empty = true;
        return census;
    }
    let before = cuffs.iter().rev().find(|&&i| traj.crossings[i].time <= t0);
    let after = cuffs.iter().find(|&&i| traj.crossings[i].time >= t1);
    let first = match before {
        Some(&i) => i,
        None => {
            census.unresolved += 1;
            cuffs[0]
        }
    };
    let last = match after {
        Some(&i) => i,
        None => {
            census.unresolved += 1;
            *cuffs.last().unwrap()
        }
    };
    let letters: Vec<(Letter, u8)> = traj.crossings.iter().map(|c| (c.letter, c.label)).collect();
    for k in arcs_between(&letters, first, last) {
        census.insert(k);
    }
    census
}

pub fn closed_arc_census(cs: &CuttingSequence) -> ArcCensus {
    let mut census = ArcCensus::default();
    match cs {
        CuttingSequence::Cuff { .. } => census.empty = true,
        CuttingSequence::Seam { seam, orientation, .. } => {
            let (a, b) = match seam {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            for pants in 0..2u8 {
                let (i, j) = if (*orientation > 0) == (pants == 0) { (a, b) } else { (b, a) };
                census.insert(ArcClassKey { pants, key: ArcKey { k_in: i, k_out: j, word: vec![] } });
            }
        }
        CuttingSequence::Regular(s) => {
            let cuffs: Vec<usize> = (0..s.len()).filter(|&i| is_cuff(s[i].0)).collect();
            if cuffs.is_empty() {
                census.empty = true;
                return census;
            }
            // unroll once so every arc appears between consecutive crossings
            let n = s.len();
            let start = cuffs[0];
            let letters: Vec<(Letter, u8)> = (0..=n).map(|i| s[(start + i) % n]).collect();
            for k in arcs_between(&letters, 0, n) {
                census.insert(k);
            }
        }
    }
    census
}

pub fn compare_counts(seg: &ArcCensus, closed: &ArcCensus) -> usize {
    seg.a_directed().abs_diff(closed.a_directed())
}

/// Bound on the census deviation past the filling time.
pub const CENSUS_BOUND: usize = 6;

/// Pants cell (pants, undirected key) containing the state at time s.
pub fn cell_at(traj: &Trajectory, s: f64) -> Option<ArcClassKey> {
    let cr = &traj.crossings;
    let i = cr.partition_point(|c| c.time <= s);
    let start = (0..i).rev().find(|&j| cr[j].is_pants_curve())?;
    let end = (i..cr.len()).find(|&j| cr[j].is_pants_curve())?;
    let seams: Vec<Letter> = cr[start + 1..end].iter().map(|c| c.letter).collect();
    arc_key(cr[start].letter - 3, cr[start].label, &seams, cr[end].letter - 3).map(|k| k.undirected())
}

/// Cells at the integer times 0..n-1.
pub fn cells_at_integers(traj: &Trajectory, n: usize) -> Vec<Option<ArcClassKey>> {
    let cr = &traj.crossings;
    let cuffs: Vec<usize> = (0..cr.len()).filter(|&i| cr[i].is_pants_curve()).collect();
    let mut out = Vec::with_capacity(n);
    let mut a = 0usize;
    for m in 0..n {
        let s = m as f64;
        while a + 1 < cuffs.len() && cr[cuffs[a + 1]].time <= s {
            a += 1;
        }
        if a + 1 >= cuffs.len() || cr[cuffs[a]].time > s {
            out.push(None);
            continue;
        }
        let (i, j) = (cuffs[a], cuffs[a + 1]);
        let seams: Vec<Letter> = cr[i + 1..j].iter().map(|c| c.letter).collect();
        out.push(arc_key(cr[i].letter - 3, cr[i].label, &seams, cr[j].letter - 3).map(|k| k.undirected()));
    }
    out
}

/// Number of distinct cells visited at times 0..n-1.
pub fn visited_count(traj: &Trajectory, n: usize) -> usize {
    cells_at_integers(traj, n).into_iter().flatten().collect::<BTreeSet<_>>().len()
}

/// Running C_N for N = 1..=n.
pub fn visited_counts(traj: &Trajectory, n: usize) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    cells_at_integers(traj, n)
        .into_iter()
        .map(|c| {
            if let Some(c) = c {
                seen.insert(c);
            }
            seen.len()
        })
        .collect()
}

/// Cell of a unit tangent vector: the undirected class of the pants arc
/// through it. None when the vector lies on a pants curve.
pub fn classify_vector(surface: &SurfaceGroup, x: &GroupElement) -> Result<Option<ArcClassKey>, FlowError> {
    let traj = simulate(surface, x, 0.0, 0.01)?;
    Ok(cell_at(&traj, 0.0))
}

/// Keys of the census found in the table, and the overflow keys beyond its
/// length cutoff.
pub fn resolve(census: &ArcCensus, table: &OrthoTable) -> (usize, Vec<ArcClassKey>) {
    let index = table.index_map();
    let mut found = 0;
    let mut overflow = Vec::new();
    for (p, keys) in census.undirected.iter().enumerate() {
        for k in keys {
            if index.contains_key(k) {
                found += 1;
            } else {
                overflow.push(ArcClassKey { pants: p as u8, key: k.clone() });
            }
        }
    }
    (found, overflow)
}

pub fn volume_lower_bound(census: &ArcCensus) -> f64 {
    V3 / 2.0 * census.undirected.iter().map(|u| (u.len() as f64 - 3.0).max(0.0)).sum::<f64>()
}

/// Lobachevsky function by composite Simpson quadrature of -log|2 sin t|,
/// with the logarithmic endpoint singularity integrated analytically.
pub fn lobachevsky(theta: f64) -> f64 {
    // -log(2 sin t) = -log(2t) - log(sin t / t)
    let n = 20_000;
    let h = theta / n as f64;
    let g = |t: f64| if t == 0.0 { 0.0 } else { -(t.sin() / t).ln() };
    let mut s = g(0.0) + g(theta);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let smooth = s * h / 3.0;
    let singular = -(theta * (2.0 * theta).ln() - theta);
    smooth + singular
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(k_in: u8, k_out: u8, word: Vec<u8>) -> ArcKey {
        ArcKey { k_in, k_out, word }
    }

    #[test]
    fn v3_from_lobachevsky() {
        assert!((3.0 * lobachevsky(std::f64::consts::PI / 3.0) - V3).abs() < 1e-10);
        assert!((2.0 * lobachevsky(std::f64::consts::PI / 6.0) - V3).abs() < 1e-10);
    }

    #[test]
    fn lower_bound_formula() {
        let mut c = ArcCensus::default();
        for i in 0..3u8 {
            c.insert(ArcClassKey { pants: 0, key: key(i, (i + 1) % 3, vec![]) });
            c.insert(ArcClassKey { pants: 1, key: key(i, (i + 1) % 3, vec![]) });
        }
        assert_eq!(volume_lower_bound(&c), 0.0);
        // distinct undirected classes from alternating seam words
        let mut classes = BTreeSet::new();
        for n in 1..6u32 {
            for code in 0..3usize.pow(n) {
                let w: Vec<u8> = (0..n).map(|i| (code / 3usize.pow(i) % 3) as u8).collect();
                if let Some(k) = canonical_key(0, 1, &w) {
                    classes.insert(k.undirected());
                }
            }
        }
        let classes: Vec<ArcKey> = classes.into_iter().collect();
        assert!(classes.len() >= 10);
        let mut c = ArcCensus::default();
        for k in &classes[..10] {
            c.insert(ArcClassKey { pants: 0, key: k.clone() });
        }
        for k in &classes[..7] {
            c.insert(ArcClassKey { pants: 1, key: k.reversed() });
        }
        assert_eq!((c.undirected[0].len(), c.undirected[1].len()), (10, 7));
        assert!((volume_lower_bound(&c) - V3 / 2.0 * 11.0).abs() < 1e-15);
    }

    #[test]
    fn cuff_curve_census_is_empty() {
        let c = closed_arc_census(&CuttingSequence::Cuff { curve: 0, power: 1, orientation: 1 });
        assert!(c.empty && c.a_directed() == 0 && !c.filling_proxy());
        let s = closed_arc_census(&CuttingSequence::Seam { seam: 2, power: 1, orientation: -1 });
        assert_eq!(s.a_directed(), 2);
        assert_eq!(s.undirected_total(), 2);
    }

    #[test]
    fn compare_with_itself() {
        let c = closed_arc_census(&CuttingSequence::Seam { seam: 1, power: 2, orientation: 1 });
        assert_eq!(compare_counts(&c, &c), 0);
        assert_eq!(compare_counts(&c.relabeled(), &c.relabeled()), 0);
    }
}
