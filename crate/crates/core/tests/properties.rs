//! Property tests for the invariants of the geometry, surface, flow and
//! census layers.

use gll_core::arcs::{volume_lower_bound, visited_counts, ArcCensus, ArcClassKey};
use gll_core::flow::{random_unit_vector, simulate};
use gll_core::moebius::{
    dist_geodesics, dist_h2, dist_ut, trace_to_length, GeodesicLine, GroupElement, Point,
};
use gll_core::pants::{canonical_key, ArcKey};
use gll_core::surface::{build_surface, least_rotation, primitive_period, word_element, CuttingSequence, SurfaceGroup};
use gll_core::tiling::{label_of, word_label, Letter};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn surface() -> &'static SurfaceGroup {
    static S: OnceLock<SurfaceGroup> = OnceLock::new();
    S.get_or_init(|| build_surface(1.5).expect("surface"))
}

fn element() -> impl Strategy<Value = GroupElement> {
    (-3.0..3.0f64, 0.2..5.0f64, -3.2..3.2f64).prop_map(|(x, y, th)| GroupElement::from_point_angle(Point::new(x, y), th))
}

fn point() -> impl Strategy<Value = Point> {
    (-4.0..4.0f64, 0.1..6.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn arc_key() -> impl Strategy<Value = ArcKey> {
    (0..3u8, 0..3u8, prop::collection::vec(0..3u8, 0..8))
        .prop_filter_map("degenerate class", |(a, b, w)| canonical_key(a, b, &w))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conjugation_identity(t in -5.0..5.0f64, s in -5.0..5.0f64) {
        let lhs = GroupElement::geodesic(t) * GroupElement::horocycle(s) * GroupElement::geodesic(-t);
        let rhs = GroupElement::horocycle(t.exp() * s);
        for (x, y) in [(lhs.a, rhs.a), (lhs.b, rhs.b), (lhs.c, rhs.c), (lhs.d, rhs.d)] {
            prop_assert!(rel_close(x, y, 1e-12), "{lhs:?} vs {rhs:?}");
        }
    }

    #[test]
    fn distances_are_isometry_invariant(g in element(), p in point(), q in point(), r in point(), s in point()) {
        let d0 = dist_h2(p, q).unwrap();
        let d1 = dist_h2(g.act(p), g.act(q)).unwrap();
        prop_assert!(rel_close(d0, d1, 1e-9), "{d0} vs {d1}");

        prop_assume!((p.re - q.re).abs() > 1e-3 && (r.re - s.re).abs() > 1e-3);
        let l1 = GeodesicLine::from_form(1.0, -(p.re + q.re), p.re * q.re);
        let l2 = GeodesicLine::from_form(1.0, -(r.re + s.re), r.re * s.re);
        let e0 = dist_geodesics(&l1, &l2).distance;
        let e1 = dist_geodesics(&l1.transform(&g), &l2.transform(&g)).distance;
        prop_assert!(rel_close(e0, e1, 1e-9), "{e0} vs {e1}");
    }

    #[test]
    fn dist_ut_is_a_left_invariant_semimetric(g in element(), x in element(), y in element()) {
        prop_assert!(dist_ut(&x, &x).abs() < 1e-12);
        let d = dist_ut(&x, &y);
        prop_assert!(rel_close(d, dist_ut(&y, &x), 1e-9));
        prop_assert!(rel_close(d, dist_ut(&(g * x), &(g * y)), 1e-9));
    }

    #[test]
    fn length_is_conjugation_invariant(g in element(), t in 0.1..8.0f64, th in -3.0..3.0f64) {
        let h = GroupElement::rotation(th) * GroupElement::geodesic(t) * GroupElement::rotation(-th);
        let l0 = trace_to_length(h.trace()).unwrap();
        let l1 = trace_to_length((g * h * g.inverse()).trace()).unwrap();
        prop_assert!(rel_close(l0, t, 1e-9));
        prop_assert!(rel_close(l0, l1, 1e-9));
    }

    #[test]
    fn least_rotation_matches_brute_force(s in prop::collection::vec(0..3u8, 0..24)) {
        let brute = (0..s.len()).map(|k| [&s[k..], &s[..k]].concat()).min().unwrap_or_default();
        prop_assert_eq!(least_rotation(&s), brute);
        if !s.is_empty() {
            let p = primitive_period(&s);
            prop_assert!(s.len() % p == 0);
            prop_assert_eq!(s[..p].repeat(s.len() / p), s.clone());
            prop_assert!((1..p).all(|q| s.len() % q != 0 || s[..q].repeat(s.len() / q) != s));
        }
    }

    #[test]
    fn arc_keys_canonicalize_idempotently(k in arc_key()) {
        prop_assert_eq!(canonical_key(k.k_in, k.k_out, &k.word), Some(k.clone()));
        prop_assert_eq!(k.reversed().reversed(), k.clone());
        prop_assert_eq!(k.undirected(), k.reversed().undirected());
        prop_assert_eq!(k.to_string().parse::<ArcKey>().unwrap(), k);
    }

    #[test]
    fn census_bound_is_monotone_under_inclusion(
        keys in prop::collection::vec((0..2u8, arc_key()), 0..40),
        cut in 0usize..40,
    ) {
        let mut small = ArcCensus::default();
        let mut big = ArcCensus::default();
        for (i, (p, k)) in keys.iter().enumerate() {
            let c = ArcClassKey { pants: *p, key: k.clone() };
            if i < cut {
                small.insert(c.clone());
            }
            big.insert(c);
        }
        prop_assert!(small.is_subset(&big));
        prop_assert!(small.is_consistent() && big.is_consistent());
        prop_assert!(volume_lower_bound(&small) <= volume_lower_bound(&big));
        prop_assert!(volume_lower_bound(&small) >= 0.0);
        prop_assert_eq!(volume_lower_bound(&big.relabeled()), volume_lower_bound(&big));
    }
}

/// A random reflection word representing a hyperbolic element of the
/// surface group, read in the frame of a tile with the given label.
fn closed_word() -> impl Strategy<Value = (Vec<Letter>, u8)> {
    (prop::collection::vec(0..6u8, 3..14), 0..4u8).prop_filter_map("not in the surface group", |(w, lab)| {
        let cs = surface().word_cutting_sequence(&w, lab).ok()?;
        (word_label(&w) == 0 && cs.power() >= 1).then_some((w, lab))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cutting_sequences_round_trip_and_are_conjugation_invariant((w, lab) in closed_word(), shift in 0usize..14) {
        let s = surface();
        let cs = s.word_cutting_sequence(&w, lab).unwrap();
        prop_assert_eq!(cs.to_string().parse::<CuttingSequence>().unwrap(), cs.clone());
        prop_assert_eq!(cs.canonical(), cs.clone());

        // cyclic rotation is conjugation by the moved prefix
        let k = shift % w.len();
        let mut rot = w[k..].to_vec();
        rot.extend_from_slice(&w[..k]);
        let lab2 = w[..k].iter().fold(lab, |acc, &l| acc ^ label_of(l));
        prop_assert_eq!(s.word_cutting_sequence(&rot, lab2).unwrap(), cs.clone());

        let l0 = word_element(&s.hex, &w).translation_length().unwrap();
        let l1 = word_element(&s.hex, &rot).translation_length().unwrap();
        prop_assert!(rel_close(l0, l1, 1e-9), "{l0} vs {l1}");

        // the k-th power has the same root and k times the length
        let p2 = [w.clone(), w.clone()].concat();
        let cs2 = s.word_cutting_sequence(&p2, lab).unwrap();
        prop_assert_eq!(cs2.power(), 2 * cs.power());
        prop_assert_eq!(cs2.root(), cs.root());
        let l2 = word_element(&s.hex, &p2).translation_length().unwrap();
        prop_assert!(rel_close(l2, 2.0 * l0, 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization_is_a_retraction(seed in any::<u64>(), x in element()) {
        let s = surface();
        let (y, k, _) = s.normalize(&x).unwrap();
        let (z, k2, w2) = s.normalize(&y).unwrap();
        prop_assert!(w2.is_empty(), "second move {w2:?}");
        prop_assert_eq!((z, k2), (y, k));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_unit_vector(s, &mut rng);
        let (v2, _, w) = s.normalize(&v).unwrap();
        prop_assert!(w.is_empty());
        prop_assert_eq!(v2, v);
    }

    #[test]
    fn orbits_are_deterministic_and_visit_counts_grow(seed in any::<u64>()) {
        let s = surface();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_unit_vector(s, &mut rng);
        let a = simulate(s, &v, 200.0, 0.005).unwrap();
        let b = simulate(s, &v, 200.0, 0.005).unwrap();
        prop_assert_eq!(&a, &b);
        let times: Vec<f64> = a.crossings.iter().map(|c| c.time).collect();
        prop_assert!(times.windows(2).all(|p| p[0] <= p[1]));
        let c = visited_counts(&a, 200);
        prop_assert!(c.windows(2).all(|p| p[0] <= p[1] && p[1] <= p[0] + 1));
        prop_assert!(*c.last().unwrap() > 1);
    }
}
