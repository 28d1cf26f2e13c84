//! Seeded statistical experiments on the genus-2 surface: ergodic averages,
//! visited-cell growth, closing and volume bounds, exhaustive closed-geodesic
//! censuses, correlation decay and horocycle equidistribution.
//!
//! Every experiment is a pure function of its configuration. Per-seed work
//! runs on the rayon pool and is merged in seed order.

use crate::arcs::{
    cells_at_integers, classify_vector, closed_arc_census, compare_counts, segment_arc_census, visited_counts,
    volume_lower_bound, ArcClassKey, CENSUS_BOUND,
};
use crate::flow::{
    close_up, crossing_sequence_consistent, detect_returns, random_unit_vector, simulate, simulate_horocycle,
    FlowError, Trajectory,
};
use crate::moebius::GroupElement;
use crate::pants::{
    enumerate_orthogeodesics, fit_delta, measure_b, measure_b_asymptotic, montecarlo_measure_b, ArcKey, DeltaFit,
    OrthoTable, PantsError, DEFAULT_RECORD_BUDGET,
};
use crate::surface::{build_surface, ClosedGeodesicRecord, SurfaceError, SurfaceGroup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pants(#[from] PantsError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Independent random stream for (seed, purpose).
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(purpose);
    r
}

const STREAM_START: u64 = 1;

/// Liouville-random start vector of the orbit with this seed.
pub fn start_vector(surface: &SurfaceGroup, seed: u64) -> GroupElement {
    random_unit_vector(surface, &mut stream(seed, STREAM_START))
}

const STREAM_SAMPLES: u64 = 2;
const STREAM_HOROCYCLE: u64 = 3;
const STREAM_MEASURE: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cuff: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub dt: f64,
    pub seeds: Vec<u64>,
    pub eta: f64,
    pub n_grid: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub lmax: f64,
    /// Cutoff of the larger table used by the counting-law fit.
    pub counting_lmax: f64,
    pub t_max: f64,
    pub r_max: f64,
    pub samples: usize,
    /// Orbits sampled by the correlation and k-mixing estimators.
    pub mixing_samples: usize,
    /// Number of cells used by the Birkhoff check.
    pub cells: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            cuff: 1.5,
            epsilon: 0.25,
            rho: 1.0,
            dt: 0.005,
            seeds: (0..100).collect(),
            eta: 1.5,
            n_grid: vec![10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000],
            t_grid: vec![100.0, 300.0, 1000.0, 3000.0, 10_000.0],
            k_grid: vec![0, 1, 2, 3, 5, 10, 20, 50],
            lmax: 14.0,
            counting_lmax: 20.0,
            t_max: 2000.0,
            r_max: 17.0,
            samples: 1_000_000,
            mixing_samples: 100_000,
            cells: 10,
        }
    }
}

fn increasing<T: PartialOrd>(v: &[T]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if !(self.cuff > 0.0 && self.cuff <= 4.0) {
            return bad("cuff length must lie in (0, 4]");
        }
        if !(self.eta > 1.0) {
            return bad("eta must exceed 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= self.rho) {
            return bad("need 0 < epsilon <= rho");
        }
        if !(self.epsilon < self.cuff / 4.0) {
            return bad("epsilon must stay below c/4");
        }
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return bad("dt must lie in (0, 0.01]");
        }
        if self.seeds.is_empty() {
            return bad("no seeds");
        }
        if !increasing(&self.n_grid) || !increasing(&self.t_grid) || !increasing(&self.k_grid) {
            return bad("grids must be nonempty and increasing");
        }
        if !(self.lmax > 0.0 && self.counting_lmax > 0.0 && self.t_max > 0.0 && self.r_max > 0.0) || self.samples == 0 || self.mixing_samples < 2 || self.cells == 0 {
            return bad("lmax, t_max, r_max, samples and cells must be positive");
        }
        Ok(())
    }
}

/// Pass/fail of one acceptance rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Rule {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Rule { name: name.to_string(), passed, detail }
    }
}

pub fn all_passed(rules: &[Rule]) -> bool {
    rules.iter().all(|r| r.passed)
}

/// The comparison function F in LB >= F(l).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GrowthFn {
    Power(f64),
    Constant(f64),
}

impl GrowthFn {
    /// F(x) = x^(delta / (2 eta)).
    pub fn from_delta(delta: f64, eta: f64) -> Self {
        GrowthFn::Power(delta / (2.0 * eta))
    }

    /// Conservative exponent from a fit: delta is taken two standard errors
    /// high, which only makes F larger.
    pub fn from_fit(fit: &DeltaFit, eta: f64) -> Self {
        Self::from_delta(fit.delta + 2.0 * fit.delta_se, eta)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            GrowthFn::Power(e) => x.powf(e),
            GrowthFn::Constant(c) => c,
        }
    }
}

/// Surface, orthogeodesic table and fitted exponent shared by experiments.
pub struct Bench {
    pub surface: SurfaceGroup,
    pub table: OrthoTable,
    pub index: HashMap<ArcKey, usize>,
    pub fit: DeltaFit,
}

impl Bench {
    pub fn new(cuff: f64, lmax: f64) -> Result<Self, ExperimentError> {
        let surface = build_surface(cuff)?;
        let table = enumerate_orthogeodesics(&surface.pants, lmax, DEFAULT_RECORD_BUDGET)?;
        Self::from_table(surface, table)
    }

    pub fn from_table(surface: SurfaceGroup, table: OrthoTable) -> Result<Self, ExperimentError> {
        let fit = fit_delta(&table)?;
        let index = table.index_map();
        Ok(Bench { surface, table, index, fit })
    }

    /// Liouville measure of a cell on the surface.
    pub fn cell_measure(&self, cell: &ArcClassKey) -> f64 {
        match self.index.get(&cell.key) {
            Some(&i) => self.table.records[i - 1].measure,
            None => measure_b(cell.key.length(&self.surface.hex), 2).unwrap_or(0.0),
        }
    }

    /// The n cells of largest measure, alternating between the two pants.
    pub fn top_cells(&self, n: usize) -> Vec<ArcClassKey> {
        let mut recs: Vec<_> = self.table.records.iter().collect();
        recs.sort_by(|a, b| b.measure.total_cmp(&a.measure).then_with(|| a.index.cmp(&b.index)));
        recs.iter()
            .flat_map(|r| (0..2u8).map(move |p| ArcClassKey { pants: p, key: r.key.clone() }))
            .take(n)
            .collect()
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Least squares y = a + b x; returns (b, a, r2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (b, a, r2)
}

// ---------------------------------------------------------------- flow algebra

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowAlgebraReport {
    pub grid: usize,
    pub max_conjugation_error: f64,
    pub steps: usize,
    pub max_det_drift: f64,
    pub rules: Vec<Rule>,
}

/// a_t u_s a_{-t} = u_{e^t s} on a grid, and the determinant of a state
/// advanced by many geodesic steps (with deck moves, no renormalization).
pub fn flow_algebra_check(surface: &SurfaceGroup, grid: usize, steps: usize, dt: f64) -> FlowAlgebraReport {
    let mut max_err: f64 = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let t = -3.0 + 6.0 * i as f64 / (grid - 1) as f64;
            let s = -3.0 + 6.0 * j as f64 / (grid - 1) as f64;
            let lhs = GroupElement::geodesic(t) * GroupElement::horocycle(s) * GroupElement::geodesic(-t);
            let rhs = GroupElement::horocycle(t.exp() * s);
            let e = [lhs.a - rhs.a, lhs.b - rhs.b, lhs.c - rhs.c, lhs.d - rhs.d];
            max_err = e.iter().fold(max_err, |m, x| m.max(x.abs()));
        }
    }
    let mut rng = stream(0, STREAM_START);
    let mut x = random_unit_vector(surface, &mut rng);
    let step = GroupElement::geodesic(dt);
    let mut drift: f64 = 0.0;
    for n in 1..=steps {
        x = x * step;
        if n % 100 == 0 {
            if let Ok((_, _, w)) = surface.normalize(&x) {
                if !w.is_empty() {
                    x = surface.hex.element(&w) * x;
                }
            }
            drift = drift.max((x.det() - 1.0).abs());
        }
    }
    drift = drift.max((x.det() - 1.0).abs());
    let rules = vec![
        Rule::new("conjugation identity <= 1e-12", max_err <= 1e-12, format!("max entry error {max_err:.3e}")),
        Rule::new("determinant drift <= 1e-9", drift <= 1e-9, format!("drift {drift:.3e} over {steps} steps")),
    ];
    FlowAlgebraReport { grid, max_conjugation_error: max_err, steps, max_det_drift: drift, rules }
}

// ---------------------------------------------------------------- measure formula

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurePoint {
    pub length: f64,
    pub exact: f64,
    pub montecarlo: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub points: Vec<MeasurePoint>,
    pub ratio_at_8: f64,
    pub ratios: Vec<(f64, f64)>,
    pub rules: Vec<Rule>,
}

pub fn measure_check(lengths: &[f64], samples: usize, seed: u64) -> Result<MeasureReport, ExperimentError> {
    let mut points = Vec::new();
    for (i, &l) in lengths.iter().enumerate() {
        let exact = measure_b(l, 2)?;
        let (mc, se) = montecarlo_measure_b(l, samples, seed.wrapping_add(i as u64), 2);
        points.push(MeasurePoint { length: l, exact, montecarlo: mc, stderr: se, z: (mc - exact) / se });
    }
    let ratio = |l: f64| -> Result<f64, ExperimentError> { Ok(measure_b(l, 2)? / measure_b_asymptotic(l, 2)) };
    let ratio_at_8 = ratio(8.0)?;
    let mut ratios = Vec::new();
    for l in 4..=12 {
        ratios.push((l as f64, ratio(l as f64)?));
    }
    let within = points.iter().all(|p| p.z.abs() <= 3.0);
    let monotone = ratios.windows(2).all(|w| (w[1].1 - 1.0).abs() < (w[0].1 - 1.0).abs());
    let rules = vec![
        Rule::new(
            "Monte Carlo within 3 standard errors",
            within,
            points.iter().map(|p| format!("l={} z={:.2}", p.length, p.z)).collect::<Vec<_>>().join(", "),
        ),
        Rule::new("asymptotic ratio at l=8 in [0.95, 1.05]", (0.95..=1.05).contains(&ratio_at_8), format!("ratio {ratio_at_8:.6}")),
        Rule::new(
            "ratio tends to 1 monotonically over l=4..12",
            monotone,
            ratios.iter().map(|(l, r)| format!("{l}:{r:.4}")).collect::<Vec<_>>().join(" "),
        ),
    ];
    Ok(MeasureReport { points, ratio_at_8, ratios, rules })
}

// ---------------------------------------------------------------- partition of unity

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFrequency {
    pub cell: String,
    pub measure: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub lmax: f64,
    pub records: usize,
    pub sum: f64,
    pub tail: f64,
    pub samples: usize,
    pub unclassified: usize,
    pub cells: Vec<CellFrequency>,
    pub rules: Vec<Rule>,
}

/// Cells of Liouville-random vectors, in sample order.
pub fn sample_cells(surface: &SurfaceGroup, n: usize, seed: u64) -> Result<Vec<Option<ArcClassKey>>, ExperimentError> {
    let chunks = 64usize;
    let per = n.div_ceil(chunks);
    let parts: Result<Vec<Vec<Option<ArcClassKey>>>, FlowError> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = stream(seed, STREAM_SAMPLES + 16 * ci as u64);
            let m = per.min(n.saturating_sub(ci * per));
            (0..m).map(|_| classify_vector(surface, &random_unit_vector(surface, &mut rng))).collect()
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

pub fn partition_check(bench: &Bench, samples: usize, seed: u64, top: usize) -> Result<PartitionReport, ExperimentError> {
    let sum = bench.table.partition_sum(2);
    let tail = crate::pants::analytic_tail(&bench.fit, bench.table.lmax, 2, 2);
    let cells = sample_cells(&bench.surface, samples, seed)?;
    let unclassified = cells.iter().filter(|c| c.is_none()).count();
    let mut counts: HashMap<ArcClassKey, usize> = HashMap::new();
    for c in cells.into_iter().flatten() {
        *counts.entry(c).or_default() += 1;
    }
    let n = samples as f64;
    let freqs: Vec<CellFrequency> = bench
        .top_cells(top)
        .into_iter()
        .map(|cell| {
            let mu = bench.cell_measure(&cell);
            let f = *counts.get(&cell).unwrap_or(&0) as f64 / n;
            let se = (mu * (1.0 - mu) / n).sqrt();
            CellFrequency { cell: format!("P{}:{}", cell.pants, cell.key), measure: mu, frequency: f, stderr: se, z: (f - mu) / se }
        })
        .collect();
    let bad = freqs.iter().filter(|c| c.z.abs() > 3.0).count();
    let rules = vec![
        Rule::new("analytic tail < 0.05", tail < 0.05, format!("tail {tail:.4} at Lmax {}", bench.table.lmax)),
        Rule::new("sum of measures in [0.95, 1.0]", (0.95..=1.0).contains(&sum), format!("sum {sum:.6}")),
        Rule::new(
            "cell frequencies within 3 standard errors",
            bad == 0,
            format!("{bad} of {} cells outside, max |z| {:.2}", freqs.len(), freqs.iter().map(|c| c.z.abs()).fold(0.0, f64::max)),
        ),
    ];
    Ok(PartitionReport { lmax: bench.table.lmax, records: bench.table.len(), sum, tail, samples, unclassified, cells: freqs, rules })
}

// ---------------------------------------------------------------- counting law

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub lmax: f64,
    pub records: usize,
    pub fit: DeltaFit,
    pub index_deviation: f64,
    pub rules: Vec<Rule>,
}

pub fn counting_check(table: &OrthoTable) -> Result<CountingReport, ExperimentError> {
    let fit = fit_delta(table)?;
    let dev = crate::pants::index_asymptotic_check(table, fit.delta);
    let rules = vec![
        Rule::new("table has >= 1000 records", table.len() >= 1000, format!("{} records", table.len())),
        Rule::new("delta in (0, 1)", fit.delta > 0.0 && fit.delta < 1.0, format!("delta {:.5} +- {:.5}", fit.delta, fit.delta_se)),
        Rule::new("r2 >= 0.99", fit.r2 >= 0.99, format!("r2 {:.6}", fit.r2)),
        Rule::new("l_i delta / log i within 10% on the top decile", dev <= 0.10, format!("max deviation {dev:.4}")),
    ];
    Ok(CountingReport { lmax: table.lmax, records: table.len(), fit, index_deviation: dev, rules })
}

// ---------------------------------------------------------------- per-seed orbits

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingRecord {
    pub seed: u64,
    pub t: f64,
    pub distance: f64,
    pub length: f64,
    pub anosov_ok: bool,
    pub primitive_length: f64,
    pub power: u32,
    pub filling_proxy: bool,
    pub lower_bound: f64,
    pub f_of_length: f64,
    pub bound_holds: bool,
    pub segment_a: usize,
    pub closed_a: usize,
    pub deviation: usize,
    pub past_filling: bool,
    pub sequence_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedEvent {
    pub seed: u64,
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub crossings: usize,
    pub returns: usize,
    /// First integer time whose segment census passes the filling proxy.
    pub filling_time: Option<f64>,
    /// C_N for N = 1..=n_max.
    pub visited: Vec<usize>,
    pub closings: Vec<ClosingRecord>,
    pub rejected: Vec<RejectedEvent>,
}

fn filling_time(traj: &Trajectory, t_end: f64) -> Option<f64> {
    // the census grows with the window, so bisect over integer times
    let passes = |t: f64| segment_arc_census(traj, 0.0, t).filling_proxy();
    let hi = t_end.floor();
    if hi < 1.0 || !passes(hi) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, hi);
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// One Liouville-random orbit: the visited counts up to n_max and the
/// closings of its returns before t_max.
pub fn seed_run(bench: &Bench, cfg: &ExperimentConfig, seed: u64, f: GrowthFn) -> Result<SeedRun, ExperimentError> {
    let surface = &bench.surface;
    let v = start_vector(surface, seed);
    let n_max = *cfg.n_grid.last().unwrap();
    let horizon = cfg.t_max.max(n_max as f64);
    let traj = simulate(surface, &v, horizon, cfg.dt)?;
    let visited = visited_counts(&traj, n_max);
    let mut window = traj.clone();
    window.t_max = cfg.t_max;
    let events = detect_returns(surface, &window, cfg.epsilon);
    let tf = filling_time(&traj, cfg.t_max);
    let mut closings = Vec::new();
    let mut rejected = Vec::new();
    for e in &events {
        match close_up(surface, &window, e, cfg.rho) {
            Ok(cg) => {
                let seg = segment_arc_census(&traj, 0.0, e.time);
                let lb = volume_lower_bound(&cg.census);
                let root_len = cg.length / cg.power as f64;
                let fl = f.eval(cg.length);
                closings.push(ClosingRecord {
                    seed,
                    t: e.time,
                    distance: e.distance,
                    length: cg.length,
                    anosov_ok: (cg.length - e.time).abs() <= cfg.rho,
                    primitive_length: root_len,
                    power: cg.power,
                    filling_proxy: cg.census.filling_proxy(),
                    lower_bound: lb,
                    f_of_length: fl,
                    bound_holds: lb >= fl,
                    segment_a: seg.a_directed(),
                    closed_a: cg.census.a_directed(),
                    deviation: compare_counts(&seg, &cg.census),
                    past_filling: tf.is_some_and(|tf| e.time >= tf),
                    sequence_consistent: crossing_sequence_consistent(&window, &cg),
                });
            }
            Err(err) => rejected.push(RejectedEvent { seed, t: e.time, reason: err.to_string() }),
        }
    }
    Ok(SeedRun {
        seed,
        crossings: traj.crossings.len(),
        returns: events.len(),
        filling_time: tf,
        visited,
        closings,
        rejected,
    })
}

pub fn seed_runs(bench: &Bench, cfg: &ExperimentConfig, f: GrowthFn) -> Result<Vec<SeedRun>, ExperimentError> {
    cfg.seeds.par_iter().map(|&s| seed_run(bench, cfg, s, f)).collect()
}

// ---------------------------------------------------------------- closing and volume bound

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeBoundReport {
    pub epsilon: f64,
    pub rho: f64,
    pub t_max: f64,
    pub delta: f64,
    pub eta: f64,
    pub seeds: usize,
    pub returns: usize,
    pub accepted: usize,
    pub anosov_violations: usize,
    pub records: Vec<ClosingRecord>,
    pub rejected: Vec<RejectedEvent>,
    pub rules: Vec<Rule>,
}

pub fn volume_bound_experiment(runs: &[SeedRun], cfg: &ExperimentConfig, delta: f64) -> VolumeBoundReport {
    let records: Vec<ClosingRecord> = runs.iter().flat_map(|r| r.closings.iter().cloned()).collect();
    let rejected: Vec<RejectedEvent> = runs.iter().flat_map(|r| r.rejected.iter().cloned()).collect();
    let returns: usize = runs.iter().map(|r| r.returns).sum();
    let violations = rejected.iter().filter(|r| r.reason.contains("differs from return time")).count();
    let anosov_bad = records.iter().filter(|r| !r.anosov_ok).count() + violations;
    let past: Vec<&ClosingRecord> = records.iter().filter(|r| r.past_filling).collect();
    let dev_bad = past.iter().filter(|r| r.deviation > CENSUS_BOUND).count();
    let late: Vec<&ClosingRecord> = records.iter().filter(|r| r.t >= 1000.0).collect();
    let late_pass = late.iter().filter(|r| r.bound_holds).count();
    let late_frac = if late.is_empty() { 0.0 } else { late_pass as f64 / late.len() as f64 };
    let late_fill = late.iter().filter(|r| r.filling_proxy).count();
    let inconsistent = records.iter().filter(|r| !r.sequence_consistent).count();
    let rules = vec![
        Rule::new(
            "every closing satisfies |l - t| <= rho",
            anosov_bad == 0 && !records.is_empty(),
            format!("{} accepted of {returns} returns, {anosov_bad} violations", records.len()),
        ),
        Rule::new(
            "census deviation <= 6 past the filling time",
            dev_bad == 0 && !past.is_empty(),
            format!(
                "{dev_bad} of {} exceed, max deviation {}",
                past.len(),
                past.iter().map(|r| r.deviation).max().unwrap_or(0)
            ),
        ),
        Rule::new(
            "LB >= F(l) on >= 95% of closings with t >= 1000",
            !late.is_empty() && late_frac >= 0.95,
            format!("{late_pass} of {} ({:.3}), filling proxy on {late_fill}", late.len(), late_frac),
        ),
        Rule::new("cutting sequences consistent", inconsistent == 0, format!("{inconsistent} inconsistent")),
    ];
    VolumeBoundReport {
        epsilon: cfg.epsilon,
        rho: cfg.rho,
        t_max: cfg.t_max,
        delta,
        eta: cfg.eta,
        seeds: runs.len(),
        returns,
        accepted: records.len(),
        anosov_violations: anosov_bad,
        records,
        rejected,
        rules,
    }
}

// ---------------------------------------------------------------- growth

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub seed: u64,
    pub counts: Vec<usize>,
    /// Least grid N from which C_N >= F(N) holds to the end of the grid.
    pub n0: Option<usize>,
    pub longest_plateau: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n_grid: Vec<usize>,
    pub f: GrowthFn,
    pub records: Vec<GrowthRecord>,
    pub success_fraction: f64,
    pub plateau_fraction: f64,
    pub rules: Vec<Rule>,
}

fn longest_plateau(visited: &[usize]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for w in visited.windows(2) {
        if w[1] == w[0] {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

pub fn growth_experiment(runs: &[SeedRun], n_grid: &[usize], f: GrowthFn) -> GrowthReport {
    let records: Vec<GrowthRecord> = runs
        .iter()
        .map(|r| {
            let counts: Vec<usize> = n_grid.iter().map(|&n| r.visited[n - 1]).collect();
            let ok: Vec<bool> = n_grid.iter().zip(&counts).map(|(&n, &c)| c as f64 >= f.eval(n as f64)).collect();
            let n0 = (0..n_grid.len()).find(|&i| ok[i..].iter().all(|&b| b)).map(|i| n_grid[i]);
            GrowthRecord { seed: r.seed, counts, n0, longest_plateau: longest_plateau(&r.visited) }
        })
        .collect();
    let m = records.len().max(1) as f64;
    let success = records.iter().filter(|r| r.n0.is_some()).count() as f64 / m;
    let plateau = records.iter().filter(|r| r.longest_plateau <= 1000).count() as f64 / m;
    let rules = vec![
        Rule::new("C_N >= F(N) eventually on >= 95% of seeds", success >= 0.95, format!("success fraction {success:.3}")),
        Rule::new("no plateau longer than 1000 on >= 90% of seeds", plateau >= 0.90, format!("fraction {plateau:.3}")),
    ];
    GrowthReport { n_grid: n_grid.to_vec(), f, records, success_fraction: success, plateau_fraction: plateau, rules }
}

// ---------------------------------------------------------------- exhaustive census

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    pub filling: usize,
    pub passing: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub r: f64,
    pub classes: usize,
    pub primitive: usize,
    pub primitive_fraction: f64,
    pub filling: usize,
    pub passing: usize,
    pub fraction: f64,
    pub huber_ratio: f64,
    pub bins: Vec<DensityBin>,
    pub rules: Vec<Rule>,
}

/// Oriented closed geodesics of length <= r with their arc censuses.
pub fn density_experiment(surface: &SurfaceGroup, r: f64, f: GrowthFn, n_bins: usize) -> Result<DensityReport, ExperimentError> {
    let recs = surface.enumerate_closed_geodesics(r, CLOSED_BUDGET)?;
    Ok(density_from_records(&recs, r, f, n_bins))
}

/// Largest number of classes an exhaustive census may hold.
pub const CLOSED_BUDGET: usize = 20_000_000;

/// The census of an existing enumeration of all classes of length <= r.
pub fn density_from_records(recs: &[ClosedGeodesicRecord], r: f64, f: GrowthFn, n_bins: usize) -> DensityReport {
    let primitive: Vec<_> = recs.iter().filter(|c| c.primitive).collect();
    let mut bins: Vec<DensityBin> = (0..n_bins)
        .map(|i| DensityBin {
            lo: r * i as f64 / n_bins as f64,
            hi: r * (i + 1) as f64 / n_bins as f64,
            filling: 0,
            passing: 0,
            fraction: f64::NAN,
        })
        .collect();
    let mut filling = 0;
    let mut passing = 0;
    for c in &primitive {
        let census = closed_arc_census(&c.cutting);
        if !census.filling_proxy() {
            continue;
        }
        filling += 1;
        let ok = volume_lower_bound(&census) >= f.eval(c.length);
        passing += ok as usize;
        let b = ((c.length / r * n_bins as f64) as usize).min(n_bins - 1);
        bins[b].filling += 1;
        bins[b].passing += ok as usize;
    }
    for b in &mut bins {
        if b.filling > 0 {
            b.fraction = b.passing as f64 / b.filling as f64;
        }
    }
    let fraction = if filling > 0 { passing as f64 / filling as f64 } else { 0.0 };
    let primitive_fraction = primitive.len() as f64 / recs.len().max(1) as f64;
    let huber = primitive.len() as f64 * r / r.exp();
    let occupied: Vec<f64> = bins.iter().filter(|b| b.filling > 0).map(|b| b.fraction).collect();
    let nondecreasing = occupied.windows(2).all(|w| w[1] >= w[0]);
    let rules = vec![
        Rule::new("filling classes passing >= 0.8", fraction >= 0.8, format!("{passing} of {filling} ({fraction:.3})")),
        Rule::new(
            "passing fraction non-decreasing across length bins",
            nondecreasing,
            bins.iter()
                .filter(|b| b.filling > 0)
                .map(|b| format!("[{:.1},{:.1}]:{}/{}", b.lo, b.hi, b.passing, b.filling))
                .collect::<Vec<_>>()
                .join(" "),
        ),
        Rule::new("primitive fraction >= 0.9", primitive_fraction >= 0.9, format!("{primitive_fraction:.4}")),
        Rule::new("#G(R) R / e^R in [0.3, 3]", (0.3..=3.0).contains(&huber), format!("{huber:.4} at R = {r}")),
    ];
    DensityReport {
        r,
        classes: recs.len(),
        primitive: primitive.len(),
        primitive_fraction,
        filling,
        passing,
        fraction,
        huber_ratio: huber,
        bins,
        rules,
    }
}

// ---------------------------------------------------------------- Birkhoff averages

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffRecord {
    pub seed: u64,
    pub cell: String,
    pub t: f64,
    pub frequency: f64,
    pub measure: f64,
    pub deviation: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub t_grid: Vec<f64>,
    pub records: Vec<BirkhoffRecord>,
    pub pass_fraction: f64,
    pub median_deviation: Vec<f64>,
    pub median_first_visit: Vec<f64>,
    pub rules: Vec<Rule>,
}

pub fn birkhoff_check(bench: &Bench, seeds: &[u64], cells: &[ArcClassKey], t_grid: &[f64], dt: f64) -> Result<BirkhoffReport, ExperimentError> {
    let t_end = *t_grid.last().unwrap();
    let per_seed: Result<Vec<(Vec<BirkhoffRecord>, Vec<f64>)>, ExperimentError> = seeds
        .par_iter()
        .map(|&seed| {
            let v = start_vector(&bench.surface, seed);
            let traj = simulate(&bench.surface, &v, t_end, dt)?;
            let seq = cells_at_integers(&traj, t_end as usize);
            let mut recs = Vec::new();
            let mut first = Vec::new();
            for cell in cells {
                let mu = bench.cell_measure(cell);
                first.push(seq.iter().position(|c| c.as_ref() == Some(cell)).map_or(f64::INFINITY, |i| i as f64));
                for &t in t_grid {
                    let n = t as usize;
                    let hits = seq[..n].iter().filter(|c| c.as_ref() == Some(cell)).count();
                    let freq = hits as f64 / n as f64;
                    recs.push(BirkhoffRecord {
                        seed,
                        cell: format!("P{}:{}", cell.pants, cell.key),
                        t,
                        frequency: freq,
                        measure: mu,
                        deviation: (freq - mu).abs(),
                        tolerance: 3.0 * (mu * (1.0 - mu) / t).sqrt(),
                    });
                }
            }
            Ok((recs, first))
        })
        .collect();
    let per_seed = per_seed?;
    let records: Vec<BirkhoffRecord> = per_seed.iter().flat_map(|(r, _)| r.iter().cloned()).collect();
    let at_end: Vec<&BirkhoffRecord> = records.iter().filter(|r| r.t == t_end).collect();
    let pass = at_end.iter().filter(|r| r.deviation <= r.tolerance).count() as f64 / at_end.len().max(1) as f64;
    let median_deviation: Vec<f64> = t_grid
        .iter()
        .map(|&t| median(&records.iter().filter(|r| r.t == t).map(|r| r.deviation).collect::<Vec<_>>()))
        .collect();
    let median_first_visit: Vec<f64> =
        (0..cells.len()).map(|i| median(&per_seed.iter().map(|(_, f)| f[i]).collect::<Vec<_>>())).collect();
    let trend = median_deviation.windows(2).all(|w| w[1] <= w[0]);
    // cells tied with the largest measure (the cuffs are symmetric) form one group
    let measures: Vec<f64> = cells.iter().map(|c| bench.cell_measure(c)).collect();
    let top = measures.iter().cloned().fold(0.0, f64::max);
    let tied = |m: f64| (m - top).abs() <= 1e-12 * top;
    let top_first = (0..cells.len()).filter(|&i| tied(measures[i])).map(|i| median_first_visit[i]).fold(f64::NEG_INFINITY, f64::max);
    let largest_first = (0..cells.len()).filter(|&i| !tied(measures[i])).all(|i| top_first <= median_first_visit[i]);
    let rules = vec![
        Rule::new(
            "deviation within 3 sqrt(mu(1-mu)/T) on >= 90% of pairs",
            pass >= 0.90,
            format!("pass fraction {pass:.3} at T = {t_end}"),
        ),
        Rule::new(
            "median deviation non-increasing in T",
            trend,
            median_deviation.iter().map(|d| format!("{d:.5}")).collect::<Vec<_>>().join(" "),
        ),
        Rule::new(
            "largest cell visited first in median",
            largest_first,
            (0..cells.len()).map(|i| format!("{:.4}:{}", measures[i], median_first_visit[i])).collect::<Vec<_>>().join(" "),
        ),
    ];
    Ok(BirkhoffReport { t_grid: t_grid.to_vec(), records, pass_fraction: pass, median_deviation, median_first_visit, rules })
}

// ---------------------------------------------------------------- correlations

/// Cells at integer times 0..=k_max along the orbits of random vectors.
fn orbit_cells(surface: &SurfaceGroup, n: usize, k_max: usize, dt: f64, seed: u64) -> Result<Vec<Vec<Option<ArcClassKey>>>, ExperimentError> {
    let chunks = 64usize;
    let per = n.div_ceil(chunks);
    let parts: Result<Vec<Vec<Vec<Option<ArcClassKey>>>>, ExperimentError> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = stream(seed, STREAM_SAMPLES + 16 * ci as u64 + 1);
            let m = per.min(n.saturating_sub(ci * per));
            (0..m)
                .map(|_| {
                    let v = random_unit_vector(surface, &mut rng);
                    let traj = simulate(surface, &v, k_max as f64 + 1.0, dt)?;
                    Ok(cells_at_integers(&traj, k_max + 1))
                })
                .collect()
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub k: usize,
    pub rho: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub a: String,
    pub b: String,
    pub samples: usize,
    pub mu_a: f64,
    pub points: Vec<CorrelationPoint>,
    pub rules: Vec<Rule>,
}

/// rho(k) = E[1_A 1_B(T^k)] - E[1_A] E[1_B], by the empirical covariance.
pub fn correlation_decay(
    bench: &Bench,
    a: &ArcClassKey,
    b: &ArcClassKey,
    k_grid: &[usize],
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<CorrelationReport, ExperimentError> {
    let k_max = *k_grid.last().unwrap();
    let orbits = orbit_cells(&bench.surface, n, k_max, dt, seed)?;
    let nf = n as f64;
    let f: Vec<f64> = orbits.iter().map(|o| (o[0].as_ref() == Some(a)) as u8 as f64).collect();
    let fm = f.iter().sum::<f64>() / nf;
    let points: Vec<CorrelationPoint> = k_grid
        .iter()
        .map(|&k| {
            let g: Vec<f64> = orbits.iter().map(|o| (o[k].as_ref() == Some(b)) as u8 as f64).collect();
            let gm = g.iter().sum::<f64>() / nf;
            let phi: Vec<f64> = f.iter().zip(&g).map(|(x, y)| (x - fm) * (y - gm)).collect();
            let rho = phi.iter().sum::<f64>() / nf;
            let var = phi.iter().map(|p| (p - rho).powi(2)).sum::<f64>() / (nf - 1.0);
            CorrelationPoint { k, rho, stderr: (var / nf).sqrt() }
        })
        .collect();
    let mu_a = bench.cell_measure(a);
    let last = points.last().unwrap();
    let mut rules = vec![Rule::new(
        "|rho(k_max)| within 3 standard errors of 0",
        last.rho.abs() <= 3.0 * last.stderr,
        format!("rho({}) = {:.3e} +- {:.3e}", last.k, last.rho, last.stderr),
    )];
    let windows: Vec<f64> = points.chunks(2).map(|w| median(&w.iter().map(|p| p.rho.abs()).collect::<Vec<_>>())).collect();
    rules.push(Rule::new(
        "median |rho| over k-windows non-increasing",
        windows.windows(2).all(|w| w[1] <= w[0]),
        windows.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(" "),
    ));
    if a == b {
        if let Some(p0) = points.iter().find(|p| p.k == 0) {
            let want = mu_a * (1.0 - mu_a);
            // standard error of the sample variance of an indicator
            let se = (want * (1.0 - 2.0 * mu_a).powi(2) / nf).sqrt().max(p0.stderr);
            rules.push(Rule::new(
                "rho(0) = mu(1 - mu) within 3 standard errors",
                (p0.rho - want).abs() <= 3.0 * se,
                format!("rho(0) {:.5} vs {want:.5}", p0.rho),
            ));
        }
    }
    Ok(CorrelationReport {
        a: format!("P{}:{}", a.pants, a.key),
        b: format!("P{}:{}", b.pants, b.key),
        samples: n,
        mu_a,
        points,
        rules,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMixingPoint {
    pub k: usize,
    pub error: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMixingReport {
    pub cells: Vec<String>,
    pub product: f64,
    pub points: Vec<KMixingPoint>,
}

/// |E[prod_j 1_{B_j}(T^{jk} v)] - prod_j mu(B_j)| for each spacing k.
pub fn k_mixing_check(
    bench: &Bench,
    cells: &[ArcClassKey],
    k_grid: &[usize],
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<KMixingReport, ExperimentError> {
    if cells.is_empty() || cells.len() > 5 {
        return Err(ExperimentError::Config("k-mixing needs 1 to 5 cells".into()));
    }
    let k_max = *k_grid.last().unwrap() * cells.len();
    let orbits = orbit_cells(&bench.surface, n, k_max, dt, seed)?;
    let product: f64 = cells.iter().map(|c| bench.cell_measure(c)).product();
    let nf = n as f64;
    let points = k_grid
        .iter()
        .map(|&k| {
            let x: Vec<f64> = orbits
                .iter()
                .map(|o| cells.iter().enumerate().all(|(j, c)| o[(j + 1) * k].as_ref() == Some(c)) as u8 as f64)
                .collect();
            let m = x.iter().sum::<f64>() / nf;
            let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0);
            KMixingPoint { k, error: (m - product).abs(), stderr: (var.max(product * (1.0 - product)) / nf).sqrt() }
        })
        .collect();
    Ok(KMixingReport { cells: cells.iter().map(|c| format!("P{}:{}", c.pants, c.key)).collect(), product, points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMixingTrendReport {
    pub k_grid: Vec<usize>,
    pub tuples: Vec<KMixingReport>,
    /// Median over tuples of the error at each k.
    pub median_error: Vec<f64>,
    pub rules: Vec<Rule>,
}

/// k-mixing errors over several index tuples; the decay rule compares the
/// median error at k = 20 with the one at k = 2 (or the last and first
/// positive spacings when those are absent).
pub fn k_mixing_trend(
    bench: &Bench,
    tuples: &[Vec<ArcClassKey>],
    k_grid: &[usize],
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<KMixingTrendReport, ExperimentError> {
    let reports = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| k_mixing_check(bench, t, k_grid, n, dt, seed.wrapping_add(i as u64 * 7919)))
        .collect::<Result<Vec<_>, _>>()?;
    let median_error: Vec<f64> =
        (0..k_grid.len()).map(|j| median(&reports.iter().map(|r| r.points[j].error).collect::<Vec<_>>())).collect();
    let positive: Vec<usize> = (0..k_grid.len()).filter(|&j| k_grid[j] > 0).collect();
    let lo = k_grid.iter().position(|&k| k == 2).or(positive.first().copied());
    let hi = k_grid.iter().position(|&k| k == 20).or(positive.last().copied());
    let rules = match (lo, hi) {
        (Some(a), Some(b)) if a != b => vec![Rule::new(
            "median k-mixing error decays",
            median_error[b] < median_error[a],
            format!("k={}: {:.3e}, k={}: {:.3e}", k_grid[b], median_error[b], k_grid[a], median_error[a]),
        )],
        _ => vec![],
    };
    Ok(KMixingTrendReport { k_grid: k_grid.to_vec(), tuples: reports, median_error, rules })
}

// ---------------------------------------------------------------- horocycles

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorocycleReport {
    pub region: Vec<String>,
    pub measure: f64,
    pub t_grid: Vec<f64>,
    pub spacing: f64,
    /// Max over seeds of |average - measure| at each T.
    pub errors: Vec<f64>,
    pub median_errors: Vec<f64>,
    pub alpha: f64,
    pub r2: f64,
    pub rules: Vec<Rule>,
}

/// Averages of the region indicator along x u_s, 0 <= s <= T, sampled at the
/// given spacing. An empty region means the whole bundle.
pub fn horocycle_equidistribution(
    bench: &Bench,
    seeds: &[u64],
    t_grid: &[f64],
    region: &[ArcClassKey],
    spacing: f64,
    dt: f64,
) -> Result<HorocycleReport, ExperimentError> {
    let whole = region.is_empty();
    let mu: f64 = if whole { 1.0 } else { region.iter().map(|c| bench.cell_measure(c)).sum() };
    let t_end = *t_grid.last().unwrap();
    let per_seed: Result<Vec<Vec<f64>>, ExperimentError> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = stream(seed, STREAM_HOROCYCLE);
            let x = random_unit_vector(&bench.surface, &mut rng);
            let traj = simulate_horocycle(&bench.surface, &x, t_end, dt)?;
            let n = (t_end / spacing) as usize;
            let mut hits = 0usize;
            let mut out = Vec::new();
            let mut gi = 0;
            for i in 0..=n {
                let s = i as f64 * spacing;
                let inside = whole || {
                    let (y, _) = traj.state_at(s);
                    classify_vector(&bench.surface, &y)?.is_some_and(|c| region.contains(&c))
                };
                hits += inside as usize;
                while gi < t_grid.len() && s + spacing > t_grid[gi] {
                    out.push((hits as f64 / (i + 1) as f64 - mu).abs());
                    gi += 1;
                }
            }
            Ok(out)
        })
        .collect();
    let per_seed = per_seed?;
    let errors: Vec<f64> = (0..t_grid.len()).map(|j| per_seed.iter().map(|e| e[j]).fold(0.0, f64::max)).collect();
    let median_errors: Vec<f64> = (0..t_grid.len()).map(|j| median(&per_seed.iter().map(|e| e[j]).collect::<Vec<_>>())).collect();
    let fit_pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&errors)
        .filter(|(&t, &e)| (100.0..=10_000.0).contains(&t) && e > 0.0)
        .map(|(&t, &e)| (t.ln(), e.ln()))
        .collect();
    let (alpha, r2) = if fit_pts.len() >= 2 {
        let (b, _, r2) = linear_fit(&fit_pts.iter().map(|p| p.0).collect::<Vec<_>>(), &fit_pts.iter().map(|p| p.1).collect::<Vec<_>>());
        (-b, r2)
    } else {
        (f64::NAN, f64::NAN)
    };
    let trend = median_errors.windows(2).all(|w| w[1] <= w[0]);
    let rules = if whole {
        vec![Rule::new("whole bundle has zero error", errors.iter().all(|&e| e == 0.0), format!("{errors:?}"))]
    } else {
        vec![
            Rule::new("fitted alpha > 0 with r2 >= 0.8", alpha > 0.0 && r2 >= 0.8, format!("alpha {alpha:.4}, r2 {r2:.4}")),
            Rule::new(
                "median error decreasing in T",
                trend,
                median_errors.iter().map(|e| format!("{e:.5}")).collect::<Vec<_>>().join(" "),
            ),
        ]
    };
    Ok(HorocycleReport {
        region: region.iter().map(|c| format!("P{}:{}", c.pants, c.key)).collect(),
        measure: mu,
        t_grid: t_grid.to_vec(),
        spacing,
        errors,
        median_errors,
        alpha,
        r2,
        rules,
    })
}

/// Crossing rate of all tile sides predicted by integral geometry:
/// 2 L / (pi A) for side length L on a surface of area A.
pub fn crossing_rate_oracle(surface: &SurfaceGroup) -> f64 {
    let hex = &surface.hex;
    let total = 3.0 * surface.cuff_length + 6.0 * hex.seam_length;
    2.0 * total / (std::f64::consts::PI * 4.0 * std::f64::consts::PI)
}

/// Liouville-random seeds for the measure and Monte Carlo streams.
pub fn measure_seed(root: u64) -> u64 {
    use rand::Rng;
    stream(root, STREAM_MEASURE).gen()
}

/// Summary statistics of seed runs for reports.
pub fn returns_histogram(runs: &[SeedRun]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for r in runs {
        *h.entry(r.returns).or_default() += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            seeds: vec![1, 2, 3],
            n_grid: vec![10, 100, 1000],
            t_max: 300.0,
            epsilon: 0.3,
            rho: 1.2,
            lmax: 10.0,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let c = ExperimentConfig { eta: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.epsilon = 2.0 * c.rho;
        assert!(c.validate().is_err());
        let c = ExperimentConfig { k_grid: vec![5, 3], ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn seed_runs_are_deterministic() {
        let cfg = small_config();
        let bench = Bench::new(cfg.cuff, cfg.lmax).unwrap();
        let f = GrowthFn::from_delta(bench.fit.delta, cfg.eta);
        let a = seed_runs(&bench, &cfg, f).unwrap();
        let b = seed_runs(&bench, &cfg, f).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert_eq!(r.visited[0], 1);
            assert!(r.visited.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 1));
        }
    }

    #[test]
    fn growth_trivial_cases() {
        let cfg = small_config();
        let bench = Bench::new(cfg.cuff, cfg.lmax).unwrap();
        let f = GrowthFn::from_delta(bench.fit.delta, cfg.eta);
        let runs = seed_runs(&bench, &cfg, f).unwrap();
        let one = growth_experiment(&runs, &cfg.n_grid, GrowthFn::Constant(1.0));
        assert_eq!(one.success_fraction, 1.0);
        assert!(one.records.iter().all(|r| r.n0 == Some(10)));
        let s1 = growth_experiment(&runs, &cfg.n_grid, GrowthFn::from_delta(bench.fit.delta, 1.5)).success_fraction;
        let s2 = growth_experiment(&runs, &cfg.n_grid, GrowthFn::from_delta(bench.fit.delta, 3.0)).success_fraction;
        assert!(s2 >= s1);
    }

    #[test]
    fn density_trivial_cases() {
        let s = build_surface(1.5).unwrap();
        let zero = density_experiment(&s, 6.0, GrowthFn::Constant(0.0), 3).unwrap();
        assert!(zero.filling == 0 || zero.fraction == 1.0);
        let a = density_experiment(&s, 6.0, GrowthFn::Constant(0.5), 3).unwrap();
        let b = density_experiment(&s, 6.0, GrowthFn::Constant(2.0), 3).unwrap();
        assert!(b.fraction <= a.fraction);
    }

    #[test]
    fn whole_bundle_horocycle_error_is_zero() {
        let bench = Bench::new(1.5, 10.0).unwrap();
        let rep = horocycle_equidistribution(&bench, &[1, 2], &[10.0, 20.0], &[], 0.5, 0.01).unwrap();
        assert!(rep.errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn single_factor_k_mixing_is_stationary() {
        let bench = Bench::new(1.5, 10.0).unwrap();
        let cell = bench.top_cells(1).remove(0);
        let rep = k_mixing_check(&bench, &[cell], &[1, 5, 20], 4000, 0.01, 9).unwrap();
        for p in &rep.points {
            assert!(p.error <= 3.0 * p.stderr, "{p:?}");
        }
    }

    #[test]
    fn unspaced_product_of_distinct_cells_vanishes() {
        let bench = Bench::new(1.5, 10.0).unwrap();
        let cells = bench.top_cells(2);
        let rep = k_mixing_check(&bench, &cells, &[0], 2000, 0.01, 4).unwrap();
        // two distinct cells never hold at once, so the error is the full product
        assert!((rep.points[0].error - rep.product).abs() < 1e-15 && rep.product > 0.0);
    }
}
