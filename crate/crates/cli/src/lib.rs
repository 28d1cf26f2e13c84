//! `gll`: command-line front end for the genus-2 geodesic experiments.
//!
//! Lengths are in hyperbolic units and times in geodesic-flow units
//! throughout. Every output file starts with a header block carrying the
//! code version, a hash of the run configuration and the seed list.

pub mod cache;
pub mod output;

use cache::{Cache, CacheStatus};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gll_core::arcs::{segment_arc_census, visited_count, volume_lower_bound, resolve, ArcCensus, ArcClassKey};
use gll_core::experiments::{self as ex, Bench, ExperimentConfig, ExperimentError, GrowthFn, Rule};
use gll_core::flow::{close_up, detect_returns, simulate};
use gll_core::pants::{enumerate_orthogeodesics, measure_b, measure_b_asymptotic, montecarlo_measure_b, OrthoTable, DEFAULT_RECORD_BUDGET};
use gll_core::surface::{build_surface, ClosedGeodesicRecord, CuttingSequence, SurfaceGroup};
use output::{num, Body, Document, Format, Header, Table};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODULE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

/// Seed list: `N` means 0..N, `a..b` a half-open range, or a comma list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let s = s.trim();
    let v: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        (a..b).collect()
    } else if s.contains(',') {
        s.split(',').map(|x| x.trim().parse::<u64>().map_err(|e| format!("{e}"))).collect::<Result<_, _>>()?
    } else {
        let n: u64 = s.parse().map_err(|e| format!("{e}"))?;
        (0..n).collect()
    };
    if v.is_empty() {
        return Err("empty seed list".into());
    }
    Ok(Seeds(v))
}

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "gll", version, about = "Random closed geodesics on a genus-2 surface built from two pairs of pants with equal cuffs.\nLengths are hyperbolic lengths; times are geodesic-flow times.")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Length of every pants curve (hyperbolic units), in (0, 4]
    #[arg(long, global = true, default_value_t = 1.5)]
    pub cuff: f64,
    /// Return radius epsilon in the unit tangent bundle (hyperbolic units)
    #[arg(long, global = true, default_value_t = 0.25)]
    pub epsilon: f64,
    /// Closing tolerance rho: accepted closings satisfy |length - t| <= rho (flow time units)
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rho: f64,
    /// Sampling step of the flow (flow time units)
    #[arg(long, global = true, default_value_t = 0.005)]
    pub dt: f64,
    /// Exponent slack eta > 1 in F(x) = x^(delta / (2 eta))
    #[arg(long, global = true, default_value_t = 1.5)]
    pub eta: f64,
    /// Orthogeodesic table cutoff (hyperbolic length)
    #[arg(long, global = true, default_value_t = 14.0)]
    pub lmax: f64,
    /// Closed-geodesic enumeration cutoff R (hyperbolic length)
    #[arg(long, global = true, default_value_t = 17.0)]
    pub r_max: f64,
    /// Seeds: N for 0..N, a..b, or a comma list
    #[arg(long, global = true, default_value = "100", value_parser = parse_seeds)]
    pub seeds: Seeds,
    /// Worker threads (defaults to all cores); results do not depend on it
    #[arg(long, global = true)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// Output directory; documents go to stdout when absent
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Artifact cache directory
    #[arg(long, global = true, env = "GLL_CACHE_DIR")]
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Orthogeodesic table of one pair of pants up to --lmax, with Liouville measures of the cells
    PantsTable,
    /// Liouville measure of the cell B(l) and its ratio to the asymptotic form
    Measure {
        /// Orthogeodesic length l (hyperbolic units)
        #[arg(long)]
        length: f64,
        /// |chi| of the surface
        #[arg(long, default_value_t = 2)]
        chi: u32,
        /// Monte Carlo samples for a cross-check (0 to skip)
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Geodesic flow from the seeded random vector: crossings and epsilon-returns
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flow time (flow units)
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
    },
    /// Close up every epsilon-return of a seeded orbit into a closed geodesic
    CloseUp {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flow time searched for returns (flow units)
        #[arg(long, default_value_t = 2000.0)]
        t_max: f64,
    },
    /// Arc census of the segment [0, t] of a seeded orbit
    Census {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Segment length (flow units)
        #[arg(long, default_value_t = 1000.0)]
        t: f64,
        /// Spacing of the summary rows (flow units)
        #[arg(long, default_value_t = 100.0)]
        step: f64,
    },
    /// All oriented closed geodesics of length <= --r-max
    Enumerate,
    /// Statistical experiments with pass/fail acceptance rules
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FlowAlgebra,
    Measure,
    Partition,
    Counting,
    Growth,
    VolumeBound,
    Density,
    Birkhoff,
    Correlation,
    KMixing,
    Horocycle,
    All,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub which: ExperimentKind,
    /// Horizon for returns and closings (flow units)
    #[arg(long, default_value_t = 2000.0)]
    pub t_max: f64,
    /// Monte Carlo samples for measure and partition checks
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Sampled orbits for correlation and k-mixing
    #[arg(long, default_value_t = 100_000)]
    pub mixing_samples: usize,
    /// Number of cells in the Birkhoff check
    #[arg(long, default_value_t = 10)]
    pub cells: usize,
    /// Orthogeodesic cutoff of the counting-law table (hyperbolic length)
    #[arg(long, default_value_t = 20.0)]
    pub counting_lmax: f64,
    /// Integer times N for the visited-cell counts
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Averaging horizons T (flow units)
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Spacings k for correlations (flow units)
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Module(String),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(m) => CliError::Usage(m),
            other => CliError::Module(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Module(format!("io: {e}"))
    }
}

macro_rules! module_err {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Module(e.to_string())
            }
        }
    )*};
}
module_err!(gll_core::pants::PantsError, gll_core::surface::SurfaceError, gll_core::flow::FlowError);

/// Result of one subcommand before rendering.
pub struct Outcome {
    pub docs: Vec<Document>,
    pub summary: String,
    pub rules: Vec<Rule>,
}

impl Cli {
    pub fn experiment_config(&self, e: Option<&ExperimentArgs>) -> ExperimentConfig {
        let g = &self.global;
        let d = ExperimentConfig::default();
        let mut c = ExperimentConfig {
            cuff: g.cuff,
            epsilon: g.epsilon,
            rho: g.rho,
            dt: g.dt,
            seeds: g.seeds.0.clone(),
            eta: g.eta,
            lmax: g.lmax,
            r_max: g.r_max,
            ..d
        };
        if let Some(e) = e {
            c.t_max = e.t_max;
            c.samples = e.samples;
            c.mixing_samples = e.mixing_samples;
            c.cells = e.cells;
            c.counting_lmax = e.counting_lmax;
            if let Some(v) = &e.n_grid {
                c.n_grid = v.clone();
            }
            if let Some(v) = &e.t_grid {
                c.t_grid = v.clone();
            }
            if let Some(v) = &e.k_grid {
                c.k_grid = v.clone();
            }
        }
        c
    }

    /// Configuration echoed in every header; excludes output-only flags.
    pub fn header(&self) -> Header {
        let exp = match &self.command {
            Command::Experiment(e) => Some(self.experiment_config(Some(e))),
            _ => None,
        };
        let config = serde_json::json!({ "run": self, "genus": 2, "experiment": exp });
        Header::new(config, self.seeds_used())
    }

    /// Seeds that actually drive the randomness of this command.
    pub fn seeds_used(&self) -> Vec<u64> {
        match &self.command {
            Command::Simulate { seed, .. } | Command::CloseUp { seed, .. } | Command::Census { seed, .. } => vec![*seed],
            Command::Measure { samples, .. } if *samples > 0 => vec![self.global.seeds.0[0]],
            Command::Experiment(_) => self.global.seeds.0.clone(),
            _ => vec![],
        }
    }
}

fn ensure(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(msg.to_string()))
    }
}

fn validate(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    ensure(g.cuff > 0.0 && g.cuff <= 4.0, "--cuff must lie in (0, 4]")?;
    ensure(g.dt > 0.0 && g.dt <= 0.01, "--dt must lie in (0, 0.01]")?;
    ensure(g.epsilon > 0.0 && g.epsilon <= g.rho, "need 0 < --epsilon <= --rho")?;
    ensure(g.eta > 1.0, "--eta must exceed 1")?;
    ensure(g.lmax > 0.0 && g.r_max > 0.0, "--lmax and --r-max must be positive")?;
    ensure(g.jobs != Some(0), "--jobs must be positive")?;
    match &cli.command {
        Command::Measure { length, chi, .. } => ensure(*length > 0.0 && *chi > 0, "--length and --chi must be positive"),
        Command::Simulate { t_max, .. } | Command::CloseUp { t_max, .. } => ensure(*t_max > 0.0, "--t-max must be positive"),
        Command::Census { t, step, .. } => ensure(*t > 0.0 && *step > 0.0, "--t and --step must be positive"),
        Command::Experiment(e) => {
            cli.experiment_config(Some(e)).validate()?;
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Orthogeodesic table, through the cache.
pub fn cached_table(cache: &Cache, cuff: f64, lmax: f64) -> Result<(OrthoTable, CacheStatus), CliError> {
    let surface = build_surface(cuff)?;
    cache.load_or_build(
        "pants-table",
        &(cuff, lmax),
        || -> Result<OrthoTable, CliError> { Ok(enumerate_orthogeodesics(&surface.pants, lmax, DEFAULT_RECORD_BUDGET)?) },
        |t| serde_json::to_vec(t).unwrap_or_default(),
        |b| serde_json::from_slice(b).ok(),
    )
}

fn encode_closed(recs: &Vec<ClosedGeodesicRecord>) -> Vec<u8> {
    let mut out = String::with_capacity(recs.len() * 48);
    for r in recs {
        out.push_str(&format!("{} {:016x}\n", r.cutting, r.length.to_bits()));
    }
    out.into_bytes()
}

fn decode_closed(b: &[u8]) -> Option<Vec<ClosedGeodesicRecord>> {
    let text = std::str::from_utf8(b).ok()?;
    text.lines()
        .map(|line| {
            let (cs, bits) = line.split_once(' ')?;
            let cutting: CuttingSequence = cs.parse().ok()?;
            let length = f64::from_bits(u64::from_str_radix(bits, 16).ok()?);
            let power = cutting.power();
            Some(ClosedGeodesicRecord { word: cutting.word(), length, primitive: power == 1, power, cutting })
        })
        .collect()
}

/// All closed geodesics of length <= r, through the cache.
pub fn cached_closed(cache: &Cache, surface: &SurfaceGroup, cuff: f64, r: f64) -> Result<(Vec<ClosedGeodesicRecord>, CacheStatus), CliError> {
    cache.load_or_build(
        "closed-geodesics",
        &(cuff, r),
        || -> Result<_, CliError> { Ok(surface.enumerate_closed_geodesics(r, ex::CLOSED_BUDGET)?) },
        encode_closed,
        decode_closed,
    )
}

fn rules_table(rules: &[Rule]) -> Table {
    let mut t = Table::new(&["rule", "passed", "detail"]);
    for r in rules {
        t.push(vec![r.name.clone(), r.passed.to_string(), r.detail.clone()]);
    }
    t
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn doc(name: &str, body: Body) -> Document {
    Document { name: name.to_string(), body }
}

fn cell_name(c: &ArcClassKey) -> String {
    format!("P{}:{}", c.pants + 1, c.key)
}

fn census_json(c: &ArcCensus, t: f64, visited: Option<usize>) -> serde_json::Value {
    let per = |p: u8| -> Vec<String> { c.directed.iter().filter(|k| k.pants == p).map(|k| k.key.to_string()).collect() };
    let und = |p: usize| -> Vec<String> { c.undirected[p].iter().map(|k| k.to_string()).collect() };
    serde_json::json!({
        "t": t,
        "pants": { "1": per(0), "2": per(1) },
        "undirected": { "1": und(0), "2": und(1) },
        "a_directed": c.a_directed(),
        "undirected_total": c.undirected_total(),
        "self_inverse": c.self_inverse(),
        "lower_bound": volume_lower_bound(c),
        "filling_proxy": c.filling_proxy(),
        "empty": c.empty,
        "c_n": visited,
    })
}

fn pants_table(cli: &Cli, cache: &Cache) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let (table, status) = cached_table(cache, g.cuff, g.lmax)?;
    let body = match g.format {
        Format::Json => Body::Json(json(&table)),
        Format::Csv => {
            let mut t = Table::new(&["index", "key", "boundary_in", "boundary_out", "length", "measure", "self_inverse"]);
            for r in &table.records {
                t.push(vec![
                    r.index.to_string(),
                    r.key.to_string(),
                    (r.boundary_in + 1).to_string(),
                    (r.boundary_out + 1).to_string(),
                    num(r.length),
                    num(r.measure),
                    r.self_inverse.to_string(),
                ]);
            }
            Body::Csv(t)
        }
    };
    Ok(Outcome {
        docs: vec![doc("pants-table", body)],
        summary: format!("{} orthogeodesics up to length {} (cache {:?})", table.len(), g.lmax, status),
        rules: vec![],
    })
}

fn measure(cli: &Cli, length: f64, chi: u32, samples: usize) -> Result<Outcome, CliError> {
    let m = measure_b(length, chi)?;
    let ratio = m / measure_b_asymptotic(length, chi);
    let mc = (samples > 0).then(|| montecarlo_measure_b(length, samples, ex::measure_seed(cli.global.seeds.0[0]), chi));
    let summary = match mc {
        Some((e, se)) => format!("measure_B({length}, {chi}) = {} ratio {} monte-carlo {} +- {}", num(m), num(ratio), num(e), num(se)),
        None => format!("measure_B({length}, {chi}) = {} ratio {}", num(m), num(ratio)),
    };
    let body = match cli.global.format {
        Format::Json => Body::Json(serde_json::json!({
            "length": length, "chi": chi, "measure": m, "asymptotic_ratio": ratio,
            "montecarlo": mc.map(|x| x.0), "stderr": mc.map(|x| x.1),
        })),
        Format::Csv => {
            let mut t = Table::new(&["length", "chi", "measure", "asymptotic_ratio", "montecarlo", "stderr"]);
            t.push(vec![
                num(length),
                chi.to_string(),
                num(m),
                num(ratio),
                mc.map_or(String::new(), |x| num(x.0)),
                mc.map_or(String::new(), |x| num(x.1)),
            ]);
            Body::Csv(t)
        }
    };
    Ok(Outcome { docs: vec![doc("measure", body)], summary, rules: vec![] })
}

fn simulate_cmd(cli: &Cli, seed: u64, t_max: f64) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let surface = build_surface(g.cuff)?;
    let v = ex::start_vector(&surface, seed);
    let traj = simulate(&surface, &v, t_max, g.dt)?;
    let events = detect_returns(&surface, &traj, g.epsilon);
    let docs = match g.format {
        Format::Json => vec![doc("simulate", Body::Json(serde_json::json!({ "seed": seed, "trajectory": traj, "returns": events })))],
        Format::Csv => {
            let mut t = Table::new(&["time", "letter", "side", "curve", "label"]);
            for c in &traj.crossings {
                t.push(vec![
                    num(c.time),
                    c.letter.to_string(),
                    if c.is_pants_curve() { "cuff" } else { "seam" }.to_string(),
                    c.curve().map_or(String::new(), |k| (k + 1).to_string()),
                    c.label.to_string(),
                ]);
            }
            let mut r = Table::new(&["time", "distance", "neighbour"]);
            for e in &events {
                r.push(vec![num(e.time), num(e.distance), e.neighbour.to_string()]);
            }
            vec![doc("simulate-crossings", Body::Csv(t)), doc("simulate-returns", Body::Csv(r))]
        }
    };
    Ok(Outcome {
        docs,
        summary: format!("seed {seed}: {} crossings, {} returns within {} up to t = {t_max}", traj.crossings.len(), events.len(), g.epsilon),
        rules: vec![],
    })
}

fn close_up_cmd(cli: &Cli, seed: u64, t_max: f64) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let surface = build_surface(g.cuff)?;
    let v = ex::start_vector(&surface, seed);
    let traj = simulate(&surface, &v, t_max, g.dt)?;
    let events = detect_returns(&surface, &traj, g.epsilon);
    let mut t = Table::new(&["t", "distance", "length", "power", "cutting", "a_directed", "filling_proxy", "lower_bound", "status"]);
    let mut records = Vec::new();
    let mut accepted = 0;
    for e in &events {
        match close_up(&surface, &traj, e, g.rho) {
            Ok(cg) => {
                accepted += 1;
                t.push(vec![
                    num(e.time),
                    num(e.distance),
                    num(cg.length),
                    cg.power.to_string(),
                    cg.cutting.to_string(),
                    cg.census.a_directed().to_string(),
                    cg.census.filling_proxy().to_string(),
                    num(volume_lower_bound(&cg.census)),
                    "accepted".into(),
                ]);
                records.push(serde_json::json!({ "event": e, "closed": cg }));
            }
            Err(err) => {
                t.push(vec![num(e.time), num(e.distance), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), err.to_string()]);
                records.push(serde_json::json!({ "event": e, "rejected": err.to_string() }));
            }
        }
    }
    let body = match g.format {
        Format::Json => Body::Json(serde_json::json!({ "seed": seed, "closings": records })),
        Format::Csv => Body::Csv(t),
    };
    Ok(Outcome {
        docs: vec![doc("close-up", body)],
        summary: format!("seed {seed}: {accepted} of {} returns closed up", events.len()),
        rules: vec![],
    })
}

fn census_cmd(cli: &Cli, cache: &Cache, seed: u64, t_end: f64, step: f64) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let surface = build_surface(g.cuff)?;
    let (table, status) = cached_table(cache, g.cuff, g.lmax)?;
    let v = ex::start_vector(&surface, seed);
    let traj = simulate(&surface, &v, t_end, g.dt)?;
    let census = segment_arc_census(&traj, 0.0, t_end);
    let (resolved, overflow) = resolve(&census, &table);
    let mut rows = Table::new(&["t", "a_directed", "undirected_total", "c_n", "lower_bound"]);
    let mut t = step.min(t_end);
    loop {
        let c = segment_arc_census(&traj, 0.0, t);
        let n = t.floor() as usize;
        rows.push(vec![
            num(t),
            c.a_directed().to_string(),
            c.undirected_total().to_string(),
            if n >= 1 { visited_count(&traj, n).to_string() } else { String::new() },
            num(volume_lower_bound(&c)),
        ]);
        if t >= t_end {
            break;
        }
        t = (t + step).min(t_end);
    }
    let n = t_end.floor() as usize;
    let mut j = census_json(&census, t_end, (n >= 1).then(|| visited_count(&traj, n)));
    j["resolved"] = serde_json::json!(resolved);
    j["overflow"] = serde_json::json!(overflow.iter().map(cell_name).collect::<Vec<_>>());
    let docs = match g.format {
        Format::Json => vec![doc("census", Body::Json(j))],
        Format::Csv => vec![doc("census-summary", Body::Csv(rows)), doc("census", Body::Json(j))],
    };
    Ok(Outcome {
        docs,
        summary: format!(
            "seed {seed}: A = {} directed classes on [0, {t_end}], lower bound {} (cache {:?})",
            census.a_directed(),
            num(volume_lower_bound(&census)),
            status
        ),
        rules: vec![],
    })
}

fn enumerate_cmd(cli: &Cli, cache: &Cache) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let surface = build_surface(g.cuff)?;
    let (recs, status) = cached_closed(cache, &surface, g.cuff, g.r_max)?;
    let body = match g.format {
        Format::Json => Body::Json(json(&recs)),
        Format::Csv => {
            let mut t = Table::new(&["length", "power", "primitive", "cutting", "a_directed", "filling_proxy", "lower_bound"]);
            for r in &recs {
                let c = gll_core::arcs::closed_arc_census(&r.cutting);
                t.push(vec![
                    num(r.length),
                    r.power.to_string(),
                    r.primitive.to_string(),
                    r.cutting.to_string(),
                    c.a_directed().to_string(),
                    c.filling_proxy().to_string(),
                    num(volume_lower_bound(&c)),
                ]);
            }
            Body::Csv(t)
        }
    };
    Ok(Outcome {
        docs: vec![doc("enumerate", body)],
        summary: format!("{} oriented closed geodesics of length <= {} (cache {:?})", recs.len(), g.r_max, status),
        rules: vec![],
    })
}

/// Reports of one experiment run, keyed by experiment name.
struct Collected {
    json: serde_json::Map<String, serde_json::Value>,
    tables: Vec<Document>,
    rules: Vec<Rule>,
}

impl Collected {
    fn add<T: Serialize>(&mut self, name: &str, report: &T, rules: &[Rule], tables: Vec<(String, Table)>) {
        self.json.insert(name.to_string(), json(report));
        for r in rules {
            self.rules.push(Rule { name: format!("{name}: {}", r.name), passed: r.passed, detail: r.detail.clone() });
        }
        for (n, t) in tables {
            self.tables.push(doc(&format!("{name}-{n}"), Body::Csv(t)));
        }
    }
}

fn experiment_cmd(cli: &Cli, cache: &Cache, args: &ExperimentArgs) -> Result<Outcome, CliError> {
    use ExperimentKind as K;
    let cfg = cli.experiment_config(Some(args));
    let which = args.which;
    let wants = |k: K| which == k || which == K::All;
    let surface = build_surface(cfg.cuff)?;
    let (table, _) = cached_table(cache, cfg.cuff, cfg.lmax)?;
    let bench = Bench::from_table(surface, table)?;
    // exponents use the fit on the larger counting table
    let (big, _) = cached_table(cache, cfg.cuff, cfg.counting_lmax)?;
    let fit = gll_core::pants::fit_delta(&big)?;
    let f = GrowthFn::from_fit(&fit, cfg.eta);
    let root = cfg.seeds[0];
    let mut out = Collected { json: serde_json::Map::new(), tables: vec![], rules: vec![] };

    if wants(K::FlowAlgebra) {
        let r = ex::flow_algebra_check(&bench.surface, 50, 1_000_000, cfg.dt);
        out.add("flow-algebra", &r, &r.rules, vec![]);
    }
    if wants(K::Measure) {
        let r = ex::measure_check(&[0.5, 1.0, 2.0, 3.0], cfg.samples, ex::measure_seed(root))?;
        let mut pts = Table::new(&["length", "exact", "montecarlo", "stderr", "z"]);
        for p in &r.points {
            pts.push(vec![num(p.length), num(p.exact), num(p.montecarlo), num(p.stderr), num(p.z)]);
        }
        let mut ratios = Table::new(&["length", "ratio"]);
        for (l, x) in &r.ratios {
            ratios.push(vec![num(*l), num(*x)]);
        }
        out.add("measure", &r, &r.rules, vec![("points".into(), pts), ("ratios".into(), ratios)]);
    }
    if wants(K::Partition) {
        let r = ex::partition_check(&bench, cfg.samples, root, 20)?;
        let mut t = Table::new(&["cell", "measure", "frequency", "stderr", "z"]);
        for c in &r.cells {
            t.push(vec![c.cell.clone(), num(c.measure), num(c.frequency), num(c.stderr), num(c.z)]);
        }
        out.add("partition", &r, &r.rules, vec![("cells".into(), t)]);
    }
    if wants(K::Counting) {
        let r = ex::counting_check(&big)?;
        let mut t = Table::new(&["lmax", "records", "delta", "delta_se", "r2", "index_deviation"]);
        t.push(vec![num(r.lmax), r.records.to_string(), num(r.fit.delta), num(r.fit.delta_se), num(r.fit.r2), num(r.index_deviation)]);
        out.add("counting", &r, &r.rules, vec![("fit".into(), t)]);
    }
    if wants(K::Growth) || wants(K::VolumeBound) {
        let runs = ex::seed_runs(&bench, &cfg, f)?;
        if wants(K::Growth) {
            let r = ex::growth_experiment(&runs, &cfg.n_grid, f);
            let mut t = Table::new(&["seed", "n", "c_n", "f_n", "n0"]);
            for rec in &r.records {
                for (n, c) in cfg.n_grid.iter().zip(&rec.counts) {
                    t.push(vec![
                        rec.seed.to_string(),
                        n.to_string(),
                        c.to_string(),
                        num(f.eval(*n as f64)),
                        rec.n0.map_or(String::new(), |x| x.to_string()),
                    ]);
                }
            }
            out.add("growth", &r, &r.rules, vec![("counts".into(), t)]);
        }
        if wants(K::VolumeBound) {
            let r = ex::volume_bound_experiment(&runs, &cfg, fit.delta);
            let mut t = Table::new(&[
                "seed", "t", "length", "power", "anosov_ok", "filling_proxy", "lower_bound", "f_length", "bound_holds",
                "segment_a", "closed_a", "deviation", "past_filling",
            ]);
            for c in &r.records {
                t.push(vec![
                    c.seed.to_string(),
                    num(c.t),
                    num(c.length),
                    c.power.to_string(),
                    c.anosov_ok.to_string(),
                    c.filling_proxy.to_string(),
                    num(c.lower_bound),
                    num(c.f_of_length),
                    c.bound_holds.to_string(),
                    c.segment_a.to_string(),
                    c.closed_a.to_string(),
                    c.deviation.to_string(),
                    c.past_filling.to_string(),
                ]);
            }
            out.add("volume-bound", &r, &r.rules, vec![("closings".into(), t)]);
        }
    }
    if wants(K::Density) {
        let (recs, _) = cached_closed(cache, &bench.surface, cfg.cuff, cfg.r_max)?;
        let r = ex::density_from_records(&recs, cfg.r_max, f, 4);
        let mut t = Table::new(&["lo", "hi", "filling", "passing", "fraction"]);
        for b in &r.bins {
            t.push(vec![num(b.lo), num(b.hi), b.filling.to_string(), b.passing.to_string(), num(b.fraction)]);
        }
        out.add("density", &r, &r.rules, vec![("bins".into(), t)]);
    }
    if wants(K::Birkhoff) {
        let cells = bench.top_cells(cfg.cells);
        let r = ex::birkhoff_check(&bench, &cfg.seeds, &cells, &cfg.t_grid, cfg.dt)?;
        let mut t = Table::new(&["seed", "cell", "t", "frequency", "measure", "deviation", "tolerance"]);
        for b in &r.records {
            t.push(vec![b.seed.to_string(), b.cell.clone(), num(b.t), num(b.frequency), num(b.measure), num(b.deviation), num(b.tolerance)]);
        }
        out.add("birkhoff", &r, &r.rules, vec![("deviations".into(), t)]);
    }
    if wants(K::Correlation) {
        let a = bench.top_cells(1).remove(0);
        let r = ex::correlation_decay(&bench, &a, &a, &cfg.k_grid, cfg.mixing_samples, cfg.dt, root)?;
        let mut t = Table::new(&["k", "rho", "stderr"]);
        for p in &r.points {
            t.push(vec![p.k.to_string(), num(p.rho), num(p.stderr)]);
        }
        out.add("correlation", &r, &r.rules, vec![("points".into(), t)]);
    }
    if wants(K::KMixing) {
        let top = bench.top_cells(8);
        let tuples: Vec<Vec<ArcClassKey>> = vec![
            vec![top[0].clone(), top[1].clone()],
            vec![top[0].clone(), top[6].clone()],
            vec![top[2].clone(), top[7].clone()],
            vec![top[3].clone(), top[4].clone(), top[5].clone()],
        ];
        let r = ex::k_mixing_trend(&bench, &tuples, &cfg.k_grid, cfg.mixing_samples, cfg.dt, root)?;
        let mut t = Table::new(&["tuple", "k", "error", "stderr", "product"]);
        for rep in &r.tuples {
            for p in &rep.points {
                t.push(vec![rep.cells.join(" "), p.k.to_string(), num(p.error), num(p.stderr), num(rep.product)]);
            }
        }
        out.add("k-mixing", &r, &r.rules, vec![("errors".into(), t)]);
    }
    if wants(K::Horocycle) {
        let region = bench.top_cells(4);
        let r = ex::horocycle_equidistribution(&bench, &cfg.seeds, &cfg.t_grid, &region, 1.0, cfg.dt)?;
        let mut t = Table::new(&["t", "max_error", "median_error"]);
        for i in 0..r.t_grid.len() {
            t.push(vec![num(r.t_grid[i]), num(r.errors[i]), num(r.median_errors[i])]);
        }
        out.add("horocycle", &r, &r.rules, vec![("errors".into(), t)]);
    }

    let name = format!("experiment-{}", which.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default());
    let passed = out.rules.iter().filter(|r| r.passed).count();
    let summary = format!("{name}: {passed} of {} acceptance rules pass", out.rules.len());
    let mut docs = Vec::new();
    match cli.global.format {
        Format::Json => {
            let body = serde_json::json!({ "reports": out.json, "rules": json(&out.rules), "all_passed": passed == out.rules.len() });
            docs.push(doc(&name, Body::Json(body)));
        }
        Format::Csv => {
            docs.push(doc(&format!("{name}-rules"), Body::Csv(rules_table(&out.rules))));
            docs.extend(out.tables);
        }
    }
    Ok(Outcome { docs, summary, rules: out.rules })
}

/// Execute the parsed command and return its outcome without writing.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    validate(cli)?;
    if let Some(j) = cli.global.jobs {
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let cache = Cache::new(cli.global.cache_dir.clone());
    match &cli.command {
        Command::PantsTable => pants_table(cli, &cache),
        Command::Measure { length, chi, samples } => measure(cli, *length, *chi, *samples),
        Command::Simulate { seed, t_max } => simulate_cmd(cli, *seed, *t_max),
        Command::CloseUp { seed, t_max } => close_up_cmd(cli, *seed, *t_max),
        Command::Census { seed, t, step } => census_cmd(cli, &cache, *seed, *t, *step),
        Command::Enumerate => enumerate_cmd(cli, &cache),
        Command::Experiment(args) => experiment_cmd(cli, &cache, args),
    }
}

/// Run the command line and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let started = Instant::now();
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            return EXIT_USAGE;
        }
        Err(CliError::Module(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            return EXIT_MODULE;
        }
    };
    let header = cli.header();
    let written = match output::emit(&header, &outcome.docs, cli.global.out.as_deref(), stdout) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(stderr, "error: writing output: {e}");
            return EXIT_MODULE;
        }
    };
    for r in &outcome.rules {
        let _ = writeln!(stderr, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let mut line = format!("{} [{:.1}s]", outcome.summary, started.elapsed().as_secs_f64());
    if !written.is_empty() {
        line.push_str(&format!(" -> {}", written.join(", ")));
    }
    // the summary goes to stderr when the documents themselves are on stdout
    let _ = if cli.global.out.is_some() { writeln!(stdout, "{line}") } else { writeln!(stderr, "{line}") };
    if outcome.rules.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_ACCEPTANCE
    }
}
