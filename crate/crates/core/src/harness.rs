//! Experiment drivers: verification suites, the stationarity test,
//! contraction and drift experiments, block coupling with bad-event
//! detection, identity-coupling growth and mixing-time scaling.
//!
//! Replicas draw from independent generator streams of the configured
//! seed and are run in parallel; results are collected in replica order, so
//! every report is reproducible from its configuration.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounding::DEFAULT_P_MAX;
use crate::colorset::Color;
use crate::coupling::{bounding_invariance, global_coupling, CouplingConfig, NmReference, ViolationKind};
use crate::dynamics::{
    available_colors, hamming, hamming_interpolation, metropolis_step, run_to_end, sample_updates_with, Labeling,
    Update, UpdateSequence,
};
use crate::error::{Error, Result};
use crate::graph::{gen_graph, Graph, GraphSpec};
use crate::rng::{stream, Rng, RNG_NAME};
use crate::uniformity::{lu_event, CheckLimits};

/// Cap on the summed-disagreement threshold of the large-growth event.
pub const D_MAX_CAP: f64 = 1e9;

fn default_c_cp() -> f64 {
    5.0
}
fn default_one() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    0.5
}
fn default_eps() -> f64 {
    0.1
}
fn default_p_max() -> usize {
    DEFAULT_P_MAX
}
fn default_replicas() -> usize {
    200
}
fn default_blocks() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub k: u32,
    /// Required slack: when set, `k ≥ (1 + delta) Δ` is enforced.
    #[serde(default)]
    pub delta: Option<f64>,
    /// `T_cp = ⌈c_cp · n⌉`.
    #[serde(default = "default_c_cp")]
    pub c_cp: f64,
    #[serde(default = "default_one")]
    pub c_buffer: f64,
    /// `T_blk = ⌈c_blk · n · ln Δ⌉`.
    #[serde(default = "default_one")]
    pub c_blk: f64,
    /// Block 0 has length `⌈gamma · T_blk⌉`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_p_max")]
    pub p_max: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Seed for graph generation; defaults to `seed`.
    #[serde(default)]
    pub graph_seed: Option<u64>,
    /// Blocks after block 0 in the block coupling.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    /// Burn-in steps for start labelings; defaults to `⌈50 n ln n⌉`.
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, k: u32) -> Self {
        ExperimentConfig {
            graph,
            k,
            delta: None,
            c_cp: default_c_cp(),
            c_buffer: 1.0,
            c_blk: 1.0,
            gamma: default_gamma(),
            eps: default_eps(),
            p_max: DEFAULT_P_MAX,
            replicas: default_replicas(),
            seed: 0,
            graph_seed: None,
            blocks: default_blocks(),
            burn_in: None,
            out_dir: None,
        }
    }

    /// Parses a JSON config. Errors name the offending field.
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Input(format!("config: {e}")))?;
        cfg.check_ranges()?;
        Ok(cfg)
    }

    fn check_ranges(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::Input(format!("config field `{field}`: {msg}")));
        if self.k < 1 {
            return bad("k", "must be at least 1");
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 || self.gamma >= 1.0 {
            return bad("gamma", "must lie strictly between 0 and 1");
        }
        for (name, v) in [("c_cp", self.c_cp), ("c_buffer", self.c_buffer), ("c_blk", self.c_blk), ("eps", self.eps)] {
            if v.is_nan() || v < 0.0 {
                return bad(name, "must be non-negative");
            }
        }
        if self.replicas < 1 {
            return bad("replicas", "must be at least 1");
        }
        Ok(())
    }

    /// Builds the graph and checks the palette against it.
    pub fn build_graph(&self) -> Result<Graph> {
        self.check_ranges()?;
        let g = gen_graph(&self.graph, self.graph_seed.unwrap_or(self.seed))?.graph;
        if let Some(delta) = self.delta {
            if (self.k as f64) < (1.0 + delta) * g.max_degree() as f64 {
                return Err(Error::Input(format!(
                    "config field `k`: {} is below (1 + {delta}) times the maximum degree {}",
                    self.k,
                    g.max_degree()
                )));
            }
        }
        Ok(g)
    }

    pub fn t_cp(&self, n: usize) -> usize {
        (self.c_cp * n as f64).ceil() as usize
    }

    pub fn t_blk(&self, n: usize, max_degree: usize) -> usize {
        (self.c_blk * n as f64 * (max_degree.max(2) as f64).ln()).ceil() as usize
    }

    pub fn burn_in_steps(&self, n: usize) -> usize {
        self.burn_in.unwrap_or_else(|| default_burn_in(n))
    }

    pub fn coupling(&self) -> CouplingConfig {
        CouplingConfig { p_max: self.p_max, nm_reference: NmReference::Fixed, check: false, jerrum_only: false }
    }
}

pub fn default_burn_in(n: usize) -> usize {
    (50.0 * n as f64 * (n.max(2) as f64).ln()).ceil() as usize
}

/// A sample mean with a normal-approximation 95% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, half_width: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, half_width: 1.96 * (var / n as f64).sqrt(), n }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }
}

/// Percentile bootstrap interval of `stat` over `reps` resamples of `n`
/// indices.
pub fn bootstrap_ci<F: FnMut(&[usize]) -> f64>(n: usize, reps: usize, rng: &mut Rng, mut stat: F) -> (f64, f64) {
    let mut vals: Vec<f64> = (0..reps)
        .map(|_| {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| vals[((p * (reps - 1) as f64).round() as usize).min(reps - 1)];
    (q(0.025), q(0.975))
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// A report shared by the replica-based experiments.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport<R> {
    pub kind: String,
    pub config: serde_json::Value,
    pub rng: &'static str,
    pub records: Vec<R>,
    pub aggregates: BTreeMap<String, Estimate>,
    pub frequencies: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    pub notes: Vec<String>,
    pub runtime_secs: f64,
}

impl<R: Serialize> ExperimentReport<R> {
    fn new(kind: &str, config: &impl Serialize) -> Self {
        ExperimentReport {
            kind: kind.into(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            rng: RNG_NAME,
            records: Vec::new(),
            aggregates: BTreeMap::new(),
            frequencies: BTreeMap::new(),
            counts: BTreeMap::new(),
            notes: Vec::new(),
            runtime_secs: 0.0,
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Records with a flat CSV form.
pub trait CsvRecord {
    fn header() -> &'static str;
    fn row(&self) -> String;
}

pub fn write_csv<R: CsvRecord, W: Write>(records: &[R], mut w: W) -> Result<()> {
    writeln!(w, "{}", R::header())?;
    for r in records {
        writeln!(w, "{}", r.row())?;
    }
    Ok(())
}

/// Writes `name` under `dir`, creating the directory.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Two labelings differing at one vertex, the second with a color drawn
/// from those available there.
#[derive(Clone, Debug)]
pub struct StartPair {
    pub x0: Labeling,
    pub y0: Labeling,
    pub z: usize,
}

/// Burns in from a greedy proper coloring, then resamples a uniform vertex
/// to a different available color, moving to another vertex when the first
/// choice admits none.
pub fn neighboring_start(g: &Graph, k: u32, burn_in: usize, rng: &mut Rng) -> Result<StartPair> {
    let mut x = Labeling::greedy_proper(g, k)?;
    for _ in 0..burn_in {
        let upd = Update { v: rng.random_range(0..g.n()), c: rng.random_range(1..=k) };
        metropolis_step(g, &mut x, upd);
    }
    let first = rng.random_range(0..g.n());
    for off in 0..g.n() {
        let z = (first + off) % g.n();
        let mut alts = available_colors(g, &x, z);
        alts.remove(x.get(z));
        if alts.is_empty() {
            continue;
        }
        let c = alts.iter().nth(rng.random_range(0..alts.len())).unwrap();
        let mut y = x.clone();
        y.set(z, c);
        return Ok(StartPair { x0: x, y0: y, z });
    }
    Err(Error::Input(format!("no vertex admits a second color with k = {k}")))
}

/// Outcome of one verification check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub runs: usize,
    pub failures: usize,
    pub first_counterexample: Option<String>,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        CheckOutcome { name: name.into(), runs: 0, failures: 0, first_counterexample: None }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.runs += 1;
        if !ok {
            self.failures += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(detail());
            }
        }
    }

    fn merge(&mut self, other: CheckOutcome) {
        self.runs += other.runs;
        self.failures += other.failures;
        if self.first_counterexample.is_none() {
            self.first_counterexample = other.first_counterexample;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Every proper labeling of `g` with `k` colors, encoded base `k` with
/// vertex 0 least significant, ascending.
pub fn enumerate_colorings(g: &Graph, k: u32, limit: usize) -> Result<Vec<u64>> {
    if (g.n() as f64) * (k as f64).log2() >= 63.0 {
        return Err(Error::Input(format!("{k}^{} labelings do not fit the enumeration encoding", g.n())));
    }
    let mut out = Vec::new();
    let mut colors = vec![0 as Color; g.n()];
    fn rec(g: &Graph, k: u32, v: usize, colors: &mut [Color], out: &mut Vec<u64>, limit: usize) -> bool {
        if v == g.n() {
            out.push(encode(colors, k));
            return out.len() <= limit;
        }
        for c in 1..=k {
            if g.neighbors(v).iter().all(|&u| u > v || colors[u] != c) {
                colors[v] = c;
                if !rec(g, k, v + 1, colors, out, limit) {
                    return false;
                }
            }
        }
        colors[v] = 0;
        true
    }
    if !rec(g, k, 0, &mut colors, &mut out, limit) {
        return Err(Error::Input(format!("more than {limit} proper colorings")));
    }
    out.sort_unstable();
    Ok(out)
}

fn encode(colors: &[Color], k: u32) -> u64 {
    colors.iter().rev().fold(0u64, |acc, &c| acc * k as u64 + (c - 1) as u64)
}

/// Every proper labeling paired with every proper single-vertex recoloring.
fn neighboring_proper_pairs(g: &Graph, k: u32) -> Result<Vec<(Labeling, Labeling)>> {
    let mut out = Vec::new();
    for code in enumerate_colorings(g, k, 1_000_000)? {
        let mut c = code;
        let colors: Vec<Color> = (0..g.n())
            .map(|_| {
                let d = (c % k as u64) as Color + 1;
                c /= k as u64;
                d
            })
            .collect();
        let x = Labeling::new(k, colors)?;
        for z in 0..g.n() {
            for col in 1..=k {
                if col != x.get(z) && x.is_available(g, z, col) {
                    let mut y = x.clone();
                    y.set(z, col);
                    out.push((x.clone(), y));
                }
            }
        }
    }
    Ok(out)
}

/// Enumerates all `(n k)^T` sequences for every neighboring proper pair
/// and checks that the map is injective and undone by the reverse map.
pub fn exhaustive_bijectivity(g: &Graph, k: u32, len: usize, cfg: &CouplingConfig) -> Result<(CheckOutcome, CheckOutcome)> {
    let pairs = neighboring_proper_pairs(g, k)?;
    let base = g.n() * k as usize;
    let total = base.checked_pow(len as u32).filter(|&t| t <= 10_000_000).ok_or_else(|| {
        Error::Input(format!("({base})^{len} sequences is too many to enumerate"))
    })?;
    let results: Vec<(CheckOutcome, CheckOutcome)> = pairs
        .par_iter()
        .map(|(x, y)| {
            let mut inj = CheckOutcome::new("injective");
            let mut rev = CheckOutcome::new("reverse restores");
            let mut seen = HashSet::with_capacity(total);
            for code in 0..total {
                let seq = UpdateSequence::new(
                    (0..len)
                        .map(|i| (code / base.pow(i as u32)) % base)
                        .map(|a| Update { v: a / k as usize, c: (a % k as usize) as Color + 1 })
                        .collect(),
                );
                let fwd = global_coupling(g, x, y, &seq, cfg).expect("neighboring inputs");
                let fresh = seen.insert(fwd.sigma_prime.clone());
                inj.record(fresh, || format!("x0={:?} y0={:?} sigma={:?}", x.colors(), y.colors(), seq.steps()));
                let back = global_coupling(g, y, x, &fwd.sigma_prime, cfg).expect("neighboring inputs");
                rev.record(back.sigma_prime == seq, || {
                    format!("x0={:?} y0={:?} sigma={:?}", x.colors(), y.colors(), seq.steps())
                });
            }
            (inj, rev)
        })
        .collect();
    let mut inj = CheckOutcome::new("exhaustive injectivity");
    let mut rev = CheckOutcome::new("exhaustive reverse");
    for (a, b) in results {
        inj.merge(a);
        rev.merge(b);
    }
    Ok((inj, rev))
}

/// Checks collected over sampled coupling runs.
#[derive(Clone, Debug, Serialize)]
pub struct SampledChecks {
    pub reverse: CheckOutcome,
    pub involution_geometry: CheckOutcome,
    pub domination: CheckOutcome,
    pub bounding_invariance: CheckOutcome,
    pub bc_true: usize,
    pub nm_applied: usize,
    pub nm_failed: BTreeMap<u8, usize>,
    pub case_3a: usize,
}

impl SampledChecks {
    pub fn passed(&self) -> bool {
        self.reverse.passed() && self.involution_geometry.passed() && self.domination.passed() && self.bounding_invariance.passed()
    }
}

/// Runs the coupling with all runtime verifiers on `runs` sampled start
/// pairs and sequences of length `len`.
pub fn sampled_bijectivity(g: &Graph, k: u32, len: usize, runs: usize, seed: u64, burn_in: usize, p_max: usize) -> Result<SampledChecks> {
    let cfg = CouplingConfig { p_max, nm_reference: NmReference::Fixed, check: true, jerrum_only: false };
    let per: Vec<Result<SampledChecks>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let sp = neighboring_start(g, k, burn_in, &mut rng)?;
            let seq = sample_updates_with(&mut rng, g.n(), k, len);
            let fwd = global_coupling(g, &sp.x0, &sp.y0, &seq, &cfg)?;
            let back = global_coupling(g, &sp.y0, &sp.x0, &fwd.sigma_prime, &cfg)?;
            let tag = || format!("stream {r} z={}", sp.z);
            let mut out = SampledChecks {
                reverse: CheckOutcome::new("reverse restores"),
                involution_geometry: CheckOutcome::new("involution and geometry"),
                domination: CheckOutcome::new("domination"),
                bounding_invariance: CheckOutcome::new("bounding invariance"),
                bc_true: fwd.bc_true as usize,
                nm_applied: fwd.nm_applied.len(),
                nm_failed: BTreeMap::new(),
                case_3a: fwd.case_3a,
            };
            for f in &fwd.nm_failed {
                *out.nm_failed.entry(f.bullet).or_default() += 1;
            }
            out.reverse.record(back.sigma_prime == seq, tag);
            let first_of = |kind: ViolationKind| fwd.violations.iter().chain(&back.violations).find(|v| v.kind == kind);
            let geo = first_of(ViolationKind::Geometry).or(first_of(ViolationKind::Involution));
            out.involution_geometry.record(geo.is_none(), || format!("{} t={}: {}", tag(), geo.unwrap().t, geo.unwrap().detail));
            let dom = first_of(ViolationKind::Domination);
            out.domination.record(dom.is_none(), || format!("{} t={}: {}", tag(), dom.unwrap().t, dom.unwrap().detail));
            let inv = bounding_invariance(g, &sp.x0, &sp.y0, &seq, &fwd.sigma_prime, p_max)?;
            out.bounding_invariance.record(inv, tag);
            Ok(out)
        })
        .collect();
    let mut total: Option<SampledChecks> = None;
    for r in per {
        let r = r?;
        match total.as_mut() {
            None => total = Some(r),
            Some(t) => {
                t.reverse.merge(r.reverse);
                t.involution_geometry.merge(r.involution_geometry);
                t.domination.merge(r.domination);
                t.bounding_invariance.merge(r.bounding_invariance);
                t.bc_true += r.bc_true;
                t.nm_applied += r.nm_applied;
                t.case_3a += r.case_3a;
                for (b, c) in r.nm_failed {
                    *t.nm_failed.entry(b).or_default() += c;
                }
            }
        }
    }
    total.ok_or_else(|| Error::Input("at least one run is required".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub sampled: SampledChecks,
    pub rng: &'static str,
    pub seed: u64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed) && self.sampled.passed()
    }
}

/// Exhaustive bijectivity on the path with 4 vertices, 3 colors and 3
/// steps, then sampled verification on the configured instance with
/// sequences of length `T_cp`.
pub fn verify_suite(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let g = cfg.build_graph()?;
    let tiny = crate::graph::path(4)?;
    let (inj, rev) = exhaustive_bijectivity(&tiny, 3, 3, &cfg.coupling())?;
    let sampled = sampled_bijectivity(&g, cfg.k, cfg.t_cp(g.n()), cfg.replicas, cfg.seed, cfg.burn_in_steps(g.n()), cfg.p_max)?;
    let mut checks = vec![inj, rev];
    checks.push(sampled.reverse.clone());
    checks.push(sampled.involution_geometry.clone());
    checks.push(sampled.domination.clone());
    checks.push(sampled.bounding_invariance.clone());
    Ok(VerifyReport { checks, sampled, rng: RNG_NAME, seed: cfg.seed })
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub omega: usize,
    pub chains: usize,
    pub steps: usize,
    pub tv: f64,
    /// Basic bootstrap interval, which offsets the upward bias of plug-in TV.
    pub tv_ci: (f64, f64),
    /// TV of the same number of exact uniform draws.
    pub noise_floor: f64,
    /// Largest single-vertex marginal TV to the exact marginal.
    pub max_marginal_tv: f64,
    pub seed: u64,
    pub rng: &'static str,
}

fn tv_to_uniform(counts: &BTreeMap<usize, usize>, total: usize, omega: usize) -> f64 {
    let u = 1.0 / omega as f64;
    let seen: f64 = counts.values().map(|&c| (c as f64 / total as f64 - u).abs()).sum();
    0.5 * (seen + (omega - counts.len()) as f64 * u)
}

/// Runs `chains` independent chains for `steps` steps from a fixed greedy
/// proper coloring and measures the empirical total-variation distance of
/// the final states to the uniform distribution on proper colorings.
pub fn stationarity_test(g: &Graph, k: u32, chains: usize, steps: usize, seed: u64, bootstrap_reps: usize) -> Result<StationarityReport> {
    let omega = enumerate_colorings(g, k, 1_000_000)?;
    if omega.is_empty() {
        return Err(Error::Input(format!("no proper coloring with k = {k}")));
    }
    let x0 = Labeling::greedy_proper(g, k)?;
    let finals: Vec<usize> = (0..chains)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut x = x0.clone();
            for _ in 0..steps {
                let upd = Update { v: rng.random_range(0..g.n()), c: rng.random_range(1..=k) };
                metropolis_step(g, &mut x, upd);
            }
            omega.binary_search(&encode(x.colors(), k)).expect("the chain stays proper")
        })
        .collect();
    let hist = |idx: &mut dyn Iterator<Item = usize>| {
        let mut m = BTreeMap::new();
        for i in idx {
            *m.entry(i).or_insert(0usize) += 1;
        }
        m
    };
    let tv = tv_to_uniform(&hist(&mut finals.iter().copied()), chains, omega.len());
    let mut rng = stream(seed, u64::MAX);
    let (q_lo, q_hi) = bootstrap_ci(chains, bootstrap_reps, &mut rng, |idx| {
        tv_to_uniform(&hist(&mut idx.iter().map(|&i| finals[i])), chains, omega.len())
    });
    let tv_ci = ((2.0 * tv - q_hi).max(0.0), (2.0 * tv - q_lo).min(1.0));
    let exact: Vec<usize> = (0..chains).map(|_| rng.random_range(0..omega.len())).collect();
    let noise_floor = tv_to_uniform(&hist(&mut exact.into_iter()), chains, omega.len());

    let digit = |code: u64, v: usize| ((code / (k as u64).pow(v as u32)) % k as u64) as usize;
    let mut max_marginal_tv: f64 = 0.0;
    for v in 0..g.n() {
        let mut exact_m = vec![0.0; k as usize];
        for &code in &omega {
            exact_m[digit(code, v)] += 1.0 / omega.len() as f64;
        }
        let mut emp = vec![0.0; k as usize];
        for &i in &finals {
            emp[digit(omega[i], v)] += 1.0 / chains as f64;
        }
        let d = 0.5 * exact_m.iter().zip(&emp).map(|(a, b)| (a - b).abs()).sum::<f64>();
        max_marginal_tv = max_marginal_tv.max(d);
    }
    Ok(StationarityReport { omega: omega.len(), chains, steps, tv, tv_ci, noise_floor, max_marginal_tv, seed, rng: RNG_NAME })
}

/// Markovian greedy coupling: when `v_t` has a disagreeing neighbor, the
/// first one `p` in ascending id fixes `H = {X(p), Y(p)}` and the second
/// chain's proposal swaps the two colors of `H`. Returns the second chain's
/// sequence and both final labelings.
pub fn jerrum_coupling(g: &Graph, x0: &Labeling, y0: &Labeling, seq: &UpdateSequence) -> (UpdateSequence, Labeling, Labeling) {
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut out = Vec::with_capacity(seq.len());
    for upd in seq.steps() {
        let c = jerrum_color(g, &x, &y, *upd);
        let yu = Update { v: upd.v, c };
        metropolis_step(g, &mut x, *upd);
        metropolis_step(g, &mut y, yu);
        out.push(yu);
    }
    (UpdateSequence::new(out), x, y)
}

fn jerrum_color(g: &Graph, x: &Labeling, y: &Labeling, upd: Update) -> Color {
    match g.neighbors(upd.v).iter().find(|&&p| x.get(p) != y.get(p)) {
        Some(&p) if upd.c == x.get(p) => y.get(p),
        Some(&p) if upd.c == y.get(p) => x.get(p),
        _ => upd.c,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionRecord {
    pub stream: u64,
    pub z: usize,
    pub bc_true: bool,
    pub lu: bool,
    pub nm_dist: usize,
    pub nm_dist_lu: usize,
    pub jerrum_dist: usize,
    pub nm_applied: usize,
    pub nm_failed: usize,
    pub case_3a: usize,
}

impl CsvRecord for ContractionRecord {
    fn header() -> &'static str {
        "stream,z,bc_true,lu,nm_dist,nm_dist_lu,jerrum_dist,nm_applied,nm_failed,case_3a"
    }
    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.stream, self.z, self.bc_true, self.lu, self.nm_dist, self.nm_dist_lu, self.jerrum_dist, self.nm_applied, self.nm_failed, self.case_3a
        )
    }
}

/// Paired comparison over `T_cp` steps: the non-Markovian coupling arm
/// (distance weighted by the LU indicator) against the Markovian greedy
/// coupling arm, on the same start pair and first-chain sequence.
pub fn contraction_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport<ContractionRecord>> {
    let start = Instant::now();
    let g = cfg.build_graph()?;
    let len = cfg.t_cp(g.n());
    let burn = cfg.burn_in_steps(g.n());
    let ccfg = cfg.coupling();
    let limits = CheckLimits::default();
    let records: Vec<Result<ContractionRecord>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let sp = neighboring_start(&g, cfg.k, burn, &mut rng)?;
            let seq = sample_updates_with(&mut rng, g.n(), cfg.k, len);
            let res = global_coupling(&g, &sp.x0, &sp.y0, &seq, &ccfg)?;
            let xt = run_to_end(&g, &sp.x0, &seq);
            let nm_dist = hamming(&xt, &run_to_end(&g, &sp.y0, &res.sigma_prime)).0;
            let (a, b) = (sp.x0.get(sp.z), sp.y0.get(sp.z));
            let lu = lu_event(&g, &sp.x0, &seq, cfg.eps, sp.z, &limits, &[(a.min(b), a.max(b))])?.holds;
            let (_, jx, jy) = jerrum_coupling(&g, &sp.x0, &sp.y0, &seq);
            Ok(ContractionRecord {
                stream: r,
                z: sp.z,
                bc_true: res.bc_true,
                lu,
                nm_dist,
                nm_dist_lu: if lu { nm_dist } else { 0 },
                jerrum_dist: hamming(&jx, &jy).0,
                nm_applied: res.nm_applied.len(),
                nm_failed: res.nm_failed.len(),
                case_3a: res.case_3a,
            })
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rep = ExperimentReport::new("contraction", cfg);
    let col = |f: fn(&ContractionRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    rep.aggregates.insert("nm_dist_lu".into(), Estimate::from_samples(&col(|r| r.nm_dist_lu as f64)));
    rep.aggregates.insert("nm_dist".into(), Estimate::from_samples(&col(|r| r.nm_dist as f64)));
    rep.aggregates.insert("jerrum_dist".into(), Estimate::from_samples(&col(|r| r.jerrum_dist as f64)));
    let freq = |f: fn(&ContractionRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64;
    rep.frequencies.insert("lu".into(), freq(|r| r.lu));
    rep.frequencies.insert("bc_true".into(), freq(|r| r.bc_true));
    rep.counts.insert("nm_applied".into(), records.iter().map(|r| r.nm_applied).sum());
    rep.counts.insert("nm_failed".into(), records.iter().map(|r| r.nm_failed).sum());
    rep.counts.insert("case_3a".into(), records.iter().map(|r| r.case_3a).sum());
    rep.counts.insert("t_cp".into(), len);
    rep.counts.insert("burn_in".into(), burn);
    rep.counts.insert("max_degree".into(), g.max_degree());
    rep.records = records;
    rep.runtime_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCoupling {
    Identity,
    Jerrum,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub coupling: StepCoupling,
    pub snapshots: usize,
    pub samples: usize,
    /// Monte-Carlo one-step change of the Hamming distance.
    pub measured: Estimate,
    /// Exact one-step change averaged over the same snapshots.
    pub oracle: f64,
    /// Counting bound `(bad bound − |A(X,z)|) / (n k)` averaged likewise,
    /// with one bad move per neighbor of `z` for the greedy coupling and two
    /// for the identity coupling.
    pub counting_bound: f64,
    pub good_moves: f64,
    pub bad_moves: f64,
    pub relative_error: f64,
}

fn coupled_change(g: &Graph, x: &mut Labeling, y: &mut Labeling, upd: Update, kind: StepCoupling) -> i64 {
    let v = upd.v;
    let before = (x.get(v) != y.get(v)) as i64;
    let yc = match kind {
        StepCoupling::Identity => upd.c,
        StepCoupling::Jerrum => jerrum_color(g, x, y, upd),
    };
    let (ox, oy) = (x.get(v), y.get(v));
    metropolis_step(g, x, upd);
    metropolis_step(g, y, Update { v, c: yc });
    let after = (x.get(v) != y.get(v)) as i64;
    x.set(v, ox);
    y.set(v, oy);
    after - before
}

/// Exact expected one-step change on a frozen pair, by trying all `n k`
/// proposals. Returns the mean change and the numbers of decreasing and
/// increasing proposals.
pub fn exact_drift(g: &Graph, x: &Labeling, y: &Labeling, kind: StepCoupling) -> (f64, usize, usize) {
    let (mut x, mut y) = (x.clone(), y.clone());
    let (mut good, mut bad) = (0usize, 0usize);
    for v in 0..g.n() {
        for c in 1..=x.k() {
            match coupled_change(g, &mut x, &mut y, Update { v, c }, kind) {
                -1 => good += 1,
                1 => bad += 1,
                _ => {}
            }
        }
    }
    let total = (g.n() * x.k() as usize) as f64;
    ((bad as f64 - good as f64) / total, good, bad)
}

/// One-step drift of the Hamming distance from neighboring start pairs:
/// Monte-Carlo over `samples` proposals per snapshot against the exact
/// brute-force value.
pub fn drift_experiment(cfg: &ExperimentConfig, kind: StepCoupling, snapshots: usize, samples: usize) -> Result<DriftReport> {
    let g = cfg.build_graph()?;
    let burn = cfg.burn_in_steps(g.n());
    let k = cfg.k;
    // Per snapshot: sampled sum and sum of squares, oracle drift, counting
    // bound, good and bad move counts.
    type Snapshot = ([f64; 2], f64, f64, usize, usize);
    let per: Vec<Result<Snapshot>> = (0..snapshots as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let sp = neighboring_start(&g, k, burn, &mut rng)?;
            let (mut x, mut y) = (sp.x0.clone(), sp.y0.clone());
            let mut sum = 0i64;
            let mut sq = 0i64;
            for _ in 0..samples {
                let upd = Update { v: rng.random_range(0..g.n()), c: rng.random_range(1..=k) };
                let d = coupled_change(&g, &mut x, &mut y, upd, kind);
                sum += d;
                sq += d * d;
            }
            let (oracle, good, bad) = exact_drift(&g, &sp.x0, &sp.y0, kind);
            let per_nbr = match kind {
                StepCoupling::Identity => 2.0,
                StepCoupling::Jerrum => 1.0,
            };
            let a = available_colors(&g, &sp.x0, sp.z).len() as f64;
            let bound = (per_nbr * g.degree(sp.z) as f64 - a) / (g.n() as f64 * k as f64);
            Ok(([sum as f64, sq as f64], oracle, bound, good, bad))
        })
        .collect();
    let per = per.into_iter().collect::<Result<Vec<_>>>()?;
    let n_tot = (snapshots * samples) as f64;
    let sum: f64 = per.iter().map(|p| p.0[0]).sum();
    let sq: f64 = per.iter().map(|p| p.0[1]).sum();
    let mean = sum / n_tot;
    let var = (sq / n_tot - mean * mean) * n_tot / (n_tot - 1.0);
    let measured = Estimate { mean, half_width: 1.96 * (var / n_tot).sqrt(), n: n_tot as usize };
    let m = snapshots as f64;
    let oracle = per.iter().map(|p| p.1).sum::<f64>() / m;
    Ok(DriftReport {
        coupling: kind,
        snapshots,
        samples,
        measured,
        oracle,
        counting_bound: per.iter().map(|p| p.2).sum::<f64>() / m,
        good_moves: per.iter().map(|p| p.3 as f64).sum::<f64>() / m,
        bad_moves: per.iter().map(|p| p.4 as f64).sum::<f64>() / m,
        relative_error: ((measured.mean - oracle) / oracle).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthPoint {
    pub t: usize,
    pub dist: Estimate,
    pub bound: f64,
}

/// Hamming distance after each of `times` steps under the identity
/// coupling from neighboring start pairs, against `e^{T/n}`.
pub fn identity_growth(cfg: &ExperimentConfig, times: &[usize]) -> Result<Vec<GrowthPoint>> {
    let g = cfg.build_graph()?;
    let burn = cfg.burn_in_steps(g.n());
    let horizon = times.iter().copied().max().unwrap_or(0);
    let per: Vec<Result<Vec<usize>>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let sp = neighboring_start(&g, cfg.k, burn, &mut rng)?;
            let (mut x, mut y) = (sp.x0, sp.y0);
            let mut d = 1usize;
            let mut out = Vec::new();
            for t in 1..=horizon {
                let upd = Update { v: rng.random_range(0..g.n()), c: rng.random_range(1..=cfg.k) };
                let before = (x.get(upd.v) != y.get(upd.v)) as usize;
                metropolis_step(&g, &mut x, upd);
                metropolis_step(&g, &mut y, upd);
                d = d + (x.get(upd.v) != y.get(upd.v)) as usize - before;
                if times.contains(&t) {
                    out.push(d);
                }
            }
            Ok(out)
        })
        .collect();
    let per = per.into_iter().collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<usize> = times.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let xs: Vec<f64> = per.iter().map(|p| p[i] as f64).collect();
            GrowthPoint { t, dist: Estimate::from_samples(&xs), bound: (t as f64 / g.n() as f64).exp() }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BadEvent {
    /// Summed disagreements reached the growth threshold.
    LargeGrowth,
    /// Local uniformity failed for a coupled pair.
    NotUniform,
    /// A disagreement left the ball around the initial discrepancy.
    Escape,
    /// Some two-ball holds too many disagreements.
    Heavy,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockRecord {
    pub stream: u64,
    pub z: usize,
    /// Distance at the end of block 0 and of every later block.
    pub dists: Vec<usize>,
    /// `(block, event, step within the run)`.
    pub events: Vec<(usize, BadEvent, usize)>,
    /// First block run under the identity coupling after a bad event.
    pub identity_from: Option<usize>,
}

impl CsvRecord for BlockRecord {
    fn header() -> &'static str {
        "stream,z,dists,events,identity_from"
    }
    fn row(&self) -> String {
        let d: Vec<String> = self.dists.iter().map(|d| d.to_string()).collect();
        let e: Vec<String> = self.events.iter().map(|(b, e, t)| format!("{b}:{e:?}@{t}")).collect();
        format!("{},{},{},{},{}", self.stream, self.z, d.join(";"), e.join(";"), self.identity_from.map_or(String::new(), |b| b.to_string()))
    }
}

/// Thresholds for the bad events.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BadEventLimits {
    pub d_max: f64,
    pub escape_radius: usize,
    pub heavy: usize,
}

impl BadEventLimits {
    pub fn for_degree(max_degree: usize, c_blk: f64) -> Self {
        let d = max_degree.max(1) as f64;
        BadEventLimits {
            d_max: d.powf(100.0 * c_blk).min(D_MAX_CAP),
            escape_radius: (d.powf(0.01).floor() as usize).max(1),
            heavy: (d.powf(2.0 / 3.0).ceil() as usize).max(1),
        }
    }
}

/// Tracks the union of disagreement sets and the bad events it triggers.
struct EventTracker<'a> {
    g: &'a Graph,
    limits: BadEventLimits,
    dist_from_z: Vec<Option<usize>>,
    ever: Vec<bool>,
    two_ball_load: Vec<usize>,
    summed: f64,
}

impl<'a> EventTracker<'a> {
    fn new(g: &'a Graph, z: usize, limits: BadEventLimits) -> Result<Self> {
        Ok(EventTracker {
            g,
            limits,
            dist_from_z: g.distances(&[z], limits.escape_radius)?,
            ever: vec![false; g.n()],
            two_ball_load: vec![0; g.n()],
            summed: 0.0,
        })
    }

    fn observe(&mut self, x: &Labeling, y: &Labeling, v: usize, dist: usize, out: &mut Vec<BadEvent>) -> Result<()> {
        self.summed += dist as f64;
        if self.summed >= self.limits.d_max {
            out.push(BadEvent::LargeGrowth);
        }
        if x.get(v) != y.get(v) && !self.ever[v] {
            self.ever[v] = true;
            if self.dist_from_z[v].is_none() {
                out.push(BadEvent::Escape);
            }
            for u in self.g.ball(&[v], 2)? {
                self.two_ball_load[u] += 1;
                if self.two_ball_load[u] >= self.limits.heavy {
                    out.push(BadEvent::Heavy);
                }
            }
        }
        Ok(())
    }

    fn seed(&mut self, x: &Labeling, y: &Labeling) -> Result<()> {
        let mut sink = Vec::new();
        for v in hamming(x, y).1 {
            self.observe(x, y, v, 0, &mut sink)?;
        }
        Ok(())
    }
}

/// Block coupling: block 0 under the identity coupling, then blocks of
/// length `T_cp` glued along the Hamming interpolation of the current pair
/// with one global coupling per interpolation step. A bad event switches to
/// the identity coupling from the next block on.
pub fn block_coupling(cfg: &ExperimentConfig) -> Result<ExperimentReport<BlockRecord>> {
    block_coupling_with(cfg, false)
}

/// As [`block_coupling`], with every block under the identity coupling when
/// `identity_only` is set.
pub fn block_coupling_with(cfg: &ExperimentConfig, identity_only: bool) -> Result<ExperimentReport<BlockRecord>> {
    let start = Instant::now();
    let g = cfg.build_graph()?;
    let big_d = g.max_degree();
    let limits = BadEventLimits::for_degree(big_d, cfg.c_blk);
    let block0 = (cfg.gamma * cfg.t_blk(g.n(), big_d) as f64).ceil() as usize;
    let len = cfg.t_cp(g.n());
    let burn = cfg.burn_in_steps(g.n());
    let ccfg = cfg.coupling();
    let records: Vec<Result<BlockRecord>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let sp = neighboring_start(&g, cfg.k, burn, &mut rng)?;
            let mut tracker = EventTracker::new(&g, sp.z, limits)?;
            let (mut x, mut y) = (sp.x0.clone(), sp.y0.clone());
            tracker.seed(&x, &y)?;
            let mut rec = BlockRecord { stream: r, z: sp.z, dists: Vec::new(), events: Vec::new(), identity_from: None };
            let mut clock = 0usize;
            let mut pending_switch = identity_only;
            for block in 0..=cfg.blocks {
                if pending_switch && rec.identity_from.is_none() && block > 0 {
                    rec.identity_from = Some(block);
                }
                let identity = block == 0 || rec.identity_from.is_some();
                let steps = if block == 0 { block0 } else { len };
                let sx = sample_updates_with(&mut rng, g.n(), cfg.k, steps);
                let sy = if identity {
                    sx.clone()
                } else {
                    let path = hamming_interpolation(&x, &y);
                    let mut s = sx.clone();
                    for w in path.windows(2) {
                        let z = hamming(&w[0], &w[1]).1[0];
                        let (a, b) = (w[0].get(z), w[1].get(z));
                        let lu = lu_event(&g, &w[0], &s, cfg.eps, z, &CheckLimits::default(), &[(a.min(b), a.max(b))])?;
                        if !lu.holds {
                            if !rec.events.iter().any(|&(_, f, _)| f == BadEvent::NotUniform) {
                                rec.events.push((block, BadEvent::NotUniform, clock));
                            }
                            pending_switch = true;
                        }
                        s = global_coupling(&g, &w[0], &w[1], &s, &ccfg)?.sigma_prime;
                    }
                    s
                };
                let mut dist = hamming(&x, &y).0;
                for t in 1..=steps {
                    clock += 1;
                    let (ux, uy) = (sx.get(t), sy.get(t));
                    let before = (x.get(ux.v) != y.get(ux.v)) as usize;
                    metropolis_step(&g, &mut x, ux);
                    metropolis_step(&g, &mut y, uy);
                    dist = dist + (x.get(ux.v) != y.get(ux.v)) as usize - before;
                    let mut ev = Vec::new();
                    tracker.observe(&x, &y, ux.v, dist, &mut ev)?;
                    for e in ev {
                        if !rec.events.iter().any(|&(_, f, _)| f == e) {
                            rec.events.push((block, e, clock));
                        }
                        pending_switch = true;
                    }
                }
                rec.dists.push(dist);
            }
            Ok(rec)
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rep = ExperimentReport::new(if identity_only { "block_identity" } else { "block" }, cfg);
    for b in 0..=cfg.blocks {
        let xs: Vec<f64> = records.iter().map(|r| r.dists[b] as f64).collect();
        rep.aggregates.insert(format!("dist_{b}"), Estimate::from_samples(&xs));
    }
    for e in [BadEvent::LargeGrowth, BadEvent::NotUniform, BadEvent::Escape, BadEvent::Heavy] {
        let hit = records.iter().filter(|r| r.events.iter().any(|&(_, f, _)| f == e)).count();
        rep.frequencies.insert(format!("{e:?}"), hit as f64 / records.len() as f64);
    }
    rep.counts.insert("block0_len".into(), block0);
    rep.counts.insert("block_len".into(), len);
    rep.counts.insert("escape_radius".into(), limits.escape_radius);
    rep.counts.insert("heavy_threshold".into(), limits.heavy);
    rep.notes.push(format!("large-growth threshold {} (cap {D_MAX_CAP})", limits.d_max));
    rep.records = records;
    rep.runtime_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Plot data: block index against mean distance and its interval.
pub fn write_block_plot<W: Write>(rep: &ExperimentReport<BlockRecord>, mut w: W) -> Result<()> {
    writeln!(w, "block,mean_dist,lo,hi")?;
    let mut b = 0;
    while let Some(e) = rep.aggregates.get(&format!("dist_{b}")) {
        writeln!(w, "{b},{},{},{}", e.mean, e.lo(), e.hi())?;
        b += 1;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub coalescence: Estimate,
    pub censored: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub k: u32,
    pub points: Vec<ScalingPoint>,
    /// Fitted exponent of `n ln n`.
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub intercept: f64,
    pub replicas: usize,
    pub seed: u64,
    pub rng: &'static str,
}

/// Steps until the greedy-coupled pair started from `x0` and `y0`
/// coalesces, or `None` past `max_steps`.
pub fn coalescence_time(g: &Graph, x0: &Labeling, y0: &Labeling, rng: &mut Rng, max_steps: usize) -> Option<usize> {
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut d = hamming(&x, &y).0;
    let k = x.k();
    for t in 1..=max_steps {
        if d == 0 {
            return Some(t - 1);
        }
        let upd = Update { v: rng.random_range(0..g.n()), c: rng.random_range(1..=k) };
        let before = (x.get(upd.v) != y.get(upd.v)) as usize;
        let yc = jerrum_color(g, &x, &y, upd);
        metropolis_step(g, &mut x, upd);
        metropolis_step(g, &mut y, Update { v: upd.v, c: yc });
        d = d + (x.get(upd.v) != y.get(upd.v)) as usize - before;
    }
    (d == 0).then_some(max_steps)
}

/// Coalescence time on each graph of `graphs`, started from a greedy proper
/// coloring and its color-shifted copy, regressed in log scale on `n ln n`.
pub fn mixing_scaling(graphs: &[(usize, Graph)], k: u32, replicas: usize, seed: u64, max_steps_per_n: f64) -> Result<ScalingReport> {
    let mut per_n: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for (i, (n, g)) in graphs.iter().enumerate() {
        let x0 = Labeling::greedy_proper(g, k)?;
        let y0 = Labeling::new(k, x0.colors().iter().map(|&c| c % k + 1).collect())?;
        let cap = (max_steps_per_n * *n as f64 * (*n as f64).ln().max(1.0)).ceil() as usize;
        let times: Vec<Option<usize>> = (0..replicas as u64)
            .into_par_iter()
            .map(|r| coalescence_time(g, &x0, &y0, &mut stream(seed, ((i as u64) << 32) | r), cap))
            .collect();
        let censored = times.iter().filter(|t| t.is_none()).count();
        per_n.push((*n, times.into_iter().map(|t| t.unwrap_or(cap) as f64).collect(), censored));
    }
    let xs: Vec<f64> = per_n.iter().map(|(n, _, _)| (*n as f64 * (*n as f64).ln()).ln()).collect();
    let fit = |samples: &[Vec<f64>]| {
        let ys: Vec<f64> = samples.iter().map(|s| (s.iter().sum::<f64>() / s.len() as f64).ln()).collect();
        ols(&xs, &ys)
    };
    let all: Vec<Vec<f64>> = per_n.iter().map(|p| p.1.clone()).collect();
    let (slope, intercept) = fit(&all);
    let mut rng = stream(seed, u64::MAX);
    let mut boots: Vec<f64> = (0..500)
        .map(|_| {
            let re: Vec<Vec<f64>> = all.iter().map(|s| (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).collect()).collect();
            fit(&re).0
        })
        .collect();
    boots.sort_by(|a, b| a.total_cmp(b));
    let slope_ci = (boots[12], boots[487]);
    Ok(ScalingReport {
        k,
        points: per_n
            .into_iter()
            .map(|(n, s, censored)| ScalingPoint { n, coalescence: Estimate::from_samples(&s), censored })
            .collect(),
        slope,
        slope_ci,
        intercept,
        replicas,
        seed,
        rng: RNG_NAME,
    })
}

/// Vertices that ever disagree while both chains run `seq` from `x0`, `y0`.
pub fn disagreement_union(g: &Graph, x0: &Labeling, y0: &Labeling, seq: &UpdateSequence) -> BTreeSet<usize> {
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut out: BTreeSet<usize> = hamming(&x, &y).1.into_iter().collect();
    for upd in seq.steps() {
        metropolis_step(g, &mut x, *upd);
        metropolis_step(g, &mut y, *upd);
        if x.get(upd.v) != y.get(upd.v) {
            out.insert(upd.v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, path};
    use crate::rng::seeded;

    #[test]
    fn path_five_has_forty_eight_colorings() {
        assert_eq!(enumerate_colorings(&path(5).unwrap(), 3, 1000).unwrap().len(), 48);
    }

    #[test]
    fn cycle_count_matches_the_chromatic_polynomial() {
        for n in 3..=8 {
            let want = 3usize.pow(n as u32) as i64 + if n % 2 == 0 { 3 } else { -3 };
            assert_eq!(enumerate_colorings(&cycle(n).unwrap(), 4, 1 << 20).unwrap().len() as i64, want);
        }
    }

    #[test]
    fn zero_steps_give_point_mass_distance() {
        let g = path(5).unwrap();
        let r = stationarity_test(&g, 3, 50, 0, 1, 20).unwrap();
        assert!((r.tv - (1.0 - 1.0 / 48.0)).abs() < 1e-12);
    }

    #[test]
    fn too_few_colors_is_an_input_error() {
        let g = cycle(5).unwrap();
        assert!(matches!(stationarity_test(&g, 2, 10, 10, 0, 10), Err(Error::Input(_))));
    }

    #[test]
    fn long_runs_approach_uniform_on_a_small_instance() {
        let g = path(5).unwrap();
        let r = stationarity_test(&g, 3, 20_000, 200, 3, 50).unwrap();
        assert!(r.tv < 0.05, "{r:?}");
        assert!(r.tv_ci.0 <= r.tv_ci.1 && r.tv_ci.1 < 0.06, "{r:?}");
        assert!(r.max_marginal_tv < 0.02, "{r:?}");
    }

    #[test]
    fn config_errors_name_the_field() {
        let e = ExperimentConfig::from_json(r#"{"graph": {"kind": "cycle", "n": 12}}"#).unwrap_err();
        assert!(e.to_string().contains("`k`"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"graph": {"kind": "cycle", "n": 12}, "k": 4, "gamma": 1.5}"#).unwrap_err();
        assert!(e.to_string().contains("gamma"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"graph": {"kind": "cycle", "n": 12}, "k": 4, "colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let ok = ExperimentConfig::from_json(r#"{"graph": {"kind": "cycle", "n": 12}, "k": 4}"#).unwrap();
        assert_eq!(ok.t_cp(12), 60);
    }

    #[test]
    fn slack_is_enforced() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Cycle { n: 12 }, 2);
        cfg.delta = Some(0.5);
        assert!(matches!(cfg.build_graph(), Err(Error::Input(_))));
        cfg.k = 3;
        assert!(cfg.build_graph().is_ok());
    }

    #[test]
    fn tiny_exhaustive_instance_is_bijective() {
        let (inj, rev) = exhaustive_bijectivity(&path(4).unwrap(), 3, 2, &CouplingConfig::default()).unwrap();
        assert!(inj.passed() && rev.passed());
        assert!(inj.runs > 0);
    }

    #[test]
    fn sampled_checks_pass_on_the_cycle() {
        let s = sampled_bijectivity(&cycle(12).unwrap(), 4, 60, 300, 9, 500, DEFAULT_P_MAX).unwrap();
        assert!(s.passed(), "{s:?}");
        assert_eq!(s.reverse.runs, 300);
    }

    #[test]
    fn greedy_coupling_is_a_bijection_per_step() {
        let g = cycle(6).unwrap();
        let x = Labeling::new(4, vec![1, 2, 1, 2, 1, 3]).unwrap();
        let mut y = x.clone();
        y.set(0, 4);
        for v in 0..6 {
            let mut image: Vec<Color> = (1..=4).map(|c| jerrum_color(&g, &x, &y, Update { v, c })).collect();
            image.sort();
            assert_eq!(image, vec![1, 2, 3, 4]);
        }
        assert_eq!(jerrum_color(&g, &x, &y, Update { v: 1, c: 1 }), 4);
        assert_eq!(jerrum_color(&g, &x, &y, Update { v: 1, c: 4 }), 1);
        assert_eq!(jerrum_color(&g, &x, &y, Update { v: 3, c: 1 }), 1);
    }

    #[test]
    fn exact_drift_on_a_star_counts_moves() {
        // Star center z = 0 with 3 leaves colored 1, 2, 3; X(z) = 4, Y(z) = 5.
        let g = crate::graph::star(3).unwrap();
        let k = 7;
        let x = Labeling::new(k, vec![4, 1, 2, 3]).unwrap();
        let y = Labeling::new(k, vec![5, 1, 2, 3]).unwrap();
        // Good moves: any proposal at z in A = {4,5,6,7}.
        // Identity: a leaf proposing 4 or 5 moves in exactly one chain.
        let (d, good, bad) = exact_drift(&g, &x, &y, StepCoupling::Identity);
        assert_eq!((good, bad), (4, 6));
        assert!((d - 2.0 / 28.0).abs() < 1e-12);
        // Greedy coupling: a leaf proposing 5 in X proposes 4 in Y.
        let (_, good, bad) = exact_drift(&g, &x, &y, StepCoupling::Jerrum);
        assert_eq!((good, bad), (4, 3));
    }

    #[test]
    fn single_vertex_coalesces_at_its_first_update() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let x = Labeling::new(3, vec![1]).unwrap();
        let y = Labeling::new(3, vec![2]).unwrap();
        let mut rng = seeded(0);
        assert_eq!(coalescence_time(&g, &x, &y, &mut rng, 10), Some(1));
    }

    #[test]
    fn identical_pairs_stay_together() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Cycle { n: 12 }, 4);
        cfg.replicas = 4;
        cfg.blocks = 2;
        cfg.burn_in = Some(100);
        let rep = block_coupling(&cfg).unwrap();
        for r in &rep.records {
            assert_eq!(r.dists.len(), 3);
            if let Some(i) = r.dists.iter().position(|&d| d == 0) {
                assert!(r.dists[i..].iter().all(|&d| d == 0), "{r:?}");
            }
        }
    }

    #[test]
    fn bootstrap_interval_covers_the_mean() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut rng = seeded(1);
        let (lo, hi) = bootstrap_ci(xs.len(), 200, &mut rng, |idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64);
        assert!(lo < 49.5 && 49.5 < hi);
        let (s, b) = ols(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Cycle { n: 12 }, 5);
        cfg.replicas = 6;
        cfg.burn_in = Some(200);
        let a = contraction_experiment(&cfg).unwrap();
        let b = contraction_experiment(&cfg).unwrap();
        let rows = |r: &ExperimentReport<ContractionRecord>| r.records.iter().map(CsvRecord::row).collect::<Vec<_>>();
        assert_eq!(rows(&a), rows(&b));
        assert!(a.records.iter().enumerate().all(|(i, r)| r.stream == i as u64));
    }
}
