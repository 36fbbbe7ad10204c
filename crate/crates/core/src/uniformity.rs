//! Local-uniformity statistics: available-color counts against their
//! tree-like targets, i-times-blocked neighbor sets, weighted unblocked
//! sums, color loads on two-balls, C-above-suspicion, the LU event over a
//! trajectory, and the bias field.
//!
//! The weighted unblocked sum counts `w ∈ N(v)` for which `c` is available
//! at `w` once `v` itself is ignored, the same blocker notion used by the
//! i-times-blocked sets.

use std::io::Write;

use rand::seq::index::sample;
use serde::Serialize;

use crate::colorset::{Color, ColorSet};
use crate::dynamics::{available_colors, metropolis_step, CtRun, Labeling, Trajectory, Update, UpdateSequence};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;

/// Bound on same-colored vertices in a two-ball, as a multiple of `Δ`.
pub const TWO_BALL_LOAD: f64 = 400.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLimits {
    /// Largest blocked multiplicity for which intersection deviations are
    /// reported.
    pub i_max: usize,
    /// Number of color pairs drawn by [`sample_pairs`].
    pub pair_budget: usize,
}

impl Default for CheckLimits {
    fn default() -> Self {
        CheckLimits { i_max: 3, pair_budget: 8 }
    }
}

/// `{w ∈ S : |(N(w) ∖ v) ∩ X^{-1}(c)| = i}`.
pub fn blocked_set(g: &Graph, x: &Labeling, v: usize, s: &[usize], c: Color, i: usize) -> Vec<usize> {
    s.iter().copied().filter(|&w| blocker_count(g, x, v, w, c) == i).collect()
}

fn blocker_count(g: &Graph, x: &Labeling, v: usize, w: usize, c: Color) -> usize {
    g.neighbors(w).iter().filter(|&&u| u != v && x.get(u) == c).count()
}

/// Poisson-product target for `|S_{c1,i1} ∩ S_{c2,i2}|`.
pub fn blocked_intersection_target(g: &Graph, k: u32, s: &[usize], i1: usize, i2: usize) -> f64 {
    let fact = |i: usize| (1..=i).map(|j| j as f64).product::<f64>();
    s.iter()
        .map(|&w| {
            let r = g.degree(w) as f64 / k as f64;
            (-2.0 * r).exp() * r.powi((i1 + i2) as i32) / (fact(i1) * fact(i2))
        })
        .sum()
}

/// `Σ e^{d(w)/k}` over `w ∈ N(v)` with `c` available at `w` ignoring `v`.
pub fn weighted_unblocked_sum(g: &Graph, x: &Labeling, v: usize, c: Color) -> f64 {
    let k = x.k() as f64;
    g.neighbors(v)
        .iter()
        .filter(|&&w| blocker_count(g, x, v, w, c) == 0)
        .map(|&w| (g.degree(w) as f64 / k).exp())
        .sum()
}

/// Target `k e^{-d/k}` for the number of available colors.
pub fn available_target(k: u32, d: usize) -> f64 {
    k as f64 * (-(d as f64) / k as f64).exp()
}

/// All ordered pairs `c1 < c2` of the palette.
pub fn all_pairs(k: u32) -> Vec<(Color, Color)> {
    (1..=k).flat_map(|a| (a + 1..=k).map(move |b| (a, b))).collect()
}

/// `budget` distinct pairs `c1 < c2` drawn uniformly.
pub fn sample_pairs(k: u32, budget: usize, rng: &mut Rng) -> Vec<(Color, Color)> {
    let all = all_pairs(k);
    let m = budget.min(all.len());
    let mut out: Vec<_> = sample(rng, all.len(), m).into_iter().map(|i| all[i]).collect();
    out.sort();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Available-color count near `k e^{-d/k}`.
    AvailableCount,
    /// Weighted unblocked sum near `d(v)`.
    WeightedBlockers,
    /// Same-colored vertices in the two-ball at most `400Δ`.
    TwoBallLoad,
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexRecord {
    pub v: usize,
    pub available: usize,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockerRecord {
    pub v: usize,
    pub c: Color,
    pub sum: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionRecord {
    pub v: usize,
    pub c1: Color,
    pub c2: Color,
    pub i1: usize,
    pub i2: usize,
    pub size: usize,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoadRecord {
    pub v: usize,
    pub c: Color,
    pub load: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub v: usize,
    pub condition: Condition,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub center: usize,
    pub radius: usize,
    pub eps: f64,
    pub k: u32,
    pub max_degree: usize,
    pub limits: CheckLimits,
    pub pairs: Vec<(Color, Color)>,
    pub vertices: Vec<VertexRecord>,
    pub blockers: Vec<BlockerRecord>,
    /// Reported for the pairs in scope; informative, not part of the verdict.
    pub intersections: Vec<IntersectionRecord>,
    /// Largest color load in each two-ball.
    pub loads: Vec<LoadRecord>,
    pub violations: Vec<Violation>,
}

impl UniformityReport {
    pub fn is_uniform(&self) -> bool {
        self.violations.is_empty()
    }

    /// Fraction of scanned vertices meeting the available-count condition.
    pub fn available_pass_fraction(&self) -> f64 {
        if self.vertices.is_empty() {
            return 1.0;
        }
        let tol = self.eps * self.k as f64;
        self.vertices.iter().filter(|r| r.deviation <= tol).count() as f64 / self.vertices.len() as f64
    }

    /// One row per vertex and condition.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "v,condition,color1,color2,i1,i2,measured,target,deviation")?;
        for r in &self.vertices {
            writeln!(w, "{},available_count,,,,,{},{:.6},{:.6}", r.v, r.available, r.target, r.deviation)?;
        }
        for r in &self.blockers {
            writeln!(w, "{},weighted_blockers,{},,,,{:.6},{},{:.6}", r.v, r.c, r.sum, r.target, r.deviation)?;
        }
        for r in &self.intersections {
            writeln!(
                w,
                "{},blocked_intersection,{},{},{},{},{},{:.6},{:.6}",
                r.v, r.c1, r.c2, r.i1, r.i2, r.size, r.target, r.deviation
            )?;
        }
        for r in &self.loads {
            writeln!(w, "{},two_ball_load,{},,,,{},{},", r.v, r.c, r.load, TWO_BALL_LOAD * self.max_degree as f64)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "center": self.center,
            "radius": self.radius,
            "eps": self.eps,
            "k": self.k,
            "pairs": self.pairs,
            "vertices_scanned": self.vertices.len(),
            "available_pass_fraction": self.available_pass_fraction(),
            "uniform": self.is_uniform(),
            "violations": self.violations,
        })
    }
}

/// Evaluates the three uniformity conditions at every vertex of
/// `B_R(center)`. The weighted-blocker condition is checked for both colors
/// of every pair in `pairs`; blocked-set intersections for those pairs are
/// reported up to `limits.i_max`.
pub fn eps_uniform_at(
    g: &Graph,
    x: &Labeling,
    center: usize,
    radius: usize,
    eps: f64,
    limits: &CheckLimits,
    pairs: &[(Color, Color)],
) -> Result<UniformityReport> {
    g.check_vertex(center)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::Input(format!("eps must be non-negative, got {eps}")));
    }
    let k = x.k();
    let big_d = g.max_degree();
    let mut rep = UniformityReport {
        center,
        radius,
        eps,
        k,
        max_degree: big_d,
        limits: limits.clone(),
        pairs: pairs.to_vec(),
        vertices: Vec::new(),
        blockers: Vec::new(),
        intersections: Vec::new(),
        loads: Vec::new(),
        violations: Vec::new(),
    };
    let mut colors: Vec<Color> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    colors.sort();
    colors.dedup();
    for v in g.ball(&[center], radius)? {
        let d = g.degree(v);
        let available = available_colors(g, x, v).len();
        let target = available_target(k, d);
        let deviation = (available as f64 - target).abs();
        if deviation > eps * k as f64 {
            rep.violations.push(Violation { v, condition: Condition::AvailableCount, deviation });
        }
        rep.vertices.push(VertexRecord { v, available, target, deviation });

        for &c in &colors {
            let sum = weighted_unblocked_sum(g, x, v, c);
            let deviation = (sum - d as f64).abs();
            if deviation > eps * big_d as f64 {
                rep.violations.push(Violation { v, condition: Condition::WeightedBlockers, deviation });
            }
            rep.blockers.push(BlockerRecord { v, c, sum, target: d as f64, deviation });
        }

        let nbrs = g.neighbors(v);
        for &(c1, c2) in pairs {
            for i1 in 0..=limits.i_max {
                let s1 = blocked_set(g, x, v, nbrs, c1, i1);
                for i2 in 0..=limits.i_max {
                    let size = s1.iter().filter(|&&w| blocker_count(g, x, v, w, c2) == i2).count();
                    let target = blocked_intersection_target(g, k, nbrs, i1, i2);
                    rep.intersections.push(IntersectionRecord {
                        v,
                        c1,
                        c2,
                        i1,
                        i2,
                        size,
                        target,
                        deviation: (size as f64 - target).abs(),
                    });
                }
            }
        }

        let (c, load) = max_two_ball_load(g, x, v)?;
        if load as f64 > TWO_BALL_LOAD * big_d as f64 {
            rep.violations.push(Violation { v, condition: Condition::TwoBallLoad, deviation: load as f64 });
        }
        rep.loads.push(LoadRecord { v, c, load });
    }
    Ok(rep)
}

/// Most frequent color in `B_2(v)` and its count.
pub fn max_two_ball_load(g: &Graph, x: &Labeling, v: usize) -> Result<(Color, usize)> {
    let mut count = vec![0usize; x.k() as usize + 1];
    for u in g.ball(&[v], 2)? {
        count[x.get(u) as usize] += 1;
    }
    let (c, &m) = count.iter().enumerate().skip(1).max_by_key(|&(c, &m)| (m, std::cmp::Reverse(c))).unwrap();
    Ok((c as Color, m))
}

/// `max(1, ⌊Δ^{1/10}⌋)`.
pub fn lu_radius(max_degree: usize) -> usize {
    ((max_degree as f64).powf(0.1).floor() as usize).max(1)
}

#[derive(Clone, Debug, Serialize)]
pub struct LuFailure {
    pub t: usize,
    pub v: usize,
    pub condition: Condition,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LuOutcome {
    pub holds: bool,
    pub radius: usize,
    pub first_failure: Option<LuFailure>,
}

/// Whether every labeling `X_0, ..., X_T` along the run is `eps`-uniform at
/// `center` for the LU radius. Stops at the first violation. Times whose
/// update changes nothing within distance `radius + 2` of `center` are not
/// re-evaluated, since none of the conditions can change there.
pub fn lu_event(
    g: &Graph,
    x0: &Labeling,
    seq: &UpdateSequence,
    eps: f64,
    center: usize,
    limits: &CheckLimits,
    pairs: &[(Color, Color)],
) -> Result<LuOutcome> {
    seq.validate(g.n(), x0.k())?;
    let radius = lu_radius(g.max_degree());
    let dist = g.distances(&[center], radius + 2)?;
    let mut x = x0.clone();
    let check = |x: &Labeling, t: usize| -> Result<Option<LuFailure>> {
        let rep = eps_uniform_at(g, x, center, radius, eps, limits, pairs)?;
        Ok(rep.violations.first().map(|f| LuFailure { t, v: f.v, condition: f.condition, deviation: f.deviation }))
    };
    if let Some(f) = check(&x, 0)? {
        return Ok(LuOutcome { holds: false, radius, first_failure: Some(f) });
    }
    for t in 1..=seq.len() {
        let upd = seq.get(t);
        let before = x.get(upd.v);
        metropolis_step(g, &mut x, upd);
        if x.get(upd.v) == before || dist[upd.v].is_none() {
            continue;
        }
        if let Some(f) = check(&x, t)? {
            return Ok(LuOutcome { holds: false, radius, first_failure: Some(f) });
        }
    }
    Ok(LuOutcome { holds: true, radius, first_failure: None })
}

/// Whether every `w ∈ B_R(v)` is `C`-light for every color: at most `CΔ`
/// vertices of each color in `B_2(w) ∖ w` and at most `CΔ / ln Δ` in `N(w)`.
pub fn above_suspicion(g: &Graph, x: &Labeling, v: usize, radius: usize, c_const: f64) -> Result<bool> {
    let big_d = g.max_degree();
    if big_d < 2 {
        return Err(Error::Input(format!("above-suspicion needs maximum degree at least 2, got {big_d}")));
    }
    let far = c_const * big_d as f64;
    let near = far / (big_d as f64).ln();
    let k = x.k() as usize;
    for w in g.ball(&[v], radius)? {
        let mut two = vec![0usize; k + 1];
        for u in g.ball(&[w], 2)? {
            if u != w {
                two[x.get(u) as usize] += 1;
            }
        }
        let mut one = vec![0usize; k + 1];
        for &u in g.neighbors(w) {
            one[x.get(u) as usize] += 1;
        }
        if two.iter().any(|&m| m as f64 > far) || one.iter().any(|&m| m as f64 > near) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bias field at `v` for color `c` after `t` steps: each neighbor `w`
/// refreshed at least once contributes `1/|A_v(X, w)|` if `c ∈ A_v(X, w)`,
/// with `X` the labeling just before the last refresh of `w`.
pub fn bias_field(g: &Graph, traj: &Trajectory, v: usize, c: Color, t: usize) -> Result<f64> {
    g.check_vertex(v)?;
    if t > traj.len() {
        return Err(Error::Input(format!("time {t} beyond trajectory length {}", traj.len())));
    }
    let mut total = 0.0;
    for &w in g.neighbors(v) {
        let tau = traj.last_success(w, t);
        if tau == 0 {
            continue;
        }
        let mut avail = ColorSet::full(traj.initial().k());
        for &u in g.neighbors(w) {
            if u != v {
                avail.remove(traj.color_at(u, tau - 1));
            }
        }
        if avail.contains(c) {
            total += 1.0 / avail.len() as f64;
        }
    }
    Ok(total)
}

/// The jump chain of a continuous-time run as a discrete update sequence.
pub fn embedded_sequence(run: &CtRun) -> UpdateSequence {
    UpdateSequence::new(run.events.iter().map(|e| Update { v: e.v, c: e.c }).collect())
}

/// Bias field of a continuous-time run at real time `time`.
pub fn bias_field_ct(g: &Graph, x0: &Labeling, run: &CtRun, v: usize, c: Color, time: f64) -> Result<f64> {
    let seq = embedded_sequence(run);
    let traj = crate::dynamics::evolve(g, x0, &seq, &[]);
    let t = run.events.partition_point(|e| e.time <= time);
    bias_field(g, &traj, v, c, t)
}
