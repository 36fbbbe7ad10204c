//! The bounding chain: per-vertex color sets that contain every color either
//! of two coupled chains may carry, the multivalued set they induce, and the
//! predicate certifying that this set grew in a tree-like, one-pass manner.

use std::io::Write;

use serde::Serialize;

use crate::colorset::{Color, ColorSet};
use crate::dynamics::{hamming, Labeling, Update, UpdateSequence};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default cap on the size of the multivalued set.
pub const DEFAULT_P_MAX: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ColorClass {
    Available,
    Blocked,
    Hazardous,
}

impl ColorClass {
    pub fn tag(self) -> &'static str {
        match self {
            ColorClass::Available => "A",
            ColorClass::Blocked => "B",
            ColorClass::Hazardous => "H",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Cycle,
    Repropagation,
    SizeCap,
}

/// Current color sets `Z(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundingState {
    k: u32,
    z: Vec<ColorSet>,
    multi: usize,
}

impl BoundingState {
    /// `Z(v) = {x(v), y(v)}`.
    pub fn new(x: &Labeling, y: &Labeling) -> Self {
        let k = x.k();
        let z: Vec<ColorSet> = (0..x.n())
            .map(|v| ColorSet::from_colors(k, [x.get(v), y.get(v)]))
            .collect();
        let multi = z.iter().filter(|s| s.len() > 1).count();
        BoundingState { k, z, multi }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn z(&self, v: usize) -> &ColorSet {
        &self.z[v]
    }

    pub fn is_multi(&self, v: usize) -> bool {
        self.z[v].len() > 1
    }

    pub fn multi_count(&self) -> usize {
        self.multi
    }

    fn replace(&mut self, v: usize, s: ColorSet) {
        let was = self.z[v].len() > 1;
        let now = s.len() > 1;
        self.multi = self.multi + usize::from(now) - usize::from(was);
        self.z[v] = s;
    }
}

/// `H(Z, v)`: union of the sets of multivalued neighbors.
pub fn hazardous_colors(g: &Graph, z: &BoundingState, v: usize) -> ColorSet {
    let mut h = ColorSet::empty(z.k);
    for &w in g.neighbors(v) {
        if z.is_multi(w) {
            h.union_with(&z.z[w]);
        }
    }
    h
}

/// Classifies proposal color `c` at `v`. Hazardous takes precedence over
/// blocked.
pub fn classify(g: &Graph, z: &BoundingState, v: usize, c: Color) -> ColorClass {
    let mut blocked = false;
    for &w in g.neighbors(v) {
        if z.z[w].contains(c) {
            if z.is_multi(w) {
                return ColorClass::Hazardous;
            }
            blocked = true;
        }
    }
    if blocked {
        ColorClass::Blocked
    } else {
        ColorClass::Available
    }
}

/// Applies one bounding-chain update in place and returns the class of the
/// proposal. A hazardous proposal at a vertex that is currently multivalued
/// leaves it unchanged; otherwise the vertex absorbs the set of its first
/// multivalued neighbor in ascending id.
pub fn bounding_step(g: &Graph, z: &mut BoundingState, upd: Update) -> ColorClass {
    let class = classify(g, z, upd.v, upd.c);
    match class {
        ColorClass::Available => z.replace(upd.v, ColorSet::singleton(z.k, upd.c)),
        ColorClass::Blocked => {}
        ColorClass::Hazardous => {
            if !z.is_multi(upd.v) {
                let w = *g
                    .neighbors(upd.v)
                    .iter()
                    .find(|&&w| z.is_multi(w))
                    .expect("hazardous color implies a multivalued neighbor");
                let merged = z.z[w].union(&z.z[upd.v]);
                z.replace(upd.v, merged);
            }
        }
    }
    class
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub v: usize,
    pub c: Color,
    pub class: ColorClass,
    pub zsize: usize,
}

/// Full record of a bounding-chain run.
#[derive(Clone, Debug)]
pub struct BoundingTrace {
    z_star: usize,
    initial: Vec<ColorSet>,
    /// Per vertex: ascending `(time, new set)` for every change.
    changes: Vec<Vec<(usize, ColorSet)>>,
    steps: Vec<StepRecord>,
    join_time: Vec<Option<usize>>,
    p_final: Vec<usize>,
    p_size_by_time: Vec<usize>,
    failure: Option<(FailureReason, usize)>,
    cycle_time: Option<usize>,
    p_max: usize,
}

impl BoundingTrace {
    pub fn z_star(&self) -> usize {
        self.z_star
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `Z_t(v)`.
    pub fn z_at(&self, v: usize, t: usize) -> &ColorSet {
        let list = &self.changes[v];
        let i = list.partition_point(|(time, _)| *time <= t);
        if i == 0 {
            &self.initial[v]
        } else {
            &list[i - 1].1
        }
    }

    /// Whether `v ∈ P_t`.
    pub fn in_p_at(&self, v: usize, t: usize) -> bool {
        self.z_at(v, t).len() > 1
    }

    /// Whether `v ∈ P_{≤t}`.
    pub fn in_p_upto(&self, v: usize, t: usize) -> bool {
        self.join_time[v].is_some_and(|j| j <= t)
    }

    /// Whether `v` is ever multivalued.
    pub fn in_p(&self, v: usize) -> bool {
        self.join_time[v].is_some()
    }

    /// First time `v` became multivalued.
    pub fn join_time(&self, v: usize) -> Option<usize> {
        self.join_time[v]
    }

    /// The union of all multivalued sets, ascending.
    pub fn p_final(&self) -> &[usize] {
        &self.p_final
    }

    /// `|P_{≤t}|` for `t = 0..=T`.
    pub fn p_size_by_time(&self) -> &[usize] {
        &self.p_size_by_time
    }

    pub fn step(&self, t: usize) -> &StepRecord {
        &self.steps[t - 1]
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn bc(&self) -> bool {
        self.failure.is_none()
    }

    /// Earliest violated condition and the time it was detected.
    pub fn failure(&self) -> Option<(FailureReason, usize)> {
        self.failure
    }

    /// First time the geometric condition failed, even if another
    /// condition failed earlier.
    pub fn cycle_time(&self) -> Option<usize> {
        self.cycle_time
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "z_star": self.z_star,
            "steps": self.steps,
            "p": self.p_final,
            "verdict": self.bc(),
            "failure_reason": match self.failure {
                None => "none",
                Some((FailureReason::Cycle, _)) => "cycle",
                Some((FailureReason::Repropagation, _)) => "repropagation",
                Some((FailureReason::SizeCap, _)) => "size_cap",
            },
            "failure_time": self.failure.map(|f| f.1),
        })
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_json())?;
        Ok(())
    }
}

/// Incremental check that `G[P]` stays a tree and that no three outside
/// vertices close a cycle with it. Called whenever a vertex joins `P`;
/// relies on `P` being connected with every new vertex attached to it.
struct CycleWatch {
    in_p: Vec<bool>,
    near: Vec<bool>,
}

impl CycleWatch {
    fn new(n: usize) -> Self {
        CycleWatch { in_p: vec![false; n], near: vec![false; n] }
    }

    /// Adds `x` to `P`; returns false if a forbidden cycle appears.
    fn join(&mut self, g: &Graph, x: usize) -> bool {
        let p_nbrs = g.neighbors(x).iter().filter(|&&w| self.in_p[w]).count();
        self.in_p[x] = true;
        let mut ok = p_nbrs <= 1;
        // Mark B_2(x).
        self.near[x] = true;
        for &a in g.neighbors(x) {
            self.near[a] = true;
            for &b in g.neighbors(a) {
                self.near[b] = true;
            }
        }
        if ok {
            let mut path = vec![x];
            ok = !self.outside_run(g, &mut path);
        }
        if ok {
            ok = !self.outside_triangle_near(g, x);
        }
        ok
    }

    /// Depth-first search for a run `x, t_1, .., t_j, y` with `1 <= j <= 3`
    /// outside vertices and `y ∈ P` that closes a cycle.
    fn outside_run(&self, g: &Graph, path: &mut Vec<usize>) -> bool {
        let x = path[0];
        let cur = *path.last().unwrap();
        let depth = path.len() - 1;
        for &nx in g.neighbors(cur) {
            if depth >= 1 && self.in_p[nx] {
                // Back at the start needs two outside vertices; any other
                // vertex of P closes a cycle through the tree path to x.
                if nx != x || depth >= 2 {
                    return true;
                }
                continue;
            }
            if self.in_p[nx] || path.contains(&nx) || depth == 3 {
                continue;
            }
            path.push(nx);
            if self.outside_run(g, path) {
                return true;
            }
            path.pop();
        }
        false
    }

    /// Whether a triangle of outside vertices near `P` touches `B_2(x)`.
    fn outside_triangle_near(&self, g: &Graph, x: usize) -> bool {
        let ok = |v: usize| !self.in_p[v] && self.near[v];
        let mut region = vec![x];
        for &a in g.neighbors(x) {
            region.push(a);
            region.extend_from_slice(g.neighbors(a));
        }
        for &a in &region {
            if !ok(a) {
                continue;
            }
            for &b in g.neighbors(a) {
                if !ok(b) {
                    continue;
                }
                for &c in g.neighbors(b) {
                    if c != a && ok(c) && g.has_edge(a, c) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Runs the bounding chain from `Z_0(v) = {x0(v), y0(v)}` and evaluates the
/// tree-growth predicate. The whole trace is always produced; the verdict
/// records the earliest violation.
pub fn run_bounding_chain(
    g: &Graph,
    x0: &Labeling,
    y0: &Labeling,
    seq: &UpdateSequence,
    p_max: usize,
) -> Result<BoundingTrace> {
    let (d, diff) = hamming(x0, y0);
    if d != 1 {
        return Err(Error::NotNeighboring(d));
    }
    let z_star = diff[0];
    let n = g.n();
    let mut z = BoundingState::new(x0, y0);
    let initial = z.z.clone();
    let mut changes: Vec<Vec<(usize, ColorSet)>> = vec![Vec::new(); n];
    let mut steps = Vec::with_capacity(seq.len());
    let mut join_time = vec![None; n];
    let mut p_final = vec![z_star];
    join_time[z_star] = Some(0);
    let mut p_size_by_time = Vec::with_capacity(seq.len() + 1);
    p_size_by_time.push(1);
    let mut watch = CycleWatch::new(n);
    let mut failure: Option<(FailureReason, usize)> = None;
    let fail = |reason, t, failure: &mut Option<(FailureReason, usize)>| {
        if failure.is_none() {
            *failure = Some((reason, t));
        }
    };
    let mut cycle_time = None;
    if !watch.join(g, z_star) {
        cycle_time = Some(0);
        fail(FailureReason::Cycle, 0, &mut failure);
    }
    if p_max < 1 {
        fail(FailureReason::SizeCap, 0, &mut failure);
    }
    for t in 1..=seq.len() {
        let upd = seq.get(t);
        let v = upd.v;
        let before = z.z[v].clone();
        let class = bounding_step(g, &mut z, upd);
        if class == ColorClass::Hazardous && join_time[v].is_some() {
            fail(FailureReason::Repropagation, t, &mut failure);
        }
        if z.z[v] != before {
            changes[v].push((t, z.z[v].clone()));
        }
        if z.is_multi(v) && join_time[v].is_none() {
            join_time[v] = Some(t);
            p_final.push(v);
            if cycle_time.is_none() && !watch.join(g, v) {
                cycle_time = Some(t);
                fail(FailureReason::Cycle, t, &mut failure);
            }
            if p_final.len() > p_max {
                fail(FailureReason::SizeCap, t, &mut failure);
            }
        }
        p_size_by_time.push(p_final.len());
        steps.push(StepRecord { t, v, c: upd.c, class, zsize: z.z[v].len() });
    }
    p_final.sort_unstable();
    Ok(BoundingTrace {
        z_star,
        initial,
        changes,
        steps,
        join_time,
        p_final,
        p_size_by_time,
        failure,
        cycle_time,
        p_max,
    })
}
