//! The coupling as a map on update sequences: epochs, exchangeable colors,
//! the avoid and swap sets, the complementary neighbor and color mappings,
//! the local non-Markovian and Jerrum edits, and their composition into the
//! global map with discrepancy tracking and runtime validity checks.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounding::{run_bounding_chain, BoundingTrace, DEFAULT_P_MAX};
use crate::colorset::{Color, ColorSet};
use crate::dynamics::{evolve, hamming, metropolis_step, Labeling, Trajectory, UpdateSequence};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// The interval `[tau_minus, tau_plus)` between the last successful update
/// of `w` at or before `t` and the next one after `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Epoch {
    pub w: usize,
    pub t: usize,
    /// 0 when `w` was never successfully updated in `[1, t]`.
    pub tau_minus: usize,
    /// `T + 1` when `w` is not successfully updated in `(t, T]`.
    pub tau_plus: usize,
}

impl Epoch {
    pub fn is_defined(&self) -> bool {
        self.tau_minus > 0
    }

    /// Whether `s` lies in the epoch with `t` removed.
    pub fn in_interior(&self, s: usize) -> bool {
        self.is_defined() && s >= self.tau_minus && s < self.tau_plus && s != self.t
    }
}

pub fn epoch(traj: &Trajectory, w: usize, t: usize) -> Epoch {
    Epoch { w, t, tau_minus: traj.last_success(w, t), tau_plus: traj.next_success(w, t) }
}

/// The data a local non-Markovian edit reads: a reference run, the sequence
/// being edited, its per-vertex proposal times, and the bounding trace.
#[derive(Clone, Copy)]
pub struct NmRun<'a> {
    pub g: &'a Graph,
    pub traj: &'a Trajectory,
    pub seq: &'a UpdateSequence,
    pub props: &'a [Vec<usize>],
    pub bounding: &'a BoundingTrace,
}

impl NmRun<'_> {
    /// Proposal times of `u` inside `[lo, hi)`.
    fn proposals_in(&self, u: usize, lo: usize, hi: usize) -> &[usize] {
        let p = &self.props[u];
        let a = p.partition_point(|&s| s < lo);
        let b = p.partition_point(|&s| s < hi);
        &p[a..b]
    }
}

/// Colors `w` could have carried through its epoch around `t` without
/// changing the outcome of any neighbor's proposal, plus its current color.
/// Empty when `w` has no successful update in `[1, t]`.
pub fn exchangeable(run: &NmRun, w: usize, t: usize) -> ColorSet {
    let k = run.traj.initial().k();
    let ep = epoch(run.traj, w, t);
    if !ep.is_defined() {
        return ColorSet::empty(k);
    }
    let mut ex = ColorSet::full(k);
    for &u in run.g.neighbors(w) {
        ex.remove(run.traj.color_at(u, ep.tau_minus - 1));
    }
    for &u in run.g.neighbors(w) {
        for &s in run.proposals_in(u, ep.tau_minus, ep.tau_plus) {
            if s != t {
                ex.remove(run.seq.get(s).c);
            }
        }
    }
    ex.insert(run.traj.color_at(w, t - 1));
    ex
}

/// Neighbors `w` of `v_t` other than `p` whose epoch contains a proposal at
/// `v_t` of the color `w` carried just before it. The full avoided set also
/// contains every vertex of `P`.
pub fn avoided_neighbors(run: &NmRun, t: usize, p: usize) -> Vec<usize> {
    let vt = run.seq.get(t).v;
    let mut out = Vec::new();
    for &w in run.g.neighbors(vt) {
        if w == p {
            continue;
        }
        let ep = epoch(run.traj, w, t);
        if !ep.is_defined() {
            continue;
        }
        let hit = run
            .proposals_in(vt, ep.tau_minus, ep.tau_plus)
            .iter()
            .any(|&s| s != t && run.seq.get(s).c == run.traj.color_at(w, s - 1));
        if hit {
            out.push(w);
        }
    }
    out
}

/// Neighbors of `v_t` outside `P` and outside the avoided set that can
/// exchange to color `c`, ordered by decreasing number of exchangeable
/// colors with ties broken by ascending id.
pub fn swap_set(run: &NmRun, t: usize, p: usize, c: Color) -> Vec<usize> {
    let vt = run.seq.get(t).v;
    let avoid = avoided_neighbors(run, t, p);
    let mut cand: Vec<(usize, usize)> = run
        .g
        .neighbors(vt)
        .iter()
        .copied()
        .filter(|&w| !run.bounding.in_p(w) && !avoid.contains(&w))
        .filter_map(|w| {
            let ex = exchangeable(run, w, t);
            ex.contains(c).then_some((ex.len(), w))
        })
        .collect();
    cand.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    cand.into_iter().map(|(_, w)| w).collect()
}

/// Why a local non-Markovian edit was not applied: `0` marks a failed
/// precondition, `1..=6` the failed well-definedness bullet.
pub type NmBullet = u8;

/// Everything the local non-Markovian edit at time `t` needs.
#[derive(Clone, Debug, Serialize)]
pub struct NmContext {
    pub t: usize,
    pub v: usize,
    pub p: usize,
    pub hstar: [Color; 2],
    pub c_b: Color,
    pub c_u: Color,
    /// Neighbors of `v_t` outside `P` carrying `c_b` at time `t - 1`.
    pub blocking: Vec<usize>,
    pub swap_b: Vec<usize>,
    pub swap_u: Vec<usize>,
    pub avoided: Vec<usize>,
    pub ex: BTreeMap<usize, ColorSet>,
}

impl NmContext {
    /// Complementary neighbor of `z`: the vertex at the same rank in the
    /// swap set for `c_u`.
    pub fn alpha(&self, z: usize) -> Option<usize> {
        let i = self.swap_b.iter().position(|&w| w == z)?;
        self.swap_u.get(i).copied()
    }

    /// Complementary color map for `z`, matching the ascending exchangeable
    /// colors of `alpha(z)` to those of `z` by rank.
    pub fn beta(&self, z: usize, c: Color) -> Option<Color> {
        let a = self.alpha(z)?;
        let i = self.ex.get(&a)?.iter().position(|x| x == c)?;
        self.ex.get(&z)?.iter().nth(i)
    }

    /// `B ∪ alpha(B)`, ascending.
    pub fn temp(&self) -> Vec<usize> {
        let mut w: BTreeSet<usize> = self.blocking.iter().copied().collect();
        w.extend(self.blocking.iter().filter_map(|&b| self.alpha(b)));
        w.into_iter().collect()
    }
}

/// Checks the preconditions for a non-Markovian edit at time `t` and builds
/// its context. With `hstar = None` the color pair is `{X_{t-1}(p), c_t}`;
/// otherwise the given pair is used and must contain `c_t`.
pub fn nm_prelim(run: &NmRun, t: usize, hstar: Option<[Color; 2]>) -> std::result::Result<NmContext, NmBullet> {
    let upd = run.seq.get(t);
    let (vt, ct) = (upd.v, upd.c);
    let b = run.bounding;
    let hazardous = run
        .g
        .neighbors(vt)
        .iter()
        .any(|&w| b.in_p_at(w, t - 1) && b.z_at(w, t - 1).contains(ct));
    if !hazardous {
        return Err(0);
    }
    let p = *run.g.neighbors(vt).iter().find(|&&w| b.in_p_at(w, t - 1)).ok_or(0u8)?;
    let x = |w: usize| run.traj.color_at(w, t - 1);
    let hstar = match hstar {
        None => {
            if ct == x(p) {
                return Err(0);
            }
            [x(p), ct]
        }
        Some(h) => {
            if h[0] == h[1] || (ct != h[0] && ct != h[1]) {
                return Err(0);
            }
            h
        }
    };
    let outside: Vec<usize> = run.g.neighbors(vt).iter().copied().filter(|&w| !b.in_p(w)).collect();
    let seen: Vec<Color> = hstar.iter().copied().filter(|&c| outside.iter().any(|&w| x(w) == c)).collect();
    if seen.len() != 1 {
        return Err(0);
    }
    let c_b = seen[0];
    let c_u = if hstar[0] == c_b { hstar[1] } else { hstar[0] };
    let blocking: Vec<usize> = outside.iter().copied().filter(|&w| x(w) == c_b).collect();
    if blocking.iter().any(|&w| run.traj.last_success(w, t) == 0) {
        return Err(0);
    }
    let ex: BTreeMap<usize, ColorSet> = outside.iter().map(|&w| (w, exchangeable(run, w, t))).collect();
    Ok(NmContext {
        t,
        v: vt,
        p,
        hstar,
        c_b,
        c_u,
        blocking,
        swap_b: swap_set(run, t, p, c_b),
        swap_u: swap_set(run, t, p, c_u),
        avoided: avoided_neighbors(run, t, p),
        ex,
    })
}

/// Evaluates the six well-definedness bullets in order. The color bullet is
/// checked for vertices whose complementary neighbor is a different vertex.
pub fn nm_well_defined(run: &NmRun, ctx: &NmContext) -> std::result::Result<(), NmBullet> {
    let t = ctx.t;
    let x = |w: usize| run.traj.color_at(w, t - 1);
    if !run.bounding.bc() {
        return Err(1);
    }
    let in_h = |c: Color| ctx.hstar.contains(&c);
    if run
        .g
        .neighbors(ctx.v)
        .iter()
        .any(|&w| w != ctx.p && run.bounding.in_p(w) && in_h(x(w)))
    {
        return Err(2);
    }
    if ctx.blocking.iter().any(|w| ctx.avoided.contains(w)) {
        return Err(3);
    }
    if ctx.blocking.iter().any(|&w| ctx.alpha(w).is_none()) {
        return Err(4);
    }
    for &w in &ctx.blocking {
        let a = ctx.alpha(w).unwrap();
        if a != w {
            match ctx.beta(w, x(a)) {
                Some(c) if !in_h(c) => {}
                _ => return Err(5),
            }
        }
    }
    for &w in &ctx.blocking {
        let a = ctx.alpha(w).unwrap();
        if a != w && ctx.blocking.contains(&a) {
            return Err(6);
        }
    }
    Ok(())
}

/// Coordinates `(time, new color)` rewritten by the non-Markovian edit.
pub fn nm_edits(run: &NmRun, ctx: &NmContext) -> Result<Vec<(usize, Color)>> {
    nm_well_defined(run, ctx)
        .map_err(|b| Error::Contract(format!("non-Markovian edit at t={} fails bullet {b}", ctx.t)))?;
    let t = ctx.t;
    let x = |w: usize, s: usize| run.traj.color_at(w, s);
    let mut new_color: BTreeMap<usize, Color> = BTreeMap::new();
    for &w in &ctx.blocking {
        let a = ctx.alpha(w).unwrap();
        if a == w {
            new_color.insert(w, ctx.c_u);
        } else {
            new_color.insert(w, ctx.beta(w, x(a, t - 1)).unwrap());
            new_color.insert(a, ctx.c_u);
        }
    }
    let mut edits: BTreeMap<usize, Color> = BTreeMap::new();
    let put = |s: usize, c: Color, edits: &mut BTreeMap<usize, Color>| -> Result<()> {
        match edits.insert(s, c) {
            Some(old) if old != c => Err(Error::Contract(format!(
                "non-Markovian edit at t={t} writes time {s} twice ({old} and {c})"
            ))),
            _ => Ok(()),
        }
    };
    for (&w, &c) in &new_color {
        let ep = epoch(run.traj, w, t);
        put(ep.tau_minus, c, &mut edits)?;
        for &u in run.g.neighbors(w) {
            for &s in run.proposals_in(u, ep.tau_minus, ep.tau_plus) {
                if s != t && run.seq.get(s).c == x(w, s - 1) {
                    put(s, c, &mut edits)?;
                }
            }
        }
    }
    let ct = run.seq.get(t).c;
    let other = if ctx.hstar[0] == ct { ctx.hstar[1] } else { ctx.hstar[0] };
    put(t, other, &mut edits)?;
    Ok(edits.into_iter().collect())
}

/// The non-Markovian edit applied to `run.seq`.
pub fn nm_transform(run: &NmRun, ctx: &NmContext) -> Result<UpdateSequence> {
    let mut out = run.seq.clone();
    for (s, c) in nm_edits(run, ctx)? {
        out.set_color(s, c);
    }
    Ok(out)
}

/// Swaps the two colors of `h` at time `t` when `c_t` is one of them.
pub fn jerrum_transform(seq: &UpdateSequence, t: usize, h: &ColorSet) -> UpdateSequence {
    let mut out = seq.clone();
    jerrum_in_place(&mut out, t, h);
    out
}

pub fn jerrum_in_place(seq: &mut UpdateSequence, t: usize, h: &ColorSet) {
    let ct = seq.get(t).c;
    if h.len() == 2 && h.contains(ct) {
        let other = h.iter().find(|&c| c != ct).unwrap();
        seq.set_color(t, other);
    }
}

/// Which run the local non-Markovian edits read their epochs and colors
/// from inside the global map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmReference {
    /// The first chain under the input sequence.
    Fixed,
    /// The second chain under the partially coupled sequence.
    Intermediate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub p_max: usize,
    pub nm_reference: NmReference,
    /// Run the domination, geometry and involution verifiers at every step.
    pub check: bool,
    /// Disable non-Markovian edits; every danger-zone step uses Jerrum.
    pub jerrum_only: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig { p_max: DEFAULT_P_MAX, nm_reference: NmReference::Fixed, check: false, jerrum_only: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Id,
    Jerrum,
    Nm,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingStep {
    pub t: usize,
    pub map: MapKind,
    pub d_size: usize,
    pub temp_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Domination,
    Geometry,
    Involution,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NmFailure {
    pub t: usize,
    pub bullet: NmBullet,
}

/// Output of the global map.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingResult {
    pub z_star: usize,
    pub bc_true: bool,
    #[serde(skip)]
    pub sigma_prime: UpdateSequence,
    pub steps: Vec<CouplingStep>,
    /// `(t, v, joined)` whenever `v` enters or leaves the discrepancy set.
    pub d_events: Vec<(usize, usize, bool)>,
    /// `(t, B ∪ alpha(B))` at every non-Markovian step.
    pub temp_sets: Vec<(usize, Vec<usize>)>,
    pub nm_applied: Vec<usize>,
    pub nm_failed: Vec<NmFailure>,
    pub case_3a: usize,
    /// Danger-zone steps where the two chains disagreed somewhere on the
    /// local pattern read by the edit.
    pub pattern_divergences: usize,
    pub d_final: Vec<usize>,
    pub final_disagreement: Vec<usize>,
    /// Runtime verifier failures, empty when checks are off or all pass.
    pub violations: Vec<Violation>,
}

impl CouplingResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "bc_true": self.bc_true,
            "z_star": self.z_star,
            "nm_applied": self.nm_applied,
            "nm_failed": self.nm_failed,
            "steps": self.steps,
            "case_3a": self.case_3a,
            "final_disagreement": self.final_disagreement,
            "violations": self.violations,
        })
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_json())?;
        Ok(())
    }
}

/// The global coupling: maps the sequence `sigma` driving `x0` to the
/// sequence driving `y0`. Identity unless the bounding predicate holds.
pub fn global_coupling(
    g: &Graph,
    x0: &Labeling,
    y0: &Labeling,
    sigma: &UpdateSequence,
    cfg: &CouplingConfig,
) -> Result<CouplingResult> {
    sigma.validate(g.n(), x0.k())?;
    let bounding = run_bounding_chain(g, x0, y0, sigma, cfg.p_max)?;
    let z_star = bounding.z_star();
    let big_t = sigma.len();
    if !bounding.bc() {
        let (_, fin) = hamming(&crate::dynamics::run_to_end(g, x0, sigma), &crate::dynamics::run_to_end(g, y0, sigma));
        return Ok(CouplingResult {
            z_star,
            bc_true: false,
            sigma_prime: sigma.clone(),
            steps: (1..=big_t).map(|t| CouplingStep { t, map: MapKind::Id, d_size: 0, temp_size: 0 }).collect(),
            d_events: Vec::new(),
            temp_sets: Vec::new(),
            nm_applied: Vec::new(),
            nm_failed: Vec::new(),
            case_3a: 0,
            pattern_divergences: 0,
            d_final: Vec::new(),
            final_disagreement: fin,
            violations: Vec::new(),
        });
    }
    let tx = evolve(g, x0, sigma, &[]);
    let props = sigma.proposal_times(g.n());
    let mut eta = sigma.clone();
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut d: BTreeSet<usize> = BTreeSet::from([z_star]);
    let mut temp_all: BTreeSet<usize> = BTreeSet::new();
    let mut diff: BTreeSet<usize> = BTreeSet::from([z_star]);
    let mut out = CouplingResult {
        z_star,
        bc_true: true,
        sigma_prime: UpdateSequence::new(Vec::new()),
        steps: Vec::with_capacity(big_t),
        d_events: Vec::new(),
        temp_sets: Vec::new(),
        nm_applied: Vec::new(),
        nm_failed: Vec::new(),
        case_3a: 0,
        pattern_divergences: 0,
        d_final: Vec::new(),
        final_disagreement: Vec::new(),
        violations: Vec::new(),
    };
    for t in 1..=big_t {
        let upd = eta.get(t);
        let (v, c) = (upd.v, upd.c);
        let mut map = MapKind::Id;
        let mut replay = false;
        if d.contains(&v) {
            if x.is_available(g, v, c) {
                d.remove(&v);
                out.d_events.push((t, v, false));
            }
        } else if let Some(&p) = g.neighbors(v).iter().find(|w| d.contains(w)) {
            let h = ColorSet::from_colors(x.k(), [x.get(p), y.get(p)]);
            if h.len() == 1 {
                out.case_3a += 1;
            } else if c != y.get(p) {
                jerrum_in_place(&mut eta, t, &h);
                map = MapKind::Jerrum;
            } else {
                // Danger zone: c_t is the second chain's color at p.
                let pattern = ColorSet::from_colors(
                    x.k(),
                    g.neighbors(v).iter().filter(|&&w| w != p).map(|&w| x.get(w)),
                );
                if g.neighbors(v).iter().any(|&w| w != p && x.get(w) != y.get(w)) {
                    out.pattern_divergences += 1;
                }
                let seen = h.intersection(&pattern);
                let mut join = true;
                if seen == h {
                    join = false;
                    jerrum_in_place(&mut eta, t, &h);
                    map = MapKind::Jerrum;
                } else if seen.len() == 1 && !cfg.jerrum_only {
                    let hstar = [x.get(p), y.get(p)];
                    match try_nm(g, x0, y0, &tx, sigma, &eta, &props, &bounding, t, hstar, cfg, &mut out) {
                        Ok((edited, w)) => {
                            eta = edited;
                            map = MapKind::Nm;
                            replay = true;
                            join = !seen.contains(c);
                            temp_all.extend(w.iter().copied());
                            out.temp_sets.push((t, w));
                            out.nm_applied.push(t);
                        }
                        Err(bullet) => {
                            out.nm_failed.push(NmFailure { t, bullet });
                            jerrum_in_place(&mut eta, t, &h);
                            map = MapKind::Jerrum;
                        }
                    }
                } else {
                    jerrum_in_place(&mut eta, t, &h);
                    map = MapKind::Jerrum;
                }
                if join {
                    d.insert(v);
                    out.d_events.push((t, v, true));
                }
            }
        }
        // Advance both chains to time t.
        metropolis_step(g, &mut x, sigma.get(t));
        if replay {
            y = y0.clone();
            for s in 1..=t {
                metropolis_step(g, &mut y, eta.get(s));
            }
            diff = (0..g.n()).filter(|&u| x.get(u) != y.get(u)).collect();
        } else {
            metropolis_step(g, &mut y, eta.get(t));
            if x.get(v) != y.get(v) {
                diff.insert(v);
            } else {
                diff.remove(&v);
            }
        }
        if cfg.check {
            check_domination(&bounding, t, &x, &y, &d, &temp_all, &diff, &mut out.violations);
        }
        out.steps.push(CouplingStep { t, map, d_size: d.len(), temp_size: out.temp_sets.last().filter(|s| s.0 == t).map_or(0, |s| s.1.len()) });
    }
    out.d_final = d.into_iter().collect();
    out.final_disagreement = diff.into_iter().collect();
    out.sigma_prime = eta;
    Ok(out)
}

/// Builds and applies the local edit at a danger-zone step. Returns the
/// edited sequence and `B ∪ alpha(B)`, or the failed bullet.
#[allow(clippy::too_many_arguments)]
fn try_nm(
    g: &Graph,
    x0: &Labeling,
    y0: &Labeling,
    tx: &Trajectory,
    sigma: &UpdateSequence,
    eta: &UpdateSequence,
    props: &[Vec<usize>],
    bounding: &BoundingTrace,
    t: usize,
    hstar: [Color; 2],
    cfg: &CouplingConfig,
    out: &mut CouplingResult,
) -> std::result::Result<(UpdateSequence, Vec<usize>), NmBullet> {
    let ty;
    let traj = match cfg.nm_reference {
        NmReference::Fixed => tx,
        NmReference::Intermediate => {
            ty = evolve(g, y0, eta, &[]);
            &ty
        }
    };
    let run = NmRun { g, traj, seq: eta, props, bounding };
    let ctx = nm_prelim(&run, t, Some(hstar))?;
    if ctx.p != *g.neighbors(ctx.v).iter().find(|&&w| bounding.in_p_at(w, t - 1)).unwrap() {
        return Err(0);
    }
    nm_well_defined(&run, &ctx)?;
    let edits = nm_edits(&run, &ctx).map_err(|_| 0u8)?;
    let mut edited = eta.clone();
    for &(s, c) in &edits {
        edited.set_color(s, c);
    }
    let w = ctx.temp();
    if cfg.check {
        check_geometry(g, bounding, &ctx, &w, &mut out.violations);
        check_involution(g, x0, sigma, props, bounding, t, hstar, &mut out.violations);
    }
    Ok((edited, w))
}

#[allow(clippy::too_many_arguments)]
fn check_domination(
    bounding: &BoundingTrace,
    t: usize,
    x: &Labeling,
    y: &Labeling,
    d: &BTreeSet<usize>,
    temp: &BTreeSet<usize>,
    diff: &BTreeSet<usize>,
    violations: &mut Vec<Violation>,
) {
    for &u in diff {
        if !d.contains(&u) && !temp.contains(&u) {
            violations.push(Violation { kind: ViolationKind::Domination, t, detail: format!("vertex {u} disagrees outside D and Temp") });
        }
    }
    for &u in d {
        if x.get(u) == y.get(u) {
            violations.push(Violation { kind: ViolationKind::Domination, t, detail: format!("vertex {u} in D but chains agree") });
        }
        let z = bounding.z_at(u, t);
        if !z.contains(x.get(u)) || !z.contains(y.get(u)) {
            violations.push(Violation { kind: ViolationKind::Domination, t, detail: format!("colors at {u} escape Z_t") });
        }
        if !bounding.in_p_at(u, t) {
            violations.push(Violation { kind: ViolationKind::Domination, t, detail: format!("vertex {u} in D but not in P_t") });
        }
    }
}

fn check_geometry(g: &Graph, bounding: &BoundingTrace, ctx: &NmContext, w: &[usize], violations: &mut Vec<Violation>) {
    let t = ctx.t;
    for (i, &a) in w.iter().enumerate() {
        for &b in &w[i + 1..] {
            if g.has_edge(a, b) {
                violations.push(Violation { kind: ViolationKind::Geometry, t, detail: format!("Temp vertices {a} and {b} are adjacent") });
            }
        }
        let in_p: Vec<usize> = g.neighbors(a).iter().copied().filter(|&u| bounding.in_p(u)).collect();
        if in_p != [ctx.v] {
            violations.push(Violation { kind: ViolationKind::Geometry, t, detail: format!("Temp vertex {a} has P-neighbors {in_p:?}") });
        }
    }
}

/// Applies the local edit to the first chain's own sequence and checks that
/// a second application with the same color pair restores it.
#[allow(clippy::too_many_arguments)]
fn check_involution(
    g: &Graph,
    x0: &Labeling,
    sigma: &UpdateSequence,
    props: &[Vec<usize>],
    bounding: &BoundingTrace,
    t: usize,
    hstar: [Color; 2],
    violations: &mut Vec<Violation>,
) {
    let tx = evolve(g, x0, sigma, &[]);
    let run = NmRun { g, traj: &tx, seq: sigma, props, bounding };
    let once = match nm_prelim(&run, t, Some(hstar)).ok().filter(|c| nm_well_defined(&run, c).is_ok()) {
        Some(ctx) => nm_transform(&run, &ctx),
        None => return,
    };
    let Ok(once) = once else {
        violations.push(Violation { kind: ViolationKind::Involution, t, detail: "edit failed on the first chain's sequence".into() });
        return;
    };
    let tx2 = evolve(g, x0, &once, &[]);
    let run2 = NmRun { g, traj: &tx2, seq: &once, props, bounding };
    let twice = nm_prelim(&run2, t, Some(hstar))
        .map_err(|b| format!("precondition {b}"))
        .and_then(|ctx| {
            nm_well_defined(&run2, &ctx).map_err(|b| format!("bullet {b}"))?;
            nm_transform(&run2, &ctx).map_err(|e| e.to_string())
        });
    match twice {
        Ok(s) if &s == sigma => {}
        Ok(_) => violations.push(Violation { kind: ViolationKind::Involution, t, detail: "second edit does not restore the sequence".into() }),
        Err(e) => violations.push(Violation { kind: ViolationKind::Involution, t, detail: format!("second edit undefined ({e})") }),
    }
}

/// Whether mapping forward and then back with the roles of the start
/// labelings exchanged returns `sigma` exactly.
pub fn reverse_check(g: &Graph, x0: &Labeling, y0: &Labeling, sigma: &UpdateSequence, cfg: &CouplingConfig) -> Result<bool> {
    let fwd = global_coupling(g, x0, y0, sigma, cfg)?;
    let back = global_coupling(g, y0, x0, &fwd.sigma_prime, cfg)?;
    Ok(&back.sigma_prime == sigma)
}

/// Whether the bounding chain driven by `sigma_prime` has the same
/// multivalued sets at every time and the same sets on them as for `sigma`.
pub fn bounding_invariance(
    g: &Graph,
    x0: &Labeling,
    y0: &Labeling,
    sigma: &UpdateSequence,
    sigma_prime: &UpdateSequence,
    p_max: usize,
) -> Result<bool> {
    let a = run_bounding_chain(g, x0, y0, sigma, p_max)?;
    let b = run_bounding_chain(g, x0, y0, sigma_prime, p_max)?;
    if a.bc() != b.bc() || a.p_final() != b.p_final() {
        return Ok(false);
    }
    for t in 0..=sigma.len() {
        for &v in a.p_final() {
            if a.in_p_at(v, t) != b.in_p_at(v, t) {
                return Ok(false);
            }
            if a.in_p_at(v, t) && a.z_at(v, t) != b.z_at(v, t) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
