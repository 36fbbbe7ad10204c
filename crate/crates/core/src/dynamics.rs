//! Labelings, update sequences and the Metropolis step on the space of all
//! labelings, plus trajectories, continuous-time simulation and Hamming
//! machinery.

use std::io::{BufRead, Write};

use rand::Rng as _;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::colorset::{Color, ColorSet};
use crate::error::{Error, Result};
use crate::graph::{parse_usizes, Graph};
use crate::rng::{seeded, Rng};

/// An assignment of colors in `1..=k` to every vertex. Need not be proper.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Labeling {
    k: u32,
    colors: Vec<Color>,
}

impl Labeling {
    pub fn new(k: u32, colors: Vec<Color>) -> Result<Self> {
        if let Some(&c) = colors.iter().find(|&&c| c == 0 || c > k) {
            return Err(Error::ColorOutOfRange { color: c, k });
        }
        Ok(Labeling { k, colors })
    }

    /// Every vertex colored 1.
    pub fn constant(n: usize, k: u32) -> Self {
        Labeling { k, colors: vec![1; n] }
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.colors.len()
    }

    #[inline]
    pub fn get(&self, v: usize) -> Color {
        self.colors[v]
    }

    #[inline]
    pub fn set(&mut self, v: usize, c: Color) {
        debug_assert!(c >= 1 && c <= self.k);
        self.colors[v] = c;
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn is_proper(&self, g: &Graph) -> bool {
        g.edges().all(|(u, v)| self.colors[u] != self.colors[v])
    }

    /// Whether `c` appears on no neighbor of `v`.
    #[inline]
    pub fn is_available(&self, g: &Graph, v: usize, c: Color) -> bool {
        g.neighbors(v).iter().all(|&w| self.colors[w] != c)
    }

    /// Greedy proper coloring in vertex order; requires `k > max degree`.
    pub fn greedy_proper(g: &Graph, k: u32) -> Result<Self> {
        let mut x = Labeling::constant(g.n(), k);
        for v in 0..g.n() {
            let used = ColorSet::from_colors(k, g.neighbors(v).iter().filter(|&&w| w < v).map(|&w| x.colors[w]));
            let c = (1..=k)
                .find(|&c| !used.contains(c))
                .ok_or_else(|| Error::Input(format!("k: {k} colors do not suffice for a greedy coloring")))?;
            x.colors[v] = c;
        }
        Ok(x)
    }
}

/// A proposal: recolor vertex `v` to color `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Update {
    pub v: usize,
    pub c: Color,
}

/// Ordered proposals `(v_1, c_1), ..., (v_T, c_T)`. Times are 1-based:
/// `get(t)` is the proposal at time `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct UpdateSequence {
    steps: Vec<Update>,
}

impl UpdateSequence {
    pub fn new(steps: Vec<Update>) -> Self {
        UpdateSequence { steps }
    }

    pub fn validate(&self, n: usize, k: u32) -> Result<()> {
        for u in &self.steps {
            if u.v >= n {
                return Err(Error::VertexOutOfRange { vertex: u.v, n });
            }
            if u.c == 0 || u.c > k {
                return Err(Error::ColorOutOfRange { color: u.c, k });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    #[inline]
    pub fn get(&self, t: usize) -> Update {
        self.steps[t - 1]
    }

    #[inline]
    pub fn set_color(&mut self, t: usize, c: Color) {
        self.steps[t - 1].c = c;
    }

    pub fn steps(&self) -> &[Update] {
        &self.steps
    }

    /// For every vertex, the ascending times at which it is proposed.
    pub fn proposal_times(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); n];
        for (i, u) in self.steps.iter().enumerate() {
            out[u.v].push(i + 1);
        }
        out
    }
}

/// `A(x, v)`: colors carried by no neighbor of `v`.
pub fn available_colors(g: &Graph, x: &Labeling, v: usize) -> ColorSet {
    let mut a = ColorSet::full(x.k);
    for &w in g.neighbors(v) {
        a.remove(x.colors[w]);
    }
    a
}

/// `A_v(x, w)`: colors carried by no neighbor of `w` other than `v`.
pub fn available_colors_excluding(g: &Graph, x: &Labeling, w: usize, v: usize) -> ColorSet {
    let mut a = ColorSet::full(x.k);
    for &u in g.neighbors(w) {
        if u != v {
            a.remove(x.colors[u]);
        }
    }
    a
}

/// Applies one Metropolis proposal in place and reports acceptance. The
/// proposal is accepted iff no neighbor carries the proposed color; this
/// rule applies to improper labelings too.
#[inline]
pub fn metropolis_step(g: &Graph, x: &mut Labeling, upd: Update) -> bool {
    if x.is_available(g, upd.v, upd.c) {
        x.colors[upd.v] = upd.c;
        true
    } else {
        false
    }
}

/// Replay of a labeling under an update sequence, with random access to
/// the state of any vertex at any time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    initial: Labeling,
    final_state: Labeling,
    accepted: Vec<bool>,
    /// Per vertex: ascending `(time, new color)` for successful updates.
    successes: Vec<Vec<(usize, Color)>>,
    checkpoints: Vec<(usize, Labeling)>,
}

impl Trajectory {
    pub fn initial(&self) -> &Labeling {
        &self.initial
    }

    pub fn final_state(&self) -> &Labeling {
        &self.final_state
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// Whether the proposal at time `t` (1-based) was accepted.
    pub fn accepted(&self, t: usize) -> bool {
        self.accepted[t - 1]
    }

    pub fn acceptance_flags(&self) -> &[bool] {
        &self.accepted
    }

    pub fn checkpoints(&self) -> &[(usize, Labeling)] {
        &self.checkpoints
    }

    /// Successful updates of `v` as `(time, new color)`.
    pub fn successes(&self, v: usize) -> &[(usize, Color)] {
        &self.successes[v]
    }

    /// `X_s(v)`: the color of `v` after the first `s` steps.
    pub fn color_at(&self, v: usize, s: usize) -> Color {
        let list = &self.successes[v];
        let i = list.partition_point(|&(time, _)| time <= s);
        if i == 0 {
            self.initial.get(v)
        } else {
            list[i - 1].1
        }
    }

    /// Last successful update time of `v` in `[1, t]`, or 0.
    pub fn last_success(&self, v: usize, t: usize) -> usize {
        let list = &self.successes[v];
        let i = list.partition_point(|&(time, _)| time <= t);
        if i == 0 {
            0
        } else {
            list[i - 1].0
        }
    }

    /// First successful update time of `v` in `(t, T]`, or `T + 1`.
    pub fn next_success(&self, v: usize, t: usize) -> usize {
        let list = &self.successes[v];
        let i = list.partition_point(|&(time, _)| time <= t);
        list.get(i).map(|&(time, _)| time).unwrap_or(self.len() + 1)
    }

    /// Full labeling after `s` steps.
    pub fn state_at(&self, s: usize) -> Labeling {
        let colors = (0..self.initial.n()).map(|v| self.color_at(v, s)).collect();
        Labeling { k: self.initial.k, colors }
    }
}

/// Folds [`metropolis_step`] over `seq`, materializing the labeling after
/// each listed checkpoint time.
pub fn evolve(g: &Graph, x0: &Labeling, seq: &UpdateSequence, checkpoints: &[usize]) -> Trajectory {
    let mut x = x0.clone();
    let mut accepted = Vec::with_capacity(seq.len());
    let mut successes = vec![Vec::new(); x0.n()];
    let mut cps: Vec<usize> = checkpoints.to_vec();
    cps.sort_unstable();
    let mut next_cp = cps.iter().peekable();
    let mut materialized = Vec::new();
    while next_cp.peek() == Some(&&0) {
        materialized.push((0, x.clone()));
        next_cp.next();
    }
    for (i, &u) in seq.steps.iter().enumerate() {
        let ok = metropolis_step(g, &mut x, u);
        accepted.push(ok);
        if ok {
            successes[u.v].push((i + 1, u.c));
        }
        while next_cp.peek() == Some(&&(i + 1)) {
            materialized.push((i + 1, x.clone()));
            next_cp.next();
        }
    }
    Trajectory { initial: x0.clone(), final_state: x, accepted, successes, checkpoints: materialized }
}

/// Final labeling only, without building the trajectory index.
pub fn run_to_end(g: &Graph, x0: &Labeling, seq: &UpdateSequence) -> Labeling {
    let mut x = x0.clone();
    for &u in &seq.steps {
        metropolis_step(g, &mut x, u);
    }
    x
}

/// `T` i.i.d. proposals, uniform vertex and uniform color.
pub fn sample_update_sequence(n: usize, k: u32, t: usize, seed: u64) -> UpdateSequence {
    sample_updates_with(&mut seeded(seed), n, k, t)
}

pub fn sample_updates_with(rng: &mut Rng, n: usize, k: u32, t: usize) -> UpdateSequence {
    let steps = (0..t)
        .map(|_| Update { v: rng.random_range(0..n), c: rng.random_range(1..=k) })
        .collect();
    UpdateSequence { steps }
}

/// One continuous-time proposal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtEvent {
    pub time: f64,
    pub v: usize,
    pub c: Color,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct CtRun {
    pub events: Vec<CtEvent>,
    pub final_state: Labeling,
}

/// Continuous-time dynamics with an independent rate-1 proposal clock per
/// vertex, simulated as one rate-`n` clock with a uniform vertex per ring.
pub fn ct_simulate(g: &Graph, x0: &Labeling, t_end: f64, seed: u64) -> CtRun {
    ct_simulate_with(g, x0, t_end, &mut seeded(seed))
}

pub fn ct_simulate_with(g: &Graph, x0: &Labeling, t_end: f64, rng: &mut Rng) -> CtRun {
    let n = g.n();
    let mut x = x0.clone();
    let mut events = Vec::new();
    if n == 0 || t_end <= 0.0 {
        return CtRun { events, final_state: x };
    }
    let clock = Exp::new(n as f64).expect("positive rate");
    let mut time = 0.0;
    loop {
        time += clock.sample(rng);
        if time > t_end {
            break;
        }
        let u = Update { v: rng.random_range(0..n), c: rng.random_range(1..=x.k) };
        let accepted = metropolis_step(g, &mut x, u);
        events.push(CtEvent { time, v: u.v, c: u.c, accepted });
    }
    CtRun { events, final_state: x }
}

/// Number of disagreeing vertices and their ascending list.
pub fn hamming(x: &Labeling, y: &Labeling) -> (usize, Vec<usize>) {
    let d: Vec<usize> = (0..x.n()).filter(|&v| x.colors[v] != y.colors[v]).collect();
    (d.len(), d)
}

/// `x = Z_0, ..., Z_d = y` changing one disagreeing vertex at a time in
/// ascending vertex order.
pub fn hamming_interpolation(x: &Labeling, y: &Labeling) -> Vec<Labeling> {
    let (_, diff) = hamming(x, y);
    let mut out = Vec::with_capacity(diff.len() + 1);
    let mut cur = x.clone();
    out.push(cur.clone());
    for v in diff {
        cur.colors[v] = y.colors[v];
        out.push(cur.clone());
    }
    out
}

/// Reads `n k` followed by `n` colors (any whitespace layout).
pub fn read_labeling<R: BufRead>(r: R) -> Result<Labeling> {
    let mut tokens = Vec::new();
    for (i, l) in r.lines().enumerate() {
        let l = l?;
        for tok in l.split_whitespace() {
            let v: u64 = tok.parse().map_err(|e| Error::Parse { line: i + 1, msg: format!("{e}") })?;
            tokens.push((i + 1, v));
        }
    }
    if tokens.len() < 2 {
        return Err(Error::Parse { line: 1, msg: "missing header 'n k'".into() });
    }
    let n = tokens[0].1 as usize;
    let k = tokens[1].1 as u32;
    let colors: Vec<Color> = tokens[2..].iter().map(|&(_, c)| c as Color).collect();
    if colors.len() != n {
        return Err(Error::Parse {
            line: tokens.last().unwrap().0,
            msg: format!("expected {n} colors, found {}", colors.len()),
        });
    }
    Labeling::new(k, colors)
}

pub fn write_labeling<W: Write>(x: &Labeling, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", x.n(), x.k)?;
    for c in &x.colors {
        writeln!(w, "{c}")?;
    }
    Ok(())
}

/// Reads `T` followed by `T` lines `v c`.
pub fn read_update_sequence<R: BufRead>(r: R) -> Result<UpdateSequence> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let (ln, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header 'T'".into() })?;
    let t = parse_usizes(&header?, ln, 1)?[0];
    let mut steps = Vec::with_capacity(t);
    for _ in 0..t {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln + steps.len() + 1,
            msg: format!("expected {t} updates, found {}", steps.len()),
        })?;
        let vc = parse_usizes(&l?, ln, 2)?;
        steps.push(Update { v: vc[0], c: vc[1] as Color });
    }
    Ok(UpdateSequence { steps })
}

pub fn write_update_sequence<W: Write>(seq: &UpdateSequence, mut w: W) -> Result<()> {
    writeln!(w, "{}", seq.len())?;
    for u in &seq.steps {
        writeln!(w, "{} {}", u.v, u.c)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, path, star};
    use proptest::prelude::*;

    fn lab(k: u32, c: &[Color]) -> Labeling {
        Labeling::new(k, c.to_vec()).unwrap()
    }

    #[test]
    fn available_examples() {
        let s = star(3).unwrap();
        let x = lab(5, &[1, 1, 2, 2]);
        assert_eq!(available_colors(&s, &x, 0).to_vec(), vec![3, 4, 5]);
        let iso = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(available_colors(&iso, &lab(4, &[2]), 0).to_vec(), vec![1, 2, 3, 4]);
        let e = path(2).unwrap();
        assert_eq!(available_colors(&e, &lab(3, &[1, 3]), 0).to_vec(), vec![1, 2]);
        assert_eq!(available_colors_excluding(&s, &x, 0, 1).to_vec(), vec![1, 3, 4, 5]);
    }

    #[test]
    fn step_examples() {
        let e = path(2).unwrap();
        let mut x = lab(3, &[1, 2]);
        assert!(!metropolis_step(&e, &mut x, Update { v: 0, c: 2 }));
        assert_eq!(x, lab(3, &[1, 2]));
        assert!(metropolis_step(&e, &mut x, Update { v: 0, c: 3 }));
        assert_eq!(x, lab(3, &[3, 2]));
        let mut y = lab(3, &[1, 1]);
        assert!(!metropolis_step(&e, &mut y, Update { v: 0, c: 1 }));
        assert_eq!(y, lab(3, &[1, 1]));
    }

    #[test]
    fn evolve_examples() {
        let p = path(3).unwrap();
        let x0 = lab(3, &[1, 2, 1]);
        let empty = evolve(&p, &x0, &UpdateSequence::new(vec![]), &[0]);
        assert_eq!(empty.final_state(), &x0);
        let seq = UpdateSequence::new(vec![Update { v: 1, c: 3 }, Update { v: 0, c: 2 }]);
        let tr = evolve(&p, &x0, &seq, &[1, 2]);
        assert_eq!(tr.final_state(), &lab(3, &[2, 3, 1]));
        assert_eq!(tr.acceptance_flags(), &[true, true]);
        assert_eq!(tr.color_at(1, 0), 2);
        assert_eq!(tr.color_at(1, 1), 3);
        assert_eq!(tr.last_success(0, 1), 0);
        assert_eq!(tr.next_success(0, 1), 2);
        assert_eq!(tr.next_success(1, 1), 3);
        assert_eq!(tr.checkpoints()[0], (1, lab(3, &[1, 3, 1])));
        let blocked = UpdateSequence::new(vec![Update { v: 0, c: 2 }; 7]);
        assert_eq!(evolve(&p, &x0, &blocked, &[]).final_state(), &x0);
    }

    #[test]
    fn sampling_examples() {
        assert!(sample_update_sequence(5, 3, 0, 1).is_empty());
        assert_eq!(sample_update_sequence(9, 4, 50, 7), sample_update_sequence(9, 4, 50, 7));
        let s = sample_update_sequence(1, 1, 5, 3);
        assert!(s.steps().iter().all(|&u| u == Update { v: 0, c: 1 }));
    }

    #[test]
    fn ct_examples() {
        let g = cycle(10).unwrap();
        let x0 = Labeling::greedy_proper(&g, 4).unwrap();
        let r = ct_simulate(&g, &x0, 0.0, 1);
        assert!(r.events.is_empty());
        assert_eq!(r.final_state, x0);
        let iso = Graph::from_edges(1, &[]).unwrap();
        let r = ct_simulate(&iso, &lab(2, &[1]), 50.0, 2);
        assert!(r.events.iter().all(|e| e.accepted));
        assert!(r.events.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn ct_ring_count_matches_poisson_mean() {
        // Ring count over [0, t] on n vertices is Poisson(n t).
        let g = cycle(20).unwrap();
        let x0 = Labeling::greedy_proper(&g, 5).unwrap();
        let t = 50.0;
        let mean = 20.0 * t;
        for seed in 0..20 {
            let count = ct_simulate(&g, &x0, t, seed).events.len() as f64;
            assert!((count - mean).abs() < 5.0 * mean.sqrt(), "count {count}");
        }
    }

    #[test]
    fn interpolation_examples() {
        let x = lab(4, &[1, 1, 1, 1, 1, 1]);
        assert_eq!(hamming_interpolation(&x, &x), vec![x.clone()]);
        let y = lab(4, &[1, 1, 3, 1, 1, 4]);
        let path = hamming_interpolation(&x, &y);
        assert_eq!(path.len(), 3);
        assert_eq!(path[1], lab(4, &[1, 1, 3, 1, 1, 1]));
        assert_eq!(hamming(&x, &y), (2, vec![2, 5]));
    }

    #[test]
    fn one_step_matrix_is_symmetric_with_uniform_stationary_vector() {
        // Path on 3 vertices, k = 3: enumerate proper colorings and all n k
        // proposals to build the exact transition matrix.
        let g = path(3).unwrap();
        let k = 3;
        let mut states = Vec::new();
        for a in 1..=k {
            for b in 1..=k {
                for c in 1..=k {
                    let x = lab(k, &[a, b, c]);
                    if x.is_proper(&g) {
                        states.push(x);
                    }
                }
            }
        }
        assert_eq!(states.len(), 12);
        let idx = |x: &Labeling| states.iter().position(|s| s == x).unwrap();
        let m = states.len();
        let mut p = vec![vec![0.0; m]; m];
        let w = 1.0 / (3.0 * k as f64);
        for (i, x) in states.iter().enumerate() {
            for v in 0..3 {
                for c in 1..=k {
                    let mut y = x.clone();
                    metropolis_step(&g, &mut y, Update { v, c });
                    assert!(y.is_proper(&g));
                    p[i][idx(&y)] += w;
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                assert!((p[i][j] - p[j][i]).abs() < 1e-12);
            }
            let col: f64 = (0..m).map(|r| p[r][i] / m as f64).sum();
            assert!((col - 1.0 / m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn file_formats() {
        let x = lab(4, &[1, 2, 3]);
        let mut buf = Vec::new();
        write_labeling(&x, &mut buf).unwrap();
        assert_eq!(read_labeling(&buf[..]).unwrap(), x);
        assert!(matches!(read_labeling(&b"2 3\n1 4\n"[..]), Err(Error::ColorOutOfRange { .. })));
        let s = sample_update_sequence(4, 3, 6, 1);
        let mut buf = Vec::new();
        write_update_sequence(&s, &mut buf).unwrap();
        assert_eq!(read_update_sequence(&buf[..]).unwrap(), s);
    }

    proptest! {
        #[test]
        fn proper_colorings_stay_proper(seed in 0u64..200, n in 3usize..15) {
            let g = cycle(n).unwrap();
            let x0 = Labeling::greedy_proper(&g, 4).unwrap();
            let seq = sample_update_sequence(n, 4, 200, seed);
            let cps: Vec<usize> = (0..=200).step_by(10).collect();
            let tr = evolve(&g, &x0, &seq, &cps);
            for (_, x) in tr.checkpoints() {
                prop_assert!(x.is_proper(&g));
            }
            let again = evolve(&g, &x0, &seq, &cps);
            prop_assert_eq!(again.acceptance_flags(), tr.acceptance_flags());
            prop_assert_eq!(tr.state_at(200), tr.final_state().clone());
        }

        #[test]
        fn available_lower_bound(seed in 0u64..200) {
            let g = crate::graph::random_tree(12, seed).unwrap();
            let seq = sample_update_sequence(12, 5, 30, seed);
            let x = run_to_end(&g, &Labeling::constant(12, 5), &seq);
            for v in 0..12 {
                prop_assert!(available_colors(&g, &x, v).len() + g.degree(v) >= 5);
            }
        }
    }
}
