//! Static undirected graphs in compressed adjacency form, neighborhood
//! queries, girth, induced-subgraph acyclicity, the inward-directed
//! graph around a center, and generators.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Undirected simple graph on vertices `0..n` with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    nbrs: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops and repeated edges are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::Input(format!("self-loop at vertex {u}")));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        for (u, l) in lists.iter_mut().enumerate() {
            l.sort_unstable();
            if l.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Input(format!("repeated edge at vertex {u}")));
            }
        }
        Ok(Self::from_sorted_lists(lists))
    }

    fn from_sorted_lists(lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut nbrs = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for l in lists {
            nbrs.extend_from_slice(&l);
            offsets.push(nbrs.len());
        }
        Graph { offsets, nbrs }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.nbrs.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.nbrs[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    /// Hop distances from a seed set, truncated at `max_r`. Unreached
    /// vertices map to `None`.
    pub fn distances(&self, seeds: &[usize], max_r: usize) -> Result<Vec<Option<usize>>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        for &s in seeds {
            self.check_vertex(s)?;
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            if du == max_r {
                continue;
            }
            for &w in self.neighbors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Vertices within hop distance `r` of the seeds, sorted ascending.
    pub fn ball(&self, seeds: &[usize], r: usize) -> Result<Vec<usize>> {
        let d = self.distances(seeds, r)?;
        Ok((0..self.n()).filter(|&v| d[v].is_some()).collect())
    }

    /// Vertices at hop distance exactly `r` from the seeds.
    pub fn sphere(&self, seeds: &[usize], r: usize) -> Result<Vec<usize>> {
        let d = self.distances(seeds, r)?;
        Ok((0..self.n()).filter(|&v| d[v] == Some(r)).collect())
    }

    /// `B_r(seeds)` minus the seeds themselves.
    pub fn neighborhood(&self, seeds: &[usize], r: usize) -> Result<Vec<usize>> {
        let d = self.distances(seeds, r)?;
        Ok((0..self.n()).filter(|&v| matches!(d[v], Some(x) if x > 0)).collect())
    }

    /// Length of a shortest cycle, or `None` for a forest.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n();
        let mut best: Option<usize> = None;
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut touched = Vec::new();
        for root in 0..n {
            // A cycle through the root of length L is found at depth <= L/2.
            let limit = best.map(|b| b / 2).unwrap_or(usize::MAX);
            dist[root] = 0;
            touched.push(root);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                if dist[u] >= limit {
                    continue;
                }
                for &w in self.neighbors(u) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        touched.push(w);
                        queue.push_back(w);
                    } else if parent[u] != w {
                        let len = dist[u] + dist[w] + 1;
                        if best.is_none_or(|b| len < b) {
                            best = Some(len);
                        }
                    }
                }
            }
            for &t in &touched {
                dist[t] = usize::MAX;
                parent[t] = usize::MAX;
            }
            touched.clear();
        }
        best
    }

    /// True iff the subgraph induced by `s` is a forest.
    pub fn induced_is_acyclic(&self, s: &[usize]) -> bool {
        let members: HashMap<usize, usize> = s.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut uf = UnionFind::new(s.len());
        for (&v, &i) in &members {
            for &w in self.neighbors(v) {
                if w > v {
                    if let Some(&j) = members.get(&w) {
                        if !uf.union(i, j) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// True iff `G[s]` is a forest and no set `T` of at most three vertices
    /// from `B_2(s) \ s` makes `G[s ∪ T]` cyclic. Exhaustive over subsets;
    /// intended as a reference for small inputs.
    pub fn three_completion_acyclic_exhaustive(&self, s: &[usize]) -> Result<bool> {
        if !self.induced_is_acyclic(s) {
            return Ok(false);
        }
        let inside: HashSet<usize> = s.iter().copied().collect();
        let cand: Vec<usize> = self
            .ball(s, 2)?
            .into_iter()
            .filter(|v| !inside.contains(v))
            .collect();
        let mut buf = s.to_vec();
        let base = buf.len();
        for a in 0..cand.len() {
            for b in a..cand.len() {
                for c in b..cand.len() {
                    buf.truncate(base);
                    buf.push(cand[a]);
                    if b != a {
                        buf.push(cand[b]);
                    }
                    if c != b {
                        buf.push(cand[c]);
                    }
                    if !self.induced_is_acyclic(&buf) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Same predicate as [`Graph::three_completion_acyclic_exhaustive`],
    /// evaluated by contracting each tree of `G[s]` to a node and searching
    /// for short cycles through the outside vertices.
    pub fn three_completion_acyclic(&self, s: &[usize]) -> Result<bool> {
        for &v in s {
            self.check_vertex(v)?;
        }
        if !self.induced_is_acyclic(s) {
            return Ok(false);
        }
        let n = self.n();
        // Component label of every vertex of s.
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        for &v in s {
            comp[v] = usize::MAX - 1;
        }
        for &v in s {
            if comp[v] != usize::MAX - 1 {
                continue;
            }
            let mut stack = vec![v];
            comp[v] = ncomp;
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if comp[w] == usize::MAX - 1 {
                        comp[w] = ncomp;
                        stack.push(w);
                    }
                }
            }
            ncomp += 1;
        }
        let dist = self.distances(s, 2)?;
        let outside: Vec<usize> = (0..n)
            .filter(|&v| matches!(dist[v], Some(d) if d > 0))
            .collect();
        // Contracted graph: node ids are components (0..ncomp) followed by
        // outside vertices. Edges between a component and an outside vertex
        // carry multiplicity.
        let node_of_out: HashMap<usize, usize> = outside
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, ncomp + i))
            .collect();
        let total = ncomp + outside.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
        for (i, &v) in outside.iter().enumerate() {
            let me = ncomp + i;
            let mut comp_hits: Vec<usize> = Vec::new();
            for &w in self.neighbors(v) {
                if comp[w] < ncomp {
                    comp_hits.push(comp[w]);
                } else if let Some(&j) = node_of_out.get(&w) {
                    adj[me].push(j);
                }
            }
            comp_hits.sort_unstable();
            if comp_hits.windows(2).any(|w| w[0] == w[1]) {
                // Two edges into the same tree close a cycle with one vertex.
                return Ok(false);
            }
            for c in comp_hits {
                adj[me].push(c);
                adj[c].push(me);
            }
        }
        // Search for a simple cycle in the contracted graph using at most
        // three outside nodes. Components are never adjacent to each other.
        let is_out = |x: usize| x >= ncomp;
        let mut path: Vec<usize> = Vec::with_capacity(8);
        fn dfs(
            adj: &[Vec<usize>],
            is_out: &dyn Fn(usize) -> bool,
            path: &mut Vec<usize>,
            outs: usize,
        ) -> bool {
            let start = path[0];
            let cur = *path.last().unwrap();
            for &nx in &adj[cur] {
                if nx == start && path.len() >= 3 {
                    return true;
                }
                if nx <= start || path.contains(&nx) {
                    continue;
                }
                let o = outs + usize::from(is_out(nx));
                if o > 3 {
                    continue;
                }
                path.push(nx);
                if dfs(adj, is_out, path, o) {
                    return true;
                }
                path.pop();
            }
            false
        }
        for start in 0..total {
            path.clear();
            path.push(start);
            if dfs(&adj, &is_out, &mut path, usize::from(is_out(start))) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Directed graph produced by [`build_g_in`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiGraph {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl DiGraph {
    pub fn n(&self) -> usize {
        self.out_adj.len()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_adj[u].binary_search(&v).is_ok()
    }
}

/// Orients every edge inside `B_3(center)` whose endpoints sit at different
/// distances from `center` towards the center; all other edges become arcs
/// in both directions.
pub fn build_g_in(g: &Graph, center: usize) -> Result<DiGraph> {
    let dist = g.distances(&[center], 3)?;
    let n = g.n();
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for (u, v) in g.edges() {
        match (dist[u], dist[v]) {
            (Some(a), Some(b)) if a != b => {
                let (from, to) = if a > b { (u, v) } else { (v, u) };
                out_adj[from].push(to);
                in_adj[to].push(from);
            }
            _ => {
                out_adj[u].push(v);
                in_adj[v].push(u);
                out_adj[v].push(u);
                in_adj[u].push(v);
            }
        }
    }
    for l in out_adj.iter_mut().chain(in_adj.iter_mut()) {
        l.sort_unstable();
    }
    Ok(DiGraph { out_adj, in_adj })
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Generator request. Serialized form is the `graph` field of experiment
/// configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Cycle { n: usize },
    Path { n: usize },
    Star { leaves: usize },
    Complete { n: usize },
    RandomTree { n: usize },
    /// Random `degree`-regular graph with girth at least `girth`.
    RandomRegularGirth { n: usize, degree: usize, girth: usize },
    /// Random connected graph with maximum degree `max_degree` and girth at
    /// least `girth`: a degree-capped preferential-attachment tree plus
    /// chords that respect the girth bound.
    RandomGirth { n: usize, max_degree: usize, girth: usize },
    /// Point-line incidence graph of the symplectic generalized quadrangle
    /// over GF(q), q prime, with vertices randomly relabelled. It is
    /// (q+1)-regular with girth 8.
    SymplecticQuadrangle { q: u64 },
    /// Complete `branching`-ary tree where the root has `branching`
    /// children and every other internal vertex has `branching - 1`.
    RegularTree { degree: usize, depth: usize },
    EdgeList { path: String },
}

/// Result of a generator call together with the achieved girth.
#[derive(Clone, Debug)]
pub struct Generated {
    pub graph: Graph,
    pub girth: Option<usize>,
}

const GIRTH_RETRY_BUDGET: usize = 10_000;

/// Builds a graph from a spec. Deterministic for a given seed.
pub fn gen_graph(spec: &GraphSpec, seed: u64) -> Result<Generated> {
    let graph = match *spec {
        GraphSpec::Cycle { n } => cycle(n)?,
        GraphSpec::Path { n } => path(n)?,
        GraphSpec::Star { leaves } => star(leaves)?,
        GraphSpec::Complete { n } => complete(n)?,
        GraphSpec::RandomTree { n } => random_tree(n, seed)?,
        GraphSpec::RandomRegularGirth { n, degree, girth } => {
            random_regular_girth(n, degree, girth, seed)?
        }
        GraphSpec::RandomGirth { n, max_degree, girth } => random_girth(n, max_degree, girth, seed)?,
        GraphSpec::SymplecticQuadrangle { q } => symplectic_quadrangle(q, seed)?,
        GraphSpec::RegularTree { degree, depth } => regular_tree(degree, depth)?,
        GraphSpec::EdgeList { ref path } => {
            let f = std::fs::File::open(path)?;
            read_edge_list(std::io::BufReader::new(f))?
        }
    };
    let girth = graph.girth();
    Ok(Generated { graph, girth })
}

/// Parses the short textual graph forms used on the command line:
/// `cycle:N`, `path:N`, `star:L`, `complete:N`, `tree:N`,
/// `regular:N:D:G`, `girth:N:D:G`, `quadrangle:Q`, `rtree:D:DEPTH`, or a
/// path to an edge-list file.
pub fn parse_graph_arg(s: &str) -> Result<GraphSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<usize> {
        parts
            .get(i)
            .ok_or_else(|| Error::Input(format!("graph: missing parameter {i} in '{s}'")))?
            .parse::<usize>()
            .map_err(|e| Error::Input(format!("graph: bad number in '{s}': {e}")))
    };
    Ok(match parts[0] {
        "cycle" => GraphSpec::Cycle { n: num(1)? },
        "path" => GraphSpec::Path { n: num(1)? },
        "star" => GraphSpec::Star { leaves: num(1)? },
        "complete" => GraphSpec::Complete { n: num(1)? },
        "tree" => GraphSpec::RandomTree { n: num(1)? },
        "regular" => GraphSpec::RandomRegularGirth { n: num(1)?, degree: num(2)?, girth: num(3)? },
        "girth" => GraphSpec::RandomGirth { n: num(1)?, max_degree: num(2)?, girth: num(3)? },
        "quadrangle" => GraphSpec::SymplecticQuadrangle { q: num(1)? as u64 },
        "rtree" => GraphSpec::RegularTree { degree: num(1)?, depth: num(2)? },
        _ if parts.len() == 1 => GraphSpec::EdgeList { path: s.to_string() },
        other => return Err(Error::Input(format!("graph: unknown kind '{other}'"))),
    })
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::Input(format!("graph: cycle needs n >= 3, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges)
}

pub fn path(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &edges)
}

/// `K_{1,leaves}` with center 0.
pub fn star(leaves: usize) -> Result<Graph> {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    Graph::from_edges(leaves + 1, &edges)
}

pub fn complete(n: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Uniform random labelled tree via a Prüfer sequence.
pub fn random_tree(n: usize, seed: u64) -> Result<Graph> {
    if n <= 2 {
        return path(n);
    }
    let mut rng = seeded(seed);
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let leaf = *leaves.iter().next().unwrap();
        leaves.remove(&leaf);
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    Graph::from_edges(n, &edges)
}

/// Complete tree: root with `degree` children, every other internal vertex
/// with `degree - 1` children, `depth` levels below the root.
pub fn regular_tree(degree: usize, depth: usize) -> Result<Graph> {
    if degree == 0 {
        return Graph::from_edges(1, &[]);
    }
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_id = 1;
    for level in 0..depth {
        let kids = if level == 0 { degree } else { degree - 1 };
        let mut next = Vec::new();
        for &u in &frontier {
            for _ in 0..kids {
                edges.push((u, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    Graph::from_edges(next_id, &edges)
}

/// Whether adding edge `u–v` keeps every cycle at length >= `girth`, i.e.
/// whether `dist(u, v) >= girth - 1` in the current adjacency lists.
fn far_enough(lists: &[Vec<usize>], u: usize, v: usize, girth: usize, scratch: &mut [usize]) -> bool {
    if girth <= 2 {
        return true;
    }
    let limit = girth - 2;
    // Bounded BFS from u using `scratch` as a distance map (usize::MAX unset).
    let mut touched = vec![u];
    scratch[u] = 0;
    let mut queue = VecDeque::from([u]);
    let mut ok = true;
    'bfs: while let Some(x) = queue.pop_front() {
        if scratch[x] >= limit {
            continue;
        }
        for &y in &lists[x] {
            if scratch[y] == usize::MAX {
                if y == v {
                    ok = false;
                    break 'bfs;
                }
                scratch[y] = scratch[x] + 1;
                touched.push(y);
                queue.push_back(y);
            }
        }
    }
    for t in touched {
        scratch[t] = usize::MAX;
    }
    ok
}

/// Random `degree`-regular graph with girth at least `girth`. Uses the
/// pairing model, then repairs short cycles by random edge switches; a
/// fresh pairing is drawn when repair stalls. Fails after the retry budget.
pub fn random_regular_girth(n: usize, degree: usize, girth: usize, seed: u64) -> Result<Graph> {
    if !(n * degree).is_multiple_of(2) || degree >= n {
        return Err(Error::GenerationFailed {
            budget: 0,
            reason: format!("no {degree}-regular simple graph on {n} vertices"),
        });
    }
    let mut rng = seeded(seed);
    let mut attempts = 0;
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    let mut scratch = vec![usize::MAX; n];
    while attempts < GIRTH_RETRY_BUDGET {
        attempts += 1;
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
        // Repair loop: find an edge lying on a short cycle (or a loop or a
        // repeated edge) and switch it with a random far edge.
        let mut switches = 0usize;
        let switch_budget = 50 * edges.len();
        loop {
            let bad = find_short_cycle_edge(n, &edges, girth, &mut scratch);
            let Some(i) = bad else {
                return Graph::from_edges(n, &edges);
            };
            if switches >= switch_budget {
                break;
            }
            switches += 1;
            let j = rng.random_range(0..edges.len());
            if i == j {
                continue;
            }
            let (a, b) = edges[i];
            let (c, d) = edges[j];
            if rng.random_bool(0.5) {
                edges[i] = (a, c);
                edges[j] = (b, d);
            } else {
                edges[i] = (a, d);
                edges[j] = (b, c);
            }
        }
    }
    Err(Error::GenerationFailed {
        budget: GIRTH_RETRY_BUDGET,
        reason: format!("{degree}-regular graph on {n} vertices with girth >= {girth}"),
    })
}

/// Index of some edge that is a loop, a repeat, or lies on a cycle shorter
/// than `girth`; `None` if the multigraph is simple with girth >= `girth`.
fn find_short_cycle_edge(
    n: usize,
    edges: &[(usize, usize)],
    girth: usize,
    scratch: &mut [usize],
) -> Option<usize> {
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen = HashSet::with_capacity(edges.len());
    for (i, &(u, v)) in edges.iter().enumerate() {
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            return Some(i);
        }
        lists[u].push(v);
        lists[v].push(u);
    }
    for (i, &(u, v)) in edges.iter().enumerate() {
        // Remove the edge temporarily and test the remaining distance.
        lists[u].retain(|&x| x != v);
        lists[v].retain(|&x| x != u);
        let ok = far_enough(&lists, u, v, girth, scratch);
        lists[u].push(v);
        lists[v].push(u);
        if !ok {
            return Some(i);
        }
    }
    None
}

/// Degree-capped preferential-attachment tree plus girth-respecting chords.
pub fn random_girth(n: usize, max_degree: usize, girth: usize, seed: u64) -> Result<Graph> {
    if max_degree < 2 && n > 2 {
        return Err(Error::GenerationFailed {
            budget: 0,
            reason: format!("connected graph on {n} vertices needs max degree >= 2"),
        });
    }
    let mut rng = seeded(seed);
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    // Attachment weight degree+1 among vertices below the cap.
    for v in 1..n {
        let total: usize = (0..v).filter(|&u| lists[u].len() < max_degree).map(|u| lists[u].len() + 1).sum();
        let mut pick = rng.random_range(0..total);
        let mut parent = 0;
        for u in 0..v {
            if lists[u].len() >= max_degree {
                continue;
            }
            let w = lists[u].len() + 1;
            if pick < w {
                parent = u;
                break;
            }
            pick -= w;
        }
        lists[parent].push(v);
        lists[v].push(parent);
        edges.push((parent, v));
    }
    let mut scratch = vec![usize::MAX; n];
    let mut failures = 0;
    while failures < GIRTH_RETRY_BUDGET {
        let open: Vec<usize> = (0..n).filter(|&u| lists[u].len() < max_degree).collect();
        if open.len() < 2 {
            break;
        }
        let u = open[rng.random_range(0..open.len())];
        let v = open[rng.random_range(0..open.len())];
        if u == v || lists[u].contains(&v) || !far_enough(&lists, u, v, girth, &mut scratch) {
            failures += 1;
            continue;
        }
        lists[u].push(v);
        lists[v].push(u);
        edges.push((u, v));
    }
    Graph::from_edges(n, &edges)
}

fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

/// Incidence graph of the symplectic quadrangle W(q) for prime q.
pub fn symplectic_quadrangle(q: u64, seed: u64) -> Result<Graph> {
    if !is_prime(q) {
        return Err(Error::Input(format!("graph: quadrangle order q={q} must be prime")));
    }
    // Projective points of PG(3, q): vectors whose first nonzero entry is 1.
    let mut points: Vec<[u64; 4]> = Vec::new();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    let v = [a, b, c, d];
                    if let Some(&first) = v.iter().find(|&&x| x != 0) {
                        if first == 1 {
                            points.push(v);
                        }
                    }
                }
            }
        }
    }
    let index: HashMap<[u64; 4], usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let normalize = |v: [u64; 4]| -> Option<[u64; 4]> {
        let first = *v.iter().find(|&&x| x != 0)?;
        let inv = mod_pow(first, q - 2, q);
        Some(v.map(|x| x * inv % q))
    };
    let form = |x: &[u64; 4], y: &[u64; 4]| -> u64 {
        (x[0] * y[1] + q * q - x[1] * y[0] + x[2] * y[3] + q * q - x[3] * y[2]) % q
    };
    let mut lines: HashSet<Vec<usize>> = HashSet::new();
    for (i, p) in points.iter().enumerate() {
        for (j, r) in points.iter().enumerate() {
            if j <= i || form(p, r) != 0 {
                continue;
            }
            let mut line = vec![i, j];
            for s in 1..q {
                let v = std::array::from_fn(|k| (p[k] * s + r[k]) % q);
                line.push(index[&normalize(v).unwrap()]);
            }
            line.sort_unstable();
            line.dedup();
            lines.insert(line);
        }
    }
    let mut lines: Vec<Vec<usize>> = lines.into_iter().collect();
    lines.sort();
    let np = points.len();
    let n = np + lines.len();
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut seeded(seed));
    let mut edges = Vec::new();
    for (li, line) in lines.iter().enumerate() {
        for &p in line {
            edges.push((label[p], label[np + li]));
        }
    }
    Graph::from_edges(n, &edges)
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Reads the edge-list format: a header `n m`, then `m` lines `u v`.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let (ln, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let header = header?;
    let nums = parse_usizes(&header, ln, 2)?;
    let (n, m) = (nums[0], nums[1]);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln + edges.len() + 1,
            msg: format!("expected {m} edges, found {}", edges.len()),
        })?;
        let uv = parse_usizes(&l?, ln, 2)?;
        edges.push((uv[0], uv[1]));
    }
    Graph::from_edges(n, &edges)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", g.n(), g.m())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub(crate) fn parse_usizes(line: &str, ln: usize, want: usize) -> Result<Vec<usize>> {
    let v: std::result::Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
    let v = v.map_err(|e| Error::Parse { line: ln, msg: format!("{e}") })?;
    if v.len() != want {
        return Err(Error::Parse { line: ln, msg: format!("expected {want} fields, found {}", v.len()) });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_examples() {
        let p = path(4).unwrap();
        assert_eq!(p.ball(&[0], 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(p.ball(&[3], 0).unwrap(), vec![3]);
        let c = cycle(12).unwrap();
        assert_eq!(c.ball(&[0], 3).unwrap(), vec![0, 1, 2, 3, 9, 10, 11]);
        assert_eq!(c.sphere(&[0], 3).unwrap(), vec![3, 9]);
        assert_eq!(c.neighborhood(&[0], 1).unwrap(), vec![1, 11]);
        assert!(matches!(c.ball(&[12], 1), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn girth_examples() {
        assert_eq!(complete(4).unwrap().girth(), Some(3));
        for n in 3..=64 {
            assert_eq!(cycle(n).unwrap().girth(), Some(n));
        }
        assert_eq!(random_tree(40, 3).unwrap().girth(), None);
        assert_eq!(star(5).unwrap().girth(), None);
        assert_eq!(star(5).unwrap().max_degree(), 5);
    }

    #[test]
    fn acyclicity_examples() {
        let c = cycle(12).unwrap();
        assert!(c.induced_is_acyclic(&[0, 1, 2, 3]));
        assert!(!c.induced_is_acyclic(&(0..12).collect::<Vec<_>>()));
        assert!(c.induced_is_acyclic(&[]));
        // On C_6 any two-vertex path leaves four vertices to close the cycle.
        let c6 = cycle(6).unwrap();
        assert!(c6.three_completion_acyclic(&[0, 1]).unwrap());
        assert!(!c6.three_completion_acyclic(&[0, 1, 2]).unwrap());
    }

    #[test]
    fn g_in_examples() {
        let s = star(3).unwrap();
        let d = build_g_in(&s, 0).unwrap();
        for leaf in 1..=3 {
            assert_eq!(d.out_neighbors(leaf), &[0]);
            assert!(!d.has_arc(0, leaf));
        }
        let p = path(5).unwrap();
        let d = build_g_in(&p, 0).unwrap();
        assert!(d.has_arc(1, 0) && !d.has_arc(0, 1));
        assert!(d.has_arc(2, 1) && !d.has_arc(1, 2));
        assert!(d.has_arc(3, 2) && !d.has_arc(2, 3));
        assert!(d.has_arc(3, 4) && d.has_arc(4, 3));
        let iso = Graph::from_edges(3, &[(1, 2)]).unwrap();
        let d = build_g_in(&iso, 0).unwrap();
        assert!(d.has_arc(1, 2) && d.has_arc(2, 1));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_girth(200, 6, 11, 5).unwrap();
        let b = random_girth(200, 6, 11, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.girth().is_none_or(|g| g >= 11));
        assert_eq!(a.max_degree(), 6);
        assert_eq!(random_tree(50, 9).unwrap(), random_tree(50, 9).unwrap());
    }

    #[test]
    fn regular_girth_small() {
        let g = random_regular_girth(60, 3, 6, 2).unwrap();
        assert!(g.girth().unwrap() >= 6);
        assert!((0..60).all(|v| g.degree(v) == 3));
        assert!(matches!(
            random_regular_girth(5, 3, 3, 1),
            Err(Error::GenerationFailed { .. })
        ));
    }

    #[test]
    fn quadrangle_small() {
        let g = symplectic_quadrangle(3, 1).unwrap();
        assert_eq!(g.n(), 2 * 4 * 10);
        assert!((0..g.n()).all(|v| g.degree(v) == 4));
        assert_eq!(g.girth(), Some(8));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = cycle(7).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
        assert!(matches!(read_edge_list(&b"3 2\n0 1\n"[..]), Err(Error::Parse { .. })));
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (3usize..11).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..(2 * n)).prop_map(move |raw| {
                let mut set = HashSet::new();
                for (u, v) in raw {
                    if u != v {
                        set.insert((u.min(v), u.max(v)));
                    }
                }
                let edges: Vec<_> = set.into_iter().collect();
                Graph::from_edges(n, &edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn balls_nest(g in arb_graph(), v in 0usize..3, r in 0usize..4) {
            prop_assert_eq!(g.ball(&[v], 0).unwrap(), vec![v]);
            let small = g.ball(&[v], r).unwrap();
            let big = g.ball(&[v], r + 1).unwrap();
            prop_assert!(small.iter().all(|x| big.contains(x)));
            if r >= 1 {
                let inner = g.ball(&[v], r - 1).unwrap();
                let sph = g.sphere(&[v], r).unwrap();
                prop_assert!(sph.iter().all(|x| !inner.contains(x)));
            }
        }

        #[test]
        fn fast_completion_check_matches_exhaustive(
            g in arb_graph(),
            mask in proptest::collection::vec(any::<bool>(), 11),
        ) {
            let s: Vec<usize> = (0..g.n()).filter(|&v| mask[v]).collect();
            prop_assert_eq!(
                g.three_completion_acyclic(&s).unwrap(),
                g.three_completion_acyclic_exhaustive(&s).unwrap()
            );
        }

        #[test]
        fn g_in_far_vertices_keep_neighborhoods(n in 6usize..20, seed in 0u64..50) {
            let g = random_tree(n, seed).unwrap();
            let d = build_g_in(&g, 0).unwrap();
            let dist = g.distances(&[0], usize::MAX).unwrap();
            for w in 0..n {
                if dist[w].unwrap() >= 4 {
                    prop_assert_eq!(d.out_neighbors(w), g.neighbors(w));
                    prop_assert_eq!(d.in_neighbors(w), g.neighbors(w));
                }
            }
        }
    }
}
