//! Problem instances: hardware-grid Ising models, MaxCut on random 3-regular
//! graphs and the Sherrington-Kirkpatrick spin glass.
//!
//! Cost convention: `C(z) = Σ w_jk z_j z_k` with spins `z_i ∈ {+1, -1}`.
//! Measurement bit `b_i = 0` maps to `z_i = +1`, and qubit `i` is bit `i` of
//! a bitstring counted from the least significant end.

use std::collections::{BTreeSet, VecDeque};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng;

/// Largest instance `brute_force_min` will enumerate.
pub const MAX_BRUTE_FORCE_QUBITS: usize = 30;
/// Minimizers beyond this many are counted but not listed.
pub const MAX_LISTED_MINIMIZERS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "grid")]
    HardwareGrid,
    #[serde(rename = "3reg")]
    ThreeRegular,
    #[serde(rename = "sk")]
    SkModel,
}

impl Family {
    pub fn tag(self) -> u64 {
        match self {
            Family::HardwareGrid => 1,
            Family::ThreeRegular => 2,
            Family::SkModel => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::HardwareGrid => "grid",
            Family::ThreeRegular => "3reg",
            Family::SkModel => "sk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Family::HardwareGrid),
            "3reg" => Ok(Family::ThreeRegular),
            "sk" => Ok(Family::SkModel),
            other => Err(Error::Invalid(format!("unknown family {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A qubit layout on the square lattice; two qubits are coupled iff their
/// coordinates are at Manhattan distance one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile", into = "TopologyFile")]
pub struct HardwareTopology {
    qubits: Vec<(i32, i32)>,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    qubits: Vec<[i32; 2]>,
}

impl TryFrom<TopologyFile> for HardwareTopology {
    type Error = Error;
    fn try_from(f: TopologyFile) -> Result<Self> {
        HardwareTopology::new(f.qubits.into_iter().map(|[r, c]| (r, c)).collect())
    }
}

impl From<HardwareTopology> for TopologyFile {
    fn from(t: HardwareTopology) -> Self {
        TopologyFile { qubits: t.qubits.iter().map(|&(r, c)| [r, c]).collect() }
    }
}

const DEFAULT23: &str = include_str!("../data/default23.json");

impl HardwareTopology {
    /// Builds a topology from grid coordinates. Duplicates are rejected;
    /// connectivity is checked by the consumers that need it.
    pub fn new(qubits: Vec<(i32, i32)>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidSize("topology has no qubits".into()));
        }
        let unique: BTreeSet<_> = qubits.iter().collect();
        if unique.len() != qubits.len() {
            return Err(Error::Invalid("duplicate topology coordinates".into()));
        }
        let neighbors = qubits
            .iter()
            .map(|&(r, c)| {
                let mut ns: Vec<usize> = qubits
                    .iter()
                    .enumerate()
                    .filter(|(_, &(r2, c2))| (r - r2).abs() + (c - c2).abs() == 1)
                    .map(|(i, _)| i)
                    .collect();
                ns.sort_unstable();
                ns
            })
            .collect();
        Ok(HardwareTopology { qubits, neighbors })
    }

    /// Rectangular `rows x cols` block, row-major numbering.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let qubits = (0..rows as i32)
            .flat_map(|r| (0..cols as i32).map(move |c| (r, c)))
            .collect();
        Self::new(qubits)
    }

    pub fn line(len: usize) -> Result<Self> {
        Self::grid(1, len)
    }

    /// The shipped 23-qubit diamond-shaped subgraph. Its longest simple path
    /// has 17 qubits.
    pub fn default23() -> Self {
        serde_json::from_str(DEFAULT23).expect("bundled topology is valid")
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn coord(&self, q: usize) -> (i32, i32) {
        self.qubits[q]
    }

    pub fn coords(&self) -> &[(i32, i32)] {
        &self.qubits
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// All couplings as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for &b in &self.neighbors[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Breadth-first hop counts from `src`; `usize::MAX` marks unreachable.
    pub fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::from([src]);
        dist[src] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn all_pairs_distances(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|q| self.bfs(q)).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(|&d| d != usize::MAX)
    }

    /// First `n` qubits in breadth-first order from qubit 0, keeping their
    /// coordinates. Every prefix of a BFS order is connected.
    pub fn connected_subset(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidSize(format!(
                "subset of {n} qubits from a {}-qubit topology",
                self.len()
            )));
        }
        let mut order = vec![0usize];
        let mut seen = vec![false; self.len()];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() && order.len() < n {
            let u = order[head];
            head += 1;
            for &v in &self.neighbors[u] {
                if !seen[v] && order.len() < n {
                    seen[v] = true;
                    order.push(v);
                }
            }
        }
        if order.len() < n {
            return Err(Error::Routing("topology is disconnected".into()));
        }
        Self::new(order.into_iter().map(|q| self.qubits[q]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub j: usize,
    pub k: usize,
    pub w: i8,
}

/// A weighted interaction graph with `±1` couplings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemGraph {
    family: Family,
    n: usize,
    seed: u64,
    edges: Vec<Edge>,
    topology: Option<HardwareTopology>,
}

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    family: Family,
    n: usize,
    seed: u64,
    edges: Vec<(usize, usize, i8)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topology: Option<HardwareTopology>,
}

impl ProblemGraph {
    /// Validates and builds a graph. Edges are normalized to `j < k` and sorted.
    pub fn new(
        family: Family,
        n: usize,
        seed: u64,
        edges: Vec<Edge>,
        topology: Option<HardwareTopology>,
    ) -> Result<Self> {
        let mut norm: Vec<Edge> = edges
            .into_iter()
            .map(|e| if e.j > e.k { Edge { j: e.k, k: e.j, w: e.w } } else { e })
            .collect();
        norm.sort_unstable();
        for e in &norm {
            if e.j == e.k || e.k >= n {
                return Err(Error::Invalid(format!("edge ({}, {}) invalid for n = {n}", e.j, e.k)));
            }
            if e.w != 1 && e.w != -1 {
                return Err(Error::Invalid(format!("weight {} is not ±1", e.w)));
            }
        }
        if norm.windows(2).any(|p| (p[0].j, p[0].k) == (p[1].j, p[1].k)) {
            return Err(Error::Invalid("duplicate edge".into()));
        }
        match family {
            Family::SkModel => {
                if norm.len() != n * (n.saturating_sub(1)) / 2 {
                    return Err(Error::Invalid("SK instance must be complete".into()));
                }
            }
            Family::ThreeRegular => {
                if n < 4 || n % 2 == 1 {
                    return Err(Error::InvalidSize(format!("3-regular graphs need even n >= 4, got {n}")));
                }
                let mut deg = vec![0usize; n];
                for e in &norm {
                    deg[e.j] += 1;
                    deg[e.k] += 1;
                    if e.w != 1 {
                        return Err(Error::Invalid("MaxCut weights must be +1".into()));
                    }
                }
                if deg.iter().any(|&d| d != 3) {
                    return Err(Error::Invalid("graph is not 3-regular".into()));
                }
            }
            Family::HardwareGrid => {
                if let Some(t) = &topology {
                    if t.len() != n {
                        return Err(Error::Dimension { expected: n, got: t.len() });
                    }
                    if let Some(e) = norm.iter().find(|e| !t.adjacent(e.j, e.k)) {
                        return Err(Error::Invalid(format!(
                            "edge ({}, {}) is not a topology coupling",
                            e.j, e.k
                        )));
                    }
                }
            }
        }
        Ok(ProblemGraph { family, n, seed, edges: norm, topology })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn topology(&self) -> Option<&HardwareTopology> {
        self.topology.as_ref()
    }

    pub fn weight(&self, j: usize, k: usize) -> Option<i8> {
        let (j, k) = if j < k { (j, k) } else { (k, j) };
        self.edges
            .binary_search_by(|e| (e.j, e.k).cmp(&(j, k)))
            .ok()
            .map(|i| self.edges[i].w)
    }

    /// Same graph with the weight of `(j, k)` negated.
    pub fn with_flipped_weight(&self, j: usize, k: usize) -> Result<Self> {
        let mut g = self.clone();
        let (j, k) = if j < k { (j, k) } else { (k, j) };
        let e = g
            .edges
            .iter_mut()
            .find(|e| e.j == j && e.k == k)
            .ok_or_else(|| Error::Invalid(format!("no edge ({j}, {k})")))?;
        e.w = -e.w;
        Ok(g)
    }

    /// Adjacency lists `(neighbor, weight)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, i8)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.j].push((e.k, e.w));
            adj[e.k].push((e.j, e.w));
        }
        adj
    }

    /// Hop distances in the instance graph from `src`.
    pub fn distances_from(&self, src: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::from([src]);
        dist[src] = 0;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Cost of a bitstring (bit `i` is qubit `i`, bit 0 means spin +1).
    #[inline]
    pub fn cost_bits(&self, bits: u64) -> i64 {
        self.edges
            .iter()
            .map(|e| {
                let anti = ((bits >> e.j) ^ (bits >> e.k)) & 1;
                let w = e.w as i64;
                if anti == 0 {
                    w
                } else {
                    -w
                }
            })
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProblemFile {
            family: self.family,
            n: self.n,
            seed: self.seed,
            edges: self.edges.iter().map(|e| (e.j, e.k, e.w)).collect(),
            topology: self.topology.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ProblemFile = serde_json::from_str(s)?;
        let edges = f.edges.into_iter().map(|(j, k, w)| Edge { j, k, w }).collect();
        Self::new(f.family, f.n, f.seed, edges, f.topology)
    }
}

/// Spin vector with entries `±1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinAssignment(Vec<i8>);

impl SpinAssignment {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Invalid("spins must be ±1".into()));
        }
        Ok(SpinAssignment(spins))
    }

    pub fn from_bits(bits: u64, n: usize) -> Self {
        SpinAssignment((0..n).map(|i| if (bits >> i) & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == -1)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> Self {
        SpinAssignment(self.0.iter().map(|s| -s).collect())
    }
}

/// One ±1 weight per topology coupling.
pub fn gen_hardware_grid(topology: &HardwareTopology, seed: u64) -> Result<ProblemGraph> {
    if !topology.is_connected() {
        return Err(Error::Invalid("topology must be connected".into()));
    }
    let n = topology.len();
    let mut rng = rng::stream(Family::HardwareGrid.tag(), n as u64, seed);
    let edges = topology
        .edges()
        .into_iter()
        .map(|(j, k)| Edge { j, k, w: if rng::coin(&mut rng) { 1 } else { -1 } })
        .collect();
    ProblemGraph::new(Family::HardwareGrid, n, seed, edges, Some(topology.clone()))
}

/// Complete graph with uniform ±1 couplings.
pub fn gen_sk(n: usize, seed: u64) -> Result<ProblemGraph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("SK model needs n >= 2, got {n}")));
    }
    let mut rng = rng::stream(Family::SkModel.tag(), n as u64, seed);
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for k in j + 1..n {
            edges.push(Edge { j, k, w: if rng::coin(&mut rng) { 1 } else { -1 } });
        }
    }
    ProblemGraph::new(Family::SkModel, n, seed, edges, None)
}

/// Uniform simple 3-regular graph from the pairing model, rejecting and
/// resampling the whole pairing on any self-loop or repeated edge.
pub fn gen_3regular(n: usize, seed: u64) -> Result<ProblemGraph> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::InvalidSize(format!(
            "3-regular graphs need an even n >= 4 (n*3 must be even), got {n}"
        )));
    }
    let mut rng = rng::stream(Family::ThreeRegular.tag(), n as u64, seed);
    loop {
        if let Some(edges) = try_pairing(&mut rng, n, 3) {
            return ProblemGraph::new(Family::ThreeRegular, n, seed, edges, None);
        }
    }
}

/// Instance of `family` on `n` qubits. Grid instances live on the first `n`
/// breadth-first qubits of the default device.
pub fn generate(family: Family, n: usize, seed: u64) -> Result<ProblemGraph> {
    match family {
        Family::HardwareGrid => gen_hardware_grid(&HardwareTopology::default23().connected_subset(n)?, seed),
        Family::SkModel => gen_sk(n, seed),
        Family::ThreeRegular => gen_3regular(n, seed),
    }
}

fn try_pairing<R: RngCore>(rng: &mut R, n: usize, degree: usize) -> Option<Vec<Edge>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
    rng::shuffle(rng, &mut stubs);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    for pair in stubs.chunks(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a == b || !seen.insert((a, b)) {
            return None;
        }
        edges.push(Edge { j: a, k: b, w: 1 });
    }
    Some(edges)
}

pub fn cost(graph: &ProblemGraph, z: &SpinAssignment) -> Result<i64> {
    if z.len() != graph.n() {
        return Err(Error::Dimension { expected: graph.n(), got: z.len() });
    }
    let s = z.spins();
    Ok(graph
        .edges()
        .iter()
        .map(|e| e.w as i64 * s[e.j] as i64 * s[e.k] as i64)
        .sum())
}

/// Exact minimum of the cost with its minimizers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundStates {
    pub c_min: i64,
    /// Bit patterns of minimizers with the highest qubit fixed to 0 (one
    /// representative per global-flip pair), ascending, at most
    /// `MAX_LISTED_MINIMIZERS` entries.
    pub minimizers: Vec<u64>,
    /// Number of minimizing flip pairs, including any not listed.
    pub degeneracy: u64,
}

impl GroundStates {
    pub fn assignments(&self, n: usize) -> Vec<SpinAssignment> {
        self.minimizers.iter().map(|&b| SpinAssignment::from_bits(b, n)).collect()
    }
}

struct Partial {
    best: i64,
    listed: Vec<u64>,
    count: u64,
}

impl Partial {
    fn offer(&mut self, c: i64, bits: u64) {
        if c < self.best {
            self.best = c;
            self.listed.clear();
            self.count = 0;
        }
        if c == self.best {
            self.count += 1;
            self.listed.push(bits);
            if self.listed.len() >= 2 * MAX_LISTED_MINIMIZERS {
                self.listed.sort_unstable();
                self.listed.truncate(MAX_LISTED_MINIMIZERS);
            }
        }
    }
}

/// Exhaustive search over `2^(n-1)` assignments (the global flip is fixed by
/// pinning the top qubit). The space is split into prefix blocks, each walked
/// in Gray-code order with incremental local fields.
pub fn brute_force_min(graph: &ProblemGraph) -> Result<GroundStates> {
    let n = graph.n();
    if n > MAX_BRUTE_FORCE_QUBITS {
        return Err(Error::Resource(format!(
            "brute force limited to n <= {MAX_BRUTE_FORCE_QUBITS}, got {n}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidSize("empty graph".into()));
    }
    let free = n - 1;
    let prefix_bits = free.min(6);
    let low = free - prefix_bits;
    let adj = graph.adjacency();
    let blocks: Vec<u64> = (0..1u64 << prefix_bits).collect();
    let partials = par::map_collect(blocks, |prefix| {
        let start = prefix << low;
        let mut spins: Vec<i64> = (0..n).map(|i| if (start >> i) & 1 == 0 { 1 } else { -1 }).collect();
        let mut field: Vec<i64> = (0..n)
            .map(|i| adj[i].iter().map(|&(j, w)| w as i64 * spins[j]).sum())
            .collect();
        let mut c = graph.cost_bits(start);
        let mut bits = start;
        let mut part = Partial { best: i64::MAX, listed: Vec::new(), count: 0 };
        part.offer(c, bits);
        for step in 1..(1u64 << low) {
            let b = step.trailing_zeros() as usize;
            c -= 2 * spins[b] * field[b];
            for &(j, w) in &adj[b] {
                field[j] -= 2 * w as i64 * spins[b];
            }
            spins[b] = -spins[b];
            bits ^= 1 << b;
            part.offer(c, bits);
        }
        part
    });
    let c_min = partials.iter().map(|p| p.best).min().expect("at least one block");
    let mut minimizers = Vec::new();
    let mut degeneracy = 0;
    for p in partials.into_iter().filter(|p| p.best == c_min) {
        degeneracy += p.count;
        minimizers.extend(p.listed);
    }
    minimizers.sort_unstable();
    minimizers.truncate(MAX_LISTED_MINIMIZERS);
    Ok(GroundStates { c_min, minimizers, degeneracy })
}

/// Cost of every basis state as `f64`, indexed by bit pattern.
pub fn cost_table(graph: &ProblemGraph) -> Vec<f64> {
    let mut table = vec![0.0; 1usize << graph.n()];
    let edges = graph.edges();
    par::for_each_indexed(&mut table, |z, out| {
        *out = edges
            .iter()
            .map(|e| {
                let anti = ((z >> e.j) ^ (z >> e.k)) & 1;
                if anti == 0 {
                    e.w as f64
                } else {
                    -(e.w as f64)
                }
            })
            .sum();
    });
    table
}
