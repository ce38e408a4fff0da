//! Mapping QAOA circuits onto hardware: abstract circuit construction, the
//! three routing strategies, and line embedding for swap networks.
//!
//! A routed circuit acts on compact qubit indices `0..m`; `physical[c]` is
//! the topology node behind circuit qubit `c`. The final permutation maps
//! each logical qubit to the circuit qubit that holds it at measurement.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitFile, Gate, GateKind};
use crate::error::{Error, Result};
use crate::problems::{Family, HardwareTopology, ProblemGraph};
use crate::synthesis::{compile_circuit, SynthOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() || gamma.len() != beta.len() {
            return Err(Error::Invalid(format!(
                "need p >= 1 equal-length angle lists, got {} and {}",
                gamma.len(),
                beta.len()
            )));
        }
        if gamma.iter().chain(&beta).any(|a| !a.is_finite()) {
            return Err(Error::Invalid("angles must be finite".into()));
        }
        Ok(QaoaParams { gamma, beta })
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    /// `[γ_1..γ_p, β_1..β_p]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.gamma.iter().chain(&self.beta).copied().collect()
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::Invalid("parameter vector has odd length".into()));
        }
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "wesn")]
    Wesn,
    #[serde(rename = "swap-network")]
    SwapNetwork,
    #[serde(rename = "greedy")]
    Greedy,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Wesn => "wesn",
            Strategy::SwapNetwork => "swap-network",
            Strategy::Greedy => "greedy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wesn" => Ok(Strategy::Wesn),
            "swap-network" => Ok(Strategy::SwapNetwork),
            "greedy" => Ok(Strategy::Greedy),
            other => Err(Error::Invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoutedFile", into = "RoutedFile")]
pub struct RoutedCircuit {
    /// Hardware circuit: PhX, Rz, SYC and Measure only.
    pub circuit: Circuit,
    /// The same schedule before synthesis (ZZ / ZZSwap / SWAP gates). Not
    /// serialized.
    pub routed: Option<Circuit>,
    pub logical_to_physical_final: Vec<usize>,
    pub strategy: Strategy,
    /// Topology node of each circuit qubit.
    pub physical: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RoutedFile {
    #[serde(flatten)]
    circuit: CircuitFile,
    strategy: Strategy,
    physical: Vec<usize>,
}

impl TryFrom<RoutedFile> for RoutedCircuit {
    type Error = Error;
    fn try_from(f: RoutedFile) -> Result<Self> {
        let circuit = Circuit::try_from(f.circuit)?;
        if f.physical.len() != circuit.n_qubits() {
            return Err(Error::Dimension { expected: circuit.n_qubits(), got: f.physical.len() });
        }
        Ok(RoutedCircuit {
            logical_to_physical_final: circuit.final_permutation().to_vec(),
            circuit,
            routed: None,
            strategy: f.strategy,
            physical: f.physical,
        })
    }
}

impl From<RoutedCircuit> for RoutedFile {
    fn from(r: RoutedCircuit) -> Self {
        RoutedFile { circuit: r.circuit.into(), strategy: r.strategy, physical: r.physical }
    }
}

impl RoutedCircuit {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn finish(routed: Circuit, strategy: Strategy, physical: Vec<usize>) -> Result<Self> {
        let circuit = compile_circuit(&routed, SynthOptions::default())?;
        Ok(RoutedCircuit {
            logical_to_physical_final: routed.final_permutation().to_vec(),
            circuit,
            routed: Some(routed),
            strategy,
            physical,
        })
    }
}

impl Strategy {
    /// Strategy used for each family unless overridden.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::HardwareGrid => Strategy::Wesn,
            Family::SkModel => Strategy::SwapNetwork,
            Family::ThreeRegular => Strategy::Greedy,
        }
    }
}

/// Routes and compiles with `strategy`. Grid instances use their own
/// topology; the others are placed on `topology`.
pub fn route(
    graph: &ProblemGraph,
    params: &QaoaParams,
    strategy: Strategy,
    topology: &HardwareTopology,
) -> Result<RoutedCircuit> {
    match strategy {
        Strategy::Wesn => route_wesn(graph, params),
        Strategy::SwapNetwork => {
            let topo = graph.topology().unwrap_or(topology);
            let line = embed_line(topo, graph.n())?;
            route_swap_network(graph, params, topo, &line)
        }
        Strategy::Greedy => route_greedy(graph, graph.topology().unwrap_or(topology), params),
    }
}

/// First-fit packing of edges into moments with disjoint qubits.
fn pack_moments(pairs: impl IntoIterator<Item = Gate>, n: usize) -> Vec<Vec<Gate>> {
    let mut moments: Vec<(Vec<bool>, Vec<Gate>)> = Vec::new();
    for g in pairs {
        let qs = g.qubits().to_vec();
        match moments.iter_mut().find(|(busy, _)| qs.iter().all(|&q| !busy[q])) {
            Some((busy, gates)) => {
                qs.iter().for_each(|&q| busy[q] = true);
                gates.push(g);
            }
            None => {
                let mut busy = vec![false; n];
                qs.iter().for_each(|&q| busy[q] = true);
                moments.push((busy, vec![g]));
            }
        }
    }
    moments.into_iter().map(|(_, g)| g).collect()
}

fn driver_layer(n: usize, beta: f64) -> Vec<Gate> {
    (0..n).map(|q| Gate::phx(q, 2.0 * beta, 0.0)).collect()
}

fn hadamard_layer(n: usize) -> Vec<Gate> {
    (0..n).map(|q| Gate::one(GateKind::H, q)).collect()
}

/// Hardware-agnostic QAOA circuit: `H^n`, then for each layer one `ZZ(γ w)`
/// per edge and a `PhX(2β, 0)` driver on every qubit, then measurement.
pub fn build_qaoa_abstract(graph: &ProblemGraph, params: &QaoaParams) -> Result<Circuit> {
    let n = graph.n();
    let mut c = Circuit::new(n);
    c.push_moment(hadamard_layer(n))?;
    for (&gamma, &beta) in params.gamma.iter().zip(&params.beta) {
        let gates = graph.edges().iter().map(|e| Gate::two(GateKind::Zz(gamma * e.w as f64), e.j, e.k));
        for m in pack_moments(gates, n) {
            c.push_moment(m)?;
        }
        c.push_moment(driver_layer(n, beta))?;
    }
    c.measure_all()?;
    Ok(c)
}

/// Index of the interaction round (0..4) of a coupling: horizontal couplings
/// whose smaller endpoint sits in an even column, then odd; vertical couplings
/// whose smaller endpoint sits in an even row, then odd.
pub fn wesn_round(topology: &HardwareTopology, a: usize, b: usize) -> usize {
    let (pa, pb) = (topology.coord(a), topology.coord(b));
    let (r, c) = pa.min(pb);
    if pa.0 == pb.0 {
        (c.rem_euclid(2)) as usize
    } else {
        2 + (r.rem_euclid(2)) as usize
    }
}

/// Hardware-grid routing: every problem edge is already a coupling, so each
/// cost layer is four rounds of parallel ZZ gates.
pub fn route_wesn(graph: &ProblemGraph, params: &QaoaParams) -> Result<RoutedCircuit> {
    if graph.family() != Family::HardwareGrid {
        return Err(Error::FamilyMismatch(format!("WESN routing needs a grid instance, got {}", graph.family())));
    }
    let topo = graph
        .topology()
        .ok_or_else(|| Error::FamilyMismatch("grid instance carries no topology".into()))?;
    let n = graph.n();
    let mut c = Circuit::new(n);
    c.push_moment(hadamard_layer(n))?;
    for (&gamma, &beta) in params.gamma.iter().zip(&params.beta) {
        let mut rounds: [Vec<Gate>; 4] = Default::default();
        for e in graph.edges() {
            rounds[wesn_round(topo, e.j, e.k)].push(Gate::two(GateKind::Zz(gamma * e.w as f64), e.j, e.k));
        }
        for r in rounds {
            c.push_moment(r)?;
        }
        c.push_moment(driver_layer(n, beta))?;
    }
    c.measure_all()?;
    RoutedCircuit::finish(c, Strategy::Wesn, (0..n).collect())
}

/// Checks that `line` is a simple path of `n` nodes in `topology`.
fn validate_line(topology: &HardwareTopology, line: &[usize], n: usize) -> Result<()> {
    if line.len() < n {
        return Err(Error::Embedding(format!("line of {} nodes cannot hold {n} qubits", line.len())));
    }
    if line.len() != n {
        return Err(Error::Embedding(format!("line has {} nodes, expected {n}", line.len())));
    }
    let mut seen = HashSet::new();
    for &q in line {
        if q >= topology.len() || !seen.insert(q) {
            return Err(Error::Embedding(format!("line node {q} invalid or repeated")));
        }
    }
    if let Some(w) = line.windows(2).find(|w| !topology.adjacent(w[0], w[1])) {
        return Err(Error::Embedding(format!("nodes {} and {} are not coupled", w[0], w[1])));
    }
    Ok(())
}

/// Linear swap network: per cost layer, `n` alternating layers of
/// nearest-neighbour `ZZSwap` (plain `SWAP` for non-edges). Each layer
/// reverses the logical order on the line.
pub fn route_swap_network(
    graph: &ProblemGraph,
    params: &QaoaParams,
    topology: &HardwareTopology,
    line: &[usize],
) -> Result<RoutedCircuit> {
    let n = graph.n();
    validate_line(topology, line, n)?;
    let mut at: Vec<usize> = (0..n).collect(); // position -> logical
    let mut c = Circuit::new(n);
    c.push_moment(hadamard_layer(n))?;
    for (&gamma, &beta) in params.gamma.iter().zip(&params.beta) {
        for layer in 0..n {
            let mut gates = Vec::new();
            for i in (layer % 2..n.saturating_sub(1)).step_by(2) {
                let kind = match graph.weight(at[i], at[i + 1]) {
                    Some(w) => GateKind::ZzSwap(gamma * w as f64),
                    None => GateKind::Swap,
                };
                gates.push(Gate::two(kind, i, i + 1));
                at.swap(i, i + 1);
            }
            c.push_moment(gates)?;
        }
        c.push_moment(driver_layer(n, beta))?;
    }
    c.measure_all()?;
    let mut perm = vec![0; n];
    for (pos, &l) in at.iter().enumerate() {
        perm[l] = pos;
    }
    c.set_final_permutation(perm)?;
    RoutedCircuit::finish(c, Strategy::SwapNetwork, line.to_vec())
}

/// Simple path of `length` nodes, found by depth-first search from each start
/// node in ascending order. Dead branches are pruned by a reachability bound
/// and remembered by their (visited set, endpoint) state.
pub fn embed_line(topology: &HardwareTopology, length: usize) -> Result<Vec<usize>> {
    if length < 2 {
        return Err(Error::Embedding(format!("line length must be >= 2, got {length}")));
    }
    let m = topology.len();
    if m > 128 {
        return Err(Error::Resource(format!("line search supports up to 128 nodes, got {m}")));
    }
    if length > m {
        return Err(Error::Embedding(format!("no line of {length} nodes in a {m}-node topology")));
    }
    let mut search = LineSearch { topology, length, dead: HashSet::new(), path: Vec::new() };
    for start in 0..m {
        search.path.clear();
        search.path.push(start);
        if search.extend(1u128 << start) {
            return Ok(search.path);
        }
    }
    Err(Error::Embedding(format!("no simple path of {length} nodes exists")))
}

struct LineSearch<'a> {
    topology: &'a HardwareTopology,
    length: usize,
    dead: HashSet<(u128, usize)>,
    path: Vec<usize>,
}

impl LineSearch<'_> {
    fn extend(&mut self, visited: u128) -> bool {
        if self.path.len() == self.length {
            return true;
        }
        let tip = *self.path.last().expect("path is non-empty");
        if self.dead.contains(&(visited, tip)) || self.reachable(visited, tip) + self.path.len() < self.length {
            return false;
        }
        for &v in self.topology.neighbors(tip) {
            if visited >> v & 1 == 0 {
                self.path.push(v);
                if self.extend(visited | 1u128 << v) {
                    return true;
                }
                self.path.pop();
            }
        }
        self.dead.insert((visited, tip));
        false
    }

    /// Unvisited nodes reachable from `tip` without crossing the path.
    fn reachable(&self, visited: u128, tip: usize) -> usize {
        let mut seen = visited;
        let mut stack = vec![tip];
        let mut count = 0;
        while let Some(u) = stack.pop() {
            for &v in self.topology.neighbors(u) {
                if seen >> v & 1 == 0 {
                    seen |= 1u128 << v;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    }
}

/// Nodes in breadth-first order from node 0, first `n` of them.
fn bfs_region(topology: &HardwareTopology, n: usize) -> Result<Vec<usize>> {
    if !topology.is_connected() {
        return Err(Error::Routing("topology is disconnected".into()));
    }
    if n > topology.len() {
        return Err(Error::Routing(format!("{n} logical qubits exceed {} physical", topology.len())));
    }
    let mut order = vec![0usize];
    let mut seen = vec![false; topology.len()];
    seen[0] = true;
    let mut head = 0;
    while order.len() < n {
        let u = order[head];
        head += 1;
        for &v in topology.neighbors(u) {
            if !seen[v] && order.len() < n {
                seen[v] = true;
                order.push(v);
            }
        }
    }
    Ok(order)
}

/// Heuristic SWAP insertion. Logical qubit `i` starts on circuit qubit `i`,
/// which is the `i`-th node of a breadth-first region of the topology; all
/// SWAPs stay inside that region. Each cost layer starts from the placement
/// the previous one ended with.
pub fn route_greedy(
    graph: &ProblemGraph,
    topology: &HardwareTopology,
    params: &QaoaParams,
) -> Result<RoutedCircuit> {
    let n = graph.n();
    let region = bfs_region(topology, n)?;
    // Coupling graph and distances in circuit-qubit labels.
    let couplings: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| topology.adjacent(region[a], region[b]))
        .collect();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &couplings {
        adj[a].push(b);
        adj[b].push(a);
    }
    let dist: Vec<Vec<usize>> = (0..n).map(|s| bfs_hops(&adj, s)).collect();

    let mut pos: Vec<usize> = (0..n).collect(); // logical -> circuit qubit
    let mut c = Circuit::new(n);
    c.push_moment(hadamard_layer(n))?;
    for (&gamma, &beta) in params.gamma.iter().zip(&params.beta) {
        let mut todo: Vec<(usize, usize, i8)> = graph.edges().iter().map(|e| (e.j, e.k, e.w)).collect();
        let mut guard = 0usize;
        while !todo.is_empty() {
            guard += 1;
            if guard > 64 * n * n + 64 {
                return Err(Error::Routing("greedy router made no progress".into()));
            }
            loop {
                let mut busy = vec![false; n];
                let mut moment = Vec::new();
                todo.retain(|&(j, k, w)| {
                    let (a, b) = (pos[j], pos[k]);
                    if dist[a][b] == 1 && !busy[a] && !busy[b] {
                        busy[a] = true;
                        busy[b] = true;
                        moment.push(Gate::two(GateKind::Zz(gamma * w as f64), a, b));
                        false
                    } else {
                        true
                    }
                });
                if moment.is_empty() {
                    break;
                }
                c.push_moment(moment)?;
            }
            if todo.is_empty() {
                break;
            }
            let layer = greedy_swap_layer(&couplings, &dist, &pos, &todo);
            if layer.is_empty() {
                // Walk one endpoint of the closest pending edge next to the other.
                let &(j, k, _) = todo
                    .iter()
                    .min_by_key(|&&(j, k, _)| (dist[pos[j]][pos[k]], j, k))
                    .expect("todo is non-empty");
                while dist[pos[j]][pos[k]] > 1 {
                    let a = pos[j];
                    let next = *adj[a]
                        .iter()
                        .filter(|&&v| dist[v][pos[k]] + 1 == dist[a][pos[k]])
                        .min()
                        .expect("connected region");
                    apply_swaps(&mut c, &mut pos, &[(a.min(next), a.max(next))])?;
                }
            } else {
                apply_swaps(&mut c, &mut pos, &layer)?;
            }
        }
        c.push_moment(driver_layer(n, beta))?;
    }
    c.measure_all()?;
    c.set_final_permutation(pos)?;
    RoutedCircuit::finish(c, Strategy::Greedy, region)
}

fn bfs_hops(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    d[s] = 0;
    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if d[v] == usize::MAX {
                d[v] = d[u] + 1;
                queue.push_back(v);
            }
        }
    }
    d
}

fn apply_swaps(c: &mut Circuit, pos: &mut [usize], layer: &[(usize, usize)]) -> Result<()> {
    for &(a, b) in layer {
        for p in pos.iter_mut() {
            if *p == a {
                *p = b;
            } else if *p == b {
                *p = a;
            }
        }
    }
    c.push_moment(layer.iter().map(|&(a, b)| Gate::two(GateKind::Swap, a, b)).collect())
}

fn pending_cost(dist: &[Vec<usize>], pos: &[usize], todo: &[(usize, usize, i8)]) -> usize {
    todo.iter().map(|&(j, k, _)| dist[pos[j]][pos[k]] - 1).sum()
}

/// Builds one parallel SWAP layer: repeatedly adds the disjoint coupling
/// whose swap lowers `Σ (dist - 1)` over pending edges the most, ties broken
/// by coupling order, until no swap gives a strict decrease.
fn greedy_swap_layer(
    couplings: &[(usize, usize)],
    dist: &[Vec<usize>],
    pos: &[usize],
    todo: &[(usize, usize, i8)],
) -> Vec<(usize, usize)> {
    let mut pos = pos.to_vec();
    let mut busy = vec![false; pos.len()];
    let mut layer = Vec::new();
    let mut current = pending_cost(dist, &pos, todo);
    loop {
        let mut best: Option<(usize, (usize, usize))> = None;
        for &(a, b) in couplings {
            if busy[a] || busy[b] {
                continue;
            }
            let trial: Vec<usize> =
                pos.iter().map(|&p| if p == a { b } else if p == b { a } else { p }).collect();
            let cost = pending_cost(dist, &trial, todo);
            if cost < current && best.is_none_or(|(bc, _)| cost < bc) {
                best = Some((cost, (a, b)));
            }
        }
        let Some((cost, (a, b))) = best else { break };
        for p in pos.iter_mut() {
            if *p == a {
                *p = b;
            } else if *p == b {
                *p = a;
            }
        }
        busy[a] = true;
        busy[b] = true;
        current = cost;
        layer.push((a, b));
    }
    layer.sort_unstable();
    layer
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_hardware_grid, gen_sk, Edge};

    #[test]
    fn params_validation() {
        assert!(QaoaParams::new(vec![], vec![]).is_err());
        assert!(QaoaParams::new(vec![0.1], vec![0.1, 0.2]).is_err());
        let p = QaoaParams::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert_eq!(QaoaParams::from_slice(&p.to_vec()).unwrap(), p);
    }

    #[test]
    fn abstract_has_p_driver_layers() {
        let g = gen_sk(5, 1).unwrap();
        let params = QaoaParams::new(vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6]).unwrap();
        let c = build_qaoa_abstract(&g, &params).unwrap();
        let drivers = c
            .moments()
            .iter()
            .filter(|m| m.len() == 5 && m.iter().all(|g| matches!(g.kind(), GateKind::PhX { .. })))
            .count();
        assert_eq!(drivers, 3);
        assert_eq!(c.count(|k| matches!(k, GateKind::Zz(_))), 30);
        assert!(c.is_measured());
    }

    #[test]
    fn embed_small_line() {
        let t = HardwareTopology::line(5).unwrap();
        assert_eq!(embed_line(&t, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(embed_line(&t, 6).is_err());
        assert!(embed_line(&t, 1).is_err());
    }

    #[test]
    fn wesn_rounds_are_matchings() {
        for t in [HardwareTopology::grid(2, 2).unwrap(), HardwareTopology::grid(3, 4).unwrap(), HardwareTopology::default23()] {
            let mut rounds: [Vec<(usize, usize)>; 4] = Default::default();
            for (a, b) in t.edges() {
                rounds[wesn_round(&t, a, b)].push((a, b));
            }
            for r in &rounds {
                let mut seen = HashSet::new();
                for &(a, b) in r {
                    assert!(seen.insert(a) && seen.insert(b));
                }
            }
            assert_eq!(rounds.iter().map(Vec::len).sum::<usize>(), t.edges().len());
        }
    }

    #[test]
    fn wesn_rejects_other_families() {
        let g = gen_sk(4, 1).unwrap();
        let params = QaoaParams::new(vec![0.1], vec![0.2]).unwrap();
        assert!(matches!(route_wesn(&g, &params), Err(Error::FamilyMismatch(_))));
    }

    #[test]
    fn swap_network_rejects_short_line() {
        let g = gen_sk(5, 1).unwrap();
        let t = HardwareTopology::line(5).unwrap();
        let params = QaoaParams::new(vec![0.1], vec![0.2]).unwrap();
        assert!(matches!(route_swap_network(&g, &params, &t, &[0, 1, 2, 3]), Err(Error::Embedding(_))));
        assert!(matches!(route_swap_network(&g, &params, &t, &[0, 1, 3, 2, 4]), Err(Error::Embedding(_))));
    }

    #[test]
    fn greedy_zero_swaps_on_native_graph() {
        let t = HardwareTopology::grid(2, 3).unwrap();
        let g = gen_hardware_grid(&t, 5).unwrap();
        let region = bfs_region(&t, 6).unwrap();
        // relabel the instance into region order so the identity placement is native
        let inv: Vec<usize> = (0..6).map(|q| region.iter().position(|&r| r == q).unwrap()).collect();
        let edges = g.edges().iter().map(|e| Edge { j: inv[e.j], k: inv[e.k], w: e.w }).collect();
        let h = ProblemGraph::new(Family::HardwareGrid, 6, 0, edges, None).unwrap();
        let params = QaoaParams::new(vec![0.3, 0.1], vec![0.2, 0.5]).unwrap();
        let r = route_greedy(&h, &t, &params).unwrap();
        let routed = r.routed.as_ref().unwrap();
        assert_eq!(routed.count(|k| matches!(k, GateKind::Swap)), 0);
        assert_eq!(r.logical_to_physical_final, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn routed_json_round_trip() {
        let g = gen_sk(4, 2).unwrap();
        let t = HardwareTopology::line(4).unwrap();
        let params = QaoaParams::new(vec![0.3], vec![0.2]).unwrap();
        let r = route_swap_network(&g, &params, &t, &[0, 1, 2, 3]).unwrap();
        let s = r.to_json().unwrap();
        assert!(s.contains("\"strategy\":\"swap-network\""));
        let back = RoutedCircuit::from_json(&s).unwrap();
        assert_eq!(back.circuit, r.circuit);
        assert_eq!(back.logical_to_physical_final, vec![3, 2, 1, 0]);
        assert_eq!(back.to_json().unwrap(), s);
    }
}
