//! Weighted independent-set instances.
//!
//! A [`WeightedGraph`] carries positive vertex weights and antiferromagnetic
//! edge couplings. Every edge must satisfy `J_ij > min(w_i, w_j)` so that the
//! Ising ground state encodes a maximum-weight independent set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count supported by the bitmask representations.
pub const MAX_VERTICES: usize = 64;

/// Largest instance the exhaustive MWIS oracle accepts.
pub const MWIS_MAX_VERTICES: usize = 30;

/// Default cap on cycle length for [`odd_frustrated_loops`].
pub const DEFAULT_MAX_LOOP_LENGTH: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: Vec<f64>,
    edges: Vec<Edge>,
    adjacency: Vec<u64>,
}

/// JSON interchange form: `{n, weights, edges: [[i, j, J], ...]}` with
/// `i < j` and rows sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub weights: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(
        weights: Vec<f64>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if n > MAX_VERTICES {
            return Err(Error::InvalidGraph(format!(
                "{n} vertices exceeds the supported maximum of {MAX_VERTICES}"
            )));
        }
        for (v, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "weight of vertex {v} must be positive, got {w}"
                )));
            }
        }

        let mut list = Vec::new();
        let mut adjacency = vec![0u64; n];
        for (a, b, coupling) in edges {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {i}")));
            }
            if j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a vertex outside 0..{n}"
                )));
            }
            if adjacency[i] >> j & 1 == 1 {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            let floor = weights[i].min(weights[j]);
            if !(coupling.is_finite() && coupling > floor) {
                return Err(Error::InvalidGraph(format!(
                    "coupling J_({i},{j}) = {coupling} must exceed min(w_i, w_j) = {floor}"
                )));
            }
            adjacency[i] |= 1 << j;
            adjacency[j] |= 1 << i;
            list.push(Edge { i, j, coupling });
        }
        list.sort_by_key(|e| (e.i, e.j));

        Ok(Self {
            weights,
            edges: list,
            adjacency,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Edges in canonical order (`i < j`, sorted).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbour bitmask of vertex `v`.
    pub fn neighbors_mask(&self, v: usize) -> u64 {
        self.adjacency[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.adjacency[v])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n_vertices() && j < self.n_vertices() && self.adjacency[i] >> j & 1 == 1
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges
            .binary_search_by_key(&key, |e| (e.i, e.j))
            .ok()
            .map(|k| self.edges[k].coupling)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].count_ones() as usize
    }

    /// Coefficient of `σ^z_i` in the Ising form: `Σ_{j∈nbr_i} J_ij − 2 w_i`.
    pub fn linear_coefficient(&self, v: usize) -> f64 {
        let incident: f64 = self
            .edges
            .iter()
            .filter(|e| e.i == v || e.j == v)
            .map(|e| e.coupling)
            .sum();
        incident - 2.0 * self.weights[v]
    }

    pub fn is_independent(&self, set_mask: u64) -> bool {
        bits(set_mask).all(|v| self.adjacency[v] & set_mask == 0)
    }

    /// Sum of weights over `set_mask`, accumulated in vertex order.
    pub fn set_weight(&self, set_mask: u64) -> f64 {
        bits(set_mask).map(|v| self.weights[v]).sum()
    }

    /// Number of edges with both endpoints inside `mask`.
    pub fn induced_edge_count(&self, mask: u64) -> usize {
        bits(mask)
            .map(|v| (self.adjacency[v] & mask).count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// True when the subgraph induced by `mask` contains an odd cycle.
    pub fn induced_has_odd_cycle(&self, mask: u64) -> bool {
        // 2-colouring by BFS; a conflict means the induced subgraph is not bipartite.
        let mut color = [0i8; MAX_VERTICES];
        for root in bits(mask) {
            if color[root] != 0 {
                continue;
            }
            color[root] = 1;
            let mut stack = vec![root];
            while let Some(u) = stack.pop() {
                for v in bits(self.adjacency[u] & mask) {
                    if color[v] == 0 {
                        color[v] = -color[u];
                        stack.push(v);
                    } else if color[v] == color[u] {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n_vertices(),
            weights: self.weights.clone(),
            edges: self.edges.iter().map(|e| (e.i, e.j, e.coupling)).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        if json.weights.len() != json.n {
            return Err(Error::InvalidGraph(format!(
                "n = {} but {} weights given",
                json.n,
                json.weights.len()
            )));
        }
        Self::new(json.weights.clone(), json.edges.iter().copied())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph serialization is infallible")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }
}

/// Iterates the set bits of `mask` in increasing order.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(v)
        }
    })
}

pub fn mask_of(vertices: &[usize]) -> u64 {
    vertices.iter().fold(0, |m, &v| m | 1 << v)
}

/// Two disjoint vertex sets defining the imbalance `Σ_A σ^z − Σ_B σ^z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Partition {
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Self {
        Self { a, b }
    }
}

/// Complete bipartite toy: `size_a = size_b + 1` spins with total weights
/// `W_1` (A) and `W_2` (B), uniform coupling `J` across the cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteToySpec {
    pub size_a: usize,
    pub size_b: usize,
    pub total_weight_a: f64,
    pub total_weight_b: f64,
    pub coupling: f64,
}

/// Default total weight of the heavier partition B.
pub const DEFAULT_TOY_WEIGHT: f64 = 0.04;
/// Default relative weight deficit of partition A: `W_1 = W_2 (1 − 0.01)`.
pub const DEFAULT_TOY_DEFICIT: f64 = 0.01;
/// Default coupling in units of `W_2`.
pub const DEFAULT_TOY_COUPLING_RATIO: f64 = 5.33;

impl BipartiteToySpec {
    /// Default-parameter toy with `size_b` spins in B and `size_b + 1` in A.
    pub fn standard(size_b: usize) -> Self {
        let w2 = DEFAULT_TOY_WEIGHT;
        Self {
            size_a: size_b + 1,
            size_b,
            total_weight_a: w2 * (1.0 - DEFAULT_TOY_DEFICIT),
            total_weight_b: w2,
            coupling: DEFAULT_TOY_COUPLING_RATIO * w2,
        }
    }

    /// Default toy with `L` total spins (`L` odd, at least 3).
    pub fn with_total_size(total: usize) -> Result<Self> {
        if total < 3 || total % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "bipartite toy needs an odd size of at least 3, got {total}"
            )));
        }
        Ok(Self::standard(total / 2))
    }

    pub fn n_spins(&self) -> usize {
        self.size_a + self.size_b
    }

    pub fn site_weight_a(&self) -> f64 {
        self.total_weight_a / self.size_a as f64
    }

    pub fn site_weight_b(&self) -> f64 {
        self.total_weight_b / self.size_b as f64
    }

    pub fn partition(&self) -> Partition {
        Partition::new(
            (0..self.size_a).collect(),
            (self.size_a..self.n_spins()).collect(),
        )
    }
}

pub fn build_bipartite(spec: &BipartiteToySpec) -> Result<WeightedGraph> {
    if spec.size_b == 0 || spec.size_a != spec.size_b + 1 {
        return Err(Error::InvalidSpec(format!(
            "bipartite toy needs size_a = size_b + 1 with size_b ≥ 1, got ({}, {})",
            spec.size_a, spec.size_b
        )));
    }
    for (name, value) in [
        ("W_1", spec.total_weight_a),
        ("W_2", spec.total_weight_b),
        ("J", spec.coupling),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidSpec(format!("{name} must be positive, got {value}")));
        }
    }
    let (wa, wb) = (spec.site_weight_a(), spec.site_weight_b());
    if spec.coupling <= wa.min(wb) {
        return Err(Error::InvalidSpec(format!(
            "J = {} must exceed the smallest site weight {}",
            spec.coupling,
            wa.min(wb)
        )));
    }
    let n = spec.n_spins();
    let weights = (0..n)
        .map(|v| if v < spec.size_a { wa } else { wb })
        .collect();
    let edges = (0..spec.size_a)
        .flat_map(|i| (spec.size_a..n).map(move |j| (i, j, spec.coupling)))
        .collect::<Vec<_>>();
    WeightedGraph::new(weights, edges)
}

/// Complete tripartite toy. `block_weights` are block totals; every site in
/// block `k` carries `block_weights[k] / block_sizes[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripartiteToySpec {
    pub block_sizes: [usize; 3],
    pub block_weights: [f64; 3],
    pub coupling: f64,
}

impl TripartiteToySpec {
    /// Blocks of 2, 3 and 4 spins with totals `W, W − δW, W − 2δW`,
    /// `W = 0.04`, `δW = 0.01 W` and `J = 5.33 W`.
    pub fn frustrated_triangle() -> Self {
        let w = 0.04;
        let dw = 0.01 * w;
        Self {
            block_sizes: [2, 3, 4],
            block_weights: [w, w - dw, w - 2.0 * dw],
            coupling: 5.33 * w,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn blocks(&self) -> [Vec<usize>; 3] {
        let mut start = 0;
        self.block_sizes.map(|size| {
            let block = (start..start + size).collect();
            start += size;
            block
        })
    }

    /// Imbalance between the first two blocks.
    pub fn partition(&self) -> Partition {
        let [a, b, _] = self.blocks();
        Partition::new(a, b)
    }
}

pub fn build_tripartite(spec: &TripartiteToySpec) -> Result<WeightedGraph> {
    if spec.block_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidSpec("every tripartite block needs a spin".into()));
    }
    if spec
        .block_weights
        .iter()
        .chain(std::iter::once(&spec.coupling))
        .any(|&x| !(x.is_finite() && x > 0.0))
    {
        return Err(Error::InvalidSpec(
            "tripartite weights and coupling must be positive".into(),
        ));
    }
    let blocks = spec.blocks();
    let mut weights = Vec::with_capacity(spec.n_spins());
    for (k, block) in blocks.iter().enumerate() {
        let w = spec.block_weights[k] / spec.block_sizes[k] as f64;
        weights.extend(std::iter::repeat_n(w, block.len()));
    }
    let mut edges = Vec::new();
    for x in 0..3 {
        for y in x + 1..3 {
            for &i in &blocks[x] {
                for &j in &blocks[y] {
                    edges.push((i, j, spec.coupling));
                }
            }
        }
    }
    WeightedGraph::new(weights, edges).map_err(|e| Error::InvalidSpec(e.to_string()))
}

/// Parameters of a seeded Erdős–Rényi instance. Weights are drawn from
/// `[weight_low, weight_high)` and couplings from `[coupling_low, coupling_high)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErdosRenyiSpec {
    pub n: usize,
    pub p: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub coupling_low: f64,
    pub coupling_high: f64,
    pub seed: u64,
}

impl ErdosRenyiSpec {
    /// `p = 0.5`, weights `U[0, 1]`, couplings `U[1, 2]`.
    pub fn ensemble_default(n: usize, seed: u64) -> Self {
        Self {
            n,
            p: 0.5,
            weight_low: 0.0,
            weight_high: 1.0,
            coupling_low: 1.0,
            coupling_high: 2.0,
            seed,
        }
    }
}

pub fn erdos_renyi_instance(spec: &ErdosRenyiSpec) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(Error::InvalidRange(format!("edge probability {} not in [0, 1]", spec.p)));
    }
    if !(spec.weight_low >= 0.0 && spec.weight_low < spec.weight_high) {
        return Err(Error::InvalidRange(format!(
            "weight range [{}, {}) is empty or negative",
            spec.weight_low, spec.weight_high
        )));
    }
    if !(spec.coupling_low < spec.coupling_high) {
        return Err(Error::InvalidRange(format!(
            "coupling range [{}, {}) is empty",
            spec.coupling_low, spec.coupling_high
        )));
    }
    if spec.coupling_low < spec.weight_high {
        return Err(Error::InvalidRange(format!(
            "coupling_low {} < weight_high {}: J_ij > min(w_i, w_j) is not guaranteed",
            spec.coupling_low, spec.weight_high
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = (0..spec.n)
        .map(|_| loop {
            let w = rng.random_range(spec.weight_low..spec.weight_high);
            if w > 0.0 {
                break w;
            }
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..spec.n {
        for j in i + 1..spec.n {
            if rng.random::<f64>() < spec.p {
                edges.push((i, j, rng.random_range(spec.coupling_low..spec.coupling_high)));
            }
        }
    }
    WeightedGraph::new(weights, edges)
}

/// Edge list with couplings but no vertex weights yet.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Topology {
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<WeightedGraph> {
        if weights.len() != self.n {
            return Err(Error::InvalidGraph(format!(
                "topology has {} vertices but {} weights given",
                self.n,
                weights.len()
            )));
        }
        WeightedGraph::new(weights, self.edges.iter().copied())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Graph with unit weights; useful for purely structural queries since
    /// every coupling here exceeds 1.
    pub fn structural(&self) -> Result<WeightedGraph> {
        self.with_weights(vec![1.0; self.n])
    }
}

/// The ten-vertex random graph whose couplings are tabulated for the
/// hierarchy case study. Vertices are relabelled `1..=10 → 0..=9`.
pub fn table1_topology() -> Topology {
    const ROWS: [(usize, usize, f64); 21] = [
        (1, 4, 1.66122),
        (1, 6, 1.01834),
        (1, 8, 1.14459),
        (2, 3, 1.78942),
        (2, 4, 1.10915),
        (2, 6, 1.8282),
        (2, 7, 1.76385),
        (3, 4, 1.57587),
        (3, 9, 1.03825),
        (3, 10, 1.88831),
        (4, 7, 1.27207),
        (4, 9, 1.02395),
        (4, 10, 1.68937),
        (5, 6, 1.23293),
        (5, 8, 1.32764),
        (5, 9, 1.0961),
        (6, 10, 1.09028),
        (7, 8, 1.19425),
        (7, 9, 1.22829),
        (7, 10, 1.96842),
        (8, 10, 1.30031),
    ];
    Topology {
        n: 10,
        edges: ROWS.iter().map(|&(i, j, c)| (i - 1, j - 1, c)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwisSolution {
    pub vertices: Vec<usize>,
    pub weight: f64,
}

impl MwisSolution {
    pub fn mask(&self) -> u64 {
        mask_of(&self.vertices)
    }
}

/// Exhaustive maximum-weight independent set by branch and bound.
///
/// Ties in weight resolve to the lexicographically smallest sorted vertex list.
pub fn brute_force_mwis(graph: &WeightedGraph) -> Result<MwisSolution> {
    let n = graph.n_vertices();
    if n > MWIS_MAX_VERTICES {
        return Err(Error::TooLarge {
            n,
            max: MWIS_MAX_VERTICES,
        });
    }
    let mut search = MwisSearch {
        graph,
        best_mask: 0,
        best_weight: 0.0,
    };
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    search.explore(0, all);
    Ok(MwisSolution {
        vertices: bits(search.best_mask).collect(),
        weight: search.best_weight,
    })
}

struct MwisSearch<'a> {
    graph: &'a WeightedGraph,
    best_mask: u64,
    best_weight: f64,
}

impl MwisSearch<'_> {
    // Branches on the lowest candidate vertex, "include" first, so sets are
    // visited in lexicographic order and only strict improvements replace the best.
    fn explore(&mut self, chosen: u64, candidates: u64) {
        if candidates == 0 {
            let weight = self.graph.set_weight(chosen);
            if weight > self.best_weight
                || (weight == self.best_weight && lex_less(chosen, self.best_mask))
            {
                self.best_weight = weight;
                self.best_mask = chosen;
            }
            return;
        }
        let bound = self.graph.set_weight(chosen) + self.graph.set_weight(candidates);
        if bound < self.best_weight {
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        let rest = candidates & !(1 << v);
        self.explore(chosen | 1 << v, rest & !self.graph.neighbors_mask(v));
        self.explore(chosen, rest);
    }
}

/// Lexicographic order of the sorted vertex lists encoded by two masks.
pub fn lex_less(a: u64, b: u64) -> bool {
    let (mut x, mut y) = (bits(a), bits(b));
    loop {
        match (x.next(), y.next()) {
            (None, None) => return false,
            (None, Some(_)) => return true,
            (Some(_), None) => return false,
            (Some(p), Some(q)) if p != q => return p < q,
            _ => {}
        }
    }
}

/// All simple cycles of odd length `3 ≤ len ≤ max_length`.
///
/// Each cycle starts at its smallest vertex and is oriented so that the
/// second vertex is smaller than the last; the list is sorted.
pub fn odd_frustrated_loops(graph: &WeightedGraph, max_length: usize) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    if max_length < 3 {
        return cycles;
    }
    let n = graph.n_vertices();
    let mut path = Vec::with_capacity(max_length);
    for start in 0..n {
        path.clear();
        path.push(start);
        extend_cycles(graph, start, 1u64 << start, &mut path, max_length, &mut cycles);
    }
    cycles.sort();
    cycles
}

fn extend_cycles(
    graph: &WeightedGraph,
    start: usize,
    visited: u64,
    path: &mut Vec<usize>,
    max_length: usize,
    out: &mut Vec<Vec<usize>>,
) {
    let last = *path.last().expect("path is never empty");
    let higher = !((1u64 << start) | ((1u64 << start) - 1));
    if path.len() >= 3
        && path.len() % 2 == 1
        && graph.has_edge(last, start)
        && path[1] < last
    {
        out.push(path.clone());
    }
    if path.len() == max_length {
        return;
    }
    for next in bits(graph.neighbors_mask(last) & higher & !visited) {
        path.push(next);
        extend_cycles(graph, start, visited | 1 << next, path, max_length, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        build_tripartite(&TripartiteToySpec {
            block_sizes: [1, 1, 1],
            block_weights: [1.0, 1.0, 1.0],
            coupling: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn bipartite_fig1_shape() {
        let spec = BipartiteToySpec {
            size_a: 4,
            size_b: 3,
            total_weight_a: 0.0396,
            total_weight_b: 0.04,
            coupling: 0.2132,
        };
        let g = build_bipartite(&spec).unwrap();
        assert_eq!(g.n_vertices(), 7);
        assert_eq!(g.edges().len(), 12);
        for v in 0..4 {
            assert_eq!(g.weights()[v], 0.0396 / 4.0);
        }
        for v in 4..7 {
            assert_eq!(g.weights()[v], 0.04 / 3.0);
        }
    }

    #[test]
    fn bipartite_rejects_degenerate_partition() {
        let spec = BipartiteToySpec {
            size_a: 1,
            size_b: 0,
            total_weight_a: 1.0,
            total_weight_b: 1.0,
            coupling: 2.0,
        };
        assert!(matches!(build_bipartite(&spec), Err(Error::InvalidSpec(_))));
        let mut bad = BipartiteToySpec::standard(3);
        bad.size_a = 3;
        assert!(build_bipartite(&bad).is_err());
        let mut weak = BipartiteToySpec::standard(3);
        weak.coupling = 1e-4;
        assert!(build_bipartite(&weak).is_err());
        let mut negative = BipartiteToySpec::standard(3);
        negative.total_weight_a = -1.0;
        assert!(build_bipartite(&negative).is_err());
    }

    #[test]
    fn bipartite_small_toy_mwis_is_partition_b() {
        let spec = BipartiteToySpec {
            size_a: 3,
            size_b: 2,
            total_weight_a: 0.0396,
            total_weight_b: 0.04,
            coupling: 0.2132,
        };
        let g = build_bipartite(&spec).unwrap();
        let sol = brute_force_mwis(&g).unwrap();
        assert_eq!(sol.vertices, vec![3, 4]);
    }

    #[test]
    fn tripartite_counts() {
        let spec = TripartiteToySpec::frustrated_triangle();
        let g = build_tripartite(&spec).unwrap();
        assert_eq!(g.n_vertices(), 9);
        assert_eq!(g.edges().len(), 26);
        assert!((g.weights()[0] - 0.02).abs() < 1e-15);
        let sol = brute_force_mwis(&g).unwrap();
        assert_eq!(sol.vertices, vec![0, 1]);

        let t = triangle();
        assert_eq!(t.edges().len(), 3);
        assert_eq!(odd_frustrated_loops(&t, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn graph_validation() {
        assert!(WeightedGraph::new(vec![1.0, 1.0], [(0, 0, 2.0)]).is_err());
        assert!(WeightedGraph::new(vec![1.0, 1.0], [(0, 1, 2.0), (1, 0, 2.0)]).is_err());
        assert!(WeightedGraph::new(vec![1.0, 1.0], [(0, 1, 1.0)]).is_err());
        assert!(WeightedGraph::new(vec![1.0, 0.0], []).is_err());
        assert!(WeightedGraph::new(vec![1.0, 3.0], [(0, 1, 1.5)]).is_ok());
        assert!(WeightedGraph::new(vec![1.0], [(0, 1, 2.0)]).is_err());
    }

    #[test]
    fn single_vertex_mwis() {
        let g = WeightedGraph::new(vec![0.7], []).unwrap();
        let sol = brute_force_mwis(&g).unwrap();
        assert_eq!(sol.vertices, vec![0]);
        assert_eq!(sol.weight, 0.7);
    }

    #[test]
    fn mwis_ties_pick_lexicographically_smallest() {
        // Path 0-1-2 with equal weights 1, 2, 1: {0, 2} and {1} both weigh 2.
        let g = WeightedGraph::new(vec![1.0, 2.0, 1.0], [(0, 1, 3.0), (1, 2, 3.0)]).unwrap();
        let sol = brute_force_mwis(&g).unwrap();
        assert_eq!(sol.vertices, vec![0, 2]);
        assert!(lex_less(0b101, 0b010));
        assert!(!lex_less(0b010, 0b101));
        assert!(lex_less(0b001, 0b011));
    }

    #[test]
    fn mwis_too_large() {
        let g = WeightedGraph::new(vec![1.0; 31], []).unwrap();
        assert!(matches!(brute_force_mwis(&g), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn erdos_renyi_edgeless_and_deterministic() {
        let mut spec = ErdosRenyiSpec::ensemble_default(8, 11);
        spec.p = 0.0;
        let g = erdos_renyi_instance(&spec).unwrap();
        assert!(g.edges().is_empty());
        assert_eq!(brute_force_mwis(&g).unwrap().vertices, (0..8).collect::<Vec<_>>());

        let spec = ErdosRenyiSpec::ensemble_default(10, 42);
        let a = erdos_renyi_instance(&spec).unwrap();
        let b = erdos_renyi_instance(&spec).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        for e in a.edges() {
            assert!(e.coupling > a.weights()[e.i].min(a.weights()[e.j]));
        }
    }

    #[test]
    fn erdos_renyi_rejects_unsafe_ranges() {
        let mut spec = ErdosRenyiSpec::ensemble_default(5, 1);
        spec.coupling_low = 0.5;
        assert!(matches!(erdos_renyi_instance(&spec), Err(Error::InvalidRange(_))));
        let mut spec = ErdosRenyiSpec::ensemble_default(5, 1);
        spec.p = 1.5;
        assert!(erdos_renyi_instance(&spec).is_err());
    }

    #[test]
    fn table1_facts() {
        let t = table1_topology();
        assert_eq!(t.n, 10);
        assert_eq!(t.edges.len(), 21);
        assert_eq!(t.degrees().iter().sum::<usize>(), 42);
        let g = t.structural().unwrap();
        assert_eq!(g.coupling(6, 9), Some(1.96842));
        assert_eq!(g.coupling(0, 3), Some(1.66122));
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let g = WeightedGraph::new(vec![0.5, 0.25, 0.75], [(2, 1, 1.5), (0, 1, 1.25)]).unwrap();
        let text = g.to_json_string();
        assert_eq!(text, r#"{"n":3,"weights":[0.5,0.25,0.75],"edges":[[0,1,1.25],[1,2,1.5]]}"#);
        assert_eq!(WeightedGraph::from_json_str(&text).unwrap(), g);
    }

    #[test]
    fn bipartite_has_no_odd_loops() {
        let g = build_bipartite(&BipartiteToySpec::standard(3)).unwrap();
        assert!(odd_frustrated_loops(&g, 7).is_empty());
        assert!(!g.induced_has_odd_cycle((1 << 7) - 1));
    }

    #[test]
    fn pentagon_loop_found() {
        let edges = (0..5).map(|i| (i, (i + 1) % 5, 2.0));
        let g = WeightedGraph::new(vec![1.0; 5], edges).unwrap();
        assert!(odd_frustrated_loops(&g, 3).is_empty());
        assert_eq!(odd_frustrated_loops(&g, 5), vec![vec![0, 1, 2, 3, 4]]);
        assert!(g.induced_has_odd_cycle(0b11111));
        assert!(!g.induced_has_odd_cycle(0b01111));
    }
}
