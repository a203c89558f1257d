//! Catalyst configurations: candidate families, lexicographic enumeration,
//! the odd-loop filter and best-placement search.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{mask_of, Partition, WeightedGraph};
use crate::spectrum::{gap_scan_operators, AnnealOperators, ScanOptions};

/// Overall sign of the catalyst's `X`-type terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Sign {
    /// Negative off-diagonal entries.
    #[default]
    Stoquastic,
    NonStoquastic,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Stoquastic => 1.0,
            Sign::NonStoquastic => -1.0,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Stoquastic),
            -1 => Ok(Sign::NonStoquastic),
            other => Err(Error::InvalidConfig(format!("sign must be +1 or -1, got {other}"))),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value() as i8)
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(deserializer)?;
        Sign::from_value(v).map_err(serde::de::Error::custom)
    }
}

fn unit_strength() -> f64 {
    1.0
}

fn is_unit(x: &f64) -> bool {
    *x == 1.0
}

/// Jointly flipped qubit subsets sharing one sign and strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalystConfig {
    pub sign: Sign,
    pub subsets: Vec<Vec<usize>>,
    pub label: String,
    #[serde(default = "unit_strength", skip_serializing_if = "is_unit")]
    pub strength: f64,
}

impl CatalystConfig {
    /// Sorts each subset and drops repeated subsets, keeping first occurrences.
    pub fn new(subsets: Vec<Vec<usize>>, sign: Sign, label: impl Into<String>) -> Self {
        let mut seen = HashSet::new();
        let subsets = subsets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s
            })
            .filter(|s| seen.insert(s.clone()))
            .collect();
        Self {
            sign,
            subsets,
            label: label.into(),
            strength: 1.0,
        }
    }

    /// The single all-qubit subset.
    pub fn product(n_qubits: usize, sign: Sign) -> Self {
        Self::new(vec![(0..n_qubits).collect()], sign, "product")
    }

    pub fn none() -> Self {
        Self::new(Vec::new(), Sign::Stoquastic, "none")
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    /// Number of couplings `m`.
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Checks every subset against an `n_qubits` register.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.subsets {
            let reason = if s.len() < 2 {
                Some("needs at least two qubits".to_string())
            } else if let Some(v) = s.iter().find(|&&v| v >= n_qubits) {
                Some(format!("qubit {v} outside {n_qubits} qubits"))
            } else if s.windows(2).any(|w| w[0] >= w[1]) {
                Some("indices must be distinct and sorted".to_string())
            } else if !seen.insert(s) {
                Some("duplicate subset".to_string())
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::InvalidSubset {
                    subset: s.clone(),
                    reason,
                });
            }
        }
        if !self.strength.is_finite() {
            return Err(Error::InvalidConfig(format!("strength {}", self.strength)));
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("config serialization is infallible")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(text)?;
        let strength = raw.strength;
        Ok(Self::new(raw.subsets, raw.sign, raw.label).with_strength(strength))
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        if !next_combination(&mut c, n) {
            return out;
        }
    }
}

/// Advances `c` to the next `k`-combination of `0..n`; false after the last.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `n = 2`: the edges. `n = 3`: triples spanning at least two edges.
pub fn edge_sets(graph: &WeightedGraph, n: usize) -> Result<Vec<Vec<usize>>> {
    let needed = match n {
        2 => 1,
        3 => 2,
        _ => return Err(Error::InvalidSpec(format!("edge sets need n in {{2, 3}}, got {n}"))),
    };
    Ok(combinations(graph.n_vertices(), n)
        .into_iter()
        .filter(|s| graph.induced_edge_count(mask_of(s)) >= needed)
        .collect())
}

/// `n`-subsets whose induced subgraph is connected. For `n = 3` this is the
/// same family as [`edge_sets`].
pub fn connected_sets(graph: &WeightedGraph, n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 2 || n > graph.n_vertices() {
        return Err(Error::InvalidSpec(format!(
            "subset size {n} outside 2..={}",
            graph.n_vertices()
        )));
    }
    Ok(combinations(graph.n_vertices(), n)
        .into_iter()
        .filter(|s| induced_connected(graph, mask_of(s)))
        .collect())
}

fn induced_connected(graph: &WeightedGraph, mask: u64) -> bool {
    let mut reached = 1u64 << mask.trailing_zeros();
    loop {
        let frontier = crate::graph::bits(reached)
            .fold(reached, |acc, v| acc | (graph.neighbors_mask(v) & mask));
        if frontier == reached {
            return reached == mask;
        }
        reached = frontier;
    }
}

/// `n`-subsets with no internal edge.
pub fn complement_sets(graph: &WeightedGraph, n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("subsets need n >= 2, got {n}")));
    }
    Ok(combinations(graph.n_vertices(), n)
        .into_iter()
        .filter(|s| graph.induced_edge_count(mask_of(s)) == 0)
        .collect())
}

pub fn all_sets(n_qubits: usize, n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 2 || n > n_qubits {
        return Err(Error::InvalidSpec(format!(
            "subset size {n} outside 2..={n_qubits}"
        )));
    }
    Ok(combinations(n_qubits, n))
}

/// Subsets whose induced subgraph has no odd cycle, then those that do.
pub fn hierarchy_filter(
    graph: &WeightedGraph,
    subsets: &[Vec<usize>],
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    subsets
        .iter()
        .cloned()
        .partition(|s| !graph.induced_has_odd_cycle(mask_of(s)))
}

/// All `m`-element choices from a candidate list, in lexicographic order of
/// candidate indices.
#[derive(Debug, Clone)]
pub struct Placements<'a> {
    candidates: &'a [Vec<usize>],
    m: usize,
}

pub fn enumerate_placements(candidates: &[Vec<usize>], m: usize) -> Result<Placements<'_>> {
    if m > candidates.len() {
        return Err(Error::InvalidRange(format!(
            "cannot choose {m} of {} candidates",
            candidates.len()
        )));
    }
    Ok(Placements { candidates, m })
}

impl<'a> Placements<'a> {
    pub fn count(&self) -> u128 {
        binomial(self.candidates.len(), self.m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Candidate indices of the configuration with lexicographic `rank`.
    pub fn unrank(&self, mut rank: u128) -> Option<Vec<usize>> {
        if rank >= self.count() {
            return None;
        }
        let c = self.candidates.len();
        let mut out = Vec::with_capacity(self.m);
        let mut x = 0;
        for pos in 0..self.m {
            loop {
                let below = binomial(c - 1 - x, self.m - 1 - pos);
                if rank < below {
                    break;
                }
                rank -= below;
                x += 1;
            }
            out.push(x);
            x += 1;
        }
        Some(out)
    }

    pub fn rank(&self, indices: &[usize]) -> u128 {
        let c = self.candidates.len();
        let mut rank = 0;
        let mut x = 0;
        for (pos, &idx) in indices.iter().enumerate() {
            while x < idx {
                rank += binomial(c - 1 - x, self.m - 1 - pos);
                x += 1;
            }
            x += 1;
        }
        rank
    }

    /// Index tuples in rank order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let n = self.candidates.len();
        let mut current: Option<Vec<usize>> = Some((0..self.m).collect());
        std::iter::from_fn(move || {
            let out = current.take()?;
            let mut next = out.clone();
            if next_combination(&mut next, n) {
                current = Some(next);
            }
            Some(out)
        })
    }

    /// Every `workers`-th configuration starting at rank `worker`.
    pub fn shard(&self, worker: usize, workers: usize) -> impl Iterator<Item = (u128, Vec<usize>)> + '_ {
        let workers = workers.max(1);
        self.iter()
            .enumerate()
            .skip(worker)
            .step_by(workers)
            .map(|(r, c)| (r as u128, c))
    }

    pub fn config(&self, indices: &[usize], sign: Sign, label: impl Into<String>) -> CatalystConfig {
        CatalystConfig::new(
            indices.iter().map(|&i| self.candidates[i].clone()).collect(),
            sign,
            label,
        )
    }

    pub fn configs(&self, sign: Sign) -> impl Iterator<Item = CatalystConfig> + '_ {
        let m = self.m;
        self.iter()
            .enumerate()
            .map(move |(r, idx)| self.config(&idx, sign, format!("m={m}#{r}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub config: CatalystConfig,
    pub delta_min: f64,
    pub rank: u128,
    pub evaluated: usize,
    pub exhaustive: bool,
}

/// Ranks visited by [`optimal_search`]: all of them when they fit in the
/// budget, otherwise the first `budget` distinct uniform draws.
pub fn search_ranks(count: u128, budget: usize, seed: u64) -> Vec<u128> {
    if count <= budget as u128 {
        return (0..count).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(budget);
    let mut out = Vec::with_capacity(budget);
    while out.len() < budget {
        let r = rng.random_range(0..count);
        if seen.insert(r) {
            out.push(r);
        }
    }
    out
}

/// The placement of `m` candidates maximizing the minimum gap.
#[allow(clippy::too_many_arguments)]
pub fn optimal_search(
    graph: &WeightedGraph,
    candidates: &[Vec<usize>],
    m: usize,
    sign: Sign,
    budget: usize,
    seed: u64,
    partition: &Partition,
    scan: &ScanOptions,
) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::InvalidRange("search budget must be at least 1".into()));
    }
    let placements = enumerate_placements(candidates, m)?;
    let ranks = search_ranks(placements.count(), budget, seed);
    let gaps: Vec<f64> = ranks
        .par_iter()
        .map(|&r| {
            let idx = placements.unrank(r).expect("rank below count");
            let config = placements.config(&idx, sign, "");
            let ops = AnnealOperators::new(graph, Some(&config))?;
            gap_scan_operators(&ops, partition, scan).map(|s| s.delta_min)
        })
        .collect::<Result<_>>()?;
    let (best_rank, delta_min) = ranks
        .iter()
        .zip(&gaps)
        .fold(None::<(u128, f64)>, |best, (&r, &g)| match best {
            Some((br, bg)) if bg > g || (bg == g && br < r) => Some((br, bg)),
            _ => Some((r, g)),
        })
        .expect("budget is positive");
    let idx = placements.unrank(best_rank).expect("rank below count");
    Ok(SearchResult {
        config: placements.config(&idx, sign, format!("optimal m={m} rank={best_rank}")),
        delta_min,
        rank: best_rank,
        evaluated: ranks.len(),
        exhaustive: placements.count() <= budget as u128,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_bipartite, BipartiteToySpec};

    #[test]
    fn toy_candidate_counts() {
        let g = build_bipartite(&BipartiteToySpec::standard(3)).unwrap();
        assert_eq!(edge_sets(&g, 2).unwrap().len(), 12);
        assert_eq!(complement_sets(&g, 2).unwrap().len(), 9);
        assert_eq!(all_sets(7, 2).unwrap().len(), 21);
        assert_eq!(all_sets(7, 3).unwrap().len(), 35);
        assert_eq!(all_sets(5, 5).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
        assert!(edge_sets(&g, 4).is_err());
    }

    #[test]
    fn connected_triples_match_edge_triples() {
        let g = crate::graph::table1_topology().structural().unwrap();
        assert_eq!(connected_sets(&g, 3).unwrap(), edge_sets(&g, 3).unwrap());
        assert_eq!(connected_sets(&g, 2).unwrap(), edge_sets(&g, 2).unwrap());
    }

    #[test]
    fn path_triple() {
        let g = WeightedGraph::new(vec![0.5; 3], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(edge_sets(&g, 3).unwrap(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn complete_graph_has_no_complement_sets() {
        let edges: Vec<_> = combinations(5, 2).iter().map(|p| (p[0], p[1], 1.0)).collect();
        let g = WeightedGraph::new(vec![0.5; 5], edges).unwrap();
        assert!(complement_sets(&g, 2).unwrap().is_empty());
        assert!(complement_sets(&g, 3).unwrap().is_empty());
    }

    #[test]
    fn rank_unrank_round_trip() {
        let cands = all_sets(5, 2).unwrap();
        for m in 0..=cands.len() {
            let p = enumerate_placements(&cands, m).unwrap();
            let all: Vec<_> = p.iter().collect();
            assert_eq!(all.len() as u128, p.count());
            for (r, c) in all.iter().enumerate() {
                assert_eq!(p.unrank(r as u128).as_ref(), Some(c));
                assert_eq!(p.rank(c), r as u128);
            }
        }
        let p = enumerate_placements(&cands, 0).unwrap();
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert!(enumerate_placements(&cands, 11).is_err());
    }

    #[test]
    fn seven_spin_total() {
        let cands = all_sets(7, 2).unwrap();
        let total: u128 = (0..=21).map(|m| enumerate_placements(&cands, m).unwrap().count()).sum();
        assert_eq!(total, 2_097_152);
        let four = all_sets(5, 4).unwrap();
        assert_eq!(four.len(), 5);
        let total4: u128 = (1..=5).map(|m| binomial(5, m)).sum();
        assert_eq!(total4 + 1, 32);
    }

    #[test]
    fn sign_serializes_as_integer() {
        let cfg = CatalystConfig::new(vec![vec![2, 0], vec![0, 2], vec![1, 3]], Sign::NonStoquastic, "x");
        assert_eq!(cfg.subsets, vec![vec![0, 2], vec![1, 3]]);
        let text = cfg.to_json_string();
        assert_eq!(text, r#"{"sign":-1,"subsets":[[0,2],[1,3]],"label":"x"}"#);
        assert_eq!(CatalystConfig::from_json_str(&text).unwrap(), cfg);
        assert!(CatalystConfig::from_json_str(r#"{"sign":2,"subsets":[],"label":""}"#).is_err());
    }

    #[test]
    fn filter_examples() {
        let tri = WeightedGraph::new(vec![0.5; 3], [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let (ok, bad) = hierarchy_filter(&tri, &[vec![0, 1, 2]]);
        assert!(ok.is_empty());
        assert_eq!(bad, vec![vec![0, 1, 2]]);
        let square =
            WeightedGraph::new(vec![0.5; 4], [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
                .unwrap();
        let (ok, bad) = hierarchy_filter(&square, &[vec![0, 1, 2, 3]]);
        assert_eq!(ok.len(), 1);
        assert!(bad.is_empty());
    }

    #[test]
    fn sampled_ranks_are_nested_and_distinct() {
        let small = search_ranks(1000, 10, 7);
        let large = search_ranks(1000, 50, 7);
        assert_eq!(&large[..10], &small[..]);
        let unique: HashSet<_> = large.iter().collect();
        assert_eq!(unique.len(), 50);
        assert_eq!(search_ranks(5, 10, 7), vec![0, 1, 2, 3, 4]);
    }
}
