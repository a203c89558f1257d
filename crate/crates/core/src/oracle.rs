//! Closed-form excitation costs of the bipartite toy and the condition under
//! which its first excited state is the fully flipped one.

use crate::error::{Error, Result};
use crate::graph::{build_bipartite, BipartiteToySpec};
use crate::hamiltonian::problem_hamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipKind {
    OneA,
    OneB,
    All,
    OneAOneB,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipCostReport {
    pub kind: FlipKind,
    /// Vertices whose spins are flipped relative to the ground state.
    pub flip_set: Vec<usize>,
    pub symbolic_cost: f64,
    pub numeric_cost: f64,
}

impl FlipCostReport {
    pub fn discrepancy(&self) -> f64 {
        (self.symbolic_cost - self.numeric_cost).abs()
    }
}

/// Closed-form cost of `kind` on a `(k + 1, k)` toy, measured from the state
/// with all of partition B up.
pub fn symbolic_cost(spec: &BipartiteToySpec, kind: FlipKind) -> f64 {
    let k = spec.size_b as f64;
    let (w1, w2, j) = (spec.total_weight_a, spec.total_weight_b, spec.coupling);
    match kind {
        FlipKind::OneA => 4.0 * k * j - 4.0 * w1 / (k + 1.0),
        FlipKind::OneB => 4.0 * w2 / k,
        FlipKind::All => 4.0 * (w2 - w1),
        FlipKind::OneAOneB => 4.0 * (k - 1.0) * j - 4.0 * w1 / (k + 1.0) + 4.0 * w2 / k,
    }
}

/// Symbolic and diagonal-difference costs of the four elementary flips for
/// any `(k + 1, k)` toy.
pub fn flip_costs(spec: &BipartiteToySpec) -> Result<Vec<FlipCostReport>> {
    let graph = build_bipartite(spec)?;
    let diag = problem_hamiltonian(&graph)?.diagonal();
    let n = spec.n_spins();
    let a0 = 0;
    let b0 = spec.size_a;
    let ground: usize = (b0..n).map(|v| 1 << v).sum();
    let flips = [
        (FlipKind::OneA, vec![a0]),
        (FlipKind::OneB, vec![b0]),
        (FlipKind::All, (0..n).collect()),
        (FlipKind::OneAOneB, vec![a0, b0]),
    ];
    Ok(flips
        .into_iter()
        .map(|(kind, flip_set)| {
            let excited = flip_set.iter().fold(ground, |b, &v| b ^ (1 << v));
            FlipCostReport {
                kind,
                symbolic_cost: symbolic_cost(spec, kind),
                numeric_cost: diag[excited] - diag[ground],
                flip_set,
            }
        })
        .collect())
}

/// [`flip_costs`] restricted to the seven-spin `(4, 3)` toy.
pub fn appendix_a_costs(spec: &BipartiteToySpec) -> Result<Vec<FlipCostReport>> {
    if (spec.size_a, spec.size_b) != (4, 3) {
        return Err(Error::WrongShape(format!(
            "expected partition sizes (4, 3), got ({}, {})",
            spec.size_a, spec.size_b
        )));
    }
    flip_costs(spec)
}

/// `W_2 − W_1 < W_2 / 3` for the seven-spin toy.
pub fn first_order_condition(w1: f64, w2: f64) -> Result<bool> {
    first_order_condition_sized(w1, w2, 3)
}

/// `W_2 − W_1 < W_2 / k` for the `(k + 1, k)` toy: flipping every spin is
/// cheaper than removing one vertex from partition B.
pub fn first_order_condition_sized(w1: f64, w2: f64, size_b: usize) -> Result<bool> {
    if !(w1 > 0.0 && w1 < w2) || size_b == 0 {
        return Err(Error::InvalidOrder { w1, w2 });
    }
    // Same inequality as k·W_1 > (k − 1)·W_2, which keeps the boundary exact
    // for weights given as rational multiples of each other.
    let k = size_b as f64;
    Ok(k * w1 > (k - 1.0) * w2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(w1: f64, w2: f64, j: f64) -> BipartiteToySpec {
        BipartiteToySpec {
            size_a: 4,
            size_b: 3,
            total_weight_a: w1,
            total_weight_b: w2,
            coupling: j,
        }
    }

    #[test]
    fn default_costs_agree() {
        for r in appendix_a_costs(&BipartiteToySpec::standard(3)).unwrap() {
            assert!(r.discrepancy() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn equal_weights_make_all_flip_free() {
        let reports = appendix_a_costs(&toy(0.04, 0.04, 0.2)).unwrap();
        let all = reports.iter().find(|r| r.kind == FlipKind::All).unwrap();
        assert_eq!(all.symbolic_cost, 0.0);
        assert!(all.numeric_cost.abs() < 1e-12);
    }

    #[test]
    fn shape_and_order_checks() {
        assert!(matches!(
            appendix_a_costs(&BipartiteToySpec::standard(2)),
            Err(Error::WrongShape(_))
        ));
        assert!(first_order_condition(0.0396, 0.04).unwrap());
        assert!(!first_order_condition(0.04 * 2.0 / 3.0, 0.04).unwrap());
        assert!(matches!(
            first_order_condition(0.05, 0.04),
            Err(Error::InvalidOrder { .. })
        ));
    }

    #[test]
    fn generalized_sizes_agree() {
        for size_b in 1..=5 {
            let spec = BipartiteToySpec::standard(size_b);
            for r in flip_costs(&spec).unwrap() {
                assert!(r.discrepancy() < 1e-12, "size {size_b}: {r:?}");
            }
        }
    }
}
