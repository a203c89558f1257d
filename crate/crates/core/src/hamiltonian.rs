//! Real Pauli operators over `L` qubits and the anneal Hamiltonians built
//! from them.
//!
//! Basis convention: bit `k` of a computational-basis index is 1 when qubit
//! `k` is spin up (`σ^z = +1`), i.e. vertex `k` belongs to the candidate
//! independent set. Operators are applied matrix-free: a term with masks
//! `(z, x)` maps `|b⟩` to `c · ∏_{k∈z} s_k(b) · |b ⊕ x⟩` where
//! `s_k(b) = +1` if bit `k` of `b` is set and `−1` otherwise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalysts::CatalystConfig;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Largest register the dense and matrix-free kernels are sized for.
pub const MAX_QUBITS: usize = 24;

/// One signed tensor product of `I`, `X` and `Z` factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub z_mask: u64,
    pub x_mask: u64,
}

impl PauliTerm {
    /// Sign picked up by `|b⟩` from the `Z` factors.
    #[inline]
    pub fn z_sign(&self, b: u64) -> f64 {
        if (self.z_mask & !b).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// A Hermitian operator `Σ c_t Z^{z_t} X^{x_t}` with no `Y` factors.
///
/// Terms are kept deduplicated and sorted by `(x_mask, z_mask)`; terms whose
/// coefficient cancels to exactly zero are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTermSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliTermSum {
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidSpec(format!(
                "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let full = (1u64 << n_qubits) - 1;
        let mut merged: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for t in terms {
            if (t.z_mask | t.x_mask) & !full != 0 {
                return Err(Error::InvalidSpec(format!(
                    "term masks (z = {:#b}, x = {:#b}) exceed {n_qubits} qubits",
                    t.z_mask, t.x_mask
                )));
            }
            if t.z_mask & t.x_mask != 0 {
                return Err(Error::InvalidSpec(format!(
                    "term has a Y factor (z and x overlap on {:#b})",
                    t.z_mask & t.x_mask
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidSpec(format!("non-finite coefficient {}", t.coeff)));
            }
            *merged.entry((t.x_mask, t.z_mask)).or_insert(0.0) += t.coeff;
        }
        Ok(Self::from_merged(n_qubits, merged))
    }

    fn from_merged(n_qubits: usize, merged: BTreeMap<(u64, u64), f64>) -> Self {
        let terms = merged
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|((x_mask, z_mask), coeff)| PauliTerm {
                coeff,
                z_mask,
                x_mask,
            })
            .collect();
        Self { n_qubits, terms }
    }

    /// The zero operator.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, [])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let merged = self
            .terms
            .iter()
            .map(|t| ((t.x_mask, t.z_mask), t.coeff * factor))
            .collect();
        Self::from_merged(self.n_qubits, merged)
    }

    /// Weighted sum `Σ w_k · op_k` over operators sharing a qubit count.
    pub fn linear_combination(parts: &[(f64, &PauliTermSum)]) -> Result<Self> {
        let n_qubits = parts
            .first()
            .map(|(_, op)| op.n_qubits)
            .ok_or_else(|| Error::InvalidSpec("empty linear combination".into()))?;
        let mut merged: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (weight, op) in parts {
            if op.n_qubits != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    found: op.n_qubits,
                });
            }
            for t in &op.terms {
                *merged.entry((t.x_mask, t.z_mask)).or_insert(0.0) += weight * t.coeff;
            }
        }
        Ok(Self::from_merged(n_qubits, merged))
    }

    /// Computational-basis diagonal (the `x_mask = 0` terms).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.dim()];
        for t in self.terms.iter().filter(|t| t.x_mask == 0) {
            for (b, d) in diag.iter_mut().enumerate() {
                *d += t.coeff * t.z_sign(b as u64);
            }
        }
        diag
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.x_mask == 0)
    }

    /// Debug dump: JSON list of `{coeff, z_mask, x_mask}`.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.terms).expect("term serialization is infallible")
    }

    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator::from_terms(self)
    }
}

/// Matrix-vector product, term by term.
pub fn apply(op: &PauliTermSum, state: &[f64]) -> Result<Vec<f64>> {
    if state.len() != op.dim() {
        return Err(Error::LengthMismatch {
            expected: op.dim(),
            found: state.len(),
        });
    }
    let mut out = vec![0.0; state.len()];
    for t in op.terms() {
        for (b, &amp) in state.iter().enumerate() {
            if amp != 0.0 {
                out[b ^ t.x_mask as usize] += t.coeff * t.z_sign(b as u64) * amp;
            }
        }
    }
    Ok(out)
}

/// Dense matrix of `op`, for small registers.
pub fn to_dense(op: &PauliTermSum) -> nalgebra::DMatrix<f64> {
    let n = op.dim();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for t in op.terms() {
        for b in 0..n {
            m[(b ^ t.x_mask as usize, b)] += t.coeff * t.z_sign(b as u64);
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
enum Amplitudes {
    Uniform(f64),
    /// Coefficient indexed by the source basis state.
    PerState(Vec<f64>),
}

/// Flip-grouped form of a [`PauliTermSum`] used by the eigensolvers.
///
/// All `x_mask = 0` terms collapse into one diagonal; the remaining terms are
/// grouped by flip mask so each group costs one pass over the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledOperator {
    n_qubits: usize,
    diagonal: Vec<f64>,
    flips: Vec<(usize, Amplitudes)>,
}

impl CompiledOperator {
    fn from_terms(op: &PauliTermSum) -> Self {
        let dim = op.dim();
        let mut flips: Vec<(usize, Amplitudes)> = Vec::new();
        // Terms are sorted by x_mask, so groups are contiguous.
        for t in op.terms().iter().filter(|t| t.x_mask != 0) {
            let x = t.x_mask as usize;
            let same_group = matches!(flips.last(), Some((mask, _)) if *mask == x);
            if !same_group {
                flips.push((x, Amplitudes::Uniform(0.0)));
            }
            let (_, amps) = flips.last_mut().expect("group pushed above");
            match (amps, t.z_mask) {
                (Amplitudes::Uniform(c), 0) => *c += t.coeff,
                (Amplitudes::PerState(v), _) => {
                    for (b, a) in v.iter_mut().enumerate() {
                        *a += t.coeff * t.z_sign(b as u64);
                    }
                }
                (slot @ Amplitudes::Uniform(_), _) => {
                    let base = match slot {
                        Amplitudes::Uniform(c) => *c,
                        Amplitudes::PerState(_) => unreachable!(),
                    };
                    let v = (0..dim)
                        .map(|b| base + t.coeff * t.z_sign(b as u64))
                        .collect();
                    *slot = Amplitudes::PerState(v);
                }
            }
        }
        Self {
            n_qubits: op.n_qubits(),
            diagonal: op.diagonal(),
            flips,
        }
    }

    /// Operator `Σ_k w_k op_k` assembled directly from compiled parts.
    pub fn combine(parts: &[(f64, &CompiledOperator)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidSpec("empty combination".into()))?
            .1;
        let dim = first.dim();
        let mut diagonal = vec![0.0; dim];
        let mut groups: BTreeMap<usize, Amplitudes> = BTreeMap::new();
        for &(w, op) in parts {
            if op.n_qubits != first.n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: first.n_qubits,
                    found: op.n_qubits,
                });
            }
            if w == 0.0 {
                continue;
            }
            for (d, &x) in diagonal.iter_mut().zip(&op.diagonal) {
                *d += w * x;
            }
            for (mask, amps) in &op.flips {
                let entry = groups.entry(*mask).or_insert(Amplitudes::Uniform(0.0));
                match (entry, amps) {
                    (Amplitudes::Uniform(c), Amplitudes::Uniform(a)) => *c += w * a,
                    (Amplitudes::PerState(v), Amplitudes::Uniform(a)) => {
                        v.iter_mut().for_each(|x| *x += w * a)
                    }
                    (Amplitudes::PerState(v), Amplitudes::PerState(src)) => {
                        v.iter_mut().zip(src).for_each(|(x, y)| *x += w * y)
                    }
                    (slot @ Amplitudes::Uniform(_), Amplitudes::PerState(src)) => {
                        let base = match slot {
                            Amplitudes::Uniform(c) => *c,
                            Amplitudes::PerState(_) => unreachable!(),
                        };
                        *slot = Amplitudes::PerState(src.iter().map(|y| base + w * y).collect());
                    }
                }
            }
        }
        let flips = groups
            .into_iter()
            .filter(|(_, a)| !matches!(a, Amplitudes::Uniform(c) if *c == 0.0))
            .collect();
        Ok(Self {
            n_qubits: first.n_qubits,
            diagonal,
            flips,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn is_diagonal(&self) -> bool {
        self.flips.is_empty()
    }

    /// `out = H · input`. Both slices must have length `dim()`.
    pub fn apply_into(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for ((o, &d), &x) in out.iter_mut().zip(&self.diagonal).zip(input) {
            *o = d * x;
        }
        for (mask, amps) in &self.flips {
            let mask = *mask;
            match amps {
                Amplitudes::Uniform(c) => {
                    for (b, o) in out.iter_mut().enumerate() {
                        *o += c * input[b ^ mask];
                    }
                }
                Amplitudes::PerState(v) => {
                    for (b, o) in out.iter_mut().enumerate() {
                        let src = b ^ mask;
                        *o += v[src] * input[src];
                    }
                }
            }
        }
    }

    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: input.len(),
            });
        }
        let mut out = vec![0.0; input.len()];
        self.apply_into(input, &mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            &self.diagonal,
        ));
        for (mask, amps) in &self.flips {
            for b in 0..n {
                let c = match amps {
                    Amplitudes::Uniform(c) => *c,
                    Amplitudes::PerState(v) => v[b],
                };
                m[(b ^ mask, b)] += c;
            }
        }
        m
    }

    /// Upper bound on the spectral radius (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        let off: f64 = self
            .flips
            .iter()
            .map(|(_, a)| match a {
                Amplitudes::Uniform(c) => c.abs(),
                Amplitudes::PerState(v) => v.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            })
            .sum();
        let diag = self.diagonal.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        diag + off
    }
}

/// Anneal parameter `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AnnealPoint(f64);

impl AnnealPoint {
    pub fn new(s: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&s) {
            Ok(Self(s))
        } else {
            Err(Error::InvalidRange(format!("anneal parameter {s} not in [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Ising encoding of the weighted independent set problem:
/// `Σ_E J_ij Z_i Z_j + Σ_V (Σ_{nbr} J_ij − 2 w_i) Z_i`.
pub fn problem_hamiltonian(graph: &WeightedGraph) -> Result<PauliTermSum> {
    let n = graph.n_vertices();
    let edges = graph.edges().iter().map(|e| PauliTerm {
        coeff: e.coupling,
        z_mask: 1 << e.i | 1 << e.j,
        x_mask: 0,
    });
    let fields = (0..n).map(|v| PauliTerm {
        coeff: graph.linear_coefficient(v),
        z_mask: 1 << v,
        x_mask: 0,
    });
    PauliTermSum::new(n, edges.chain(fields))
}

/// Transverse-field driver `−Σ_i X_i`.
pub fn driver_hamiltonian(n_qubits: usize) -> Result<PauliTermSum> {
    PauliTermSum::new(
        n_qubits,
        (0..n_qubits).map(|k| PauliTerm {
            coeff: -1.0,
            z_mask: 0,
            x_mask: 1 << k,
        }),
    )
}

/// `−sign · ∏_i X_i`, flipping every spin at once.
pub fn product_catalyst(n_qubits: usize, sign: f64) -> Result<PauliTermSum> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::InvalidSpec(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    PauliTermSum::new(
        n_qubits,
        [PauliTerm {
            coeff: -sign,
            z_mask: 0,
            x_mask: (1u64 << n_qubits) - 1,
        }],
    )
}

/// One `−sign · strength · ∏_{i∈S} X_i` term per subset `S` of the config.
pub fn n_local_catalyst(config: &CatalystConfig, n_qubits: usize) -> Result<PauliTermSum> {
    config.validate(n_qubits)?;
    let coeff = -config.sign.value() * config.strength;
    PauliTermSum::new(
        n_qubits,
        config.subsets.iter().map(|s| PauliTerm {
            coeff,
            z_mask: 0,
            x_mask: crate::graph::mask_of(s),
        }),
    )
}

/// `H(s) = s H_p + (1 − s) H_D + s (1 − s) H_c`; without a catalyst this is
/// the plain linear interpolation.
pub fn anneal_hamiltonian(
    s: AnnealPoint,
    problem: &PauliTermSum,
    driver: &PauliTermSum,
    catalyst: Option<&PauliTermSum>,
) -> Result<PauliTermSum> {
    let s = s.value();
    let mut parts = vec![(s, problem), (1.0 - s, driver)];
    if let Some(c) = catalyst {
        parts.push((s * (1.0 - s), c));
    }
    PauliTermSum::linear_combination(&parts)
}
