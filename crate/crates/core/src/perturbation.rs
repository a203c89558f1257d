//! Rayleigh–Schrödinger energy corrections up to third order in a complete
//! dense eigenbasis.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::hamiltonian::{to_dense, PauliTermSum};
use crate::spectrum::EigenResult;

/// Registers beyond this size are refused: the series needs every eigenpair.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Relative level spacing below which the target counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Every eigenpair of `op`, ascending, from dense diagonalization.
pub fn complete_eigenbasis(op: &PauliTermSum) -> Result<EigenResult> {
    if op.n_qubits() > MAX_DENSE_QUBITS {
        return Err(Error::TooLarge {
            n: op.n_qubits(),
            max: MAX_DENSE_QUBITS,
        });
    }
    let eig = SymmetricEigen::new(to_dense(op));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = order.len();
    Ok(EigenResult {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
        residual_norms: vec![0.0; n],
        degenerate: false,
        matvecs: 0,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct PerturbationInput<'a> {
    pub unperturbed: &'a EigenResult,
    pub v: &'a PauliTermSum,
    pub lambda: f64,
    pub target_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCorrections {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl EnergyCorrections {
    pub fn total(&self) -> f64 {
        self.first + self.second + self.third
    }
}

/// First, second and third order shifts of level `target_index` under
/// `λ V`.
pub fn energy_corrections(input: &PerturbationInput<'_>) -> Result<EnergyCorrections> {
    let basis = input.unperturbed;
    let dim = input.v.dim();
    if basis.eigenvalues.len() != dim || basis.eigenvectors.len() != dim {
        return Err(Error::InvalidSpec(format!(
            "unperturbed spectrum has {} pairs, need all {dim}",
            basis.eigenvectors.len()
        )));
    }
    if let Some(v) = basis.eigenvectors.iter().find(|v| v.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let n = input.target_index;
    if n >= dim {
        return Err(Error::InvalidSpec(format!("target {n} outside {dim} levels")));
    }
    let energies = &basis.eigenvalues;
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let spacing = energies
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != n)
        .map(|(_, e)| (e - energies[n]).abs())
        .fold(f64::INFINITY, f64::min);
    if spacing / scale < DEGENERACY_TOL {
        return Err(Error::DegenerateTarget {
            index: n,
            relative_gap: spacing / scale,
        });
    }

    let compiled = input.v.compile();
    let target = &basis.eigenvectors[n];
    let v_target = compiled.apply(target)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // Column ⟨ψ_m|V|ψ_n⟩ over the whole basis.
    let v_col: Vec<f64> = basis.eigenvectors.iter().map(|psi| dot(psi, &v_target)).collect();
    let v_nn = v_col[n];

    let mut second = 0.0;
    let mut renorm = 0.0;
    let mut phi = vec![0.0; dim];
    for (m, psi) in basis.eigenvectors.iter().enumerate() {
        if m == n {
            continue;
        }
        let denom = energies[n] - energies[m];
        second += v_col[m] * v_col[m] / denom;
        renorm += v_col[m] * v_col[m] / (denom * denom);
        let c = v_col[m] / denom;
        phi.iter_mut().zip(psi).for_each(|(p, x)| *p += c * x);
    }
    // Σ_{k,m≠n} V_nk V_km V_mn / ((E_n−E_k)(E_n−E_m)) = ⟨φ|V|φ⟩.
    let coupled = dot(&phi, &compiled.apply(&phi)?);
    let third = coupled - v_nn * renorm;

    let l = input.lambda;
    Ok(EnergyCorrections {
        first: l * v_nn,
        second: l * l * second,
        third: l * l * l * third,
    })
}
