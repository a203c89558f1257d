//! Low-lying spectra, gap scans along the anneal, transition classification
//! and exponential scaling fits.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalysts::CatalystConfig;
use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::hamiltonian::{
    driver_hamiltonian, n_local_catalyst, problem_hamiltonian, CompiledOperator, PauliTermSum,
};

/// Which eigensolver backs [`lowest_eigenpairs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Dense below [`SolverOptions::dense_threshold`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Absolute bound on every returned residual `‖Hv − λv‖`.
    pub tol: f64,
    pub seed: u64,
    /// Krylov basis size per Lanczos cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Largest Hilbert-space dimension handled densely under `Auto`.
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tol: 1e-10,
            seed: 0x5eed,
            krylov_dim: 400,
            max_restarts: 8,
            dense_threshold: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    /// `E_1 − E_0` fell below `100 · tol`.
    pub degenerate: bool,
    /// Matrix-vector products spent (0 for dense and diagonal solves).
    pub matvecs: usize,
}

impl EigenResult {
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

/// The `k` algebraically smallest eigenpairs of `op`.
pub fn lowest_eigenpairs(op: &PauliTermSum, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    lowest_eigenpairs_compiled(&op.compile(), k, opts, None)
}

/// As [`lowest_eigenpairs`], on a compiled operator, optionally warm-started
/// from vectors spanning the expected low-energy subspace.
pub fn lowest_eigenpairs_compiled(
    op: &CompiledOperator,
    k: usize,
    opts: &SolverOptions,
    warm: Option<&[Vec<f64>]>,
) -> Result<EigenResult> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidSpec(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidSpec(format!("tolerance {} must be positive", opts.tol)));
    }
    let mut result = if op.is_diagonal() {
        diagonal_eigenpairs(op, k)
    } else {
        let dense = match opts.method {
            SolverMethod::Dense => true,
            SolverMethod::Lanczos => false,
            SolverMethod::Auto => dim <= opts.dense_threshold,
        };
        if dense || dim <= k + 1 {
            dense_eigenpairs(&op.to_dense(), k, op)
        } else {
            lanczos(op, k, opts, warm)?
        }
    };
    result.degenerate = k >= 2 && result.gap() < 100.0 * opts.tol;
    Ok(result)
}

fn residual(op: &CompiledOperator, value: f64, vector: &[f64]) -> f64 {
    let mut hv = vec![0.0; vector.len()];
    op.apply_into(vector, &mut hv);
    hv.iter()
        .zip(vector)
        .map(|(h, v)| (h - value * v).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn diagonal_eigenpairs(op: &CompiledOperator, k: usize) -> EigenResult {
    let diag = op.diagonal();
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let eigenvectors = order[..k]
        .iter()
        .map(|&b| {
            let mut v = vec![0.0; diag.len()];
            v[b] = 1.0;
            v
        })
        .collect();
    EigenResult {
        eigenvalues: order[..k].iter().map(|&b| diag[b]).collect(),
        eigenvectors,
        residual_norms: vec![0.0; k],
        degenerate: false,
        matvecs: 0,
    }
}

fn dense_eigenpairs(matrix: &DMatrix<f64>, k: usize, op: &CompiledOperator) -> EigenResult {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| canonical_sign(eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    let residual_norms = eigenvalues
        .iter()
        .zip(&eigenvectors)
        .map(|(&l, v)| residual(op, l, v))
        .collect();
    EigenResult {
        eigenvalues,
        eigenvectors,
        residual_norms,
        degenerate: false,
        matvecs: 0,
    }
}

/// Flip `v` so its largest-magnitude entry (first on ties) is positive.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let pivot = v
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
        .0;
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Four interleaved partial sums, which lets the compiler vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Classical Gram-Schmidt against `basis`, repeated once when the first pass
/// removes most of the vector. Returns the final norm.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    let mut before = norm(w);
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, w)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, w);
        }
        let after = norm(w);
        if after > 0.7071 * before {
            return after;
        }
        before = after;
    }
    before
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// `√(a² + b²)`, deferring to `hypot` only where squaring could overflow.
fn pythag(a: f64, b: f64) -> f64 {
    if a.abs().max(b.abs()) < 1e150 {
        (a * a + b * b).sqrt()
    } else {
        a.hypot(b)
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// `diag` is overwritten with the (unsorted) eigenvalues. Only the rows of
/// the eigenvector matrix listed in `rows` are accumulated; `z[c][r]` is
/// component `rows[r]` of eigenvector `c`.
fn tridiagonal_eigen(diag: &mut [f64], offdiag: &[f64], rows: &[usize]) -> Option<Vec<Vec<f64>>> {
    let n = diag.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&offdiag[..n - 1]);
    let d = diag;
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|c| rows.iter().map(|&r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (left, right) = z.split_at_mut(i + 1);
                for (zi, zn) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let f = *zn;
                    *zn = s * *zi + c * f;
                    *zi = c * *zi - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Some(z)
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Lanczos with full reorthogonalization and explicit restarts.
fn lanczos(
    op: &CompiledOperator,
    k: usize,
    opts: &SolverOptions,
    warm: Option<&[Vec<f64>]>,
) -> Result<EigenResult> {
    const CHECK_EVERY: usize = 10;
    let dim = op.dim();
    let max_basis = opts.krylov_dim.max(k + 2).min(dim);
    let breakdown = op.norm_bound().max(1.0) * 1e-13;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut start = random_unit(&mut rng, dim);
    if let Some(warm) = warm {
        let mut mix: Vec<f64> = start.iter().map(|x| 0.1 * x).collect();
        for v in warm.iter().filter(|v| v.len() == dim) {
            axpy(1.0, v, &mut mix);
        }
        start = mix;
    }

    let mut matvecs = 0;
    let mut best_residuals = vec![f64::INFINITY; k];
    for _cycle in 0..=opts.max_restarts {
        let n0 = norm(&start);
        start.iter_mut().for_each(|x| *x /= n0);
        let mut basis: Vec<Vec<f64>> = vec![start];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        loop {
            let j = basis.len() - 1;
            op.apply_into(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w);
            axpy(-a, &basis[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            let b = orthogonalize(&mut w, &basis);
            alpha.push(a);
            let size = alpha.len();
            let full = size == max_basis;
            let exhausted = b <= breakdown;
            if size >= k && (size % CHECK_EVERY == 0 || full || exhausted) {
                let mut d = alpha.clone();
                let z = tridiagonal_eigen(&mut d, &beta, &[size - 1])
                    .ok_or_else(|| Error::NoConvergence {
                        iterations: matvecs,
                        residuals: best_residuals.clone(),
                    })?;
                let order = sorted_order(&d);
                let estimates: Vec<f64> = order[..k].iter().map(|&c| (b * z[c][0]).abs()).collect();
                if estimates.iter().all(|&r| r < 0.5 * opts.tol) || full {
                    break;
                }
            }
            if exhausted {
                // Invariant subspace: continue with a fresh direction.
                let mut fresh = random_unit(&mut rng, dim);
                orthogonalize(&mut fresh, &basis);
                orthogonalize(&mut fresh, &basis);
                let nf = norm(&fresh);
                if nf < 1e-8 {
                    break;
                }
                fresh.iter_mut().for_each(|x| *x /= nf);
                beta.push(0.0);
                basis.push(fresh);
            } else {
                beta.push(b);
                w.iter_mut().for_each(|x| *x /= b);
                basis.push(std::mem::replace(&mut w, vec![0.0; dim]));
            }
        }

        let size = alpha.len();
        let rows: Vec<usize> = (0..size).collect();
        let mut d = alpha;
        let z = tridiagonal_eigen(&mut d, &beta, &rows).ok_or_else(|| Error::NoConvergence {
            iterations: matvecs,
            residuals: best_residuals.clone(),
        })?;
        let order = sorted_order(&d);
        let mut eigenvalues = Vec::with_capacity(k);
        let mut eigenvectors = Vec::with_capacity(k);
        let mut residual_norms = Vec::with_capacity(k);
        for &c in &order[..k] {
            let mut v = vec![0.0; dim];
            for (&coeff, q) in z[c].iter().zip(&basis) {
                axpy(coeff, q, &mut v);
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let v = canonical_sign(v);
            let theta = {
                op.apply_into(&v, &mut w);
                matvecs += 1;
                dot(&v, &w)
            };
            let r = w
                .iter()
                .zip(&v)
                .map(|(h, x)| (h - theta * x).powi(2))
                .sum::<f64>()
                .sqrt();
            eigenvalues.push(theta);
            eigenvectors.push(v);
            residual_norms.push(r);
        }
        if residual_norms.iter().all(|&r| r <= opts.tol) {
            let order = sorted_order(&eigenvalues);
            return Ok(EigenResult {
                eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
                eigenvectors: order.iter().map(|&i| eigenvectors[i].clone()).collect(),
                residual_norms: order.iter().map(|&i| residual_norms[i]).collect(),
                degenerate: false,
                matvecs,
            });
        }
        if residual_norms.iter().sum::<f64>() < best_residuals.iter().sum::<f64>() {
            best_residuals = residual_norms.clone();
        }
        // Restart from the current Ritz vectors plus a little noise.
        let mut next: Vec<f64> = random_unit(&mut rng, dim).iter().map(|x| 1e-3 * x).collect();
        for v in &eigenvectors {
            axpy(1.0, v, &mut next);
        }
        start = next;
    }
    Err(Error::NoConvergence {
        iterations: matvecs,
        residuals: best_residuals,
    })
}

/// Expectation of `I = Σ_{i∈A} Z_i − Σ_{i∈B} Z_i` in a real state.
pub fn order_parameter(state: &[f64], partition_a: &[usize], partition_b: &[usize]) -> Result<f64> {
    let dim = state.len();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidSpec(format!("state length {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    let mut a_mask = 0u64;
    for &v in partition_a {
        if v >= n {
            return Err(Error::InvalidSpec(format!("vertex {v} outside {n} qubits")));
        }
        a_mask |= 1 << v;
    }
    let mut b_mask = 0u64;
    for &v in partition_b {
        if v >= n {
            return Err(Error::InvalidSpec(format!("vertex {v} outside {n} qubits")));
        }
        if a_mask >> v & 1 == 1 {
            return Err(Error::Overlap(v));
        }
        b_mask |= 1 << v;
    }
    let (na, nb) = (a_mask.count_ones() as f64, b_mask.count_ones() as f64);
    let norm2: f64 = state.iter().map(|x| x * x).sum();
    let value: f64 = state
        .iter()
        .enumerate()
        .map(|(b, amp)| {
            let b = b as u64;
            let up_a = (b & a_mask).count_ones() as f64;
            let up_b = (b & b_mask).count_ones() as f64;
            amp * amp * ((2.0 * up_a - na) - (2.0 * up_b - nb))
        })
        .sum();
    Ok(value / norm2)
}

/// Gap of `H_p` alone, from its sorted diagonal.
pub fn problem_gap(problem: &PauliTermSum) -> f64 {
    let mut diag = problem.diagonal();
    diag.sort_by(f64::total_cmp);
    diag.get(1).map_or(0.0, |e1| e1 - diag[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Uniform coarse grid including both endpoints.
    pub grid_points: usize,
    /// Width of the `s` bracket at which minimum refinement stops.
    pub refine_tol: f64,
    /// How many coarse local minima are refined, smallest gaps first.
    pub max_minima: usize,
    /// Adjacent points whose order parameters differ by more than this are
    /// bisected until they are `jump_resolution` apart.
    pub jump_threshold: f64,
    pub jump_resolution: f64,
    pub solver: SolverOptions,
    /// Worker threads for the coarse grid; `None` uses the ambient pool.
    pub workers: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_points: 101,
            refine_tol: 1e-12,
            max_minima: 8,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            jump_resolution: 1e-4,
            solver: SolverOptions::default(),
            workers: None,
        }
    }
}

/// Order-parameter jump above which a scan counts as a transition.
pub const DEFAULT_JUMP_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub order_param: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapScan {
    /// Coarse grid plus the bisection points that resolve order-parameter
    /// jumps, sorted by `s`. Classification and CSV output use these.
    pub points: Vec<ScanPoint>,
    /// Evaluations made while narrowing in on gap minima, in search order.
    pub minimum_search: Vec<ScanPoint>,
    pub delta_min: f64,
    pub s_star: f64,
    pub problem_gap: f64,
    /// Smallest gap on the coarse grid alone.
    pub coarse_min: f64,
}

impl GapScan {
    pub fn s_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gap).collect()
    }

    pub fn order_params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.order_param).collect()
    }

    /// Largest `|Δ⟨I⟩|` between neighbouring points.
    pub fn max_jump(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].order_param - w[0].order_param).abs())
            .fold(0.0, f64::max)
    }

    /// `s,gap,order_param,flag_degenerate` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,gap,order_param,flag_degenerate\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(p.s),
                fmt_f64(p.gap),
                fmt_f64(p.order_param),
                u8::from(p.degenerate)
            );
        }
        out
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The three anneal ingredients for one instance, compiled once per scan.
#[derive(Debug, Clone)]
pub struct AnnealOperators {
    problem: CompiledOperator,
    driver: CompiledOperator,
    catalyst: Option<CompiledOperator>,
    problem_gap: f64,
}

impl AnnealOperators {
    pub fn new(graph: &WeightedGraph, catalyst: Option<&CatalystConfig>) -> Result<Self> {
        let n = graph.n_vertices();
        let hp = problem_hamiltonian(graph)?;
        let hc = catalyst
            .filter(|c| !c.subsets.is_empty())
            .map(|c| n_local_catalyst(c, n))
            .transpose()?;
        Ok(Self {
            problem_gap: problem_gap(&hp),
            problem: hp.compile(),
            driver: driver_hamiltonian(n)?.compile(),
            catalyst: hc.map(|c| c.compile()),
        })
    }

    pub fn problem_gap(&self) -> f64 {
        self.problem_gap
    }

    pub fn at(&self, s: f64) -> Result<CompiledOperator> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidRange(format!("anneal parameter {s} not in [0, 1]")));
        }
        let mut parts = vec![(s, &self.problem), (1.0 - s, &self.driver)];
        if let Some(c) = &self.catalyst {
            parts.push((s * (1.0 - s), c));
        }
        CompiledOperator::combine(&parts)
    }
}

struct Evaluator<'a> {
    ops: &'a AnnealOperators,
    partition: &'a Partition,
    solver: &'a SolverOptions,
}

impl Evaluator<'_> {
    fn eval(&self, s: f64, warm: Option<&[Vec<f64>]>) -> Result<(ScanPoint, Vec<Vec<f64>>)> {
        let h = self.ops.at(s)?;
        let mut eig = lowest_eigenpairs_compiled(&h, 2, self.solver, warm)?;
        if eig.degenerate && h.dim() >= 4 {
            eig = lowest_eigenpairs_compiled(&h, 4, self.solver, warm)?;
            eig.degenerate = true;
        }
        let order_param =
            order_parameter(&eig.eigenvectors[0], &self.partition.a, &self.partition.b)?;
        let point = ScanPoint {
            s,
            e0: eig.eigenvalues[0],
            e1: eig.eigenvalues[1],
            gap: eig.gap(),
            order_param,
            degenerate: eig.degenerate,
        };
        eig.eigenvectors.truncate(2);
        Ok((point, eig.eigenvectors))
    }
}

fn run_in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Gap and order parameter along the anneal, with the minimum gap refined.
pub fn gap_scan(
    graph: &WeightedGraph,
    catalyst: Option<&CatalystConfig>,
    partition: &Partition,
    opts: &ScanOptions,
) -> Result<GapScan> {
    let ops = AnnealOperators::new(graph, catalyst)?;
    gap_scan_operators(&ops, partition, opts)
}

/// [`gap_scan`] on prebuilt operators.
pub fn gap_scan_operators(
    ops: &AnnealOperators,
    partition: &Partition,
    opts: &ScanOptions,
) -> Result<GapScan> {
    if opts.grid_points < 21 {
        return Err(Error::InvalidSpec(format!(
            "coarse grid needs at least 21 points, got {}",
            opts.grid_points
        )));
    }
    let eval = Evaluator {
        ops,
        partition,
        solver: &opts.solver,
    };
    let last = (opts.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..opts.grid_points).map(|i| i as f64 / last).collect();
    let coarse: Vec<ScanPoint> = run_in_pool(opts.workers, || {
        grid.par_iter()
            .map(|&s| eval.eval(s, None).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()
    })??;
    let coarse_min = coarse.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min);

    let mut search = Vec::new();
    let mut warm: Option<Vec<Vec<f64>>> = None;

    // Golden-section search inside the bracket of each coarse local minimum.
    let mut minima: Vec<usize> = (0..coarse.len())
        .filter(|&i| {
            (i == 0 || coarse[i].gap <= coarse[i - 1].gap)
                && (i + 1 == coarse.len() || coarse[i].gap <= coarse[i + 1].gap)
        })
        .collect();
    minima.sort_by(|&a, &b| coarse[a].gap.total_cmp(&coarse[b].gap).then(a.cmp(&b)));
    minima.truncate(opts.max_minima);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for &i in &minima {
        let mut lo = grid[i.saturating_sub(1)];
        let mut hi = grid[(i + 1).min(grid.len() - 1)];
        let mut c = hi - ratio * (hi - lo);
        let mut d = lo + ratio * (hi - lo);
        let (pc, vc) = eval.eval(c, warm.as_deref())?;
        let (pd, vd) = eval.eval(d, Some(&vc))?;
        warm = Some(vd);
        let (mut fc, mut fd) = (pc.gap, pd.gap);
        search.push(pc);
        search.push(pd);
        while hi - lo > opts.refine_tol {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - ratio * (hi - lo);
                let (p, v) = eval.eval(c, warm.as_deref())?;
                fc = p.gap;
                search.push(p);
                warm = Some(v);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + ratio * (hi - lo);
                let (p, v) = eval.eval(d, warm.as_deref())?;
                fd = p.gap;
                search.push(p);
                warm = Some(v);
            }
        }
    }

    // Resolve order-parameter jumps down to the requested spacing.
    let mut points = coarse;
    loop {
        let mut inserted = Vec::new();
        for w in points.windows(2) {
            let wide = w[1].s - w[0].s > opts.jump_resolution;
            if wide && (w[1].order_param - w[0].order_param).abs() > opts.jump_threshold {
                let (p, v) = eval.eval(0.5 * (w[0].s + w[1].s), warm.as_deref())?;
                warm = Some(v);
                inserted.push(p);
            }
        }
        if inserted.is_empty() {
            break;
        }
        points.extend(inserted);
        points.sort_by(|a, b| a.s.total_cmp(&b.s));
        points.dedup_by(|a, b| a.s == b.s);
    }

    let best = points
        .iter()
        .chain(&search)
        .min_by(|a, b| a.gap.total_cmp(&b.gap).then(a.s.total_cmp(&b.s)))
        .copied()
        .expect("grid is nonempty");
    Ok(GapScan {
        points,
        minimum_search: search,
        delta_min: best.gap,
        s_star: best.s,
        problem_gap: ops.problem_gap(),
        coarse_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Transition,
    Crossover,
}

/// A transition is an order-parameter jump larger than `jump_threshold`
/// between neighbouring scan points.
pub fn detect_first_order(scan: &GapScan, jump_threshold: f64) -> Classification {
    if scan.max_jump() > jump_threshold {
        Classification::Transition
    } else {
        Classification::Crossover
    }
}

/// `Δ_min ≈ A e^{−bL}`, fitted on `ln Δ_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<(usize, f64)>,
    pub amplitude: f64,
    pub rate: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    /// `L,delta_min` rows followed by `#A=`, `#b=`, `#r2=` footer lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,delta_min\n");
        for (l, d) in &self.points {
            let _ = writeln!(out, "{l},{}", fmt_f64(*d));
        }
        let _ = writeln!(out, "#A={}", fmt_f64(self.amplitude));
        let _ = writeln!(out, "#b={}", fmt_f64(self.rate));
        let _ = writeln!(out, "#r2={}", fmt_f64(self.r_squared));
        out
    }
}

pub fn fit_exponential(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(&(size, gap)) = points.iter().find(|(_, d)| !(*d > 0.0)) {
        return Err(Error::NonpositiveGap { size, gap });
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(l, _)| *l as f64).collect();
    let ys: Vec<f64> = points.iter().map(|(_, d)| d.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidSpec("fit needs at least two distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // A perfect fit of flat data leaves nothing unexplained.
    let r_squared = if ss_tot <= f64::EPSILON * ys.iter().map(|y| y * y).sum::<f64>() {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(ScalingFit {
        points: points.to_vec(),
        amplitude: intercept.exp(),
        rate: -slope,
        r_squared,
    })
}
