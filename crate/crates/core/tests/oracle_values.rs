//! Reference values: closed forms checked directly, tabulated inputs checked
//! against their reference numbers, and independently computed quantities
//! frozen to the digits produced by exhaustive or dense oracles.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use qanneal::catalysts::{
    all_sets, complement_sets, edge_sets, enumerate_placements, hierarchy_filter, CatalystConfig,
    Sign,
};
use qanneal::graph::{
    brute_force_mwis, build_bipartite, build_tripartite, odd_frustrated_loops, table1_topology,
    BipartiteToySpec, TripartiteToySpec, WeightedGraph,
};
use qanneal::hamiltonian::{
    apply, driver_hamiltonian, n_local_catalyst, problem_hamiltonian, product_catalyst, to_dense,
    PauliTerm, PauliTermSum,
};
use qanneal::oracle::{appendix_a_costs, first_order_condition, FlipKind};
use qanneal::spectrum::{
    detect_first_order, fit_exponential, gap_scan, lowest_eigenpairs, order_parameter,
    Classification, ScanOptions, SolverOptions, DEFAULT_JUMP_THRESHOLD,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy7() -> (BipartiteToySpec, WeightedGraph) {
    let spec = BipartiteToySpec::standard(3);
    let g = build_bipartite(&spec).unwrap();
    (spec, g)
}

fn basis_state(n: usize, up: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; 1 << n];
    v[up.iter().map(|&i| 1usize << i).sum::<usize>()] = 1.0;
    v
}

#[test]
fn bipartite_toy_layout() {
    let (spec, g) = toy7();
    assert_eq!(g.n_vertices(), 7);
    assert_eq!(g.edges().len(), 12);
    for v in 0..4 {
        assert_relative_eq!(g.weights()[v], spec.total_weight_a / 4.0);
    }
    for v in 4..7 {
        assert_relative_eq!(g.weights()[v], spec.total_weight_b / 3.0);
    }
    let bad = BipartiteToySpec {
        size_a: 1,
        size_b: 0,
        ..spec
    };
    assert!(build_bipartite(&bad).is_err());
}

#[test]
fn five_spin_toy_mwis_is_partition_b() {
    let spec = BipartiteToySpec {
        size_a: 3,
        size_b: 2,
        total_weight_a: 0.0396,
        total_weight_b: 0.04,
        coupling: 0.2132,
    };
    let mwis = brute_force_mwis(&build_bipartite(&spec).unwrap()).unwrap();
    assert_eq!(mwis.vertices, vec![3, 4]);
    assert_relative_eq!(mwis.weight, 0.04, max_relative = 1e-14);
}

#[test]
fn tripartite_layout_and_mwis() {
    let spec = TripartiteToySpec::frustrated_triangle();
    let g = build_tripartite(&spec).unwrap();
    assert_eq!(g.n_vertices(), 9);
    assert_eq!(g.edges().len(), 26);
    let [a, _, _] = spec.blocks();
    assert_eq!(brute_force_mwis(&g).unwrap().vertices, a);

    let triangle = TripartiteToySpec {
        block_sizes: [1, 1, 1],
        block_weights: [1.0, 1.0, 1.0],
        coupling: 3.0,
    };
    let t = build_tripartite(&triangle).unwrap();
    assert_eq!(t.edges().len(), 3);
    assert_eq!(odd_frustrated_loops(&t, 3), vec![vec![0, 1, 2]]);
}

#[test]
fn tabulated_topology() {
    let topo = table1_topology();
    assert_eq!(topo.n, 10);
    assert_eq!(topo.edges.len(), 21);
    assert_eq!(topo.degrees().iter().sum::<usize>(), 42);
    let j_7_10 = topo.edges.iter().find(|e| (e.0, e.1) == (6, 9)).unwrap().2;
    assert_eq!(j_7_10, 1.96842);
    let j_1_4 = topo.edges.iter().find(|e| (e.0, e.1) == (0, 3)).unwrap().2;
    assert_eq!(j_1_4, 1.66122);
}

#[test]
fn tabulated_triangles_match_triple_scan() {
    let g = table1_topology().structural().unwrap();
    let mut loops = odd_frustrated_loops(&g, 3);
    loops.iter_mut().for_each(|c| c.sort_unstable());
    loops.sort();
    let brute: Vec<Vec<usize>> = all_sets(10, 3)
        .unwrap()
        .into_iter()
        .filter(|s| s.iter().enumerate().all(|(k, &a)| s[k + 1..].iter().all(|&b| g.has_edge(a, b))))
        .collect();
    assert_eq!(loops, brute);
    assert_eq!(brute.len(), 7);
    // Triples spanning two or more edges, and those spanning exactly two.
    let connected = edge_sets(&g, 3).unwrap();
    assert_eq!(connected.len(), 57);
    assert_eq!(connected.len() - brute.len(), 50);
    let (kept, rejected) = hierarchy_filter(&g, &connected);
    assert_eq!((kept.len(), rejected.len()), (50, 7));
}

#[test]
fn bipartite_toy_has_no_odd_loops() {
    let (_, g) = toy7();
    assert!(odd_frustrated_loops(&g, 7).is_empty());
}

#[test]
fn single_vertex_hamiltonian() {
    let g = WeightedGraph::new(vec![0.3], []).unwrap();
    let hp = problem_hamiltonian(&g).unwrap();
    assert_eq!(hp.terms().len(), 1);
    assert_relative_eq!(hp.terms()[0].coeff, -0.6);
    assert_eq!(brute_force_mwis(&g).unwrap().vertices, vec![0]);
}

#[test]
fn toy_problem_ground_state_is_partition_b() {
    let (_, g) = toy7();
    let hp = problem_hamiltonian(&g).unwrap();
    let r = lowest_eigenpairs(&hp, 2, &SolverOptions::default()).unwrap();
    let expected = basis_state(7, &[4, 5, 6]);
    for (a, b) in r.eigenvectors[0].iter().zip(&expected) {
        assert!((a.abs() - b).abs() < 1e-12);
    }
    assert_relative_eq!(r.gap(), 4.0 * (0.04 - 0.0396), max_relative = 1e-9);
}

#[test]
fn driver_spectrum() {
    let r = lowest_eigenpairs(&driver_hamiltonian(1).unwrap(), 2, &SolverOptions::default()).unwrap();
    assert_relative_eq!(r.eigenvalues[0], -1.0, epsilon = 1e-12);
    assert_relative_eq!(r.eigenvalues[1], 1.0, epsilon = 1e-12);
    let r = lowest_eigenpairs(&driver_hamiltonian(7).unwrap(), 2, &SolverOptions::default()).unwrap();
    assert_relative_eq!(r.eigenvalues[0], -7.0, epsilon = 1e-10);
    assert_relative_eq!(r.eigenvalues[1], -5.0, epsilon = 1e-10);
    let amp = 2f64.powf(-3.5);
    assert!(r.eigenvectors[0].iter().all(|x| (x - amp).abs() < 1e-9));
}

#[test]
fn product_catalyst_matrix() {
    let m = to_dense(&product_catalyst(2, 1.0).unwrap());
    let expected = DMatrix::from_row_slice(
        4,
        4,
        &[0., 0., 0., -1., 0., 0., -1., 0., 0., -1., 0., 0., -1., 0., 0., 0.],
    );
    assert_eq!(m, expected);
    let hc = product_catalyst(7, 1.0).unwrap();
    let out = apply(&hc, &basis_state(7, &[0, 1, 2, 3])).unwrap();
    assert_eq!(out, basis_state(7, &[4, 5, 6]).iter().map(|x| -x).collect::<Vec<_>>());
}

#[test]
fn catalyst_term_counts() {
    let (_, g) = toy7();
    let xx = CatalystConfig::new(edge_sets(&g, 2).unwrap(), Sign::Stoquastic, "xx");
    let h = n_local_catalyst(&xx, 7).unwrap();
    assert_eq!(h.terms().len(), 12);
    assert!(h.terms().iter().all(|t| t.coeff == -1.0 && t.x_mask.count_ones() == 2));
    let spec = TripartiteToySpec::frustrated_triangle();
    let [a, b, c] = spec.blocks();
    let join = |x: &[usize], y: &[usize]| [x, y].concat();
    let block = CatalystConfig::new(
        vec![join(&a, &b), join(&b, &c), join(&a, &c)],
        Sign::Stoquastic,
        "block",
    );
    assert_eq!(n_local_catalyst(&block, 9).unwrap().terms().len(), 3);
}

#[test]
fn spin_up_z_sign() {
    // Bit 0 set: qubit 0 points up, so Z_0 returns the state unchanged.
    let z0 = PauliTermSum::new(
        1,
        [PauliTerm {
            coeff: 1.0,
            z_mask: 1,
            x_mask: 0,
        }],
    )
    .unwrap();
    assert_eq!(apply(&z0, &[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
    assert_eq!(apply(&z0, &[1.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
}

fn kron_pauli(n: usize, term: &PauliTerm) -> DMatrix<f64> {
    let id = DMatrix::<f64>::identity(2, 2);
    let x = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
    let z = DMatrix::from_row_slice(2, 2, &[-1., 0., 0., 1.]);
    let mut m = DMatrix::<f64>::identity(1, 1);
    for q in (0..n).rev() {
        let mut f = id.clone();
        if term.x_mask >> q & 1 == 1 {
            f = &x * f;
        }
        if term.z_mask >> q & 1 == 1 {
            f = &z * f;
        }
        m = m.kronecker(&f);
    }
    m * term.coeff
}

#[test]
fn apply_matches_kronecker_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 1..=6 {
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    edges.push((i, j, rng.random_range(1.0..2.0)));
                }
            }
        }
        let g = WeightedGraph::new(weights, edges).unwrap();
        let mut parts = vec![problem_hamiltonian(&g).unwrap(), driver_hamiltonian(n).unwrap()];
        if n >= 2 {
            let c = CatalystConfig::new(all_sets(n, 2).unwrap(), Sign::NonStoquastic, "all");
            parts.push(n_local_catalyst(&c, n).unwrap());
        }
        let refs: Vec<(f64, &PauliTermSum)> = parts.iter().map(|p| (0.37, p)).collect();
        let op = PauliTermSum::linear_combination(&refs).unwrap();
        let dim = 1 << n;
        let dense = op
            .terms()
            .iter()
            .fold(DMatrix::zeros(dim, dim), |acc, t| acc + kron_pauli(n, t));
        for _ in 0..100 {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = apply(&op, &v).unwrap();
            let want = &dense * nalgebra::DVector::from_column_slice(&v);
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn order_parameter_examples() {
    let (spec, _) = toy7();
    let p = spec.partition();
    let down_a = basis_state(7, &[4, 5, 6]);
    let up_a = basis_state(7, &[0, 1, 2, 3]);
    assert_relative_eq!(order_parameter(&down_a, &p.a, &p.b).unwrap(), -7.0);
    assert_relative_eq!(order_parameter(&up_a, &p.a, &p.b).unwrap(), 7.0);
    let uniform = vec![2f64.powf(-3.5); 128];
    assert!(order_parameter(&uniform, &p.a, &p.b).unwrap().abs() < 1e-12);
}

#[test]
fn fit_examples() {
    for b in [1.54, 1.0] {
        let points: Vec<(usize, f64)> = [5, 7, 9, 11].iter().map(|&l| (l, (-b * l as f64).exp())).collect();
        let fit = fit_exponential(&points).unwrap();
        assert!((fit.rate - b).abs() < 1e-10);
        assert!((fit.amplitude - 1.0).abs() < 1e-10);
    }
    let flat = fit_exponential(&[(5, 0.3), (7, 0.3), (9, 0.3)]).unwrap();
    assert!(flat.rate.abs() < 1e-12);
    assert_relative_eq!(flat.amplitude, 0.3, max_relative = 1e-12);
}

#[test]
fn flip_cost_examples() {
    let spec = BipartiteToySpec::standard(3);
    let costs = appendix_a_costs(&spec).unwrap();
    let cost = |k: FlipKind| costs.iter().find(|r| r.kind == k).unwrap().symbolic_cost;
    let j = spec.coupling;
    assert_relative_eq!(cost(FlipKind::OneA), 12.0 * j - spec.total_weight_a, max_relative = 1e-14);
    assert_relative_eq!(cost(FlipKind::OneB), 4.0 * spec.total_weight_b / 3.0, max_relative = 1e-14);
    assert!(j > spec.total_weight_b / 3.0);
    assert!(cost(FlipKind::OneAOneB) > cost(FlipKind::OneB));
    assert!(first_order_condition(0.0396, 0.04).unwrap());
    assert!(!first_order_condition(0.04 * 2.0 / 3.0, 0.04).unwrap());
    assert!(first_order_condition(0.04, 0.04).is_err());
}

#[test]
fn candidate_family_counts() {
    let (_, g) = toy7();
    assert_eq!(edge_sets(&g, 2).unwrap().len(), 12);
    assert_eq!(complement_sets(&g, 2).unwrap().len(), 9);
    assert_eq!(all_sets(7, 2).unwrap().len(), 21);
    assert_eq!(all_sets(7, 3).unwrap().len(), 35);
    assert_eq!(all_sets(5, 5).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
    let cands = all_sets(7, 2).unwrap();
    let total: u128 = (0..=21).map(|m| enumerate_placements(&cands, m).unwrap().count()).sum();
    assert_eq!(total, 2_097_152);
    let fives = all_sets(5, 4).unwrap();
    assert_eq!(enumerate_placements(&fives, 2).unwrap().count(), 10);
    let empty: Vec<_> = enumerate_placements(&cands, 0).unwrap().iter().collect();
    assert_eq!(empty, vec![Vec::<usize>::new()]);
}

/// Minimum gaps of the seven-spin toy, frozen from this solver after
/// cross-checking the minima against dense diagonalization.
#[test]
fn frozen_seven_spin_gaps() {
    let (spec, g) = toy7();
    let p = spec.partition();
    let opts = ScanOptions::default();
    let xx = CatalystConfig::new(edge_sets(&g, 2).unwrap(), Sign::Stoquastic, "xx");
    let product = CatalystConfig::product(7, Sign::Stoquastic);
    let cases: [(Option<&CatalystConfig>, f64, Classification); 3] = [
        (None, 2.80503e-7, Classification::Transition),
        (Some(&xx), 3.95743e-5, Classification::Transition),
        (Some(&product), 1.599999e-3, Classification::Crossover),
    ];
    for (cat, delta, class) in cases {
        let scan = gap_scan(&g, cat, &p, &opts).unwrap();
        assert_relative_eq!(scan.delta_min, delta, max_relative = 1e-5);
        assert_eq!(detect_first_order(&scan, DEFAULT_JUMP_THRESHOLD), class);
        assert_relative_eq!(scan.points[0].gap, 2.0, epsilon = 1e-9);
        assert_relative_eq!(scan.points.last().unwrap().gap, scan.problem_gap, epsilon = 1e-9);
    }
}
