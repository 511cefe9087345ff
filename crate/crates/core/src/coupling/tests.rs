use super::spectral::dense_spectrum;
use super::*;
use crate::coupling::build::{
    build_block_spin, build_disjoint_union, build_erdos_renyi, build_line_graph_complete,
    build_regular, build_sbm, build_wigner, RegularKind, WignerLaw,
};

fn assert_basic_invariants(a: &CouplingMatrix) {
    let n = a.n();
    for i in 0..n {
        assert_eq!(a.entry(i, i), 0.0);
        for j in 0..n {
            assert_eq!(a.entry(i, j), a.entry(j, i));
            assert!(a.entry(i, j) >= 0.0);
        }
    }
}

#[test]
fn complete_graph_entries() {
    let a = build_regular(4, 3, RegularKind::Complete, 0).unwrap();
    assert_basic_invariants(&a);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!((a.entry(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn complete_graph_needs_full_degree() {
    assert!(matches!(
        build_regular(6, 3, RegularKind::Complete, 0),
        Err(crate::Error::Infeasible(_))
    ));
}

#[test]
fn cycle_spectrum() {
    // C_6 / 2: eigenvalues cos(2 pi k / 6)
    let a = build_regular(6, 2, RegularKind::Circulant, 0).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!((d.lambda1 - 1.0).abs() < 1e-10);
    assert!((d.lambda2 - 0.5).abs() < 1e-10);
    let eigs = dense_spectrum(&a);
    for (k, expect) in (0..6).map(|k| (k, (2.0 * std::f64::consts::PI * k as f64 / 6.0).cos())) {
        assert!(eigs
            .iter()
            .any(|e| (e - expect).abs() < 1e-9), "missing cos eigenvalue {k}");
    }
}

#[test]
fn circulant_odd_degree() {
    let a = build_regular(8, 3, RegularKind::Circulant, 0).unwrap();
    for r in a.row_sums() {
        assert!((r - 1.0).abs() < 1e-12);
    }
    assert!(matches!(
        build_regular(7, 3, RegularKind::Circulant, 0),
        Err(crate::Error::Infeasible(_))
    ));
}

#[test]
fn random_regular_row_sums() {
    let a = build_regular(100, 10, RegularKind::RandomRegular, 7).unwrap();
    assert_basic_invariants(&a);
    for r in a.row_sums() {
        assert!((r - 1.0).abs() < 1e-12);
    }
    let d = diagnostics(&a).unwrap();
    assert!((d.lambda1 - 1.0).abs() < 1e-8);
}

#[test]
fn random_regular_rejects_odd_total() {
    assert!(matches!(
        build_regular(9, 3, RegularKind::RandomRegular, 0),
        Err(crate::Error::Infeasible(_))
    ));
}

#[test]
fn random_regular_is_seed_deterministic() {
    let a = build_regular(60, 6, RegularKind::RandomRegular, 11).unwrap();
    let b = build_regular(60, 6, RegularKind::RandomRegular, 11).unwrap();
    assert_eq!(a.upper_triplets(), b.upper_triplets());
}

#[test]
fn bipartite_regular_shape() {
    let a = build_regular(12, 4, RegularKind::BipartiteRegular, 0).unwrap();
    assert_basic_invariants(&a);
    for r in a.row_sums() {
        assert!((r - 1.0).abs() < 1e-12);
    }
    // bipartite: no edges within halves
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(a.entry(i, j), 0.0);
            assert_eq!(a.entry(6 + i, 6 + j), 0.0);
        }
    }
    // spectrum is symmetric: smallest eigenvalue is -1
    let eigs = dense_spectrum(&a);
    assert!((eigs[0] - 1.0).abs() < 1e-10);
    assert!((eigs[11] + 1.0).abs() < 1e-10);
}

#[test]
fn erdos_renyi_p_one_is_complete() {
    let a = build_erdos_renyi(2, 1.0, 0).unwrap();
    assert_eq!(a.entry(0, 1), 1.0);
    let b = build_erdos_renyi(5, 1.0, 3).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                assert!((b.entry(i, j) - 0.25).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn erdos_renyi_row_deviation_is_centered() {
    // E[R_i] = 1 by the (n-1)p scaling; Monte Carlo over 200 seeds.
    // Var(sum_i (R_i - 1)) = 2 n (1-p) / ((n-1) p) ~ 8.02 here, so the
    // standard error of the mean over 200 seeds is ~0.20.
    let (n, p) = (500, 0.2);
    let mut mean = 0.0;
    for seed in 0..200 {
        let a = build_erdos_renyi(n, p, seed).unwrap();
        mean += a.row_sums().iter().map(|r| r - 1.0).sum::<f64>();
    }
    mean /= 200.0;
    assert!(mean.abs() < 0.60, "mean row-sum deviation {mean}");
}

#[test]
fn erdos_renyi_spectral_gap() {
    let a = build_erdos_renyi(500, 0.2, 1).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!(d.well_connected_ratio < 0.5, "{}", d.well_connected_ratio);
}

#[test]
fn sbm_uniform_blocks_are_complete() {
    let a = build_sbm(&[2, 2], &[vec![1.0, 1.0], vec![1.0, 1.0]], 0).unwrap();
    // expected average degree = n p = 4
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!((a.entry(i, j) - 0.25).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn sbm_matches_er_edge_statistics() {
    // equal within/between probabilities: same Bernoulli(p) graph law
    let (n, p) = (40, 0.35);
    let pairs = (n * (n - 1) / 2) as f64;
    let (mut e_sbm, mut e_er) = (0.0, 0.0);
    for seed in 0..100 {
        e_sbm += build_sbm(&[20, 20], &[vec![p, p], vec![p, p]], seed)
            .unwrap()
            .upper_triplets()
            .len() as f64;
        e_er += build_erdos_renyi(n, p, seed).unwrap().upper_triplets().len() as f64;
    }
    let sigma = (pairs * p * (1.0 - p) / 100.0).sqrt();
    assert!((e_sbm / 100.0 - pairs * p).abs() < 3.0 * sigma);
    assert!((e_er / 100.0 - pairs * p).abs() < 3.0 * sigma);
}

#[test]
fn sbm_two_block_eigenvalue_ratio() {
    let a = build_sbm(&[500, 500], &[vec![0.3, 0.1], vec![0.1, 0.3]], 5).unwrap();
    let d = diagnostics(&a).unwrap();
    // expectation matrix has lambda2/lambda1 = (a-b)/(a+b) = 0.5
    assert!((d.well_connected_ratio - 0.5).abs() < 0.05);
}

#[test]
fn sbm_rejects_mismatched_dimensions() {
    assert!(matches!(
        build_sbm(&[4, 4], &[vec![0.5]], 0),
        Err(crate::Error::DimensionMismatch(_))
    ));
}

#[test]
fn block_spin_collapses_to_complete_when_uniform() {
    let a = build_block_spin(4, 1.0, 1.0).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!((a.entry(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn block_spin_disconnected_halves() {
    let a = build_block_spin(4, 1.0, 0.0).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!((d.well_connected_ratio - 1.0).abs() < 1e-10);
}

#[test]
fn block_spin_eigenvalue_ratio() {
    let a = build_block_spin(1000, 2.0, 1.0).unwrap();
    let d = diagnostics(&a).unwrap();
    // exact ratio for the zero-diagonal matrix:
    // (a(n/2-1) - b n/2) / (a(n/2-1) + b n/2) = 498/1498
    let exact = 498.0 / 1498.0;
    assert!((d.well_connected_ratio - exact).abs() < 1e-6);
    assert!((d.well_connected_ratio - 1.0 / 3.0).abs() < 1e-2);
}

#[test]
fn block_spin_rejects_zero_couplings() {
    assert!(build_block_spin(4, 0.0, 0.0).is_err());
    assert!(build_block_spin(5, 1.0, 1.0).is_err());
}

#[test]
fn wigner_two_sites() {
    let a = build_wigner(2, WignerLaw::Exponential { mean: 1.0 }, 9).unwrap();
    assert_basic_invariants(&a);
    assert!(a.entry(0, 1) > 0.0);
}

#[test]
fn wigner_row_deviation_stays_bounded() {
    // E[sum (R_i-1)^2] = Var(X)/mean(X)^2 + O(1/n) = 1 + O(1/n) for
    // exponential entries; check no growth across n.
    let mut means = Vec::new();
    for &n in &[100usize, 200, 400] {
        let mut m = 0.0;
        for seed in 0..200 {
            let a = build_wigner(n, WignerLaw::Exponential { mean: 1.0 }, seed).unwrap();
            m += a
                .row_sums()
                .iter()
                .map(|r| (r - 1.0) * (r - 1.0))
                .sum::<f64>();
        }
        means.push(m / 200.0);
    }
    for m in &means {
        assert!((0.8..1.2).contains(m), "mean sum_dev_sq {m}");
    }
    assert!((means[2] - means[0]).abs() < 0.1);
}

#[test]
fn wigner_uniform_spectral_gap() {
    let a = build_wigner(400, WignerLaw::Uniform { mean: 1.0 }, 2).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!(d.well_connected_ratio < 0.2, "{}", d.well_connected_ratio);
}

#[test]
fn line_graph_k4_is_octahedron() {
    let a = build_line_graph_complete(4).unwrap();
    assert_eq!(a.n(), 6);
    let mut degrees = vec![0usize; 6];
    for i in 0..6 {
        a.for_row(i, |_, _| degrees[i] += 1);
    }
    assert!(degrees.iter().all(|&d| d == 4));
    for r in a.row_sums() {
        assert!((r - 1.0).abs() < 1e-12);
    }
}

#[test]
fn line_graph_k6_spectrum() {
    let a = build_line_graph_complete(6).unwrap();
    assert_eq!(a.n(), 15);
    let d = diagnostics(&a).unwrap();
    let degree = 8.0; // 2(m-2)
    let unscaled_l1 = d.lambda1 * degree;
    assert!((unscaled_l1 - 8.0).abs() < 1e-9);
    // triangular-graph spectrum: second eigenvalue m - 4, smallest -2
    let unscaled_l2 = d.lambda2 * degree;
    assert!((unscaled_l2 - 2.0).abs() < 1e-9);
    let eigs = dense_spectrum(&a);
    assert!((eigs[14] * degree + 2.0).abs() < 1e-9);
}

#[test]
fn line_graph_frobenius_limit() {
    // eta / sqrt(N) = sqrt(N)/d approaches 1/(2 sqrt(2)) from above
    let target = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    let value = |m: usize| {
        let a = build_line_graph_complete(m).unwrap();
        a.frobenius_sq() / (a.n() as f64).sqrt()
    };
    let (v10, v40) = (value(10), value(40));
    assert!((v40 - target).abs() < (v10 - target).abs());
    assert!((v40 - target).abs() < 0.05);
}

#[test]
fn disjoint_union_of_identical_blocks() {
    let block = build_regular(20, 19, RegularKind::Complete, 0).unwrap();
    let a = build_disjoint_union(&[block.clone(), block], false).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!((d.lambda1 - 1.0).abs() < 1e-10);
    assert!((d.well_connected_ratio - 1.0).abs() < 1e-10);
}

#[test]
fn disjoint_union_average_degree_rescale() {
    // K_12 + K_4 on N = 16 sites, global dbar = (12*11 + 4*3)/16 = 9
    let k12 = build_regular(12, 11, RegularKind::Complete, 0)
        .unwrap()
        .rescaled(11.0);
    let k4 = build_regular(4, 3, RegularKind::Complete, 0)
        .unwrap()
        .rescaled(3.0);
    let a = build_disjoint_union(&[k12, k4], true).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!((d.row_sums[0] - 11.0 / 9.0).abs() < 1e-12);
    assert!((d.row_sums[15] - 3.0 / 9.0).abs() < 1e-12);
    // average-degree scaling forces sum (R_i - 1) = 0 exactly
    assert!(d.sum_dev.abs() < 1e-12);
    let expect = 12.0 * (2.0f64 / 9.0).powi(2) + 4.0 * (6.0f64 / 9.0).powi(2);
    assert!((d.sum_dev_sq - expect).abs() < 1e-12);
    assert!(d.sum_dev_sq / (16.0f64).sqrt() > 0.0);
}

#[test]
fn disjoint_union_single_part_passthrough() {
    let a = build_erdos_renyi(30, 0.4, 4).unwrap();
    let u = build_disjoint_union(std::slice::from_ref(&a), false).unwrap();
    assert_eq!(a.upper_triplets(), u.upper_triplets());
}

#[test]
fn diagnostics_complete_graph() {
    let a = build_regular(4, 3, RegularKind::Complete, 0).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!(d.row_sums.iter().all(|r| (r - 1.0).abs() < 1e-15));
    assert!((d.frobenius_sq - 4.0 / 3.0).abs() < 1e-12);
    assert!((d.lambda1 - 1.0).abs() < 1e-10);
    assert!((d.lambda2 + 1.0 / 3.0).abs() < 1e-10);
    assert!((d.alpha - 1.0 / 3.0).abs() < 1e-12);
    assert!(d.sum_dev.abs() < 1e-12 && d.sum_dev_sq < 1e-24);
}

#[test]
fn diagnostics_cycle() {
    let a = build_regular(6, 2, RegularKind::Circulant, 0).unwrap();
    let d = diagnostics(&a).unwrap();
    assert!((d.frobenius_sq - 3.0).abs() < 1e-12);
    assert!((d.lambda1 - 1.0).abs() < 1e-10);
    assert!((d.lambda2 - 0.5).abs() < 1e-10);
}

#[test]
fn diagnostics_single_edge() {
    let a = CouplingMatrix::from_upper_triplets(2, &[(0, 1, 1.0)], "edge").unwrap();
    let d = diagnostics(&a).unwrap();
    assert_eq!(d.row_sums, vec![1.0, 1.0]);
    assert!((d.lambda1 - 1.0).abs() < 1e-12);
    assert!((d.lambda2 + 1.0).abs() < 1e-12);
}

#[test]
fn dense_solver_reproduces_complete_spectrum() {
    let a = build_regular(50, 49, RegularKind::Complete, 0).unwrap();
    let eigs = dense_spectrum(&a);
    assert!((eigs[0] - 1.0).abs() < 1e-9);
    for e in &eigs[1..] {
        assert!((e + 1.0 / 49.0).abs() < 1e-9);
    }
}

#[test]
fn rate_terms_regular_graph() {
    let a = build_regular(100, 10, RegularKind::RandomRegular, 1).unwrap();
    let d = diagnostics(&a).unwrap();
    let rt = rate_terms(&d, 0.0, 100);
    assert!((rt.eta - 10.0).abs() < 1e-9); // n/d
    assert!(rt.delta.abs() < 1e-18);
}

#[test]
fn rate_terms_plugging_definitions() {
    // zero deviations, frobenius 1: epsilon = 1 + log n
    let d = MatrixDiagnostics {
        row_sums: vec![1.0; 10],
        frobenius_sq: 1.0,
        lambda1: 1.0,
        lambda2: 0.5,
        alpha: 0.1,
        sum_dev: 0.0,
        sum_dev_sq: 0.0,
        max_dev: 0.0,
        well_connected_ratio: 0.5,
        a4_stat: 0.0,
    };
    let rt = rate_terms(&d, 0.0, 10);
    assert!((rt.epsilon - (1.0 + (10.0f64).ln())).abs() < 1e-15);
    assert!((rt.r - ((10.0f64).ln().powi(3) * 0.1).sqrt()).abs() < 1e-15);
    assert_eq!(rt.delta, 0.0);
}

#[test]
fn rate_terms_line_graph_limit() {
    let target = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    let value = |m: usize| {
        let a = build_line_graph_complete(m).unwrap();
        let d = diagnostics(&a).unwrap();
        let rt = rate_terms(&d, 0.0, a.n());
        rt.eta / (a.n() as f64).sqrt()
    };
    assert!((value(40) - target).abs() < (value(10) - target).abs());
    assert!((value(40) - target).abs() < 0.05);
}

#[test]
fn matrix_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    let a = build_erdos_renyi(37, 0.3, 77).unwrap();
    write_matrix(&a, &path).unwrap();
    let b = read_matrix(&path).unwrap();
    assert_eq!(a.n(), b.n());
    assert_eq!(a.upper_triplets(), b.upper_triplets());
}

#[test]
fn matrix_reader_rejects_bad_input() {
    use super::io::read_matrix_from;
    let cases = [
        ("nonsense", "header"),
        ("ising-coupling v1 2 1\n0 0 1.0", "diagonal"),
        ("ising-coupling v1 2 1\n0 1 -1.0", "negative"),
        ("ising-coupling v1 2 2\n0 1 1.0\n1 0 1.0", "duplicate"),
        ("ising-coupling v1 2 2\n0 1 1.0", "count"),
        ("ising-coupling v1 2 1\n0 5 1.0", "range"),
    ];
    for (text, what) in cases {
        let r = read_matrix_from(text.as_bytes(), "t".into());
        assert!(r.is_err(), "expected {what} rejection");
    }
}

#[test]
fn dense_and_sparse_storage_agree() {
    let triplets = vec![(0, 3, 0.5), (1, 2, 1.5), (0, 1, 0.25)];
    let a = CouplingMatrix::from_upper_triplets(4, &triplets, "t").unwrap();
    let mut y = vec![0.0; 4];
    a.matvec(&[1.0, 2.0, 3.0, 4.0], &mut y);
    assert_eq!(y, vec![0.25 * 2.0 + 0.5 * 4.0, 0.25 + 1.5 * 3.0, 1.5 * 2.0, 0.5]);
    assert_eq!(a.row_sums(), vec![0.75, 1.75, 1.5, 0.5]);
    assert!((a.frobenius_sq() - 2.0 * (0.25 + 2.25 + 0.0625)).abs() < 1e-15);
}
