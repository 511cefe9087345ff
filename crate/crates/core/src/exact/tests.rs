use super::*;
use crate::coupling::{build_disjoint_union, build_regular, RegularKind};

fn p(beta: f64, b: f64) -> ModelParams {
    ModelParams::new(beta, b).unwrap()
}

fn zero_matrix(n: usize) -> CouplingMatrix {
    CouplingMatrix::from_upper_triplets(n, &[], "zero").unwrap()
}

/// Complete graph with every off-diagonal entry `1/n` (the sufficient
/// statistic convention; its Gibbs law matches the Curie-Weiss law
/// with `log Z` offset by exactly `-beta/2`).
fn cw_matrix(n: usize) -> CouplingMatrix {
    build_regular(n, n - 1, RegularKind::Complete, 0)
        .unwrap()
        .rescaled((n as f64 - 1.0) / n as f64)
}

/// Plain binary-order enumeration with the energy recomputed from
/// scratch at every state; independent of the Gray-code path.
fn law_oracle(a: &CouplingMatrix, params: ModelParams) -> MagnetizationLaw {
    let n = a.n();
    assert!(n <= 16);
    let mut logw = vec![f64::NEG_INFINITY; n + 1];
    let mut sums = vec![0.0f64; n + 1];
    let mut maxes = vec![f64::NEG_INFINITY; n + 1];
    for mask in 0u32..(1 << n) {
        let spins: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut quad = 0.0;
        for (i, si) in spins.iter().enumerate() {
            let mut m = 0.0;
            a.for_row(i, |j, v| m += v * spins[j]);
            quad += si * m;
        }
        let total: f64 = spins.iter().sum();
        let e = 0.5 * params.beta * quad + params.b_field * total;
        let bucket = ((total + n as f64) / 2.0).round() as usize;
        if e > maxes[bucket] {
            sums[bucket] = sums[bucket] * (maxes[bucket] - e).exp() + 1.0;
            maxes[bucket] = e;
        } else {
            sums[bucket] += (e - maxes[bucket]).exp();
        }
    }
    for k in 0..=n {
        if sums[k] > 0.0 {
            logw[k] = maxes[k] + sums[k].ln();
        }
    }
    MagnetizationLaw::from_log_weights(n, logw)
}

#[test]
fn single_site_partition() {
    for &(beta, b) in &[(0.5, 0.3), (2.0, -1.0), (1.0, 0.0)] {
        let z = partition_function_bruteforce(&zero_matrix(1), p(beta, b)).unwrap();
        assert!((z - (2.0 * b.cosh()).ln()).abs() < 1e-14);
    }
}

#[test]
fn two_site_partition_by_hand() {
    // exponent (beta/2) sigma' A sigma = beta sigma_0 sigma_1
    let a = CouplingMatrix::from_upper_triplets(2, &[(0, 1, 1.0)], "edge").unwrap();
    for beta in [0.3, 1.0, 2.5] {
        let z = partition_function_bruteforce(&a, p(beta, 0.0)).unwrap();
        let expect = (2.0 * beta.exp() + 2.0 * (-beta).exp()).ln();
        assert!((z - expect).abs() < 1e-13);
    }
}

#[test]
fn bruteforce_matches_cw_sufficient_statistic() {
    // pmf identical; log Z offset by the excluded self-interaction beta/2
    let params = p(0.7, 0.2);
    let brute = magnetization_law_bruteforce(&cw_matrix(10), params).unwrap();
    let cw = magnetization_law_cw(10, params).unwrap();
    assert!((brute.log_z() - (cw.log_z() - params.beta / 2.0)).abs() < 1e-9);
    for (pb, pc) in brute.probs().iter().zip(cw.probs()) {
        assert!((pb - pc).abs() < 1e-10);
    }
}

#[test]
fn gray_code_matches_binary_oracle() {
    let a = crate::coupling::build_erdos_renyi(12, 0.4, 5).unwrap();
    let params = p(0.9, 0.15);
    let law = magnetization_law_bruteforce(&a, params).unwrap();
    let oracle = law_oracle(&a, params);
    assert!((law.log_z() - oracle.log_z()).abs() < 1e-12);
    for (x, y) in law.probs().iter().zip(oracle.probs()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn free_spins_law() {
    let law = magnetization_law_bruteforce(&zero_matrix(2), p(1.0, 0.0)).unwrap();
    assert_eq!(law.support(), &[-2, 0, 2]);
    assert!((law.probs()[0] - 0.25).abs() < 1e-14);
    assert!((law.probs()[1] - 0.5).abs() < 1e-14);
    assert!((law.probs()[2] - 0.25).abs() < 1e-14);
}

#[test]
fn zero_field_symmetry() {
    let a = build_regular(3, 2, RegularKind::Complete, 0).unwrap();
    let law = magnetization_law_bruteforce(&a, p(1.0, 0.0)).unwrap();
    let m = law.probs().len();
    for k in 0..m {
        assert!((law.probs()[k] - law.probs()[m - 1 - k]).abs() < 1e-12);
    }
}

#[test]
fn bruteforce_matches_blocked_on_disjoint_blocks() {
    // two disjoint K_6 scaled by 6 (block size), i.e. within = 1/6
    let k6 = build_regular(6, 5, RegularKind::Complete, 0)
        .unwrap()
        .rescaled(5.0 / 6.0);
    let a = build_disjoint_union(&[k6.clone(), k6], false).unwrap();
    let params = p(1.3, 0.1);
    let brute = magnetization_law_bruteforce(&a, params).unwrap();
    let blocked = magnetization_law_blocked(&[6, 6], 1.0 / 6.0, 0.0, params).unwrap();
    assert!((brute.log_z() - blocked.log_z()).abs() < 1e-10);
    for (x, y) in brute.probs().iter().zip(blocked.probs()) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn blocked_single_block_is_cw() {
    let params = p(0.8, -0.2);
    let blocked = magnetization_law_blocked(&[14], 1.0 / 14.0, 0.0, params).unwrap();
    let cw = magnetization_law_cw(14, params).unwrap();
    for (x, y) in blocked.probs().iter().zip(cw.probs()) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((blocked.log_z() - (cw.log_z() - params.beta / 2.0)).abs() < 1e-10);
}

#[test]
fn blocked_equal_couplings_merge() {
    // within = between = 1/(2m): same law as one CW system of size 2m
    let params = p(1.1, 0.05);
    let m = 9;
    let blocked =
        magnetization_law_blocked(&[m, m], 1.0 / (2.0 * m as f64), 1.0 / (2.0 * m as f64), params)
            .unwrap();
    let cw = magnetization_law_cw(2 * m, params).unwrap();
    for (x, y) in blocked.probs().iter().zip(cw.probs()) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn blocked_three_blocks_against_bruteforce() {
    let params = p(0.6, 0.1);
    let (w, c) = (0.2, 0.05);
    let sizes = [4usize, 3, 5];
    // assemble the block-constant matrix explicitly
    let n: usize = sizes.iter().sum();
    let block_of = |i: usize| {
        if i < 4 {
            0
        } else if i < 7 {
            1
        } else {
            2
        }
    };
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if block_of(i) == block_of(j) { w } else { c };
            triplets.push((i, j, v));
        }
    }
    let a = CouplingMatrix::from_upper_triplets(n, &triplets, "blocks").unwrap();
    let brute = magnetization_law_bruteforce(&a, params).unwrap();
    let blocked = magnetization_law_blocked(&sizes, w, c, params).unwrap();
    assert!((brute.log_z() - blocked.log_z()).abs() < 1e-10);
    for (x, y) in brute.probs().iter().zip(blocked.probs()) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn cw_small_beta_limit() {
    let law = magnetization_law_cw(2, p(1e-12, 0.0)).unwrap();
    assert!((law.probs()[0] - 0.25).abs() < 1e-9);
    assert!((law.probs()[1] - 0.5).abs() < 1e-9);
    assert!((law.probs()[2] - 0.25).abs() < 1e-9);
}

#[test]
fn cw_low_temperature_bimodality() {
    let t = crate::meanfield::solve_fixed_point(p(2.0, 0.0));
    let law = magnetization_law_cw(2000, p(2.0, 0.0)).unwrap();
    let inner = law.log_prob_where(|sb| sb.abs() < 0.5 * t);
    assert!(inner < (1e-6f64).ln());
    // the two modes sit near +-t
    let near_modes = law.log_prob_where(|sb| (sb.abs() - t).abs() < 0.05);
    assert!(near_modes > (0.99f64).ln());
}

#[test]
fn cw_mean_monotone_in_field() {
    let mut last = -1.0;
    for i in 0..8 {
        let b = -0.5 + i as f64 * 0.14;
        let mean = magnetization_law_cw(60, p(0.9, b)).unwrap().mean_sigma_bar();
        assert!(mean > last);
        last = mean;
    }
}

#[test]
fn iid_law_symmetric_at_t_zero() {
    let law = iid_reference_law(100, p(0.5, 0.0), 0.0).unwrap();
    assert!(law.mean_sigma_bar().abs() < 1e-14);
    let m = law.probs().len();
    for k in 0..m {
        assert!((law.probs()[k] - law.probs()[m - 1 - k]).abs() < 1e-15);
    }
}

#[test]
fn iid_single_site_probability() {
    let params = p(1.0, 0.1);
    let t = crate::meanfield::solve_fixed_point(params);
    let law = iid_reference_law(1, params, t).unwrap();
    let x = t + 0.1;
    let expect = x.exp() / (2.0 * x.cosh());
    // support {-1, +1}; P(+1) is the second atom
    assert!((law.probs()[1] - expect).abs() < 1e-14);
    assert!((law.log_z() - (2.0 * x.cosh()).ln()).abs() < 1e-12);
}

#[test]
fn conditional_mean_free_and_pair() {
    let a0 = zero_matrix(3);
    let cfg = SpinConfiguration::new(&a0, vec![1, -1, 1]).unwrap();
    for i in 0..3 {
        let v = conditional_mean(&a0, &cfg, i, p(1.7, 0.4)).unwrap();
        assert!((v - 0.4f64.tanh()).abs() < 1e-15);
    }
    let a = CouplingMatrix::from_upper_triplets(2, &[(0, 1, 1.0)], "edge").unwrap();
    let cfg = SpinConfiguration::new(&a, vec![1, 1]).unwrap();
    let v = conditional_mean(&a, &cfg, 0, p(1.0, 0.0)).unwrap();
    assert!((v - 1.0f64.tanh()).abs() < 1e-15);
    assert!(conditional_mean(&a, &cfg, 2, p(1.0, 0.0)).is_err());
}

#[test]
fn conditional_mean_matches_joint_enumeration() {
    // independent oracle: condition the full Gibbs weights on the rest
    let a = crate::coupling::build_erdos_renyi(8, 0.5, 21).unwrap();
    let params = p(0.8, 0.25);
    let spins: Vec<i8> = vec![1, -1, -1, 1, 1, -1, 1, -1];
    let cfg = SpinConfiguration::new(&a, spins.clone()).unwrap();
    for i in 0..8 {
        let energy = |flip_to: f64| {
            let mut s: Vec<f64> = spins.iter().map(|&x| x as f64).collect();
            s[i] = flip_to;
            let mut quad = 0.0;
            for (u, su) in s.iter().enumerate() {
                let mut m = 0.0;
                a.for_row(u, |v, w| m += w * s[v]);
                quad += su * m;
            }
            0.5 * params.beta * quad + params.b_field * s.iter().sum::<f64>()
        };
        let (ep, em) = (energy(1.0), energy(-1.0));
        let max = ep.max(em);
        let (wp, wm) = ((ep - max).exp(), (em - max).exp());
        let oracle = (wp - wm) / (wp + wm);
        let v = conditional_mean(&a, &cfg, i, params).unwrap();
        assert!((v - oracle).abs() < 1e-10, "site {i}: {v} vs {oracle}");
    }
}

#[test]
fn local_fields_stay_consistent_under_updates() {
    let a = crate::coupling::build_erdos_renyi(12, 0.5, 3).unwrap();
    let mut cfg = SpinConfiguration::all_plus(&a);
    let flips = [3usize, 7, 0, 3, 11, 5, 3, 7];
    for (step, &i) in flips.iter().enumerate() {
        let new = if step % 2 == 0 { -1 } else { 1 };
        cfg.set_spin(&a, i, new);
        let mut fresh = cfg.clone();
        fresh.refresh(&a);
        for j in 0..12 {
            assert!((cfg.local_field(j) - fresh.local_field(j)).abs() < 1e-10);
        }
    }
}

#[test]
fn size_caps_are_enforced() {
    assert!(matches!(
        partition_function_bruteforce(&zero_matrix(25), p(1.0, 0.0)),
        Err(Error::SizeCap { cap: 24, .. })
    ));
    assert!(magnetization_law_cw(SUFFICIENT_CAP + 1, p(1.0, 0.0)).is_err());
    assert!(magnetization_law_blocked(&[4, 4, 4, 4], 0.1, 0.1, p(1.0, 0.0)).is_err());
    assert!(magnetization_law_blocked(&[4000, 4000], 0.1, 0.1, p(1.0, 0.0)).is_err());
}

#[test]
fn law_csv_format() {
    let law = magnetization_law_bruteforce(&zero_matrix(2), p(1.0, 0.0)).unwrap();
    let mut buf = Vec::new();
    write_law_csv(&law, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "support,prob");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-2,"));
}
