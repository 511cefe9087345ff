//! Property tests for the structural invariants: builder outputs,
//! diagnostics bounds, fixed-point residuals, law symmetries, KS
//! metric properties, and rate-term monotonicity.

use proptest::prelude::*;

use ising_core::analysis::{
    center_law, concentration_curve, ks_distance, Law, LimitLaw, Statistic,
};
use ising_core::coupling::{
    build_block_spin, build_erdos_renyi, build_regular, build_wigner, diagnostics, rate_terms,
    MatrixDiagnostics, RegularKind, WignerLaw,
};
use ising_core::exact::{
    magnetization_law_blocked, magnetization_law_bruteforce, magnetization_law_cw,
};
use ising_core::meanfield::{binary_entropy, solve_fixed_point, ModelParams};

fn params(beta: f64, b: f64) -> ModelParams {
    ModelParams::new(beta, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn builders_produce_valid_matrices(seed in 0u64..1000, n in 3usize..40, p in 0.05f64..1.0) {
        let d = 2 + seed as usize % (n - 2).max(1);
        let candidates = vec![
            build_erdos_renyi(n, p, seed).ok(),
            build_wigner(n, WignerLaw::Exponential { mean: 0.5 + p }, seed).ok(),
            build_regular(n, d, RegularKind::RandomRegular, seed).ok(),
            if n % 2 == 0 { build_block_spin(n, p, 1.0 - p).ok() } else { None },
        ];
        for a in candidates.into_iter().flatten() {
            for i in 0..a.n() {
                prop_assert_eq!(a.entry(i, i), 0.0);
                for j in 0..a.n() {
                    prop_assert_eq!(a.entry(i, j), a.entry(j, i));
                    prop_assert!(a.entry(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn regular_builders_have_unit_rows(seed in 0u64..500, half in 2usize..12) {
        let n = 2 * half;
        let d = 1 + seed as usize % (n / 2);
        let a = build_regular(n, d, RegularKind::RandomRegular, seed);
        if (n * d) % 2 == 0 {
            let a = a.unwrap();
            for r in a.row_sums() {
                prop_assert!((r - 1.0).abs() < 1e-12);
            }
            let diag = diagnostics(&a).unwrap();
            prop_assert!((diag.lambda1 - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda1_dominates_mean_row_sum(seed in 0u64..500, n in 2usize..50, p in 0.1f64..1.0) {
        let a = build_erdos_renyi(n, p, seed).unwrap();
        let d = diagnostics(&a).unwrap();
        let mean = d.row_sums.iter().sum::<f64>() / n as f64;
        prop_assert!(d.lambda1 >= mean - 1e-8);
        prop_assert!(d.lambda1 >= d.lambda2 - 1e-10);
        prop_assert!(d.alpha <= d.frobenius_sq + 1e-12);
        prop_assert!(n as f64 * d.alpha >= d.frobenius_sq - 1e-12);
        let fr: f64 = d.row_sums.iter().map(|_| 0.0).sum::<f64>()
            + a.upper_triplets().iter().map(|(_, _, v)| 2.0 * v * v).sum::<f64>();
        prop_assert!((d.frobenius_sq - fr).abs() <= 1e-10 * (1.0 + fr));
    }

    #[test]
    fn rate_terms_are_monotone(
        frob in 0.1f64..20.0,
        sdsq in 0.0f64..10.0,
        sd in -5.0f64..5.0,
        alpha in 0.01f64..2.0,
        max_dev in 0.0f64..2.0,
        t in 0.0f64..0.99,
        bump in 0.01f64..1.0,
    ) {
        let n = 64usize;
        let mk = |frob: f64, sdsq: f64, sd: f64, alpha: f64, max_dev: f64| MatrixDiagnostics {
            row_sums: vec![1.0; n],
            frobenius_sq: frob,
            lambda1: 1.0,
            lambda2: 0.5,
            alpha,
            sum_dev: sd,
            sum_dev_sq: sdsq,
            max_dev,
            well_connected_ratio: 0.5,
            a4_stat: 0.0,
        };
        let base = rate_terms(&mk(frob, sdsq, sd, alpha, max_dev), t, n);
        let fields = |rt: &ising_core::coupling::RateTerms| {
            [rt.eta, rt.nonuniq, rt.epsilon, rt.r, rt.delta, rt.theta11]
        };
        // increase |sum_dev| without changing its sign
        let sd_bumped = if sd >= 0.0 { sd + bump } else { sd - bump };
        let bumped = [
            rate_terms(&mk(frob + bump, sdsq, sd, alpha, max_dev), t, n),
            rate_terms(&mk(frob, sdsq + bump, sd, alpha, max_dev), t, n),
            rate_terms(&mk(frob, sdsq, sd_bumped, alpha, max_dev), t, n),
            rate_terms(&mk(frob, sdsq, sd, alpha + bump, max_dev), t, n),
            rate_terms(&mk(frob, sdsq, sd, alpha, max_dev + bump), t, n),
        ];
        for rt in &bumped {
            for (after, before) in fields(rt).iter().zip(fields(&base)) {
                prop_assert!(*after >= before - 1e-12);
            }
        }
        for v in fields(&base) {
            prop_assert!(v >= 0.0);
        }
        prop_assert!(base.eta >= frob - 1e-12);
    }

    #[test]
    fn fixed_point_residual_and_sign(beta in 0.01f64..5.0, b in -3.0f64..3.0) {
        let t = solve_fixed_point(params(beta, b));
        prop_assert!((t - (beta * t + b).tanh()).abs() < 1e-12);
        if b != 0.0 {
            prop_assert!(t.signum() == b.signum());
            let tm = solve_fixed_point(params(beta, -b));
            prop_assert!((t + tm).abs() < 1e-12);
        }
        let regime = ising_core::meanfield::classify(params(beta, b));
        if let Some(tau) = regime.tau {
            prop_assert!(tau > 0.0);
        }
    }

    #[test]
    fn entropy_is_even_and_bounded(x in -1.0f64..=1.0) {
        let v = binary_entropy(x).unwrap();
        prop_assert!(v <= 0.0 && v >= -std::f64::consts::LN_2 - 1e-15);
        prop_assert!((v - binary_entropy(-x).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn exact_laws_are_symmetric_at_zero_field(n in 2usize..12, beta in 0.05f64..2.5, seed in 0u64..100) {
        let a = build_erdos_renyi(n, 0.6, seed).unwrap();
        let law = magnetization_law_bruteforce(&a, params(beta, 0.0)).unwrap();
        let m = law.probs().len();
        for k in 0..m {
            prop_assert!((law.probs()[k] - law.probs()[m - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_oracle_closure(beta in 0.1f64..2.0, b in -0.5f64..0.5, m in 3usize..8) {
        // bruteforce on two disjoint complete blocks scaled by the
        // block size == blocked enumeration == (single block) cw law
        let block = build_regular(m, m - 1, RegularKind::Complete, 0)
            .unwrap()
            .rescaled((m as f64 - 1.0) / m as f64);
        let union = ising_core::coupling::build_disjoint_union(
            &[block.clone(), block.clone()],
            false,
        )
        .unwrap();
        let pr = params(beta, b);
        let brute = magnetization_law_bruteforce(&union, pr).unwrap();
        let blocked = magnetization_law_blocked(&[m, m], 1.0 / m as f64, 0.0, pr).unwrap();
        for (x, y) in brute.probs().iter().zip(blocked.probs()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let single = magnetization_law_bruteforce(&block, pr).unwrap();
        let cw = magnetization_law_cw(m, pr).unwrap();
        for (x, y) in single.probs().iter().zip(cw.probs()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn ks_metric_properties(
        xs in prop::collection::vec(-3.0f64..3.0, 1..60),
        ys in prop::collection::vec(-3.0f64..3.0, 1..60),
        tau in 0.2f64..4.0,
    ) {
        let mut a = xs.clone();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut b = ys.clone();
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let la = Law::Sample { sorted: a };
        let lb = Law::Sample { sorted: b };
        let lc = Law::Limit(LimitLaw::gaussian(tau).unwrap());
        let dab = ks_distance(&la, &lb).unwrap();
        let dba = ks_distance(&lb, &la).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(ks_distance(&la, &la.clone()).unwrap() < 1e-12);
        let dac = ks_distance(&la, &lc).unwrap();
        let dbc = ks_distance(&lb, &lc).unwrap();
        prop_assert!(dac <= dab + dbc + 1e-7);
        prop_assert!(dab <= dac + dbc + 1e-7);
        prop_assert!((0.0..=1.0).contains(&dab));
    }

    #[test]
    fn quartic_cdf_reflection(x in 0.0f64..6.0) {
        for law in [LimitLaw::QuarticW, LimitLaw::ModifiedWTilde] {
            prop_assert!((law.cdf(x) + law.cdf(-x) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn concentration_curves_decrease(beta in 0.2f64..2.5, n in 20usize..200) {
        let pr = params(beta, 0.0);
        let t = solve_fixed_point(pr);
        let law = magnetization_law_cw(n, pr).unwrap();
        let curve = concentration_curve(&law, t, &[0.05, 0.1, 0.2, 0.4, 0.8]).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn centered_zero_field_laws_balance(n in 30usize..200, beta in 1.2f64..2.5) {
        let pr = params(beta, 0.0);
        let t = solve_fixed_point(pr);
        let law = magnetization_law_cw(n, pr).unwrap();
        let Law::Atomic { xs, ps } = center_law(&law, Statistic::SqrtNMinusM, t).unwrap() else {
            unreachable!()
        };
        let mean: f64 = xs.iter().zip(&ps).map(|(x, p)| x * p).sum();
        // the centered law is balanced up to the lattice spacing
        prop_assert!(mean.abs() < 4.0 / (n as f64).sqrt() + 1e-9);
    }
}
