mod support;

use approx::assert_abs_diff_eq;
use dejavu_core::exact::{
    adoption_cells, adoption_profile, expected_next, h_distribution, hmajority_law,
    second_moment_next, symmetric_excluding, SymmetricTable,
};
use dejavu_core::{DensityVector, OpinionConfiguration, TieRule};
use proptest::prelude::*;

fn normalised(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    // Absorb rounding so the vector sums to one within 1e-12.
    let drift = 1.0 - p.iter().sum::<f64>();
    p[0] += drift;
    p
}

fn weights(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..=max_k).prop_map(|w| normalised(&w))
}

#[test]
fn three_opinion_law_matches_paths() {
    let p = [0.5, 0.3, 0.2];
    let (cells, no_repeat) = support::enumerate_paths(&p, 4);
    let d = h_distribution(&DensityVector::new(p.to_vec()).unwrap(), 4).unwrap();
    for l in 2..=4 {
        let oracle: f64 = cells.iter().map(|r| r[l]).sum();
        assert_abs_diff_eq!(d.prob(l), oracle, epsilon = 1e-15);
    }
    assert_abs_diff_eq!(no_repeat, 0.0);
    assert_abs_diff_eq!(d.prob(2), 0.38, epsilon = 1e-12);
    assert_abs_diff_eq!(d.prob(3), 0.44, epsilon = 1e-12);
    assert_abs_diff_eq!(d.prob(4), 0.18, epsilon = 1e-12);
}

#[test]
fn adoption_example_matches_paths() {
    let c = OpinionConfiguration::new(vec![5, 3, 2]).unwrap();
    let law = support::agent_law(&[0.5, 0.3, 0.2], 4);
    let a = adoption_profile(&c, 4).unwrap();
    for i in 0..3 {
        assert_abs_diff_eq!(a.adopt_prob[i], law[i], epsilon = 1e-15);
    }
    assert_abs_diff_eq!(law[0], 0.59, epsilon = 1e-12);
    assert_abs_diff_eq!(law[1], 0.27, epsilon = 1e-12);
    assert_abs_diff_eq!(law[2], 0.14, epsilon = 1e-12);
}

#[test]
fn symmetric_examples_match_expansion() {
    let x = [0.5, 0.3, 0.2];
    let oracle = support::poly_expand(&x);
    let t = SymmetricTable::new(&x, 3).unwrap();
    for m in 0..=3 {
        assert_abs_diff_eq!(t.full(m), oracle[m], epsilon = 1e-15);
    }
    let without_first = support::poly_expand(&x[1..]);
    let e = symmetric_excluding(&t, &x, 0, 2).unwrap();
    assert_abs_diff_eq!(e[1], without_first[1], epsilon = 1e-15);
    assert_abs_diff_eq!(e[2], without_first[2], epsilon = 1e-15);
    assert_abs_diff_eq!(e[2], 0.06, epsilon = 1e-15);
}

#[test]
fn expected_next_example() {
    let c = OpinionConfiguration::new(vec![5, 3, 2]).unwrap();
    let e = expected_next(&c, 4).unwrap();
    assert_abs_diff_eq!(e[0], 5.9, epsilon = 1e-12);
    assert_abs_diff_eq!(e[1], 2.7, epsilon = 1e-12);
    assert_abs_diff_eq!(e[2], 1.4, epsilon = 1e-12);
}

#[test]
fn second_moment_matches_full_law() {
    let cases: &[(&[u64], u32)] = &[
        (&[5, 3, 2], 2),
        (&[5, 3, 2], 3),
        (&[5, 3, 2], 4),
        (&[4, 3, 2, 1], 3),
        (&[7, 3], 2),
        (&[6, 2, 1, 1], 5),
        (&[10], 3),
    ];
    for &(counts, h) in cases {
        let c = OpinionConfiguration::new(counts.to_vec()).unwrap();
        let law = support::next_config_law(counts, h as usize);
        let k = counts.len();
        let mut mean = vec![0.0; k];
        let mut sq = vec![0.0; k];
        let mut norm = 0.0;
        for (state, prob) in &law {
            for i in 0..k {
                let x = state[i] as f64;
                mean[i] += prob * x;
                sq[i] += prob * x * x;
            }
            norm += prob * state.iter().map(|&x| (x * x) as f64).sum::<f64>();
        }
        let m = second_moment_next(&c, h).unwrap();
        for i in 0..k {
            assert_abs_diff_eq!(m.expected[i], mean[i], epsilon = 1e-10);
            assert_abs_diff_eq!(m.variances[i], sq[i] - mean[i] * mean[i], epsilon = 1e-10);
        }
        assert_abs_diff_eq!(m.expected_norm2_sq, norm, epsilon = 1e-9);
    }
}

#[test]
fn hmajority_example_and_sequences() {
    let p = DensityVector::new(vec![0.6, 0.4]).unwrap();
    let law = hmajority_law(&p, 3, TieRule::KeepCurrent).unwrap();
    assert_abs_diff_eq!(law.adopt_given(1)[0], 0.648, epsilon = 1e-12);
    assert_abs_diff_eq!(
        support::hmajority_by_sequences(&[0.6, 0.4], 3, 1, false)[0],
        0.648,
        epsilon = 1e-12
    );

    let p3 = [0.45, 0.35, 0.2];
    let dv = DensityVector::new(p3.to_vec()).unwrap();
    for h in 2..=6 {
        for (rule, uniform) in [(TieRule::KeepCurrent, false), (TieRule::UniformAmongTied, true)] {
            let law = hmajority_law(&dv, h, rule).unwrap();
            for current in 0..3 {
                let oracle = support::hmajority_by_sequences(&p3, h as usize, current, uniform);
                let row = law.adopt_given(current);
                for j in 0..3 {
                    assert_abs_diff_eq!(row[j], oracle[j], epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn log_domain_agrees_across_switch() {
    let w: Vec<f64> = (1..=40).map(|i| 1.0 + (i % 7) as f64).collect();
    let p = DensityVector::new(normalised(&w)).unwrap();
    let lin = adoption_cells(&p, 20).unwrap();
    let log = adoption_cells(&p, 21).unwrap();
    for label in 0..40 {
        for l in 2..=20 {
            let (a, b) = (lin.cell(label, l), log.cell(label, l));
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{label} {l}: {a} vs {b}");
        }
    }
    let d = h_distribution(&p, 35).unwrap();
    assert_abs_diff_eq!(d.pmf.iter().sum::<f64>() + d.no_repeat_mass, 1.0, epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn table_matches_expansion(x in prop::collection::vec(0.0f64..2.0, 1..12)) {
        let oracle = support::poly_expand(&x);
        let t = SymmetricTable::new(&x, x.len()).unwrap();
        for m in 0..=x.len() {
            prop_assert!((t.full(m) - oracle[m]).abs() <= 1e-12 * oracle[m].max(1.0));
        }
        for i in 0..x.len() {
            let mut rest = x.clone();
            rest.remove(i);
            let o = support::poly_expand(&rest);
            let e = symmetric_excluding(&t, &x, i, x.len()).unwrap();
            for m in 0..=x.len() {
                let want = o.get(m).copied().unwrap_or(0.0);
                prop_assert!((e[m] - want).abs() <= 1e-10 * want.max(1e-12), "i={} m={} {} vs {}", i, m, e[m], want);
            }
        }
    }

    #[test]
    fn law_matches_paths(p in weights(5), h in 2u32..7) {
        let (cells, no_repeat) = support::enumerate_paths(&p, h as usize);
        let law = adoption_cells(&DensityVector::new(p.clone()).unwrap(), h).unwrap();
        for (i, row) in cells.iter().enumerate() {
            for l in 2..=h as usize {
                prop_assert!((law.cell(i, l) - row[l]).abs() <= 1e-12);
            }
        }
        prop_assert!((law.no_repeat_mass() - no_repeat).abs() <= 1e-12);
    }

    #[test]
    fn law_is_normalised(p in weights(30), h in 2u32..40) {
        let d = h_distribution(&DensityVector::new(p).unwrap(), h).unwrap();
        prop_assert!((d.pmf.iter().sum::<f64>() + d.no_repeat_mass - 1.0).abs() <= 1e-12);
        prop_assert!(d.pmf.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn adoption_grows_with_budget(p in weights(12), h in 2u32..14) {
        let dv = DensityVector::new(p).unwrap();
        let a = adoption_cells(&dv, h).unwrap();
        let b = adoption_cells(&dv, h + 1).unwrap();
        for i in 0..dv.len() {
            prop_assert!(b.adopt_within(i, h as usize + 1) + 1e-15 >= a.adopt_within(i, h as usize));
        }
    }

    #[test]
    fn adoption_ratio_below_square_ratio(p in weights(10), h in 2u32..12) {
        let dv = DensityVector::new(p.clone()).unwrap();
        let a = dejavu_core::exact::adoption_profile_from_densities(&dv, h).unwrap();
        for i in 0..p.len() {
            for j in 0..p.len() {
                if p[i] >= p[j] {
                    let lhs = a.adopt_prob[i] / a.adopt_prob[j];
                    let rhs = (p[i] / p[j]).powi(2);
                    prop_assert!(lhs <= rhs * (1.0 + 1e-10));
                }
            }
        }
    }

    #[test]
    fn expected_next_conserves_mass(counts in prop::collection::vec(0u64..50, 1..10), h in 2u32..12) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let c = OpinionConfiguration::new(counts).unwrap();
        let e = expected_next(&c, h).unwrap();
        prop_assert!((e.iter().sum::<f64>() - c.n() as f64).abs() <= 1e-9 * c.n() as f64);
    }
}
