#[path = "support/anova_oracle.rs"]
mod anova_oracle;

use anova_oracle::{oracle_anova, random_design, rel_err, Design, SplitMix};
use incidentdb_core::anova::{anova_design, TwoWayDesign};
use incidentdb_core::stats::f_p_value;
use proptest::prelude::*;

fn to_design(d: &Design) -> TwoWayDesign {
    TwoWayDesign {
        y: d.y.clone(),
        a: d.a.clone(),
        b: d.b.clone(),
        a_levels: (0..d.ka).map(|i| format!("a{i}")).collect(),
        b_levels: (0..d.kb).map(|j| format!("b{j}")).collect(),
    }
}

fn check_against_oracle(d: &Design, tol: f64) {
    let got = anova_design(&to_design(d), d.interaction).unwrap();
    let want = oracle_anova(d);
    assert_eq!(got.terms.len(), want.terms.len());
    for (g, w) in got.terms.iter().zip(&want.terms) {
        assert_eq!(g.df, w.df, "term {}", g.term);
        assert!(rel_err(g.ss, w.ss) <= tol, "{} ss {} vs {}", g.term, g.ss, w.ss);
        assert!(rel_err(g.f_stat, w.f) <= tol, "{} F {} vs {}", g.term, g.f_stat, w.f);
        assert!(rel_err(g.partial_eta_sq, w.eta) <= tol, "{} eta {} vs {}", g.term, g.partial_eta_sq, w.eta);
    }
    assert_eq!(got.residual_df, want.df_res);
    assert!(rel_err(got.residual_ss, want.ss_res) <= tol);
    assert!(rel_err(got.model_r_squared, want.r_squared) <= tol);
}

#[test]
fn fifty_random_designs_match_brute_force() {
    let mut rng = SplitMix::new(20_240_601);
    for i in 0..50 {
        let d = random_design(&mut rng, i % 3 == 2);
        assert!(d.y.len() <= 100);
        check_against_oracle(&d, 1e-9);
    }
}

#[test]
fn unbalanced_three_by_three_n60() {
    let mut rng = SplitMix::new(7);
    let a: Vec<usize> = (0..60).map(|i| if i < 9 { i % 3 } else { rng.range(0, 2) }).collect();
    let b: Vec<usize> = (0..60).map(|i| if i < 9 { i / 3 } else { rng.range(0, 2) }).collect();
    let y = (0..60).map(|r| 10.0 + 2.0 * a[r] as f64 - b[r] as f64 + rng.normal()).collect();
    for interaction in [false, true] {
        let d = Design { y: Vec::clone(&y), a: a.clone(), b: b.clone(), ka: 3, kb: 3, interaction };
        check_against_oracle(&d, 1e-9);
    }
}

fn design_strategy() -> impl Strategy<Value = (u64, bool)> {
    (any::<u64>(), any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_oracle_on_arbitrary_seeds((seed, interaction) in design_strategy()) {
        let d = random_design(&mut SplitMix::new(seed), interaction);
        check_against_oracle(&d, 1e-9);
    }

    #[test]
    fn location_and_scale_invariance((seed, interaction) in design_strategy(), shift in -50.0f64..50.0, scale in 0.1f64..10.0) {
        let d = random_design(&mut SplitMix::new(seed), interaction);
        let base = anova_design(&to_design(&d), interaction).unwrap();
        let mut shifted = to_design(&d);
        shifted.y.iter_mut().for_each(|v| *v += shift);
        let s = anova_design(&shifted, interaction).unwrap();
        let mut scaled = to_design(&d);
        scaled.y.iter_mut().for_each(|v| *v *= scale);
        let c = anova_design(&scaled, interaction).unwrap();
        for ((t0, t1), t2) in base.terms.iter().zip(&s.terms).zip(&c.terms) {
            prop_assert!(rel_err(t1.ss, t0.ss) < 1e-8);
            prop_assert!(rel_err(t1.f_stat, t0.f_stat) < 1e-8);
            prop_assert!((t1.p_value - t0.p_value).abs() < 1e-9);
            prop_assert!(rel_err(t2.ss, t0.ss * scale * scale) < 1e-8);
            prop_assert!(rel_err(t2.f_stat, t0.f_stat) < 1e-8);
            prop_assert!(rel_err(t2.partial_eta_sq, t0.partial_eta_sq) < 1e-8);
            prop_assert!((t2.p_value - t0.p_value).abs() < 1e-9);
        }
        prop_assert!(rel_err(c.model_r_squared, base.model_r_squared) < 1e-8);
    }

    #[test]
    fn result_invariants((seed, interaction) in design_strategy()) {
        let d = random_design(&mut SplitMix::new(seed), interaction);
        let r = anova_design(&to_design(&d), interaction).unwrap();
        for t in &r.terms {
            prop_assert!(t.ss >= 0.0 && t.df >= 1);
            prop_assert!((0.0..=1.0).contains(&t.p_value));
            prop_assert!((0.0..=1.0).contains(&t.partial_eta_sq));
            prop_assert_eq!(t.partial_eta_sq, t.ss / (t.ss + r.residual_ss));
            prop_assert_eq!(t.p_value, f_p_value(t.f_stat, t.df, r.residual_df).unwrap());
        }
        prop_assert!((0.0..=1.0).contains(&r.model_r_squared));
    }

    #[test]
    fn balanced_main_effects_partition_total(ka in 2usize..6, kb in 2usize..4, reps in 1usize..5, seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let (mut a, mut b, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..ka {
            for j in 0..kb {
                for _ in 0..reps {
                    a.push(i);
                    b.push(j);
                    y.push(i as f64 + 0.5 * j as f64 + rng.normal());
                }
            }
        }
        let d = Design { y, a, b, ka, kb, interaction: false };
        let r = anova_design(&to_design(&d), false).unwrap();
        let sum = r.factor_a().ss + r.factor_b().ss + r.residual_ss;
        prop_assert!(rel_err(sum, r.total_ss) < 1e-9);
    }
}
