//! Property tests over randomized inputs for the probability kernel, the
//! scorers, and the evaluation protocols.

use proptest::prelude::*;

use synres_core::esp::{
    esp_pk, esp_posterior_from_potentials, esp_posterior_from_potentials_direct,
};
use synres_core::eval::{cluster_prf, pairwise_prf, pr_auc, GoldStandard};
use synres_core::metrics::{
    combine_evidence, csm_similarity, monge_elkan, ssm_probability, CombinationRule, SsmParams,
};

proptest! {
    #[test]
    fn pk_normalizes_and_posterior_paths_agree(
        p1 in 1u64..12,
        p2 in 1u64..12,
        n1_frac in 0.0f64..=1.0,
        n2_frac in 0.0f64..=1.0,
        s_frac in 0.0f64..=1.0,
    ) {
        let n1 = ((p1 as f64 * n1_frac).round() as u64).max(1).min(p1);
        let n2 = ((p2 as f64 * n2_frac).round() as u64).max(1).min(p2);
        let s = (p1.min(p2) as f64 * s_frac).round() as u64;
        let total: f64 = (0..=n1.min(n2)).map(|k| esp_pk(k, n1, n2, s, p1, p2).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "sum over k = {total}");
        for k in 0..=n1.min(n2) {
            let fast = esp_posterior_from_potentials(k, n1, n2, p1, p2).unwrap();
            let direct = esp_posterior_from_potentials_direct(k, n1, n2, p1, p2).unwrap();
            prop_assert!((fast - direct).abs() < 1e-9);
            let flipped = esp_posterior_from_potentials(k, n2, n1, p2, p1).unwrap();
            prop_assert!((fast - flipped).abs() < 1e-12);
            // Zero only in the pigeonhole case where the observed overlap is
            // impossible under full urn sharing.
            prop_assert!((0.0..=1.0).contains(&fast));
            let min_k_if_synonyms = (n1 + n2).saturating_sub(p1 + p2 - p1.min(p2));
            if k >= min_k_if_synonyms {
                prop_assert!(fast > 0.0);
            }
        }
    }

    #[test]
    fn scorer_arithmetic_monotonicity(k in 0u64..50, n1 in 50u64..200, n2 in 50u64..200) {
        let lo = csm_similarity(k, n1, n2).unwrap();
        let hi = csm_similarity(k + 1, n1, n2).unwrap();
        prop_assert!(hi > lo);
        let params = SsmParams::default();
        let s = k as f64 / 50.0;
        let p_lo = ssm_probability(s * 0.9, &params).unwrap();
        let p_hi = ssm_probability((s * 0.9 + 0.05).min(1.0), &params).unwrap();
        prop_assert!(p_hi > p_lo);
        prop_assert!(p_lo > 0.0 && p_hi < 1.0);
    }

    #[test]
    fn combination_is_symmetric_and_rule_independent(
        ps in 0.01f64..0.99,
        pe in 0.01f64..0.99,
        prior in 0.01f64..0.99,
    ) {
        let a = combine_evidence(ps, pe, prior, CombinationRule::ComplementWeighted).unwrap();
        let b = combine_evidence(pe, ps, prior, CombinationRule::ComplementWeighted).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let c = combine_evidence(ps, pe, prior, CombinationRule::PriorNormalized).unwrap();
        prop_assert!((a - c).abs() < 1e-9);
        prop_assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn monge_elkan_is_symmetric_and_bounded(a in "[A-Za-z ]{1,12}", b in "[A-Za-z ]{1,12}") {
        let x = monge_elkan(&a, &b);
        let y = monge_elkan(&b, &a);
        prop_assert!((x - y).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((monge_elkan(&a, &a) - 1.0).abs() < 1e-12 || a.split_whitespace().count() == 0);
    }

    // Random partitions of a small universe: deriving the hypothesis from
    // the gold partition by splitting keeps pairwise precision at 1.
    #[test]
    fn splitting_gold_keeps_pairwise_precision(assign in proptest::collection::vec(0usize..4, 8)) {
        let universe: Vec<String> = (0..8).map(|i| format!("e{i}")).collect();
        let mut gold_clusters: Vec<Vec<String>> = vec![Vec::new(); 4];
        for (i, &g) in assign.iter().enumerate() {
            gold_clusters[g].push(universe[i].clone());
        }
        let gold_clusters: Vec<Vec<String>> =
            gold_clusters.into_iter().filter(|c| !c.is_empty()).collect();
        let gold = GoldStandard::new(gold_clusters.clone()).unwrap();
        // Split each gold cluster into halves.
        let mut hypothesis = Vec::new();
        for c in &gold_clusters {
            let mid = c.len() / 2;
            if mid > 0 {
                hypothesis.push(c[..mid].to_vec());
            }
            hypothesis.push(c[mid..].to_vec());
        }
        if gold.positive_pair_count() > 0 {
            let report = pairwise_prf(&hypothesis, &gold).unwrap();
            prop_assert!(report.precision == 1.0);
            prop_assert!(report.recall <= 1.0);
            let exact = pairwise_prf(&gold_clusters, &gold).unwrap();
            prop_assert_eq!((exact.precision, exact.recall), (1.0, 1.0));
            let matched = cluster_prf(&gold_clusters, &gold);
            prop_assert_eq!((matched.precision, matched.recall), (1.0, 1.0));
        }
    }

    #[test]
    fn auc_rank_invariance(scores in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 2..40)) {
        prop_assume!(scores.iter().any(|(_, pos)| *pos));
        let a = pr_auc(&scores, None).unwrap();
        let shifted: Vec<(f64, bool)> =
            scores.iter().map(|&(s, l)| (s.mul_add(4.0, 2.0), l)).collect();
        let b = pr_auc(&shifted, None).unwrap();
        prop_assert!((a.auc - b.auc).abs() < 1e-9);
        prop_assert!(a.auc >= 0.0 && a.auc <= 1.0 + 1e-12);
    }
}
