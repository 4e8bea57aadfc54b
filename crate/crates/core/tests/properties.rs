mod common;

use std::collections::BTreeSet;

use cocomment::eclat::{mine, MineConfig};
use cocomment::graph::{build_graph, pagerank_scores, topk_intersection, PageRankParams};
use cocomment::influence::rank_arl;
use cocomment::model::UserId;
use cocomment::predict::{evaluate, floor_fraction, temporal_split};
use cocomment::ranking::RankedUserList;
use cocomment::rules::{filter_rules, generate_rules, RuleFilter};
use cocomment::stats::{friedman, kruskal_wallis, RankOrder};
use cocomment::synth::{generate_dataset, FollowEdge, PlantConfig};
use common::{brute_force, frequency_map, transactions};
use proptest::prelude::*;

fn user_sets(max_users: u32, max_tx: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(
        prop::collection::btree_set(0..max_users, 0..=max_users as usize)
            .prop_map(|s| s.into_iter().collect::<Vec<_>>()),
        1..=max_tx,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eclat_matches_enumeration(sets in user_sets(10, 20), min_freq in 1u32..=5) {
        let mined = mine(&transactions(&sets), &MineConfig::with_min_frequency(min_freq)).unwrap();
        prop_assert_eq!(mined, brute_force(&sets, min_freq));
    }

    #[test]
    fn supersets_never_more_frequent(sets in user_sets(10, 25), min_freq in 1u32..=4) {
        let mined = mine(&transactions(&sets), &MineConfig::with_min_frequency(min_freq)).unwrap();
        let freq = frequency_map(&mined);
        for s in &mined {
            for drop in 0..s.users.len() {
                if s.users.len() == 1 {
                    break;
                }
                let mut sub = s.users.clone();
                sub.remove(drop);
                let f = freq.get(&sub).copied();
                prop_assert!(f.is_some_and(|f| f >= s.frequency), "subset {sub:?} of {:?}", s.users);
            }
        }
    }

    #[test]
    fn rule_identities(sets in user_sets(8, 20), min_freq in 1u32..=3) {
        let n = sets.len();
        let mined = mine(&transactions(&sets), &MineConfig::with_min_frequency(min_freq)).unwrap();
        let rules = generate_rules(&mined, n).unwrap();
        let expected: usize = mined.iter().map(|s| (1usize << s.users.len()) - 2).sum();
        prop_assert_eq!(rules.len(), expected);
        let freq = frequency_map(&mined);
        for r in &rules {
            let sup_c = freq[&r.consequent] as f64 / n as f64;
            prop_assert!((r.confidence - r.lift * sup_c).abs() < 1e-12);
            prop_assert!(r.confidence > 0.0 && r.confidence <= 1.0);
            prop_assert_eq!(r.conviction.is_infinite(), r.confidence == 1.0);
            let mut all: Vec<UserId> = r.antecedent.iter().chain(&r.consequent).copied().collect();
            all.sort();
            prop_assert!((r.support - freq[&all] as f64 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn pagerank_is_a_distribution(sets in user_sets(12, 15)) {
        let g = build_graph(&transactions(&sets));
        // bipartite graphs contract only by the damping factor per step,
        // so allow enough iterations for any input to reach the tolerance
        let params = PageRankParams { max_iter: 1000, ..PageRankParams::default() };
        let (scores, converged, _) = pagerank_scores(&g, &params).unwrap();
        prop_assert!(converged);
        if !scores.is_empty() {
            prop_assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(scores.iter().all(|&s| s > 0.0));
        }
    }

    #[test]
    fn graph_is_simple_and_undirected(sets in user_sets(12, 15)) {
        let g = build_graph(&transactions(&sets));
        for (a, b) in g.edges() {
            prop_assert!(a < b);
            prop_assert!(g.neighbors(b).any(|x| x == a));
        }
        let active: BTreeSet<u32> = sets.iter().flatten().copied().collect();
        prop_assert_eq!(g.len(), active.len());
    }

    #[test]
    fn intersection_symmetric_and_bounded(
        a in Just((0u32..30).collect::<Vec<_>>()).prop_shuffle(),
        b in Just((0u32..30).collect::<Vec<_>>()).prop_shuffle(),
        reference in 1usize..=30,
    ) {
        let list = |v: &[u32]| RankedUserList::from_scores(
            v.iter().enumerate().map(|(i, &u)| (UserId(u), -(i as f64))),
        );
        let (la, lb) = (list(&a), list(&b));
        let percents = [0.1, 0.25, 0.5, 1.0];
        let ab = topk_intersection(&la, &lb, &percents, reference).unwrap();
        let ba = topk_intersection(&lb, &la, &percents, reference).unwrap();
        prop_assert_eq!(&ab, &ba);
        for p in &ab {
            prop_assert_eq!(p.k, floor_fraction(p.percent, reference));
            if let Some(s) = p.similarity {
                prop_assert!((0.0..=1.0).contains(&s));
            }
        }
        let self_sim = topk_intersection(&la, &la, &percents, reference).unwrap();
        prop_assert!(self_sim.iter().all(|p| p.similarity.is_none_or(|s| s == 1.0)));
    }

    #[test]
    fn ranked_lists_are_ordered_without_duplicates(
        scores in prop::collection::vec((0u32..20, 0u32..5), 0..40),
    ) {
        let l = RankedUserList::from_scores(scores.iter().map(|&(u, s)| (UserId(u), s as f64)));
        let users: Vec<UserId> = l.users().collect();
        let distinct: BTreeSet<UserId> = users.iter().copied().collect();
        prop_assert_eq!(distinct.len(), users.len());
        for w in l.entries().windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].user < w[1].user));
        }
    }

    #[test]
    fn arl_scores_count_antecedent_appearances(sets in user_sets(7, 15)) {
        let n = sets.len();
        let mined = mine(&transactions(&sets), &MineConfig::with_min_frequency(1)).unwrap();
        let rules = generate_rules(&mined, n).unwrap();
        let filter = RuleFilter::min_confidence(0.95);
        let ranked = rank_arl(&rules, &filter);
        let strong = filter_rules(&rules, &filter);
        for e in ranked.entries() {
            let count = strong.iter().filter(|r| r.antecedent.contains(&e.user)).count();
            prop_assert_eq!(e.score, count as f64);
        }
    }

    #[test]
    fn evaluation_is_additive_over_posts(sets in user_sets(6, 20), cut in 0usize..20) {
        let tx = transactions(&sets);
        let mined = mine(&tx, &MineConfig::with_min_frequency(1)).unwrap();
        let rules = filter_rules(&generate_rules(&mined, tx.len()).unwrap(), &RuleFilter::single_consequent());
        let cut = cut.min(tx.len());
        let whole = evaluate(&rules, &tx).unwrap();
        let left = evaluate(&rules, &tx[..cut]).unwrap();
        let right = evaluate(&rules, &tx[cut..]).unwrap();
        prop_assert_eq!(whole.counts, left.counts.merge(right.counts));
        prop_assert_eq!(whole.counts.total(), (rules.len() * tx.len()) as u64);
    }

    #[test]
    fn friedman_ignores_monotone_rescaling(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 2..10),
    ) {
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| 3.0 * v.powi(3) + 1.0).collect()).collect();
        let a = friedman(&rows, RankOrder::HigherIsBetter).unwrap();
        let b = friedman(&scaled, RankOrder::HigherIsBetter).unwrap();
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9 || (a.statistic.is_nan() && b.statistic.is_nan()));
    }

    #[test]
    fn kruskal_wallis_ignores_monotone_rescaling(
        groups in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2..6), 2..4),
    ) {
        let scaled: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v.exp()).collect()).collect();
        let a = kruskal_wallis(&groups).unwrap();
        let b = kruskal_wallis(&scaled).unwrap();
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9 || (a.statistic.is_nan() && b.statistic.is_nan()));
    }

    #[test]
    fn split_keeps_time_order(n_posts in 2usize..60, fraction in 0.05f64..0.95, seed in 0u64..1000) {
        let ds = generate_dataset(&PlantConfig::new("pg", 8, n_posts, seed)).unwrap();
        match temporal_split(&ds, fraction) {
            Ok(split) => {
                prop_assert_eq!(split.train.len(), floor_fraction(fraction, n_posts));
                prop_assert_eq!(split.train.len() + split.test.len(), n_posts);
                let last_train = split.train.iter().map(|t| (t.created, &t.post_id)).max().unwrap();
                let first_test = split.test.iter().map(|t| (t.created, &t.post_id)).min().unwrap();
                prop_assert!(last_train < first_test);
            }
            Err(_) => {
                let cut = floor_fraction(fraction, n_posts);
                prop_assert!(cut == 0 || cut == n_posts);
            }
        }
    }

    #[test]
    fn planted_follower_never_precedes_influencers(seed in 0u64..500, p in 0.0f64..=1.0) {
        let mut cfg = PlantConfig::new("pg", 12, 30, seed);
        cfg.base_activity = 0.3;
        cfg.follow_edges.push(FollowEdge { influencers: vec![1, 4], follower: 7, probability: p });
        cfg.activity_overrides.insert(7, 0.0);
        let ds = generate_dataset(&cfg).unwrap();
        for t in &ds.transactions {
            if let Some(c) = t.first_comment(UserId(7)) {
                let a = t.first_comment(UserId(1)).unwrap();
                let b = t.first_comment(UserId(4)).unwrap();
                prop_assert_eq!(c, a.max(b) + 1);
            }
        }
    }
}
