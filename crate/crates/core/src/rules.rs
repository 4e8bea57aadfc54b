//! Association rules between user sets and their interestingness metrics.
//!
//! For a frequent itemset `I` split into antecedent `S` and consequent
//! `I \ S` over `n` transactions:
//!
//! - support    = freq(I) / n
//! - confidence = support(I) / support(S)
//! - lift       = support(I) / (support(S) · support(I \ S))
//! - conviction = (1 − support(S)) / (1 − confidence), infinite when the
//!   confidence is 1

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::eclat::FrequentItemset;
use crate::error::{Error, ResourceKind, Result};
use crate::model::UserId;
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<UserId>,
    pub consequent: Vec<UserId>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
    /// `f64::INFINITY` when confidence is exactly 1.
    pub conviction: f64,
}

impl Rule {
    /// The single consequent user, if the consequent has exactly one.
    pub fn single_consequent(&self) -> Option<UserId> {
        match self.consequent.as_slice() {
            [u] => Some(*u),
            _ => None,
        }
    }
}

/// Itemsets larger than this would produce more than 2^30 rules each.
const MAX_RULE_ITEMSET: usize = 30;

/// Every rule `S ⇒ I \ S` for every itemset `I` of size ≥ 2 and every
/// non-empty proper subset `S`. Subset frequencies are looked up in
/// `itemsets`, which must be closed under subsets.
pub fn generate_rules(itemsets: &[FrequentItemset], n_transactions: usize) -> Result<Vec<Rule>> {
    if n_transactions == 0 {
        return Err(Error::usage(
            "rule generation needs at least one transaction",
        ));
    }
    let table: HashMap<&[UserId], u32> = itemsets
        .iter()
        .map(|s| (s.users.as_slice(), s.frequency))
        .collect();
    let lookup = |users: &[UserId]| {
        table.get(users).copied().ok_or_else(|| {
            Error::Inconsistent(format!("subset {users:?} missing from the itemset table"))
        })
    };
    let n = n_transactions as f64;
    let mut rules = Vec::new();
    let mut antecedent = Vec::new();
    let mut consequent = Vec::new();
    for set in itemsets.iter().filter(|s| s.len() >= 2) {
        let k = set.len();
        if k > MAX_RULE_ITEMSET {
            return Err(Error::ResourceLimit {
                limit: ResourceKind::ItemsetCap,
                partial: rules.len(),
            });
        }
        let f_all = set.frequency as f64;
        for mask in 1u32..(1u32 << k) - 1 {
            antecedent.clear();
            consequent.clear();
            for (bit, &u) in set.users.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    antecedent.push(u);
                } else {
                    consequent.push(u);
                }
            }
            let f_ante = lookup(&antecedent)? as f64;
            let f_cons = lookup(&consequent)? as f64;
            let confidence = f_all / f_ante;
            let conviction = if set.frequency as f64 == f_ante {
                f64::INFINITY
            } else {
                (1.0 - f_ante / n) / (1.0 - confidence)
            };
            rules.push(Rule {
                antecedent: antecedent.clone(),
                consequent: consequent.clone(),
                support: f_all / n,
                confidence,
                lift: f_all * n / (f_ante * f_cons),
                conviction,
            });
        }
    }
    Ok(rules)
}

/// Selection criteria for a rule set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleFilter {
    pub min_confidence: f64,
    /// Compare with `>` instead of `>=`.
    pub strict: bool,
    pub max_consequent: Option<usize>,
    pub min_antecedent: Option<usize>,
}

pub const HIGH_CONFIDENCE: f64 = 0.95;

impl RuleFilter {
    pub fn min_confidence(min_confidence: f64) -> Self {
        RuleFilter {
            min_confidence,
            strict: false,
            max_consequent: None,
            min_antecedent: None,
        }
    }

    /// Confidence ≥ 0.95 and a single affected user.
    pub fn reduced() -> Self {
        RuleFilter {
            max_consequent: Some(1),
            ..RuleFilter::min_confidence(HIGH_CONFIDENCE)
        }
    }

    /// Every rule with a single affected user.
    pub fn single_consequent() -> Self {
        RuleFilter {
            max_consequent: Some(1),
            ..RuleFilter::min_confidence(0.0)
        }
    }

    pub fn confidence_passes(&self, confidence: f64) -> bool {
        if self.strict {
            confidence > self.min_confidence
        } else {
            confidence >= self.min_confidence
        }
    }

    pub fn accepts(&self, rule: &Rule) -> bool {
        self.confidence_passes(rule.confidence)
            && self
                .max_consequent
                .is_none_or(|m| rule.consequent.len() <= m)
            && self
                .min_antecedent
                .is_none_or(|m| rule.antecedent.len() >= m)
    }
}

pub fn filter_rules(rules: &[Rule], filter: &RuleFilter) -> Vec<Rule> {
    rules
        .iter()
        .filter(|r| filter.accepts(r))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        Summary::of(values)
            .map(|s| MetricSummary {
                count: s.count,
                mean: s.mean,
                median: s.median,
                std: s.std,
            })
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleSummary {
    pub n_rules: usize,
    pub support: MetricSummary,
    pub confidence: MetricSummary,
    pub lift: MetricSummary,
    /// Finite convictions only.
    pub conviction: MetricSummary,
    pub infinite_conviction: usize,
}

pub fn summarize_rules(rules: &[Rule]) -> RuleSummary {
    let col = |f: fn(&Rule) -> f64| -> Vec<f64> { rules.iter().map(f).collect() };
    let finite: Vec<f64> = rules
        .iter()
        .map(|r| r.conviction)
        .filter(|c| c.is_finite())
        .collect();
    RuleSummary {
        n_rules: rules.len(),
        support: MetricSummary::of(&col(|r| r.support)),
        confidence: MetricSummary::of(&col(|r| r.confidence)),
        lift: MetricSummary::of(&col(|r| r.lift)),
        conviction: MetricSummary::of(&finite),
        infinite_conviction: rules.len() - finite.len(),
    }
}

/// Six-decimal rendering with `inf` for infinite values.
pub fn format_metric(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eclat::{mine, MineConfig};
    use crate::model::{Timestamp, Transaction};

    fn itemset(users: &[u32], frequency: u32) -> FrequentItemset {
        FrequentItemset {
            users: users.iter().map(|&u| UserId(u)).collect(),
            frequency,
        }
    }

    fn rule(conf: f64, ante: usize, cons: usize) -> Rule {
        Rule {
            antecedent: (0..ante as u32).map(UserId).collect(),
            consequent: (10..10 + cons as u32).map(UserId).collect(),
            support: 0.1,
            confidence: conf,
            lift: 1.0,
            conviction: 1.0,
        }
    }

    #[test]
    fn confidence_half() {
        // A=0, B=1, C=2: {A,B,C} in 4 posts, {A,B} in 8
        let sets = vec![
            itemset(&[0], 10),
            itemset(&[1], 9),
            itemset(&[2], 6),
            itemset(&[0, 1], 8),
            itemset(&[0, 2], 5),
            itemset(&[1, 2], 4),
            itemset(&[0, 1, 2], 4),
        ];
        let rules = generate_rules(&sets, 20).unwrap();
        let r = rules
            .iter()
            .find(|r| r.antecedent == [UserId(0), UserId(1)] && r.consequent == [UserId(2)])
            .unwrap();
        assert_eq!(r.confidence, 0.5);
        assert_eq!(r.support, 0.2);
    }

    #[test]
    fn full_confidence_infinite_conviction() {
        let sets = vec![itemset(&[0], 5), itemset(&[1], 7), itemset(&[0, 1], 5)];
        let rules = generate_rules(&sets, 10).unwrap();
        let r = rules.iter().find(|r| r.antecedent == [UserId(0)]).unwrap();
        assert_eq!(r.confidence, 1.0);
        assert!(r.conviction.is_infinite() && r.conviction > 0.0);
        let back = rules.iter().find(|r| r.antecedent == [UserId(1)]).unwrap();
        assert!(back.conviction.is_finite());
    }

    #[test]
    fn independence_gives_unit_lift() {
        let t: Vec<Transaction> = [&[0u32, 2][..], &[0], &[2], &[]]
            .iter()
            .enumerate()
            .map(|(i, s)| Transaction {
                post_id: format!("p{i}"),
                created: i as Timestamp,
                first_comment_at: s.iter().map(|&u| (UserId(u), 0)).collect(),
            })
            .collect();
        let sets = mine(&t, &MineConfig::with_min_frequency(1)).unwrap();
        let rules = generate_rules(&sets, t.len()).unwrap();
        let r = rules.iter().find(|r| r.antecedent == [UserId(0)]).unwrap();
        assert!((r.lift - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_subset_is_inconsistent() {
        let sets = vec![itemset(&[0], 5), itemset(&[0, 1], 5)];
        assert!(matches!(
            generate_rules(&sets, 10),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn rule_count_per_itemset() {
        let sets = vec![
            itemset(&[0], 3),
            itemset(&[1], 3),
            itemset(&[2], 3),
            itemset(&[0, 1], 3),
            itemset(&[0, 2], 3),
            itemset(&[1, 2], 3),
            itemset(&[0, 1, 2], 3),
        ];
        // 3 pairs × 2 + one triple × 6
        assert_eq!(generate_rules(&sets, 3).unwrap().len(), 12);
    }

    #[test]
    fn filter_boundary_inclusive() {
        let rules = vec![rule(0.94, 1, 1), rule(0.95, 1, 1), rule(1.0, 1, 1)];
        assert_eq!(
            filter_rules(&rules, &RuleFilter::min_confidence(0.95)).len(),
            2
        );
        let strict = RuleFilter {
            strict: true,
            ..RuleFilter::min_confidence(0.95)
        };
        assert_eq!(filter_rules(&rules, &strict).len(), 1);
        assert_eq!(
            filter_rules(&rules, &RuleFilter::min_confidence(0.0)),
            rules
        );
    }

    #[test]
    fn reduced_filter_shape() {
        let rules = vec![
            rule(0.99, 2, 1),
            rule(0.99, 1, 2),
            rule(0.5, 2, 1),
            rule(1.0, 1, 1),
        ];
        let kept = filter_rules(&rules, &RuleFilter::reduced());
        assert_eq!(kept, vec![rules[0].clone(), rules[3].clone()]);
        let two_up = RuleFilter {
            min_antecedent: Some(2),
            ..RuleFilter::reduced()
        };
        assert_eq!(filter_rules(&rules, &two_up), vec![rules[0].clone()]);
    }

    #[test]
    fn summary_excludes_infinite_conviction() {
        let mut a = rule(0.5, 1, 1);
        a.conviction = 2.0;
        let mut b = rule(1.0, 1, 1);
        b.conviction = f64::INFINITY;
        let s = summarize_rules(&[a.clone(), b]);
        assert_eq!(s.conviction.mean, 2.0);
        assert_eq!(s.conviction.count, 1);
        assert_eq!(s.infinite_conviction, 1);

        let single = summarize_rules(&[a]);
        assert_eq!(single.lift.mean, 1.0);
        assert_eq!(single.lift.median, 1.0);
        assert_eq!(single.lift.std, 0.0);

        let empty = summarize_rules(&[]);
        assert_eq!(empty.n_rules, 0);
        assert_eq!(empty.support.count, 0);
    }

    #[test]
    fn metric_format() {
        assert_eq!(format_metric(f64::INFINITY), "inf");
        assert_eq!(format_metric(0.5), "0.500000");
    }
}
