//! Influence ranking from association rules: a user's score is the number
//! of high-confidence rules whose antecedent contains them.

use std::collections::BTreeMap;

use crate::model::UserId;
use crate::ranking::RankedUserList;
use crate::rules::{Rule, RuleFilter};

/// Only the confidence test of `filter` applies; rules of any shape count.
/// Users never appearing in a passing antecedent are absent from the list.
pub fn rank_arl(rules: &[Rule], filter: &RuleFilter) -> RankedUserList {
    let mut counts: BTreeMap<UserId, u64> = BTreeMap::new();
    for rule in rules
        .iter()
        .filter(|r| filter.confidence_passes(r.confidence))
    {
        for &u in &rule.antecedent {
            *counts.entry(u).or_insert(0) += 1;
        }
    }
    RankedUserList::from_scores(counts.into_iter().map(|(u, n)| (u, n as f64)))
}
