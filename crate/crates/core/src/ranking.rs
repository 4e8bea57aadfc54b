//! Ranked user lists and the registry of interchangeable ranking methods.
//!
//! Every method implements [`Ranker`] and is registered under a name
//! (`arl`, `degree`, `pagerank`). Callers pick methods by name at runtime,
//! e.g. from the command line or when benchmarking all of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, rank_degree, rank_pagerank, PageRankParams};
use crate::influence::rank_arl;
use crate::model::{Transaction, UserId};
use crate::rules::{Rule, RuleFilter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedUser {
    pub user: UserId,
    pub score: f64,
}

/// Users by descending score, ties by ascending id, no duplicates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedUserList {
    entries: Vec<RankedUser>,
}

impl RankedUserList {
    /// Later duplicates of a user are dropped.
    pub fn from_scores(scores: impl IntoIterator<Item = (UserId, f64)>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let mut entries: Vec<RankedUser> = scores
            .into_iter()
            .filter(|(u, _)| seen.insert(*u))
            .map(|(user, score)| RankedUser { user, score })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.user.cmp(&b.user)));
        RankedUserList { entries }
    }

    pub fn entries(&self) -> &[RankedUser] {
        &self.entries
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.entries.iter().map(|e| e.user)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Zero-based position of `user`.
    pub fn position(&self, user: UserId) -> Option<usize> {
        self.entries.iter().position(|e| e.user == user)
    }
}

/// Everything a ranking method may draw on for one page.
#[derive(Debug, Clone, Copy)]
pub struct RankInput<'a> {
    pub transactions: &'a [Transaction],
    pub rules: &'a [Rule],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOutcome {
    pub ranking: RankedUserList,
    /// Set when the method finished but its result is approximate.
    pub warning: Option<String>,
}

impl From<RankedUserList> for RankOutcome {
    fn from(ranking: RankedUserList) -> Self {
        RankOutcome {
            ranking,
            warning: None,
        }
    }
}

pub trait Ranker: Send + Sync {
    fn name(&self) -> &'static str;

    fn rank(&self, input: RankInput<'_>) -> Result<RankOutcome>;
}

/// Antecedent-appearance counts over high-confidence rules.
#[derive(Debug, Clone, Copy)]
pub struct ArlRanker {
    pub filter: RuleFilter,
}

impl Ranker for ArlRanker {
    fn name(&self) -> &'static str {
        "arl"
    }

    fn rank(&self, input: RankInput<'_>) -> Result<RankOutcome> {
        Ok(rank_arl(input.rules, &self.filter).into())
    }
}

/// Neighbour count in the co-comment graph, graph construction included.
#[derive(Debug, Clone, Copy, Default)]
pub struct DegreeRanker;

impl Ranker for DegreeRanker {
    fn name(&self) -> &'static str {
        "degree"
    }

    fn rank(&self, input: RankInput<'_>) -> Result<RankOutcome> {
        Ok(rank_degree(&build_graph(input.transactions)).into())
    }
}

/// PageRank over the co-comment graph, graph construction included.
#[derive(Debug, Clone, Copy, Default)]
pub struct PageRankRanker {
    pub params: PageRankParams,
}

impl Ranker for PageRankRanker {
    fn name(&self) -> &'static str {
        "pagerank"
    }

    fn rank(&self, input: RankInput<'_>) -> Result<RankOutcome> {
        let result = rank_pagerank(&build_graph(input.transactions), &self.params)?;
        let warning = (!result.converged).then(|| {
            format!(
                "pagerank stopped after {} iterations without converging",
                result.iterations
            )
        });
        Ok(RankOutcome {
            ranking: result.ranking,
            warning,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSettings {
    pub arl_filter: RuleFilter,
    pub pagerank: PageRankParams,
}

impl Default for RankSettings {
    fn default() -> Self {
        RankSettings {
            arl_filter: RuleFilter::min_confidence(crate::rules::HIGH_CONFIDENCE),
            pagerank: PageRankParams::default(),
        }
    }
}

/// Ranking methods by name, iterated in name order.
#[derive(Default)]
pub struct RankerRegistry {
    rankers: BTreeMap<&'static str, Box<dyn Ranker>>,
}

impl RankerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `arl`, `degree` and `pagerank`.
    pub fn standard(settings: &RankSettings) -> Self {
        let mut reg = Self::new();
        reg.register(Box::new(ArlRanker {
            filter: settings.arl_filter,
        }));
        reg.register(Box::new(DegreeRanker));
        reg.register(Box::new(PageRankRanker {
            params: settings.pagerank,
        }));
        reg
    }

    /// Replaces any ranker already registered under the same name.
    pub fn register(&mut self, ranker: Box<dyn Ranker>) {
        self.rankers.insert(ranker.name(), ranker);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Ranker> {
        self.rankers.get(name).map(|r| r.as_ref()).ok_or_else(|| {
            Error::usage(format!(
                "unknown ranking method `{name}` (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.rankers.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Ranker> + '_ {
        self.rankers.values().map(|r| r.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_desc_with_id_ties() {
        let l = RankedUserList::from_scores([
            (UserId(3), 1.0),
            (UserId(1), 2.0),
            (UserId(0), 1.0),
            (UserId(1), 9.0),
        ]);
        assert_eq!(
            l.users().collect::<Vec<_>>(),
            vec![UserId(1), UserId(0), UserId(3)]
        );
        assert_eq!(l.position(UserId(3)), Some(2));
    }

    #[test]
    fn registry_lookup() {
        let reg = RankerRegistry::standard(&RankSettings::default());
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            vec!["arl", "degree", "pagerank"]
        );
        assert_eq!(reg.get("degree").unwrap().name(), "degree");
        let err = reg.get("closeness").err().unwrap();
        assert!(err.to_string().contains("available: arl, degree, pagerank"));
    }

    struct Constant;

    impl Ranker for Constant {
        fn name(&self) -> &'static str {
            "degree"
        }

        fn rank(&self, _: RankInput<'_>) -> Result<RankOutcome> {
            Ok(RankedUserList::from_scores([(UserId(7), 1.0)]).into())
        }
    }

    #[test]
    fn register_replaces_by_name() {
        let mut reg = RankerRegistry::standard(&RankSettings::default());
        reg.register(Box::new(Constant));
        let out = reg
            .get("degree")
            .unwrap()
            .rank(RankInput {
                transactions: &[],
                rules: &[],
            })
            .unwrap();
        assert_eq!(out.ranking.users().collect::<Vec<_>>(), vec![UserId(7)]);
    }
}
