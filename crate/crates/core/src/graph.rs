//! Co-comment network: users are linked when they commented on the same
//! post. Provides degree and PageRank rankings plus the list comparisons
//! built on top of them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PageDataset, Transaction, UserId};
use crate::predict::floor_fraction;
use crate::ranking::RankedUserList;

/// Undirected simple graph over the active users of a page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoCommentGraph {
    /// Ascending.
    nodes: Vec<UserId>,
    /// Sorted neighbour positions (indices into `nodes`) per node.
    adjacency: Vec<Vec<u32>>,
}

impl CoCommentGraph {
    pub fn nodes(&self) -> &[UserId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn position(&self, user: UserId) -> Option<usize> {
        self.nodes.binary_search(&user).ok()
    }

    pub fn degree(&self, user: UserId) -> Option<usize> {
        self.position(user).map(|i| self.adjacency[i].len())
    }

    pub fn neighbors(&self, user: UserId) -> impl Iterator<Item = UserId> + '_ {
        self.position(user).into_iter().flat_map(move |i| {
            self.adjacency[i]
                .iter()
                .map(move |&j| self.nodes[j as usize])
        })
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(move |(i, nbrs)| {
                nbrs.iter()
                    .filter(move |&&j| j as usize > i)
                    .map(move |&j| (self.nodes[i], self.nodes[j as usize]))
            })
    }
}

/// Adds a clique over each transaction's active users.
pub fn build_graph(transactions: &[Transaction]) -> CoCommentGraph {
    let mut nodes: Vec<UserId> = transactions
        .iter()
        .flat_map(Transaction::active_users)
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    nodes.sort_unstable();
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); nodes.len()];
    let mut members = Vec::new();
    for t in transactions {
        members.clear();
        // active users are ascending, so positions are too
        members.extend(
            t.active_users()
                .map(|u| nodes.binary_search(&u).expect("node collected above") as u32),
        );
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                adjacency[i as usize].push(j);
                adjacency[j as usize].push(i);
            }
        }
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
        nbrs.dedup();
    }
    CoCommentGraph { nodes, adjacency }
}

pub fn rank_degree(graph: &CoCommentGraph) -> RankedUserList {
    RankedUserList::from_scores(
        graph
            .nodes
            .iter()
            .zip(&graph.adjacency)
            .map(|(&u, nbrs)| (u, nbrs.len() as f64)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tolerance: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    pub ranking: RankedUserList,
    pub converged: bool,
    pub iterations: usize,
}

/// Synchronous power iteration. Isolated nodes spread their mass uniformly
/// over all nodes.
pub fn pagerank_scores(
    graph: &CoCommentGraph,
    params: &PageRankParams,
) -> Result<(Vec<f64>, bool, usize)> {
    let d = params.damping;
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::usage("damping must lie strictly between 0 and 1"));
    }
    let n = graph.len();
    if n == 0 {
        return Ok((Vec::new(), true, 0));
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let mut dangling = 0.0;
        for (i, nbrs) in graph.adjacency.iter().enumerate() {
            if nbrs.is_empty() {
                dangling += rank[i];
                share[i] = 0.0;
            } else {
                share[i] = rank[i] / nbrs.len() as f64;
            }
        }
        let base = (1.0 - d) / nf + d * dangling / nf;
        for (i, nbrs) in graph.adjacency.iter().enumerate() {
            let inflow: f64 = nbrs.iter().map(|&j| share[j as usize]).sum();
            next[i] = base + d * inflow;
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < params.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "pagerank did not converge within {} iterations",
            params.max_iter
        );
    }
    Ok((rank, converged, iterations))
}

pub fn rank_pagerank(graph: &CoCommentGraph, params: &PageRankParams) -> Result<PageRankResult> {
    let (scores, converged, iterations) = pagerank_scores(graph, params)?;
    Ok(PageRankResult {
        ranking: RankedUserList::from_scores(graph.nodes.iter().copied().zip(scores)),
        converged,
        iterations,
    })
}

/// The top-k percentages compared by default.
pub const DEFAULT_PERCENTS: [f64; 7] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionPoint {
    pub percent: f64,
    pub k: usize,
    /// `None` when `k` is 0.
    pub similarity: Option<f64>,
}

/// Overlap of the top-k prefixes of two rankings, with
/// `k = floor(percent * reference_size)`.
pub fn topk_intersection(
    a: &RankedUserList,
    b: &RankedUserList,
    percents: &[f64],
    reference_size: usize,
) -> Result<Vec<IntersectionPoint>> {
    if reference_size > a.len() || reference_size > b.len() {
        return Err(Error::usage(format!(
            "reference size {reference_size} exceeds list lengths {} / {}",
            a.len(),
            b.len()
        )));
    }
    percents
        .iter()
        .map(|&percent| {
            if !(0.0..=1.0).contains(&percent) {
                return Err(Error::usage(format!("percent {percent} outside [0, 1]")));
            }
            let k = floor_fraction(percent, reference_size);
            if k == 0 {
                log::warn!(
                    "top {:.0}% of {reference_size} users is empty; skipped",
                    percent * 100.0
                );
                return Ok(IntersectionPoint {
                    percent,
                    k,
                    similarity: None,
                });
            }
            let top_a: HashSet<UserId> = a.users().take(k).collect();
            let common = b.users().take(k).filter(|u| top_a.contains(u)).count();
            Ok(IntersectionPoint {
                percent,
                k,
                similarity: Some(common as f64 / k as f64),
            })
        })
        .collect()
}

/// Share of posts authored by the top `floor(top_fraction * |ranking|)`
/// users. `None` for a page without posts.
pub fn post_creation_share(
    dataset: &PageDataset,
    ranking: &RankedUserList,
    top_fraction: f64,
) -> Option<f64> {
    if dataset.posts.is_empty() {
        return None;
    }
    let k = floor_fraction(top_fraction, ranking.len());
    let top: HashSet<UserId> = ranking.users().take(k).collect();
    let authored = dataset
        .posts
        .iter()
        .filter(|p| top.contains(&p.author))
        .count();
    Some(authored as f64 / dataset.posts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Timestamp;

    fn tx(sets: &[&[u32]]) -> Vec<Transaction> {
        sets.iter()
            .enumerate()
            .map(|(i, s)| Transaction {
                post_id: format!("p{i}"),
                created: i as Timestamp,
                first_comment_at: s.iter().map(|&u| (UserId(u), 0)).collect(),
            })
            .collect()
    }

    fn ids(list: &RankedUserList) -> Vec<u32> {
        list.users().map(|u| u.0).collect()
    }

    #[test]
    fn triangle() {
        let g = build_graph(&tx(&[&[0, 1, 2]]));
        assert_eq!(g.n_edges(), 3);
        let r = rank_degree(&g);
        assert_eq!(ids(&r), vec![0, 1, 2]);
        assert!(r.entries().iter().all(|e| e.score == 2.0));
    }

    #[test]
    fn path_from_two_posts() {
        let g = build_graph(&tx(&[&[0, 1], &[1, 2]]));
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            vec![(UserId(0), UserId(1)), (UserId(1), UserId(2))]
        );
        let r = rank_degree(&g);
        assert_eq!(ids(&r), vec![1, 0, 2]);
        assert_eq!(r.entries()[0].score, 2.0);
    }

    #[test]
    fn solo_commenter_isolated() {
        let g = build_graph(&tx(&[&[0, 1], &[5]]));
        assert_eq!(g.degree(UserId(5)), Some(0));
        assert_eq!(g.neighbors(UserId(5)).count(), 0);
    }

    #[test]
    fn star_degree() {
        let g = build_graph(&tx(&[&[9, 1], &[9, 2], &[9, 3], &[9, 4]]));
        let r = rank_degree(&g);
        assert_eq!(r.entries()[0].user, UserId(9));
        assert_eq!(r.entries()[0].score, 4.0);
    }

    #[test]
    fn pagerank_symmetric_graphs_uniform() {
        let complete = build_graph(&tx(&[&[0, 1, 2, 3, 4]]));
        let cycle = build_graph(&tx(&[&[0, 1], &[1, 2], &[2, 3], &[3, 0]]));
        let isolated = build_graph(&tx(&[&[0], &[1], &[2]]));
        for g in [complete, cycle, isolated] {
            let r = rank_pagerank(&g, &PageRankParams::default()).unwrap();
            let n = g.len() as f64;
            assert!(r.converged);
            for e in r.ranking.entries() {
                assert!((e.score - 1.0 / n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pagerank_star_center_wins() {
        let g = build_graph(&tx(&[&[0, 1], &[0, 2], &[0, 3], &[0, 4]]));
        let r = rank_pagerank(&g, &PageRankParams::default()).unwrap();
        assert_eq!(r.ranking.entries()[0].user, UserId(0));
        assert!(r.ranking.entries()[0].score > r.ranking.entries()[1].score);
    }

    #[test]
    fn pagerank_flags_non_convergence() {
        let g = build_graph(&tx(&[&[0, 1], &[0, 2], &[0, 3]]));
        let params = PageRankParams {
            max_iter: 1,
            ..PageRankParams::default()
        };
        let r = rank_pagerank(&g, &params).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        let bad = PageRankParams {
            damping: 1.0,
            ..PageRankParams::default()
        };
        assert!(rank_pagerank(&g, &bad).is_err());
    }

    fn list(users: &[u32]) -> RankedUserList {
        RankedUserList::from_scores(
            users
                .iter()
                .enumerate()
                .map(|(i, &u)| (UserId(u), -(i as f64))),
        )
    }

    #[test]
    fn intersection_rejects_short_lists() {
        assert!(topk_intersection(&list(&[0, 1]), &list(&[0, 1, 2]), &[1.0], 3).is_err());
    }

    #[test]
    fn intersection_skips_empty_k() {
        let pts = topk_intersection(&list(&[0, 1, 2]), &list(&[2, 1, 0]), &[0.1, 1.0], 3).unwrap();
        assert_eq!(pts[0].k, 0);
        assert_eq!(pts[0].similarity, None);
        assert_eq!(pts[1].similarity, Some(1.0));
    }

    #[test]
    fn identical_lists_full_overlap() {
        let l = list(&[5, 3, 8, 1, 9, 2]);
        for p in topk_intersection(&l, &l, &DEFAULT_PERCENTS, 6).unwrap() {
            assert!(p.similarity.is_none() || p.similarity == Some(1.0));
        }
    }
}
