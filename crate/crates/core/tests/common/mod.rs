#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cocomment::eclat::FrequentItemset;
use cocomment::model::{Timestamp, Transaction, UserId};

/// Transactions from user sets; post `i` is created at `i * 100` and user
/// `u` first comments at `created + u`.
pub fn transactions(sets: &[Vec<u32>]) -> Vec<Transaction> {
    sets.iter()
        .enumerate()
        .map(|(i, users)| {
            let created = i as Timestamp * 100;
            Transaction {
                post_id: format!("p{i:03}"),
                created,
                first_comment_at: users
                    .iter()
                    .map(|&u| (UserId(u), created + 1 + u as Timestamp))
                    .collect(),
            }
        })
        .collect()
}

/// Exhaustive enumeration of every non-empty subset of the user universe.
pub fn brute_force(sets: &[Vec<u32>], min_frequency: u32) -> Vec<FrequentItemset> {
    let universe: Vec<u32> = sets
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(universe.len() <= 20, "brute force universe too large");
    let tx: Vec<BTreeSet<u32>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << universe.len()) {
        let members: Vec<u32> = (0..universe.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| universe[b])
            .collect();
        let freq = tx
            .iter()
            .filter(|t| members.iter().all(|u| t.contains(u)))
            .count() as u32;
        if freq >= min_frequency {
            out.push(FrequentItemset {
                users: members.into_iter().map(UserId).collect(),
                frequency: freq,
            });
        }
    }
    out.sort_by(|a, b| (a.users.len(), &a.users).cmp(&(b.users.len(), &b.users)));
    out
}

pub fn frequency_map(itemsets: &[FrequentItemset]) -> BTreeMap<Vec<UserId>, u32> {
    itemsets
        .iter()
        .map(|s| (s.users.clone(), s.frequency))
        .collect()
}
