//! Frequent user-set mining with Eclat.
//!
//! Each user is mapped to the sorted list of transaction indices it occurs
//! in (its tid-set). Itemsets are grown depth-first in ascending user order
//! by intersecting tid-sets; extensions below the threshold are dropped
//! before recursing.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, ResourceKind, Result};
use crate::model::{Transaction, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequentItemset {
    /// Sorted, non-empty.
    pub users: Vec<UserId>,
    /// Number of transactions containing every user.
    pub frequency: u32,
}

impl FrequentItemset {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineConfig {
    pub min_frequency: u32,
    pub max_length: Option<usize>,
    pub max_itemsets: Option<usize>,
    pub time_budget: Option<Duration>,
}

pub const DEFAULT_MIN_FREQUENCY: u32 = 4;
pub const DEFAULT_MAX_ITEMSETS: usize = 10_000_000;
pub const DEFAULT_AUTO_THRESHOLD_CAP: Duration = Duration::from_secs(10);

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            min_frequency: DEFAULT_MIN_FREQUENCY,
            max_length: None,
            max_itemsets: Some(DEFAULT_MAX_ITEMSETS),
            time_budget: None,
        }
    }
}

impl MineConfig {
    pub fn with_min_frequency(min_frequency: u32) -> Self {
        MineConfig {
            min_frequency,
            ..MineConfig::default()
        }
    }
}

type TidSet = Vec<u32>;

fn intersect(a: &[u32], b: &[u32]) -> TidSet {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Vertical layout: every user with its ascending tid-set, in user order.
pub fn tidsets(transactions: &[Transaction]) -> Vec<(UserId, TidSet)> {
    let mut map: BTreeMap<UserId, TidSet> = BTreeMap::new();
    for (tid, t) in transactions.iter().enumerate() {
        for u in t.active_users() {
            map.entry(u).or_default().push(tid as u32);
        }
    }
    map.into_iter().collect()
}

struct Miner<'a> {
    cfg: &'a MineConfig,
    started: Instant,
    out: Vec<FrequentItemset>,
}

impl Miner<'_> {
    fn emit(&mut self, users: Vec<UserId>, frequency: u32) -> Result<()> {
        if let Some(cap) = self.cfg.max_itemsets {
            if self.out.len() >= cap {
                return Err(Error::ResourceLimit {
                    limit: ResourceKind::ItemsetCap,
                    partial: self.out.len(),
                });
            }
        }
        if let Some(budget) = self.cfg.time_budget {
            if self.out.len().is_multiple_of(1024) && self.started.elapsed() > budget {
                return Err(Error::ResourceLimit {
                    limit: ResourceKind::TimeBudget,
                    partial: self.out.len(),
                });
            }
        }
        self.out.push(FrequentItemset { users, frequency });
        Ok(())
    }

    fn extend(&mut self, prefix: &mut Vec<UserId>, class: &[(UserId, TidSet)]) -> Result<()> {
        let min = self.cfg.min_frequency as usize;
        for (i, (user, tids)) in class.iter().enumerate() {
            prefix.push(*user);
            self.emit(prefix.clone(), tids.len() as u32)?;
            let may_grow = self.cfg.max_length.is_none_or(|cap| prefix.len() < cap);
            if may_grow {
                let next: Vec<(UserId, TidSet)> = class[i + 1..]
                    .iter()
                    .filter_map(|(other, other_tids)| {
                        let joint = intersect(tids, other_tids);
                        (joint.len() >= min).then_some((*other, joint))
                    })
                    .collect();
                if !next.is_empty() {
                    self.extend(prefix, &next)?;
                }
            }
            prefix.pop();
        }
        Ok(())
    }
}

/// All itemsets with frequency at least `cfg.min_frequency`, sorted by
/// size and then lexicographically by user.
pub fn mine(transactions: &[Transaction], cfg: &MineConfig) -> Result<Vec<FrequentItemset>> {
    if cfg.min_frequency == 0 {
        return Err(Error::usage("min_frequency must be at least 1"));
    }
    if cfg.max_length == Some(0) {
        return Ok(Vec::new());
    }
    let min = cfg.min_frequency as usize;
    let roots: Vec<(UserId, TidSet)> = tidsets(transactions)
        .into_iter()
        .filter(|(_, tids)| tids.len() >= min)
        .collect();
    let mut miner = Miner {
        cfg,
        started: Instant::now(),
        out: Vec::new(),
    };
    miner.extend(&mut Vec::new(), &roots)?;
    let mut out = miner.out;
    out.sort_by(|a, b| {
        a.users
            .len()
            .cmp(&b.users.len())
            .then_with(|| a.users.cmp(&b.users))
    });
    Ok(out)
}

/// Starting threshold of the auto-threshold search: total activations
/// divided by distinct users, rounded up, never below 2.
pub fn initial_threshold(transactions: &[Transaction]) -> u32 {
    let activations: usize = transactions.iter().map(Transaction::len).sum();
    let users = tidsets(transactions).len();
    if users == 0 {
        return 2;
    }
    (activations.div_ceil(users) as u32).max(2)
}

/// Lowers the threshold from [`initial_threshold`] one step at a time and
/// returns the smallest one whose mining run finishes within `time_cap`
/// (and under the default itemset cap). Never returns less than 2.
pub fn auto_threshold(transactions: &[Transaction], time_cap: Duration) -> Result<u32> {
    if transactions.is_empty() {
        return Err(Error::usage(
            "auto threshold needs at least one transaction",
        ));
    }
    let start = initial_threshold(transactions);
    let mut best = None;
    let mut t = start;
    loop {
        let cfg = MineConfig {
            min_frequency: t,
            time_budget: Some(time_cap),
            ..MineConfig::default()
        };
        let started = Instant::now();
        match mine(transactions, &cfg) {
            Ok(_) if started.elapsed() <= time_cap => best = Some(t),
            Ok(_) => break,
            Err(e) if e.is_resource_limit() => break,
            Err(e) => return Err(e),
        }
        if t == 2 {
            break;
        }
        t -= 1;
    }
    best.ok_or(Error::ThresholdTooSlow { threshold: start })
}
