//! Temporal train/test split and rule-based participation prediction.
//!
//! A rule `S ⇒ {c}` is checked against every test post. It is a hit only
//! when all of `S` and `c` are active and every member of `S` commented
//! before `c` first did.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PageDataset, Transaction, UserId};
use crate::rules::Rule;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Vec<Transaction>,
    pub test: Vec<Transaction>,
}

/// `floor(fraction * n)`, robust to representation error such as
/// `0.8 * 5 = 4.000000000000001` or `0.29 * 100 = 28.999999999999996`.
pub fn floor_fraction(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Splits transactions by post creation time (ties by post id): the first
/// `floor(train_fraction * n)` go to training, the rest to testing.
pub fn temporal_split(dataset: &PageDataset, train_fraction: f64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::usage(
            "train fraction must lie strictly between 0 and 1",
        ));
    }
    let n = dataset.transactions.len();
    if n < 2 {
        return Err(Error::usage(format!(
            "temporal split needs at least 2 posts, got {n}"
        )));
    }
    let mut ordered = dataset.transactions.clone();
    ordered.sort_by(|a, b| (a.created, &a.post_id).cmp(&(b.created, &b.post_id)));
    let cut = floor_fraction(train_fraction, n);
    if cut == 0 || cut == n {
        return Err(Error::usage(format!(
            "train fraction {train_fraction} leaves an empty side for {n} posts"
        )));
    }
    let test = ordered.split_off(cut);
    Ok(SplitDataset {
        train: ordered,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    TrueNegative,
    FalseNegative,
}

pub fn classify_rule_on_post(rule: &Rule, transaction: &Transaction) -> Result<Outcome> {
    let consequent = rule.single_consequent().ok_or_else(|| {
        Error::usage(format!(
            "prediction needs a single-user consequent, rule has {}",
            rule.consequent.len()
        ))
    })?;
    Ok(classify(&rule.antecedent, consequent, transaction))
}

fn classify(antecedent: &[UserId], consequent: UserId, t: &Transaction) -> Outcome {
    // latest first comment among the antecedent, or None if any is absent
    let ante_latest = antecedent
        .iter()
        .map(|&u| t.first_comment(u))
        .try_fold(i64::MIN, |acc, ts| ts.map(|ts| acc.max(ts)));
    match (ante_latest, t.first_comment(consequent)) {
        (Some(latest), Some(cons)) if latest < cons => Outcome::TruePositive,
        (Some(_), Some(_)) => Outcome::FalseNegative,
        (Some(_), None) => Outcome::FalsePositive,
        (None, Some(_)) => Outcome::FalseNegative,
        (None, None) => Outcome::TrueNegative,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TruePositive => self.tp += 1,
            Outcome::FalsePositive => self.fp += 1,
            Outcome::TrueNegative => self.tn += 1,
            Outcome::FalseNegative => self.fn_ += 1,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn ratio(num: u64, den: u64) -> Option<f64> {
        (den > 0).then(|| num as f64 / den as f64)
    }

    pub fn accuracy(&self) -> Option<f64> {
        Self::ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fn_)
    }
}

/// Aggregate of every (rule, test post) classification. Undefined ratios
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n_rules: usize,
    pub n_test_posts: usize,
    pub counts: ConfusionCounts,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Distinct consequent users with at least one true positive.
    pub predictable_users: usize,
    /// Rules with at least one true positive.
    pub used_rules: usize,
}

#[derive(Clone, Default)]
struct Partial {
    counts: ConfusionCounts,
    used: Vec<bool>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.counts = self.counts.merge(other.counts);
        if self.used.is_empty() {
            return Partial {
                counts: self.counts,
                used: other.used,
            };
        }
        for (a, b) in self.used.iter_mut().zip(other.used) {
            *a |= b;
        }
        self
    }
}

/// Classifies every rule against every test post. Rules must have a single
/// consequent user.
pub fn evaluate(rules: &[Rule], test: &[Transaction]) -> Result<Evaluation> {
    let consequents: Vec<UserId> = rules
        .iter()
        .map(|r| {
            r.single_consequent()
                .ok_or_else(|| Error::usage("evaluation needs rules with a single-user consequent"))
        })
        .collect::<Result<_>>()?;

    let merged = test
        .par_iter()
        .fold(
            || Partial {
                counts: ConfusionCounts::default(),
                used: vec![false; rules.len()],
            },
            |mut acc, t| {
                for (i, (rule, &c)) in rules.iter().zip(&consequents).enumerate() {
                    let outcome = classify(&rule.antecedent, c, t);
                    if outcome == Outcome::TruePositive {
                        acc.used[i] = true;
                    }
                    acc.counts.record(outcome);
                }
                acc
            },
        )
        .reduce(Partial::default, Partial::merge);

    let used = if merged.used.is_empty() {
        vec![false; rules.len()]
    } else {
        merged.used
    };
    let predictable: BTreeSet<UserId> = consequents
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(&c, _)| c)
        .collect();
    let counts = merged.counts;
    Ok(Evaluation {
        n_rules: rules.len(),
        n_test_posts: test.len(),
        counts,
        accuracy: counts.accuracy(),
        precision: counts.precision(),
        recall: counts.recall(),
        predictable_users: predictable.len(),
        used_rules: used.iter().filter(|&&u| u).count(),
    })
}
