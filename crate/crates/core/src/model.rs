//! Shared domain vocabulary: users, comments, posts, transactions and pages.
//!
//! A transaction is the set of users who commented on one post. The post
//! author is not an item unless they also commented.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

/// Dense per-page user identifier. Ordering follows the natural order of
/// the user labels, which makes it usable for deterministic tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u32);

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Maps dense [`UserId`]s back to the external user labels of a page.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserTable {
    labels: Vec<String>,
}

impl UserTable {
    /// Builds a table from arbitrary labels. Duplicates are collapsed and
    /// ids are assigned in natural label order.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort_by(|a, b| natural_cmp(a, b));
        labels.dedup();
        UserTable { labels }
    }

    /// Labels `u0..u{n-1}`, where `UserId(i)` is `u{i}`.
    pub fn numbered(n: usize) -> Self {
        UserTable {
            labels: (0..n).map(|i| format!("u{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, user: UserId) -> &str {
        &self.labels[user.index()]
    }

    pub fn id_of(&self, label: &str) -> Option<UserId> {
        self.labels
            .binary_search_by(|probe| natural_cmp(probe, label))
            .ok()
            .map(|i| UserId(i as u32))
    }

    pub fn ids(&self) -> impl Iterator<Item = UserId> {
        (0..self.labels.len() as u32).map(UserId)
    }

    pub fn join(&self, users: &[UserId], sep: &str) -> String {
        users
            .iter()
            .map(|&u| self.label(u))
            .collect::<Vec<_>>()
            .join(sep)
    }
}

/// Natural ordering: a shared alphabetic prefix followed by a numeric
/// suffix compares numerically, so `u2 < u10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u128>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, digits) = s.split_at(cut);
        (head, digits.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentEvent {
    pub comment_id: String,
    pub post_id: String,
    pub user: UserId,
    pub created: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub author: UserId,
    pub created: Timestamp,
    pub comments: Vec<CommentEvent>,
}

impl Post {
    /// Sorts comments by creation time, ties by comment id.
    pub fn sort_comments(&mut self) {
        self.comments
            .sort_by(|a, b| (a.created, &a.comment_id).cmp(&(b.created, &b.comment_id)));
    }
}

/// The commenting users of one post with their first-comment times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub post_id: String,
    /// Creation time of the underlying post.
    pub created: Timestamp,
    pub first_comment_at: BTreeMap<UserId, Timestamp>,
}

impl Transaction {
    /// Active users in ascending id order.
    pub fn active_users(&self) -> impl ExactSizeIterator<Item = UserId> + '_ {
        self.first_comment_at.keys().copied()
    }

    pub fn contains(&self, user: UserId) -> bool {
        self.first_comment_at.contains_key(&user)
    }

    pub fn first_comment(&self, user: UserId) -> Option<Timestamp> {
        self.first_comment_at.get(&user).copied()
    }

    pub fn len(&self) -> usize {
        self.first_comment_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_comment_at.is_empty()
    }
}

/// One transaction per post, in input order.
pub fn build_transactions(posts: &[Post]) -> Result<Vec<Transaction>> {
    let mut seen = HashSet::with_capacity(posts.len());
    let mut out = Vec::with_capacity(posts.len());
    for post in posts {
        if !seen.insert(post.post_id.as_str()) {
            return Err(Error::DuplicatePost(post.post_id.clone()));
        }
        let mut first = BTreeMap::new();
        for c in &post.comments {
            first
                .entry(c.user)
                .and_modify(|t: &mut Timestamp| *t = (*t).min(c.created))
                .or_insert(c.created);
        }
        out.push(Transaction {
            post_id: post.post_id.clone(),
            created: post.created,
            first_comment_at: first,
        });
    }
    Ok(out)
}

/// A validated page: posts sorted by creation time and their transactions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDataset {
    pub page_id: String,
    pub users: UserTable,
    pub posts: Vec<Post>,
    pub transactions: Vec<Transaction>,
}

impl PageDataset {
    pub fn new(page_id: impl Into<String>, users: UserTable, mut posts: Vec<Post>) -> Result<Self> {
        for post in &mut posts {
            post.sort_comments();
        }
        posts.sort_by(|a, b| (a.created, &a.post_id).cmp(&(b.created, &b.post_id)));
        let transactions = build_transactions(&posts)?;
        Ok(PageDataset {
            page_id: page_id.into(),
            users,
            posts,
            transactions,
        })
    }

    /// Number of transactions, the denominator of support.
    pub fn n_transactions(&self) -> usize {
        self.transactions.len()
    }

    pub fn n_comments(&self) -> usize {
        self.posts.iter().map(|p| p.comments.len()).sum()
    }
}
