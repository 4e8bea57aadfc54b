//! Synthetic pages with planted follow structure.
//!
//! Every user comments on each post independently with its base activity.
//! A follow edge `{a, b} -> c` with probability `p` then makes `c` comment,
//! one second after the last influencer's first comment, whenever all of
//! `a, b` are active. Randomness comes from ChaCha8 seeded with
//! `PlantConfig::seed`, so output is a pure function of the config.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::format_timestamp;
use crate::model::{CommentEvent, PageDataset, Post, Timestamp, UserId, UserTable};

/// 2016-01-01T00:00:00Z
pub const EPOCH_START: Timestamp = 1_451_606_400;
pub const POST_SPACING: Timestamp = 3600;
pub const COMMENT_WINDOW: Timestamp = 1800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowEdge {
    pub influencers: Vec<u32>,
    pub follower: u32,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub page_id: String,
    pub n_users: usize,
    pub n_posts: usize,
    pub seed: u64,
    pub base_activity: f64,
    /// Per-user replacements for `base_activity`.
    #[serde(default)]
    pub activity_overrides: BTreeMap<u32, f64>,
    #[serde(default)]
    pub follow_edges: Vec<FollowEdge>,
}

impl PlantConfig {
    pub fn new(page_id: impl Into<String>, n_users: usize, n_posts: usize, seed: u64) -> Self {
        PlantConfig {
            page_id: page_id.into(),
            n_users,
            n_posts,
            seed,
            base_activity: 0.1,
            activity_overrides: BTreeMap::new(),
            follow_edges: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_posts == 0 {
            return Err(Error::usage("n_users and n_posts must be positive"));
        }
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.base_activity) || !self.activity_overrides.values().all(|&p| prob_ok(p)) {
            return Err(Error::usage("activity probabilities must lie in [0, 1]"));
        }
        for &u in self.activity_overrides.keys() {
            if u as usize >= self.n_users {
                return Err(Error::usage(format!(
                    "activity override for unknown user {u}"
                )));
            }
        }
        for e in &self.follow_edges {
            if !prob_ok(e.probability) {
                return Err(Error::usage("edge probability must lie in [0, 1]"));
            }
            if e.influencers.is_empty() {
                return Err(Error::usage("follow edge needs at least one influencer"));
            }
            if e.influencers.contains(&e.follower) {
                return Err(Error::usage("follower cannot be one of its influencers"));
            }
            if e.influencers
                .iter()
                .chain([&e.follower])
                .any(|&u| u as usize >= self.n_users)
            {
                return Err(Error::usage("follow edge references an unknown user"));
            }
        }
        Ok(())
    }

    fn activity(&self, user: u32) -> f64 {
        self.activity_overrides
            .get(&user)
            .copied()
            .unwrap_or(self.base_activity)
    }
}

/// Generates the posts of one page; user `i` is `UserId(i)`, labelled `u{i}`.
pub fn generate(cfg: &PlantConfig) -> Result<Vec<Post>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut posts = Vec::with_capacity(cfg.n_posts);
    for p in 0..cfg.n_posts {
        let post_id = format!("{}-p{p}", cfg.page_id);
        let created = EPOCH_START + p as Timestamp * POST_SPACING;
        let author = UserId(rng.random_range(0..cfg.n_users as u32));
        let mut first: BTreeMap<u32, Timestamp> = BTreeMap::new();
        for u in 0..cfg.n_users as u32 {
            let offset = rng.random_range(0..COMMENT_WINDOW);
            if rng.random_bool(cfg.activity(u)) {
                first.insert(u, created + offset);
            }
        }
        for edge in &cfg.follow_edges {
            let fire = rng.random_bool(edge.probability);
            let latest = edge
                .influencers
                .iter()
                .map(|u| first.get(u).copied())
                .collect::<Option<Vec<_>>>()
                .map(|ts| ts.into_iter().max().unwrap_or(created));
            if let (true, Some(latest)) = (fire, latest) {
                first.entry(edge.follower).or_insert(latest + 1);
            }
        }
        let mut comments: Vec<CommentEvent> = first
            .into_iter()
            .map(|(u, t)| CommentEvent {
                comment_id: String::new(),
                post_id: post_id.clone(),
                user: UserId(u),
                created: t,
            })
            .collect();
        comments.sort_by_key(|c| (c.created, c.user));
        for (i, c) in comments.iter_mut().enumerate() {
            c.comment_id = format!("{post_id}-c{i}");
        }
        posts.push(Post {
            post_id,
            author,
            created,
            comments,
        });
    }
    Ok(posts)
}

pub fn generate_dataset(cfg: &PlantConfig) -> Result<PageDataset> {
    PageDataset::new(
        cfg.page_id.clone(),
        UserTable::numbered(cfg.n_users),
        generate(cfg)?,
    )
}

/// A batch of pages with randomly placed two-influencer follow edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub page_prefix: String,
    pub n_pages: usize,
    pub n_users: usize,
    pub n_posts: usize,
    pub seed: u64,
    pub base_activity: f64,
    pub edges_per_page: usize,
    pub edge_probability: f64,
}

impl CorpusSpec {
    /// One config per page. Page seeds and edge endpoints are drawn from a
    /// generator seeded with `seed`, so the batch is reproducible.
    pub fn page_configs(&self) -> Result<Vec<PlantConfig>> {
        if self.edges_per_page > 0 && self.n_users < 3 {
            return Err(Error::usage("follow edges need at least three users"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let width = self.n_pages.saturating_sub(1).to_string().len();
        let mut out = Vec::with_capacity(self.n_pages);
        for i in 0..self.n_pages {
            let page_id = format!("{}{:0width$}", self.page_prefix, i);
            let mut cfg = PlantConfig::new(page_id, self.n_users, self.n_posts, rng.random());
            cfg.base_activity = self.base_activity;
            for _ in 0..self.edges_per_page {
                let picks = rand::seq::index::sample(&mut rng, self.n_users, 3);
                let [a, b, c] = [0, 1, 2].map(|k| picks.index(k) as u32);
                cfg.follow_edges.push(FollowEdge {
                    influencers: vec![a.min(b), a.max(b)],
                    follower: c,
                    probability: self.edge_probability,
                });
            }
            cfg.validate()?;
            out.push(cfg);
        }
        Ok(out)
    }
}

/// Writes posts in the line-delimited event format accepted by
/// [`crate::ingest::parse_events`].
pub fn write_events<W: Write>(
    out: &mut W,
    page_id: &str,
    users: &UserTable,
    posts: &[Post],
) -> std::io::Result<()> {
    for post in posts {
        let rec = serde_json::json!({
            "type": "post",
            "post_id": post.post_id,
            "page_id": page_id,
            "author": users.label(post.author),
            "created": format_timestamp(post.created),
        });
        writeln!(out, "{rec}")?;
        for c in &post.comments {
            let rec = serde_json::json!({
                "type": "comment",
                "comment_id": c.comment_id,
                "post_id": c.post_id,
                "user_id": users.label(c.user),
                "created": format_timestamp(c.created),
            });
            writeln!(out, "{rec}")?;
        }
    }
    Ok(())
}
