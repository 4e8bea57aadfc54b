//! Line-delimited event ingestion, activity filtering and page statistics.
//!
//! Each input line is one JSON object tagged by `type`:
//!
//! ```text
//! {"type":"post","post_id":"p1","page_id":"pg","author":"u3","created":"2016-01-01T00:00:00Z"}
//! {"type":"comment","comment_id":"c1","post_id":"p1","user_id":"u7","created":"2016-01-01T00:05:00Z"}
//! {"type":"like","post_id":"p1","user_id":"u9"}
//! ```
//!
//! Likes are counted and dropped; only comments make a user active.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CommentEvent, PageDataset, Post, Timestamp, UserId, UserTable};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_comments_per_post: usize,
    pub min_comments_per_user: usize,
    pub min_viable_posts: usize,
    pub min_viable_users: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_comments_per_post: 20,
            min_comments_per_user: 5,
            min_viable_posts: 10,
            min_viable_users: 10,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_comments_per_post == 0
            || self.min_comments_per_user == 0
            || self.min_viable_posts == 0
            || self.min_viable_users == 0
        {
            return Err(Error::usage("filter thresholds must be strictly positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Post {
        post_id: String,
        page_id: String,
        author: String,
        created: String,
    },
    Comment {
        comment_id: String,
        post_id: String,
        user_id: String,
        created: String,
    },
    Like {
        #[allow(dead_code)]
        post_id: String,
        #[allow(dead_code)]
        user_id: String,
    },
    #[serde(other)]
    Unknown,
}

/// Posts of one page with their interned users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PagePosts {
    pub page_id: String,
    pub users: UserTable,
    pub posts: Vec<Post>,
}

impl PagePosts {
    pub fn into_dataset(self) -> Result<PageDataset> {
        PageDataset::new(self.page_id, self.users, self.posts)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedEvents {
    /// Pages in ascending `page_id` order.
    pub pages: Vec<PagePosts>,
    /// Orphan comments and records of unknown type.
    pub ignored: usize,
    pub likes: usize,
}

impl ParsedEvents {
    pub fn n_posts(&self) -> usize {
        self.pages.iter().map(|p| p.posts.len()).sum()
    }
}

pub fn parse_timestamp(raw: &str) -> Option<Timestamp> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

pub fn format_timestamp(ts: Timestamp) -> String {
    DateTime::from_timestamp(ts, 0)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| ts.to_string())
}

struct RawPost {
    page_id: String,
    author: String,
    created: Timestamp,
    line: usize,
}

struct RawComment {
    comment_id: String,
    post_id: String,
    user: String,
    created: Timestamp,
}

/// Parses a record stream into posts grouped by page.
pub fn parse_events<R: BufRead>(reader: R) -> Result<ParsedEvents> {
    let mut posts: BTreeMap<String, RawPost> = BTreeMap::new();
    let mut comments: Vec<RawComment> = Vec::new();
    let mut ignored = 0;
    let mut likes = 0;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let ts = |raw: &str| {
            parse_timestamp(raw).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("unparseable timestamp `{raw}`"),
            })
        };
        match record {
            Record::Post {
                post_id,
                page_id,
                author,
                created,
            } => {
                let created = ts(&created)?;
                if let Some(prev) = posts.get(&post_id) {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("post `{post_id}` already defined on line {}", prev.line),
                    });
                }
                posts.insert(
                    post_id,
                    RawPost {
                        page_id,
                        author,
                        created,
                        line: lineno,
                    },
                );
            }
            Record::Comment {
                comment_id,
                post_id,
                user_id,
                created,
            } => comments.push(RawComment {
                comment_id,
                post_id,
                user: user_id,
                created: ts(&created)?,
            }),
            Record::Like { .. } => likes += 1,
            Record::Unknown => ignored += 1,
        }
    }

    // group comments by post, dropping orphans
    let mut by_post: HashMap<&str, Vec<&RawComment>> = HashMap::new();
    for c in &comments {
        if posts.contains_key(&c.post_id) {
            by_post.entry(c.post_id.as_str()).or_default().push(c);
        } else {
            ignored += 1;
        }
    }

    let mut page_posts: BTreeMap<&str, Vec<(&String, &RawPost)>> = BTreeMap::new();
    for (id, p) in &posts {
        page_posts
            .entry(p.page_id.as_str())
            .or_default()
            .push((id, p));
    }

    let mut pages = Vec::with_capacity(page_posts.len());
    for (page_id, members) in page_posts {
        let mut labels = BTreeSet::new();
        for (id, p) in &members {
            labels.insert(p.author.as_str());
            for c in by_post.get(id.as_str()).into_iter().flatten() {
                labels.insert(c.user.as_str());
            }
        }
        let users = UserTable::from_labels(labels);
        let intern = |label: &str| users.id_of(label).expect("label interned above");
        let mut built = Vec::with_capacity(members.len());
        for (id, p) in members {
            let comments = by_post
                .get(id.as_str())
                .into_iter()
                .flatten()
                .map(|c| CommentEvent {
                    comment_id: c.comment_id.clone(),
                    post_id: id.clone(),
                    user: intern(&c.user),
                    created: c.created,
                })
                .collect();
            let mut post = Post {
                post_id: id.clone(),
                author: intern(&p.author),
                created: p.created,
                comments,
            };
            post.sort_comments();
            built.push(post);
        }
        built.sort_by(|a, b| (a.created, &a.post_id).cmp(&(b.created, &b.post_id)));
        pages.push(PagePosts {
            page_id: page_id.to_string(),
            users,
            posts: built,
        });
    }

    Ok(ParsedEvents {
        pages,
        ignored,
        likes,
    })
}

fn user_comment_counts(posts: &[Post]) -> HashMap<UserId, usize> {
    let mut counts = HashMap::new();
    for c in posts.iter().flat_map(|p| &p.comments) {
        *counts.entry(c.user).or_insert(0) += 1;
    }
    counts
}

/// Drops posts with fewer than `min_comments_per_post` comments and the
/// comments of users with fewer than `min_comments_per_user` comments on
/// the page. Both counts are taken before any removal, in a single pass.
pub fn filter_active(posts: &[Post], cfg: &FilterConfig) -> Vec<Post> {
    let counts = user_comment_counts(posts);
    posts
        .iter()
        .filter(|p| p.comments.len() >= cfg.min_comments_per_post)
        .map(|p| Post {
            comments: p
                .comments
                .iter()
                .filter(|c| counts[&c.user] >= cfg.min_comments_per_user)
                .cloned()
                .collect(),
            ..p.clone()
        })
        .collect()
}

/// Page screen on raw posts: enough posts with more than
/// `min_comments_per_post` comments and enough users with more than
/// `min_comments_per_user` comments. Both comparisons are strict.
pub fn check_viability(posts: &[Post], cfg: &FilterConfig) -> bool {
    let busy_posts = posts
        .iter()
        .filter(|p| p.comments.len() > cfg.min_comments_per_post)
        .count();
    let busy_users = user_comment_counts(posts)
        .values()
        .filter(|&&n| n > cfg.min_comments_per_user)
        .count();
    busy_posts >= cfg.min_viable_posts && busy_users >= cfg.min_viable_users
}

/// Per-page counts plus distributions over posts and users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageStats {
    pub page_id: String,
    /// Distinct commenting users.
    pub n_users: usize,
    pub n_posts: usize,
    pub n_comments: usize,
    pub users_per_post: Summary,
    pub comments_per_post: Summary,
    pub comments_per_user: Summary,
}

impl PageStats {
    pub fn quantities(&self) -> [(&'static str, &Summary); 3] {
        [
            ("users_per_post", &self.users_per_post),
            ("comments_per_post", &self.comments_per_post),
            ("comments_per_user", &self.comments_per_user),
        ]
    }
}

pub fn describe(dataset: &PageDataset) -> PageStats {
    let users_per_post: Vec<f64> = dataset
        .transactions
        .iter()
        .map(|t| t.len() as f64)
        .collect();
    let comments_per_post: Vec<f64> = dataset
        .posts
        .iter()
        .map(|p| p.comments.len() as f64)
        .collect();
    let counts = user_comment_counts(&dataset.posts);
    let mut per_user: Vec<(UserId, usize)> = counts.into_iter().collect();
    per_user.sort();
    let comments_per_user: Vec<f64> = per_user.iter().map(|&(_, n)| n as f64).collect();
    PageStats {
        page_id: dataset.page_id.clone(),
        n_users: per_user.len(),
        n_posts: dataset.posts.len(),
        n_comments: dataset.n_comments(),
        users_per_post: Summary::of(&users_per_post).unwrap_or_default(),
        comments_per_post: Summary::of(&comments_per_post).unwrap_or_default(),
        comments_per_user: Summary::of(&comments_per_user).unwrap_or_default(),
    }
}

/// Corpus table: the distribution of users, posts and comments across pages.
pub fn describe_corpus(pages: &[PageStats]) -> Vec<(&'static str, Summary)> {
    let col = |f: fn(&PageStats) -> usize| -> Summary {
        let v: Vec<f64> = pages.iter().map(|p| f(p) as f64).collect();
        Summary::of(&v).unwrap_or_default()
    };
    vec![
        ("users", col(|p| p.n_users)),
        ("posts", col(|p| p.n_posts)),
        ("comments", col(|p| p.n_comments)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post_line(post: &str, page: &str) -> String {
        format!(
            r#"{{"type":"post","post_id":"{post}","page_id":"{page}","author":"a","created":"2016-01-01T00:00:00Z"}}"#
        )
    }

    fn comment_line(id: &str, post: &str, user: &str, minute: u32) -> String {
        format!(
            r#"{{"type":"comment","comment_id":"{id}","post_id":"{post}","user_id":"{user}","created":"2016-01-01T00:{minute:02}:00Z"}}"#
        )
    }

    fn parse(lines: &[String]) -> Result<ParsedEvents> {
        parse_events(lines.join("\n").as_bytes())
    }

    #[test]
    fn assembles_post_with_comments() {
        let ev = parse(&[
            post_line("p1", "pg"),
            comment_line("c1", "p1", "u1", 3),
            comment_line("c2", "p1", "u2", 1),
            comment_line("c3", "p1", "u1", 2),
        ])
        .unwrap();
        assert_eq!(ev.pages.len(), 1);
        let p = &ev.pages[0].posts[0];
        assert_eq!(p.comments.len(), 3);
        let ids: Vec<&str> = p.comments.iter().map(|c| c.comment_id.as_str()).collect();
        assert_eq!(ids, ["c2", "c3", "c1"]);
        assert_eq!(ev.ignored, 0);
    }

    #[test]
    fn orphan_comment_ignored() {
        let ev = parse(&[comment_line("c1", "nope", "u1", 0)]).unwrap();
        assert_eq!(ev.n_posts(), 0);
        assert_eq!(ev.ignored, 1);
    }

    #[test]
    fn likes_discarded() {
        let ev = parse(&[
            post_line("p1", "pg"),
            post_line("p2", "pg"),
            r#"{"type":"like","post_id":"p1","user_id":"u5"}"#.to_string(),
        ])
        .unwrap();
        assert_eq!(ev.n_posts(), 2);
        assert_eq!(ev.likes, 1);
        assert!(ev.pages[0].posts.iter().all(|p| p.comments.is_empty()));
    }

    #[test]
    fn unknown_type_counted() {
        let ev = parse(&[r#"{"type":"share","post_id":"p1"}"#.to_string()]).unwrap();
        assert_eq!(ev.ignored, 1);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = parse(&[post_line("p1", "pg"), "{not json".to_string()]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse(&[
            r#"{"type":"post","post_id":"p","page_id":"g","author":"a","created":"yesterday"}"#
                .into(),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn pages_split() {
        let ev = parse(&[post_line("p1", "b"), post_line("p2", "a")]).unwrap();
        let ids: Vec<&str> = ev.pages.iter().map(|p| p.page_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    fn synthetic_post(id: usize, users: &[u32]) -> Post {
        Post {
            post_id: format!("p{id}"),
            author: UserId(0),
            created: id as i64,
            comments: users
                .iter()
                .enumerate()
                .map(|(i, &u)| CommentEvent {
                    comment_id: format!("c{id}_{i}"),
                    post_id: format!("p{id}"),
                    user: UserId(u),
                    created: i as i64,
                })
                .collect(),
        }
    }

    #[test]
    fn post_below_threshold_removed() {
        let users: Vec<u32> = (0..19).collect();
        let posts: Vec<Post> = (0..5).map(|i| synthetic_post(i, &users)).collect();
        assert!(filter_active(&posts, &FilterConfig::default()).is_empty());
    }

    #[test]
    fn rare_user_removed_everywhere() {
        // users 0..20 comment on all 5 posts; user 99 comments 4 times in total
        let mut posts: Vec<Post> = (0..5)
            .map(|i| synthetic_post(i, &(0..20).collect::<Vec<_>>()))
            .collect();
        for p in posts.iter_mut().take(4) {
            p.comments.push(CommentEvent {
                comment_id: "x".into(),
                post_id: p.post_id.clone(),
                user: UserId(99),
                created: 100,
            });
        }
        let out = filter_active(&posts, &FilterConfig::default());
        assert_eq!(out.len(), 5);
        assert!(out
            .iter()
            .flat_map(|p| &p.comments)
            .all(|c| c.user != UserId(99)));
    }

    #[test]
    fn all_pass_unchanged() {
        let users: Vec<u32> = (0..25).collect();
        let posts: Vec<Post> = (0..5).map(|i| synthetic_post(i, &users)).collect();
        assert_eq!(filter_active(&posts, &FilterConfig::default()), posts);
    }

    #[test]
    fn viability() {
        let cfg = FilterConfig::default();
        let thirty: Vec<u32> = (0..30).collect();
        let nine: Vec<Post> = (0..9).map(|i| synthetic_post(i, &thirty)).collect();
        assert!(!check_viability(&nine, &cfg));

        // 12 users, each commenting ~2 times per post across 10 posts of 25 comments
        let pattern: Vec<u32> = (0..25).map(|i| i % 12).collect();
        let ten: Vec<Post> = (0..10).map(|i| synthetic_post(i, &pattern)).collect();
        assert!(check_viability(&ten, &cfg));

        assert!(!check_viability(&[], &cfg));
    }

    #[test]
    fn describe_counts() {
        let a: Vec<u32> = (0..20).map(|i| i % 3).collect();
        let b: Vec<u32> = (0..20).map(|i| i % 2).collect();
        let ds = PageDataset::new(
            "pg",
            UserTable::numbered(3),
            vec![synthetic_post(0, &a), synthetic_post(1, &b)],
        )
        .unwrap();
        let s = describe(&ds);
        assert_eq!((s.n_users, s.n_posts, s.n_comments), (3, 2, 40));
        assert_eq!(s.users_per_post.min, 2.0);
        assert_eq!(s.users_per_post.max, 3.0);
    }

    #[test]
    fn describe_single_post() {
        let ds = PageDataset::new(
            "pg",
            UserTable::numbered(3),
            vec![synthetic_post(0, &[0, 1, 2, 1])],
        )
        .unwrap();
        let s = describe(&ds).comments_per_post;
        assert_eq!((s.min, s.median, s.max), (4.0, 4.0, 4.0));
    }

    #[test]
    fn timestamps_parse() {
        assert_eq!(parse_timestamp("1970-01-01T00:01:00Z"), Some(60));
        assert_eq!(parse_timestamp("1970-01-01T01:00:00+01:00"), Some(0));
        assert_eq!(parse_timestamp("1970-01-01 00:00:05"), Some(5));
        assert_eq!(format_timestamp(3600), "1970-01-01T01:00:00Z");
    }
}
