//! Association-rule mining over co-commenting activity on social media
//! pages.
//!
//! Posts are transactions and commenting users are items. The crate mines
//! frequent user sets with Eclat, derives rules with support, confidence,
//! lift and conviction, tests them as participation predictors on a
//! temporal split, and ranks users by how often they drive high-confidence
//! rules. Rankings are compared against degree and PageRank centrality on
//! the co-comment graph with rank-based statistical tests.

pub mod bench;
pub mod eclat;
pub mod error;
pub mod graph;
pub mod influence;
pub mod ingest;
pub mod model;
pub mod output;
pub mod pipeline;
pub mod predict;
pub mod ranking;
pub mod rules;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use model::{PageDataset, Post, Transaction, UserId, UserTable};
pub use ranking::{RankedUserList, Ranker, RankerRegistry};
pub use rules::Rule;
