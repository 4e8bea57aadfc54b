//! Wall-clock timing of the registered ranking methods.
//!
//! Each method runs `reps` times in sequence on one page and the median is
//! kept. Graph-based methods include graph construction; the rule-based
//! method covers ranking from already-mined rules unless mining is
//! explicitly included.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eclat::{mine, MineConfig};
use crate::error::{Error, Result};
use crate::model::PageDataset;
use crate::ranking::{RankInput, RankerRegistry};
use crate::rules::{generate_rules, Rule};
use crate::stats::{median, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub page_id: String,
    pub method: String,
    pub wall_time_s: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub reps: usize,
    /// When set, the `arl` timing also covers mining and rule generation
    /// with this configuration.
    pub include_mining: Option<MineConfig>,
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Times every method of `registry` on one page.
pub fn time_rankings(
    dataset: &PageDataset,
    rules: &[Rule],
    registry: &RankerRegistry,
    opts: &BenchOptions,
) -> Result<Vec<TimingRecord>> {
    if opts.reps == 0 {
        return Err(Error::usage("benchmark needs at least one repetition"));
    }
    let mut out = Vec::new();
    for ranker in registry.iter() {
        let mut times = Vec::with_capacity(opts.reps);
        for _ in 0..opts.reps {
            let started = Instant::now();
            match (&opts.include_mining, ranker.name()) {
                (Some(cfg), "arl") => {
                    let itemsets = mine(&dataset.transactions, cfg)?;
                    let mined = generate_rules(&itemsets, dataset.n_transactions().max(1))?;
                    std::hint::black_box(ranker.rank(RankInput {
                        transactions: &dataset.transactions,
                        rules: &mined,
                    })?);
                }
                _ => {
                    std::hint::black_box(ranker.rank(RankInput {
                        transactions: &dataset.transactions,
                        rules,
                    })?);
                }
            }
            times.push(started.elapsed().as_secs_f64());
        }
        out.push(TimingRecord {
            page_id: dataset.page_id.clone(),
            method: ranker.name().to_string(),
            wall_time_s: median(&times).unwrap_or(0.0),
            reps: opts.reps,
        });
    }
    Ok(out)
}

/// Per-method distribution of page timings.
pub fn aggregate(records: &[TimingRecord]) -> BTreeMap<String, Summary> {
    let mut by_method: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_method
            .entry(r.method.clone())
            .or_default()
            .push(r.wall_time_s);
    }
    by_method
        .into_iter()
        .filter_map(|(m, v)| Summary::of(&v).map(|s| (m, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::RankSettings;
    use crate::synth::{generate_dataset, PlantConfig};

    #[test]
    fn one_rep_three_records() {
        let ds = generate_dataset(&PlantConfig::new("pg", 20, 10, 5)).unwrap();
        let reg = RankerRegistry::standard(&RankSettings::default());
        let recs = time_rankings(
            &ds,
            &[],
            &reg,
            &BenchOptions {
                reps: 1,
                include_mining: None,
            },
        )
        .unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.wall_time_s >= 0.0 && r.reps == 1));

        let with_mining = BenchOptions {
            reps: 1,
            include_mining: Some(MineConfig::with_min_frequency(2)),
        };
        assert_eq!(
            time_rankings(&ds, &[], &reg, &with_mining).unwrap().len(),
            3
        );
    }

    #[test]
    fn zero_reps_rejected() {
        let ds = generate_dataset(&PlantConfig::new("pg", 5, 3, 5)).unwrap();
        let reg = RankerRegistry::standard(&RankSettings::default());
        assert!(time_rankings(&ds, &[], &reg, &BenchOptions::default()).is_err());
    }

    #[test]
    fn aggregate_by_method() {
        let rec = |m: &str, t: f64| TimingRecord {
            page_id: "p".into(),
            method: m.into(),
            wall_time_s: t,
            reps: 1,
        };
        let agg = aggregate(&[rec("arl", 1.0), rec("arl", 3.0), rec("degree", 2.0)]);
        assert_eq!(agg["arl"].mean, 2.0);
        assert!((agg["arl"].std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(agg["degree"].std, 0.0);
    }
}
