//! End-to-end page analysis and report emission.
//!
//! Pages are independent units: each one is filtered, mined, turned into
//! rules, evaluated on a temporal split and ranked by every registered
//! method. Pages run in parallel on a dedicated pool; results are collected
//! in page order so output bytes do not depend on the worker count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{aggregate, TimingRecord};
use crate::eclat::{auto_threshold, mine, FrequentItemset, MineConfig, DEFAULT_AUTO_THRESHOLD_CAP};
use crate::error::{Error, Result};
use crate::graph::{post_creation_share, topk_intersection, PageRankParams, DEFAULT_PERCENTS};
use crate::ingest::{
    check_viability, describe, describe_corpus, filter_active, parse_events, FilterConfig,
    PagePosts, PageStats,
};
use crate::model::{natural_cmp, PageDataset, UserTable};
use crate::output::{opt_metric, sanitize_component, write_file, write_json, CsvTable};
use crate::predict::{evaluate, temporal_split, Evaluation, DEFAULT_TRAIN_FRACTION};
use crate::ranking::{RankInput, RankOutcome, RankSettings, RankedUserList, RankerRegistry};
use crate::rules::{
    filter_rules, format_metric, generate_rules, summarize_rules, Rule, RuleFilter, RuleSummary,
    HIGH_CONFIDENCE,
};
use crate::stats::{
    friedman, kruskal_wallis, nemenyi_cd, nemenyi_pairs, wilcoxon_rank_sum, Alpha, RankOrder,
    Summary, TestResult,
};

/// Every knob of a run. Defaults follow the documented analysis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub filter: FilterConfig,
    /// Apply the per-post / per-user activity filters.
    pub apply_filters: bool,
    /// Skip pages that fail the viability screen.
    pub require_viable: bool,
    pub mine: MineConfig,
    /// Replace `mine.min_frequency` with the auto-threshold search.
    pub auto_threshold: bool,
    pub auto_threshold_cap: Duration,
    pub min_confidence: f64,
    pub strict_confidence: bool,
    pub train_fraction: f64,
    pub percents: Vec<f64>,
    pub pagerank: PageRankParams,
    /// Top fractions of the degree ranking used for the post-creation share.
    pub share_fractions: Vec<f64>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            filter: FilterConfig::default(),
            apply_filters: true,
            require_viable: true,
            mine: MineConfig::default(),
            auto_threshold: false,
            auto_threshold_cap: DEFAULT_AUTO_THRESHOLD_CAP,
            min_confidence: HIGH_CONFIDENCE,
            strict_confidence: false,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            percents: DEFAULT_PERCENTS.to_vec(),
            pagerank: PageRankParams::default(),
            share_fractions: vec![0.1, 0.2],
            seed: 0,
            workers: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::usage(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::usage(format!(
            "invalid boolean `{value}` for `{key}`"
        ))),
    }
}

/// Parses `1,5,10` as percentages (values above 1 are divided by 100).
pub fn parse_percents(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: f64 = parse_value("percents", s.trim_end_matches('%'))?;
            Ok(if v > 1.0 { v / 100.0 } else { v })
        })
        .collect()
}

impl RunConfig {
    pub fn rule_filter(&self) -> RuleFilter {
        RuleFilter {
            strict: self.strict_confidence,
            ..RuleFilter::min_confidence(self.min_confidence)
        }
    }

    pub fn reduced_filter(&self) -> RuleFilter {
        RuleFilter {
            max_consequent: Some(1),
            ..self.rule_filter()
        }
    }

    pub fn rank_settings(&self) -> RankSettings {
        RankSettings {
            arl_filter: self.rule_filter(),
            pagerank: self.pagerank,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "min_comments_per_post" => self.filter.min_comments_per_post = parse_value(key, v)?,
            "min_comments_per_user" => self.filter.min_comments_per_user = parse_value(key, v)?,
            "min_viable_posts" => self.filter.min_viable_posts = parse_value(key, v)?,
            "min_viable_users" => self.filter.min_viable_users = parse_value(key, v)?,
            "apply_filters" => self.apply_filters = parse_bool(key, v)?,
            "require_viable" => self.require_viable = parse_bool(key, v)?,
            "min_freq" | "min_frequency" => self.mine.min_frequency = parse_value(key, v)?,
            "max_length" => self.mine.max_length = Some(parse_value(key, v)?),
            "max_itemsets" => self.mine.max_itemsets = Some(parse_value(key, v)?),
            "time_budget_s" => {
                self.mine.time_budget = Some(Duration::from_secs_f64(parse_value(key, v)?))
            }
            "auto_threshold" => self.auto_threshold = parse_bool(key, v)?,
            "auto_threshold_cap_s" => {
                self.auto_threshold_cap = Duration::from_secs_f64(parse_value(key, v)?)
            }
            "min_confidence" => self.min_confidence = parse_value(key, v)?,
            "strict_confidence" => self.strict_confidence = parse_bool(key, v)?,
            "split" | "train_fraction" => self.train_fraction = parse_value(key, v)?,
            "percents" => self.percents = parse_percents(v)?,
            "damping" => self.pagerank.damping = parse_value(key, v)?,
            "tolerance" => self.pagerank.tolerance = parse_value(key, v)?,
            "max_iter" => self.pagerank.max_iter = parse_value(key, v)?,
            "share_fractions" => self.share_fractions = parse_percents(v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "workers" => self.workers = parse_value(key, v)?,
            other => return Err(Error::usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a key-value text: one `key = value` per line, `#` comments.
    /// Keys not handled here are returned for the caller.
    pub fn apply_text(
        &mut self,
        text: &str,
        passthrough: &[&str],
    ) -> Result<BTreeMap<String, String>> {
        let mut rest = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::usage(format!("config line {}: expected `key = value`", i + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if passthrough.contains(&k) {
                rest.insert(k.to_string(), v.to_string());
            } else {
                self.set(k, v)?;
            }
        }
        Ok(rest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.apply_filters || self.require_viable {
            self.filter.validate()?;
        }
        if self.mine.min_frequency == 0 {
            return Err(Error::usage("min_freq must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::usage("min_confidence must lie in [0, 1]"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::usage("split must lie strictly between 0 and 1"));
        }
        if self
            .percents
            .iter()
            .chain(&self.share_fractions)
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::usage("percentages must lie in (0, 100]"));
        }
        if !(self.pagerank.damping > 0.0 && self.pagerank.damping < 1.0) {
            return Err(Error::usage("damping must lie strictly between 0 and 1"));
        }
        if self.workers == 0 {
            return Err(Error::usage("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Which per-page analyses to compute; dependencies are implied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stages {
    pub itemsets: bool,
    pub rules: bool,
    pub predict: bool,
    pub rank: bool,
    pub compare: bool,
}

impl Stages {
    pub fn all() -> Self {
        Stages {
            itemsets: true,
            rules: true,
            predict: true,
            rank: true,
            compare: true,
        }
    }

    fn needs_rules(&self) -> bool {
        self.rules || self.rank || self.compare
    }

    fn needs_itemsets(&self) -> bool {
        self.itemsets || self.needs_rules()
    }

    fn needs_rank(&self) -> bool {
        self.rank || self.compare
    }
}

/// A page as loaded, before and after filtering.
#[derive(Debug, Clone)]
pub struct LoadedPage {
    pub raw_stats: PageStats,
    pub viable: bool,
    pub dataset: PageDataset,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub files: usize,
    pub pages: usize,
    pub ignored_records: usize,
    pub likes: usize,
}

/// Reads event files and prepares every page found in them.
pub fn load_pages(paths: &[PathBuf], cfg: &RunConfig) -> Result<(Vec<LoadedPage>, IngestSummary)> {
    let mut summary = IngestSummary {
        files: paths.len(),
        ..IngestSummary::default()
    };
    let mut all: Vec<PagePosts> = Vec::new();
    for path in paths {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parsed = parse_events(BufReader::new(file)).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        summary.ignored_records += parsed.ignored;
        summary.likes += parsed.likes;
        for page in parsed.pages {
            if all.iter().any(|p| p.page_id == page.page_id) {
                return Err(Error::usage(format!(
                    "page `{}` appears in more than one input",
                    page.page_id
                )));
            }
            all.push(page);
        }
    }
    all.sort_by(|a, b| natural_cmp(&a.page_id, &b.page_id));
    summary.pages = all.len();
    let pages = all
        .into_iter()
        .map(|p| prepare_page(p, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok((pages, summary))
}

pub fn prepare_page(page: PagePosts, cfg: &RunConfig) -> Result<LoadedPage> {
    let viable = check_viability(&page.posts, &cfg.filter);
    let raw = PageDataset::new(page.page_id.clone(), page.users.clone(), page.posts.clone())?;
    let raw_stats = describe(&raw);
    let dataset = if cfg.apply_filters {
        PageDataset::new(
            page.page_id,
            page.users,
            filter_active(&page.posts, &cfg.filter),
        )?
    } else {
        raw
    };
    Ok(LoadedPage {
        raw_stats,
        viable,
        dataset,
    })
}

/// Evaluation of the complete single-consequent rule set and of the
/// reduced high-confidence set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub n_train: usize,
    pub n_test: usize,
    pub n_rules_total: usize,
    pub min_frequency: u32,
    pub all: Evaluation,
    pub reduced: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub percent: f64,
    pub k: usize,
    pub degree_arl: Option<f64>,
    pub pagerank_arl: Option<f64>,
    pub pagerank_degree: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PageReport {
    pub page_id: String,
    pub users: UserTable,
    pub viable: bool,
    pub raw_stats: PageStats,
    pub stats: PageStats,
    pub min_frequency: u32,
    pub itemsets: Option<Vec<FrequentItemset>>,
    pub rules: Option<Vec<Rule>>,
    pub rule_summary: Option<RuleSummary>,
    pub high_confidence_summary: Option<RuleSummary>,
    pub prediction: Option<PredictionReport>,
    pub rankings: Option<BTreeMap<String, RankOutcome>>,
    pub similarity: Option<Vec<SimilarityRow>>,
    pub post_share: Option<Vec<(f64, Option<f64>)>>,
}

fn mining_config(dataset: &PageDataset, cfg: &RunConfig) -> Result<MineConfig> {
    let mut mc = cfg.mine.clone();
    if cfg.auto_threshold && !dataset.transactions.is_empty() {
        mc.min_frequency = auto_threshold(&dataset.transactions, cfg.auto_threshold_cap)?;
    }
    Ok(mc)
}

/// Runs the requested analyses on one page.
pub fn analyze_page(page: &LoadedPage, cfg: &RunConfig, stages: Stages) -> Result<PageReport> {
    let ds = &page.dataset;
    let mc = mining_config(ds, cfg)?;
    let mut report = PageReport {
        page_id: ds.page_id.clone(),
        users: ds.users.clone(),
        viable: page.viable,
        raw_stats: page.raw_stats.clone(),
        stats: describe(ds),
        min_frequency: mc.min_frequency,
        itemsets: None,
        rules: None,
        rule_summary: None,
        high_confidence_summary: None,
        prediction: None,
        rankings: None,
        similarity: None,
        post_share: None,
    };

    if stages.needs_itemsets() {
        let itemsets = mine(&ds.transactions, &mc)?;
        if stages.needs_rules() {
            let rules = generate_rules(&itemsets, ds.n_transactions().max(1))?;
            report.rule_summary = Some(summarize_rules(&rules));
            report.high_confidence_summary =
                Some(summarize_rules(&filter_rules(&rules, &cfg.rule_filter())));
            report.rules = Some(rules);
        }
        report.itemsets = Some(itemsets);
    }

    if stages.predict {
        let split = temporal_split(ds, cfg.train_fraction)?;
        let train_sets = mine(&split.train, &mc)?;
        let train_rules = generate_rules(&train_sets, split.train.len())?;
        let all = filter_rules(&train_rules, &RuleFilter::single_consequent());
        let reduced = filter_rules(&train_rules, &cfg.reduced_filter());
        report.prediction = Some(PredictionReport {
            n_train: split.train.len(),
            n_test: split.test.len(),
            n_rules_total: train_rules.len(),
            min_frequency: mc.min_frequency,
            all: evaluate(&all, &split.test)?,
            reduced: evaluate(&reduced, &split.test)?,
        });
    }

    if stages.needs_rank() {
        let registry = RankerRegistry::standard(&cfg.rank_settings());
        let rules = report.rules.as_deref().unwrap_or(&[]);
        let input = RankInput {
            transactions: &ds.transactions,
            rules,
        };
        let mut rankings = BTreeMap::new();
        for ranker in registry.iter() {
            let outcome = ranker.rank(input)?;
            if let Some(w) = &outcome.warning {
                log::warn!("{}: {w}", ds.page_id);
            }
            rankings.insert(ranker.name().to_string(), outcome);
        }
        let degree = &rankings["degree"].ranking;
        report.post_share = Some(
            cfg.share_fractions
                .iter()
                .map(|&f| (f, post_creation_share(ds, degree, f)))
                .collect(),
        );
        if stages.compare {
            report.similarity = Some(compare_rankings(&rankings, &cfg.percents)?);
        }
        report.rankings = Some(rankings);
    }
    Ok(report)
}

/// Pairwise top-k overlaps, with k derived from the rule-based list length.
pub fn compare_rankings(
    rankings: &BTreeMap<String, RankOutcome>,
    percents: &[f64],
) -> Result<Vec<SimilarityRow>> {
    let get = |name: &str| -> Result<&RankedUserList> {
        rankings
            .get(name)
            .map(|o| &o.ranking)
            .ok_or_else(|| Error::usage(format!("missing `{name}` ranking")))
    };
    let (arl, degree, pagerank) = (get("arl")?, get("degree")?, get("pagerank")?);
    let reference = arl.len();
    let da = topk_intersection(degree, arl, percents, reference)?;
    let pa = topk_intersection(pagerank, arl, percents, reference)?;
    let pd = topk_intersection(pagerank, degree, percents, reference)?;
    Ok(da
        .iter()
        .zip(&pa)
        .zip(&pd)
        .map(|((d, p), q)| SimilarityRow {
            percent: d.percent,
            k: d.k,
            degree_arl: d.similarity,
            pagerank_arl: p.similarity,
            pagerank_degree: q.similarity,
        })
        .collect())
}

/// Analyzes pages on a pool of `cfg.workers` threads, preserving order.
/// Non-viable pages are dropped when `cfg.require_viable` is set.
pub fn analyze_pages(
    pages: &[LoadedPage],
    cfg: &RunConfig,
    stages: Stages,
) -> Result<Vec<PageReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    let selected: Vec<&LoadedPage> = pages
        .iter()
        .filter(|p| {
            let keep = p.viable || !cfg.require_viable;
            if !keep {
                log::info!("skipping non-viable page {}", p.dataset.page_id);
            }
            keep
        })
        .collect();
    pool.install(|| {
        selected
            .par_iter()
            .map(|p| analyze_page(p, cfg, stages))
            .collect()
    })
}

fn page_dir(out: &Path, page_id: &str) -> PathBuf {
    out.join("pages").join(sanitize_component(page_id))
}

fn summary_cells(s: &Summary) -> Vec<String> {
    [s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max]
        .iter()
        .map(|v| format_metric(*v))
        .collect()
}

const SUMMARY_COLUMNS: [&str; 7] = ["mean", "std", "min", "q1", "median", "q3", "max"];

fn with_summary_columns<'a>(lead: &[&'a str]) -> Vec<&'a str> {
    lead.iter().copied().chain(SUMMARY_COLUMNS).collect()
}

pub fn page_stats_table(stats: &[(&str, &PageStats)]) -> CsvTable {
    let mut t = CsvTable::new(&with_summary_columns(&[
        "page_id",
        "stage",
        "quantity",
        "n_users",
        "n_posts",
        "n_comments",
    ]));
    for (stage, s) in stats {
        for (q, summary) in s.quantities() {
            let mut row = vec![
                s.page_id.clone(),
                stage.to_string(),
                q.to_string(),
                s.n_users.to_string(),
                s.n_posts.to_string(),
                s.n_comments.to_string(),
            ];
            row.extend(summary_cells(summary));
            t.row(row);
        }
    }
    t
}

pub fn itemsets_table(users: &UserTable, itemsets: &[FrequentItemset]) -> CsvTable {
    let mut t = CsvTable::new(&["size", "frequency", "users"]);
    for s in itemsets {
        t.row([
            s.len().to_string(),
            s.frequency.to_string(),
            users.join(&s.users, ","),
        ]);
    }
    t
}

pub fn rules_table(users: &UserTable, rules: &[Rule]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "antecedent",
        "consequent",
        "support",
        "confidence",
        "lift",
        "conviction",
    ]);
    for r in rules {
        t.row([
            users.join(&r.antecedent, ";"),
            users.join(&r.consequent, ";"),
            format_metric(r.support),
            format_metric(r.confidence),
            format_metric(r.lift),
            format_metric(r.conviction),
        ]);
    }
    t
}

fn rule_summary_rows(t: &mut CsvTable, page_id: &str, set: &str, s: &RuleSummary) {
    for (metric, m) in [
        ("support", &s.support),
        ("confidence", &s.confidence),
        ("lift", &s.lift),
        ("conviction", &s.conviction),
    ] {
        t.row([
            page_id.to_string(),
            set.to_string(),
            s.n_rules.to_string(),
            metric.to_string(),
            m.count.to_string(),
            format_metric(m.mean),
            format_metric(m.median),
            format_metric(m.std),
            if metric == "conviction" {
                s.infinite_conviction
            } else {
                0
            }
            .to_string(),
        ]);
    }
}

fn rule_summary_table() -> CsvTable {
    CsvTable::new(&[
        "page_id", "rule_set", "n_rules", "metric", "count", "mean", "median", "std", "infinite",
    ])
}

fn evaluation_row(page_id: &str, set: &str, e: &Evaluation) -> Vec<String> {
    vec![
        page_id.to_string(),
        set.to_string(),
        e.n_rules.to_string(),
        e.n_test_posts.to_string(),
        e.counts.tp.to_string(),
        e.counts.fp.to_string(),
        e.counts.tn.to_string(),
        e.counts.fn_.to_string(),
        opt_metric(e.accuracy),
        opt_metric(e.precision),
        opt_metric(e.recall),
        e.predictable_users.to_string(),
        e.used_rules.to_string(),
    ]
}

const EVALUATION_COLUMNS: [&str; 13] = [
    "page_id",
    "rule_set",
    "n_rules",
    "n_test_posts",
    "tp",
    "fp",
    "tn",
    "fn",
    "accuracy",
    "precision",
    "recall",
    "predictable_users",
    "used_rules",
];

pub fn ranking_table(users: &UserTable, ranking: &RankedUserList) -> CsvTable {
    let mut t = CsvTable::new(&["rank", "user_id", "score"]);
    for (i, e) in ranking.entries().iter().enumerate() {
        t.row([
            (i + 1).to_string(),
            users.label(e.user).to_string(),
            format!("{:.12}", e.score),
        ]);
    }
    t
}

/// `0.05` -> `5`, rounded to six decimals so binary noise never shows.
fn percent_label(fraction: f64) -> String {
    format!("{}", (fraction * 1e8).round() / 1e6)
}

const SIMILARITY_COLUMNS: [&str; 6] = [
    "page_id",
    "percent",
    "users",
    "degree_arl",
    "pagerank_arl",
    "pagerank_degree",
];

fn similarity_row(page_id: &str, r: &SimilarityRow) -> Vec<String> {
    vec![
        page_id.to_string(),
        percent_label(r.percent),
        r.k.to_string(),
        opt_metric(r.degree_arl),
        opt_metric(r.pagerank_arl),
        opt_metric(r.pagerank_degree),
    ]
}

/// Edge list `u v` per line, sorted.
pub fn edge_list(users: &UserTable, transactions: &[crate::model::Transaction]) -> String {
    let g = crate::graph::build_graph(transactions);
    let mut s = crate::output::version_line();
    s.push('\n');
    for (a, b) in g.edges() {
        s.push_str(&format!("{} {}\n", users.label(a), users.label(b)));
    }
    s
}

/// Writes every per-page file the report carries under
/// `<out>/pages/<page_id>/`.
pub fn write_page_outputs(
    out: &Path,
    report: &PageReport,
    dataset: Option<&PageDataset>,
) -> Result<()> {
    let dir = page_dir(out, &report.page_id);
    let users = &report.users;
    page_stats_table(&[("raw", &report.raw_stats), ("filtered", &report.stats)])
        .write(&dir.join("page_stats.csv"))?;
    if let Some(itemsets) = &report.itemsets {
        itemsets_table(users, itemsets).write(&dir.join("itemsets.csv"))?;
    }
    if let Some(rules) = &report.rules {
        rules_table(users, rules).write(&dir.join("rules.csv"))?;
        let mut t = rule_summary_table();
        if let Some(s) = &report.rule_summary {
            rule_summary_rows(&mut t, &report.page_id, "all", s);
        }
        if let Some(s) = &report.high_confidence_summary {
            rule_summary_rows(&mut t, &report.page_id, "high_confidence", s);
        }
        t.write(&dir.join("rule_summary.csv"))?;
    }
    if let Some(p) = &report.prediction {
        let mut t = CsvTable::new(&EVALUATION_COLUMNS);
        t.row(evaluation_row(&report.page_id, "all", &p.all));
        t.row(evaluation_row(&report.page_id, "reduced", &p.reduced));
        t.write(&dir.join("evaluation.csv"))?;
    }
    if let Some(rankings) = &report.rankings {
        for (name, outcome) in rankings {
            ranking_table(users, &outcome.ranking)
                .write(&dir.join(format!("ranking_{name}.csv")))?;
        }
        if let Some(ds) = dataset {
            write_file(
                &dir.join("graph_edges.txt"),
                edge_list(users, &ds.transactions).as_bytes(),
            )?;
        }
    }
    if let Some(rows) = &report.similarity {
        let mut t = CsvTable::new(&SIMILARITY_COLUMNS);
        for r in rows {
            t.row(similarity_row(&report.page_id, r));
        }
        t.write(&dir.join("similarity.csv"))?;
    }
    if let Some(share) = &report.post_share {
        let mut t = CsvTable::new(&["page_id", "top_fraction", "post_share"]);
        for (f, s) in share {
            t.row([report.page_id.clone(), format_metric(*f), opt_metric(*s)]);
        }
        t.write(&dir.join("post_share.csv"))?;
    }
    Ok(())
}

pub fn ingest_table(pages: &[LoadedPage]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "page_id",
        "viable",
        "raw_posts",
        "raw_comments",
        "raw_users",
        "posts",
        "comments",
        "users",
    ]);
    for p in pages {
        let f = describe(&p.dataset);
        t.row([
            p.dataset.page_id.clone(),
            p.viable.to_string(),
            p.raw_stats.n_posts.to_string(),
            p.raw_stats.n_comments.to_string(),
            p.raw_stats.n_users.to_string(),
            f.n_posts.to_string(),
            f.n_comments.to_string(),
            f.n_users.to_string(),
        ]);
    }
    t
}

/// Cross-page rank tests on intersection similarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub columns: Vec<String>,
    /// Rows are percentages, cells are means over pages.
    pub percents: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub friedman: Option<TestResult>,
    pub nemenyi_cd_05: Option<f64>,
    pub nemenyi_cd_01: Option<f64>,
    pub nemenyi_pairs: Vec<crate::stats::NemenyiComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub kruskal_wallis: Option<TestResult>,
    pub wilcoxon: BTreeMap<String, TestResult>,
}

const SIMILARITY_NAMES: [&str; 3] = ["degree_arl", "pagerank_arl", "pagerank_degree"];

/// Mean similarity per percentage across pages, with Friedman and Nemenyi
/// over the resulting percentage × intersection matrix.
pub fn similarity_stats(reports: &[PageReport], percents: &[f64]) -> Result<SimilarityStats> {
    let mut sums: Vec<[Vec<f64>; 3]> = vec![Default::default(); percents.len()];
    for r in reports {
        for (i, row) in r.similarity.iter().flatten().enumerate() {
            for (slot, v) in
                sums[i]
                    .iter_mut()
                    .zip([row.degree_arl, row.pagerank_arl, row.pagerank_degree])
            {
                if let Some(v) = v {
                    slot.push(v);
                }
            }
        }
    }
    let mut used_percents = Vec::new();
    let mut means = Vec::new();
    for (p, cols) in percents.iter().zip(&sums) {
        if cols.iter().all(|c| !c.is_empty()) {
            used_percents.push(*p);
            means.push(
                cols.iter()
                    .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                    .collect::<Vec<_>>(),
            );
        }
    }
    let (friedman_result, cd05, cd01, pairs) = if means.len() >= 2 {
        let f = friedman(&means, RankOrder::HigherIsBetter)?;
        let avg: Vec<f64> = serde_json::from_value(f.extras["average_ranks"].clone())
            .map_err(|e| Error::Inconsistent(e.to_string()))?;
        let n = means.len();
        (
            Some(f),
            Some(nemenyi_cd(3, n, Alpha::P05)?),
            Some(nemenyi_cd(3, n, Alpha::P01)?),
            nemenyi_pairs(&avg, n)?,
        )
    } else {
        (None, None, None, Vec::new())
    };
    Ok(SimilarityStats {
        columns: SIMILARITY_NAMES.iter().map(|s| s.to_string()).collect(),
        percents: used_percents,
        means,
        friedman: friedman_result,
        nemenyi_cd_05: cd05,
        nemenyi_cd_01: cd01,
        nemenyi_pairs: pairs,
    })
}

/// Kruskal–Wallis across methods and pairwise Wilcoxon rank-sum tests.
pub fn timing_stats(records: &[TimingRecord]) -> Result<TimingStats> {
    let mut by_method: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_method
            .entry(r.method.clone())
            .or_default()
            .push(r.wall_time_s);
    }
    let groups: Vec<Vec<f64>> = by_method.values().cloned().collect();
    let total: usize = groups.iter().map(Vec::len).sum();
    let kw = if groups.len() >= 2 && total >= 3 {
        Some(kruskal_wallis(&groups)?)
    } else {
        None
    };
    let names: Vec<&String> = by_method.keys().collect();
    let mut wilcoxon = BTreeMap::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let r = wilcoxon_rank_sum(&by_method[names[i]], &by_method[names[j]])?;
            wilcoxon.insert(format!("{}_vs_{}", names[i], names[j]), r);
        }
    }
    Ok(TimingStats {
        kruskal_wallis: kw,
        wilcoxon,
    })
}

pub fn timing_table(records: &[TimingRecord], cores: usize) -> CsvTable {
    let mut t = CsvTable::new(&["page_id", "method", "wall_time_s", "reps"])
        .with_note(&format!("cores={cores}"));
    for r in records {
        t.row([
            r.page_id.clone(),
            r.method.clone(),
            format!("{:.9}", r.wall_time_s),
            r.reps.to_string(),
        ]);
    }
    t
}

pub fn timing_summary_table(records: &[TimingRecord]) -> CsvTable {
    let mut t = CsvTable::new(&["method", "pages", "mean", "std"]);
    for (method, s) in aggregate(records) {
        t.row([
            method,
            s.count.to_string(),
            format!("{:.9}", s.mean),
            format!("{:.9}", s.std),
        ]);
    }
    t
}

/// Reads a timing CSV written by [`timing_table`].
pub fn read_timings(path: &Path) -> Result<Vec<TimingRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse {
            line: i + 1,
            message: format!(
                "{}: expected page_id,method,wall_time_s,reps",
                path.display()
            ),
        };
        if cols.len() != 4 {
            return Err(bad());
        }
        out.push(TimingRecord {
            page_id: cols[0].to_string(),
            method: cols[1].to_string(),
            wall_time_s: cols[2].parse().map_err(|_| bad())?,
            reps: cols[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

type MetricFn<T> = fn(&T) -> Option<f64>;

/// Cross-page tables and plot-ready CSVs.
pub fn write_report(
    out: &Path,
    reports: &[PageReport],
    cfg: &RunConfig,
    timings: Option<&[TimingRecord]>,
) -> Result<()> {
    let dir = out.join("report");

    // corpus distribution of filtered page sizes
    let stats: Vec<PageStats> = reports.iter().map(|r| r.stats.clone()).collect();
    let mut t1 = CsvTable::new(&with_summary_columns(&["type", "pages"]));
    for (q, s) in describe_corpus(&stats) {
        let mut row = vec![q.to_string(), s.count.to_string()];
        row.extend(summary_cells(&s));
        t1.row(row);
    }
    t1.write(&dir.join("table1_dataset.csv"))?;

    // rule metrics per page
    let mut t2 = rule_summary_table();
    for r in reports {
        if let Some(s) = &r.rule_summary {
            rule_summary_rows(&mut t2, &r.page_id, "all", s);
        }
    }
    t2.write(&dir.join("table2_rules.csv"))?;

    // distribution over pages of the high-confidence rule sets
    let hc: Vec<&RuleSummary> = reports
        .iter()
        .filter_map(|r| r.high_confidence_summary.as_ref())
        .collect();
    let mut t3 = CsvTable::new(&with_summary_columns(&["metric", "pages"]));
    let metric_rows: [(&str, MetricFn<RuleSummary>); 4] = [
        ("n_rules", |s| Some(s.n_rules as f64)),
        ("confidence", |s| {
            (s.confidence.count > 0).then_some(s.confidence.mean)
        }),
        ("lift", |s| (s.lift.count > 0).then_some(s.lift.mean)),
        ("conviction", |s| {
            (s.conviction.count > 0).then_some(s.conviction.mean)
        }),
    ];
    for (name, f) in metric_rows {
        let values: Vec<f64> = hc.iter().filter_map(|s| f(s)).collect();
        if let Some(s) = Summary::of(&values) {
            let mut row = vec![name.to_string(), s.count.to_string()];
            row.extend(summary_cells(&s));
            t3.row(row);
        }
    }
    t3.write(&dir.join("table3_high_confidence_rules.csv"))?;

    // per page similarity
    let mut t5 = CsvTable::new(&SIMILARITY_COLUMNS);
    for r in reports {
        for row in r.similarity.iter().flatten() {
            t5.row(similarity_row(&r.page_id, row));
        }
    }
    t5.write(&dir.join("table5_similarity.csv"))?;

    // prediction per page plus mean (sd) over pages
    let mut t6 = CsvTable::new(&EVALUATION_COLUMNS);
    let mut per_set: BTreeMap<&str, Vec<&Evaluation>> = BTreeMap::new();
    for r in reports {
        if let Some(p) = &r.prediction {
            t6.row(evaluation_row(&r.page_id, "all", &p.all));
            t6.row(evaluation_row(&r.page_id, "reduced", &p.reduced));
            per_set.entry("all").or_default().push(&p.all);
            per_set.entry("reduced").or_default().push(&p.reduced);
        }
    }
    t6.write(&dir.join("table6_prediction.csv"))?;
    let mut t6s = CsvTable::new(&["rule_set", "metric", "pages", "mean", "std"]);
    for (set, evals) in &per_set {
        let metrics: [(&str, MetricFn<Evaluation>); 4] = [
            ("n_rules", |e| Some(e.n_rules as f64)),
            ("accuracy", |e| e.accuracy),
            ("precision", |e| e.precision),
            ("recall", |e| e.recall),
        ];
        for (name, f) in metrics {
            let values: Vec<f64> = evals.iter().filter_map(|e| f(e)).collect();
            let s = Summary::of(&values);
            t6s.row([
                set.to_string(),
                name.to_string(),
                values.len().to_string(),
                opt_metric(s.map(|s| s.mean)),
                opt_metric(s.map(|s| s.std)),
            ]);
        }
    }
    t6s.write(&dir.join("table6_prediction_summary.csv"))?;

    // mean similarity per percent, Friedman and Nemenyi
    let sim = similarity_stats(reports, &cfg.percents)?;
    let mut t7 = CsvTable::new(&[
        "percent",
        "degree_arl_mean",
        "degree_arl_std",
        "pagerank_arl_mean",
        "pagerank_arl_std",
        "pagerank_degree_mean",
        "pagerank_degree_std",
    ]);
    for (pi, &p) in cfg.percents.iter().enumerate() {
        let mut row = vec![percent_label(p)];
        for col in 0..3 {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.similarity.as_ref()?.get(pi))
                .filter_map(|row| [row.degree_arl, row.pagerank_arl, row.pagerank_degree][col])
                .collect();
            let s = Summary::of(&values);
            row.push(opt_metric(s.map(|s| s.mean)));
            row.push(opt_metric(s.map(|s| s.std)));
        }
        t7.row(row);
    }
    if let Some(f) = &sim.friedman {
        let avg: Vec<f64> =
            serde_json::from_value(f.extras["average_ranks"].clone()).unwrap_or_default();
        let mut row = vec!["average_rank".to_string()];
        for a in avg {
            row.push(format_metric(a));
            row.push(String::new());
        }
        t7.row(row);
    }
    t7.write(&dir.join("table7_similarity_means.csv"))?;
    write_json(&dir.join("similarity_stats.json"), &sim)?;

    // figure 1: itemset size/frequency pairs
    let mut f1 = CsvTable::new(&["page_id", "size", "frequency"]);
    for r in reports {
        for s in r.itemsets.iter().flatten() {
            f1.row([
                r.page_id.clone(),
                s.len().to_string(),
                s.frequency.to_string(),
            ]);
        }
    }
    f1.write(&dir.join("figure1_itemsets.csv"))?;

    // figure 3: post share of top-degree users
    let mut f3 = CsvTable::new(&["page_id", "top_fraction", "post_share"]);
    for r in reports {
        for (f, s) in r.post_share.iter().flatten() {
            f3.row([r.page_id.clone(), format_metric(*f), opt_metric(*s)]);
        }
    }
    f3.write(&dir.join("figure3_post_share.csv"))?;

    if let Some(records) = timings {
        timing_summary_table(records).write(&dir.join("table9_timing.csv"))?;
        write_json(&dir.join("timing_stats.json"), &timing_stats(records)?)?;
    }
    Ok(())
}
