use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand};
use cocomment::bench::{available_cores, time_rankings, BenchOptions};
use cocomment::eclat::mine;
use cocomment::error::ResourceKind;
use cocomment::output::{write_file, write_json};
use cocomment::pipeline::{
    analyze_pages, ingest_table, load_pages, read_timings, similarity_stats, timing_stats,
    timing_summary_table, timing_table, write_page_outputs, write_report, LoadedPage, PageReport,
    RunConfig, Stages,
};
use cocomment::ranking::RankerRegistry;
use cocomment::rules::generate_rules;
use cocomment::synth::{generate, write_events, CorpusSpec, FollowEdge, PlantConfig};
use cocomment::{Error, UserTable};

const DEFAULT_OUT_DIR: &str = "cocomment-out";

/// Association-rule analysis of co-commenting users on social media pages.
#[derive(Debug, Parser)]
#[command(name = "cocomment", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Key-value settings file (`key = value` per line, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: cocomment-out].
    #[arg(long, env = "COCOMMENT_OUT_DIR", global = true)]
    out_dir: Option<PathBuf>,

    /// Pages analysed in parallel [default: 1].
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse event files, apply activity filters, write page statistics.
    Ingest(InputArgs),
    /// Generate synthetic pages with planted follow edges.
    Synth(SynthArgs),
    /// Mine frequent user sets.
    Mine {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
    },
    /// Mine and derive association rules with their metrics.
    Rules {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
        #[command(flatten)]
        rules: RuleArgs,
    },
    /// Evaluate rules as participation predictors on a temporal split.
    Predict {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
        #[command(flatten)]
        rules: RuleArgs,
        /// Fraction of posts (oldest first) used for training [default: 0.8].
        #[arg(long)]
        split: Option<f64>,
    },
    /// Rank users by one or more registered methods.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        pagerank: PageRankArgs,
        /// Ranking method, repeatable [default: all].
        #[arg(long = "method")]
        methods: Vec<String>,
    },
    /// Top-k intersection similarity between the three rankings.
    Compare(CompareArgs),
    /// Friedman and Nemenyi over similarities; Kruskal-Wallis and Wilcoxon over timings.
    Stats {
        #[command(flatten)]
        compare: CompareArgs,
        /// Timing CSV written by `bench`.
        #[arg(long)]
        timings: Option<PathBuf>,
    },
    /// Time the ranking methods on every page.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        pagerank: PageRankArgs,
        /// Repetitions per method and page; the median is kept.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Count mining and rule generation in the rule-based timing.
        #[arg(long)]
        include_mining: bool,
    },
    /// Run every stage and write per-page files plus cross-page tables.
    Report {
        #[command(flatten)]
        compare: CompareArgs,
        /// Fraction of posts (oldest first) used for training [default: 0.8].
        #[arg(long)]
        split: Option<f64>,
        /// Timing CSV written by `bench`, for the timing tables.
        #[arg(long)]
        timings: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Event files in the line-delimited JSON format.
    inputs: Vec<PathBuf>,

    /// File listing event files, one per line, relative to the manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Keep all posts and users regardless of activity.
    #[arg(long)]
    no_filter: bool,

    /// Analyse pages that fail the viability screen.
    #[arg(long)]
    include_nonviable: bool,

    /// Minimum comments for a post to be kept [default: 20].
    #[arg(long)]
    min_post_comments: Option<usize>,

    /// Minimum comments for a user to be kept [default: 5].
    #[arg(long)]
    min_user_comments: Option<usize>,
}

#[derive(Debug, Args)]
struct MineArgs {
    /// Minimum number of posts an itemset must appear in [default: 4].
    #[arg(long)]
    min_freq: Option<u32>,

    /// Search the threshold per page instead of using --min-freq.
    #[arg(long)]
    auto_threshold: bool,

    /// Abort mining after this many itemsets [default: 10000000].
    #[arg(long)]
    max_itemsets: Option<usize>,

    /// Longest itemset to mine.
    #[arg(long)]
    max_length: Option<usize>,

    /// Abort mining a page after this many seconds.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Debug, Args)]
struct RuleArgs {
    /// Confidence threshold for high-confidence rules [default: 0.95].
    #[arg(long)]
    min_confidence: Option<f64>,

    /// Require confidence strictly above the threshold.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct PageRankArgs {
    /// PageRank damping factor [default: 0.85].
    #[arg(long)]
    damping: Option<f64>,

    /// PageRank L1 convergence tolerance [default: 1e-10].
    #[arg(long)]
    tolerance: Option<f64>,

    /// PageRank iteration cap [default: 100].
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    mine: MineArgs,
    #[command(flatten)]
    rules: RuleArgs,
    #[command(flatten)]
    pagerank: PageRankArgs,

    /// Top-k percentages [default: 1,5,10,25,50,75,100].
    #[arg(long)]
    percents: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of pages to generate.
    #[arg(long, default_value_t = 1)]
    pages: usize,

    /// Page id (single page) or prefix (several pages).
    #[arg(long, default_value = "synth")]
    page_id: String,

    #[arg(long, default_value_t = 50)]
    users: usize,

    #[arg(long, default_value_t = 200)]
    posts: usize,

    /// Random seed; the same seed gives byte-identical files.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Probability that a user comments on a post.
    #[arg(long, default_value_t = 0.1)]
    base_activity: f64,

    /// Planted edge `A,B>C` or `A,B>C:P` (user indices or labels); quote it in the shell.
    #[arg(long = "edge")]
    edges: Vec<String>,

    /// Per-user activity `U=P`, e.g. to silence a follower outside its edge.
    #[arg(long = "activity")]
    activity: Vec<String>,

    /// Random two-influencer edges added to every page.
    #[arg(long, default_value_t = 0)]
    random_edges: usize,

    /// Firing probability of the random edges.
    #[arg(long, default_value_t = 1.0)]
    edge_probability: f64,
}

impl InputArgs {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.no_filter {
            out.push(("apply_filters", "false".into()));
        }
        if self.include_nonviable {
            out.push(("require_viable", "false".into()));
        }
        push_opt(&mut out, "min_comments_per_post", self.min_post_comments);
        push_opt(&mut out, "min_comments_per_user", self.min_user_comments);
        out
    }
}

impl MineArgs {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        push_opt(&mut out, "min_freq", self.min_freq);
        push_opt(&mut out, "max_itemsets", self.max_itemsets);
        push_opt(&mut out, "max_length", self.max_length);
        push_opt(&mut out, "time_budget_s", self.time_budget);
        if self.auto_threshold {
            out.push(("auto_threshold", "true".into()));
        }
        out
    }
}

impl RuleArgs {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        push_opt(&mut out, "min_confidence", self.min_confidence);
        if self.strict {
            out.push(("strict_confidence", "true".into()));
        }
        out
    }
}

impl PageRankArgs {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        push_opt(&mut out, "damping", self.damping);
        push_opt(&mut out, "tolerance", self.tolerance);
        push_opt(&mut out, "max_iter", self.max_iter);
        out
    }
}

impl CompareArgs {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = self.input.settings();
        out.extend(self.mine.settings());
        out.extend(self.rules.settings());
        out.extend(self.pagerank.settings());
        push_opt(&mut out, "percents", self.percents.as_ref());
        out
    }
}

fn push_opt<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: Option<T>) {
    if let Some(v) = v {
        out.push((key, v.to_string()));
    }
}

/// Settings resolved from defaults, then the config file, then flags.
struct Resolved {
    cfg: RunConfig,
    out_dir: PathBuf,
    manifest: Option<PathBuf>,
}

fn resolve(global: &GlobalArgs, flags: Vec<(&'static str, String)>) -> anyhow::Result<Resolved> {
    let mut cfg = RunConfig::default();
    let mut file_settings = BTreeMap::new();
    if let Some(path) = &global.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        file_settings = cfg
            .apply_text(&text, &["out_dir", "manifest"])
            .with_context(|| format!("in config {}", path.display()))?;
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    if let Some(w) = global.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let out_dir = global
        .out_dir
        .clone()
        .or_else(|| file_settings.get("out_dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(Resolved {
        cfg,
        out_dir,
        manifest: file_settings.get("manifest").map(PathBuf::from),
    })
}

fn read_manifest(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

fn input_paths(input: &InputArgs, ctx: &Resolved) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = input.inputs.clone();
    if let Some(m) = input.manifest.as_ref().or(ctx.manifest.as_ref()) {
        paths.extend(read_manifest(m)?);
    }
    if paths.is_empty() {
        return Err(Error::Usage("no input files given (pass paths or --manifest)".into()).into());
    }
    for p in &paths {
        if !p.is_file() {
            bail!("input {} does not exist", p.display());
        }
    }
    Ok(paths)
}

fn load(input: &InputArgs, ctx: &Resolved) -> anyhow::Result<Vec<LoadedPage>> {
    let paths = input_paths(input, ctx)?;
    let (pages, summary) = load_pages(&paths, &ctx.cfg)?;
    log::info!(
        "loaded {} pages from {} files ({} records ignored, {} likes)",
        summary.pages,
        summary.files,
        summary.ignored_records,
        summary.likes
    );
    Ok(pages)
}

fn analyze(
    input: &InputArgs,
    ctx: &Resolved,
    stages: Stages,
) -> anyhow::Result<(Vec<LoadedPage>, Vec<PageReport>)> {
    let pages = load(input, ctx)?;
    let reports = analyze_pages(&pages, &ctx.cfg, stages)?;
    if reports.is_empty() {
        log::warn!("no page passed the viability screen; nothing to analyse");
    }
    Ok((pages, reports))
}

fn write_pages(ctx: &Resolved, pages: &[LoadedPage], reports: &[PageReport]) -> anyhow::Result<()> {
    for report in reports {
        let ds = pages
            .iter()
            .find(|p| p.dataset.page_id == report.page_id)
            .map(|p| &p.dataset);
        write_page_outputs(&ctx.out_dir, report, ds)?;
    }
    Ok(())
}

fn parse_edge(raw: &str, users: &UserTable) -> anyhow::Result<FollowEdge> {
    let bad = || Error::Usage(format!("bad edge `{raw}`, expected A,B>C or A,B>C:P"));
    let (lhs, rhs) = raw.split_once('>').ok_or_else(bad)?;
    let (follower, prob) = match rhs.split_once(':') {
        Some((f, p)) => (f, p.trim().parse::<f64>().map_err(|_| bad())?),
        None => (rhs, 1.0),
    };
    let user = |s: &str| -> anyhow::Result<u32> {
        let s = s.trim();
        match s.parse::<u32>() {
            Ok(i) => Ok(i),
            Err(_) => users.id_of(s).map(|u| u.0).ok_or_else(|| bad().into()),
        }
    };
    Ok(FollowEdge {
        influencers: lhs.split(',').map(user).collect::<anyhow::Result<_>>()?,
        follower: user(follower)?,
        probability: prob,
    })
}

fn run_synth(args: &SynthArgs, out_dir: &Path) -> anyhow::Result<()> {
    let users = UserTable::numbered(args.users);
    let mut configs = if args.pages == 1 && args.random_edges == 0 {
        let mut c = PlantConfig::new(args.page_id.clone(), args.users, args.posts, args.seed);
        c.base_activity = args.base_activity;
        vec![c]
    } else {
        CorpusSpec {
            page_prefix: args.page_id.clone(),
            n_pages: args.pages,
            n_users: args.users,
            n_posts: args.posts,
            seed: args.seed,
            base_activity: args.base_activity,
            edges_per_page: args.random_edges,
            edge_probability: args.edge_probability,
        }
        .page_configs()?
    };
    let edges = args
        .edges
        .iter()
        .map(|e| parse_edge(e, &users))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut overrides = BTreeMap::new();
    for a in &args.activity {
        let (u, p) = a
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("bad activity `{a}`, expected U=P")))?;
        let u = match u.trim().parse::<u32>() {
            Ok(i) => i,
            Err(_) => users
                .id_of(u.trim())
                .map(|x| x.0)
                .ok_or_else(|| Error::Usage(format!("unknown user `{u}`")))?,
        };
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad activity `{a}`")))?;
        overrides.insert(u, p);
    }
    let dir = out_dir.join("synth");
    let mut manifest = String::new();
    for cfg in &mut configs {
        cfg.follow_edges.extend(edges.iter().cloned());
        cfg.activity_overrides
            .extend(overrides.iter().map(|(&u, &p)| (u, p)));
        let posts = generate(cfg)?;
        let mut buf = Vec::new();
        write_events(&mut buf, &cfg.page_id, &users, &posts)?;
        let name = format!(
            "{}.jsonl",
            cocomment::output::sanitize_component(&cfg.page_id)
        );
        write_file(&dir.join(&name), &buf)?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    write_file(&dir.join("manifest.txt"), manifest.as_bytes())?;
    write_json(&dir.join("configs.json"), &serde_configs(&configs))?;
    println!("wrote {} page(s) to {}", configs.len(), dir.display());
    Ok(())
}

fn serde_configs(configs: &[PlantConfig]) -> BTreeMap<&'static str, &[PlantConfig]> {
    BTreeMap::from([("pages", configs)])
}

fn run_bench(
    input: &InputArgs,
    ctx: &Resolved,
    reps: usize,
    include_mining: bool,
) -> anyhow::Result<()> {
    let pages = load(input, ctx)?;
    let registry = RankerRegistry::standard(&ctx.cfg.rank_settings());
    let opts = BenchOptions {
        reps,
        include_mining: include_mining.then(|| ctx.cfg.mine.clone()),
    };
    let mut records = Vec::new();
    // sequential on purpose: timed sections must not overlap
    for page in pages.iter().filter(|p| p.viable || !ctx.cfg.require_viable) {
        let ds = &page.dataset;
        let itemsets = mine(&ds.transactions, &ctx.cfg.mine)?;
        let rules = generate_rules(&itemsets, ds.n_transactions().max(1))?;
        records.extend(time_rankings(ds, &rules, &registry, &opts)?);
    }
    let dir = ctx.out_dir.join("bench");
    let cores = available_cores();
    let mut table = timing_table(&records, cores);
    if include_mining {
        table = table.with_note("arl_includes_mining=true");
    }
    table.write(&dir.join("timings.csv"))?;
    timing_summary_table(&records).write(&dir.join("summary.csv"))?;
    if !records.is_empty() {
        write_json(&dir.join("timing_stats.json"), &timing_stats(&records)?)?;
    }
    println!("timed {} records on {cores} core(s)", records.len());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest(input) => {
            let ctx = resolve(g, input.settings())?;
            let pages = load(input, &ctx)?;
            ingest_table(&pages).write(&ctx.out_dir.join("ingest_summary.csv"))?;
            let all_pages = RunConfig {
                require_viable: false,
                ..ctx.cfg.clone()
            };
            let reports = analyze_pages(&pages, &all_pages, Stages::default())?;
            write_pages(&ctx, &pages, &reports)?;
            let viable = pages.iter().filter(|p| p.viable).count();
            println!("{} page(s), {viable} viable", pages.len());
        }
        Command::Synth(args) => {
            let ctx = resolve(g, Vec::new())?;
            run_synth(args, &ctx.out_dir)?;
        }
        Command::Mine { input, mine } => {
            let mut flags = input.settings();
            flags.extend(mine.settings());
            let ctx = resolve(g, flags)?;
            let stages = Stages {
                itemsets: true,
                ..Stages::default()
            };
            let (pages, reports) = analyze(input, &ctx, stages)?;
            write_pages(&ctx, &pages, &reports)?;
        }
        Command::Rules { input, mine, rules } => {
            let mut flags = input.settings();
            flags.extend(mine.settings());
            flags.extend(rules.settings());
            let ctx = resolve(g, flags)?;
            let stages = Stages {
                rules: true,
                ..Stages::default()
            };
            let (pages, reports) = analyze(input, &ctx, stages)?;
            write_pages(&ctx, &pages, &reports)?;
        }
        Command::Predict {
            input,
            mine,
            rules,
            split,
        } => {
            let mut flags = input.settings();
            flags.extend(mine.settings());
            flags.extend(rules.settings());
            push_opt(&mut flags, "split", *split);
            let ctx = resolve(g, flags)?;
            let stages = Stages {
                predict: true,
                ..Stages::default()
            };
            let (pages, reports) = analyze(input, &ctx, stages)?;
            write_pages(&ctx, &pages, &reports)?;
        }
        Command::Rank {
            input,
            mine,
            rules,
            pagerank,
            methods,
        } => {
            let mut flags = input.settings();
            flags.extend(mine.settings());
            flags.extend(rules.settings());
            flags.extend(pagerank.settings());
            let ctx = resolve(g, flags)?;
            let registry = RankerRegistry::standard(&ctx.cfg.rank_settings());
            for m in methods {
                registry.get(m)?;
            }
            let stages = Stages {
                rank: true,
                ..Stages::default()
            };
            let (pages, mut reports) = analyze(input, &ctx, stages)?;
            if !methods.is_empty() {
                for r in &mut reports {
                    if let Some(rk) = &mut r.rankings {
                        rk.retain(|name, _| methods.contains(name));
                    }
                    r.itemsets = None;
                    r.rules = None;
                }
            }
            write_pages(&ctx, &pages, &reports)?;
        }
        Command::Compare(args) => {
            let ctx = resolve(g, args.settings())?;
            let stages = Stages {
                compare: true,
                ..Stages::default()
            };
            let (pages, reports) = analyze(&args.input, &ctx, stages)?;
            write_pages(&ctx, &pages, &reports)?;
        }
        Command::Stats { compare, timings } => {
            let ctx = resolve(g, compare.settings())?;
            let stages = Stages {
                compare: true,
                ..Stages::default()
            };
            let (_, reports) = analyze(&compare.input, &ctx, stages)?;
            let dir = ctx.out_dir.join("stats");
            let sim = similarity_stats(&reports, &ctx.cfg.percents)?;
            write_json(&dir.join("similarity_stats.json"), &sim)?;
            if let Some(f) = &sim.friedman {
                println!(
                    "friedman chi2={:.4} p={:.6} (N={}, k=3)",
                    f.statistic,
                    f.p_value,
                    sim.means.len()
                );
            }
            if let Some(path) = timings {
                let records = read_timings(path)?;
                write_json(&dir.join("timing_stats.json"), &timing_stats(&records)?)?;
            }
        }
        Command::Bench {
            input,
            mine,
            rules,
            pagerank,
            reps,
            include_mining,
        } => {
            let mut flags = input.settings();
            flags.extend(mine.settings());
            flags.extend(rules.settings());
            flags.extend(pagerank.settings());
            let ctx = resolve(g, flags)?;
            run_bench(input, &ctx, *reps, *include_mining)?;
        }
        Command::Report {
            compare,
            split,
            timings,
        } => {
            let mut flags = compare.settings();
            push_opt(&mut flags, "split", *split);
            let ctx = resolve(g, flags)?;
            let (pages, reports) = analyze(&compare.input, &ctx, Stages::all())?;
            ingest_table(&pages).write(&ctx.out_dir.join("ingest_summary.csv"))?;
            write_pages(&ctx, &pages, &reports)?;
            let records = timings.as_deref().map(read_timings).transpose()?;
            write_report(&ctx.out_dir, &reports, &ctx.cfg, records.as_deref())?;
            println!(
                "analysed {} of {} page(s); report in {}",
                reports.len(),
                pages.len(),
                ctx.out_dir.join("report").display()
            );
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Usage(_)) => 2,
        Some(e) if e.is_resource_limit() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(Error::ResourceLimit { limit, partial }) = err.downcast_ref::<Error>() {
                let hint = match limit {
                    ResourceKind::ItemsetCap => "raise --max-itemsets or --min-freq",
                    ResourceKind::TimeBudget => "raise --time-budget or --min-freq",
                };
                eprintln!(
                    "note: mining stopped with a partial result of {partial} itemsets, \
                     which were not written; {hint}"
                );
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
