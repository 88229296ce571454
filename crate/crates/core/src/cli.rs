//! The `blockkit` command line: `generate`, `sample`, `analyze`, `blocks`.
//!
//! Settings come from flags, then from an optional `key=value` config file
//! (`--config`), then from built-in defaults. Every file is written under the
//! `--out` directory. Exit codes: 0 success, 1 runtime or data error, 2 usage
//! error.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::blocks::{describe_division, greedy_blocks, GreedyConfig};
use crate::comembership::{comembership_matrix, meet_partition, ring_distance_classifier, stratified_histogram, DEFAULT_BINS};
use crate::error::Error;
use crate::formats;
use crate::generators::{dcsbm_generate, ring_of_cliques, ring_of_cliques_random_ports, DcsbmSpec};
use crate::graph::{load_edge_list, load_gml, write_edge_list, Graph};
use crate::partition::Partition;
use crate::rmi::{OmegaConfig, OmegaEstimator, OmegaMode, DEFAULT_EXACT_THRESHOLD};
use crate::sampler::{run_detailed, SampleEnsemble, SamplerConfig};
use crate::svg;

#[derive(Debug, Parser)]
#[command(name = "blockkit", version, about = "Community sampling and building-block extraction")]
pub struct Cli {
    /// RNG seed (chain c uses seed + c).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key=value` settings file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic network and its ground-truth labels.
    Generate {
        #[command(subcommand)]
        model: Model,
    },
    /// Sample community divisions from the posterior.
    Sample(SampleArgs),
    /// Co-membership matrix, histograms and meet partition of a trace.
    Analyze(AnalyzeArgs),
    /// Greedy building blocks of a trace.
    Blocks(BlocksArgs),
}

#[derive(Debug, Subcommand)]
pub enum Model {
    /// Cliques joined in a ring by single edges.
    RingOfCliques {
        #[arg(long)]
        cliques: usize,
        #[arg(long)]
        size: usize,
        /// Draw each ring edge's endpoints at random within the cliques.
        #[arg(long)]
        random_ports: bool,
    },
    /// Degree-corrected SBM from a JSON parameter file.
    Dcsbm {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct GraphArg {
    /// Edge list, or GML if the name ends in `.gml`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Override the edge-density parameter p (default 2m/n^2).
    #[arg(long)]
    pub p: Option<f64>,
    /// Stride of the log-posterior series in logp.csv (default: thin).
    #[arg(long)]
    pub logp_every: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// Sample trace (default `<out>/trace.txt`).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: TraceArgs,
    /// Meet of the K highest-posterior distinct records.
    #[arg(long)]
    pub meet_top: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Ground-truth `node label` file; pairs are classed same/different.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Treat truth labels as ring positions and class pairs by ring distance.
    #[arg(long)]
    pub ring: bool,
    /// Also write heatmap.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OmegaArg {
    Auto,
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Good,
    EffectiveColumns,
}

#[derive(Debug, Args)]
pub struct BlocksArgs {
    #[command(flatten)]
    pub input: TraceArgs,
    #[arg(long, value_enum)]
    pub omega: Option<OmegaArg>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[arg(long)]
    pub exact_threshold: Option<usize>,
    /// Score merges on at most this many records.
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Number of top distinct divisions to describe.
    #[arg(long)]
    pub top: Option<usize>,
    /// Also write rmi_curve.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Settings {
    file: HashMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut file = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", idx + 1)))?;
                file.insert(k.trim().replace('-', "_"), v.trim().to_string());
            }
        }
        Ok(Self { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn get_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true)
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: unknown value {v:?}"))),
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Context {
    settings: Settings,
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.get(cli.seed, "seed")?.unwrap_or(0);
    let out = settings.get(cli.out, "out")?.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let ctx = Context { settings, seed, out };
    match cli.command {
        Command::Generate { model } => cmd_generate(&ctx, model),
        Command::Sample(args) => cmd_sample(&ctx, args),
        Command::Analyze(args) => cmd_analyze(&ctx, args),
        Command::Blocks(args) => cmd_blocks(&ctx, args),
    }
}

fn load_graph(ctx: &Context, arg: &GraphArg) -> CliResult<Graph> {
    let path: PathBuf = ctx
        .settings
        .get(arg.input.clone(), "input")?
        .ok_or_else(|| CliError::Usage("the following required argument was not provided: --input <INPUT>".into()))?;
    let graph = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gml")) {
        load_gml(&fs::read_to_string(&path)?)?
    } else {
        load_edge_list(BufReader::new(File::open(&path)?))?
    };
    Ok(graph)
}

fn load_trace(ctx: &Context, args: &TraceArgs) -> CliResult<(Graph, SampleEnsemble)> {
    let graph = load_graph(ctx, &args.graph)?;
    let path = ctx
        .settings
        .get(args.trace.clone(), "trace")?
        .unwrap_or_else(|| ctx.path("trace.txt"));
    let ensemble = formats::read_trace(BufReader::new(File::open(&path)?))?;
    let found = graph.fingerprint();
    if *ensemble.fingerprint() != found {
        return Err(Error::FingerprintMismatch {
            expected: ensemble.fingerprint().to_string(),
            found: found.to_string(),
        }
        .into());
    }
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble.into());
    }
    Ok((graph, ensemble))
}

fn cmd_generate(ctx: &Context, model: Model) -> CliResult<()> {
    let (graph, truth) = match model {
        Model::RingOfCliques {
            cliques,
            size,
            random_ports,
        } => {
            let made = if random_ports {
                ring_of_cliques_random_ports(cliques, size, ctx.seed)
            } else {
                ring_of_cliques(cliques, size)
            };
            made.map_err(|e| CliError::Usage(e.to_string()))?
        }
        Model::Dcsbm { spec } => {
            let text = fs::read_to_string(&spec)?;
            let spec: DcsbmSpec = serde_json::from_str(&text).map_err(Error::from)?;
            let params = spec.into_params(ctx.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            (dcsbm_generate(&params)?, params.groups)
        }
    };
    let mut w = ctx.create("graph.txt")?;
    write_edge_list(&graph, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("truth.txt")?;
    formats::write_labels(&graph, &truth, &mut w)?;
    w.flush()?;
    println!(
        "wrote {} and {} ({})",
        ctx.path("graph.txt").display(),
        ctx.path("truth.txt").display(),
        graph.fingerprint()
    );
    Ok(())
}

fn cmd_sample(ctx: &Context, args: SampleArgs) -> CliResult<()> {
    let graph = load_graph(ctx, &args.graph)?;
    let s = &ctx.settings;
    let defaults = SamplerConfig::default();
    let thin = s.get(args.thin, "thin")?.unwrap_or(defaults.thin);
    let config = SamplerConfig {
        steps: s.get(args.steps, "steps")?.unwrap_or(defaults.steps),
        burn_in: s.get(args.burn_in, "burn_in")?.unwrap_or(defaults.burn_in),
        thin,
        seed: ctx.seed,
        p_override: s.get(args.p, "p")?,
        chains: s.get(args.chains, "chains")?.unwrap_or(defaults.chains),
        logp_every: Some(s.get(args.logp_every, "logp_every")?.unwrap_or(thin)),
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    log::info!("sampling {} chains x {} steps", config.chains, config.steps);
    let run = run_detailed(&graph, &config)?;

    let mut w = ctx.create("trace.txt")?;
    formats::write_trace(&run.ensemble, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("logp.csv")?;
    formats::write_logp_csv(&run.series, &mut w)?;
    w.flush()?;

    println!(
        "{} records from {} steps in {:.2} s, acceptance {:.3}",
        run.ensemble.len(),
        run.total_steps,
        run.seconds,
        run.accepted as f64 / run.total_steps as f64
    );
    println!("steps/sec: {:.0}", run.steps_per_second());
    println!("wrote {}", ctx.path("trace.txt").display());
    Ok(())
}

/// Reads a `node label` file into group ids, in the order of the graph's nodes.
fn load_truth(graph: &Graph, path: &Path, numeric: bool) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let index: HashMap<&str, usize> = graph.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut raw: Vec<Option<String>> = vec![None; graph.node_count()];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(node), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "expected `node label`".into(),
            }
            .into());
        };
        if let Some(&i) = index.get(node) {
            raw[i] = Some(label.to_string());
        }
    }
    let labels: Vec<String> = raw
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| CliError::Runtime(Error::InvalidParameter(format!("node {} missing from truth file", graph.label(i)))))
        })
        .collect::<CliResult<_>>()?;
    if numeric {
        return labels
            .iter()
            .map(|l| {
                l.parse::<usize>()
                    .map_err(|_| CliError::Runtime(Error::InvalidParameter(format!("ring label {l:?} is not an integer"))))
            })
            .collect();
    }
    let p = Partition::from_labels(&labels.iter().map(String::as_str).collect::<Vec<_>>())?;
    Ok(p.labels().iter().map(|&g| g as usize).collect())
}

fn sorted_by_group(groups: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&i| (groups[i], i));
    order
}

fn cmd_analyze(ctx: &Context, args: AnalyzeArgs) -> CliResult<()> {
    let (graph, ensemble) = load_trace(ctx, &args.input)?;
    let s = &ctx.settings;
    let bins = s.get(args.bins, "bins")?.unwrap_or(DEFAULT_BINS);
    let meet_top = s.get(args.meet_top, "meet_top")?;
    let truth_path: Option<PathBuf> = s.get(args.truth, "truth")?;
    let ring = args.ring || s.get(None, "ring")?.unwrap_or(false);
    if ring && truth_path.is_none() {
        return Err(CliError::Usage("--ring needs --truth".into()));
    }
    let truth = truth_path
        .map(|p| load_truth(&graph, &p, ring))
        .transpose()?;

    let matrix = comembership_matrix(&ensemble)?;
    let hists = match &truth {
        Some(groups) if ring => {
            let cliques = groups.iter().max().map_or(1, |&m| m + 1);
            stratified_histogram(&matrix, ring_distance_classifier(groups, cliques), bins)?
        }
        Some(groups) => stratified_histogram(
            &matrix,
            |i, j| Some(if groups[i] == groups[j] { "same" } else { "different" }.to_string()),
            bins,
        )?,
        None => stratified_histogram(&matrix, |_, _| Some("all".to_string()), bins)?,
    };
    let order = match &truth {
        Some(groups) => sorted_by_group(groups),
        None => {
            let best = ensemble.best_of()?;
            sorted_by_group(&best.partition.labels().iter().map(|&g| g as usize).collect::<Vec<_>>())
        }
    };

    let mut w = ctx.create("comembership.csv")?;
    formats::write_comatrix_csv(&matrix, graph.labels(), Some(&order), &mut w)?;
    w.flush()?;
    let mut w = ctx.create("histograms.json")?;
    formats::write_histograms_json(&hists, &mut w)?;
    w.flush()?;
    for (class, h) in &hists {
        println!("{class}: {} pairs, mean co-membership {:.4}", h.pairs, h.mean);
    }

    if let Some(k) = meet_top {
        if k == 0 {
            return Err(CliError::Usage("--meet-top must be >= 1".into()));
        }
        let top = ensemble.top_distinct(k);
        let parts: Vec<&Partition> = top.iter().map(|r| &r.partition).collect();
        let meet = meet_partition(&parts)?;
        let mut w = ctx.create("meet.txt")?;
        formats::write_labels(&graph, &meet, &mut w)?;
        w.flush()?;
        println!(
            "meet of top {} divisions: {} classes, wrote {}",
            parts.len(),
            meet.community_count(),
            ctx.path("meet.txt").display()
        );
    }
    if args.svg {
        fs::write(ctx.path("heatmap.svg"), svg::heatmap(&matrix, &order))?;
    }
    println!("wrote {}", ctx.path("comembership.csv").display());
    Ok(())
}

fn cmd_blocks(ctx: &Context, args: BlocksArgs) -> CliResult<()> {
    let (graph, ensemble) = load_trace(ctx, &args.input)?;
    let s = &ctx.settings;
    let mode = match s.get_enum(args.omega, "omega")?.unwrap_or(OmegaArg::Auto) {
        OmegaArg::Auto => OmegaMode::Auto,
        OmegaArg::Exact => OmegaMode::Exact,
        OmegaArg::Approx => OmegaMode::Approximate,
    };
    let estimator = match s.get_enum(args.estimator, "estimator")?.unwrap_or(EstimatorArg::Good) {
        EstimatorArg::Good => OmegaEstimator::Good,
        EstimatorArg::EffectiveColumns => OmegaEstimator::EffectiveColumns,
    };
    let config = GreedyConfig {
        omega: OmegaConfig {
            mode,
            estimator,
            exact_threshold: s.get(args.exact_threshold, "exact_threshold")?.unwrap_or(DEFAULT_EXACT_THRESHOLD),
        },
        subsample: s.get(args.subsample, "subsample")?,
    };
    let top = s.get(args.top, "top")?.unwrap_or(4);
    log::info!("greedy merge over {} records", ensemble.len());
    let result = greedy_blocks(&ensemble, &config)?;
    let best = result.trace.best_entry();

    let mut w = ctx.create("blocks.txt")?;
    formats::write_blocks(ensemble.fingerprint(), &result.blocks, best.mean_rmi, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("rmi_curve.csv")?;
    formats::write_rmi_curve_csv(&result.trace, &mut w)?;
    w.flush()?;

    println!("blocks: q = {}, mean RMI = {:.6}", best.q, best.mean_rmi);
    let mut report = ctx.create("misfits.csv")?;
    writeln!(report, "division,chain,step,logp,k,misfits,misfit_nodes")?;
    // The first distinct division is the best-of record.
    for (rank, rec) in ensemble.top_distinct(top.max(1)).into_iter().enumerate() {
        let d = describe_division(&rec.partition, &result.blocks)?;
        let names: Vec<&str> = d.misfits.iter().map(|&v| graph.label(v)).collect();
        writeln!(
            report,
            "top{},{},{},{},{},{},{}",
            rank + 1,
            rec.chain,
            rec.step,
            rec.log_posterior,
            rec.partition.community_count(),
            d.misfits.len(),
            names.join(" ")
        )?;
        println!(
            "top{}: k = {}, log posterior {:.4}, misfits {}",
            rank + 1,
            rec.partition.community_count(),
            rec.log_posterior,
            d.misfits.len()
        );
    }
    report.flush()?;
    if args.svg {
        fs::write(ctx.path("rmi_curve.svg"), svg::rmi_curve(&result.trace))?;
    }
    println!("wrote {}", ctx.path("blocks.txt").display());
    Ok(())
}
