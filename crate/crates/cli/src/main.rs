use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sigmasep::citest::{generate_statements, read_statements, write_statements, CiError, StatementOptions};
use sigmasep::discovery::{extended, score_all_features, DiscoveryError, Encoding, FeatureKind, Report, SolveOptions};
use sigmasep::eval::{replicate_plan, roc_pr, run_experiment, EvalError, ExperimentConfig};
use sigmasep::graph::{
    d_separated, reduce, sigma_connecting_walk, sigma_separated, Backend, GraphDocument, GraphError, NamedGraph,
    NodeId, NodeSet, SeparationQuery, SigmaCG,
};
use sigmasep::sim::{random_mscm, sample, Dataset, Mscm, SimError};
use sigmasep::Execution;

#[derive(Parser)]
#[command(name = "sigmasep", version, about = "Sigma-separation, cyclic model simulation and causal discovery")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect, reduce and query graph files.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Draw a random model and sample observational and interventional data.
    Simulate(SimulateArgs),
    /// Turn datasets into weighted independence statements.
    Citest(CitestArgs),
    /// Minimise the loss and report edge confidences as JSON.
    Discover(DiscoverArgs),
    /// Edge confidences as CSV, optionally labelled against a true graph.
    Score(ScoreArgs),
    /// Run a full synthetic benchmark from a config file.
    Evaluate(EvaluateArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Validate a graph file and print a summary.
    Check { file: PathBuf },
    /// Marginalise and condition, printing the resulting graph.
    Reduce {
        file: PathBuf,
        #[arg(long, default_value = "")]
        marginalise: String,
        #[arg(long, default_value = "")]
        condition: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether X and Y are separated given Z.
    Separate {
        file: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "")]
        z: String,
        #[arg(long, value_enum, default_value_t = Mode::Sigma)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = BackendArg::Reduction)]
        backend: BackendArg,
        /// Print a connecting walk when not separated.
        #[arg(long)]
        explain: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sigma,
    D,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Reduction,
    Walk,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Reduction => Backend::Reduction,
            BackendArg::Walk => Backend::Walk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Sigma,
    DCyclic,
    DAcyclic,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Encoding {
        match e {
            EncodingArg::Sigma => Encoding::Sigma,
            EncodingArg::DCyclic => Encoding::DCyclic,
            EncodingArg::DAcyclic => Encoding::DAcyclic,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Samples per regime.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Number of single-target interventional regimes.
    #[arg(long, default_value_t = 0)]
    interventions: usize,
    #[arg(long, env = "MSCM_SEED")]
    seed: u64,
    /// Use this model file instead of drawing one.
    #[arg(long, conflicts_with_all = ["d", "k", "p"])]
    model: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct CitestArgs {
    /// Dataset manifests, or directories written by `simulate`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    #[arg(long)]
    max_cond_size: Option<usize>,
    /// Skip tests involving a target of their own regime.
    #[arg(long)]
    exclude_targets: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    statements: PathBuf,
    #[arg(long, value_enum, default_value_t = EncodingArg::Sigma)]
    encoding: EncodingArg,
    #[arg(long)]
    acyclic: bool,
    #[arg(long, default_value_t = 5)]
    max_nodes: usize,
    #[arg(long, default_value_t = 1_000_000)]
    cap_argmin: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::Reduction)]
    sep_backend: BackendArg,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// List up to this many minimising graphs.
    #[arg(long, default_value_t = 0)]
    show_argmin: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Graph or model file giving true labels.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long, env = "MSCM_SEED")]
    seed: Option<u64>,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

const EXIT_INPUT: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

/// Map the first library error in the chain to an exit code.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<GraphError>() {
            return match e {
                GraphError::Json(_) | GraphError::UnknownName(_) | GraphError::DuplicateNode(_) => EXIT_INPUT,
                _ => EXIT_VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<SimError>() {
            return match e {
                SimError::Io(_) | SimError::Format(_) => EXIT_INPUT,
                SimError::NoConvergence { .. } => EXIT_RUNTIME,
                _ => EXIT_VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<CiError>() {
            return match e {
                CiError::Io(_) | CiError::Format(_) | CiError::UnknownVariable(_) => EXIT_INPUT,
                _ => EXIT_VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<DiscoveryError>() {
            return match e {
                DiscoveryError::BadStatement(_) => EXIT_INPUT,
                DiscoveryError::Infeasible => EXIT_RUNTIME,
                _ => EXIT_VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::Io(_) => EXIT_INPUT,
                EvalError::Config(_) => EXIT_VALIDATION,
            };
        }
        if cause.is::<Usage>() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_RUNTIME
}

/// Invalid flag combination detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        sigmasep::exec::set_threads(t);
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command, exec: Execution) -> Result<()> {
    match cmd {
        Command::Graph(g) => graph(g),
        Command::Simulate(a) => simulate(a, exec),
        Command::Citest(a) => citest(a, exec),
        Command::Discover(a) => discover(a, exec),
        Command::Score(a) => score(a, exec),
        Command::Evaluate(a) => evaluate(a, exec),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<NamedGraph> {
    NamedGraph::from_json(&read(path)?).with_context(|| format!("loading graph {}", path.display()))
}

fn graph(cmd: GraphCommand) -> Result<()> {
    match cmd {
        GraphCommand::Check { file } => {
            let g = load_graph(&file)?;
            let cyclic = if g.graph.is_acyclic() { "acyclic" } else { "cyclic" };
            println!(
                "ok: {} nodes, {} edges, {} sigma classes, {cyclic}",
                g.graph.node_count(),
                g.graph.edge_count(),
                g.graph.classes().len()
            );
        }
        GraphCommand::Reduce { file, marginalise, condition, out } => {
            let g = load_graph(&file)?;
            let m = g.parse_set(&marginalise)?;
            let c = g.parse_set(&condition)?;
            let r = g.with_graph(reduce(&g.graph, m, c)?);
            emit(&out, &(r.to_json() + "\n"))?;
        }
        GraphCommand::Separate { file, x, y, z, mode, backend, explain } => {
            let g = load_graph(&file)?;
            let q = SeparationQuery::new(g.parse_set(&x)?, g.parse_set(&y)?, g.parse_set(&z)?);
            if q.x().is_empty() || q.y().is_empty() {
                return Err(Usage("--x and --y must name at least one node".into()).into());
            }
            if q.x().intersects(q.z()) || q.y().intersects(q.z()) {
                return Err(Usage("--z must be disjoint from --x and --y".into()).into());
            }
            let graph: SigmaCG = match mode {
                Mode::Sigma => g.graph.clone(),
                Mode::D => g.graph.finest_sigma(),
            };
            let sep = match (mode, backend) {
                (Mode::D, BackendArg::Walk) => d_separated(&g.graph, &q)?,
                _ => sigma_separated(&graph, &q, backend.into())?,
            };
            println!("{}", if sep { "separated" } else { "connected" });
            if explain && !sep {
                if let Some(walk) = sigma_connecting_walk(&graph, &q)? {
                    let names: Vec<&str> = walk.iter().map(|&v| g.name(v)).collect();
                    println!("walk: {}", names.join(" ~ "));
                }
            }
        }
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<Mscm> {
    Mscm::from_json(&read(path)?).with_context(|| format!("loading model {}", path.display()))
}

fn simulate(a: SimulateArgs, exec: Execution) -> Result<()> {
    let plan_d = match &a.model {
        Some(p) => load_model(p)?.d(),
        None => a.d,
    };
    if a.interventions > plan_d {
        return Err(Usage(format!("{} interventions exceed {plan_d} nodes", a.interventions)).into());
    }
    let plan = replicate_plan(a.seed, 0, plan_d, a.interventions);
    let model = match &a.model {
        Some(p) => load_model(p)?,
        None => random_mscm(a.d, a.k, a.p, plan.model_seed)?,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    fs::write(a.out.join("model.json"), model.to_json() + "\n")?;
    fs::write(a.out.join("graph.json"), NamedGraph::new(model.observed().to_vec(), model.induced_sigma_cg()).to_json() + "\n")?;
    let mut manifests = Vec::new();
    for j in 0..=a.interventions {
        let targets: NodeSet = plan.order[..j].last().map(|&t| NodeSet::singleton(NodeId(t))).unwrap_or_default();
        let m = model.intervene(targets)?;
        let mut ds = sample(&m, a.n, plan.data_seeds[j], exec)?;
        ds.model = Some("model.json".into());
        let stem = format!("regime{j}");
        ds.save(&a.out, &stem)?;
        manifests.push(format!("{stem}.json"));
    }
    let order: Vec<&str> = plan.order[..a.interventions].iter().map(|&t| model.observed()[t].as_str()).collect();
    let index = json!({ "model": "model.json", "graph": "graph.json", "seed": a.seed, "targets": order, "datasets": manifests });
    fs::write(a.out.join("simulation.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    println!("wrote model and {} datasets to {}", manifests.len(), a.out.display());
    Ok(())
}

fn load_datasets(inputs: &[PathBuf]) -> Result<Vec<Dataset>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let index: serde_json::Value = serde_json::from_str(&read(&input.join("simulation.json"))?)
                .with_context(|| format!("parsing {}", input.join("simulation.json").display()))?;
            let list = index["datasets"].as_array().context("simulation.json lists no datasets")?;
            for m in list {
                let name = m.as_str().context("dataset entry is not a string")?;
                out.push(Dataset::load(&input.join(name)).with_context(|| format!("loading {name}"))?);
            }
        } else {
            out.push(Dataset::load(input).with_context(|| format!("loading {}", input.display()))?);
        }
    }
    Ok(out)
}

fn citest(a: CitestArgs, exec: Execution) -> Result<()> {
    let data = load_datasets(&a.inputs)?;
    let opts = StatementOptions { alpha: a.alpha, max_cond_size: a.max_cond_size, exclude_targets: a.exclude_targets };
    let set = generate_statements(&data, &opts, exec)?;
    let mut buf = Vec::new();
    write_statements(&set, &mut buf)?;
    emit(&a.out, std::str::from_utf8(&buf)?)?;
    if a.out.is_some() {
        eprintln!("{} statements over {} regimes", set.statements.len(), data.len());
    }
    Ok(())
}

fn solve_features(
    a: &SolveArgs,
    exec: Execution,
) -> Result<(sigmasep::citest::StatementSet, sigmasep::discovery::SolveResult, Vec<sigmasep::discovery::FeatureConfidence>)> {
    let file = fs::File::open(&a.statements).with_context(|| format!("opening {}", a.statements.display()))?;
    let set = read_statements(file, None).with_context(|| format!("reading {}", a.statements.display()))?;
    let opts = SolveOptions {
        encoding: a.encoding.into(),
        acyclic: a.acyclic,
        max_nodes: a.max_nodes,
        argmin_cap: a.cap_argmin,
        backend: a.sep_backend.into(),
        exec,
        ..SolveOptions::default()
    };
    let (result, features) = score_all_features(&set, &opts)?;
    Ok((set, result, features))
}

fn discover(a: DiscoverArgs, exec: Execution) -> Result<()> {
    let (set, result, features) = solve_features(&a.solve, exec)?;
    let report = Report::new(&set.nodes, a.solve.encoding.into(), &result, &features, a.show_argmin);
    emit(&a.out, &(report.to_json() + "\n"))
}

/// Labels from a graph document or a model file.
fn load_truth(path: &Path) -> Result<NamedGraph> {
    let text = read(path)?;
    if serde_json::from_str::<GraphDocument>(&text).is_ok() {
        return load_graph(path);
    }
    let m = load_model(path)?;
    Ok(NamedGraph::new(m.observed().to_vec(), m.induced_sigma_cg()))
}

fn score(a: ScoreArgs, exec: Execution) -> Result<()> {
    let (set, _, features) = solve_features(&a.solve, exec)?;
    let truth = a.truth.as_deref().map(load_truth).transpose()?;
    let mut text = String::from(if truth.is_some() { "kind,from,to,score,label\n" } else { "kind,from,to,score\n" });
    let mut by_kind: [(Vec<f64>, Vec<bool>); 2] = Default::default();
    for fc in &features {
        let f = fc.feature;
        let (from, to) = (&set.nodes[f.from.0], &set.nodes[f.to.0]);
        text += &format!("{},{from},{to},{}", f.kind, extended::format(fc.score));
        if let Some(t) = &truth {
            let (u, v) = (t.id(from)?, t.id(to)?);
            let label = match f.kind {
                FeatureKind::Directed => t.graph.has_directed(u, v),
                FeatureKind::Bidirected => t.graph.has_bidirected(u, v),
            };
            text += &format!(",{}", label as u8);
            let slot = &mut by_kind[(f.kind == FeatureKind::Bidirected) as usize];
            slot.0.push(fc.score);
            slot.1.push(label);
        }
        text.push('\n');
    }
    emit(&a.out, &text)?;
    if truth.is_some() {
        for (kind, (s, l)) in ["directed", "bidirected"].iter().zip(&by_kind) {
            match roc_pr(s, l) {
                Ok(c) => eprintln!("{kind}: auc {:.4}, ap {:.4}", c.auc, c.average_precision),
                Err(e) => eprintln!("{kind}: {e}"),
            }
        }
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs, exec: Execution) -> Result<()> {
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&read(&a.config)?).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let result = run_experiment(&cfg, exec)?;
    if result.replicates.is_empty() {
        bail!("every replicate failed");
    }
    result.write(&a.out)?;
    let summary = result.summary();
    println!("{:<10} {:>4} {:<10} {:>8} {:>8}", "encoding", "int", "kind", "auc", "ap");
    for c in &summary.cells {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        println!("{:<10} {:>4} {:<10} {:>8} {:>8}", c.encoding.to_string(), c.interventions, c.kind.to_string(), f(c.mean_auc), f(c.mean_ap));
    }
    if !summary.skipped.is_empty() {
        eprintln!("{} replicates skipped", summary.skipped.len());
    }
    Ok(())
}
