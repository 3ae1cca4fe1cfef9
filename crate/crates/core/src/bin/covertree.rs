use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use covertree::approx::approx_knn;
use covertree::construct::{build, construction_iteration_bound_check, RootChoice};
use covertree::datagen::{generate, Family};
use covertree::diagnostics::{cm_upper_estimate, expansion_constant, stats_report, CmEstimateParams};
use covertree::metric::knn_bruteforce;
use covertree::persist::{tree_from_json, tree_to_json};
use covertree::search::{check_query_trace, knn_search, QueryTrace};
use covertree::{
    debug_asserts_enabled, Dataset, Error, MetricKind, MetricSession, PointId,
};

#[derive(Parser)]
#[command(
    name = "covertree",
    about = "Compressed cover trees: exact and approximate k-NN with complexity diagnostics",
    version
)]
struct Cli {
    /// Pretty-print JSON outputs
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tree from a CSV point file and write it as JSON
    Build(BuildArgs),
    /// Run k-NN queries against a stored tree
    Query(QueryArgs),
    /// Check the root/cover/separation conditions of a stored tree
    Validate(ValidateArgs),
    /// Dataset and tree diagnostics (expansion constants, height, widths)
    Stats(StatsArgs),
    /// Build/query scaling sweeps over synthetic dataset families
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// CSV file with one point per row
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "euclidean")]
    metric: String,
    /// Root selection: `first`, `random`, or an explicit point index
    #[arg(long, default_value = "first")]
    root: String,
    /// Seed for `--root random`
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Also write the per-insertion descent trace
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    tree: PathBuf,
    /// CSV file the tree was built from
    #[arg(long)]
    points: PathBuf,
    /// CSV file of query points
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "euclidean")]
    metric: String,
    /// Switch to (1+epsilon)-approximate search
    #[arg(long)]
    epsilon: Option<f64>,
    /// Write results here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write per-query descent traces
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value = "euclidean")]
    metric: String,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "euclidean")]
    metric: String,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also run the grid-extension estimator for the minimized expansion
    /// constant
    #[arg(long)]
    cm_estimate: bool,
    /// Base scale for the estimator (default: 0.4 * diameter)
    #[arg(long)]
    xi: Option<f64>,
    /// Comma-separated decreasing grid steps (default: xi/16, xi/32)
    #[arg(long)]
    deltas: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated dataset sizes
    #[arg(long, default_value = "256,512,1024")]
    sizes: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "uniform")]
    family: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Queries per size, drawn from the same family
    #[arg(long, default_value_t = 50)]
    queries: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct QueryResult {
    query: usize,
    ids: Vec<PointId>,
    distances: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_path: Option<bool>,
}

#[derive(Serialize)]
struct BenchRow {
    size: usize,
    dim: usize,
    family: String,
    build_evals: u64,
    build_ms: f64,
    max_insertion_iterations: usize,
    construction_bound: f64,
    height: usize,
    mean_query_evals: f64,
    max_query_iterations: usize,
    mean_query_ms: f64,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err);
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn to_json<T: Serialize>(value: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value).expect("serializable")
    } else {
        serde_json::to_string(value).expect("serializable")
    }
}

fn emit(path: Option<&PathBuf>, payload: &str) -> covertree::Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{}\n", payload)).map_err(Error::from),
        None => {
            println!("{}", payload);
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> covertree::Result<ExitCode> {
    match &cli.command {
        Command::Build(args) => cmd_build(args, cli.pretty),
        Command::Query(args) => cmd_query(args, cli.pretty),
        Command::Validate(args) => cmd_validate(args, cli.pretty),
        Command::Stats(args) => cmd_stats(args, cli.pretty),
        Command::Bench(args) => cmd_bench(args, cli.pretty),
    }
}

fn cmd_build(args: &BuildArgs, pretty: bool) -> covertree::Result<ExitCode> {
    let metric: MetricKind = args.metric.parse()?;
    let data = Dataset::load_csv(&args.input)?;
    let root = match args.root.as_str() {
        "first" => RootChoice::First,
        "random" => RootChoice::Random(args.seed),
        idx => RootChoice::Index(PointId(idx.parse().map_err(|_| {
            Error::Parameter(format!(
                "--root must be `first`, `random` or a point index, got `{}`",
                idx
            ))
        })?)),
    };
    let mut session = MetricSession::new(&data, &metric);
    let (tree, trace) = build(&mut session, root)?;
    fs::write(&args.output, format!("{}\n", tree_to_json(&tree)))?;
    if let Some(path) = &args.trace {
        fs::write(path, format!("{}\n", to_json(&trace, pretty)))?;
    }
    eprintln!(
        "built tree over {} points (root {}, levels [{}, {}], {} distance evaluations)",
        tree.len(),
        tree.root(),
        tree.l_min(),
        tree.l_max(),
        trace.distance_evals
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_query(args: &QueryArgs, pretty: bool) -> covertree::Result<ExitCode> {
    let metric: MetricKind = args.metric.parse()?;
    let data = Dataset::load_csv(&args.points)?;
    let queries = Dataset::load_csv(&args.queries)?;
    let tree = tree_from_json(&fs::read_to_string(&args.tree)?)?;
    if queries.dim() != data.dim() {
        return Err(Error::Parameter(format!(
            "queries have dimension {}, points {}",
            queries.dim(),
            data.dim()
        )));
    }
    let mut session = MetricSession::new(&data, &metric);
    let audit = debug_asserts_enabled();
    let audit_c = audit.then(|| expansion_constant(&mut session).c);

    let mut results = Vec::with_capacity(queries.len());
    let mut traces: Vec<QueryTrace> = Vec::new();
    let mut audit_failures = 0usize;
    for qid in queries.ids() {
        let q = queries.point(qid);
        let (result, trace) = match args.epsilon {
            Some(eps) => {
                let (ans, trace) = approx_knn(&tree, &mut session, q, args.k, eps)?;
                (
                    QueryResult {
                        query: qid.index(),
                        ids: ans.answer.ids,
                        distances: ans.answer.distances,
                        epsilon: Some(eps),
                        exact_path: Some(ans.exact_path),
                    },
                    trace,
                )
            }
            None => {
                let (ans, trace) = knn_search(&tree, &mut session, q, args.k)?;
                (
                    QueryResult {
                        query: qid.index(),
                        ids: ans.ids,
                        distances: ans.distances,
                        epsilon: None,
                        exact_path: None,
                    },
                    trace,
                )
            }
        };
        if let Some(c) = audit_c {
            if args.epsilon.is_none() {
                let oracle = knn_bruteforce(&mut session, q, args.k)?;
                let d_k = *oracle.distances.last().unwrap();
                for problem in check_query_trace(&trace, d_k, c) {
                    eprintln!("audit: query {}: {}", qid.index(), problem);
                    audit_failures += 1;
                }
                if result.ids != oracle.ids {
                    eprintln!("audit: query {}: answer differs from brute force", qid.index());
                    audit_failures += 1;
                }
            }
        }
        if args.trace.is_some() {
            traces.push(trace);
        }
        results.push(result);
    }
    emit(args.output.as_ref(), &to_json(&results, pretty))?;
    if let Some(path) = &args.trace {
        fs::write(path, format!("{}\n", to_json(&traces, pretty)))?;
    }
    if audit_failures > 0 {
        eprintln!("{} audit failure(s)", audit_failures);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &ValidateArgs, pretty: bool) -> covertree::Result<ExitCode> {
    let metric: MetricKind = args.metric.parse()?;
    let data = Dataset::load_csv(&args.points)?;
    let tree = tree_from_json(&fs::read_to_string(&args.tree)?)?;
    let mut session = MetricSession::new(&data, &metric);
    let report = tree.validate(&mut session)?;
    #[derive(Serialize)]
    struct Out {
        ok: bool,
        violations: Vec<String>,
    }
    let out = Out {
        ok: report.is_ok(),
        violations: report.violations.iter().map(|v| v.to_string()).collect(),
    };
    println!("{}", to_json(&out, pretty));
    Ok(if report.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_stats(args: &StatsArgs, pretty: bool) -> covertree::Result<ExitCode> {
    let metric: MetricKind = args.metric.parse()?;
    let data = Dataset::load_csv(&args.input)?;
    let mut session = MetricSession::new(&data, &metric);
    let (tree, _) = build(&mut session, RootChoice::First)?;

    // probe queries: every data point queried for its neighborhood
    let k = 5.min(data.len());
    let traces: Vec<QueryTrace> = data
        .ids()
        .map(|p| {
            let q = data.point(p).to_vec();
            knn_search(&tree, &mut session, &q, k).map(|(_, t)| t)
        })
        .collect::<covertree::Result<_>>()?;
    let mut report = serde_json::to_value(stats_report(&mut session, &tree, &traces)?)
        .expect("serializable");

    if args.cm_estimate {
        let diam = report
            .get("diameter")
            .and_then(|v| v.as_f64())
            .unwrap_or(1.0);
        let xi = args.xi.unwrap_or(0.4 * diam);
        let deltas = match &args.deltas {
            Some(spec) => spec
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parameter(format!("bad delta `{}`: {}", s, e)))
                })
                .collect::<covertree::Result<Vec<f64>>>()?,
            None => vec![xi / 16.0, xi / 32.0],
        };
        let params = CmEstimateParams {
            xi,
            deltas,
            center_samples: 50,
            seed: 0,
        };
        let estimates = cm_upper_estimate(&data, metric, &params)?;
        report["cm_estimates"] = serde_json::to_value(&estimates).expect("serializable");
    }

    emit(args.output.as_ref(), &to_json(&report, pretty))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &BenchArgs, pretty: bool) -> covertree::Result<ExitCode> {
    let family: Family = args.family.parse()?;
    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parameter(format!("bad size `{}`: {}", s, e)))
        })
        .collect::<covertree::Result<_>>()?;
    let metric = MetricKind::Euclidean;

    let mut rows = Vec::new();
    for &n in &sizes {
        let data = generate(family, n, args.dim, args.seed)?;
        let queries = generate(family, args.queries.max(1), args.dim, args.seed ^ 0x9e3779b9)?;
        let mut session = MetricSession::new(&data, &metric);

        let t0 = Instant::now();
        let (tree, trace) = build(&mut session, RootChoice::First)?;
        let build_ms = t0.elapsed().as_secs_f64() * 1e3;
        let c = expansion_constant(&mut session).c;
        let bound = construction_iteration_bound_check(&trace, c, n);

        session.reset_evals();
        let mut max_iters = 0usize;
        let t1 = Instant::now();
        for qid in queries.ids() {
            let q = queries.point(qid);
            let (_, qt) = knn_search(&tree, &mut session, q, args.k.min(n))?;
            max_iters = max_iters.max(qt.iterations());
        }
        let query_ms = t1.elapsed().as_secs_f64() * 1e3 / queries.len() as f64;

        rows.push(BenchRow {
            size: n,
            dim: args.dim,
            family: args.family.clone(),
            build_evals: trace.distance_evals,
            build_ms,
            max_insertion_iterations: trace
                .insertions
                .iter()
                .map(|t| t.iterations())
                .max()
                .unwrap_or(0),
            construction_bound: bound.bound,
            height: tree.height_set().len(),
            mean_query_evals: session.evals() as f64 / queries.len() as f64,
            max_query_iterations: max_iters,
            mean_query_ms: query_ms,
        });
    }
    emit(args.output.as_ref(), &to_json(&rows, pretty))?;
    Ok(ExitCode::SUCCESS)
}
