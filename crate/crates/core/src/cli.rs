//! Command line front end: `solve`, `ladder` and `validate`.
//!
//! Settings come from benchmark defaults, then an optional `key = value`
//! config file, then command line flags. Exit codes: 0 success, 1 I/O or
//! other failure, 2 configuration error, 3 failed solve (singular support,
//! inverted material, factorization), 4 no convergence.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    fit_slope, write_csv, BenchConfig, BenchOutcome, Benchmark, CustomProblem, ErrorReport,
};
use crate::error::{NomError, Result};
use crate::multi_index::count_indexes;
use crate::point_cloud::{WeightKind, BOUNDARY_TAG};

#[derive(Debug, Parser)]
#[command(
    name = "nonlocal",
    version,
    about = "Higher-order nonlocal operator method solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configuration and write its report.
    Solve(RunArgs),
    /// Solve a list of orders and resolutions and fit convergence rates.
    Ladder(LadderArgs),
    /// Check a configuration without solving.
    Validate(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Built-in benchmark (ode1d, schrodinger1d, poisson2d-strong, poisson2d..poisson5d, plate, von-karman, neo-hooke-block).
    #[arg(long)]
    pub benchmark: Option<String>,
    /// User problem file instead of a benchmark.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nodes per axis.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Operator order p.
    #[arg(long)]
    pub order: Option<usize>,
    /// Hourglass penalty p_hg.
    #[arg(long)]
    pub phg: Option<f64>,
    /// Weight function: const, invvol or gauss.
    #[arg(long)]
    pub weight: Option<String>,
    /// Support size (default 5p + n_p).
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Absolute Dirichlet penalty factor.
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interior node jitter as a fraction of the spacing.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Newton tolerance on the relative increment.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub load_steps: Option<usize>,
    /// Nodal volumes on lattices: trapezoid or cell.
    #[arg(long)]
    pub volumes: Option<String>,
    /// Output directory for report.csv, fields.txt and convergence.log.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock runtimes in the CSV (breaks byte-identical output).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LadderArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Operator orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub orders: Vec<usize>,
    /// Nodes per axis for each rung, comma separated.
    #[arg(long = "nodes-list", value_delimiter = ',')]
    pub nodes_list: Vec<usize>,
}

/// Process exit status for an error.
pub fn exit_code(err: &NomError) -> i32 {
    match err {
        NomError::Config(_) | NomError::Parse { .. } | NomError::InvalidArgument(_) => 2,
        NomError::SolveFailed(_)
        | NomError::SingularSupport { .. }
        | NomError::InvertedElement { .. } => 3,
        NomError::NoConvergence(_) => 4,
        NomError::Io(_) | NomError::ZeroReference | NomError::DimensionMismatch { .. } => 1,
    }
}

/// What a run solves.
#[derive(Debug, Clone)]
pub enum Target {
    Bench(Benchmark),
    Custom(CustomProblem),
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone)]
pub struct Plan {
    pub target: Target,
    pub config: BenchConfig,
    pub out: Option<PathBuf>,
    pub timings: bool,
    pub orders: Vec<usize>,
    pub nodes_list: Vec<usize>,
}

/// Reads a flat `key = value` file; `#` starts a comment, `-` and `_` are interchangeable in keys.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    if !path.exists() {
        return Err(NomError::Config(format!(
            "config file '{}' does not exist",
            path.display()
        )));
    }
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| NomError::Parse {
            line: idx + 1,
            message: "expected key = value".into(),
        })?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn flag_map(args: &RunArgs) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("benchmark", args.benchmark.clone());
    put(
        "problem",
        args.problem.as_ref().map(|p| p.display().to_string()),
    );
    put("nodes", args.nodes.map(|v| v.to_string()));
    put("order", args.order.map(|v| v.to_string()));
    put("phg", args.phg.map(|v| v.to_string()));
    put("weight", args.weight.clone());
    put("neighbors", args.neighbors.map(|v| v.to_string()));
    put("penalty", args.penalty.map(|v| v.to_string()));
    put("seed", args.seed.map(|v| v.to_string()));
    put("perturb", args.perturb.map(|v| v.to_string()));
    put("tol", args.tol.map(|v| v.to_string()));
    put("max_iter", args.max_iter.map(|v| v.to_string()));
    put("load_steps", args.load_steps.map(|v| v.to_string()));
    put("volumes", args.volumes.clone());
    put("out", args.out.as_ref().map(|p| p.display().to_string()));
    if args.timings {
        put("timings", Some("true".into()));
    }
    m
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| NomError::Config(format!("invalid value '{v}' for {key}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s.trim()))
        .collect()
}

const KNOWN_KEYS: &[&str] = &[
    "benchmark",
    "problem",
    "nodes",
    "order",
    "phg",
    "weight",
    "neighbors",
    "penalty",
    "seed",
    "perturb",
    "tol",
    "max_iter",
    "load_steps",
    "volumes",
    "out",
    "timings",
    "orders",
    "nodes_list",
];

/// Merges config file and flags into a plan.
pub fn resolve(args: &RunArgs, orders: &[usize], nodes_list: &[usize]) -> Result<Plan> {
    let mut map = match &args.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    if let Some(bad) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(NomError::Config(format!("unknown config key '{bad}'")));
    }
    map.extend(flag_map(args));
    if !orders.is_empty() {
        map.insert(
            "orders".into(),
            orders
                .iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    if !nodes_list.is_empty() {
        map.insert(
            "nodes_list".into(),
            nodes_list
                .iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    let target = match (map.get("benchmark"), map.get("problem")) {
        (Some(_), Some(_)) => {
            return Err(NomError::Config(
                "give either a benchmark or a problem file, not both".into(),
            ))
        }
        (Some(b), None) => Target::Bench(b.parse()?),
        (None, Some(p)) => {
            let path = PathBuf::from(p);
            if !path.exists() {
                return Err(NomError::Config(format!(
                    "problem file '{}' does not exist",
                    path.display()
                )));
            }
            Target::Custom(CustomProblem::from_file(&path)?)
        }
        (None, None) => {
            return Err(NomError::Config(
                "no benchmark or problem file given".into(),
            ))
        }
    };
    let mut config = match &target {
        Target::Bench(b) => b.default_config(),
        Target::Custom(p) => BenchConfig {
            order: p.order,
            weight: p.weight,
            neighbors: p.neighbors,
            ..BenchConfig::default()
        },
    };
    for (k, v) in &map {
        match k.as_str() {
            "nodes" => config.nodes = parse_value(k, v)?,
            "order" => config.order = parse_value(k, v)?,
            "phg" => config.phg = parse_value(k, v)?,
            "weight" => config.weight = v.parse::<WeightKind>()?,
            "neighbors" => config.neighbors = Some(parse_value(k, v)?),
            "penalty" => config.penalty = Some(parse_value(k, v)?),
            "seed" => config.seed = parse_value(k, v)?,
            "perturb" => config.perturb = parse_value(k, v)?,
            "tol" => config.tol = parse_value(k, v)?,
            "max_iter" => config.max_iter = parse_value(k, v)?,
            "load_steps" => config.load_steps = parse_value(k, v)?,
            "volumes" => config.volumes = v.parse()?,
            _ => {}
        }
    }
    let timings = match map.get("timings").map(String::as_str) {
        None | Some("false") | Some("0") => false,
        Some("true") | Some("1") => true,
        Some(other) => {
            return Err(NomError::Config(format!(
                "invalid value '{other}' for timings"
            )))
        }
    };
    let orders = match map.get("orders") {
        Some(v) => parse_list("orders", v)?,
        None => vec![config.order],
    };
    let nodes_list = match map.get("nodes_list") {
        Some(v) => parse_list("nodes_list", v)?,
        None => vec![config.nodes],
    };
    if orders.is_empty() || nodes_list.is_empty() {
        return Err(NomError::Config("empty orders or nodes list".into()));
    }
    Ok(Plan {
        target,
        config,
        out: map.get("out").map(PathBuf::from),
        timings,
        orders,
        nodes_list,
    })
}

fn run_target(target: &Target, config: &BenchConfig, timings: bool) -> Result<BenchOutcome> {
    let start = Instant::now();
    let mut outcome = match target {
        Target::Bench(b) => b.run(config)?,
        Target::Custom(p) => p.solve(config)?,
    };
    if timings {
        outcome.report.runtime_s = start.elapsed().as_secs_f64();
    }
    Ok(outcome)
}

fn write_log<W: Write>(mut out: W, outcome: &BenchOutcome) -> Result<()> {
    writeln!(out, "# step iter rel_increment residual_norm")?;
    for s in &outcome.newton_log {
        writeln!(out, "{s}")?;
    }
    for (name, v) in &outcome.quantities {
        writeln!(out, "# {name} {v:.10e}")?;
    }
    for (l, v) in &outcome.load_curve {
        writeln!(out, "# load {l:.4} {v:.10e}")?;
    }
    Ok(())
}

fn solve(plan: &Plan) -> Result<()> {
    let outcome = run_target(&plan.target, &plan.config, plan.timings)?;
    let stdout = std::io::stdout();
    write_csv(stdout.lock(), std::slice::from_ref(&outcome.report))?;
    if let Some(dir) = &plan.out {
        fs::create_dir_all(dir)?;
        write_csv(
            fs::File::create(dir.join("report.csv"))?,
            std::slice::from_ref(&outcome.report),
        )?;
        outcome.write_fields(std::io::BufWriter::new(fs::File::create(
            dir.join("fields.txt"),
        )?))?;
        write_log(fs::File::create(dir.join("convergence.log"))?, &outcome)?;
    }
    Ok(())
}

fn ladder(plan: &Plan) -> Result<()> {
    if matches!(plan.target, Target::Custom(_)) {
        return Err(NomError::Config(
            "ladder runs built-in benchmarks only".into(),
        ));
    }
    let mut reports: Vec<ErrorReport> = Vec::new();
    let mut log = String::new();
    let mut worst: Option<NomError> = None;
    for &order in &plan.orders {
        let mut rung = Vec::new();
        for &nodes in &plan.nodes_list {
            let config = BenchConfig {
                order,
                nodes,
                ..plan.config.clone()
            };
            match run_target(&plan.target, &config, plan.timings) {
                Ok(o) => {
                    log.push_str(&format!("# order {order} nodes {nodes}\n"));
                    for s in &o.newton_log {
                        log.push_str(&format!("{s}\n"));
                    }
                    rung.push(o.report);
                }
                Err(e) => {
                    eprintln!("error: order {order}, nodes {nodes}: {e}");
                    log.push_str(&format!("# order {order} nodes {nodes} failed: {e}\n"));
                    if worst
                        .as_ref()
                        .map_or(true, |w| exit_code(&e) > exit_code(w))
                    {
                        worst = Some(e);
                    }
                }
            }
        }
        let slope = fit_slope(&rung);
        let text = slope.map_or("absent".to_string(), |s| format!("{s:.4}"));
        log.push_str(&format!("# order {order} slope {text}\n"));
        eprintln!("order {order}: fitted rate {text}");
        reports.extend(rung);
    }
    let stdout = std::io::stdout();
    write_csv(stdout.lock(), &reports)?;
    if let Some(dir) = &plan.out {
        fs::create_dir_all(dir)?;
        write_csv(fs::File::create(dir.join("report.csv"))?, &reports)?;
        fs::write(dir.join("convergence.log"), log)?;
    }
    match worst {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn required_tags(bench: &Benchmark) -> Vec<&'static str> {
    match bench {
        Benchmark::NeoHookeBlock => vec!["xmin", "ymin", "zmin", "zmax"],
        _ => vec![BOUNDARY_TAG],
    }
}

/// Dry-run diagnostics; `Err` only for blocking problems.
pub fn validate_plan(plan: &Plan) -> Result<Vec<String>> {
    let mut notes = Vec::new();
    let (cloud, k, np, fields) = match &plan.target {
        Target::Bench(b) => {
            let cfg = &plan.config;
            let k = cfg.neighbor_count(b)?;
            let np = count_indexes(b.dim(), cfg.order)?;
            if k >= np {
                cfg.validate(b)?;
            }
            let domain = match b {
                Benchmark::Schrodinger1d => {
                    crate::point_cloud::BoxDomain::new(vec![-10.0], vec![10.0])
                }
                Benchmark::Plate => {
                    crate::point_cloud::BoxDomain::new(vec![0.0, -0.5], vec![1.0, 0.5])
                }
                Benchmark::NeoHookeBlock => {
                    crate::point_cloud::BoxDomain::new(vec![0.0; 3], vec![50.0; 3])
                }
                _ => crate::point_cloud::BoxDomain::unit(b.dim()),
            };
            let cloud = cfg.grid(&domain)?;
            let all = cloud.all_tags();
            for t in required_tags(b) {
                if !all.contains(t) {
                    return Err(NomError::Config(format!(
                        "boundary tag '{t}' has no points"
                    )));
                }
            }
            let fields = match b {
                Benchmark::VonKarman | Benchmark::NeoHookeBlock => 3,
                _ => 1,
            };
            (cloud, k, np, fields)
        }
        Target::Custom(p) => {
            let cloud = p.load_cloud()?;
            let missing = p.missing_tags(&cloud);
            if !missing.is_empty() {
                return Err(NomError::Config(format!(
                    "no points carry tag(s): {}",
                    missing.join(", ")
                )));
            }
            let k = p.neighbor_count(cloud.dim())?;
            let np = count_indexes(cloud.dim(), p.order)?;
            if k >= cloud.len() {
                return Err(NomError::Config(format!(
                    "{k} neighbors requested from {} points",
                    cloud.len()
                )));
            }
            (cloud, k, np, 1)
        }
    };
    if k < np {
        notes.push(format!(
            "warning: {k} neighbors per support but {np} derivative terms; every support needs n_i >= n_p"
        ));
    }
    let n = cloud.len() as f64;
    let operators = n * (k as f64 + 1.0) * (np as f64 + k as f64) * 8.0;
    let matrix = n * (fields * fields) as f64 * (2.0 * k as f64 + 1.0) * 12.0;
    notes.push(format!(
        "points {} neighbors {k} terms {np} memory estimate {:.1} MiB",
        cloud.len(),
        (operators + matrix) / (1024.0 * 1024.0)
    ));
    Ok(notes)
}

fn validate(plan: &Plan) -> Result<()> {
    let notes = validate_plan(plan)?;
    for n in &notes {
        println!("{n}");
    }
    if !notes.iter().any(|n| n.starts_with("warning")) {
        println!("ok");
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("NOM_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            NomError::Config(format!("NOM_THREADS must be a positive integer, got '{v}'"))
        })?;
        // a pool already built by an earlier call in this process is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(args) => solve(&resolve(args, &[], &[])?),
        Command::Ladder(l) => ladder(&resolve(&l.run, &l.orders, &l.nodes_list)?),
        Command::Validate(args) => validate(&resolve(args, &[], &[])?),
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
