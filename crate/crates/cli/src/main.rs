use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use divlsh::bounds::{envelope, kappa};
use divlsh::divergence::mil_columns;
use divlsh::index::{sweep, write_records};
use divlsh::krein::{approx_mil_embedded, select_params, EmbeddingCache};
use divlsh::prob::{dirichlet_dataset, dirichlet_joint, load_csv, load_joint_csv, write_csv, write_joint_csv};
use divlsh::{persist, AnnIndex, Dataset, DivergenceKind, IndexConfig, Point, SchemeRegistry};

/// Locality-sensitive hashing for information-theoretic divergences.
#[derive(Debug, Parser)]
#[command(name = "divlsh", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a synthetic Dirichlet dataset as CSV.
    Gen(GenArgs),
    /// Pairwise divergences of a dataset.
    Div(DivArgs),
    /// Ratio envelope curves (lambda, L, U) and kappa traces.
    Bounds(BoundsArgs),
    /// Build an index and save it.
    Index(IndexArgs),
    /// Query a saved index, or one built on the fly.
    Query(QueryArgs),
    /// Precision and speed-up over a parameter grid.
    Bench(BenchArgs),
    /// Compare Krein-approximated MIL with the exact value on every feature pair.
    KreinCheck(KreinCheckArgs),
    /// List registered index schemes.
    Schemes,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Dirichlet concentration.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Dimension of each distribution.
    #[arg(long, default_value_t = 32)]
    d: usize,
    /// Number of points (features, with --labels).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Emit a joint table with this many labels instead of independent vectors.
    #[arg(long)]
    labels: Option<usize>,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Distributions, one per row.
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Joint table: first row feature ids, first column label ids.
    #[arg(long, group = "source")]
    joint: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> anyhow::Result<Dataset> {
        if let Some(p) = &self.input {
            let v = load_csv(p, b',').with_context(|| format!("reading {}", p.display()))?;
            return Ok(Dataset::Vectors(v));
        }
        let p = self.joint.as_ref().expect("clap enforces one source");
        let j = load_joint_csv(p).with_context(|| format!("reading {}", p.display()))?;
        Ok(Dataset::Joint(j))
    }
}

#[derive(Debug, Args)]
struct DivArgs {
    #[command(flatten)]
    source: Source,
    /// kl, js, gjs, hellinger, triangular or mil.
    #[arg(long, default_value = "js")]
    kind: String,
    /// GJS weight (gjs only).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Lambda values for the envelope CSV; default 0.01..0.99 in steps of 0.01.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Lambda values to trace kappa for.
    #[arg(long, value_delimiter = ',')]
    trace: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    t_min: f64,
    #[arg(long, default_value_t = 1e3)]
    t_max: f64,
    /// Log-spaced points in [t-min, t-max].
    #[arg(long, default_value_t = 201)]
    t_points: usize,
    /// Envelope CSV (lambda,L,U,argmax_t); stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Trace CSV (lambda,t,kappa); required with --trace.
    #[arg(long)]
    trace_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Build {
    /// Index scheme; see `divlsh schemes`.
    #[arg(long, default_value = "gjs-hellinger")]
    scheme: String,
    /// GJS weight; gjs-hellinger only, default 0.5.
    #[arg(long)]
    lambda: Option<f64>,
    /// Hashes per table.
    #[arg(long = "K", default_value_t = 3)]
    k_hashes: usize,
    /// Number of tables.
    #[arg(long = "L", default_value_t = 20)]
    l_tables: usize,
    /// Bucket width for L2 schemes.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Neighbors per query.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// MIL approximation budget (krein-mil).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Padding bound (krein-mil); dataset maximum if absent.
    #[arg(long = "M")]
    bound: Option<f64>,
    /// min-divergence or max-inner-product (krein-mil).
    #[arg(long, default_value = "min-divergence")]
    direction: String,
}

impl Build {
    fn config(&self, seed: u64) -> anyhow::Result<IndexConfig> {
        if !SchemeRegistry::default().contains(&self.scheme) {
            return Err(usage(format!("unknown scheme {:?}; see `divlsh schemes`", self.scheme)));
        }
        let lambda = match (self.scheme.as_str(), self.lambda) {
            ("gjs-hellinger", l) => Some(l.unwrap_or(0.5)),
            (_, Some(_)) => return Err(usage("--lambda only applies to --scheme gjs-hellinger")),
            (_, None) => None,
        };
        let cfg = IndexConfig {
            scheme: self.scheme.clone(),
            lambda,
            hashes_per_table: self.k_hashes,
            tables: self.l_tables,
            bucket_width: self.r,
            epsilon: self.epsilon,
            bound: self.bound,
            direction: self.direction.parse()?,
            seed,
            neighbors: self.k,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    build: Build,
    /// Index file to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Saved index; otherwise one is built from --input/--joint.
    #[arg(long, conflicts_with_all = ["input", "joint"])]
    index: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    joint: Option<PathBuf>,
    #[command(flatten)]
    build: Build,
    /// Query CSV in the dataset's format; every dataset point if absent.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Results CSV (query,rank,id,divergence); stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Query CSV; without it queries are generated (vectors) or taken from the dataset (joint).
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value = "gjs-hellinger")]
    scheme: String,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated hashes-per-table values.
    #[arg(long = "K", value_delimiter = ',', default_value = "3,4,5")]
    k_hashes: Vec<usize>,
    /// Comma-separated table counts.
    #[arg(long = "L", value_delimiter = ',', default_value = "10,20,40")]
    l_tables: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long = "M")]
    bound: Option<f64>,
    #[arg(long, default_value = "min-divergence")]
    direction: String,
    /// Comma-separated seeds; defaults to --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Synthetic data when neither --input nor --joint is given.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    /// Generated queries when --queries is absent.
    #[arg(long, default_value_t = 50)]
    num_queries: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KreinCheckArgs {
    #[arg(long)]
    joint: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// A mistake in how the command was invoked, as opposed to bad data.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn sink(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_gen(a: &GenArgs, seed: u64) -> anyhow::Result<()> {
    let out = sink(&a.output)?;
    match a.labels {
        Some(c) => write_joint_csv(out, &dirichlet_joint(a.alpha, c, a.n, seed)?)?,
        None => write_csv(out, &dirichlet_dataset(a.alpha, a.d, a.n, seed)?)?,
    }
    Ok(())
}

fn cmd_div(a: &DivArgs) -> anyhow::Result<()> {
    let kind = DivergenceKind::from_name(&a.kind, a.lambda)?;
    let data = a.source.load()?;
    let mut w = csv::Writer::from_writer(sink(&a.output)?);
    w.write_record(["i", "j", "value"])?;
    match &data {
        Dataset::Vectors(v) => {
            if kind == DivergenceKind::Mil {
                return Err(usage("--kind mil needs --joint"));
            }
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    let d = kind.evaluate(&v[i], &v[j])?;
                    w.write_record([i.to_string(), j.to_string(), format!("{d:?}")])?;
                }
            }
        }
        Dataset::Joint(joint) => {
            if kind != DivergenceKind::Mil {
                return Err(usage("--joint only supports --kind mil"));
            }
            let cols = joint.columns();
            let ids = joint.features();
            for i in 0..cols.len() {
                for j in i + 1..cols.len() {
                    let d = mil_columns(&cols[i], &cols[j])?;
                    w.write_record([ids[i].clone(), ids[j].clone(), format!("{d:?}")])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_bounds(a: &BoundsArgs) -> anyhow::Result<()> {
    let lambdas: Vec<f64> = if a.lambda.is_empty() {
        (1..100).map(|i| i as f64 / 100.0).collect()
    } else {
        a.lambda.clone()
    };
    let mut w = csv::Writer::from_writer(sink(&a.output)?);
    w.write_record(["lambda", "L", "U", "argmax_t"])?;
    for &l in &lambdas {
        let e = envelope(l)?;
        w.write_record([l, e.lower, e.upper, e.argmax_t].map(|x| format!("{x:?}")))?;
    }
    w.flush()?;
    if a.trace.is_empty() {
        return Ok(());
    }
    let Some(path) = &a.trace_output else {
        return Err(usage("--trace needs --trace-output"));
    };
    if !(a.t_min > 0.0 && a.t_max > a.t_min && a.t_points >= 2) {
        return Err(usage("need 0 < t-min < t-max and t-points >= 2"));
    }
    let (lo, hi) = (a.t_min.ln(), a.t_max.ln());
    let mut w = csv::Writer::from_writer(sink(&Some(path.clone()))?);
    w.write_record(["lambda", "t", "kappa"])?;
    for &l in &a.trace {
        for i in 0..a.t_points {
            let t = (lo + (hi - lo) * i as f64 / (a.t_points - 1) as f64).exp();
            w.write_record([l, t, kappa(l, t)?].map(|x| format!("{x:?}")))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_index(a: &IndexArgs, seed: u64) -> anyhow::Result<()> {
    let cfg = a.build.config(seed)?;
    let index = AnnIndex::build(a.source.load()?, cfg)?;
    persist::save(&a.output, &index).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

fn load_queries(path: &Path, data: &Dataset) -> anyhow::Result<Vec<Point>> {
    Ok(match data {
        Dataset::Vectors(_) => load_csv(path, b',')?.into_iter().map(Point::Vector).collect(),
        Dataset::Joint(_) => load_joint_csv(path)?.columns().into_iter().map(Point::Column).collect(),
    })
}

fn cmd_query(a: &QueryArgs, seed: u64) -> anyhow::Result<()> {
    let index = match &a.index {
        Some(p) => persist::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => {
            let source = Source {
                input: a.input.clone(),
                joint: a.joint.clone(),
            };
            if source.input.is_some() == source.joint.is_some() {
                return Err(usage("give --index, or exactly one of --input and --joint"));
            }
            let cfg = a.build.config(seed)?;
            AnnIndex::build(source.load()?, cfg)?
        }
    };
    let queries = match &a.queries {
        Some(p) => load_queries(p, index.dataset())?,
        None => (0..index.len()).map(|i| index.dataset().point(i)).collect(),
    };
    let k = index.config().neighbors;
    let mut w = csv::Writer::from_writer(sink(&a.output)?);
    w.write_record(["query", "rank", "id", "divergence"])?;
    for (qi, q) in queries.iter().enumerate() {
        let report = index.query(q, k)?;
        for (rank, (id, d)) in report.ids.iter().zip(&report.divergences).enumerate() {
            w.write_record([qi.to_string(), rank.to_string(), id.to_string(), format!("{d:?}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_bench(a: &BenchArgs, seed: u64) -> anyhow::Result<()> {
    let build = Build {
        scheme: a.scheme.clone(),
        lambda: a.lambda,
        k_hashes: a.k_hashes.first().copied().unwrap_or(0),
        l_tables: a.l_tables.first().copied().unwrap_or(0),
        r: a.r,
        k: a.k,
        epsilon: a.epsilon,
        bound: a.bound,
        direction: a.direction.clone(),
    };
    let base = build.config(seed)?;
    let (data, queries) = match (&a.input, &a.joint) {
        (Some(_), Some(_)) => return Err(usage("--input and --joint are exclusive")),
        (Some(p), None) => (Dataset::Vectors(load_csv(p, b',')?), None),
        (None, Some(p)) => (Dataset::Joint(load_joint_csv(p)?), None),
        (None, None) => {
            let data = Dataset::Vectors(dirichlet_dataset(a.alpha, a.d, a.n, seed)?);
            // Queries come from a disjoint seed so none coincide with a data point.
            let q = dirichlet_dataset(a.alpha, a.d, a.num_queries, seed ^ 0x5151_5151_5151_5151)?;
            (data, Some(q.into_iter().map(Point::Vector).collect::<Vec<_>>()))
        }
    };
    let queries = match (&a.queries, queries) {
        (Some(p), _) => load_queries(p, &data)?,
        (None, Some(q)) => q,
        (None, None) => (0..data.len()).map(|i| data.point(i)).collect(),
    };
    let seeds = if a.seeds.is_empty() {
        vec![seed]
    } else {
        a.seeds.clone()
    };
    let records = sweep(&data, &queries, &base, &a.k_hashes, &a.l_tables, &seeds)?;
    write_records(sink(&a.output)?, &records)?;
    Ok(())
}

fn cmd_krein_check(a: &KreinCheckArgs) -> anyhow::Result<()> {
    let joint = load_joint_csv(&a.joint).with_context(|| format!("reading {}", a.joint.display()))?;
    let params = select_params(a.epsilon, joint.num_labels())?;
    let cols = joint.columns();
    let budget = params.mil_error_bound();
    let (delta, j_count) = (params.delta(), params.j_count());
    let cache = EmbeddingCache::new(params, cols.clone());
    // fills every slot in parallel
    cache.max_norm_sq()?;
    let mut worst: f64 = 0.0;
    let mut pairs = 0usize;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let err = (approx_mil_embedded(cache.get(i)?, cache.get(j)?) - mil_columns(&cols[i], &cols[j])?).abs();
            worst = worst.max(err);
            pairs += 1;
        }
    }
    let mut w = csv::Writer::from_writer(sink(&a.output)?);
    w.write_record([
        "epsilon",
        "delta",
        "J",
        "pairs",
        "max_abs_error",
        "budget",
        "within_budget",
    ])?;
    w.write_record([
        format!("{:?}", a.epsilon),
        format!("{delta:?}"),
        j_count.to_string(),
        pairs.to_string(),
        format!("{worst:?}"),
        format!("{budget:?}"),
        (worst <= budget).to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, cli.seed),
        Command::Div(a) => cmd_div(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Index(a) => cmd_index(a, cli.seed),
        Command::Query(a) => cmd_query(a, cli.seed),
        Command::Bench(a) => {
            if a.k_hashes.is_empty() || a.l_tables.is_empty() {
                bail!(usage("--K and --L need at least one value"));
            }
            cmd_bench(a, cli.seed)
        }
        Command::KreinCheck(a) => cmd_krein_check(a),
        Command::Schemes => {
            let mut out = sink(&None)?;
            for (name, description) in SchemeRegistry::default().list() {
                writeln!(out, "{name}\t{description}")?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

/// Parameter problems count as usage errors; everything else is bad data or I/O.
fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    use divlsh::Error as E;
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return (1, "usage");
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidParameter { .. } | E::UnknownScheme(_) | E::SchemeMismatch { .. } => (1, "usage"),
                _ => (2, "data"),
            };
        }
    }
    (2, "data")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            let msg = format!("{err:#}").replace('\n', " ");
            eprintln!("error\t{kind}\t{msg}");
            ExitCode::from(code)
        }
    }
}
