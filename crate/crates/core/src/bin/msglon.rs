use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use msglon::analysis::PerformanceRecord;
use msglon::bench::{Algorithm, BenchProtocol, ErrorNorm};
use msglon::error::Error;
use msglon::gd::{BasinRaster, GdConfig};
use msglon::io::{self, Corpus, Manifest};
use msglon::lon::{Lon, LonFeatures};
use msglon::msg::{default_components, ArchetypeKind, MsgInstance};
use msglon::novelty::{ns_run, NsConfig, SearchMode};
use msglon::pipeline::{self, GenerateParams, LonParams};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "msglon", version, about = "MSG landscapes and their local optima networks")]
struct Cli {
    /// TOML file with a table per subcommand; keys are flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base directory for relative output paths.
    #[arg(long, global = true, env = "MSGLON_OUTPUT_ROOT", default_value = ".")]
    output_root: PathBuf,
    /// Emit log records as JSON lines.
    #[arg(long, global = true)]
    log_json: bool,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one instance, or a corpus directory with --count.
    Generate(GenerateArgs),
    /// Build LONs and their features for an instance or a corpus.
    Lon(LonArgs),
    /// Compare analytic basins with gradient ascent on random instances.
    ValidateBoa(BoaArgs),
    /// Evolve an instance corpus by novelty search or random sampling.
    Ns(NsArgs),
    /// Run DE and/or CMA-ES trials on every corpus instance.
    Bench(BenchArgs),
    /// Coverage, correlations, dataset and heat map.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Components (default 50 d).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    archetype: Option<ArchetypeKind>,
    /// Write a corpus of this many instances instead of a single file.
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GraphKind {
    Full,
    Monotonic,
    Funnel,
}

impl GraphKind {
    fn select(self, lon: Lon) -> Lon {
        match self {
            GraphKind::Full => lon,
            GraphKind::Monotonic => lon.monotonic(),
            GraphKind::Funnel => lon.monotonic().funnel(),
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["instance", "corpus"])))]
struct LonArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Escape samples per optimum (default 500 d).
    #[arg(long)]
    samples: Option<usize>,
    /// Escape radius (default (1/m)^(1/d)).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which graph to serialize.
    #[arg(long, value_enum, default_value = "monotonic")]
    graph: GraphKind,
    /// Also write every corpus LON to `lons/<id>.json`.
    #[arg(long)]
    graphs: bool,
    #[arg(long, default_value = "lon")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct BoaArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 10)]
    count: u64,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 5000)]
    starts_per_dim: usize,
    #[arg(long, default_value_t = 1e-3)]
    proximity_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side length of a basin-disagreement raster of instance 0 (d = 2 only).
    #[arg(long)]
    raster: Option<usize>,
    #[arg(long, default_value = "validate-boa")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct NsArgs {
    #[arg(long, default_value = "ns-plus")]
    mode: SearchMode,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    alpha_w: Option<f64>,
    #[arg(long)]
    alpha_sigma: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "ns")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// de, cmaes or all.
    #[arg(long, default_value = "all")]
    algorithm: String,
    #[arg(long, default_value_t = 31)]
    trials: usize,
    #[arg(long, default_value_t = 1000)]
    budget_per_dim: usize,
    #[arg(long, default_value_t = 1e-2)]
    success_tol: f64,
    #[arg(long, default_value = "euclidean")]
    error_norm: ErrorNorm,
    #[arg(long, default_value_t = 1e-11)]
    conv_tol_x: f64,
    #[arg(long, default_value_t = 1e-11)]
    conv_tol_f: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write one row per trial.
    #[arg(long)]
    trial_detail: bool,
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["corpus", "features"])))]
struct AnalyzeArgs {
    /// Corpus directory containing corpus.csv.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Feature CSV written by `lon`.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    performance: Option<PathBuf>,
    /// Write the per-cell median success heat map.
    #[arg(long)]
    heatmap: bool,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let (cli, effective) = match parse(&argv) {
        Ok(v) => v,
        Err(Failure::Usage(e)) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
        Err(Failure::Lib(e)) => return report(e),
    };
    init_logging(cli.log_json, cli.log_level);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match run(&cli, effective) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: Error) -> ExitCode {
    let code = match &e {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(c) if c.is_io_error() => EXIT_IO,
        _ => EXIT_VALIDATION,
    };
    eprintln!("error: {e}");
    ExitCode::from(code)
}

enum Failure {
    Usage(clap::Error),
    Lib(Error),
}

fn command() -> clap::Command {
    Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true))
}

/// Parses argv; values from `--config` are spliced in right after the
/// subcommand name so that flags given on the command line override them.
fn parse(argv: &[String]) -> Result<(Cli, Vec<String>), Failure> {
    let matches = command().try_get_matches_from(argv).map_err(Failure::Usage)?;
    let cli = Cli::from_arg_matches(&matches).map_err(Failure::Usage)?;
    let Some(path) = &cli.config else {
        return Ok((cli, argv.to_vec()));
    };
    let sub = matches.subcommand_name().expect("subcommand is required");
    let text = io::read_string(path).map_err(Failure::Lib)?;
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| Failure::Lib(Error::Invalid { what: "config file", reason: e.to_string() }))?;
    let mut injected = Vec::new();
    for (key, value) in &table {
        if key == sub {
            let Some(section) = value.as_table() else {
                return Err(Failure::Lib(Error::Invalid {
                    what: "config file",
                    reason: format!("[{key}] must be a table"),
                }));
            };
            for (k, v) in section {
                push_flag(&mut injected, k, v).map_err(Failure::Lib)?;
            }
        } else if !value.is_table() {
            push_flag(&mut injected, key, value).map_err(Failure::Lib)?;
        }
    }
    let pos = argv.iter().position(|a| a == sub).expect("subcommand present in argv");
    let mut merged = argv[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&argv[pos + 1..]);
    let matches = command().try_get_matches_from(&merged).map_err(Failure::Usage)?;
    let cli = Cli::from_arg_matches(&matches).map_err(Failure::Usage)?;
    Ok((cli, merged))
}

fn push_flag(out: &mut Vec<String>, key: &str, value: &toml::Value) -> msglon::error::Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        toml::Value::Boolean(true) => out.push(flag),
        toml::Value::Boolean(false) => {}
        toml::Value::String(s) => out.extend([flag, s.clone()]),
        toml::Value::Integer(i) => out.extend([flag, i.to_string()]),
        toml::Value::Float(f) => out.extend([flag, f.to_string()]),
        other => {
            return Err(Error::Invalid {
                what: "config file",
                reason: format!("unsupported value for {key}: {other}"),
            })
        }
    }
    Ok(())
}

fn init_logging(json: bool, level: log::LevelFilter) {
    use std::io::Write;
    let mut b = env_logger::Builder::new();
    b.filter_level(level).parse_default_env();
    if json {
        b.format(|buf, rec| {
            let line = serde_json::json!({
                "level": rec.level().as_str(),
                "target": rec.target(),
                "message": rec.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = b.try_init();
}

fn resolve(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

fn manifest(
    dir: &Path,
    command: &str,
    args: &[String],
    config: &impl Serialize,
    outputs: &[PathBuf],
) -> msglon::error::Result<()> {
    let mut m = Manifest::new(command, args.to_vec(), config)?;
    m.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    m.write(&dir.join(io::MANIFEST_JSON))
}

fn run(cli: &Cli, args: Vec<String>) -> msglon::error::Result<()> {
    let root = &cli.output_root;
    match &cli.command {
        Command::Generate(a) => {
            let params = GenerateParams {
                d: a.d,
                m: a.m,
                seed: a.seed,
                archetype: a.archetype,
            };
            match a.count {
                None => {
                    let default = PathBuf::from(format!("instance-{}.json", a.seed));
                    let out = resolve(root, a.out.as_ref().unwrap_or(&default));
                    io::write_instance(&out, &params.instance()?)?;
                    log::info!("wrote {}", out.display());
                }
                Some(n) => {
                    let default = PathBuf::from(format!("corpus-{}", a.seed));
                    let dir = resolve(root, a.out.as_ref().unwrap_or(&default));
                    let files = pipeline::generate_corpus(&dir, &params, n)?;
                    manifest(&dir, "generate", &args, a, &files)?;
                    log::info!("wrote {n} instances to {}", dir.display());
                }
            }
        }
        Command::Lon(a) => {
            let dir = resolve(root, &a.out);
            let params = LonParams {
                samples: a.samples,
                radius: a.radius,
                seed: a.seed,
            };
            let mut outputs = Vec::new();
            let features = dir.join("features.csv");
            if let Some(path) = &a.instance {
                let inst = io::read_instance(path)?;
                let lon = Lon::build(&inst, &params.config(&inst, a.seed));
                let f = LonFeatures::compute(&lon);
                let graph = a.graph.select(lon);
                let p = dir.join("lon.json");
                io::write_atomic(&p, graph.to_json()?.as_bytes())?;
                outputs.push(p);
                io::write_corpus_csv(&features, &[pipeline::corpus_record(0, &inst, &f)])?;
            } else if let Some(c) = &a.corpus {
                let corpus = Corpus::open(c)?;
                let rows = pipeline::corpus_features(&corpus, &params)?;
                io::write_corpus_csv(&features, &rows)?;
                if a.graphs {
                    for id in corpus.ids() {
                        let inst = corpus.instance(id)?;
                        let lon = Lon::build(&inst, &params.config(&inst, params.instance_seed(id)));
                        let graph = a.graph.select(lon);
                        let p = dir.join("lons").join(io::instance_file_name(id));
                        io::write_atomic(&p, graph.to_json()?.as_bytes())?;
                        outputs.push(p);
                    }
                }
            }
            outputs.push(features);
            manifest(&dir, "lon", &args, a, &outputs)?;
        }
        Command::ValidateBoa(a) => {
            let dir = resolve(root, &a.out);
            let m = a.m.unwrap_or_else(|| default_components(a.d));
            let gd = GdConfig {
                eta: a.eta,
                max_steps: a.steps,
                starts_per_dim: a.starts_per_dim,
                proximity_tolerance: a.proximity_tol,
                ..GdConfig::default()
            };
            let rows = pipeline::validate_boa(a.d, m, a.count, a.seed, &gd)?;
            let csv = dir.join("difference_rates.csv");
            io::write_csv_file(&csv, &pipeline::BOA_HEADER, &rows)?;
            let mut rates: Vec<f64> = rows.iter().map(|r| r.difference_rate).collect();
            let median = msglon::analysis::median(&mut rates);
            let summary = dir.join("summary.json");
            io::write_atomic(
                &summary,
                serde_json::to_string_pretty(&serde_json::json!({
                    "d": a.d, "m": m, "instances": rows.len(), "median_difference_rate": median,
                }))?
                .as_bytes(),
            )?;
            println!("median difference rate: {}", median.map_or("n/a".into(), |v| format!("{v:.6}")));
            let mut outputs = vec![csv, summary];
            if let Some(res) = a.raster {
                let inst = MsgInstance::random(a.d, m, pipeline::boa_instance_seed(a.seed, 0))?;
                let raster = BasinRaster::compute(&inst, &gd, res)?;
                let p = dir.join("raster.pgm");
                io::write_atomic(&p, &raster.to_pgm())?;
                outputs.push(p);
            }
            manifest(&dir, "validate-boa", &args, a, &outputs)?;
        }
        Command::Ns(a) => {
            let dir = resolve(root, &a.out);
            let mut cfg = NsConfig::new(a.d, a.mode, a.seed);
            if let Some(m) = a.m {
                cfg.m = m;
                cfg.lon_radius = msglon::msg::reference_radius(a.d, m);
            }
            let set = |slot: &mut usize, v: Option<usize>| {
                if let Some(v) = v {
                    *slot = v
                }
            };
            set(&mut cfg.mu, a.mu);
            set(&mut cfg.lambda, a.lambda);
            set(&mut cfg.t_max, a.t_max);
            set(&mut cfg.k, a.k);
            set(&mut cfg.lon_samples, a.samples);
            if let Some(v) = a.rho_min {
                cfg.rho_min_init = v;
            }
            if let Some(v) = a.alpha_w {
                cfg.alpha_w = v;
            }
            if let Some(v) = a.alpha_sigma {
                cfg.alpha_sigma = v;
            }
            if let Some(v) = a.radius {
                cfg.lon_radius = v;
            }
            let run = ns_run(&cfg)?;
            io::write_run(&dir, &run)?;
            let coverage = pipeline::coverage_reports(&io::run_records(&run));
            if let Some(c) = coverage.first() {
                println!("solutions: {}  coverage: {:.4}", run.solutions.len(), c.coverage);
            }
            manifest(
                &dir,
                "ns",
                &args,
                &cfg,
                &[dir.join(io::RUN_JSON), dir.join(io::CORPUS_CSV)],
            )?;
        }
        Command::Bench(a) => {
            let dir = resolve(root, &a.out);
            let algorithms: Vec<Algorithm> = if a.algorithm == "all" {
                Algorithm::ALL.to_vec()
            } else {
                vec![a.algorithm.parse().map_err(|r| Error::Invalid { what: "algorithm", reason: r })?]
            };
            let protocol = BenchProtocol {
                trials: a.trials,
                budget_per_dim: a.budget_per_dim,
                success_tol: a.success_tol,
                error_norm: a.error_norm,
                conv_tol_x: a.conv_tol_x,
                conv_tol_f: a.conv_tol_f,
                seed: a.seed,
            };
            let corpus = Corpus::open(&a.corpus)?;
            let (perf, trials) = pipeline::bench_corpus(&corpus, &algorithms, &protocol)?;
            let p = dir.join("performance.csv");
            io::write_performance_csv(&p, &perf)?;
            let mut outputs = vec![p];
            if a.trial_detail {
                let p = dir.join("trials.csv");
                io::write_csv_file(&p, &pipeline::TRIAL_HEADER, &trials)?;
                outputs.push(p);
            }
            manifest(&dir, "bench", &args, a, &outputs)?;
        }
        Command::Analyze(a) => {
            let dir = resolve(root, &a.out);
            let features = match (&a.features, &a.corpus) {
                (Some(f), _) => f.clone(),
                (None, Some(c)) => c.join(io::CORPUS_CSV),
                (None, None) => unreachable!("clap enforces the input group"),
            };
            let records = io::read_corpus_csv(&features)?;
            let perf: Option<Vec<PerformanceRecord>> =
                a.performance.as_deref().map(io::read_performance_csv).transpose()?;
            let outputs = pipeline::write_analysis(&dir, &records, perf.as_deref(), a.heatmap)?;
            for c in pipeline::coverage_reports(&records) {
                println!("d={} m={} instances={} coverage={:.4}", c.d, c.m, c.instances, c.coverage);
            }
            manifest(&dir, "analyze", &args, a, &outputs)?;
        }
    }
    Ok(())
}
