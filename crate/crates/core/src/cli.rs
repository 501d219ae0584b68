//! Command-line front end. [`main_with_args`] returns the process exit code:
//! 0 on success, 1 on runtime failure, 2 on usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{self, report, ExperimentConfig};
use crate::lds::radical_inverse;
use crate::niching::{self, AlgoConfig, Algorithm};
use crate::objective::{peak_registry, FunctionId, ObjectiveSpec, PeakRegistry, Problem, Solution};

pub const SEED_ENV: &str = "NICHE_SEED";

#[derive(Debug, Parser)]
#[command(name = "timpso", version, about = "Multi-swarm PSO niching toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run one algorithm once and print its niche heads.
    Run(RunArgs),
    /// Run a multi-run experiment and write reports.
    Bench(BenchArgs),
    /// Print the known optima of a function.
    Peaks(PeaksArgs),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    algo: Option<String>,
    #[arg(long, conflicts_with = "plugin")]
    function: Option<String>,
    /// Plug-in objective description file.
    #[arg(long)]
    plugin: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<String>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    post_optimize: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// Algorithm the signed-rank marks compare against.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PeaksArgs {
    #[arg(long, conflicts_with = "plugin")]
    function: Option<String>,
    #[arg(long)]
    plugin: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// Distinguishes bad invocations (exit 2) from failures while running (exit 1).
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(msg: impl Into<String>) -> Failure {
    Failure::Runtime(msg.into())
}

/// Parses `args` (including the program name) and executes the subcommand.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = match cli.command {
        Cmd::Run(a) => cmd_run(a, env_seed.as_deref(), out),
        Cmd::Bench(a) => cmd_bench(a, env_seed.as_deref(), out),
        Cmd::Peaks(a) => cmd_peaks(a, out),
        Cmd::Selftest => cmd_selftest(out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(err, "run with --help for usage");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

/// Flat `key = value` file; `#` starts a comment.
fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_key_values(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_key_values(text: &str) -> std::result::Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        map.insert(k.trim().to_ascii_lowercase().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| usage(format!("invalid value '{v}' for '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(usage(format!("invalid boolean '{v}' for '{key}'"))),
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> CliResult<Vec<T>> {
    items
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(Failure::from))
        .collect()
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).collect()
}

/// Applies solver keys of a config file; returns the keys it did not recognise.
fn apply_solver_keys(cfg: &mut AlgoConfig, file: &BTreeMap<String, String>) -> CliResult<Vec<String>> {
    let mut rest = Vec::new();
    for (k, v) in file {
        match k.as_str() {
            "pop" | "population" => cfg.population = parse_value(k, v)?,
            "budget" => cfg.budget = parse_value(k, v)?,
            "seed" => cfg.seed = parse_value(k, v)?,
            "gamma" => cfg.gamma = parse_value(k, v)?,
            "switch_eps" => cfg.switch_eps = parse_value(k, v)?,
            "switch_window" => cfg.switch_window = parse_value(k, v)?,
            "stall_eps" => cfg.stall.eps = parse_value(k, v)?,
            "stall_window" => cfg.stall.window = parse_value(k, v)?,
            "head_stall_eps" => cfg.head_stall.eps = parse_value(k, v)?,
            "head_stall_window" => cfg.head_stall.window = parse_value(k, v)?,
            "prelim_budget_fraction" => cfg.prelim_budget_fraction = parse_value(k, v)?,
            "subcluster_eps" => cfg.subcluster_eps = parse_value(k, v)?,
            "local_search" => cfg.local_search = parse_bool(k, v)?,
            "local_search_evals_per_dim" => cfg.local_search_evals_per_dim = parse_value(k, v)?,
            "kmeans_restarts" => cfg.kmeans_restarts = parse_value(k, v)?,
            "kpso_interval" => cfg.kpso_interval = parse_value(k, v)?,
            "nichepso_merge" => cfg.nichepso_merge = parse_bool(k, v)?,
            _ => rest.push(k.clone()),
        }
    }
    Ok(rest)
}

fn env_seed_value(env_seed: Option<&str>) -> CliResult<Option<u64>> {
    env_seed
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got '{s}'")))
        })
        .transpose()
}

#[derive(Serialize)]
struct HeadLine {
    position: Vec<f64>,
    fitness: f64,
    peak: Option<usize>,
}

#[derive(Serialize)]
struct RunJson<'a> {
    algorithm: String,
    function: &'a str,
    seed: u64,
    evaluations: u64,
    iterations: usize,
    status: niching::RunStatus,
    telemetry: &'a niching::PhaseTelemetry,
    heads: Vec<HeadLine>,
}

fn cmd_run(a: RunArgs, env_seed: Option<&str>, out: &mut dyn Write) -> CliResult {
    let mut cfg = AlgoConfig::default();
    let mut algo: Option<String> = None;
    let mut function: Option<String> = None;
    let mut seed_from_file = false;
    if let Some(path) = &a.config {
        let file = read_config_file(path)?;
        seed_from_file = file.contains_key("seed");
        for k in apply_solver_keys(&mut cfg, &file)? {
            match k.as_str() {
                "algo" => algo = file.get(&k).cloned(),
                "function" => function = file.get(&k).cloned(),
                _ => return Err(usage(format!("unknown config key '{k}' for run"))),
            }
        }
    }
    if !seed_from_file {
        if let Some(s) = env_seed_value(env_seed)? {
            cfg.seed = s;
        }
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(p) = a.pop {
        cfg.population = p;
    }
    if let Some(b) = a.budget {
        cfg.budget = b;
    }
    let algo = a.algo.or(algo).ok_or_else(|| usage("missing --algo"))?;
    let algorithm: Algorithm = algo.parse()?;
    let (problem, plugin) = match (&a.plugin, a.function.or(function)) {
        (Some(path), _) => {
            let (p, h) = load_plugin(path)?;
            (p, Some(h))
        }
        (None, Some(f)) => (Problem::builtin(f.parse::<FunctionId>()?), None),
        (None, None) => return Err(usage("missing --function or --plugin")),
    };
    cfg.validate()?;

    let outcome = niching::run(algorithm, &problem.spec, &cfg)?;
    if let Some(h) = &plugin {
        h.check()?;
    }
    let heads: Vec<HeadLine> = outcome
        .heads
        .iter()
        .map(|h| HeadLine {
            position: h.position.clone(),
            fitness: h.fitness,
            peak: problem.registry.as_ref().and_then(|r| matched_peak_id(r, h)),
        })
        .collect();
    let io = |e: std::io::Error| runtime(e.to_string());
    if a.json {
        let doc = RunJson {
            algorithm: algorithm.to_string(),
            function: problem.spec.id(),
            seed: cfg.seed,
            evaluations: outcome.evaluations,
            iterations: outcome.iterations,
            status: outcome.status,
            telemetry: &outcome.telemetry,
            heads,
        };
        let text = serde_json::to_string_pretty(&doc).map_err(|e| runtime(e.to_string()))?;
        writeln!(out, "{text}").map_err(io)?;
    } else {
        writeln!(
            out,
            "{} on {} (seed {}): {} heads, {} evaluations, {} iterations, status {:?}",
            algorithm,
            problem.spec.id(),
            cfg.seed,
            heads.len(),
            outcome.evaluations,
            outcome.iterations,
            outcome.status
        )
        .map_err(io)?;
        for (i, h) in heads.iter().enumerate() {
            let pos: Vec<String> = h.position.iter().map(|x| format!("{x:.6}")).collect();
            let peak = h.peak.map(|p| format!("peak {p}")).unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{:>3}  [{}]  f = {:.8}  {}",
                i + 1,
                pos.join(", "),
                h.fitness,
                peak
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Registry peak within whose niche radius the head lies, regardless of accuracy.
fn matched_peak_id(registry: &PeakRegistry, head: &Solution) -> Option<usize> {
    let (idx, dist) = registry.nearest(&head.position);
    (dist <= registry.niche_radius()).then_some(idx)
}

fn cmd_bench(a: BenchArgs, env_seed: Option<&str>, out: &mut dyn Write) -> CliResult {
    let mut cfg = ExperimentConfig::default();
    let mut out_dir = PathBuf::from("results");
    let mut format = Format::Csv;
    let mut seed_from_file = false;
    let mut plugins: Vec<PathBuf> = Vec::new();
    if let Some(path) = &a.config {
        let file = read_config_file(path)?;
        seed_from_file = file.contains_key("seed");
        for k in apply_solver_keys(&mut cfg.solver, &file)? {
            let v = file.get(&k).expect("key from map");
            match k.as_str() {
                "algos" | "algorithms" => cfg.algorithms = parse_list(&split_list(v))?,
                "functions" => cfg.functions = parse_list(&split_list(v))?,
                "runs" => cfg.runs = parse_value(&k, v)?,
                "out" => out_dir = PathBuf::from(v),
                "format" => format = Format::from_str(v, true).map_err(|_| usage(format!("invalid format '{v}'")))?,
                "post_optimize" => cfg.post_optimize = parse_bool(&k, v)?,
                "jobs" => cfg.jobs = Some(parse_value(&k, v)?),
                "reference" => cfg.reference = v.parse()?,
                "accuracy_levels" => {
                    cfg.accuracy_levels = split_list(v)
                        .iter()
                        .map(|s| parse_value(&k, s))
                        .collect::<CliResult<Vec<f64>>>()?
                }
                "plugins" => plugins = split_list(v).into_iter().map(PathBuf::from).collect(),
                _ => return Err(usage(format!("unknown config key '{k}' for bench"))),
            }
        }
    }
    if !seed_from_file {
        if let Some(s) = env_seed_value(env_seed)? {
            cfg.solver.seed = s;
        }
    }
    if let Some(s) = a.seed {
        cfg.solver.seed = s;
    }
    cfg.base_seed = cfg.solver.seed;
    if let Some(v) = &a.algos {
        cfg.algorithms = parse_list(v)?;
    }
    if let Some(v) = &a.functions {
        cfg.functions = parse_list(v)?;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(p) = a.pop {
        cfg.solver.population = p;
    }
    if let Some(b) = a.budget {
        cfg.solver.budget = b;
    }
    if let Some(o) = a.out {
        out_dir = o;
    }
    if let Some(f) = a.format {
        format = f;
    }
    if a.post_optimize {
        cfg.post_optimize = true;
    }
    if let Some(j) = a.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(r) = &a.reference {
        cfg.reference = r.parse()?;
    }
    cfg.validate()?;

    fs::create_dir_all(&out_dir)
        .map_err(|e| runtime(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let probe = out_dir.join(".write-probe");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| runtime(format!("output directory {} is not writable: {e}", out_dir.display())))?;

    let mut problems: Vec<Problem> = cfg.functions.iter().map(|&f| Problem::builtin(f)).collect();
    let mut handles = Vec::new();
    for p in &plugins {
        let (problem, handle) = load_plugin(p)?;
        problems.push(problem);
        handles.push(handle);
    }

    let started = Instant::now();
    let experiment = harness::run_experiment_on(&cfg, &problems)?;
    for h in &handles {
        h.check()?;
    }
    let wall = started.elapsed().as_secs_f64();

    let write = |name: &str, f: &dyn Fn(&mut fs::File) -> Result<()>| -> CliResult<PathBuf> {
        let path = out_dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        f(&mut file).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    };
    let mut files = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        files.push(write("report.csv", &|f| {
            report::write_csv(&experiment.rows, &cfg.accuracy_levels, f)
        })?);
    }
    if matches!(format, Format::Json | Format::Both) {
        files.push(write("report.json", &|f| {
            report::write_json(&experiment.rows, &cfg.accuracy_levels, f)
        })?);
    }
    files.push(write("runs.jsonl", &|f| {
        report::write_runs_jsonl(&experiment.records, f)
    })?);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        plugins: plugins.iter().map(|p| p.display().to_string()).collect(),
        wall_time_seconds: wall,
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    write("manifest.json", &|f| {
        serde_json::to_writer_pretty(&mut *f, &manifest)?;
        writeln!(f)?;
        Ok(())
    })?;

    let io = |e: std::io::Error| runtime(e.to_string());
    for row in &experiment.rows {
        let pr = row.pr_mean.map(|p| format!("{p:.3}")).unwrap_or_else(|| "n/a".into());
        let sd = row.pr_std.map(|p| format!("{p:.3}")).unwrap_or_else(|| "n/a".into());
        writeln!(
            out,
            "{:<9} {:<4} PR {} ± {} {}",
            row.algorithm, row.function, pr, sd, row.wilcoxon_mark
        )
        .map_err(io)?;
    }
    writeln!(out, "reports written to {}", out_dir.display()).map_err(io)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
    plugins: Vec<String>,
    wall_time_seconds: f64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct PeaksJson<'a> {
    function: &'a str,
    niche_radius: f64,
    peaks: &'a [Solution],
}

fn cmd_peaks(a: PeaksArgs, out: &mut dyn Write) -> CliResult {
    let (name, registry) = match (&a.plugin, &a.function) {
        (Some(path), _) => {
            let (problem, _handle) = load_plugin(path)?;
            let reg = problem
                .registry
                .ok_or_else(|| usage(format!("plug-in {} declares no peaks", path.display())))?;
            (problem.spec.id().to_string(), reg)
        }
        (None, Some(f)) => {
            let id: FunctionId = f.parse()?;
            (id.to_string(), peak_registry(id))
        }
        (None, None) => return Err(usage("missing --function or --plugin")),
    };
    let io = |e: std::io::Error| runtime(e.to_string());
    if a.json {
        let doc = PeaksJson {
            function: &name,
            niche_radius: registry.niche_radius(),
            peaks: registry.peaks(),
        };
        let text = serde_json::to_string_pretty(&doc).map_err(|e| runtime(e.to_string()))?;
        writeln!(out, "{text}").map_err(io)?;
        return Ok(());
    }
    writeln!(
        out,
        "{name}: {} peaks, niche radius {:.6}",
        registry.len(),
        registry.niche_radius()
    )
    .map_err(io)?;
    for (i, p) in registry.peaks().iter().enumerate() {
        let pos: Vec<String> = p.position.iter().map(|x| format!("{x:.8}")).collect();
        writeln!(out, "{i:>4}  [{}]  f = {:.10}", pos.join(", "), p.fitness).map_err(io)?;
    }
    Ok(())
}

fn cmd_selftest(out: &mut dyn Write) -> CliResult {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool, out: &mut dyn Write| {
        let _ = writeln!(out, "{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let stratified = (1..=10u32).all(|m| {
        let bins = 1usize << m;
        let mut seen = vec![false; bins];
        (1..=bins as u64).all(|k| {
            let b = (radical_inverse(k, 2).unwrap_or(f64::NAN) * bins as f64) as usize;
            b < bins && !std::mem::replace(&mut seen[b], true)
        })
    });
    check("halton base-2 stratification", stratified, out);

    let expected = [2, 5, 1, 4, 2, 18, 81, 36, 216, 12];
    let counts_ok = FunctionId::ALL
        .iter()
        .zip(expected)
        .all(|(&id, n)| peak_registry(id).len() == n);
    check("peak registry sizes", counts_ok, out);

    let cfg = AlgoConfig {
        budget: 5_000,
        seed: 1,
        ..AlgoConfig::default()
    };
    let spec = crate::objective::builtin(FunctionId::F1);
    let reg = peak_registry(FunctionId::F1);
    let found = niching::run(Algorithm::TImPso, &spec, &cfg)
        .map(|o| crate::objective::count_peaks_found(&o.heads, &reg, 1e-1))
        .unwrap_or(0);
    check("timpso finds both f1 optima", found == 2, out);

    if failures > 0 {
        Err(runtime(format!("{failures} self-test check(s) failed")))
    } else {
        Ok(())
    }
}

/// Keeps a plug-in subprocess alive and records protocol failures, which the
/// fitness callback cannot report directly.
struct PluginHandle {
    failed: Arc<AtomicBool>,
    message: Arc<Mutex<Option<String>>>,
}

impl PluginHandle {
    fn check(&self) -> CliResult {
        if self.failed.load(Ordering::SeqCst) {
            let msg = self
                .message
                .lock()
                .ok()
                .and_then(|m| m.clone())
                .unwrap_or_else(|| "plug-in failed".into());
            return Err(runtime(msg));
        }
        Ok(())
    }
}

struct PluginProcess {
    _child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl PluginProcess {
    fn query(&mut self, x: &[f64]) -> std::result::Result<f64, String> {
        let line: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.stdin, "{}", line.join(" ")).map_err(|e| format!("plug-in write failed: {e}"))?;
        self.stdin.flush().map_err(|e| format!("plug-in write failed: {e}"))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| format!("plug-in read failed: {e}"))?;
        if n == 0 {
            return Err("plug-in closed its output".into());
        }
        reply
            .trim()
            .parse()
            .map_err(|_| format!("plug-in returned a non-numeric line '{}'", reply.trim()))
    }
}

/// Loads a plug-in description: `key = value` lines with `dimension`,
/// `lower`, `upper` (comma lists), `command` (a process reading one point per
/// line and answering one fitness per line), and optional `name` and `peaks`
/// (points separated by `;`, coordinates by `,`).
fn load_plugin(path: &Path) -> CliResult<(Problem, PluginHandle)> {
    let map = read_config_file(path)?;
    let get = |k: &str| {
        map.get(k)
            .ok_or_else(|| usage(format!("{}: missing '{k}'", path.display())))
    };
    for k in map.keys() {
        if !matches!(
            k.as_str(),
            "dimension" | "lower" | "upper" | "command" | "name" | "peaks"
        ) {
            return Err(usage(format!("{}: unknown key '{k}'", path.display())));
        }
    }
    let dimension: usize = parse_value("dimension", get("dimension")?)?;
    let floats =
        |k: &str, v: &str| -> CliResult<Vec<f64>> { split_list(v).iter().map(|s| parse_value(k, s)).collect() };
    let lower = floats("lower", get("lower")?)?;
    let upper = floats("upper", get("upper")?)?;
    if lower.len() != dimension || upper.len() != dimension {
        return Err(usage(format!(
            "{}: bounds must have {dimension} entries",
            path.display()
        )));
    }
    let command = get("command")?.clone();
    let name = map.get("name").cloned().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "plugin".into())
    });

    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| usage(format!("{}: empty command", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut child = Command::new(program)
        .args(parts)
        .current_dir(if base.as_os_str().is_empty() {
            Path::new(".")
        } else {
            base
        })
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| runtime(format!("cannot start plug-in '{command}': {e}")))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let process = Arc::new(Mutex::new(PluginProcess {
        _child: child,
        stdin,
        stdout,
    }));
    let failed = Arc::new(AtomicBool::new(false));
    let message = Arc::new(Mutex::new(None));
    let (f2, m2) = (failed.clone(), message.clone());
    let fitness = Arc::new(move |x: &[f64]| -> f64 {
        if f2.load(Ordering::SeqCst) {
            return f64::NEG_INFINITY;
        }
        let reply = process
            .lock()
            .map_err(|_| "plug-in lock poisoned".to_string())
            .and_then(|mut p| p.query(x));
        match reply {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                f2.store(true, Ordering::SeqCst);
                *m2.lock().expect("message lock") = Some(format!("plug-in returned non-finite fitness {v}"));
                f64::NEG_INFINITY
            }
            Err(e) => {
                f2.store(true, Ordering::SeqCst);
                *m2.lock().expect("message lock") = Some(e);
                f64::NEG_INFINITY
            }
        }
    });

    let peaks = match map.get("peaks") {
        None => None,
        Some(v) => {
            let mut points = Vec::new();
            for chunk in v.split(';').map(str::trim).filter(|c| !c.is_empty()) {
                let p = floats("peaks", chunk)?;
                if p.len() != dimension {
                    return Err(usage(format!("{}: peak '{chunk}' has wrong dimension", path.display())));
                }
                points.push(p);
            }
            Some(points)
        }
    };
    let spec = ObjectiveSpec::new(name, lower, upper, fitness, peaks.as_ref().map(Vec::len))?;
    let registry = match peaks {
        None => None,
        Some(points) => {
            let sols = points
                .into_iter()
                .map(|p| {
                    let f = spec.fitness_unbudgeted(&p);
                    Solution::new(p, f)
                })
                .collect();
            Some(PeakRegistry::from_peaks(sols, spec.lower(), spec.upper())?)
        }
    };
    let handle = PluginHandle { failed, message };
    handle.check()?;
    Ok((Problem::custom(spec, registry), handle))
}
