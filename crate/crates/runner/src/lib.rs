//! Config-driven experiment runner for `lrdyn`.
//!
//! A run reads one TOML config, executes one experiment and writes
//! `results.csv`, `summary.json`, `report.txt` and, for scans and sweeps,
//! `plot.svg` into the output directory. See the README for the schema.

pub mod artifacts;
pub mod config;
pub mod experiments;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{Config, Experiment, Prepared};

/// Environment variable naming the result cache directory.
pub const CACHE_ENV: &str = "LRDYN_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const FP_NOTE: &str = "results.csv is byte-identical across reruns of the same binary on the same \
    machine; other CPUs, BLAS builds or compiler flags may change trailing digits";

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Core(lrdyn::Error),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<lrdyn::Error> for RunError {
    fn from(e: lrdyn::Error) -> Self {
        RunError::Core(e)
    }
}

fn io(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub passed: bool,
    pub cache_hit: bool,
    pub summary: Value,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub cache_dir: Option<PathBuf>,
}

fn config_key(cfg: &Config) -> String {
    let canon = serde_json::to_string(cfg).expect("config serialises");
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(b"\n");
    h.update(canon.as_bytes());
    hex::encode(h.finalize())
}

const ARTIFACTS: [&str; 4] = ["results.csv", "summary.json", "report.txt", "plot.svg"];

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| io(path, e))
}

/// Execute `cfg` and write its artifacts.
pub fn run_config(mut cfg: Config, opts: &RunOptions) -> Result<RunSummary, RunError> {
    if let Some(s) = opts.seed_override {
        cfg.seed = Some(s);
    }
    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lrdyn-out"));
    // The output location does not influence results.
    cfg.output = None;
    let key = config_key(&cfg);
    let prepared = cfg.prepare()?;
    std::fs::create_dir_all(&out_dir).map_err(|e| io(&out_dir, e))?;

    if let Some(dir) = &opts.cache_dir {
        let cached = dir.join(&key);
        if cached.join("summary.json").is_file() {
            for name in ARTIFACTS {
                let src = cached.join(name);
                if src.is_file() {
                    std::fs::copy(&src, out_dir.join(name)).map_err(|e| io(&src, e))?;
                }
            }
            let path = out_dir.join("summary.json");
            let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
            let mut summary: Value =
                serde_json::from_str(&text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            summary["cache"] = json!("hit");
            write(&path, &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
            return Ok(RunSummary {
                out_dir,
                passed: summary["passed"].as_bool().unwrap_or(false),
                cache_hit: true,
                summary,
            });
        }
    }

    let start = Instant::now();
    let outcome = experiments::run(&prepared)?;
    let passed = !outcome.assertions.iter().any(|a| a.failed());
    let spec = &prepared.spec;
    let summary = json!({
        "tool": "lrdyn",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "config": cfg,
        "config_sha256": key,
        "seed": cfg.seed,
        "model_version": (cfg.model.name == "random-decaying").then_some(lrdyn::models::RANDOM_MODEL_VERSION),
        "volume": {
            "sites": spec.volume().n_sites(),
            "total_dim": spec.volume().total_dim(),
            "family": spec.volume().graph().family().name(),
            "terms": spec.terms().len(),
        },
        "tolerances": {"integrator": prepared.integrator_tol, "assertion": prepared.assertion_tol},
        "threads": rayon::current_num_threads(),
        "passed": passed,
        "assertions": outcome.assertions,
        "certificate": outcome.certificate,
        "results": outcome.results,
        "rows": outcome.table.len(),
        "floating_point": FP_NOTE,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "cache": if opts.cache_dir.is_some() { "miss" } else { "off" },
    });
    write(&out_dir.join("results.csv"), &outcome.table.to_csv())?;
    write(&out_dir.join("summary.json"), &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    write(&out_dir.join("report.txt"), &report(&summary))?;
    let stale = out_dir.join("plot.svg");
    match &outcome.chart {
        Some(svg) => write(&stale, svg)?,
        None if stale.is_file() => std::fs::remove_file(&stale).map_err(|e| io(&stale, e))?,
        None => {}
    }
    if let Some(dir) = &opts.cache_dir {
        let target = dir.join(&key);
        std::fs::create_dir_all(&target).map_err(|e| io(&target, e))?;
        for name in ARTIFACTS {
            let src = out_dir.join(name);
            if src.is_file() {
                std::fs::copy(&src, target.join(name)).map_err(|e| io(&src, e))?;
            }
        }
    }
    Ok(RunSummary {
        out_dir,
        passed,
        cache_hit: false,
        summary,
    })
}

/// Human-readable rendering of a summary.
pub fn report(summary: &Value) -> String {
    let mut s = format!(
        "lrdyn {}: {}\nmodel: {}  sites: {}  dimension: {}\n",
        summary["version"].as_str().unwrap_or("?"),
        summary["experiment"].as_str().unwrap_or("?"),
        summary["config"]["model"]["name"].as_str().unwrap_or("?"),
        summary["volume"]["sites"],
        summary["volume"]["total_dim"],
    );
    if !summary["seed"].is_null() {
        s += &format!("seed: {}\n", summary["seed"]);
    }
    if let Some(c) = summary["certificate"].as_object() {
        s += &format!(
            "certificate: μ = {}, ‖F‖ = {}, C_μ = {}, ‖Ψ‖ = {}, v = {}\n",
            c["mu"], c["f_norm"]["certified"], c["c_mu"]["certified"], c["psi_norm"], c["velocity"]
        );
    }
    s += "\nassertions:\n";
    for a in summary["assertions"].as_array().into_iter().flatten() {
        s += &format!(
            "  [{}] {}: {}\n",
            a["status"].as_str().unwrap_or("?").to_uppercase(),
            a["name"].as_str().unwrap_or("?"),
            a["detail"].as_str().unwrap_or(""),
        );
    }
    s += &format!("\nresults: {}\n", serde_json::to_string_pretty(&summary["results"]).expect("json"));
    s += &format!(
        "\noverall: {}\n",
        if summary["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" }
    );
    s
}

#[derive(Parser, Debug)]
#[command(name = "lrdyn", version, about = "Lindblad dynamics on finite lattices: checks, Lieb-Robinson scans and volume sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Replace the config seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Ignore the result cache even if the cache variable is set.
        #[arg(long)]
        no_cache: bool,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Inspect the model registry.
    Models {
        #[command(subcommand)]
        command: ModelsCommand,
    },
}

#[derive(Subcommand, Debug)]
enum ModelsCommand {
    List,
    Show { name: String },
}

/// Entry point shared by the binary and in-process tests. Returns the exit
/// status: 0 on success, 1 if an assertion failed, 2 on errors.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, RunError> {
    let w = |out: &mut dyn Write, s: &str| out.write_all(s.as_bytes()).map_err(|e| RunError::Io(e.to_string()));
    match cmd {
        Command::Run {
            config,
            out: out_dir,
            threads,
            seed_override,
            no_cache,
        } => {
            if let Some(n) = threads {
                // A pool that is already initialised keeps its size.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
            }
            let cfg = config::load(&config)?;
            let cache_dir = if no_cache {
                None
            } else {
                std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
            };
            let r = run_config(
                cfg,
                &RunOptions {
                    out: out_dir,
                    seed_override,
                    cache_dir,
                },
            )?;
            let text = std::fs::read_to_string(r.out_dir.join("report.txt"))
                .map_err(|e| io(&r.out_dir.join("report.txt"), e))?;
            w(out, &text)?;
            w(
                out,
                &format!(
                    "artifacts in {}{}\n",
                    r.out_dir.display(),
                    if r.cache_hit { " (cache hit)" } else { "" }
                ),
            )?;
            Ok(if r.passed { EXIT_OK } else { EXIT_ASSERTION })
        }
        Command::Validate { config } => {
            let cfg = config::load(&config)?;
            let p = cfg.prepare()?;
            w(
                out,
                &format!(
                    "ok: {} on {} ({} sites, dimension {}, {} terms)\n",
                    cfg.experiment.name(),
                    cfg.model.name,
                    p.spec.volume().n_sites(),
                    p.spec.volume().total_dim(),
                    p.spec.terms().len()
                ),
            )?;
            Ok(EXIT_OK)
        }
        Command::Models { command } => {
            match command {
                ModelsCommand::List => {
                    for c in lrdyn::models::cards() {
                        w(out, &format!("{:<18} {}\n", c.name, c.summary))?;
                    }
                }
                ModelsCommand::Show { name } => {
                    let c = lrdyn::models::card(&name)?;
                    w(out, &c.describe())?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}
