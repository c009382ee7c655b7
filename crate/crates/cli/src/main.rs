//! `quadsec`: train, evaluate, sweep and reproduce the hover-point suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use quadsec::env::Role;
use quadsec::eval::{
    compare_scenarios, run_suite_in_memory, write_suite, ExperimentSuite, Scenario, SuiteCheckpoints,
};
use quadsec::nn::checkpoint::{content_hash, Checkpoint};
use quadsec::training::config::config_keys;
use quadsec::training::{
    evaluate_policy, grid_search, train, ConfigLoader, FrozenPolicy, FrozenSet, GridSpec, Profile,
    RunConfig, RunManifest, MANIFEST_FILE,
};
use quadsec::{Error, Result};

/// Environment variable naming the default output root.
const OUTPUT_ROOT_VAR: &str = "QUADSEC_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "quadsec", version, about = "Quadrotor secure-control lab")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one layer.
    Train(TrainArgs),
    /// Evaluate a checkpoint on randomly drawn hover points.
    Eval(EvalArgs),
    /// Train every cell of a hyperparameter grid.
    Grid(GridArgs),
    /// Fly the six fixed hover points under each scenario.
    Suite(SuiteArgs),
    /// Describe a checkpoint file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Layer to train or evaluate.
    #[arg(long)]
    role: Option<Role>,
    /// Budget preset.
    #[arg(long)]
    profile: Option<Profile>,
    /// TOML run configuration, merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-key override such as `ppo.gamma=0.99` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn loader(&self) -> Result<ConfigLoader> {
        if let Some(path) = &self.config {
            if !path.exists() {
                return Err(Error::Config(format!("config file {} not found", path.display())));
            }
        }
        let mut loader = ConfigLoader::resolve(self.role, self.profile, self.config.as_deref())?;
        if let Some(seed) = self.seed {
            loader.set(&format!("seed={seed}"))?;
        }
        for o in &self.overrides {
            loader.set(o)?;
        }
        Ok(loader)
    }

    fn out_dir(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os(OUTPUT_ROOT_VAR)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"))
                .join(default_name)
        })
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Checkpoint of the evaluated layer.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Episodes (defaults to training.eval_episodes).
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Use the published search space for the role.
    #[arg(long)]
    paper_grid: bool,
    /// With --paper-grid, fix the discount at 0.99.
    #[arg(long)]
    gamma_cut: bool,
    /// Candidate values, e.g. `ppo.learning_rate=1e-4,3e-4` (repeatable).
    /// Arrays go in brackets: `network.hidden=[64,64];[128,64]` uses `;`.
    #[arg(long = "values", value_name = "KEY=V1,V2")]
    values: Vec<String>,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// Scenario to fly, or `all` (repeatable).
    #[arg(long, default_value = "all")]
    scenario: Vec<String>,
    #[arg(long)]
    nominal: Option<PathBuf>,
    #[arg(long)]
    attacker: Option<PathBuf>,
    #[arg(long)]
    defender: Option<PathBuf>,
    /// Runs per hover point.
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    checkpoint: PathBuf,
}

/// Manifest written by every subcommand other than `train`, whose manifest
/// comes from the training run itself.
#[derive(Debug, Serialize)]
struct CommandManifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a RunConfig>,
    checkpoints: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn write_manifest(dir: &Path, manifest: &CommandManifest) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(content_hash(&bytes))
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let config = args.config.loader()?.build()?;
    let out = args
        .config
        .out_dir(&format!("train-{}-seed{}", config.role, config.seed));
    match train(&config, &out) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            println!(
                "{} trained for {} iterations ({} steps); best eval {:.3} at iteration {}",
                m.role, m.iterations, m.env_steps, m.best_eval_mean, m.best_iteration
            );
            println!("best checkpoint: {}", outcome.best_path.display());
            Ok(())
        }
        Err(e) => {
            let failed = CommandManifest {
                command: "train",
                argv: argv(),
                seed: config.seed,
                config: Some(&config),
                checkpoints: BTreeMap::new(),
                outputs: BTreeMap::new(),
                status: "failed",
                error: Some(e.to_string()),
            };
            if let Err(w) = write_manifest(&out, &failed) {
                log::error!("could not write manifest: {w}");
            }
            Err(e)
        }
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let config = args.config.loader()?.build()?;
    let path = args
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("eval requires --checkpoint".into()))?;
    if !path.exists() {
        return Err(Error::Config(format!("--checkpoint points to a missing file: {}", path.display())));
    }
    let policy = FrozenPolicy::load(path)?;
    let frozen = FrozenSet::load(&config)?;
    let episodes = args.episodes.unwrap_or(config.training.eval_episodes);
    let report = evaluate_policy(
        config.role,
        &policy.params,
        &frozen.layers(false),
        &config.env,
        &config.physics,
        &config.rewards,
        episodes,
        config.seed,
    )?;
    let crashes = report.outcomes.iter().filter(|o| o.crashed).count();
    let mean_dist =
        report.outcomes.iter().map(|o| o.final_distance).sum::<f64>() / episodes.max(1) as f64;
    println!(
        "{} over {episodes} episodes: mean reward {:.3} (std {:.3}), crashes {crashes}, mean final distance {:.3} m",
        config.role, report.mean_reward, report.std_reward, mean_dist
    );
    let out = args
        .config
        .out_dir(&format!("eval-{}-seed{}", config.role, config.seed));
    let mut checkpoints = frozen.hashes();
    checkpoints.insert(config.role.to_string(), policy.file_hash);
    let mut outputs = BTreeMap::new();
    outputs.insert("mean_reward".into(), report.mean_reward.to_string());
    outputs.insert("std_reward".into(), report.std_reward.to_string());
    outputs.insert("crashes".into(), crashes.to_string());
    outputs.insert("mean_final_distance_m".into(), mean_dist.to_string());
    write_manifest(
        &out,
        &CommandManifest {
            command: "eval",
            argv: argv(),
            seed: config.seed,
            config: Some(&config),
            checkpoints,
            outputs,
            status: "ok",
            error: None,
        },
    )
}

fn parse_grid_values(spec: &str) -> Result<(String, Vec<toml::Value>)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--values {spec:?} is not of the form key=v1,v2")))?;
    let sep = if raw.contains('[') { ';' } else { ',' };
    let values = raw
        .split(sep)
        .map(|v| {
            let v = v.trim();
            toml::from_str::<toml::Table>(&format!("v = {v}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(v.to_string()))
        })
        .collect::<Vec<_>>();
    if values.is_empty() {
        return Err(Error::Config(format!("--values {spec:?} lists no values")));
    }
    Ok((key.trim().to_string(), values))
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    let loader = args.config.loader()?;
    let base = loader.build()?;
    let mut grid = if args.paper_grid {
        GridSpec::paper(base.role, args.gamma_cut)
    } else {
        GridSpec::new(base.role)
    };
    for v in &args.values {
        let (key, values) = parse_grid_values(v)?;
        grid.values.insert(key, values);
    }
    let cells = grid.cells();
    if grid.values.is_empty() {
        return Err(Error::Config("grid is empty: pass --paper-grid or --values".into()));
    }
    println!("grid: {} combinations", cells.len());
    let out = args
        .config
        .out_dir(&format!("grid-{}-seed{}", base.role, base.seed));
    let rows = grid_search(&loader, &grid, &out)?;
    for r in rows.iter().take(5) {
        match r.final_eval_mean {
            Some(v) => println!("#{} cell {:03} {:.3}  {}", r.rank, r.cell, v, r.overrides),
            None => println!("#{} cell {:03} failed  {}", r.rank, r.cell, r.overrides),
        }
    }
    let mut outputs = BTreeMap::new();
    outputs.insert("cells".into(), cells.len().to_string());
    outputs.insert(
        "failed".into(),
        rows.iter().filter(|r| r.error.is_some()).count().to_string(),
    );
    write_manifest(
        &out,
        &CommandManifest {
            command: "grid",
            argv: argv(),
            seed: base.seed,
            config: Some(&base),
            checkpoints: BTreeMap::new(),
            outputs,
            status: "ok",
            error: None,
        },
    )
}

fn cmd_suite(args: &SuiteArgs) -> Result<()> {
    let mut scenarios = Vec::new();
    for s in &args.scenario {
        if s == "all" {
            scenarios.extend(Scenario::ALL);
        } else {
            scenarios.push(s.parse()?);
        }
    }
    scenarios.sort();
    scenarios.dedup();
    let suite = ExperimentSuite {
        repeats: args.repeats,
        scenarios,
        ..ExperimentSuite::default()
    };
    suite.validate()?;
    let ckpts = SuiteCheckpoints {
        nominal: args.nominal.clone(),
        attacker: args.attacker.clone(),
        defender: args.defender.clone(),
    };
    for (key, path) in [("--nominal", &ckpts.nominal), ("--attacker", &ckpts.attacker), ("--defender", &ckpts.defender)] {
        if let Some(p) = path {
            if !p.exists() {
                return Err(Error::Config(format!("{key} points to a missing file: {}", p.display())));
            }
        }
    }
    if ckpts.nominal.is_none() {
        return Err(Error::Config("suite requires --nominal".into()));
    }
    let (policies, hashes) = ckpts.load()?;
    let result = run_suite_in_memory(&suite, &policies, args.seed)?;
    let out = args.out.clone().unwrap_or_else(|| {
        std::env::var_os(OUTPUT_ROOT_VAR)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(format!("suite-seed{}", args.seed))
    });
    write_suite(&result, &suite, &out)?;
    for (scenario, why) in &result.skipped {
        eprintln!("skipped {scenario}: {why}");
    }
    for (scenario, points) in &result.summary.0 {
        println!("{scenario}:");
        for (hover, m) in points {
            println!(
                "  {hover}: crash {:.2}, final dist {:.3} m, settling {}, oscillation {:.4} m",
                m.crash_rate,
                m.mean_final_dist_m,
                m.mean_settling_s.map_or("-".to_string(), |s| format!("{s:.2} s")),
                m.oscillation_m
            );
        }
    }
    if result.summary.0.len() >= 2 && result.summary.0.contains_key(Scenario::Nominal.as_str()) {
        let cmp = compare_scenarios(&result.summary, Scenario::Nominal)?;
        let path = out.join("comparison.json");
        let text = serde_json::to_string_pretty(&cmp)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
    }
    let mut outputs = BTreeMap::new();
    outputs.insert(
        "summary".into(),
        file_hash(&out.join(quadsec::eval::SUMMARY_FILE))?,
    );
    write_manifest(
        &out,
        &CommandManifest {
            command: "suite",
            argv: argv(),
            seed: args.seed,
            config: None,
            checkpoints: hashes,
            outputs,
            status: "ok",
            error: None,
        },
    )
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let path = &args.checkpoint;
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let ck = Checkpoint::from_bytes(&bytes)?;
    let spec = ck.spec();
    println!("file: {}", path.display());
    println!("sha256: {}", content_hash(&bytes));
    println!("input_dim: {}", spec.input_dim);
    println!("hidden: {:?}", spec.hidden);
    println!("action_dim: {}", spec.action_dim);
    println!("parameters: {}", ck.params.len());
    println!("log_std: {:?}", ck.params.log_std());
    println!("seed: {}", ck.seed);
    println!("optimizer_state: {}", if ck.adam.is_some() { "yes" } else { "no" });
    let manifest_path = path.parent().map(|d| d.join(MANIFEST_FILE));
    let manifest = manifest_path
        .as_ref()
        .and_then(|p| std::fs::read_to_string(p).ok())
        .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok());
    if let Some(m) = manifest {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        println!("role: {}", m.role);
        println!("run_seed: {}", m.seed);
        println!("run_iterations: {}", m.iterations);
        let iteration = match name {
            quadsec::training::BEST_CHECKPOINT => Some(m.best_iteration),
            quadsec::training::FINAL_CHECKPOINT => Some(m.iterations),
            other => m.evals.iter().find(|e| e.checkpoint == other).map(|e| e.iteration),
        };
        if let Some(it) = iteration {
            println!("iteration: {it}");
        }
        match m.checkpoints.get(name) {
            Some(h) if *h == content_hash(&bytes) => println!("manifest_hash: match"),
            Some(_) => println!("manifest_hash: MISMATCH"),
            None => {}
        }
    } else {
        println!("manifest: none");
    }
    Ok(())
}

fn help_with_keys() -> String {
    let mut s = String::from("Config keys (defaults shown for the nominal desk preset; attacker and defender\npresets use network.hidden=[64, 64], ppo.learning_rate=0.0001, ppo.minibatch_size=128):\n");
    for (k, v) in config_keys(Role::Nominal, Profile::Desk) {
        s.push_str(&format!("  {k} = {v}\n"));
    }
    s.push_str(&format!("\nOutput root defaults to ${OUTPUT_ROOT_VAR}, else ./runs.\n"));
    s
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

fn main() -> ExitCode {
    let keys = help_with_keys();
    let mut command = Cli::command().after_long_help(keys.clone());
    for sub in ["train", "eval", "grid"] {
        command = command.mut_subcommand(sub, |c| c.after_long_help(keys.clone()));
    }
    let cli = match command
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
