//! Command-line driver: `eval`, `oracle`, `report` and `train-toy`.
//!
//! Runs are described by a TOML file (see `RunConfig`); flags override it.
//! Every run writes `resolved_config.toml` next to its outputs. Layout:
//!
//! ```text
//! <out>/resolved_config.toml
//! <out>/<env>/<seed>_r<rollout>/transcript.jsonl
//! <out>/<env>/report.json, report.csv
//! <out>/<env>/oracle_curve.json          (oracle only)
//! <out>/failures.json                    (when some instances failed)
//! <out>/learning_curve.csv               (train-toy)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::agents::{Agent, AgentError, AgentFactory, AgentSpec};
use crate::envs::{EnvId, EnvParams, MazeEnv};
use crate::grpo::{toy_meta_train, ToyConfig};
use crate::metrics::EvalReport;
use crate::oracles::{j_star, CandidateSet, MastermindSolver, MazeOracleAgent};
use crate::protocol::{run_task, Budget, ProtocolError, TaskInstance, Transcript};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Transport(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "icrl-bench", version, about = "Multi-episode in-context RL benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every task instance of the suite with the configured agent.
    Eval(EvalArgs),
    /// Run the maze or Mastermind oracle and emit its success curve.
    Oracle(OracleArgs),
    /// Build reports from a directory of transcripts.
    Report(ReportArgs),
    /// Meta-train a softmax table on the task-identity bandit.
    TrainToy(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads over instances.
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Added to every instance seed.
    #[arg(long)]
    pub seed_offset: Option<u64>,
    /// random, oracle, repeat-last-episode, scripted:<a|b|..> or remote-llm:<model>.
    #[arg(long)]
    pub agent: Option<String>,
    /// Cap on the total characters of the conversation.
    #[arg(long)]
    pub budget_chars: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Independent runs per instance.
    #[arg(long)]
    pub rollouts: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// maze or mastermind; replaces the config suite.
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub instances: usize,
    /// Give the maze oracle the full layout from the start.
    #[arg(long)]
    pub full_map: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory scanned for transcript.jsonl files.
    pub dir: PathBuf,
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Where to write reports; defaults to `dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub max_chars: Option<usize>,
    pub max_steps: Option<usize>,
}

/// One game of the suite: `instances` seeds starting at `seed_start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub env: EnvId,
    pub instances: usize,
    #[serde(default)]
    pub seed_start: u64,
    pub horizon: Option<usize>,
    pub episodes: Option<usize>,
    /// Game parameters; omitted keys take their defaults.
    pub params: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    #[serde(default = "one")]
    pub parallel: usize,
    #[serde(default)]
    pub seed_offset: u64,
    /// Independent runs per instance.
    #[serde(default = "one")]
    pub rollouts: usize,
    pub agent: Option<AgentSpec>,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub suite: Vec<SuiteEntry>,
    pub toy: Option<ToyConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out: None,
            parallel: 1,
            seed_offset: 0,
            rollouts: 1,
            agent: None,
            budget: BudgetConfig::default(),
            suite: Vec::new(),
            toy: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Loads `--config` if given and applies the other flags on top.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &args.out {
            cfg.out = Some(out.clone());
        }
        if let Some(p) = args.parallel {
            cfg.parallel = p;
        }
        if let Some(s) = args.seed_offset {
            cfg.seed_offset = s;
        }
        if let Some(a) = &args.agent {
            cfg.agent = Some(AgentSpec::from_flag(a).map_err(|e| CliError::Config(e.to_string()))?);
        }
        if let Some(c) = args.budget_chars {
            cfg.budget.max_chars = Some(c);
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.parallel == 0 || self.rollouts == 0 {
            return Err(CliError::Config("parallel and rollouts must be positive".into()));
        }
        if let Some(e) = self.suite.iter().find(|e| e.instances == 0) {
            return Err(CliError::Config(format!("suite entry {} has zero instances", e.env)));
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        Budget {
            max_chars: self.budget.max_chars,
            max_steps: self.budget.max_steps,
            ..Budget::default()
        }
    }

    /// Expands the suite into task instances, in suite order.
    pub fn tasks(&self) -> Result<Vec<TaskInstance>, CliError> {
        let mut out = Vec::new();
        for entry in &self.suite {
            let params = entry_params(entry)?;
            for i in 0..entry.instances as u64 {
                let task = TaskInstance {
                    env_id: entry.env,
                    seed: entry.seed_start + self.seed_offset + i,
                    horizon: entry.horizon.unwrap_or(entry.env.default_horizon()),
                    episodes: entry.episodes.unwrap_or(entry.env.default_episodes()),
                    params: params.clone(),
                };
                task.validate().map_err(|e| CliError::Config(e.to_string()))?;
                out.push(task);
            }
        }
        Ok(out)
    }

    fn out_dir(&self) -> Result<PathBuf, CliError> {
        self.out
            .clone()
            .ok_or_else(|| CliError::Config("no output directory: pass --out or set `out`".into()))
    }
}

fn entry_params(entry: &SuiteEntry) -> Result<EnvParams, CliError> {
    let mut table = entry.params.clone().unwrap_or_default();
    table.insert("env".into(), toml::Value::String(entry.env.to_string()));
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("params for {}: {e}", entry.env)))
}

/// Transcript path of one (task, rollout) under `out`.
pub fn transcript_path(out: &Path, task: &TaskInstance, rollout: usize) -> PathBuf {
    out.join(task.env_id.as_str())
        .join(format!("{}_r{rollout}", task.seed))
        .join("transcript.jsonl")
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Serialize)]
struct Failure {
    env: EnvId,
    seed: u64,
    rollout: usize,
    error: String,
}

/// Transcripts of a suite run, grouped by game, and per-instance failures.
#[derive(Debug, Default)]
pub struct SuiteRun {
    pub transcripts: BTreeMap<EnvId, Vec<Transcript>>,
    pub failures: Vec<String>,
}

type BuildAgent<'a> = dyn Fn(&TaskInstance, u64) -> Result<Box<dyn Agent + Send>, AgentError> + Sync + 'a;

fn run_suite(cfg: &RunConfig, out: &Path, build: &BuildAgent<'_>) -> Result<SuiteRun, CliError> {
    cfg.validate()?;
    let tasks = cfg.tasks()?;
    if tasks.is_empty() {
        return Err(CliError::Config("the suite is empty".into()));
    }
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write(&out.join("resolved_config.toml"), &cfg.to_toml())?;

    let jobs: Vec<(TaskInstance, usize)> = tasks
        .iter()
        .flat_map(|t| (0..cfg.rollouts).map(move |r| (t.clone(), r)))
        .collect();
    let budget = cfg.budget();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;

    let results: Vec<Result<Result<Transcript, Failure>, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(task, rollout)| {
                let failure = |error: String| Failure {
                    env: task.env_id,
                    seed: task.seed,
                    rollout: *rollout,
                    error,
                };
                let mut agent = match build(task, *rollout as u64) {
                    Ok(a) => a,
                    Err(AgentError::Transport(e)) => return Err(CliError::Transport(e)),
                    Err(e) => return Err(CliError::Config(e.to_string())),
                };
                match run_task(task, &mut agent, &budget) {
                    Ok(tr) => {
                        let path = transcript_path(out, task, *rollout);
                        write(&path, &tr.to_jsonl())?;
                        Ok(Ok(tr))
                    }
                    Err(ProtocolError::Agent(AgentError::Transport(e))) => {
                        Err(CliError::Transport(format!("{task}: {e}")))
                    }
                    Err(ProtocolError::Agent(AgentError::Config(e))) => Err(CliError::Config(e)),
                    Err(e) => Ok(Err(failure(e.to_string()))),
                }
            })
            .collect()
    });

    let mut run = SuiteRun::default();
    let mut failures = Vec::new();
    for r in results {
        match r? {
            Ok(tr) => run.transcripts.entry(tr.task.env_id).or_default().push(tr),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        let json = serde_json::to_string_pretty(&failures).expect("failures serialize");
        write(&out.join("failures.json"), &json)?;
        run.failures = failures
            .iter()
            .map(|f| format!("{} seed {} rollout {}: {}", f.env, f.seed, f.rollout, f.error))
            .collect();
    }
    Ok(run)
}

fn report_for(transcripts: &[Transcript]) -> Result<EvalReport, CliError> {
    let j: Vec<f64> = transcripts
        .iter()
        .map(|t| j_star(&t.task))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    EvalReport::from_transcripts(transcripts, &j).map_err(|e| CliError::Input(e.to_string()))
}

fn write_report(dir: &Path, report: &EvalReport) -> Result<(), CliError> {
    write(&dir.join("report.json"), &report.to_json())?;
    write(&dir.join("report.csv"), &report.to_csv())
}

/// `eval`: runs the suite and writes transcripts and per-game reports.
pub fn cmd_eval(args: &EvalArgs) -> Result<Vec<EvalReport>, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    if let Some(r) = args.rollouts {
        cfg.rollouts = r;
    }
    let out = cfg.out_dir()?;
    let spec = cfg
        .agent
        .clone()
        .ok_or_else(|| CliError::Config("no agent: pass --agent or add an [agent] table".into()))?;
    let factory = AgentFactory::new(spec).map_err(|e| CliError::Config(e.to_string()))?;
    let run = run_suite(&cfg, &out, &|task, rollout| factory.build(task, rollout))?;
    let mut reports = Vec::new();
    for (env, transcripts) in &run.transcripts {
        let report = report_for(transcripts)?;
        write_report(&out.join(env.as_str()), &report)?;
        println!("{}", report.summary_line());
        reports.push(report);
    }
    for f in &run.failures {
        eprintln!("failed: {f}");
    }
    Ok(reports)
}

/// Oracle success curve for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCurve {
    pub env: EnvId,
    pub instances: usize,
    pub full_map: bool,
    pub success_by_episode: Vec<f64>,
    pub regret_curve: Vec<f64>,
    /// Exact first-episode success probability of the Mastermind DP from
    /// the uniform prior.
    pub dp_episode1_value: Option<f64>,
}

pub const ORACLE_ENVS: [EnvId; 2] = [EnvId::Maze, EnvId::Mastermind];

/// `oracle`: runs the maze or Mastermind oracle through the protocol.
pub fn cmd_oracle(args: &OracleArgs) -> Result<Vec<OracleCurve>, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    if let Some(name) = &args.env {
        let env: EnvId = name.parse().map_err(|_| unsupported(name))?;
        cfg.suite = vec![SuiteEntry {
            env,
            instances: args.instances,
            seed_start: 0,
            horizon: None,
            episodes: None,
            params: None,
        }];
    }
    if cfg.suite.is_empty() {
        return Err(CliError::Config("pass --env or give a suite in --config".into()));
    }
    if let Some(bad) = cfg.suite.iter().find(|e| !ORACLE_ENVS.contains(&e.env)) {
        return Err(unsupported(bad.env.as_str()));
    }
    if args.full_map && cfg.suite.iter().any(|e| e.env != EnvId::Maze) {
        return Err(CliError::Config("--full-map applies to maze only".into()));
    }
    cfg.agent = Some(AgentSpec::Oracle);
    let out = cfg.out_dir()?;
    let factory = AgentFactory::new(AgentSpec::Oracle).map_err(|e| CliError::Config(e.to_string()))?;
    let full_map = args.full_map;
    let build = move |task: &TaskInstance, rollout: u64| -> Result<Box<dyn Agent + Send>, AgentError> {
        if full_map {
            let EnvParams::Maze(p) = &task.params else {
                return Err(AgentError::Config("--full-map applies to maze only".into()));
            };
            let env = MazeEnv::generate(task.seed, p, task.horizon)
                .map_err(|e| AgentError::Config(e.to_string()))?;
            Ok(Box::new(MazeOracleAgent::with_full_map(env.grid(), env.start(), env.goal())))
        } else {
            factory.build(task, rollout)
        }
    };
    let run = run_suite(&cfg, &out, &build)?;
    let mut curves = Vec::new();
    for (env, transcripts) in &run.transcripts {
        let report = report_for(transcripts)?;
        write_report(&out.join(env.as_str()), &report)?;
        let dp = (*env == EnvId::Mastermind).then(|| {
            let h = transcripts[0].task.horizon;
            MastermindSolver::new()
                .value(CandidateSet::all(), h)
                .expect("full candidate set is nonempty")
        });
        let curve = OracleCurve {
            env: *env,
            instances: report.instances,
            full_map,
            success_by_episode: report.success_by_episode.clone(),
            regret_curve: report.regret_curve.clone(),
            dp_episode1_value: dp,
        };
        let json = serde_json::to_string_pretty(&curve).expect("curve serializes");
        write(&out.join(env.as_str()).join("oracle_curve.json"), &json)?;
        println!("{json}");
        curves.push(curve);
    }
    for f in &run.failures {
        eprintln!("failed: {f}");
    }
    Ok(curves)
}

fn unsupported(name: &str) -> CliError {
    CliError::Config(format!(
        "no oracle for {name:?}; supported oracles: maze, mastermind"
    ))
}

/// Loads every `transcript.jsonl` under `dir`, grouped by game, in path order.
pub fn load_transcripts(dir: &Path) -> Result<BTreeMap<EnvId, Vec<Transcript>>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Input(format!("{} is not a directory", dir.display())));
    }
    let mut paths: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.file_name() == "transcript.jsonl")
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    let mut out: BTreeMap<EnvId, Vec<Transcript>> = BTreeMap::new();
    for p in paths {
        let tr = Transcript::load(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        out.entry(tr.task.env_id).or_default().push(tr);
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("no transcripts under {}", dir.display())));
    }
    Ok(out)
}

/// `report`: per-game reports for a transcript directory, optionally
/// against a baseline directory of the same suite.
pub fn cmd_report(args: &ReportArgs) -> Result<Vec<EvalReport>, CliError> {
    let run = load_transcripts(&args.dir)?;
    let base = match &args.baseline {
        Some(b) => Some(load_transcripts(b)?),
        None => None,
    };
    let out = args.out.clone().unwrap_or_else(|| args.dir.clone());
    let mut reports = Vec::new();
    for (env, transcripts) in &run {
        let mut report = report_for(transcripts)?;
        if let Some(base) = &base {
            let b = base.get(env).ok_or_else(|| {
                CliError::Input(format!("baseline has no {env} transcripts"))
            })?;
            let b = report_for(b)?;
            report = report
                .with_baseline(&b)
                .map_err(|e| CliError::Input(e.to_string()))?;
        }
        write_report(&out.join(env.as_str()), &report)?;
        println!("{}", report.summary_line());
        reports.push(report);
    }
    Ok(reports)
}

/// `train-toy`: meta-trains on the bandit and writes the learning curve.
pub fn cmd_train_toy(args: &CommonArgs) -> Result<crate::grpo::LearningCurve, CliError> {
    let mut cfg = RunConfig::resolve(args)?;
    let out = cfg.out_dir()?;
    let mut toy = cfg.toy.clone().unwrap_or_default();
    toy.seed += cfg.seed_offset;
    cfg.toy = Some(toy.clone());
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    write(&out.join("resolved_config.toml"), &cfg.to_toml())?;
    let curve = toy_meta_train(&toy).map_err(|e| CliError::Internal(e.to_string()))?;
    write(&out.join("learning_curve.csv"), &curve.to_csv())?;
    let last = curve.last();
    println!(
        "step {}: expected reward {:.4}, episode 1 success {:.4}, episode 2 success {:.4}",
        last.step, last.expected_reward, last.episode1_success, last.episode2_success
    );
    Ok(curve)
}

/// Parses the arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => cmd_eval(a).map(|_| ()),
        Command::Oracle(a) => cmd_oracle(a).map(|_| ()),
        Command::Report(a) => cmd_report(a).map(|_| ()),
        Command::TrainToy(a) => cmd_train_toy(a).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
