//! `pomdp-coder` command line: demonstrations, model learning, single runs,
//! experiment suites and report regeneration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pomdp_coder::envs::{collect_demos, collect_into, Env, ENV_IDS};
use pomdp_coder::harness::suite::{read_rows, run_suite, write_reports, SuiteSpec};
use pomdp_coder::harness::{build_proposer, run_experiment, write_log, ExperimentConfig, Resources, AGENT_IDS};
use pomdp_coder::learner::Learner;
use pomdp_coder::proposer::{Completer, EndpointConfig, HttpProposer};
use pomdp_core::seed::mix;
use pomdp_core::Dataset;
use pps::ComponentKind;

#[derive(Parser)]
#[command(name = "pomdp-coder", version, about = "Learn POMDP world models as probabilistic programs and plan with them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect demonstration episodes as JSONL.
    Demo {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Collect exactly this many transitions instead of whole episodes.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn all four component programs offline.
    Learn {
        #[command(flatten)]
        exp: ExpArgs,
        /// Dataset to learn from; demonstrations are collected when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory for the learned programs and the learning log.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one agent on one environment.
    Run {
        #[command(flatten)]
        exp: ExpArgs,
        /// Write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the learning log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run an environment by agent by seed matrix and write reports.
    Suite {
        #[arg(long, value_delimiter = ',', default_values_t = ENV_IDS.map(String::from))]
        envs: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = AGENT_IDS.map(String::from))]
        agents: Vec<String>,
        #[arg(long, default_value = "0..5")]
        seeds: String,
        /// Extra `key=value` settings applied to every cell.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate summary.md and plot.json from a results CSV.
    Report {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Experiment settings. Precedence: `--env`, then the config file, then the
/// remaining flags, then `--set`.
#[derive(Args)]
struct ExpArgs {
    /// Flat `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    agent: Option<String>,
    /// `0..5` or `1,4,7`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    #[arg(long)]
    demo_episodes: Option<String>,
    #[arg(long)]
    dataset_steps: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    particles: Option<String>,
    #[arg(long)]
    max_refinements: Option<String>,
    /// `ground-truth`, `http`, or `scripted:<dir>`.
    #[arg(long)]
    proposer: Option<String>,
    #[arg(long)]
    cache_dir: Option<String>,
    #[arg(long)]
    offline_only: bool,
    #[arg(long)]
    online_only: bool,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn split_setting(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').with_context(|| format!("expected KEY=VALUE, got '{s}'"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl ExpArgs {
    fn config(&self, default_agent: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::for_env(self.env.as_deref().unwrap_or("tiger"), default_agent)?;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_file(&text)?;
        }
        let flags = [
            ("agent", &self.agent),
            ("seeds", &self.seeds),
            ("episodes", &self.episodes),
            ("demo_episodes", &self.demo_episodes),
            ("dataset_steps", &self.dataset_steps),
            ("gamma", &self.gamma),
            ("max_steps", &self.max_steps),
            ("horizon", &self.horizon),
            ("particles", &self.particles),
            ("max_refinements", &self.max_refinements),
            ("proposer", &self.proposer),
            ("cache_dir", &self.cache_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.offline_only {
            cfg.offline_only = true;
        }
        if self.online_only {
            cfg.online_only = true;
        }
        for s in &self.set {
            let (k, v) = split_setting(s)?;
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A completion endpoint, only when credentials are configured.
fn completer() -> Option<HttpProposer> {
    let cfg = EndpointConfig::from_env();
    std::env::var_os(&cfg.api_key_env).map(|_| HttpProposer::new(cfg))
}

fn demo(env: &str, episodes: usize, steps: Option<usize>, seed: u64, out: &Path) -> Result<()> {
    let mut env = Env::new(env)?;
    let d = match steps {
        Some(n) => {
            let mut d = Dataset::new(env.domain().schema.clone());
            collect_into(&mut env, &mut d, usize::MAX, n, seed);
            d
        }
        None => collect_demos(&mut env, episodes, seed),
    };
    d.save(out)?;
    println!("wrote {} transitions in {} episodes to {}", d.records.len(), d.episode_ids().len(), out.display());
    Ok(())
}

fn learn(exp: &ExpArgs, data: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = exp.config("pomdp-coder")?;
    let mut env = Env::new(&cfg.env)?;
    let seed = cfg.seeds[0];
    let d = match data {
        Some(path) => Dataset::load(path)?,
        None => pomdp_coder::harness::demonstrations(&mut env, &cfg, seed),
    };
    let proposer = build_proposer(&cfg)?;
    let mut learn_cfg = cfg.learn.clone();
    learn_cfg.cache_dir = cfg.cache_dir.as_ref().map(|c| c.join(&cfg.env));
    let mut learner = Learner::new(env.domain().clone(), learn_cfg, &*proposer);
    let result = learner.learn_models(&d, None, mix(seed, 300));
    fs::create_dir_all(out)?;
    let log = learner.take_log();
    let mut lines = String::new();
    for node in &log {
        lines.push_str(&serde_json::to_string(node)?);
        lines.push('\n');
    }
    fs::write(out.join("learn_log.jsonl"), lines)?;
    let (models, summary) = result?;
    for (kind, p) in ComponentKind::ALL.iter().zip(models.programs()) {
        fs::write(out.join(format!("{}.pps", kind.as_str())), p.to_file_contents())?;
    }
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    for (i, kind) in ComponentKind::ALL.iter().enumerate() {
        println!(
            "{:<12} coverage {:.3}  nodes {}  proposer calls {}",
            kind.as_str(),
            summary.coverage[i],
            summary.created[i],
            summary.proposer_calls[i]
        );
    }
    Ok(())
}

fn run(exp: &ExpArgs, out: Option<&Path>, log: Option<&Path>) -> Result<()> {
    let cfg = exp.config("random")?;
    let http = completer();
    let res = Resources { proposer: None, completer: http.as_ref().map(|c| c as &dyn Completer) };
    let report = run_experiment(&cfg, res)?;
    if let Some(path) = log {
        write_log(path, &report.log)?;
    }
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    println!(
        "{} / {}: mean return {:.4} ± {:.4} over {} episodes ({:.1}s)",
        report.env,
        report.agent,
        report.mean,
        report.stderr,
        report.episodes.len(),
        report.wall_clock_secs
    );
    for e in report.episodes.iter().filter(|e| e.error.is_some()) {
        eprintln!("seed {} episode {}: {}", e.seed, e.episode, e.error.as_deref().unwrap_or(""));
    }
    Ok(())
}

fn suite(spec: SuiteSpec, out: &Path) -> Result<()> {
    let http = completer();
    let res = Resources { proposer: None, completer: http.as_ref().map(|c| c as &dyn Completer) };
    let rows = run_suite(&spec, res, Some(&out.join("logs")))?;
    write_reports(out, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows written to {} ({failed} with errors)", rows.len(), out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Demo { env, episodes, steps, seed, out } => demo(&env, episodes, steps, seed, &out),
        Command::Learn { exp, data, out } => learn(&exp, data.as_deref(), &out),
        Command::Run { exp, out, log } => run(&exp, out.as_deref(), log.as_deref()),
        Command::Suite { envs, agents, seeds, set, config, out } => {
            let mut overrides = match config {
                Some(path) => pomdp_coder::harness::config::parse_pairs(&fs::read_to_string(&path)?)?,
                None => Vec::new(),
            };
            for s in &set {
                overrides.push(split_setting(s)?);
            }
            if overrides.iter().any(|(k, _)| k == "env" || k == "agent" || k == "seeds") {
                bail!("env, agent and seeds are set by --envs, --agents and --seeds");
            }
            let seeds = pomdp_coder::harness::config::parse_seeds(&seeds).with_context(|| format!("bad seeds '{seeds}'"))?;
            suite(SuiteSpec { envs, agents, seeds, overrides }, &out)
        }
        Command::Report { csv, out } => {
            let rows = read_rows(fs::File::open(&csv).with_context(|| format!("opening {}", csv.display()))?)?;
            write_reports(&out, &rows)?;
            println!("regenerated reports for {} rows in {}", rows.len(), out.display());
            Ok(())
        }
    }
}
