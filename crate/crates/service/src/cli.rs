//! Command-line entry points.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use kgagent_core::eval::{
    ablation_grid, apply_human_scores, export_failures, load_dataset, load_failures, profile_difficulty, run_ablation,
    ScorePolicy,
};
use kgagent_core::graph::GraphSchema;
use kgagent_core::gremlin;
use kgagent_core::offline::{
    default_templates, import_approved, load_review_items, regenerate_failures, synthesize_pairs, synthetic_cases,
    write_review_items,
};
use kgagent_core::store::write_pairs;
use kgagent_core::PropertyGraph;

use crate::config::{BackendKind, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "kgagent", version, about = "Question answering over an enterprise knowledge graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `listen` from the config file.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Print the complexity report of a script (text or file).
    Score { script: String },
    /// Check a script against a schema; exits non-zero on issues.
    Validate {
        #[arg(long)]
        schema: PathBuf,
        script: String,
    },
    #[command(subcommand)]
    Eval(EvalCommand),
    #[command(subcommand)]
    Analysis(AnalysisCommand),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the backend kind from the config file.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ServiceConfig> {
        let mut cfg = ServiceConfig::load(&self.config)?;
        if let Some(b) = self.backend {
            cfg.backend.kind = b;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Run every strategy at k = 3 and 5 plus zero-shot and write reports.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "eval-out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        scoring: Scoring,
        /// `case_id,score` file used with `--scoring human`.
        #[arg(long)]
        human_scores: Option<PathBuf>,
    },
    /// Difficulty histogram of the gold scripts.
    Profile {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Write synthetic cases from the built-in templates.
    Synthesize {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Scoring {
    Auto,
    Human,
}

#[derive(Debug, Subcommand)]
pub enum AnalysisCommand {
    /// Synthesize seed pairs from the graph.
    Synthesize {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate scripts for exported failures into a review file.
    Regenerate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        failures: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add approved review items to the seed-pair file.
    Import {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        review: PathBuf,
        /// Where to write the grown pair file; the configured one otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { config, listen } => {
            let mut cfg = ServiceConfig::load(&config)?;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            cfg.check()?;
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::server::serve(cfg))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Score { script } => {
            let text = script_text(&script)?;
            let t = gremlin::parse(&text)?;
            println!("{}", serde_json::to_string(&gremlin::complexity(&t))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { schema, script } => {
            let schema = GraphSchema::from_json(&std::fs::read_to_string(&schema)?)?;
            let text = script_text(&script)?;
            let issues = match gremlin::parse(&text) {
                Ok(t) => gremlin::validate(&t, &schema),
                Err(e) => vec![e.to_issue()],
            };
            let mut out = std::io::stdout().lock();
            for i in &issues {
                writeln!(out, "{}", serde_json::to_string(i)?)?;
            }
            Ok(if issues.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Eval(e) => eval(e),
        Command::Analysis(a) => analysis(a),
    }
}

/// A script argument that names an existing file is read from it.
fn script_text(arg: &str) -> Result<String> {
    let p = Path::new(arg);
    if !arg.trim_start().starts_with("g.") && p.is_file() {
        return Ok(std::fs::read_to_string(p)?.trim().to_string());
    }
    Ok(arg.to_string())
}

fn graph_of(cfg: &ServiceConfig) -> Result<PropertyGraph> {
    Ok(PropertyGraph::load(&cfg.graph.schema, &cfg.graph.nodes, &cfg.graph.edges)?)
}

fn eval(cmd: EvalCommand) -> Result<ExitCode> {
    match cmd {
        EvalCommand::Run {
            dataset,
            cfg,
            out,
            scoring,
            human_scores,
        } => {
            let cfg = cfg.load()?;
            let agent = cfg.build_agent()?;
            let mut cases = load_dataset(&dataset)?;
            let policy = match scoring {
                Scoring::Auto => ScorePolicy::Auto,
                Scoring::Human => ScorePolicy::Human,
            };
            if let Some(h) = human_scores {
                apply_human_scores(&mut cases, &std::fs::read_to_string(&h)?)?;
            }
            let (report, records) = run_ablation(&agent, &cases, &ablation_grid(&cfg.pipeline), policy)?;
            report.write(&out)?;
            let n = export_failures(&records, &cases, &out.join("failures.jsonl"))?;
            let mut records_file = String::new();
            for r in &records {
                records_file.push_str(&serde_json::to_string(r)?);
                records_file.push('\n');
            }
            std::fs::write(out.join("records.jsonl"), records_file)?;
            print!("{}", report.to_csv());
            eprintln!("{n} failed records written to {}", out.join("failures.jsonl").display());
            Ok(ExitCode::SUCCESS)
        }
        EvalCommand::Profile { dataset } => {
            let hist = profile_difficulty(&load_dataset(&dataset)?)?;
            println!("{}", serde_json::to_string_pretty(&hist)?);
            Ok(ExitCode::SUCCESS)
        }
        EvalCommand::Synthesize { cfg, n, seed, out } => {
            let cfg = cfg.load()?;
            let cases = synthetic_cases(&graph_of(&cfg)?, &default_templates(), n, seed)?;
            let mut text = String::new();
            for c in &cases {
                text.push_str(&serde_json::to_string(c)?);
                text.push('\n');
            }
            std::fs::write(&out, text)?;
            eprintln!("{} cases written to {}", cases.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn analysis(cmd: AnalysisCommand) -> Result<ExitCode> {
    match cmd {
        AnalysisCommand::Synthesize { cfg, n, seed, out } => {
            let cfg = cfg.load()?;
            let pairs = synthesize_pairs(&graph_of(&cfg)?, &default_templates(), n, seed)?;
            write_pairs(&out, &pairs)?;
            eprintln!("{} pairs written to {}", pairs.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        AnalysisCommand::Regenerate { cfg, failures, out } => {
            let cfg = cfg.load()?;
            let agent = cfg.build_agent()?;
            let failures = load_failures(&failures)?;
            let items = regenerate_failures(&agent, &failures, &cfg.pipeline);
            write_review_items(&out, &items)?;
            eprintln!("{} review items written to {}", items.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        AnalysisCommand::Import { cfg, review, out } => {
            let cfg = cfg.load()?;
            let agent = cfg.build_agent()?;
            let items = load_review_items(&review)?;
            let (store, report) = import_approved(&items, agent.store(), agent.graph())?;
            let target = out.unwrap_or_else(|| cfg.store.pairs.clone());
            write_pairs(&target, store.pairs())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            for (id, why) in &report.rejected {
                eprintln!("{id}: {why}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn main_with_args() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
