use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ztsdn::pipeline::{
    cmd_enforce, cmd_mine, cmd_report, cmd_simulate, cmd_train, CommandError, PipelineConfig, EXIT_TRAINING_HEURISTICS,
};

#[derive(Parser)]
#[command(name = "ztsdn", version, about = "Zero-trust flow control for software-defined networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the communication graph from traces and train per-edge models.
    Train(Overrides),
    /// Mine flow rules and rule associations from trained models.
    Mine(Overrides),
    /// Score a labeled evaluation trace against trained models.
    Enforce(Overrides),
    /// Compare the zero-trust controller with reactive forwarding.
    Simulate(Overrides),
    /// Merge the reports found in the output directory.
    Report(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// Pipeline config (JSON).
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the configured training traces.
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    #[arg(long)]
    app_mapping: Option<PathBuf>,
    #[arg(long)]
    eval_trace: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn config(self) -> Result<PipelineConfig, CommandError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.traces.is_empty() {
            cfg.traces = self.traces;
        }
        cfg.app_mapping = self.app_mapping.or(cfg.app_mapping);
        cfg.eval_trace = self.eval_trace.or(cfg.eval_trace);
        cfg.scenario = self.scenario.or(cfg.scenario);
        cfg.model_dir = self.model_dir.unwrap_or(cfg.model_dir);
        cfg.output_dir = self.output_dir.unwrap_or(cfg.output_dir);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    match cli.command {
        Command::Train(o) => {
            let s = cmd_train(&o.config()?)?;
            let ready = s.report.edges.len() - s.report.failures.len();
            println!("{} packets, {} edges, {ready} ready", s.packets, s.report.edges.len());
            for f in &s.report.failures {
                eprintln!("not converged: {f}");
            }
            Ok(if s.report.failures.is_empty() { 0 } else { EXIT_TRAINING_HEURISTICS })
        }
        Command::Mine(o) => {
            let book = cmd_mine(&o.config()?)?;
            println!("{} rules for {} applications", book.rules.len(), book.applications.len());
            Ok(0)
        }
        Command::Enforce(o) => {
            let s = cmd_enforce(&o.config()?)?;
            let a = s.access;
            println!("packets {}: tp {} tn {} fp {} fn {}", s.packets, a.tp, a.tn, a.fp, a.fn_);
            Ok(0)
        }
        Command::Simulate(o) => {
            let r = cmd_simulate(&o.config()?)?;
            let c = &r.comparison;
            println!(
                "packet_in zt {} fwd {}; peak rules/switch zt {} fwd {}",
                c.zt.packet_in_count,
                c.fwd.packet_in_count,
                c.zt.max_rules_per_switch(),
                c.fwd.max_rules_per_switch()
            );
            Ok(0)
        }
        Command::Report(o) => {
            let v = cmd_report(&o.config()?)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
