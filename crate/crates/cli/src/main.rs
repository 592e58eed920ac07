//! `voform`: run, validate and check VO formation scenarios.
//!
//! Exit codes: 0 success, 1 unreadable or invalid input, 2 formation failure
//! (for `run`) or a trace that does not re-validate (for `check`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use voform::scenario::{parse_scenario, parse_trace, ScenarioError};
use voform::FormationTrace;

#[derive(Parser)]
#[command(
    name = "voform",
    version,
    about = "Virtual organisation formation over agent societies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the six formation transitions on a scenario.
    Run {
        scenario: PathBuf,
        /// Where to write the trace file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's per-dialogue message limit.
        #[arg(long)]
        max_dialogue_steps: Option<usize>,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Re-validate every step of a saved trace.
    Check { trace: PathBuf },
}

const INPUT_ERROR: u8 = 1;
const FORMATION_FAILURE: u8 = 2;

fn input_error(e: &ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(INPUT_ERROR)
}

fn summarize(trace: &FormationTrace) {
    for step in &trace.steps {
        println!(
            "{:<18} {}",
            step.transition.to_string(),
            if step.report.passed() { "ok" } else { "FAILED" }
        );
    }
    if let Some(vo) = trace.final_vo() {
        let members: Vec<String> = vo.agents.keys().map(|a| a.to_string()).collect();
        println!("members: {}", members.join(", "));
        if let Some(wf) = &vo.workflow {
            for s in wf.services() {
                println!("service: {s}");
            }
        }
        for c in &vo.contracts {
            println!("contract: {}", c.cid);
        }
    }
}

fn run(scenario: PathBuf, trace_path: Option<PathBuf>, seed: Option<u64>, max_steps: Option<usize>) -> ExitCode {
    let mut s = match parse_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => return input_error(&e),
    };
    if let Some(seed) = seed {
        s = s.with_seed(seed);
    }
    if let Some(k) = max_steps {
        if k == 0 {
            eprintln!("error: --max-dialogue-steps must be at least 1");
            return ExitCode::from(INPUT_ERROR);
        }
        s = s.with_max_dialogue_steps(k);
    }
    let trace = s.run();
    summarize(&trace);
    let completed = trace.completed();
    let failure = trace
        .failure
        .as_ref()
        .map(|f| format!("{} failed: {}", f.transition, f.message));
    if let Some(path) = trace_path {
        if let Err(e) = std::fs::write(&path, s.trace_file(trace).to_json()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(INPUT_ERROR);
        }
    }
    if completed {
        ExitCode::SUCCESS
    } else {
        eprintln!("formation {}", failure.unwrap_or_else(|| "stopped early".into()));
        ExitCode::from(FORMATION_FAILURE)
    }
}

fn validate(scenario: PathBuf) -> ExitCode {
    match parse_scenario(&scenario) {
        Ok(s) => {
            println!(
                "{}: valid ({} agents, {} services, {} registry facts)",
                s.file.name,
                s.society.agents().len(),
                s.society.services().len(),
                s.registry.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => input_error(&e),
    }
}

fn check(path: PathBuf) -> ExitCode {
    let verdict = match parse_trace(&path).and_then(|t| t.check()) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    for report in &verdict.reports {
        println!(
            "{:<18} {}",
            report.transition.to_string(),
            if report.passed() { "ok" } else { "FAILED" }
        );
        for c in report.failures() {
            println!(
                "  {}{}",
                c.name,
                c.detail.as_ref().map(|d| format!(": {d}")).unwrap_or_default()
            );
        }
    }
    for broken in &verdict.chain {
        println!("chain: {broken}");
    }
    if verdict.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("trace does not re-validate");
        ExitCode::from(FORMATION_FAILURE)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            trace,
            seed,
            max_dialogue_steps,
        } => run(scenario, trace, seed, max_dialogue_steps),
        Command::Validate { scenario } => validate(scenario),
        Command::Check { trace } => check(trace),
    }
}
