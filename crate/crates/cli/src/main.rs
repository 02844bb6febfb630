//! `apex` — command-line frontend for the exploration engine.
//!
//! Subcommands: `parse` (validate + normalized dump), `explore` (build the
//! GUI model and coverage report), `target` (explore with required code
//! targets), `replay` (apply a sequence file), `baseline-random` (random
//! event baseline with the same report format).
//!
//! Set `APEX_LOG=debug` for solver and explorer traces.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use apex_core::appir::{parse_app, App};
use apex_core::explorer::{
    baseline_random, explore, Budget, ExploreOutcome, RunReport, Target,
};
use apex_core::ipcfg::{build_ipcfg, executed_path, PathBounds};
use apex_core::runtime::{coverage_of_log, Event, RuntimeState};
use apex_core::solver::SolveBounds;

#[derive(Parser)]
#[command(name = "apex", version, about = "Concolic event-sequence generation for mini apps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct BoundArgs {
    /// PRNG seed for text payloads and the random baseline
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Stop after this many applied events
    #[arg(long, default_value_t = 2000)]
    max_events: u64,
    /// Wall-clock budget in seconds (unset: run to completion)
    #[arg(long)]
    max_seconds: Option<u64>,
    /// Max traversals of a loop back-edge per frame during path enumeration
    #[arg(long, default_value_t = 1)]
    loop_bound: usize,
    /// Max enumerated paths per handler
    #[arg(long, default_value_t = 256)]
    max_paths: usize,
    /// Max call-inlining depth for inter-procedural graphs
    #[arg(long, default_value_t = 8)]
    call_depth: usize,
    /// Integer search domain half-width for the constraint solver
    #[arg(long, default_value_t = 64)]
    domain_bound: i64,
    /// Max summary-chaining depth in the solver
    #[arg(long, default_value_t = 3)]
    recursion_bound: u32,
    /// Max repetition count for monotone-counter expansion
    #[arg(long, default_value_t = 16)]
    k_max: u32,
    /// Iterations an unsolved summary stays ineligible after a failure
    #[arg(long, default_value_t = 3)]
    penalty_window: u64,
    /// Solve attempts before a summary is retired
    #[arg(long, default_value_t = 5)]
    max_attempts: u32,
}

impl BoundArgs {
    fn budget(&self) -> Budget {
        Budget {
            max_events: self.max_events,
            max_seconds: self.max_seconds,
            path_bounds: PathBounds {
                loop_bound: self.loop_bound,
                max_paths: self.max_paths,
                call_depth: self.call_depth,
            },
            solve_bounds: SolveBounds {
                domain_bound: self.domain_bound,
                recursion_bound: self.recursion_bound,
                k_max: self.k_max,
            },
            penalty_window: self.penalty_window,
            max_attempts: self.max_attempts,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an app file, printing a normalized dump
    Parse {
        /// App file (.mapp)
        app: PathBuf,
    },
    /// Explore an app: build its GUI model, write model and report files
    Explore {
        app: PathBuf,
        /// Code targets file, one `Class.method:index` per line
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Output directory for model.json, model.dot, report.json, sequences/
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Targeted input generation: explore with a required targets file
    Target {
        app: PathBuf,
        /// Code targets file, one `Class.method:index` per line
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Apply a sequence file and print the final layout and executed path
    Replay {
        app: PathBuf,
        /// Sequence file, one event per line
        sequence: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Random-event baseline; emits the same report format as explore
    BaselineRandom {
        app: PathBuf,
        /// Number of events to fire
        #[arg(long, default_value_t = 1000)]
        budget: u64,
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn load_app(path: &Path) -> Result<App> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    match parse_app(&text) {
        Ok(app) => Ok(app),
        Err(e) => bail!("{}:{e}", path.display()),
    }
}

/// Parses a targets file and checks every entry resolves in the app.
fn load_targets(path: &Path, app: &App) -> Result<Vec<Target>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut targets = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let target: Target = line
            .parse()
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), lineno + 1))?;
        let method = app.method(&target.method).with_context(|| {
            format!("{}:{}: target method `{}` not in app", path.display(), lineno + 1, target.method)
        })?;
        if target.index >= method.body.len() {
            bail!(
                "{}:{}: target index {} out of range for `{}` ({} instructions)",
                path.display(),
                lineno + 1,
                target.index,
                target.method,
                method.body.len()
            );
        }
        targets.push(target);
    }
    Ok(targets)
}

fn app_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_outputs(
    out_dir: &Path,
    outcome: &ExploreOutcome,
    report: &RunReport,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("model.json"), outcome.model.to_json())?;
    fs::write(out_dir.join("model.dot"), outcome.model.to_dot())?;
    fs::write(out_dir.join("report.json"), report.to_json())?;
    let seq_dir = out_dir.join("sequences");
    fs::create_dir_all(&seq_dir)?;
    // one replayable file per discovered transition (its witness run)
    for (summary, events) in &outcome.witnesses {
        let mut text = String::new();
        for e in events {
            text.push_str(&e.to_line());
            text.push('\n');
        }
        fs::write(seq_dir.join(format!("transition-{summary}.txt")), text)?;
    }
    // and per hit target
    for (i, hit) in outcome.history.target_hits.iter().enumerate() {
        let mut text = String::new();
        for e in &hit.sequence {
            text.push_str(&e.to_line());
            text.push('\n');
        }
        let name = format!("target-{i}-{}-{}.txt", hit.target.method, hit.target.index);
        fs::write(seq_dir.join(name), text)?;
    }
    Ok(())
}

fn cmd_explore(
    app_path: &Path,
    targets_path: Option<&Path>,
    out_dir: &Path,
    bounds: &BoundArgs,
    mode: &str,
) -> Result<()> {
    let app = load_app(app_path)?;
    let targets = match targets_path {
        Some(p) => load_targets(p, &app)?,
        None => vec![],
    };
    let budget = bounds.budget();
    let outcome = explore(&app, &targets, budget, bounds.seed);
    let report =
        RunReport::from_outcome(&outcome, &app_name(app_path), bounds.seed, budget, mode);
    write_outputs(out_dir, &outcome, &report)?;
    println!(
        "{}: {} states, {} transitions, coverage {}/{} ({:.0}%), targets {}/{}",
        app_name(app_path),
        outcome.model.states.len(),
        outcome.model.transitions.len(),
        outcome.coverage.covered,
        outcome.coverage.total,
        outcome.coverage.fraction() * 100.0,
        outcome.coverage.targets_hit,
        outcome.coverage.targets_total,
    );
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_replay(app_path: &Path, sequence_path: &Path, seed: u64) -> Result<ExitCode> {
    let app = load_app(app_path)?;
    let text = fs::read_to_string(sequence_path)
        .with_context(|| format!("reading {}", sequence_path.display()))?;
    let mut events = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let event = Event::parse_line(line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", sequence_path.display(), lineno + 1))?;
        events.push(event);
    }
    if events.is_empty() {
        bail!("{}: empty sequence", sequence_path.display());
    }

    let mut state = RuntimeState::prelaunch(seed);
    let mut covered = std::collections::BTreeSet::new();
    let mut last = None;
    for (i, event) in events.iter().enumerate() {
        match state.apply_event(&app, event) {
            Ok(outcome) => {
                covered.extend(coverage_of_log(&app, &outcome.log));
                last = Some(outcome);
            }
            Err(e) => {
                println!("replay failed at event {i}: {e}");
                return Ok(ExitCode::from(1));
            }
        }
    }
    let outcome = last.expect("non-empty sequence");
    println!("final layout: {}", outcome.layout.layout_id());
    match outcome.handlers.first() {
        Some(handler) => {
            let g = build_ipcfg(handler, &app, PathBounds::default().call_depth);
            match executed_path(
                &outcome.log.first_root_segment(),
                &g,
                &app,
                PathBounds::default(),
            ) {
                Ok(path) => println!("executed path: {}", path.label()),
                Err(e) => println!("executed path: unresolved ({e})"),
            }
        }
        None => println!("executed path: none (no handler ran)"),
    }
    println!("coverage delta: {} instructions", covered.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_baseline(
    app_path: &Path,
    budget_events: u64,
    targets_path: Option<&Path>,
    out_dir: &Path,
    seed: u64,
) -> Result<()> {
    let app = load_app(app_path)?;
    let targets = match targets_path {
        Some(p) => load_targets(p, &app)?,
        None => vec![],
    };
    let (coverage, applied) = baseline_random(&app, budget_events, seed, &targets);
    let budget = Budget { max_events: budget_events, ..Budget::default() };
    let report =
        RunReport::from_baseline(coverage.clone(), applied, &app_name(app_path), seed, budget);
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.json"), report.to_json())?;
    println!(
        "{}: random baseline coverage {}/{} ({:.0}%) after {} events, targets {}/{}",
        app_name(app_path),
        coverage.covered,
        coverage.total,
        coverage.fraction() * 100.0,
        applied,
        coverage.targets_hit,
        coverage.targets_total,
    );
    Ok(())
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Parse { app } => {
            let parsed = load_app(app)?;
            print!("{}", parsed.serialize());
            Ok(ExitCode::SUCCESS)
        }
        Command::Explore { app, targets, out, bounds } => {
            cmd_explore(app, targets.as_deref(), out, bounds, "explore")?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Target { app, targets, out, bounds } => {
            cmd_explore(app, Some(targets), out, bounds, "target")?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { app, sequence, seed } => cmd_replay(app, sequence, *seed),
        Command::BaselineRandom { app, budget, targets, out, seed } => {
            cmd_baseline(app, *budget, targets.as_deref(), out, *seed)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("APEX_LOG")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
