use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};

use teamsync::io::{parse_robot, read};
use teamsync::ltl::Alphabet;
use teamsync::model::to_f64;
use teamsync::optimal::PlanError;
use teamsync::planfile::{run_pipeline, PipelineError, PlanFile};
use teamsync::sim::{observed_cost, plot_svg, simulate, verify_trace, SimConfig, SimError, Sampling, TIME_EPS};
use teamsync::sync::{build_field_word_automaton, SyncError};
use teamsync::team::{construct_region_automaton, construct_team_ts, state_bounds};

/// Optimal runs and wait/notify synchronization for robot teams under LTL
/// missions.
#[derive(Parser)]
#[command(name = "teamsync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan an optimal run and its synchronization schedule.
    Plan(PlanArgs),
    /// Execute a plan under sampled travel-time deviations.
    Simulate(SimulateArgs),
    /// Dump the team system, the region automaton or the size bounds.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Robot transition system files, in robot order.
    #[arg(short, long = "robot", required = true)]
    robots: Vec<PathBuf>,
    /// Mission file.
    #[arg(short, long)]
    mission: PathBuf,
    /// Where to write the plan.
    #[arg(short, long)]
    out: PathBuf,
    /// Print every wait-edge decision with its violating witness.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(short, long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suffix cycles to run.
    #[arg(long, default_value_t = 100)]
    cycles: usize,
    /// Sample only the endpoints of each travel-time interval.
    #[arg(long, conflicts_with = "nominal")]
    adversarial: bool,
    /// Use nominal travel times.
    #[arg(long)]
    nominal: bool,
    /// Robot files to check against the plan's digests.
    #[arg(short, long = "robot")]
    robots: Vec<PathBuf>,
    /// Timeline figure.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Structured trace (JSON).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Line-oriented event log.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    TeamTs,
    Region,
    Bounds,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(short, long = "robot", required = true)]
    robots: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "bounds")]
    what: What,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

const UNSAT: u8 = 2;
const NOT_ROBUST: u8 = 3;
const VERIFY: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Inspect(a) => cmd_inspect(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load(paths: &[PathBuf]) -> Result<Vec<(String, String)>, Failure> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read(p).map_err(anyhow::Error::from)?)))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::from)
}

fn cmd_plan(a: &PlanArgs) -> Result<(), Failure> {
    let robots = load(&a.robots)?;
    let mission = load(std::slice::from_ref(&a.mission))?.remove(0);
    let out = run_pipeline(&robots, &mission).map_err(|e| {
        let code = match &e {
            PipelineError::Plan(PlanError::NoSatisfyingRun(_)) => UNSAT,
            PipelineError::Sync(SyncError::NotRobust(_)) => NOT_ROBUST,
            _ => 1,
        };
        Failure::new(code, e)
    })?;
    let f = &out.file;
    if a.explain {
        for r in &out.explain {
            let verdict = if r.kept { "kept" } else { "removed" };
            println!(
                "k={} robot {} waits for robot {}: {verdict}",
                r.position, r.waiter, r.waited
            );
            if let Some(w) = &r.witness {
                println!("  violating field word: {}", format_lasso(w));
            }
        }
    }
    write(&a.out, &f.to_json())?;
    let c = &f.cost_report;
    println!("team TS: {} states, {} edges (bound {})", f.team.states, f.team.edges, f.team.state_bound);
    println!("planned cost J = {} time units", c.planned_cost);
    println!("suffix duration d_s = {}", c.suffix_duration);
    println!("field bound = {} ({:.4})", c.field_bound, to_f64(c.field_bound));
    println!(
        "run: prefix {} positions, suffix cycle {} positions",
        f.prefix_len, f.cycle_len
    );
    println!(
        "sync: {} wait edges kept after {} emptiness checks",
        f.sync.wait_edges, f.sync.emptiness_checks
    );
    for r in &f.robots {
        let states: Vec<&str> = r.positions.iter().map(|p| p.state.as_str()).collect();
        let (pre, suf) = states.split_at(f.prefix_len);
        println!("  {}: {} | {}", r.name, pre.join(" "), suf.join(" "));
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn format_lasso(w: &teamsync::ltl::LassoWord) -> String {
    let fmt = |v: &[teamsync::model::PropSet]| {
        v.iter()
            .map(|l| format!("{{{}}}", l.iter().cloned().collect::<Vec<_>>().join(",")))
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!("{} ({})^w", fmt(&w.stem), fmt(&w.cycle))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let text = read(&a.plan).map_err(anyhow::Error::from)?;
    let plan = PlanFile::from_json(&text).map_err(|e| Failure::new(1, e))?;
    if !a.robots.is_empty() {
        plan.check_robot_files(&load(&a.robots)?).map_err(|e| Failure::new(1, e))?;
    }
    let mission = plan.mission().map_err(|e| Failure::new(1, e))?;
    let model = plan.execution_model();
    let schedule = plan.schedule();
    schedule.check_reciprocal().map_err(|e| Failure::new(1, e))?;
    let sampling = if a.nominal {
        Sampling::Nominal
    } else if a.adversarial {
        Sampling::Adversarial
    } else {
        Sampling::Uniform
    };
    if a.cycles < 2 {
        return Err(Failure::new(1, SimError::InsufficientCycles(a.cycles)));
    }
    let trace = simulate(&model, &schedule, &SimConfig::new(a.seed, a.cycles, sampling)).map_err(|e| Failure::new(VERIFY, e))?;

    if let Some(p) = &a.trace {
        write(p, &trace.to_json())?;
    }
    if let Some(p) = &a.log {
        write(p, &trace.event_log())?;
    }
    if let Some(p) = &a.plot {
        let names: Vec<String> = model.robots.iter().map(|r| r.name.clone()).collect();
        write(p, &plot_svg(&trace, &names))?;
    }

    let alphabet = Alphabet::new(&mission.global_props);
    let w = match build_field_word_automaton(&model, &schedule, &alphabet) {
        Ok(w) => Some(w),
        Err(e) => {
            println!("field word check skipped: {e}");
            None
        }
    };
    let verdict = verify_trace(&trace, &mission, w.as_ref());
    let cost = observed_cost(&trace).map_err(|e| Failure::new(VERIFY, e))?;
    let bound = plan.cost_report.field_bound;
    println!("cycles: {}, events: {}", trace.num_cycles, trace.events.len());
    println!("observed cost = {cost:.6} (bound {} = {:.6})", bound, to_f64(bound));
    let mut failed = false;
    if let Some(false) = verdict.in_field_language {
        println!("observed word is not generated by the field word automaton");
        failed = true;
    }
    if let Some((c, word)) = verdict.failures.first() {
        println!(
            "mission violated in {} of {} cycles; first at cycle {c}: {}",
            verdict.failures.len(),
            verdict.cycles_checked,
            format_lasso(word)
        );
        failed = true;
    } else {
        println!("mission satisfied in all {} cycles", verdict.cycles_checked);
    }
    if cost > to_f64(bound) + TIME_EPS {
        println!("observed cost exceeds the field bound");
        failed = true;
    }
    if sampling == Sampling::Nominal {
        let planned = model.planned_word(a.cycles);
        let same = planned.len() == trace.observed_word.len()
            && planned
                .entries
                .iter()
                .zip(&trace.observed_word.entries)
                .all(|(p, o)| to_f64(p.time) == o.time && p.letter == o.letter);
        println!("observed word {} the planned word", if same { "equals" } else { "differs from" });
        failed |= !same;
        if cost != to_f64(plan.cost_report.planned_cost) {
            println!("nominal cost differs from the planned cost {}", plan.cost_report.planned_cost);
            failed = true;
        }
    }
    if failed {
        return Err(Failure::new(VERIFY, anyhow::anyhow!("verification failed")));
    }
    Ok(())
}

fn cmd_inspect(a: &InspectArgs) -> Result<(), Failure> {
    let files = load(&a.robots)?;
    let robots = files
        .iter()
        .enumerate()
        .map(|(i, (name, text))| parse_robot(text, name, i + 1))
        .collect::<Result<Vec<_>, _>>()
        .map_err(anyhow::Error::from)?;
    match a.what {
        What::TeamTs => {
            let t = construct_team_ts(&robots).map_err(anyhow::Error::from)?;
            println!("team TS: {} states, {} edges", t.num_states(), t.ts.num_edges());
            print!("{}", t.ts.to_graph_text());
        }
        What::Region => {
            let r = construct_region_automaton(&robots).map_err(anyhow::Error::from)?;
            println!("region automaton: {} states, {} edges", r.ts.num_states(), r.ts.num_edges());
            print!("{}", r.ts.to_graph_text());
        }
        What::Bounds => {}
    }
    let b = state_bounds(&robots);
    println!("bounds: team {} / region {} / naive {}", b.team, b.region, b.naive);
    Ok(())
}
