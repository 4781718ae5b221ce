//! `stm`: solve, check, brute-force, reduce and generate typed stable
//! matching instances.
//!
//! Exit codes: 0 success / stable, 1 unstable matching or internal
//! disagreement, 2 no stable matching (or no matching with the requested
//! count), 3 unsupported model, 4 input error.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stm_core::gen::{generate, GenModel, GenParams};
use stm_core::oracle::{self, OracleError};
use stm_core::quality::{self, QualityOutcome};
use stm_core::reductions::{clique_to_com_smti, UndirectedGraph};
use stm_core::refined::{self, QualityObjective};
use stm_core::{
    exceptions, hrc, smallip, typed, AgentMatching, MatchingError, ProblemKind, SolveError,
    TypedInstance,
};

use report::{digest, pairs, render, Blocking, CheckReport, Format, RunReport};

#[derive(Parser, Debug)]
#[command(name = "stm", version, about = "Typed stable matching solvers and oracles")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for profile enumeration (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance file with the fixed-parameter solvers.
    Solve(SolveArgs),
    /// Report blocking pairs of a matching file.
    Check {
        instance: PathBuf,
        matching: PathBuf,
    },
    /// Brute-force reference answers (small instances only).
    Oracle {
        #[command(subcommand)]
        task: OracleTask,
    },
    /// Emit a reduction gadget as an instance file.
    Reduce {
        #[command(subcommand)]
        reduction: Reduction,
    },
    /// Generate a seeded random instance.
    Gen(GenArgs),
    /// Solve a plain-text integer program (debugging aid).
    Ip {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    /// `max-size`, `min-bp`, `min-ba` or `exact-bp:<Z>`.
    #[arg(long, default_value = "max-size")]
    objective: String,
    /// Restrict min-bp / min-ba to maximum-cardinality matchings.
    #[arg(long)]
    max_size: bool,
}

#[derive(Subcommand, Debug)]
enum OracleTask {
    /// Maximum stable matching.
    MaxStable { instance: PathBuf },
    /// Fewest blocking pairs.
    MinBp {
        instance: PathBuf,
        #[arg(long)]
        max_size: bool,
    },
    /// Fewest blocking agents.
    MinBa {
        instance: PathBuf,
        #[arg(long)]
        max_size: bool,
    },
    /// A matching with exactly `z` blocking pairs.
    ExactBp {
        instance: PathBuf,
        #[arg(long)]
        z: usize,
    },
    /// Whether a complete stable matching exists.
    Com { instance: PathBuf },
    /// Count all matchings and the stable ones.
    Count { instance: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Reduction {
    /// Clique → marriage instance with two exceptions per edge-man.
    Clique {
        /// Edge list: `n m`, then `u v` per edge (0-indexed).
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        r: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Smti,
    Srti,
    Hrt,
    Hrc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Typed,
    Refined,
    #[value(name = "1top")]
    OneTop,
    Hrc,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = KindArg::Smti)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = ModelArg::Typed)]
    model: ModelArg,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Probability that a candidate type is acceptable.
    #[arg(long, default_value_t = 0.8)]
    accept: f64,
    /// Probability that consecutive acceptable types are tied.
    #[arg(long, default_value_t = 0.3)]
    ties: f64,
    #[arg(long, default_value_t = 2)]
    max_capacity: usize,
    /// Per-agent probability of a top exception (1top model).
    #[arg(long, default_value_t = 0.3)]
    exception: f64,
    #[arg(long, default_value_t = 1)]
    couples: usize,
    /// No ties between types.
    #[arg(long)]
    strict: bool,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl std::fmt::Display) -> Self {
        Failure { code: 4, msg: msg.to_string() }
    }
    fn internal(msg: impl std::fmt::Display) -> Self {
        Failure { code: 1, msg: msg.to_string() }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::NoStable => 2,
            SolveError::Unsupported(_) => 3,
            SolveError::Instance(_) | SolveError::Matching(_) => 4,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::CapExceeded { .. } => Failure { code: 3, msg: e.to_string() },
            OracleError::Matching(m) => Failure::input(m),
        }
    }
}

impl From<MatchingError> for Failure {
    fn from(e: MatchingError) -> Self {
        Failure::input(e)
    }
}

type Outcome = Result<(String, u8), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(String, TypedInstance), Failure> {
    let text = read(path)?;
    let inst = stm_core::parse_instance(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok((text, inst))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Objective {
    MaxSize,
    MinBp { max_size: bool },
    MinBa { max_size: bool },
    ExactBp(usize),
}

impl Objective {
    fn parse(s: &str, max_size: bool) -> Result<Self, Failure> {
        match s {
            "max-size" => Ok(Objective::MaxSize),
            "min-bp" => Ok(Objective::MinBp { max_size }),
            "min-ba" => Ok(Objective::MinBa { max_size }),
            _ => s
                .strip_prefix("exact-bp:")
                .and_then(|z| z.parse().ok())
                .map(Objective::ExactBp)
                .ok_or_else(|| Failure::input(format!("unknown objective '{s}'"))),
        }
    }

    fn label(self) -> String {
        match self {
            Objective::MaxSize => "max-size".into(),
            Objective::MinBp { max_size } => format!("min-bp{}", if max_size { " (max size)" } else { "" }),
            Objective::MinBa { max_size } => format!("min-ba{}", if max_size { " (max size)" } else { "" }),
            Objective::ExactBp(z) => format!("exact-bp:{z}"),
        }
    }

    fn quality(self) -> Option<QualityObjective> {
        match self {
            Objective::MaxSize => None,
            Objective::MinBp { max_size } => Some(QualityObjective::MinBp { max_size }),
            Objective::MinBa { max_size } => Some(QualityObjective::MinBa { max_size }),
            Objective::ExactBp(z) => Some(QualityObjective::ExactBp(z)),
        }
    }
}

/// Solver output before independent re-verification.
struct Raw {
    solver: &'static str,
    profiles: Option<usize>,
    optimum: usize,
    matching: AgentMatching,
}

fn no_exact(z: usize) -> Failure {
    Failure { code: 2, msg: format!("no matching has exactly {z} blocking pairs") }
}

fn from_quality(solver: &'static str, q: Option<QualityOutcome>, obj: Objective) -> Result<Raw, Failure> {
    let q = match (q, obj) {
        (Some(q), _) => q,
        (None, Objective::ExactBp(z)) => return Err(no_exact(z)),
        (None, _) => return Err(Failure::internal("quality solver returned nothing")),
    };
    Ok(Raw { solver, profiles: None, optimum: q.value, matching: q.matching })
}

fn solve_structured(inst: &TypedInstance, obj: Objective) -> Result<Raw, Failure> {
    if inst.kind == ProblemKind::Hrc {
        if obj != Objective::MaxSize {
            return Err(SolveError::Unsupported("couples support max-size only".into()).into());
        }
        let s = hrc::solve_max_hrc(inst)?;
        return Ok(Raw {
            solver: "ip",
            profiles: Some(s.profiles),
            optimum: s.matched_residents,
            matching: s.matching,
        });
    }
    if inst.has_exceptions() {
        if obj != Objective::MaxSize {
            return Err(SolveError::Unsupported("exception instances support max-size only".into()).into());
        }
        let s = exceptions::solve_1top_max_smti(inst)?;
        return Ok(Raw {
            solver: "matching",
            profiles: Some(s.functions),
            optimum: s.size,
            matching: s.matching,
        });
    }
    let path = if inst.kind.is_bipartite() { "flow" } else { "ip" };
    if inst.has_refinements() {
        return match obj.quality() {
            None => {
                let s = refined::solve_max_refined(inst)?;
                let solver = if path == "flow" { "flow+realize" } else { "ip+realize" };
                Ok(Raw { solver, profiles: Some(s.profiles), optimum: s.size, matching: s.matching })
            }
            Some(q) => from_quality("ip+realize", refined::solve_refined_quality(inst, q)?, obj),
        };
    }
    match obj {
        Objective::MaxSize => {
            let s = typed::solve_max(inst)?;
            Ok(Raw { solver: path, profiles: Some(s.profiles), optimum: s.size, matching: s.matching })
        }
        Objective::MinBp { max_size } => from_quality("ip", Some(quality::solve_min_bp(inst, max_size)?), obj),
        Objective::MinBa { max_size } => from_quality("ip", Some(quality::solve_min_ba(inst, max_size)?), obj),
        Objective::ExactBp(z) => from_quality("ip", quality::solve_exact_bp(inst, z)?, obj),
    }
}

fn solve_oracle(inst: &TypedInstance, obj: Objective) -> Result<Raw, Failure> {
    let (optimum, matching) = match obj {
        Objective::MaxSize => oracle::max_stable_brute(inst)?.ok_or(SolveError::NoStable)?,
        Objective::MinBp { max_size } => oracle::min_bp_brute(inst, max_size)?,
        Objective::MinBa { max_size } => oracle::min_ba_brute(inst, max_size)?,
        Objective::ExactBp(z) => (z, oracle::exact_bp_brute(inst, z)?.ok_or_else(|| no_exact(z))?),
    };
    Ok(Raw { solver: "oracle", profiles: None, optimum, matching })
}

/// Builds the report, recomputing blocking pairs from the agent-level
/// lists; any disagreement with the solver's claim is a hard failure.
fn verified_report(text: &str, inst: &TypedInstance, obj: Objective, raw: Raw, start: Instant) -> Outcome {
    let checked = oracle::blocking_report(inst, &raw.matching)?;
    let blocking = Blocking::new(inst, &checked);
    let size = raw.matching.size();
    let recomputed = match obj {
        Objective::MaxSize => {
            if !checked.is_stable() {
                return Err(Failure::internal(format!(
                    "solver returned an unstable matching ({} blocking pairs, {} coalitions)",
                    checked.blocking_pairs.len(),
                    checked.coalitions.len()
                )));
            }
            size
        }
        Objective::MinBa { .. } => checked.blocking_agents.len(),
        _ => checked.blocking_pairs.len(),
    };
    if recomputed != raw.optimum {
        return Err(Failure::internal(format!(
            "solver reports {} but the checker counts {recomputed}",
            raw.optimum
        )));
    }
    let report = RunReport {
        instance: digest(text),
        solver: raw.solver.to_string(),
        objective: obj.label(),
        profiles: raw.profiles,
        optimum: raw.optimum,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        size,
        pairs: pairs(inst, &raw.matching),
        blocking,
    };
    Ok((render(output_format(), &report, RunReport::text), 0))
}

fn cmd_solve(args: &SolveArgs) -> Outcome {
    let (text, inst) = load(&args.instance)?;
    let obj = Objective::parse(&args.objective, args.max_size)?;
    let start = Instant::now();
    let raw = match solve_structured(&inst, obj) {
        // Exception models beyond one top exception have no structured
        // solver; small ones are still answered by enumeration.
        Err(f) if f.code == 3 && inst.has_exceptions() => {
            let (general, bipartite) = oracle::caps();
            let cap = if inst.kind.is_bipartite() { bipartite } else { general };
            if inst.n() > cap {
                return Err(Failure {
                    code: 3,
                    msg: format!("{}; oracle only, and {} agents exceed the cap of {cap}", f.msg, inst.n()),
                });
            }
            solve_oracle(&inst, obj)?
        }
        other => other?,
    };
    verified_report(&text, &inst, obj, raw, start)
}

fn cmd_check(instance: &Path, matching: &Path) -> Outcome {
    let (_, inst) = load(instance)?;
    let m = AgentMatching::parse(&read(matching)?, &inst)?;
    let checked = oracle::blocking_report(&inst, &m)?;
    let report = CheckReport {
        size: m.size(),
        stable: checked.is_stable(),
        pairs: pairs(&inst, &m),
        blocking: Blocking::new(&inst, &checked),
    };
    let code = if report.stable { 0 } else { 1 };
    Ok((render(output_format(), &report, CheckReport::text), code))
}

fn cmd_oracle(task: &OracleTask) -> Outcome {
    let start = Instant::now();
    let (path, obj) = match task {
        OracleTask::MaxStable { instance } => (instance, Objective::MaxSize),
        OracleTask::MinBp { instance, max_size } => (instance, Objective::MinBp { max_size: *max_size }),
        OracleTask::MinBa { instance, max_size } => (instance, Objective::MinBa { max_size: *max_size }),
        OracleTask::ExactBp { instance, z } => (instance, Objective::ExactBp(*z)),
        OracleTask::Com { instance } => {
            let (_, inst) = load(instance)?;
            oracle::enumerate_matchings(&inst)?;
            let witness = oracle::com_stable_witness(&inst);
            let value = serde_json::json!({
                "complete_stable": witness.is_some(),
                "pairs": witness.as_ref().map(|m| pairs(&inst, m)),
            });
            let out = render(output_format(), &value, |_| match &witness {
                Some(m) => format!("complete_stable true\n{}", m.render_pairs(inst.agent_names())),
                None => "complete_stable false\n".into(),
            });
            return Ok((out, if witness.is_some() { 0 } else { 2 }));
        }
        OracleTask::Count { instance } => {
            let (_, inst) = load(instance)?;
            let all = oracle::enumerate_matchings(&inst)?;
            let stable = oracle::all_stable_matchings(&inst)?.len();
            let value = serde_json::json!({ "matchings": all.len(), "stable": stable });
            let out = render(output_format(), &value, |_| {
                format!("matchings {}\nstable {stable}\n", all.len())
            });
            return Ok((out, 0));
        }
    };
    let (text, inst) = load(path)?;
    let raw = solve_oracle(&inst, obj)?;
    verified_report(&text, &inst, obj, raw, start)
}

fn cmd_reduce(reduction: &Reduction) -> Outcome {
    let Reduction::Clique { graph, r } = reduction;
    let g = UndirectedGraph::parse(&read(graph)?).map_err(Failure::input)?;
    let gadget = clique_to_com_smti(&g, *r).map_err(Failure::input)?;
    let out = format!(
        "{}{}",
        gadget.mapping_comment(&g, *r),
        stm_core::write_instance(&gadget.instance)
    );
    Ok((out, 0))
}

fn cmd_gen(a: &GenArgs) -> Outcome {
    let params = GenParams {
        kind: match a.kind {
            KindArg::Smti => ProblemKind::Smti,
            KindArg::Srti => ProblemKind::Srti,
            KindArg::Hrt => ProblemKind::Hrt,
            KindArg::Hrc => ProblemKind::Hrc,
        },
        model: match a.model {
            ModelArg::Typed => GenModel::Typed,
            ModelArg::Refined => GenModel::Refined,
            ModelArg::OneTop => GenModel::OneTop,
            ModelArg::Hrc => GenModel::Hrc,
        },
        k: a.k,
        n: a.n,
        accept: a.accept,
        ties: a.ties,
        max_capacity: a.max_capacity,
        exception: a.exception,
        couples: a.couples,
        strict: a.strict,
    };
    let inst = generate(a.seed, &params).map_err(Failure::input)?;
    Ok((stm_core::write_instance(&inst), 0))
}

fn cmd_ip(file: &Path) -> Outcome {
    let ip = smallip::parse_program(&read(file)?).map_err(Failure::input)?;
    match smallip::solve(&ip) {
        Ok(sol) => {
            let value = serde_json::json!({
                "value": sol.value,
                "assignment": ip.vars.iter().zip(&sol.assignment)
                    .map(|(v, x)| (v.name.clone(), *x))
                    .collect::<std::collections::BTreeMap<_, _>>(),
            });
            let out = render(output_format(), &value, |_| {
                let mut s = format!("value {}\n", sol.value);
                for (v, x) in ip.vars.iter().zip(&sol.assignment) {
                    s.push_str(&format!("{} = {x}\n", v.name));
                }
                s
            });
            Ok((out, 0))
        }
        Err(smallip::IpError::Infeasible) => Ok(("infeasible\n".into(), 2)),
        Err(e) => Err(Failure::internal(e)),
    }
}

/// Output format chosen on the command line; set once in `main`.
static FORMAT: std::sync::OnceLock<Format> = std::sync::OnceLock::new();

fn output_format() -> Format {
    FORMAT.get().copied().unwrap_or(Format::Text)
}

fn configure_threads(jobs: Option<usize>) -> Result<(), Failure> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        return Err(Failure::input("--jobs must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(Failure::internal)?;
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    configure_threads(cli.jobs)?;
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Check { instance, matching } => cmd_check(instance, matching),
        Command::Oracle { task } => cmd_oracle(task),
        Command::Reduce { reduction } => cmd_reduce(reduction),
        Command::Gen(args) => cmd_gen(args),
        Command::Ip { file } => cmd_ip(file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = FORMAT.set(cli.format);
    match run(&cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("stm: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
