use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{
    cmd_dynamic_slice, cmd_program_position_slice, cmd_proof_tree_slice, cmd_static_slice, cmd_stats, CliError, SliceOptions,
    SliceOutput, EXIT_NO_SOLUTION, EXIT_OK, EXIT_ORACLE, EXIT_USAGE,
};
use crate::constraints::IntDomain;
use crate::engine::{derive, DeriveOptions, DeriveOutcome};
use crate::syntax::{parse_goal, parse_program, Clause, Program, ProgramPosition, TreePosition};

#[derive(Debug, Parser)]
#[command(name = "clpslice", version, about = "Backward slicing of constraint logic programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Slice the proof tree of a goal.
    Slice(SliceArgs),
    /// Slice the program dependency graph without running the goal.
    Static(StaticArgs),
    /// Print the proof tree, its store and its positions.
    Tree(TreeArgs),
    /// Slice every argument position of each goal's proof tree and
    /// report average slice sizes.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Criterion is a tree position; report tree positions.
    Tree,
    /// Criterion is a tree position; map the slice onto the program.
    Dynamic,
    /// Criterion is a program position; slice all its instances.
    Position,
}

#[derive(Debug, Args)]
pub struct GoalArgs {
    /// Program file.
    pub program: PathBuf,
    /// Goal, e.g. "p(X,Y,Z)".
    #[arg(long, short)]
    pub goal: String,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Maximal proof tree depth.
    #[arg(long, default_value_t = DeriveOptions::default().depth_limit)]
    pub depth: usize,
    /// Maximal number of resolution steps.
    #[arg(long, default_value_t = DeriveOptions::default().step_limit)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    #[command(flatten)]
    pub target: GoalArgs,
    /// Criterion address: `n<node>/<literal>/<path>` for tree modes,
    /// `<clause>/<literal>/<path>` or `g/...` for position mode.
    #[arg(long)]
    pub at: String,
    #[arg(long, value_enum, default_value_t = Mode::Tree)]
    pub mode: Mode,
    /// Slice by dependency classes, ignoring groundness.
    #[arg(long)]
    pub undirected: bool,
    /// Orient the graph by the observed groundness annotation as is,
    /// without making positions reached against it dual.
    #[arg(long, conflicts_with = "undirected")]
    pub raw_annotation: bool,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Slice the first k proof trees and take the union.
    #[arg(long, value_name = "K", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub all_solutions: u32,
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Validate every slice by enumeration over lo..hi.
    #[arg(long, value_name = "LO..HI", allow_hyphen_values = true)]
    pub oracle_domain: Option<IntDomain>,
}

#[derive(Debug, Args)]
pub struct StaticArgs {
    #[command(flatten)]
    pub target: GoalArgs,
    /// Program position, e.g. `0/0/3` or `g/1/2`.
    #[arg(long)]
    pub at: String,
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[command(flatten)]
    pub target: GoalArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Program file.
    pub program: PathBuf,
    /// Goal file: one goal per line; blank lines and `%` comments are skipped.
    pub goals: PathBuf,
    #[command(flatten)]
    pub limits: LimitArgs,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write through a temporary sibling file so readers never see a partial
/// file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

fn load(target: &GoalArgs) -> Result<(Program, Clause), CliError> {
    let program = parse_program(&read(&target.program)?)?;
    let goal = parse_goal(&target.goal)?;
    Ok((program, goal))
}

/// Parse a goal file.
pub fn parse_goal_file(text: &str) -> Result<Vec<Clause>, CliError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .map(|l| parse_goal(l).map_err(CliError::from))
        .collect()
}

fn limits(l: &LimitArgs, max_solutions: usize) -> DeriveOptions {
    DeriveOptions {
        depth_limit: l.depth,
        max_solutions,
        step_limit: l.steps,
    }
}

fn emit(out: &SliceOutput, dot: Option<&Path>, json: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let r = &out.report;
    let w = |e: std::io::Error| CliError::Io {
        path: "<stdout>".to_owned(),
        source: e,
    };
    writeln!(stdout, "criterion: {}", r.criterion).map_err(w)?;
    writeln!(stdout, "goal: {}", r.goal).map_err(w)?;
    for warning in &r.warnings {
        writeln!(stdout, "warning: {warning}").map_err(w)?;
    }
    if !r.tree_positions.is_empty() {
        let list: Vec<String> = r.tree_positions.iter().map(|p| p.to_string()).collect();
        writeln!(stdout, "tree positions: {}", list.join(" ")).map_err(w)?;
        writeln!(stdout, "store: {{{}}}", r.slice_store.join(", ")).map_err(w)?;
        writeln!(
            stdout,
            "size: {}/{} nodes ({:.2}%), {}/{} argument positions ({:.2}%)",
            r.stats.slice_node_count,
            r.stats.tree_node_count,
            r.stats.slice_node_pct,
            r.stats.slice_argpos_count,
            r.stats.tree_argpos_count,
            r.stats.slice_argpos_pct
        )
        .map_err(w)?;
    }
    if let Some(listing) = &out.listing {
        write!(stdout, "{listing}").map_err(w)?;
    }
    for (k, b) in r.extra_branches.iter().enumerate() {
        writeln!(stdout, "solution {}: {} tree positions", k + 2, b.tree_positions.len()).map_err(w)?;
        for warning in &b.warnings {
            writeln!(stdout, "warning: {warning}").map_err(w)?;
        }
    }
    for c in r.oracle.iter().chain(r.extra_branches.iter().flat_map(|b| &b.oracle)) {
        writeln!(stdout, "oracle {} over {}: {}", c.criterion, c.domain, c.verdict).map_err(w)?;
    }
    if let Some(p) = dot {
        write_atomic(p, &out.dot)?;
    }
    if let Some(p) = json {
        write_atomic(p, &serde_json::to_string_pretty(r).expect("report serializes"))?;
    }
    Ok(())
}

fn run_slice(a: &SliceArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (program, goal) = load(&a.target)?;
    let opts = SliceOptions {
        undirected: a.undirected,
        raw_annotation: a.raw_annotation,
        derive: limits(&a.limits, a.all_solutions as usize),
        oracle_domain: a.oracle_domain,
    };
    let out = match a.mode {
        Mode::Tree => cmd_proof_tree_slice(&program, &goal, &a.at.parse::<TreePosition>()?, &opts)?,
        Mode::Dynamic => cmd_dynamic_slice(&program, &goal, &a.at.parse::<TreePosition>()?, &opts)?,
        Mode::Position => cmd_program_position_slice(&program, &goal, &a.at.parse::<ProgramPosition>()?, &opts)?,
    };
    emit(&out, a.dot.as_deref(), a.json.as_deref(), stdout)?;
    Ok(if out.report.oracle_failures() > 0 { EXIT_ORACLE } else { EXIT_OK })
}

fn run_static(a: &StaticArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (program, goal) = load(&a.target)?;
    let out = cmd_static_slice(&program, &goal, &a.at.parse::<ProgramPosition>()?)?;
    emit(&out, a.dot.as_deref(), a.json.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn run_tree(a: &TreeArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (program, goal) = load(&a.target)?;
    let sol = match derive(&program, &goal, &limits(&a.limits, 1))? {
        DeriveOutcome::Solutions(mut s) => s.remove(0),
        DeriveOutcome::NoSolution {
            deepest,
            depth_limit_hit,
            step_limit_hit,
        } => {
            return Err(CliError::NoSolution {
                depth_limit_hit,
                step_limit_hit,
                deepest_nodes: deepest.map(|t| t.node_count()),
            })
        }
    };
    let tree = &sol.tree;
    let w = |e: std::io::Error| CliError::Io {
        path: "<stdout>".to_owned(),
        source: e,
    };
    for id in tree.skeleton().preorder() {
        let node = tree.skeleton().node(id).expect("preorder id");
        let depth = tree.skeleton().depth(id);
        let from = match node.parent {
            Some((p, l)) => format!(" <- n{p}/{l}"),
            None => String::new(),
        };
        writeln!(stdout, "{:indent$}n{id}{from}: {}", "", node.label, indent = 2 * depth).map_err(w)?;
    }
    writeln!(stdout, "store: {}", tree.store()).map_err(w)?;
    for p in tree.positions() {
        writeln!(stdout, "{p}\t{}", tree.element(&p).expect("own position")).map_err(w)?;
    }
    Ok(EXIT_OK)
}

fn run_stats(a: &StatsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let program = parse_program(&read(&a.program)?)?;
    let goals = parse_goal_file(&read(&a.goals)?)?;
    let table = cmd_stats(&program, &goals, &limits(&a.limits, 1));
    write!(stdout, "{table}").map_err(|source| CliError::Io {
        path: "<stdout>".to_owned(),
        source,
    })?;
    if let Some(p) = &a.json {
        write_atomic(p, &serde_json::to_string_pretty(&table).expect("table serializes"))?;
    }
    Ok(EXIT_OK)
}

/// Parse `args` (including the program name) and run the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Slice(a) => run_slice(a, stdout),
        Command::Static(a) => run_static(a, stdout),
        Command::Tree(a) => run_tree(a, stdout),
        Command::Stats(a) => run_stats(a, stdout),
    };
    match result {
        Ok(code) => {
            if code == EXIT_ORACLE {
                let _ = writeln!(stderr, "error: a slice failed oracle validation");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.exit_code() == EXIT_NO_SOLUTION {
                if let CliError::NoSolution { deepest_nodes: Some(n), .. } = e {
                    let _ = writeln!(stderr, "note: the deepest satisfiable derivation tree had {n} nodes");
                }
            }
            e.exit_code()
        }
    }
}
