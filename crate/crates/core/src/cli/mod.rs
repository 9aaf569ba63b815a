//! The slicing commands behind the `clpslice` binary.
//!
//! * proof tree slice: slice a proof tree at a tree position;
//! * dynamic slice: the same, mapped back onto the program listing;
//! * program position slice: slice every instance of a program position
//!   in the proof tree and map the union back;
//! * stats: slice every argument position of each goal's proof tree and
//!   average the slice sizes.

mod args;
mod report;

use std::collections::BTreeSet;
use std::fmt::Write as _;

pub use args::{main_with_args, Cli};
pub use report::{
    BranchSlice, OracleCheck, OracleVerdict, SliceMode, SliceOutput, SliceReport, SliceStats, StatsRow, StatsTable,
};

use crate::constraints::{is_slice, satisfiable_finite, IntDomain, StoreError};
use crate::depgraph::{program_dep_graph, program_slice_in, tree_dep_graph, tree_graph_dot, tree_slice_in, SliceError};
use crate::directional::{annotate, directed_graph_dot, directional_slice_in, orient, refine, DirectionalError};
use crate::engine::{derive, DeriveOptions, DeriveOutcome, DerivationTree, EngineError, Solution};
use crate::syntax::{Clause, ClauseRef, Element, MarkedRender, Program, ProgramPosition, SyntaxError, Term, TreePosition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Directional(#[from] DirectionalError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no proof tree for the goal{}", if *.depth_limit_hit { " within the depth limit" } else if *.step_limit_hit { " within the step limit" } else { "" })]
    NoSolution { depth_limit_hit: bool, step_limit_hit: bool, deepest_nodes: Option<usize> },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoSolution { .. } => EXIT_NO_SOLUTION,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SliceOptions {
    /// Slice by equivalence classes instead of directed reachability.
    pub undirected: bool,
    /// Use the groundness annotation as observed, without [`refine`].
    pub raw_annotation: bool,
    pub derive: DeriveOptions,
    /// Check every slice with the finite-domain oracle.
    pub oracle_domain: Option<IntDomain>,
}

fn solutions(program: &Program, goal: &Clause, opts: &DeriveOptions) -> Result<Vec<Solution>, CliError> {
    match derive(program, goal, opts)? {
        DeriveOutcome::Solutions(s) => Ok(s),
        DeriveOutcome::NoSolution {
            deepest,
            depth_limit_hit,
            step_limit_hit,
        } => Err(CliError::NoSolution {
            depth_limit_hit,
            step_limit_hit,
            deepest_nodes: deepest.map(|t| t.node_count()),
        }),
    }
}

/// Graphs and annotation of one proof tree, built once and reused for
/// every criterion.
struct Slicer<'a> {
    solution: &'a Solution,
    graph: crate::depgraph::DependencyGraph<TreePosition>,
    annotation: crate::directional::Annotation,
    directed: Option<crate::directional::DirectedDepGraph>,
}

impl<'a> Slicer<'a> {
    fn new(solution: &'a Solution, undirected: bool, raw: bool) -> Result<Self, CliError> {
        let tree = &solution.tree;
        let graph = tree_dep_graph(tree);
        let (annotation, directed) = if undirected {
            (crate::directional::Annotation::all_dual(), None)
        } else {
            let mut a = annotate(tree, &solution.log)?;
            if !raw {
                a = refine(tree, &a);
            }
            let d = orient(tree, &graph, &a);
            (a, Some(d))
        };
        Ok(Slicer {
            solution,
            graph,
            annotation,
            directed,
        })
    }

    fn tree(&self) -> &DerivationTree {
        &self.solution.tree
    }

    fn slice(&self, alpha: &TreePosition) -> Result<(BTreeSet<TreePosition>, Vec<String>), CliError> {
        let s = match &self.directed {
            Some(d) => directional_slice_in(self.tree(), &self.graph, d, alpha)?,
            None => tree_slice_in(self.tree(), &self.graph, alpha)?,
        };
        Ok((s.positions, s.warnings))
    }

    fn dot(&self, marked: &BTreeSet<TreePosition>) -> String {
        match &self.directed {
            Some(d) => directed_graph_dot(self.tree(), d, &self.annotation, marked),
            None => tree_graph_dot(self.tree(), &self.graph, marked),
        }
    }
}

/// Size of a slice relative to its tree.
pub fn slice_stats(tree: &DerivationTree, positions: &BTreeSet<TreePosition>) -> SliceStats {
    let argpos = tree.argument_positions();
    let sliced_args = argpos.iter().filter(|p| positions.contains(p)).count();
    let nodes = tree.nodes_touched(positions).len();
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    SliceStats {
        tree_node_count: tree.node_count(),
        tree_argpos_count: argpos.len(),
        slice_node_count: nodes,
        slice_argpos_count: sliced_args,
        slice_node_pct: pct(nodes, tree.node_count()),
        slice_argpos_pct: pct(sliced_args, argpos.len()),
    }
}

/// Check that the store part of a slice is a slice of the whole store for
/// the criterion's variable over `domain`.
pub fn oracle_check(tree: &DerivationTree, criterion: &TreePosition, positions: &BTreeSet<TreePosition>, domain: IntDomain) -> OracleCheck {
    let skip = |reason: String| OracleCheck {
        criterion: criterion.clone(),
        domain,
        variable: None,
        verdict: OracleVerdict::Skipped { reason },
    };
    let var = match tree.element(criterion) {
        Some(Element::Term(Term::Var(v))) => v.clone(),
        _ => return skip("criterion is not a variable position".to_owned()),
    };
    let full = tree.store();
    let sliced = match tree.positions_to_constraints(positions) {
        Ok(s) => s,
        Err(e) => return skip(e.to_string()),
    };
    match satisfiable_finite(full, domain) {
        Ok(true) => {}
        Ok(false) => return skip(format!("the store has no solution over {domain}")),
        Err(e) => return skip(e.to_string()),
    }
    let verdict = match is_slice(full, &sliced, &var, domain) {
        Ok(true) => OracleVerdict::Passed,
        Ok(false) => OracleVerdict::Failed,
        Err(e) => OracleVerdict::Skipped { reason: e.to_string() },
    };
    OracleCheck {
        criterion: criterion.clone(),
        domain,
        variable: Some(var.to_string()),
        verdict,
    }
}

fn branch_slice(slicer: &Slicer<'_>, criteria: &[TreePosition], opts: &SliceOptions) -> Result<BranchSlice, CliError> {
    let tree = slicer.tree();
    let mut positions = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut oracle = Vec::new();
    for alpha in criteria {
        let (p, w) = slicer.slice(alpha)?;
        if let Some(d) = opts.oracle_domain {
            oracle.push(oracle_check(tree, alpha, &p, d));
        }
        positions.extend(p);
        for w in w {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }
    let program_positions = tree.phi_image(&positions)?;
    let store = tree.positions_to_constraints(&positions)?;
    Ok(BranchSlice {
        stats: slice_stats(tree, &positions),
        slice_store: store.constraints().iter().map(|c| c.to_string()).collect(),
        tree_positions: positions,
        program_positions,
        groundness: slicer.solution.log.clone(),
        oracle,
        warnings,
    })
}

/// Render the program and goal with the given positions wrapped in
/// `[[...]]`.
pub fn listing(program: &Program, goal: &Clause, marked: &BTreeSet<ProgramPosition>) -> String {
    let mut out = String::new();
    for (i, c) in program.clauses().iter().enumerate() {
        let mark = |l: &crate::syntax::Local| marked.contains(&ProgramPosition::new(ClauseRef::Program(i), l.clone()));
        writeln!(out, "{i:>3}  {}", MarkedRender { clause: c, marked: &mark }).unwrap();
    }
    let mark = |l: &crate::syntax::Local| marked.contains(&ProgramPosition::new(ClauseRef::Goal, l.clone()));
    writeln!(out, "  g  ?- {}", MarkedRender { clause: goal, marked: &mark }).unwrap();
    out
}

fn run_tree_criteria(
    program: &Program,
    goal: &Clause,
    mode: SliceMode,
    criterion: String,
    opts: &SliceOptions,
    criteria_for: impl Fn(&DerivationTree) -> Result<(Vec<TreePosition>, Vec<String>), CliError>,
) -> Result<SliceOutput, CliError> {
    let sols = solutions(program, goal, &opts.derive)?;
    let mut branches = Vec::new();
    let mut dot = String::new();
    for (k, sol) in sols.iter().enumerate() {
        let (criteria, mut notes) = match criteria_for(&sol.tree) {
            Ok(c) => c,
            Err(e) if k > 0 => {
                branches.push(BranchSlice::skipped(format!("solution {}: {e}", k + 1)));
                continue;
            }
            Err(e) => return Err(e),
        };
        let slicer = Slicer::new(sol, opts.undirected, opts.raw_annotation)?;
        let mut b = branch_slice(&slicer, &criteria, opts)?;
        notes.append(&mut b.warnings);
        b.warnings = notes;
        if k == 0 {
            dot = match mode {
                SliceMode::ProofTree => slicer.dot(&b.tree_positions),
                _ => {
                    let g = program_dep_graph(program, goal);
                    crate::depgraph::program_graph_dot(program, goal, &g, &b.program_positions)
                }
            };
        }
        branches.push(b);
    }
    let first = branches.remove(0);
    let mut program_positions = first.program_positions.clone();
    for b in &branches {
        program_positions.extend(b.program_positions.iter().cloned());
    }
    let listing = match mode {
        SliceMode::ProofTree => None,
        _ => Some(listing(program, goal, &program_positions)),
    };
    let report = SliceReport {
        mode,
        criterion,
        goal: goal.to_string(),
        annotation_used: !opts.undirected,
        tree_positions: first.tree_positions,
        program_positions,
        stats: first.stats,
        slice_store: first.slice_store,
        groundness: first.groundness,
        oracle: first.oracle,
        warnings: first.warnings,
        extra_branches: branches,
    };
    Ok(SliceOutput { report, dot, listing })
}

/// Slice the proof tree of `goal` at tree position `alpha`.
pub fn cmd_proof_tree_slice(program: &Program, goal: &Clause, alpha: &TreePosition, opts: &SliceOptions) -> Result<SliceOutput, CliError> {
    run_tree_criteria(program, goal, SliceMode::ProofTree, alpha.to_string(), opts, |t| {
        if !t.contains(alpha) {
            return Err(SliceError::UnknownPosition(alpha.to_string()).into());
        }
        Ok((vec![alpha.clone()], Vec::new()))
    })
}

/// Proof tree slice mapped back onto the program.
pub fn cmd_dynamic_slice(program: &Program, goal: &Clause, alpha: &TreePosition, opts: &SliceOptions) -> Result<SliceOutput, CliError> {
    run_tree_criteria(program, goal, SliceMode::Dynamic, alpha.to_string(), opts, |t| {
        if !t.contains(alpha) {
            return Err(SliceError::UnknownPosition(alpha.to_string()).into());
        }
        Ok((vec![alpha.clone()], Vec::new()))
    })
}

/// Union of the slices of every instance of program position `q`.
pub fn cmd_program_position_slice(program: &Program, goal: &Clause, q: &ProgramPosition, opts: &SliceOptions) -> Result<SliceOutput, CliError> {
    if program.element(Some(goal), q).is_none() {
        return Err(SliceError::UnknownPosition(q.to_string()).into());
    }
    run_tree_criteria(program, goal, SliceMode::ProgramPosition, q.to_string(), opts, |t| {
        let instances: Vec<TreePosition> = t.phi_inverse(q)?.into_iter().collect();
        let notes = if instances.is_empty() {
            vec![format!("position {q} has no instance in the proof tree")]
        } else {
            Vec::new()
        };
        Ok((instances, notes))
    })
}

/// The static slice: `beta`'s class in the program dependency graph.
pub fn cmd_static_slice(program: &Program, goal: &Clause, beta: &ProgramPosition) -> Result<SliceOutput, CliError> {
    let g = program_dep_graph(program, goal);
    let s = program_slice_in(program, goal, &g, beta)?;
    let dot = crate::depgraph::program_graph_dot(program, goal, &g, &s.positions);
    let report = SliceReport {
        mode: SliceMode::Static,
        criterion: beta.to_string(),
        goal: goal.to_string(),
        annotation_used: false,
        tree_positions: BTreeSet::new(),
        program_positions: s.positions.clone(),
        stats: SliceStats::default(),
        slice_store: Vec::new(),
        groundness: Default::default(),
        oracle: Vec::new(),
        warnings: s.warnings,
        extra_branches: Vec::new(),
    };
    Ok(SliceOutput {
        listing: Some(listing(program, goal, &s.positions)),
        report,
        dot,
    })
}

/// Slice every argument position of each goal's first proof tree, both
/// directionally and by classes, and average the slice sizes.
pub fn cmd_stats(program: &Program, goals: &[Clause], derive_opts: &DeriveOptions) -> StatsTable {
    let rows = goals
        .iter()
        .map(|goal| {
            let mut row = StatsRow::new(goal.to_string(), program.clauses().len());
            let sols = match solutions(program, goal, derive_opts) {
                Ok(s) => s,
                Err(e) => {
                    row.failure = Some(e.to_string());
                    return row;
                }
            };
            let sol = &sols[0];
            let tree = &sol.tree;
            let directed = Slicer::new(sol, false, false);
            let undirected = Slicer::new(sol, true, false);
            let (Ok(directed), Ok(undirected)) = (directed, undirected) else {
                row.failure = Some("could not annotate the proof tree".to_owned());
                return row;
            };
            let criteria = tree.argument_positions();
            row.tree_nodes = tree.node_count();
            row.tree_argpos = criteria.len();
            let mut sums = [0.0f64; 4];
            for alpha in &criteria {
                let (d, _) = directed.slice(alpha).expect("own position");
                let (u, _) = undirected.slice(alpha).expect("own position");
                let ds = slice_stats(tree, &d);
                let us = slice_stats(tree, &u);
                sums[0] += ds.slice_node_pct;
                sums[1] += ds.slice_argpos_pct;
                sums[2] += us.slice_node_pct;
                sums[3] += us.slice_argpos_pct;
                if d.len() < u.len() {
                    row.reduced_slices += 1;
                }
            }
            row.slices = criteria.len();
            if !criteria.is_empty() {
                let n = criteria.len() as f64;
                row.avg_node_pct = sums[0] / n;
                row.avg_argpos_pct = sums[1] / n;
                row.avg_node_pct_undirected = sums[2] / n;
                row.avg_argpos_pct_undirected = sums[3] / n;
            }
            row
        })
        .collect();
    StatsTable { rows }
}
