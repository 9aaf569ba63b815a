use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraints::IntDomain;
use crate::engine::GroundnessLog;
use crate::syntax::{ProgramPosition, TreePosition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMode {
    ProofTree,
    Dynamic,
    ProgramPosition,
    Static,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub tree_node_count: usize,
    pub tree_argpos_count: usize,
    pub slice_node_count: usize,
    pub slice_argpos_count: usize,
    pub slice_node_pct: f64,
    pub slice_argpos_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum OracleVerdict {
    Passed,
    Failed,
    Skipped { reason: String },
}

impl fmt::Display for OracleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleVerdict::Passed => f.write_str("passed"),
            OracleVerdict::Failed => f.write_str("FAILED"),
            OracleVerdict::Skipped { reason } => write!(f, "skipped ({reason})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub criterion: TreePosition,
    pub domain: IntDomain,
    pub variable: Option<String>,
    #[serde(flatten)]
    pub verdict: OracleVerdict,
}

/// The slice of one proof tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSlice {
    pub tree_positions: BTreeSet<TreePosition>,
    pub program_positions: BTreeSet<ProgramPosition>,
    pub stats: SliceStats,
    pub slice_store: Vec<String>,
    pub groundness: GroundnessLog,
    pub oracle: Vec<OracleCheck>,
    pub warnings: Vec<String>,
}

impl BranchSlice {
    pub(crate) fn skipped(warning: String) -> Self {
        BranchSlice {
            tree_positions: BTreeSet::new(),
            program_positions: BTreeSet::new(),
            stats: SliceStats::default(),
            slice_store: Vec::new(),
            groundness: GroundnessLog::default(),
            oracle: Vec::new(),
            warnings: vec![warning],
        }
    }
}

/// The JSON report of one slicing command. With several proof trees the
/// top-level fields describe the first one, except `program_positions`,
/// which is the union over all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub mode: SliceMode,
    pub criterion: String,
    pub goal: String,
    pub annotation_used: bool,
    pub tree_positions: BTreeSet<TreePosition>,
    pub program_positions: BTreeSet<ProgramPosition>,
    pub stats: SliceStats,
    pub slice_store: Vec<String>,
    pub groundness: GroundnessLog,
    pub oracle: Vec<OracleCheck>,
    pub warnings: Vec<String>,
    pub extra_branches: Vec<BranchSlice>,
}

impl SliceReport {
    pub fn oracle_failures(&self) -> usize {
        std::iter::once(&self.oracle)
            .chain(self.extra_branches.iter().map(|b| &b.oracle))
            .flatten()
            .filter(|c| c.verdict == OracleVerdict::Failed)
            .count()
    }
}

/// A report together with its DOT rendering and, for program level
/// modes, the marked listing.
#[derive(Clone, Debug)]
pub struct SliceOutput {
    pub report: SliceReport,
    pub dot: String,
    pub listing: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub goal: String,
    pub clauses: usize,
    pub tree_nodes: usize,
    pub tree_argpos: usize,
    pub slices: usize,
    pub avg_node_pct: f64,
    pub avg_argpos_pct: f64,
    pub avg_node_pct_undirected: f64,
    pub avg_argpos_pct_undirected: f64,
    /// Criteria whose directional slice is strictly smaller than the
    /// undirected one.
    pub reduced_slices: usize,
    pub failure: Option<String>,
}

impl StatsRow {
    pub(crate) fn new(goal: String, clauses: usize) -> Self {
        StatsRow {
            goal,
            clauses,
            tree_nodes: 0,
            tree_argpos: 0,
            slices: 0,
            avg_node_pct: 0.0,
            avg_argpos_pct: 0.0,
            avg_node_pct_undirected: 0.0,
            avg_argpos_pct_undirected: 0.0,
            reduced_slices: 0,
            failure: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<32} {:>7} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>7}",
            "GOAL", "CLAUSES", "NODES", "ARGS", "SLICES", "NODE%", "ARG%", "NODE%u", "ARG%u", "REDUCED"
        )?;
        for r in &self.rows {
            let goal = if r.goal.chars().count() > 32 {
                format!("{}...", r.goal.chars().take(29).collect::<String>())
            } else {
                r.goal.clone()
            };
            match &r.failure {
                Some(e) => writeln!(f, "{goal:<32} {:>7} FAILED: {e}", r.clauses)?,
                None => writeln!(
                    f,
                    "{goal:<32} {:>7} {:>6} {:>6} {:>6} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>7}",
                    r.clauses,
                    r.tree_nodes,
                    r.tree_argpos,
                    r.slices,
                    r.avg_node_pct,
                    r.avg_argpos_pct,
                    r.avg_node_pct_undirected,
                    r.avg_argpos_pct_undirected,
                    r.reduced_slices
                )?,
            }
        }
        Ok(())
    }
}
