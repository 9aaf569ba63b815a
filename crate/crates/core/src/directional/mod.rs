//! Groundness-directed slicing of proof trees.
//!
//! Argument positions are annotated from the groundness log of the
//! derivation: ground when the call was made means inherited, ground once
//! the call succeeded means synthesized, anything else is dual. A head
//! argument takes the annotation of the call argument it is equated with.
//! Constraint occurrences are annotated the same way from the instants
//! before and after the constraint was posted, and are classified like the
//! arguments of a call.
//!
//! Orienting the undirected graph by input/output classes and taking
//! backward reachability gives slices that are usually smaller than the
//! equivalence classes of [`crate::depgraph`]. The observed annotation can
//! route a value against its arcs; [`refine`] turns the positions involved
//! dual so that the slices stay sound.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::depgraph::dot::{self, Arrow};
use crate::depgraph::{criterion_seeds, DepEdgeKind, DependencyGraph, Slice, SliceError, SliceKind};
use crate::constraints::Solver;
use crate::engine::{DerivationTree, GroundnessLog, Instant};
use crate::syntax::position::{is_atom_argument, is_constraint_position};
use crate::syntax::{Literal, TreePosition};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DirectionalError {
    #[error("groundness log does not match the tree: {0}")]
    LogMismatch(String),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Inherited,
    Synthesized,
    Dual,
}

impl Mode {
    /// Suffix used in listings and DOT labels.
    pub fn suffix(self) -> &'static str {
        match self {
            Mode::Inherited => "v",
            Mode::Synthesized => "^",
            Mode::Dual => "<->",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IoClass {
    Input,
    Output,
    Neither,
}

/// `μ`: tree positions mapped to modes; positions not listed are dual.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    modes: BTreeMap<TreePosition, Mode>,
}

impl Annotation {
    /// The annotation with every position dual.
    pub fn all_dual() -> Self {
        Self::default()
    }

    pub fn get(&self, p: &TreePosition) -> Mode {
        self.modes.get(p).copied().unwrap_or(Mode::Dual)
    }

    pub fn set(&mut self, p: TreePosition, mode: Mode) {
        if mode == Mode::Dual {
            self.modes.remove(&p);
        } else {
            self.modes.insert(p, mode);
        }
    }

    /// Positions with a mode other than dual.
    pub fn iter(&self) -> impl Iterator<Item = (&TreePosition, Mode)> {
        self.modes.iter().map(|(p, m)| (p, *m))
    }
}

fn mode_of(call: bool, success: bool) -> Mode {
    if call {
        Mode::Inherited
    } else if success {
        Mode::Synthesized
    } else {
        Mode::Dual
    }
}

/// Annotate a proof tree from the groundness log of its derivation.
pub fn annotate(tree: &DerivationTree, log: &GroundnessLog) -> Result<Annotation, DirectionalError> {
    let mut call: BTreeSet<&TreePosition> = BTreeSet::new();
    let mut success: BTreeSet<&TreePosition> = BTreeSet::new();
    // sampled position -> head argument it is equated with
    let mut sampled: BTreeMap<&TreePosition, Option<TreePosition>> = BTreeMap::new();
    for e in &log.events {
        let node = tree
            .skeleton()
            .node(e.node)
            .ok_or_else(|| DirectionalError::LogMismatch(format!("no node {}", e.node)))?;
        let expected_child = match node.label.literal(e.literal) {
            Some(Literal::Call(_)) => node.child_at(e.literal),
            Some(Literal::Constraint(_)) => None,
            _ => return Err(DirectionalError::LogMismatch(format!("n{}/{} is not a body literal", e.node, e.literal))),
        };
        if e.child != expected_child {
            return Err(DirectionalError::LogMismatch(format!("n{}/{} resolved by a different node", e.node, e.literal)));
        }
        for p in &e.sampled {
            if p.node != e.node || p.local.literal != e.literal || !tree.contains(p) {
                return Err(DirectionalError::LogMismatch(format!("{p} is not sampled by n{}/{}", e.node, e.literal)));
            }
            let head = e.child.map(|c| TreePosition { node: c, local: crate::syntax::Local::new(0, p.local.path.clone()) });
            sampled.insert(p, head);
        }
        let set = match e.instant {
            Instant::Call => &mut call,
            Instant::Success => &mut success,
        };
        set.extend(e.ground.iter());
    }
    let mut annotation = Annotation::default();
    for (p, head) in sampled {
        let mode = mode_of(call.contains(p), success.contains(p));
        if let Some(h) = head {
            annotation.set(h, mode);
        }
        annotation.set(p.clone(), mode);
    }
    Ok(annotation)
}

/// Make the annotation safe for backward reachability. A position whose
/// variables are ground in the whole store must be ground in the store of
/// its own backward closure; where that fails, the targets of the arcs
/// leaving the closure become dual and the graph is oriented again. This
/// happens when a value reaches a position against the annotation, e.g.
/// when a synthesized head argument is ground only because the caller
/// relates it to another argument. The closures only grow, and with every
/// position dual they are the undirected classes, so the loop ends.
pub fn refine(tree: &DerivationTree, annotation: &Annotation) -> Annotation {
    let full = Solver::from_store(tree.store());
    let graph = crate::depgraph::tree_dep_graph(tree);
    let ground: Vec<(TreePosition, crate::syntax::Term)> = tree
        .positions()
        .into_iter()
        .filter_map(|p| match tree.element(&p) {
            Some(crate::syntax::Element::Term(t)) if !t.is_ground() && full.is_ground(t) => Some((p, t.clone())),
            _ => None,
        })
        .collect();
    let mut out = annotation.clone();
    loop {
        let directed = orient(tree, &graph, &out);
        let mut frontier = BTreeSet::new();
        for (p, t) in &ground {
            let closure = directed.backward_reachable(std::slice::from_ref(p));
            let store = tree.positions_to_constraints(&closure).expect("own positions");
            if !Solver::from_store(&store).is_ground(t) {
                frontier.extend(
                    directed
                        .arcs()
                        .filter(|(a, b, _)| closure.contains(*a) && !closure.contains(*b))
                        .map(|(_, b, _)| b.clone()),
                );
            }
        }
        let before = out.clone();
        for p in frontier {
            out.set(p, Mode::Dual);
        }
        if out == before {
            return out;
        }
    }
}

/// Input/output class of a position under an annotation. Goal atoms are
/// body atoms; constraint occurrences are classified like call arguments.
pub fn io_class(tree: &DerivationTree, annotation: &Annotation, p: &TreePosition) -> IoClass {
    let Some(label) = tree.label(p.node) else {
        return IoClass::Neither;
    };
    let in_head = p.local.literal == 0;
    let classified = is_atom_argument(label, &p.local) || (is_constraint_position(label, &p.local) && p.local.path.len() == 1);
    if !classified {
        return IoClass::Neither;
    }
    match (annotation.get(p), in_head) {
        (Mode::Dual, _) => IoClass::Neither,
        (Mode::Inherited, true) | (Mode::Synthesized, false) => IoClass::Input,
        (Mode::Synthesized, true) | (Mode::Inherited, false) => IoClass::Output,
    }
}

/// Orientation of the tree graph.
#[derive(Clone, Debug)]
pub struct DirectedDepGraph {
    universe: Vec<TreePosition>,
    index: BTreeMap<TreePosition, usize>,
    /// `(from, to, kind)`; a bidirectional edge appears as two arcs.
    arcs: BTreeSet<(usize, usize, DepEdgeKind)>,
    incoming: Vec<Vec<usize>>,
}

impl DirectedDepGraph {
    pub fn universe(&self) -> &[TreePosition] {
        &self.universe
    }

    pub fn arcs(&self) -> impl Iterator<Item = (&TreePosition, &TreePosition, DepEdgeKind)> + '_ {
        self.arcs.iter().map(|&(a, b, k)| (&self.universe[a], &self.universe[b], k))
    }

    pub fn has_arc(&self, from: &TreePosition, to: &TreePosition) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.arcs.range((a, b, DepEdgeKind::ConstraintEdge)..=(a, b, DepEdgeKind::LocalEdge)).next().is_some(),
            _ => false,
        }
    }

    /// Every position with a directed path to one of `targets`, the
    /// targets included.
    pub fn backward_reachable(&self, targets: &[TreePosition]) -> BTreeSet<TreePosition> {
        let mut seen = vec![false; self.universe.len()];
        let mut queue: VecDeque<usize> = targets.iter().filter_map(|t| self.index.get(t).copied()).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &j in &self.incoming[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.universe[i].clone())
            .collect()
    }
}

/// Orient each undirected edge: a transition edge runs only from an output
/// to an input position, a local edge only from an input to an output
/// position, and every other edge runs both ways.
pub fn orient(tree: &DerivationTree, graph: &DependencyGraph<TreePosition>, annotation: &Annotation) -> DirectedDepGraph {
    let universe: Vec<TreePosition> = graph.universe().to_vec();
    let index: BTreeMap<TreePosition, usize> = universe.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let class: Vec<IoClass> = universe.iter().map(|p| io_class(tree, annotation, p)).collect();
    let mut arcs = BTreeSet::new();
    for (a, b, kind) in graph.edges() {
        let (i, j) = (index[a], index[b]);
        let one_way = match kind {
            DepEdgeKind::TransitionEdge => match (class[i], class[j]) {
                (IoClass::Output, IoClass::Input) => Some((i, j)),
                (IoClass::Input, IoClass::Output) => Some((j, i)),
                _ => None,
            },
            DepEdgeKind::LocalEdge => match (class[i], class[j]) {
                (IoClass::Input, IoClass::Output) => Some((i, j)),
                (IoClass::Output, IoClass::Input) => Some((j, i)),
                _ => None,
            },
            DepEdgeKind::ConstraintEdge | DepEdgeKind::FunctorEdge => None,
        };
        match one_way {
            Some((from, to)) => {
                arcs.insert((from, to, kind));
            }
            None => {
                arcs.insert((i, j, kind));
                arcs.insert((j, i, kind));
            }
        }
    }
    let mut incoming = vec![Vec::new(); universe.len()];
    for &(a, b, _) in &arcs {
        incoming[b].push(a);
    }
    DirectedDepGraph {
        universe,
        index,
        arcs,
        incoming,
    }
}

/// `{β | β →* α}` in the directed graph of the tree.
pub fn directional_slice(tree: &DerivationTree, annotation: &Annotation, alpha: &TreePosition) -> Result<Slice<TreePosition>, DirectionalError> {
    let graph = crate::depgraph::tree_dep_graph(tree);
    let directed = orient(tree, &graph, annotation);
    directional_slice_in(tree, &graph, &directed, alpha)
}

/// [`directional_slice`] over graphs that have already been built.
pub fn directional_slice_in(
    tree: &DerivationTree,
    graph: &DependencyGraph<TreePosition>,
    directed: &DirectedDepGraph,
    alpha: &TreePosition,
) -> Result<Slice<TreePosition>, DirectionalError> {
    let el = tree.element(alpha).ok_or_else(|| SliceError::UnknownPosition(alpha.to_string()))?;
    let (seeds, warnings) = criterion_seeds(graph, alpha, el, |i| TreePosition::new(alpha.node, alpha.local.literal, vec![i]));
    let mut positions = directed.backward_reachable(&seeds);
    positions.insert(alpha.clone());
    Ok(Slice {
        kind: SliceKind::TreeSlice,
        criterion: alpha.clone(),
        positions,
        warnings,
    })
}

struct Suffixed<'a>(&'a TreePosition, Mode);

impl fmt::Display for Suffixed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.0, self.1.suffix())
    }
}

/// DOT rendering with one-way arcs as arrows, bidirectional pairs as
/// double-headed edges and the mode of each position as a label suffix.
pub fn directed_graph_dot(
    tree: &DerivationTree,
    directed: &DirectedDepGraph,
    annotation: &Annotation,
    marked: &BTreeSet<TreePosition>,
) -> String {
    let clusters = tree
        .skeleton()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| (format!("n{i}"), format!("n{i}: {}", n.label)))
        .collect();
    let nodes: Vec<dot::DotNode> = directed
        .universe
        .iter()
        .map(|p| dot::DotNode {
            id: p.to_string(),
            label: format!(
                "{}\n{}",
                Suffixed(p, annotation.get(p)),
                tree.element(p).map(|e| e.to_string()).unwrap_or_default()
            ),
            cluster: format!("n{}", p.node),
            marked: marked.contains(p),
        })
        .collect();
    let mut edges = Vec::new();
    for &(a, b, kind) in &directed.arcs {
        let back = directed.arcs.contains(&(b, a, kind));
        if back && a > b {
            continue;
        }
        edges.push(dot::DotEdge {
            from: directed.universe[a].to_string(),
            to: directed.universe[b].to_string(),
            label: kind.name(),
            arrow: if back { Arrow::Both } else { Arrow::Forward },
        });
    }
    dot::render("directed", &clusters, &nodes, &edges)
}
