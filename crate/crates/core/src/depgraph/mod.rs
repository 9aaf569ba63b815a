//! Undirected dependency graphs over tree and program positions.
//!
//! The universe of a graph is the set of data positions: arguments,
//! subterms, constraints and constraint occurrences. Whole atoms carry no
//! value of their own and are left out; slicing on an atom position yields
//! the union of the classes of its arguments.
//!
//! Edges come in four kinds. A constraint links its occurrences through the
//! constraint position itself. A transition edge links a call argument with
//! the corresponding head argument. A functor edge links a compound term
//! with each immediate argument. A local edge links two terms of the same
//! clause that share a variable.

pub(crate) mod dot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::DerivationTree;
use crate::syntax::position::{clause_positions, element, is_atom_position, is_constraint_position};
use crate::syntax::{Clause, ClauseRef, Element, Literal, Local, Program, ProgramPosition, Term, TreePosition};
use crate::union_find::UnionFind;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SliceError {
    #[error("position {0} does not exist")]
    UnknownPosition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DepEdgeKind {
    ConstraintEdge,
    TransitionEdge,
    FunctorEdge,
    LocalEdge,
}

impl DepEdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            DepEdgeKind::ConstraintEdge => "constraint",
            DepEdgeKind::TransitionEdge => "transition",
            DepEdgeKind::FunctorEdge => "functor",
            DepEdgeKind::LocalEdge => "local",
        }
    }
}

impl fmt::Display for DepEdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An undirected graph with its connected components.
#[derive(Clone, Debug)]
pub struct DependencyGraph<P> {
    universe: Vec<P>,
    index: BTreeMap<P, usize>,
    edges: BTreeSet<(usize, usize, DepEdgeKind)>,
    component: Vec<usize>,
}

impl<P: Ord + Clone> DependencyGraph<P> {
    pub fn new(universe: impl IntoIterator<Item = P>, edges: impl IntoIterator<Item = (P, P, DepEdgeKind)>) -> Self {
        let universe: Vec<P> = universe.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index: BTreeMap<P, usize> = universe.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut set = BTreeSet::new();
        for (a, b, kind) in edges {
            let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) else {
                panic!("edge endpoint outside the universe");
            };
            if i != j {
                set.insert((i.min(j), i.max(j), kind));
            }
        }
        let mut uf = UnionFind::new(universe.len());
        for &(i, j, _) in &set {
            uf.union(i, j);
        }
        let component = (0..universe.len()).map(|i| uf.find(i)).collect();
        DependencyGraph {
            universe,
            index,
            edges: set,
            component,
        }
    }

    pub fn universe(&self) -> &[P] {
        &self.universe
    }

    pub fn contains(&self, p: &P) -> bool {
        self.index.contains_key(p)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&P, &P, DepEdgeKind)> + '_ {
        self.edges.iter().map(|&(i, j, k)| (&self.universe[i], &self.universe[j], k))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge kinds joining `a` and `b` (in either orientation).
    pub fn edge_kinds(&self, a: &P, b: &P) -> Vec<DepEdgeKind> {
        let (Some(&i), Some(&j)) = (self.index.get(a), self.index.get(b)) else {
            return Vec::new();
        };
        let (i, j) = (i.min(j), i.max(j));
        self.edges
            .range((i, j, DepEdgeKind::ConstraintEdge)..=(i, j, DepEdgeKind::LocalEdge))
            .map(|&(_, _, k)| k)
            .collect()
    }

    /// Whether `a` and `b` are related by the reflexive transitive closure.
    pub fn connected(&self, a: &P, b: &P) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.component[i] == self.component[j],
            _ => false,
        }
    }

    /// The equivalence class of `p`.
    pub fn class_of(&self, p: &P) -> Option<BTreeSet<P>> {
        let root = self.component[*self.index.get(p)?];
        Some(
            self.universe
                .iter()
                .zip(&self.component)
                .filter(|(_, &c)| c == root)
                .map(|(q, _)| q.clone())
                .collect(),
        )
    }

    /// All classes, ordered by least member.
    pub fn classes(&self) -> Vec<BTreeSet<P>> {
        let mut by_root: BTreeMap<usize, BTreeSet<P>> = BTreeMap::new();
        for (p, &c) in self.universe.iter().zip(&self.component) {
            by_root.entry(c).or_default().insert(p.clone());
        }
        let mut classes: Vec<_> = by_root.into_values().collect();
        classes.sort_by(|a, b| a.first().cmp(&b.first()));
        classes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceKind {
    TreeSlice,
    ProgramSlice,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice<P: Ord> {
    pub kind: SliceKind,
    pub criterion: P,
    pub positions: BTreeSet<P>,
    pub warnings: Vec<String>,
}

/// Positions of a clause that belong to a dependency graph.
pub(crate) fn data_positions(clause: &Clause) -> Vec<Local> {
    clause_positions(clause)
        .into_iter()
        .filter(|l| !is_atom_position(clause, l))
        .collect()
}

/// Edges of kinds constraint, functor and local inside one clause.
pub(crate) fn clause_edges(clause: &Clause) -> Vec<(Local, Local, DepEdgeKind)> {
    let positions = data_positions(clause);
    let mut out = Vec::new();
    let mut by_var: BTreeMap<crate::syntax::Var, Vec<&Local>> = BTreeMap::new();
    for l in &positions {
        match element(clause, l) {
            Some(Element::Constraint(_)) => {}
            Some(Element::Term(t)) => {
                if is_constraint_position(clause, l) {
                    out.push((Local::literal_only(l.literal), l.clone(), DepEdgeKind::ConstraintEdge));
                } else {
                    for i in 1..=t.args().len() {
                        out.push((l.clone(), l.child(i), DepEdgeKind::FunctorEdge));
                    }
                }
                for v in t.vars() {
                    by_var.entry(v).or_default().push(l);
                }
            }
            _ => unreachable!("data positions are terms or constraints"),
        }
    }
    for sharing in by_var.values() {
        for (i, a) in sharing.iter().enumerate() {
            for b in &sharing[i + 1..] {
                out.push(((*a).clone(), (*b).clone(), DepEdgeKind::LocalEdge));
            }
        }
    }
    out
}

/// `~_T` of a derivation tree.
pub fn tree_dep_graph(tree: &DerivationTree) -> DependencyGraph<TreePosition> {
    let mut universe = Vec::new();
    let mut edges = Vec::new();
    let at = |n: usize, l: Local| TreePosition { node: n, local: l };
    for (n, node) in tree.skeleton().nodes().iter().enumerate() {
        universe.extend(data_positions(&node.label).into_iter().map(|l| at(n, l)));
        edges.extend(clause_edges(&node.label).into_iter().map(|(a, b, k)| (at(n, a), at(n, b), k)));
        for &(literal, child) in &node.children {
            let (Some(child), Some(Literal::Call(call))) = (child, node.label.literal(literal)) else {
                continue;
            };
            for i in 1..=call.arity() {
                edges.push((
                    TreePosition::new(n, literal, vec![i]),
                    TreePosition::new(child, 0, vec![i]),
                    DepEdgeKind::TransitionEdge,
                ));
            }
        }
    }
    DependencyGraph::new(universe, edges)
}

/// `~_P` of a program together with its goal, which takes part as an
/// extra clause. Transition edges join every call with every head of the
/// same predicate and arity.
pub fn program_dep_graph(program: &Program, goal: &Clause) -> DependencyGraph<ProgramPosition> {
    let clauses: Vec<(ClauseRef, &Clause)> = program
        .clauses()
        .iter()
        .enumerate()
        .map(|(i, c)| (ClauseRef::Program(i), c))
        .chain(std::iter::once((ClauseRef::Goal, goal)))
        .collect();
    let mut universe = Vec::new();
    let mut edges = Vec::new();
    for &(r, clause) in &clauses {
        let at = |l: Local| ProgramPosition::new(r, l);
        universe.extend(data_positions(clause).into_iter().map(at));
        edges.extend(clause_edges(clause).into_iter().map(|(a, b, k)| (at(a), at(b), k)));
        for (literal, call) in clause.calls() {
            for (h, _) in program.clauses_for(&call.predicate, call.arity()) {
                for i in 1..=call.arity() {
                    edges.push((
                        ProgramPosition::new(r, Local::new(literal, vec![i])),
                        ProgramPosition::new(ClauseRef::Program(h), Local::new(0, vec![i])),
                        DepEdgeKind::TransitionEdge,
                    ));
                }
            }
        }
    }
    DependencyGraph::new(universe, edges)
}

/// How a criterion relates to the graph universe: a data position is its
/// own seed; an atom position seeds with its arguments.
pub(crate) fn criterion_seeds<P: Ord + Clone>(
    graph: &DependencyGraph<P>,
    criterion: &P,
    el: Element<'_>,
    arguments: impl Fn(usize) -> P,
) -> (Vec<P>, Vec<String>) {
    let mut warnings = Vec::new();
    let seeds = match el {
        Element::Atom(a) => {
            warnings.push("criterion is an atom; slicing on the union of its arguments".to_owned());
            (1..=a.arity()).map(arguments).collect()
        }
        Element::Constraint(_) => {
            warnings.push("criterion is a constraint, not a variable position".to_owned());
            vec![criterion.clone()]
        }
        Element::Term(Term::Var(_)) => vec![criterion.clone()],
        Element::Term(_) => {
            warnings.push("criterion is not a variable position".to_owned());
            vec![criterion.clone()]
        }
    };
    debug_assert!(seeds.iter().all(|s| graph.contains(s)));
    (seeds, warnings)
}

fn class_union<P: Ord + Clone>(graph: &DependencyGraph<P>, criterion: &P, seeds: &[P]) -> BTreeSet<P> {
    let mut out: BTreeSet<P> = seeds.iter().flat_map(|s| graph.class_of(s).unwrap_or_default()).collect();
    out.insert(criterion.clone());
    out
}

/// The class of `alpha` under the closure of `~_T`.
pub fn tree_slice(tree: &DerivationTree, alpha: &TreePosition) -> Result<Slice<TreePosition>, SliceError> {
    tree_slice_in(tree, &tree_dep_graph(tree), alpha)
}

/// [`tree_slice`] over a graph that has already been built.
pub fn tree_slice_in(
    tree: &DerivationTree,
    graph: &DependencyGraph<TreePosition>,
    alpha: &TreePosition,
) -> Result<Slice<TreePosition>, SliceError> {
    let el = tree.element(alpha).ok_or_else(|| SliceError::UnknownPosition(alpha.to_string()))?;
    let (seeds, warnings) = criterion_seeds(graph, alpha, el, |i| TreePosition::new(alpha.node, alpha.local.literal, vec![i]));
    Ok(Slice {
        kind: SliceKind::TreeSlice,
        criterion: alpha.clone(),
        positions: class_union(graph, alpha, &seeds),
        warnings,
    })
}

/// The class of `beta` under the closure of `~_P`: the static slice.
pub fn program_slice(program: &Program, goal: &Clause, beta: &ProgramPosition) -> Result<Slice<ProgramPosition>, SliceError> {
    program_slice_in(program, goal, &program_dep_graph(program, goal), beta)
}

pub fn program_slice_in(
    program: &Program,
    goal: &Clause,
    graph: &DependencyGraph<ProgramPosition>,
    beta: &ProgramPosition,
) -> Result<Slice<ProgramPosition>, SliceError> {
    let el = program
        .element(Some(goal), beta)
        .ok_or_else(|| SliceError::UnknownPosition(beta.to_string()))?;
    let (seeds, warnings) = criterion_seeds(graph, beta, el, |i| {
        ProgramPosition::new(beta.clause, Local::new(beta.local.literal, vec![i]))
    });
    Ok(Slice {
        kind: SliceKind::ProgramSlice,
        criterion: beta.clone(),
        positions: class_union(graph, beta, &seeds),
        warnings,
    })
}

fn tree_node_label(tree: &DerivationTree, p: &TreePosition) -> String {
    let el = tree.element(p).map(|e| e.to_string()).unwrap_or_default();
    format!("{p}\n{el}")
}

/// DOT rendering of a tree graph; `marked` positions are filled.
pub fn tree_graph_dot(tree: &DerivationTree, graph: &DependencyGraph<TreePosition>, marked: &BTreeSet<TreePosition>) -> String {
    let clusters = tree
        .skeleton()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| (format!("n{i}"), format!("n{i}: {}", n.label)))
        .collect();
    let nodes: Vec<dot::DotNode> = graph
        .universe()
        .iter()
        .map(|p| dot::DotNode {
            id: p.to_string(),
            label: tree_node_label(tree, p),
            cluster: format!("n{}", p.node),
            marked: marked.contains(p),
        })
        .collect();
    let edges: Vec<dot::DotEdge> = graph
        .edges()
        .map(|(a, b, k)| dot::DotEdge {
            from: a.to_string(),
            to: b.to_string(),
            label: k.name(),
            arrow: dot::Arrow::None,
        })
        .collect();
    dot::render("tree", &clusters, &nodes, &edges)
}

/// DOT rendering of a program graph; `marked` positions are filled.
pub fn program_graph_dot(
    program: &Program,
    goal: &Clause,
    graph: &DependencyGraph<ProgramPosition>,
    marked: &BTreeSet<ProgramPosition>,
) -> String {
    let cluster_key = |r: ClauseRef| match r {
        ClauseRef::Program(i) => format!("c{i}"),
        ClauseRef::Goal => "g".to_owned(),
    };
    let mut clusters: BTreeMap<String, String> = program
        .clauses()
        .iter()
        .enumerate()
        .map(|(i, c)| (cluster_key(ClauseRef::Program(i)), format!("{i}: {c}")))
        .collect();
    clusters.insert("g".to_owned(), format!("goal: {goal}"));
    let nodes: Vec<dot::DotNode> = graph
        .universe()
        .iter()
        .map(|p| dot::DotNode {
            id: p.to_string(),
            label: format!(
                "{p}\n{}",
                program.element(Some(goal), p).map(|e| e.to_string()).unwrap_or_default()
            ),
            cluster: cluster_key(p.clause),
            marked: marked.contains(p),
        })
        .collect();
    let edges: Vec<dot::DotEdge> = graph
        .edges()
        .map(|(a, b, k)| dot::DotEdge {
            from: a.to_string(),
            to: b.to_string(),
            label: k.name(),
            arrow: dot::Arrow::None,
        })
        .collect();
    dot::render("program", &clusters, &nodes, &edges)
}
