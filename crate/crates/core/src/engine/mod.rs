//! Skeletons, derivation trees and proof trees.
//!
//! A skeleton is an ordered tree whose root is labelled by the goal and
//! whose other nodes are labelled by renamed program clauses; node `k` uses
//! instance tag `k`. Node ids follow creation order, which for the search in
//! [`derive`] is pre-order. A call whose child is not (yet) attached is an
//! incomplete leaf.

mod derive;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::constraints::{ConstraintStore, StoreConstraint};
use crate::syntax::position::{clause_positions, element, is_atom_argument};
use crate::syntax::{rename_clause, Clause, ClauseRef, Element, Literal, Local, Program, ProgramPosition, TreePosition, Var};

pub use derive::{derive, DeriveOptions, DeriveOutcome, GroundnessEvent, GroundnessLog, Instant, Solution};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("node {node}: literal {literal} is not a call")]
    NotACall { node: usize, literal: usize },
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("node {node}: call at literal {literal} already has a child")]
    SlotTaken { node: usize, literal: usize },
    #[error("node {child}: head {found} does not match call {expected}")]
    PredicateMismatch { child: usize, expected: String, found: String },
    #[error("node {child}: head arity {found} differs from call arity {expected}")]
    ArityMismatch { child: usize, expected: usize, found: usize },
    #[error("node {0} is labelled by a goal but is not the root")]
    HeadlessChild(usize),
    #[error("position {0} is not in the tree")]
    ForeignPosition(TreePosition),
    #[error("position {0} is not a position of the program or goal")]
    InvalidProgramPosition(ProgramPosition),
    #[error("depth limit must be at least 1")]
    ZeroDepth,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    /// The renamed clause labelling the node.
    pub label: Clause,
    /// The program clause (or the goal) the label is a copy of.
    pub source: ClauseRef,
    /// The parent node and the literal of the call this node resolves.
    pub parent: Option<(usize, usize)>,
    /// One slot per call of the label, in body order: `(literal, child)`.
    pub children: Vec<(usize, Option<usize>)>,
}

impl TreeNode {
    fn new(label: Clause, source: ClauseRef, parent: Option<(usize, usize)>) -> Self {
        let children = label.calls().map(|(lit, _)| (lit, None)).collect();
        TreeNode {
            label,
            source,
            parent,
            children,
        }
    }

    pub fn child_at(&self, literal: usize) -> Option<usize> {
        self.children.iter().find(|(l, _)| *l == literal).and_then(|(_, c)| *c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    nodes: Vec<TreeNode>,
}

impl Skeleton {
    /// A one-node skeleton labelled by the goal (not renamed).
    pub fn new(goal: Clause) -> Self {
        Skeleton {
            nodes: vec![TreeNode::new(goal, ClauseRef::Goal, None)],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Attach a copy of `clause`, renamed with the new node's id, as the
    /// child resolving the call at `literal` of `parent`.
    pub fn attach(&mut self, parent: usize, literal: usize, clause: &Clause, source: ClauseRef) -> Result<usize, EngineError> {
        let id = self.nodes.len();
        let node = self.nodes.get_mut(parent).ok_or(EngineError::NoSuchNode(parent))?;
        let slot = node
            .children
            .iter_mut()
            .find(|(l, _)| *l == literal)
            .ok_or(EngineError::NotACall { node: parent, literal })?;
        if slot.1.is_some() {
            return Err(EngineError::SlotTaken { node: parent, literal });
        }
        slot.1 = Some(id);
        let label = rename_clause(clause, id as u32);
        self.nodes.push(TreeNode::new(label, source, Some((parent, literal))));
        Ok(id)
    }

    /// Whether no call is left without a child.
    pub fn is_complete(&self) -> bool {
        self.nodes.iter().all(|n| n.children.iter().all(|(_, c)| c.is_some()))
    }

    pub fn depth(&self, mut id: usize) -> usize {
        let mut d = 0;
        while let Some((p, _)) = self.nodes[id].parent {
            id = p;
            d += 1;
        }
        d
    }

    /// Nodes in pre-order (children in body order).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            for (_, c) in self.nodes[n].children.iter().rev() {
                if let Some(c) = c {
                    stack.push(*c);
                }
            }
        }
        out
    }
}

fn local_positions(node: usize, local: Local) -> TreePosition {
    TreePosition { node, local }
}

/// `C(S)`: every clause constraint of every node plus the node equations
/// between each call and the head of its child. Incomplete calls contribute
/// no equations. Constraints are listed in pre-order of the literals.
pub fn constraints_of(skeleton: &Skeleton) -> Result<ConstraintStore, EngineError> {
    let mut store = ConstraintStore::default();
    // (node, index of next literal)
    let mut stack = vec![(0usize, 1usize)];
    while let Some((n, lit)) = stack.pop() {
        let node = &skeleton.nodes[n];
        if lit > node.label.body.len() {
            continue;
        }
        stack.push((n, lit + 1));
        match node.label.literal(lit) {
            Some(Literal::Constraint(c)) => {
                let mut origin = vec![TreePosition::new(n, lit, vec![])];
                origin.extend((1..=c.occurrences().len()).map(|i| TreePosition::new(n, lit, vec![i])));
                store.push(StoreConstraint::numeric(c.clone()).with_origin(origin));
            }
            Some(Literal::Call(call)) => {
                let Some(child) = node.child_at(lit) else { continue };
                let head = skeleton.nodes[child].label.head.as_ref().ok_or(EngineError::HeadlessChild(child))?;
                if head.predicate != call.predicate {
                    return Err(EngineError::PredicateMismatch {
                        child,
                        expected: call.predicate.to_string(),
                        found: head.predicate.to_string(),
                    });
                }
                if head.arity() != call.arity() {
                    return Err(EngineError::ArityMismatch {
                        child,
                        expected: call.arity(),
                        found: head.arity(),
                    });
                }
                for (i, (a, b)) in call.args.iter().zip(&head.args).enumerate() {
                    let origin = [TreePosition::new(n, lit, vec![i + 1]), TreePosition::new(child, 0, vec![i + 1])];
                    store.push(StoreConstraint::term_eq(a.clone(), b.clone()).with_origin(origin));
                }
                stack.push((child, 1));
            }
            _ => {}
        }
    }
    Ok(store)
}

/// A skeleton together with its constraint set and the program it was
/// built from. When the skeleton is complete this is a proof tree.
#[derive(Clone, Debug)]
pub struct DerivationTree {
    program: Arc<Program>,
    goal: Clause,
    skeleton: Skeleton,
    store: ConstraintStore,
}

/// A derivation tree with a complete skeleton.
pub type ProofTree = DerivationTree;

impl DerivationTree {
    pub fn new(program: Arc<Program>, goal: Clause, skeleton: Skeleton) -> Result<Self, EngineError> {
        let store = constraints_of(&skeleton)?;
        Ok(DerivationTree {
            program,
            goal,
            skeleton,
            store,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn goal(&self) -> &Clause {
        &self.goal
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn store(&self) -> &ConstraintStore {
        &self.store
    }

    pub fn is_proof_tree(&self) -> bool {
        self.skeleton.is_complete()
    }

    pub fn node_count(&self) -> usize {
        self.skeleton.len()
    }

    /// `Pos(T)`, node by node in id order.
    pub fn positions(&self) -> Vec<TreePosition> {
        self.skeleton
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(n, node)| clause_positions(&node.label).into_iter().map(move |l| local_positions(n, l)))
            .collect()
    }

    /// Top-level argument positions of every head and call.
    pub fn argument_positions(&self) -> Vec<TreePosition> {
        self.positions()
            .into_iter()
            .filter(|p| is_atom_argument(&self.skeleton.nodes[p.node].label, &p.local))
            .collect()
    }

    pub fn element(&self, pos: &TreePosition) -> Option<Element<'_>> {
        element(&self.skeleton.node(pos.node)?.label, &pos.local)
    }

    pub fn contains(&self, pos: &TreePosition) -> bool {
        self.element(pos).is_some()
    }

    pub fn label(&self, node: usize) -> Option<&Clause> {
        self.skeleton.node(node).map(|n| &n.label)
    }

    /// `Φ_T`: the program (or goal) position a tree position is a copy of.
    pub fn phi(&self, pos: &TreePosition) -> Result<ProgramPosition, EngineError> {
        if !self.contains(pos) {
            return Err(EngineError::ForeignPosition(pos.clone()));
        }
        Ok(ProgramPosition::new(self.skeleton.nodes[pos.node].source, pos.local.clone()))
    }

    pub fn phi_image<'a>(&self, positions: impl IntoIterator<Item = &'a TreePosition>) -> Result<BTreeSet<ProgramPosition>, EngineError> {
        positions.into_iter().map(|p| self.phi(p)).collect()
    }

    /// `Φ_T⁻¹(q)`.
    pub fn phi_inverse(&self, q: &ProgramPosition) -> Result<BTreeSet<TreePosition>, EngineError> {
        if self.program.element(Some(&self.goal), q).is_none() {
            return Err(EngineError::InvalidProgramPosition(q.clone()));
        }
        Ok(self
            .skeleton
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.source == q.clause)
            .map(|(i, _)| local_positions(i, q.local.clone()))
            .collect())
    }

    fn check(&self, positions: &BTreeSet<TreePosition>) -> Result<(), EngineError> {
        match positions.iter().find(|p| !self.contains(p)) {
            Some(p) => Err(EngineError::ForeignPosition(p.clone())),
            None => Ok(()),
        }
    }

    /// `Ψ_T(P)`: the variables occurring in the elements at `positions`.
    pub fn psi(&self, positions: &BTreeSet<TreePosition>) -> Result<BTreeSet<Var>, EngineError> {
        self.check(positions)?;
        Ok(positions.iter().flat_map(|p| self.element(p).expect("checked").vars()).collect())
    }

    /// `C_P`: the store constraints containing a variable of `Ψ_T(P)`.
    pub fn positions_to_store(&self, positions: &BTreeSet<TreePosition>) -> Result<ConstraintStore, EngineError> {
        let vars = self.psi(positions)?;
        Ok(self.store.filter(|c| c.vars().iter().any(|v| vars.contains(v))))
    }

    /// The store constraints that originate from some position in
    /// `positions`: clause constraints whose occurrence (or the constraint
    /// itself) is included and node equations with an included side.
    pub fn positions_to_constraints(&self, positions: &BTreeSet<TreePosition>) -> Result<ConstraintStore, EngineError> {
        self.check(positions)?;
        Ok(self.store.filter(|c| c.origin.iter().any(|o| positions.contains(o))))
    }

    /// Nodes holding at least one of `positions`.
    pub fn nodes_touched(&self, positions: &BTreeSet<TreePosition>) -> BTreeSet<usize> {
        positions.iter().map(|p| p.node).collect()
    }

    /// How often each program clause labels a node.
    pub fn clause_uses(&self) -> BTreeMap<ClauseRef, usize> {
        let mut out = BTreeMap::new();
        for n in &self.skeleton.nodes {
            *out.entry(n.source).or_default() += 1;
        }
        out
    }
}

pub fn phi_inverse(tree: &DerivationTree, q: &ProgramPosition) -> Result<BTreeSet<TreePosition>, EngineError> {
    tree.phi_inverse(q)
}

pub fn positions_to_store(tree: &DerivationTree, positions: &BTreeSet<TreePosition>) -> Result<ConstraintStore, EngineError> {
    tree.positions_to_store(positions)
}
