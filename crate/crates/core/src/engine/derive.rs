//! Depth-first SLD search with leftmost selection, clause order and
//! chronological backtracking.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DerivationTree, EngineError, Skeleton};
use crate::constraints::{satisfiable, Solver};
use crate::syntax::{Clause, ClauseRef, Literal, Program, Term, TreePosition};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeriveOptions {
    /// Maximal node depth; the root has depth 0.
    pub depth_limit: usize,
    /// Stop after this many proof trees.
    pub max_solutions: usize,
    /// Maximal number of resolution steps over the whole search.
    pub step_limit: usize,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        DeriveOptions {
            depth_limit: 256,
            max_solutions: 1,
            step_limit: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instant {
    /// Before a call's node equations are added, or before a constraint is
    /// posted.
    Call,
    /// When the call's subtree is complete, or right after a constraint is
    /// posted.
    Success,
}

/// Which positions of one literal were ground at one instant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundnessEvent {
    pub instant: Instant,
    pub node: usize,
    pub literal: usize,
    /// The node resolving the call; absent for constraints.
    pub child: Option<usize>,
    /// Every position sampled: the call's arguments or the constraint's
    /// occurrences.
    pub sampled: Vec<TreePosition>,
    pub ground: Vec<TreePosition>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundnessLog {
    pub events: Vec<GroundnessEvent>,
}

impl GroundnessLog {
    pub fn is_ground_at(&self, pos: &TreePosition, instant: Instant) -> bool {
        self.events
            .iter()
            .any(|e| e.instant == instant && e.node == pos.node && e.literal == pos.local.literal && e.ground.contains(pos))
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub tree: DerivationTree,
    pub log: GroundnessLog,
}

#[derive(Clone, Debug)]
pub enum DeriveOutcome {
    Solutions(Vec<Solution>),
    NoSolution {
        /// The largest derivation tree met during the search, if any
        /// satisfiable one exists.
        deepest: Option<DerivationTree>,
        depth_limit_hit: bool,
        step_limit_hit: bool,
    },
}

impl DeriveOutcome {
    pub fn first(&self) -> Option<&Solution> {
        match self {
            DeriveOutcome::Solutions(s) => s.first(),
            DeriveOutcome::NoSolution { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Task {
    Item { node: usize, literal: usize },
    Exit { node: usize, literal: usize, child: usize },
}

#[derive(Clone, Debug)]
struct State {
    skeleton: Skeleton,
    solver: Solver,
    agenda: Vec<Task>,
    log: Vec<GroundnessEvent>,
}

enum Entry {
    Run(State),
    Choice {
        state: State,
        node: usize,
        literal: usize,
        alternatives: Arc<[usize]>,
        next: usize,
    },
}

struct Search<'a> {
    program: &'a Program,
    opts: &'a DeriveOptions,
    steps: usize,
    depth_hit: bool,
    best: Option<Skeleton>,
}

fn push_body(agenda: &mut Vec<Task>, node: usize, label: &Clause) {
    for literal in (1..=label.body.len()).rev() {
        agenda.push(Task::Item { node, literal });
    }
}

fn sample(solver: &Solver, terms: &[&Term], node: usize, literal: usize) -> (Vec<TreePosition>, Vec<TreePosition>) {
    let sampled: Vec<TreePosition> = (1..=terms.len()).map(|i| TreePosition::new(node, literal, vec![i])).collect();
    let ground = terms
        .iter()
        .zip(&sampled)
        .filter(|(t, _)| solver.is_ground(t))
        .map(|(_, p)| p.clone())
        .collect();
    (sampled, ground)
}

impl Search<'_> {
    /// Run a state until it needs a choice, fails or succeeds.
    fn run(&mut self, mut st: State, stack: &mut Vec<Entry>) -> Option<State> {
        loop {
            let Some(task) = st.agenda.pop() else {
                return Some(st);
            };
            match task {
                Task::Exit { node, literal, child } => {
                    let Some(Literal::Call(atom)) = st.skeleton.nodes[node].label.literal(literal) else {
                        unreachable!("exit tasks are pushed for calls")
                    };
                    let args: Vec<&Term> = atom.args.iter().collect();
                    let (sampled, ground) = sample(&st.solver, &args, node, literal);
                    st.log.push(GroundnessEvent {
                        instant: Instant::Success,
                        node,
                        literal,
                        child: Some(child),
                        sampled,
                        ground,
                    });
                }
                Task::Item { node, literal } => match st.skeleton.nodes[node].label.literal(literal) {
                    Some(Literal::Constraint(c)) => {
                        let c = c.clone();
                        let occ: Vec<Term> = c.occurrences().into_iter().cloned().collect();
                        let refs: Vec<&Term> = occ.iter().collect();
                        let (sampled, ground) = sample(&st.solver, &refs, node, literal);
                        st.log.push(GroundnessEvent {
                            instant: Instant::Call,
                            node,
                            literal,
                            child: None,
                            sampled,
                            ground,
                        });
                        if !st.solver.add_constraint(&c) {
                            return None;
                        }
                        let (sampled, ground) = sample(&st.solver, &refs, node, literal);
                        st.log.push(GroundnessEvent {
                            instant: Instant::Success,
                            node,
                            literal,
                            child: None,
                            sampled,
                            ground,
                        });
                    }
                    Some(Literal::Call(atom)) => {
                        let alternatives: Arc<[usize]> = self.program.clauses_for(&atom.predicate, atom.arity()).map(|(i, _)| i).collect();
                        if alternatives.is_empty() {
                            return None;
                        }
                        if st.skeleton.depth(node) + 1 > self.opts.depth_limit {
                            self.depth_hit = true;
                            return None;
                        }
                        let args: Vec<&Term> = atom.args.iter().collect();
                        let (sampled, ground) = sample(&st.solver, &args, node, literal);
                        st.log.push(GroundnessEvent {
                            instant: Instant::Call,
                            node,
                            literal,
                            child: Some(st.skeleton.len()),
                            sampled,
                            ground,
                        });
                        stack.push(Entry::Choice {
                            state: st,
                            node,
                            literal,
                            alternatives,
                            next: 0,
                        });
                        return None;
                    }
                    _ => unreachable!("items are pushed for body literals"),
                },
            }
        }
    }

    /// Resolve the call at `(node, literal)` with program clause `ci`.
    fn resolve(&mut self, mut st: State, node: usize, literal: usize, ci: usize) -> Option<State> {
        self.steps += 1;
        let clause = &self.program.clauses()[ci];
        let child = st
            .skeleton
            .attach(node, literal, clause, ClauseRef::Program(ci))
            .expect("calls are resolved once");
        let call = match st.skeleton.nodes[node].label.literal(literal) {
            Some(Literal::Call(a)) => a.clone(),
            _ => unreachable!(),
        };
        let head = st.skeleton.nodes[child].label.head.clone().expect("program clauses have heads");
        for (a, b) in call.args.iter().zip(&head.args) {
            if !st.solver.unify(a, b) {
                return None;
            }
        }
        st.agenda.push(Task::Exit { node, literal, child });
        let label = st.skeleton.nodes[child].label.clone();
        push_body(&mut st.agenda, child, &label);
        if self.best.as_ref().is_none_or(|b| b.len() < st.skeleton.len())
            && super::constraints_of(&st.skeleton).is_ok_and(|c| satisfiable(&c).is_sat())
        {
            self.best = Some(st.skeleton.clone());
        }
        Some(st)
    }
}

/// Search for proof trees of `goal`.
///
/// Constraints are posted when the selection reaches them; node equations
/// are added as soon as a clause is attached. Every addition is checked for
/// satisfiability and failing branches are abandoned. The groundness log of
/// each solution records, for every call, which arguments were ground just
/// before its node equations were added and once its subtree was complete,
/// and for every constraint which occurrences were ground before and after
/// it was posted.
pub fn derive(program: &Program, goal: &Clause, opts: &DeriveOptions) -> Result<DeriveOutcome, EngineError> {
    if opts.depth_limit == 0 {
        return Err(EngineError::ZeroDepth);
    }
    let shared = Arc::new(program.clone());
    let mut search = Search {
        program,
        opts,
        steps: 0,
        depth_hit: false,
        best: None,
    };
    let root = Skeleton::new(goal.clone());
    if satisfiable(&super::constraints_of(&root)?).is_sat() {
        search.best = Some(root.clone());
    }
    let mut initial = State {
        skeleton: root,
        solver: Solver::new(),
        agenda: Vec::new(),
        log: Vec::new(),
    };
    push_body(&mut initial.agenda, 0, goal);

    let mut solutions = Vec::new();
    let mut stack = vec![Entry::Run(initial)];
    let mut step_hit = false;
    while let Some(entry) = stack.pop() {
        let next = match entry {
            Entry::Run(st) => Some(st),
            Entry::Choice {
                state,
                node,
                literal,
                alternatives,
                next,
            } => {
                if search.steps >= opts.step_limit {
                    step_hit = true;
                    break;
                }
                let ci = alternatives[next];
                let branch = if next + 1 < alternatives.len() {
                    let branch = state.clone();
                    stack.push(Entry::Choice {
                        state,
                        node,
                        literal,
                        alternatives,
                        next: next + 1,
                    });
                    branch
                } else {
                    state
                };
                search.resolve(branch, node, literal, ci)
            }
        };
        let Some(st) = next else { continue };
        if let Some(done) = search.run(st, &mut stack) {
            let tree = DerivationTree::new(shared.clone(), goal.clone(), done.skeleton)?;
            solutions.push(Solution {
                tree,
                log: GroundnessLog { events: done.log },
            });
            if solutions.len() >= opts.max_solutions {
                break;
            }
        }
    }
    if !solutions.is_empty() {
        return Ok(DeriveOutcome::Solutions(solutions));
    }
    let deepest = match search.best {
        Some(s) => Some(DerivationTree::new(shared, goal.clone(), s)?),
        None => None,
    };
    Ok(DeriveOutcome::NoSolution {
        deepest,
        depth_limit_hit: search.depth_hit,
        step_limit_hit: step_hit,
    })
}
