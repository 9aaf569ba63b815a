//! Constraint stores over CLP(Q) + Herbrand terms.
//!
//! [`satisfiable`] decides a store exactly: term equations by unification
//! (with occurs check), numeric equalities by Gaussian elimination over the
//! rationals and inequalities by Fourier-Motzkin elimination. The
//! [`oracle`] module evaluates the same stores by brute force over a finite
//! integer domain and is what the slicing tests measure against.

mod fourier;
pub mod oracle;
mod solver;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{parse_constraint_list, Constraint, ParsedConstraint, SyntaxError, Term, TreePosition, Var};
use crate::union_find::UnionFind;

pub use oracle::{is_slice, minimal_slices, satisfiable_finite, sol_finite, IntDomain, SolutionSet};
pub use fourier::Residual;
pub use solver::{satisfiable, SolvedForm, Solver, Status};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("variable {0} does not occur in the store")]
    UnknownVariable(Var),
    #[error("constraint `{0}` is not numeric; the finite-domain oracle only handles numbers")]
    NonNumeric(String),
    #[error("constraint `{0}` mentions a non-integer value outside the integer domain")]
    NonInteger(String),
    #[error("constraint `{0}` of the candidate slice is not in the store")]
    NotSubset(String),
    #[error("empty domain {0}")]
    EmptyDomain(String),
    #[error("store has {0} constraints; minimal slice search is limited to 6")]
    TooLarge(usize),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// A linear arithmetic constraint.
    Numeric(Constraint),
    /// A term equation, e.g. a node equation between a call argument and
    /// the corresponding head argument.
    TermEq(Term, Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StoreConstraint {
    pub kind: ConstraintKind,
    /// Tree positions this constraint was built from; empty for standalone
    /// stores.
    pub origin: BTreeSet<TreePosition>,
}

impl StoreConstraint {
    pub fn numeric(c: Constraint) -> Self {
        StoreConstraint {
            kind: ConstraintKind::Numeric(c),
            origin: BTreeSet::new(),
        }
    }

    pub fn term_eq(lhs: Term, rhs: Term) -> Self {
        StoreConstraint {
            kind: ConstraintKind::TermEq(lhs, rhs),
            origin: BTreeSet::new(),
        }
    }

    pub fn with_origin(mut self, origin: impl IntoIterator<Item = TreePosition>) -> Self {
        self.origin = origin.into_iter().collect();
        self
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        match &self.kind {
            ConstraintKind::Numeric(c) => c.vars(),
            ConstraintKind::TermEq(a, b) => {
                let mut out = a.vars();
                b.collect_vars(&mut out);
                out
            }
        }
    }

    /// Whether the constraint holds under a valuation covering its variables.
    /// Returns `None` if a variable is unassigned or a numeric variable is
    /// bound to a non-number.
    pub fn holds(&self, valuation: &Valuation) -> Option<bool> {
        match &self.kind {
            ConstraintKind::Numeric(c) => {
                let value = |v: &Var| match valuation.get(v)? {
                    Term::Number(q) => Some(q.clone()),
                    _ => None,
                };
                let l = c.lhs.linearize()?.eval(&value)?;
                let r = c.rhs.linearize()?.eval(&value)?;
                Some(c.relation.holds(&l, &r))
            }
            ConstraintKind::TermEq(a, b) => {
                let a = apply(a, valuation)?;
                let b = apply(b, valuation)?;
                Some(a == b)
            }
        }
    }
}

fn apply(t: &Term, valuation: &Valuation) -> Option<Term> {
    Some(match t {
        Term::Var(v) => valuation.get(v)?.clone(),
        Term::Number(q) => Term::Number(q.clone()),
        Term::Compound { functor, args } => Term::Compound {
            functor: functor.clone(),
            args: args.iter().map(|a| apply(a, valuation)).collect::<Option<_>>()?,
        },
    })
}

impl fmt::Display for StoreConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConstraintKind::Numeric(c) => write!(f, "{}", c),
            ConstraintKind::TermEq(a, b) => write!(f, "{}={}", a, b),
        }
    }
}

/// A valuation: variables mapped to ground values (numbers or terms).
pub type Valuation = BTreeMap<Var, Term>;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConstraintStore {
    constraints: Vec<StoreConstraint>,
}

impl ConstraintStore {
    pub fn new(constraints: Vec<StoreConstraint>) -> Self {
        ConstraintStore { constraints }
    }

    pub fn constraints(&self) -> &[StoreConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn push(&mut self, c: StoreConstraint) {
        self.constraints.push(c);
    }

    /// `vars(C)`: every variable occurring in some constraint.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().flat_map(StoreConstraint::vars).collect()
    }

    pub fn contains(&self, c: &StoreConstraint) -> bool {
        self.constraints.contains(c)
    }

    /// Sub-store of the constraints selected by `keep`, in store order.
    pub fn filter(&self, mut keep: impl FnMut(&StoreConstraint) -> bool) -> ConstraintStore {
        ConstraintStore {
            constraints: self.constraints.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    pub fn holds(&self, valuation: &Valuation) -> Option<bool> {
        for c in &self.constraints {
            if !c.holds(valuation)? {
                return Some(false);
            }
        }
        Some(true)
    }
}

impl fmt::Display for ConstraintStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", c)?;
        }
        f.write_str("}")
    }
}

impl FromIterator<StoreConstraint> for ConstraintStore {
    fn from_iter<I: IntoIterator<Item = StoreConstraint>>(iter: I) -> Self {
        ConstraintStore::new(iter.into_iter().collect())
    }
}

/// Parse a standalone store such as `{X-Y=1, X=U, f(A)=f(b)}`.
pub fn parse_store(text: &str) -> Result<ConstraintStore, StoreError> {
    Ok(parse_constraint_list(text)?
        .into_iter()
        .map(|c| match c {
            ParsedConstraint::Arith(c) => StoreConstraint::numeric(c),
            ParsedConstraint::TermEq(a, b) => StoreConstraint::term_eq(a, b),
        })
        .collect())
}

/// Equivalence classes of `vars(C)` under the transitive closure of
/// co-occurrence in a constraint. Classes are ordered by their least
/// variable.
pub fn dep_classes(store: &ConstraintStore) -> Vec<BTreeSet<Var>> {
    let vars: Vec<Var> = store.vars().into_iter().collect();
    let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut uf = UnionFind::new(vars.len());
    for c in store.constraints() {
        let vs = c.vars();
        let mut it = vs.iter().map(|v| index[v]);
        if let Some(first) = it.next() {
            it.for_each(|other| uf.union(first, other));
        }
    }
    uf.sets()
        .into_iter()
        .map(|set| set.into_iter().map(|i| vars[i].clone()).collect())
        .collect()
}

/// `C_X`: the constraints mentioning some variable in the dependency class
/// of `x`.
pub fn class_slice(store: &ConstraintStore, x: &Var) -> Result<ConstraintStore, StoreError> {
    let class = dep_classes(store)
        .into_iter()
        .find(|class| class.contains(x))
        .ok_or_else(|| StoreError::UnknownVariable(x.clone()))?;
    Ok(store.filter(|c| c.vars().iter().any(|v| class.contains(v))))
}
