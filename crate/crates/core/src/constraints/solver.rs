use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::fourier::{self, Residual};
use super::{ConstraintKind, ConstraintStore, StoreConstraint, Valuation};
use crate::syntax::{Constraint, Linear, Rational, Relation, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
}

/// Incremental decision procedure for a growing store.
///
/// Herbrand variables are bound by unification. A variable that has been
/// mentioned by an arithmetic constraint is numeric from then on and may only
/// be equated with numbers or other variables; those equations go to the
/// linear part, which is kept as a set of pivot definitions over parametric
/// variables plus residual inequalities over the parametric variables only.
#[derive(Clone, Debug, Default)]
pub struct Solver {
    bindings: BTreeMap<Var, Term>,
    numeric: BTreeSet<Var>,
    solved: BTreeMap<Var, Linear>,
    residual: Vec<Residual>,
    vars: BTreeSet<Var>,
    unsat: bool,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    /// A solver holding every constraint of `store`, stopping at the first
    /// one that makes it unsatisfiable.
    pub fn from_store(store: &ConstraintStore) -> Self {
        let mut s = Solver::new();
        for c in store.constraints() {
            if !s.add(c) {
                break;
            }
        }
        s
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.unsat
    }

    /// Add a store constraint; returns whether the store is still
    /// satisfiable. Once unsatisfiable the solver stays so.
    pub fn add(&mut self, c: &StoreConstraint) -> bool {
        match &c.kind {
            ConstraintKind::Numeric(k) => self.add_constraint(k),
            ConstraintKind::TermEq(a, b) => self.unify(a, b),
        }
    }

    pub fn add_constraint(&mut self, c: &Constraint) -> bool {
        if self.unsat {
            return false;
        }
        self.vars.extend(c.vars());
        let ok = match self.numeric_form(&c.normal_form()) {
            None => false,
            Some(l) => match c.relation {
                Relation::Eq => self.add_eq(l),
                Relation::Le => self.add_ineq(l, false),
                Relation::Lt => self.add_ineq(l, true),
                Relation::Ge | Relation::Gt => {
                    let mut neg = l;
                    neg.scale(&-Rational::one());
                    self.add_ineq(neg, c.relation == Relation::Gt)
                }
            },
        };
        self.unsat = !ok;
        ok
    }

    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        if self.unsat {
            return false;
        }
        a.collect_vars(&mut self.vars);
        b.collect_vars(&mut self.vars);
        let mut work = vec![(a.clone(), b.clone())];
        while let Some((a, b)) = work.pop() {
            let ok = match (self.deref(&a), self.deref(&b)) {
                (Term::Var(x), Term::Var(y)) if x == y => true,
                (Term::Var(x), Term::Var(y)) => {
                    if self.numeric.contains(&x) || self.numeric.contains(&y) {
                        let mut l = Linear::var(x);
                        l.add_scaled(&Linear::var(y), &-Rational::one());
                        self.add_eq(l)
                    } else {
                        self.bindings.insert(x, Term::Var(y));
                        true
                    }
                }
                (Term::Var(x), Term::Number(q)) | (Term::Number(q), Term::Var(x)) => {
                    let mut l = Linear::var(x);
                    l.constant = -q;
                    self.add_eq(l)
                }
                (Term::Var(x), t @ Term::Compound { .. }) | (t @ Term::Compound { .. }, Term::Var(x)) => {
                    if self.numeric.contains(&x) || self.occurs(&x, &t) {
                        false
                    } else {
                        self.bindings.insert(x, t);
                        true
                    }
                }
                (Term::Number(p), Term::Number(q)) => p == q,
                (
                    Term::Compound { functor: f, args: xs },
                    Term::Compound { functor: g, args: ys },
                ) => {
                    if f == g && xs.len() == ys.len() {
                        work.extend(xs.into_iter().zip(ys));
                        true
                    } else {
                        false
                    }
                }
                _ => false,
            };
            if !ok {
                self.unsat = true;
                return false;
            }
        }
        true
    }

    /// The ground value of `t` under the current equalities, if it has one.
    /// Inequalities never make a variable ground.
    pub fn ground_value(&self, t: &Term) -> Option<Term> {
        resolve(t, &self.bindings, &self.solved, &|_| None)
    }

    pub fn is_ground(&self, t: &Term) -> bool {
        self.ground_value(t).is_some()
    }

    pub fn solved_form(&self) -> SolvedForm {
        if self.unsat {
            return SolvedForm {
                status: Status::Unsat,
                herbrand_bindings: BTreeMap::new(),
                numeric_solved: BTreeMap::new(),
                residual: Vec::new(),
                vars: self.vars.clone(),
            };
        }
        let herbrand_bindings = self
            .bindings
            .keys()
            .map(|v| (v.clone(), self.deref_deep(&Term::Var(v.clone()))))
            .collect();
        SolvedForm {
            status: Status::Sat,
            herbrand_bindings,
            numeric_solved: self.solved.clone(),
            residual: self.residual.clone(),
            vars: self.vars.clone(),
        }
    }

    fn deref(&self, t: &Term) -> Term {
        let mut t = t;
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t.clone()
    }

    fn deref_deep(&self, t: &Term) -> Term {
        match self.deref(t) {
            Term::Compound { functor, args } => Term::Compound {
                functor,
                args: args.iter().map(|a| self.deref_deep(a)).collect(),
            },
            other => other,
        }
    }

    fn occurs(&self, x: &Var, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(v) => &v == x,
            Term::Number(_) => false,
            Term::Compound { args, .. } => args.iter().any(|a| self.occurs(x, a)),
        }
    }

    /// Rewrite a linear form over root variables, marking them numeric.
    /// Fails if some variable is bound to a compound term.
    fn numeric_form(&mut self, l: &Linear) -> Option<Linear> {
        let mut out = Linear::constant(l.constant.clone());
        for (v, c) in &l.coeffs {
            match self.deref(&Term::Var(v.clone())) {
                Term::Var(root) => {
                    self.numeric.insert(root.clone());
                    out.add_scaled(&Linear::var(root), c)
                }
                Term::Number(q) => out.constant += c * q,
                Term::Compound { .. } => return None,
            }
        }
        Some(out)
    }

    fn substitute(&self, l: Linear) -> Linear {
        let mut out = Linear::constant(l.constant);
        for (v, c) in l.coeffs {
            match self.solved.get(&v) {
                Some(def) => out.add_scaled(def, &c),
                None => out.add_scaled(&Linear::var(v), &c),
            }
        }
        out
    }

    fn add_eq(&mut self, l: Linear) -> bool {
        self.numeric.extend(l.coeffs.keys().cloned());
        let l = self.substitute(l);
        let Some((pivot, a)) = l.coeffs.iter().next_back().map(|(v, a)| (v.clone(), a.clone())) else {
            return l.constant.is_zero();
        };
        let mut def = l;
        def.coeffs.remove(&pivot);
        def.scale(&-a.recip());
        for form in self.solved.values_mut() {
            if let Some(c) = form.coeffs.remove(&pivot) {
                form.add_scaled(&def, &c);
            }
        }
        let mut touched = false;
        for r in &mut self.residual {
            if let Some(c) = r.form.coeffs.remove(&pivot) {
                r.form.add_scaled(&def, &c);
                touched = true;
            }
        }
        self.solved.insert(pivot, def);
        if !touched {
            return true;
        }
        let mut kept = Vec::with_capacity(self.residual.len());
        for r in std::mem::take(&mut self.residual) {
            if r.form.is_constant() {
                if !r.constant_holds() {
                    return false;
                }
            } else {
                kept.push(r);
            }
        }
        self.residual = kept;
        fourier::feasible(&self.residual)
    }

    fn add_ineq(&mut self, l: Linear, strict: bool) -> bool {
        self.numeric.extend(l.coeffs.keys().cloned());
        let r = Residual {
            form: self.substitute(l),
            strict,
        };
        if r.form.is_constant() {
            return r.constant_holds();
        }
        if self.residual.contains(&r) {
            return true;
        }
        self.residual.push(r);
        fourier::feasible(&self.residual)
    }
}

fn resolve(
    t: &Term,
    bindings: &BTreeMap<Var, Term>,
    solved: &BTreeMap<Var, Linear>,
    free: &dyn Fn(&Var) -> Option<Term>,
) -> Option<Term> {
    match t {
        Term::Var(v) => {
            if let Some(b) = bindings.get(v) {
                resolve(b, bindings, solved, free)
            } else if let Some(def) = solved.get(v) {
                if def.is_constant() {
                    Some(Term::Number(def.constant.clone()))
                } else {
                    let value = def.eval(&|w: &Var| match free(w)? {
                        Term::Number(q) => Some(q),
                        _ => None,
                    });
                    value.map(Term::Number)
                }
            } else {
                free(v)
            }
        }
        Term::Number(q) => Some(Term::Number(q.clone())),
        Term::Compound { functor, args } => Some(Term::Compound {
            functor: functor.clone(),
            args: args
                .iter()
                .map(|a| resolve(a, bindings, solved, free))
                .collect::<Option<_>>()?,
        }),
    }
}

/// Result of [`satisfiable`]: the status plus the solved store.
///
/// `herbrand_bindings` maps each bound variable to its fully dereferenced
/// term. `numeric_solved` maps pivot variables to affine forms over the
/// parametric variables, and `residual` holds the remaining inequalities
/// over parametric variables only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolvedForm {
    pub status: Status,
    pub herbrand_bindings: BTreeMap<Var, Term>,
    pub numeric_solved: BTreeMap<Var, Linear>,
    pub residual: Vec<Residual>,
    pub vars: BTreeSet<Var>,
}

impl SolvedForm {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }

    /// Variables of the store with a unique value forced by the
    /// equalities, together with that value.
    pub fn ground_vars(&self) -> BTreeMap<Var, Term> {
        if !self.is_sat() {
            return BTreeMap::new();
        }
        self.vars
            .iter()
            .filter_map(|v| {
                let value = resolve(&Term::Var(v.clone()), &self.herbrand_bindings, &self.numeric_solved, &|_| None)?;
                Some((v.clone(), value))
            })
            .collect()
    }

    /// A total valuation of the store variables satisfying every
    /// constraint. Unconstrained variables get 0.
    pub fn witness(&self) -> Option<Valuation> {
        if !self.is_sat() {
            return None;
        }
        let point = fourier::witness(&self.residual)?;
        let free = |w: &Var| Some(Term::Number(point.get(w).cloned().unwrap_or_else(Rational::zero)));
        Some(
            self.vars
                .iter()
                .map(|v| {
                    let value = resolve(&Term::Var(v.clone()), &self.herbrand_bindings, &self.numeric_solved, &free)
                        .expect("every free variable gets a value");
                    (v.clone(), value)
                })
                .collect(),
        )
    }
}

/// Decide satisfiability of a store over the mixed rational/Herbrand
/// domain.
pub fn satisfiable(store: &ConstraintStore) -> SolvedForm {
    let mut form = Solver::from_store(store).solved_form();
    form.vars = store.vars();
    form
}
