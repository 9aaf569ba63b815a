//! Abstract syntax of constraint logic programs.
//!
//! A program is an ordered list of clauses `h :- b1, ..., bn.` whose body
//! items are either calls to defined predicates or linear arithmetic
//! constraints written between curly brackets. Every atom, constraint,
//! argument and subterm has a stable address, see [`position`].

mod lexer;
mod parser;
pub mod position;
mod render;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use parser::{parse_constraint_list, parse_goal, parse_program, ParsedConstraint};
pub use position::{ClauseRef, Element, Local, ProgramPosition, TreePosition};
pub use render::MarkedRender;

/// Exact rational number used for every numeric literal and coefficient.
pub type Rational = BigRational;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: nonlinear constraint: {message}")]
    Nonlinear {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid position address `{0}`")]
    BadAddress(String),
    #[error("no such position `{0}`")]
    UnknownPosition(String),
}

/// A logical variable. Variables parsed from source carry no instance tag;
/// renamed copies inside a derivation carry the ordinal of the tree node
/// they belong to.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    instance: Option<u32>,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var {
            name: Arc::from(name),
            instance: None,
        }
    }

    pub fn with_instance(name: &str, instance: u32) -> Self {
        Var {
            name: Arc::from(name),
            instance: Some(instance),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instance(&self) -> Option<u32> {
        self.instance
    }

    fn tagged(&self, instance: u32) -> Self {
        Var {
            name: self.name.clone(),
            instance: Some(instance),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.instance {
            Some(k) => write!(f, "{}#{}", self.name, k),
            None => f.write_str(&self.name),
        }
    }
}

impl std::str::FromStr for Var {
    type Err = SyntaxError;

    /// Parses `Name` or a renamed `Name#k`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SyntaxError::Parse {
            line: 1,
            column: 1,
            message: format!("`{s}` is not a variable"),
        };
        let (name, instance) = match s.split_once('#') {
            Some((n, k)) => (n, Some(k.parse::<u32>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let mut chars = name.chars();
        let first = chars.next().ok_or_else(bad)?;
        if !(first.is_ascii_uppercase() || first == '_') || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(bad());
        }
        Ok(match instance {
            Some(k) => Var::with_instance(name, k),
            None => Var::new(name),
        })
    }
}

impl serde::Serialize for Var {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Var {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Functor used for list cells `[H|T]`.
pub const LIST_CONS: &str = ".";
/// Constant used for the empty list `[]`.
pub const LIST_NIL: &str = "[]";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Number(Rational),
    /// A compound term; with no arguments it is an atomic constant.
    Compound { functor: Arc<str>, args: Vec<Term> },
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn int(value: i64) -> Self {
        Term::Number(Rational::from_integer(BigInt::from(value)))
    }

    pub fn constant(name: &str) -> Self {
        Term::Compound {
            functor: Arc::from(name),
            args: Vec::new(),
        }
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Self {
        Term::Compound {
            functor: Arc::from(functor),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Number(_) => true,
            Term::Compound { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Number(_) => {}
            Term::Compound { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Number(_) => false,
            Term::Compound { args, .. } => args.iter().any(|a| a.contains_var(v)),
        }
    }

    /// Arguments of a compound term, empty for variables and numbers.
    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound { args, .. } => args,
            _ => &[],
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Number(q) => Term::Number(q.clone()),
            Term::Compound { functor, args } => Term::Compound {
                functor: functor.clone(),
                args: args.iter().map(|a| a.map_vars(f)).collect(),
            },
        }
    }

    /// Subterm at a 1-based argument path.
    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.args().get(i.checked_sub(1)?)?.subterm(rest),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: Arc<str>,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: Arc::from(predicate),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn indicator(&self) -> (Arc<str>, usize) {
        (self.predicate.clone(), self.args.len())
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    /// Whether `lhs rel rhs` holds for two rationals.
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Arithmetic expression as written in the source. Leaves are variables or
/// numbers and each leaf is one addressable occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Leaf(Term),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Rational-coefficient affine form `sum(coeff * var) + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Linear {
    pub coeffs: std::collections::BTreeMap<Var, Rational>,
    pub constant: Rational,
}

impl Linear {
    pub fn constant(c: Rational) -> Self {
        Linear {
            coeffs: Default::default(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        let mut coeffs = std::collections::BTreeMap::new();
        coeffs.insert(v, Rational::one());
        Linear {
            coeffs,
            constant: Rational::zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_scaled(&mut self, other: &Linear, factor: &Rational) {
        if factor.is_zero() {
            return;
        }
        for (v, c) in &other.coeffs {
            let entry = self.coeffs.entry(v.clone()).or_insert_with(Rational::zero);
            *entry += c * factor;
            if entry.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += &other.constant * factor;
    }

    pub fn scale(&mut self, factor: &Rational) {
        if factor.is_zero() {
            self.coeffs.clear();
            self.constant = Rational::zero();
            return;
        }
        for c in self.coeffs.values_mut() {
            *c *= factor;
        }
        self.constant *= factor;
    }

    pub fn coeff(&self, v: &Var) -> Option<&Rational> {
        self.coeffs.get(v)
    }

    /// Evaluate under a total assignment of the occurring variables.
    pub fn eval(&self, value: &impl Fn(&Var) -> Option<Rational>) -> Option<Rational> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * value(v)?;
        }
        Some(acc)
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if !mag.is_one() {
                write!(f, "{}*", mag)?;
            }
            write!(f, "{}", v)?;
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant.is_negative() {
            write!(f, " - {}", -self.constant.clone())
        } else if !self.constant.is_zero() {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

impl Expr {
    /// Linear form of the expression, or `None` if it multiplies two
    /// non-constant factors or divides by a non-constant (or zero).
    pub fn linearize(&self) -> Option<Linear> {
        match self {
            Expr::Leaf(Term::Var(v)) => Some(Linear::var(v.clone())),
            Expr::Leaf(Term::Number(q)) => Some(Linear::constant(q.clone())),
            Expr::Leaf(Term::Compound { .. }) => None,
            Expr::Neg(e) => {
                let mut l = e.linearize()?;
                l.scale(&-Rational::one());
                Some(l)
            }
            Expr::Bin(op, a, b) => {
                let la = a.linearize()?;
                let lb = b.linearize()?;
                match op {
                    BinOp::Add => {
                        let mut l = la;
                        l.add_scaled(&lb, &Rational::one());
                        Some(l)
                    }
                    BinOp::Sub => {
                        let mut l = la;
                        l.add_scaled(&lb, &-Rational::one());
                        Some(l)
                    }
                    BinOp::Mul => {
                        if la.is_constant() {
                            let mut l = lb;
                            l.scale(&la.constant);
                            Some(l)
                        } else if lb.is_constant() {
                            let mut l = la;
                            l.scale(&lb.constant);
                            Some(l)
                        } else {
                            None
                        }
                    }
                    BinOp::Div => {
                        if !lb.is_constant() || lb.constant.is_zero() {
                            return None;
                        }
                        let mut l = la;
                        l.scale(&lb.constant.recip());
                        Some(l)
                    }
                }
            }
        }
    }

    /// Leaf occurrences, left to right.
    pub fn leaves(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.push_leaves(&mut out);
        out
    }

    fn push_leaves<'a>(&'a self, out: &mut Vec<&'a Term>) {
        match self {
            Expr::Leaf(t) => out.push(t),
            Expr::Neg(e) => e.push_leaves(out),
            Expr::Bin(_, a, b) => {
                a.push_leaves(out);
                b.push_leaves(out);
            }
        }
    }

    fn map_leaves(&self, f: &mut impl FnMut(&Term) -> Term) -> Expr {
        match self {
            Expr::Leaf(t) => Expr::Leaf(f(t)),
            Expr::Neg(e) => Expr::Neg(Box::new(e.map_leaves(f))),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f))),
        }
    }
}

/// A linear arithmetic constraint `lhs rel rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub relation: Relation,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Constraint {
    /// Occurrences addressed by paths `[1]..[n]`: leaves of `lhs` then `rhs`.
    pub fn occurrences(&self) -> Vec<&Term> {
        let mut out = self.lhs.leaves();
        out.extend(self.rhs.leaves());
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for t in self.occurrences() {
            t.collect_vars(&mut out);
        }
        out
    }

    /// `lhs - rhs` as a linear form; the parser guarantees linearity.
    pub fn normal_form(&self) -> Linear {
        let mut l = self.lhs.linearize().expect("constraint checked linear at parse time");
        let r = self.rhs.linearize().expect("constraint checked linear at parse time");
        l.add_scaled(&r, &-Rational::one());
        l
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Constraint {
        Constraint {
            relation: self.relation,
            lhs: self.lhs.map_leaves(f),
            rhs: self.rhs.map_leaves(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BodyItem {
    Call(Atom),
    Constraint(Constraint),
}

impl BodyItem {
    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            BodyItem::Call(a) => a.vars(),
            BodyItem::Constraint(c) => c.vars(),
        }
    }
}

/// A clause; a goal is a clause without a head.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub head: Option<Atom>,
    pub body: Vec<BodyItem>,
}

impl Clause {
    pub fn is_goal(&self) -> bool {
        self.head.is_none()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.head.as_ref().map(Atom::vars).unwrap_or_default();
        for item in &self.body {
            out.extend(item.vars());
        }
        out
    }

    /// Body calls in order, paired with their literal index (1-based).
    pub fn calls(&self) -> impl Iterator<Item = (usize, &Atom)> {
        self.body.iter().enumerate().filter_map(|(i, b)| match b {
            BodyItem::Call(a) => Some((i + 1, a)),
            BodyItem::Constraint(_) => None,
        })
    }

    /// Literal at a literal index: 0 is the head, `k >= 1` the k-th body item.
    pub fn literal(&self, index: usize) -> Option<Literal<'_>> {
        if index == 0 {
            self.head.as_ref().map(Literal::Head)
        } else {
            self.body.get(index - 1).map(|item| match item {
                BodyItem::Call(a) => Literal::Call(a),
                BodyItem::Constraint(c) => Literal::Constraint(c),
            })
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Clause {
        let map_atom = |a: &Atom, f: &mut dyn FnMut(&Term) -> Term| Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| f(t)).collect(),
        };
        Clause {
            head: self.head.as_ref().map(|h| map_atom(h, f)),
            body: self
                .body
                .iter()
                .map(|item| match item {
                    BodyItem::Call(a) => BodyItem::Call(map_atom(a, f)),
                    BodyItem::Constraint(c) => BodyItem::Constraint(c.map_terms(f)),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Literal<'a> {
    Head(&'a Atom),
    Call(&'a Atom),
    Constraint(&'a Constraint),
}

/// Rename every variable of `clause` to a fresh copy tagged with `instance`.
/// Structure and positions are unchanged.
pub fn rename_clause(clause: &Clause, instance: u32) -> Clause {
    let mut f = |t: &Term| t.map_vars(&mut |v: &Var| Term::Var(v.tagged(instance)));
    clause.map_terms(&mut f)
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    clauses: Vec<Clause>,
    positions: Vec<ProgramPosition>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Self {
        let positions = clauses
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                position::clause_positions(c)
                    .into_iter()
                    .map(move |local| ProgramPosition::new(ClauseRef::Program(i), local))
            })
            .collect();
        Program { clauses, positions }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: usize) -> Option<&Clause> {
        self.clauses.get(index)
    }

    /// Total enumeration of program positions in address order.
    pub fn positions(&self) -> &[ProgramPosition] {
        &self.positions
    }

    /// Clauses whose head has the given predicate and arity, in textual order.
    pub fn clauses_for(&self, predicate: &str, arity: usize) -> impl Iterator<Item = (usize, &Clause)> + '_ {
        let predicate = predicate.to_owned();
        self.clauses.iter().enumerate().filter(move |(_, c)| {
            c.head
                .as_ref()
                .is_some_and(|h| &*h.predicate == predicate.as_str() && h.arity() == arity)
        })
    }

    /// Resolve a textual address such as `0/1/2.1` (or `g/1/3` for the goal).
    pub fn position_of(&self, address: &str) -> Result<ProgramPosition, SyntaxError> {
        let pos: ProgramPosition = address.parse()?;
        match pos.clause {
            ClauseRef::Program(i) => {
                let clause = self
                    .clause(i)
                    .ok_or_else(|| SyntaxError::UnknownPosition(address.to_owned()))?;
                if position::element(clause, &pos.local).is_none() {
                    return Err(SyntaxError::UnknownPosition(address.to_owned()));
                }
                Ok(pos)
            }
            ClauseRef::Goal => Err(SyntaxError::UnknownPosition(format!(
                "{address} (goal positions are resolved against a goal)"
            ))),
        }
    }

    /// Syntactic element at a program position (goal positions resolve
    /// against `goal`).
    pub fn element<'a>(&'a self, goal: Option<&'a Clause>, pos: &ProgramPosition) -> Option<Element<'a>> {
        let clause = match pos.clause {
            ClauseRef::Program(i) => self.clause(i)?,
            ClauseRef::Goal => goal?,
        };
        position::element(clause, &pos.local)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{}", c)?;
        }
        Ok(())
    }
}

pub(crate) fn integer(value: &BigInt) -> Rational {
    Rational::from_integer(value.clone())
}
