//! Position addressing.
//!
//! Inside a clause a position is a literal index (0 = head, `k >= 1` =
//! k-th body item) plus a path of 1-based argument indices. The empty path
//! denotes the atom or constraint itself. For a constraint, path `[i]` is
//! its i-th variable/number occurrence read left to right.
//!
//! Textual forms:
//!
//! * program position: `<clause>/<literal>[/<a1>.<a2>...]`, e.g. `0/0/3`
//! * goal position: `g/<literal>[/<path>]`, e.g. `g/1/3`
//! * tree position: `n<node>/<literal>[/<path>]`, e.g. `n2/0/1`

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Atom, Clause, Constraint, Literal, SyntaxError, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Local {
    pub literal: usize,
    pub path: Vec<usize>,
}

impl Local {
    pub fn new(literal: usize, path: Vec<usize>) -> Self {
        Local { literal, path }
    }

    pub fn literal_only(literal: usize) -> Self {
        Local {
            literal,
            path: Vec::new(),
        }
    }

    /// Child position one step below this one.
    pub fn child(&self, index: usize) -> Local {
        let mut path = self.path.clone();
        path.push(index);
        Local {
            literal: self.literal,
            path,
        }
    }

    /// Top-level argument position of an atom (`path.len() == 1`).
    pub fn is_argument(&self) -> bool {
        self.path.len() == 1
    }

    fn fmt_tail(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}", self.literal)?;
        if !self.path.is_empty() {
            f.write_str("/")?;
            for (i, step) in self.path.iter().enumerate() {
                if i > 0 {
                    f.write_str(".")?;
                }
                write!(f, "{}", step)?;
            }
        }
        Ok(())
    }

    fn parse_tail<'a>(mut parts: impl Iterator<Item = &'a str>, whole: &str) -> Result<Local, SyntaxError> {
        let bad = || SyntaxError::BadAddress(whole.to_owned());
        let literal = parts.next().ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?;
        let path = match parts.next() {
            None | Some("") => Vec::new(),
            Some(p) => p
                .split('.')
                .map(|s| match s.parse::<usize>() {
                    Ok(0) | Err(_) => Err(bad()),
                    Ok(n) => Ok(n),
                })
                .collect::<Result<_, _>>()?,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Local { literal, path })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClauseRef {
    Program(usize),
    Goal,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ProgramPosition {
    pub clause: ClauseRef,
    pub local: Local,
}

impl ProgramPosition {
    pub fn new(clause: ClauseRef, local: Local) -> Self {
        ProgramPosition { clause, local }
    }
}

impl fmt::Display for ProgramPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.clause {
            ClauseRef::Program(i) => write!(f, "{}", i)?,
            ClauseRef::Goal => f.write_str("g")?,
        }
        self.local.fmt_tail(f)
    }
}

impl FromStr for ProgramPosition {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().split('/');
        let head = parts.next().unwrap_or_default();
        let clause = if head == "g" {
            ClauseRef::Goal
        } else {
            ClauseRef::Program(head.parse().map_err(|_| SyntaxError::BadAddress(s.to_owned()))?)
        };
        Ok(ProgramPosition {
            clause,
            local: Local::parse_tail(parts, s)?,
        })
    }
}

impl From<ProgramPosition> for String {
    fn from(p: ProgramPosition) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for ProgramPosition {
    type Error = SyntaxError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A derivation tree position: a node plus a position inside the clause
/// labelling that node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TreePosition {
    pub node: usize,
    pub local: Local,
}

impl TreePosition {
    pub fn new(node: usize, literal: usize, path: Vec<usize>) -> Self {
        TreePosition {
            node,
            local: Local { literal, path },
        }
    }
}

impl fmt::Display for TreePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.node)?;
        self.local.fmt_tail(f)
    }
}

impl FromStr for TreePosition {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SyntaxError::BadAddress(s.to_owned());
        let mut parts = s.trim().split('/');
        let head = parts.next().unwrap_or_default();
        let node = head
            .strip_prefix('n')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        Ok(TreePosition {
            node,
            local: Local::parse_tail(parts, s)?,
        })
    }
}

impl From<TreePosition> for String {
    fn from(p: TreePosition) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for TreePosition {
    type Error = SyntaxError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// The syntactic element found at a position.
#[derive(Clone, Copy, Debug)]
pub enum Element<'a> {
    /// A head atom or a body call.
    Atom(&'a Atom),
    Constraint(&'a Constraint),
    /// An argument, a subterm, or a constraint occurrence.
    Term(&'a Term),
}

impl Element<'_> {
    pub fn vars(&self) -> std::collections::BTreeSet<super::Var> {
        match self {
            Element::Atom(a) => a.vars(),
            Element::Constraint(c) => c.vars(),
            Element::Term(t) => t.vars(),
        }
    }
}

impl fmt::Display for Element<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Atom(a) => write!(f, "{}", a),
            Element::Constraint(c) => write!(f, "{}", c),
            Element::Term(t) => write!(f, "{}", t),
        }
    }
}

pub fn element<'a>(clause: &'a Clause, local: &Local) -> Option<Element<'a>> {
    match clause.literal(local.literal)? {
        Literal::Head(a) | Literal::Call(a) => match local.path.split_first() {
            None => Some(Element::Atom(a)),
            Some((&i, rest)) => a.args.get(i.checked_sub(1)?)?.subterm(rest).map(Element::Term),
        },
        Literal::Constraint(c) => match local.path.as_slice() {
            [] => Some(Element::Constraint(c)),
            [i] => c.occurrences().get(i.checked_sub(1)?).copied().map(Element::Term),
            _ => None,
        },
    }
}

/// All positions of a clause: for each literal the literal itself, then its
/// arguments and subterms in pre-order (or its occurrences, for a constraint).
pub fn clause_positions(clause: &Clause) -> Vec<Local> {
    let mut out = Vec::new();
    let first = if clause.head.is_some() { 0 } else { 1 };
    for literal in first..=clause.body.len() {
        out.push(Local::literal_only(literal));
        match clause.literal(literal) {
            Some(Literal::Head(a)) | Some(Literal::Call(a)) => {
                for (i, arg) in a.args.iter().enumerate() {
                    push_term_positions(arg, Local::new(literal, vec![i + 1]), &mut out);
                }
            }
            Some(Literal::Constraint(c)) => {
                for i in 1..=c.occurrences().len() {
                    out.push(Local::new(literal, vec![i]));
                }
            }
            None => {}
        }
    }
    out
}

fn push_term_positions(term: &Term, at: Local, out: &mut Vec<Local>) {
    out.push(at.clone());
    for (i, arg) in term.args().iter().enumerate() {
        push_term_positions(arg, at.child(i + 1), out);
    }
}

/// Whether the local position addresses an atom (head or call) as a whole.
pub fn is_atom_position(clause: &Clause, local: &Local) -> bool {
    local.path.is_empty() && matches!(clause.literal(local.literal), Some(Literal::Head(_)) | Some(Literal::Call(_)))
}

/// Whether the local position is a top-level argument of a head or call.
pub fn is_atom_argument(clause: &Clause, local: &Local) -> bool {
    local.is_argument() && matches!(clause.literal(local.literal), Some(Literal::Head(_)) | Some(Literal::Call(_)))
}

/// Whether the local position lies in (or is) a constraint.
pub fn is_constraint_position(clause: &Clause, local: &Local) -> bool {
    matches!(clause.literal(local.literal), Some(Literal::Constraint(_)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addresses_round_trip() {
        for s in ["0/0/3", "2/0/1", "g/1/3", "1/2", "4/1/2.1.3"] {
            let p: ProgramPosition = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        let t: TreePosition = "n12/0/1.2".parse().unwrap();
        assert_eq!(t.node, 12);
        assert_eq!(t.local.path, vec![1, 2]);
        assert_eq!(t.to_string(), "n12/0/1.2");
    }

    #[test]
    fn malformed_addresses() {
        for s in ["", "x/0", "0", "0/a", "0/0/0", "0/0/1./", "0/0/1/2"] {
            assert!(s.parse::<ProgramPosition>().is_err(), "{s}");
        }
        assert!("0/0/1".parse::<TreePosition>().is_err());
        assert!("n/0".parse::<TreePosition>().is_err());
    }
}
