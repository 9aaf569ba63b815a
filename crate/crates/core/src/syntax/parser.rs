//! Recursive-descent parser for Edinburgh-style clauses with `{...}`
//! constraint blocks.

use std::collections::HashSet;
use std::sync::Arc;

use num_traits::Zero;

use super::lexer::{tokenize, Spanned, Tok};
use super::{
    integer, Atom, BinOp, BodyItem, Clause, Constraint, Expr, Program, Rational, Relation, SyntaxError, Term, Var,
    LIST_CONS, LIST_NIL,
};

/// A constraint from a standalone constraint list: either arithmetic or a
/// Herbrand term equation such as `f(X) = g(Y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParsedConstraint {
    Arith(Constraint),
    TermEq(Term, Term),
}

pub fn parse_program(text: &str) -> Result<Program, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut clauses = Vec::new();
    while !p.at(&Tok::Eof) {
        clauses.push(p.clause()?);
    }
    Ok(Program::new(clauses))
}

/// Parse a goal: a body-only clause, optionally introduced by `:-` or `?-`.
/// The terminating `.` may be omitted.
pub fn parse_goal(text: &str) -> Result<Clause, SyntaxError> {
    let mut p = Parser::new(text)?;
    if p.at(&Tok::Neck) || p.at(&Tok::Query) {
        p.advance();
    }
    let body = p.body()?;
    if p.at(&Tok::Neck) {
        return Err(p.error("a goal has no head"));
    }
    if p.at(&Tok::End) {
        p.advance();
    }
    if !p.at(&Tok::Eof) {
        return Err(p.unexpected("end of goal"));
    }
    Ok(Clause { head: None, body })
}

/// Parse a comma-separated constraint list, optionally wrapped in `{}` and
/// terminated by `.`; e.g. `{X-Y=1, X=U, f(A)=f(b)}`.
pub fn parse_constraint_list(text: &str) -> Result<Vec<ParsedConstraint>, SyntaxError> {
    let mut p = Parser::new(text)?;
    let braced = p.at(&Tok::LBrace);
    if braced {
        p.advance();
    }
    let mut out = Vec::new();
    if !(p.at(&Tok::Eof) || (braced && p.at(&Tok::RBrace))) {
        loop {
            out.push(p.constraint(true)?);
            if p.at(&Tok::Comma) {
                p.advance();
            } else {
                break;
            }
        }
    }
    if braced {
        p.expect(&Tok::RBrace, "`}`")?;
    }
    if p.at(&Tok::End) {
        p.advance();
    }
    if !p.at(&Tok::Eof) {
        return Err(p.unexpected("end of constraint list"));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    source_vars: HashSet<String>,
    fresh: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, SyntaxError> {
        let toks = tokenize(text)?;
        let source_vars = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect();
        Ok(Parser {
            toks,
            pos: 0,
            source_vars,
            fresh: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        let s = &self.toks[self.pos];
        SyntaxError::Parse {
            line: s.line,
            column: s.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        self.error(format!("expected {}, found {}", wanted, self.peek().describe()))
    }

    fn expect(&mut self, t: &Tok, wanted: &str) -> Result<(), SyntaxError> {
        if self.at(t) {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn clause(&mut self) -> Result<Clause, SyntaxError> {
        if self.at(&Tok::Neck) || self.at(&Tok::Query) {
            return Err(self.error("goal clauses are not allowed in a program"));
        }
        if self.at(&Tok::LBrace) {
            return Err(self.error("a clause head must be an atom, not a constraint"));
        }
        let head = self.atom()?;
        let body = if self.at(&Tok::Neck) {
            self.advance();
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(&Tok::End, "`.` at end of clause")?;
        Ok(Clause {
            head: Some(head),
            body,
        })
    }

    fn body(&mut self) -> Result<Vec<BodyItem>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            if self.at(&Tok::LBrace) {
                self.advance();
                loop {
                    match self.constraint(false)? {
                        ParsedConstraint::Arith(c) => items.push(BodyItem::Constraint(c)),
                        ParsedConstraint::TermEq(..) => unreachable!("terms rejected in clause constraints"),
                    }
                    if self.at(&Tok::Comma) {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(&Tok::RBrace, "`,` or `}` in constraint block")?;
            } else {
                items.push(BodyItem::Call(self.atom()?));
            }
            if self.at(&Tok::Comma) {
                self.advance();
            } else {
                break;
            }
        }
        Ok(items)
    }

    fn atom(&mut self) -> Result<Atom, SyntaxError> {
        let name = match self.peek() {
            Tok::Name(n) => n.clone(),
            _ => return Err(self.unexpected("an atom")),
        };
        self.advance();
        let args = if self.at(&Tok::LParen) {
            self.advance();
            self.term_list(&Tok::RParen, "`,` or `)`")?
        } else {
            Vec::new()
        };
        Ok(Atom {
            predicate: Arc::from(name.as_str()),
            args,
        })
    }

    fn term_list(&mut self, close: &Tok, wanted: &str) -> Result<Vec<Term>, SyntaxError> {
        let mut args = vec![self.term()?];
        while self.at(&Tok::Comma) {
            self.advance();
            args.push(self.term()?);
        }
        self.expect(close, wanted)?;
        Ok(args)
    }

    fn variable(&mut self, name: &str) -> Var {
        if name == "_" {
            loop {
                self.fresh += 1;
                let candidate = format!("_G{}", self.fresh);
                if !self.source_vars.contains(&candidate) {
                    return Var::new(&candidate);
                }
            }
        }
        Var::new(name)
    }

    fn number(&mut self) -> Result<Rational, SyntaxError> {
        let num = match self.advance() {
            Tok::Int(n) => n,
            _ => unreachable!("caller checked for an integer"),
        };
        if self.at(&Tok::Slash) {
            if let Tok::Int(den) = self.peek_at(1).clone() {
                if den.is_zero() {
                    return Err(self.error("zero denominator in rational literal"));
                }
                self.advance();
                self.advance();
                return Ok(Rational::new(num, den));
            }
        }
        Ok(integer(&num))
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.advance();
                Ok(Term::Var(self.variable(&v)))
            }
            Tok::Int(_) => Ok(Term::Number(self.number()?)),
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.advance();
                Ok(Term::Number(-self.number()?))
            }
            Tok::Name(n) => {
                self.advance();
                if self.at(&Tok::LParen) {
                    self.advance();
                    let args = self.term_list(&Tok::RParen, "`,` or `)`")?;
                    Ok(Term::compound(&n, args))
                } else {
                    Ok(Term::constant(&n))
                }
            }
            Tok::LBracket => {
                self.advance();
                if self.at(&Tok::RBracket) {
                    self.advance();
                    return Ok(Term::constant(LIST_NIL));
                }
                let mut items = vec![self.term()?];
                while self.at(&Tok::Comma) {
                    self.advance();
                    items.push(self.term()?);
                }
                let tail = if self.at(&Tok::Bar) {
                    self.advance();
                    self.term()?
                } else {
                    Term::constant(LIST_NIL)
                };
                self.expect(&Tok::RBracket, "`,`, `|` or `]`")?;
                Ok(items
                    .into_iter()
                    .rev()
                    .fold(tail, |acc, head| Term::compound(LIST_CONS, vec![head, acc])))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn constraint(&mut self, allow_terms: bool) -> Result<ParsedConstraint, SyntaxError> {
        let start = &self.toks[self.pos];
        let (line, column) = (start.line, start.column);
        let lhs = self.expr(allow_terms)?;
        let relation = match self.peek() {
            Tok::Eq => Relation::Eq,
            Tok::Lt => Relation::Lt,
            Tok::Le => Relation::Le,
            Tok::Gt => Relation::Gt,
            Tok::Ge => Relation::Ge,
            _ => return Err(self.unexpected("a relation (=, <, <=, >, >=)")),
        };
        self.advance();
        let rhs = self.expr(allow_terms)?;
        let has_term = |e: &Expr| e.leaves().iter().any(|t| matches!(t, Term::Compound { .. }));
        if has_term(&lhs) || has_term(&rhs) {
            return match (relation, lhs, rhs) {
                (Relation::Eq, Expr::Leaf(a), Expr::Leaf(b)) => Ok(ParsedConstraint::TermEq(a, b)),
                _ => Err(SyntaxError::Parse {
                    line,
                    column,
                    message: "non-arithmetic term inside an arithmetic constraint".to_owned(),
                }),
            };
        }
        let c = Constraint { relation, lhs, rhs };
        if c.lhs.linearize().is_none() || c.rhs.linearize().is_none() {
            return Err(SyntaxError::Nonlinear {
                line,
                column,
                message: format!("`{}` multiplies or divides by a non-constant", c),
            });
        }
        Ok(ParsedConstraint::Arith(c))
    }

    fn expr(&mut self, allow_terms: bool) -> Result<Expr, SyntaxError> {
        let mut lhs = self.product(allow_terms)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.product(allow_terms)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self, allow_terms: bool) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary(allow_terms)?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary(allow_terms)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self, allow_terms: bool) -> Result<Expr, SyntaxError> {
        if self.at(&Tok::Minus) {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.unary(allow_terms)?)));
        }
        match self.peek().clone() {
            Tok::Var(v) => {
                self.advance();
                Ok(Expr::Leaf(Term::Var(self.variable(&v))))
            }
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Leaf(Term::Number(integer(&n))))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr(allow_terms)?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Name(_) | Tok::LBracket if allow_terms => Ok(Expr::Leaf(self.term()?)),
            Tok::Name(_) | Tok::LBracket => Err(self.error("non-arithmetic term inside an arithmetic constraint")),
            _ => Err(self.unexpected("an arithmetic expression")),
        }
    }
}
