use std::fmt::{self, Write};

use num_traits::Signed;

use super::{Atom, BinOp, BodyItem, Clause, Constraint, Expr, Local, Term, LIST_CONS, LIST_NIL};

/// Renders a clause with selected positions wrapped in `[[...]]`.
pub struct MarkedRender<'a> {
    pub clause: &'a Clause,
    pub marked: &'a dyn Fn(&Local) -> bool,
}

impl fmt::Display for MarkedRender<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_clause(f, self.clause, self.marked)
    }
}

fn no_marks(_: &Local) -> bool {
    false
}

fn open(f: &mut impl Write, on: bool) -> fmt::Result {
    if on {
        f.write_str("[[")?;
    }
    Ok(())
}

fn close(f: &mut impl Write, on: bool) -> fmt::Result {
    if on {
        f.write_str("]]")?;
    }
    Ok(())
}

fn write_clause(f: &mut impl Write, c: &Clause, marked: &dyn Fn(&Local) -> bool) -> fmt::Result {
    if let Some(h) = &c.head {
        write_atom(f, h, 0, marked)?;
        if !c.body.is_empty() {
            f.write_str(" :- ")?;
        }
    }
    for (i, item) in c.body.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        match item {
            BodyItem::Call(a) => write_atom(f, a, i + 1, marked)?,
            BodyItem::Constraint(k) => write_constraint(f, k, i + 1, marked)?,
        }
    }
    f.write_str(".")
}

fn write_atom(f: &mut impl Write, a: &Atom, literal: usize, marked: &dyn Fn(&Local) -> bool) -> fmt::Result {
    let at = Local::literal_only(literal);
    let m = marked(&at);
    open(f, m)?;
    f.write_str(&a.predicate)?;
    if !a.args.is_empty() {
        f.write_str("(")?;
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_term(f, t, &at.child(i + 1), marked)?;
        }
        f.write_str(")")?;
    }
    close(f, m)
}

fn is_cons(t: &Term) -> bool {
    matches!(t, Term::Compound { functor, args } if &**functor == LIST_CONS && args.len() == 2)
}

fn is_nil(t: &Term) -> bool {
    matches!(t, Term::Compound { functor, args } if &**functor == LIST_NIL && args.is_empty())
}

fn write_term(f: &mut impl Write, t: &Term, at: &Local, marked: &dyn Fn(&Local) -> bool) -> fmt::Result {
    let m = marked(at);
    open(f, m)?;
    match t {
        Term::Var(v) => write!(f, "{}", v)?,
        Term::Number(q) => write!(f, "{}", q)?,
        Term::Compound { args, .. } if is_cons(t) => {
            f.write_str("[")?;
            let (mut head, mut tail) = (&args[0], &args[1]);
            let mut cell = at.clone();
            loop {
                write_term(f, head, &cell.child(1), marked)?;
                let tail_at = cell.child(2);
                if is_cons(tail) && !marked(&tail_at) {
                    f.write_str(",")?;
                    let next = tail.args();
                    head = &next[0];
                    tail = &next[1];
                    cell = tail_at;
                } else if is_nil(tail) && !marked(&tail_at) {
                    break;
                } else {
                    f.write_str("|")?;
                    write_term(f, tail, &tail_at, marked)?;
                    break;
                }
            }
            f.write_str("]")?;
        }
        Term::Compound { functor, args } => {
            f.write_str(functor)?;
            if !args.is_empty() {
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_term(f, a, &at.child(i + 1), marked)?;
                }
                f.write_str(")")?;
            }
        }
    }
    close(f, m)
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Leaf(_) => 4,
    }
}

fn write_constraint(f: &mut impl Write, c: &Constraint, literal: usize, marked: &dyn Fn(&Local) -> bool) -> fmt::Result {
    let at = Local::literal_only(literal);
    let m = marked(&at);
    if literal > 0 {
        f.write_str("{")?;
    }
    open(f, m)?;
    let mut counter = 0;
    write_expr(f, &c.lhs, &at, &mut counter, marked)?;
    f.write_str(c.relation.symbol())?;
    write_expr(f, &c.rhs, &at, &mut counter, marked)?;
    close(f, m)?;
    if literal > 0 {
        f.write_str("}")?;
    }
    Ok(())
}

fn write_expr(
    f: &mut impl Write,
    e: &Expr,
    at: &Local,
    counter: &mut usize,
    marked: &dyn Fn(&Local) -> bool,
) -> fmt::Result {
    match e {
        Expr::Leaf(t) => {
            *counter += 1;
            let pos = at.child(*counter);
            let m = marked(&pos);
            open(f, m)?;
            match t {
                Term::Number(q) if q.is_negative() || !q.is_integer() => write!(f, "({})", q)?,
                other => write_term(f, other, &pos, &no_marks)?,
            }
            close(f, m)
        }
        Expr::Neg(inner) => {
            f.write_str("-")?;
            let paren = precedence(inner) < 3;
            if paren {
                f.write_str("(")?;
            }
            write_expr(f, inner, at, counter, marked)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Bin(op, a, b) => {
            let p = precedence(e);
            let lp = precedence(a) < p;
            if lp {
                f.write_str("(")?;
            }
            write_expr(f, a, at, counter, marked)?;
            if lp {
                f.write_str(")")?;
            }
            f.write_str(match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
            })?;
            let rp = precedence(b) <= p;
            if rp {
                f.write_str("(")?;
            }
            write_expr(f, b, at, counter, marked)?;
            if rp {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, &Local::literal_only(0), &no_marks)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, self, 0, &no_marks)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_constraint(f, self, 0, &no_marks)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_clause(f, self, &no_marks)
    }
}
