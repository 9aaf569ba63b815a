#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use clpslice_core::constraints::{ConstraintKind, ConstraintStore};
use clpslice_core::syntax::{Linear, Rational, Var};
use clpslice_core::{parse_goal, parse_program, Clause, Program};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every corpus program with its goals, sorted by file name.
pub fn corpus() -> Vec<(String, Program, Vec<Clause>)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "clp"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let program = parse_program(&std::fs::read_to_string(&p).unwrap()).unwrap();
            let goals = std::fs::read_to_string(p.with_extension("goals"))
                .unwrap()
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('%'))
                .map(|l| parse_goal(l).unwrap())
                .collect();
            (name, program, goals)
        })
        .collect()
}

const VARS: [&str; 4] = ["A", "B", "C", "D"];

fn constraint(rng: &mut StdRng, vars: &[&str]) -> String {
    let a = *vars.choose(rng).unwrap();
    let b = *vars.choose(rng).unwrap();
    let c: i64 = rng.gen_range(-2..=2);
    match rng.gen_range(0..6) {
        0 => format!("{a}-{b}<={c}"),
        1 => format!("{a}={b}+{c}"),
        2 => format!("{a}>={c}"),
        3 => format!("{a}<={c}"),
        4 => format!("{a}={c}"),
        _ => format!("{a}<{b}+{c}"),
    }
}

fn term(rng: &mut StdRng, vars: &[&str]) -> String {
    if rng.gen_bool(0.15) {
        rng.gen_range(-2..=2i64).to_string()
    } else {
        vars.choose(rng).unwrap().to_string()
    }
}

/// A random non-recursive program over predicates `p0..p3` with difference
/// constraints, and a goal calling `p0`. Each clause uses at most four
/// variables.
pub fn random_program(rng: &mut StdRng) -> (String, String) {
    let preds = 4;
    let arity: Vec<usize> = (0..preds).map(|_| rng.gen_range(1..=3)).collect();
    let mut text = String::new();
    for p in 0..preds {
        for _ in 0..rng.gen_range(1..=2) {
            let nvars = rng.gen_range(1..=4);
            let vars = &VARS[..nvars];
            let head: Vec<String> = (0..arity[p]).map(|_| term(rng, vars)).collect();
            let mut body = Vec::new();
            for _ in 0..rng.gen_range(0..=2) {
                body.push(format!("{{{}}}", constraint(rng, vars)));
            }
            if p + 1 < preds {
                for _ in 0..rng.gen_range(0..=2) {
                    let q = rng.gen_range(p + 1..preds);
                    let args: Vec<String> = (0..arity[q]).map(|_| term(rng, vars)).collect();
                    body.push(format!("p{q}({})", args.join(",")));
                }
            }
            body.shuffle(rng);
            if body.is_empty() {
                text.push_str(&format!("p{p}({}).\n", head.join(",")));
            } else {
                text.push_str(&format!("p{p}({}) :- {}.\n", head.join(","), body.join(", ")));
            }
        }
    }
    let goal_vars = ["X", "Y", "Z"];
    let args: Vec<String> = (0..arity[0]).map(|i| goal_vars[i].to_owned()).collect();
    (text, format!("p0({})", args.join(",")))
}

/// A linear form scaled so that its first coefficient is 1.
fn canonical(mut l: Linear) -> Linear {
    if let Some(c) = l.coeffs.values().next().cloned() {
        l.scale(&(Rational::from_integer(1.into()) / c));
    }
    l
}

/// Numeric stores as sets of `(relation, canonical form)`; equations
/// between a variable and a variable or number count as numeric.
pub fn linear_forms(store: &ConstraintStore) -> BTreeSet<(String, Linear)> {
    store
        .constraints()
        .iter()
        .map(|c| match &c.kind {
            ConstraintKind::Numeric(k) => {
                let rel = k.relation.symbol().to_owned();
                let nf = k.normal_form();
                let nf = if rel == "=" { canonical(nf) } else { nf };
                (rel, nf)
            }
            ConstraintKind::TermEq(a, b) => {
                let lin = |t: &clpslice_core::Term| match t {
                    clpslice_core::Term::Var(v) => Linear::var(v.clone()),
                    clpslice_core::Term::Number(q) => Linear::constant(q.clone()),
                    other => panic!("non-numeric term {other}"),
                };
                let mut l = lin(a);
                l.add_scaled(&lin(b), &-Rational::from_integer(1.into()));
                ("=".to_owned(), canonical(l))
            }
        })
        .collect()
}

pub fn rename(l: &Linear, f: &impl Fn(&Var) -> Var) -> Linear {
    let mut out = Linear::constant(l.constant.clone());
    for (v, c) in &l.coeffs {
        out.add_scaled(&Linear::var(f(v)), c);
    }
    out
}

/// Whether some bijection between the variables maps one set of forms
/// onto the other.
pub fn alpha_equivalent(a: &BTreeSet<(String, Linear)>, b: &BTreeSet<(String, Linear)>) -> bool {
    let vars = |s: &BTreeSet<(String, Linear)>| -> Vec<Var> {
        s.iter()
            .flat_map(|(_, l)| l.coeffs.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    let (va, vb) = (vars(a), vars(b));
    if va.len() != vb.len() || a.len() != b.len() {
        return false;
    }
    let mut perm: Vec<usize> = (0..vb.len()).collect();
    loop {
        let map = |v: &Var| vb[perm[va.iter().position(|x| x == v).unwrap()]].clone();
        let renamed: BTreeSet<(String, Linear)> = a
            .iter()
            .map(|(r, l)| {
                let l = rename(l, &map);
                (r.clone(), if r == "=" { canonical(l) } else { l })
            })
            .collect();
        if &renamed == b {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// A random store of up to five linear constraints over at most four
/// variables with small integer coefficients.
pub fn random_store_text(rng: &mut StdRng) -> String {
    let nvars = rng.gen_range(1..=4);
    let rels = ["<", "<=", "=", ">=", ">"];
    let parts: Vec<String> = (0..rng.gen_range(1..=5))
        .map(|_| {
            let a = VARS[rng.gen_range(0..nvars)];
            let b = VARS[rng.gen_range(0..nvars)];
            let ka: i64 = rng.gen_range(1..=2) * if rng.gen_bool(0.5) { 1 } else { -1 };
            let kb: i64 = rng.gen_range(-2..=2);
            let rel = rels[rng.gen_range(0..rels.len())];
            let c: i64 = rng.gen_range(-3..=3);
            if kb == 0 || a == b {
                format!("{ka}*{a} {rel} {c}")
            } else {
                format!("{ka}*{a} + {kb}*{b} {rel} {c}")
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}
