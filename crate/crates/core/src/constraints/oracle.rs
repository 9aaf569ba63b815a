//! Brute-force semantics over a finite integer domain.
//!
//! Every variable of a store ranges over the same interval `[lo, hi]`. The
//! search enumerates values with bounds propagation; it does not split the
//! store into independent parts, so it shares no logic with the slicing
//! code it is used to check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{ConstraintKind, ConstraintStore, StoreConstraint, StoreError};
use crate::syntax::{Linear, Relation, Term, Var};

/// Closed integer interval `lo..hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntDomain {
    pub lo: i64,
    pub hi: i64,
}

impl IntDomain {
    pub fn new(lo: i64, hi: i64) -> Result<Self, StoreError> {
        if lo > hi {
            return Err(StoreError::EmptyDomain(format!("{lo}..{hi}")));
        }
        Ok(IntDomain { lo, hi })
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

impl fmt::Display for IntDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for IntDomain {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StoreError::EmptyDomain(format!("malformed domain `{s}`, expected lo..hi"));
        let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        IntDomain::new(lo, hi)
    }
}

/// `sol(X, C)` over a finite domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub variable: Var,
    pub domain: IntDomain,
    pub values: BTreeSet<i64>,
}

/// `sum(coeffs) + constant (== | <=) 0` with integer coefficients.
#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, i128)>,
    constant: i128,
    equality: bool,
}

struct Problem {
    index: BTreeMap<Var, usize>,
    rows: Vec<Row>,
}

type Bounds = Vec<(i128, i128)>;

fn term_min((lo, hi): (i128, i128), k: i128) -> i128 {
    if k > 0 {
        k * lo
    } else {
        k * hi
    }
}

fn scaled(l: &Linear, index: &mut BTreeMap<Var, usize>, c: &StoreConstraint) -> Result<(Vec<(usize, i128)>, i128), StoreError> {
    let overflow = || StoreError::NonInteger(c.to_string());
    let denominators = l.coeffs.values().chain(std::iter::once(&l.constant)).map(|q| q.denom().clone());
    let lcm = denominators.fold(num_bigint::BigInt::from(1), |acc, d| acc.lcm(&d));
    let mut coeffs = Vec::new();
    for (v, q) in &l.coeffs {
        let next = index.len();
        let i = *index.entry(v.clone()).or_insert(next);
        let k = (q * &lcm).to_integer().to_i128().ok_or_else(overflow)?;
        coeffs.push((i, k));
    }
    let constant = (&l.constant * &lcm).to_integer().to_i128().ok_or_else(overflow)?;
    Ok((coeffs, constant))
}

fn leaf(t: &Term, c: &StoreConstraint) -> Result<Linear, StoreError> {
    match t {
        Term::Var(v) => Ok(Linear::var(v.clone())),
        Term::Number(q) if q.is_integer() => Ok(Linear::constant(q.clone())),
        Term::Number(_) => Err(StoreError::NonInteger(c.to_string())),
        Term::Compound { .. } => Err(StoreError::NonNumeric(c.to_string())),
    }
}

impl Problem {
    fn new(store: &ConstraintStore) -> Result<Problem, StoreError> {
        let mut index = BTreeMap::new();
        for v in store.vars() {
            let next = index.len();
            index.insert(v, next);
        }
        let mut rows = Vec::new();
        for c in store.constraints() {
            let (form, relation) = match &c.kind {
                ConstraintKind::Numeric(k) => (k.normal_form(), k.relation),
                ConstraintKind::TermEq(a, b) => {
                    let mut l = leaf(a, c)?;
                    l.add_scaled(&leaf(b, c)?, &-crate::syntax::Rational::from_integer(1.into()));
                    (l, Relation::Eq)
                }
            };
            let (coeffs, constant) = scaled(&form, &mut index, c)?;
            let negated = || (coeffs.iter().map(|&(i, k)| (i, -k)).collect::<Vec<_>>(), -constant);
            rows.push(match relation {
                Relation::Eq => Row { coeffs, constant, equality: true },
                Relation::Le => Row { coeffs, constant, equality: false },
                // integer-valued form: f < 0 iff f + 1 <= 0
                Relation::Lt => Row { coeffs, constant: constant + 1, equality: false },
                Relation::Ge => {
                    let (coeffs, constant) = negated();
                    Row { coeffs, constant, equality: false }
                }
                Relation::Gt => {
                    let (coeffs, constant) = negated();
                    Row { coeffs, constant: constant + 1, equality: false }
                }
            });
        }
        Ok(Problem { index, rows })
    }

    /// Tighten `bounds` until a fixpoint; false if some domain empties.
    fn propagate(&self, bounds: &mut Bounds) -> bool {
        loop {
            let mut changed = false;
            for row in &self.rows {
                let signs: &[i128] = if row.equality { &[1, -1] } else { &[1] };
                for &sign in signs {
                    // sign * (sum + constant) <= 0
                    let min: i128 =
                        sign * row.constant + row.coeffs.iter().map(|&(i, k)| term_min(bounds[i], sign * k)).sum::<i128>();
                    if min > 0 {
                        return false;
                    }
                    for &(i, k) in &row.coeffs {
                        let k = sign * k;
                        let slack = -(min - term_min(bounds[i], k));
                        // k * x <= slack
                        let (lo, hi) = bounds[i];
                        if k > 0 {
                            let ub = Integer::div_floor(&slack, &k);
                            if ub < hi {
                                bounds[i].1 = ub;
                                changed = true;
                            }
                        } else {
                            let lb = -Integer::div_floor(&slack, &-k);
                            if lb > lo {
                                bounds[i].0 = lb;
                                changed = true;
                            }
                        }
                        if bounds[i].0 > bounds[i].1 {
                            return false;
                        }
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn exists(&self, mut bounds: Bounds) -> bool {
        if !self.propagate(&mut bounds) {
            return false;
        }
        let open = bounds
            .iter()
            .enumerate()
            .filter(|(_, (lo, hi))| lo < hi)
            .min_by_key(|(_, (lo, hi))| hi - lo)
            .map(|(i, _)| i);
        match open {
            None => self.rows.iter().all(|row| {
                let v = row.constant + row.coeffs.iter().map(|&(i, k)| k * bounds[i].0).sum::<i128>();
                if row.equality { v == 0 } else { v <= 0 }
            }),
            Some(i) => (bounds[i].0..=bounds[i].1).any(|value| {
                let mut next = bounds.clone();
                next[i] = (value, value);
                self.exists(next)
            }),
        }
    }

    fn initial(&self, domain: IntDomain) -> Bounds {
        vec![(domain.lo as i128, domain.hi as i128); self.index.len()]
    }
}

/// Whether the store has a solution with every variable in `domain`.
pub fn satisfiable_finite(store: &ConstraintStore, domain: IntDomain) -> Result<bool, StoreError> {
    let p = Problem::new(store)?;
    let start = p.initial(domain);
    Ok(p.exists(start))
}

/// `sol(x, C)`: the values of `x` in `domain` that extend to a solution of
/// the whole store. A variable not in the store is unconstrained.
pub fn sol_finite(store: &ConstraintStore, x: &Var, domain: IntDomain) -> Result<SolutionSet, StoreError> {
    let p = Problem::new(store)?;
    let start = p.initial(domain);
    let values = match p.index.get(x) {
        None => {
            if p.exists(start) {
                domain.values().collect()
            } else {
                BTreeSet::new()
            }
        }
        Some(&i) => domain
            .values()
            .filter(|&value| {
                let mut b = start.clone();
                b[i] = (value as i128, value as i128);
                p.exists(b)
            })
            .collect(),
    };
    Ok(SolutionSet {
        variable: x.clone(),
        domain,
        values,
    })
}

/// Whether `candidate`, a sub-store of `store`, is a slice for `x`:
/// `sol(x, candidate) = sol(x, store)` over the domain.
pub fn is_slice(store: &ConstraintStore, candidate: &ConstraintStore, x: &Var, domain: IntDomain) -> Result<bool, StoreError> {
    if let Some(c) = candidate.constraints().iter().find(|c| !store.contains(c)) {
        return Err(StoreError::NotSubset(c.to_string()));
    }
    Ok(sol_finite(store, x, domain)?.values == sol_finite(candidate, x, domain)?.values)
}

/// All inclusion-minimal slices for `x`, by exhaustive subset search.
pub fn minimal_slices(store: &ConstraintStore, x: &Var, domain: IntDomain) -> Result<Vec<ConstraintStore>, StoreError> {
    let n = store.len();
    if n > 6 {
        return Err(StoreError::TooLarge(n));
    }
    let target = sol_finite(store, x, domain)?.values;
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut found: Vec<u32> = Vec::new();
    for m in masks {
        if found.iter().any(|f| f & m == *f) {
            continue;
        }
        let sub: ConstraintStore = (0..n)
            .filter(|i| m & (1 << i) != 0)
            .map(|i| store.constraints()[i].clone())
            .collect();
        if sol_finite(&sub, x, domain)?.values == target {
            found.push(m);
        }
    }
    Ok(found
        .into_iter()
        .map(|m| {
            (0..n)
                .filter(|i| m & (1 << i) != 0)
                .map(|i| store.constraints()[i].clone())
                .collect()
        })
        .collect())
}
