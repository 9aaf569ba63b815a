//! Fourier-Motzkin elimination over exact rationals, with strictness
//! tracking and witness extraction by back-substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::syntax::{Linear, Rational, Var};

/// Inequality `form < 0` when strict, else `form <= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residual {
    pub form: Linear,
    pub strict: bool,
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.form, if self.strict { "<" } else { "<=" })
    }
}

impl Residual {
    pub(crate) fn constant_holds(&self) -> bool {
        if self.strict {
            self.form.constant.is_negative()
        } else {
            !self.form.constant.is_positive()
        }
    }

    /// Scale so the leading coefficient has magnitude one; positive scaling
    /// keeps the direction.
    fn normalized(mut self) -> Residual {
        if let Some(c) = self.form.coeffs.values().next() {
            let factor = c.abs().recip();
            self.form.scale(&factor);
        } else if !self.form.constant.is_zero() {
            let factor = self.form.constant.abs().recip();
            self.form.scale(&factor);
        }
        self
    }
}

struct Stage {
    var: Var,
    bounds: Vec<Residual>,
}

enum Outcome {
    Infeasible,
    Feasible(Vec<Stage>),
}

fn eliminate(ineqs: &[Residual]) -> Outcome {
    let mut current: BTreeSet<Residual> = BTreeSet::new();
    for i in ineqs {
        if i.form.is_constant() {
            if !i.constant_holds() {
                return Outcome::Infeasible;
            }
        } else {
            current.insert(i.clone().normalized());
        }
    }
    let mut stages = Vec::new();
    loop {
        let vars: BTreeSet<&Var> = current.iter().flat_map(|i| i.form.coeffs.keys()).collect();
        // Pick the variable producing the fewest combinations.
        let Some(var) = vars
            .into_iter()
            .min_by_key(|v| {
                let (mut pos, mut neg) = (0usize, 0usize);
                for i in &current {
                    match i.form.coeff(v) {
                        Some(c) if c.is_positive() => pos += 1,
                        Some(_) => neg += 1,
                        None => {}
                    }
                }
                pos * neg
            })
            .cloned()
        else {
            return Outcome::Feasible(stages);
        };

        let (with, without): (Vec<Residual>, Vec<Residual>) = current.into_iter().partition(|i| i.form.coeff(&var).is_some());
        let (upper, lower): (Vec<&Residual>, Vec<&Residual>) =
            with.iter().partition(|i| i.form.coeff(&var).is_some_and(|c| c.is_positive()));
        let mut next: BTreeSet<Residual> = without.into_iter().collect();
        for u in &upper {
            let a = u.form.coeff(&var).unwrap().clone();
            for l in &lower {
                let b = -l.form.coeff(&var).unwrap().clone();
                let mut form = u.form.clone();
                form.scale(&b);
                form.add_scaled(&l.form, &a);
                form.coeffs.remove(&var);
                let combined = Residual {
                    form,
                    strict: u.strict || l.strict,
                };
                if combined.form.is_constant() {
                    if !combined.constant_holds() {
                        return Outcome::Infeasible;
                    }
                } else {
                    next.insert(combined.normalized());
                }
            }
        }
        stages.push(Stage { var, bounds: with });
        current = next;
    }
}

pub(crate) fn feasible(ineqs: &[Residual]) -> bool {
    matches!(eliminate(ineqs), Outcome::Feasible(_))
}

/// A rational point satisfying every inequality, if one exists. Variables
/// not mentioned are absent from the result.
pub(crate) fn witness(ineqs: &[Residual]) -> Option<BTreeMap<Var, Rational>> {
    let Outcome::Feasible(stages) = eliminate(ineqs) else {
        return None;
    };
    let mut point: BTreeMap<Var, Rational> = BTreeMap::new();
    for stage in stages.iter().rev() {
        let mut lower: Option<(Rational, bool)> = None;
        let mut upper: Option<(Rational, bool)> = None;
        for b in &stage.bounds {
            let a = b.form.coeff(&stage.var).unwrap().clone();
            let mut rest = b.form.clone();
            rest.coeffs.remove(&stage.var);
            // a variable dropped with one-sided bounds is free
            for v in rest.coeffs.keys() {
                point.entry(v.clone()).or_insert_with(Rational::zero);
            }
            let r = rest.eval(&|v: &Var| point.get(v).cloned()).unwrap();
            // a*x + r (<|<=) 0
            let bound = -r / &a;
            if a.is_positive() {
                if upper.as_ref().is_none_or(|(u, s)| bound < *u || (bound == *u && b.strict && !s)) {
                    upper = Some((bound, b.strict));
                }
            } else if lower.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && b.strict && !s)) {
                lower = Some((bound, b.strict));
            }
        }
        let value = match (lower, upper) {
            (None, None) => Rational::zero(),
            (Some((l, s)), None) => if s { l + Rational::one() } else { l },
            (None, Some((u, s))) => if s { u - Rational::one() } else { u },
            (Some((l, _)), Some((u, _))) if l == u => l,
            (Some((l, _)), Some((u, _))) => (l + u) / Rational::from_integer(2.into()),
        };
        point.insert(stage.var.clone(), value);
    }
    Some(point)
}
