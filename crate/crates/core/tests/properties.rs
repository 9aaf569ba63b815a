mod common;

use std::collections::BTreeSet;

use clpslice_core::cli::{cmd_dynamic_slice, cmd_program_position_slice, slice_stats, SliceOptions, SliceReport};
use clpslice_core::constraints::{
    class_slice, dep_classes, is_slice, parse_store, satisfiable, satisfiable_finite, sol_finite, ConstraintKind, ConstraintStore,
    IntDomain, Solver,
};
use clpslice_core::depgraph::{program_dep_graph, program_slice, tree_dep_graph, tree_slice};
use clpslice_core::directional::{annotate, directional_slice, refine, Annotation, Mode};
use clpslice_core::engine::{derive, DeriveOptions, Solution};
use clpslice_core::syntax::position::{clause_positions, element};
use clpslice_core::syntax::{rename_clause, BodyItem, ClauseRef, Element};
use clpslice_core::{parse_goal, parse_program, Program, Term};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn random_tree(seed: u64) -> Option<(Program, String, Solution)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let (text, goal) = common::random_program(&mut rng);
    let program = parse_program(&text).unwrap();
    let g = parse_goal(&goal).unwrap();
    let s = derive(&program, &g, &DeriveOptions::default()).unwrap().first().cloned()?;
    Some((program, goal, s))
}

fn term_count(t: &Term) -> usize {
    1 + t.args().iter().map(term_count).sum::<usize>()
}

fn small() -> IntDomain {
    IntDomain::new(-3, 3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn render_round_trips(seed in any::<u64>()) {
        let (text, _) = common::random_program(&mut StdRng::seed_from_u64(seed));
        let once = parse_program(&text).unwrap();
        let twice = parse_program(&once.to_string()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn positions_are_total(seed in any::<u64>()) {
        let (text, _) = common::random_program(&mut StdRng::seed_from_u64(seed));
        let program = parse_program(&text).unwrap();
        for c in program.clauses() {
            let mut expected = 0;
            for atom in c.head.iter().chain(c.body.iter().filter_map(|b| match b { BodyItem::Call(a) => Some(a), _ => None })) {
                expected += 1 + atom.args.iter().map(term_count).sum::<usize>();
            }
            for b in &c.body {
                if let BodyItem::Constraint(k) = b {
                    expected += 1 + k.occurrences().len();
                }
            }
            let positions = clause_positions(c);
            prop_assert_eq!(positions.len(), expected);
            for p in &positions {
                prop_assert!(element(c, p).is_some());
            }
            let renamed = rename_clause(c, 7);
            prop_assert_eq!(clause_positions(&renamed), positions);
        }
    }

    #[test]
    fn class_slices_are_slices(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let store = parse_store(&common::random_store_text(&mut rng)).unwrap();
        prop_assume!(satisfiable_finite(&store, small()).unwrap());
        for x in store.vars() {
            let s = class_slice(&store, &x).unwrap();
            prop_assert!(is_slice(&store, &s, &x, small()).unwrap(), "{} wrt {}", s, x);
            // any superset between the slice and the store is a slice
            let sup: ConstraintStore = store
                .constraints()
                .iter()
                .filter(|c| s.contains(c) || rng.gen_bool(0.5))
                .cloned()
                .collect();
            prop_assert!(is_slice(&store, &sup, &x, small()).unwrap());
        }
    }

    #[test]
    fn classes_partition(seed in any::<u64>()) {
        let store = parse_store(&common::random_store_text(&mut StdRng::seed_from_u64(seed))).unwrap();
        let classes = dep_classes(&store);
        let mut seen = BTreeSet::new();
        for c in &classes {
            prop_assert!(!c.is_empty());
            for v in c {
                prop_assert!(seen.insert(v.clone()), "{} in two classes", v);
            }
        }
        prop_assert_eq!(seen, store.vars());
        for c in store.constraints() {
            let vars = c.vars();
            prop_assert!(classes.iter().any(|k| vars.is_subset(k)));
        }
    }

    #[test]
    fn ground_bindings_are_singletons(seed in any::<u64>()) {
        let store = parse_store(&common::random_store_text(&mut StdRng::seed_from_u64(seed))).unwrap();
        let form = satisfiable(&store);
        prop_assume!(form.is_sat() && satisfiable_finite(&store, small()).unwrap());
        for (v, value) in form.ground_vars() {
            let Term::Number(q) = &value else { panic!("numeric store bound {v} to {value}") };
            let sol = sol_finite(&store, &v, small()).unwrap();
            if q.is_integer() && small().values().any(|i| num_bigint::BigInt::from(i) == *q.numer()) {
                prop_assert_eq!(sol.values.len(), 1);
                prop_assert_eq!(num_bigint::BigInt::from(*sol.values.iter().next().unwrap()), q.to_integer());
            } else {
                prop_assert!(sol.values.is_empty());
            }
        }
    }

    #[test]
    fn solver_agrees_with_integer_search(seed in any::<u64>()) {
        let store = parse_store(&common::random_store_text(&mut StdRng::seed_from_u64(seed))).unwrap();
        let form = satisfiable(&store);
        if satisfiable_finite(&store, small()).unwrap() {
            prop_assert!(form.is_sat());
        }
        if form.is_sat() {
            let w = form.witness().unwrap();
            prop_assert_eq!(store.holds(&w), Some(true));
        }
    }

    #[test]
    fn incremental_solving_matches_batch(seed in any::<u64>()) {
        let Some((_, _, s)) = random_tree(seed) else { return Ok(()) };
        let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
        let all = s.tree.store().constraints().to_vec();
        let mut inc = Solver::new();
        for k in 0..all.len() {
            prop_assert!(inc.add(&all[k]));
            let mut prefix = all[..=k].to_vec();
            prefix.shuffle(&mut rng);
            let batch = Solver::from_store(&prefix.into_iter().collect());
            prop_assert!(batch.is_satisfiable());
            prop_assert_eq!(inc.solved_form().ground_vars(), batch.solved_form().ground_vars());
        }
    }

    #[test]
    fn derived_trees_are_consistent(seed in any::<u64>()) {
        let Some((program, goal, s)) = random_tree(seed) else { return Ok(()) };
        let t = &s.tree;
        prop_assert!(t.is_proof_tree());
        prop_assert!(satisfiable(t.store()).is_sat());
        // node equations: one per argument of every resolved call
        let equations = t.store().constraints().iter().filter(|c| matches!(c.kind, ConstraintKind::TermEq(..))).count();
        let expected: usize = t.skeleton().nodes().iter().skip(1).map(|n| n.label.head.as_ref().unwrap().arity()).sum();
        prop_assert_eq!(equations, expected);
        // Φ naturality
        for r in t.positions() {
            let q = t.phi(&r).unwrap();
            let copy = match q.clause {
                ClauseRef::Goal => t.goal().clone(),
                ClauseRef::Program(i) => rename_clause(program.clause(i).unwrap(), r.node as u32),
            };
            prop_assert_eq!(t.element(&r).unwrap().to_string(), element(&copy, &q.local).unwrap().to_string());
        }
        // determinism
        let again = derive(&program, &parse_goal(&goal).unwrap(), &DeriveOptions::default()).unwrap();
        let again = again.first().unwrap();
        prop_assert_eq!(t.store().to_string(), again.tree.store().to_string());
        prop_assert_eq!(&s.log, &again.log);
    }

    #[test]
    fn tree_graphs_map_onto_the_program_graph(seed in any::<u64>()) {
        let Some((program, _, s)) = random_tree(seed) else { return Ok(()) };
        let t = &s.tree;
        let g = tree_dep_graph(t);
        let pg = program_dep_graph(&program, t.goal());
        for (a, b, kind) in g.edges() {
            let (pa, pb) = (t.phi(a).unwrap(), t.phi(b).unwrap());
            prop_assert!(pa == pb || pg.edge_kinds(&pa, &pb).contains(&kind), "{:?} {} {}", kind, a, b);
        }
        let classes = g.classes();
        let covered: usize = classes.iter().map(|c| c.len()).sum();
        prop_assert_eq!(covered, g.universe().len());
        for alpha in g.universe() {
            let class = g.class_of(alpha).unwrap();
            for beta in &class {
                prop_assert_eq!(&g.class_of(beta).unwrap(), &class);
            }
            let phi = t.phi_image(&tree_slice(t, alpha).unwrap().positions).unwrap();
            let stat = program_slice(&program, t.goal(), &t.phi(alpha).unwrap()).unwrap();
            prop_assert!(phi.is_subset(&stat.positions));
        }
    }

    #[test]
    fn directional_slices(seed in any::<u64>()) {
        let Some((_, _, s)) = random_tree(seed) else { return Ok(()) };
        let t = &s.tree;
        let raw = annotate(t, &s.log).unwrap();
        let refined = refine(t, &raw);
        let full = satisfiable(t.store());
        let ground = full.ground_vars();
        for (p, mode) in raw.iter() {
            prop_assert!(mode != Mode::Dual);
            let vars = t.element(p).unwrap().vars();
            prop_assert!(vars.iter().all(|v| ground.contains_key(v)), "{} is annotated {:?} but not ground", p, mode);
        }
        // refinement only turns positions dual
        for (p, mode) in refined.iter() {
            prop_assert_eq!(raw.get(p), mode);
        }
        let dom = IntDomain::new(-5, 5).unwrap();
        let numeric = satisfiable_finite(t.store(), dom).unwrap_or(false);
        for alpha in tree_dep_graph(t).universe() {
            let u = tree_slice(t, alpha).unwrap();
            let d = directional_slice(t, &refined, alpha).unwrap();
            prop_assert!(d.positions.is_subset(&u.positions));
            prop_assert_eq!(&directional_slice(t, &Annotation::all_dual(), alpha).unwrap().positions, &u.positions);
            if let (true, Some(Element::Term(Term::Var(v)))) = (numeric, t.element(alpha)) {
                let store = t.positions_to_constraints(&d.positions).unwrap();
                prop_assert!(is_slice(t.store(), &store, v, dom).unwrap(), "{} wrt {}", store, alpha);
            }
        }
    }

    #[test]
    fn reports_are_consistent(seed in any::<u64>()) {
        let Some((program, _, s)) = random_tree(seed) else { return Ok(()) };
        let t = &s.tree;
        let opts = SliceOptions::default();
        for alpha in t.argument_positions() {
            let out = cmd_dynamic_slice(&program, t.goal(), &alpha, &opts).unwrap();
            let r = &out.report;
            let nodes: BTreeSet<usize> = r.tree_positions.iter().map(|p| p.node).collect();
            let pct = 100.0 * nodes.len() as f64 / t.node_count() as f64;
            prop_assert!((r.stats.slice_node_pct - pct).abs() < 1e-9);
            prop_assert!(r.stats.slice_node_pct > 0.0 && r.stats.slice_node_pct <= 100.0);
            prop_assert!(r.stats.slice_argpos_pct >= 0.0 && r.stats.slice_argpos_pct <= 100.0);
            prop_assert_eq!(&r.stats, &slice_stats(t, &r.tree_positions));
            prop_assert_eq!(&r.program_positions, &t.phi_image(&r.tree_positions).unwrap());
            let stat = program_slice(&program, t.goal(), &t.phi(&alpha).unwrap()).unwrap();
            prop_assert!(r.program_positions.is_subset(&stat.positions));
            let json = serde_json::to_string(r).unwrap();
            let back: SliceReport = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, r);
        }
        for q in program.positions().iter().step_by(5) {
            let out = cmd_program_position_slice(&program, t.goal(), q, &opts).unwrap();
            let instances = t.phi_inverse(q).unwrap();
            let unexecuted = out.report.warnings.iter().any(|w| w.contains("has no instance"));
            prop_assert_eq!(instances.is_empty(), unexecuted);
            prop_assert_eq!(instances.is_empty(), out.report.tree_positions.is_empty());
        }
    }
}
