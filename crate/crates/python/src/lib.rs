//! Python bindings. Reports come back as plain dictionaries with the same
//! shape as the CLI's JSON output.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use clpslice_core::cli::{self, CliError, SliceOptions, SliceOutput};
use clpslice_core::constraints::IntDomain;
use clpslice_core::engine::{derive, DeriveOptions, DeriveOutcome};
use clpslice_core::{parse_goal, parse_program, Clause, Program, ProgramPosition, TreePosition};

create_exception!(clpslice, NoSolutionError, PyException);

fn to_py(e: CliError) -> PyErr {
    match e {
        CliError::NoSolution { .. } => NoSolutionError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(program: &str, goal: &str) -> PyResult<(Program, Clause)> {
    Ok((parse_program(program).map_err(err)?, parse_goal(goal).map_err(err)?))
}

fn json_value<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A slice report with its DOT rendering and, for program level modes, the
/// marked listing.
#[pyclass(frozen, module = "clpslice")]
pub struct Slice {
    report: String,
    #[pyo3(get)]
    dot: String,
    #[pyo3(get)]
    listing: Option<String>,
}

#[pymethods]
impl Slice {
    #[getter]
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (&self.report,))
    }

    #[getter]
    fn json(&self) -> &str {
        &self.report
    }

    fn __repr__(&self) -> String {
        format!("Slice({})", self.report)
    }
}

impl From<SliceOutput> for Slice {
    fn from(out: SliceOutput) -> Self {
        Slice {
            report: serde_json::to_string(&out.report).expect("report serializes"),
            dot: out.dot,
            listing: out.listing,
        }
    }
}

/// Slice a goal's proof tree. `mode` is `tree`, `dynamic` or `position`;
/// `at` is a tree address for the first two and a program address for the
/// last.
#[pyfunction]
#[pyo3(signature = (program, goal, at, mode = "tree", undirected = false, raw_annotation = false, all_solutions = 1, oracle_domain = None, depth = 256, steps = 200_000))]
#[allow(clippy::too_many_arguments)]
fn slice(
    program: &str,
    goal: &str,
    at: &str,
    mode: &str,
    undirected: bool,
    raw_annotation: bool,
    all_solutions: usize,
    oracle_domain: Option<(i64, i64)>,
    depth: usize,
    steps: usize,
) -> PyResult<Slice> {
    let (program, goal) = load(program, goal)?;
    if all_solutions == 0 {
        return Err(PyValueError::new_err("all_solutions must be at least 1"));
    }
    let opts = SliceOptions {
        undirected,
        raw_annotation,
        derive: DeriveOptions {
            depth_limit: depth,
            step_limit: steps,
            max_solutions: all_solutions,
        },
        oracle_domain: oracle_domain.map(|(lo, hi)| IntDomain::new(lo, hi)).transpose().map_err(err)?,
    };
    let out = match mode {
        "tree" => cli::cmd_proof_tree_slice(&program, &goal, &at.parse::<TreePosition>().map_err(err)?, &opts),
        "dynamic" => cli::cmd_dynamic_slice(&program, &goal, &at.parse::<TreePosition>().map_err(err)?, &opts),
        "position" => cli::cmd_program_position_slice(&program, &goal, &at.parse::<ProgramPosition>().map_err(err)?, &opts),
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    out.map(Slice::from).map_err(to_py)
}

/// Slice the program dependency graph from a program position.
#[pyfunction]
fn static_slice(program: &str, goal: &str, at: &str) -> PyResult<Slice> {
    let (program, goal) = load(program, goal)?;
    let beta = at.parse::<ProgramPosition>().map_err(err)?;
    cli::cmd_static_slice(&program, &goal, &beta).map(Slice::from).map_err(to_py)
}

/// The first proof tree: `nodes` in preorder, the `store`, and `positions`
/// mapping every tree address to its element.
#[pyfunction]
#[pyo3(signature = (program, goal, depth = 256, steps = 200_000))]
fn tree<'py>(py: Python<'py>, program: &str, goal: &str, depth: usize, steps: usize) -> PyResult<Bound<'py, PyDict>> {
    let (program, goal) = load(program, goal)?;
    let opts = DeriveOptions {
        depth_limit: depth,
        step_limit: steps,
        max_solutions: 1,
    };
    let sol = match derive(&program, &goal, &opts).map_err(|e| to_py(e.into()))? {
        DeriveOutcome::Solutions(mut s) => s.remove(0),
        DeriveOutcome::NoSolution {
            deepest,
            depth_limit_hit,
            step_limit_hit,
        } => {
            return Err(to_py(CliError::NoSolution {
                depth_limit_hit,
                step_limit_hit,
                deepest_nodes: deepest.map(|t| t.node_count()),
            }))
        }
    };
    let t = &sol.tree;
    let nodes = pyo3::types::PyList::empty(py);
    for id in t.skeleton().preorder() {
        let node = t.skeleton().node(id).expect("preorder id");
        let d = PyDict::new(py);
        d.set_item("id", id)?;
        d.set_item("parent", node.parent)?;
        d.set_item("clause", node.label.to_string())?;
        nodes.append(d)?;
    }
    let positions = PyDict::new(py);
    for p in t.positions() {
        positions.set_item(p.to_string(), t.element(&p).expect("own position").to_string())?;
    }
    let out = PyDict::new(py);
    out.set_item("nodes", nodes)?;
    out.set_item("store", t.store().constraints().iter().map(|c| c.to_string()).collect::<Vec<_>>())?;
    out.set_item("positions", positions)?;
    out.set_item("groundness", json_value(py, &sol.log)?)?;
    Ok(out)
}

/// Slice every argument position of each goal's proof tree; one row per
/// goal.
#[pyfunction]
#[pyo3(signature = (program, goals, depth = 256, steps = 200_000))]
fn stats<'py>(py: Python<'py>, program: &str, goals: Vec<String>, depth: usize, steps: usize) -> PyResult<Bound<'py, PyAny>> {
    let program = parse_program(program).map_err(err)?;
    let goals = goals.iter().map(|g| parse_goal(g)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let opts = DeriveOptions {
        depth_limit: depth,
        step_limit: steps,
        max_solutions: 1,
    };
    json_value(py, &cli::cmd_stats(&program, &goals, &opts))
}

#[pymodule]
fn clpslice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Slice>()?;
    m.add_function(wrap_pyfunction!(slice, m)?)?;
    m.add_function(wrap_pyfunction!(static_slice, m)?)?;
    m.add_function(wrap_pyfunction!(tree, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    m.add("NoSolutionError", m.py().get_type::<NoSolutionError>())?;
    Ok(())
}
