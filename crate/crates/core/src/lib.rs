//! Slicing of constraint logic programs.
//!
//! The crate parses CLP(Q) programs, builds proof trees by SLD resolution
//! over a mixed Herbrand / linear-rational constraint store, and computes
//! backward slices of constraint sets, proof trees and programs:
//!
//! * [`constraints`]: satisfiability, groundness, dependency classes and a
//!   finite-domain brute-force oracle for checking slices.
//! * [`engine`]: skeletons, derivation/proof trees, the tree-to-program
//!   position map and groundness event logs.
//! * [`depgraph`]: undirected dependency graphs over tree and program
//!   positions and the slices given by their equivalence classes.
//! * [`directional`]: groundness annotations, input/output classification
//!   and directed (reduced) proof tree slices.
//! * [`cli`]: the three slicing commands, statistics and report emission.

pub mod cli;
pub mod constraints;
pub mod depgraph;
pub mod directional;
pub mod engine;
pub mod syntax;
mod union_find;

pub use syntax::{parse_goal, parse_program, Clause, Program, ProgramPosition, Term, TreePosition, Var};
