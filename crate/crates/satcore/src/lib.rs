//! A compact CDCL SAT solver with native cardinality constraints.
//!
//! Built for workloads dominated by 2-literal clauses plus a sprinkling of
//! wider clauses and at-least/at-most/exactly-k constraints. Features:
//!
//! - two-watched-literal clause propagation with first-UIP clause learning,
//!   VSIDS-style activities and Luby restarts;
//! - a counting propagator for cardinality constraints (no clause
//!   expansion);
//! - seeded decision randomisation, so different seeds can reach different
//!   models while a fixed seed is fully deterministic;
//! - an independent verifier that re-checks every sat outcome;
//! - blocking-clause model enumeration with an exhaustion flag, suitable
//!   for exact model counting at small scale;
//! - DIMACS CNF import/export with an `h`-line extension for cardinality
//!   constraints.

mod dimacs;
mod enumerate;
mod formula;
mod lit;
mod solver;
pub mod verify;

pub use dimacs::{export_dimacs, import_dimacs, DimacsError};
pub use enumerate::{enumerate_solutions, enumerate_with, Enumeration};
pub use formula::{AddClauseOutcome, CardConstraint, CardKind, Clause, Formula};
pub use lit::{Lit, Var};
pub use solver::{
    solve, solve_seeded, solve_with, Assignment, SolveOutcome, SolverOptions,
    DEFAULT_CONFLICT_BUDGET,
};
