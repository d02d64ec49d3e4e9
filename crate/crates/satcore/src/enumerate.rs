//! Model enumeration via blocking clauses.

use crate::formula::Formula;
use crate::lit::{Lit, Var};
use crate::solver::{self, Assignment, SolveOutcome, SolverOptions};

/// Result of enumerating models of a formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    /// Distinct total assignments, in discovery order.
    pub models: Vec<Assignment>,
    /// True iff the model set is provably complete (unsat was reached
    /// before the limit). Required for exact model counting.
    pub exhausted: bool,
    /// True iff a solve hit the conflict budget; the model list is then a
    /// lower bound only.
    pub timed_out: bool,
}

/// Enumerate up to `limit` distinct models. Each model found is excluded by
/// a blocking clause over all variables before the next solve.
pub fn enumerate_solutions(formula: &Formula, limit: usize, seed: u64) -> Enumeration {
    assert!(limit >= 1, "enumeration limit must be at least 1");
    enumerate_with(
        formula,
        limit,
        &SolverOptions {
            seed,
            ..SolverOptions::default()
        },
    )
}

pub fn enumerate_with(formula: &Formula, limit: usize, options: &SolverOptions) -> Enumeration {
    let mut working = formula.clone();
    let mut models = Vec::new();
    let mut exhausted = false;
    let mut timed_out = false;
    while models.len() < limit {
        match solver::solve_with(&working, options) {
            SolveOutcome::Sat(model) => {
                let blocking: Vec<Lit> = (1..=working.num_vars() as u32)
                    .map(|i| {
                        let var = Var::new(i);
                        Lit::new(var, model.value(var))
                    })
                    .collect();
                working.add_clause(blocking);
                models.push(model);
            }
            SolveOutcome::Unsat => {
                exhausted = true;
                break;
            }
            SolveOutcome::Timeout => {
                timed_out = true;
                break;
            }
        }
    }
    Enumeration {
        models,
        exhausted,
        timed_out,
    }
}
