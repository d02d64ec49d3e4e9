//! Independent assignment checker, deliberately kept free of any solver
//! state: a plain evaluation of every clause and cardinality constraint.

use crate::formula::{CardKind, Formula};
use crate::solver::Assignment;

/// True iff `assignment` satisfies every constraint of `formula`.
pub fn check(formula: &Formula, assignment: &Assignment) -> bool {
    if formula.is_unsat_marked() {
        return false;
    }
    if assignment.num_vars() < formula.num_vars() {
        return false;
    }
    for clause in formula.clauses() {
        if !clause.lits().iter().any(|&l| assignment.lit_true(l)) {
            return false;
        }
    }
    for card in formula.cards() {
        // Repeated literals count with multiplicity.
        let trues = card.lits.iter().filter(|&&l| assignment.lit_true(l)).count();
        let ok = match card.kind {
            CardKind::AtLeast => trues >= card.k,
            CardKind::AtMost => trues <= card.k,
            CardKind::Exactly => trues == card.k,
        };
        if !ok {
            return false;
        }
    }
    true
}
