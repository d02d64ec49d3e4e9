//! DIMACS CNF interchange, extended with one line form for cardinality
//! constraints:
//!
//! ```text
//! h <k> <kind> <lit> <lit> ... 0
//! ```
//!
//! where `kind` is `0` = at-least, `1` = at-most, `2` = exactly. Clause
//! lines and the `p cnf` header are standard; `h` lines are not counted in
//! the header's clause count.

use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{CardKind, Formula};
use crate::lit::Lit;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
}

fn err(line: usize, message: impl Into<String>) -> DimacsError {
    DimacsError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn export_dimacs(formula: &Formula) -> String {
    let mut out = String::new();
    let clause_count = formula.clauses().len() + usize::from(formula.is_unsat_marked());
    let _ = writeln!(out, "p cnf {} {}", formula.num_vars(), clause_count);
    for clause in formula.clauses() {
        for l in clause.lits() {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        let _ = writeln!(out, "0");
    }
    if formula.is_unsat_marked() {
        let _ = writeln!(out, "0");
    }
    for card in formula.cards() {
        let kind = match card.kind {
            CardKind::AtLeast => 0,
            CardKind::AtMost => 1,
            CardKind::Exactly => 2,
        };
        let _ = write!(out, "h {} {} ", card.k, kind);
        for l in &card.lits {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        let _ = writeln!(out, "0");
    }
    out
}

pub fn import_dimacs(text: &str) -> Result<Formula, DimacsError> {
    let mut formula: Option<Formula> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            if formula.is_some() {
                return Err(err(line_no, "duplicate header"));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "cnf" {
                return Err(err(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let vars: usize = fields[1]
                .parse()
                .map_err(|_| err(line_no, "bad variable count"))?;
            let _clauses: usize = fields[2]
                .parse()
                .map_err(|_| err(line_no, "bad clause count"))?;
            formula = Some(Formula::new(vars));
            continue;
        }
        let f = formula.as_mut().ok_or(DimacsError::MissingHeader)?;
        if let Some(rest) = line.strip_prefix("h ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() < 3 {
                return Err(err(line_no, "short cardinality line"));
            }
            let k: usize = fields[0]
                .parse()
                .map_err(|_| err(line_no, "bad cardinality bound"))?;
            let kind = match fields[1] {
                "0" => CardKind::AtLeast,
                "1" => CardKind::AtMost,
                "2" => CardKind::Exactly,
                other => return Err(err(line_no, format!("bad cardinality kind `{other}`"))),
            };
            let lits = parse_lits(&fields[2..], line_no, f.num_vars())?;
            f.add_cardinality(lits, kind, k);
        } else {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let lits = parse_lits(&fields, line_no, f.num_vars())?;
            f.add_clause(lits);
        }
    }
    formula.ok_or(DimacsError::MissingHeader)
}

fn parse_lits(fields: &[&str], line_no: usize, num_vars: usize) -> Result<Vec<Lit>, DimacsError> {
    let mut lits = Vec::with_capacity(fields.len().saturating_sub(1));
    let mut terminated = false;
    for field in fields {
        let value: i64 = field
            .parse()
            .map_err(|_| err(line_no, format!("bad literal `{field}`")))?;
        if value == 0 {
            terminated = true;
            break;
        }
        if value.unsigned_abs() as usize > num_vars {
            return Err(err(line_no, format!("literal {value} out of range")));
        }
        lits.push(Lit::from_dimacs(value));
    }
    if !terminated {
        return Err(err(line_no, "missing terminating 0"));
    }
    Ok(lits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(i: i64) -> Lit {
        Lit::from_dimacs(i)
    }

    #[test]
    fn single_clause_layout() {
        let mut f = Formula::new(1);
        f.add_clause([lit(1)]);
        assert_eq!(export_dimacs(&f), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn exactly_constraint_becomes_one_extension_line() {
        let mut f = Formula::new(3);
        f.add_cardinality(vec![lit(1), lit(2), lit(3)], CardKind::Exactly, 2);
        let text = export_dimacs(&f);
        let h_lines: Vec<&str> = text.lines().filter(|l| l.starts_with('h')).collect();
        assert_eq!(h_lines, vec!["h 2 2 1 2 3 0"]);
    }

    #[test]
    fn import_reads_back_export() {
        let mut f = Formula::new(4);
        f.add_clause([lit(1), lit(-3)]);
        f.add_clause([lit(2), lit(3), lit(-4)]);
        f.add_cardinality(vec![lit(1), lit(4)], CardKind::AtMost, 1);
        let g = import_dimacs(&export_dimacs(&f)).unwrap();
        assert_eq!(g.num_vars(), f.num_vars());
        assert_eq!(g.clauses(), f.clauses());
        assert_eq!(g.cards(), f.cards());
    }

    #[test]
    fn import_rejects_out_of_range_literal() {
        let text = "p cnf 2 1\n3 0\n";
        assert!(import_dimacs(text).is_err());
    }

    #[test]
    fn empty_clause_round_trips_unsat_marker() {
        let mut f = Formula::new(1);
        f.add_clause([]);
        let g = import_dimacs(&export_dimacs(&f)).unwrap();
        assert!(g.is_unsat_marked());
    }
}
