use crate::lit::{Lit, Var};

/// A disjunction of literals, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }
}

/// What happened when a clause was offered to a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddClauseOutcome {
    Added,
    /// Contained a literal and its negation; dropped.
    Tautology,
    /// Normalised to the empty clause; the formula is now unsatisfiable.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CardKind {
    AtLeast,
    AtMost,
    Exactly,
}

/// "At least / at most / exactly k of these literals are true."
///
/// Literals are kept exactly as given: repeated literals count with
/// multiplicity, which is what callers encoding per-position mismatch
/// counts rely on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardConstraint {
    pub lits: Vec<Lit>,
    pub kind: CardKind,
    pub k: usize,
}

/// A CNF formula plus native cardinality constraints.
#[derive(Debug, Clone)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
    cards: Vec<CardConstraint>,
    unsat_marked: bool,
    decision_seed: u64,
}

impl Formula {
    pub fn new(num_vars: usize) -> Formula {
        Formula {
            num_vars,
            clauses: Vec::new(),
            cards: Vec::new(),
            unsat_marked: false,
            decision_seed: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn cards(&self) -> &[CardConstraint] {
        &self.cards
    }

    /// Set once an empty clause or an impossible cardinality was added.
    pub fn is_unsat_marked(&self) -> bool {
        self.unsat_marked
    }

    pub fn decision_seed(&self) -> u64 {
        self.decision_seed
    }

    pub fn set_decision_seed(&mut self, seed: u64) {
        self.decision_seed = seed;
    }

    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var::new(self.num_vars as u32)
    }

    fn check_var(&self, lit: Lit) {
        assert!(
            (lit.var().index() as usize) <= self.num_vars,
            "literal {} out of range (formula has {} variables)",
            lit,
            self.num_vars
        );
    }

    /// Add a clause. Literals are deduplicated, tautologies are dropped, and
    /// an empty clause marks the whole formula unsatisfiable.
    pub fn add_clause<I>(&mut self, lits: I) -> AddClauseOutcome
    where
        I: IntoIterator<Item = Lit>,
    {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        for &l in &lits {
            self.check_var(l);
        }
        lits.sort_unstable();
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].var() == w[1].var() {
                return AddClauseOutcome::Tautology;
            }
        }
        if lits.is_empty() {
            self.unsat_marked = true;
            return AddClauseOutcome::Empty;
        }
        self.clauses.push(Clause { lits });
        AddClauseOutcome::Added
    }

    /// Add a cardinality constraint. Trivial constraints become no-ops and
    /// impossible ones mark the formula unsatisfiable.
    pub fn add_cardinality(&mut self, lits: Vec<Lit>, kind: CardKind, k: usize) {
        for &l in &lits {
            self.check_var(l);
        }
        let n = lits.len();
        match kind {
            CardKind::AtLeast | CardKind::Exactly if k > n => {
                self.unsat_marked = true;
                return;
            }
            CardKind::AtLeast if k == 0 => return,
            CardKind::AtMost if k >= n => return,
            _ => {}
        }
        self.cards.push(CardConstraint { lits, kind, k });
    }
}
