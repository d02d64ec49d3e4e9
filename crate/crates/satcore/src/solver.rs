//! Conflict-driven clause learning with two watched literals per clause and
//! a counting propagator for cardinality constraints.
//!
//! Cardinality constraints are handled natively (no clause expansion): every
//! constraint is normalised to at-least form, and a per-constraint counter of
//! falsified literals triggers propagation or conflict. Decision polarity and
//! variable order are seeded, so distinct seeds can reach distinct models
//! while a fixed seed is fully deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{CardKind, Formula};
use crate::lit::{Lit, Var};
use crate::verify;

/// Default conflict budget before a solve gives up with `Timeout`.
pub const DEFAULT_CONFLICT_BUDGET: u64 = 10_000_000;

const RESTART_BASE: u64 = 128;
const RANDOM_DECISION_FREQ: f64 = 0.05;
const ACTIVITY_DECAY: f64 = 0.95;
const ACTIVITY_RESCALE: f64 = 1e100;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub seed: u64,
    pub conflict_budget: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            conflict_budget: DEFAULT_CONFLICT_BUDGET,
        }
    }
}

/// A total truth assignment over variables `1..=num_vars`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    /// Wrap explicit values (index 0 = variable 1), e.g. to verify an
    /// externally constructed assignment against a formula.
    pub fn new(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    pub(crate) fn from_values(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, var: Var) -> bool {
        self.values[var.slot()]
    }

    pub fn lit_true(&self, lit: Lit) -> bool {
        self.value(lit.var()) != lit.is_negated()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Assignment),
    Unsat,
    /// Conflict budget exceeded. Never silently treated as unsat.
    Timeout,
}

impl SolveOutcome {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            SolveOutcome::Sat(a) => Some(a),
            _ => None,
        }
    }
}

/// Solve using the formula's own decision seed and the default budget.
pub fn solve(formula: &Formula) -> SolveOutcome {
    solve_with(
        formula,
        &SolverOptions {
            seed: formula.decision_seed(),
            ..SolverOptions::default()
        },
    )
}

/// Solve with an explicit decision seed and the default budget.
pub fn solve_seeded(formula: &Formula, seed: u64) -> SolveOutcome {
    solve_with(
        formula,
        &SolverOptions {
            seed,
            ..SolverOptions::default()
        },
    )
}

/// Solve with explicit options. Every sat outcome is re-checked by the
/// independent verifier; a mismatch is a solver bug and panics.
pub fn solve_with(formula: &Formula, options: &SolverOptions) -> SolveOutcome {
    if formula.is_unsat_marked() {
        return SolveOutcome::Unsat;
    }
    let outcome = Solver::new(formula, options).run();
    if let SolveOutcome::Sat(a) = &outcome {
        assert!(
            verify::check(formula, a),
            "internal solver error: sat assignment fails independent verification"
        );
    }
    outcome
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reason {
    None,
    Clause(u32),
    Card(u32),
}

#[derive(Debug, Clone, Copy)]
enum Conflict {
    Clause(u32),
    Card(u32),
}

/// At-least-k over a literal list (with multiplicity).
struct AtLeast {
    lits: Vec<Lit>,
    k: usize,
}

struct Solver {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    /// Watch lists per literal code: indices of clauses watching that literal.
    watches: Vec<Vec<u32>>,
    cards: Vec<AtLeast>,
    /// For each literal code, the cards that contain that literal.
    card_occ: Vec<Vec<u32>>,
    /// Falsified-literal count per card (with multiplicity).
    card_false: Vec<usize>,

    assign: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    trail: Vec<Lit>,
    trail_pos: Vec<usize>,
    trail_lim: Vec<usize>,
    qhead: usize,

    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    rng: ChaCha8Rng,

    seen: Vec<bool>,
    conflicts: u64,
    budget: u64,
    unsat_at_root: bool,
}

impl Solver {
    fn new(formula: &Formula, options: &SolverOptions) -> Solver {
        let n = formula.num_vars();
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let phase: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let activity: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 1e-6).collect();

        let mut solver = Solver {
            num_vars: n,
            clauses: Vec::with_capacity(formula.clauses().len()),
            watches: vec![Vec::new(); 2 * n],
            cards: Vec::new(),
            card_occ: vec![Vec::new(); 2 * n],
            card_false: Vec::new(),
            assign: vec![None; n],
            level: vec![0; n],
            reason: vec![Reason::None; n],
            trail: Vec::with_capacity(n),
            trail_pos: vec![0; n],
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            heap: VarHeap::new(n),
            phase,
            rng,
            seen: vec![false; n],
            conflicts: 0,
            budget: options.conflict_budget,
            unsat_at_root: false,
        };
        solver.heap.rebuild(&solver.activity);

        for clause in formula.clauses() {
            solver.attach_clause(clause.lits().to_vec());
            if solver.unsat_at_root {
                return solver;
            }
        }
        for card in formula.cards() {
            let lits = card.lits.clone();
            let n_lits = lits.len();
            match card.kind {
                CardKind::AtLeast => solver.attach_card(lits, card.k),
                CardKind::AtMost => {
                    let negated = lits.iter().map(|&l| !l).collect();
                    solver.attach_card(negated, n_lits - card.k);
                }
                CardKind::Exactly => {
                    let negated: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                    solver.attach_card(lits, card.k);
                    if !solver.unsat_at_root {
                        solver.attach_card(negated, n_lits - card.k);
                    }
                }
            }
            if solver.unsat_at_root {
                return solver;
            }
        }
        solver
    }

    fn attach_clause(&mut self, lits: Vec<Lit>) {
        match lits.len() {
            0 => self.unsat_at_root = true,
            1 => {
                let l = lits[0];
                match self.lit_value(l) {
                    Some(false) => self.unsat_at_root = true,
                    Some(true) => {}
                    None => self.enqueue(l, Reason::None),
                }
            }
            _ => {
                let idx = self.clauses.len() as u32;
                self.watches[lits[0].code()].push(idx);
                self.watches[lits[1].code()].push(idx);
                self.clauses.push(lits);
            }
        }
    }

    fn attach_card(&mut self, lits: Vec<Lit>, k: usize) {
        if k == 0 {
            return;
        }
        if k > lits.len() {
            self.unsat_at_root = true;
            return;
        }
        let idx = self.cards.len() as u32;
        for &l in &lits {
            self.card_occ[l.code()].push(idx);
        }
        let forced_all = k == lits.len();
        self.cards.push(AtLeast { lits, k });
        // Counters track falsified literals among *processed* trail entries;
        // nothing has been processed yet at attach time.
        self.card_false.push(0);
        if forced_all {
            let lits: Vec<Lit> = self.cards[idx as usize].lits.clone();
            for l in lits {
                match self.lit_value(l) {
                    Some(false) => {
                        self.unsat_at_root = true;
                        return;
                    }
                    Some(true) => {}
                    None => self.enqueue(l, Reason::Card(idx)),
                }
            }
        }
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.assign[l.var().slot()].map(|v| v != l.is_negated())
    }

    #[inline]
    fn current_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Reason) {
        let slot = l.var().slot();
        debug_assert!(self.assign[slot].is_none());
        let value = !l.is_negated();
        self.assign[slot] = Some(value);
        self.level[slot] = self.current_level();
        self.reason[slot] = reason;
        self.trail_pos[slot] = self.trail.len();
        self.phase[slot] = value;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<Conflict> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            // Cards first: their counters must be bumped for every processed
            // entry so backtracking can undo them uniformly.
            if let Some(c) = self.propagate_cards(p) {
                return Some(c);
            }
            if let Some(c) = self.propagate_clauses(p) {
                return Some(c);
            }
        }
        None
    }

    /// Visit clauses watching `!p` after `p` became true.
    fn propagate_clauses(&mut self, p: Lit) -> Option<Conflict> {
        let false_lit = !p;
        let code = false_lit.code();
        let watch_list = std::mem::take(&mut self.watches[code]);
        let mut kept = Vec::with_capacity(watch_list.len());
        let mut conflict = None;

        let mut i = 0;
        while i < watch_list.len() {
            let ci = watch_list[i];
            i += 1;
            let clause = &mut self.clauses[ci as usize];
            if clause[0] == false_lit {
                clause.swap(0, 1);
            }
            debug_assert_eq!(clause[1], false_lit);
            let first = clause[0];
            if self.assign[first.var().slot()].map(|v| v != first.is_negated()) == Some(true) {
                kept.push(ci);
                continue;
            }
            let mut moved = false;
            for j in 2..clause.len() {
                let l = clause[j];
                if self.assign[l.var().slot()].map(|v| v != l.is_negated()) != Some(false) {
                    clause.swap(1, j);
                    let new_code = clause[1].code();
                    self.watches[new_code].push(ci);
                    moved = true;
                    break;
                }
            }
            if moved {
                continue;
            }
            kept.push(ci);
            match self.lit_value(first) {
                Some(false) => {
                    kept.extend_from_slice(&watch_list[i..]);
                    conflict = Some(Conflict::Clause(ci));
                    break;
                }
                None => self.enqueue(first, Reason::Clause(ci)),
                Some(true) => unreachable!(),
            }
        }
        self.watches[code] = kept;
        conflict
    }

    /// Bump falsified-literal counters for cards containing `!p`.
    fn propagate_cards(&mut self, p: Lit) -> Option<Conflict> {
        let code = (!p).code();
        let mut conflict = None;
        let mut to_propagate: Vec<u32> = Vec::new();
        for i in 0..self.card_occ[code].len() {
            let ci = self.card_occ[code][i];
            // A literal occurring with multiplicity m is counted m times.
            self.card_false[ci as usize] += 1;
            let card = &self.cards[ci as usize];
            let slack = card.lits.len() - card.k;
            if self.card_false[ci as usize] > slack {
                if conflict.is_none() {
                    conflict = Some(Conflict::Card(ci));
                }
            } else if self.card_false[ci as usize] == slack {
                to_propagate.push(ci);
            }
        }
        if conflict.is_some() {
            return conflict;
        }
        for ci in to_propagate {
            let forced: Vec<Lit> = self.cards[ci as usize]
                .lits
                .iter()
                .copied()
                .filter(|&l| self.lit_value(l).is_none())
                .collect();
            for l in forced {
                if self.lit_value(l).is_none() {
                    self.enqueue(l, Reason::Card(ci));
                }
            }
        }
        None
    }

    /// Literals of the conflicting constraint, all currently false.
    fn conflict_lits(&self, conflict: Conflict) -> Vec<Lit> {
        match conflict {
            Conflict::Clause(ci) => self.clauses[ci as usize].clone(),
            Conflict::Card(ci) => self.cards[ci as usize]
                .lits
                .iter()
                .copied()
                .filter(|&l| self.lit_value(l) == Some(false))
                .collect(),
        }
    }

    /// Antecedent literals of `p` (excluding `p` itself), all false when `p`
    /// was propagated.
    fn reason_lits(&self, p: Lit, reason: Reason) -> Vec<Lit> {
        match reason {
            Reason::None => Vec::new(),
            Reason::Clause(ci) => {
                let clause = &self.clauses[ci as usize];
                debug_assert_eq!(clause[0], p);
                clause[1..].to_vec()
            }
            Reason::Card(ci) => {
                let p_pos = self.trail_pos[p.var().slot()];
                self.cards[ci as usize]
                    .lits
                    .iter()
                    .copied()
                    .filter(|&l| {
                        l != p
                            && self.lit_value(l) == Some(false)
                            && self.trail_pos[l.var().slot()] < p_pos
                    })
                    .collect()
            }
        }
    }

    /// First-UIP conflict analysis. Returns the learned clause (asserting
    /// literal first, second-highest-level literal second) and the backjump
    /// level.
    fn analyze(&mut self, conflict: Conflict) -> (Vec<Lit>, u32) {
        let current = self.current_level();
        let mut learned: Vec<Lit> = vec![Lit::positive(Var::new(1))]; // placeholder slot 0
        let mut counter = 0usize;
        let mut index = self.trail.len();
        let mut to_clear: Vec<usize> = Vec::new();
        let mut pending = self.conflict_lits(conflict);

        let asserting = loop {
            for q in pending {
                let slot = q.var().slot();
                if !self.seen[slot] && self.level[slot] > 0 {
                    self.seen[slot] = true;
                    to_clear.push(slot);
                    self.bump_activity(slot);
                    if self.level[slot] == current {
                        counter += 1;
                    } else {
                        learned.push(q);
                    }
                }
            }
            let p = loop {
                index -= 1;
                let l = self.trail[index];
                if self.seen[l.var().slot()] {
                    break l;
                }
            };
            self.seen[p.var().slot()] = false;
            counter -= 1;
            if counter == 0 {
                break p;
            }
            pending = self.reason_lits(p, self.reason[p.var().slot()]);
        };
        learned[0] = !asserting;

        for slot in to_clear {
            self.seen[slot] = false;
        }

        if learned.len() == 1 {
            return (learned, 0);
        }
        // Move the highest-level remaining literal to slot 1.
        let mut max_i = 1;
        for i in 2..learned.len() {
            if self.level[learned[i].var().slot()] > self.level[learned[max_i].var().slot()] {
                max_i = i;
            }
        }
        learned.swap(1, max_i);
        let backjump = self.level[learned[1].var().slot()];
        (learned, backjump)
    }

    fn bump_activity(&mut self, slot: usize) {
        self.activity[slot] += self.var_inc;
        if self.activity[slot] > ACTIVITY_RESCALE {
            for a in &mut self.activity {
                *a /= ACTIVITY_RESCALE;
            }
            self.var_inc /= ACTIVITY_RESCALE;
        }
        self.heap.update(slot, &self.activity);
    }

    fn cancel_until(&mut self, target_level: u32) {
        if self.current_level() <= target_level {
            return;
        }
        let target = self.trail_lim[target_level as usize];
        for pos in (target..self.trail.len()).rev() {
            let l = self.trail[pos];
            let slot = l.var().slot();
            // Counters were only bumped for processed entries.
            if pos < self.qhead {
                let code = (!l).code();
                for i in 0..self.card_occ[code].len() {
                    let ci = self.card_occ[code][i] as usize;
                    self.card_false[ci] -= 1;
                }
            }
            self.assign[slot] = None;
            self.reason[slot] = Reason::None;
            self.heap.insert(slot, &self.activity);
        }
        self.trail.truncate(target);
        self.qhead = target;
        self.trail_lim.truncate(target_level as usize);
    }

    fn record_learned(&mut self, lits: Vec<Lit>) {
        if lits.len() == 1 {
            self.enqueue(lits[0], Reason::None);
            return;
        }
        let idx = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(idx);
        self.watches[lits[1].code()].push(idx);
        let asserting = lits[0];
        self.clauses.push(lits);
        self.enqueue(asserting, Reason::Clause(idx));
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        if self.rng.gen::<f64>() < RANDOM_DECISION_FREQ {
            let unassigned: Vec<usize> = (0..self.num_vars)
                .filter(|&s| self.assign[s].is_none())
                .collect();
            if let Some(&slot) = pick(&mut self.rng, &unassigned) {
                let var = Var::new(slot as u32 + 1);
                return Some(Lit::new(var, !self.phase[slot]));
            }
            return None;
        }
        while let Some(slot) = self.heap.pop(&self.activity) {
            if self.assign[slot].is_none() {
                let var = Var::new(slot as u32 + 1);
                return Some(Lit::new(var, !self.phase[slot]));
            }
        }
        None
    }

    fn run(&mut self) -> SolveOutcome {
        if self.unsat_at_root {
            return SolveOutcome::Unsat;
        }
        let mut restart_seq = 1u64;
        let mut restart_limit = luby(restart_seq) * RESTART_BASE;
        let mut conflicts_since_restart = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                self.conflicts += 1;
                conflicts_since_restart += 1;
                if self.current_level() == 0 {
                    return SolveOutcome::Unsat;
                }
                if self.conflicts >= self.budget {
                    return SolveOutcome::Timeout;
                }
                let (learned, backjump) = self.analyze(conflict);
                self.cancel_until(backjump);
                self.record_learned(learned);
                self.var_inc /= ACTIVITY_DECAY;
            } else {
                if conflicts_since_restart >= restart_limit && self.current_level() > 0 {
                    restart_seq += 1;
                    restart_limit = luby(restart_seq) * RESTART_BASE;
                    conflicts_since_restart = 0;
                    self.cancel_until(0);
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let values = self.assign.iter().map(|v| v.unwrap()).collect();
                        return SolveOutcome::Sat(Assignment::from_values(values));
                    }
                    Some(decision) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(decision, Reason::None);
                    }
                }
            }
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.gen_range(0..items.len())])
    }
}

/// Luby restart sequence, 1-indexed: 1, 1, 2, 1, 1, 2, 4, ...
fn luby(i: u64) -> u64 {
    let mut x = i - 1;
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) / 2;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

/// Max-heap over variable slots keyed by activity, with stable tie-breaking.
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn new(n: usize) -> VarHeap {
        VarHeap {
            heap: (0..n as u32).collect(),
            pos: (0..n as i32).collect(),
        }
    }

    fn rebuild(&mut self, act: &[f64]) {
        let n = self.heap.len();
        for i in (0..n / 2).rev() {
            self.sift_down(i, act);
        }
    }

    #[inline]
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (aa, ab) = (act[a as usize], act[b as usize]);
        aa > ab || (aa == ab && a < b)
    }

    fn contains(&self, slot: usize) -> bool {
        self.pos[slot] >= 0
    }

    fn insert(&mut self, slot: usize, act: &[f64]) {
        if self.contains(slot) {
            return;
        }
        self.pos[slot] = self.heap.len() as i32;
        self.heap.push(slot as u32);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn update(&mut self, slot: usize, act: &[f64]) {
        if self.contains(slot) {
            self.sift_up(self.pos[slot] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top as usize)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::better(act, self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut best = i;
            if l < self.heap.len() && Self::better(act, self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && Self::better(act, self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a] as usize] = a as i32;
        self.pos[self.heap[b] as usize] = b as i32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::CardKind;

    fn lit(i: i64) -> Lit {
        Lit::from_dimacs(i)
    }

    #[test]
    fn empty_formula_is_sat() {
        let f = Formula::new(1);
        assert!(matches!(solve_seeded(&f, 0), SolveOutcome::Sat(_)));
    }

    #[test]
    fn unit_contradiction_is_unsat() {
        let mut f = Formula::new(1);
        f.add_clause([lit(1)]);
        f.add_clause([lit(-1)]);
        assert_eq!(solve_seeded(&f, 0), SolveOutcome::Unsat);
    }

    #[test]
    fn forced_variable_is_true_in_model() {
        let mut f = Formula::new(2);
        f.add_clause([lit(1), lit(2)]);
        f.add_clause([lit(-1), lit(2)]);
        for seed in 0..8 {
            match solve_seeded(&f, seed) {
                SolveOutcome::Sat(a) => assert!(a.value(Var::new(2))),
                other => panic!("expected sat, got {other:?}"),
            }
        }
    }

    #[test]
    fn exactly_constraint_enforced() {
        let mut f = Formula::new(3);
        f.add_cardinality(vec![lit(1), lit(2), lit(3)], CardKind::Exactly, 2);
        for seed in 0..8 {
            match solve_seeded(&f, seed) {
                SolveOutcome::Sat(a) => {
                    let trues = a.values().iter().filter(|&&v| v).count();
                    assert_eq!(trues, 2);
                }
                other => panic!("expected sat, got {other:?}"),
            }
        }
    }

    #[test]
    fn at_least_with_conflicting_units_is_unsat() {
        let mut f = Formula::new(3);
        f.add_clause([lit(-1)]);
        f.add_clause([lit(-2)]);
        f.add_cardinality(vec![lit(1), lit(2), lit(3)], CardKind::AtLeast, 2);
        assert_eq!(solve_seeded(&f, 3), SolveOutcome::Unsat);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let mut f = Formula::new(6);
        f.add_clause([lit(1), lit(2), lit(3)]);
        f.add_clause([lit(-2), lit(4)]);
        f.add_cardinality(vec![lit(1), lit(4), lit(5), lit(6)], CardKind::AtMost, 2);
        let a = solve_seeded(&f, 42);
        let b = solve_seeded(&f, 42);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn luby_sequence_prefix() {
        let expected = [1u64, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8];
        for (i, &e) in expected.iter().enumerate() {
            assert_eq!(luby(i as u64 + 1), e, "luby({})", i + 1);
        }
    }
}
