//! Cross-checks the solver against exhaustive enumeration on small random
//! formulas, plus workload-shaped stress: 2-clause-dominant instances must
//! solve within a small conflict budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satcore::{
    enumerate_solutions, solve_seeded, solve_with, CardKind, Formula, Lit, SolveOutcome,
    SolverOptions, Var,
};

/// Test-side evaluator, written independently of `satcore::verify`.
fn eval(formula: &Formula, bits: u64) -> bool {
    if formula.is_unsat_marked() {
        return false;
    }
    let lit_true = |l: Lit| {
        let v = bits >> (l.var().index() - 1) & 1 == 1;
        v != l.is_negated()
    };
    formula
        .clauses()
        .iter()
        .all(|c| c.lits().iter().any(|&l| lit_true(l)))
        && formula.cards().iter().all(|c| {
            let trues = c.lits.iter().filter(|&&l| lit_true(l)).count();
            match c.kind {
                CardKind::AtLeast => trues >= c.k,
                CardKind::AtMost => trues <= c.k,
                CardKind::Exactly => trues == c.k,
            }
        })
}

fn brute_models(formula: &Formula) -> Vec<u64> {
    let n = formula.num_vars();
    (0u64..1 << n).filter(|&bits| eval(formula, bits)).collect()
}

fn assignment_bits(a: &satcore::Assignment) -> u64 {
    a.values()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &v)| acc | (v as u64) << i)
}

fn random_formula(rng: &mut ChaCha8Rng) -> Formula {
    let num_vars = rng.gen_range(1..=10);
    let mut f = Formula::new(num_vars);
    let num_clauses = rng.gen_range(0..=18);
    for _ in 0..num_clauses {
        let width = rng.gen_range(1..=3.min(num_vars));
        let lits: Vec<Lit> = (0..width)
            .map(|_| {
                let v = Var::new(rng.gen_range(1..=num_vars) as u32);
                Lit::new(v, rng.gen())
            })
            .collect();
        f.add_clause(lits);
    }
    for _ in 0..rng.gen_range(0..=2) {
        let width = rng.gen_range(1..=num_vars);
        let lits: Vec<Lit> = (0..width)
            .map(|_| {
                let v = Var::new(rng.gen_range(1..=num_vars) as u32);
                Lit::new(v, rng.gen())
            })
            .collect();
        let kind = match rng.gen_range(0..3) {
            0 => CardKind::AtLeast,
            1 => CardKind::AtMost,
            _ => CardKind::Exactly,
        };
        let k = rng.gen_range(0..=width);
        f.add_cardinality(lits, kind, k);
    }
    f
}

#[test]
fn agrees_with_brute_force_on_random_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    for round in 0..300 {
        let f = random_formula(&mut rng);
        let models = brute_models(&f);
        match solve_seeded(&f, round) {
            SolveOutcome::Sat(a) => {
                assert!(
                    eval(&f, assignment_bits(&a)),
                    "round {round}: solver model fails evaluation"
                );
                assert!(!models.is_empty(), "round {round}: solver sat, oracle unsat");
            }
            SolveOutcome::Unsat => {
                assert!(models.is_empty(), "round {round}: solver unsat, oracle sat");
            }
            SolveOutcome::Timeout => panic!("round {round}: unexpected timeout"),
        }
    }
}

#[test]
fn enumeration_matches_brute_force_model_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
    for round in 0..120 {
        let f = random_formula(&mut rng);
        let mut expected = brute_models(&f);
        expected.sort_unstable();
        let e = enumerate_solutions(&f, 1 << 12, round);
        assert!(e.exhausted, "round {round}: enumeration not exhausted");
        let mut got: Vec<u64> = e.models.iter().map(assignment_bits).collect();
        got.sort_unstable();
        assert_eq!(got, expected, "round {round}: model sets differ");
    }
}

#[test]
fn distinct_seeds_reach_distinct_models() {
    let mut f = Formula::new(3);
    f.add_clause([Lit::from_dimacs(1), Lit::from_dimacs(2), Lit::from_dimacs(3)]);
    let mut seen = std::collections::HashSet::new();
    for seed in 0..40 {
        if let SolveOutcome::Sat(a) = solve_seeded(&f, seed) {
            seen.insert(assignment_bits(&a));
        }
    }
    assert!(
        seen.len() >= 3,
        "expected seed randomisation to reach several models, got {}",
        seen.len()
    );
}

#[test]
fn fixed_seed_outcome_is_byte_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let f = random_formula(&mut rng);
        let a = format!("{:?}", solve_seeded(&f, 11));
        let b = format!("{:?}", solve_seeded(&f, 11));
        assert_eq!(a, b);
    }
}

#[test]
fn two_clause_workload_solves_within_small_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2c1a);
    for round in 0..10 {
        let num_vars = 512;
        let mut f = Formula::new(num_vars);
        for _ in 0..900 {
            let a = Var::new(rng.gen_range(1..=num_vars) as u32);
            let b = Var::new(rng.gen_range(1..=num_vars) as u32);
            f.add_clause([Lit::new(a, rng.gen()), Lit::new(b, rng.gen())]);
        }
        let outcome = solve_with(
            &f,
            &SolverOptions {
                seed: round,
                conflict_budget: 20_000,
            },
        );
        assert!(
            !matches!(outcome, SolveOutcome::Timeout),
            "round {round}: 2-clause instance exceeded the small conflict budget"
        );
    }
}

#[test]
fn timeout_is_reported_distinctly() {
    // A hard random 3-SAT instance near the phase transition with a budget
    // of 1 conflict must report Timeout, not Unsat.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let num_vars = 60;
    let mut f = Formula::new(num_vars);
    for _ in 0..260 {
        let lits: Vec<Lit> = (0..3)
            .map(|_| Lit::new(Var::new(rng.gen_range(1..=num_vars) as u32), rng.gen()))
            .collect();
        f.add_clause(lits);
    }
    let outcome = solve_with(
        &f,
        &SolverOptions {
            seed: 0,
            conflict_budget: 1,
        },
    );
    assert!(matches!(
        outcome,
        SolveOutcome::Timeout | SolveOutcome::Sat(_)
    ));
}
