use proptest::prelude::*;
use satcore::{export_dimacs, import_dimacs, CardKind, Formula, Lit};

fn clause_strategy(num_vars: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(
        (1..=num_vars, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v }),
        1..=4,
    )
}

proptest! {
    #[test]
    fn import_export_round_trip(
        num_vars in 1i64..=9,
        clauses in prop::collection::vec(clause_strategy(9), 0..8),
        card in prop::option::of((prop::collection::vec(1i64..=9, 1..5), 0usize..=4, 0u8..3)),
    ) {
        let mut f = Formula::new(9.max(num_vars) as usize);
        for c in &clauses {
            f.add_clause(c.iter().map(|&i| Lit::from_dimacs(i)));
        }
        if let Some((vars, k, kind)) = card {
            let kind = match kind {
                0 => CardKind::AtLeast,
                1 => CardKind::AtMost,
                _ => CardKind::Exactly,
            };
            let lits: Vec<Lit> = vars.iter().map(|&v| Lit::from_dimacs(v)).collect();
            let k = k.min(lits.len());
            f.add_cardinality(lits, kind, k);
        }
        let g = import_dimacs(&export_dimacs(&f)).unwrap();
        prop_assert_eq!(g.num_vars(), f.num_vars());
        prop_assert_eq!(g.clauses(), f.clauses());
        prop_assert_eq!(g.cards(), f.cards());
        prop_assert_eq!(g.is_unsat_marked(), f.is_unsat_marked());
    }
}
