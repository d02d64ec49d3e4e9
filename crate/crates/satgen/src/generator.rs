//! Synthetic record generation: compile a cluster's pairwise feature-absence
//! structure into clauses, solve, and decode the model back into tokens.
//!
//! The core rule: for every pair of queries that no cluster member (or at
//! most `z` members, with `z` drawn per pair) answers false-false, the
//! output is forbidden from answering false-false. Per-site at-least-one
//! clauses over the positive queries make the decoded record well-defined.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use satcore::{solve_with, Formula, SolveOutcome, SolverOptions, DEFAULT_CONFLICT_BUDGET};

use crate::error::{Error, Result};
use crate::hapdata::{AlleleMatrix, ClusterPlan, TokenId};
use crate::seed::{derive, splitmix64, unit_f64};
use crate::signatures::{build_signatures, SignatureTable};

#[derive(Debug, Clone)]
pub struct GenParams {
    /// Cluster size: how many real samples feed one generation instance.
    pub n: usize,
    /// Stochastic strengthening level: per pair, z is drawn uniformly from
    /// [0, z_max) and floored. z_max <= 1 means z = 0 deterministically.
    pub z_max: f64,
    pub seed: u64,
    /// When set, each output must differ from every earlier output of the
    /// same run in at least this many sites.
    pub diversity_min_distance: Option<usize>,
    pub conflict_budget: u64,
    /// Extra attempts (fresh cluster draw and seeds) after an infeasible
    /// instance. Zero means fail immediately.
    pub retries: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 10,
            z_max: 0.0,
            seed: 0,
            diversity_min_distance: None,
            conflict_budget: DEFAULT_CONFLICT_BUDGET,
            retries: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self, sites: usize) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("cluster size must be at least 1".into()));
        }
        if !(self.z_max >= 0.0) {
            return Err(Error::InvalidParams("z must be non-negative".into()));
        }
        if let Some(d) = self.diversity_min_distance {
            if d >= sites {
                return Err(Error::InvalidParams(format!(
                    "diversity distance {d} must be below the site count {sites}"
                )));
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> String {
        format!(
            "n={} z_max={} diversity={} retries={}",
            self.n,
            self.z_max,
            self.diversity_min_distance
                .map_or("none".to_string(), |d| d.to_string()),
            self.retries
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub cluster: Option<usize>,
    pub seed: u64,
    pub params: String,
}

/// One synthetic sample: a token per site (ids in the source matrix's
/// vocabulary) plus how it was made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticRecord {
    pub tokens: Vec<TokenId>,
    pub provenance: Provenance,
}

/// Per-pair strengthening draw, keyed by (seed, pair) so the constraint set
/// is reproducible regardless of scan order, and monotone in `z_max` for a
/// fixed stream.
pub fn draw_z(z_seed: u64, i: usize, j: usize, z_max: f64) -> usize {
    if z_max <= 1.0 {
        return 0;
    }
    let key = splitmix64(z_seed ^ ((i as u64) << 32 | j as u64));
    (unit_f64(key) * z_max).floor() as usize
}

/// One at-least-one clause per site over the positive-query literals.
/// Returns the number of clauses offered (tautologies may be dropped by the
/// formula; with a binary vocabulary they all are).
pub fn emit_at_least_one(table: &SignatureTable, formula: &mut Formula) -> usize {
    let vocab = table.vocab_len();
    let sites = table.sites();
    for site in 0..sites {
        let lits = (0..vocab).map(|v| table.pos_query_lit(site, TokenId(v as u32)));
        formula.add_clause(lits);
    }
    sites
}

/// For every unordered pair of unique signatures (self-pairs included):
/// draw z, count false-false positions, and when the count is at most z add
/// the clause forbidding the output from answering false-false.
pub fn emit_pair_constraints(
    table: &SignatureTable,
    z_max: f64,
    z_seed: u64,
    formula: &mut Formula,
) {
    let total = table.num_signatures();
    for i in 0..total {
        for j in i..total {
            let z = draw_z(z_seed, i, j, z_max);
            if table.signature(i).ff_count(table.signature(j)) <= z {
                formula.add_clause([table.lit_of(i), table.lit_of(j)]);
            }
        }
    }
}

/// Require the output to differ from each given sequence in at least `d`
/// sites, via an at-least-d cardinality constraint over per-site mismatch
/// literals.
pub fn add_diversity_constraints(
    formula: &mut Formula,
    table: &SignatureTable,
    others: &[&[TokenId]],
    d: usize,
) -> Result<()> {
    if d == 0 {
        return Ok(());
    }
    let sites = table.sites();
    if d > sites {
        return Err(Error::InvalidParams(format!(
            "diversity distance {d} exceeds the site count {sites}"
        )));
    }
    for other in others {
        if other.len() != sites {
            return Err(Error::DimensionMismatch(
                "diversity sequence length differs from site count".into(),
            ));
        }
        let lits: Vec<_> = (0..sites)
            .map(|site| table.neg_query_lit(site, other[site]))
            .collect();
        formula.add_cardinality(lits, satcore::CardKind::AtLeast, d);
    }
    Ok(())
}

/// Read the synthetic record off a model: per site, the single token whose
/// positive-query literal is true.
pub fn decode(
    assignment: &satcore::Assignment,
    table: &SignatureTable,
    matrix: &AlleleMatrix,
) -> Vec<TokenId> {
    let sites = matrix.sites();
    let mut tokens = Vec::with_capacity(sites);
    for site in 0..sites {
        let mut chosen: Option<TokenId> = None;
        for v in 0..matrix.vocab_len() {
            let token = TokenId(v as u32);
            if assignment.lit_true(table.pos_query_lit(site, token)) {
                match chosen {
                    None => chosen = Some(token),
                    Some(prev) => panic!(
                        "constraint system bug: site {site} decodes to both \
                         `{}` and `{}`",
                        matrix.token(prev),
                        matrix.token(token)
                    ),
                }
            }
        }
        tokens.push(chosen.unwrap_or_else(|| {
            panic!("constraint system bug: no token chosen at site {site}")
        }));
    }
    tokens
}

/// Build the full formula for one cluster. Exposed for audits and tests.
pub fn build_formula(
    matrix: &AlleleMatrix,
    members: &[usize],
    z_max: f64,
    z_seed: u64,
) -> (SignatureTable, Formula) {
    let table = build_signatures(matrix, members);
    let mut formula = Formula::new(table.num_vars());
    emit_at_least_one(&table, &mut formula);
    emit_pair_constraints(&table, z_max, z_seed, &mut formula);
    (table, formula)
}

/// Generate one record from the given cluster members.
pub fn generate_one(
    matrix: &AlleleMatrix,
    members: &[usize],
    params: &GenParams,
) -> Result<SyntheticRecord> {
    generate_one_excluding(matrix, members, params, &[])
}

/// Like `generate_one`, with diversity exclusions against earlier outputs.
pub fn generate_one_excluding(
    matrix: &AlleleMatrix,
    members: &[usize],
    params: &GenParams,
    others: &[&[TokenId]],
) -> Result<SyntheticRecord> {
    params.validate(matrix.sites())?;
    let (table, mut formula) = build_formula(
        matrix,
        members,
        params.z_max,
        derive(params.seed, "pair-z", 0),
    );
    if let Some(d) = params.diversity_min_distance {
        add_diversity_constraints(&mut formula, &table, others, d)?;
    }
    let options = SolverOptions {
        seed: derive(params.seed, "solve", 0),
        conflict_budget: params.conflict_budget,
    };
    match solve_with(&formula, &options) {
        SolveOutcome::Sat(assignment) => Ok(SyntheticRecord {
            tokens: decode(&assignment, &table, matrix),
            provenance: Provenance {
                cluster: None,
                seed: params.seed,
                params: params.snapshot(),
            },
        }),
        SolveOutcome::Unsat => Err(Error::infeasible(format!(
            "cluster of {} members, {}",
            members.len(),
            params.snapshot()
        ))),
        SolveOutcome::Timeout => Err(Error::SolverTimeout),
    }
}

/// Generate `count` records, each from a randomly chosen cluster of the
/// plan. Records are independent and generated in parallel unless diversity
/// constraints chain them; either way, output is deterministic in the seed.
pub fn generate_cohort(
    matrix: &AlleleMatrix,
    plan: &ClusterPlan,
    params: &GenParams,
    count: usize,
) -> Result<Vec<SyntheticRecord>> {
    params.validate(matrix.sites())?;
    if count == 0 {
        return Err(Error::InvalidParams("record count must be at least 1".into()));
    }
    if plan.is_empty() {
        return Err(Error::InvalidParams("cluster plan is empty".into()));
    }

    if params.diversity_min_distance.is_some() {
        // Each record must differ from the previous ones: sequential.
        let mut records: Vec<SyntheticRecord> = Vec::with_capacity(count);
        for i in 0..count {
            let previous: Vec<&[TokenId]> =
                records.iter().map(|r| r.tokens.as_slice()).collect();
            let record = generate_record(matrix, plan, params, i, &previous)?;
            records.push(record);
        }
        return Ok(records);
    }

    (0..count)
        .into_par_iter()
        .map(|i| generate_record(matrix, plan, params, i, &[]))
        .collect()
}

fn generate_record(
    matrix: &AlleleMatrix,
    plan: &ClusterPlan,
    params: &GenParams,
    record_index: usize,
    others: &[&[TokenId]],
) -> Result<SyntheticRecord> {
    let record_seed = derive(params.seed, "record", record_index as u64);
    let mut last_err = None;
    for attempt in 0..=params.retries {
        let attempt_seed = derive(record_seed, "attempt", attempt as u64);
        let cluster_idx = ChaCha8Rng::seed_from_u64(derive(attempt_seed, "cluster-choice", 0))
            .gen_range(0..plan.len());
        let attempt_params = GenParams {
            seed: attempt_seed,
            ..params.clone()
        };
        match generate_one_excluding(matrix, plan.cluster(cluster_idx), &attempt_params, others)
        {
            Ok(mut record) => {
                record.provenance.cluster = Some(cluster_idx);
                return Ok(record);
            }
            Err(Error::Infeasible { context }) => {
                last_err = Some(Error::Infeasible {
                    context: format!("{context}; record {record_index}, cluster {cluster_idx}"),
                });
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::infeasible("no attempts made")))
}

/// Assemble generated records into a matrix with the source's site labels.
pub fn records_to_matrix(
    source: &AlleleMatrix,
    records: &[SyntheticRecord],
    prefix: &str,
) -> Result<AlleleMatrix> {
    if records.is_empty() {
        return Err(Error::InvalidParams("no records to assemble".into()));
    }
    let sample_ids: Vec<String> = (0..records.len()).map(|i| format!("{prefix}{i}")).collect();
    let rows: Vec<Vec<&str>> = (0..source.sites())
        .map(|j| records.iter().map(|r| source.token(r.tokens[j])).collect())
        .collect();
    AlleleMatrix::from_rows(source.site_ids().to_vec(), sample_ids, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hapdata::toy_cohort;
    use satcore::{Lit, Var};

    fn lits_of(clause: &satcore::Clause) -> Vec<Lit> {
        clause.lits().to_vec()
    }

    fn sorted(mut v: Vec<Lit>) -> Vec<Lit> {
        v.sort();
        v
    }

    #[test]
    fn worked_example_at_least_one_clause() {
        let m = toy_cohort();
        let table = build_signatures(&m, &[0, 1, 2, 3, 4]);
        let mut f = Formula::new(table.num_vars());
        let offered = emit_at_least_one(&table, &mut f);
        assert_eq!(offered, 5);
        // Site 5 carries two tokens only, so its clause pairs a literal
        // with its negation and is dropped as a tautology.
        assert_eq!(f.clauses().len(), 4);
        // Site 1: (-x6 OR x1 OR x4 OR x2).
        let expected = sorted(vec![
            Lit::negative(Var::new(6)),
            Lit::positive(Var::new(1)),
            Lit::positive(Var::new(4)),
            Lit::positive(Var::new(2)),
        ]);
        assert_eq!(sorted(lits_of(&f.clauses()[0])), expected);
    }

    #[test]
    fn worked_example_pair_clauses() {
        let m = toy_cohort();
        let table = build_signatures(&m, &[0, 1, 2, 3, 4]);
        let mut f = Formula::new(table.num_vars());
        emit_pair_constraints(&table, 0.0, 0, &mut f);
        let x2_or_not_x1 = sorted(vec![
            Lit::positive(Var::new(2)),
            Lit::negative(Var::new(1)),
        ]);
        assert!(f
            .clauses()
            .iter()
            .any(|c| sorted(lits_of(c)) == x2_or_not_x1));
        // The all-false self-pair has five FF positions: no clause mentions
        // x1 positively on its own.
        let unit_x1 = vec![Lit::positive(Var::new(1))];
        assert!(!f.clauses().iter().any(|c| lits_of(c) == unit_x1));
        // The all-true self-pair yields the unit clause -x1.
        let unit_not_x1 = vec![Lit::negative(Var::new(1))];
        assert!(f.clauses().iter().any(|c| lits_of(c) == unit_not_x1));
    }

    #[test]
    fn identical_cluster_reproduces_the_sample() {
        let m = crate::hapdata::AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into(), "s3".into()],
            vec!["a".into(), "b".into()],
            &[
                vec!["A", "A"],
                vec!["T", "T"],
                vec!["G", "G"],
            ],
        )
        .unwrap();
        let record = generate_one(&m, &[0, 1], &GenParams::default()).unwrap();
        assert_eq!(record.tokens, m.column(0));
    }

    #[test]
    fn fixed_seed_reproduces_records() {
        let m = toy_cohort();
        let params = GenParams {
            n: 5,
            seed: 1234,
            ..GenParams::default()
        };
        let a = generate_one(&m, &[0, 1, 2, 3, 4], &params).unwrap();
        let b = generate_one(&m, &[0, 1, 2, 3, 4], &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decode_round_trips_query_answers() {
        let m = toy_cohort();
        let (table, formula) = build_formula(&m, &[0, 1, 2, 3, 4], 0.0, 9);
        if let SolveOutcome::Sat(a) = satcore::solve_seeded(&formula, 5) {
            let tokens = decode(&a, &table, &m);
            for site in 0..m.sites() {
                for v in 0..m.vocab_len() {
                    let tok = TokenId(v as u32);
                    let expected = tokens[site] == tok;
                    assert_eq!(a.lit_true(table.pos_query_lit(site, tok)), expected);
                }
            }
        } else {
            panic!("toy formula must be satisfiable");
        }
    }

    #[test]
    fn diversity_against_the_only_output_is_infeasible() {
        let m = crate::hapdata::AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into(), "s3".into()],
            vec!["a".into(), "b".into()],
            &[
                vec!["A", "A"],
                vec!["T", "T"],
                vec!["G", "G"],
            ],
        )
        .unwrap();
        let only = m.column(0);
        let params = GenParams {
            diversity_min_distance: Some(1),
            ..GenParams::default()
        };
        let err =
            generate_one_excluding(&m, &[0, 1], &params, &[only.as_slice()]).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn z_draws_are_monotone_in_z_max() {
        for i in 0..20usize {
            for j in i..20usize {
                let mut last = 0usize;
                for z_max in [0.0, 1.0, 1.5, 2.0, 3.0, 5.0, 9.0] {
                    let z = draw_z(77, i, j, z_max);
                    assert!(z >= last, "draws must not shrink as z_max rises");
                    last = z;
                }
            }
        }
    }
}
