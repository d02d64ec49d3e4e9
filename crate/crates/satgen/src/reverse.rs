//! Logical inversion of the generator: given a witnessed synthetic record
//! and the full cohort it could have been drawn from, reconstruct candidate
//! input subsets, estimate exposure, and evaluate the exact membership
//! posterior on desk-scale instances.
//!
//! The inversion mirrors the forward rule. A pair of queries the witnessed
//! record answers false-false was *not* forbidden during generation, so at
//! least `z + 1` members of the generating cluster answered false-false
//! too. One boolean per cohort sample marks candidate membership; every
//! such pair becomes an at-least-(z+1) constraint over the samples agreeing
//! with the record on both queries, plus one exactly-N constraint overall.
//!
//! With a stochastic strengthening level the per-pair draws of the original
//! run are unknown, so each trial redraws them: reverse soundness is then
//! distributional rather than per-trial. At z = 0 the constraints are exact.

use itertools::Itertools;
use rayon::prelude::*;

use satcore::{
    enumerate_with, solve_with, CardKind, Formula, Lit, SolveOutcome, SolverOptions, Var,
};

use crate::error::{Error, Result};
use crate::generator::{build_formula, draw_z};
use crate::hapdata::{AlleleMatrix, TokenId};
use crate::seed::derive;
use crate::signatures::Signature;

#[derive(Debug, Clone)]
pub struct ReverseParams {
    /// Cluster size the generator was run with.
    pub n: usize,
    /// Strengthening level the generator was run with.
    pub z_max: f64,
    pub seed: u64,
    pub conflict_budget: u64,
}

impl Default for ReverseParams {
    fn default() -> Self {
        ReverseParams {
            n: 10,
            z_max: 0.0,
            seed: 0,
            conflict_budget: satcore::DEFAULT_CONFLICT_BUDGET,
        }
    }
}

/// The reconstruction instance: one candidate variable per cohort sample
/// and the deduplicated false-answered query structure.
pub struct ReverseProblem {
    num_samples: usize,
    n: usize,
    z_max: f64,
    conflict_budget: u64,
    /// For each unique false-answered query: the set of cohort samples that
    /// also answer false (stored as a bit mask over samples).
    agree_masks: Vec<Signature>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub members: Vec<usize>,
    pub trial: usize,
}

#[derive(Debug, Clone)]
pub struct ReverseSampling {
    pub sets: Vec<CandidateSet>,
    pub infeasible_trials: usize,
    pub trials: usize,
}

/// Map a witnessed record's tokens into the cohort's vocabulary.
pub fn map_record(cohort: &AlleleMatrix, record: &AlleleMatrix, column: usize) -> Result<Vec<TokenId>> {
    if record.sites() != cohort.sites() {
        return Err(Error::DimensionMismatch(format!(
            "witnessed record has {} sites, cohort has {}",
            record.sites(),
            cohort.sites()
        )));
    }
    (0..record.sites())
        .map(|j| {
            let tok = record.cell_token(j, column);
            cohort.token_id(tok).ok_or_else(|| {
                Error::ReverseIncompatible(format!(
                    "token `{tok}` at site {j} never occurs in the cohort"
                ))
            })
        })
        .collect()
}

/// Collect the cohort-wide structure of every query the witnessed record
/// answers false to.
pub fn build_reverse_constraints(
    synth: &[TokenId],
    cohort: &AlleleMatrix,
    params: &ReverseParams,
) -> Result<ReverseProblem> {
    let m = cohort.samples();
    let sites = cohort.sites();
    if synth.len() != sites {
        return Err(Error::DimensionMismatch(format!(
            "witnessed record has {} sites, cohort has {sites}",
            synth.len()
        )));
    }
    if params.n == 0 || params.n > m {
        return Err(Error::InvalidParams(format!(
            "cluster size {} must be between 1 and the cohort size {m}",
            params.n
        )));
    }

    // Positive queries the record fails (its token differs) and the one
    // negative query it fails per site (for its own token). The "agreeing"
    // mask holds samples answering false to the same query.
    let mut masks: Vec<Signature> = Vec::with_capacity(sites * 2);
    for j in 0..sites {
        for v in 0..cohort.vocab_len() {
            let v = TokenId(v as u32);
            if synth[j] != v {
                let mut mask = Signature::zeroed(m);
                for i in 0..m {
                    if cohort.cell(j, i) != v {
                        mask.set(i);
                    }
                }
                masks.push(mask);
            } else {
                let mut mask = Signature::zeroed(m);
                for i in 0..m {
                    if cohort.cell(j, i) == v {
                        mask.set(i);
                    }
                }
                masks.push(mask);
            }
        }
    }
    masks.sort_unstable();
    masks.dedup();

    Ok(ReverseProblem {
        num_samples: m,
        n: params.n,
        z_max: params.z_max,
        conflict_budget: params.conflict_budget,
        agree_masks: masks,
    })
}

impl ReverseProblem {
    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_queries(&self) -> usize {
        self.agree_masks.len()
    }

    /// Build one trial's formula with fresh strengthening draws. Returns
    /// `Ok(None)` when a pair admits fewer agreeing samples than the drawn
    /// bound requires: the record cannot come from this cohort under these
    /// draws.
    pub fn trial_formula(&self, trial_seed: u64) -> Result<Option<Formula>> {
        let mut constraints: Vec<(Signature, usize)> = Vec::new();
        let q = self.agree_masks.len();
        for i in 0..q {
            for j in i..q {
                let z = draw_z(trial_seed, i, j, self.z_max);
                let need = z + 1;
                let inter = self.agree_masks[i].intersection(&self.agree_masks[j]);
                if inter.count_ones() < need {
                    return Ok(None);
                }
                constraints.push((inter, need));
            }
        }
        eliminate_subsumed(&mut constraints);

        let mut formula = Formula::new(self.num_samples);
        for (mask, need) in constraints {
            let lits: Vec<Lit> = mask
                .iter_ones()
                .map(|i| Lit::positive(Var::new(i as u32 + 1)))
                .collect();
            if need == 1 {
                formula.add_clause(lits);
            } else {
                formula.add_cardinality(lits, CardKind::AtLeast, need);
            }
        }
        let all: Vec<Lit> = (1..=self.num_samples as u32)
            .map(|i| Lit::positive(Var::new(i)))
            .collect();
        formula.add_cardinality(all, CardKind::Exactly, self.n);
        Ok(Some(formula))
    }
}

/// Drop constraints implied by a stronger one: at-least-k over A subsumes
/// at-least-k' over B whenever A ⊆ B and k >= k'. Identical masks keep the
/// largest bound; scanning in ascending popcount order means a new
/// constraint can never subsume one already kept, so one forward pass
/// against the kept list suffices.
fn eliminate_subsumed(constraints: &mut Vec<(Signature, usize)>) {
    constraints.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    constraints.dedup_by(|next, kept| next.0 == kept.0);
    constraints.sort_by_key(|(mask, _)| mask.count_ones());

    let mut kept: Vec<(Signature, usize)> = Vec::new();
    for (mask, k) in constraints.drain(..) {
        let subsumed = kept
            .iter()
            .any(|(a, ka)| *ka >= k && a.is_subset_of(&mask));
        if !subsumed {
            kept.push((mask, k));
        }
    }
    *constraints = kept;
}

/// Solve `trials` reconstruction instances with fresh draws and decision
/// seeds, verifying each returned set.
pub fn sample_candidate_sets(
    problem: &ReverseProblem,
    trials: usize,
    seed: u64,
) -> Result<ReverseSampling> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    // At z = 0 the constraint set is deterministic; build it once.
    let shared = if problem.z_max <= 1.0 {
        Some(problem.trial_formula(derive(seed, "reverse-z", 0))?)
    } else {
        None
    };

    let outcomes: Vec<Result<Option<Vec<usize>>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive(seed, "reverse-trial", t as u64);
            let formula = match &shared {
                Some(f) => f.clone(),
                None => problem.trial_formula(derive(trial_seed, "reverse-z", 0))?,
            };
            let Some(formula) = formula else {
                return Ok(None);
            };
            let options = SolverOptions {
                seed: derive(trial_seed, "solve", 0),
                conflict_budget: problem.conflict_budget,
            };
            match solve_with(&formula, &options) {
                SolveOutcome::Sat(a) => {
                    let members: Vec<usize> =
                        (0..problem.num_samples).filter(|&i| a.values()[i]).collect();
                    debug_assert_eq!(members.len(), problem.n);
                    Ok(Some(members))
                }
                SolveOutcome::Unsat => Ok(None),
                SolveOutcome::Timeout => Err(Error::SolverTimeout),
            }
        })
        .collect();

    let mut sets = Vec::new();
    let mut infeasible = 0usize;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Some(members) => sets.push(CandidateSet { members, trial: t }),
            None => infeasible += 1,
        }
    }
    if sets.is_empty() {
        return Err(Error::ReverseIncompatible(format!(
            "all {trials} trials infeasible ({} unique failed queries)",
            problem.num_queries()
        )));
    }
    Ok(ReverseSampling {
        sets,
        infeasible_trials: infeasible,
        trials,
    })
}

/// Enumerate the complete feasible family (z = 0 only).
pub fn enumerate_candidate_sets(
    problem: &ReverseProblem,
    limit: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if problem.z_max > 1.0 {
        return Err(Error::InvalidParams(
            "exhaustive enumeration requires z = 0".into(),
        ));
    }
    let Some(formula) = problem.trial_formula(derive(seed, "reverse-z", 0))? else {
        return Ok(Vec::new());
    };
    let e = enumerate_with(
        &formula,
        limit,
        &SolverOptions {
            seed,
            conflict_budget: problem.conflict_budget,
        },
    );
    if e.timed_out {
        return Err(Error::SolverTimeout);
    }
    if !e.exhausted {
        return Err(Error::DeskScaleExceeded(format!(
            "more than {limit} candidate sets"
        )));
    }
    Ok(e.models
        .iter()
        .map(|a| (0..problem.num_samples).filter(|&i| a.values()[i]).collect())
        .collect())
}

#[derive(Debug, Clone)]
pub struct ExposureReport {
    /// Per-sample appearance frequency over successful trials.
    pub frequencies: Vec<f64>,
    /// Samples present in every successful trial.
    pub exposed: Vec<usize>,
    pub trials: usize,
    pub infeasible_trials: usize,
}

pub fn exposure_report(sampling: &ReverseSampling, num_samples: usize) -> ExposureReport {
    let successes = sampling.sets.len();
    let mut counts = vec![0usize; num_samples];
    for set in &sampling.sets {
        for &i in &set.members {
            counts[i] += 1;
        }
    }
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / successes as f64).collect();
    let exposed: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == successes)
        .map(|(i, _)| i)
        .collect();
    ExposureReport {
        frequencies,
        exposed,
        trials: sampling.trials,
        infeasible_trials: sampling.infeasible_trials,
    }
}

/// Wilson score interval at 90% confidence for a binomial rate.
pub fn wilson90(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0, "interval needs at least one trial");
    // Two-sided 90% normal quantile.
    let z = 1.6448536269514722f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone)]
pub struct CombinationCount {
    pub members: Vec<usize>,
    pub model_count: usize,
    pub contains_target: bool,
}

#[derive(Debug, Clone)]
pub struct PosteriorReport {
    /// Ratio of compatible combinations without the target over those with.
    pub zeta: f64,
    /// Average inverse model count ratio (absent over present).
    pub r: f64,
    /// Membership confidence 1 / (1 + zeta * r).
    pub posterior: f64,
    pub n_in: usize,
    pub n_out: usize,
    pub combinations: Vec<CombinationCount>,
    /// Set when no compatible combination contains the target.
    pub target_never_present: bool,
}

const DESK_MAX_SAMPLES: usize = 10;
const DESK_MAX_N: usize = 4;
const DESK_MAX_SITES: usize = 8;

/// Exact membership posterior by exhaustive enumeration: every size-N
/// combination is checked for compatibility with the witnessed record and
/// its forward model count is computed by complete enumeration. Valid at
/// z = 0 only, under the uniform-model assumption, which is why this path
/// never uses sampled solutions.
pub fn theorem1_posterior(
    synth: &[TokenId],
    cohort: &AlleleMatrix,
    target: usize,
    params: &ReverseParams,
) -> Result<PosteriorReport> {
    let m = cohort.samples();
    if target >= m {
        return Err(Error::InvalidParams(format!(
            "target index {target} out of range for {m} samples"
        )));
    }
    if params.z_max > 1.0 {
        return Err(Error::InvalidParams("posterior evaluation requires z = 0".into()));
    }
    if m > DESK_MAX_SAMPLES || params.n > DESK_MAX_N || cohort.sites() > DESK_MAX_SITES {
        return Err(Error::DeskScaleExceeded(format!(
            "posterior needs samples <= {DESK_MAX_SAMPLES}, cluster <= {DESK_MAX_N}, \
             sites <= {DESK_MAX_SITES}"
        )));
    }

    let mut combinations = Vec::new();
    let mut sum_in = 0.0f64;
    let mut sum_out = 0.0f64;
    let mut n_in = 0usize;
    let mut n_out = 0usize;

    for combo in (0..m).combinations(params.n) {
        let (table, formula) = build_formula(cohort, &combo, 0.0, 0);
        if !compatible(synth, &table, &formula) {
            continue;
        }
        let e = enumerate_with(
            &formula,
            1 << 20,
            &SolverOptions {
                seed: derive(params.seed, "posterior-count", combinations.len() as u64),
                conflict_budget: params.conflict_budget,
            },
        );
        if e.timed_out || !e.exhausted {
            return Err(Error::DeskScaleExceeded(
                "model counting did not complete".into(),
            ));
        }
        let count = e.models.len();
        debug_assert!(count >= 1, "compatible combination must have models");
        let contains_target = combo.contains(&target);
        if contains_target {
            n_in += 1;
            sum_in += 1.0 / count as f64;
        } else {
            n_out += 1;
            sum_out += 1.0 / count as f64;
        }
        combinations.push(CombinationCount {
            members: combo,
            model_count: count,
            contains_target,
        });
    }

    if n_in == 0 {
        return Ok(PosteriorReport {
            zeta: f64::INFINITY,
            r: 0.0,
            posterior: 0.0,
            n_in,
            n_out,
            combinations,
            target_never_present: true,
        });
    }
    let zeta = n_out as f64 / n_in as f64;
    let r = if n_out == 0 {
        0.0
    } else {
        (sum_out / n_out as f64) / (sum_in / n_in as f64)
    };
    Ok(PosteriorReport {
        zeta,
        r,
        posterior: 1.0 / (1.0 + zeta * r),
        n_in,
        n_out,
        combinations,
        target_never_present: false,
    })
}

/// Does the witnessed record satisfy the forward formula of this cluster?
/// Its query answers induce a full assignment (queries sharing a signature
/// share a variable, so disagreement means incompatibility).
fn compatible(
    synth: &[TokenId],
    table: &crate::signatures::SignatureTable,
    formula: &Formula,
) -> bool {
    let n = table.num_vars();
    let mut values: Vec<Option<bool>> = vec![None; n];
    for site in 0..synth.len() {
        for v in 0..table.vocab_len() {
            let tok = TokenId(v as u32);
            let answer = synth[site] == tok;
            let lit = table.pos_query_lit(site, tok);
            let var_value = answer != lit.is_negated();
            let slot = lit.var().index() as usize - 1;
            match values[slot] {
                None => values[slot] = Some(var_value),
                Some(prev) if prev != var_value => return false,
                _ => {}
            }
        }
    }
    // Variables can only be pinned through some query, so the assignment is
    // total by now.
    let assignment = satcore::Assignment::new(values.into_iter().map(|v| v.unwrap()).collect());
    satcore::verify::check(formula, &assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_one, GenParams};
    use crate::hapdata::toy_cohort;

    fn toy_params(n: usize) -> ReverseParams {
        ReverseParams {
            n,
            ..ReverseParams::default()
        }
    }

    #[test]
    fn full_cohort_record_is_reverse_feasible() {
        let m = toy_cohort();
        let record = generate_one(
            &m,
            &[0, 1, 2, 3, 4],
            &GenParams {
                n: 5,
                seed: 3,
                ..GenParams::default()
            },
        )
        .unwrap();
        let problem = build_reverse_constraints(&record.tokens, &m, &toy_params(5)).unwrap();
        let sampling = sample_candidate_sets(&problem, 3, 1).unwrap();
        assert_eq!(sampling.sets.len(), 3);
        for set in &sampling.sets {
            assert_eq!(set.members, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn generating_cluster_satisfies_reverse_constraints() {
        let m = toy_cohort();
        for members in [[0usize, 3].as_slice(), &[1, 2], &[2, 4], &[0, 1, 2]] {
            let record = generate_one(
                &m,
                members,
                &GenParams {
                    n: members.len(),
                    seed: 17,
                    ..GenParams::default()
                },
            )
            .unwrap();
            let problem =
                build_reverse_constraints(&record.tokens, &m, &toy_params(members.len()))
                    .unwrap();
            let family = enumerate_candidate_sets(&problem, 1 << 12, 0).unwrap();
            let mut sorted_members = members.to_vec();
            sorted_members.sort_unstable();
            assert!(
                family.contains(&sorted_members),
                "true cluster {sorted_members:?} missing from feasible family {family:?}"
            );
        }
    }

    #[test]
    fn fixed_seed_reproduces_sampling() {
        let m = toy_cohort();
        let record = generate_one(
            &m,
            &[0, 1, 2],
            &GenParams {
                n: 3,
                seed: 5,
                ..GenParams::default()
            },
        )
        .unwrap();
        let problem = build_reverse_constraints(&record.tokens, &m, &toy_params(3)).unwrap();
        let a = sample_candidate_sets(&problem, 8, 42).unwrap();
        let b = sample_candidate_sets(&problem, 8, 42).unwrap();
        assert_eq!(a.sets, b.sets);
    }

    #[test]
    fn exposure_counts_identical_sets_as_exposed() {
        let sampling = ReverseSampling {
            sets: vec![
                CandidateSet {
                    members: vec![0, 2],
                    trial: 0,
                },
                CandidateSet {
                    members: vec![0, 2],
                    trial: 1,
                },
            ],
            infeasible_trials: 0,
            trials: 2,
        };
        let report = exposure_report(&sampling, 4);
        assert_eq!(report.exposed, vec![0, 2]);
        assert_eq!(report.frequencies, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn sample_absent_once_is_not_exposed() {
        let sampling = ReverseSampling {
            sets: vec![
                CandidateSet {
                    members: vec![0, 1],
                    trial: 0,
                },
                CandidateSet {
                    members: vec![0, 2],
                    trial: 1,
                },
            ],
            infeasible_trials: 0,
            trials: 2,
        };
        let report = exposure_report(&sampling, 3);
        assert_eq!(report.exposed, vec![0]);
    }

    #[test]
    fn wilson_upper_bound_for_zero_in_twenty() {
        let (lo, hi) = wilson90(0, 20);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.119).abs() < 0.001, "upper bound {hi}");
    }

    #[test]
    fn posterior_edge_cases() {
        let m = toy_cohort();
        let record = generate_one(
            &m,
            &[0, 3],
            &GenParams {
                n: 2,
                seed: 1,
                ..GenParams::default()
            },
        )
        .unwrap();
        let report = theorem1_posterior(&record.tokens, &m, 0, &toy_params(2)).unwrap();
        assert!(report.posterior >= 0.0 && report.posterior <= 1.0);
        if report.n_out == 0 {
            assert_eq!(report.posterior, 1.0);
        }
    }

    #[test]
    fn desk_scale_guard_refuses_large_instances() {
        let m = toy_cohort();
        let record = m.column(0);
        let err = theorem1_posterior(&record, &m, 0, &toy_params(5)).unwrap_err();
        assert!(matches!(err, Error::DeskScaleExceeded(_)));
    }
}
