//! Privacy experiments: attribute-inference distances, k-tuple revelation
//! (private vs fictitious combinations) and the frontier distance to the
//! ideal point.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hapdata::{AlleleMatrix, TokenId};
use crate::seed::derive;

#[derive(Debug, Clone)]
pub struct AttrInferenceReport {
    /// Median over targets of the nearest-record Hamming distance (divided
    /// by the site count) to the synthetic set built WITH the target.
    pub in_distance: f64,
    /// Same against the synthetic set built WITHOUT the target.
    pub out_distance: f64,
    /// out - in; negative values are possible.
    pub difference: f64,
    pub targets: usize,
    pub params: String,
}

/// Distance to the ideal point (0, 0) of the accuracy/privacy plane.
pub fn frontier_distance(in_distance: f64, difference: f64) -> f64 {
    (in_distance * in_distance + difference * difference).sqrt()
}

impl AttrInferenceReport {
    pub fn frontier_distance(&self) -> f64 {
        frontier_distance(self.in_distance, self.difference)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Nearest-record Hamming distance from each cohort column to two synthetic
/// sets (one built from the half containing it, one from the other half),
/// reported as medians. `in_half` marks, per cohort sample, whether it
/// belongs to the first half; `synth_first`/`synth_second` are the sets
/// generated from the first and second halves.
pub fn attr_inference_distances(
    cohort: &AlleleMatrix,
    in_first_half: &[bool],
    synth_first: &AlleleMatrix,
    synth_second: &AlleleMatrix,
    params: String,
) -> Result<AttrInferenceReport> {
    let s = cohort.sites();
    if synth_first.sites() != s || synth_second.sites() != s {
        return Err(Error::DimensionMismatch(
            "synthetic sets must match the cohort's sites".into(),
        ));
    }
    if in_first_half.len() != cohort.samples() {
        return Err(Error::DimensionMismatch(
            "half membership must cover every sample".into(),
        ));
    }

    let nearest = |target: usize, synth: &AlleleMatrix| -> f64 {
        let mut best = usize::MAX;
        for r in 0..synth.samples() {
            let d = (0..s)
                .filter(|&j| cohort.cell_token(j, target) != synth.cell_token(j, r))
                .count();
            best = best.min(d);
        }
        best as f64 / s as f64
    };

    let mut in_dists = Vec::with_capacity(cohort.samples());
    let mut out_dists = Vec::with_capacity(cohort.samples());
    for t in 0..cohort.samples() {
        let (own, other) = if in_first_half[t] {
            (synth_first, synth_second)
        } else {
            (synth_second, synth_first)
        };
        in_dists.push(nearest(t, own));
        out_dists.push(nearest(t, other));
    }
    let in_distance = median(&mut in_dists);
    let out_distance = median(&mut out_dists);
    Ok(AttrInferenceReport {
        in_distance,
        out_distance,
        difference: out_distance - in_distance,
        targets: cohort.samples(),
        params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KTupleClass {
    /// Exactly one cohort sample carries all k (site, token) pairs.
    Private,
    /// No cohort sample carries them.
    Fictitious,
    /// Two or more samples carry them (never emitted by the sampler).
    Common,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KTupleSpec {
    pub positions: Vec<usize>,
    pub tokens: Vec<TokenId>,
    pub class: KTupleClass,
}

/// How many cohort samples carry every (position, token) pair.
pub fn count_carriers(matrix: &AlleleMatrix, positions: &[usize], tokens: &[TokenId]) -> usize {
    (0..matrix.samples())
        .filter(|&i| {
            positions
                .iter()
                .zip(tokens)
                .all(|(&j, &t)| matrix.cell(j, i) == t)
        })
        .count()
}

pub fn classify(matrix: &AlleleMatrix, positions: &[usize], tokens: &[TokenId]) -> KTupleClass {
    match count_carriers(matrix, positions, tokens) {
        0 => KTupleClass::Fictitious,
        1 => KTupleClass::Private,
        _ => KTupleClass::Common,
    }
}

#[derive(Debug, Clone)]
pub struct KTupleSample {
    pub tuples: Vec<KTupleSpec>,
    pub attempts: usize,
    /// False when the attempt budget ran out before `count` tuples.
    pub complete: bool,
}

/// Rejection-sample `count` tuples of the requested class. Positions are
/// uniform without replacement; tokens either copy a random sample's values
/// at those positions (favouring private/common) or are drawn uniformly
/// from each site's declared alleles (favouring fictitious). Classification
/// is exact, so the proposal split only affects throughput.
pub fn sample_ktuples(
    matrix: &AlleleMatrix,
    k: usize,
    class: KTupleClass,
    count: usize,
    seed: u64,
) -> Result<KTupleSample> {
    if class == KTupleClass::Common {
        return Err(Error::InvalidParams(
            "sampler emits private or fictitious tuples only".into(),
        ));
    }
    if k == 0 || k > matrix.sites() {
        return Err(Error::InvalidParams(format!(
            "tuple order {k} must be between 1 and the site count {}",
            matrix.sites()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "ktuple", 0));
    let budget = count.saturating_mul(20_000).max(100_000);
    let mut tuples = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let mut sites: Vec<usize> = (0..matrix.sites()).collect();

    while tuples.len() < count && attempts < budget {
        attempts += 1;
        let (shuffled, _) = sites.partial_shuffle(&mut rng, k);
        let mut positions = shuffled.to_vec();
        positions.sort_unstable();
        let tokens: Vec<TokenId> = if rng.gen::<bool>() {
            let donor = rng.gen_range(0..matrix.samples());
            positions.iter().map(|&j| matrix.cell(j, donor)).collect()
        } else {
            positions
                .iter()
                .map(|&j| {
                    let decl = matrix.site_decl(j);
                    decl[rng.gen_range(0..decl.len())]
                })
                .collect()
        };
        if classify(matrix, &positions, &tokens) == class {
            if !tuples
                .iter()
                .any(|t: &KTupleSpec| t.positions == positions && t.tokens == tokens)
            {
                tuples.push(KTupleSpec {
                    positions,
                    tokens,
                    class,
                });
            }
        }
    }
    let complete = tuples.len() == count;
    Ok(KTupleSample {
        tuples,
        attempts,
        complete,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccurrenceMode {
    /// A tuple occurs if any record of any dataset carries it.
    Pooled,
    /// Average over datasets of the per-dataset occurrence indicator.
    PerDataset,
}

#[derive(Debug, Clone)]
pub struct RevelationReport {
    pub private_rate: f64,
    pub fictitious_rate: f64,
    pub private_sampled: usize,
    pub fictitious_sampled: usize,
    pub corpus_datasets: usize,
    pub corpus_records: usize,
}

/// How often tuples of each class appear in the synthetic corpus. Tuple
/// token ids live in `cohort`'s vocabulary; corpus datasets may intern
/// differently, so tokens are matched by string.
pub fn revelation_rates(
    cohort: &AlleleMatrix,
    tuples: &[KTupleSpec],
    corpus: &[AlleleMatrix],
    mode: OccurrenceMode,
) -> Result<RevelationReport> {
    for t in tuples {
        for dataset in corpus {
            if t.positions.iter().any(|&j| j >= dataset.sites()) {
                return Err(Error::DimensionMismatch(
                    "tuple positions exceed a corpus dataset's sites".into(),
                ));
            }
        }
    }
    let occurs_in = |t: &KTupleSpec, dataset: &AlleleMatrix| -> bool {
        let mapped: Option<Vec<TokenId>> = t
            .tokens
            .iter()
            .map(|&tok| dataset.token_id(cohort.token(tok)))
            .collect();
        let Some(mapped) = mapped else {
            return false;
        };
        (0..dataset.samples()).any(|r| {
            t.positions
                .iter()
                .zip(&mapped)
                .all(|(&j, &tok)| dataset.cell(j, r) == tok)
        })
    };

    let score = |t: &KTupleSpec| -> f64 {
        match mode {
            OccurrenceMode::Pooled => corpus.iter().any(|d| occurs_in(t, d)) as u8 as f64,
            OccurrenceMode::PerDataset => {
                if corpus.is_empty() {
                    0.0
                } else {
                    corpus.iter().filter(|d| occurs_in(t, d)).count() as f64 / corpus.len() as f64
                }
            }
        }
    };

    let scores: Vec<(KTupleClass, f64)> = tuples
        .par_iter()
        .map(|t| (t.class, score(t)))
        .collect();

    let mut private_sum = 0.0;
    let mut private_n = 0usize;
    let mut fictitious_sum = 0.0;
    let mut fictitious_n = 0usize;
    for (class, s) in scores {
        match class {
            KTupleClass::Private => {
                private_sum += s;
                private_n += 1;
            }
            KTupleClass::Fictitious => {
                fictitious_sum += s;
                fictitious_n += 1;
            }
            KTupleClass::Common => {}
        }
    }
    Ok(RevelationReport {
        private_rate: if private_n > 0 { private_sum / private_n as f64 } else { 0.0 },
        fictitious_rate: if fictitious_n > 0 {
            fictitious_sum / fictitious_n as f64
        } else {
            0.0
        },
        private_sampled: private_n,
        fictitious_sampled: fictitious_n,
        corpus_datasets: corpus.len(),
        corpus_records: corpus.iter().map(|d| d.samples()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hapdata::toy_cohort;

    #[test]
    fn frontier_three_four_five() {
        assert_eq!(frontier_distance(0.0, 0.0), 0.0);
        assert!((frontier_distance(0.3, 0.4) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn frontier_regression_value() {
        let d = frontier_distance(0.204968944099379, 0.0347826086956522);
        assert!((d - 0.207899249428393).abs() <= 1e-12, "distance {d}");
    }

    #[test]
    fn single_position_private_tuple() {
        // Token C at site 1 is carried only by sample 2.
        let m = toy_cohort();
        let c = m.token_id("C").unwrap();
        assert_eq!(classify(&m, &[0], &[c]), KTupleClass::Private);
        // Token A at site 1 is carried by three samples.
        let a = m.token_id("A").unwrap();
        assert_eq!(classify(&m, &[0], &[a]), KTupleClass::Common);
    }

    #[test]
    fn absent_token_makes_tuples_fictitious() {
        let m = toy_cohort();
        // G never occurs at site 1.
        let g = m.token_id("G").unwrap();
        let a = m.token_id("A").unwrap();
        assert_eq!(classify(&m, &[0, 1], &[g, a]), KTupleClass::Fictitious);
    }

    #[test]
    fn sampler_respects_class_and_determinism() {
        let m = toy_cohort();
        let a = sample_ktuples(&m, 2, KTupleClass::Private, 5, 9).unwrap();
        assert!(a.complete);
        for t in &a.tuples {
            assert_eq!(classify(&m, &t.positions, &t.tokens), KTupleClass::Private);
        }
        let b = sample_ktuples(&m, 2, KTupleClass::Private, 5, 9).unwrap();
        assert_eq!(a.tuples, b.tuples);
    }

    #[test]
    fn classification_agrees_with_independent_scan() {
        // Second implementation of the match predicate: iterate samples,
        // build the sample's tuple values, compare.
        let m = toy_cohort();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let k = rng.gen_range(1..=3);
            let mut positions: Vec<usize> = (0..m.sites()).collect();
            let (chosen, _) = positions.partial_shuffle(&mut rng, k);
            let mut positions = chosen.to_vec();
            positions.sort_unstable();
            let tokens: Vec<TokenId> = positions
                .iter()
                .map(|&j| {
                    let decl = m.site_decl(j);
                    decl[rng.gen_range(0..decl.len())]
                })
                .collect();
            let mut holders = 0;
            for s in 0..m.samples() {
                let sample_tuple: Vec<TokenId> =
                    positions.iter().map(|&j| m.cell(j, s)).collect();
                if sample_tuple == tokens {
                    holders += 1;
                }
            }
            let expected = match holders {
                0 => KTupleClass::Fictitious,
                1 => KTupleClass::Private,
                _ => KTupleClass::Common,
            };
            assert_eq!(classify(&m, &positions, &tokens), expected);
        }
    }

    #[test]
    fn revelation_on_cohort_copies_is_total() {
        let m = toy_cohort();
        let tuples = sample_ktuples(&m, 2, KTupleClass::Private, 4, 1)
            .unwrap()
            .tuples;
        let corpus = vec![m.clone(), m.clone()];
        let report = revelation_rates(&m, &tuples, &corpus, OccurrenceMode::Pooled).unwrap();
        assert_eq!(report.private_rate, 1.0);
    }

    #[test]
    fn empty_corpus_reveals_nothing() {
        let m = toy_cohort();
        let tuples = sample_ktuples(&m, 2, KTupleClass::Private, 3, 1)
            .unwrap()
            .tuples;
        let report = revelation_rates(&m, &tuples, &[], OccurrenceMode::Pooled).unwrap();
        assert_eq!(report.private_rate, 0.0);
        assert_eq!(report.fictitious_rate, 0.0);
    }

    #[test]
    fn revelation_is_monotone_in_corpus() {
        let m = toy_cohort();
        let mut tuples = sample_ktuples(&m, 2, KTupleClass::Private, 4, 2)
            .unwrap()
            .tuples;
        tuples.extend(
            sample_ktuples(&m, 2, KTupleClass::Fictitious, 4, 3)
                .unwrap()
                .tuples,
        );
        let one = vec![m.select_samples(&[0, 1]).unwrap()];
        let two = vec![m.select_samples(&[0, 1]).unwrap(), m.clone()];
        let r1 = revelation_rates(&m, &tuples, &one, OccurrenceMode::Pooled).unwrap();
        let r2 = revelation_rates(&m, &tuples, &two, OccurrenceMode::Pooled).unwrap();
        assert!(r2.private_rate >= r1.private_rate);
        assert!(r2.fictitious_rate >= r1.fictitious_rate);
    }

    #[test]
    fn medians_match_spreadsheet_oracle() {
        // Six targets with synthetic sets fixed by hand.
        let cohort = AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into()],
            (0..6).map(|i| format!("t{i}")).collect(),
            &[
                vec!["A", "A", "T", "T", "A", "T"],
                vec!["A", "T", "T", "A", "A", "T"],
            ],
        )
        .unwrap();
        // First half: targets 0..3.
        let in_first = [true, true, true, false, false, false];
        let synth_first = AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into()],
            vec!["r0".into()],
            &[vec!["A"], vec!["A"]],
        )
        .unwrap();
        let synth_second = AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into()],
            vec!["r0".into(), "r1".into()],
            &[vec!["T", "A"], vec!["T", "T"]],
        )
        .unwrap();
        let report = attr_inference_distances(
            &cohort,
            &in_first,
            &synth_first,
            &synth_second,
            String::new(),
        )
        .unwrap();
        // Hand-computed per target: in = [0, .5, 1, .5, .5, 0] (median .5),
        // out = [.5, 0, 0, .5, 0, 1] (median .25), difference -.25.
        assert!((report.in_distance - 0.5).abs() < 1e-12);
        assert!((report.out_distance - 0.25).abs() < 1e-12);
        assert!((report.difference + 0.25).abs() < 1e-12);
    }

    #[test]
    fn identical_synthetic_sets_have_zero_difference() {
        let m = toy_cohort();
        let synth = m.select_samples(&[0, 1]).unwrap();
        let report = attr_inference_distances(
            &m,
            &[true, true, true, false, false],
            &synth,
            &synth,
            String::new(),
        )
        .unwrap();
        assert_eq!(report.difference, 0.0);
    }
}
