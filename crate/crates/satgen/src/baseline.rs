//! Markov-chain baseline: position-indexed conditional tables over the
//! previous `w - 1` tokens, with longest-suffix back-off and a small
//! smoothing epsilon.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generator::{Provenance, SyntheticRecord};
use crate::hapdata::{AlleleMatrix, TokenId};
use crate::seed::derive;

const SMOOTHING_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MarkovModel {
    window: usize,
    sites: usize,
    /// `tables[site][context_len]` maps an observed site-ordered prefix of
    /// that length to per-token counts.
    tables: Vec<Vec<HashMap<Vec<TokenId>, Vec<u64>>>>,
}

impl MarkovModel {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Conditional distribution (after smoothing) for a site given a
    /// context length and prefix, if that prefix was observed.
    pub fn conditional(
        &self,
        site: usize,
        context: &[TokenId],
    ) -> Option<Vec<f64>> {
        let counts = self.tables[site][context.len()].get(context)?;
        let total: f64 =
            counts.iter().map(|&c| c as f64 + SMOOTHING_EPS).sum();
        Some(counts.iter().map(|&c| (c as f64 + SMOOTHING_EPS) / total).collect())
    }

    pub fn raw_counts(&self, site: usize, context: &[TokenId]) -> Option<&Vec<u64>> {
        self.tables[site][context.len()].get(context)
    }
}

/// Tally conditional counts from the cohort. `w = 1` degenerates to
/// per-site marginals.
pub fn markov_fit(matrix: &AlleleMatrix, window: usize) -> Result<MarkovModel> {
    if window == 0 {
        return Err(Error::InvalidParams("window must be at least 1".into()));
    }
    let sites = matrix.sites();
    let vocab_len = matrix.vocab_len();
    #[allow(clippy::type_complexity)]
    let mut tables: Vec<Vec<HashMap<Vec<TokenId>, Vec<u64>>>> = (0..sites)
        .map(|j| vec![HashMap::new(); (window - 1).min(j) + 1])
        .collect();

    for i in 0..matrix.samples() {
        let column = matrix.column(i);
        for j in 0..sites {
            let token = column[j].index();
            let max_len = (window - 1).min(j);
            for len in 0..=max_len {
                let context = column[j - len..j].to_vec();
                let counts = tables[j][len]
                    .entry(context)
                    .or_insert_with(|| vec![0; vocab_len]);
                counts[token] += 1;
            }
        }
    }
    Ok(MarkovModel {
        window,
        sites,
        tables,
    })
}

/// Sequential left-to-right sampling; an unseen context backs off to the
/// longest observed suffix, ultimately the site marginal.
pub fn markov_generate(
    model: &MarkovModel,
    count: usize,
    seed: u64,
) -> Result<Vec<SyntheticRecord>> {
    if count == 0 {
        return Err(Error::InvalidParams("record count must be at least 1".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let record_seed = derive(seed, "markov-record", i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(record_seed);
            let mut tokens: Vec<TokenId> = Vec::with_capacity(model.sites);
            for j in 0..model.sites {
                let max_len = (model.window - 1).min(j);
                let mut drawn = None;
                for len in (0..=max_len).rev() {
                    let context = &tokens[j - len..j];
                    if let Some(probs) = model.conditional(j, context) {
                        drawn = Some(sample_index(&mut rng, &probs));
                        break;
                    }
                }
                // Length-0 context always exists.
                let v = drawn.expect("site marginal must be present");
                tokens.push(TokenId(v as u32));
            }
            Ok(SyntheticRecord {
                tokens,
                provenance: Provenance {
                    cluster: None,
                    seed: record_seed,
                    params: format!("method=markov window={}", model.window),
                },
            })
        })
        .collect()
}

fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        u -= p;
        if u <= 0.0 {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hapdata::toy_cohort;
    use crate::metrics::allele_frequency;

    #[test]
    fn window_one_is_the_marginal_table() {
        let m = toy_cohort();
        let model = markov_fit(&m, 1).unwrap();
        let probs = model.conditional(0, &[]).unwrap();
        // Site 1 is A,T,C,A,A: vocabulary order is A,T,G,C.
        let a = m.token_id("A").unwrap().index();
        assert!((probs[a] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn identical_cohort_gives_point_masses() {
        let m = AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into()],
            vec!["a".into(), "b".into()],
            &[vec!["A", "A"], vec!["T", "T"]],
        )
        .unwrap();
        let model = markov_fit(&m, 2).unwrap();
        let records = markov_generate(&model, 4, 3).unwrap();
        for r in records {
            assert_eq!(r.tokens, m.column(0));
        }
    }

    #[test]
    fn conditional_counts_match_hand_tally() {
        // Three sites, four samples; check the count table for site 2
        // given the previous token.
        let m = AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into(), "s3".into()],
            (0..4).map(|i| format!("h{i}")).collect(),
            &[
                vec!["A", "A", "T", "T"],
                vec!["A", "T", "T", "T"],
                vec!["G", "G", "C", "G"],
            ],
        )
        .unwrap();
        let model = markov_fit(&m, 2).unwrap();
        let a = m.token_id("A").unwrap();
        let t = m.token_id("T").unwrap();
        // After A at site 1: site-2 tokens were A (once) and T (once).
        let counts = model.raw_counts(1, &[a]).unwrap();
        assert_eq!(counts[a.index()], 1);
        assert_eq!(counts[t.index()], 1);
        // After T at site 1: site-2 tokens were T twice.
        let counts = model.raw_counts(1, &[t]).unwrap();
        assert_eq!(counts[t.index()], 2);
        assert_eq!(counts[a.index()], 0);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let m = toy_cohort();
        let model = markov_fit(&m, 3).unwrap();
        let a = markov_generate(&model, 6, 11).unwrap();
        let b = markov_generate(&model, 6, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_one_output_frequencies_converge_to_marginals() {
        let m = toy_cohort();
        let model = markov_fit(&m, 1).unwrap();
        let records = markov_generate(&model, 10_000, 5).unwrap();
        let synth = crate::generator::records_to_matrix(&m, &records, "r").unwrap();
        for j in 0..m.sites() {
            for tok in ["A", "T", "G", "C"] {
                let train = allele_frequency(&m, j, tok).unwrap();
                let out = allele_frequency(&synth, j, tok).unwrap_or(0.0);
                assert!(
                    (train - out).abs() <= 0.05,
                    "site {j} token {tok}: train {train} vs out {out}"
                );
            }
        }
    }
}
