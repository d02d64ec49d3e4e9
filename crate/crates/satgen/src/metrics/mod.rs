//! Accuracy metrics: allele frequencies, pairwise r² linkage error, PCA and
//! sliced Wasserstein distance between cohorts.

mod pca;
mod wasserstein;

pub use pca::{pca_fit, pca_project, PcaModel};
pub use wasserstein::{sliced_wasserstein, WassersteinReport};

use crate::error::{Error, Result};
use crate::hapdata::{AlleleMatrix, TokenId};

/// Fraction of samples carrying `token` at `site`.
pub fn allele_frequency(matrix: &AlleleMatrix, site: usize, token: &str) -> Result<f64> {
    let id = matrix.token_id(token).ok_or_else(|| Error::UnknownToken {
        site,
        token: token.to_string(),
    })?;
    let m = matrix.samples();
    let count = (0..m).filter(|&i| matrix.cell(site, i) == id).count();
    Ok(count as f64 / m as f64)
}

/// Per-site 0/1 dosage: 1 for the site's least frequent observed token
/// ("minor vs rest" binarisation), `None` when the site has no variation.
pub fn dosage_column(matrix: &AlleleMatrix, site: usize) -> Option<Vec<f64>> {
    let m = matrix.samples();
    let mut counts: Vec<(TokenId, usize)> = Vec::new();
    for i in 0..m {
        let t = matrix.cell(site, i);
        match counts.iter_mut().find(|(tok, _)| *tok == t) {
            Some((_, c)) => *c += 1,
            None => counts.push((t, 1)),
        }
    }
    if counts.len() < 2 {
        return None;
    }
    let minor = counts
        .iter()
        .min_by_key(|&&(tok, c)| (c, tok))
        .map(|&(tok, _)| tok)
        .unwrap();
    Some(
        (0..m)
            .map(|i| if matrix.cell(site, i) == minor { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// All dosage columns at once.
pub fn dosage_columns(matrix: &AlleleMatrix) -> Vec<Option<Vec<f64>>> {
    (0..matrix.sites()).map(|j| dosage_column(matrix, j)).collect()
}

/// Samples as real-valued points (sites are coordinates); zero-variance
/// sites contribute a constant zero coordinate.
pub fn dosage_rows(matrix: &AlleleMatrix) -> Vec<Vec<f64>> {
    let cols = dosage_columns(matrix);
    (0..matrix.samples())
        .map(|i| {
            cols.iter()
                .map(|c| c.as_ref().map_or(0.0, |v| v[i]))
                .collect()
        })
        .collect()
}

fn r2_of(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov * cov / (vx * vy))
}

/// Squared Pearson correlation of the two sites' dosage vectors (the
/// haploid composite-r form). `None` when either site is monomorphic.
pub fn ld_r2(matrix: &AlleleMatrix, site_a: usize, site_b: usize) -> Option<f64> {
    let a = dosage_column(matrix, site_a)?;
    let b = dosage_column(matrix, site_b)?;
    r2_of(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdMode {
    /// Pair errors grouped by index distance (unit-width bins), averaged
    /// within bins and then across bins, giving distances equal weight.
    Binned,
    /// Mean over all pairs inside each length-w sliding window, averaged
    /// over window positions.
    Windowed(usize),
}

#[derive(Debug, Clone)]
pub struct LdReport {
    pub mode: LdMode,
    /// Per-bin (distance, mean square error, pairs) or per-window summary.
    pub groups: Vec<(usize, f64, usize)>,
    pub overall: f64,
    /// Mean r² of the reference matrix over the compared pairs.
    pub reference_mean_ld: f64,
    /// `overall` as a percentage of the reference mean LD.
    pub percent_of_reference: f64,
    pub compared_pairs: usize,
    pub skipped_pairs: usize,
}

/// Square error of LD reproduction between a reference and a synthetic
/// matrix over matched sites. Pairs touching a monomorphic site in either
/// matrix are skipped as undefined.
pub fn ld_square_error(
    reference: &AlleleMatrix,
    synthetic: &AlleleMatrix,
    mode: LdMode,
) -> Result<LdReport> {
    if reference.sites() != synthetic.sites() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} sites, synthetic has {}",
            reference.sites(),
            synthetic.sites()
        )));
    }
    let s = reference.sites();
    let ref_cols = dosage_columns(reference);
    let syn_cols = dosage_columns(synthetic);

    let pair_values = |a: usize, b: usize| -> Option<(f64, f64)> {
        let ra = ref_cols[a].as_ref()?;
        let rb = ref_cols[b].as_ref()?;
        let sa = syn_cols[a].as_ref()?;
        let sb = syn_cols[b].as_ref()?;
        Some((r2_of(ra, rb)?, r2_of(sa, sb)?))
    };

    let mut compared = 0usize;
    let mut skipped = 0usize;
    let mut ref_sum = 0.0f64;
    let mut groups: Vec<(usize, f64, usize)> = Vec::new();

    match mode {
        LdMode::Binned => {
            let mut bin_sum = vec![0.0f64; s];
            let mut bin_count = vec![0usize; s];
            for a in 0..s {
                for b in (a + 1)..s {
                    match pair_values(a, b) {
                        Some((r_ref, r_syn)) => {
                            let d = b - a;
                            bin_sum[d] += (r_syn - r_ref) * (r_syn - r_ref);
                            bin_count[d] += 1;
                            ref_sum += r_ref;
                            compared += 1;
                        }
                        None => skipped += 1,
                    }
                }
            }
            for d in 1..s {
                if bin_count[d] > 0 {
                    groups.push((d, bin_sum[d] / bin_count[d] as f64, bin_count[d]));
                }
            }
        }
        LdMode::Windowed(w) => {
            if w < 2 {
                return Err(Error::InvalidParams("window must span at least 2 sites".into()));
            }
            let w = w.min(s);
            let mut seen = std::collections::HashSet::new();
            for start in 0..=(s - w) {
                let mut sum = 0.0f64;
                let mut count = 0usize;
                for a in start..start + w {
                    for b in (a + 1)..start + w {
                        match pair_values(a, b) {
                            Some((r_ref, r_syn)) => {
                                sum += (r_syn - r_ref) * (r_syn - r_ref);
                                count += 1;
                                if seen.insert((a, b)) {
                                    ref_sum += r_ref;
                                    compared += 1;
                                }
                            }
                            None => {
                                if seen.insert((a, b)) {
                                    skipped += 1;
                                }
                            }
                        }
                    }
                }
                if count > 0 {
                    groups.push((start, sum / count as f64, count));
                }
            }
        }
    }

    let overall = if groups.is_empty() {
        0.0
    } else {
        groups.iter().map(|&(_, e, _)| e).sum::<f64>() / groups.len() as f64
    };
    let reference_mean_ld = if compared > 0 {
        ref_sum / compared as f64
    } else {
        0.0
    };
    let percent_of_reference = if reference_mean_ld > 0.0 {
        overall / reference_mean_ld * 100.0
    } else {
        0.0
    };
    Ok(LdReport {
        mode,
        groups,
        overall,
        reference_mean_ld,
        percent_of_reference,
        compared_pairs: compared,
        skipped_pairs: skipped,
    })
}
