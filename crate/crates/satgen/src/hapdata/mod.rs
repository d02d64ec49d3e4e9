//! Cohort data model: a site × sample matrix of categorical allele tokens,
//! plus file formats, Hamming geometry and overlapping cluster construction.

mod cluster;
mod hap;
mod vcf;

use std::collections::HashMap;

pub use cluster::{build_clusters, split_cohort, ClusterPlan};

use crate::error::{Error, Result};

/// Interned token: an index into the matrix's global vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub(crate) u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Rebuild an id from a vocabulary index. Only meaningful for the
    /// matrix whose vocabulary produced the index.
    #[inline]
    pub fn from_index(index: usize) -> TokenId {
        TokenId(index as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Hap,
    Vcf,
}

/// The cohort: `S` sites × `M` samples of categorical tokens.
///
/// Tokens are interned into one global vocabulary shared by all sites; the
/// per-site declared allele list (`site_decl`) records file-format ordering
/// (REF first for VCF, first appearance for HAP). Immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct AlleleMatrix {
    site_ids: Vec<String>,
    sample_ids: Vec<String>,
    vocab: Vec<String>,
    vocab_index: HashMap<String, u32>,
    site_decls: Vec<Vec<TokenId>>,
    /// Site-major: `cells[site * samples + sample]`.
    cells: Vec<TokenId>,
}

pub(crate) fn valid_token(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '*' | '-'))
}

impl AlleleMatrix {
    /// Build from token rows (one row per site). Vocabulary and per-site
    /// declarations are derived from first appearance.
    pub fn from_rows<S: AsRef<str>>(
        site_ids: Vec<String>,
        sample_ids: Vec<String>,
        rows: &[Vec<S>],
    ) -> Result<AlleleMatrix> {
        let decls: Vec<Vec<String>> = rows
            .iter()
            .map(|row| {
                let mut decl: Vec<String> = Vec::new();
                for tok in row {
                    if !decl.iter().any(|d| d == tok.as_ref()) {
                        decl.push(tok.as_ref().to_string());
                    }
                }
                decl
            })
            .collect();
        Self::from_parts(site_ids, sample_ids, decls, rows)
    }

    /// Build from explicit per-site declarations (e.g. VCF REF/ALT order).
    /// Every cell must be one of its site's declared tokens.
    pub fn from_parts<S: AsRef<str>>(
        site_ids: Vec<String>,
        sample_ids: Vec<String>,
        decls: Vec<Vec<String>>,
        rows: &[Vec<S>],
    ) -> Result<AlleleMatrix> {
        let s = site_ids.len();
        let m = sample_ids.len();
        if s == 0 || m == 0 {
            return Err(Error::InvalidParams(
                "matrix needs at least one site and one sample".into(),
            ));
        }
        if rows.len() != s || decls.len() != s {
            return Err(Error::DimensionMismatch(format!(
                "expected {s} site rows, got {} rows and {} declarations",
                rows.len(),
                decls.len()
            )));
        }
        for id in site_ids.iter().chain(sample_ids.iter()) {
            if !valid_token(id) {
                return Err(Error::InvalidParams(format!("invalid identifier `{id}`")));
            }
        }

        let mut vocab: Vec<String> = Vec::new();
        let mut vocab_index: HashMap<String, u32> = HashMap::new();
        let intern = |tok: &str, vocab: &mut Vec<String>, index: &mut HashMap<String, u32>| {
            if let Some(&id) = index.get(tok) {
                TokenId(id)
            } else {
                let id = vocab.len() as u32;
                vocab.push(tok.to_string());
                index.insert(tok.to_string(), id);
                TokenId(id)
            }
        };

        let mut site_decls: Vec<Vec<TokenId>> = Vec::with_capacity(s);
        for (j, decl) in decls.iter().enumerate() {
            if decl.is_empty() {
                return Err(Error::InvalidParams(format!(
                    "site {} declares no alleles",
                    site_ids[j]
                )));
            }
            let mut ids = Vec::with_capacity(decl.len());
            for tok in decl {
                if !valid_token(tok) {
                    return Err(Error::InvalidParams(format!("invalid token `{tok}`")));
                }
                let id = intern(tok, &mut vocab, &mut vocab_index);
                if ids.contains(&id) {
                    return Err(Error::InvalidParams(format!(
                        "site {} declares duplicate allele `{tok}`",
                        site_ids[j]
                    )));
                }
                ids.push(id);
            }
            site_decls.push(ids);
        }

        let mut cells = Vec::with_capacity(s * m);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "site {} has {} cells, expected {m}",
                    site_ids[j],
                    row.len()
                )));
            }
            for tok in row {
                let tok = tok.as_ref();
                let id = match vocab_index.get(tok) {
                    Some(&id) if site_decls[j].contains(&TokenId(id)) => TokenId(id),
                    _ => {
                        return Err(Error::UnknownToken {
                            site: j,
                            token: tok.to_string(),
                        })
                    }
                };
                cells.push(id);
            }
        }

        Ok(AlleleMatrix {
            site_ids,
            sample_ids,
            vocab,
            vocab_index,
            site_decls,
            cells,
        })
    }

    pub fn sites(&self) -> usize {
        self.site_ids.len()
    }

    pub fn samples(&self) -> usize {
        self.sample_ids.len()
    }

    #[inline]
    pub fn cell(&self, site: usize, sample: usize) -> TokenId {
        self.cells[site * self.samples() + sample]
    }

    pub fn cell_token(&self, site: usize, sample: usize) -> &str {
        &self.vocab[self.cell(site, sample).0 as usize]
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.vocab[id.0 as usize]
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.vocab_index.get(token).map(|&i| TokenId(i))
    }

    pub fn site_ids(&self) -> &[String] {
        &self.site_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Declared alleles of one site, in file order.
    pub fn site_decl(&self, site: usize) -> &[TokenId] {
        &self.site_decls[site]
    }

    /// One sample's tokens across all sites.
    pub fn column(&self, sample: usize) -> Vec<TokenId> {
        (0..self.sites()).map(|j| self.cell(j, sample)).collect()
    }

    /// Number of sites at which two sample columns differ.
    ///
    /// Panics if an index is out of range.
    pub fn hamming(&self, a: usize, b: usize) -> usize {
        assert!(
            a < self.samples() && b < self.samples(),
            "sample index out of range"
        );
        (0..self.sites())
            .filter(|&j| self.cell(j, a) != self.cell(j, b))
            .count()
    }

    /// New matrix keeping only the first `count` sites.
    pub fn select_sites(&self, count: usize) -> Result<AlleleMatrix> {
        let count = count.min(self.sites());
        let rows: Vec<Vec<&str>> = (0..count)
            .map(|j| (0..self.samples()).map(|i| self.cell_token(j, i)).collect())
            .collect();
        AlleleMatrix::from_rows(
            self.site_ids[..count].to_vec(),
            self.sample_ids.clone(),
            &rows,
        )
    }

    /// New matrix keeping only the given sample columns (canonically
    /// re-interned, so declarations shrink to what the subset carries).
    pub fn select_samples(&self, indices: &[usize]) -> Result<AlleleMatrix> {
        let sample_ids: Vec<String> = indices
            .iter()
            .map(|&i| self.sample_ids[i].clone())
            .collect();
        let rows: Vec<Vec<&str>> = (0..self.sites())
            .map(|j| indices.iter().map(|&i| self.cell_token(j, i)).collect())
            .collect();
        AlleleMatrix::from_rows(self.site_ids.clone(), sample_ids, &rows)
    }
}

/// Semantic equality: identical labels, declarations and cell tokens,
/// regardless of interning order.
impl PartialEq for AlleleMatrix {
    fn eq(&self, other: &AlleleMatrix) -> bool {
        self.site_ids == other.site_ids
            && self.sample_ids == other.sample_ids
            && self
                .site_decls
                .iter()
                .zip(&other.site_decls)
                .all(|(a, b)| {
                    a.len() == b.len()
                        && a.iter()
                            .zip(b)
                            .all(|(&x, &y)| self.token(x) == other.token(y))
                })
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(&x, &y)| self.token(x) == other.token(y))
    }
}

impl Eq for AlleleMatrix {}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<AlleleMatrix> {
    match format {
        MatrixFormat::Hap => hap::parse(text),
        MatrixFormat::Vcf => vcf::parse(text),
    }
}

pub fn write_matrix(matrix: &AlleleMatrix, format: MatrixFormat) -> Result<String> {
    match format {
        MatrixFormat::Hap => Ok(hap::write(matrix)),
        MatrixFormat::Vcf => vcf::write(matrix),
    }
}

#[cfg(test)]
pub(crate) fn toy_cohort() -> AlleleMatrix {
    // Five sites, five samples; the standard worked example used across
    // module tests.
    AlleleMatrix::from_rows(
        (1..=5).map(|i| format!("site{i}")).collect(),
        (0..5).map(|i| format!("p{i}")).collect(),
        &[
            vec!["A", "T", "C", "A", "A"],
            vec!["T", "G", "A", "T", "T"],
            vec!["G", "C", "T", "G", "C"],
            vec!["C", "A", "G", "C", "G"],
            vec!["T", "G", "G", "G", "T"],
        ],
    )
    .unwrap()
}
