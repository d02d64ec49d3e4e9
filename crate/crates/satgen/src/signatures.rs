//! Query signatures and their variable mapping.
//!
//! For a cluster of `N` member columns, every query "does the member carry
//! token `v` at site `j`?" (and its negation) yields a length-`N` bit
//! vector — a *signature*. Signatures are deduplicated and sorted
//! lexicographically; because the set is closed under complement and
//! complementation reverses lexicographic order, the complement of the
//! signature at index `i` sits at index `2n - 1 - i`. The first half maps
//! to variables `x1..xn` and the mirrored second half to their negations,
//! so inverted queries automatically receive inverted literals.

use std::collections::HashMap;

use satcore::{Lit, Var};

use crate::hapdata::{AlleleMatrix, TokenId};

/// A bit vector over cluster members (bit i = member i satisfies the query).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    blocks: Vec<u64>,
    len: usize,
}

impl Signature {
    pub fn zeroed(len: usize) -> Signature {
        Signature {
            blocks: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    fn tail_mask(&self) -> u64 {
        match self.len % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    pub fn complement(&self) -> Signature {
        let mut blocks: Vec<u64> = self.blocks.iter().map(|&b| !b).collect();
        if let Some(last) = blocks.last_mut() {
            *last &= self.tail_mask();
        }
        Signature {
            blocks,
            len: self.len,
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Positions where both signatures are false.
    pub fn ff_count(&self, other: &Signature) -> usize {
        debug_assert_eq!(self.len, other.len);
        let mask = self.tail_mask();
        let mut total = 0usize;
        for (i, (&a, &b)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            let mut ff = !a & !b;
            if i + 1 == self.blocks.len() {
                ff &= mask;
            }
            total += ff.count_ones() as usize;
        }
        total
    }

    /// Bitwise AND of the set positions of both signatures.
    pub fn intersection(&self, other: &Signature) -> Signature {
        debug_assert_eq!(self.len, other.len);
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(&a, &b)| a & b)
            .collect();
        Signature {
            blocks,
            len: self.len,
        }
    }

    /// Bitwise AND of the false positions of both signatures.
    pub fn ff_intersection(&self, other: &Signature) -> Signature {
        debug_assert_eq!(self.len, other.len);
        let mask = self.tail_mask();
        let n = self.blocks.len();
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .enumerate()
            .map(|(i, (&a, &b))| {
                let mut ff = !a & !b;
                if i + 1 == n {
                    ff &= mask;
                }
                ff
            })
            .collect();
        Signature {
            blocks,
            len: self.len,
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// True if `self`'s set bits are a subset of `other`'s.
    pub fn is_subset_of(&self, other: &Signature) -> bool {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .all(|(&a, &b)| a & !b == 0)
    }
}

/// Lexicographic order with position 0 most significant, so that
/// complementation reverses the order.
impl Ord for Signature {
    fn cmp(&self, other: &Signature) -> std::cmp::Ordering {
        for (&a, &b) in self.blocks.iter().zip(&other.blocks) {
            let ord = a.reverse_bits().cmp(&b.reverse_bits());
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for Signature {
    fn partial_cmp(&self, other: &Signature) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "T" } else { "F" })?;
        }
        Ok(())
    }
}

/// Sorted unique signatures of a cluster with their literal mapping and the
/// per-site positive-query groups.
pub struct SignatureTable {
    sigs: Vec<Signature>,
    index: HashMap<Vec<u64>, u32>,
    n: usize,
    /// `pos_query[site * vocab_len + v]` = signature index of the positive
    /// query (site, token v).
    pos_query: Vec<u32>,
    vocab_len: usize,
    sites: usize,
    members: Vec<usize>,
}

impl SignatureTable {
    /// Number of boolean variables (half the unique signature count).
    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_signatures(&self) -> usize {
        self.sigs.len()
    }

    pub fn signature(&self, idx: usize) -> &Signature {
        &self.sigs[idx]
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.sigs
    }

    /// Cluster member columns after duplicate-column removal, in cluster
    /// order; signature bit i refers to `members()[i]`.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab_len
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// The literal associated with the signature at `idx`: `x_{idx+1}` in
    /// the first half, the mirrored negation in the second.
    pub fn lit_of(&self, idx: usize) -> Lit {
        if idx < self.n {
            Lit::positive(Var::new(idx as u32 + 1))
        } else {
            Lit::negative(Var::new((2 * self.n - idx) as u32))
        }
    }

    pub fn index_of(&self, sig: &Signature) -> Option<usize> {
        self.index.get(sig.blocks()).map(|&i| i as usize)
    }

    pub fn lit_of_signature(&self, sig: &Signature) -> Option<Lit> {
        self.index_of(sig).map(|i| self.lit_of(i))
    }

    /// Signature index of the positive query (site, token).
    pub fn pos_query_index(&self, site: usize, token: TokenId) -> usize {
        self.pos_query[site * self.vocab_len + token.index()] as usize
    }

    pub fn pos_query_signature(&self, site: usize, token: TokenId) -> &Signature {
        &self.sigs[self.pos_query_index(site, token)]
    }

    /// Literal answering the positive query (site, token).
    pub fn pos_query_lit(&self, site: usize, token: TokenId) -> Lit {
        self.lit_of(self.pos_query_index(site, token))
    }

    /// Literal answering the negative query: the negation of the positive.
    pub fn neg_query_lit(&self, site: usize, token: TokenId) -> Lit {
        !self.pos_query_lit(site, token)
    }
}

/// Build the signature table for the given member columns. Duplicate member
/// columns are collapsed first; queries range over the matrix's whole token
/// vocabulary at every site, for both polarities.
pub fn build_signatures(matrix: &AlleleMatrix, members: &[usize]) -> SignatureTable {
    assert!(!members.is_empty(), "cluster must have at least one member");
    let members = dedup_columns(matrix, members);
    let sites = matrix.sites();
    let vocab_len = matrix.vocab_len();

    let mut all: Vec<Signature> = Vec::with_capacity(2 * sites * vocab_len.min(64));
    let mut scratch: Vec<Signature> = Vec::new();
    for j in 0..sites {
        site_positive_signatures(matrix, &members, j, &mut scratch);
        for sig in &scratch {
            all.push(sig.complement());
            all.push(sig.clone());
        }
    }
    all.sort_unstable();
    all.dedup();

    debug_assert!(all.len() % 2 == 0);
    let n = all.len() / 2;
    for i in 0..n {
        assert_eq!(
            all[2 * n - 1 - i],
            all[i].complement(),
            "signature set lost complement closure"
        );
    }

    let index: HashMap<Vec<u64>, u32> = all
        .iter()
        .enumerate()
        .map(|(i, s)| (s.blocks().to_vec(), i as u32))
        .collect();

    let mut pos_query = Vec::with_capacity(sites * vocab_len);
    for j in 0..sites {
        site_positive_signatures(matrix, &members, j, &mut scratch);
        for sig in &scratch {
            pos_query.push(index[sig.blocks()]);
        }
    }

    SignatureTable {
        sigs: all,
        index,
        n,
        pos_query,
        vocab_len,
        sites,
        members,
    }
}

/// Positive-query signatures of one site, one per vocabulary token, written
/// into `out` (reused across calls).
fn site_positive_signatures(
    matrix: &AlleleMatrix,
    members: &[usize],
    site: usize,
    out: &mut Vec<Signature>,
) {
    let vocab_len = matrix.vocab_len();
    out.clear();
    out.resize(vocab_len, Signature::zeroed(members.len()));
    for sig in out.iter_mut() {
        *sig = Signature::zeroed(members.len());
    }
    for (i, &col) in members.iter().enumerate() {
        out[matrix.cell(site, col).index()].set(i);
    }
}

/// Keep the first occurrence of each distinct column, preserving order.
fn dedup_columns(matrix: &AlleleMatrix, members: &[usize]) -> Vec<usize> {
    let mut seen: HashMap<Vec<TokenId>, ()> = HashMap::with_capacity(members.len());
    let mut kept = Vec::with_capacity(members.len());
    for &i in members {
        let col = matrix.column(i);
        if seen.insert(col, ()).is_none() {
            kept.push(i);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hapdata::toy_cohort;

    fn sig_str(s: &str) -> Signature {
        let mut sig = Signature::zeroed(s.len());
        for (i, c) in s.chars().enumerate() {
            if c == 'T' {
                sig.set(i);
            }
        }
        sig
    }

    #[test]
    fn worked_example_query_signature() {
        let m = toy_cohort();
        let table = build_signatures(&m, &[0, 1, 2, 3, 4]);
        let a = m.token_id("A").unwrap();
        assert_eq!(table.pos_query_signature(0, a).to_string(), "TFFTT");
    }

    #[test]
    fn worked_example_counts_and_mapping() {
        let m = toy_cohort();
        let table = build_signatures(&m, &[0, 1, 2, 3, 4]);
        assert_eq!(table.num_signatures(), 16);
        assert_eq!(table.num_vars(), 8);
        // All-false -> x1, all-true -> -x1, FFTFF -> x2.
        assert_eq!(
            table.lit_of_signature(&sig_str("FFFFF")).unwrap(),
            Lit::positive(Var::new(1))
        );
        assert_eq!(
            table.lit_of_signature(&sig_str("TTTTT")).unwrap(),
            Lit::negative(Var::new(1))
        );
        assert_eq!(
            table.lit_of_signature(&sig_str("FFTFF")).unwrap(),
            Lit::positive(Var::new(2))
        );
        // The A-at-site-1 query is answered by -x6.
        let a = m.token_id("A").unwrap();
        assert_eq!(table.pos_query_lit(0, a), Lit::negative(Var::new(6)));
    }

    #[test]
    fn complements_map_to_negated_literals() {
        let m = toy_cohort();
        let table = build_signatures(&m, &[0, 1, 2, 3, 4]);
        for i in 0..table.num_signatures() {
            let sig = table.signature(i).clone();
            let lit = table.lit_of(i);
            assert_eq!(table.lit_of_signature(&sig.complement()).unwrap(), !lit);
        }
    }

    #[test]
    fn sorted_complement_index_pairing() {
        let m = toy_cohort();
        let table = build_signatures(&m, &[0, 1, 2, 3, 4]);
        let total = table.num_signatures();
        for i in 0..total {
            let comp = table.signature(i).complement();
            assert_eq!(table.index_of(&comp).unwrap(), total - 1 - i);
        }
    }

    #[test]
    fn identical_samples_collapse_to_two_signatures() {
        let m = crate::hapdata::AlleleMatrix::from_rows(
            vec!["s1".into(), "s2".into()],
            vec!["a".into(), "b".into(), "c".into()],
            &[vec!["A", "A", "A"], vec!["T", "T", "T"]],
        )
        .unwrap();
        let table = build_signatures(&m, &[0, 1, 2]);
        assert_eq!(table.members(), &[0]);
        assert_eq!(table.num_signatures(), 2);
        assert_eq!(table.num_vars(), 1);
    }

    #[test]
    fn ff_count_counts_joint_absence() {
        let a = sig_str("FFTFF");
        let b = sig_str("TTTTT");
        assert_eq!(a.ff_count(&b), 0);
        let c = sig_str("FFFFF");
        assert_eq!(c.ff_count(&c), 5);
        assert_eq!(a.ff_count(&c), 4);
    }

    #[test]
    fn lexicographic_order_puts_first_position_most_significant() {
        let mut v = vec![sig_str("FTFFF"), sig_str("FFTFF"), sig_str("TFFFF")];
        v.sort();
        let strs: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        assert_eq!(strs, vec!["FFTFF", "FTFFF", "TFFFF"]);
    }
}
