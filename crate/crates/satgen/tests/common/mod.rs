//! Shared brute-force oracles, written directly over token strings and kept
//! independent of the solver pipeline they check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satgen::hapdata::{AlleleMatrix, TokenId};

/// The five-site, five-sample worked-example cohort.
pub fn toy_cohort() -> AlleleMatrix {
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

/// Random binary cohort with tokens "0"/"1".
pub fn random_binary_cohort(rng: &mut ChaCha8Rng, samples: usize, sites: usize) -> AlleleMatrix {
    let rows: Vec<Vec<&str>> = (0..sites)
        .map(|_| {
            (0..samples)
                .map(|_| if rng.gen::<bool>() { "1" } else { "0" })
                .collect()
        })
        .collect();
    AlleleMatrix::from_rows(
        (0..sites).map(|j| format!("s{j}")).collect(),
        (0..samples).map(|i| format!("h{i}")).collect(),
        &rows,
    )
    .unwrap()
}

/// Does `member` answer false to the query (site, token, positive)?
fn answers_false(tokens: &[TokenId], site: usize, token: TokenId, positive: bool) -> bool {
    let has = tokens[site] == token;
    if positive {
        !has
    } else {
        has
    }
}

/// The zero-strengthening pair-absence rule, evaluated directly on token
/// strings: for every pair of queries the candidate answers false-false, at
/// least one cluster member must answer false-false too.
pub fn string_feasible(matrix: &AlleleMatrix, members: &[usize], candidate: &[TokenId]) -> bool {
    let columns: Vec<Vec<TokenId>> = members.iter().map(|&i| matrix.column(i)).collect();
    let mut failed: Vec<(usize, TokenId, bool)> = Vec::new();
    for site in 0..matrix.sites() {
        for v in 0..matrix.vocab_len() {
            let token = TokenId::from_index(v);
            for positive in [true, false] {
                if answers_false(candidate, site, token, positive) {
                    failed.push((site, token, positive));
                }
            }
        }
    }
    for (a, &(s1, t1, p1)) in failed.iter().enumerate() {
        for &(s2, t2, p2) in &failed[a..] {
            let covered = columns.iter().any(|col| {
                answers_false(col, s1, t1, p1) && answers_false(col, s2, t2, p2)
            });
            if !covered {
                return false;
            }
        }
    }
    true
}

/// All token strings over the matrix vocabulary passing the pair rule.
pub fn brute_feasible_strings(matrix: &AlleleMatrix, members: &[usize]) -> Vec<Vec<TokenId>> {
    let vocab = matrix.vocab_len();
    let sites = matrix.sites();
    let total = (vocab as u64).pow(sites as u32);
    assert!(total <= 1 << 20, "oracle enumeration too large");
    let mut feasible = Vec::new();
    for code in 0..total {
        let mut c = code;
        let candidate: Vec<TokenId> = (0..sites)
            .map(|_| {
                let v = (c % vocab as u64) as usize;
                c /= vocab as u64;
                TokenId::from_index(v)
            })
            .collect();
        if string_feasible(matrix, members, &candidate) {
            feasible.push(candidate);
        }
    }
    feasible
}

/// One-sided sign test: probability of at least `positives` successes in
/// `n` fair coin flips.
pub fn sign_test_p(positives: usize, n: usize) -> f64 {
    let mut p = 0.0f64;
    for k in positives..=n {
        p += binom(n, k);
    }
    p / 2f64.powi(n as i32)
}

fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut result = 1.0f64;
    for i in 0..k {
        result = result * (n - i) as f64 / (i + 1) as f64;
    }
    result
}
