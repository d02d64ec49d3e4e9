//! Principal components by orthogonal iteration, matrix-free: the sample
//! covariance is applied through the centred data, so wide matrices never
//! get a dense covariance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-major component vectors, mutually orthonormal; the
    /// largest-magnitude entry of each is positive.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues for the kept components.
    pub explained_variances: Vec<f64>,
    /// Trace of the covariance (sum of all eigenvalues).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variances
            .iter()
            .map(|&v| if self.total_variance > 0.0 { v / self.total_variance } else { 0.0 })
            .collect()
    }
}

/// Fit the top-k principal components of `rows` (points in d dimensions).
pub fn pca_fit(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidParams("PCA needs at least one point".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch("ragged point set".into()));
    }
    if k == 0 || k > d.min(n) {
        return Err(Error::InvalidParams(format!(
            "component count {k} must be between 1 and min(points, dims) = {}",
            d.min(n)
        )));
    }

    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centred: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let scale = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let total_variance = centred
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / scale;

    // cov · v = Xᵀ (X v) / (n - 1)
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for row in &centred {
            let dot: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, &x) in out.iter_mut().zip(row) {
                *o += dot * x;
            }
        }
        for o in &mut out {
            *o /= scale;
        }
        out
    };

    // Deterministic seeded start keeps runs reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(0x9c0_ffee);
    let mut basis: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalise(&mut basis, &mut rng);

    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<Vec<f64>> = basis.iter().map(|v| apply(v)).collect();
        orthonormalise(&mut next, &mut rng);
        basis = next;

        let mut worst = 0.0f64;
        let mut eigs = Vec::with_capacity(k);
        for v in &basis {
            let cv = apply(v);
            let lambda: f64 = cv.iter().zip(v).map(|(a, b)| a * b).sum();
            let residual: f64 = cv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(residual / total_variance.max(1.0));
            eigs.push(lambda);
        }
        if worst <= RESIDUAL_TOL {
            let mut components = basis;
            for c in &mut components {
                fix_sign(c);
            }
            // Order by eigenvalue, largest first.
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eigs[b].partial_cmp(&eigs[a]).unwrap());
            let components: Vec<Vec<f64>> =
                order.iter().map(|&i| components[i].clone()).collect();
            let explained_variances: Vec<f64> = order.iter().map(|&i| eigs[i].max(0.0)).collect();
            return Ok(PcaModel {
                mean,
                components,
                explained_variances,
                total_variance,
            });
        }
    }
    Err(Error::NoConvergence)
}

/// Project points onto the fitted components.
pub fn pca_project(model: &PcaModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = model.mean.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(
            "points do not match the fitted dimension".into(),
        ));
    }
    Ok(rows
        .iter()
        .map(|r| {
            model
                .components
                .iter()
                .map(|c| {
                    r.iter()
                        .zip(&model.mean)
                        .zip(c)
                        .map(|((x, m), w)| (x - m) * w)
                        .sum()
                })
                .collect()
        })
        .collect())
}

/// Gram-Schmidt with a deterministic refill for collapsed directions (rank
/// deficiency leaves trailing components spanning the null space).
fn orthonormalise(basis: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let d = basis.first().map_or(0, |v| v.len());
    for i in 0..basis.len() {
        let mut attempts = 0;
        loop {
            for j in 0..i {
                let (head, tail) = basis.split_at_mut(i);
                let dot: f64 = head[j].iter().zip(tail[0].iter()).map(|(a, b)| a * b).sum();
                for (x, &y) in tail[0].iter_mut().zip(head[j].iter()) {
                    *x -= dot * y;
                }
            }
            let norm: f64 = basis[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for x in &mut basis[i] {
                    *x /= norm;
                }
                break;
            }
            // Collapsed: reseed deterministically and retry.
            attempts += 1;
            basis[i] = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
            assert!(attempts < 64, "failed to build an orthonormal basis");
        }
    }
}

fn fix_sign(component: &mut [f64]) {
    let mut max_i = 0;
    for (i, &x) in component.iter().enumerate() {
        if x.abs() > component[max_i].abs() {
            max_i = i;
        }
    }
    if component[max_i] < 0.0 {
        for x in component.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_data_has_single_direction() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let model = pca_fit(&rows, 1).unwrap();
        let ratio = model.explained_variance_ratio();
        assert!((ratio[0] - 1.0).abs() < 1e-9);
        // Direction proportional to (1, 2)/sqrt(5).
        let c = &model.components[0];
        assert!((c[1] / c[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_two_point_data_has_equal_variances() {
        // Four points at (±1, 0), (0, ±1): isotropic covariance.
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let model = pca_fit(&rows, 2).unwrap();
        let v = &model.explained_variances;
        assert!((v[0] - v[1]).abs() < 1e-9, "variances {v:?}");
    }

    #[test]
    fn projection_is_centred() {
        let rows = vec![vec![1.0, 1.0], vec![3.0, 1.0], vec![2.0, 4.0]];
        let model = pca_fit(&rows, 2).unwrap();
        let coords = pca_project(&model, &rows).unwrap();
        for k in 0..2 {
            let mean: f64 = coords.iter().map(|c| c[k]).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn component_count_is_validated() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(pca_fit(&rows, 3).is_err());
        assert!(pca_fit(&rows, 0).is_err());
    }
}
