//! Inter-panel relation matrices and centered kernel alignment.
//!
//! A grid's relation matrix is the Gram matrix of its unit-normalized panel
//! embeddings, `R = E Eᵀ`. Two grids are compared by the alignment of their
//! double-centered relation matrices:
//!
//! ```text
//! R̃ = H R H,  H = I − (1/N) 1 1ᵀ
//! CKA(A, B) = ⟨Ã, B̃⟩_F / (‖Ã‖_F ‖B̃‖_F)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Slack allowed on the structural invariants of a relation matrix.
pub const STRUCTURE_TOL: f64 = 1e-9;
/// Below this norm a vector or centered matrix is treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("need at least 2 panels, got {0}")]
    TooFewPanels(usize),
    #[error("embedding {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("embedding {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("embedding {index} has near-zero norm")]
    DegenerateEmbedding { index: usize },
    #[error("relation matrices differ in size: {reference} vs {generated}")]
    SizeMismatch { reference: usize, generated: usize },
    #[error("centered relation matrix has near-zero norm; panels carry no relational structure")]
    DegenerateStructure,
    #[error("invalid relation matrix: {0}")]
    InvalidMatrix(&'static str),
}

/// Symmetric N×N matrix of cosine similarities between panels, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl RelationMatrix {
    /// Wraps precomputed values after checking symmetry, unit diagonal and range.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = rows.len();
        if n < 2 {
            return Err(MetricError::TooFewPanels(n));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(MetricError::InvalidMatrix("not square"));
        }
        let m = Self { n, values: rows.concat() };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            if (self.get(i, i) - 1.0).abs() > STRUCTURE_TOL {
                return Err(MetricError::InvalidMatrix("diagonal is not 1"));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(MetricError::InvalidMatrix("non-finite entry"));
                }
                if v.abs() > 1.0 + STRUCTURE_TOL {
                    return Err(MetricError::InvalidMatrix("entry outside [-1, 1]"));
                }
                if (v - self.get(j, i)).abs() > STRUCTURE_TOL {
                    return Err(MetricError::InvalidMatrix("not symmetric"));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Multiplies every entry by `alpha`. The result is no longer a relation
    /// matrix in the strict sense, which is why this returns raw values.
    pub fn scaled(&self, alpha: f64) -> ScaledMatrix {
        ScaledMatrix { n: self.n, values: self.values.iter().map(|v| v * alpha).collect() }
    }

    /// Applies the same panel permutation to rows and columns:
    /// `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        let n = self.n;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self { n, values }
    }
}

/// A square kernel matrix without the unit-diagonal requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    n: usize,
    values: Vec<f64>,
}

/// Read access shared by [`RelationMatrix`] and [`ScaledMatrix`] so CKA can
/// be evaluated on either.
pub trait Kernel {
    fn size(&self) -> usize;
    fn entries(&self) -> &[f64];
}

impl Kernel for RelationMatrix {
    fn size(&self) -> usize {
        self.n
    }
    fn entries(&self) -> &[f64] {
        &self.values
    }
}

impl Kernel for ScaledMatrix {
    fn size(&self) -> usize {
        self.n
    }
    fn entries(&self) -> &[f64] {
        &self.values
    }
}

/// Builds `R = E Eᵀ` from raw panel embeddings, normalizing each to unit length.
pub fn relation_matrix<V: AsRef<[f64]>>(embeddings: &[V]) -> Result<RelationMatrix, MetricError> {
    let n = embeddings.len();
    if n < 2 {
        return Err(MetricError::TooFewPanels(n));
    }
    let dim = embeddings[0].as_ref().len();
    let mut unit: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (index, e) in embeddings.iter().enumerate() {
        let e = e.as_ref();
        if e.len() != dim {
            return Err(MetricError::DimensionMismatch { index, expected: dim, got: e.len() });
        }
        if e.iter().any(|x| !x.is_finite()) {
            return Err(MetricError::NonFinite { index });
        }
        let norm = libm::sqrt(dot(e, e));
        if norm < DEGENERATE_NORM {
            return Err(MetricError::DegenerateEmbedding { index });
        }
        unit.push(e.iter().map(|x| x / norm).collect());
    }

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            // clamp rounding excursions past ±1
            let v = dot(&unit[i], &unit[j]).clamp(-1.0, 1.0);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(RelationMatrix { n, values })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Double-centers a kernel: `HKH` with `H = I − (1/N)11ᵀ`, computed as
/// `K_ij − rowmean_i − colmean_j + grandmean`.
pub fn centered<K: Kernel + ?Sized>(k: &K) -> Vec<f64> {
    let n = k.size();
    let v = k.entries();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| v[i * n..(i + 1) * n].iter().sum::<f64>() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| (0..n).map(|i| v[i * n + j]).sum::<f64>() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = v[i * n + j] - row_means[i] - col_means[j] + grand;
        }
    }
    out
}

/// Centered kernel alignment of two equally sized kernels, in `[-1, 1]`.
pub fn cka<A: Kernel + ?Sized, B: Kernel + ?Sized>(reference: &A, generated: &B) -> Result<f64, MetricError> {
    if reference.size() != generated.size() {
        return Err(MetricError::SizeMismatch { reference: reference.size(), generated: generated.size() });
    }
    let a = centered(reference);
    let b = centered(generated);
    let norm_a = libm::sqrt(dot(&a, &a));
    let norm_b = libm::sqrt(dot(&b, &b));
    if norm_a < DEGENERATE_NORM || norm_b < DEGENERATE_NORM {
        return Err(MetricError::DegenerateStructure);
    }
    Ok((dot(&a, &b) / (norm_a * norm_b)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(a: [usize; 2], b: [usize; 2]) -> RelationMatrix {
        // two unit-similarity blocks, orthogonal to each other
        let mut e = vec![vec![0.0, 0.0]; 4];
        for i in a {
            e[i] = vec![1.0, 0.0];
        }
        for i in b {
            e[i] = vec![0.0, 1.0];
        }
        relation_matrix(&e).unwrap()
    }

    #[test]
    fn orthogonal_pairs_give_block_matrix() {
        let r = pairs([0, 1], [2, 3]);
        let expected = [
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r.get(i, j), expected[i][j]);
            }
        }
    }

    #[test]
    fn identical_panels_give_all_ones_and_degenerate_cka() {
        let e = vec![vec![0.3, -0.2, 0.9]; 4];
        let r = relation_matrix(&e).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(cka(&r, &r), Err(MetricError::DegenerateStructure));
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let e = vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(relation_matrix(&e), Err(MetricError::DegenerateEmbedding { index: 1 }));
    }

    #[test]
    fn pairing_structures_are_orthogonal() {
        let a = pairs([0, 1], [2, 3]);
        let b = pairs([0, 2], [1, 3]);
        assert!(cka(&a, &b).unwrap().abs() < 1e-9);
        assert!((cka(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn size_mismatch() {
        let a = pairs([0, 1], [2, 3]);
        let b = relation_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(cka(&a, &b), Err(MetricError::SizeMismatch { reference: 4, generated: 3 }));
    }

    #[test]
    fn from_rows_rejects_broken_matrices() {
        assert!(RelationMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(RelationMatrix::from_rows(&[vec![0.9, 0.5], vec![0.5, 1.0]]).is_err());
        assert!(RelationMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).is_ok());
    }
}
