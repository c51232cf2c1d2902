use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, EqualitySets};
use crate::error::{invalid, Error, Result};

/// Orthonormal basis of a bias subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasSubspace {
    pub basis: Vec<Vec<f64>>,
    /// Fraction of equality-set residual variance along each basis vector.
    pub explained_variance: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl BiasSubspace {
    /// Wraps a basis after checking it is orthonormal to within `1e-9`.
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        let dim = basis.first().map(Vec::len).ok_or_else(|| invalid("empty basis"))?;
        for (i, b) in basis.iter().enumerate() {
            if b.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.len() });
            }
            if (norm(b) - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("basis vector {i} is not unit length")));
            }
            for c in &basis[..i] {
                if dot(b, c).abs() > 1e-9 {
                    return Err(invalid("basis vectors are not orthogonal"));
                }
            }
        }
        let k = basis.len();
        Ok(Self { basis, explained_variance: vec![1.0 / k as f64; k] })
    }

    pub fn dim(&self) -> usize {
        self.basis[0].len()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates `<w, b_i>` of `w` in the basis.
    pub fn coordinates(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: w.len() });
        }
        Ok(self.basis.iter().map(|b| dot(w, b)).collect())
    }

    /// `w_B = sum_i <w, b_i> b_i`.
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        let coords = self.coordinates(w)?;
        let mut out = vec![0.0; w.len()];
        for (c, b) in coords.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        Ok(out)
    }
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Principal directions of the equality-set residuals.
///
/// Every resolvable set is unit-normalized and centered at its mean; the
/// stacked residuals are decomposed by SVD and the top `k` right singular
/// vectors form the basis. Each basis vector is signed so that its largest
/// component is positive.
pub fn identify_subspace(emb: &EmbeddingMatrix, sets: &EqualitySets, k: usize) -> Result<BiasSubspace> {
    let d = emb.dim();
    if k == 0 || k > d {
        return Err(invalid(format!("subspace rank {k} must be in 1..={d}")));
    }
    let resolved = sets.resolve(emb);
    if resolved.sets.is_empty() {
        return Err(Error::EmptyInput("no equality set has two words in the vocabulary".into()));
    }

    let mut residuals: Vec<f64> = Vec::new();
    let mut rows = 0;
    for set in &resolved.sets {
        let members: Vec<Vec<f64>> = set
            .iter()
            .map(|&i| unit(emb.row(i)).ok_or_else(|| Error::DegenerateWord(emb.vocab()[i].clone())))
            .collect::<Result<_>>()?;
        let mut mean = vec![0.0; d];
        for m in &members {
            for (a, x) in mean.iter_mut().zip(m) {
                *a += x / members.len() as f64;
            }
        }
        for m in &members {
            residuals.extend(m.iter().zip(&mean).map(|(x, mu)| x - mu));
            rows += 1;
        }
    }

    let matrix = DMatrix::from_row_slice(rows, d, &residuals);
    let svd = matrix.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let top = order.first().map_or(0.0, |&i| svd.singular_values[i]);
    if top <= 1e-12 {
        return Err(Error::Degenerate("equality-set words are identical within every set".into()));
    }
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > 1e-9 * top).count();
    if k > rank {
        return Err(Error::InsufficientRank { requested: k, rank });
    }

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut basis = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
        let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
        explained_variance.push(svd.singular_values[i].powi(2) / total);
    }
    Ok(BiasSubspace { basis, explained_variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(words: &[(&str, &[f64])]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            words.iter().map(|w| w.0.to_string()).collect(),
            words.iter().map(|w| w.1.to_vec()).collect(),
        )
        .unwrap()
    }

    fn sets(s: &[&[&str]]) -> EqualitySets {
        EqualitySets::new(s.iter().map(|x| x.iter().map(|t| t.to_string()).collect()).collect()).unwrap()
    }

    #[test]
    fn planted_axis_is_recovered() {
        let e = emb(&[
            ("a", &[0.6, 0.8, 0.0]),
            ("b", &[-0.6, 0.8, 0.0]),
            ("c", &[0.3, 0.0, 0.953_939_201_416_945_6]),
            ("d", &[-0.3, 0.0, 0.953_939_201_416_945_6]),
        ]);
        let b = identify_subspace(&e, &sets(&[&["a", "b"], &["c", "d"]]), 1).unwrap();
        assert!((b.basis[0][0].abs() - 1.0).abs() < 1e-12);
        assert!(b.basis[0][1].abs() < 1e-12 && b.basis[0][2].abs() < 1e-12);
        assert!((b.explained_variance[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_residuals_reject_k_two() {
        let e = emb(&[("a", &[0.6, 0.8, 0.0]), ("b", &[-0.6, 0.8, 0.0])]);
        assert!(matches!(
            identify_subspace(&e, &sets(&[&["a", "b"]]), 2),
            Err(Error::InsufficientRank { requested: 2, rank: 1 })
        ));
    }

    #[test]
    fn identical_members_are_degenerate() {
        let e = emb(&[("a", &[0.6, 0.8]), ("b", &[0.6, 0.8])]);
        assert!(matches!(identify_subspace(&e, &sets(&[&["a", "b"]]), 1), Err(Error::Degenerate(_))));
        assert!(identify_subspace(&e, &sets(&[&["x", "y"]]), 1).is_err());
    }

    #[test]
    fn projection_examples() {
        let b = BiasSubspace::new(vec![vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(b.project(&[0.6, 0.8, 0.0]).unwrap(), vec![0.6, 0.0, 0.0]);
        assert_eq!(b.project(&[0.0, 0.3, -0.2]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(b.project(&[0.25, 0.0, 0.0]).unwrap(), vec![0.25, 0.0, 0.0]);
        assert!(matches!(b.project(&[1.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(BiasSubspace::new(vec![vec![1.0, 0.0], vec![0.6, 0.8]]).is_err());
    }
}
