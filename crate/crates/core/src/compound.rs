//! Multiplicative and additive compound matrices.
//!
//! Rows and columns of an order-`p` compound are labelled by the
//! `p`-subsets of `{1..n}` in lexicographic order.

use thiserror::Error;

use crate::matrix::{binomial, subsets, DenseMatrix, IndexTuple, MatrixError};
use crate::total_positivity::{is_irreducible, minor_value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompoundError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("compound order {p} outside 1..={n}")]
    OrderOutOfRange { p: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundMatrix {
    pub base_dim: usize,
    pub order: usize,
    pub matrix: DenseMatrix,
    pub index_map: Vec<IndexTuple>,
}

impl CompoundMatrix {
    fn position(&self, t: &IndexTuple) -> Option<usize> {
        self.index_map.binary_search_by(|x| x.indices().cmp(t.indices())).ok()
    }

    /// Entry addressed by labels `(α|β)`.
    pub fn entry(&self, alpha: &IndexTuple, beta: &IndexTuple) -> Option<f64> {
        Some(self.matrix.get(self.position(alpha)?, self.position(beta)?))
    }
}

fn check_order(a: &DenseMatrix, p: usize) -> Result<usize, CompoundError> {
    let n = a.square_dim()?;
    if p == 0 || p > n {
        return Err(CompoundError::OrderOutOfRange { p, n });
    }
    Ok(n)
}

/// `A^(p)`: all order-`p` minors.
pub fn mult_compound(a: &DenseMatrix, p: usize) -> Result<CompoundMatrix, CompoundError> {
    let n = check_order(a, p)?;
    let labels = subsets(n, p);
    let zb: Vec<Vec<usize>> = labels.iter().map(|t| t.zero_based()).collect();
    let m = labels.len();
    let mut data = Vec::with_capacity(m * m);
    for r in &zb {
        for c in &zb {
            data.push(minor_value(a, r, c));
        }
    }
    let mut matrix = DenseMatrix::new(m, m, data)?;
    if a.is_integral() {
        matrix = matrix.with_integral_flag();
    }
    Ok(CompoundMatrix {
        base_dim: n,
        order: p,
        matrix,
        index_map: labels,
    })
}

/// Entry `(α|β)` of `A^[p]` from the explicit rule.
fn additive_entry(a: &DenseMatrix, alpha: &[usize], beta: &[usize]) -> f64 {
    if alpha == beta {
        return alpha.iter().map(|&i| a.get(i, i)).sum();
    }
    let only_alpha: Vec<usize> = (0..alpha.len()).filter(|&l| !beta.contains(&alpha[l])).collect();
    let only_beta: Vec<usize> = (0..beta.len()).filter(|&m| !alpha.contains(&beta[m])).collect();
    if only_alpha.len() != 1 {
        return 0.0;
    }
    let (l, m) = (only_alpha[0], only_beta[0]);
    let v = a.get(alpha[l], beta[m]);
    if (l + m) % 2 == 0 {
        v
    } else {
        -v
    }
}

/// `A^[p]`, the generator of minor dynamics.
pub fn add_compound(a: &DenseMatrix, p: usize) -> Result<CompoundMatrix, CompoundError> {
    let n = check_order(a, p)?;
    let labels = subsets(n, p);
    let zb: Vec<Vec<usize>> = labels.iter().map(|t| t.zero_based()).collect();
    let m = binomial(n, p);
    let mut data = Vec::with_capacity(m * m);
    for r in &zb {
        for c in &zb {
            data.push(additive_entry(a, r, c));
        }
    }
    let mut matrix = DenseMatrix::new(m, m, data)?;
    if a.is_integral() {
        matrix = matrix.with_integral_flag();
    }
    Ok(CompoundMatrix {
        base_dim: n,
        order: p,
        matrix,
        index_map: labels,
    })
}

/// Metzler status of `A^[p]` for `p = 1..n`.
///
/// Panics if `A^[1]` and `A^[2]` are Metzler but a higher compound is not.
pub fn metzler_compound_profile(a: &DenseMatrix) -> Result<Vec<(usize, bool)>, CompoundError> {
    let n = a.square_dim()?;
    let mut out = Vec::with_capacity(n);
    for p in 1..=n {
        out.push((p, add_compound(a, p)?.matrix.is_metzler()));
    }
    if n >= 2 && out[0].1 && out[1].1 {
        assert!(
            out.iter().all(|&(_, m)| m),
            "Metzler first and second additive compounds with a non-Metzler higher one: {out:?}"
        );
    }
    Ok(out)
}

/// Irreducibility of `A^[p]` for `p = 1..n`.
pub fn irreducible_compound_profile(a: &DenseMatrix) -> Result<Vec<(usize, bool)>, CompoundError> {
    let n = a.square_dim()?;
    (1..=n)
        .map(|p| Ok((p, is_irreducible(&add_compound(a, p)?.matrix))))
        .collect()
}
