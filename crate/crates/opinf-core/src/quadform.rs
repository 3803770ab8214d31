//! Compressed quadratic state products and operator conversions.
//!
//! A state `x` of dimension `n` has the compressed square `x^2` of length
//! `n(n+1)/2` holding all distinct pairwise products, ordered as the
//! concatenation of blocks `x_i * [x_1, ..., x_i]` for `i = 1..n`. A
//! quadratic operator can act either on `x^2` (the compressed form `F`,
//! `n x n(n+1)/2`) or on the Kronecker square `x (x) x` (the full form `H`,
//! `n x n^2`). [`expand_quadratic`] and [`compress_quadratic`] convert
//! between the two so that `F x^2 = H (x (x) x)` for every `x`.

use crate::{DenseMatrix, DenseVector};

/// Length of the compressed square for state dimension `n`.
#[inline]
pub fn compressed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Start offset of block `i` (0-based) in the compressed ordering.
///
/// Block `i` holds the pairs (i, 0)..(i, i) and has length `i + 1`.
#[inline]
pub fn block_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

/// Position of the pair `(i, j)`, `j <= i`, in the compressed ordering.
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    block_offset(i) + j
}

/// Compressed square of a state vector: entry `pair_index(i, j) = x_i * x_j`.
pub fn compress_square(x: &DenseVector) -> DenseVector {
    let mut out = DenseVector::zeros(compressed_len(x.len()));
    compress_square_into(x, &mut out);
    out
}

/// In-place variant of [`compress_square`] for integration hot loops.
/// `out` must have length `compressed_len(x.len())`.
pub fn compress_square_into(x: &DenseVector, out: &mut DenseVector) {
    let n = x.len();
    debug_assert_eq!(out.len(), compressed_len(n));
    let mut k = 0;
    for i in 0..n {
        let xi = x[i];
        for j in 0..=i {
            out[k] = xi * x[j];
            k += 1;
        }
    }
}

/// Kronecker square of a state vector: entry `i * n + j = x_i * x_j`.
pub fn kron_square(x: &DenseVector) -> DenseVector {
    let n = x.len();
    let mut out = DenseVector::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = x[i] * x[j];
        }
    }
    out
}

/// Expand a compressed quadratic operator `F` (`n x n(n+1)/2`) into the full
/// Kronecker form `H` (`n x n^2`) with `H (x (x) x) = F x^2` for all `x`.
///
/// The whole coefficient of pair `(i, j)`, `i >= j`, is placed on the
/// Kronecker column `i * n + j`; the mirrored column `j * n + i` stays zero,
/// which keeps the Frobenius norms of `F` and `H` identical.
pub fn expand_quadratic(f: &DenseMatrix) -> DenseMatrix {
    let n = f.nrows();
    assert_eq!(
        f.ncols(),
        compressed_len(n),
        "expand_quadratic: operator has {} columns, expected {}",
        f.ncols(),
        compressed_len(n)
    );
    let mut h = DenseMatrix::zeros(n, n * n);
    for i in 0..n {
        for j in 0..=i {
            h.column_mut(i * n + j).copy_from(&f.column(pair_index(i, j)));
        }
    }
    h
}

/// Compress a full quadratic operator `H` (`n x n^2`) into `F` with
/// `F x^2 = H (x (x) x)` for all `x`. Off-diagonal pairs sum the two
/// mirrored Kronecker columns.
pub fn compress_quadratic(h: &DenseMatrix) -> DenseMatrix {
    let n = h.nrows();
    assert_eq!(
        h.ncols(),
        n * n,
        "compress_quadratic: operator has {} columns, expected {}",
        h.ncols(),
        n * n
    );
    let mut f = DenseMatrix::zeros(n, compressed_len(n));
    for i in 0..n {
        for j in 0..=i {
            let mut col = f.column_mut(pair_index(i, j));
            col.copy_from(&h.column(i * n + j));
            if i != j {
                col += h.column(j * n + i);
            }
        }
    }
    f
}
