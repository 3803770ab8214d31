//! Snapshot assembly, POD bases, trajectory projection, and intrusive
//! Galerkin reduction.

use crate::dynamics::QuadraticModel;
use crate::error::{Error, Result};
use crate::quadform::{compress_quadratic, expand_quadratic};
use crate::{DenseMatrix, DenseVector};

/// Relative singular-value cutoff below which a requested mode counts as
/// numerically rank deficient.
const RANK_CUTOFF: f64 = 1e-13;

/// An orthonormal basis `V` (`N x n`) with the full singular-value spectrum
/// of the snapshot matrix it was computed from.
#[derive(Debug, Clone)]
pub struct PodBasis {
    pub v: DenseMatrix,
    pub singular_values: DenseVector,
}

impl PodBasis {
    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// Basis truncated to the leading `n` columns. Columns are nested, so
    /// this is exact, not a recomputation.
    pub fn truncated(&self, n: usize) -> Result<PodBasis> {
        if n == 0 || n > self.v.ncols() {
            return Err(Error::arg(
                "PodBasis::truncated",
                format!("requested {n} of {} columns", self.v.ncols()),
            ));
        }
        Ok(PodBasis {
            v: self.v.columns(0, n).into_owned(),
            singular_values: self.singular_values.clone(),
        })
    }
}

/// Concatenate state trajectories column-wise, in the order given
/// (parameter-major, trajectory-minor by convention of the callers).
pub fn assemble_snapshots<'a, I>(trajectories: I) -> Result<DenseMatrix>
where
    I: IntoIterator<Item = &'a DenseMatrix>,
{
    let mats: Vec<&DenseMatrix> = trajectories.into_iter().collect();
    if mats.is_empty() {
        return Err(Error::arg("assemble_snapshots", "no trajectories given"));
    }
    let n = mats[0].nrows();
    if mats.iter().any(|m| m.nrows() != n) {
        return Err(Error::dim(
            "assemble_snapshots",
            "trajectories have differing state dimensions",
        ));
    }
    let total: usize = mats.iter().map(|m| m.ncols()).sum();
    let mut out = DenseMatrix::zeros(n, total);
    let mut col = 0;
    for m in mats {
        out.columns_mut(col, m.ncols()).copy_from(m);
        col += m.ncols();
    }
    Ok(out)
}

/// Leading `n` left singular vectors of the snapshot matrix, sign-fixed so
/// that each column's largest-magnitude entry is positive.
///
/// Fails when the `n`-th singular value falls below `1e-13` relative to the
/// largest, i.e. when `n` exceeds the numerical rank.
pub fn pod_basis(snapshots: &DenseMatrix, n: usize) -> Result<PodBasis> {
    if n == 0 {
        return Err(Error::arg("pod_basis", "requested zero modes"));
    }
    let svd = snapshots.clone().svd(true, false);
    let sigma = svd.singular_values;
    let u = svd.u.expect("svd computed with u");

    let rank = numerical_rank(&sigma);
    if n > rank {
        return Err(Error::RankDeficient { requested: n, rank });
    }

    let mut v = u.columns(0, n).into_owned();
    for mut col in v.column_iter_mut() {
        let mut idx = 0;
        let mut best = 0.0;
        for (i, &val) in col.iter().enumerate() {
            if val.abs() > best {
                best = val.abs();
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }

    Ok(PodBasis {
        v,
        singular_values: sigma,
    })
}

fn numerical_rank(sigma: &DenseVector) -> usize {
    let largest = sigma.max();
    if largest <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s / largest >= RANK_CUTOFF).count()
}

/// Galerkin projection of a full-order model onto `V`:
/// `A -> V^T A V`, `B -> V^T B`, `c -> V^T c`, and the quadratic operator
/// via its Kronecker form, `F -> compress(V^T H (V (x) V))`.
pub fn galerkin_reduce(fom: &QuadraticModel, v: &DenseMatrix) -> Result<QuadraticModel> {
    if v.nrows() != fom.dim() {
        return Err(Error::dim(
            "galerkin_reduce",
            format!("basis has {} rows, model dimension is {}", v.nrows(), fom.dim()),
        ));
    }
    let a = v.transpose() * &fom.a * v;
    let b = v.transpose() * &fom.b;
    let c = v.transpose() * &fom.c;
    let h = expand_quadratic(&fom.f);
    let f = compress_quadratic(&(v.transpose() * h * v.kronecker(v)));
    QuadraticModel::with_constant(a, b, f, c)
}

/// Project a full-state trajectory onto the basis: `X -> V^T X`.
pub fn project_trajectory(states: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    if v.nrows() != states.nrows() {
        return Err(Error::dim(
            "project_trajectory",
            format!("basis has {} rows, states have {}", v.nrows(), states.nrows()),
        ));
    }
    Ok(v.transpose() * states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::{compressed_len, kron_square};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn snapshots_concatenate_in_order() {
        let a = DenseMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let b = DenseMatrix::from_row_slice(2, 4, &[7., 8., 9., 10., 11., 12., 13., 14.]);

        let single = assemble_snapshots([&a]).unwrap();
        assert_eq!(single, a);

        let both = assemble_snapshots([&a, &b]).unwrap();
        assert_eq!(both.ncols(), 7);
        assert_eq!(both.columns(0, 3), a.columns(0, 3));
        assert_eq!(both.columns(3, 4), b.columns(0, 4));

        let empty: [&DenseMatrix; 0] = [];
        assert!(assemble_snapshots(empty).is_err());
        let mismatched = DenseMatrix::zeros(3, 2);
        assert!(assemble_snapshots([&a, &mismatched]).is_err());
    }

    #[test]
    fn pod_of_identity_spans_axes() {
        let snapshots = DenseMatrix::identity(3, 3);
        let basis = pod_basis(&snapshots, 2).unwrap();
        assert_relative_eq!(
            basis.v.transpose() * &basis.v,
            DenseMatrix::identity(2, 2),
            epsilon = 1e-12
        );
        for col in basis.v.column_iter() {
            assert_eq!(col.iter().filter(|&&v| v.abs() > 1e-12).count(), 1);
        }
    }

    #[test]
    fn pod_rank_one() {
        let gen = DenseVector::from_vec(vec![3.0, 4.0]);
        let snapshots = DenseMatrix::from_fn(2, 5, |i, j| gen[i] * (j as f64 + 1.0));
        let basis = pod_basis(&snapshots, 1).unwrap();
        let normalized = &gen / gen.norm();
        assert_relative_eq!(basis.v.column(0).into_owned(), normalized, epsilon = 1e-12);
        assert!(pod_basis(&snapshots, 2).is_err());
    }

    #[test]
    fn projection_error_matches_truncated_spectrum() {
        // Eckart-Young: || X - V V^T X ||_F^2 = sum_{i > n} sigma_i^2.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = random_matrix(&mut rng, 20, 50);
        let n = 6;
        let basis = pod_basis(&x, n).unwrap();
        let residual = &x - &basis.v * basis.v.transpose() * &x;
        let tail: f64 = basis
            .singular_values
            .iter()
            .skip(n)
            .map(|s| s * s)
            .sum();
        assert_relative_eq!(residual.norm_squared(), tail, max_relative = 1e-10);
        // Orthonormality.
        assert!((basis.v.transpose() * &basis.v - DenseMatrix::identity(n, n)).norm() <= 1e-10);
        // Singular values are nonincreasing.
        for i in 1..basis.singular_values.len() {
            assert!(basis.singular_values[i] <= basis.singular_values[i - 1] + 1e-12);
        }
    }

    #[test]
    fn pod_sign_convention_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_matrix(&mut rng, 10, 30);
        let basis = pod_basis(&x, 4).unwrap();
        for col in basis.v.column_iter() {
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max >= min.abs() - 1e-15, "largest-magnitude entry not positive");
        }
        // Recomputation reproduces the same matrix bit for bit.
        assert_eq!(pod_basis(&x, 4).unwrap().v, basis.v);
    }

    #[test]
    fn galerkin_identity_projection_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let model = crate::dynamics::QuadraticModel::new(
            random_matrix(&mut rng, n, n),
            random_matrix(&mut rng, n, 2),
            random_matrix(&mut rng, n, compressed_len(n)),
        )
        .unwrap();
        let reduced = galerkin_reduce(&model, &DenseMatrix::identity(n, n)).unwrap();
        assert_relative_eq!(reduced.a, model.a, epsilon = 1e-13);
        assert_relative_eq!(reduced.b, model.b, epsilon = 1e-13);
        assert_relative_eq!(reduced.f, model.f, epsilon = 1e-13);

        let zero_f = crate::dynamics::QuadraticModel::new(
            random_matrix(&mut rng, n, n),
            random_matrix(&mut rng, n, 1),
            DenseMatrix::zeros(n, compressed_len(n)),
        )
        .unwrap();
        let v = pod_basis(&random_matrix(&mut rng, n, 10), 2).unwrap().v;
        assert_eq!(galerkin_reduce(&zero_f, &v).unwrap().f.norm(), 0.0);
    }

    #[test]
    fn galerkin_quadratic_identity() {
        // F_hat x^2 = V^T H (V x (x) V x) for the reduced quadratic operator.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (big, small) = (4, 2);
        let model = crate::dynamics::QuadraticModel::new(
            random_matrix(&mut rng, big, big),
            random_matrix(&mut rng, big, 1),
            random_matrix(&mut rng, big, compressed_len(big)),
        )
        .unwrap();
        let v = pod_basis(&random_matrix(&mut rng, big, 12), small).unwrap().v;
        let reduced = galerkin_reduce(&model, &v).unwrap();
        let h = expand_quadratic(&model.f);
        for _ in 0..100 {
            let xr = DenseVector::from_fn(small, |_, _| rng.gen_range(-1.0..1.0));
            let lifted = &v * &xr;
            let lhs = &reduced.f * crate::quadform::compress_square(&xr);
            let rhs = v.transpose() * &h * kron_square(&lifted);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn galerkin_preserves_symmetry_and_definiteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 8;
        let raw = random_matrix(&mut rng, n, n);
        let spd = &raw * raw.transpose() + 0.1 * DenseMatrix::identity(n, n);
        let model = crate::dynamics::QuadraticModel::new(
            -spd,
            random_matrix(&mut rng, n, 1),
            DenseMatrix::zeros(n, compressed_len(n)),
        )
        .unwrap();
        let v = pod_basis(&random_matrix(&mut rng, n, 20), 3).unwrap().v;
        let reduced = galerkin_reduce(&model, &v).unwrap();
        assert!((&reduced.a - reduced.a.transpose()).norm() <= 1e-13 * reduced.a.norm());
        let eigs = reduced.a.clone().symmetric_eigen().eigenvalues;
        assert!(eigs.iter().all(|&l| l < 0.0));
    }

    #[test]
    fn projection_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let v = pod_basis(&random_matrix(&mut rng, 6, 15), 3).unwrap().v;
        let y = random_matrix(&mut rng, 3, 7);
        let x = &v * &y;
        assert_relative_eq!(project_trajectory(&x, &v).unwrap(), y, epsilon = 1e-12);
        assert_eq!(
            project_trajectory(&DenseMatrix::zeros(6, 4), &v).unwrap().norm(),
            0.0
        );
        // Idempotence of V^T (V V^T X).
        let x = random_matrix(&mut rng, 6, 7);
        let once = project_trajectory(&x, &v).unwrap();
        let reconstructed = &v * &once;
        let twice = project_trajectory(&reconstructed, &v).unwrap();
        assert_relative_eq!(once, twice, epsilon = 1e-13);
    }
}
