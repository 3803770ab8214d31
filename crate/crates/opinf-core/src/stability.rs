//! Lyapunov solves, stability radii, and eigenvalue reflection.
//!
//! For a Hurwitz linear operator `A`, the Lyapunov equation
//! `A^T P + P A = -L L^T` with `L = I` yields a quadratic Lyapunov
//! function, and the radius
//!
//! `rho = sigma_min(L) / (2 sqrt(||P||_F) ||H||_F)`
//!
//! certifies a sublevel set of it to lie inside the domain of attraction
//! of the origin, where `H` is the full Kronecker form of the quadratic
//! operator. A vanishing quadratic term makes the radius infinite.

use nalgebra::{Complex, DMatrix, DVector};

use crate::dynamics::QuadraticModel;
use crate::error::{Error, Result};
use crate::quadform::expand_quadratic;
use crate::{DenseMatrix, DenseVector};

/// Condition-number cutoff above which an eigenvector matrix is treated as
/// numerically non-diagonalizable.
pub const EIGENVECTOR_COND_LIMIT: f64 = 1e12;

type ComplexMatrix = DMatrix<Complex<f64>>;
type ComplexVector = DVector<Complex<f64>>;

/// Stability assessment of one quadratic model.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Certified radius; `Some(f64::INFINITY)` when the quadratic term
    /// vanishes, `None` when `A` is not Hurwitz.
    pub rho: Option<f64>,
    /// Lyapunov solution, present when `A` is Hurwitz.
    pub p: Option<DenseMatrix>,
    pub hurwitz: bool,
    /// Smallest singular value of the chosen `L` (identity, so 1).
    pub sigma_min_l: f64,
}

/// True iff every eigenvalue of `a` has strictly negative real part.
pub fn is_hurwitz(a: &DenseMatrix) -> bool {
    a.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// Solve `A^T P + P A = -Q` for symmetric positive semidefinite `Q` and
/// Hurwitz `A`, via the vectorized `n^2 x n^2` system
/// `(I (x) A^T + A^T (x) I) vec(P) = -vec(Q)`. The output is symmetrized.
pub fn solve_lyapunov(a: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::dim(
            "solve_lyapunov",
            format!("A is {}x{}, Q is {}x{}", a.nrows(), a.ncols(), q.nrows(), q.ncols()),
        ));
    }
    if !is_hurwitz(a) {
        return Err(Error::NotHurwitz {
            context: "solve_lyapunov",
        });
    }

    let at = a.transpose();
    let eye = DenseMatrix::identity(n, n);
    let system = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DenseVector::from_fn(n * n, |k, _| -q[(k % n, k / n)]);
    let vec_p = system.lu().solve(&rhs).ok_or(Error::Singular {
        context: "solve_lyapunov",
    })?;

    let p = DenseMatrix::from_fn(n, n, |i, j| vec_p[j * n + i]);
    Ok((&p + p.transpose()) * 0.5)
}

/// Stability radius of a quadratic model with `L = I` (so `Q = I` and
/// `sigma_min(L) = 1`).
pub fn stability_radius(model: &QuadraticModel) -> StabilityReport {
    let sigma_min_l = 1.0;
    if !is_hurwitz(&model.a) {
        return StabilityReport {
            rho: None,
            p: None,
            hurwitz: false,
            sigma_min_l,
        };
    }
    let n = model.dim();
    let p = solve_lyapunov(&model.a, &DenseMatrix::identity(n, n))
        .expect("A was checked to be Hurwitz");
    // Zero-filled expansion preserves the Frobenius norm, so ||H|| can be
    // read off F directly; expand anyway to keep the definition literal.
    let h_norm = expand_quadratic(&model.f).norm();
    let rho = if h_norm == 0.0 {
        f64::INFINITY
    } else {
        sigma_min_l / (2.0 * p.norm().sqrt() * h_norm)
    };
    StabilityReport {
        rho: Some(rho),
        p: Some(p),
        hurwitz: true,
        sigma_min_l,
    }
}

/// Replace every eigenvalue of `a` with nonnegative real part by
/// `-eps + i Im`, keeping all other eigenvalues and the eigenvector basis,
/// and reconstruct a real matrix. A matrix that is already Hurwitz is
/// returned unchanged.
///
/// Fails when the eigenvector matrix has condition number above
/// [`EIGENVECTOR_COND_LIMIT`]; callers are expected to retry at a smaller
/// model dimension.
pub fn reflect_eigenvalues(a: &DenseMatrix, eps: f64) -> Result<DenseMatrix> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::arg("reflect_eigenvalues", format!("eps = {eps}")));
    }
    if is_hurwitz(a) {
        return Ok(a.clone());
    }

    let n = a.nrows();
    let ac: ComplexMatrix = a.map(|x| Complex::new(x, 0.0));
    let schur = ac
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::Singular {
            context: "reflect_eigenvalues (schur)",
        })?;
    let (q, t) = schur.unpack();

    let vectors = &q * triangular_eigenvectors(&t);
    let sv = vectors.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min().max(f64::MIN_POSITIVE);
    if !cond.is_finite() || cond > EIGENVECTOR_COND_LIMIT {
        return Err(Error::IllConditionedEigenvectors { cond });
    }

    let reflected = ComplexVector::from_fn(n, |i, _| {
        let lam = t[(i, i)];
        if lam.re >= 0.0 {
            Complex::new(-eps, lam.im)
        } else {
            lam
        }
    });

    // A' = V diag(reflected) V^{-1}, via V^T X = (V diag)^T.
    let scaled = &vectors * ComplexMatrix::from_diagonal(&reflected);
    let vt = vectors.transpose();
    let solved = vt.lu().solve(&scaled.transpose()).ok_or(Error::Singular {
        context: "reflect_eigenvalues (reconstruct)",
    })?;
    // Conjugate eigenvalue pairs are mapped consistently, so the result is
    // real up to rounding.
    Ok(solved.transpose().map(|z| z.re))
}

/// Eigenvectors of an upper-triangular complex matrix by back
/// substitution, columns normalized to unit length. Near-identical
/// diagonal entries get a perturbed denominator; the resulting
/// near-dependence is caught by the caller's condition check.
fn triangular_eigenvectors(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let scale = t.norm().max(1.0);
    let floor = scale * f64::EPSILON;
    let mut y = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        y[(i, i)] = Complex::new(1.0, 0.0);
        let lam = t[(i, i)];
        for j in (0..i).rev() {
            let mut acc = Complex::new(0.0, 0.0);
            for k in (j + 1)..=i {
                acc += t[(j, k)] * y[(k, i)];
            }
            let mut denom = t[(j, j)] - lam;
            if denom.norm() < floor {
                denom = Complex::new(floor, 0.0);
            }
            y[(j, i)] = -acc / denom;
        }
        let norm = y.column(i).norm();
        if norm > 0.0 {
            let inv = Complex::new(1.0 / norm, 0.0);
            for j in 0..=i {
                y[(j, i)] *= inv;
            }
        }
    }
    y
}
