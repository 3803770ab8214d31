//! Inference of reduced quadratic operators by least-squares regression.
//!
//! Four solvers share one data layout. Each row of the data matrix `D` is
//! `[x^T | u^T | (x^2)^T | 1?]` for one sample; the target matrix `R` holds
//! the matching finite-difference derivatives. The stacked operator matrix
//! `O = [A | B | F | c?]` (`n` rows) minimizes
//!
//! `|| D O^T - R ||_F^2  (+ regularization)`,
//!
//! where the regularizer is zero (plain), `lambda ||O||^2` (Tikhonov), or
//! `lambda ||F||^2` on the quadratic block only. The constrained variant
//! additionally restricts `A` to symmetric matrices with eigenvalues at
//! most `-eps`, solved by projected gradient.
//!
//! Derivative sample `k` is paired with state `k - 1` and input `k`, so
//! data generated by explicit Euler is reproduced exactly.

use crate::dynamics::QuadraticModel;
use crate::error::{Error, Result};
use crate::quadform::{compress_square, compressed_len};
use crate::{DenseMatrix, DenseVector};

/// Relative singular-value cutoff for the minimum-norm least-squares solve.
pub const RANK_RELATIVE_CUTOFF: f64 = 1e-12;
/// Projected-gradient iteration cap for the constrained solver.
pub const SPIR_MAX_ITERS: usize = 200_000;
/// Projected-gradient step-norm tolerance.
pub const SPIR_TOL: f64 = 1e-10;

/// Which inference problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Plain,
    Tikhonov,
    Pir,
    Spir,
}

impl Method {
    /// Whether the learned linear operators are symmetric negative definite
    /// by construction.
    pub fn preserves_structure(self) -> bool {
        matches!(self, Method::Spir)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Plain => "plain",
            Method::Tikhonov => "tikhonov",
            Method::Pir => "pir",
            Method::Spir => "spir",
        };
        f.write_str(name)
    }
}

/// Regression data built from projected trajectories.
#[derive(Debug, Clone)]
pub struct RegressionData {
    /// Samples x (n + p + n(n+1)/2 (+ 1)) data matrix.
    pub d: DenseMatrix,
    /// Samples x n derivative targets.
    pub r: DenseMatrix,
    n: usize,
    p: usize,
    constant: bool,
}

/// Result of one inference solve.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: QuadraticModel,
    /// Value of the minimized objective (data misfit plus regularizer).
    pub residual: f64,
    pub solver_iterations: usize,
    pub converged: bool,
}

/// First-order forward differences: column `k` of the result is
/// `(x_{k+1} - x_k) / dt` for `k = 0..K-1`, from `K + 1` state columns.
pub fn forward_diff(states: &DenseMatrix, dt: f64) -> Result<DenseMatrix> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::arg("forward_diff", format!("dt = {dt}")));
    }
    if states.ncols() < 2 {
        return Err(Error::arg(
            "forward_diff",
            format!("need at least 2 state columns, got {}", states.ncols()),
        ));
    }
    let k = states.ncols() - 1;
    let mut out = DenseMatrix::zeros(states.nrows(), k);
    for j in 0..k {
        let mut col = out.column_mut(j);
        col.copy_from(&states.column(j + 1));
        col -= states.column(j);
        col /= dt;
    }
    Ok(out)
}

/// Stack all trajectories into one regression problem. `projected[i]` is
/// `n x (K_i + 1)` and `inputs[i]` is `p x K_i`.
pub fn assemble(
    projected: &[DenseMatrix],
    inputs: &[DenseMatrix],
    dt: f64,
    constant: bool,
) -> Result<RegressionData> {
    if projected.is_empty() || projected.len() != inputs.len() {
        return Err(Error::dim(
            "assemble",
            format!("{} trajectories, {} input sets", projected.len(), inputs.len()),
        ));
    }
    let n = projected[0].nrows();
    let p = inputs[0].nrows();
    let q = compressed_len(n);
    let cols = n + p + q + usize::from(constant);
    let total: usize = inputs.iter().map(|u| u.ncols()).sum();

    let mut d = DenseMatrix::zeros(total, cols);
    let mut r = DenseMatrix::zeros(total, n);
    let mut row = 0;
    for (states, u) in projected.iter().zip(inputs) {
        if states.nrows() != n || u.nrows() != p {
            return Err(Error::dim("assemble", "inconsistent trajectory dimensions"));
        }
        if states.ncols() != u.ncols() + 1 {
            return Err(Error::dim(
                "assemble",
                format!(
                    "states have {} columns but inputs have {}",
                    states.ncols(),
                    u.ncols()
                ),
            ));
        }
        let deriv = forward_diff(states, dt)?;
        for k in 0..u.ncols() {
            let x = states.column(k).into_owned();
            d.view_mut((row, 0), (1, n)).copy_from(&x.transpose());
            d.view_mut((row, n), (1, p))
                .copy_from(&u.column(k).transpose());
            d.view_mut((row, n + p), (1, q))
                .copy_from(&compress_square(&x).transpose());
            if constant {
                d[(row, cols - 1)] = 1.0;
            }
            r.row_mut(row).copy_from(&deriv.column(k).transpose());
            row += 1;
        }
    }

    Ok(RegressionData { d, r, n, p, constant })
}

impl RegressionData {
    /// Build directly from raw matrices; mostly useful in tests and when
    /// loading persisted data.
    pub fn from_parts(d: DenseMatrix, r: DenseMatrix, n: usize, p: usize, constant: bool) -> Result<Self> {
        let cols = n + p + compressed_len(n) + usize::from(constant);
        if d.ncols() != cols || r.ncols() != n || d.nrows() != r.nrows() {
            return Err(Error::dim(
                "RegressionData",
                format!(
                    "D is {}x{}, R is {}x{}, expected {} columns and {} targets",
                    d.nrows(),
                    d.ncols(),
                    r.nrows(),
                    r.ncols(),
                    cols,
                    n
                ),
            ));
        }
        Ok(Self { d, r, n, p, constant })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.p
    }

    pub fn has_constant(&self) -> bool {
        self.constant
    }

    pub fn samples(&self) -> usize {
        self.d.nrows()
    }

    /// Data misfit `|| D O^T - R ||_F^2` of a candidate model, evaluated
    /// directly on the stored data.
    pub fn misfit(&self, model: &QuadraticModel) -> f64 {
        let o = stack_operators(model, self.constant);
        (&self.d * o.transpose() - &self.r).norm_squared()
    }

    /// Orthogonal reduction of the least-squares problem, reusable across
    /// regularization weights.
    pub fn factor(&self) -> DesignFactor {
        let cols = self.d.ncols();
        let (r_d, t, base_sq) = if self.d.nrows() == 0 {
            (
                DenseMatrix::zeros(cols, cols),
                DenseMatrix::zeros(cols, self.n),
                0.0,
            )
        } else {
            let qr = self.d.clone().qr();
            let r_d = qr.r();
            let mut qtr = self.r.clone();
            qr.q_tr_mul(&mut qtr);
            let top = qtr.rows(0, r_d.nrows()).into_owned();
            let base = (self.r.norm_squared() - top.norm_squared()).max(0.0);
            (r_d, top, base)
        };
        DesignFactor {
            r_d,
            t,
            base_sq,
            n: self.n,
            p: self.p,
            constant: self.constant,
        }
    }
}

/// Compressed form of a regression problem: `|| D O^T - R ||^2 =
/// || R_d O^T - T ||^2 + base`, with `R_d` at most square. Produced once
/// per data set and shared by all solves on it.
#[derive(Debug, Clone)]
pub struct DesignFactor {
    r_d: DenseMatrix,
    t: DenseMatrix,
    base_sq: f64,
    n: usize,
    p: usize,
    constant: bool,
}

impl DesignFactor {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    fn cols(&self) -> usize {
        self.r_d.ncols()
    }

    /// Per-column ridge weights for a method.
    fn ridge_weights(&self, method: Method, lambda: f64) -> DenseVector {
        let cols = self.cols();
        let q_start = self.n + self.p;
        let q_end = q_start + compressed_len(self.n);
        DenseVector::from_fn(cols, |j, _| match method {
            Method::Plain => 0.0,
            Method::Tikhonov => lambda,
            // Only the quadratic block carries the penalty.
            Method::Pir | Method::Spir => {
                if j >= q_start && j < q_end {
                    lambda
                } else {
                    0.0
                }
            }
        })
    }

    /// Minimum-norm solution of the weighted ridge problem
    /// `min || R_d O^T - T ||^2 + sum_j w_j || O_(:,j) ||^2`.
    fn solve_ridge(&self, weights: &DenseVector) -> DenseMatrix {
        let cols = self.cols();
        let rows = self.r_d.nrows();
        let mut aug = DenseMatrix::zeros(rows + cols, cols);
        aug.view_mut((0, 0), (rows, cols)).copy_from(&self.r_d);
        for j in 0..cols {
            aug[(rows + j, j)] = weights[j].sqrt();
        }
        let width = self.t.ncols();
        let mut rhs = DenseMatrix::zeros(rows + cols, width);
        rhs.view_mut((0, 0), (rows, width)).copy_from(&self.t);

        let svd = aug.svd(true, true);
        let cutoff = svd.singular_values.max() * RANK_RELATIVE_CUTOFF;
        svd.solve(&rhs, cutoff)
            .expect("svd solve cannot fail when u and v are computed")
            .transpose()
    }

    /// Objective value `|| D O^T - R ||^2 + sum_j w_j || O_(:,j) ||^2`.
    fn objective(&self, o: &DenseMatrix, weights: &DenseVector) -> f64 {
        let misfit = (&self.r_d * o.transpose() - &self.t).norm_squared() + self.base_sq;
        let reg: f64 = (0..self.cols())
            .map(|j| weights[j] * o.column(j).norm_squared())
            .sum();
        misfit + reg
    }

    fn report(
        &self,
        o: DenseMatrix,
        weights: &DenseVector,
        iters: usize,
        converged: bool,
    ) -> FitReport {
        let residual = self.objective(&o, weights);
        let model = unstack_operators(&o, self.n, self.p, self.constant);
        FitReport {
            model,
            residual,
            solver_iterations: iters,
            converged,
        }
    }

    /// Solve with the given method. `lambda` is ignored for
    /// [`Method::Plain`]; `eps` only applies to [`Method::Spir`].
    pub fn fit(&self, method: Method, lambda: f64, eps: f64) -> Result<FitReport> {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::arg("fit", format!("lambda = {lambda}")));
        }
        match method {
            Method::Plain | Method::Tikhonov | Method::Pir => {
                let w = self.ridge_weights(method, lambda);
                let o = self.solve_ridge(&w);
                Ok(self.report(o, &w, 1, true))
            }
            Method::Spir => {
                if eps <= 0.0 || !eps.is_finite() {
                    return Err(Error::arg("fit_spir", format!("eps = {eps}")));
                }
                Ok(self.fit_spir_impl(lambda, eps))
            }
        }
    }

    /// Projected gradient for the symmetric-negative-definite constrained
    /// problem: fixed step `1 / L` with `L` the largest eigenvalue of
    /// `2 (D^T D + lambda E)`, warm-started from the projected
    /// unconstrained solution.
    fn fit_spir_impl(&self, lambda: f64, eps: f64) -> FitReport {
        let w = self.ridge_weights(Method::Spir, lambda);
        let cols = self.cols();
        let n = self.n;

        // Gradient of the smooth objective at O is
        // 2 (O G - cross) + 2 O diag(w), with G = D^T D.
        let gram = self.r_d.transpose() * &self.r_d;
        let cross = (self.r_d.transpose() * &self.t).transpose();

        let mut curved = gram.clone();
        for j in 0..cols {
            curved[(j, j)] += w[j];
        }
        let lipschitz = 2.0
            * curved
                .symmetric_eigen()
                .eigenvalues
                .max()
                .max(f64::MIN_POSITIVE);
        let step = 1.0 / lipschitz;

        let mut o = self.solve_ridge(&w);
        project_linear_block(&mut o, n, eps);

        let mut iters = 0;
        let mut converged = false;
        while iters < SPIR_MAX_ITERS {
            iters += 1;
            let mut grad = &o * &gram;
            grad -= &cross;
            for j in 0..cols {
                if w[j] != 0.0 {
                    for i in 0..n {
                        grad[(i, j)] += w[j] * o[(i, j)];
                    }
                }
            }
            grad *= 2.0;

            let mut next = &o - step * grad;
            project_linear_block(&mut next, n, eps);
            let delta = (&next - &o).norm();
            o = next;
            if delta < SPIR_TOL {
                converged = true;
                break;
            }
        }

        self.report(o, &w, iters, converged)
    }
}

/// Frobenius projection of the leading `n x n` block of `o` onto
/// `{A : A = A^T, eigenvalues <= -eps}`: symmetrize, then clip eigenvalues
/// from above at `-eps`.
fn project_linear_block(o: &mut DenseMatrix, n: usize, eps: f64) {
    let a = o.view((0, 0), (n, n)).into_owned();
    let sym = (&a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clipped = DenseVector::from_fn(n, |i, _| eig.eigenvalues[i].min(-eps));
    let projected =
        &eig.eigenvectors * DenseMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    o.view_mut((0, 0), (n, n)).copy_from(&projected);
}

/// `[A | B | F | c?]` as one `n x cols` matrix.
pub fn stack_operators(model: &QuadraticModel, constant: bool) -> DenseMatrix {
    let n = model.dim();
    let p = model.input_dim();
    let q = compressed_len(n);
    let cols = n + p + q + usize::from(constant);
    let mut o = DenseMatrix::zeros(n, cols);
    o.view_mut((0, 0), (n, n)).copy_from(&model.a);
    o.view_mut((0, n), (n, p)).copy_from(&model.b);
    o.view_mut((0, n + p), (n, q)).copy_from(&model.f);
    if constant {
        o.view_mut((0, cols - 1), (n, 1)).copy_from(&model.c);
    }
    o
}

fn unstack_operators(o: &DenseMatrix, n: usize, p: usize, constant: bool) -> QuadraticModel {
    let q = compressed_len(n);
    let a = o.view((0, 0), (n, n)).into_owned();
    let b = o.view((0, n), (n, p)).into_owned();
    let f = o.view((0, n + p), (n, q)).into_owned();
    let c = if constant {
        o.column(n + p + q).into_owned()
    } else {
        DenseVector::zeros(n)
    };
    QuadraticModel::with_constant(a, b, f, c)
        .expect("solver output has consistent shapes and finite entries")
}

/// Unregularized least squares; rank-deficient data yields the
/// minimum-norm operators.
pub fn fit_plain(data: &RegressionData) -> FitReport {
    data.factor()
        .fit(Method::Plain, 0.0, 1.0)
        .expect("plain fit takes no parameters")
}

/// Uniform Tikhonov ridge on all operator columns.
pub fn fit_tikhonov(data: &RegressionData, lambda: f64) -> Result<FitReport> {
    data.factor().fit(Method::Tikhonov, lambda, 1.0)
}

/// Ridge on the quadratic-operator block only.
pub fn fit_pir(data: &RegressionData, lambda: f64) -> Result<FitReport> {
    data.factor().fit(Method::Pir, lambda, 1.0)
}

/// Quadratic-block ridge with `A` constrained to be symmetric with
/// eigenvalues at most `-eps`. Non-convergence within the iteration cap is
/// reported via `converged = false`, not an error.
pub fn fit_spir(data: &RegressionData, lambda: f64, eps: f64) -> Result<FitReport> {
    data.factor().fit(Method::Spir, lambda, eps)
}
