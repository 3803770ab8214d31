//! Quadratic models and their explicit-Euler time integration.

use crate::error::{Error, Result};
use crate::quadform::{compress_square_into, compressed_len};
use crate::{DenseMatrix, DenseVector};

/// Any state entry whose magnitude exceeds this marks the trajectory as
/// diverged; healthy states in all benchmark problems are O(1..10).
pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// A quadratic model `x' = A x + B u + F x^2 + c`.
///
/// `A` is `n x n`, `B` is `n x p`, `F` is `n x n(n+1)/2` acting on the
/// compressed square, and `c` is a constant forcing that is zero unless a
/// problem requires it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub f: DenseMatrix,
    pub c: DenseVector,
}

impl QuadraticModel {
    /// Model without a constant term.
    pub fn new(a: DenseMatrix, b: DenseMatrix, f: DenseMatrix) -> Result<Self> {
        let c = DenseVector::zeros(a.nrows());
        Self::with_constant(a, b, f, c)
    }

    pub fn with_constant(
        a: DenseMatrix,
        b: DenseMatrix,
        f: DenseMatrix,
        c: DenseVector,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim("QuadraticModel", format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::dim(
                "QuadraticModel",
                format!("B has {} rows, expected {}", b.nrows(), n),
            ));
        }
        if f.nrows() != n || f.ncols() != compressed_len(n) {
            return Err(Error::dim(
                "QuadraticModel",
                format!(
                    "F is {}x{}, expected {}x{}",
                    f.nrows(),
                    f.ncols(),
                    n,
                    compressed_len(n)
                ),
            ));
        }
        if c.len() != n {
            return Err(Error::dim(
                "QuadraticModel",
                format!("c has length {}, expected {}", c.len(), n),
            ));
        }
        for m in [&a, &b, &f] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg("QuadraticModel", "non-finite operator entry"));
            }
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("QuadraticModel", "non-finite constant entry"));
        }
        Ok(Self { a, b, f, c })
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension `p`.
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Right-hand side `A x + B u + F x^2 + c`, written into `out`.
    /// `scratch` must have length `compressed_len(n)`.
    fn rhs_into(&self, x: &DenseVector, u: &DenseVector, scratch: &mut DenseVector, out: &mut DenseVector) {
        out.copy_from(&self.c);
        out.gemv(1.0, &self.a, x, 1.0);
        out.gemv(1.0, &self.b, u, 1.0);
        compress_square_into(x, scratch);
        out.gemv(1.0, &self.f, scratch, 1.0);
    }
}

/// A simulated trajectory: `states` has `K + 1` columns (column 0 is the
/// initial condition), `inputs` has `K` columns where column `k` is the
/// input applied over the step from state `k` to state `k + 1`. After a
/// blow-up, the remaining state columns hold NaN and `diverged` is set.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: DenseMatrix,
    pub inputs: DenseMatrix,
    pub dt: f64,
    pub diverged: bool,
}

impl Trajectory {
    /// Number of time steps `K`.
    pub fn steps(&self) -> usize {
        self.inputs.ncols()
    }
}

/// One explicit-Euler step `x + dt * (A x + B u + F x^2 + c)`.
pub fn euler_step(model: &QuadraticModel, x: &DenseVector, u: &DenseVector, dt: f64) -> DenseVector {
    let mut scratch = DenseVector::zeros(compressed_len(model.dim()));
    let mut rhs = DenseVector::zeros(model.dim());
    model.rhs_into(x, u, &mut scratch, &mut rhs);
    x + dt * rhs
}

/// Integrate `model` with explicit Euler for `inputs.ncols()` steps.
///
/// The first state column whose entries are non-finite or exceed
/// [`BLOWUP_THRESHOLD`] in magnitude, and every later column, are replaced
/// by NaN and the trajectory is flagged as diverged.
pub fn simulate(
    model: &QuadraticModel,
    x0: &DenseVector,
    inputs: &DenseMatrix,
    dt: f64,
) -> Result<Trajectory> {
    let n = model.dim();
    if x0.len() != n {
        return Err(Error::dim(
            "simulate",
            format!("initial condition has length {}, expected {}", x0.len(), n),
        ));
    }
    if inputs.nrows() != model.input_dim() {
        return Err(Error::dim(
            "simulate",
            format!(
                "inputs have {} rows, expected {}",
                inputs.nrows(),
                model.input_dim()
            ),
        ));
    }
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::arg("simulate", format!("dt = {dt}")));
    }

    let steps = inputs.ncols();
    let mut states = DenseMatrix::zeros(n, steps + 1);
    states.column_mut(0).copy_from(x0);

    let mut scratch = DenseVector::zeros(compressed_len(n));
    let mut rhs = DenseVector::zeros(n);
    let mut x = x0.clone();
    let mut diverged = false;

    for k in 0..steps {
        let u = inputs.column(k).into_owned();
        model.rhs_into(&x, &u, &mut scratch, &mut rhs);
        x.axpy(dt, &rhs, 1.0);
        if x.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD) {
            diverged = true;
            states.columns_mut(k + 1, steps - k).fill(f64::NAN);
            break;
        }
        states.column_mut(k + 1).copy_from(&x);
    }

    Ok(Trajectory {
        states,
        inputs: inputs.clone(),
        dt,
        diverged,
    })
}
