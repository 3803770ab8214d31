//! The three benchmark full-order model families and seeded signal
//! generators.
//!
//! Each family maps a scalar parameter to a [`QuadraticModel`] of fixed
//! state dimension. Construction is deterministic: the same constructor
//! arguments (including seeds) always produce bit-identical operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::QuadraticModel;
use crate::error::{Error, Result};
use crate::quadform::{compressed_len, pair_index};
use crate::{DenseMatrix, DenseVector};

/// Fixed RNG stream ids so that different draws never overlap.
const STREAM_SYNTHETIC: u64 = 0x01;
const STREAM_SIGNAL: u64 = 0x02;

/// A parameterized family of full-order models.
#[derive(Debug, Clone)]
pub enum FomFamily {
    /// Dense random quadratic system with `A(mu) = -mu (A_s + A_s^T + 2N I)`;
    /// `A_s`, `B`, `F` have i.i.d. uniform `[0, 1]` entries drawn once per
    /// seed and shared across parameters.
    Synthetic {
        shifted: DenseMatrix,
        b: DenseMatrix,
        f: DenseMatrix,
        seed: u64,
    },
    /// Viscous Burgers' equation on `(0, 1)` with Dirichlet boundary input
    /// on the left and zero on the right, `N` interior points.
    Burgers { n: usize },
    /// Reaction-diffusion on the unit square with homogeneous Neumann
    /// boundary conditions, `divisions^2` cell-centered nodes.
    ReactionDiffusion { divisions: usize },
}

impl FomFamily {
    pub fn state_dim(&self) -> usize {
        match self {
            FomFamily::Synthetic { shifted, .. } => shifted.nrows(),
            FomFamily::Burgers { n } => *n,
            FomFamily::ReactionDiffusion { divisions } => divisions * divisions,
        }
    }

    pub fn input_dim(&self) -> usize {
        1
    }

    /// Parameter domain `[lo, hi]`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            FomFamily::Synthetic { .. } => (0.1, 1.0),
            FomFamily::Burgers { .. } => (10.0, 100.0),
            FomFamily::ReactionDiffusion { .. } => (1.0, 1.5),
        }
    }

    /// Build the full-order model at parameter `mu`.
    pub fn model(&self, mu: f64) -> QuadraticModel {
        match self {
            FomFamily::Synthetic { shifted, b, f, .. } => {
                QuadraticModel::new(-mu * shifted, b.clone(), f.clone())
                    .expect("synthetic family shapes are consistent by construction")
            }
            FomFamily::Burgers { n } => build_burgers(*n, mu),
            FomFamily::ReactionDiffusion { divisions } => {
                build_reaction_diffusion(*divisions, mu)
            }
        }
    }
}

/// Synthetic family of state dimension `n >= 2` for a given seed.
///
/// The quadratic operator is drawn entrywise uniform and then scaled to
/// unit Frobenius norm. Without the scaling the positive quadratic term
/// (row sums growing like `N^2 / 16`) overwhelms the `2 N mu` linear
/// damping from unit-box initial conditions and every trajectory blows up
/// in finite time.
pub fn build_synthetic(n: usize, seed: u64) -> FomFamily {
    assert!(n >= 2, "build_synthetic: N must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_SYNTHETIC);
    // Draw order is part of the determinism contract: A_s, then B, then F.
    let a_s = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
    let b = DenseMatrix::from_fn(n, 1, |_, _| rng.gen_range(0.0..1.0));
    let mut f = DenseMatrix::from_fn(n, compressed_len(n), |_, _| rng.gen_range(0.0..1.0));
    let norm = f.norm();
    f /= norm;
    let shifted = &a_s + a_s.transpose() + 2.0 * n as f64 * DenseMatrix::identity(n, n);
    FomFamily::Synthetic {
        shifted,
        b,
        f,
        seed,
    }
}

/// Finite-difference Burgers' model `x_t = mu x_ww - x x_w` on `n` interior
/// points of `(0, 1)` with `x(0, t) = u(t)` and `x(1, t) = 0`.
///
/// Diffusion uses the standard three-point stencil; convection uses
/// first-order upwind in conservative form `-(x^2)_w / 2`, which maps onto
/// the compressed quadratic operator. The boundary value enters linearly
/// through `B` via the diffusion stencil; its quadratic convection coupling
/// cannot be expressed in the model form and is omitted.
pub fn build_burgers(n: usize, mu: f64) -> QuadraticModel {
    assert!(n >= 3, "build_burgers: N must be at least 3");
    assert!(
        (10.0..=100.0).contains(&mu),
        "build_burgers: mu = {mu} outside [10, 100]"
    );
    let h = 1.0 / (n as f64 + 1.0);
    let diff = mu / (h * h);

    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -2.0 * diff;
        if i > 0 {
            a[(i, i - 1)] = diff;
        }
        if i + 1 < n {
            a[(i, i + 1)] = diff;
        }
    }

    let mut b = DenseMatrix::zeros(n, 1);
    b[(0, 0)] = diff;

    // Upwind flux difference -(x_i^2 - x_{i-1}^2) / (2h); the x_0^2 = u^2
    // boundary term at i = 0 is dropped (see module docs).
    let mut f = DenseMatrix::zeros(n, compressed_len(n));
    let half_h = 1.0 / (2.0 * h);
    for i in 0..n {
        f[(i, pair_index(i, i))] -= half_h;
        if i > 0 {
            f[(i, pair_index(i - 1, i - 1))] += half_h;
        }
    }

    QuadraticModel::new(a, b, f).expect("burgers shapes are consistent by construction")
}

/// Reaction coefficient `-(a sin(mu) + 2) exp(-mu^2 b)` of the nonlinear
/// source, with `a = 0.1`, `b = 2.7`.
fn reaction_scale(mu: f64) -> f64 {
    -(0.1 * mu.sin() + 2.0) * (-mu * mu * 2.7).exp()
}

const REACTION_C: f64 = 1.8;

/// Reaction-diffusion model on a `divisions x divisions` cell-centered grid
/// of the unit square (`N = divisions^2`), homogeneous Neumann boundary.
///
/// The Laplacian (mirrored-ghost Neumann) plus the linear part of the
/// source Taylor expansion form `A`; the spatial forcing profile
/// `s = sin(2 pi xi_1) sin(2 pi xi_2) / 10` forms `B`; the quadratic part
/// of the source sits on the diagonal pairs of `F`; its constant part is
/// the model constant `c`.
pub fn build_reaction_diffusion(divisions: usize, mu: f64) -> QuadraticModel {
    assert!(divisions >= 2, "build_reaction_diffusion: need at least 2 divisions");
    assert!(
        (1.0..=1.5).contains(&mu),
        "build_reaction_diffusion: mu = {mu} outside [1, 1.5]"
    );
    let d = divisions;
    let n = d * d;
    let h = 1.0 / d as f64;
    let inv_h2 = 1.0 / (h * h);

    let gamma = reaction_scale(mu);
    let lin = gamma * mu * REACTION_C;
    let quad = gamma * (mu * REACTION_C) * (mu * REACTION_C) / 2.0;

    let mut a = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(n, 1);
    let mut f = DenseMatrix::zeros(n, compressed_len(n));
    let c = DenseVector::from_element(n, gamma);

    for iy in 0..d {
        for ix in 0..d {
            let k = iy * d + ix;
            // Mirrored ghosts drop the outward connection entirely, so each
            // interior neighbor contributes (x_nb - x_k) / h^2.
            let mut neighbors = 0.0;
            if ix > 0 {
                a[(k, k - 1)] = inv_h2;
                neighbors += 1.0;
            }
            if ix + 1 < d {
                a[(k, k + 1)] = inv_h2;
                neighbors += 1.0;
            }
            if iy > 0 {
                a[(k, k - d)] = inv_h2;
                neighbors += 1.0;
            }
            if iy + 1 < d {
                a[(k, k + d)] = inv_h2;
                neighbors += 1.0;
            }
            a[(k, k)] = -neighbors * inv_h2 + lin;

            let xi1 = (ix as f64 + 0.5) * h;
            let xi2 = (iy as f64 + 0.5) * h;
            b[(k, 0)] = 0.1 * (2.0 * std::f64::consts::PI * xi1).sin()
                * (2.0 * std::f64::consts::PI * xi2).sin();

            f[(k, pair_index(k, k))] = quad;
        }
    }

    QuadraticModel::with_constant(a, b, f, c)
        .expect("reaction-diffusion shapes are consistent by construction")
}

/// Specification of a piecewise-constant uniform random signal: one
/// independent draw from `[lo, hi]` per entry per time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub lo: f64,
    pub hi: f64,
    pub len: usize,
    pub seed: u64,
}

impl SignalSpec {
    pub fn new(lo: f64, hi: f64, len: usize, seed: u64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::arg("SignalSpec", format!("range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, len, seed })
    }
}

/// Sample a `rows x spec.len` matrix of i.i.d. uniform entries, column by
/// column. Deterministic under the spec's seed.
pub fn sample_signal(spec: &SignalSpec, rows: usize) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(STREAM_SIGNAL);
    let mut out = DenseMatrix::zeros(rows, spec.len);
    for k in 0..spec.len {
        for r in 0..rows {
            out[(r, k)] = if spec.lo == spec.hi {
                spec.lo
            } else {
                rng.gen_range(spec.lo..spec.hi)
            };
        }
    }
    out
}
