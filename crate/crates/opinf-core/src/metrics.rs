//! Scalar error measures over lifted trajectories.
//!
//! All errors are sums of relative Frobenius mismatches
//! `|| V X_hat - X ||_F / || X ||_F` over a list of (prediction, truth)
//! pairs. A diverged prediction poisons the whole sum: the result is the
//! divergence sentinel, which orders above every finite value.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::DenseMatrix;

/// A nonnegative error value or the divergence sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorMeasure {
    Finite(f64),
    Diverged,
}

impl ErrorMeasure {
    pub fn is_finite(self) -> bool {
        matches!(self, ErrorMeasure::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            ErrorMeasure::Finite(v) => Some(v),
            ErrorMeasure::Diverged => None,
        }
    }

    /// Sum with sentinel absorption; any non-finite accumulation collapses
    /// to the sentinel.
    pub fn sum<I: IntoIterator<Item = ErrorMeasure>>(items: I) -> ErrorMeasure {
        let mut acc = 0.0;
        for item in items {
            match item {
                ErrorMeasure::Finite(v) => acc += v,
                ErrorMeasure::Diverged => return ErrorMeasure::Diverged,
            }
        }
        if acc.is_finite() {
            ErrorMeasure::Finite(acc)
        } else {
            ErrorMeasure::Diverged
        }
    }

    /// Mean over `count` cells; a sentinel cell makes the mean the sentinel.
    pub fn mean<I: IntoIterator<Item = ErrorMeasure>>(items: I) -> ErrorMeasure {
        let mut acc = 0.0;
        let mut count = 0usize;
        for item in items {
            match item {
                ErrorMeasure::Finite(v) => {
                    acc += v;
                    count += 1;
                }
                ErrorMeasure::Diverged => return ErrorMeasure::Diverged,
            }
        }
        if count == 0 || !acc.is_finite() {
            ErrorMeasure::Diverged
        } else {
            ErrorMeasure::Finite(acc / count as f64)
        }
    }
}

impl PartialOrd for ErrorMeasure {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.total_cmp(other))
    }
}

impl ErrorMeasure {
    /// Total order with the sentinel above every finite value.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (ErrorMeasure::Finite(a), ErrorMeasure::Finite(b)) => a.total_cmp(b),
            (ErrorMeasure::Finite(_), ErrorMeasure::Diverged) => std::cmp::Ordering::Less,
            (ErrorMeasure::Diverged, ErrorMeasure::Finite(_)) => std::cmp::Ordering::Greater,
            (ErrorMeasure::Diverged, ErrorMeasure::Diverged) => std::cmp::Ordering::Equal,
        }
    }
}

impl std::fmt::Display for ErrorMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorMeasure::Finite(v) => write!(f, "{v}"),
            ErrorMeasure::Diverged => f.write_str("diverged"),
        }
    }
}

/// Relative lifted error of one prediction against one full-order truth:
/// `|| V X_hat - X ||_F / || X ||_F`, or the sentinel on divergence.
pub fn lifted_relative_error(
    prediction: &Trajectory,
    truth: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<ErrorMeasure> {
    if prediction.diverged {
        return Ok(ErrorMeasure::Diverged);
    }
    if v.ncols() != prediction.states.nrows() || v.nrows() != truth.nrows() {
        return Err(Error::dim(
            "lifted_relative_error",
            format!(
                "basis {}x{}, prediction dim {}, truth dim {}",
                v.nrows(),
                v.ncols(),
                prediction.states.nrows(),
                truth.nrows()
            ),
        ));
    }
    if truth.ncols() != prediction.states.ncols() {
        return Err(Error::dim(
            "lifted_relative_error",
            format!(
                "prediction has {} columns, truth has {}",
                prediction.states.ncols(),
                truth.ncols()
            ),
        ));
    }
    let ratio = (v * &prediction.states - truth).norm() / truth.norm();
    if ratio.is_finite() {
        Ok(ErrorMeasure::Finite(ratio))
    } else {
        Ok(ErrorMeasure::Diverged)
    }
}

/// Sum of relative lifted errors over (prediction, truth) pairs — the
/// training-error measure when the pairs are the training trajectories.
pub fn train_error(
    predictions: &[Trajectory],
    truths: &[DenseMatrix],
    v: &DenseMatrix,
) -> Result<ErrorMeasure> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::arg(
            "train_error",
            format!("{} predictions, {} truths", predictions.len(), truths.len()),
        ));
    }
    let mut terms = Vec::with_capacity(predictions.len());
    for (pred, truth) in predictions.iter().zip(truths) {
        terms.push(lifted_relative_error(pred, truth, v)?);
    }
    Ok(ErrorMeasure::sum(terms))
}

/// Summation structure of the test error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestErrorVariant {
    /// One trajectory at one parameter.
    SingleTrajectory,
    /// One trajectory per test parameter.
    PerParameter { param_count: usize },
    /// A full grid of test parameters times input trajectories.
    PerParameterAndInput {
        param_count: usize,
        inputs_per_param: usize,
    },
}

impl TestErrorVariant {
    fn expected_pairs(self) -> usize {
        match self {
            TestErrorVariant::SingleTrajectory => 1,
            TestErrorVariant::PerParameter { param_count } => param_count,
            TestErrorVariant::PerParameterAndInput {
                param_count,
                inputs_per_param,
            } => param_count * inputs_per_param,
        }
    }
}

/// Test error over the pair list prescribed by `variant`.
pub fn test_error(
    predictions: &[Trajectory],
    truths: &[DenseMatrix],
    v: &DenseMatrix,
    variant: TestErrorVariant,
) -> Result<ErrorMeasure> {
    if predictions.len() != truths.len() || predictions.len() != variant.expected_pairs() {
        return Err(Error::arg(
            "test_error",
            format!(
                "expected {} pairs, got {} predictions and {} truths",
                variant.expected_pairs(),
                predictions.len(),
                truths.len()
            ),
        ));
    }
    let mut terms = Vec::with_capacity(predictions.len());
    for (pred, truth) in predictions.iter().zip(truths) {
        terms.push(lifted_relative_error(pred, truth, v)?);
    }
    Ok(ErrorMeasure::sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reduced_traj(states: DenseMatrix, diverged: bool) -> Trajectory {
        let k = states.ncols() - 1;
        Trajectory {
            states,
            inputs: DenseMatrix::zeros(1, k),
            dt: 0.1,
            diverged,
        }
    }

    #[test]
    fn sentinel_ordering_and_aggregation() {
        let a = ErrorMeasure::Finite(0.5);
        let b = ErrorMeasure::Finite(2.0);
        let d = ErrorMeasure::Diverged;
        assert!(a < b);
        assert!(b < d);
        assert_eq!(d.total_cmp(&d), std::cmp::Ordering::Equal);
        assert_eq!(ErrorMeasure::sum([a, b]), ErrorMeasure::Finite(2.5));
        assert_eq!(ErrorMeasure::sum([a, d]), ErrorMeasure::Diverged);
        assert_eq!(ErrorMeasure::mean([a, b]), ErrorMeasure::Finite(1.25));
        assert_eq!(ErrorMeasure::mean([b, d]), ErrorMeasure::Diverged);
        assert_eq!(ErrorMeasure::sum([ErrorMeasure::Finite(f64::MAX); 3]), ErrorMeasure::Diverged);
    }

    #[test]
    fn perfect_reconstruction_hits_projection_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let truth = DenseMatrix::from_fn(6, 9, |_, _| rng.gen_range(-1.0..1.0));
        let basis = crate::pod::pod_basis(&truth, 3).unwrap();
        let projected = basis.v.transpose() * &truth;
        let err = lifted_relative_error(&reduced_traj(projected, false), &truth, &basis.v)
            .unwrap()
            .value()
            .unwrap();
        let floor = (&truth - &basis.v * basis.v.transpose() * &truth).norm() / truth.norm();
        assert_relative_eq!(err, floor, max_relative = 1e-12);
    }

    #[test]
    fn zero_prediction_counts_one_per_pair() {
        let truth = DenseMatrix::from_element(3, 4, 2.0);
        let v = DenseMatrix::identity(3, 3);
        let zeros = || reduced_traj(DenseMatrix::zeros(3, 4), false);
        let err = train_error(&[zeros(), zeros(), zeros()], &[truth.clone(), truth.clone(), truth], &v)
            .unwrap();
        assert_eq!(err, ErrorMeasure::Finite(3.0));
    }

    #[test]
    fn truth_against_itself_is_zero_under_identity_basis() {
        let truth = DenseMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let v = DenseMatrix::identity(2, 2);
        let err = test_error(
            &[reduced_traj(truth.clone(), false)],
            &[truth],
            &v,
            TestErrorVariant::SingleTrajectory,
        )
        .unwrap();
        assert_eq!(err, ErrorMeasure::Finite(0.0));
    }

    #[test]
    fn diverged_prediction_poisons_the_sum() {
        let truth = DenseMatrix::from_element(2, 3, 1.0);
        let v = DenseMatrix::identity(2, 2);
        let good = reduced_traj(truth.clone(), false);
        let bad = reduced_traj(DenseMatrix::from_element(2, 3, f64::NAN), true);
        let err = test_error(
            &[good, bad],
            &[truth.clone(), truth],
            &v,
            TestErrorVariant::PerParameter { param_count: 2 },
        )
        .unwrap();
        assert_eq!(err, ErrorMeasure::Diverged);
    }

    #[test]
    fn variant_checks_pair_counts() {
        let truth = DenseMatrix::from_element(2, 3, 1.0);
        let v = DenseMatrix::identity(2, 2);
        let t = reduced_traj(truth.clone(), false);
        assert!(test_error(
            std::slice::from_ref(&t),
            std::slice::from_ref(&truth),
            &v,
            TestErrorVariant::PerParameterAndInput {
                param_count: 7,
                inputs_per_param: 5
            },
        )
        .is_err());
        let pairs: Vec<_> = (0..35).map(|_| t.clone()).collect();
        let truths: Vec<_> = (0..35).map(|_| truth.clone()).collect();
        assert!(test_error(
            &pairs,
            &truths,
            &v,
            TestErrorVariant::PerParameterAndInput {
                param_count: 7,
                inputs_per_param: 5
            },
        )
        .is_ok());
    }

    #[test]
    fn errors_invariant_under_orthogonal_reduced_change_of_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let truth = DenseMatrix::from_fn(5, 8, |_, _| rng.gen_range(-1.0..1.0));
        let basis = crate::pod::pod_basis(&truth, 3).unwrap();
        let xr = DenseMatrix::from_fn(3, 8, |_, _| rng.gen_range(-1.0..1.0));

        // Random orthogonal Q from the QR of a random matrix.
        let q = DenseMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0))
            .qr()
            .q();
        let rotated_v = &basis.v * &q;
        let rotated_x = q.transpose() * &xr;

        let e1 = lifted_relative_error(&reduced_traj(xr, false), &truth, &basis.v)
            .unwrap()
            .value()
            .unwrap();
        let e2 = lifted_relative_error(&reduced_traj(rotated_x, false), &truth, &rotated_v)
            .unwrap()
            .value()
            .unwrap();
        assert_relative_eq!(e1, e2, max_relative = 1e-12);
    }
}
