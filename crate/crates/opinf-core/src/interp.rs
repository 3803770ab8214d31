//! Parametric interpolation of learned model families.
//!
//! Two paths: plain piecewise-linear interpolation of all operator entries
//! followed by eigenvalue reflection on the linear part, and a
//! Cholesky-factor path for families whose linear operators are symmetric
//! negative definite. The latter interpolates the strict lower triangle of
//! the factors linearly and the diagonal in log space, which keeps every
//! interpolated linear operator inside the definite cone.

use crate::dynamics::QuadraticModel;
use crate::error::{Error, Result};
use crate::stability::reflect_eigenvalues;
use crate::{DenseMatrix, DenseVector};

/// Structure tag governing which interpolation path a family uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Plain,
    /// Linear operators are symmetric negative definite.
    SndLinear,
}

/// Models learned at strictly increasing training parameters.
#[derive(Debug, Clone)]
pub struct ModelFamily {
    params: Vec<f64>,
    models: Vec<QuadraticModel>,
    structure: Structure,
}

impl ModelFamily {
    pub fn new(params: Vec<f64>, models: Vec<QuadraticModel>, structure: Structure) -> Result<Self> {
        if params.is_empty() || params.len() != models.len() {
            return Err(Error::arg(
                "ModelFamily",
                format!("{} parameters, {} models", params.len(), models.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite())
            || params.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::arg("ModelFamily", "parameters must be finite and strictly increasing"));
        }
        let (n, p) = (models[0].dim(), models[0].input_dim());
        if models.iter().any(|m| m.dim() != n || m.input_dim() != p) {
            return Err(Error::dim("ModelFamily", "models have differing dimensions"));
        }
        Ok(Self {
            params,
            models,
            structure,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn models(&self) -> &[QuadraticModel] {
        &self.models
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Family with node `j` removed (leave-one-out validation).
    pub fn leave_out(&self, j: usize) -> ModelFamily {
        let mut params = self.params.clone();
        let mut models = self.models.clone();
        params.remove(j);
        models.remove(j);
        ModelFamily {
            params,
            models,
            structure: self.structure,
        }
    }

    /// Interpolate at `mu` along the path chosen by the structure tag.
    pub fn interpolate(&self, mu: f64, eps: f64) -> Result<QuadraticModel> {
        match self.structure {
            Structure::Plain => interp_entrywise(self, mu, eps),
            Structure::SndLinear => interp_log_cholesky(self, mu),
        }
    }

    /// Bracketing interval and blend weight for `mu`: returns
    /// `(left index, right index, weight of the right node)`.
    fn bracket(&self, mu: f64) -> Result<(usize, usize, f64)> {
        let lo = self.params[0];
        let hi = self.params[self.params.len() - 1];
        if !(lo..=hi).contains(&mu) {
            return Err(Error::Extrapolation { mu, lo, hi });
        }
        let right = self.params.partition_point(|&p| p < mu).min(self.params.len() - 1);
        if right == 0 {
            return Ok((0, 0, 0.0));
        }
        let left = right - 1;
        if self.params[right] == mu {
            return Ok((right, right, 0.0));
        }
        let span = self.params[right] - self.params[left];
        Ok((left, right, (mu - self.params[left]) / span))
    }
}

fn blend(a: &DenseMatrix, b: &DenseMatrix, w: f64) -> DenseMatrix {
    a * (1.0 - w) + b * w
}

/// Piecewise-linear interpolation of all operator entries between the
/// bracketing nodes, followed by eigenvalue reflection on the linear part.
pub fn interp_entrywise(family: &ModelFamily, mu: f64, eps: f64) -> Result<QuadraticModel> {
    let (l, r, w) = family.bracket(mu)?;
    let (ml, mr) = (&family.models()[l], &family.models()[r]);
    let a = reflect_eigenvalues(&blend(&ml.a, &mr.a, w), eps)?;
    let b = blend(&ml.b, &mr.b, w);
    let f = blend(&ml.f, &mr.f, w);
    let c = DenseVector::from_fn(ml.c.len(), |i, _| (1.0 - w) * ml.c[i] + w * mr.c[i]);
    QuadraticModel::with_constant(a, b, f, c)
}

/// Structure-preserving interpolation for symmetric negative definite
/// linear operators: factor `A_i = -L_i L_i^T`, interpolate the strict
/// lower triangles linearly and the diagonals in log space, and reassemble
/// `A = -L L^T`. The remaining operators interpolate entrywise.
pub fn interp_log_cholesky(family: &ModelFamily, mu: f64) -> Result<QuadraticModel> {
    let (l, r, w) = family.bracket(mu)?;
    let (ml, mr) = (&family.models()[l], &family.models()[r]);

    let fl = neg_cholesky_factor(&ml.a)?;
    let fr = neg_cholesky_factor(&mr.a)?;
    let n = fl.nrows();
    let factor = DenseMatrix::from_fn(n, n, |i, j| {
        if i > j {
            (1.0 - w) * fl[(i, j)] + w * fr[(i, j)]
        } else if i == j {
            ((1.0 - w) * fl[(i, i)].ln() + w * fr[(i, i)].ln()).exp()
        } else {
            0.0
        }
    });
    let a = -(&factor * factor.transpose());

    let b = blend(&ml.b, &mr.b, w);
    let f = blend(&ml.f, &mr.f, w);
    let c = DenseVector::from_fn(ml.c.len(), |i, _| (1.0 - w) * ml.c[i] + w * mr.c[i]);
    QuadraticModel::with_constant(a, b, f, c)
}

/// Cholesky factor `L` with `A = -L L^T`; fails when `-A` is not positive
/// definite.
fn neg_cholesky_factor(a: &DenseMatrix) -> Result<DenseMatrix> {
    let neg = -a;
    let chol = neg.cholesky().ok_or_else(|| Error::Structure {
        context: "interp_log_cholesky",
        details: "linear operator is not symmetric negative definite".into(),
    })?;
    Ok(chol.l())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::compressed_len;
    use crate::stability::is_hurwitz;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-10;

    fn scalar_family(values: &[(f64, f64)], structure: Structure) -> ModelFamily {
        let params = values.iter().map(|v| v.0).collect();
        let models = values
            .iter()
            .map(|&(_, a)| {
                QuadraticModel::new(
                    DenseMatrix::from_row_slice(1, 1, &[a]),
                    DenseMatrix::from_row_slice(1, 1, &[1.0]),
                    DenseMatrix::from_row_slice(1, 1, &[0.1]),
                )
                .unwrap()
            })
            .collect();
        ModelFamily::new(params, models, structure).unwrap()
    }

    fn snd_family(params: &[f64], mats: &[DenseMatrix]) -> ModelFamily {
        let n = mats[0].nrows();
        let models = mats
            .iter()
            .map(|a| {
                QuadraticModel::new(
                    a.clone(),
                    DenseMatrix::zeros(n, 1),
                    DenseMatrix::zeros(n, compressed_len(n)),
                )
                .unwrap()
            })
            .collect();
        ModelFamily::new(params.to_vec(), models, Structure::SndLinear).unwrap()
    }

    #[test]
    fn family_validation() {
        assert!(ModelFamily::new(vec![], vec![], Structure::Plain).is_err());
        let m = QuadraticModel::new(
            DenseMatrix::from_row_slice(1, 1, &[-1.0]),
            DenseMatrix::zeros(1, 1),
            DenseMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(ModelFamily::new(vec![1.0, 1.0], vec![m.clone(), m.clone()], Structure::Plain).is_err());
        assert!(ModelFamily::new(vec![1.0, 2.0], vec![m.clone(), m], Structure::Plain).is_ok());
    }

    #[test]
    fn entrywise_reproduces_nodes() {
        let family = scalar_family(&[(0.0, -1.0), (1.0, -3.0)], Structure::Plain);
        let at_node = interp_entrywise(&family, 0.0, EPS).unwrap();
        assert_eq!(at_node.a[(0, 0)], -1.0);
        let mid = interp_entrywise(&family, 0.5, EPS).unwrap();
        assert_relative_eq!(mid.a[(0, 0)], -2.0, epsilon = 1e-14);
        assert!(interp_entrywise(&family, 1.5, EPS).is_err());
        assert!(interp_entrywise(&family, -0.5, EPS).is_err());
    }

    #[test]
    fn entrywise_reflects_unstable_interpolants() {
        // Positive interpolant just above the first node gets reflected.
        let family = scalar_family(&[(0.0, 1.0), (1.0, -3.0)], Structure::Plain);
        let near_left = interp_entrywise(&family, 0.05, EPS).unwrap();
        assert_relative_eq!(near_left.a[(0, 0)], -EPS, epsilon = 1e-14);
        // Past the sign change the interpolant is already negative.
        let later = interp_entrywise(&family, 0.5, EPS).unwrap();
        assert_relative_eq!(later.a[(0, 0)], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn entrywise_output_is_hurwitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 4;
        let make = |rng: &mut ChaCha8Rng, shift: f64| {
            QuadraticModel::new(
                DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
                    + shift * DenseMatrix::identity(n, n),
                DenseMatrix::zeros(n, 1),
                DenseMatrix::zeros(n, compressed_len(n)),
            )
            .unwrap()
        };
        let models = vec![make(&mut rng, 0.5), make(&mut rng, -0.5), make(&mut rng, 0.2)];
        let family = ModelFamily::new(vec![0.0, 1.0, 2.0], models, Structure::Plain).unwrap();
        for k in 0..=40 {
            let mu = 2.0 * k as f64 / 40.0;
            let model = interp_entrywise(&family, mu, EPS).unwrap();
            assert!(is_hurwitz(&model.a), "mu = {mu}");
        }
    }

    #[test]
    fn log_cholesky_diagonal_midpoint() {
        // Nodes -I and -4I: factors I and 2I, log-midpoint sqrt(2),
        // so the midpoint operator is -2I.
        let family = snd_family(
            &[0.0, 1.0],
            &[-DenseMatrix::identity(3, 3), -4.0 * DenseMatrix::identity(3, 3)],
        );
        let mid = interp_log_cholesky(&family, 0.5).unwrap();
        assert_relative_eq!(mid.a, -2.0 * DenseMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn log_cholesky_reproduces_nodes_and_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let mut mats = Vec::new();
        for _ in 0..3 {
            let raw = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            mats.push(-(&raw * raw.transpose() + DenseMatrix::identity(n, n)));
        }
        let family = snd_family(&[1.0, 2.0, 3.0], &mats);
        for (i, mu) in [1.0, 2.0, 3.0].iter().enumerate() {
            let model = interp_log_cholesky(&family, *mu).unwrap();
            assert_relative_eq!(model.a, mats[i], epsilon = 1e-12, max_relative = 1e-12);
        }

        // Identical nodes give the same matrix everywhere.
        let same = snd_family(&[0.0, 1.0], &[mats[0].clone(), mats[0].clone()]);
        for k in 0..=10 {
            let model = interp_log_cholesky(&same, k as f64 / 10.0).unwrap();
            assert_relative_eq!(model.a, mats[0], epsilon = 1e-11, max_relative = 1e-11);
        }
    }

    #[test]
    fn log_cholesky_stays_in_the_definite_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 5;
        let mut mats = Vec::new();
        for _ in 0..4 {
            let raw = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            mats.push(-(&raw * raw.transpose() + 0.05 * DenseMatrix::identity(n, n)));
        }
        let family = snd_family(&[0.0, 0.3, 0.7, 1.0], &mats);
        for k in 0..50 {
            let mu = k as f64 / 49.0;
            let model = interp_log_cholesky(&family, mu).unwrap();
            let sym_err = (&model.a - model.a.transpose()).norm();
            assert!(sym_err <= 1e-12 * model.a.norm());
            let max_eig = model.a.clone().symmetric_eigen().eigenvalues.max();
            assert!(max_eig < 0.0, "mu = {mu}: max eigenvalue {max_eig}");
        }
    }

    #[test]
    fn log_cholesky_rejects_indefinite_nodes() {
        let family = snd_family(&[0.0, 1.0], &[
            -DenseMatrix::identity(2, 2),
            DenseMatrix::identity(2, 2),
        ]);
        assert!(matches!(
            interp_log_cholesky(&family, 0.5),
            Err(Error::Structure { .. })
        ));
    }

    #[test]
    fn dispatch_follows_structure_tag() {
        let family = snd_family(
            &[0.0, 1.0],
            &[-DenseMatrix::identity(2, 2), -4.0 * DenseMatrix::identity(2, 2)],
        );
        let via_tag = family.interpolate(0.5, EPS).unwrap();
        assert_relative_eq!(via_tag.a, -2.0 * DenseMatrix::identity(2, 2), epsilon = 1e-12);

        // The plain path on the same nodes gives the arithmetic midpoint.
        let plain = ModelFamily::new(
            family.params().to_vec(),
            family.models().to_vec(),
            Structure::Plain,
        )
        .unwrap();
        let arithmetic = plain.interpolate(0.5, EPS).unwrap();
        assert_relative_eq!(arithmetic.a, -2.5 * DenseMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn leave_out_removes_exactly_one_node() {
        let family = scalar_family(&[(0.0, -1.0), (1.0, -2.0), (2.0, -3.0)], Structure::Plain);
        let reduced = family.leave_out(1);
        assert_eq!(reduced.params(), &[0.0, 2.0]);
        assert_eq!(reduced.models()[1].a[(0, 0)], -3.0);
    }
}
