//! Regularization-weight selection by leave-one-out interpolation
//! validation.
//!
//! For every weight on a log-uniform grid, models are fitted at all
//! training parameters. Each interior parameter is then held out in turn:
//! the remaining models are interpolated at it, simulated with its training
//! inputs, and scored against its training trajectories. The weight with
//! the smallest mean validation error wins, ties going to the larger
//! weight (the stronger stability bias).

use crate::dynamics::{simulate, QuadraticModel};
use crate::error::{Error, Result};
use crate::interp::{ModelFamily, Structure};
use crate::metrics::{lifted_relative_error, ErrorMeasure};
use crate::opinf::{assemble, DesignFactor, FitReport, Method};
use crate::pod::project_trajectory;
use crate::DenseMatrix;

/// Log-uniformly spaced regularization weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `m` points `lo * (hi/lo)^(k/(m-1))`, endpoints exact.
pub fn build_grid(lo: f64, hi: f64, m: usize) -> Result<LambdaGrid> {
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || lo > hi {
        return Err(Error::arg("build_grid", format!("bounds [{lo}, {hi}]")));
    }
    if m < 2 {
        return Err(Error::arg("build_grid", format!("m = {m}")));
    }
    let ratio = hi / lo;
    let mut values: Vec<f64> = (0..m)
        .map(|k| lo * ratio.powf(k as f64 / (m as f64 - 1.0)))
        .collect();
    values[0] = lo;
    values[m - 1] = hi;
    Ok(LambdaGrid { values })
}

/// One training trajectory at one parameter: full-order states plus the
/// inputs that generated them.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    /// `N x (K + 1)` full-order states.
    pub states: DenseMatrix,
    /// `p x K` inputs.
    pub inputs: DenseMatrix,
}

/// Training trajectories for all parameters, also reused as validation
/// data during selection.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub params: Vec<f64>,
    /// `runs[j]` holds the trajectories at `params[j]`.
    pub runs: Vec<Vec<TrainingRun>>,
    pub dt: f64,
}

/// Leave-one-out validation errors: rows are grid weights, columns the
/// interior training parameters.
#[derive(Debug, Clone)]
pub struct ValidationTable {
    pub lambdas: Vec<f64>,
    pub interior_params: Vec<f64>,
    /// `errors[i][j]` for weight `i` and interior parameter `j`.
    pub errors: Vec<Vec<ErrorMeasure>>,
    /// Index of the chosen weight in `lambdas`.
    pub chosen: usize,
}

impl ValidationTable {
    /// Mean across interior parameters for one weight row.
    pub fn row_mean(&self, i: usize) -> ErrorMeasure {
        ErrorMeasure::mean(self.errors[i].iter().copied())
    }
}

/// Outcome of a grid selection.
#[derive(Debug, Clone)]
pub struct Selection {
    pub lambda: f64,
    pub table: ValidationTable,
    /// Models fitted at the chosen weight for all training parameters.
    pub family: ModelFamily,
    /// Fit reports behind the family, in parameter order.
    pub reports: Vec<FitReport>,
}

/// Validation error of an interpolated model against held-out runs:
/// the model is integrated from the projected initial conditions with the
/// held-out inputs and scored by the summed relative lifted error.
pub fn validation_error(
    model: &QuadraticModel,
    held_out: &[TrainingRun],
    v: &DenseMatrix,
    dt: f64,
) -> Result<ErrorMeasure> {
    let mut terms = Vec::with_capacity(held_out.len());
    for run in held_out {
        let x0 = project_trajectory(&run.states.columns(0, 1).into_owned(), v)?
            .column(0)
            .into_owned();
        let prediction = simulate(model, &x0, &run.inputs, dt)?;
        terms.push(lifted_relative_error(&prediction, &run.states, v)?);
    }
    Ok(ErrorMeasure::sum(terms))
}

fn structure_for(method: Method) -> Structure {
    if method.preserves_structure() {
        Structure::SndLinear
    } else {
        Structure::Plain
    }
}

fn fit_all_params(
    factors: &[DesignFactor],
    method: Method,
    lambda: f64,
    eps: f64,
) -> Result<Vec<FitReport>> {
    factors.iter().map(|f| f.fit(method, lambda, eps)).collect()
}

/// Validation error for a single (weight, interior-parameter) cell,
/// computed from scratch. [`select_lambda`] produces exactly these values;
/// the standalone form exists so cells can be recomputed independently.
pub fn leave_one_out_error(
    train: &TrainingSet,
    v: &DenseMatrix,
    lambda: f64,
    held_out: usize,
    method: Method,
    eps: f64,
    constant: bool,
) -> Result<ErrorMeasure> {
    let factors = build_factors(train, v, constant)?;
    let reports = fit_all_params(&factors, method, lambda, eps)?;
    let models: Vec<QuadraticModel> = reports.into_iter().map(|r| r.model).collect();
    let family = ModelFamily::new(train.params.clone(), models, structure_for(method))?;
    Ok(loo_cell(&family, train, v, held_out, eps))
}

fn loo_cell(
    family: &ModelFamily,
    train: &TrainingSet,
    v: &DenseMatrix,
    j: usize,
    eps: f64,
) -> ErrorMeasure {
    let reduced = family.leave_out(j);
    // A model that cannot be interpolated (ill-conditioned reflection,
    // broken structure) is as unusable as a diverging one.
    match reduced.interpolate(train.params[j], eps) {
        Ok(model) => validation_error(&model, &train.runs[j], v, train.dt)
            .unwrap_or(ErrorMeasure::Diverged),
        Err(_) => ErrorMeasure::Diverged,
    }
}

/// Argmin over row means, skipping sentinel rows; exact ties break toward
/// the larger weight (the later index). `None` when every row diverged.
fn choose_weight(means: &[ErrorMeasure]) -> Option<usize> {
    let mut chosen: Option<(usize, ErrorMeasure)> = None;
    for (i, &mean) in means.iter().enumerate() {
        if !mean.is_finite() {
            continue;
        }
        chosen = match chosen {
            None => Some((i, mean)),
            Some((_, best)) if mean.total_cmp(&best) != std::cmp::Ordering::Greater => {
                Some((i, mean))
            }
            keep => keep,
        };
    }
    chosen.map(|(i, _)| i)
}

fn build_factors(train: &TrainingSet, v: &DenseMatrix, constant: bool) -> Result<Vec<DesignFactor>> {
    train
        .runs
        .iter()
        .map(|runs| {
            let mut projected = Vec::with_capacity(runs.len());
            let mut inputs = Vec::with_capacity(runs.len());
            for run in runs {
                projected.push(project_trajectory(&run.states, v)?);
                inputs.push(run.inputs.clone());
            }
            Ok(assemble(&projected, &inputs, train.dt, constant)?.factor())
        })
        .collect()
}

/// Grid sweep with leave-one-out interpolation validation; returns the
/// chosen weight, the full validation table, and the model family fitted
/// at the winner.
pub fn select_lambda(
    train: &TrainingSet,
    v: &DenseMatrix,
    grid: &LambdaGrid,
    method: Method,
    eps: f64,
    constant: bool,
) -> Result<Selection> {
    let m_params = train.params.len();
    if m_params < 3 {
        return Err(Error::arg(
            "select_lambda",
            format!("need at least 3 training parameters, got {m_params}"),
        ));
    }
    if train.runs.len() != m_params {
        return Err(Error::dim(
            "select_lambda",
            "one run set per training parameter required",
        ));
    }

    let factors = build_factors(train, v, constant)?;
    let structure = structure_for(method);
    let interior: Vec<usize> = (1..m_params - 1).collect();

    let mut errors: Vec<Vec<ErrorMeasure>> = Vec::with_capacity(grid.len());
    let mut families: Vec<Vec<FitReport>> = Vec::with_capacity(grid.len());
    for &lambda in grid.values() {
        let reports = fit_all_params(&factors, method, lambda, eps)?;
        let models: Vec<QuadraticModel> = reports.iter().map(|r| r.model.clone()).collect();
        let family = ModelFamily::new(train.params.clone(), models, structure)?;
        let row: Vec<ErrorMeasure> = interior
            .iter()
            .map(|&j| loo_cell(&family, train, v, j, eps))
            .collect();
        errors.push(row);
        families.push(reports);
    }

    let means: Vec<ErrorMeasure> = (0..grid.len())
        .map(|i| ErrorMeasure::mean(errors[i].iter().copied()))
        .collect();
    let chosen = choose_weight(&means).ok_or(Error::SelectionFailed)?;

    let reports = families.swap_remove(chosen);
    let models: Vec<QuadraticModel> = reports.iter().map(|r| r.model.clone()).collect();
    let family = ModelFamily::new(train.params.clone(), models, structure)?;

    Ok(Selection {
        lambda: grid.values()[chosen],
        table: ValidationTable {
            lambdas: grid.values().to_vec(),
            interior_params: interior.iter().map(|&j| train.params[j]).collect(),
            errors,
            chosen,
        },
        family,
        reports,
    })
}
