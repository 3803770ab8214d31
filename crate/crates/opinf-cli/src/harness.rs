//! Experiment orchestration: data generation, per-method training,
//! evaluation, and artifact emission.
//!
//! Everything is deterministic under the config seed. Random draws are
//! seeded per purpose and index through a splitmix64 chain, so any stage
//! can regenerate exactly the trajectories another stage used. Training
//! inputs are seeded per (parameter, run); training initial conditions per
//! run only, which makes "reuse the training initial conditions at test
//! time" well defined at test parameters that are not training parameters.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use opinf_core::dynamics::{simulate, QuadraticModel, Trajectory};
use opinf_core::fom::{sample_signal, FomFamily, SignalSpec};
use opinf_core::interp::{ModelFamily, Structure};
use opinf_core::metrics::{lifted_relative_error, ErrorMeasure};
use opinf_core::pod::{assemble_snapshots, galerkin_reduce, pod_basis, PodBasis};
use opinf_core::select::{build_grid, select_lambda, Selection, TrainingRun, TrainingSet};
use opinf_core::stability::stability_radius;
use opinf_core::{DenseMatrix, DenseVector};

use crate::config::{ExperimentConfig, InitSpec, MethodSpec, Range};
use crate::io::{self, ModelManifest, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("{0}")]
    Core(String),
    #[error("full-order model: {0}")]
    Fom(String),
    #[error("missing artifact: {0} (run `{1}` first)")]
    MissingArtifact(String, String),
}

impl From<opinf_core::Error> for HarnessError {
    fn from(e: opinf_core::Error) -> Self {
        HarnessError::Core(e.to_string())
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;

// Seed stream tags.
const TAG_FOM: u64 = 1;
const TAG_BASIS_INPUT: u64 = 2;
const TAG_BASIS_INIT: u64 = 3;
const TAG_TRAIN_INPUT: u64 = 4;
const TAG_TRAIN_INIT: u64 = 5;
const TAG_TEST_INPUT: u64 = 6;
const TAG_TEST_INIT: u64 = 7;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn subseed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &t in tags {
        state = splitmix64(state ^ t.wrapping_mul(0x2545f4914f6cdd1d));
    }
    state
}

/// All simulated data of one experiment.
pub struct GeneratedData {
    pub fom: FomFamily,
    /// `[param][run]` trajectories behind the basis.
    pub basis_runs: Vec<Vec<Trajectory>>,
    /// POD basis at the largest requested dimension.
    pub pod: PodBasis,
    /// `[param][run]` training trajectories.
    pub train_runs: Vec<Vec<Trajectory>>,
    pub test_params: Vec<f64>,
    /// `[test param][run]` test truth trajectories.
    pub test_runs: Vec<Vec<Trajectory>>,
}

fn input_signal(range: Range, steps: usize, seed: u64) -> DenseMatrix {
    let spec = SignalSpec::new(range.lo, range.hi, steps, seed)
        .expect("ranges validated with the config");
    sample_signal(&spec, 1)
}

fn initial_condition(
    spec: InitSpec,
    state_dim: usize,
    pod: Option<&PodBasis>,
    seed: u64,
) -> HarnessResult<DenseVector> {
    match spec {
        InitSpec::Zero => Ok(DenseVector::zeros(state_dim)),
        InitSpec::Uniform { lo, hi } => {
            let sig = SignalSpec::new(lo, hi, 1, seed)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(sample_signal(&sig, state_dim).column(0).into_owned())
        }
        InitSpec::PodCombination { lo, hi } => {
            let pod = pod.ok_or_else(|| {
                HarnessError::Config("pod_combination initial condition before basis".into())
            })?;
            let sig = SignalSpec::new(lo, hi, 1, seed)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let r = sample_signal(&sig, pod.dim()).column(0).into_owned();
            Ok(&pod.v * r)
        }
        InitSpec::SameAsTrain => Err(HarnessError::Config(
            "same_as_train resolved by the caller".into(),
        )),
    }
}

/// Simulate a batch of (model, x0, inputs) jobs in parallel, failing on
/// the first diverging full-order trajectory.
fn simulate_batch(
    jobs: Vec<(QuadraticModel, DenseVector, DenseMatrix, String)>,
    dt: f64,
) -> HarnessResult<Vec<Trajectory>> {
    let results: Vec<HarnessResult<Trajectory>> = jobs
        .into_par_iter()
        .map(|(model, x0, inputs, label)| {
            let traj = simulate(&model, &x0, &inputs, dt)?;
            if traj.diverged {
                return Err(HarnessError::Fom(format!(
                    "{label} diverged; reduce dt or the input range"
                )));
            }
            Ok(traj)
        })
        .collect();
    results.into_iter().collect()
}

/// Generate basis trajectories, the POD basis, training trajectories, and
/// test truth for a config.
pub fn generate(config: &ExperimentConfig) -> HarnessResult<GeneratedData> {
    config.validate()?;
    let seed = config.seed;
    let fom = config.problem.family(subseed(seed, &[TAG_FOM]));
    let n_full = config.state_dim();
    let steps = config.steps;

    // Basis runs: inputs and initial conditions per (parameter, run).
    let mut jobs = Vec::new();
    for (j, &mu) in config.train_params.iter().enumerate() {
        let model = fom.model(mu);
        for b in 0..config.basis_runs {
            let input = input_signal(
                config.basis_input,
                steps,
                subseed(seed, &[TAG_BASIS_INPUT, j as u64, b as u64]),
            );
            let x0 = initial_condition(
                config.basis_init,
                n_full,
                None,
                subseed(seed, &[TAG_BASIS_INIT, j as u64, b as u64]),
            )?;
            jobs.push((model.clone(), x0, input, format!("basis run {b} at mu={mu}")));
        }
    }
    let flat = simulate_batch(jobs, config.dt)?;
    let basis_runs: Vec<Vec<Trajectory>> = flat
        .chunks(config.basis_runs)
        .map(|c| c.to_vec())
        .collect();

    let states: Vec<&DenseMatrix> = basis_runs
        .iter()
        .flat_map(|runs| runs.iter().map(|t| &t.states))
        .collect();
    let snapshots = assemble_snapshots(states)?;
    let pod = pod_basis(&snapshots, config.max_dim())?;

    // Training runs: inputs per (parameter, run), initial conditions per
    // run so that test-time reuse is unambiguous.
    let train_inits: Vec<DenseVector> = (0..config.train_runs)
        .map(|l| {
            initial_condition(
                config.train_init,
                n_full,
                Some(&pod),
                subseed(seed, &[TAG_TRAIN_INIT, l as u64]),
            )
        })
        .collect::<HarnessResult<_>>()?;
    let mut jobs = Vec::new();
    for (j, &mu) in config.train_params.iter().enumerate() {
        let model = fom.model(mu);
        for (l, x0) in train_inits.iter().enumerate() {
            let input = input_signal(
                config.train_input,
                steps,
                subseed(seed, &[TAG_TRAIN_INPUT, j as u64, l as u64]),
            );
            jobs.push((
                model.clone(),
                x0.clone(),
                input,
                format!("training run {l} at mu={mu}"),
            ));
        }
    }
    let flat = simulate_batch(jobs, config.dt)?;
    let train_runs: Vec<Vec<Trajectory>> = flat
        .chunks(config.train_runs)
        .map(|c| c.to_vec())
        .collect();

    // Test truth: inputs and (non-reused) initial conditions per
    // (test parameter, run).
    let test_params = config.test_params();
    let mut jobs = Vec::new();
    for (i, &mu) in test_params.iter().enumerate() {
        let model = fom.model(mu);
        for l in 0..config.test_runs {
            let input = input_signal(
                config.test_input,
                steps,
                subseed(seed, &[TAG_TEST_INPUT, i as u64, l as u64]),
            );
            let x0 = match config.test_init {
                InitSpec::SameAsTrain => train_inits[l].clone(),
                other => initial_condition(
                    other,
                    n_full,
                    Some(&pod),
                    subseed(seed, &[TAG_TEST_INIT, i as u64, l as u64]),
                )?,
            };
            jobs.push((model.clone(), x0, input, format!("test run {l} at mu={mu}")));
        }
    }
    let flat = simulate_batch(jobs, config.dt)?;
    let test_runs: Vec<Vec<Trajectory>> = flat
        .chunks(config.test_runs)
        .map(|c| c.to_vec())
        .collect();

    Ok(GeneratedData {
        fom,
        basis_runs,
        pod,
        train_runs,
        test_params,
        test_runs,
    })
}

/// Training set view of the generated data (shared by selection and
/// plain fits).
pub fn training_set(config: &ExperimentConfig, data: &GeneratedData) -> TrainingSet {
    TrainingSet {
        params: config.train_params.clone(),
        runs: data
            .train_runs
            .iter()
            .map(|runs| {
                runs.iter()
                    .map(|t| TrainingRun {
                        states: t.states.clone(),
                        inputs: t.inputs.clone(),
                    })
                    .collect()
            })
            .collect(),
        dt: config.dt,
    }
}

/// A trained family ready for evaluation.
pub struct TrainedMethod {
    pub method: MethodSpec,
    pub dim: usize,
    pub lambda: f64,
    pub family: ModelFamily,
    pub converged: Vec<bool>,
    pub selection: Option<Selection>,
}

/// Train one method at one reduced dimension.
pub fn train_method(
    config: &ExperimentConfig,
    data: &GeneratedData,
    method: MethodSpec,
    dim: usize,
) -> HarnessResult<TrainedMethod> {
    let v = data.pod.truncated(dim)?;
    let train = training_set(config, data);

    match method {
        MethodSpec::Intrusive => {
            let models: Vec<QuadraticModel> = config
                .train_params
                .iter()
                .map(|&mu| galerkin_reduce(&data.fom.model(mu), &v.v))
                .collect::<Result<_, _>>()?;
            let family = ModelFamily::new(config.train_params.clone(), models, Structure::Plain)?;
            Ok(TrainedMethod {
                method,
                dim,
                lambda: 0.0,
                converged: vec![true; config.train_params.len()],
                family,
                selection: None,
            })
        }
        MethodSpec::Plain => {
            let family = fit_family_at(&train, &v.v, opinf_core::opinf::Method::Plain, 0.0, config)?;
            Ok(TrainedMethod {
                method,
                dim,
                lambda: 0.0,
                converged: family.1,
                family: family.0,
                selection: None,
            })
        }
        MethodSpec::Tikhonov | MethodSpec::Pir | MethodSpec::Spir => {
            let grid = build_grid(
                config.lambda_grid.lo,
                config.lambda_grid.hi,
                config.lambda_grid.count,
            )?;
            let selection = select_lambda(
                &train,
                &v.v,
                &grid,
                method.inference().expect("selection methods are inference methods"),
                config.epsilon,
                config.constant_term,
            )?;
            Ok(TrainedMethod {
                method,
                dim,
                lambda: selection.lambda,
                converged: selection.reports.iter().map(|r| r.converged).collect(),
                family: selection.family.clone(),
                selection: Some(selection),
            })
        }
    }
}

/// Fit one inference method at a fixed weight for every training
/// parameter.
pub fn fit_family_at(
    train: &TrainingSet,
    v: &DenseMatrix,
    method: opinf_core::opinf::Method,
    lambda: f64,
    config: &ExperimentConfig,
) -> HarnessResult<(ModelFamily, Vec<bool>)> {
    let mut models = Vec::with_capacity(train.params.len());
    let mut converged = Vec::with_capacity(train.params.len());
    for runs in &train.runs {
        let mut projected = Vec::new();
        let mut inputs = Vec::new();
        for run in runs {
            projected.push(opinf_core::pod::project_trajectory(&run.states, v)?);
            inputs.push(run.inputs.clone());
        }
        let regression =
            opinf_core::opinf::assemble(&projected, &inputs, train.dt, config.constant_term)?;
        let report = regression.factor().fit(method, lambda, config.epsilon)?;
        converged.push(report.converged);
        models.push(report.model);
    }
    let structure = if method.preserves_structure() {
        Structure::SndLinear
    } else {
        Structure::Plain
    };
    Ok((
        ModelFamily::new(train.params.clone(), models, structure)?,
        converged,
    ))
}

/// Reduced model used at a test parameter: the training-node model when the
/// parameter coincides with a node, the interpolant otherwise, and for the
/// intrusive reference a direct Galerkin reduction of the full model.
fn test_model(
    trained: &TrainedMethod,
    data: &GeneratedData,
    v: &DenseMatrix,
    mu: f64,
    eps: f64,
) -> Result<QuadraticModel, opinf_core::Error> {
    if trained.method == MethodSpec::Intrusive {
        return galerkin_reduce(&data.fom.model(mu), v);
    }
    let params = trained.family.params();
    let span = params[params.len() - 1] - params[0];
    if let Some(j) = params
        .iter()
        .position(|&p| (p - mu).abs() <= 1e-9 * span.max(1.0))
    {
        return Ok(trained.family.models()[j].clone());
    }
    trained.family.interpolate(mu, eps)
}

/// Evaluation products of one trained method.
pub struct Evaluation {
    pub row: SummaryRow,
    /// Per-training-node stability radii `(mu, hurwitz, rho)`.
    pub node_rho: Vec<(f64, bool, Option<f64>)>,
}

pub fn evaluate_method(
    config: &ExperimentConfig,
    data: &GeneratedData,
    trained: &TrainedMethod,
) -> HarnessResult<Evaluation> {
    let v = data.pod.truncated(trained.dim)?;
    let eps = config.epsilon;

    // Training error: node models against their own training trajectories.
    let mut train_terms = Vec::new();
    for (j, runs) in data.train_runs.iter().enumerate() {
        let model = &trained.family.models()[j];
        for run in runs {
            let x0 = (v.v.transpose() * run.states.column(0)).into_owned();
            let prediction = simulate(model, &x0, &run.inputs, config.dt)?;
            train_terms.push(lifted_relative_error(&prediction, &run.states, &v.v)?);
        }
    }
    let e_train = ErrorMeasure::sum(train_terms);

    // Test error: interpolated (or node / Galerkin) models against test
    // truth.
    let mut test_terms = Vec::new();
    for (i, &mu) in data.test_params.iter().enumerate() {
        let model = match test_model(trained, data, &v.v, mu, eps) {
            Ok(m) => Some(m),
            // A family that cannot be interpolated at a test parameter is
            // as unusable as a diverging one.
            Err(opinf_core::Error::IllConditionedEigenvectors { .. })
            | Err(opinf_core::Error::Structure { .. }) => None,
            Err(other) => return Err(other.into()),
        };
        for run in &data.test_runs[i] {
            match &model {
                Some(m) => {
                    let x0 = (v.v.transpose() * run.states.column(0)).into_owned();
                    let prediction = simulate(m, &x0, &run.inputs, config.dt)?;
                    test_terms.push(lifted_relative_error(&prediction, &run.states, &v.v)?);
                }
                None => test_terms.push(ErrorMeasure::Diverged),
            }
        }
    }
    let e_test = ErrorMeasure::sum(test_terms);

    // Stability radii per node; the family radius is the worst node, and
    // it is undefined as soon as one node is not Hurwitz.
    let mut node_rho = Vec::new();
    let mut family_rho = Some(f64::INFINITY);
    for (j, model) in trained.family.models().iter().enumerate() {
        let report = stability_radius(model);
        node_rho.push((config.train_params[j], report.hurwitz, report.rho));
        family_rho = match (family_rho, report.rho) {
            (Some(acc), Some(rho)) => Some(acc.min(rho)),
            _ => None,
        };
    }

    Ok(Evaluation {
        row: SummaryRow {
            method: trained.method.name().to_string(),
            dim: trained.dim,
            e_train,
            e_test,
            rho: family_rho,
            diverged: !e_test.is_finite(),
        },
        node_rho,
    })
}

fn method_rank_for(name: &str) -> usize {
    ["intrusive", "plain", "tikhonov", "pir", "spir"]
        .iter()
        .position(|m| *m == name)
        .unwrap_or(usize::MAX)
}

/// Canonical ordering of summary rows: method in a fixed order, then
/// dimension.
pub fn sort_summary(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| {
        method_rank_for(&a.method)
            .cmp(&method_rank_for(&b.method))
            .then(a.dim.cmp(&b.dim))
    });
}

/// Run the whole pipeline in memory and write every artifact below `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> HarnessResult<Vec<SummaryRow>> {
    config.validate()?;
    io::ensure_dir(out)?;
    let data = generate(config)?;
    io::write_basis(&out.join("basis"), &data.pod)?;

    // Independent (dimension, method) jobs; parallel across dimensions.
    let job_list: Vec<(usize, MethodSpec)> = config
        .dims
        .iter()
        .flat_map(|&dim| config.methods.iter().map(move |&m| (dim, m)))
        .collect();
    let outcomes: Vec<HarnessResult<(TrainedMethod, Evaluation)>> = job_list
        .par_iter()
        .map(|&(dim, method)| {
            let trained = train_method(config, &data, method, dim)?;
            let evaluation = evaluate_method(config, &data, &trained)?;
            Ok((trained, evaluation))
        })
        .collect();

    let mut rows = Vec::new();
    let mut node_rows = Vec::new();
    let mut selected: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for outcome in outcomes {
        let (trained, evaluation) = outcome?;
        let dir = io::model_dir(out, trained.method.name(), trained.dim);
        let manifest = ModelManifest {
            method: trained.method.name().to_string(),
            dim: trained.dim,
            lambda: trained.lambda,
            epsilon: config.epsilon,
            params: config.train_params.clone(),
            converged: trained.converged.clone(),
            constant_term: config.constant_term,
        };
        io::write_family(&dir, &manifest, trained.family.models())?;
        if let Some(selection) = &trained.selection {
            let sel_dir = out
                .join("selection")
                .join(trained.method.name())
                .join(format!("n{:02}", trained.dim));
            io::ensure_dir(&sel_dir)?;
            io::write_validation_table(&sel_dir.join("validation.csv"), &selection.table)?;
            selected
                .entry(trained.method.name().to_string())
                .or_default()
                .insert(trained.dim.to_string(), trained.lambda);
        }
        for (mu, hurwitz, rho) in evaluation.node_rho {
            node_rows.push((
                trained.method.name().to_string(),
                trained.dim,
                mu,
                hurwitz,
                rho,
            ));
        }
        rows.push(evaluation.row);
    }

    sort_summary(&mut rows);
    node_rows.sort_by(|a, b| {
        method_rank_for(&a.0)
            .cmp(&method_rank_for(&b.0))
            .then(a.1.cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    io::write_summary(&out.join("summary.csv"), &rows)?;
    io::write_rho_nodes(&out.join("rho_nodes.csv"), &node_rows)?;
    write_manifest(config, out, &selected)?;
    Ok(rows)
}

#[derive(serde::Serialize)]
struct RunManifest<'a> {
    experiment: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: String,
    selected_lambdas: &'a BTreeMap<String, BTreeMap<String, f64>>,
    config: &'a ExperimentConfig,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(
    config: &ExperimentConfig,
    out: &Path,
    selected: &BTreeMap<String, BTreeMap<String, f64>>,
) -> HarnessResult<()> {
    let manifest = RunManifest {
        experiment: config.problem.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config_hash: config_hash(config),
        selected_lambdas: selected,
        config,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| HarnessError::Parse(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------
// Standalone subcommand stages. Trajectories are regenerated
// deterministically from the config; the basis and model files are the
// persisted hand-off artifacts between stages.
// ---------------------------------------------------------------------

/// Write every generated trajectory as CSV (the export command; the other
/// stages regenerate trajectories instead of reading these).
pub fn simulate_stage(config: &ExperimentConfig, out: &Path) -> HarnessResult<()> {
    let data = generate(config)?;
    let base = out.join("trajectories");
    for (kind, sets) in [
        ("basis", &data.basis_runs),
        ("train", &data.train_runs),
        ("test", &data.test_runs),
    ] {
        let dir = base.join(kind);
        io::ensure_dir(&dir)?;
        for (j, runs) in sets.iter().enumerate() {
            for (l, traj) in runs.iter().enumerate() {
                io::write_trajectory(&dir.join(format!("mu{j:02}_run{l:02}.csv")), traj)?;
            }
        }
    }
    write_manifest(config, out, &BTreeMap::new())
}

/// Compute and persist the POD basis.
pub fn basis_stage(config: &ExperimentConfig, out: &Path) -> HarnessResult<()> {
    let data = generate(config)?;
    io::write_basis(&out.join("basis"), &data.pod)
}

fn load_or_build_basis(config: &ExperimentConfig, out: &Path) -> HarnessResult<(GeneratedData, PodBasis)> {
    let data = generate(config)?;
    let dir = out.join("basis");
    if dir.join("pod_basis.csv").is_file() {
        let basis = io::read_basis(&dir)?;
        Ok((data, basis))
    } else {
        io::write_basis(&dir, &data.pod)?;
        let basis = data.pod.clone();
        Ok((data, basis))
    }
}

/// Fit one method at an explicit weight and persist the family.
pub fn learn_stage(
    config: &ExperimentConfig,
    method: MethodSpec,
    dim: usize,
    lambda: f64,
    out: &Path,
) -> HarnessResult<()> {
    let (data, basis) = load_or_build_basis(config, out)?;
    let v = basis.truncated(dim)?;
    let (family, lambda_used, converged) = match method {
        MethodSpec::Intrusive => {
            let models: Vec<QuadraticModel> = config
                .train_params
                .iter()
                .map(|&mu| galerkin_reduce(&data.fom.model(mu), &v.v))
                .collect::<Result<_, _>>()?;
            (
                ModelFamily::new(config.train_params.clone(), models, Structure::Plain)?,
                0.0,
                vec![true; config.train_params.len()],
            )
        }
        other => {
            let train = training_set(config, &data);
            let (family, converged) = fit_family_at(
                &train,
                &v.v,
                other.inference().expect("inference method"),
                lambda,
                config,
            )?;
            (family, lambda, converged)
        }
    };
    let manifest = ModelManifest {
        method: method.name().to_string(),
        dim,
        lambda: lambda_used,
        epsilon: config.epsilon,
        params: config.train_params.clone(),
        converged,
        constant_term: config.constant_term,
    };
    io::write_family(&io::model_dir(out, method.name(), dim), &manifest, family.models())
}

/// Run grid selection for one method and persist the winning family plus
/// the validation table.
pub fn select_stage(
    config: &ExperimentConfig,
    method: MethodSpec,
    dim: usize,
    out: &Path,
) -> HarnessResult<f64> {
    if !method.needs_selection() {
        return Err(HarnessError::Config(format!(
            "method {} has no regularization weight to select",
            method.name()
        )));
    }
    let (data, basis) = load_or_build_basis(config, out)?;
    let _ = basis.truncated(dim)?;
    let trained = train_method(config, &data, method, dim)?;
    let manifest = ModelManifest {
        method: method.name().to_string(),
        dim,
        lambda: trained.lambda,
        epsilon: config.epsilon,
        params: config.train_params.clone(),
        converged: trained.converged.clone(),
        constant_term: config.constant_term,
    };
    io::write_family(
        &io::model_dir(out, method.name(), dim),
        &manifest,
        trained.family.models(),
    )?;
    let sel_dir = out
        .join("selection")
        .join(method.name())
        .join(format!("n{dim:02}"));
    io::ensure_dir(&sel_dir)?;
    let selection = trained.selection.as_ref().expect("selection ran");
    io::write_validation_table(&sel_dir.join("validation.csv"), &selection.table)?;
    Ok(trained.lambda)
}

/// Evaluate one persisted family (or the intrusive reference) and upsert
/// its row into the summary.
pub fn evaluate_stage(
    config: &ExperimentConfig,
    method: MethodSpec,
    dim: usize,
    out: &Path,
) -> HarnessResult<SummaryRow> {
    let (data, basis) = load_or_build_basis(config, out)?;
    let _ = basis.truncated(dim)?;

    let trained = if method == MethodSpec::Intrusive {
        train_method(config, &data, method, dim)?
    } else {
        let dir = io::model_dir(out, method.name(), dim);
        if !dir.join("manifest.json").is_file() {
            return Err(HarnessError::MissingArtifact(
                format!("models for {} at n={dim}", method.name()),
                format!("opinf select --method {} --dim {dim}", method.name()),
            ));
        }
        let (manifest, models) = io::read_family(&dir)?;
        let structure = if method == MethodSpec::Spir {
            Structure::SndLinear
        } else {
            Structure::Plain
        };
        TrainedMethod {
            method,
            dim,
            lambda: manifest.lambda,
            converged: manifest.converged.clone(),
            family: ModelFamily::new(manifest.params.clone(), models, structure)?,
            selection: None,
        }
    };

    let evaluation = evaluate_method(config, &data, &trained)?;
    let summary_path = out.join("summary.csv");
    let mut rows = if summary_path.is_file() {
        io::read_summary(&summary_path)?
    } else {
        Vec::new()
    };
    rows.retain(|r| !(r.method == evaluation.row.method && r.dim == dim));
    rows.push(evaluation.row.clone());
    sort_summary(&mut rows);
    io::write_summary(&summary_path, &rows)?;
    Ok(evaluation.row)
}
