//! Experiment configuration: JSON-backed, with built-in defaults for the
//! three benchmark problems at desk scale.

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use opinf_core::fom::FomFamily;
use opinf_core::opinf::Method;

/// Which benchmark problem an experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemSpec {
    /// Dense random quadratic system of dimension `state_dim`.
    Synthetic { state_dim: usize },
    /// Viscous Burgers' equation with `state_dim` interior grid points.
    Burgers { state_dim: usize },
    /// Reaction-diffusion on a `mesh_divisions`^2 cell-centered grid.
    ReactionDiffusion { mesh_divisions: usize },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Synthetic { .. } => "synthetic",
            ProblemSpec::Burgers { .. } => "burgers",
            ProblemSpec::ReactionDiffusion { .. } => "reaction_diffusion",
        }
    }

    pub fn family(&self, seed: u64) -> FomFamily {
        match self {
            ProblemSpec::Synthetic { state_dim } => opinf_core::fom::build_synthetic(*state_dim, seed),
            ProblemSpec::Burgers { state_dim } => FomFamily::Burgers { n: *state_dim },
            ProblemSpec::ReactionDiffusion { mesh_divisions } => FomFamily::ReactionDiffusion {
                divisions: *mesh_divisions,
            },
        }
    }
}

/// Uniform sampling range for a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

/// How initial conditions are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Zero,
    /// Entrywise uniform in the full state space.
    Uniform { lo: f64, hi: f64 },
    /// `V r` with `r` uniform in the reduced space of the largest
    /// requested dimension.
    PodCombination { lo: f64, hi: f64 },
    /// Test-only: reuse the training initial condition with the same run
    /// index.
    SameAsTrain,
}

/// Methods the harness can run; the inference methods wrap
/// [`opinf_core::opinf::Method`], and `Intrusive` is the Galerkin
/// reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Intrusive,
    Plain,
    Tikhonov,
    Pir,
    Spir,
}

impl MethodSpec {
    pub fn inference(self) -> Option<Method> {
        match self {
            MethodSpec::Intrusive => None,
            MethodSpec::Plain => Some(Method::Plain),
            MethodSpec::Tikhonov => Some(Method::Tikhonov),
            MethodSpec::Pir => Some(Method::Pir),
            MethodSpec::Spir => Some(Method::Spir),
        }
    }

    /// Whether this method runs the grid-selection procedure.
    pub fn needs_selection(self) -> bool {
        matches!(self, MethodSpec::Tikhonov | MethodSpec::Pir | MethodSpec::Spir)
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodSpec::Intrusive => "intrusive",
            MethodSpec::Plain => "plain",
            MethodSpec::Tikhonov => "tikhonov",
            MethodSpec::Pir => "pir",
            MethodSpec::Spir => "spir",
        }
    }

    pub fn parse(name: &str) -> Option<MethodSpec> {
        match name {
            "intrusive" => Some(MethodSpec::Intrusive),
            "plain" => Some(MethodSpec::Plain),
            "tikhonov" => Some(MethodSpec::Tikhonov),
            "pir" => Some(MethodSpec::Pir),
            "spir" => Some(MethodSpec::Spir),
            _ => None,
        }
    }
}

/// Log-uniform grid specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub problem: ProblemSpec,
    pub dt: f64,
    /// Time steps per trajectory (`K`).
    pub steps: usize,
    pub train_params: Vec<f64>,
    /// Basis trajectories per training parameter (`M_b`).
    pub basis_runs: usize,
    /// Training trajectories per training parameter (`M_t`).
    pub train_runs: usize,
    /// Number of equidistant test parameters (`M_test`).
    pub test_param_count: usize,
    /// Test input trajectories per test parameter (`M'_test`).
    pub test_runs: usize,
    /// Reduced dimensions to evaluate.
    pub dims: Vec<usize>,
    pub lambda_grid: LambdaGridSpec,
    pub methods: Vec<MethodSpec>,
    pub epsilon: f64,
    /// Learn a constant forcing column.
    pub constant_term: bool,
    pub seed: u64,
    pub basis_input: Range,
    pub basis_init: InitSpec,
    pub train_input: Range,
    pub train_init: InitSpec,
    pub test_input: Range,
    pub test_init: InitSpec,
}

impl ExperimentConfig {
    pub fn state_dim(&self) -> usize {
        match self.problem {
            ProblemSpec::Synthetic { state_dim } | ProblemSpec::Burgers { state_dim } => state_dim,
            ProblemSpec::ReactionDiffusion { mesh_divisions } => mesh_divisions * mesh_divisions,
        }
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if self.steps == 0 {
            return fail("steps must be at least 1".into());
        }
        if self.train_params.len() < 2 {
            return fail("need at least 2 training parameters".into());
        }
        if self.train_params.windows(2).any(|w| !(w[0] < w[1])) {
            return fail("training parameters must be strictly increasing".into());
        }
        if self.basis_runs == 0 || self.train_runs == 0 || self.test_runs == 0 {
            return fail("run counts must be at least 1".into());
        }
        if self.test_param_count == 0 {
            return fail("test_param_count must be at least 1".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return fail("dims must be nonempty positive".into());
        }
        if self.max_dim() > self.state_dim() {
            return fail(format!(
                "largest reduced dimension {} exceeds state dimension {}",
                self.max_dim(),
                self.state_dim()
            ));
        }
        if self.epsilon <= 0.0 {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.lambda_grid.lo <= 0.0
            || self.lambda_grid.lo > self.lambda_grid.hi
            || self.lambda_grid.count < 2
        {
            return fail(format!(
                "invalid lambda grid [{}, {}] with {} points",
                self.lambda_grid.lo, self.lambda_grid.hi, self.lambda_grid.count
            ));
        }
        if self.methods.is_empty() {
            return fail("at least one method required".into());
        }
        if self.methods.iter().any(|m| m.needs_selection()) && self.train_params.len() < 3 {
            return fail("grid selection needs at least 3 training parameters".into());
        }
        if self.test_init == InitSpec::SameAsTrain && self.test_runs > self.train_runs {
            return fail(format!(
                "test_init reuses training initial conditions, so test_runs ({}) cannot exceed train_runs ({})",
                self.test_runs, self.train_runs
            ));
        }
        if matches!(self.basis_init, InitSpec::SameAsTrain)
            || matches!(self.train_init, InitSpec::SameAsTrain)
        {
            return fail("same_as_train is only valid for test_init".into());
        }
        if matches!(self.basis_init, InitSpec::PodCombination { .. }) {
            return fail("pod_combination initial conditions need a basis and so cannot seed the basis runs".into());
        }
        let (lo, hi) = self.problem.family(self.seed).domain();
        if self.train_params.iter().any(|&mu| mu < lo || mu > hi) {
            return fail(format!("training parameters must lie in [{lo}, {hi}]"));
        }
        for r in [self.basis_input, self.train_input, self.test_input] {
            if !(r.lo <= r.hi) {
                return fail(format!("invalid signal range [{}, {}]", r.lo, r.hi));
            }
        }
        Ok(())
    }

    /// Equidistant test parameters across the training span.
    pub fn test_params(&self) -> Vec<f64> {
        let lo = self.train_params[0];
        let hi = *self.train_params.last().unwrap();
        if self.test_param_count == 1 {
            return vec![0.5 * (lo + hi)];
        }
        equidistant(lo, hi, self.test_param_count)
    }
}

/// Endpoints are pinned exactly so that grid invariants and node
/// coincidence checks do not depend on rounding.
fn equidistant(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / (count as f64 - 1.0))
            }
        })
        .collect()
}

/// Desk-scale synthetic benchmark: dense random system, training inputs in
/// `[0, 2]`, test inputs in `[0, 10]`.
pub fn synthetic_default(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::Synthetic { state_dim: 64 },
        dt: 1e-3,
        steps: 1000,
        train_params: equidistant(0.1, 1.0, 10),
        basis_runs: 1,
        train_runs: 3,
        test_param_count: 7,
        test_runs: 1,
        dims: vec![2, 4, 6, 8, 10],
        lambda_grid: LambdaGridSpec {
            lo: 1e-15,
            hi: 1e5,
            count: 51,
        },
        methods: vec![MethodSpec::Intrusive, MethodSpec::Plain, MethodSpec::Pir],
        epsilon: 1e-10,
        constant_term: false,
        seed,
        basis_input: Range { lo: 0.0, hi: 2.0 },
        basis_init: InitSpec::Uniform { lo: 0.0, hi: 1.0 },
        train_input: Range { lo: 0.0, hi: 2.0 },
        train_init: InitSpec::Uniform { lo: 0.0, hi: 1.0 },
        test_input: Range { lo: 0.0, hi: 10.0 },
        test_init: InitSpec::Uniform { lo: 0.0, hi: 1.0 },
    }
}

/// Desk-scale Burgers' benchmark.
///
/// Explicit Euler forces `dt <= h^2 / (2 mu_max)`; the viscosity grid
/// stays near the lower end of the admissible range so that 2000 steps
/// still cover a horizon long enough for the validation sweep to expose
/// marginally unstable fits. Test inputs reach beyond the training
/// amplitude.
pub fn burgers_default(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::Burgers { state_dim: 64 },
        dt: 5e-6,
        steps: 2000,
        train_params: (0..10).map(|k| 10.0 + k as f64).collect(),
        basis_runs: 1,
        train_runs: 10,
        test_param_count: 7,
        test_runs: 5,
        dims: (2..=10).collect(),
        lambda_grid: LambdaGridSpec {
            lo: 1e-15,
            hi: 1e5,
            count: 51,
        },
        methods: vec![
            MethodSpec::Intrusive,
            MethodSpec::Plain,
            MethodSpec::Tikhonov,
            MethodSpec::Pir,
        ],
        epsilon: 1e-10,
        constant_term: false,
        seed,
        basis_input: Range { lo: 0.0, hi: 3.0 },
        basis_init: InitSpec::Zero,
        train_input: Range { lo: 0.0, hi: 3.0 },
        train_init: InitSpec::PodCombination { lo: 0.0, hi: 1.0 },
        test_input: Range { lo: 0.0, hi: 4.0 },
        test_init: InitSpec::SameAsTrain,
    }
}

/// Desk-scale reaction-diffusion benchmark with the constant forcing
/// column enabled.
pub fn reaction_diffusion_default(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::ReactionDiffusion { mesh_divisions: 6 },
        dt: 1e-3,
        steps: 2000,
        train_params: equidistant(1.0, 1.5, 10),
        basis_runs: 1,
        train_runs: 3,
        test_param_count: 7,
        test_runs: 1,
        dims: vec![2, 4, 6, 8, 10],
        lambda_grid: LambdaGridSpec {
            lo: 1e-10,
            hi: 1e10,
            count: 21,
        },
        methods: vec![
            MethodSpec::Intrusive,
            MethodSpec::Plain,
            MethodSpec::Tikhonov,
            MethodSpec::Pir,
        ],
        epsilon: 1e-10,
        constant_term: true,
        seed,
        basis_input: Range { lo: 0.0, hi: 1.0 },
        basis_init: InitSpec::Zero,
        train_input: Range { lo: 0.0, hi: 1.0 },
        train_init: InitSpec::Zero,
        test_input: Range { lo: 0.0, hi: 1.0 },
        test_init: InitSpec::Zero,
    }
}

/// Built-in config for a named experiment.
pub fn default_config(experiment: &str, seed: u64) -> Option<ExperimentConfig> {
    match experiment {
        "synthetic" => Some(synthetic_default(seed)),
        "burgers" => Some(burgers_default(seed)),
        "reaction-diffusion" | "reaction_diffusion" => Some(reaction_diffusion_default(seed)),
        _ => None,
    }
}
