use thiserror::Error;

/// Errors produced by the numeric modules. Messages carry the name of the
/// operation that failed so CLI diagnostics stay traceable.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch ({details})")]
    Dimension {
        context: &'static str,
        details: String,
    },

    #[error("{context}: invalid argument ({details})")]
    InvalidArgument {
        context: &'static str,
        details: String,
    },

    #[error("pod_basis: requested {requested} modes but numerical rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("{context}: matrix is not Hurwitz")]
    NotHurwitz { context: &'static str },

    #[error("{context}: linear system is numerically singular")]
    Singular { context: &'static str },

    #[error(
        "reflect_eigenvalues: eigenvector matrix is too ill-conditioned \
         (cond {cond:.3e}); reduce the model dimension"
    )]
    IllConditionedEigenvectors { cond: f64 },

    #[error("{context}: structure violation ({details})")]
    Structure {
        context: &'static str,
        details: String,
    },

    #[error("interp: parameter {mu} lies outside the training range [{lo}, {hi}]")]
    Extrapolation { mu: f64, lo: f64, hi: f64 },

    #[error("select_lambda: every grid point diverged at every validation parameter")]
    SelectionFailed,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, details: impl Into<String>) -> Self {
        Error::Dimension {
            context,
            details: details.into(),
        }
    }

    pub(crate) fn arg(context: &'static str, details: impl Into<String>) -> Self {
        Error::InvalidArgument {
            context,
            details: details.into(),
        }
    }
}
