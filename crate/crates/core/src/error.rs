use thiserror::Error;

/// Failure modes of the analysis pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not infinitesimally symplectic (residual {residual:.3e})")]
    NotInfinitesimallySymplectic { residual: f64 },
    #[error("eigenvalue clustering is ambiguous: clusters {a} and {b} are {gap:.3e} apart")]
    IllConditionedSpectrum { a: String, b: String, gap: f64 },
    #[error("definite quadratic form with non-elliptic spectrum: {0}")]
    KreinViolation(String),
    #[error("frequency {nu0} is not in the spectrum")]
    FrequencyNotInSpectrum { nu0: f64 },
    #[error("symplectic form restricts degenerately ({0})")]
    DegenerateForm(String),
    #[error("subspace is not invariant (residual {residual:.3e})")]
    NotInvariant { residual: f64 },
    #[error("restricted form is degenerate (smallest singular value {sigma_min:.3e})")]
    DegenerateRestriction { sigma_min: f64 },
    #[error("invalid symplectic form: {0}")]
    InvalidForm(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("action generator {index} is not canonical (residual {residual:.3e})")]
    NotCanonicalAction { index: usize, residual: f64 },
    #[error("generators violate the bracket relations of {group} (residual {residual:.3e})")]
    BracketViolation { group: String, residual: f64 },
    #[error("unknown subgroup {0}")]
    UnknownSubgroup(String),
    #[error("unsupported group {0}")]
    UnsupportedGroup(String),
    #[error("exp(2*pi*generator) differs from identity by {residual:.3e}")]
    NonPeriodicGenerator { residual: f64 },
    #[error("action on the resonance space fails the simplicity proxy: {0}")]
    NotSimpleAction(String),

    #[error("estimate {value} is not an integer")]
    NonIntegerBound { value: String },
    #[error("invalid estimate input: {0}")]
    InvalidEstimateInput(String),

    #[error("step limit exceeded at t = {t}")]
    StepLimitExceeded { t: f64 },
    #[error("non-finite or out-of-domain state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidIntegratorConfig(String),
    #[error("point is not a relative equilibrium (residual {residual:.3e})")]
    NotRelativeEquilibrium { residual: f64 },
    #[error("symplectic normal space is degenerate")]
    DegenerateSplit,
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("quadratic form on the subspace is indefinite")]
    IndefiniteQuadraticForm,
    #[error("restricted Hamiltonian is radial through order {max_order}")]
    RadialToMaxOrder { max_order: usize },
    #[error("constraint level set is empty")]
    EmptyLevelSet,
    #[error("constraint Jacobian is rank deficient (rank {rank} < {expected})")]
    RankDeficientConstraints { rank: usize, expected: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("branch fold at r = {r}")]
    BranchFold { r: f64 },
    #[error("multipliers do not decay as r -> 0: {0}")]
    MultiplierBlowup(String),
    #[error("shooting converged to a relative equilibrium (witness {witness:.3e})")]
    ConvergedToRelativeEquilibrium { witness: f64 },

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
