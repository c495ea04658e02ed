//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. Variants are grouped by how the
//! CLI maps them to exit codes: input/validation problems, solver
//! non-convergence, and precision failures.

/// Errors produced by validation, solvers, and numerical guards.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian: max |H - H^dag| entry {max_dev:.3e} exceeds tolerance")]
    NotHermitian { max_dev: f64 },

    /// A matrix that must be symmetric is not, beyond tolerance.
    #[error("matrix is not symmetric: max |M - M^T| entry {max_dev:.3e} exceeds tolerance")]
    NotSymmetric { max_dev: f64 },

    /// A matrix that must be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPsd { min_eig: f64 },

    /// A state failed the density-matrix checks (unit trace, PSD).
    #[error("not a density matrix: {reason}")]
    NotDensity { reason: String },

    /// Shape mismatch between operands.
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The right-hand side of an anticommutator solve has nonzero trace, so
    /// no solution exists.
    #[error("anticommutator solve is inconsistent: right-hand side has trace {trace_abs:.3e}")]
    NotTraceless { trace_abs: f64 },

    /// The anticommutator equation has right-hand-side weight on the state's
    /// kernel-kernel block, where {L, rho}/2 vanishes identically.
    #[error(
        "anticommutator solve failed: residual {residual:.3e} after zeroing kernel blocks \
         (right-hand side has weight outside the state's support)"
    )]
    KernelResidual { residual: f64 },

    /// A parameter value is outside the family's domain, or a size cap is hit.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested cost places weight on directions with zero quantum
    /// Fisher information, so no finite bound exists.
    #[error(
        "unidentifiable: cost places weight {weight:.3e} on the kernel of the Fisher information"
    )]
    Unidentifiable { weight: f64 },

    /// The RLD Fisher information requires a full-rank state.
    #[error("RLD undefined: state has min eigenvalue {min_eig:.3e}; full rank required")]
    RldUndefined { min_eig: f64 },

    /// A spectrum that must be non-degenerate has a near-degenerate gap.
    #[error("degenerate spectrum: eigenvalue gap {gap:.3e} below tolerance")]
    Degenerate { gap: f64 },

    /// The SDP solver stopped at the iteration cap without reaching tolerance.
    #[error(
        "solver did not converge: {iterations} iterations, relative gap {gap:.3e}, \
         primal residual {primal_res:.3e}, dual residual {dual_res:.3e}"
    )]
    SolverStalled {
        iterations: usize,
        gap: f64,
        primal_res: f64,
        dual_res: f64,
    },

    /// The SDP solver detected an infeasible or unbounded problem.
    #[error("solver detected an infeasible or unbounded problem: {0}")]
    SolverInfeasible(String),

    /// A candidate violates an equality constraint it was required to satisfy.
    #[error("constraint violation: {context}; residuals {residuals:?}")]
    ConstraintViolation {
        context: String,
        residuals: Vec<f64>,
    },

    /// A quantity underflowed or lost so much precision the result would be
    /// meaningless.
    #[error("precision failure: {0}")]
    Precision(String),

    /// Configuration or input-file parse failure.
    #[error("parse error: {0}")]
    Parse(String),

    /// I/O failure while reading inputs or writing outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
