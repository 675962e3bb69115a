//! Crate-wide error type.

use crate::num::C64;
use thiserror::Error;

/// Errors produced by quadrature, linear algebra, curve geometry, theta
/// summation and the higher level solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Node doubling stopped making progress before reaching the requested
    /// tolerance. Carries the last two estimates so the caller can judge
    /// how far apart they still are.
    #[error("quadrature did not converge at {nodes} nodes; last estimates {last} and {previous}")]
    QuadratureFailure { nodes: usize, last: C64, previous: C64 },

    /// Richardson extrapolation of a central difference left an error
    /// estimate more than ten times the requested tolerance.
    #[error("finite difference derivative unreliable; error estimate {estimate:.3e} exceeds 10 * {tol:.3e}")]
    DerivativeUnreliable { estimate: f64, tol: f64 },

    /// Pivoting found no usable pivot, or |det| fell under the scaled
    /// threshold 1e-13 * ||M||^n.
    #[error("matrix numerically singular; |det| = {det_abs:.3e}, threshold {threshold:.3e}")]
    SingularMatrix { det_abs: f64, threshold: f64 },

    /// Newton iteration left the basin or stalled. The trace holds every
    /// iterate visited, starting with the seed.
    #[error("root search failed to converge; iterates {trace:?}")]
    RootFailure { trace: Vec<C64> },

    /// Two branch points coincide (indices are zero based input positions).
    #[error("branch points {i} and {j} coincide")]
    DuplicateBranchPoints { i: usize, j: usize },

    /// Branch cut segments intersect, so the standard cut system is invalid.
    #[error("branch cuts {i} and {j} intersect")]
    CutsIntersect { i: usize, j: usize },

    /// A hyperelliptic configuration needs an even number (at least 4) of points.
    #[error("expected an even number of branch points, at least 4, got {count}")]
    BadPointCount { count: usize },

    /// w(P) was requested on a branch cut where the sheet is ambiguous.
    #[error("point lies on branch cut {cut}; sheet is ambiguous there")]
    BranchAmbiguity { cut: usize },

    /// An integration path crosses a branch cut it did not declare.
    #[error("integration path crosses branch cut {cut} without declaring the crossing")]
    PathCrossesCut { cut: usize },

    /// Im B must be positive definite for theta series to converge.
    #[error("imaginary part of the period matrix is not positive definite")]
    NotPositiveDefinite,

    /// The period matrix came out asymmetric beyond tolerance.
    #[error("period matrix asymmetric; defect {defect:.3e}")]
    AsymmetricPeriodMatrix { defect: f64 },

    /// The theta lattice sum still had a tail bound above tolerance at the
    /// radius cap.
    #[error("theta series truncation failed; tail bound {bound:.3e} above tol {tol:.3e} at radius {radius}")]
    TruncationFailure { bound: f64, tol: f64, radius: usize },

    /// Both characteristic vectors are half integer, which makes the attached
    /// monodromy reducible; that family is out of scope.
    #[error("characteristic is half integer in every entry; the attached monodromy is reducible")]
    ReducibleCharacteristic,

    /// A theta value in a denominator vanished; the requested object has a
    /// pole at this configuration.
    #[error("theta denominator vanished ({which}); configuration sits on the solution divisor")]
    DivisorSingularity { which: &'static str },

    /// Characteristics equivalent to [1/2,0] or [0,1/2] produce the excluded
    /// degenerate elliptic solutions.
    #[error("characteristic reduces to [1/2,0] or [0,1/2]; that degenerate family is excluded")]
    DegenerateCharacteristic,

    /// A branch point subset has the wrong cardinality for its role.
    #[error("subset must have {expected} points for this operation, got {got}")]
    BadSubset { expected: usize, got: usize },

    /// Adaptive step control shrank the step below the useful limit,
    /// typically because the path runs too close to a pole.
    #[error("step size underflow during transport; path passes too close to a singular point")]
    StepUnderflow,

    /// Inversion of the elliptic module failed.
    #[error("module inversion failed: {detail}")]
    ModuleInversion { detail: String },

    /// A sample hit a singularity of the solution (pole or branch collision).
    #[error("singular sample: {detail}")]
    SingularSample { detail: String },

    /// Catch-all input validation error.
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
