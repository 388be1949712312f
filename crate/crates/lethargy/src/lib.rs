//! Constructive distance prescription on nested chains of subspaces.
//!
//! Given a finite-dimensional normed space (weighted p-norms, `1 <= p <= inf`),
//! a strictly nested chain of subspaces `Y_1 ⊂ Y_2 ⊂ … ⊂ Y_n`, and a
//! non-increasing sequence of non-negative targets `d_1 >= d_2 >= … >= d_n`,
//! this crate constructs an element `x` whose distance to each `Y_k` equals
//! `d_k`, together with a transcript of every intermediate quantity and an
//! independent brute-force verifier.
//!
//! The main entry points are:
//!
//! * [`space::Space`] — weighted p-norm spaces, duals, norming functionals;
//! * [`distance::distance`] — distance from a point to a subspace with a
//!   dual certificate;
//! * [`construct::theorem_construct`] — the full chain construction;
//! * [`oracle::brute_distance`] / [`oracle::verify_construction`] — the
//!   independent grid/golden-section verifier;
//! * [`oracle::lemma_audit`] — randomized audits of the individual
//!   construction lemmas.

pub mod space;
pub mod subspace;
mod simplex;
pub mod distance;
pub mod functional;
pub mod construct;
pub mod study;
pub mod oracle;
pub mod io;
pub mod cli;

pub use construct::{theorem_construct, ConstructionTranscript, TargetSequence};
pub use distance::{distance, distance_with, DistanceSolution};
pub use space::{Exponent, Functional, Space};
pub use subspace::{witness, Chain, Subspace};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid targets: {0}")]
    InvalidTargets(String),

    #[error(
        "bracket does not straddle the target: g({lo}) = {g_lo}, g({hi}) = {g_hi}, target {target}"
    )]
    BracketFailure {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        target: f64,
    },

    #[error("linear program failed: {0}")]
    Linprog(String),

    #[error("solver stalled: best certificate residual {achieved:e} exceeds tolerance {tolerance:e}")]
    SolverStall { achieved: f64, tolerance: f64 },

    #[error("degenerate constraint system: {0}")]
    DegenerateConstraints(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Numerical tolerances used across the solvers.
///
/// * `solve` — base accuracy scale for distance solves.  The exact-arithmetic
///   backends (weighted least squares for `p = 2`, the simplex method for
///   `p ∈ {1, ∞}`) land well below it; the smooth general-`p` Newton solver
///   iterates until its duality certificate residual is below `solve`.
/// * `root` — absolute parameter tolerance for one-dimensional root and
///   line searches.
/// * `verify` — acceptance tolerance for residual checks, scaled at use
///   sites by `(1 + magnitude)` of the quantity being checked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub solve: f64,
    pub root: f64,
    pub verify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve: 1e-9,
            root: 1e-10,
            verify: 1e-6,
        }
    }
}

impl Tolerances {
    /// Validate that each tolerance is finite and positive.
    pub fn validated(self) -> Result<Self> {
        for (name, v) in [
            ("solve", self.solve),
            ("root", self.root),
            ("verify", self.verify),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Precondition(format!(
                    "tolerance `{name}` must be finite and positive, got {v}"
                )));
            }
        }
        Ok(self)
    }
}
