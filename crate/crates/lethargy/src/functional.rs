//! Construction of functionals with prescribed values: annihilator
//! certificates and the two-point extension.
//!
//! [`two_point_hahn_banach`] looks for a functional `f` with
//!
//! * `f|_Q = 0`,
//! * `f(x1) = 1`,
//! * `f(x2) = δ - ρ(x2 - δ·x1, Q) / ρ(x1, Q)`,
//!
//! of the smallest possible dual norm.  Any `f` annihilating `Q` with
//! `f(x1) = 1` satisfies `‖f‖* >= 1/ρ(x1, Q)`, so the interesting question
//! is whether that bound is *attained* under the two prescribed values; the
//! result reports the achieved dual norm and whether it matches the bound
//! to tolerance (`feasible_at_norm`).  Without extra positioning
//! hypotheses on `x1, x2` the bound can genuinely fail — see the audit
//! fixtures in the `oracle` module for a two-dimensional example.
//!
//! The minimization is exact up to solver tolerance: the constraint set is
//! an affine subspace, so after a particular solution `f0` (SVD
//! pseudoinverse) the problem becomes a distance computation *in the dual
//! space* from `f0` to the constraint-matrix nullspace, which reuses the
//! distance engine.

use nalgebra::{DMatrix, DVector};

use crate::distance::{argmin_line_right_with, distance_with};
use crate::space::{Functional, Space};
use crate::subspace::Subspace;
use crate::{Error, Result, Tolerances};

/// Result of [`two_point_hahn_banach`].
#[derive(Clone, Debug)]
pub struct TwoPointResult {
    pub f: Functional,
    /// The shift used (given or computed by the right-endpoint line search).
    pub delta: f64,
    /// The prescribed value `f(x2)`.
    pub target: f64,
    /// `ρ(x1, Q)`.
    pub rho_x1: f64,
    /// The unimprovable lower bound `1/ρ(x1, Q)` for the dual norm.
    pub claimed_dual_norm: f64,
    /// The dual norm actually achieved by the minimizer.
    pub achieved_dual_norm: f64,
    /// Whether `achieved_dual_norm · ρ(x1, Q) = 1` within `1e-6`.
    pub feasible_at_norm: bool,
    /// Whether the mirrored convention was used (see below).
    pub mirrored: bool,
}

/// Minimal-dual-norm functional with `f|_Q = 0`, `f(x1) = 1`, and a
/// prescribed value at `x2` derived from the shift `δ`.
///
/// * `delta` — the shift; `None` computes the right endpoint of the argmin
///   interval of `a ↦ ρ(x2 - a·x1, Q)` over `a >= 0`.
/// * `mirrored` — uses the reflected convention, prescribing
///   `f(x2) = -δ + ρ(x2 + δ·x1, Q)/ρ(x1, Q)` instead (equivalent to
///   substituting `x1 → -x1` and negating the result).
///
/// Preconditions: `x1 ∉ span(Q)` and `x2 ∉ span(Q ∪ {x1})` (the constraint
/// rows must be independent); `δ >= 0`.
pub fn two_point_hahn_banach(
    space: &Space,
    q: &Subspace,
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    delta: Option<f64>,
    mirrored: bool,
) -> Result<TwoPointResult> {
    two_point_hahn_banach_with(space, q, x1, x2, delta, mirrored, &Tolerances::default())
}

pub fn two_point_hahn_banach_with(
    space: &Space,
    q: &Subspace,
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    delta: Option<f64>,
    mirrored: bool,
    tol: &Tolerances,
) -> Result<TwoPointResult> {
    if mirrored {
        let inner = two_point_primary(space, q, &(-x1), x2, delta, tol)?;
        let f = Functional::new(space, -inner.f.coeffs().clone())?;
        return Ok(TwoPointResult {
            f,
            delta: inner.delta,
            target: -inner.target,
            rho_x1: inner.rho_x1,
            claimed_dual_norm: inner.claimed_dual_norm,
            achieved_dual_norm: inner.achieved_dual_norm,
            feasible_at_norm: inner.feasible_at_norm,
            mirrored: true,
        });
    }
    two_point_primary(space, q, x1, x2, delta, tol)
}

fn two_point_primary(
    space: &Space,
    q: &Subspace,
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    delta: Option<f64>,
    tol: &Tolerances,
) -> Result<TwoPointResult> {
    space.check_dim(x1)?;
    space.check_dim(x2)?;

    let rho_x1 = distance_with(space, q, x1, tol)?.value;
    if rho_x1 <= 1e-9 * (1.0 + space.norm(x1)) {
        return Err(Error::Precondition(
            "x1 lies in span(Q); no functional can annihilate Q and norm x1".into(),
        ));
    }

    let delta = match delta {
        Some(d) => {
            if d < -1e-12 {
                return Err(Error::Precondition(format!(
                    "shift delta must be non-negative, got {d}"
                )));
            }
            d.max(0.0)
        }
        None => argmin_line_right_with(space, q, x2, x1, tol)?.delta,
    };

    let shifted = x2 - x1 * delta;
    let rho_shifted = distance_with(space, q, &shifted, tol)?.value;
    let target = delta - rho_shifted / rho_x1;

    let (f, achieved) = minimal_norm_extension(space, q, x1, x2, target, tol)?;
    let claimed = 1.0 / rho_x1;
    let feasible_at_norm = (achieved * rho_x1 - 1.0).abs() <= 1e-6;
    Ok(TwoPointResult {
        f: Functional::new(space, f)?,
        delta,
        target,
        rho_x1,
        claimed_dual_norm: claimed,
        achieved_dual_norm: achieved,
        feasible_at_norm,
        mirrored: false,
    })
}

/// Minimal-dual-norm `f` with `f|_Q = 0`, `f(x1) = 1`, `f(x2) = target`;
/// returns the coefficient vector and the achieved dual norm.
pub(crate) fn minimal_norm_extension(
    space: &Space,
    q: &Subspace,
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    target: f64,
    tol: &Tolerances,
) -> Result<(DVector<f64>, f64)> {
    let dim = space.dim();

    // Constraint rows: each ONB column of Q -> 0, x1 -> 1, x2 -> target.
    let k = q.dim();
    let mut c = DMatrix::zeros(k + 2, dim);
    for (j, col) in q.onb().column_iter().enumerate() {
        for i in 0..dim {
            c[(j, i)] = col[i];
        }
    }
    for i in 0..dim {
        c[(k, i)] = x1[i];
        c[(k + 1, i)] = x2[i];
    }
    let mut rhs = DVector::zeros(k + 2);
    rhs[k] = 1.0;
    rhs[k + 1] = target;

    let svd = c.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank_eps = 1e-10 * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|s| **s > rank_eps).count();
    if rank < k + 2 {
        return Err(Error::DegenerateConstraints(format!(
            "constraint rows are dependent (rank {rank} of {}): x2 lies in span(Q ∪ {{x1}}) numerically",
            k + 2
        )));
    }
    let f0 = svd
        .solve(&rhs, rank_eps)
        .map_err(|e| Error::DegenerateConstraints(format!("pseudoinverse solve failed: {e}")))?;

    // Nullspace of C = Euclidean complement of its row space (the right
    // singular vectors span the row space since C has full row rank).
    let vt = svd.v_t.as_ref().expect("svd with v requested");
    let row_space = Subspace::new(vt.transpose())?;
    let null_cols = row_space.complement_onb();

    let dual = space.dual();
    let f = if null_cols.ncols() == 0 {
        f0.clone()
    } else {
        let nsub = Subspace::new(null_cols)?;
        let sol = distance_with(&dual, &nsub, &f0, tol)?;
        &f0 - &sol.minimizer
    };

    // The constraints must hold essentially exactly (they are linear and the
    // nullspace correction cannot move them).
    let resid = (&c * &f - &rhs).amax();
    if resid > 1e-6 * (1.0 + target.abs()) {
        return Err(Error::DegenerateConstraints(format!(
            "constraint residual {resid:e} after minimization"
        )));
    }

    let achieved = dual.norm(&f);
    Ok((f, achieved))
}

/// A functional with `f|_Y = 0`, `‖f‖* = 1`, and `f(x) = ρ(x, Y)`; exactly
/// the certificate of the distance solve.  Requires `x ∉ span(Y)`.
pub fn annihilator_certificate(space: &Space, y: &Subspace, x: &DVector<f64>) -> Result<Functional> {
    annihilator_certificate_with(space, y, x, &Tolerances::default())
}

pub fn annihilator_certificate_with(
    space: &Space,
    y: &Subspace,
    x: &DVector<f64>,
    tol: &Tolerances,
) -> Result<Functional> {
    let sol = distance_with(space, y, x, tol)?;
    if sol.value <= 1e-9 * (1.0 + space.norm(x)) {
        return Err(Error::Precondition(
            "x lies in span(Y); the annihilator cannot norm it".into(),
        ));
    }
    sol.certificate.ok_or_else(|| {
        Error::DegenerateConstraints("distance solve returned no certificate".into())
    })
}
