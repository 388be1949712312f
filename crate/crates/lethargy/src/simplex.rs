//! Dense two-phase primal simplex for small equality-form linear programs.
//!
//! Solves `min cᵀz  s.t.  A z = b, z >= 0` and returns both the primal
//! solution and the dual vector `y` (one entry per row, satisfying
//! `yᵀA <= cᵀ` componentwise and `yᵀb = cᵀz*` at the optimum).
//!
//! Pivoting uses Bland's rule throughout, so the solver is deterministic and
//! cannot cycle.  The tableau is refactorized from the current basis (dense
//! LU) every few pivots, and any "unbounded" verdict is re-checked against a
//! freshly refactorized tableau before being believed — long runs of
//! degenerate pivots can otherwise erode the tableau until a bounded column
//! looks like a ray.  After termination the primal and dual values are
//! recomputed from the final basis, which removes accumulated round-off; on
//! the problem sizes used here (tens of rows) the results are accurate to
//! near machine precision.
//!
//! The LPs built by the distance solver always have full row rank (their
//! rows contain signed identity blocks), so a redundant row is reported as
//! an error rather than repaired.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LpSolution {
    /// Primal variable values, length `n`.
    pub x: Vec<f64>,
    /// Dual values for the original (unflipped) rows, length `m`.
    pub dual: Vec<f64>,
    /// Optimal objective `cᵀx` (diagnostic; callers recompute their own).
    #[allow(dead_code)]
    pub objective: f64,
}

/// Pivots between refactorizations of the tableau.
const REFACTOR_EVERY: usize = 20;

struct Tableau<'p> {
    a: &'p DMatrix<f64>,
    m: usize,
    n: usize,
    width: usize,
    /// Row signs making the right-hand side nonnegative at the start.
    flipped: Vec<bool>,
    /// `m` rows of `B⁻¹ [A | I | b]` (columns `n..n+m` are the artificials).
    t: Vec<Vec<f64>>,
    /// Reduced-cost row; `z[width-1]` is minus the objective.
    z: Vec<f64>,
    basis: Vec<usize>,
    piv_tol: f64,
    red_tol: f64,
    since_refactor: usize,
}

impl<'p> Tableau<'p> {
    fn new(a: &'p DMatrix<f64>, b: &[f64], scale: f64, red_scale: f64) -> Tableau<'p> {
        let m = a.nrows();
        let n = a.ncols();
        let width = n + m + 1;
        let mut t = vec![vec![0.0f64; width]; m];
        let mut flipped = vec![false; m];
        for i in 0..m {
            let s = if b[i] < 0.0 {
                flipped[i] = true;
                -1.0
            } else {
                1.0
            };
            for j in 0..n {
                t[i][j] = s * a[(i, j)];
            }
            t[i][n + i] = 1.0;
            t[i][width - 1] = s * b[i];
        }
        Tableau {
            a,
            m,
            n,
            width,
            flipped,
            t,
            z: vec![0.0; width],
            basis: (n..n + m).collect(),
            piv_tol: 1e-11 * scale,
            // Comfortably above the ~1e-12 rounding floor of refactorized
            // reduced costs; true non-optimal columns sit far above this.
            red_tol: 1e-10 * red_scale,
            since_refactor: 0,
        }
    }

    fn sign(&self, row: usize) -> f64 {
        if self.flipped[row] {
            -1.0
        } else {
            1.0
        }
    }

    /// Column `j` of the sign-flipped `[A | I]` system.
    fn source_column(&self, j: usize) -> DVector<f64> {
        DVector::from_fn(self.m, |r, _| {
            if j < self.n {
                self.sign(r) * self.a[(r, j)]
            } else if r == j - self.n {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Rebuild every tableau row exactly from the current basis via LU, then
    /// restore the reduced-cost row for `costs`.
    fn refactor(&mut self, costs: &dyn Fn(usize) -> f64, rhs_flipped: &DVector<f64>) -> Result<()> {
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (i, &bj) in self.basis.iter().enumerate() {
            let col = self.source_column(bj);
            for r in 0..self.m {
                bmat[(r, i)] = col[r];
            }
        }
        let lu = bmat.lu();
        let solve = |v: &DVector<f64>| -> Result<DVector<f64>> {
            lu.solve(v)
                .ok_or_else(|| Error::Linprog("singular basis during refactorization".into()))
        };
        for j in 0..self.width - 1 {
            let col = solve(&self.source_column(j))?;
            for i in 0..self.m {
                self.t[i][j] = col[i];
            }
        }
        let xb = solve(rhs_flipped)?;
        for i in 0..self.m {
            // Basic values may come back as -1e-16 after the solve; the
            // ratio test treats them as exact zeros.
            self.t[i][self.width - 1] = if xb[i].abs() < self.piv_tol { 0.0 } else { xb[i] };
        }
        self.set_objective(costs);
        self.since_refactor = 0;
        Ok(())
    }

    fn set_objective(&mut self, costs: &dyn Fn(usize) -> f64) {
        for j in 0..self.width {
            self.z[j] = if j < self.width - 1 { costs(j) } else { 0.0 };
        }
        for i in 0..self.m {
            let cb = costs(self.basis[i]);
            if cb != 0.0 {
                for j in 0..self.width {
                    self.z[j] -= cb * self.t[i][j];
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for j in 0..self.width {
            self.t[row][j] /= p;
        }
        for i in 0..self.m {
            if i != row {
                let factor = self.t[i][col];
                if factor != 0.0 {
                    for j in 0..self.width {
                        self.t[i][j] -= factor * self.t[row][j];
                    }
                    self.t[i][col] = 0.0;
                }
            }
        }
        let factor = self.z[col];
        if factor != 0.0 {
            for j in 0..self.width {
                self.z[j] -= factor * self.t[row][j];
            }
            self.z[col] = 0.0;
        }
        self.basis[row] = col;
        self.since_refactor += 1;
    }

    /// Bland ratio test for `col`; `None` means no positive pivot entry.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if self.t[i][col] > self.piv_tol {
                let ratio = self.t[i][self.width - 1].max(0.0) / self.t[i][col];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 * (1.0 + br.abs())
                            || (ratio <= br + 1e-12 * (1.0 + br.abs())
                                && self.basis[i] < self.basis[bi])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        leave.map(|(i, _)| i)
    }

    /// Run pivots until no column below `allowed` has negative reduced cost.
    fn run_phase(
        &mut self,
        costs: &dyn Fn(usize) -> f64,
        rhs_flipped: &DVector<f64>,
        allowed: usize,
    ) -> Result<()> {
        let max_iters = 200 * (self.m + self.n + 10);
        for _ in 0..max_iters {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor(costs, rhs_flipped)?;
            }
            let enter = (0..allowed).find(|&j| self.z[j] < -self.red_tol);
            let Some(col) = enter else { return Ok(()) };
            match self.leaving_row(col) {
                Some(row) => self.pivot(row, col),
                None => {
                    // Believe "unbounded" only from an exactly rebuilt
                    // tableau; otherwise rebuild and re-examine.
                    if self.since_refactor == 0 {
                        return Err(Error::Linprog("unbounded".into()));
                    }
                    self.refactor(costs, rhs_flipped)?;
                }
            }
        }
        Err(Error::Linprog("iteration limit exceeded".into()))
    }
}

/// Solve `min cᵀz : A z = b, z >= 0`.
pub fn solve(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Result<LpSolution> {
    let m = a.nrows();
    let n = a.ncols();
    if c.len() != n || b.len() != m {
        return Err(Error::Linprog(format!(
            "shape mismatch: A is {m}x{n}, c has {}, b has {}",
            c.len(),
            b.len()
        )));
    }
    if m == 0 {
        return Ok(LpSolution {
            x: vec![0.0; n],
            dual: vec![],
            objective: 0.0,
        });
    }

    let scale = a
        .amax()
        .max(b.iter().fold(0.0f64, |s, v| s.max(v.abs())))
        .max(1.0);
    let red_scale = scale.max(c.iter().fold(0.0f64, |s, v| s.max(v.abs())));
    let mut tab = Tableau::new(a, b, scale, red_scale);
    let rhs_flipped = DVector::from_fn(m, |i, _| if b[i] < 0.0 { -b[i] } else { b[i] });

    // Phase 1: minimize the sum of artificials.
    let phase1_costs = |j: usize| if j >= n { 1.0 } else { 0.0 };
    tab.set_objective(&phase1_costs);
    tab.run_phase(&phase1_costs, &rhs_flipped, n + m)?;
    let phase1_obj = -tab.z[tab.width - 1];
    if phase1_obj > 1e-8 * scale {
        return Err(Error::Linprog(format!(
            "infeasible: phase-1 objective {phase1_obj:e}"
        )));
    }
    // Drive any artificial still in the basis (at zero level) out of it.
    for i in 0..m {
        if tab.basis[i] >= n {
            let found = (0..n).find(|&j| tab.t[i][j].abs() > tab.piv_tol);
            match found {
                Some(j) => tab.pivot(i, j),
                None => return Err(Error::Linprog(format!("redundant constraint row {i}"))),
            }
        }
    }

    // Phase 2: real costs; artificials may not re-enter.
    let cs: Vec<f64> = c.to_vec();
    let phase2_costs = move |j: usize| if j < n { cs[j] } else { 0.0 };
    tab.set_objective(&phase2_costs);
    tab.run_phase(&phase2_costs, &rhs_flipped, n)?;

    // Refine: recompute primal and dual from the final basis via LU.
    // Columns of the basis matrix come from the *flipped* system, matching
    // the flipped rhs; duals are unflipped at the end.
    let mut bmat = DMatrix::zeros(m, m);
    for (i, &bj) in tab.basis.iter().enumerate() {
        let col = tab.source_column(bj);
        for r in 0..m {
            bmat[(r, i)] = col[r];
        }
    }
    let lu = bmat.clone().lu();
    let xb = lu
        .solve(&rhs_flipped)
        .ok_or_else(|| Error::Linprog("singular final basis".into()))?;
    let cb = DVector::from_fn(m, |i, _| if tab.basis[i] < n { c[tab.basis[i]] } else { 0.0 });
    let yb = bmat
        .transpose()
        .lu()
        .solve(&cb)
        .ok_or_else(|| Error::Linprog("singular final basis (dual)".into()))?;

    let mut x = vec![0.0; n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = xb[i];
        }
    }
    let mut dual = vec![0.0; m];
    for i in 0..m {
        dual[i] = if tab.flipped[i] { -yb[i] } else { yb[i] };
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();

    Ok(LpSolution { x, dual, objective })
}
