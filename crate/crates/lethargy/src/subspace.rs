//! Subspaces, nested chains, and witness vectors.
//!
//! A [`Subspace`] stores the user-supplied basis together with a Euclidean
//! orthonormal basis for the same span (used for membership tests and for
//! well-conditioned coordinates inside the solvers).  A [`Chain`] is a
//! strictly nested sequence `Y_1 ⊂ Y_2 ⊂ … ⊂ Y_n`, optionally with witness
//! vectors attached to its links.
//!
//! A *witness* for a nested pair `Y ⊂ Z` is a vector `y ∈ Z \ Y` whose
//! distance to `Y` equals its norm, i.e. `ρ(y, Y) = ‖y‖`; equivalently the
//! best approximation to `y` from `Y` is `0`.  [`witness`] constructs one by
//! subtracting from a suitable element of `Z` its nearest point in `Y`.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::space::Space;
use crate::{distance, Error, Result};

/// A linear subspace of `R^dim`, with both the original basis and a
/// Euclidean orthonormal basis for the same span.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
    onb: DMatrix<f64>,
}

impl Subspace {
    /// Wrap a basis matrix (columns = basis vectors).  The columns must be
    /// linearly independent; a zero-column matrix denotes the zero subspace.
    pub fn new(basis: DMatrix<f64>) -> Result<Subspace> {
        let dim = basis.nrows();
        let k = basis.ncols();
        if dim == 0 {
            return Err(Error::InvalidBasis("ambient dimension is zero".into()));
        }
        if k > dim {
            return Err(Error::InvalidBasis(format!(
                "{k} basis vectors in ambient dimension {dim}"
            )));
        }
        for (j, col) in basis.column_iter().enumerate() {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidBasis(format!(
                    "basis column {j} has non-finite entries"
                )));
            }
        }
        if k == 0 {
            return Ok(Subspace {
                onb: basis.clone(),
                basis,
            });
        }
        // Rank check via singular values, then an orthonormal basis via QR.
        let svals = basis.clone().singular_values();
        let smax = svals.max();
        let smin = svals.min();
        if smax <= 0.0 || smin <= 1e-10 * smax {
            return Err(Error::InvalidBasis(format!(
                "basis columns are numerically dependent (sigma_min/sigma_max = {:e})",
                if smax > 0.0 { smin / smax } else { 0.0 }
            )));
        }
        let qr = basis.clone().qr();
        let onb = qr.q();
        Ok(Subspace { basis, onb })
    }

    /// The zero subspace `{0}` of `R^dim`.
    pub fn zero(dim: usize) -> Subspace {
        Subspace {
            basis: DMatrix::zeros(dim, 0),
            onb: DMatrix::zeros(dim, 0),
        }
    }

    /// The full space `R^dim`.
    pub fn full(dim: usize) -> Subspace {
        Subspace {
            basis: DMatrix::identity(dim, dim),
            onb: DMatrix::identity(dim, dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Dimension of the subspace itself.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Euclidean orthonormal basis with the same span.
    pub fn onb(&self) -> &DMatrix<f64> {
        &self.onb
    }

    /// Euclidean orthogonal projection onto the subspace.
    pub fn project_euclid(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.is_zero() {
            return DVector::zeros(self.ambient_dim());
        }
        &self.onb * (self.onb.transpose() * x)
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn residual_euclid(&self, x: &DVector<f64>) -> f64 {
        (x - self.project_euclid(x)).norm()
    }

    /// Membership test up to `tol * (1 + |x|_2)`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.residual_euclid(x) <= tol * (1.0 + x.norm())
    }

    /// Whether every basis vector of `other` lies in `self`.
    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        other
            .onb
            .column_iter()
            .all(|c| self.contains(&c.into_owned(), tol))
    }

    /// Span of this subspace together with extra columns.
    pub fn augment(&self, extra: &DMatrix<f64>) -> Result<Subspace> {
        let mut cols: Vec<DVector<f64>> = self
            .basis
            .column_iter()
            .map(|c| c.into_owned())
            .collect();
        cols.extend(extra.column_iter().map(|c| c.into_owned()));
        if cols.is_empty() {
            return Ok(Subspace::zero(self.ambient_dim()));
        }
        Subspace::new(DMatrix::from_columns(&cols))
    }

    /// An orthonormal basis of the Euclidean orthogonal complement.
    pub fn complement_onb(&self) -> DMatrix<f64> {
        let dim = self.ambient_dim();
        let k = self.dim();
        if k == 0 {
            return DMatrix::identity(dim, dim);
        }
        if k == dim {
            return DMatrix::zeros(dim, 0);
        }
        // Householder QR of [onb | I]: the leading k columns of Q span the
        // subspace (the leading k×k block of R is invertible because the onb
        // has full column rank), and the trailing dim − k columns complete
        // them to an orthogonal matrix — the complement, orthogonal to
        // machine precision by construction.  An SVD of the complement
        // projector is *not* reliable here: its singular values are exactly
        // degenerate and the iteration can stop with singular vectors that
        // mix the 0- and 1-clusters.
        let mut ext = DMatrix::zeros(dim, k + dim);
        ext.view_mut((0, 0), (dim, k)).copy_from(&self.onb);
        for i in 0..dim {
            ext[(i, k + i)] = 1.0;
        }
        let q = ext.qr().q();
        q.columns(k, dim - k).into_owned()
    }
}

/// A strictly nested chain of subspaces with optional witness vectors.
#[derive(Clone, Debug)]
pub struct Chain {
    dim: usize,
    links: Vec<Subspace>,
    witnesses: Option<Vec<DVector<f64>>>,
}

impl Chain {
    /// Build a chain from its links.  Structural checks only (shared ambient
    /// dimension, strictly increasing subspace dimensions, nesting);
    /// norm-dependent witness checks live in [`validate_chain`].
    pub fn new(links: Vec<Subspace>, witnesses: Option<Vec<DVector<f64>>>) -> Result<Chain> {
        if links.is_empty() {
            return Err(Error::InvalidChain("chain has no links".into()));
        }
        let dim = links[0].ambient_dim();
        for (i, s) in links.iter().enumerate() {
            if s.ambient_dim() != dim {
                return Err(Error::InvalidChain(format!(
                    "link {} has ambient dimension {}, expected {dim}",
                    i + 1,
                    s.ambient_dim()
                )));
            }
        }
        for i in 1..links.len() {
            if links[i].dim() <= links[i - 1].dim() {
                return Err(Error::InvalidChain(format!(
                    "link {} has dimension {} which does not exceed link {} of dimension {}",
                    i + 1,
                    links[i].dim(),
                    i,
                    links[i - 1].dim()
                )));
            }
            if !links[i].contains_subspace(&links[i - 1], 1e-9) {
                return Err(Error::InvalidChain(format!(
                    "link {} is not contained in link {}",
                    i,
                    i + 1
                )));
            }
        }
        if links.last().unwrap().dim() >= dim {
            return Err(Error::InvalidChain(format!(
                "final link has dimension {} which must be strictly below the ambient dimension {dim}",
                links.last().unwrap().dim()
            )));
        }
        if let Some(w) = &witnesses {
            if w.len() != links.len() {
                return Err(Error::InvalidChain(format!(
                    "{} witnesses for {} links",
                    w.len(),
                    links.len()
                )));
            }
            for (i, y) in w.iter().enumerate() {
                if y.len() != dim {
                    return Err(Error::InvalidChain(format!(
                        "witness {} has dimension {}, expected {dim}",
                        i + 1,
                        y.len()
                    )));
                }
            }
        }
        Ok(Chain {
            dim,
            links,
            witnesses,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Link `Y_k`, one-indexed.
    pub fn link(&self, k: usize) -> &Subspace {
        &self.links[k - 1]
    }

    pub fn links(&self) -> &[Subspace] {
        &self.links
    }

    pub fn witnesses(&self) -> Option<&[DVector<f64>]> {
        self.witnesses.as_deref()
    }

    /// The chain of the first `n` links (witnesses truncated alongside).
    pub fn prefix(&self, n: usize) -> Result<Chain> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidChain(format!(
                "prefix length {n} out of range 1..={}",
                self.len()
            )));
        }
        Ok(Chain {
            dim: self.dim,
            links: self.links[..n].to_vec(),
            witnesses: self.witnesses.as_ref().map(|w| w[..n].to_vec()),
        })
    }
}

/// Per-link result of [`validate_chain`].
#[derive(Clone, Debug)]
pub struct LinkCheck {
    /// One-indexed link number.
    pub index: usize,
    pub dim: usize,
    /// Nesting residual against the next link (zero for the last link).
    pub nesting_residual: f64,
    /// `|ρ(y, Y)/‖y‖ - 1|` for the attached witness, if any.
    pub witness_defect: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ChainValidation {
    pub links: Vec<LinkCheck>,
    pub pass: bool,
}

/// Norm-aware validation of a chain: nesting residuals and, where witnesses
/// are attached, the witness property `ρ(y_j, Y_j) = ‖y_j‖` together with
/// membership `y_j ∈ Y_{j+1}` (the last witness may live anywhere in the
/// ambient space).
pub fn validate_chain(space: &Space, chain: &Chain, tol: f64) -> Result<ChainValidation> {
    if space.dim() != chain.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: chain.ambient_dim(),
        });
    }
    let mut checks = Vec::with_capacity(chain.len());
    for k in 1..=chain.len() {
        let link = chain.link(k);
        let mut pass = true;
        let nesting_residual = if k < chain.len() {
            let next = chain.link(k + 1);
            let r = link
                .onb()
                .column_iter()
                .map(|c| next.residual_euclid(&c.into_owned()))
                .fold(0.0f64, f64::max);
            if r > tol {
                pass = false;
            }
            r
        } else {
            0.0
        };
        let witness_defect = match chain.witnesses() {
            Some(ws) => {
                let y = &ws[k - 1];
                let ny = space.norm(y);
                if ny == 0.0 {
                    pass = false;
                    Some(f64::INFINITY)
                } else {
                    if k < chain.len() && !chain.link(k + 1).contains(y, tol) {
                        pass = false;
                    }
                    let rho = distance::distance(space, link, y)?.value;
                    let defect = (rho / ny - 1.0).abs();
                    if defect > tol {
                        pass = false;
                    }
                    Some(defect)
                }
            }
            None => None,
        };
        checks.push(LinkCheck {
            index: k,
            dim: link.dim(),
            nesting_residual,
            witness_defect,
            pass,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ChainValidation {
        links: checks,
        pass,
    })
}

/// Construct a witness for the nested pair `lo ⊂ hi`: a vector `y ∈ hi`
/// with `ρ(y, lo) = ‖y‖ > 0`.
///
/// The candidate is the column of `hi`'s orthonormal basis with the largest
/// Euclidean residual against `lo` (lowest index on ties, so the result is
/// deterministic); subtracting its nearest point in `lo` yields `y`, since
/// translating by an element of `lo` does not change the distance to `lo`
/// while making the nearest point zero.
pub fn witness(space: &Space, lo: &Subspace, hi: &Subspace) -> Result<DVector<f64>> {
    if lo.ambient_dim() != hi.ambient_dim() || space.dim() != lo.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: lo.ambient_dim().max(hi.ambient_dim()),
        });
    }
    if lo.dim() >= hi.dim() {
        return Err(Error::Precondition(format!(
            "witness requires dim(lo) < dim(hi), got {} >= {}",
            lo.dim(),
            hi.dim()
        )));
    }
    if !hi.contains_subspace(lo, 1e-8) {
        return Err(Error::Precondition(
            "witness requires lo to be contained in hi".into(),
        ));
    }
    let mut best = -1.0f64;
    let mut candidate = None;
    for col in hi.onb().column_iter() {
        let c = col.into_owned();
        let r = lo.residual_euclid(&c);
        if r > best + 1e-12 {
            best = r;
            candidate = Some(c);
        }
    }
    let candidate = candidate.ok_or(Error::ZeroVector)?;
    if best <= 1e-8 {
        return Err(Error::Precondition(
            "no direction of hi escapes lo numerically".into(),
        ));
    }
    let sol = distance::distance(space, lo, &candidate)?;
    // When the column itself has the maximal-distance property, keep it:
    // subtracting a nearest point is only needed to *create* the property,
    // and on norms with non-unique nearest points it would replace an exact
    // candidate by an arbitrary vertex of the minimizer face.
    if (sol.value - space.norm(&candidate)).abs() <= 1e-9 * (1.0 + sol.value) {
        return Ok(candidate);
    }
    let y = candidate - sol.minimizer;
    Ok(y)
}

/// Generate a random strictly nested chain in `R^dim` from a seed.
///
/// The links are spans of leading column blocks of a random orthogonal
/// matrix (drawn from normal entries via QR, with a deterministic sign
/// convention), so nesting is exact and all bases are perfectly
/// conditioned.  `dims` must be strictly increasing; a leading `0` denotes
/// the zero subspace; the last entry must stay below `dim`.
pub fn random_chain(dim: usize, dims: &[usize], seed: u64) -> Result<Chain> {
    if dims.is_empty() {
        return Err(Error::InvalidChain("no subspace dimensions given".into()));
    }
    for i in 1..dims.len() {
        if dims[i] <= dims[i - 1] {
            return Err(Error::InvalidChain(format!(
                "subspace dimensions must be strictly increasing, got {:?}",
                dims
            )));
        }
    }
    let &last = dims.last().unwrap();
    if last >= dim {
        return Err(Error::InvalidChain(format!(
            "largest subspace dimension {last} must be below the ambient dimension {dim}"
        )));
    }
    let q = random_orthogonal(dim, seed);
    let links = dims
        .iter()
        .map(|&k| {
            if k == 0 {
                Ok(Subspace::zero(dim))
            } else {
                Subspace::new(q.columns(0, k).into_owned())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Chain::new(links, None)
}

/// Generate a strictly nested chain whose links are spans of standard basis
/// vectors, ordered by a seeded permutation of the coordinates.
///
/// Coordinate chains are the natural habitat of the polyhedral norms: along
/// them the construction's pivot shifts stay axis-aligned, so distance
/// profiles reach their asymptotic slope at the first breakpoint and every
/// claimed functional bound is attainable.  `dims` follows the same rules as
/// [`random_chain`].
pub fn coordinate_chain(dim: usize, dims: &[usize], seed: u64) -> Result<Chain> {
    if dims.is_empty() {
        return Err(Error::InvalidChain("no subspace dimensions given".into()));
    }
    for i in 1..dims.len() {
        if dims[i] <= dims[i - 1] {
            return Err(Error::InvalidChain(format!(
                "subspace dimensions must be strictly increasing, got {:?}",
                dims
            )));
        }
    }
    let &last = dims.last().unwrap();
    if last >= dim {
        return Err(Error::InvalidChain(format!(
            "largest subspace dimension {last} must be below the ambient dimension {dim}"
        )));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates with the seeded generator.
    for i in (1..dim).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let links = dims
        .iter()
        .map(|&k| {
            if k == 0 {
                Ok(Subspace::zero(dim))
            } else {
                let mut m = DMatrix::zeros(dim, k);
                for (j, &coord) in order.iter().take(k).enumerate() {
                    m[(coord, j)] = 1.0;
                }
                Subspace::new(m)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Chain::new(links, None)
}

/// A seeded random orthogonal matrix with a deterministic sign convention
/// (each column's entry of largest magnitude is positive; ties broken by
/// the lowest index, which `argmax` over strict improvement provides).
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let v: f64 = normal.sample(&mut rng);
        v
    });
    let qr = g.qr();
    let mut q = qr.q();
    for j in 0..dim {
        let col = q.column(j);
        let mut idx = 0;
        let mut best = -1.0f64;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if q[(idx, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}
