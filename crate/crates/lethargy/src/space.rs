//! Weighted p-norm spaces, their duals, and norming functionals.
//!
//! A [`Space`] is `R^dim` equipped with the norm
//!
//! * `‖x‖ = (Σ_i w_i |x_i|^p)^(1/p)` for finite `p >= 1`, or
//! * `‖x‖ = max_i w_i |x_i|` for `p = ∞`,
//!
//! with strictly positive weights `w_i` (all ones if unspecified).  Dual
//! spaces follow the standard conjugate-exponent rules under the pairing
//! `f(x) = Σ_i f_i x_i`, and [`Space::norming_functional`] produces, for any
//! nonzero `x`, a functional of dual norm one attaining `f(x) = ‖x‖`.

use nalgebra::DVector;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Norm exponent: finite `p >= 1` or `∞`.
///
/// Serializes to JSON as a number for finite exponents and the string
/// `"inf"` for infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// The conjugate exponent `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
            Exponent::Infinity => Exponent::Finite(1.0),
        }
    }

    /// The exponent as an `f64` (`∞` maps to `f64::INFINITY`).
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    fn validated(self) -> Result<Self> {
        if let Exponent::Finite(p) = self {
            if !p.is_finite() || p < 1.0 {
                return Err(Error::InvalidNorm(format!(
                    "exponent must satisfy p >= 1 (or be \"inf\"), got {p}"
                )));
            }
        }
        Ok(self)
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let raw = Raw::deserialize(deserializer)?;
        let exp = match raw {
            Raw::Num(p) => Exponent::Finite(p),
            Raw::Str(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "oo" => Exponent::Infinity,
                other => other
                    .parse::<f64>()
                    .map(Exponent::Finite)
                    .map_err(|_| D::Error::custom(format!("invalid exponent {other:?}")))?,
            },
        };
        exp.validated().map_err(D::Error::custom)
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "oo" => Ok(Exponent::Infinity),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidNorm(format!("invalid exponent {other:?}")))
                .and_then(|p| Exponent::Finite(p).validated()),
        }
    }
}

/// A finite-dimensional weighted p-norm space.
#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    dim: usize,
    p: Exponent,
    /// `None` means all weights are one.
    weights: Option<DVector<f64>>,
}

impl Space {
    /// Create a space, validating the exponent and weights.
    pub fn new(dim: usize, p: Exponent, weights: Option<Vec<f64>>) -> Result<Space> {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be at least 1".into()));
        }
        p.validated()?;
        let weights = match weights {
            None => None,
            Some(w) => {
                if w.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: w.len(),
                    });
                }
                for (i, wi) in w.iter().enumerate() {
                    if !wi.is_finite() || *wi <= 0.0 {
                        return Err(Error::InvalidNorm(format!(
                            "weight {i} must be finite and positive, got {wi}"
                        )));
                    }
                }
                if w.iter().all(|wi| *wi == 1.0) {
                    None
                } else {
                    Some(DVector::from_vec(w))
                }
            }
        };
        Ok(Space { dim, p, weights })
    }

    /// Unweighted p-norm space.
    pub fn unweighted(dim: usize, p: Exponent) -> Result<Space> {
        Space::new(dim, p, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    /// The weight vector (all ones if the space is unweighted).
    pub fn weights(&self) -> DVector<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => DVector::from_element(self.dim, 1.0),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0,
        }
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            })
        } else {
            Ok(())
        }
    }

    /// The norm of `x`.
    ///
    /// For finite `p` other than 1 and 2 the sum is rescaled by the largest
    /// component magnitude to avoid overflow/underflow in `powf`.
    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match self.p {
            Exponent::Infinity => {
                let mut best = 0.0f64;
                for i in 0..self.dim {
                    let v = self.weight(i) * x[i].abs();
                    if v > best {
                        best = v;
                    }
                }
                best
            }
            Exponent::Finite(p) if p == 1.0 => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    s += self.weight(i) * x[i].abs();
                }
                s
            }
            Exponent::Finite(p) if p == 2.0 => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    s += self.weight(i) * x[i] * x[i];
                }
                s.sqrt()
            }
            Exponent::Finite(p) => {
                let m = x.amax();
                if m == 0.0 || !m.is_finite() {
                    return if m == 0.0 { 0.0 } else { f64::INFINITY };
                }
                let mut s = 0.0;
                for i in 0..self.dim {
                    let r = x[i].abs() / m;
                    if r > 0.0 {
                        s += self.weight(i) * r.powf(p);
                    }
                }
                m * s.powf(1.0 / p)
            }
        }
    }

    /// The dual space: conjugate exponent, dual weights.
    ///
    /// Under the pairing `f(x) = Σ f_i x_i`, the dual of the `(p, w)` norm is
    /// the `(p', w')` norm with `w'_i = w_i^(-p'/p)` for `1 < p < ∞`, and
    /// `w'_i = 1/w_i` for `p ∈ {1, ∞}` (with `p'` the conjugate exponent).
    /// Taking the dual twice returns the original space.
    pub fn dual(&self) -> Space {
        let q = self.p.conjugate();
        let weights = match (&self.weights, self.p) {
            (None, _) => None,
            (Some(w), Exponent::Finite(p)) if p > 1.0 => {
                let qv = p / (p - 1.0);
                Some(w.map(|wi| wi.powf(-qv / p)))
            }
            (Some(w), _) => Some(w.map(|wi| 1.0 / wi)),
        };
        Space {
            dim: self.dim,
            p: q,
            weights,
        }
    }

    /// Norm of a functional's coefficient vector in the dual space.
    pub fn dual_norm(&self, f: &DVector<f64>) -> f64 {
        self.dual().norm(f)
    }

    /// A functional `f` with `‖f‖* = 1` and `f(x) = ‖x‖` for nonzero `x`.
    ///
    /// * `1 < p < ∞`: `f_i = w_i |x̂_i|^(p-1) sign(x̂_i)` on `x̂ = x/‖x‖`;
    /// * `p = 1`: `f_i = w_i sign(x_i)` (zero where `x_i = 0`);
    /// * `p = ∞`: supported on the lowest index attaining `max_i w_i |x_i|`,
    ///   with value `w_i sign(x_i)` there.
    ///
    /// The tie-breaking choices make the result deterministic.
    pub fn norming_functional(&self, x: &DVector<f64>) -> Result<Functional> {
        self.check_dim(x)?;
        let n = self.norm(x);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        let coeffs = match self.p {
            Exponent::Finite(p) if p == 1.0 => {
                DVector::from_fn(self.dim, |i, _| self.weight(i) * sign(x[i]))
            }
            Exponent::Infinity => {
                let mut best = 0.0f64;
                let mut idx = 0usize;
                for i in 0..self.dim {
                    let v = self.weight(i) * x[i].abs();
                    if v > best {
                        best = v;
                        idx = i;
                    }
                }
                let mut f = DVector::zeros(self.dim);
                f[idx] = self.weight(idx) * sign(x[idx]);
                f
            }
            Exponent::Finite(p) => {
                let xhat = x / n;
                DVector::from_fn(self.dim, |i, _| {
                    let a = xhat[i].abs();
                    if a == 0.0 {
                        0.0
                    } else {
                        self.weight(i) * a.powf(p - 1.0) * sign(xhat[i])
                    }
                })
            }
        };
        Functional::from_parts(self, coeffs)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A linear functional on a [`Space`], acting by `f(x) = Σ f_i x_i`, with
/// its dual norm cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    coeffs: DVector<f64>,
    dual_norm: f64,
}

impl Functional {
    /// Wrap coefficient vector `coeffs` as a functional on `space`.
    pub fn new(space: &Space, coeffs: DVector<f64>) -> Result<Functional> {
        space.check_dim(&coeffs)?;
        Self::from_parts(space, coeffs)
    }

    fn from_parts(space: &Space, coeffs: DVector<f64>) -> Result<Functional> {
        let dual_norm = space.dual_norm(&coeffs);
        if !dual_norm.is_finite() {
            return Err(Error::InvalidNorm("functional has non-finite dual norm".into()));
        }
        Ok(Functional { coeffs, dual_norm })
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn dual_norm(&self) -> f64 {
        self.dual_norm
    }

    /// Evaluate `f(x)`.
    pub fn apply(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.dot(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use proptest::strategy::ValueTree;

    fn space(dim: usize, p: Exponent, w: Option<Vec<f64>>) -> Space {
        Space::new(dim, p, w).unwrap()
    }

    fn v(data: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(data)
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Space::new(0, Exponent::Finite(2.0), None).is_err());
        assert!(Space::new(2, Exponent::Finite(0.5), None).is_err());
        assert!(Space::new(2, Exponent::Finite(f64::NAN), None).is_err());
        assert!(Space::new(2, Exponent::Finite(2.0), Some(vec![1.0])).is_err());
        assert!(Space::new(2, Exponent::Finite(2.0), Some(vec![1.0, 0.0])).is_err());
        assert!(Space::new(2, Exponent::Finite(2.0), Some(vec![1.0, -3.0])).is_err());
    }

    #[test]
    fn norm_values() {
        let x = v(&[3.0, -4.0]);
        assert_relative_eq!(space(2, Exponent::Finite(1.0), None).norm(&x), 7.0);
        assert_relative_eq!(space(2, Exponent::Finite(2.0), None).norm(&x), 5.0);
        assert_relative_eq!(space(2, Exponent::Infinity, None).norm(&x), 4.0);
        // Weighted: ‖(3,-4)‖ with w = (4, 1/4): l1 -> 13, l2 -> sqrt(40), linf -> 12.
        let w = Some(vec![4.0, 0.25]);
        assert_relative_eq!(space(2, Exponent::Finite(1.0), w.clone()).norm(&x), 13.0);
        assert_relative_eq!(
            space(2, Exponent::Finite(2.0), w.clone()).norm(&x),
            40.0f64.sqrt()
        );
        assert_relative_eq!(space(2, Exponent::Infinity, w).norm(&x), 12.0);
        // p = 3 on (1, 1): 2^(1/3).
        assert_relative_eq!(
            space(2, Exponent::Finite(3.0), None).norm(&v(&[1.0, 1.0])),
            2.0f64.powf(1.0 / 3.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn dual_of_p3_ones_vector() {
        // Dual norm of f = (1, 1) in unweighted p = 3: the conjugate exponent
        // is 3/2, giving (1 + 1)^(2/3) = 2^(2/3) = 1.5874010519681994.
        let s = space(2, Exponent::Finite(3.0), None);
        assert_relative_eq!(
            s.dual_norm(&v(&[1.0, 1.0])),
            1.587_401_051_968_199_4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn dual_involution_and_rules() {
        let s = space(3, Exponent::Finite(3.0), Some(vec![2.0, 0.5, 1.5]));
        let d = s.dual();
        assert_relative_eq!(d.p().value(), 1.5);
        let dd = d.dual();
        assert_relative_eq!(dd.p().value(), 3.0, max_relative = 1e-15);
        for i in 0..3 {
            assert_relative_eq!(dd.weight(i), s.weight(i), max_relative = 1e-12);
        }

        let s1 = space(2, Exponent::Finite(1.0), Some(vec![2.0, 4.0]));
        let d1 = s1.dual();
        assert!(d1.p().is_infinite());
        assert_relative_eq!(d1.weight(0), 0.5);
        assert_relative_eq!(d1.weight(1), 0.25);
        let s1dd = d1.dual();
        assert_relative_eq!(s1dd.p().value(), 1.0);
        assert_relative_eq!(s1dd.weight(0), 2.0);
    }

    #[test]
    fn norming_functional_examples() {
        // p = 1: full sign vector scaled by weights.
        let s1 = space(2, Exponent::Finite(1.0), Some(vec![2.0, 3.0]));
        let x = v(&[1.0, -2.0]);
        let f = s1.norming_functional(&x).unwrap();
        assert_eq!(f.coeffs().as_slice(), &[2.0, -3.0]);
        assert_relative_eq!(f.apply(&x), s1.norm(&x));
        assert_relative_eq!(f.dual_norm(), 1.0);

        // p = inf: supported on the (lowest) maximizing coordinate.
        let si = space(2, Exponent::Infinity, None);
        let y = v(&[1.0, 3.0]);
        let g = si.norming_functional(&y).unwrap();
        assert_eq!(g.coeffs().as_slice(), &[0.0, 1.0]);
        assert_relative_eq!(g.apply(&y), 3.0);

        // p = inf ties resolve to the lowest index.
        let t = si.norming_functional(&v(&[-2.0, 2.0])).unwrap();
        assert_eq!(t.coeffs().as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn zero_vector_has_no_norming_functional() {
        let s = space(2, Exponent::Finite(2.0), None);
        assert!(matches!(
            s.norming_functional(&v(&[0.0, 0.0])),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn exponent_json_round_trip() {
        let two: Exponent = serde_json::from_str("2.0").unwrap();
        assert_eq!(two, Exponent::Finite(2.0));
        let inf: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(inf, Exponent::Infinity);
        assert_eq!(serde_json::to_string(&inf).unwrap(), "\"inf\"");
        assert!(serde_json::from_str::<Exponent>("0.3").is_err());
    }

    prop_compose! {
        fn arb_exponent()(which in 0usize..5) -> Exponent {
            match which {
                0 => Exponent::Finite(1.0),
                1 => Exponent::Finite(1.5),
                2 => Exponent::Finite(2.0),
                3 => Exponent::Finite(3.0),
                _ => Exponent::Infinity,
            }
        }
    }

    prop_compose! {
        fn arb_space()(p in arb_exponent(), dim in 1usize..6)
            (p in Just(p), dim in Just(dim),
             w in proptest::option::of(proptest::collection::vec(0.25f64..4.0, dim)))
            -> Space {
            Space::new(dim, p, w).unwrap()
        }
    }

    fn arb_vec(dim: usize) -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-10.0f64..10.0, dim).prop_map(DVector::from_vec)
    }

    proptest! {
        #[test]
        fn norm_axioms(s in arb_space(), t in -3.0f64..3.0) {
            let dim = s.dim();
            let runner = |x: DVector<f64>, y: DVector<f64>| {
                let nx = s.norm(&x);
                let ny = s.norm(&y);
                prop_assert!(nx >= 0.0);
                // Homogeneity.
                prop_assert!((s.norm(&(&x * t)) - t.abs() * nx).abs() <= 1e-10 * (1.0 + nx));
                // Triangle inequality.
                prop_assert!(s.norm(&(&x + &y)) <= nx + ny + 1e-10 * (1.0 + nx + ny));
                Ok(())
            };
            let mut inner = proptest::test_runner::TestRunner::deterministic();
            for _ in 0..8 {
                let x = arb_vec(dim).new_tree(&mut inner).unwrap().current();
                let y = arb_vec(dim).new_tree(&mut inner).unwrap().current();
                runner(x, y)?;
            }
        }

        #[test]
        fn holder_and_norming(s in arb_space()) {
            let mut inner = proptest::test_runner::TestRunner::deterministic();
            for _ in 0..8 {
                let x = arb_vec(s.dim()).new_tree(&mut inner).unwrap().current();
                let f = arb_vec(s.dim()).new_tree(&mut inner).unwrap().current();
                // Hölder: |f(x)| <= ‖f‖* ‖x‖.
                let lhs = f.dot(&x).abs();
                let rhs = s.dual_norm(&f) * s.norm(&x);
                prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs));
                // Norming functional: ‖f‖* = 1 and f(x) = ‖x‖.
                if s.norm(&x) > 1e-6 {
                    let nf = s.norming_functional(&x).unwrap();
                    prop_assert!((nf.dual_norm() - 1.0).abs() <= 1e-10);
                    prop_assert!((nf.apply(&x) - s.norm(&x)).abs() <= 1e-9 * (1.0 + s.norm(&x)));
                }
            }
        }

        #[test]
        fn dual_round_trip(s in arb_space()) {
            let dd = s.dual().dual();
            prop_assert_eq!(dd.dim(), s.dim());
            let pv = s.p().value();
            let ddv = dd.p().value();
            if pv.is_finite() {
                prop_assert!((ddv - pv).abs() <= 1e-12 * pv);
            } else {
                prop_assert!(ddv.is_infinite());
            }
            for i in 0..s.dim() {
                prop_assert!((dd.weight(i) - s.weight(i)).abs() <= 1e-12 * s.weight(i));
            }
        }
    }
}
