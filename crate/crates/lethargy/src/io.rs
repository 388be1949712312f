//! Problem and report files.
//!
//! Problems are JSON documents naming a space, a chain, and the target
//! distances; reports echo a hash of the problem, the constructed element,
//! and a residual table, machine-readable with an aligned text rendering.
//! Floats are serialized with 17 significant digits so emitted files
//! reproduce bit-for-bit across platforms and languages.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::space::{Exponent, Space};
use crate::subspace::{random_chain, Chain, Subspace};
use crate::{Error, Result, Tolerances};

/// Norm exponent as it appears in a problem file: a number or `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Name(String),
}

impl PValue {
    /// Validate and convert; the only admissible name is `"inf"`.
    pub fn exponent(&self) -> Result<Exponent> {
        match self {
            PValue::Number(p) if p.is_finite() && *p >= 1.0 => Ok(Exponent::Finite(*p)),
            PValue::Name(s) if s == "inf" => Ok(Exponent::Infinity),
            _ => Err(Error::Parse("p must be ≥ 1 or inf".into())),
        }
    }

    pub fn from_exponent(e: Exponent) -> PValue {
        match e {
            Exponent::Finite(p) => PValue::Number(p),
            Exponent::Infinity => PValue::Name("inf".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: PValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub dim: usize,
    pub norm: NormSpec,
}

/// Chain description: explicit bases, or dimensions drawn at a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ChainSpec {
    /// One entry per link; each entry lists the link's basis vectors
    /// (length-`dim` arrays).  An empty entry is the zero subspace.
    Explicit { basis: Vec<Vec<Vec<f64>>> },
    Random {
        dims: Vec<usize>,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptionsSpec {
    #[serde(default)]
    pub transcript: bool,
}

/// A parsed and validated problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub space: SpaceSpec,
    pub chain: ChainSpec,
    pub targets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub options: OptionsSpec,
}

impl ProblemSpec {
    /// Field-level semantic validation; all problems are reported at once.
    pub fn validate(&self) -> Result<()> {
        let mut errors: Vec<String> = Vec::new();
        let dim = self.space.dim;
        if dim == 0 {
            errors.push("space.dim: must be at least 1".into());
        }
        if let Err(e) = self.space.norm.p.exponent() {
            errors.push(format!("space.norm.p: {e}"));
        }
        if let Some(w) = &self.space.norm.weights {
            if w.len() != dim {
                errors.push(format!(
                    "space.norm.weights: got {} weights for dimension {dim}",
                    w.len()
                ));
            }
            if w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                errors.push("space.norm.weights: weights must be positive".into());
            }
        }
        let links = match &self.chain {
            ChainSpec::Explicit { basis } => {
                for (i, link) in basis.iter().enumerate() {
                    if link.iter().any(|v| v.len() != dim) {
                        errors.push(format!(
                            "chain.basis[{i}]: basis vectors must have length {dim}"
                        ));
                    }
                }
                basis.len()
            }
            ChainSpec::Random { dims, .. } => {
                if !dims.windows(2).all(|p| p[0] < p[1]) {
                    errors.push("chain.dims: must be strictly increasing".into());
                }
                if dims.iter().any(|&k| k >= dim) {
                    errors.push(format!("chain.dims: dimensions must be below {dim}"));
                }
                if dims.is_empty() {
                    errors.push("chain.dims: must name at least one link".into());
                }
                dims.len()
            }
        };
        if self.targets.is_empty() {
            errors.push("targets: target list is empty".into());
        }
        if self.targets.iter().any(|v| !v.is_finite() || *v < 0.0) {
            errors.push("targets: must be finite and nonnegative".into());
        }
        if !self.targets.windows(2).all(|p| p[0] >= p[1]) {
            errors.push("targets not non-increasing".into());
        }
        if !self.targets.is_empty() && links != self.targets.len() {
            errors.push(format!(
                "targets: got {} targets for a chain of {links} links",
                self.targets.len()
            ));
        }
        if let Some(t) = &self.tolerances {
            for (name, v) in [("solve", t.solve), ("root", t.root), ("verify", t.verify)] {
                if let Some(v) = v {
                    if !v.is_finite() || v <= 0.0 {
                        errors.push(format!("tolerances.{name}: must be positive"));
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse(errors.join("; ")))
        }
    }

    pub fn space(&self) -> Result<Space> {
        Space::new(
            self.space.dim,
            self.space.norm.p.exponent()?,
            self.space.norm.weights.clone(),
        )
    }

    pub fn chain(&self) -> Result<Chain> {
        let dim = self.space.dim;
        match &self.chain {
            ChainSpec::Explicit { basis } => {
                let links = basis
                    .iter()
                    .map(|vectors| {
                        if vectors.is_empty() {
                            return Ok(Subspace::zero(dim));
                        }
                        let mut m = nalgebra::DMatrix::zeros(dim, vectors.len());
                        for (j, v) in vectors.iter().enumerate() {
                            for (i, entry) in v.iter().enumerate() {
                                m[(i, j)] = *entry;
                            }
                        }
                        Subspace::new(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Chain::new(links, None)
            }
            ChainSpec::Random { dims, seed } => random_chain(dim, dims, *seed),
        }
    }

    /// Tolerances from the file over the defaults; CLI flags are applied on
    /// top by the caller.
    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            if let Some(v) = t.solve {
                tol.solve = v;
            }
            if let Some(v) = t.root {
                tol.root = v;
            }
            if let Some(v) = t.verify {
                tol.verify = v;
            }
        }
        tol.validated()?;
        Ok(tol)
    }

    /// Hex SHA-256 of the canonical serialization; reports echo this.
    pub fn hash(&self) -> Result<String> {
        Ok(hash_text(&emit_problem(self)?))
    }
}

/// Hex SHA-256 of canonical text; subcommands without a problem file hash
/// their parameter echo instead.
pub fn hash_text(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse and validate a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn read_problem(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

/// Canonical serialization of a problem: pretty JSON, floats at 17
/// significant digits, trailing newline.
pub fn emit_problem(spec: &ProblemSpec) -> Result<String> {
    to_json(spec)
}

/// Pretty JSON with reproducible float formatting.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let fmt = SignificantDigits::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Parse(format!("serialization failed: {e}")))
}

/// Pretty formatter that writes every float with 17 significant digits
/// (scientific form), the smallest count that reproduces any `f64` exactly.
struct SignificantDigits {
    inner: PrettyFormatter<'static>,
}

impl SignificantDigits {
    fn new() -> Self {
        SignificantDigits {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Formatter for SignificantDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // JSON has no non-finite numbers; readers treat null as absent.
            writer.write_all(b"null")
        }
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// One row of a report's residual table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualRow {
    pub k: usize,
    pub target: f64,
    pub distance: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Machine-readable run report with an aligned text rendering.
///
/// `timestamp` (unix seconds) is the only field excluded from determinism
/// comparisons; everything else reproduces byte-for-byte for a fixed
/// problem and seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    /// SHA-256 of the canonical problem serialization.
    pub problem_hash: String,
    pub timestamp: u64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<ResidualRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<serde_json::Value>,
    /// Subcommand-specific payload (witness vector, audit table, …).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Report {
    pub fn new(command: &str, problem_hash: String) -> Report {
        Report {
            command: command.to_string(),
            problem_hash,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            pass: true,
            x: None,
            residuals: Vec::new(),
            warnings: Vec::new(),
            transcript: None,
            details: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    /// Aligned table for standard output.
    pub fn text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{}: {}\n",
            self.command,
            if self.pass { "pass" } else { "FAIL" }
        ));
        out.push_str(&format!("problem {}\n", self.problem_hash));
        if !self.residuals.is_empty() {
            out.push_str(&format!(
                "\n{:>4}  {:>24}  {:>24}  {:>10}  {}\n",
                "k", "target", "distance", "residual", "pass"
            ));
            for r in &self.residuals {
                out.push_str(&format!(
                    "{:>4}  {:>24.17e}  {:>24.17e}  {:>10.2e}  {}\n",
                    r.k,
                    r.target,
                    r.distance,
                    r.residual,
                    if r.pass { "yes" } else { "NO" }
                ));
            }
        }
        if let Some(x) = &self.x {
            out.push_str("\nx = [");
            for (i, v) in x.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{v:.9e}"));
            }
            out.push_str("]\n");
        }
        if !self.warnings.is_empty() {
            out.push_str("\nwarnings:\n");
            for w in &self.warnings {
                out.push_str(&format!("  - {w}\n"));
            }
        }
        out
    }
}
