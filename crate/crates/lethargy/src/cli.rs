//! Command-line dispatch.
//!
//! Every subcommand prints an aligned text report to standard output and,
//! with `--out`, writes the machine-readable JSON report.  Exit codes:
//! 0 the report passes, 1 a verification failed, 2 the input could not be
//! used, 3 a solver gave up.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

use crate::construct::{
    finite_construct_with, q_sequence_with, theorem_construct_with, ConstructionTranscript,
    LevelKind, TargetSequence,
};
use crate::io::{
    self, emit_problem, hash_text, read_problem, ChainSpec, NormSpec, OptionsSpec, PValue,
    ProblemSpec, Report, ResidualRow, SpaceSpec,
};
use crate::oracle::{lemma_audit_with, verify_construction, AuditFamily, LemmaId};
use crate::space::{Exponent, Functional, Space};
use crate::study::{cauchy_study_with, james_demo_with};
use crate::subspace::{witness, Subspace};
use crate::{Error, Result, Tolerances};

#[derive(Parser)]
#[command(
    name = "lethargy",
    version,
    about = "Construct elements at prescribed distances from nested subspace chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalFlags,
}

#[derive(Args, Clone, Default)]
struct GlobalFlags {
    /// Override the solve tolerance from the problem file.
    #[arg(long, global = true)]
    tol_solve: Option<f64>,
    /// Override the root-finding tolerance from the problem file.
    #[arg(long, global = true)]
    tol_root: Option<f64>,
    /// Override the verification tolerance from the problem file.
    #[arg(long, global = true)]
    tol_verify: Option<f64>,
    /// Override the chain seed of a random-mode problem; the run seed for
    /// subcommands that do not read a problem file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Include the full construction transcript in the report.
    #[arg(long, global = true)]
    transcript: bool,
    /// Write the machine-readable JSON report to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an element realizing the problem's target distances.
    Construct { problem: PathBuf },
    /// Re-verify an externally supplied element against the problem.
    Verify {
        problem: PathBuf,
        /// JSON file holding the element as an array of coordinates.
        #[arg(long)]
        x: PathBuf,
    },
    /// Compute a norm-attaining witness above one link of the chain.
    Witness {
        problem: PathBuf,
        /// Link index (1-based); the witness sits in the next link (or the
        /// whole space) and realizes its distance to this one.
        #[arg(long, default_value_t = 1)]
        link: usize,
    },
    /// Run the finite-chain construction (strictly decreasing targets).
    Finite { problem: PathBuf },
    /// Build one pivot level and its q family over the first two links.
    Qseq {
        problem: PathBuf,
        /// Prescribed distance pairs "u:v,u:v,…"; defaults to consecutive
        /// target pairs.
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Norm-attainment demonstration for random functionals.
    James {
        /// Ambient dimension.
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Norm exponent (number or "inf").
        #[arg(long, default_value = "2")]
        p: String,
        /// Number of random functionals.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Extra targets below the leading tied pair, "0.5,0.25".
        #[arg(long)]
        tail: Option<String>,
    },
    /// Shared-level convergence study across nested run lengths.
    Cauchy {
        problem: PathBuf,
        /// Run lengths "3,6,9"; defaults to every length up to the chain's.
        #[arg(long)]
        ns: Option<String>,
    },
    /// Write a random-chain problem file (--out names the problem file).
    Gen {
        /// Ambient dimension.
        #[arg(long)]
        dim: usize,
        /// Link dimensions "1,2,3".
        #[arg(long)]
        dims: String,
        /// Norm exponent (number or "inf").
        #[arg(long, default_value = "2")]
        p: String,
        /// Targets "1,0.5,0.25"; defaults to halving from 1.
        #[arg(long)]
        targets: Option<String>,
    },
    /// Randomized audit of one construction lemma.
    Audit {
        /// kernel | two-point | two-point-free | q-sequence | finite
        lemma: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Ambient dimension of the sampled configurations.
        #[arg(long, default_value_t = 6)]
        dim: usize,
        /// Norm exponents to cycle, "1,1.5,2,3,inf".
        #[arg(long)]
        ps: Option<String>,
    },
}

/// Entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage and --help/--version both land here; clap picks the
            // stream and the code (2 for misuse, 0 for help).
            return e.exit_code_and_print();
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

trait ClapExit {
    fn exit_code_and_print(self) -> i32;
}

impl ClapExit for clap::Error {
    fn exit_code_and_print(self) -> i32 {
        use clap::error::ErrorKind;
        let code = match self.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 2,
        };
        let _ = self.print();
        code
    }
}

/// Input problems exit 2; solver breakdowns exit 3.
fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BracketFailure { .. }
        | Error::Linprog(_)
        | Error::SolverStall { .. }
        | Error::DegenerateConstraints(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<i32> {
    let report = dispatch(&cli.command, &cli.global)?;
    print!("{}", report.text());
    // `gen` claims --out for the problem file it emits.
    if !matches!(cli.command, Command::Gen { .. }) {
        if let Some(path) = &cli.global.out {
            std::fs::write(path, report.to_json()?)?;
        }
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn dispatch(command: &Command, global: &GlobalFlags) -> Result<Report> {
    match command {
        Command::Construct { problem } => construct_cmd(problem, global),
        Command::Verify { problem, x } => verify_cmd(problem, x, global),
        Command::Witness { problem, link } => witness_cmd(problem, *link, global),
        Command::Finite { problem } => finite_cmd(problem, global),
        Command::Qseq { problem, pairs } => qseq_cmd(problem, pairs.as_deref(), global),
        Command::James {
            dim,
            p,
            trials,
            tail,
        } => james_cmd(*dim, p, *trials, tail.as_deref(), global),
        Command::Cauchy { problem, ns } => cauchy_cmd(problem, ns.as_deref(), global),
        Command::Gen {
            dim,
            dims,
            p,
            targets,
        } => gen_cmd(*dim, dims, p, targets.as_deref(), global),
        Command::Audit {
            lemma,
            trials,
            dim,
            ps,
        } => audit_cmd(lemma, *trials, *dim, ps.as_deref(), global),
    }
}

/// Load a problem and apply the global overrides to it.
fn load(path: &PathBuf, global: &GlobalFlags) -> Result<(ProblemSpec, Space, Tolerances)> {
    let mut spec = read_problem(path)?;
    if let (Some(seed), ChainSpec::Random { seed: s, .. }) = (global.seed, &mut spec.chain) {
        *s = seed;
    }
    let space = spec.space()?;
    let mut tol = spec.tolerances()?;
    if let Some(v) = global.tol_solve {
        tol.solve = v;
    }
    if let Some(v) = global.tol_root {
        tol.root = v;
    }
    if let Some(v) = global.tol_verify {
        tol.verify = v;
    }
    tol.validated()?;
    Ok((spec, space, tol))
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn parse_exponent(s: &str) -> Result<Exponent> {
    if s == "inf" {
        return Ok(Exponent::Infinity);
    }
    match s.parse::<f64>() {
        Ok(p) if p.is_finite() && p >= 1.0 => Ok(Exponent::Finite(p)),
        _ => Err(Error::Parse("p must be ≥ 1 or inf".into())),
    }
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("{what}: `{t}` is not an index")))
        })
        .collect()
}

fn construct_cmd(path: &PathBuf, global: &GlobalFlags) -> Result<Report> {
    let (spec, space, tol) = load(path, global)?;
    let chain = spec.chain()?;
    let targets = TargetSequence::new(spec.targets.clone())?;
    let (x, transcript) = theorem_construct_with(&space, &chain, &targets, &tol)?;
    let mut report = Report::new("construct", spec.hash()?);
    report.pass = transcript.pass;
    report.x = Some(vec_of(&x));
    report.residuals = transcript
        .residuals
        .iter()
        .map(|r| ResidualRow {
            k: r.k,
            target: r.target,
            distance: r.achieved,
            residual: r.residual,
            pass: r.pass,
        })
        .collect();
    report.warnings = transcript.warnings.clone();
    if spec.options.transcript || global.transcript {
        report.transcript = Some(transcript_json(&transcript));
    }
    Ok(report)
}

fn verify_cmd(path: &PathBuf, x_path: &PathBuf, global: &GlobalFlags) -> Result<Report> {
    let (spec, space, tol) = load(path, global)?;
    let chain = spec.chain()?;
    let coords: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(x_path)?)
        .map_err(|e| Error::Parse(format!("element file: {e}")))?;
    let x = DVector::from_vec(coords);
    let verdict = verify_construction(&space, &chain, &x, &spec.targets, &tol)?;
    let mut report = Report::new("verify", spec.hash()?);
    report.pass = verdict.pass;
    report.x = Some(vec_of(&x));
    report.residuals = verdict
        .rows
        .iter()
        .map(|r| ResidualRow {
            k: r.k,
            target: r.target,
            distance: r.achieved,
            residual: r.residual,
            pass: r.pass,
        })
        .collect();
    report.warnings = verdict.warnings.clone();
    report.details = Some(json!({
        "max_residual": verdict.max_residual,
        "oracle": verdict
            .rows
            .iter()
            .filter_map(|r| {
                r.oracle.map(|v| json!({"k": r.k, "value": v, "gap": r.oracle_gap}))
            })
            .collect::<Vec<_>>(),
    }));
    Ok(report)
}

fn witness_cmd(path: &PathBuf, link: usize, global: &GlobalFlags) -> Result<Report> {
    let (spec, space, tol) = load(path, global)?;
    let chain = spec.chain()?;
    if link == 0 || link > chain.len() {
        return Err(Error::Precondition(format!(
            "link must be between 1 and {}",
            chain.len()
        )));
    }
    let lo = chain.link(link);
    let full = Subspace::full(space.dim());
    let hi = if link < chain.len() {
        chain.link(link + 1)
    } else {
        &full
    };
    let y = witness(&space, lo, hi)?;
    let norm = space.norm(&y);
    let rho = crate::distance::distance_with(&space, lo, &y, &tol)?.value;
    let residual = (rho - norm).abs();
    let mut report = Report::new("witness", spec.hash()?);
    report.pass = residual <= tol.verify * (1.0 + norm);
    report.residuals = vec![ResidualRow {
        k: link,
        target: norm,
        distance: rho,
        residual,
        pass: report.pass,
    }];
    report.details = Some(json!({
        "link": link,
        "witness": vec_of(&y),
        "norm": norm,
        "distance": rho,
    }));
    Ok(report)
}

fn finite_cmd(path: &PathBuf, global: &GlobalFlags) -> Result<Report> {
    let (spec, space, tol) = load(path, global)?;
    let chain = spec.chain()?;
    // Direction to scale into the last link: its norm-attaining witness
    // against the whole space.
    let z = witness(&space, chain.link(chain.len()), &Subspace::full(space.dim()))?;
    let fc = finite_construct_with(&space, &chain, &spec.targets, &z, &tol)?;
    let verdict = verify_construction(&space, &chain, &fc.x, &spec.targets, &tol)?;
    let mut report = Report::new("finite", spec.hash()?);
    report.pass = verdict.pass;
    report.x = Some(vec_of(&fc.x));
    report.residuals = verdict
        .rows
        .iter()
        .map(|r| ResidualRow {
            k: r.k,
            target: r.target,
            distance: r.achieved,
            residual: r.residual,
            pass: r.pass,
        })
        .collect();
    report.warnings = verdict.warnings.clone();
    report.details = Some(json!({
        "lambda": fc.lambda,
        "norm_x": fc.norm_x,
        "direction": vec_of(&z),
    }));
    Ok(report)
}

fn qseq_cmd(path: &PathBuf, pairs: Option<&str>, global: &GlobalFlags) -> Result<Report> {
    let (spec, space, tol) = load(path, global)?;
    let chain = spec.chain()?;
    if chain.len() < 2 {
        return Err(Error::Precondition(
            "the q-sequence needs at least two links".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = match pairs {
        Some(s) => s
            .split(',')
            .map(|t| {
                let (u, v) = t
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("pairs: `{t}` is not u:v")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("pairs: `{x}` is not a number")))
                };
                Ok((parse(u)?, parse(v)?))
            })
            .collect::<Result<_>>()?,
        None => {
            if spec.targets.len() < 2 {
                return Err(Error::Precondition(
                    "default pairs need at least two targets".into(),
                ));
            }
            spec.targets.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };
    let (q1, q2) = (chain.link(1), chain.link(2));
    let full = Subspace::full(space.dim());
    let above = if chain.len() >= 3 {
        chain.link(3)
    } else {
        &full
    };
    let y2 = witness(&space, q2, above)?;
    let y1 = witness(&space, q1, q2)?;
    let (z, w) = crate::construct::build_zw_with(&space, q1, q2, &y2, &y1, &tol)?;
    let level = q_sequence_with(&space, q1, q2, &z, &w, &pairs, &tol)?;
    let scale = 1.0 + pairs.iter().map(|(u, _)| *u).fold(0.0, f64::max);
    let mut report = Report::new("qseq", spec.hash()?);
    report.residuals = level
        .entries
        .iter()
        .flat_map(|e| {
            [
                ResidualRow {
                    k: e.m,
                    target: e.u,
                    distance: e.rho_q1,
                    residual: (e.rho_q1 - e.u).abs(),
                    pass: (e.rho_q1 - e.u).abs() <= tol.verify * scale,
                },
                ResidualRow {
                    k: e.m,
                    target: e.v,
                    distance: e.rho_q2,
                    residual: (e.rho_q2 - e.v).abs(),
                    pass: (e.rho_q2 - e.v).abs() <= tol.verify * scale,
                },
            ]
        })
        .collect();
    report.pass = report.residuals.iter().all(|r| r.pass)
        && (level.rho_z_q1 - 2.0).abs() <= tol.verify * 3.0
        && (level.rho_z_q2 - 1.0).abs() <= tol.verify * 2.0
        && (level.z_minus_w_norm - 1.0).abs() <= tol.verify * 2.0;
    report.warnings = level.warnings.clone();
    report.details = Some(json!({
        "z": vec_of(&level.z),
        "w": vec_of(&level.w),
        "delta": level.delta,
        "delta_window": [level.delta_window.0, level.delta_window.1],
        "rho_z_q1": level.rho_z_q1,
        "rho_z_q2": level.rho_z_q2,
        "z_minus_w_norm": level.z_minus_w_norm,
        "rho_w_q1": level.rho_w_q1,
        "difference_constant": level.c,
        "feasible_at_norm": level.feasible_at_norm,
        "entries": level
            .entries
            .iter()
            .map(|e| {
                json!({
                    "m": e.m, "u": e.u, "v": e.v, "mu": e.mu,
                    "q": vec_of(&e.q),
                    "rho_q1": e.rho_q1, "rho_q2": e.rho_q2,
                })
            })
            .collect::<Vec<_>>(),
    }));
    Ok(report)
}

fn james_cmd(
    dim: usize,
    p: &str,
    trials: usize,
    tail: Option<&str>,
    global: &GlobalFlags,
) -> Result<Report> {
    let exponent = parse_exponent(p)?;
    let tail: Vec<f64> = match tail {
        Some(s) => parse_f64_list(s, "tail")?,
        None => Vec::new(),
    };
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let seed = global.seed.unwrap_or(0);
    let space = Space::unweighted(dim, exponent)?;
    let mut tol = Tolerances::default();
    if let Some(v) = global.tol_solve {
        tol.solve = v;
    }
    if let Some(v) = global.tol_root {
        tol.root = v;
    }
    if let Some(v) = global.tol_verify {
        tol.verify = v;
    }
    tol.validated()?;
    let params = format!("james dim={dim} p={exponent} trials={trials} tail={tail:?} seed={seed}");
    let mut report = Report::new("james", hash_text(&params));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for trial in 0..trials {
        let coeffs: DVector<f64> = loop {
            let v = DVector::from_fn(dim, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g
            });
            if v.amax() > 0.1 {
                break v;
            }
        };
        let f = Functional::new(&space, coeffs)?;
        let demo = james_demo_with(&space, &f, &tail, &tol)?;
        report.pass &= demo.pass;
        report.residuals.push(ResidualRow {
            k: trial + 1,
            target: 1.0,
            distance: demo.attainment,
            residual: (demo.attainment - 1.0).abs(),
            pass: demo.pass,
        });
        rows.push(json!({
            "trial": trial + 1,
            "norm_x": demo.norm_x,
            "attainment": demo.attainment,
            "rho_kernel": demo.rho_kernel,
            "pass": demo.pass,
        }));
        report.warnings.extend(demo.warnings.clone());
    }
    report.details = Some(json!({
        "dim": dim,
        "p": p,
        "seed": seed,
        "trials": rows,
    }));
    Ok(report)
}

fn cauchy_cmd(path: &PathBuf, ns: Option<&str>, global: &GlobalFlags) -> Result<Report> {
    let (spec, space, tol) = load(path, global)?;
    let chain = spec.chain()?;
    let ns: Vec<usize> = match ns {
        Some(s) => parse_usize_list(s, "ns")?,
        None => (2..=chain.len()).collect(),
    };
    let targets = TargetSequence::new(spec.targets.clone())?;
    let study = cauchy_study_with(&space, &chain, &targets, &ns, &tol)?;
    let mut report = Report::new("cauchy", spec.hash()?);
    report.pass = study.pass;
    report.warnings = study.warnings.clone();
    report.residuals = study
        .runs
        .iter()
        .map(|r| ResidualRow {
            k: r.n,
            target: 0.0,
            distance: r.max_residual,
            residual: r.max_residual,
            pass: r.pass,
        })
        .collect();
    report.details = Some(json!({
        "ns": study.ns,
        "gaps": study
            .gaps
            .iter()
            .map(|g| json!({"m": g.m, "n": g.n, "gap": g.gap}))
            .collect::<Vec<_>>(),
        "q_diffs": study
            .q_diffs
            .iter()
            .map(|q| {
                json!({
                    "j": q.j, "m": q.m, "n": q.n,
                    "diff": q.diff, "bound": q.bound, "pass": q.pass,
                })
            })
            .collect::<Vec<_>>(),
        "tails": study
            .tails
            .iter()
            .map(|t| {
                json!({
                    "m": t.m, "n": t.n,
                    "sum": t.sum, "bound": t.bound, "pass": t.pass,
                })
            })
            .collect::<Vec<_>>(),
    }));
    Ok(report)
}

fn gen_cmd(
    dim: usize,
    dims: &str,
    p: &str,
    targets: Option<&str>,
    global: &GlobalFlags,
) -> Result<Report> {
    let dims = parse_usize_list(dims, "dims")?;
    let exponent = parse_exponent(p)?;
    let targets: Vec<f64> = match targets {
        Some(s) => parse_f64_list(s, "targets")?,
        None => (0..dims.len()).map(|k| 0.5f64.powi(k as i32)).collect(),
    };
    let spec = ProblemSpec {
        space: SpaceSpec {
            dim,
            norm: NormSpec {
                p: PValue::from_exponent(exponent),
                weights: None,
            },
        },
        chain: ChainSpec::Random {
            dims,
            seed: global.seed.unwrap_or(0),
        },
        targets,
        tolerances: None,
        options: OptionsSpec::default(),
    };
    spec.validate()?;
    let text = emit_problem(&spec)?;
    // Guaranteed round trip before anything is written.
    if io::parse_problem(&text)? != spec {
        return Err(Error::Parse("emitted problem failed to round-trip".into()));
    }
    match &global.out {
        Some(path) => std::fs::write(path, &text)?,
        None => print!("{text}"),
    }
    let mut report = Report::new("gen", spec.hash()?);
    report.details = Some(json!({ "emitted": global.out.as_ref().map(|p| p.display().to_string()) }));
    Ok(report)
}

fn audit_cmd(
    lemma: &str,
    trials: usize,
    dim: usize,
    ps: Option<&str>,
    global: &GlobalFlags,
) -> Result<Report> {
    let lemma: LemmaId = lemma.parse()?;
    let ps = match ps {
        Some(s) => s
            .split(',')
            .map(|t| parse_exponent(t.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => AuditFamily::default().ps,
    };
    let family = AuditFamily { dim, ps };
    let seed = global.seed.unwrap_or(0);
    let mut tol = Tolerances::default();
    if let Some(v) = global.tol_solve {
        tol.solve = v;
    }
    if let Some(v) = global.tol_root {
        tol.root = v;
    }
    if let Some(v) = global.tol_verify {
        tol.verify = v;
    }
    tol.validated()?;
    let audit = lemma_audit_with(lemma, &family, trials, seed, &tol)?;
    let params = format!(
        "audit lemma={} dim={dim} trials={trials} seed={seed}",
        audit.lemma
    );
    let mut report = Report::new("audit", hash_text(&params));
    report.pass = audit.failures.is_empty();
    report.warnings = audit.notes.clone();
    report.details = Some(json!({
        "lemma": audit.lemma,
        "trials": audit.trials,
        "passes": audit.passes,
        "failures": audit
            .failures
            .iter()
            .map(|f| {
                json!({
                    "trial": f.trial,
                    "seed": f.seed,
                    "config": f.config,
                    "claimed": f.claimed,
                    "observed": f.observed,
                    "note": f.note,
                })
            })
            .collect::<Vec<_>>(),
    }));
    Ok(report)
}

/// Transcript serialization for reports.
fn transcript_json(t: &ConstructionTranscript) -> Value {
    json!({
        "branch": t.branch,
        "tau": t.tau,
        "lambdas": t.lambdas,
        "levels": t.levels.iter().map(|lvl| {
            let common = match &lvl.kind {
                LevelKind::Standard(l) => json!({
                    "kind": "standard",
                    "delta": l.delta,
                    "delta_window": [l.delta_window.0, l.delta_window.1],
                    "f": vec_of(l.f.coeffs()),
                    "f_z": l.f_z,
                    "feasible_at_norm": l.feasible_at_norm,
                    "rho_z_q1": l.rho_z_q1,
                    "rho_z_q2": l.rho_z_q2,
                    "z_minus_w_norm": l.z_minus_w_norm,
                    "rho_w_q1": l.rho_w_q1,
                }),
                LevelKind::TieFirst { .. } => json!({ "kind": "tie-first" }),
            };
            let mut obj = common;
            obj["j"] = json!(lvl.j);
            obj["alpha"] = json!(lvl.alpha);
            obj["z"] = json!(vec_of(lvl.z()));
            obj["entries"] = json!(lvl.entries().iter().map(|e| {
                json!({
                    "n": e.m, "u": e.u, "v": e.v, "mu": e.mu,
                    "rho_q1": e.rho_q1, "rho_q2": e.rho_q2,
                    "bracket_expanded": e.bracket_expanded,
                })
            }).collect::<Vec<_>>());
            obj
        }).collect::<Vec<_>>(),
        "links": t.links.iter().map(|l| {
            json!({
                "j": l.j,
                "delta_hat": l.delta_hat,
                "f": vec_of(l.f.coeffs()),
                "value_at_self": l.value_at_self,
                "value_at_next": l.value_at_next,
                "window": [l.window.0, l.window.1],
                "feasible_at_norm": l.feasible_at_norm,
            })
        }).collect::<Vec<_>>(),
        "sweep": t.sweep.iter().map(|s| {
            json!({
                "k": s.k,
                "bracket": [s.bracket.0, s.bracket.1],
                "rho_before": s.rho_before,
                "lambda": s.lambda,
                "widened": s.widened,
            })
        }).collect::<Vec<_>>(),
        "x": vec_of(&t.x),
        "residuals": t.residuals.iter().map(|r| {
            json!({
                "k": r.k, "target": r.target, "achieved": r.achieved,
                "residual": r.residual, "pass": r.pass,
            })
        }).collect::<Vec<_>>(),
        "pass": t.pass,
        "patch_lambda": t.patch_lambda,
        "inner": t.inner.as_ref().map(|inner| transcript_json(inner)),
    })
}
