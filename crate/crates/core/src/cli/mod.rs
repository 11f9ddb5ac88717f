//! Command-line front end.
//!
//! Exit codes: 0 everything verified, 1 usage or parse error, 2 budget
//! shortfall (partial artifacts written), 3 verification failure.

pub mod lemmas;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{self, Family};
use crate::mixed::{norm_upper_bound, xdiagonal_distance, MixedOperator};
use crate::multiplier::{operator_norm_exact, triple_norm, HaarMultiplier};
use crate::pipeline::{run_pipeline, FailureKind, PipelineBudget, PipelineOutcome, StageSummary, Verdict};
use crate::scalar::{self, Rational};
use crate::stepfun::{HaarSystemSpace, Space, SpaceDescriptor};

use lemmas::{Fault, LemmaConfig, LemmaRow};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// One JSON document per artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub data: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, data: T) -> Self {
        Envelope { schema_version: SCHEMA_VERSION, kind: kind.into(), data }
    }
}

fn parse_error(path: &Path, e: &serde_json::Error) -> Error {
    if e.line() == 0 {
        Error::Parse(format!("{}: {e}", path.display()))
    } else {
        Error::Parse(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    }
}

/// Reads `kind` from an envelope, or the bare document.
pub fn read_artifact<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let probe: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(path, &e))?;
    match probe.get("schema_version") {
        None => serde_json::from_str(&text).map_err(|e| parse_error(path, &e)),
        Some(v) => {
            if v.as_u64() != Some(SCHEMA_VERSION as u64) {
                return Err(Error::Parse(format!("{}: unsupported schema_version {v}", path.display())));
            }
            let env: Envelope<T> = serde_json::from_str(&text).map_err(|e| parse_error(path, &e))?;
            if env.kind != kind {
                return Err(Error::Parse(format!("{}: expected kind {kind:?}, found {:?}", path.display(), env.kind)));
            }
            Ok(env.data)
        }
    }
}

pub fn write_artifact<T: Serialize>(path: &Path, kind: &str, data: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Envelope::new(kind, data))?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    scalar::parse(s).map_err(|e| e.to_string())
}

fn space_arg(s: &str) -> std::result::Result<Space, String> {
    Space::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "dyadic-factor", version, about = "Exact factorization machinery for operators on L1 and L1(X)")]
pub struct Cli {
    /// Worker threads; defaults to the available cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triple norm, exact operator norm and their ratio for a multiplier file.
    TripleNorm(TripleNormArgs),
    /// Reduce an operator on L1(X) to a scalar multiple of the identity.
    Pipeline(PipelineArgs),
    /// Randomized checks of the exact inequalities.
    CheckLemmas(CheckLemmasArgs),
    /// Emit a seeded operator on L1(X).
    RandomOperator(RandomOperatorArgs),
}

#[derive(Debug, Args)]
pub struct TripleNormArgs {
    pub file: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Shape of a generated operator.
#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, default_value_t = 4)]
    pub depth_outer: usize,
    #[arg(long, default_value_t = 2)]
    pub depth_inner: usize,
    /// `L1`, `L2`, `Lp:1.5` or a JSON descriptor.
    #[arg(long, default_value = "L1", value_parser = space_arg)]
    pub space: Space,
    /// Off-diagonal mass of the planted family.
    #[arg(long, default_value = "3/10", value_parser = rational_arg)]
    pub mass: Rational,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Operator file; otherwise one is generated from `--family`.
    #[arg(conflicts_with = "family")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "input")]
    pub family: Option<Family>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 1)]
    pub out_depth_outer: usize,
    #[arg(long, default_value_t = 1)]
    pub out_depth_inner: usize,
    #[arg(long, default_value = "1/2", value_parser = rational_arg)]
    pub epsilon: Rational,
    #[arg(long)]
    pub seed: u64,
    /// Directions for sampled norm estimates.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Treat a collapse schedule violation as a budget failure.
    #[arg(long)]
    pub strict_collapse: bool,
    /// Directory for the per-stage certificates and the run report.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckLemmasArgs {
    #[arg(long, default_value_t = 2)]
    pub min_depth: usize,
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Run with a deliberate defect to see a suite fail.
    #[arg(long, value_enum)]
    pub inject_fault: Option<Fault>,
    /// Write the table as JSON here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RandomOperatorArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripleNormReport {
    pub depth: usize,
    #[serde(with = "scalar::serde_rational")]
    pub triple: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub opnorm: Rational,
    /// `None` for the zero multiplier.
    #[serde(with = "scalar::serde_rational_opt")]
    pub ratio: Option<Rational>,
}

pub fn triple_norm_report(d: &HaarMultiplier) -> TripleNormReport {
    let triple = triple_norm(d);
    let opnorm = operator_norm_exact(d);
    let ratio = if num_traits::Zero::is_zero(&opnorm) { None } else { Some(&triple / &opnorm) };
    TripleNormReport { depth: d.depth, triple, opnorm, ratio }
}

fn cmd_triple_norm(args: &TripleNormArgs) -> Result<i32> {
    let d: HaarMultiplier = read_artifact(&args.file, "multiplier")?;
    let r = triple_norm_report(&d);
    let ratio = r.ratio.as_ref().map_or_else(|| "undefined".into(), scalar::format);
    println!("triple={} opnorm={} ratio={}", scalar::format(&r.triple), scalar::format(&r.opnorm), ratio);
    if let Some(out) = &args.output {
        write_artifact(out, "triple-norm-report", &r)?;
    }
    Ok(EXIT_OK)
}

/// The run in brief, with the stage table and the verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub host_depths: (usize, usize),
    pub out_depths: (usize, usize),
    pub space: SpaceDescriptor,
    #[serde(with = "scalar::serde_rational")]
    pub epsilon: Rational,
    pub seed: u64,
    #[serde(with = "scalar::serde_rational_opt")]
    pub lambda: Option<Rational>,
    #[serde(with = "scalar::serde_rational_opt")]
    pub constant: Option<Rational>,
    #[serde(with = "scalar::serde_rational_opt")]
    pub total_error: Option<Rational>,
    pub verified: bool,
    pub shortfall: bool,
    pub stages: Vec<StageSummary>,
    pub verdict: Option<Verdict>,
    pub failure: Option<crate::pipeline::StageFailure>,
    pub exit_code: i32,
}

/// Exit code for a finished run.
pub fn pipeline_exit_code(o: &PipelineOutcome) -> i32 {
    match o.failure.as_ref().map(|f| f.kind) {
        Some(FailureKind::Budget) => EXIT_BUDGET,
        Some(FailureKind::Verification) => EXIT_VERIFICATION,
        Some(FailureKind::Other) => EXIT_USAGE,
        None if o.verified() => EXIT_OK,
        None => EXIT_VERIFICATION,
    }
}

/// A certificate next to the transcript of its own verification.
#[derive(Serialize)]
struct CertificateFile<'a, C: Serialize, V: Serialize> {
    certificate: &'a C,
    verification: Option<&'a V>,
}

fn write_stage_files(dir: &Path, o: &PipelineOutcome) -> Result<()> {
    let summary = |stage: &str| o.stages.iter().find(|s| s.stage == stage);
    let mut k = 0;
    let mut put = |name: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        k += 1;
        write(&dir.join(format!("{k:02}-{name}.json")))
    };
    macro_rules! cert {
        ($name:literal, $kind:literal, $c:expr) => {
            put($name, &|p| write_artifact(p, $kind, &CertificateFile { certificate: &$c, verification: summary(&$c.stage) }))?
        };
    }
    if let Some(s) = &o.diagonalize {
        cert!("diagonalize", "mixed-certificate", s.certificate);
    }
    if let Some(s) = &o.reduce {
        cert!("reduce", "mixed-certificate", s.certificate);
    }
    if let Some(s) = &o.stabilize {
        cert!("stabilize", "mixed-certificate", s.certificate);
        put("stable-report", &|p| write_artifact(p, "stable-report", &s.report))?;
    }
    if let Some(s) = &o.collapse {
        cert!("collapse", "mixed-certificate", s.certificate);
    }
    if let Some(s) = &o.icebreaker {
        cert!("icebreaker", "l1-certificate", s.certificate);
    }
    if let Some(c) = &o.certificate {
        write_artifact(&dir.join("certificate.json"), "mixed-certificate", &CertificateFile { certificate: c, verification: o.verification.as_ref() })?;
    }
    Ok(())
}

fn print_pipeline_summary(r: &PipelineReport) {
    let opt = |x: &Option<Rational>| x.as_ref().map_or_else(|| "-".into(), scalar::format);
    println!("host {:?} -> out {:?}, epsilon {}, seed {}", r.host_depths, r.out_depths, scalar::format(&r.epsilon), r.seed);
    for s in &r.stages {
        let flag = if !s.verified {
            "FAILED"
        } else if s.shortfall {
            "verified, shortfall"
        } else {
            "verified"
        };
        let err = scalar::to_f64(&s.error);
        println!("  {:<12} {:?}  C={}  error={:.6e}  target={}  {}", s.stage, s.depths, scalar::format(&s.constant), err, scalar::format(&s.target), flag);
    }
    if let Some(f) = &r.failure {
        println!("failed at stage {} ({:?}): {}", f.stage, f.kind, f.message);
    }
    let err_f = r.total_error.as_ref().map(|e| format!(" ({:.6e})", scalar::to_f64(e))).unwrap_or_default();
    println!("lambda={} C={} epsilon_total={}{}", opt(&r.lambda), opt(&r.constant), opt(&r.total_error), err_f);
    match &r.verdict {
        Some(v) => println!(
            "verdict: {:?} route, factor constant {} (~{:.6}), Neumann bound {}, residual {:.3e}, {}",
            v.route,
            scalar::format(&v.factor_constant),
            scalar::to_f64(&v.factor_constant),
            scalar::format(&v.neumann_bound),
            scalar::to_f64(&v.residual),
            if v.verified { "verified" } else { "not verified" }
        ),
        None if r.failure.is_none() => println!("verdict: none (total error at least 1/2)"),
        None => {}
    }
    println!("status: {}", if r.verified { "all certificates verified" } else { "not verified" });
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<i32> {
    let t: MixedOperator = match (&args.input, args.family) {
        (Some(p), _) => read_artifact(p, "mixed-operator")?,
        (None, Some(f)) => {
            let g = &args.generator;
            families::generate(f, g.depth_outer, g.depth_inner, g.space.clone(), &g.mass, args.seed)?
        }
        (None, None) => return Err(Error::InvalidArgument("give an input file or --family".into())),
    };
    let mut budget = PipelineBudget::new(args.out_depth_outer, args.out_depth_inner);
    budget.samples = args.samples;
    budget.strict_collapse = args.strict_collapse;
    let o = run_pipeline(&t, &args.epsilon, &budget, args.seed)?;
    let code = pipeline_exit_code(&o);
    let report = PipelineReport {
        host_depths: (t.outer_depth, t.inner_depth),
        out_depths: (args.out_depth_outer, args.out_depth_inner),
        space: t.space.descriptor(),
        epsilon: args.epsilon.clone(),
        seed: args.seed,
        lambda: o.lambda.clone(),
        constant: o.certificate.as_ref().map(|c| c.constant.clone()),
        total_error: o.total_error().cloned(),
        verified: o.verified(),
        shortfall: o.shortfall,
        stages: o.stages.clone(),
        verdict: o.verdict.clone(),
        failure: o.failure.clone(),
        exit_code: code,
    };
    print_pipeline_summary(&report);
    if let Some(dir) = &args.output {
        fs::create_dir_all(dir)?;
        write_stage_files(dir, &o)?;
        write_artifact(&dir.join("pipeline.json"), "pipeline-report", &report)?;
    }
    Ok(code)
}

fn cmd_check_lemmas(args: &CheckLemmasArgs) -> Result<i32> {
    if args.min_depth > args.max_depth {
        return Err(Error::InvalidArgument("--min-depth exceeds --max-depth".into()));
    }
    let cfg = LemmaConfig { min_depth: args.min_depth, max_depth: args.max_depth, trials: args.trials, seed: args.seed, fault: args.inject_fault };
    let rows = lemmas::run_all(&cfg)?;
    println!("{:<20} {:>7} {:>8} {:>13}  result", "suite", "trials", "failures", "worst margin");
    for r in &rows {
        println!("{:<20} {:>7} {:>8} {:>13.6}  {}", r.suite, r.trials, r.failures, r.worst_margin, if r.passed() { "PASS" } else { "FAIL" });
    }
    for r in rows.iter().filter(|r| !r.passed()) {
        if let Some(c) = &r.counterexample {
            println!("counterexample for {}: {}", r.suite, serde_json::to_string(c)?);
        }
    }
    if let Some(out) = &args.output {
        write_artifact(out, "lemma-table", &rows)?;
    }
    Ok(if rows.iter().all(LemmaRow::passed) { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_random_operator(args: &RandomOperatorArgs) -> Result<i32> {
    let g = &args.generator;
    let t = families::generate(args.family, g.depth_outer, g.depth_inner, g.space.clone(), &g.mass, args.seed)?;
    let xdiag = xdiagonal_distance(&t);
    println!(
        "family={:?} depths=({}, {}) space={} seed={} norm_bound={} xdiagonal_distance={}",
        args.family,
        t.outer_depth,
        t.inner_depth,
        serde_json::to_string(&t.space.descriptor())?,
        args.seed,
        scalar::format(&norm_upper_bound(&t)),
        scalar::format(&xdiag)
    );
    if let Some(out) = &args.output {
        write_artifact(out, "mixed-operator", &t)?;
        let back: MixedOperator = read_artifact(out, "mixed-operator")?;
        if back != t {
            return Err(Error::VerificationFailed(format!("{} does not round-trip", out.display())));
        }
        if args.family == Family::Planted {
            let d = xdiagonal_distance(&back);
            if d > g.mass {
                return Err(Error::VerificationFailed(format!("off-diagonal mass {} exceeds {}", scalar::format(&d), scalar::format(&g.mass))));
            }
            println!("verified on load: xdiagonal_distance {} <= {}", scalar::format(&d), scalar::format(&g.mass));
        }
    }
    Ok(EXIT_OK)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::HostDepthExhausted(_) | Error::BudgetShortfall(_) | Error::NotFound { .. } | Error::TooLarge(_) => EXIT_BUDGET,
        Error::VerificationFailed(_) => EXIT_VERIFICATION,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    let result = match &cli.command {
        Command::TripleNorm(a) => cmd_triple_norm(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::CheckLemmas(a) => cmd_check_lemmas(a),
        Command::RandomOperator(a) => cmd_random_operator(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
