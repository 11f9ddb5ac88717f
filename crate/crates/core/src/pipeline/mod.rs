//! Reduction of an operator on `L₁(X)` to a scalar multiple of the identity
//! through a chain of verified projectional factorizations.

mod steps;
mod verdict;

pub use steps::{
    delta_schedule, deviation_table, identity_certificate, level_average, pair_schedule, step1_diagonalize, step2_reduce, step3_stabilize, step4_collapse,
    Deviation, EntryPairings, NodeStabilization, StableDiagonalReport, Step1Outcome, Step2Outcome, Step3Outcome, Step4Outcome, StoppingDiagnostic,
};
pub use verdict::{primariness_verdict, Route, Verdict, DEFAULT_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::certificate::{compose_verified, CertDomain, CertKind, FactorCertificate, Verification};
use crate::error::{Error, Result};
use crate::mixed::{MixedDomain, MixedOperator, TensorMap};
use crate::op1::{icebreaker, BuilderConfig, IcebreakerBudget, IcebreakerOutcome};
use crate::scalar::{self, Rational};

/// Intermediate depths of the chain `(n, m) → (n₁, m₁) → (n₂, m₁) → (n₂, m_out) → (n_out, m_out)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDepths {
    pub diagonalize: (usize, usize),
    pub reduce_outer: usize,
    pub stabilize_inner: usize,
}

impl StageDepths {
    /// One level per stage where the host allows it.
    pub fn plan(host: (usize, usize), out: (usize, usize)) -> Self {
        let n1 = host.0.saturating_sub(1).max(out.0);
        let m1 = host.1.saturating_sub(1).max(out.1);
        StageDepths { diagonalize: (n1, m1), reduce_outer: n1.saturating_sub(1).max(out.0), stabilize_inner: out.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineBudget {
    pub out_outer: usize,
    pub out_inner: usize,
    /// Defaults to [`StageDepths::plan`].
    pub depths: Option<StageDepths>,
    pub builder: BuilderConfig,
    /// Random sign draws per node when the exhaustive search is too large.
    pub sign_tries: usize,
    /// Directions for sampled norm estimates.
    pub samples: usize,
    /// Treat a collapse schedule violation as a failure.
    pub strict_collapse: bool,
}

impl PipelineBudget {
    pub fn new(out_outer: usize, out_inner: usize) -> Self {
        PipelineBudget { out_outer, out_inner, depths: None, builder: BuilderConfig::default(), sign_tries: 64, samples: 16, strict_collapse: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: String,
    pub depths: (usize, usize),
    #[serde(with = "scalar::serde_rational")]
    pub constant: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub error: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub target: Rational,
    pub verified: bool,
    pub shortfall: bool,
    pub transcript: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Budget,
    Verification,
    Other,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PipelineOutcome {
    #[serde(with = "scalar::serde_rational_opt")]
    pub lambda: Option<Rational>,
    pub certificate: Option<FactorCertificate<MixedDomain>>,
    /// Direct recomputation of the composed certificate.
    pub verification: Option<Verification>,
    pub stages: Vec<StageSummary>,
    pub diagonalize: Option<Step1Outcome>,
    pub reduce: Option<Step2Outcome>,
    pub stabilize: Option<Step3Outcome>,
    pub collapse: Option<Step4Outcome>,
    pub icebreaker: Option<IcebreakerOutcome>,
    pub verdict: Option<Verdict>,
    pub failure: Option<StageFailure>,
    /// Some stage missed its target; the certificates still carry measured values.
    pub shortfall: bool,
}

impl PipelineOutcome {
    pub fn total_error(&self) -> Option<&Rational> {
        self.certificate.as_ref().map(|c| &c.error)
    }

    pub fn verified(&self) -> bool {
        self.failure.is_none() && self.verification.as_ref().is_some_and(|v| v.valid) && self.stages.iter().all(|s| s.verified)
    }
}

fn failure(stage: &str, e: &Error) -> StageFailure {
    let kind = match e {
        Error::HostDepthExhausted(_) | Error::BudgetShortfall(_) | Error::NotFound { .. } | Error::TooLarge(_) => FailureKind::Budget,
        Error::VerificationFailed(_) => FailureKind::Verification,
        _ => FailureKind::Other,
    };
    StageFailure { stage: stage.into(), kind, message: e.to_string() }
}

struct Chain<'a> {
    outcome: &'a mut PipelineOutcome,
    links: Vec<FactorCertificate<MixedDomain>>,
}

impl Chain<'_> {
    /// Verifies a stage certificate and records its summary.
    fn push(&mut self, cert: FactorCertificate<MixedDomain>, target: Rational, shortfall: bool) -> Result<()> {
        let v = cert.verify(&MixedDomain)?;
        self.outcome.shortfall |= shortfall;
        self.outcome.stages.push(StageSummary {
            stage: cert.stage.clone(),
            depths: (cert.target.outer_depth, cert.target.inner_depth),
            constant: cert.constant.clone(),
            error: cert.error.clone(),
            target,
            verified: v.valid,
            shortfall,
            transcript: v.transcript.clone(),
        });
        if !v.valid {
            return Err(Error::VerificationFailed(format!("{}: {}", cert.stage, v.transcript.join("; "))));
        }
        self.links.push(cert);
        Ok(())
    }
}

/// Runs diagonalize → reduce → stabilize → collapse → icebreaker ⊗ Id and
/// composes the certificates. A failing stage ends the run with the chain so
/// far and the stage named; only `Err` for malformed input.
pub fn run_pipeline(t: &MixedOperator, eps: &Rational, budget: &PipelineBudget, seed: u64) -> Result<PipelineOutcome> {
    if *eps <= Rational::from_integer(0.into()) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let host = (t.outer_depth, t.inner_depth);
    let out = (budget.out_outer, budget.out_inner);
    if out.0 > host.0 || out.1 > host.1 {
        return Err(Error::InvalidArgument(format!("output depths {out:?} exceed host depths {host:?}")));
    }
    let depths = budget.depths.unwrap_or_else(|| StageDepths::plan(host, out));
    let cfg = BuilderConfig { seed, ..budget.builder.clone() };
    let mut outcome = PipelineOutcome::default();
    let mut chain = Chain { outcome: &mut outcome, links: Vec::new() };
    if let Err((stage, e)) = run_stages(&mut chain, t, eps, budget, &depths, &cfg, seed) {
        let f = failure(stage, &e);
        chain.outcome.failure = Some(f);
        return Ok(outcome);
    }
    let links = std::mem::take(&mut chain.links);
    let dom = MixedDomain;
    let mut acc = links[0].clone();
    for c in &links[1..] {
        acc = compose_verified(&dom, &acc, c)?;
    }
    acc.stage = "pipeline".into();
    let v = acc.verify(&dom)?;
    if !v.valid {
        outcome.failure = Some(StageFailure { stage: "pipeline".into(), kind: FailureKind::Verification, message: v.transcript.join("; ") });
    }
    let lambda = outcome.icebreaker.as_ref().map(|i| i.lambda.clone());
    if let Some(l) = &lambda {
        if acc.error < scalar::ratio(1, 2) {
            outcome.verdict = primariness_verdict(&dom, &acc, l, DEFAULT_TOLERANCE).ok();
        }
    }
    outcome.lambda = lambda;
    outcome.verification = Some(v);
    outcome.certificate = Some(acc);
    Ok(outcome)
}

type StageResult = std::result::Result<(), (&'static str, Error)>;

fn run_stages(
    chain: &mut Chain<'_>,
    t: &MixedOperator,
    eps: &Rational,
    budget: &PipelineBudget,
    depths: &StageDepths,
    cfg: &BuilderConfig,
    seed: u64,
) -> StageResult {
    let at = |stage: &'static str| move |e: Error| (stage, e);

    let s1 = step1_diagonalize(t, eps, depths.diagonalize, cfg).map_err(at("diagonalize"))?;
    chain.push(s1.certificate.clone(), eps.clone(), s1.shortfall).map_err(at("diagonalize"))?;
    let x1 = s1.operator.clone();
    chain.outcome.diagonalize = Some(s1);

    let s2 = step2_reduce(&x1, eps, depths.reduce_outer, cfg).map_err(at("reduce"))?;
    chain.push(s2.certificate.clone(), Rational::from_integer(0.into()), s2.shortfall).map_err(at("reduce"))?;
    let x2 = s2.operator.clone();
    chain.outcome.reduce = Some(s2);

    let s3 = step3_stabilize(&x2, eps, depths.stabilize_inner, budget.sign_tries, seed).map_err(at("stabilize"))?;
    chain.push(s3.certificate.clone(), Rational::from_integer(0.into()), s3.shortfall).map_err(at("stabilize"))?;
    let x3 = s3.operator.clone();
    chain.outcome.stabilize = Some(s3);

    let s4 = step4_collapse(&x3, eps, budget.strict_collapse, budget.samples, seed).map_err(at("collapse"))?;
    chain.push(s4.certificate.clone(), eps * scalar::int(7), s4.shortfall || !s4.schedule_met).map_err(at("collapse"))?;
    let t0 = s4.t0.clone();
    let tensor = s4.certificate.target.clone();
    chain.outcome.collapse = Some(s4);

    let ib_budget = IcebreakerBudget { out_depth: budget.out_outer, stage_depth: None, builder: cfg.clone() };
    let ib = icebreaker(&t0, eps, &ib_budget).map_err(at("icebreaker"))?;
    let cert = tensor_back(&ib.certificate, &tensor, budget.out_inner).map_err(at("icebreaker"))?;
    chain.push(cert, eps.clone(), ib.shortfall).map_err(at("icebreaker"))?;
    chain.outcome.icebreaker = Some(ib);
    Ok(())
}

/// `S → λ Id` on `L₁` gives `S ⊗ Id → λ Id` on `L₁(X)` through `A ⊗ Id`, `B ⊗ Id`.
fn tensor_back(cert: &FactorCertificate<crate::certificate::L1Domain>, source: &MixedOperator, inner: usize) -> Result<FactorCertificate<MixedDomain>> {
    let a = TensorMap::outer_only(cert.a.clone(), inner);
    let b = TensorMap::outer_only(cert.b.clone(), inner);
    let target = MixedOperator::diagonal_tensor(&cert.target, inner, source.space.clone())?;
    let dom = MixedDomain;
    let image = dom.conjugate(&b, source, &a)?;
    let kind = if cert.kind == CertKind::ProjectionalFactor { CertKind::ProjectionalFactor } else { CertKind::Factor };
    FactorCertificate::measured_with_image(&dom, "icebreaker", kind, a, b, source.clone(), target, &image)
}
