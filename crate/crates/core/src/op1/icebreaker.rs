//! Reduction of an `L₁` operator to a scalar multiple of the identity.

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::{build_faithful_system, canonical_system, conjugate, embedding, left_inverse, BuilderConfig, L1Operator, Pairing};
use crate::certificate::{compose, CertKind, FactorCertificate, L1Domain};
use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::multiplier::{scalar_reduction_best, ScalarReduction};
use crate::scalar::{self, pow2, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcebreakerBudget {
    /// Output depth of the final scalar operator.
    pub out_depth: usize,
    /// Depth of the intermediate near-diagonal operator; defaults to
    /// `out_depth + 1`, capped by the input depth.
    pub stage_depth: Option<usize>,
    pub builder: BuilderConfig,
}

impl IcebreakerBudget {
    pub fn new(out_depth: usize) -> Self {
        IcebreakerBudget { out_depth, stage_depth: None, builder: BuilderConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IcebreakerOutcome {
    #[serde(with = "scalar::serde_rational")]
    pub lambda: Rational,
    /// `T → λ Id` with `C = 1`.
    pub certificate: FactorCertificate<L1Domain>,
    /// `T → S` (faithful system) and `D_S → λ Id` (dilation inside `I₀`).
    pub stages: Vec<FactorCertificate<L1Domain>>,
    pub reduction: ScalarReduction,
    /// `‖S − D_S‖`, measured.
    #[serde(with = "scalar::serde_rational")]
    pub diagonal_error: Rational,
    pub pairings: Vec<Pairing>,
    #[serde(with = "scalar::serde_rational")]
    pub target: Rational,
    /// The measured error exceeds the target.
    pub shortfall: bool,
}

/// `T → Q_A T A_A = S ≈ D_S` via a greedy faithful system, then
/// `D_S → λ Id` via the dilation of the Haar system into the best `I₀`.
pub fn icebreaker(t: &L1Operator, eps: &Rational, budget: &IcebreakerBudget) -> Result<IcebreakerOutcome> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    if !t.is_square() {
        return Err(Error::InvalidArgument("icebreaker needs a square operator".into()));
    }
    let n = t.depth();
    let d = budget.out_depth;
    if d > n {
        return Err(Error::HostDepthExhausted(format!("output depth {d} exceeds input depth {n}")));
    }
    let da = budget.stage_depth.unwrap_or((d + 1).min(n));
    if da < d || da > n {
        return Err(Error::InvalidArgument(format!("stage depth {da} outside {d}..={n}")));
    }
    let dom = L1Domain;
    let half = eps / Rational::from_integer(2.into());
    let schedule = |i: DyadicInterval, j: DyadicInterval| &half * pow2(-((i.code() + j.code()) as i64));
    let (sys, pairings) =
        build_faithful_system(t, da, &schedule, &budget.builder).map_err(|e| Error::HostDepthExhausted(format!("icebreaker faithful system: {e}")))?;
    let a = embedding(&sys)?;
    let q = left_inverse(&sys)?;
    let s = conjugate(t, &sys)?;
    let diag = s.diagonal();
    let ds = L1Operator::from_multiplier(&diag);
    let first = FactorCertificate::measured(&dom, "icebreaker/faithful", CertKind::ProjectionalFactor, a, q, t.clone(), ds.clone())?;
    let diagonal_error = first.error.clone();

    let reduction = scalar_reduction_best(&diag, d)?;
    let lambda = reduction.scalar.clone();
    let dil = canonical_system(da, d, reduction.interval)?;
    let second = FactorCertificate::measured(
        &dom,
        "icebreaker/scalar",
        CertKind::ProjectionalFactor,
        embedding(&dil)?,
        left_inverse(&dil)?,
        ds,
        L1Operator::scalar(d, lambda.clone()),
    )?;
    let certificate = compose(&dom, &first, &second)?;
    let shortfall = &certificate.error > eps;
    let mut certificate = certificate;
    certificate.stage = "icebreaker".into();
    Ok(IcebreakerOutcome { lambda, certificate, stages: vec![first, second], reduction, diagonal_error, pairings, target: eps.clone(), shortfall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::multiplier::{triple_norm, HaarMultiplier};
    use crate::scalar::{int, ratio};

    #[test]
    fn scalar_input() {
        let t = L1Operator::scalar(4, ratio(-2, 3));
        let out = icebreaker(&t, &ratio(1, 4), &IcebreakerBudget::new(2)).unwrap();
        assert_eq!(out.lambda, ratio(-2, 3));
        assert!(out.certificate.error.is_zero());
        assert!(out.certificate.verify(&L1Domain).unwrap().valid);
        assert!(!out.shortfall);
    }

    #[test]
    fn constant_tail_multiplier() {
        let d = HaarMultiplier::from_fn(5, |i| match i.level() {
            None => int(3),
            Some(0) => ratio(1, 2),
            _ => ratio(-1, 4),
        });
        let out = icebreaker(&L1Operator::from_multiplier(&d), &ratio(1, 8), &IcebreakerBudget::new(2)).unwrap();
        assert_eq!(out.lambda, ratio(-1, 4));
        assert!(out.diagonal_error.is_zero());
        assert_eq!(out.certificate.error, out.reduction.achieved);
        assert!(out.certificate.verify(&L1Domain).unwrap().valid);
        assert!(triple_norm(&d) >= out.reduction.achieved);
    }
}
