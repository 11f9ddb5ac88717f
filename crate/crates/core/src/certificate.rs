//! Factorization certificates: `‖BTA − S‖ ≤ ε` with `‖A‖‖B‖ ≤ C`, checked
//! by recomputing every norm.

use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::op1::L1Operator;
use crate::scalar::{self, Rational};

/// Operators and transfer maps of one kind of space, with sound norm bounds.
pub trait CertDomain: Clone + std::fmt::Debug {
    type Op: Clone + PartialEq + std::fmt::Debug + Serialize + DeserializeOwned;
    type Map: Clone + std::fmt::Debug + Serialize + DeserializeOwned;

    /// `B T A`.
    fn conjugate(&self, b: &Self::Map, t: &Self::Op, a: &Self::Map) -> Result<Self::Op>;
    /// `outer ∘ inner`.
    fn compose(&self, outer: &Self::Map, inner: &Self::Map) -> Result<Self::Map>;
    /// Whether `B A` is the identity, exactly.
    fn is_left_inverse(&self, b: &Self::Map, a: &Self::Map) -> Result<bool>;
    /// An upper bound on `‖x − y‖`.
    fn distance(&self, x: &Self::Op, y: &Self::Op) -> Result<Rational>;
    /// An upper bound on `‖m‖`.
    fn map_norm(&self, m: &Self::Map) -> Result<Rational>;

    /// The identity on the space `x` acts on.
    fn identity_op(&self, like: &Self::Op) -> Result<Self::Op>;
    /// `x ∘ y`.
    fn compose_ops(&self, x: &Self::Op, y: &Self::Op) -> Result<Self::Op>;
    /// `a·x + b·y`.
    fn combine(&self, a: &Rational, x: &Self::Op, b: &Rational, y: &Self::Op) -> Result<Self::Op>;
    /// An upper bound on `‖x‖`.
    fn op_norm(&self, x: &Self::Op) -> Result<Rational>;
}

/// Truncated `L₁` with exact norms.
#[derive(Clone, Copy, Debug, Default)]
pub struct L1Domain;

impl CertDomain for L1Domain {
    type Op = L1Operator;
    type Map = L1Operator;

    fn conjugate(&self, b: &L1Operator, t: &L1Operator, a: &L1Operator) -> Result<L1Operator> {
        b.compose(&t.compose(a)?)
    }
    fn compose(&self, outer: &L1Operator, inner: &L1Operator) -> Result<L1Operator> {
        outer.compose(inner)
    }
    fn is_left_inverse(&self, b: &L1Operator, a: &L1Operator) -> Result<bool> {
        Ok(b.compose(a)?.is_identity())
    }
    fn distance(&self, x: &L1Operator, y: &L1Operator) -> Result<Rational> {
        Ok(x.sub(y)?.norm_exact())
    }
    fn map_norm(&self, m: &L1Operator) -> Result<Rational> {
        Ok(m.norm_exact())
    }
    fn identity_op(&self, like: &L1Operator) -> Result<L1Operator> {
        Ok(L1Operator::identity(like.depth()))
    }
    fn compose_ops(&self, x: &L1Operator, y: &L1Operator) -> Result<L1Operator> {
        x.compose(y)
    }
    fn combine(&self, a: &Rational, x: &L1Operator, b: &Rational, y: &L1Operator) -> Result<L1Operator> {
        x.scale(a).add(&y.scale(b))
    }
    fn op_norm(&self, x: &L1Operator) -> Result<Rational> {
        Ok(x.norm_exact())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertKind {
    Factor,
    /// `B A = Id`, so `A B` is a projection onto a copy of the target space.
    ProjectionalFactor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FactorCertificate<D: CertDomain> {
    pub stage: String,
    pub kind: CertKind,
    #[serde(with = "scalar::serde_rational")]
    pub constant: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub error: Rational,
    pub a: D::Map,
    /// `B`; for the projectional kind this is `A⁻¹P`.
    pub b: D::Map,
    pub source: D::Op,
    pub target: D::Op,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub valid: bool,
    #[serde(with = "scalar::serde_rational")]
    pub measured_error: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub measured_constant: Rational,
    pub transcript: Vec<String>,
}

impl<D: CertDomain> FactorCertificate<D> {
    /// The certificate `T → T` with `A = B = Id`.
    pub fn identity(stage: &str, t: D::Op, id: D::Map) -> Self {
        FactorCertificate {
            stage: stage.into(),
            kind: CertKind::ProjectionalFactor,
            constant: Rational::one(),
            error: Rational::zero(),
            a: id.clone(),
            b: id,
            source: t.clone(),
            target: t,
        }
    }

    /// A certificate claiming exactly the measured error and constant.
    pub fn measured(dom: &D, stage: &str, kind: CertKind, a: D::Map, b: D::Map, source: D::Op, target: D::Op) -> Result<Self> {
        let image = dom.conjugate(&b, &source, &a)?;
        let error = dom.distance(&image, &target)?;
        let constant = scalar::max(Rational::one(), dom.map_norm(&a)? * dom.map_norm(&b)?);
        Ok(FactorCertificate { stage: stage.into(), kind, constant, error, a, b, source, target })
    }

    /// [`FactorCertificate::measured`] for a caller that already holds `B T A`.
    #[allow(clippy::too_many_arguments)]
    pub fn measured_with_image(dom: &D, stage: &str, kind: CertKind, a: D::Map, b: D::Map, source: D::Op, target: D::Op, image: &D::Op) -> Result<Self> {
        let error = dom.distance(image, &target)?;
        let constant = scalar::max(Rational::one(), dom.map_norm(&a)? * dom.map_norm(&b)?);
        Ok(FactorCertificate { stage: stage.into(), kind, constant, error, a, b, source, target })
    }

    pub fn verify(&self, dom: &D) -> Result<Verification> {
        let mut transcript = Vec::new();
        let mut valid = true;
        if self.kind == CertKind::ProjectionalFactor {
            let ok = dom.is_left_inverse(&self.b, &self.a)?;
            transcript.push(format!("B A = Id: {}", if ok { "holds" } else { "FAILS" }));
            valid &= ok;
        }
        let na = dom.map_norm(&self.a)?;
        let nb = dom.map_norm(&self.b)?;
        let measured_constant = &na * &nb;
        let ok = measured_constant <= self.constant && self.constant >= Rational::one();
        transcript.push(format!(
            "‖A‖‖B‖ = {}·{} = {} ≤ C = {}: {}",
            scalar::format(&na),
            scalar::format(&nb),
            scalar::format(&measured_constant),
            scalar::format(&self.constant),
            if ok { "holds" } else { "FAILS" }
        ));
        valid &= ok;
        let image = dom.conjugate(&self.b, &self.source, &self.a)?;
        let measured_error = dom.distance(&image, &self.target)?;
        let ok = measured_error <= self.error;
        transcript.push(format!(
            "‖BTA − S‖ = {} ≤ ε = {}: {}",
            scalar::format(&measured_error),
            scalar::format(&self.error),
            if ok { "holds" } else { "FAILS" }
        ));
        valid &= ok;
        Ok(Verification { valid, measured_error, measured_constant, transcript })
    }

    /// Fails with [`Error::VerificationFailed`] unless every claim holds.
    pub fn verified(self, dom: &D) -> Result<Self> {
        let v = self.verify(dom)?;
        if !v.valid {
            return Err(Error::VerificationFailed(format!("{}: {}", self.stage, v.transcript.join("; "))));
        }
        Ok(self)
    }
}

/// `T → S` with `(C, ε)` and `S → R` with `(D, δ)` give `T → R` with
/// `(CD, Dε + δ)`, through `A₁A₂` and `B₂B₁`. Both inputs are verified first.
pub fn compose<D: CertDomain>(dom: &D, first: &FactorCertificate<D>, second: &FactorCertificate<D>) -> Result<FactorCertificate<D>> {
    for c in [first, second] {
        if !c.verify(dom)?.valid {
            return Err(Error::VerificationFailed(format!("{} does not verify", c.stage)));
        }
    }
    compose_verified(dom, first, second)
}

/// [`compose`] for inputs the caller has already verified.
pub fn compose_verified<D: CertDomain>(dom: &D, first: &FactorCertificate<D>, second: &FactorCertificate<D>) -> Result<FactorCertificate<D>> {
    if first.target != second.source {
        return Err(Error::InvalidArgument(format!("{} does not end where {} starts", first.stage, second.stage)));
    }
    let kind =
        if first.kind == CertKind::ProjectionalFactor && second.kind == CertKind::ProjectionalFactor { CertKind::ProjectionalFactor } else { CertKind::Factor };
    Ok(FactorCertificate {
        stage: format!("{} ∘ {}", first.stage, second.stage),
        kind,
        constant: &first.constant * &second.constant,
        error: &second.constant * &first.error + &second.error,
        a: dom.compose(&first.a, &second.a)?,
        b: dom.compose(&second.b, &first.b)?,
        source: first.source.clone(),
        target: second.target.clone(),
    })
}

/// Verifies every link of a chain once, then folds [`compose_verified`].
pub fn compose_all<D: CertDomain>(dom: &D, chain: &[FactorCertificate<D>]) -> Result<FactorCertificate<D>> {
    let (head, rest) = chain.split_first().ok_or_else(|| Error::InvalidArgument("empty certificate chain".into()))?;
    for c in chain {
        if !c.verify(dom)?.valid {
            return Err(Error::VerificationFailed(format!("{} does not verify", c.stage)));
        }
    }
    let mut acc = head.clone();
    for c in rest {
        acc = compose_verified(dom, &acc, c)?;
    }
    Ok(acc)
}
