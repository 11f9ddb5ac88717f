//! The identity factors through an operator that is a projectional factor
//! of `λ Id` with `|λ|` away from zero.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::certificate::{CertDomain, CertKind, FactorCertificate};
use crate::error::{Error, Result};
use crate::scalar::{self, Rational};

/// Neumann series are cut off once the tail bound drops below this.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
const MAX_TERMS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// `|λ| ≥ 1/2`: `T` itself.
    Direct,
    /// `|λ| < 1/2`: `Id − T`, a factor of `(1 − λ) Id`.
    Complement,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub route: Route,
    /// The scalar the factored operator is close to: `λ` or `1 − λ`.
    #[serde(with = "scalar::serde_rational")]
    pub lambda: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub epsilon: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub constant: Rational,
    /// `2C / (1 − 2ε)`.
    #[serde(with = "scalar::serde_rational")]
    pub factor_constant: Rational,
    /// `1 / (1 − 2ε) ≥ ‖B⁻¹‖`.
    #[serde(with = "scalar::serde_rational")]
    pub neumann_bound: Rational,
    /// Certified `q ≥ ‖B − Id‖` for `B = λ⁻¹ B_c T A_c`.
    #[serde(with = "scalar::serde_rational")]
    pub contraction: Rational,
    /// Terms of `Σ_k (Id − B)^k` kept.
    pub terms: usize,
    /// `q^{terms}`, the certified bound on `‖V B − Id‖`.
    #[serde(with = "scalar::serde_rational")]
    pub residual_bound: Rational,
    /// `‖V B − Id‖` recomputed from the constructed inverse `V`.
    #[serde(with = "scalar::serde_rational")]
    pub residual: Rational,
    pub verified: bool,
}

/// `T → λ Id` with `(C, ε)`, `ε < 1/2`: if `|λ| ≥ 1/2`, inverts
/// `B = λ⁻¹ B_c T A_c` by a Neumann series, so `(V λ⁻¹ B_c) T A_c = Id` up to
/// the certified residual; otherwise does the same for `Id − T`.
pub fn primariness_verdict<D: CertDomain>(dom: &D, cert: &FactorCertificate<D>, lambda: &Rational, tolerance: f64) -> Result<Verdict> {
    let half = scalar::ratio(1, 2);
    if cert.error >= half {
        return Err(Error::InvalidArgument(format!("ε = {} must be below 1/2", scalar::format(&cert.error))));
    }
    let (route, mu, t) = if lambda.abs() >= half {
        (Route::Direct, lambda.clone(), cert.source.clone())
    } else {
        if cert.kind != CertKind::ProjectionalFactor {
            return Err(Error::InvalidArgument("the complement route needs a projectional certificate".into()));
        }
        let id = dom.identity_op(&cert.source)?;
        (Route::Complement, Rational::one() - lambda, dom.combine(&Rational::one(), &id, &-Rational::one(), &cert.source)?)
    };
    let image = dom.conjugate(&cert.b, &t, &cert.a)?;
    let b = dom.combine(&mu.recip(), &image, &Rational::zero(), &image)?;
    let id = dom.identity_op(&b)?;
    let e = dom.combine(&Rational::one(), &id, &-Rational::one(), &b)?;
    let q = dom.op_norm(&e)?;
    if q >= Rational::one() {
        return Err(Error::VerificationFailed(format!("‖B − Id‖ ≤ {} does not contract", scalar::format(&q))));
    }
    // smallest k with q^k / (1 − q) < tolerance
    let qf = scalar::to_f64(&q);
    let terms = if qf == 0.0 {
        1
    } else {
        let k = ((tolerance * (1.0 - qf)).ln() / qf.ln()).ceil();
        (k.max(1.0) as usize).min(MAX_TERMS)
    };
    let mut v = id.clone();
    let mut power = id.clone();
    for _ in 1..terms {
        power = dom.compose_ops(&power, &e)?;
        v = dom.combine(&Rational::one(), &v, &Rational::one(), &power)?;
    }
    let vb = dom.compose_ops(&v, &b)?;
    let residual = dom.op_norm(&dom.combine(&Rational::one(), &vb, &-Rational::one(), &id)?)?;
    let residual_bound = num_traits::pow(q.clone(), terms);
    let eps = cert.error.clone();
    let denom = Rational::one() - scalar::int(2) * &eps;
    let verified = residual <= residual_bound && scalar::to_f64(&residual) <= tolerance;
    Ok(Verdict {
        route,
        lambda: mu,
        factor_constant: scalar::int(2) * &cert.constant / &denom,
        neumann_bound: denom.recip(),
        constant: cert.constant.clone(),
        epsilon: eps,
        contraction: q,
        terms,
        residual_bound,
        residual,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::L1Domain;
    use crate::op1::L1Operator;
    use crate::scalar::ratio;

    fn near_scalar(lambda: Rational, eps: Rational) -> FactorCertificate<L1Domain> {
        let mut e = L1Operator::zero(2);
        e.set(crate::dyadic::DyadicInterval::new(1, 0), crate::dyadic::DyadicInterval::new(1, 1), eps.clone());
        let t = L1Operator::scalar(2, lambda.clone()).add(&e).unwrap();
        let id = L1Operator::identity(2);
        let s = L1Operator::scalar(2, lambda);
        FactorCertificate::measured(&L1Domain, "t", CertKind::ProjectionalFactor, id.clone(), id, t, s).unwrap()
    }

    #[test]
    fn identity_gives_twice_the_constant() {
        let c = near_scalar(Rational::one(), Rational::zero());
        let v = primariness_verdict(&L1Domain, &c, &Rational::one(), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.factor_constant, scalar::int(2));
        assert!(v.residual.is_zero() && v.verified);
    }

    #[test]
    fn small_lambda_takes_the_complement() {
        let c = near_scalar(ratio(1, 10), ratio(1, 20));
        let v = primariness_verdict(&L1Domain, &c, &ratio(1, 10), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.route, Route::Complement);
        assert_eq!(v.lambda, ratio(9, 10));
        assert!(v.verified);
    }

    #[test]
    fn epsilon_must_be_below_half() {
        let mut c = near_scalar(Rational::one(), Rational::zero());
        c.error = ratio(1, 2);
        assert!(primariness_verdict(&L1Domain, &c, &Rational::one(), DEFAULT_TOLERANCE).is_err());
    }
}
