//! Turning a near-scalar certificate into a factorization of the identity.

use dyadic_factor::certificate::{CertKind, FactorCertificate, L1Domain};
use dyadic_factor::dyadic::DyadicInterval;
use dyadic_factor::op1::L1Operator;
use dyadic_factor::pipeline::{primariness_verdict, DEFAULT_TOLERANCE};
use dyadic_factor::scalar::{self, ratio};

pub fn run_example() -> dyadic_factor::Result<()> {
    let lambda = ratio(3, 5);
    let mut t = L1Operator::scalar(2, lambda.clone());
    t.set(DyadicInterval::new(1, 1), DyadicInterval::new(1, 0), ratio(1, 10));
    let id = L1Operator::identity(2);
    let cert = FactorCertificate::measured(&L1Domain, "near-scalar", CertKind::ProjectionalFactor, id.clone(), id, t, L1Operator::scalar(2, lambda.clone()))?;
    let v = primariness_verdict(&L1Domain, &cert, &lambda, DEFAULT_TOLERANCE)?;
    println!("route {:?}", v.route);
    println!("factor constant {} Neumann bound {}", scalar::format(&v.factor_constant), scalar::format(&v.neumann_bound));
    println!("residual {:.2e} after {} terms, verified {}", scalar::to_f64(&v.residual), v.terms, v.verified);
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
