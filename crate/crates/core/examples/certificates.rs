//! Measured factorization certificates and their composition.

use dyadic_factor::certificate::{compose, CertKind, FactorCertificate, L1Domain};
use dyadic_factor::dyadic::DyadicInterval;
use dyadic_factor::op1::L1Operator;
use dyadic_factor::scalar::{self, ratio};

pub fn run_example() -> dyadic_factor::Result<()> {
    let id = L1Operator::identity(2);
    let t = L1Operator::scalar(2, ratio(1, 2));
    let mut s = t.clone();
    s.set(DyadicInterval::new(1, 0), DyadicInterval::new(1, 1), ratio(1, 16));
    let first = FactorCertificate::measured(&L1Domain, "perturb", CertKind::Factor, id.clone(), id.clone(), t, s.clone())?;
    let two = L1Operator::scalar(2, ratio(2, 1));
    let second = FactorCertificate::measured(&L1Domain, "rescale", CertKind::Factor, id, two.clone(), s.clone(), two.compose(&s)?)?;
    let c = compose(&L1Domain, &first, &second)?;
    for x in [&first, &second, &c] {
        println!("{:<8} C {} error {}", x.stage, scalar::format(&x.constant), scalar::format(&x.error));
    }
    println!("{}", c.verify(&L1Domain)?.transcript.join("\n"));
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
