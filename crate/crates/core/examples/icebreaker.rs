//! Factoring `λ Id` through an operator on L1, with a certificate.

use dyadic_factor::certificate::L1Domain;
use dyadic_factor::families::tail_multiplier;
use dyadic_factor::op1::{icebreaker, IcebreakerBudget, L1Operator};
use dyadic_factor::scalar::{self, ratio};

pub fn run_example() -> dyadic_factor::Result<()> {
    let d = tail_multiplier(6, 2, &ratio(-1, 3), 4);
    let t = L1Operator::from_multiplier(&d);
    let mut budget = IcebreakerBudget::new(2);
    budget.builder.base = 2;
    let o = icebreaker(&t, &ratio(1, 4), &budget)?;
    println!("lambda {} with error {}", scalar::format(&o.lambda), scalar::format(&o.certificate.error));
    for s in &o.stages {
        println!("  {}: C {} error {}", s.stage, scalar::format(&s.constant), scalar::format(&s.error));
    }
    let v = o.certificate.verify(&L1Domain)?;
    println!("{}", v.transcript.join("\n"));
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
