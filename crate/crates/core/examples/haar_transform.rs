//! Haar coefficients of a step function and back, in exact arithmetic.

use dyadic_factor::scalar::{self, ratio};
use dyadic_factor::stepfun::{haar_analysis, haar_synthesis, StepFunction};

pub fn run_example() -> dyadic_factor::Result<()> {
    let f = StepFunction::new(3, (0..8).map(|k| ratio(k * k - 3, 4)).collect())?;
    let c = haar_analysis(&f);
    println!("values: {}", f.values.iter().map(scalar::format).collect::<Vec<_>>().join(" "));
    println!("coefficients: {}", c.coeffs.iter().map(scalar::format).collect::<Vec<_>>().join(" "));
    let back = haar_synthesis(&c);
    assert_eq!(back, f);
    println!("synthesis recovers f, L1 norm {}", scalar::format(&f.l1_norm()));
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
