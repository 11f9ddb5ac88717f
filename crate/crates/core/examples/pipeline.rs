//! The full chain from an operator on L1(L1) to a scalar, with a verdict.

use dyadic_factor::families::random_contraction;
use dyadic_factor::pipeline::{run_pipeline, PipelineBudget};
use dyadic_factor::scalar::{self, ratio};
use dyadic_factor::stepfun::Space;

pub fn run_example() -> dyadic_factor::Result<()> {
    let t = random_contraction(4, 2, Space::l1(), 7)?;
    let o = run_pipeline(&t, &ratio(1, 2), &PipelineBudget::new(1, 1), 7)?;
    for s in &o.stages {
        println!("{:<12} {:?} C {} error {:.6}", s.stage, s.depths, scalar::format(&s.constant), scalar::to_f64(&s.error));
    }
    if let (Some(l), Some(e)) = (&o.lambda, o.total_error()) {
        println!("lambda {:.6}, total error {:.6}, verified {}", scalar::to_f64(l), scalar::to_f64(e), o.verified());
    }
    if let Some(v) = &o.verdict {
        println!("verdict {:?}: factor constant {:.4}", v.route, scalar::to_f64(&v.factor_constant));
    }
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
