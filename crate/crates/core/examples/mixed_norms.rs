//! Norm bounds for operators on L1 with values in a Haar system space.

use dyadic_factor::families::random_contraction;
use dyadic_factor::mixed::{exact_l1l1_norm, mixed_norm_bounds, norm_upper_bound, xdiagonal_distance};
use dyadic_factor::scalar;
use dyadic_factor::stepfun::Space;

pub fn run_example() -> dyadic_factor::Result<()> {
    let t = random_contraction(2, 2, Space::l1(), 5)?;
    println!("upper bound {:.6}", scalar::to_f64(&norm_upper_bound(&t)));
    println!("exact L1(L1) norm {:.6}", scalar::to_f64(&exact_l1l1_norm(&t)?));
    println!("distance to X-diagonal {:.6}", scalar::to_f64(&xdiagonal_distance(&t)));
    let b = mixed_norm_bounds(&t, 16, 1)?;
    println!("{b:?}");
    let u = random_contraction(2, 2, Space::parse("L2")?, 5)?;
    println!("on L1(L2): upper bound {:.6}", scalar::to_f64(&norm_upper_bound(&u)));
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
