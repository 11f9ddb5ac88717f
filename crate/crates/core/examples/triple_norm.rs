//! The branch triple norm of a Haar multiplier against its exact operator norm.

use dyadic_factor::multiplier::{operator_norm_exact, triple_norm, HaarMultiplier};
use dyadic_factor::scalar::{self, ratio};

pub fn run_example() -> dyadic_factor::Result<()> {
    let cases = [
        ("identity", HaarMultiplier::identity(4)),
        ("alternating", HaarMultiplier::from_fn(4, |i| if i.level().unwrap_or(0) % 2 == 0 { ratio(1, 1) } else { ratio(-1, 1) })),
        ("ramp", HaarMultiplier::from_fn(4, |i| ratio(i.code() as i64, 16))),
    ];
    for (name, d) in cases {
        let (tri, op) = (triple_norm(&d), operator_norm_exact(&d));
        assert!(op <= tri && tri <= &op * scalar::int(3));
        println!("{name:<12} triple {:<8} opnorm {:<8} ratio {:.4}", scalar::format(&tri), scalar::format(&op), scalar::to_f64(&(&tri / &op)));
    }
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
