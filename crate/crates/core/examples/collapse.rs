//! Collapsing a stable X-diagonal operator to a diagonal tensor.

use dyadic_factor::families::stable_diagonal;
use dyadic_factor::pipeline::step4_collapse;
use dyadic_factor::scalar::{self, ratio};
use dyadic_factor::stepfun::Space;

pub fn run_example() -> dyadic_factor::Result<()> {
    let eps = ratio(1, 4);
    let s = stable_diagonal(3, 2, Space::l1(), &eps, 2)?;
    let o = step4_collapse(&s, &eps, false, 8, 2)?;
    let b = &o.bound;
    println!("head {}", scalar::format(&b.head));
    for (k, (t, target)) in b.telescoping.iter().zip(&o.telescoping_targets).enumerate() {
        println!("level {k}: {} (target {})", scalar::format(t), scalar::format(target));
    }
    println!("extreme {} nested {}", scalar::format(&b.extreme), scalar::format(&b.nested));
    println!("total {:.6}, sampled lower estimate {:.6}, 7ε = {}", scalar::to_f64(&b.total), o.lower_estimate, scalar::format(&(&eps * scalar::int(7))));
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
