//! Random and exhaustive sign choices that split a doubleton space evenly.

use dyadic_factor::concentration::{sign_select, sign_select_exhaustive, splitting_statistics, DoubletonSpace};
use dyadic_factor::scalar::{self, ratio};

pub fn run_example() -> dyadic_factor::Result<()> {
    let pairs = (0..10).map(|k| (ratio(k % 4, 4), ratio(-(k % 3), 2))).collect();
    let g = DoubletonSpace::new(pairs)?;
    let s = splitting_statistics(&g);
    println!("variance {} bound {}", scalar::format(&s.variance), scalar::format(&s.variance_bound));
    let eta = ratio(1, 4);
    let random = sign_select(&g, &eta, 7, 8)?;
    let best = sign_select_exhaustive(&g, &eta)?;
    println!("random:     deviation {} after {} tries, success {}", scalar::format(&random.deviation), random.tries, random.success);
    println!("exhaustive: deviation {} signs {:?}", scalar::format(&best.deviation), best.zeta);
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
