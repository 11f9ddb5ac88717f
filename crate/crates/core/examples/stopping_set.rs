//! A stopping set on which a family of multipliers has small variation.

use dyadic_factor::multiplier::{restricted_triple_norm, select_stopping_set, stopping_projection, triple_norm, HaarMultiplier};
use dyadic_factor::scalar::{self, ratio};

pub fn run_example() -> dyadic_factor::Result<()> {
    let family = vec![
        HaarMultiplier::from_fn(6, |i| if i.level().unwrap_or(0) < 2 { ratio(1, 1) } else { ratio(1, 2) }),
        HaarMultiplier::from_fn(6, |i| ratio((i.code() % 3) as i64, 4)),
    ];
    let sel = select_stopping_set(&family, &ratio(1, 4))?;
    println!("{} branches, measure {}", sel.branches.len(), scalar::format(&sel.branches.measure()));
    for l in &sel.layers {
        println!("  layer {} achieved {} of budget {}", l.layer, scalar::format(&l.achieved), scalar::format(&l.budget));
    }
    let p = stopping_projection(&sel.branches)?;
    println!("|||P||| = {}", scalar::format(&triple_norm(&p)));
    for (k, d) in family.iter().enumerate() {
        println!("member {k}: triple {} restricted {}", scalar::format(&triple_norm(d)), scalar::format(&restricted_triple_norm(d, &sel.branches)?));
    }
    Ok(())
}

fn main() -> dyadic_factor::Result<()> {
    run_example()
}
