//! Seeded generators of test operators.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::mixed::{norm_upper_bound, xdiagonal_distance, MixedOperator};
use crate::multiplier::HaarMultiplier;
use crate::op1::L1Operator;
use crate::scalar::{self, Rational};
use crate::stepfun::Space;

/// Random entries are multiples of `2^-ENTRY_BITS`.
const ENTRY_BITS: u32 = 12;
const SCALE_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Identity,
    Contraction,
    MultiplierTensor,
    Planted,
}

fn gaussian(rng: &mut ChaCha8Rng) -> Rational {
    scalar::round_dyadic(rng.sample::<f64, _>(StandardNormal), ENTRY_BITS)
}

fn uniform(rng: &mut ChaCha8Rng) -> Rational {
    scalar::round_dyadic(rng.gen_range(-1.0..1.0), ENTRY_BITS)
}

/// A dyadic `s ≤ target / x`, within `2^-SCALE_BITS` of it.
fn dyadic_ratio_below(target: &Rational, x: &Rational) -> Rational {
    if x.is_zero() {
        return Rational::one();
    }
    let exact = target / x;
    let den = scalar::pow2(SCALE_BITS as i64);
    (&exact * &den).floor() / den
}

/// A dense operator with Gaussian Haar coefficients on `depth`.
pub fn random_l1_operator(depth: usize, rng: &mut ChaCha8Rng) -> L1Operator {
    let w = 1usize << depth;
    let k: Vec<Rational> = (0..w * w).map(|_| gaussian(rng)).collect();
    L1Operator::from_coefficient_matrix(depth, depth, |r, c| k[r * w + c].clone())
}

/// Dense Gaussian blocks, scaled by a dyadic factor so the certified norm
/// bound is at most 1 and within `2^-16` of it.
pub fn random_contraction(outer_depth: usize, inner_depth: usize, space: Space, seed: u64) -> Result<MixedOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = MixedOperator::zero(outer_depth, inner_depth, space)?;
    for l in dyadic::intervals(inner_depth) {
        for m in dyadic::intervals(inner_depth) {
            t.set_block(l, m, random_l1_operator(outer_depth, &mut rng))?;
        }
    }
    let s = dyadic_ratio_below(&Rational::one(), &norm_upper_bound(&t));
    Ok(t.scale(&s))
}

/// Entries uniform in `[-1, 1]` above `tail_level`, equal to `c` from it on.
pub fn tail_multiplier(depth: usize, tail_level: usize, c: &Rational, seed: u64) -> HaarMultiplier {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = dyadic::intervals(depth)
        .map(|i| match i.level() {
            Some(k) if k >= tail_level => c.clone(),
            _ => uniform(&mut rng),
        })
        .collect();
    HaarMultiplier { depth, entries }
}

/// `D ⊗ Id`.
pub fn multiplier_tensor(d: &HaarMultiplier, inner_depth: usize, space: Space) -> Result<MixedOperator> {
    MixedOperator::diagonal_tensor(&L1Operator::from_multiplier(d), inner_depth, space)
}

/// Random multiplier entries `S^L` plus dense off-diagonal noise scaled so
/// that `xdiagonal_distance ≤ mass`.
pub fn planted(outer_depth: usize, inner_depth: usize, space: Space, mass: &Rational, seed: u64) -> Result<MixedOperator> {
    if *mass < Rational::zero() {
        return Err(Error::InvalidArgument("off-diagonal mass must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diag = MixedOperator::zero(outer_depth, inner_depth, space.clone())?;
    let mut noise = MixedOperator::zero(outer_depth, inner_depth, space)?;
    for l in dyadic::intervals(inner_depth) {
        let d = HaarMultiplier { depth: outer_depth, entries: (0..1usize << outer_depth).map(|_| uniform(&mut rng)).collect() };
        diag.set_block(l, l, L1Operator::from_multiplier(&d))?;
        for m in dyadic::intervals(inner_depth).filter(|&m| m != l) {
            noise.set_block(l, m, random_l1_operator(outer_depth, &mut rng))?;
        }
    }
    let s = dyadic_ratio_below(mass, &xdiagonal_distance(&noise));
    diag.add(&noise.scale(&s))
}

/// The family member for the command line.
pub fn generate(family: Family, outer_depth: usize, inner_depth: usize, space: Space, mass: &Rational, seed: u64) -> Result<MixedOperator> {
    match family {
        Family::Identity => MixedOperator::identity(outer_depth, inner_depth, space),
        Family::Contraction => random_contraction(outer_depth, inner_depth, space, seed),
        Family::MultiplierTensor => {
            let d = tail_multiplier(outer_depth, outer_depth.div_ceil(2), &scalar::ratio(1, 2), seed);
            multiplier_tensor(&d, inner_depth, space)
        }
        Family::Planted => planted(outer_depth, inner_depth, space, mass, seed),
    }
}

/// A stable diagonal: `S^L = S^∅ + (ε/2)|L|² E_L` with `‖E_L‖ ≤ 1`, so
/// `‖S^L − S^M‖ ≤ ε|M|²` whenever `L ⊆ M`.
pub fn stable_diagonal(outer_depth: usize, inner_depth: usize, space: Space, eps: &Rational, seed: u64) -> Result<MixedOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = random_l1_operator(outer_depth, &mut rng);
    let base = base.scale(&dyadic_ratio_below(&Rational::one(), &base.norm_exact()));
    let half = eps / scalar::int(2);
    let mut t = MixedOperator::zero(outer_depth, inner_depth, space)?;
    for l in dyadic::intervals(inner_depth) {
        let e = random_l1_operator(outer_depth, &mut rng);
        let w = &half * l.measure() * l.measure();
        let e = e.scale(&dyadic_ratio_below(&w, &e.norm_exact()));
        let entry = if l == DyadicInterval::EMPTY { base.clone() } else { base.add(&e)? };
        t.set_block(l, l, entry)?;
    }
    Ok(t)
}
