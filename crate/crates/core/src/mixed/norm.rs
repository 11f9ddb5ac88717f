//! Certified upper bounds and sampled lower bounds for `L₁(X)` norms.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MixedOperator;
use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::op1::L1Operator;
use crate::scalar::{self, upper_bound, Rational};
use crate::stepfun::{haar_analysis_f64, haar_synthesis_f64, HaarSystemSpace, StepFunction};

const UPPER_BITS: u32 = 40;
/// Distances in `L₁(L₁)` are evaluated exactly up to this total depth.
const EXACT_DISTANCE_DEPTH: usize = 6;

impl MixedOperator {
    /// `μ_M / μ_L`, exactly when it is rational.
    pub fn block_scale_exact(&self, l: DyadicInterval, m: DyadicInterval) -> Option<Rational> {
        if l == m {
            return Some(Rational::one());
        }
        Some(self.space.mu_exact(m)? / self.space.mu_exact(l)?)
    }

    pub fn block_scale(&self, l: DyadicInterval, m: DyadicInterval) -> f64 {
        self.space.mu_of(m) / self.space.mu_of(l)
    }

    /// An upper bound on `‖T^{(L,M)}‖`, exact when `μ_M / μ_L` is rational.
    pub fn block_norm_bound(&self, l: DyadicInterval, m: DyadicInterval) -> Rational {
        match self.block(l, m) {
            None => Rational::zero(),
            Some(b) => scaled_norm(self, l, m, &b.norm_exact()),
        }
    }
}

fn scaled_norm(t: &MixedOperator, l: DyadicInterval, m: DyadicInterval, norm: &Rational) -> Rational {
    match t.block_scale_exact(l, m) {
        Some(s) => norm * s,
        None => upper_bound(scalar::to_f64(norm) * t.block_scale(l, m), UPPER_BITS),
    }
}

/// `Σ_{L≠M} ‖T^{(L,M)}‖ ≥ ‖T − T̄‖`, since `‖j^L‖ = ‖q^M‖ = 1`.
pub fn xdiagonal_distance(t: &MixedOperator) -> Rational {
    let offdiag: Vec<(DyadicInterval, DyadicInterval, &L1Operator)> = t.blocks().filter(|(l, m, _)| l != m).collect();
    offdiag.par_iter().map(|(l, m, b)| scaled_norm(t, *l, *m, &b.norm_exact())).sum()
}

/// A bound on `‖Σ_L j^L S^L q^L‖`: the smallest of `Σ_L ‖S^L‖`,
/// `‖S^∅‖ + Σ_{L≠∅} ‖S^L − S^∅‖` and `‖S^∅‖ + ` [`collapse_bound`].
pub fn diagonal_norm_bound(t: &MixedOperator) -> Rational {
    let entries = t.entries();
    let base = &entries[0];
    let (sum, dev): (Rational, Rational) = entries
        .par_iter()
        .enumerate()
        .map(|(k, e)| {
            let d = if k == 0 { e.norm_exact() } else { e.sub(base).expect("same depth").norm_exact() };
            (e.norm_exact(), d)
        })
        .reduce(|| (Rational::zero(), Rational::zero()), |a, b| (a.0 + b.0, a.1 + b.1));
    let collapse = base.norm_exact() + collapse_bound(&entries).total;
    [sum, dev, collapse].into_iter().min().unwrap_or_else(Rational::zero)
}

/// The terms of a certified bound on `‖S − S^∅ ⊗ Id‖` for an `X`-diagonal
/// `S` with entries `S^L`. Past the last level every entry is extended by
/// its parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseBound {
    /// `‖S^{[0,1)} − S^∅‖`.
    #[serde(with = "scalar::serde_rational")]
    pub head: Rational,
    /// `Σ_{L∈𝒟_n} ‖S^L − S^{L⁺}‖ + ‖S^L − S^{L⁻}‖ ≥ ‖S_n − S_{n+1}‖`, by `n`.
    #[serde(with = "scalar::serde_rational_vec")]
    pub telescoping: Vec<Rational>,
    /// `max_L ‖S^∅ − S^L‖` over the last level.
    #[serde(with = "scalar::serde_rational")]
    pub extreme: Rational,
    /// `Σ_{M} max_{L⊆M} ‖S^M − S^L‖`, `L` over the last level.
    #[serde(with = "scalar::serde_rational")]
    pub nested: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub total: Rational,
}

/// Bounds `‖S − S^∅ ⊗ Id‖` by `‖S^{[0,1)} − S^∅‖`, the telescoping sum
/// `Σ_n ‖S_n − S_{n+1}‖` with `S_n = Σ_{L∈𝒟_n} S^L ⊗ χ_L`, and the
/// distance from the last `S_n` evaluated on elementary tensors.
pub fn collapse_bound(entries: &[L1Operator]) -> CollapseBound {
    let m = entries.len().trailing_zeros() as usize;
    let zero = || Rational::zero();
    if m == 0 {
        return CollapseBound { head: zero(), telescoping: Vec::new(), extreme: zero(), nested: zero(), total: zero() };
    }
    let e = |l: DyadicInterval| &entries[l.slot()];
    let dist = |a: DyadicInterval, b: DyadicInterval| e(a).sub(e(b)).expect("same depth").norm_exact();
    let head = dist(DyadicInterval::UNIT, DyadicInterval::EMPTY);
    let telescoping: Vec<Rational> = (0..m - 1)
        .map(|n| {
            let nodes: Vec<DyadicInterval> = dyadic::level(n).collect();
            nodes.par_iter().map(|&l| l.children().into_iter().map(|c| dist(l, c)).sum::<Rational>()).sum()
        })
        .collect();
    let last: Vec<DyadicInterval> = dyadic::level(m - 1).collect();
    let extreme = last.par_iter().map(|&l| dist(DyadicInterval::EMPTY, l)).max().unwrap_or_else(zero);
    let upper: Vec<DyadicInterval> = (0..m - 1).flat_map(dyadic::level).collect();
    let nested = upper.par_iter().map(|&mm| last.iter().filter(|l| mm.contains(**l)).map(|&l| dist(mm, l)).max().unwrap_or_else(zero)).sum();
    let total = &head + telescoping.iter().sum::<Rational>() + &extreme + &nested;
    CollapseBound { head, telescoping, extreme, nested, total }
}

/// A certified upper bound on `‖T‖_{L₁(X)}`.
pub fn norm_upper_bound(t: &MixedOperator) -> Rational {
    if t.is_identity() {
        return Rational::one();
    }
    xdiagonal_distance(t) + diagonal_norm_bound(t)
}

/// The exact `L₁(L₁)` norm: the largest `‖T(e_I ⊗ e_J)‖` over normalized
/// leaf-rectangle indicators.
pub fn exact_l1l1_norm(t: &MixedOperator) -> Result<Rational> {
    if !t.space.is_l1() {
        return Err(Error::InvalidArgument("exact evaluation needs X = L₁".into()));
    }
    let (n, m) = (t.outer_depth, t.inner_depth);
    let cells: Vec<(usize, usize)> = (0..1usize << n).flat_map(|s| (0..1usize << m).map(move |r| (s, r))).collect();
    let w = Rational::from_integer((1u64 << (n + m)).into());
    let norms: Vec<Rational> = cells
        .par_iter()
        .map(|&(s, r)| {
            let mut u = super::MixedFunction::zero(n, m);
            u.values[(s << m) + r] = w.clone();
            t.apply(&u).map(|v| v.l1_norm())
        })
        .collect::<Result<_>>()?;
    Ok(norms.into_iter().max().unwrap_or_else(Rational::zero))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
    #[serde(with = "scalar::serde_rational")]
    pub upper_exact: Rational,
}

const ASCENT_STEPS: usize = 20;

/// `lower` is the best `‖T(e_I ⊗ x)‖ / ‖x‖_X` found over leaves `I` and
/// inner vectors `x` (normalized Haar functions, leaf indicators and
/// `samples` Gaussian directions, then coordinate ascent); `upper` is
/// [`norm_upper_bound`]. For `X = L₁` both are the exact norm.
pub fn mixed_norm_bounds(t: &MixedOperator, samples: usize, seed: u64) -> Result<NormBounds> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if t.is_identity() {
        return Ok(NormBounds { lower: 1.0, upper: 1.0, upper_exact: Rational::one() });
    }
    if t.space.is_l1() && t.outer_depth + t.inner_depth <= 10 {
        let e = exact_l1l1_norm(t)?;
        let f = scalar::to_f64(&e);
        return Ok(NormBounds { lower: f, upper: f, upper_exact: e });
    }
    let upper_exact = norm_upper_bound(t);
    let lower = sampled_lower_bound(t, samples, seed);
    Ok(NormBounds { lower, upper: scalar::to_f64(&upper_exact), upper_exact })
}

/// Leaf images `C^{(L,M)}(e_I)` in `f64` grid values, per block.
struct Images {
    blocks: Vec<(usize, usize, Vec<Vec<f64>>)>,
}

fn images(t: &MixedOperator) -> Images {
    let list: Vec<(DyadicInterval, DyadicInterval, &L1Operator)> = t.blocks().collect();
    let blocks = list.par_iter().map(|(l, m, b)| (l.slot(), m.slot(), b.leaf_columns().iter().map(StepFunction::to_f64).collect())).collect();
    Images { blocks }
}

fn ratio_at(t: &MixedOperator, img: &Images, leaf: usize, x: &[f64]) -> f64 {
    let nx = t.space.norm(x);
    if nx == 0.0 {
        return 0.0;
    }
    let (rows, w) = (1usize << t.outer_depth, 1usize << t.inner_depth);
    let xc = haar_analysis_f64(x);
    let mut coeff = vec![vec![0.0; w]; rows];
    for (l, m, cols) in &img.blocks {
        let a = xc[*m];
        if a == 0.0 {
            continue;
        }
        for (s, v) in cols[leaf].iter().enumerate() {
            coeff[s][*l] += v * a;
        }
    }
    let total: f64 = coeff.iter().map(|c| t.space.norm(&haar_synthesis_f64(c))).sum();
    total / rows as f64 / nx
}

fn sampled_lower_bound(t: &MixedOperator, samples: usize, seed: u64) -> f64 {
    let img = images(t);
    let (n, m) = (t.outer_depth, t.inner_depth);
    let w = 1usize << m;
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for l in dyadic::intervals(m) {
        let h = StepFunction::haar(m, l).expect("within depth").to_f64();
        directions.push(h);
    }
    for k in 0..w {
        let mut e = vec![0.0; w];
        e[k] = 1.0;
        directions.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        directions.push((0..w).map(|_| rng.sample(StandardNormal)).collect());
    }
    let leaves: Vec<usize> = if n <= 6 { (0..1usize << n).collect() } else { (0..64).map(|_| rng.gen_range(0..1usize << n)).collect() };
    leaves
        .par_iter()
        .map(|&leaf| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (leaf as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let (mut best, mut x) =
                directions.iter().map(|d| (ratio_at(t, &img, leaf, d), d.clone())).fold((0.0, directions[0].clone()), |a, b| if b.0 > a.0 { b } else { a });
            let mut step = 0.5 * x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            for _ in 0..ASCENT_STEPS {
                let k = rng.gen_range(0..w);
                let mut improved = false;
                for sgn in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[k] += sgn * step;
                    let r = ratio_at(t, &img, leaf, &y);
                    if r > best {
                        best = r;
                        x = y;
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `‖S‖` bound for a difference, used when comparing operators.
pub fn distance_upper_bound(a: &MixedOperator, b: &MixedOperator) -> Result<Rational> {
    let d = a.sub(b)?;
    if d.blocks().next().is_none() {
        return Ok(Rational::zero());
    }
    if d.space.is_l1() && d.outer_depth + d.inner_depth <= EXACT_DISTANCE_DEPTH {
        return exact_l1l1_norm(&d);
    }
    Ok(norm_upper_bound(&d).abs())
}
