//! Haar multipliers on truncated `L₁`.
//!
//! Entries below the truncation depth extend constantly, so the limit term
//! of a branch is its last entry.

mod stopping;

pub use stopping::{select_stopping_set, StoppingLayer, StoppingSelection};

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dyadic::{self, Branch, BranchSet, DyadicInterval, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::scalar::{self, pow2, Rational};
use crate::stepfun::{haar_analysis, haar_synthesis, StepFunction};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaarMultiplier {
    pub depth: usize,
    /// `a_I` at slot `ι(I) - 1`.
    pub entries: Vec<Rational>,
}

impl HaarMultiplier {
    pub fn new(depth: usize, entries: Vec<Rational>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge(depth));
        }
        if entries.len() != 1 << depth {
            return Err(Error::DepthMismatch { expected: 1 << depth, found: entries.len() });
        }
        Ok(HaarMultiplier { depth, entries })
    }

    pub fn constant(depth: usize, c: Rational) -> Self {
        HaarMultiplier { depth, entries: vec![c; 1 << depth] }
    }

    pub fn identity(depth: usize) -> Self {
        Self::constant(depth, Rational::one())
    }

    pub fn from_fn(depth: usize, f: impl Fn(DyadicInterval) -> Rational) -> Self {
        HaarMultiplier { depth, entries: dyadic::intervals(depth).map(f).collect() }
    }

    pub fn get(&self, i: DyadicInterval) -> &Rational {
        &self.entries[i.slot()]
    }

    /// Entry with constant extension below the truncation depth.
    pub fn entry(&self, i: DyadicInterval) -> &Rational {
        let mut i = i;
        while i.level().is_some_and(|j| j >= self.depth) {
            i = i.parent().unwrap();
        }
        &self.entries[i.slot()]
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        if f.depth != self.depth {
            return Err(Error::DepthMismatch { expected: self.depth, found: f.depth });
        }
        let mut c = haar_analysis(f);
        for (x, a) in c.coeffs.iter_mut().zip(&self.entries) {
            *x *= a;
        }
        Ok(haar_synthesis(&c))
    }

    pub fn compose(&self, other: &HaarMultiplier) -> Result<HaarMultiplier> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch { expected: self.depth, found: other.depth });
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).collect();
        Ok(HaarMultiplier { depth: self.depth, entries })
    }

    pub fn sub(&self, other: &HaarMultiplier) -> Result<HaarMultiplier> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch { expected: self.depth, found: other.depth });
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(HaarMultiplier { depth: self.depth, entries })
    }

    /// `Σ_{k=1}^{N} |a_{I_k} - a_{I_{k-1}}| + |a_{I_N}|` along one branch.
    pub fn branch_functional(&self, b: Branch) -> Rational {
        assert_eq!(b.depth, self.depth);
        let p = b.prefixes();
        let var: Rational = p.windows(2).map(|w| (self.get(w[1]) - self.get(w[0])).abs()).sum();
        var + self.get(*p.last().unwrap()).abs()
    }
}

impl Serialize for HaarMultiplier {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            depth: usize,
            entries: BTreeMap<u64, String>,
        }
        let entries = dyadic::intervals(self.depth).map(|i| (i.code(), scalar::format_dyadic(self.get(i)))).collect();
        Repr { depth: self.depth, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HaarMultiplier {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Repr {
            depth: usize,
            entries: BTreeMap<u64, String>,
        }
        let r = Repr::deserialize(d)?;
        if r.depth > MAX_DEPTH {
            return Err(D::Error::custom("depth too large"));
        }
        let mut entries = vec![Rational::zero(); 1 << r.depth];
        for (code, v) in r.entries {
            if code == 0 || code > 1 << r.depth {
                return Err(D::Error::custom(format!("index {code} outside depth {}", r.depth)));
            }
            entries[(code - 1) as usize] = scalar::parse(&v).map_err(|e| D::Error::custom(format!("entries.{code}: {e}")))?;
        }
        Ok(HaarMultiplier { depth: r.depth, entries })
    }
}

/// `V(J)` over the subtree of `root`, for entries shifted by `offset`.
fn subtree_value(d: &HaarMultiplier, root: DyadicInterval, offset: &Rational) -> Rational {
    let n = d.depth;
    let b = |i: DyadicInterval| d.get(i) - offset;
    if n == 0 {
        return b(DyadicInterval::EMPTY).abs();
    }
    let top = root.level().map_or(0, |j| j);
    // value table for the current level, restricted to the subtree
    let span = |j: usize| -> Vec<DyadicInterval> {
        match root.level() {
            None => dyadic::level(j).collect(),
            Some(l) => {
                let k = root.position().unwrap();
                let w = 1u64 << (j - l);
                (k * w..(k + 1) * w).map(|p| DyadicInterval::new(j, p)).collect()
            }
        }
    };
    let mut vals: Vec<Rational> = span(n - 1).into_iter().map(|i| b(i).abs()).collect();
    for j in (top..n - 1).rev() {
        let nodes = span(j);
        vals = nodes
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let bi = b(i);
                let l = (b(i.left()) - &bi).abs() + &vals[2 * k];
                let r = (b(i.right().unwrap()) - &bi).abs() + &vals[2 * k + 1];
                scalar::max(l, r)
            })
            .collect();
    }
    if root.is_empty() {
        (b(DyadicInterval::UNIT) - b(DyadicInterval::EMPTY)).abs() + &vals[0]
    } else {
        vals.swap_remove(0)
    }
}

/// `|||D|||` by the leaf-to-root recurrence.
pub fn triple_norm(d: &HaarMultiplier) -> Rational {
    subtree_value(d, DyadicInterval::EMPTY, &Rational::zero())
}

/// Exact `L₁ → L₁` norm: the largest `‖D(|I|^{-1}χ_I)‖₁` over leaf cells.
///
/// On `B_m` the image takes the value `a_0 + Σ_{k<m} 2^{k-1} a_k - 2^{m-1} a_m`,
/// and on the leaf itself `a_0 + Σ_{k≤N} 2^{k-1} a_k`.
pub fn operator_norm_exact(d: &HaarMultiplier) -> Rational {
    let n = d.depth;
    if n == 0 {
        return d.get(DyadicInterval::EMPTY).abs();
    }
    let mut best = Rational::zero();
    // (node I_m, prefix P_m, partial mass S_m) for m >= 1
    let mut stack = vec![(DyadicInterval::UNIT, d.get(DyadicInterval::EMPTY).clone(), Rational::zero())];
    while let Some((i, p, s)) = stack.pop() {
        let m = i.rank();
        let w = pow2(m as i64 - 1);
        let a = d.get(i) * &w;
        let c = &p - &a;
        let s = s + c.abs() * pow2(-(m as i64));
        let p = p + a;
        if m == n {
            let total = s + p.abs() * pow2(-(n as i64));
            if total > best {
                best = total;
            }
        } else {
            for child in i.children() {
                stack.push((child, p.clone(), s.clone()));
            }
        }
    }
    best
}

/// Sup of the branch functional over `set`, after checking that every entry
/// off the generated stopping set vanishes.
pub fn restricted_triple_norm(d: &HaarMultiplier, set: &BranchSet) -> Result<Rational> {
    if set.depth != d.depth {
        return Err(Error::DepthMismatch { expected: d.depth, found: set.depth });
    }
    let a = set.stopping_set();
    for i in dyadic::intervals(d.depth) {
        if !a.contains(i) && !d.get(i).is_zero() {
            return Err(Error::OutsideStoppingSet(i));
        }
    }
    Ok(set.iter().map(|b| d.branch_functional(b)).max().unwrap_or_else(Rational::zero))
}

/// `P_𝒮`: entries 1 on the intervals of the stopping set, 0 elsewhere.
pub fn stopping_projection(set: &BranchSet) -> Result<HaarMultiplier> {
    if set.is_empty() {
        return Err(Error::EmptyStoppingSet);
    }
    let a = set.stopping_set();
    Ok(HaarMultiplier::from_fn(set.depth, |i| if a.contains(i) { Rational::one() } else { Rational::zero() }))
}

/// `Q_{I₀}`: entries 1 on `J ⊆ I₀`.
pub fn subtree_projection(depth: usize, root: DyadicInterval) -> HaarMultiplier {
    HaarMultiplier::from_fn(depth, |j| if root.contains(j) { Rational::one() } else { Rational::zero() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarReduction {
    pub interval: DyadicInterval,
    #[serde(with = "scalar::serde_rational")]
    pub scalar: Rational,
    /// `|||D Q_{I₀} - a_{I₀} Q_{I₀}|||`.
    #[serde(with = "scalar::serde_rational")]
    pub achieved: Rational,
}

/// Intervals with room for `out_depth` further levels below them.
fn reduction_candidates(depth: usize, out_depth: usize) -> impl Iterator<Item = DyadicInterval> {
    dyadic::intervals(depth).filter(move |i| match i.level() {
        None => out_depth <= depth,
        Some(j) => j + out_depth < depth,
    })
}

/// Minimizer of `|||DQ_{I₀} - a_{I₀}Q_{I₀}|||`, smallest `ι` on ties.
///
/// Only `I₀` leaving `out_depth` levels below it are considered; an interval
/// at the last level always gives 0 under the truncation convention.
pub fn scalar_reduction_best(d: &HaarMultiplier, out_depth: usize) -> Result<ScalarReduction> {
    let mut best: Option<ScalarReduction> = None;
    for i in reduction_candidates(d.depth, out_depth) {
        let a = d.get(i).clone();
        let v = subtree_value(d, i, &a);
        if best.as_ref().is_none_or(|b| v < b.achieved) {
            best = Some(ScalarReduction { interval: i, scalar: a, achieved: v });
        }
    }
    best.ok_or_else(|| Error::HostDepthExhausted(format!("no interval leaves {out_depth} levels at depth {}", d.depth)))
}

pub fn scalar_reduction_search(d: &HaarMultiplier, eps: &Rational, out_depth: usize) -> Result<ScalarReduction> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let best = scalar_reduction_best(d, out_depth)?;
    if &best.achieved > eps {
        return Err(Error::NotFound { best: scalar::format(&best.achieved), at: best.interval });
    }
    Ok(best)
}

/// Values `c_1, …, c_{n+1}` of `Σ_{k=0}^{n} a_k θ_k |I_k|^{-1} h_{I_k}` on
/// `B_1, …, B_n` and on `I_{n+1}`.
pub fn branch_values(a: &[Rational]) -> Vec<Rational> {
    let n = a.len() - 1;
    let mut out = Vec::with_capacity(n + 1);
    let mut p = a[0].clone();
    for (k, ak) in a.iter().enumerate().skip(1) {
        let w = ak * pow2(k as i64 - 1);
        out.push(&p - &w);
        p += w;
    }
    out.push(p);
    out
}

/// `‖f χ_{I_m}‖₁` for the branch function of `a`, where `I_m = ∪_{j≥m} B_j`.
pub fn branch_tail_mass(a: &[Rational], m: usize) -> Rational {
    let n = a.len() - 1;
    let c = branch_values(a);
    let mut s = Rational::zero();
    for k in m.max(1)..=n {
        s += c[k - 1].abs() * pow2(-(k as i64));
    }
    s + c[n].abs() * pow2(-(n as i64))
}

/// `Σ_{k=m+1}^{n} |a_k - a_{k-1}| + |a_n|`.
pub fn branch_variation(a: &[Rational], m: usize) -> Rational {
    let n = a.len() - 1;
    let v: Rational = (m + 1..=n).map(|k| (&a[k] - &a[k - 1]).abs()).sum();
    v + a[n].abs()
}
