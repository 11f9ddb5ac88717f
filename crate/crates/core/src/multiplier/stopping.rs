//! Stopping-set selection with layered tail-variation budgets.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::HaarMultiplier;
use crate::dyadic::{Branch, BranchSet};
use crate::error::{Error, Result};
use crate::scalar::{self, pow2, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingLayer {
    pub layer: u32,
    #[serde(with = "scalar::serde_rational")]
    pub budget: Rational,
    /// Chain position `k_m` from which tails are measured.
    pub threshold: usize,
    /// Largest tail variation beyond the threshold over the returned set.
    #[serde(with = "scalar::serde_rational")]
    pub achieved: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub layer_measure: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingSelection {
    pub branches: BranchSet,
    pub layers: Vec<StoppingLayer>,
}

/// `τ_σ(k) = max_T Σ_{j=k}^{N} |a_{I_j} - a_{I_{j-1}}|` for `k = 1..=N+1`
/// (index 0 unused), per branch.
fn tail_table(family: &[HaarMultiplier], depth: usize) -> Vec<Vec<Rational>> {
    (0..1u64 << depth)
        .map(|mask| {
            let b = Branch { depth, mask };
            let p = b.prefixes();
            let mut best = vec![Rational::zero(); depth + 2];
            for d in family {
                let mut acc = Rational::zero();
                for k in (1..=depth).rev() {
                    acc += (d.get(p[k]) - d.get(p[k - 1])).abs();
                    if acc > best[k] {
                        best[k] = acc.clone();
                    }
                }
            }
            best
        })
        .collect()
}

/// Layer `m` keeps the branches whose tail variation from the threshold
/// `k_m` is at most `2^{-m}`; `k_m` is the least admissible position keeping
/// measure `1 - η 2^{-m}`. The result is the intersection over layers.
pub fn select_stopping_set(family: &[HaarMultiplier], eta: &Rational) -> Result<StoppingSelection> {
    if !(eta > &Rational::zero() && eta < &Rational::one()) {
        return Err(Error::InvalidArgument("need 0 < η < 1".into()));
    }
    let depth = match family.first() {
        None => return Err(Error::InvalidArgument("empty family".into())),
        Some(d) => d.depth,
    };
    if family.iter().any(|d| d.depth != depth) {
        return Err(Error::InvalidArgument("family members must share a depth".into()));
    }
    let tails = tail_table(family, depth);
    let total = 1usize << depth;
    let cell = pow2(-(depth as i64));
    let min_positive = tails.iter().flatten().filter(|x| !x.is_zero()).min().cloned();
    let mut alive = vec![true; total];
    let mut layers = Vec::new();
    let mut k_prev = 1usize;
    for m in 1u32.. {
        let budget = pow2(-(m as i64));
        let need = Rational::one() - eta * &budget;
        let mut chosen = None;
        for k in k_prev..=depth + 1 {
            let count = tails.iter().filter(|t| t[k] <= budget).count();
            let measure = Rational::from_integer(count.into()) * &cell;
            if measure >= need {
                chosen = Some((k, measure));
                break;
            }
        }
        // position N+1 has empty tails, so some k always qualifies
        let (k, layer_measure) = chosen.expect("deepest tail is zero");
        for (a, t) in alive.iter_mut().zip(&tails) {
            if t[k] > budget {
                *a = false;
            }
        }
        layers.push((m, budget.clone(), k, layer_measure));
        k_prev = k;
        let fine = eta * &budget < cell;
        let below = min_positive.as_ref().is_none_or(|p| &budget < p);
        if (fine && below) || m >= 4 * (depth as u32 + 64) {
            break;
        }
    }
    let mut branches = BranchSet::new(depth);
    for (mask, &a) in alive.iter().enumerate() {
        if a {
            branches.insert(Branch { depth, mask: mask as u64 });
        }
    }
    let layers = layers
        .into_iter()
        .map(|(m, budget, k, layer_measure)| {
            let achieved = alive.iter().zip(&tails).filter(|(a, _)| **a).map(|(_, t)| t[k].clone()).max().unwrap_or_else(Rational::zero);
            StoppingLayer { layer: m, budget, threshold: k, achieved, layer_measure }
        })
        .collect();
    Ok(StoppingSelection { branches, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicInterval;
    use crate::multiplier::stopping_projection;
    use crate::scalar::{int, ratio};

    #[test]
    fn constants_keep_everything() {
        let fam = vec![HaarMultiplier::constant(4, int(2)), HaarMultiplier::constant(4, int(-1))];
        let s = select_stopping_set(&fam, &ratio(1, 3)).unwrap();
        assert_eq!(s.branches.len(), 16);
    }

    #[test]
    fn half_measure_projection() {
        let mut s0 = BranchSet::new(3);
        for m in 0..4 {
            s0.insert(Branch { depth: 3, mask: m });
        }
        let fam = vec![stopping_projection(&s0).unwrap()];
        let s = select_stopping_set(&fam, &ratio(1, 4)).unwrap();
        assert!(s.branches.measure() >= ratio(3, 4));
        for l in &s.layers {
            assert!(l.achieved <= l.budget);
        }
    }

    #[test]
    fn deep_jump_is_excluded() {
        let n = 4;
        let jump = DyadicInterval::new(n - 1, 5);
        let d = HaarMultiplier::from_fn(n, |i| if i == jump { int(1) } else { int(0) });
        let s = select_stopping_set(&[d], &pow2(-(n as i64) + 2)).unwrap();
        let dropped: Vec<u64> = (0..1u64 << n).filter(|m| !s.branches.masks.contains(m)).collect();
        assert_eq!(dropped, vec![10, 11]);
    }
}
