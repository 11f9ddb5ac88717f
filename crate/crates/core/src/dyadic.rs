//! Dyadic intervals in heap order, chains, branches and stopping-time sets.
//!
//! An interval is identified with its index `ι`: `ι(∅) = 1` and
//! `ι([k/2^j, (k+1)/2^j)) = 2^j + k + 1`. The left child of a code `c >= 2`
//! is `2c - 1`, the right child `2c`, and the only child of `∅` is `[0,1)`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pow2, Rational};

pub const MAX_DEPTH: usize = 30;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DyadicInterval(u64);

impl DyadicInterval {
    pub const EMPTY: DyadicInterval = DyadicInterval(1);
    pub const UNIT: DyadicInterval = DyadicInterval(2);

    /// `[k/2^level, (k+1)/2^level)`.
    pub fn new(level: usize, k: u64) -> Self {
        assert!(level < 63 && k < (1u64 << level), "interval out of range");
        DyadicInterval((1u64 << level) + k + 1)
    }

    pub fn from_code(code: u64) -> Result<Self> {
        if code == 0 || code > (1u64 << 62) {
            return Err(Error::InvalidArgument(format!("invalid interval index {code}")));
        }
        Ok(DyadicInterval(code))
    }

    pub fn code(self) -> u64 {
        self.0
    }

    /// Position in a coefficient vector (`ι - 1`).
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_slot(slot: usize) -> Self {
        DyadicInterval(slot as u64 + 1)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 1
    }

    /// Level `j` of a proper interval.
    pub fn level(self) -> Option<usize> {
        if self.is_empty() {
            None
        } else {
            Some(63 - (self.0 - 1).leading_zeros() as usize)
        }
    }

    /// Number of chain steps from `∅`: 0 for `∅`, `j + 1` at level `j`.
    pub fn rank(self) -> usize {
        self.level().map_or(0, |j| j + 1)
    }

    /// Zero-based position `k` inside its level.
    pub fn position(self) -> Option<u64> {
        self.level().map(|j| self.0 - 1 - (1u64 << j))
    }

    /// Lebesgue measure, with `|∅| = 1`.
    pub fn measure(self) -> Rational {
        pow2(-(self.level().unwrap_or(0) as i64))
    }

    pub fn measure_f64(self) -> f64 {
        0.5f64.powi(self.level().unwrap_or(0) as i32)
    }

    /// Endpoints as `(k, k+1, level)`; `∅` reports `[0,1)`.
    pub fn endpoints(self) -> (u64, u64, usize) {
        match self.level() {
            None => (0, 1, 0),
            Some(j) => {
                let k = self.position().unwrap();
                (k, k + 1, j)
            }
        }
    }

    pub fn left(self) -> Self {
        if self.is_empty() {
            Self::UNIT
        } else {
            DyadicInterval(2 * self.0 - 1)
        }
    }

    pub fn right(self) -> Option<Self> {
        if self.is_empty() {
            None
        } else {
            Some(DyadicInterval(2 * self.0))
        }
    }

    pub fn children(self) -> Vec<Self> {
        match self.right() {
            None => vec![Self::UNIT],
            Some(r) => vec![self.left(), r],
        }
    }

    pub fn parent(self) -> Option<Self> {
        if self.is_empty() {
            None
        } else {
            Some(DyadicInterval(self.0.div_ceil(2)))
        }
    }

    /// The other child of the parent, for intervals of level at least one.
    pub fn sibling(self) -> Option<Self> {
        match self.level() {
            Some(j) if j >= 1 => Some(DyadicInterval(if self.0 % 2 == 1 { self.0 + 1 } else { self.0 - 1 })),
            _ => None,
        }
    }

    /// True for the left half of its parent (`θ = +1`).
    pub fn is_left_child(self) -> bool {
        !self.is_empty() && self.0 % 2 == 1
    }

    /// Containment, where `∅` is treated as the root above `[0,1)`.
    pub fn contains(self, other: Self) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        let (a, b) = (self.level().unwrap(), other.level().unwrap());
        b >= a && (other.0 - 1 - (1u64 << b)) >> (b - a) == self.0 - 1 - (1u64 << a)
    }

    pub fn chain(self) -> Chain {
        let mut intervals = vec![self];
        let mut cur = self;
        while let Some(p) = cur.parent() {
            intervals.push(p);
            cur = p;
        }
        intervals.reverse();
        let signs = intervals.windows(2).map(|w| if w[0].is_empty() || w[1].is_left_child() { 1 } else { -1 }).collect();
        Chain { intervals, signs }
    }

    /// Point value of `h_I` on the leaf cell `t` of a depth-`depth` grid.
    pub fn haar_sign(self, depth: usize, t: usize) -> i8 {
        match self.level() {
            None => 1,
            Some(j) => {
                if j >= depth {
                    return 0;
                }
                let k = self.position().unwrap() as usize;
                let shift = depth - j;
                if t >> shift != k {
                    0
                } else if (t >> (shift - 1)) & 1 == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// Range of leaf cells of a depth-`depth` grid covered by the interval.
    pub fn leaf_range(self, depth: usize) -> std::ops::Range<usize> {
        match self.level() {
            None => 0..1 << depth,
            Some(j) => {
                assert!(j <= depth);
                let k = self.position().unwrap() as usize;
                let w = 1usize << (depth - j);
                k * w..(k + 1) * w
            }
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level() {
            None => write!(f, "∅"),
            Some(0) => write!(f, "[0,1)"),
            Some(j) => {
                let k = self.position().unwrap();
                write!(f, "[{}/2^{j},{}/2^{j})", k, k + 1)
            }
        }
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// All intervals carrying coefficients at truncation depth `depth`:
/// `∅` and levels `0..depth`, in heap order.
pub fn intervals(depth: usize) -> impl Iterator<Item = DyadicInterval> {
    (1..=(1u64 << depth)).map(DyadicInterval)
}

pub fn level(j: usize) -> impl Iterator<Item = DyadicInterval> {
    ((1u64 << j) + 1..=(1u64 << (j + 1))).map(DyadicInterval)
}

/// The chain `∅ = I_0 ⊋ I_1 ⊋ … ⊋ I_k0 = I`, with `θ_0 = 1` and
/// `θ_k = ±1` according to whether `I_{k+1}` is the left or right half of `I_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub intervals: Vec<DyadicInterval>,
    pub signs: Vec<i8>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

/// A full-depth chain, stored as a leaf index: `θ_k = -1` exactly when bit
/// `depth - k` of `mask` is set, for `k = 1..=depth`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub depth: usize,
    pub mask: u64,
}

impl Branch {
    pub fn new(depth: usize, mask: u64) -> Result<Self> {
        if depth > MAX_DEPTH || mask >= 1u64 << depth {
            return Err(Error::InvalidArgument(format!("branch {mask} out of range at depth {depth}")));
        }
        Ok(Branch { depth, mask })
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut mask = 0u64;
        for &s in signs {
            if s != 1 && s != -1 {
                return Err(Error::InvalidArgument("signs must be ±1".into()));
            }
            mask = (mask << 1) | u64::from(s == -1);
        }
        Branch::new(signs.len(), mask)
    }

    pub fn signs(self) -> Vec<i8> {
        (1..=self.depth).map(|k| self.sign(k)).collect()
    }

    /// `θ_k` for `1 <= k <= depth`.
    pub fn sign(self, k: usize) -> i8 {
        if (self.mask >> (self.depth - k)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn weight(self) -> Rational {
        pow2(-(self.depth as i64))
    }

    /// The leaf cell `I_{N+1}` at level `depth`.
    pub fn leaf(self) -> DyadicInterval {
        DyadicInterval::new(self.depth, self.mask)
    }

    /// `I_k` for `k = 0..=depth + 1`.
    pub fn interval(self, k: usize) -> DyadicInterval {
        match k {
            0 => DyadicInterval::EMPTY,
            k => DyadicInterval::new(k - 1, self.mask >> (self.depth + 1 - k)),
        }
    }

    /// `I_0, …, I_N`: the intervals on the branch that carry coefficients.
    pub fn prefixes(self) -> Vec<DyadicInterval> {
        (0..=self.depth).map(|k| self.interval(k)).collect()
    }

    /// `B_k = I_k \ I_{k+1}` for `k = 1..=N`, and the residual leaf `I_{N+1}`.
    pub fn sets(self) -> (Vec<DyadicInterval>, DyadicInterval) {
        let b = (1..=self.depth).map(|k| self.interval(k + 1).sibling().unwrap()).collect();
        (b, self.leaf())
    }
}

/// A set of branches of a fixed depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSet {
    pub depth: usize,
    pub masks: BTreeSet<u64>,
}

impl BranchSet {
    pub fn new(depth: usize) -> Self {
        BranchSet { depth, masks: BTreeSet::new() }
    }

    pub fn full(depth: usize) -> Self {
        BranchSet { depth, masks: (0..1u64 << depth).collect() }
    }

    pub fn insert(&mut self, b: Branch) {
        assert_eq!(b.depth, self.depth);
        self.masks.insert(b.mask);
    }

    pub fn contains(&self, b: Branch) -> bool {
        b.depth == self.depth && self.masks.contains(&b.mask)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Branch> + '_ {
        let depth = self.depth;
        self.masks.iter().map(move |&mask| Branch { depth, mask })
    }

    pub fn measure(&self) -> Rational {
        Rational::from_integer(self.masks.len().into()) * pow2(-(self.depth as i64))
    }

    pub fn stopping_set(&self) -> StoppingTimeSet {
        StoppingTimeSet::from_branches(self)
    }
}

/// The set `𝒜` of intervals lying on some branch of a branch set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingTimeSet {
    pub depth: usize,
    member: Vec<bool>,
}

impl StoppingTimeSet {
    pub fn from_branches(set: &BranchSet) -> Self {
        let mut member = vec![false; (1usize << set.depth) + 1];
        for b in set.iter() {
            for i in b.prefixes() {
                member[i.code() as usize] = true;
            }
        }
        StoppingTimeSet { depth: set.depth, member }
    }

    pub fn from_intervals(depth: usize, items: impl IntoIterator<Item = DyadicInterval>) -> Result<Self> {
        let mut member = vec![false; (1usize << depth) + 1];
        for i in items {
            if i.code() as usize >= member.len() {
                return Err(Error::BelowTruncation(i, depth));
            }
            member[i.code() as usize] = true;
        }
        Ok(StoppingTimeSet { depth, member })
    }

    pub fn contains(&self, i: DyadicInterval) -> bool {
        self.member.get(i.code() as usize).copied().unwrap_or(false)
    }

    pub fn intervals(&self) -> impl Iterator<Item = DyadicInterval> + '_ {
        intervals(self.depth).filter(|&i| self.contains(i))
    }

    /// `K, L ∈ 𝒜` and `K ⊆ J ⊆ L` imply `J ∈ 𝒜`.
    pub fn is_chain_closed(&self) -> bool {
        self.intervals().all(|k| {
            let mut cur = k.parent();
            let mut seen_gap = false;
            while let Some(j) = cur {
                if !self.contains(j) {
                    seen_gap = true;
                } else if seen_gap {
                    return false;
                }
                cur = j.parent();
            }
            true
        })
    }
}
