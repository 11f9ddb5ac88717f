//! Transfer maps of block systems, conjugation, and the greedy builder.

use std::collections::HashMap;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::L1Operator;
use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::scalar::{self, pow2, Rational};
use crate::stepfun::{Block, FaithfulSystem};

fn require(sys: &FaithfulSystem) -> Result<()> {
    sys.check_report().map_err(|e| Error::VerificationFailed(format!("not a faithful system: {e}")))
}

/// `A h_J = ω^{-1} h̃_J` with `ω = |Δ_∅*|`; an isometry into the host.
pub fn embedding(sys: &FaithfulSystem) -> Result<L1Operator> {
    require(sys)?;
    let omega = sys.support_measure();
    let mut a = L1Operator::zero_rect(sys.host_depth, sys.out_depth);
    for j in dyadic::intervals(sys.out_depth) {
        let b = sys.block(j);
        let scale = (j.measure() * &omega).recip();
        for (k, &s) in b.intervals.iter().zip(&b.signs) {
            a.set(*k, j, k.measure() * &scale * Rational::from_integer(s.into()));
        }
    }
    Ok(a)
}

/// `Q f = Σ_I ⟨h̃_I, f⟩ |I|^{-1} h_I`, the left inverse `A^{-1}P` of the embedding.
pub fn left_inverse(sys: &FaithfulSystem) -> Result<L1Operator> {
    require(sys)?;
    let mut q = L1Operator::zero_rect(sys.out_depth, sys.host_depth);
    for i in dyadic::intervals(sys.out_depth) {
        let b = sys.block(i);
        for (k, &s) in b.intervals.iter().zip(&b.signs) {
            q.set(i, *k, Rational::from_integer(s.into()));
        }
    }
    Ok(q)
}

/// The norm-one projection `P = A Q` onto the span of the system.
pub fn projection(sys: &FaithfulSystem) -> Result<L1Operator> {
    embedding(sys)?.compose(&left_inverse(sys)?)
}

/// `S = Q T A`: `⟨h_I, S(|J|^{-1}h_J)⟩ = ⟨h̃_I, T(|J|^{-1} ω^{-1} h̃_J)⟩`.
pub fn conjugate(t: &L1Operator, sys: &FaithfulSystem) -> Result<L1Operator> {
    require(sys)?;
    if t.dom_depth != sys.host_depth || t.cod_depth != sys.host_depth {
        return Err(Error::DepthMismatch { expected: sys.host_depth, found: t.dom_depth });
    }
    let omega = sys.support_measure();
    let d = sys.out_depth;
    let mut s = L1Operator::zero(d);
    // column weights σ_{K'} |K'| / (|J| ω)
    let cols: Vec<Vec<(usize, Rational)>> = dyadic::intervals(d)
        .map(|j| {
            let b = sys.block(j);
            let w = (j.measure() * &omega).recip();
            b.intervals.iter().zip(&b.signs).map(|(k, &sg)| (k.slot(), k.measure() * &w * Rational::from_integer(sg.into()))).collect()
        })
        .collect();
    for i in dyadic::intervals(d) {
        let bi = sys.block(i);
        for (jslot, col) in cols.iter().enumerate() {
            let mut acc = Rational::zero();
            for (k, &sg) in bi.intervals.iter().zip(&bi.signs) {
                let mut row = Rational::zero();
                for (kk, w) in col {
                    let m = t.at(k.slot(), *kk);
                    if !m.is_zero() {
                        row += m * w;
                    }
                }
                if sg > 0 {
                    acc += row;
                } else {
                    acc -= row;
                }
            }
            *s.at_mut(i.slot(), jslot) = acc;
        }
    }
    Ok(s)
}

/// The joint distribution of `(h̃_∅ h̃_I)_I` on `Δ_∅*` (normalized) equals
/// that of `(h_I)_I` on `[0,1)`.
pub fn distributionally_equivalent(sys: &FaithfulSystem) -> bool {
    let (n, d) = (sys.host_depth, sys.out_depth);
    let nodes: Vec<DyadicInterval> = dyadic::intervals(d).skip(1).collect();
    let h0 = sys.function(DyadicInterval::EMPTY);
    let hs: Vec<Vec<i8>> = nodes.iter().map(|&i| sys.function(i)).collect();
    let mut host: HashMap<Vec<i8>, Rational> = HashMap::new();
    let cell = pow2(-(n as i64));
    let omega = sys.support_measure();
    for t in 0..1usize << n {
        if h0[t] == 0 {
            continue;
        }
        let key: Vec<i8> = hs.iter().map(|h| h0[t] * h[t]).collect();
        *host.entry(key).or_insert_with(Rational::zero) += &cell / &omega;
    }
    let mut reference: HashMap<Vec<i8>, Rational> = HashMap::new();
    let rcell = pow2(-(d as i64));
    for t in 0..1usize << d {
        let key: Vec<i8> = nodes.iter().map(|i| i.haar_sign(d, t)).collect();
        *reference.entry(key).or_insert_with(Rational::zero) += &rcell;
    }
    host == reference
}

/// `ε_{(I,J)} = 2^{-ι(I)-ι(J)}`.
pub fn default_schedule(i: DyadicInterval, j: DyadicInterval) -> Rational {
    pow2(-((i.code() + j.code()) as i64))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuilderConfig {
    /// Freshness floor: output level `k` draws from host levels at least
    /// `base + k·stride` below the root, when the host leaves room.
    pub base: usize,
    pub stride: usize,
    /// Random sign patterns tried per candidate level, besides all-ones.
    pub samples: usize,
    pub seed: u64,
    /// `∅` for `h̃_∅ = h_∅`; otherwise `h̃_∅ = h_root` and the whole system
    /// lives on `root`.
    pub root: DyadicInterval,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig { base: 2, stride: 1, samples: 32, seed: 0, root: DyadicInterval::EMPTY }
    }
}

/// Builds a block system node by node in `ι` order. Each node is a signed
/// full level-`ℓ` partition of the region its parent assigns to it; among
/// the candidate levels and sign patterns the one with the smallest score is
/// kept (first on ties).
pub(crate) fn greedy_system(
    host: usize,
    out: usize,
    cfg: &BuilderConfig,
    score: &mut dyn FnMut(DyadicInterval, &Block, &[Block]) -> f64,
) -> Result<FaithfulSystem> {
    let root_level: i64 = cfg.root.level().map_or(-1, |j| j as i64);
    if root_level + 1 + out as i64 > host as i64 {
        return Err(Error::HostDepthExhausted(format!("output depth {out} does not fit below {} in a depth-{host} host", cfg.root)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut blocks: Vec<Block> = vec![Block::single(cfg.root, 1)];
    let mut levels: Vec<i64> = vec![root_level];
    let grid = |b: &Block| {
        let mut v = vec![0i8; 1 << host];
        for (k, &s) in b.intervals.iter().zip(&b.signs) {
            for t in k.leaf_range(host) {
                v[t] = s * k.haar_sign(host, t);
            }
        }
        v
    };
    let h0 = grid(&blocks[0]);
    let mut grids = vec![h0.clone()];
    for slot in 1..1usize << out {
        let node = DyadicInterval::from_slot(slot);
        let k = node.level().unwrap() as i64;
        let (region, parent_level): (Vec<bool>, i64) = if node == DyadicInterval::UNIT {
            (h0.iter().map(|&x| x != 0).collect(), levels[0])
        } else {
            let p = node.parent().unwrap();
            let want = if node.is_left_child() { 1 } else { -1 };
            (h0.iter().zip(&grids[p.slot()]).map(|(a, b)| a * b == want).collect(), levels[p.slot()])
        };
        let hi = host as i64 - out as i64 + k;
        let floor = root_level + 1 + cfg.base as i64 + k * cfg.stride as i64;
        let lo = (parent_level + 1).max(floor.min(hi));
        if lo > hi {
            return Err(Error::HostDepthExhausted(format!("no host level left for {node}")));
        }
        let mut best: Option<(f64, Block, i64)> = None;
        for l in lo..=hi {
            let cells: Vec<DyadicInterval> = dyadic::level(l as usize).filter(|c| region[c.leaf_range(host).start]).collect();
            let mut patterns = vec![vec![1i8; cells.len()]];
            for _ in 0..cfg.samples {
                patterns.push((0..cells.len()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect());
            }
            for signs in patterns {
                let cand = Block { intervals: cells.clone(), signs };
                let s = score(node, &cand, &blocks);
                if best.as_ref().is_none_or(|b| s < b.0) {
                    best = Some((s, cand, l));
                }
            }
        }
        let (_, b, l) = best.unwrap();
        grids.push(grid(&b));
        blocks.push(b);
        levels.push(l);
    }
    let sys = FaithfulSystem { out_depth: out, host_depth: host, blocks };
    require(&sys)?;
    Ok(sys)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub row: DyadicInterval,
    pub col: DyadicInterval,
    #[serde(with = "scalar::serde_rational")]
    pub value: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub target: Rational,
}

impl Pairing {
    pub fn within(&self) -> bool {
        self.value <= self.target
    }
}

/// Off-diagonal entries `|⟨h̃_I, T(|J|^{-1}h̃_J)⟩|` of the conjugated operator
/// next to their targets.
pub fn achieved_pairings(s: &L1Operator, schedule: &dyn Fn(DyadicInterval, DyadicInterval) -> Rational) -> Vec<Pairing> {
    let d = s.depth();
    let mut out = Vec::new();
    for i in dyadic::intervals(d) {
        for j in dyadic::intervals(d) {
            if i != j {
                out.push(Pairing { row: i, col: j, value: s.get(i, j).abs(), target: schedule(i, j) });
            }
        }
    }
    out
}

/// One operator of a family steering [`build_system_for_family`].
#[derive(Clone, Copy, Debug)]
pub struct FamilyMember<'a> {
    pub op: &'a L1Operator,
    /// Pairings are multiplied by this before comparison with the schedule.
    pub weight: f64,
    /// Also penalize `⟨h̃_I, T(|I|^{-1}h̃_I)⟩`, to make the whole operator small.
    pub diagonal: bool,
}

/// Greedy faithful system for a family of operators on the same host,
/// minimizing at every step the worst weighted pairing of the candidate with
/// the nodes already placed, relative to the schedule.
pub fn build_system_for_family(
    members: &[FamilyMember<'_>],
    d: usize,
    schedule: &dyn Fn(DyadicInterval, DyadicInterval) -> Rational,
    cfg: &BuilderConfig,
) -> Result<FaithfulSystem> {
    let n = members.first().map(|m| m.op.depth()).ok_or_else(|| Error::InvalidArgument("empty operator family".into()))?;
    if members.iter().any(|m| !m.op.is_square() || m.op.depth() != n) {
        return Err(Error::InvalidArgument("family members must share one square depth".into()));
    }
    let w = 1usize << n;
    let mats: Vec<Vec<f64>> = members.iter().map(|m| m.op.to_f64()).collect();
    let omega = scalar::to_f64(&cfg.root.measure());
    // u_J[K] = Σ_{K'∈Δ_J} σ |K'| / (|J| ω) M[K][K'],  v_J[K] = Σ_{K'∈Δ_J} σ M[K'][K]
    let vectors = |m: &[f64], j: DyadicInterval, b: &Block| {
        let mj = j.measure_f64();
        let mut u = vec![0.0; w];
        let mut v = vec![0.0; w];
        for (kk, &s) in b.intervals.iter().zip(&b.signs) {
            let c = kk.slot();
            let wt = s as f64 * kk.measure_f64() / (mj * omega);
            for r in 0..w {
                u[r] += m[r * w + c] * wt;
                v[r] += m[c * w + r] * s as f64;
            }
        }
        (u, v)
    };
    let mut cache: HashMap<(usize, usize), (Vec<f64>, Vec<f64>)> = HashMap::new();
    let mut score = |node: DyadicInterval, cand: &Block, chosen: &[Block]| -> f64 {
        let mi = node.measure_f64();
        let mut worst = 0.0f64;
        for (mslot, (mem, m)) in members.iter().zip(&mats).enumerate() {
            if mem.weight == 0.0 {
                continue;
            }
            let pair = |u: &[f64], v: &[f64]| {
                let mut p1 = 0.0;
                let mut p2 = 0.0;
                for (k, &s) in cand.intervals.iter().zip(&cand.signs) {
                    p1 += s as f64 * u[k.slot()];
                    p2 += s as f64 * k.measure_f64() / (mi * omega) * v[k.slot()];
                }
                (p1.abs() * mem.weight, p2.abs() * mem.weight)
            };
            for (jslot, bj) in chosen.iter().enumerate() {
                let j = DyadicInterval::from_slot(jslot);
                let (u, v) = cache.entry((mslot, jslot)).or_insert_with(|| vectors(m, j, bj));
                let (p1, p2) = pair(u, v);
                let e1 = scalar::to_f64(&schedule(node, j));
                let e2 = scalar::to_f64(&schedule(j, node));
                worst = worst.max(p1 / e1).max(p2 / e2);
            }
            if mem.diagonal {
                let (u, _) = vectors(m, node, cand);
                let (p, _) = pair(&u, &u);
                worst = worst.max(p / scalar::to_f64(&schedule(node, node)));
            }
        }
        worst
    };
    greedy_system(n, d, cfg, &mut score)
}

/// Greedy faithful system for `T` with output depth `d`, minimizing the
/// worst ratio of new pairings to their targets at every step.
pub fn build_faithful_system(
    t: &L1Operator,
    d: usize,
    schedule: &dyn Fn(DyadicInterval, DyadicInterval) -> Rational,
    cfg: &BuilderConfig,
) -> Result<(FaithfulSystem, Vec<Pairing>)> {
    let sys = build_system_for_family(&[FamilyMember { op: t, weight: 1.0, diagonal: false }], d, schedule, cfg)?;
    let s = conjugate(t, &sys)?;
    Ok((sys, achieved_pairings(&s, schedule)))
}

/// The canonical dilation onto `root`: output level `k` uses the full
/// partition at host level `level(root) + 1 + k`, all signs `+1`.
pub fn canonical_system(host: usize, out: usize, root: DyadicInterval) -> Result<FaithfulSystem> {
    let cfg = BuilderConfig { base: 0, stride: 1, samples: 0, seed: 0, root };
    greedy_system(host, out, &cfg, &mut |_, _, _| 0.0)
}

pub fn is_scalar(t: &L1Operator) -> Option<Rational> {
    if !t.is_diagonal() {
        return None;
    }
    let c = t.at(0, 0).clone();
    (0..t.rows()).all(|s| t.at(s, s) == &c).then_some(c)
}
