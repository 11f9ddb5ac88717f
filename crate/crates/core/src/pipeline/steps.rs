//! The four reductions of an operator on `L₁(X)`.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{CertDomain, CertKind, FactorCertificate};
use crate::concentration::{required_n, sign_select, sign_select_exhaustive, DoubletonSpace, SignSelection};
use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::mixed::{collapse_bound, mixed_norm_bounds, xdiagonal_distance, CollapseBound, InnerMap, MixedDomain, MixedOperator, TensorMap};
use crate::multiplier::{select_stopping_set, HaarMultiplier};
use crate::op1::{
    achieved_pairings, build_system_for_family, embedding, greedy_system, l1_norm_f64, left_inverse, nearest_multiplier, BuilderConfig, FamilyMember,
    L1Operator,
};
use crate::scalar::{self, pow2, Rational};
use crate::stepfun::{Block, FaithfulSystem, HaarSystemSpace};

/// Sign vectors up to this length are searched exhaustively.
const EXHAUSTIVE_SIGNS: usize = 10;
/// Net sizes are computed for doubleton spaces up to this many pairs.
const NET_PAIRS: usize = 16;

/// `ε 2^{-ι(I)-ι(J)}`.
pub fn pair_schedule(eps: &Rational) -> impl Fn(DyadicInterval, DyadicInterval) -> Rational + '_ {
    move |i, j| eps * pow2(-((i.code() + j.code()) as i64))
}

fn outer_maps(sys: &FaithfulSystem, inner: usize) -> Result<(TensorMap, TensorMap)> {
    Ok((TensorMap::outer_only(embedding(sys)?, inner), TensorMap::outer_only(left_inverse(sys)?, inner)))
}

fn inner_maps(sys: &FaithfulSystem, outer: usize) -> (TensorMap, TensorMap) {
    (
        TensorMap { outer: L1Operator::identity(outer), inner: InnerMap::embedding(sys) },
        TensorMap { outer: L1Operator::identity(outer), inner: InnerMap::left_inverse(sys) },
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoppingDiagnostic {
    #[serde(with = "scalar::serde_rational")]
    pub eta: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub measure: Rational,
    /// Largest tail variation over the selected branches, per layer.
    #[serde(with = "scalar::serde_rational_vec")]
    pub achieved: Vec<Rational>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step1Outcome {
    pub operator: MixedOperator,
    pub certificate: FactorCertificate<MixedDomain>,
    pub outer: FaithfulSystem,
    pub inner: FaithfulSystem,
    /// `xdiagonal_distance` of the conjugated operator.
    #[serde(with = "scalar::serde_rational")]
    pub achieved: Rational,
    /// Stopping set for the nearest multipliers of the entries, reported
    /// but not imposed.
    pub stopping: Option<StoppingDiagnostic>,
    pub shortfall: bool,
}

/// Coupling of a candidate inner node with one already placed, through
/// `Σ σ C^{(L',M')}` partial sums.
struct InnerPartial {
    /// `col[L'] = Σ_{M'∈Δ_M} σ_{M'} C^{(L',M')}`.
    col: Vec<Option<Vec<f64>>>,
    /// `row[M''] = Σ_{L'∈Δ_M} σ_{L'} |L'|/|M| C^{(L',M'')}`.
    row: Vec<Option<Vec<f64>>>,
}

fn accumulate(acc: &mut Option<Vec<f64>>, x: &[f64], w: f64) {
    let v = acc.get_or_insert_with(|| vec![0.0; x.len()]);
    v.iter_mut().zip(x).for_each(|(a, b)| *a += w * b);
}

fn inner_partial(blocks: &[Vec<Option<Vec<f64>>>], node: DyadicInterval, b: &Block) -> InnerPartial {
    let host = blocks.len();
    let mut col = vec![None; host];
    let mut row = vec![None; host];
    let mu = node.measure_f64();
    for (k, &s) in b.intervals.iter().zip(&b.signs) {
        for (lp, acc) in col.iter_mut().enumerate() {
            if let Some(c) = &blocks[lp][k.slot()] {
                accumulate(acc, c, s as f64);
            }
        }
        for (mp, acc) in row.iter_mut().enumerate() {
            if let Some(c) = &blocks[k.slot()][mp] {
                accumulate(acc, c, s as f64 * k.measure_f64() / mu);
            }
        }
    }
    InnerPartial { col, row }
}

fn inner_system(t: &MixedOperator, out: usize, eps: &Rational, cfg: &BuilderConfig) -> Result<FaithfulSystem> {
    let (n, m) = (t.outer_depth, t.inner_depth);
    let host = 1usize << m;
    let mut blocks: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; host]; host];
    let listed: Vec<(usize, usize, Vec<f64>)> = t.blocks().collect::<Vec<_>>().par_iter().map(|(l, mm, b)| (l.slot(), mm.slot(), b.to_f64())).collect();
    for (l, mm, v) in listed {
        blocks[l][mm] = Some(v);
    }
    let e = scalar::to_f64(eps);
    let space = t.space.clone();
    let mut partials: Vec<InnerPartial> = Vec::new();
    let mut score = |node: DyadicInterval, cand: &Block, chosen: &[Block]| -> f64 {
        while partials.len() < chosen.len() {
            let j = partials.len();
            partials.push(inner_partial(&blocks, DyadicInterval::from_slot(j), &chosen[j]));
        }
        let mu_l = node.measure_f64();
        partials
            .par_iter()
            .enumerate()
            .map(|(jslot, p)| {
                let j = DyadicInterval::from_slot(jslot);
                let mut fwd = None;
                let mut back = None;
                for (k, &s) in cand.intervals.iter().zip(&cand.signs) {
                    if let Some(c) = &p.col[k.slot()] {
                        accumulate(&mut fwd, c, s as f64 * k.measure_f64() / mu_l);
                    }
                    if let Some(c) = &p.row[k.slot()] {
                        accumulate(&mut back, c, s as f64);
                    }
                }
                let norm = |x: Option<Vec<f64>>| x.map_or(0.0, |v| l1_norm_f64(&v, n, n));
                let scale = space.mu_of(j) / space.mu_of(node);
                let target = e * 2f64.powi(-((node.code() + j.code()) as i32));
                (norm(fwd) * scale).max(norm(back) / scale) / target
            })
            .reduce(|| 0.0, f64::max)
    };
    greedy_system(m, out, cfg, &mut score)
}

fn stopping_diagnostic(s: &MixedOperator) -> Result<Option<StoppingDiagnostic>> {
    let family: Vec<HaarMultiplier> = s.entries().iter().filter(|e| !e.is_zero()).map(|e| nearest_multiplier(e).0).collect();
    if family.is_empty() || family[0].depth == 0 {
        return Ok(None);
    }
    let eta = scalar::ratio(1, 4);
    let sel = select_stopping_set(&family, &eta)?;
    Ok(Some(StoppingDiagnostic { eta, measure: sel.branches.measure(), achieved: sel.layers.iter().map(|l| l.achieved.clone()).collect() }))
}

/// Conjugates by an inner system that decouples distinct inner Haar
/// indices, then by an outer system suppressing the remaining off-diagonal
/// blocks, and keeps the `X`-diagonal part. The certificate error is the
/// measured `xdiagonal_distance` of the conjugated operator.
pub fn step1_diagonalize(t: &MixedOperator, eps: &Rational, out: (usize, usize), cfg: &BuilderConfig) -> Result<Step1Outcome> {
    let (n, m) = (t.outer_depth, t.inner_depth);
    let (n1, m1) = out;
    if n1 > n || m1 > m {
        return Err(Error::HostDepthExhausted(format!("output ({n1}, {m1}) exceeds host ({n}, {m})")));
    }
    let dom = MixedDomain;
    if t.is_xdiagonal() && out == (n, m) {
        let certificate = FactorCertificate::identity("diagonalize", t.clone(), TensorMap::identity(n, m));
        return Ok(Step1Outcome {
            operator: t.clone(),
            certificate,
            outer: FaithfulSystem::identity(n, n)?,
            inner: FaithfulSystem::identity(m, m)?,
            achieved: Rational::zero(),
            stopping: stopping_diagnostic(t)?,
            shortfall: false,
        });
    }
    let inner = inner_system(t, m1, eps, cfg)?;
    let (ai, bi) = inner_maps(&inner, n);
    let t1 = dom.conjugate(&bi, t, &ai)?;
    let offdiag: Vec<(DyadicInterval, DyadicInterval, &L1Operator)> = t1.blocks().filter(|(l, mm, _)| l != mm).collect();
    let weight = |l: DyadicInterval, mm: DyadicInterval| t1.block_scale(l, mm) * 2f64.powi((l.code() + mm.code()) as i32);
    let entries = t1.entries();
    let members: Vec<FamilyMember> = if offdiag.is_empty() {
        entries.iter().map(|e| FamilyMember { op: e, weight: 1.0, diagonal: false }).collect()
    } else {
        offdiag.iter().map(|(l, mm, b)| FamilyMember { op: b, weight: weight(*l, *mm), diagonal: true }).collect()
    };
    let schedule = pair_schedule(eps);
    let outer = build_system_for_family(&members, n1, &schedule, cfg)?;
    let a = TensorMap { outer: embedding(&outer)?, inner: InnerMap::embedding(&inner) };
    let b = TensorMap { outer: left_inverse(&outer)?, inner: InnerMap::left_inverse(&inner) };
    let image = dom.conjugate(&b, t, &a)?;
    let achieved = xdiagonal_distance(&image);
    let s = image.xdiagonal_part();
    let certificate = FactorCertificate::measured_with_image(&dom, "diagonalize", CertKind::ProjectionalFactor, a, b, t.clone(), s.clone(), &image)?;
    let shortfall = achieved > *eps;
    Ok(Step1Outcome { stopping: stopping_diagnostic(&s)?, operator: s, certificate, outer, inner, achieved, shortfall })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntryPairings {
    pub entry: DyadicInterval,
    /// `max |⟨h_I, S^L(|J|^{-1}h_J)⟩| / ε_{(I,J)}` over `I ≠ J`.
    pub worst_ratio: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step2Outcome {
    pub operator: MixedOperator,
    pub certificate: FactorCertificate<MixedDomain>,
    pub outer: FaithfulSystem,
    pub pairings: Vec<EntryPairings>,
    pub worst_ratio: f64,
    pub shortfall: bool,
}

/// `Σ_{L∈𝒟_k} |L| S^L`, the average of the entries on level `k`.
pub fn level_average(entries: &[L1Operator], k: usize) -> Result<L1Operator> {
    let mut acc = L1Operator::zero(entries[0].depth());
    for l in dyadic::level(k) {
        acc = acc.add(&entries[l.slot()].scale(&l.measure()))?;
    }
    Ok(acc)
}

/// One outer faithful system against every entry and the deepest level
/// average; the result stays `X`-diagonal and the certificate is exact.
pub fn step2_reduce(t: &MixedOperator, eps: &Rational, out_outer: usize, cfg: &BuilderConfig) -> Result<Step2Outcome> {
    if !t.is_xdiagonal() {
        return Err(Error::InvalidArgument("reduction needs an X-diagonal operator".into()));
    }
    let (n, m) = (t.outer_depth, t.inner_depth);
    if out_outer > n {
        return Err(Error::HostDepthExhausted(format!("outer output {out_outer} exceeds host {n}")));
    }
    let entries = t.entries();
    let mut ops: Vec<L1Operator> = entries.iter().filter(|e| !e.is_zero()).cloned().collect();
    if m > 0 {
        ops.push(level_average(&entries, m - 1)?);
    }
    if ops.is_empty() {
        ops.push(L1Operator::zero(n));
    }
    let members: Vec<FamilyMember> = ops.iter().map(|op| FamilyMember { op, weight: 1.0, diagonal: false }).collect();
    let schedule = pair_schedule(eps);
    let outer = build_system_for_family(&members, out_outer, &schedule, cfg)?;
    let (a, b) = outer_maps(&outer, m)?;
    let dom = MixedDomain;
    let image = dom.conjugate(&b, t, &a)?;
    let pairings: Vec<EntryPairings> = dyadic::intervals(m)
        .map(|l| {
            let p = achieved_pairings(&image.entry(l), &schedule);
            let worst_ratio = p.iter().map(|x| if x.target.is_zero() { 0.0 } else { scalar::to_f64(&(&x.value / &x.target)) }).fold(0.0, f64::max);
            EntryPairings { entry: l, worst_ratio, violations: p.iter().filter(|x| !x.within()).count() }
        })
        .collect();
    let worst_ratio = pairings.iter().map(|p| p.worst_ratio).fold(0.0, f64::max);
    let certificate = FactorCertificate::measured_with_image(&dom, "reduce", CertKind::ProjectionalFactor, a, b, t.clone(), image.clone(), &image)?;
    Ok(Step2Outcome { operator: image, certificate, outer, pairings, worst_ratio, shortfall: worst_ratio > 1.0 })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeStabilization {
    pub node: DyadicInterval,
    /// Host level of `Γ_L`.
    pub level: usize,
    pub cells: usize,
    #[serde(with = "scalar::serde_rational")]
    pub delta: Rational,
    /// `N(K, 1/2, δ_L)` for the values split at this node, when computed.
    pub required_n: Option<usize>,
    pub selection: Option<SignSelection>,
}

/// `‖S^L − S^M‖` against `ε|M|²` for `L ⊊ M`, keyed by `(ι(L), ι(M))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Deviation {
    pub l: u64,
    pub m: u64,
    #[serde(with = "scalar::serde_rational")]
    pub deviation: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub target: Rational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StableDiagonalReport {
    pub nodes: Vec<NodeStabilization>,
    pub deviations: Vec<Deviation>,
    /// `max ‖S^L − S^M‖ / (ε|M|²)`.
    pub worst_ratio: f64,
    pub schedule_met: bool,
    /// Largest nearest-multiplier off-diagonal bound over the input entries.
    #[serde(with = "scalar::serde_rational")]
    pub entry_offdiagonal: Rational,
    /// Limits of averages are replaced by averages at the deepest host level.
    pub finite_scale: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step3Outcome {
    pub operator: MixedOperator,
    pub certificate: FactorCertificate<MixedDomain>,
    pub inner: FaithfulSystem,
    pub report: StableDiagonalReport,
    pub shortfall: bool,
}

fn inside(m: DyadicInterval, l: DyadicInterval) -> bool {
    l != m && (m.is_empty() || m.contains(l))
}

/// The exact deviation table of an `X`-diagonal operator.
pub fn deviation_table(s: &MixedOperator, eps: &Rational) -> Vec<Deviation> {
    let entries = s.entries();
    let pairs: Vec<(DyadicInterval, DyadicInterval)> =
        dyadic::intervals(s.inner_depth).flat_map(|m| dyadic::intervals(s.inner_depth).filter(move |&l| inside(m, l)).map(move |l| (l, m))).collect();
    pairs
        .par_iter()
        .map(|&(l, m)| Deviation {
            l: l.code(),
            m: m.code(),
            deviation: entries[l.slot()].sub(&entries[m.slot()]).expect("same depth").norm_exact(),
            target: eps * m.measure() * m.measure(),
        })
        .collect()
}

fn worst(table: &[Deviation]) -> f64 {
    table.iter().map(|d| if d.target.is_zero() { 0.0 } else { scalar::to_f64(&(&d.deviation / &d.target)) }).fold(0.0, f64::max)
}

/// `δ_L = ε_parent / (3·2^{ι(L)})`, so `Σ_{L⊆M} δ_L ≤ ε_M / 3`.
pub fn delta_schedule(eps: &Rational, l: DyadicInterval) -> Rational {
    let parent = l.parent().unwrap_or(DyadicInterval::EMPTY);
    let e_parent = if l.is_empty() { eps.clone() } else { eps * parent.measure() * parent.measure() };
    e_parent / (scalar::int(3) * pow2(l.code() as i64))
}

/// An inner faithful system whose node `L` collects the cells `Γ_L` on host
/// level `ℓ_L`, with signs splitting every cell's two halves so that both
/// children average close to the parent. The entries of the result are the
/// averages `Σ_{K∈Γ_L} (|K|/|L|) R^K`, so the certificate is exact.
pub fn step3_stabilize(t: &MixedOperator, eps: &Rational, out_inner: usize, tries: usize, seed: u64) -> Result<Step3Outcome> {
    if !t.is_xdiagonal() {
        return Err(Error::InvalidArgument("stabilization needs an X-diagonal operator".into()));
    }
    let (n, m) = (t.outer_depth, t.inner_depth);
    if out_inner > m {
        return Err(Error::HostDepthExhausted(format!("inner output {out_inner} exceeds host {m}")));
    }
    let entries = t.entries();
    let entry_offdiagonal = entries.par_iter().map(|e| nearest_multiplier(e).1).max().unwrap_or_else(Rational::zero);
    let (inner, nodes) = if m == out_inner { (FaithfulSystem::identity(m, m)?, Vec::new()) } else { stable_system(&entries, m, out_inner, eps, tries, seed)? };
    let dom = MixedDomain;
    let (a, b) = inner_maps(&inner, n);
    let image = dom.conjugate(&b, t, &a)?;
    let deviations = deviation_table(&image, eps);
    let worst_ratio = worst(&deviations);
    let schedule_met = deviations.iter().all(|d| d.deviation <= d.target);
    let certificate = FactorCertificate::measured_with_image(&dom, "stabilize", CertKind::ProjectionalFactor, a, b, t.clone(), image.clone(), &image)?;
    let shortfall = !schedule_met || nodes.iter().any(|x| x.selection.as_ref().is_some_and(|s| !s.success));
    let report = StableDiagonalReport { nodes, deviations, worst_ratio, schedule_met, entry_offdiagonal, finite_scale: m > out_inner };
    Ok(Step3Outcome { operator: image, certificate, inner, report, shortfall })
}

fn stable_system(entries: &[L1Operator], m: usize, out: usize, eps: &Rational, tries: usize, seed: u64) -> Result<(FaithfulSystem, Vec<NodeStabilization>)> {
    // ℓ_∅ = m − out − 1 and ℓ_L = m − out + level(L)
    let base = m - out - 1;
    let host_level = |l: DyadicInterval| l.level().map_or(base, |k| base + 1 + k);
    let h0 = |k: DyadicInterval| -> i8 {
        // ĥ_∅ = Σ_{M∈𝒟_{ℓ_∅}} h_M is +1 on left halves
        let (lo, _, depth) = k.endpoints();
        let shift = depth - base - 1;
        if (lo >> shift).is_multiple_of(2) {
            1
        } else {
            -1
        }
    };
    let mut blocks: Vec<Block> = vec![Block { intervals: dyadic::level(base).collect(), signs: vec![1; 1 << base] }];
    let mut nodes = vec![NodeStabilization {
        node: DyadicInterval::EMPTY,
        level: base,
        cells: 1 << base,
        delta: delta_schedule(eps, DyadicInterval::EMPTY),
        required_n: None,
        selection: None,
    }];
    let mut regions: Vec<Vec<DyadicInterval>> = vec![Vec::new(); 1 << out];
    if out > 0 {
        regions[DyadicInterval::UNIT.slot()] = dyadic::level(base + 1).collect();
    }
    for slot in 1..1usize << out {
        let node = DyadicInterval::from_slot(slot);
        let cells = std::mem::take(&mut regions[slot]);
        let delta = delta_schedule(eps, node);
        let has_children = node.level().unwrap() + 1 < out;
        let (signs, selection, required) = if has_children {
            let pairs: Vec<(L1Operator, L1Operator)> = cells
                .iter()
                .map(|&k| {
                    let (left, right) = (entries[k.left().slot()].clone(), entries[k.right().unwrap().slot()].clone());
                    if h0(k) == 1 {
                        (right, left)
                    } else {
                        (left, right)
                    }
                })
                .collect();
            let required = (pairs.len() <= NET_PAIRS)
                .then(|| {
                    let values: Vec<L1Operator> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
                    required_n(&values, &scalar::ratio(1, 2), &delta).ok()
                })
                .flatten();
            let g = DoubletonSpace::new(pairs)?;
            let sel = if g.len() <= EXHAUSTIVE_SIGNS {
                sign_select_exhaustive(&g, &delta)?
            } else {
                sign_select(&g, &delta, seed ^ (slot as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), tries)?
            };
            let mut left = Vec::with_capacity(cells.len());
            let mut right = Vec::with_capacity(cells.len());
            for (&k, &z) in cells.iter().zip(&sel.zeta) {
                let (kl, kr) = (k.left(), k.right().unwrap());
                if z * h0(k) == 1 {
                    left.push(kl);
                    right.push(kr);
                } else {
                    left.push(kr);
                    right.push(kl);
                }
            }
            left.sort();
            right.sort();
            regions[node.left().slot()] = left;
            regions[node.right().unwrap().slot()] = right;
            (sel.zeta.clone(), Some(sel), required)
        } else {
            (vec![1; cells.len()], None, None)
        };
        nodes.push(NodeStabilization { node, level: host_level(node), cells: cells.len(), delta, required_n: required, selection });
        blocks.push(Block { intervals: cells, signs });
    }
    let sys = FaithfulSystem { out_depth: out, host_depth: m, blocks };
    sys.check_report().map_err(|e| Error::VerificationFailed(format!("stabilizing system: {e}")))?;
    Ok((sys, nodes))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step4Outcome {
    /// `T⁰ = S^∅`.
    pub t0: L1Operator,
    pub certificate: FactorCertificate<MixedDomain>,
    pub bound: CollapseBound,
    /// `ε 2^{-n+1}` for each telescoping term.
    #[serde(with = "scalar::serde_rational_vec")]
    pub telescoping_targets: Vec<Rational>,
    pub lower_estimate: f64,
    pub schedule_met: bool,
    pub worst_ratio: f64,
    /// The certified bound exceeds `7ε`.
    pub shortfall: bool,
}

/// `S → S^∅ ⊗ Id` with the certified bound of [`collapse_bound`]. With
/// `strict`, a deviation table outside the `ε|M|²` schedule is an error.
pub fn step4_collapse(s: &MixedOperator, eps: &Rational, strict: bool, samples: usize, seed: u64) -> Result<Step4Outcome> {
    if !s.is_xdiagonal() {
        return Err(Error::InvalidArgument("collapse needs an X-diagonal operator".into()));
    }
    let table = deviation_table(s, eps);
    let schedule_met = table.iter().all(|d| d.deviation <= d.target);
    let worst_ratio = worst(&table);
    if strict && !schedule_met {
        return Err(Error::BudgetShortfall(format!("deviation table exceeds the ε|M|² schedule by a factor {worst_ratio:.3}")));
    }
    let entries = s.entries();
    let t0 = entries[0].clone();
    let bound = collapse_bound(&entries);
    let target = MixedOperator::diagonal_tensor(&t0, s.inner_depth, s.space.clone())?;
    let dom = MixedDomain;
    let id = TensorMap::identity(s.outer_depth, s.inner_depth);
    let certificate = FactorCertificate::measured_with_image(&dom, "collapse", CertKind::ProjectionalFactor, id.clone(), id, s.clone(), target.clone(), s)?;
    let diff = s.sub(&target)?;
    let lower_estimate = if diff.blocks().next().is_none() { 0.0 } else { mixed_norm_bounds(&diff, samples.max(1), seed)?.lower };
    let telescoping_targets = (0..bound.telescoping.len()).map(|k| eps * pow2(1 - k as i64)).collect();
    let shortfall = bound.total > eps * scalar::int(7);
    Ok(Step4Outcome { t0, certificate, bound, telescoping_targets, lower_estimate, schedule_met, worst_ratio, shortfall })
}

/// `Id ⊗ Id` on `(n, m)`.
pub fn identity_certificate(stage: &str, t: &MixedOperator) -> FactorCertificate<MixedDomain> {
    FactorCertificate::identity(stage, t.clone(), TensorMap::identity(t.outer_depth, t.inner_depth))
}
