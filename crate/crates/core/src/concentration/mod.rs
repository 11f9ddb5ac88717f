//! Concentration on doubleton spaces, covering numbers, derandomized sign
//! selection and finite Rosenthal extraction.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::op1::L1Operator;
use crate::scalar::{self, Rational};

/// Values with a linear structure and an exactly computable norm.
pub trait NormedValue: Clone + PartialEq {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, c: &Rational) -> Self;
    fn distance(&self, other: &Self) -> Rational;
    fn norm(&self) -> Rational;
}

impl NormedValue for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale(&self, c: &Rational) -> Self {
        self * c
    }
    fn distance(&self, other: &Self) -> Rational {
        (self - other).abs()
    }
    fn norm(&self) -> Rational {
        self.abs()
    }
}

/// Operators measured in the exact `L₁` operator norm.
impl NormedValue for L1Operator {
    fn zero_like(&self) -> Self {
        L1Operator::zero_rect(self.cod_depth, self.dom_depth)
    }
    fn add(&self, other: &Self) -> Self {
        L1Operator::add(self, other).expect("same shape")
    }
    fn scale(&self, c: &Rational) -> Self {
        L1Operator::scale(self, c)
    }
    fn distance(&self, other: &Self) -> Rational {
        self.sub(other).expect("same shape").norm_exact()
    }
    fn norm(&self) -> Rational {
        self.norm_exact()
    }
}

/// `N` pairs `(G(ω_n^{-1}), G(ω_n^{+1}))` with the uniform probability.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubletonSpace<V> {
    pub pairs: Vec<(V, V)>,
}

impl<V: NormedValue> DoubletonSpace<V> {
    pub fn new(pairs: Vec<(V, V)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("a doubleton space needs at least one pair".into()));
        }
        Ok(DoubletonSpace { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `E(G) = (2N)^{-1} Σ G`.
    pub fn mean(&self) -> V {
        let z = self.pairs[0].0.zero_like();
        let s = self.pairs.iter().fold(z, |acc, (a, b)| acc.add(a).add(b));
        s.scale(&Rational::new(1.into(), (2 * self.len()).into()))
    }

    /// `M = max ‖G(ω)‖`.
    pub fn bound(&self) -> Rational {
        self.pairs.iter().flat_map(|(a, b)| [a.norm(), b.norm()]).max().unwrap_or_else(Rational::zero)
    }

    /// `Φ(ζ) = N^{-1} Σ_n G(ω_n^{ζ_n})`.
    pub fn phi(&self, zeta: &[i8]) -> V {
        let z = self.pairs[0].0.zero_like();
        let s = self.pairs.iter().zip(zeta).fold(z, |acc, ((a, b), &t)| acc.add(if t < 0 { a } else { b }));
        s.scale(&Rational::new(1.into(), self.len().into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingStatistics {
    #[serde(with = "scalar::serde_rational")]
    pub mean: Rational,
    #[serde(with = "scalar::serde_rational")]
    pub variance: Rational,
    /// `M² / N`.
    #[serde(with = "scalar::serde_rational")]
    pub variance_bound: Rational,
}

/// `E(Φ) = E(G)` and `Var(Φ) = N^{-2} Σ (G(ω_n^{-1}) − G(ω_n^{+1}))² / 4`.
pub fn splitting_statistics(g: &DoubletonSpace<Rational>) -> SplittingStatistics {
    let n = Rational::from_integer(g.len().into());
    let four = Rational::from_integer(4.into());
    let s: Rational = g.pairs.iter().map(|(a, b)| (a - b) * (a - b) / &four).sum();
    let m = g.bound();
    SplittingStatistics { mean: g.mean(), variance: s / (&n * &n), variance_bound: &m * &m / n }
}

/// Largest `N` accepted by [`exhaustive_statistics`].
pub const EXHAUSTIVE_MAX: usize = 20;

/// The same statistics by enumerating all `2^N` sign vectors.
pub fn exhaustive_statistics(g: &DoubletonSpace<Rational>) -> Result<SplittingStatistics> {
    let n = g.len();
    if n > EXHAUSTIVE_MAX {
        return Err(Error::TooLarge(n));
    }
    let count = Rational::from_integer((1u64 << n).into());
    let values = all_phi(g);
    let mean: Rational = values.iter().sum::<Rational>() / &count;
    let variance: Rational = values.iter().map(|v| (v - &mean) * (v - &mean)).sum::<Rational>() / &count;
    let m = g.bound();
    Ok(SplittingStatistics { mean, variance, variance_bound: &m * &m / Rational::from_integer(n.into()) })
}

/// `Φ(ζ)` for every `ζ`, bit `n` of the index set meaning `ζ_n = +1`.
fn all_phi(g: &DoubletonSpace<Rational>) -> Vec<Rational> {
    let mut sums = vec![Rational::zero()];
    for (a, b) in &g.pairs {
        let mut next = Vec::with_capacity(sums.len() * 2);
        for bit in [a, b] {
            next.extend(sums.iter().map(|s| s + bit));
        }
        sums = next;
    }
    let n = Rational::from_integer(g.len().into());
    sums.into_iter().map(|s| s / &n).collect()
}

/// `P(|Φ − E(G)| ≥ η)` exactly and the bound `M² / (N η²)`.
pub fn chebyshev_tail(g: &DoubletonSpace<Rational>, eta: &Rational) -> Result<(Rational, Rational)> {
    if !eta.is_positive() {
        return Err(Error::InvalidArgument("η must be positive".into()));
    }
    if g.len() > EXHAUSTIVE_MAX {
        return Err(Error::TooLarge(g.len()));
    }
    let mean = g.mean();
    let values = all_phi(g);
    let hits = values.iter().filter(|v| (*v - &mean).abs() >= *eta).count();
    let p = Rational::new(hits.into(), values.len().into());
    let m = g.bound();
    Ok((p, &m * &m / (Rational::from_integer(g.len().into()) * eta * eta)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Net<V> {
    pub centers: Vec<V>,
    pub radius: Rational,
}

impl<V> Net<V> {
    pub fn size(&self) -> usize {
        self.centers.len()
    }
}

/// The points sampled from `conv(K ∪ −K)`: `K`, `−K` and all pairwise midpoints.
pub fn hull_sample<V: NormedValue>(k: &[V]) -> Vec<V> {
    let half = Rational::new(1.into(), 2.into());
    let minus = Rational::from_integer((-1).into());
    let mut pts: Vec<V> = Vec::new();
    for p in k.iter().cloned().chain(k.iter().map(|p| p.scale(&minus))) {
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let base = pts.len();
    for i in 0..base {
        for j in i + 1..base {
            let mid = pts[i].add(&pts[j]).scale(&half);
            if !pts.contains(&mid) {
                pts.push(mid);
            }
        }
    }
    pts
}

/// Greedy cover of [`hull_sample`] by `η/3`-balls centered at sample
/// points; always covers every point of `K`.
pub fn net_size<V: NormedValue>(k: &[V], eta: &Rational) -> Result<Net<V>> {
    if !eta.is_positive() {
        return Err(Error::InvalidArgument("η must be positive".into()));
    }
    let radius = eta / Rational::from_integer(3.into());
    if k.is_empty() {
        return Ok(Net { centers: Vec::new(), radius });
    }
    let pts = hull_sample(k);
    let covers: Vec<Vec<bool>> = pts.iter().map(|c| pts.iter().map(|p| c.distance(p) <= radius).collect()).collect();
    let mut covered = vec![false; pts.len()];
    let mut centers = Vec::new();
    // the first points of the sample are K itself; they break ties
    let in_k = k.iter().enumerate().filter(|(i, p)| !k[..*i].contains(p)).count();
    while covered.iter().any(|c| !c) {
        let (best, _) = covers
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let fresh = |r: &[bool], d: &[bool]| r.iter().zip(d).filter(|(c, done)| **c && !**done).count();
                (i, (fresh(row, &covered), fresh(&row[..in_k], &covered[..in_k])))
            })
            .fold((0, (0, 0)), |a, b| if b.1 > a.1 { b } else { a });
        for (done, c) in covered.iter_mut().zip(&covers[best]) {
            *done |= *c;
        }
        centers.push(pts[best].clone());
    }
    Ok(Net { centers, radius })
}

/// Every point of `K` lies within the net radius of some center.
pub fn is_cover<V: NormedValue>(k: &[V], net: &Net<V>) -> bool {
    k.iter().all(|p| net.centers.iter().any(|c| c.distance(p) <= net.radius))
}

/// `⌈9 d M² / (ε η²)⌉`.
pub fn required_n_formula(d: usize, m: &Rational, eps: &Rational, eta: &Rational) -> Result<usize> {
    if !eps.is_positive() || !eta.is_positive() {
        return Err(Error::InvalidArgument("ε and η must be positive".into()));
    }
    let x = Rational::from_integer((9 * d).into()) * m * m / (eps * eta * eta);
    let c = x.ceil().to_integer();
    usize::try_from(c).map_err(|_| Error::TooLarge(usize::MAX))
}

/// [`required_n_formula`] with `d = d(K, η)` from [`net_size`] and
/// `M = max_K ‖k‖`.
pub fn required_n<V: NormedValue>(k: &[V], eps: &Rational, eta: &Rational) -> Result<usize> {
    let net = net_size(k, eta)?;
    let m = k.iter().map(NormedValue::norm).max().unwrap_or_else(Rational::zero);
    required_n_formula(net.size(), &m, eps, eta)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignSelection {
    pub zeta: Vec<i8>,
    #[serde(with = "scalar::serde_rational")]
    pub deviation: Rational,
    /// Draws made; each draw evaluates `ζ` and `−ζ`.
    pub tries: usize,
    pub success: bool,
}

fn better(a: &(Rational, Vec<i8>), b: &(Rational, Vec<i8>)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Random search for `‖Φ(ζ) − E(G)‖ ≤ η`, pairing every draw `ζ` with `−ζ`.
/// Returns the first success, otherwise the best deviation seen; ties go to
/// the lexicographically smallest `ζ`.
pub fn sign_select<V: NormedValue>(g: &DoubletonSpace<V>, eta: &Rational, seed: u64, tries: usize) -> Result<SignSelection> {
    if tries == 0 {
        return Err(Error::InvalidArgument("tries must be at least 1".into()));
    }
    let mean = g.mean();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Rational, Vec<i8>)> = None;
    for t in 1..=tries {
        let zeta: Vec<i8> = (0..g.len()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let neg: Vec<i8> = zeta.iter().map(|z| -z).collect();
        let mut pair: Vec<(Rational, Vec<i8>)> = [zeta, neg].into_iter().map(|z| (g.phi(&z).distance(&mean), z)).collect();
        if better(&pair[1], &pair[0]) {
            pair.swap(0, 1);
        }
        let cand = pair.swap_remove(0);
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
        let b = best.as_ref().unwrap();
        if &b.0 <= eta {
            return Ok(SignSelection { zeta: b.1.clone(), deviation: b.0.clone(), tries: t, success: true });
        }
    }
    let (deviation, zeta) = best.unwrap();
    Ok(SignSelection { zeta, deviation, tries, success: false })
}

/// The minimal deviation over all `2^N` sign vectors, lexicographically
/// smallest `ζ` on ties.
pub fn sign_select_exhaustive<V: NormedValue>(g: &DoubletonSpace<V>, eta: &Rational) -> Result<SignSelection> {
    let n = g.len();
    if n > EXHAUSTIVE_MAX {
        return Err(Error::TooLarge(n));
    }
    let mean = g.mean();
    let mut best: Option<(Rational, Vec<i8>)> = None;
    for mask in 0..1u64 << n {
        // lexicographic order with −1 < +1, leading coordinate most significant
        let zeta: Vec<i8> = (0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { 1 } else { -1 }).collect();
        let cand = (g.phi(&zeta).distance(&mean), zeta);
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    let (deviation, zeta) = best.unwrap();
    Ok(SignSelection { success: &deviation <= eta, zeta, deviation, tries: 1 << n })
}

/// Off-diagonal mass `Σ_{j∈S, j≠i} |ξ_i(j)|` of row `i` over `S`.
pub fn offdiagonal_mass(rows: &[Vec<Rational>], set: &[usize], i: usize) -> Rational {
    set.iter().filter(|&&j| j != i).map(|&j| rows[i].get(j).map_or_else(Rational::zero, |v| v.abs())).sum()
}

/// Every selected row has off-diagonal mass at most `ε` over the selection.
pub fn rosenthal_predicate(rows: &[Vec<Rational>], set: &[usize], eps: &Rational) -> bool {
    set.iter().all(|&i| &offdiagonal_mass(rows, set, i) <= eps)
}

/// A large subset `S` with `Σ_{j∈S, j≠i} |ξ_i(j)| ≤ ε` for all `i ∈ S`:
/// greedy removal of the worst index, then add-back in index order.
pub fn rosenthal_extract(rows: &[Vec<Rational>], eps: &Rational) -> Result<Vec<usize>> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let mut set: Vec<usize> = (0..rows.len()).collect();
    let mut removed = Vec::new();
    loop {
        let excess: Vec<(usize, Rational)> = set
            .iter()
            .map(|&i| {
                let row = offdiagonal_mass(rows, &set, i);
                let col: Rational = set.iter().filter(|&&j| j != i).map(|&j| rows[j].get(i).map_or_else(Rational::zero, |v| v.abs())).sum();
                (i, if &row > eps { &row - eps + col } else { col })
            })
            .collect();
        if rosenthal_predicate(rows, &set, eps) {
            break;
        }
        let worst = excess.iter().fold(&excess[0], |a, b| if b.1 > a.1 { b } else { a }).0;
        set.retain(|&i| i != worst);
        removed.push(worst);
    }
    removed.sort_unstable();
    for r in removed {
        let mut trial = set.clone();
        trial.push(r);
        trial.sort_unstable();
        if rosenthal_predicate(rows, &trial, eps) {
            set = trial;
        }
    }
    if !rosenthal_predicate(rows, &set, eps) {
        return Err(Error::VerificationFailed("Rosenthal selection violates its predicate".into()));
    }
    Ok(set)
}
