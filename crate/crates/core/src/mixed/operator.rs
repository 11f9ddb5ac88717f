//! Block representation of operators on truncated `L₁(X)`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MixedFunction;
use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::op1::L1Operator;
use crate::scalar::Rational;
use crate::stepfun::{haar_analysis, HaarSystemSpace, Space, SpaceDescriptor, StepFunction};

/// Largest `n + m` for dense block storage.
pub const DENSE_CAP: usize = 12;

/// Default memory ceiling for dense constructions, in bytes.
pub const DEFAULT_MEMORY_LIMIT: usize = 1 << 31;

/// Bytes a fully dense operator would need, at a nominal 64 bytes per entry.
pub fn memory_estimate(outer_depth: usize, inner_depth: usize) -> usize {
    64usize.saturating_mul(1usize.checked_shl(2 * (outer_depth + inner_depth) as u32).unwrap_or(usize::MAX))
}

/// `T u = Σ_{L,M} C^{(L,M)}(c_M) ⊗ h_L` where `u(s, ·) = Σ_M c_M(s) h_M`.
///
/// Blocks are stored in the coefficient normalization `C^{(L,M)}`; the
/// block `T^{(L,M)} = q^L T j^M` between normalized Haar functions is
/// `(μ_M / μ_L) C^{(L,M)}`. Missing blocks are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedOperator {
    pub outer_depth: usize,
    pub inner_depth: usize,
    pub space: Space,
    blocks: BTreeMap<(DyadicInterval, DyadicInterval), L1Operator>,
}

impl MixedOperator {
    pub fn zero(outer_depth: usize, inner_depth: usize, space: Space) -> Result<Self> {
        if outer_depth + inner_depth > DENSE_CAP {
            return Err(Error::TooLarge(outer_depth + inner_depth));
        }
        Ok(MixedOperator { outer_depth, inner_depth, space, blocks: BTreeMap::new() })
    }

    /// `S ⊗ Id`.
    pub fn diagonal_tensor(s: &L1Operator, inner_depth: usize, space: Space) -> Result<Self> {
        let mut t = Self::zero(s.depth(), inner_depth, space)?;
        for l in dyadic::intervals(inner_depth) {
            t.set_block(l, l, s.clone())?;
        }
        Ok(t)
    }

    pub fn identity(outer_depth: usize, inner_depth: usize, space: Space) -> Result<Self> {
        Self::diagonal_tensor(&L1Operator::identity(outer_depth), inner_depth, space)
    }

    pub fn scalar(outer_depth: usize, inner_depth: usize, space: Space, c: Rational) -> Result<Self> {
        Self::diagonal_tensor(&L1Operator::scalar(outer_depth, c), inner_depth, space)
    }

    /// `S ⊗ R` with `R` an operator on the inner grid, in Haar matrix form.
    pub fn tensor(s: &L1Operator, r: &L1Operator, space: Space) -> Result<Self> {
        let m = r.depth();
        let mut t = Self::zero(s.depth(), m, space)?;
        for l in dyadic::intervals(m) {
            for mm in dyadic::intervals(m) {
                // R h_M = Σ_L r_{LM} h_L with r_{LM} = M_R[L][M] |M| / |L|
                let v = r.get(l, mm);
                if !v.is_zero() {
                    let c = v * mm.measure() / l.measure();
                    t.set_block(l, mm, s.scale(&c))?;
                }
            }
        }
        Ok(t)
    }

    /// Builds the coefficient blocks from a dense matrix on grid values,
    /// `matrix[r][c]` mapping input cell `c` to output cell `r`.
    pub fn block_decompose(outer_depth: usize, inner_depth: usize, space: Space, matrix: &[Vec<Rational>]) -> Result<Self> {
        let dim = 1usize << (outer_depth + inner_depth);
        if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument(format!("expected a {dim}×{dim} matrix")));
        }
        if memory_estimate(outer_depth, inner_depth) > DEFAULT_MEMORY_LIMIT {
            return Err(Error::TooLarge(outer_depth + inner_depth));
        }
        let act = |u: &MixedFunction| -> MixedFunction {
            let values = matrix.iter().map(|row| row.iter().zip(&u.values).filter(|(_, b)| !b.is_zero()).map(|(a, b)| a * b).sum()).collect();
            MixedFunction { outer_depth, inner_depth, values }
        };
        Self::from_action(outer_depth, inner_depth, space, act)
    }

    /// Builds the coefficient blocks of a linear action.
    pub fn from_action(outer_depth: usize, inner_depth: usize, space: Space, act: impl Fn(&MixedFunction) -> MixedFunction + Sync) -> Result<Self> {
        let mut t = Self::zero(outer_depth, inner_depth, space)?;
        let (n, m) = (outer_depth, inner_depth);
        let inputs: Vec<(DyadicInterval, DyadicInterval)> = dyadic::intervals(m).flat_map(|mm| dyadic::intervals(n).map(move |j| (mm, j))).collect();
        // column J of every block C^{(L,M)} from T((|J|^{-1} h_J) ⊗ h_M)
        let cols: Vec<Vec<Vec<Rational>>> = inputs
            .par_iter()
            .map(|&(mm, j)| {
                let hj = StepFunction::haar(n, j).expect("within depth");
                let f = StepFunction { depth: n, values: hj.values.iter().map(|v| v / j.measure()).collect() };
                let u = MixedFunction::tensor(&f, &StepFunction::haar(m, mm).expect("within depth"));
                act(&u)
                    .coefficients()
                    .iter()
                    .map(|g| {
                        let c = haar_analysis(g);
                        c.coeffs.iter().enumerate().map(|(r, v)| v * DyadicInterval::from_slot(r).measure()).collect()
                    })
                    .collect()
            })
            .collect();
        for (&(mm, j), col) in inputs.iter().zip(cols) {
            for (lslot, entries) in col.into_iter().enumerate() {
                if entries.iter().all(|v| v.is_zero()) {
                    continue;
                }
                let l = DyadicInterval::from_slot(lslot);
                let b = t.blocks.entry((l, mm)).or_insert_with(|| L1Operator::zero(n));
                for (r, v) in entries.into_iter().enumerate() {
                    *b.at_mut(r, j.slot()) = v;
                }
            }
        }
        Ok(t)
    }

    /// Dense matrix on grid values, `out[r][c]` as in [`Self::block_decompose`].
    pub fn to_dense(&self) -> Result<Vec<Vec<Rational>>> {
        let dim = 1usize << (self.outer_depth + self.inner_depth);
        let cols: Vec<Vec<Rational>> = (0..dim)
            .into_par_iter()
            .map(|c| {
                let mut u = MixedFunction::zero(self.outer_depth, self.inner_depth);
                u.values[c] = Rational::one();
                self.apply(&u).map(|v| v.values)
            })
            .collect::<Result<_>>()?;
        Ok((0..dim).map(|r| cols.iter().map(|col| col[r].clone()).collect()).collect())
    }

    fn check(&self, l: DyadicInterval, m: DyadicInterval) -> Result<()> {
        for i in [l, m] {
            if i.level().is_some_and(|j| j >= self.inner_depth) {
                return Err(Error::BelowTruncation(i, self.inner_depth));
            }
        }
        Ok(())
    }

    /// `C^{(L,M)}`, or `None` for a zero block.
    pub fn block(&self, l: DyadicInterval, m: DyadicInterval) -> Option<&L1Operator> {
        self.blocks.get(&(l, m))
    }

    pub fn block_or_zero(&self, l: DyadicInterval, m: DyadicInterval) -> L1Operator {
        self.block(l, m).cloned().unwrap_or_else(|| L1Operator::zero(self.outer_depth))
    }

    pub fn set_block(&mut self, l: DyadicInterval, m: DyadicInterval, b: L1Operator) -> Result<()> {
        self.check(l, m)?;
        if !b.is_square() || b.depth() != self.outer_depth {
            return Err(Error::DepthMismatch { expected: self.outer_depth, found: b.depth() });
        }
        if b.is_zero() {
            self.blocks.remove(&(l, m));
        } else {
            self.blocks.insert((l, m), b);
        }
        Ok(())
    }

    pub fn blocks(&self) -> impl Iterator<Item = (DyadicInterval, DyadicInterval, &L1Operator)> {
        self.blocks.iter().map(|((l, m), b)| (*l, *m, b))
    }

    /// Diagonal entry `S^L = C^{(L,L)} = T^{(L,L)}`.
    pub fn entry(&self, l: DyadicInterval) -> L1Operator {
        self.block_or_zero(l, l)
    }

    pub fn entries(&self) -> Vec<L1Operator> {
        dyadic::intervals(self.inner_depth).map(|l| self.entry(l)).collect()
    }

    /// The `X`-diagonal operator with entries `S^L`, indexed by inner slot.
    pub fn from_entries(entries: &[L1Operator], space: Space) -> Result<Self> {
        let m = entries.len().trailing_zeros() as usize;
        if entries.len() != 1 << m || entries.is_empty() {
            return Err(Error::InvalidArgument("entry count must be a power of two".into()));
        }
        let mut t = Self::zero(entries[0].depth(), m, space)?;
        for (slot, e) in entries.iter().enumerate() {
            let l = DyadicInterval::from_slot(slot);
            t.set_block(l, l, e.clone())?;
        }
        Ok(t)
    }

    pub fn is_xdiagonal(&self) -> bool {
        self.blocks.keys().all(|(l, m)| l == m)
    }

    /// `T̄`, the operator keeping only the blocks `C^{(L,L)}`.
    pub fn xdiagonal_part(&self) -> Self {
        let blocks = self.blocks.iter().filter(|((l, m), _)| l == m).map(|(k, v)| (*k, v.clone())).collect();
        MixedOperator { blocks, ..self.header() }
    }

    fn header(&self) -> Self {
        MixedOperator { outer_depth: self.outer_depth, inner_depth: self.inner_depth, space: self.space.clone(), blocks: BTreeMap::new() }
    }

    /// The common value if all diagonal entries agree and nothing else is set.
    pub fn as_diagonal_tensor(&self) -> Option<L1Operator> {
        if !self.is_xdiagonal() {
            return None;
        }
        let first = self.entry(DyadicInterval::EMPTY);
        dyadic::intervals(self.inner_depth).all(|l| self.entry(l) == first).then_some(first)
    }

    pub fn is_identity(&self) -> bool {
        self.as_diagonal_tensor().is_some_and(|s| s.is_identity())
    }

    fn same_shape(&self, rhs: &MixedOperator) -> Result<()> {
        if self.outer_depth != rhs.outer_depth {
            return Err(Error::DepthMismatch { expected: self.outer_depth, found: rhs.outer_depth });
        }
        if self.inner_depth != rhs.inner_depth {
            return Err(Error::DepthMismatch { expected: self.inner_depth, found: rhs.inner_depth });
        }
        if self.space != rhs.space {
            return Err(Error::InvalidArgument("operators act on different spaces".into()));
        }
        Ok(())
    }

    fn combine(&self, rhs: &MixedOperator, sign: i64) -> Result<Self> {
        self.same_shape(rhs)?;
        let mut out = self.clone();
        let s = Rational::from_integer(sign.into());
        for (k, b) in &rhs.blocks {
            let nb = match out.blocks.get(k) {
                Some(a) => a.add(&b.scale(&s))?,
                None => b.scale(&s),
            };
            out.set_block(k.0, k.1, nb)?;
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &MixedOperator) -> Result<Self> {
        self.combine(rhs, 1)
    }

    pub fn sub(&self, rhs: &MixedOperator) -> Result<Self> {
        self.combine(rhs, -1)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.header();
        if !c.is_zero() {
            out.blocks = self.blocks.iter().map(|(k, b)| (*k, b.scale(c))).collect();
        }
        out
    }

    /// `self ∘ rhs`: `C^{(L,M)} = Σ_K A^{(L,K)} B^{(K,M)}`.
    pub fn compose(&self, rhs: &MixedOperator) -> Result<Self> {
        self.same_shape(rhs)?;
        let mut acc: BTreeMap<(DyadicInterval, DyadicInterval), L1Operator> = BTreeMap::new();
        for ((l, k), a) in &self.blocks {
            for ((_, m), b) in rhs.blocks.range((*k, DyadicInterval::EMPTY)..).take_while(|((kk, _), _)| kk == k) {
                let p = a.compose(b)?;
                match acc.get_mut(&(*l, *m)) {
                    Some(x) => *x = x.add(&p)?,
                    None => {
                        acc.insert((*l, *m), p);
                    }
                }
            }
        }
        let mut out = self.header();
        for ((l, m), b) in acc {
            out.set_block(l, m, b)?;
        }
        Ok(out)
    }

    pub fn apply(&self, u: &MixedFunction) -> Result<MixedFunction> {
        if u.outer_depth != self.outer_depth || u.inner_depth != self.inner_depth {
            return Err(Error::DepthMismatch { expected: self.outer_depth, found: u.outer_depth });
        }
        let c = u.coefficients();
        let mut out = vec![StepFunction::zero(self.outer_depth); 1 << self.inner_depth];
        for ((l, m), b) in &self.blocks {
            let img = b.apply(&c[m.slot()])?;
            let o = &mut out[l.slot()];
            for (x, y) in o.values.iter_mut().zip(img.values) {
                *x += y;
            }
        }
        MixedFunction::from_coefficients(self.inner_depth, &out)
    }
}

/// `blocks` is keyed by `"ι(L),ι(M)"`.
#[derive(Serialize, Deserialize)]
struct Repr {
    n: usize,
    m: usize,
    space: SpaceDescriptor,
    blocks: BTreeMap<String, L1Operator>,
}

impl Serialize for MixedOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self.blocks.iter().map(|((l, m), b)| (format!("{},{}", l.code(), m.code()), b.clone())).collect();
        Repr { n: self.outer_depth, m: self.inner_depth, space: self.space.descriptor(), blocks }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixedOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Repr::deserialize(d)?;
        let space = Space::from_descriptor(&r.space).map_err(D::Error::custom)?;
        let mut t = MixedOperator::zero(r.n, r.m, space).map_err(D::Error::custom)?;
        for (k, b) in r.blocks {
            let (a, c) = k.split_once(',').ok_or_else(|| D::Error::custom(format!("bad block key {k:?}")))?;
            let code = |x: &str| x.trim().parse::<u64>().map_err(D::Error::custom).and_then(|c| DyadicInterval::from_code(c).map_err(D::Error::custom));
            t.set_block(code(a)?, code(c)?, b).map_err(D::Error::custom)?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::HaarMultiplier;
    use crate::scalar::{int, ratio};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op(n: usize, seed: u64) -> L1Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k: Vec<Rational> = (0..1usize << (2 * n)).map(|_| ratio(rng.gen_range(-4..=4), 4)).collect();
        L1Operator::from_coefficient_matrix(n, n, |r, c| k[(r << n) + c].clone())
    }

    #[test]
    fn tensor_with_identity_is_diagonal() {
        let s = random_op(2, 1);
        let t = MixedOperator::tensor(&s, &L1Operator::identity(2), Space::l1()).unwrap();
        assert!(t.is_xdiagonal());
        assert_eq!(t.as_diagonal_tensor(), Some(s.clone()));
        let f = StepFunction { depth: 2, values: vec![int(1), int(0), int(-1), int(2)] };
        let h = StepFunction::haar(2, DyadicInterval::new(1, 0)).unwrap();
        let img = t.apply(&MixedFunction::tensor(&f, &h)).unwrap();
        assert_eq!(img, MixedFunction::tensor(&s.apply(&f).unwrap(), &h));
        assert!(MixedOperator::identity(2, 2, Space::l1()).unwrap().is_identity());
    }

    #[test]
    fn identity_tensor_inner_projection() {
        // R = projection onto the span of h_L with ι(L) ≤ 3
        let r = L1Operator::from_multiplier(&HaarMultiplier::from_fn(2, |l| if l.code() <= 3 { int(1) } else { int(0) }));
        let t = MixedOperator::tensor(&L1Operator::identity(2), &r, Space::l1()).unwrap();
        for l in dyadic::intervals(2) {
            assert_eq!(t.entry(l).is_identity(), l.code() <= 3);
            assert_eq!(t.entry(l).is_zero(), l.code() > 3);
        }
    }

    #[test]
    fn dense_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dim = 1 << 6;
        let matrix: Vec<Vec<Rational>> = (0..dim).map(|_| (0..dim).map(|_| int(rng.gen_range(-3..=3))).collect()).collect();
        let t = MixedOperator::block_decompose(3, 3, Space::l1(), &matrix).unwrap();
        assert_eq!(t.to_dense().unwrap(), matrix);
        let t2 = MixedOperator::block_decompose(3, 3, Space::l1(), &t.to_dense().unwrap()).unwrap();
        assert_eq!(t2, t);
    }

    #[test]
    fn composition_of_tensors() {
        let (a, b) = (random_op(2, 3), random_op(2, 4));
        let ta = MixedOperator::diagonal_tensor(&a, 2, Space::l1()).unwrap();
        let tb = MixedOperator::diagonal_tensor(&b, 2, Space::l1()).unwrap();
        let ab = MixedOperator::diagonal_tensor(&a.compose(&b).unwrap(), 2, Space::l1()).unwrap();
        assert_eq!(ta.compose(&tb).unwrap(), ab);
        let r = random_op(2, 5);
        let t = MixedOperator::tensor(&a, &r, Space::l1()).unwrap();
        let dense = t.to_dense().unwrap();
        let back = MixedOperator::block_decompose(2, 2, Space::l1(), &dense).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn serde_round_trip() {
        let t = MixedOperator::tensor(&random_op(1, 2), &random_op(1, 3), Space::lp(2.0).unwrap()).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: MixedOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
