//! Transfer maps `O ⊗ R` on `L₁(X)` and the certificate domain they induce.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{distance_upper_bound, MixedOperator};
use crate::certificate::CertDomain;
use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::op1::L1Operator;
use crate::scalar::Rational;
use crate::stepfun::FaithfulSystem;

/// A norm-one map on the inner space built from a faithful Haar system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "system", rename_all = "kebab-case")]
pub enum InnerFactor {
    /// `h_M ↦ h̃_M`.
    Embedding(FaithfulSystem),
    /// `f ↦ Σ_I ⟨h̃_I, f⟩ |I|^{-1} h_I`.
    LeftInverse(FaithfulSystem),
}

impl InnerFactor {
    fn system(&self) -> &FaithfulSystem {
        match self {
            InnerFactor::Embedding(s) | InnerFactor::LeftInverse(s) => s,
        }
    }

    fn cod_depth(&self) -> usize {
        match self {
            InnerFactor::Embedding(s) => s.host_depth,
            InnerFactor::LeftInverse(s) => s.out_depth,
        }
    }

    fn dom_depth(&self) -> usize {
        match self {
            InnerFactor::Embedding(s) => s.out_depth,
            InnerFactor::LeftInverse(s) => s.host_depth,
        }
    }

    /// `r` with `h_M ↦ Σ_K r[K][M] h_K`.
    fn coefficients(&self) -> Vec<Vec<Rational>> {
        let mut r = vec![vec![Rational::zero(); 1 << self.dom_depth()]; 1 << self.cod_depth()];
        let sys = self.system();
        for i in dyadic::intervals(sys.out_depth) {
            let b = sys.block(i);
            for (k, &s) in b.intervals.iter().zip(&b.signs) {
                let sg = Rational::from_integer(s.into());
                match self {
                    InnerFactor::Embedding(_) => r[k.slot()][i.slot()] = sg,
                    InnerFactor::LeftInverse(_) => r[i.slot()][k.slot()] = sg * k.measure() / i.measure(),
                }
            }
        }
        r
    }
}

/// `factors[0] ∘ factors[1] ∘ …`; no factors is the identity at one depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerMap {
    pub cod_depth: usize,
    pub dom_depth: usize,
    pub factors: Vec<InnerFactor>,
}

impl InnerMap {
    pub fn identity(depth: usize) -> Self {
        InnerMap { cod_depth: depth, dom_depth: depth, factors: Vec::new() }
    }

    pub fn embedding(sys: &FaithfulSystem) -> Self {
        InnerMap { cod_depth: sys.host_depth, dom_depth: sys.out_depth, factors: vec![InnerFactor::Embedding(sys.clone())] }
    }

    pub fn left_inverse(sys: &FaithfulSystem) -> Self {
        InnerMap { cod_depth: sys.out_depth, dom_depth: sys.host_depth, factors: vec![InnerFactor::LeftInverse(sys.clone())] }
    }

    pub fn compose(&self, inner: &InnerMap) -> Result<InnerMap> {
        if self.dom_depth != inner.cod_depth {
            return Err(Error::DepthMismatch { expected: self.dom_depth, found: inner.cod_depth });
        }
        let mut factors = self.factors.clone();
        factors.extend(inner.factors.iter().cloned());
        Ok(InnerMap { cod_depth: self.cod_depth, dom_depth: inner.dom_depth, factors })
    }

    /// Haar coefficient matrix of the composite.
    pub fn coefficients(&self) -> Result<Vec<Vec<Rational>>> {
        let mut depth = self.cod_depth;
        let mut acc: Vec<Vec<Rational>> = identity_matrix(depth);
        for f in &self.factors {
            if f.cod_depth() != depth {
                return Err(Error::DepthMismatch { expected: depth, found: f.cod_depth() });
            }
            acc = matmul(&acc, &f.coefficients());
            depth = f.dom_depth();
        }
        if depth != self.dom_depth {
            return Err(Error::DepthMismatch { expected: self.dom_depth, found: depth });
        }
        Ok(acc)
    }

    /// `1` once every factor's system passes the faithful predicate.
    pub fn norm_bound(&self) -> Result<Rational> {
        for f in &self.factors {
            if !f.system().is_faithful() {
                return Err(Error::VerificationFailed("inner factor is not a faithful Haar system on [0,1)".into()));
            }
        }
        Ok(Rational::one())
    }
}

fn identity_matrix(depth: usize) -> Vec<Vec<Rational>> {
    let n = 1usize << depth;
    (0..n).map(|r| (0..n).map(|c| if r == c { Rational::one() } else { Rational::zero() }).collect()).collect()
}

fn matmul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            let mut out = vec![Rational::zero(); cols];
            for (k, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (o, y) in out.iter_mut().zip(&b[k]) {
                    if !y.is_zero() {
                        *o += x * y;
                    }
                }
            }
            out
        })
        .collect()
}

/// `O ⊗ R` with `O` on the outer `L₁` and `R` on the inner space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorMap {
    pub outer: L1Operator,
    pub inner: InnerMap,
}

impl TensorMap {
    pub fn identity(outer_depth: usize, inner_depth: usize) -> Self {
        TensorMap { outer: L1Operator::identity(outer_depth), inner: InnerMap::identity(inner_depth) }
    }

    pub fn outer_only(outer: L1Operator, inner_depth: usize) -> Self {
        TensorMap { outer, inner: InnerMap::identity(inner_depth) }
    }
}

/// `L₁(X)` with certified upper bounds for every norm.
#[derive(Clone, Copy, Debug, Default)]
pub struct MixedDomain;

impl CertDomain for MixedDomain {
    type Op = MixedOperator;
    type Map = TensorMap;

    /// `C_S^{(L,M)} = Σ β[L][L'] α[M'][M] O_B C^{(L',M')} O_A`.
    fn conjugate(&self, b: &TensorMap, t: &MixedOperator, a: &TensorMap) -> Result<MixedOperator> {
        if a.inner.cod_depth != t.inner_depth || b.inner.dom_depth != t.inner_depth {
            return Err(Error::DepthMismatch { expected: t.inner_depth, found: a.inner.cod_depth });
        }
        let alpha = a.inner.coefficients()?;
        let beta = b.inner.coefficients()?;
        let (b_id, a_id) = (b.outer.is_identity(), a.outer.is_identity());
        let mut acc: BTreeMap<(usize, usize), L1Operator> = BTreeMap::new();
        for (lp, mp, c) in t.blocks() {
            let targets: Vec<(usize, usize, Rational)> = (0..beta.len())
                .filter(|&l| !beta[l][lp.slot()].is_zero())
                .flat_map(|l| {
                    let bl = beta[l][lp.slot()].clone();
                    alpha[mp.slot()].iter().enumerate().filter(|(_, v)| !v.is_zero()).map(move |(m, v)| (l, m, &bl * v))
                })
                .collect();
            if targets.is_empty() {
                continue;
            }
            let x = match (b_id, a_id) {
                (true, true) => c.clone(),
                (true, false) => c.compose(&a.outer)?,
                (false, true) => b.outer.compose(c)?,
                (false, false) => b.outer.compose(&c.compose(&a.outer)?)?,
            };
            for (l, m, w) in targets {
                let term = x.scale(&w);
                match acc.get_mut(&(l, m)) {
                    Some(y) => *y = y.add(&term)?,
                    None => {
                        acc.insert((l, m), term);
                    }
                }
            }
        }
        let mut s = MixedOperator::zero(b.outer.cod_depth, b.inner.cod_depth, t.space.clone())?;
        for ((l, m), blk) in acc {
            s.set_block(DyadicInterval::from_slot(l), DyadicInterval::from_slot(m), blk)?;
        }
        Ok(s)
    }

    fn compose(&self, outer: &TensorMap, inner: &TensorMap) -> Result<TensorMap> {
        Ok(TensorMap { outer: outer.outer.compose(&inner.outer)?, inner: outer.inner.compose(&inner.inner)? })
    }

    fn is_left_inverse(&self, b: &TensorMap, a: &TensorMap) -> Result<bool> {
        if !b.outer.compose(&a.outer)?.is_identity() {
            return Ok(false);
        }
        Ok(b.inner.compose(&a.inner)?.coefficients()? == identity_matrix(a.inner.dom_depth))
    }

    fn distance(&self, x: &MixedOperator, y: &MixedOperator) -> Result<Rational> {
        distance_upper_bound(x, y)
    }

    fn map_norm(&self, m: &TensorMap) -> Result<Rational> {
        Ok(m.outer.norm_exact() * m.inner.norm_bound()?)
    }

    fn identity_op(&self, like: &MixedOperator) -> Result<MixedOperator> {
        MixedOperator::identity(like.outer_depth, like.inner_depth, like.space.clone())
    }

    fn compose_ops(&self, x: &MixedOperator, y: &MixedOperator) -> Result<MixedOperator> {
        x.compose(y)
    }

    fn combine(&self, a: &Rational, x: &MixedOperator, b: &Rational, y: &MixedOperator) -> Result<MixedOperator> {
        x.scale(a).add(&y.scale(b))
    }

    fn op_norm(&self, x: &MixedOperator) -> Result<Rational> {
        Ok(super::norm_upper_bound(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{CertKind, FactorCertificate};
    use crate::op1::{canonical_system, embedding, left_inverse};
    use crate::scalar::ratio;
    use crate::stepfun::Space;

    #[test]
    fn inner_maps_are_inverse() {
        let sys = canonical_system(4, 2, DyadicInterval::EMPTY).unwrap();
        let a = InnerMap::embedding(&sys);
        let q = InnerMap::left_inverse(&sys);
        assert_eq!(q.compose(&a).unwrap().coefficients().unwrap(), identity_matrix(2));
        assert_eq!(a.norm_bound().unwrap(), Rational::one());
    }

    #[test]
    fn tensor_conjugation_of_scalars() {
        let outer = canonical_system(3, 2, DyadicInterval::EMPTY).unwrap();
        let inner = canonical_system(3, 1, DyadicInterval::EMPTY).unwrap();
        let a = TensorMap { outer: embedding(&outer).unwrap(), inner: InnerMap::embedding(&inner) };
        let b = TensorMap { outer: left_inverse(&outer).unwrap(), inner: InnerMap::left_inverse(&inner) };
        let t = MixedOperator::scalar(3, 3, Space::lp(2.0).unwrap(), ratio(3, 5)).unwrap();
        let target = MixedOperator::scalar(2, 1, Space::lp(2.0).unwrap(), ratio(3, 5)).unwrap();
        let dom = MixedDomain;
        assert_eq!(dom.conjugate(&b, &t, &a).unwrap(), target);
        let c = FactorCertificate::measured(&dom, "x", CertKind::ProjectionalFactor, a, b, t, target).unwrap();
        let v = c.verify(&dom).unwrap();
        assert!(v.valid, "{:?}", v.transcript);
        assert!(c.error.is_zero());
    }
}
