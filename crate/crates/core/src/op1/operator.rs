//! Haar-basis matrices of operators between truncated `L₁` spaces.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dyadic::{DyadicInterval, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::multiplier::HaarMultiplier;
use crate::scalar::{self, Rational};
use crate::stepfun::{haar_analysis, haar_synthesis, haar_synthesis_f64, HaarCoefficients, StepFunction};

/// `M[I][J] = ⟨h_I, T(|J|^{-1} h_J)⟩`, rows indexed by the codomain grid,
/// columns by the domain grid. Composition is the plain matrix product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L1Operator {
    pub dom_depth: usize,
    pub cod_depth: usize,
    data: Vec<Rational>,
}

impl L1Operator {
    pub fn zero_rect(cod_depth: usize, dom_depth: usize) -> Self {
        assert!(cod_depth + dom_depth <= 2 * 14, "dense matrix too large");
        L1Operator { dom_depth, cod_depth, data: vec![Rational::zero(); 1 << (cod_depth + dom_depth)] }
    }

    pub fn zero(depth: usize) -> Self {
        Self::zero_rect(depth, depth)
    }

    pub fn identity(depth: usize) -> Self {
        Self::scalar(depth, Rational::one())
    }

    pub fn scalar(depth: usize, c: Rational) -> Self {
        let mut t = Self::zero(depth);
        if !c.is_zero() {
            for s in 0..1usize << depth {
                t.data[s * (1 << depth) + s] = c.clone();
            }
        }
        t
    }

    pub fn from_matrix(cod_depth: usize, dom_depth: usize, rows: Vec<Vec<Rational>>) -> Result<Self> {
        if cod_depth > MAX_DEPTH || dom_depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge(cod_depth.max(dom_depth)));
        }
        if rows.len() != 1 << cod_depth || rows.iter().any(|r| r.len() != 1 << dom_depth) {
            return Err(Error::InvalidArgument("matrix shape does not match the depths".into()));
        }
        Ok(L1Operator { dom_depth, cod_depth, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_multiplier(d: &HaarMultiplier) -> Self {
        let n = d.depth;
        let mut t = Self::zero(n);
        for (s, a) in d.entries.iter().enumerate() {
            t.data[s * (1 << n) + s] = a.clone();
        }
        t
    }

    /// From the coefficient map `c ↦ K c`, where `K[I][J]` is the coefficient
    /// of `T h_J` at `h_I`.
    pub fn from_coefficient_matrix(cod_depth: usize, dom_depth: usize, k: impl Fn(usize, usize) -> Rational) -> Self {
        let mut t = Self::zero_rect(cod_depth, dom_depth);
        for r in 0..1usize << cod_depth {
            let mi = DyadicInterval::from_slot(r).measure();
            for c in 0..1usize << dom_depth {
                let v = k(r, c);
                if !v.is_zero() {
                    t.data[r * (1 << dom_depth) + c] = v * &mi / DyadicInterval::from_slot(c).measure();
                }
            }
        }
        t
    }

    pub fn is_square(&self) -> bool {
        self.dom_depth == self.cod_depth
    }

    pub fn depth(&self) -> usize {
        assert!(self.is_square());
        self.dom_depth
    }

    pub fn rows(&self) -> usize {
        1 << self.cod_depth
    }

    pub fn cols(&self) -> usize {
        1 << self.dom_depth
    }

    pub fn at(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols() + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Rational {
        let w = self.cols();
        &mut self.data[r * w + c]
    }

    pub fn get(&self, i: DyadicInterval, j: DyadicInterval) -> &Rational {
        self.at(i.slot(), j.slot())
    }

    pub fn set(&mut self, i: DyadicInterval, j: DyadicInterval, v: Rational) {
        *self.at_mut(i.slot(), j.slot()) = v;
    }

    pub fn data(&self) -> &[Rational] {
        &self.data
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &L1Operator) -> Result<L1Operator> {
        if self.dom_depth != rhs.cod_depth {
            return Err(Error::DepthMismatch { expected: self.dom_depth, found: rhs.cod_depth });
        }
        let (n, k, m) = (self.rows(), self.cols(), rhs.cols());
        let data: Vec<Rational> = (0..n)
            .into_par_iter()
            .flat_map_iter(|r| {
                let mut row = vec![Rational::zero(); m];
                for x in 0..k {
                    let a = self.at(r, x);
                    if a.is_zero() {
                        continue;
                    }
                    for (c, out) in row.iter_mut().enumerate() {
                        let b = rhs.at(x, c);
                        if !b.is_zero() {
                            *out += a * b;
                        }
                    }
                }
                row
            })
            .collect();
        Ok(L1Operator { dom_depth: rhs.dom_depth, cod_depth: self.cod_depth, data })
    }

    fn zip(&self, rhs: &L1Operator, f: impl Fn(&Rational, &Rational) -> Rational) -> Result<L1Operator> {
        if self.dom_depth != rhs.dom_depth || self.cod_depth != rhs.cod_depth {
            return Err(Error::DepthMismatch { expected: self.dom_depth, found: rhs.dom_depth });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect();
        Ok(L1Operator { dom_depth: self.dom_depth, cod_depth: self.cod_depth, data })
    }

    pub fn sub(&self, rhs: &L1Operator) -> Result<L1Operator> {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &L1Operator) -> Result<L1Operator> {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn scale(&self, c: &Rational) -> L1Operator {
        L1Operator { dom_depth: self.dom_depth, cod_depth: self.cod_depth, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && {
            let n = self.rows();
            (0..n).all(|r| (0..n).all(|c| if r == c { self.at(r, c).is_one() } else { self.at(r, c).is_zero() }))
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square() && {
            let n = self.rows();
            (0..n).all(|r| (0..n).all(|c| r == c || self.at(r, c).is_zero()))
        }
    }

    /// `M[I][I]` as a multiplier.
    pub fn diagonal(&self) -> HaarMultiplier {
        let n = self.depth();
        HaarMultiplier { depth: n, entries: (0..1usize << n).map(|s| self.at(s, s).clone()).collect() }
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        if f.depth != self.dom_depth {
            return Err(Error::DepthMismatch { expected: self.dom_depth, found: f.depth });
        }
        let c = haar_analysis(f);
        let x: Vec<Rational> = c.coeffs.iter().enumerate().map(|(s, v)| v * DyadicInterval::from_slot(s).measure()).collect();
        let mut out = HaarCoefficients::zero(self.cod_depth);
        for r in 0..self.rows() {
            let s: Rational = (0..self.cols()).filter(|&j| !x[j].is_zero()).map(|j| self.at(r, j) * &x[j]).sum();
            out.coeffs[r] = s / DyadicInterval::from_slot(r).measure();
        }
        Ok(haar_synthesis(&out))
    }

    /// Images `T(2^{dom} χ_t)` of the normalized leaf indicators, as
    /// codomain Haar coefficients.
    pub fn leaf_images(&self) -> Vec<Vec<Rational>> {
        let (nd, rows) = (self.dom_depth, self.rows());
        let col = |j: DyadicInterval| -> Vec<Rational> { (0..rows).map(|r| self.at(r, j.slot()).clone()).collect() };
        // P(I) = Σ_{k < rank(I)} θ_k M[:, I_k] along the chain to I
        let mut level: Vec<Vec<Rational>> = vec![col(DyadicInterval::EMPTY)];
        for j in 0..nd {
            level = level
                .par_iter()
                .enumerate()
                .flat_map_iter(|(k, p)| {
                    let c = col(DyadicInterval::new(j, k as u64));
                    let plus: Vec<Rational> = p.iter().zip(&c).map(|(a, b)| a + b).collect();
                    let minus: Vec<Rational> = p.iter().zip(&c).map(|(a, b)| a - b).collect();
                    [plus, minus]
                })
                .collect();
        }
        let inv: Vec<Rational> = (0..rows).map(|r| DyadicInterval::from_slot(r).measure().recip()).collect();
        level.into_par_iter().map(|p| p.into_iter().zip(&inv).map(|(a, w)| a * w).collect()).collect()
    }

    /// Pointwise values of each normalized leaf image on the codomain grid.
    pub fn leaf_columns(&self) -> Vec<StepFunction> {
        let cod = self.cod_depth;
        self.leaf_images().into_par_iter().map(|c| haar_synthesis(&HaarCoefficients { depth: cod, coeffs: c })).collect()
    }

    /// Exact operator norm: the maximum of `‖T(|I|^{-1}χ_I)‖₁` over leaf cells.
    pub fn norm_exact(&self) -> Rational {
        self.leaf_columns().into_par_iter().map(|f| f.l1_norm()).max().unwrap_or_else(Rational::zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(scalar::to_f64).collect()
    }
}

/// Float [`L1Operator::norm_exact`] of a row-major Haar matrix, for scoring.
pub fn l1_norm_f64(m: &[f64], cod_depth: usize, dom_depth: usize) -> f64 {
    let (rows, cols) = (1usize << cod_depth, 1usize << dom_depth);
    debug_assert_eq!(m.len(), rows * cols);
    let inv: Vec<f64> = (0..rows).map(|r| 1.0 / DyadicInterval::from_slot(r).measure_f64()).collect();
    let mut level: Vec<Vec<f64>> = vec![(0..rows).map(|r| m[r * cols]).collect()];
    for j in 0..dom_depth {
        level = level
            .iter()
            .enumerate()
            .flat_map(|(k, p)| {
                let c = (1usize << j) + k;
                let plus: Vec<f64> = (0..rows).map(|r| p[r] + m[r * cols + c]).collect();
                let minus: Vec<f64> = (0..rows).map(|r| p[r] - m[r * cols + c]).collect();
                [plus, minus]
            })
            .collect();
    }
    level
        .into_iter()
        .map(|p| {
            let c: Vec<f64> = p.iter().zip(&inv).map(|(a, w)| a * w).collect();
            let v = haar_synthesis_f64(&c);
            v.iter().map(|x| x.abs()).sum::<f64>() / rows as f64
        })
        .fold(0.0, f64::max)
}

pub fn l1_operator_norm_exact(t: &L1Operator) -> Rational {
    t.norm_exact()
}

/// The diagonal part and a triangle-inequality bound on `‖T - D_T‖`: the
/// largest sum, over the chain of a leaf, of the off-diagonal column masses
/// `Σ_{I≠J} |M[I][J]|`.
pub fn nearest_multiplier(t: &L1Operator) -> (HaarMultiplier, Rational) {
    let n = t.depth();
    let rows = t.rows();
    let mass: Vec<Rational> = (0..rows).map(|c| (0..rows).filter(|&r| r != c).map(|r| t.at(r, c).abs()).sum()).collect();
    let mut best = Rational::zero();
    let mut level = vec![mass[0].clone()];
    for j in 0..n {
        level = level
            .iter()
            .enumerate()
            .flat_map(|(k, s)| {
                let v = s + &mass[DyadicInterval::new(j, k as u64).slot()];
                [v.clone(), v]
            })
            .collect();
    }
    for v in level {
        if v > best {
            best = v;
        }
    }
    (t.diagonal(), best)
}

impl Serialize for L1Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            depth: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            codomain_depth: Option<usize>,
            matrix: Vec<Vec<String>>,
        }
        let matrix = (0..self.rows()).map(|r| (0..self.cols()).map(|c| scalar::format(self.at(r, c))).collect()).collect();
        let codomain_depth = (!self.is_square()).then_some(self.cod_depth);
        Repr { depth: self.dom_depth, codomain_depth, matrix }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for L1Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Cell {
            S(String),
            F(f64),
        }
        #[derive(Deserialize)]
        struct Repr {
            depth: usize,
            codomain_depth: Option<usize>,
            matrix: Vec<Vec<Cell>>,
        }
        let r = Repr::deserialize(d)?;
        let rows = r
            .matrix
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| match c {
                        Cell::S(s) => scalar::parse(&s),
                        Cell::F(f) => scalar::from_f64(f),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        L1Operator::from_matrix(r.codomain_depth.unwrap_or(r.depth), r.depth, rows).map_err(D::Error::custom)
    }
}

/// `T f = (∫ f) h_∅`.
pub fn integral_functional(depth: usize) -> L1Operator {
    let mut t = L1Operator::zero(depth);
    t.set(DyadicInterval::EMPTY, DyadicInterval::EMPTY, Rational::one());
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::operator_norm_exact;
    use crate::scalar::{int, ratio};

    #[test]
    fn identity_and_functional() {
        assert_eq!(L1Operator::identity(4).norm_exact(), int(1));
        assert_eq!(integral_functional(3).norm_exact(), int(1));
    }

    #[test]
    fn multiplier_embedding_norm() {
        let d = HaarMultiplier::from_fn(4, |i| ratio(i.code() as i64 % 5 - 2, 3));
        assert_eq!(L1Operator::from_multiplier(&d).norm_exact(), operator_norm_exact(&d));
    }

    #[test]
    fn apply_agrees_with_columns() {
        let t = L1Operator::from_coefficient_matrix(2, 2, |r, c| int(((r * 3 + c * 5) % 7) as i64 - 3));
        let cols = t.leaf_columns();
        for (k, col) in cols.iter().enumerate() {
            let mut f = StepFunction::zero(2);
            f.values[k] = int(4);
            assert_eq!(&t.apply(&f).unwrap(), col);
        }
    }

    #[test]
    fn single_offdiagonal_entry() {
        let mut t = L1Operator::zero(3);
        t.set(DyadicInterval::new(1, 1), DyadicInterval::new(2, 3), ratio(3, 4));
        let (d, bound) = nearest_multiplier(&t);
        assert!(d.entries.iter().all(|x| x.is_zero()));
        assert_eq!(bound, ratio(3, 4));
        assert_eq!(t.norm_exact(), ratio(3, 4));
    }

    #[test]
    fn composition_is_matrix_product() {
        let a = L1Operator::from_coefficient_matrix(2, 2, |r, c| int((r + 2 * c) as i64 % 3));
        let b = L1Operator::from_coefficient_matrix(2, 2, |r, c| int((3 * r + c) as i64 % 4 - 1));
        let ab = a.compose(&b).unwrap();
        let mut f = StepFunction::zero(2);
        f.values = vec![int(1), int(-2), ratio(1, 2), int(3)];
        assert_eq!(ab.apply(&f).unwrap(), a.apply(&b.apply(&f).unwrap()).unwrap());
    }
}
