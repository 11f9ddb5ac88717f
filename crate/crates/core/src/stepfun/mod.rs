//! Step functions on the dyadic grid and the Haar transform.

mod faithful;
mod space;

pub use faithful::{Block, FaithfulSystem};
pub use space::{lp_space, rademacher_l1_constant, CustomSpace, HaarSystemSpace, LpSpace, Space, SpaceDescriptor};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::scalar::{self, pow2, Rational};

/// Values on the `2^depth` leaf cells of the grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFunction {
    pub depth: usize,
    #[serde(with = "scalar::serde_rational_vec")]
    pub values: Vec<Rational>,
}

/// Coefficients `c_I = ⟨h_I, f⟩ / |I|`, stored at slot `ι(I) - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarCoefficients {
    pub depth: usize,
    #[serde(with = "scalar::serde_rational_vec")]
    pub coeffs: Vec<Rational>,
}

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        Err(Error::DepthTooLarge(depth))
    } else {
        Ok(())
    }
}

impl StepFunction {
    pub fn new(depth: usize, values: Vec<Rational>) -> Result<Self> {
        check_depth(depth)?;
        if values.len() != 1 << depth {
            return Err(Error::DepthMismatch { expected: 1 << depth, found: values.len() });
        }
        Ok(StepFunction { depth, values })
    }

    pub fn zero(depth: usize) -> Self {
        StepFunction { depth, values: vec![Rational::zero(); 1 << depth] }
    }

    /// `χ_I` on the grid; `∅` gives `χ_[0,1)`.
    pub fn indicator(depth: usize, i: DyadicInterval) -> Result<Self> {
        if i.level().is_some_and(|j| j > depth) {
            return Err(Error::BelowTruncation(i, depth));
        }
        let mut f = Self::zero(depth);
        for t in i.leaf_range(depth) {
            f.values[t] = Rational::from_integer(1.into());
        }
        Ok(f)
    }

    /// `h_I` on the grid.
    pub fn haar(depth: usize, i: DyadicInterval) -> Result<Self> {
        if i.level().is_some_and(|j| j >= depth) {
            return Err(Error::BelowTruncation(i, depth));
        }
        let values = (0..1usize << depth).map(|t| Rational::from_integer(i.haar_sign(depth, t).into())).collect();
        Ok(StepFunction { depth, values })
    }

    pub fn l1_norm(&self) -> Rational {
        self.values.iter().map(|v| v.abs()).sum::<Rational>() * pow2(-(self.depth as i64))
    }

    pub fn sup_norm(&self) -> Rational {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn integral(&self) -> Rational {
        self.values.iter().sum::<Rational>() * pow2(-(self.depth as i64))
    }

    /// `∫ f g`.
    pub fn pairing(&self, other: &StepFunction) -> Result<Rational> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch { expected: self.depth, found: other.depth });
        }
        let s: Rational = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * pow2(-(self.depth as i64)))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(scalar::to_f64).collect()
    }

    /// The same function on a finer grid.
    pub fn refine(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::DepthMismatch { expected: self.depth, found: depth });
        }
        let s = depth - self.depth;
        let values = (0..1usize << depth).map(|t| self.values[t >> s].clone()).collect();
        Ok(StepFunction { depth, values })
    }
}

impl HaarCoefficients {
    pub fn new(depth: usize, coeffs: Vec<Rational>) -> Result<Self> {
        check_depth(depth)?;
        if coeffs.len() != 1 << depth {
            return Err(Error::DepthMismatch { expected: 1 << depth, found: coeffs.len() });
        }
        Ok(HaarCoefficients { depth, coeffs })
    }

    pub fn zero(depth: usize) -> Self {
        HaarCoefficients { depth, coeffs: vec![Rational::zero(); 1 << depth] }
    }

    pub fn get(&self, i: DyadicInterval) -> &Rational {
        &self.coeffs[i.slot()]
    }

    pub fn set(&mut self, i: DyadicInterval, v: Rational) {
        self.coeffs[i.slot()] = v;
    }
}

/// Unnormalized sums `Σ_{t ∈ I} v_t` for each level, bottom-up.
fn level_sums(values: &[Rational], depth: usize) -> Vec<Vec<Rational>> {
    let mut sums = vec![Vec::new(); depth + 1];
    sums[depth] = values.to_vec();
    for j in (0..depth).rev() {
        let next = &sums[j + 1];
        sums[j] = (0..1usize << j).map(|k| &next[2 * k] + &next[2 * k + 1]).collect();
    }
    sums
}

pub fn haar_analysis(f: &StepFunction) -> HaarCoefficients {
    let n = f.depth;
    let sums = level_sums(&f.values, n);
    let mut coeffs = vec![Rational::zero(); 1 << n];
    coeffs[0] = &sums[0][0] * pow2(-(n as i64));
    for j in 0..n {
        let scale = pow2(j as i64 - n as i64);
        for k in 0..1usize << j {
            let i = DyadicInterval::new(j, k as u64);
            let d = &sums[j + 1][2 * k] - &sums[j + 1][2 * k + 1];
            coeffs[i.slot()] = d * &scale;
        }
    }
    HaarCoefficients { depth: n, coeffs }
}

pub fn haar_synthesis(c: &HaarCoefficients) -> StepFunction {
    let n = c.depth;
    let mut acc = vec![c.coeffs[0].clone()];
    for j in 0..n {
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (k, a) in acc.iter().enumerate() {
            let ci = &c.coeffs[DyadicInterval::new(j, k as u64).slot()];
            next.push(a + ci);
            next.push(a - ci);
        }
        acc = next;
    }
    StepFunction { depth: n, values: acc }
}

/// Float versions used by the sampling estimators.
pub fn haar_analysis_f64(values: &[f64]) -> Vec<f64> {
    let n = values.len().trailing_zeros() as usize;
    let mut sums = vec![Vec::new(); n + 1];
    sums[n] = values.to_vec();
    for j in (0..n).rev() {
        let next = &sums[j + 1];
        sums[j] = (0..1usize << j).map(|k| next[2 * k] + next[2 * k + 1]).collect();
    }
    let mut out = vec![0.0; 1 << n];
    out[0] = sums[0][0] / (1u64 << n) as f64;
    for j in 0..n {
        let scale = ((1u64 << j) as f64) / ((1u64 << n) as f64);
        for k in 0..1usize << j {
            out[(1 << j) + k] = (sums[j + 1][2 * k] - sums[j + 1][2 * k + 1]) * scale;
        }
    }
    out
}

pub fn haar_synthesis_f64(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len().trailing_zeros() as usize;
    let mut acc = vec![coeffs[0]];
    for j in 0..n {
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (k, a) in acc.iter().enumerate() {
            let ci = coeffs[(1 << j) + k];
            next.push(a + ci);
            next.push(a - ci);
        }
        acc = next;
    }
    acc
}

/// Coefficients of `|I|^{-1} χ_I`: `θ_k |I_k|^{-1}` along the chain to `I`.
pub fn normalized_indicator_expansion(i: DyadicInterval, depth: usize) -> Result<HaarCoefficients> {
    if i.is_empty() {
        return Err(Error::InvalidArgument("∅ has no normalized indicator".into()));
    }
    if i.level().unwrap() > depth {
        return Err(Error::BelowTruncation(i, depth));
    }
    let chain = i.chain();
    let mut c = HaarCoefficients::zero(depth);
    for (k, &s) in chain.signs.iter().enumerate() {
        let ik = chain.intervals[k];
        let v = Rational::from_integer(s.into()) / ik.measure();
        c.set(ik, v);
    }
    Ok(c)
}
