//! Functions on the `2^n × 2^m` grid of leaf rectangles.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::scalar::{self, Rational};
use crate::stepfun::{haar_analysis, haar_synthesis, HaarCoefficients, HaarSystemSpace, Space, StepFunction};

/// `u(s, t)` on leaf rectangles; `s` is the outer (`L₁`) variable and `t`
/// the inner (`X`) one. Values are stored row by row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedFunction {
    #[serde(rename = "n")]
    pub outer_depth: usize,
    #[serde(rename = "m")]
    pub inner_depth: usize,
    #[serde(rename = "grid", with = "scalar::serde_rational_vec")]
    pub values: Vec<Rational>,
}

impl MixedFunction {
    pub fn zero(outer_depth: usize, inner_depth: usize) -> Self {
        MixedFunction { outer_depth, inner_depth, values: vec![Rational::zero(); 1 << (outer_depth + inner_depth)] }
    }

    pub fn new(outer_depth: usize, inner_depth: usize, values: Vec<Rational>) -> Result<Self> {
        if values.len() != 1 << (outer_depth + inner_depth) {
            return Err(Error::InvalidArgument(format!("expected {} grid values, got {}", 1u64 << (outer_depth + inner_depth), values.len())));
        }
        Ok(MixedFunction { outer_depth, inner_depth, values })
    }

    /// `f ⊗ x`.
    pub fn tensor(f: &StepFunction, x: &StepFunction) -> Self {
        let values = f.values.iter().flat_map(|a| x.values.iter().map(move |b| a * b)).collect();
        MixedFunction { outer_depth: f.depth, inner_depth: x.depth, values }
    }

    fn width(&self) -> usize {
        1 << self.inner_depth
    }

    pub fn row(&self, s: usize) -> StepFunction {
        let w = self.width();
        StepFunction { depth: self.inner_depth, values: self.values[s * w..(s + 1) * w].to_vec() }
    }

    /// `s ↦ c_L(s)` with `u(s, ·) = Σ_L c_L(s) h_L`, for every inner `L`.
    pub fn coefficients(&self) -> Vec<StepFunction> {
        let rows: Vec<HaarCoefficients> = (0..1usize << self.outer_depth).map(|s| haar_analysis(&self.row(s))).collect();
        (0..self.width()).map(|l| StepFunction { depth: self.outer_depth, values: rows.iter().map(|r| r.coeffs[l].clone()).collect() }).collect()
    }

    /// `Σ_L f_L ⊗ h_L`, indexed by inner slot.
    pub fn from_coefficients(inner_depth: usize, coeffs: &[StepFunction]) -> Result<Self> {
        if coeffs.len() != 1 << inner_depth {
            return Err(Error::DepthMismatch { expected: inner_depth, found: coeffs.len().trailing_zeros() as usize });
        }
        let n = coeffs[0].depth;
        let mut values = Vec::with_capacity(1 << (n + inner_depth));
        for s in 0..1usize << n {
            let c = HaarCoefficients { depth: inner_depth, coeffs: coeffs.iter().map(|f| f.values[s].clone()).collect() };
            values.extend(haar_synthesis(&c).values);
        }
        Ok(MixedFunction { outer_depth: n, inner_depth, values })
    }

    /// `‖u‖ = 2^{-n} Σ_s ‖u(s, ·)‖_X`.
    pub fn norm(&self, space: &Space) -> f64 {
        let w = self.width();
        let v: Vec<f64> = self.values.iter().map(scalar::to_f64).collect();
        v.chunks(w).map(|r| space.norm(r)).sum::<f64>() / (1u64 << self.outer_depth) as f64
    }

    /// The `L₁(L₁)` norm, exactly.
    pub fn l1_norm(&self) -> Rational {
        let s: Rational = self.values.iter().map(|v| v.abs()).sum();
        s / Rational::from_integer((1u64 << (self.outer_depth + self.inner_depth)).into())
    }
}

/// `q^L u = ⟨ν_L h_L, u(s, ·)⟩ = c_L / μ_L`; needs `μ_L` rational.
pub fn project_q(u: &MixedFunction, l: DyadicInterval, space: &Space) -> Result<StepFunction> {
    let mu = mu_exact(space, l)?;
    let c = u.coefficients().swap_remove(l.slot());
    Ok(StepFunction { depth: c.depth, values: c.values.iter().map(|v| v / &mu).collect() })
}

/// `j^L f = f ⊗ μ_L h_L`; needs `μ_L` rational.
pub fn embed_j(f: &StepFunction, l: DyadicInterval, inner_depth: usize, space: &Space) -> Result<MixedFunction> {
    let mu = mu_exact(space, l)?;
    let h = StepFunction::haar(inner_depth, l)?;
    let x = StepFunction { depth: inner_depth, values: h.values.iter().map(|v| v * &mu).collect() };
    Ok(MixedFunction::tensor(f, &x))
}

fn mu_exact(space: &Space, l: DyadicInterval) -> Result<Rational> {
    space.mu_exact(l).ok_or_else(|| Error::InvalidArgument(format!("μ_{l} is not rational in this space")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic;
    use crate::scalar::{int, ratio};

    fn sample(n: usize) -> StepFunction {
        StepFunction { depth: n, values: (0..1i64 << n).map(|k| ratio(k * 3 % 5 - 2, 3)).collect() }
    }

    #[test]
    fn biorthogonality() {
        for space in [Space::l1(), Space::lp(2.0).unwrap()] {
            let f = sample(2);
            for l in dyadic::intervals(2) {
                if space.mu_exact(l).is_none() {
                    continue;
                }
                let u = embed_j(&f, l, 2, &space).unwrap();
                for m in dyadic::intervals(2) {
                    if let Ok(q) = project_q(&u, m, &space) {
                        if m == l {
                            assert_eq!(q, f);
                        } else {
                            assert!(q.values.iter().all(|v| v.is_zero()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn empty_projection_in_l2_is_row_mean() {
        let u = MixedFunction::new(1, 1, vec![int(1), int(3), int(-2), int(0)]).unwrap();
        let q = project_q(&u, DyadicInterval::EMPTY, &Space::lp(2.0).unwrap()).unwrap();
        assert_eq!(q.values, vec![int(2), int(-1)]);
    }

    #[test]
    fn tensor_norm_is_multiplicative() {
        let f = sample(2);
        let x = StepFunction { depth: 2, values: vec![int(1), int(-2), int(0), ratio(1, 2)] };
        let u = MixedFunction::tensor(&f, &x);
        assert_eq!(u.l1_norm(), f.l1_norm() * x.l1_norm());
        let l2 = Space::lp(2.0).unwrap();
        let want = scalar::to_f64(&f.l1_norm()) * l2.norm(&x.to_f64());
        assert!((u.norm(&l2) - want).abs() < 1e-12);
        let back = MixedFunction::from_coefficients(2, &u.coefficients()).unwrap();
        assert_eq!(back, u);
    }
}
