//! Rearrangement-invariant norms on the grid and their normalization scalars.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::scalar::{pow2, Rational};

/// A Haar system space evaluated on step functions.
///
/// `fundamental(t)` is `‖χ_A‖_X` for `|A| = t`; then `μ_A = 1/‖χ_A‖_X` and
/// `ν_A = ‖χ_A‖_X / |A|`, so `μ_A ν_A = |A|^{-1}`.
pub trait HaarSystemSpace: Send + Sync {
    fn descriptor(&self) -> SpaceDescriptor;

    /// Norm of the step function with the given leaf values.
    fn norm(&self, values: &[f64]) -> f64;

    fn fundamental(&self, measure: f64) -> f64;

    fn mu(&self, measure: f64) -> f64 {
        1.0 / self.fundamental(measure)
    }

    fn nu(&self, measure: f64) -> f64 {
        self.fundamental(measure) / measure
    }

    fn mu_of(&self, i: DyadicInterval) -> f64 {
        self.mu(i.measure_f64())
    }

    fn nu_of(&self, i: DyadicInterval) -> f64 {
        self.nu(i.measure_f64())
    }

    /// `μ_A` as an exact rational, when it is one.
    fn mu_exact(&self, _i: DyadicInterval) -> Option<Rational> {
        None
    }

    fn is_l1(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum SpaceDescriptor {
    Lp {
        p: f64,
    },
    #[serde(rename = "custom")]
    Custom {
        mu: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSpace {
    pub p: f64,
}

pub fn lp_space(p: f64) -> Result<LpSpace> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("L_p needs 1 <= p < ∞, got {p}")));
    }
    Ok(LpSpace { p })
}

impl HaarSystemSpace for LpSpace {
    fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::Lp { p: self.p }
    }

    fn norm(&self, values: &[f64]) -> f64 {
        let n = values.len() as f64;
        if self.p == 1.0 {
            values.iter().map(|v| v.abs()).sum::<f64>() / n
        } else if self.p == 2.0 {
            (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
        } else {
            (values.iter().map(|v| v.abs().powf(self.p)).sum::<f64>() / n).powf(1.0 / self.p)
        }
    }

    fn fundamental(&self, measure: f64) -> f64 {
        measure.powf(1.0 / self.p)
    }

    fn mu_exact(&self, i: DyadicInterval) -> Option<Rational> {
        let j = i.level().unwrap_or(0) as f64;
        let e = j / self.p;
        (e.fract() == 0.0).then(|| pow2(e as i64))
    }

    fn is_l1(&self) -> bool {
        self.p == 1.0
    }
}

/// The smallest rearrangement-invariant norm with a prescribed fundamental
/// function, given by `μ` on the dyadic measures `2^{-j}` and interpolated
/// linearly in between.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomSpace {
    phi: Vec<f64>,
    mu: Vec<f64>,
}

impl CustomSpace {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || (mu[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("μ table must start with μ_[0,1) = 1".into()));
        }
        let phi: Vec<f64> = mu.iter().map(|m| 1.0 / m).collect();
        let t = |j: usize| 0.5f64.powi(j as i32);
        // slopes of φ on [2^{-j-1}, 2^{-j}], then on [0, 2^{-L}]
        let mut slopes: Vec<f64> = (0..phi.len() - 1).map(|j| (phi[j] - phi[j + 1]) / (t(j) - t(j + 1))).collect();
        slopes.push(phi[phi.len() - 1] / t(phi.len() - 1));
        let ok = phi.iter().all(|p| p.is_finite() && *p > 0.0) && slopes.iter().all(|s| *s >= -1e-12) && slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        if !ok {
            return Err(Error::InvalidArgument("μ table must give an increasing concave fundamental function".into()));
        }
        Ok(CustomSpace { phi, mu })
    }

    fn phi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.phi.len() - 1;
        let j = (-t.log2()).floor().max(0.0) as usize;
        let lo_t = |j: usize| 0.5f64.powi(j as i32);
        if j >= last {
            return self.phi[last] * t / lo_t(last);
        }
        let (a, b) = (lo_t(j + 1), lo_t(j));
        let w = (t - a) / (b - a);
        self.phi[j + 1] + w * (self.phi[j] - self.phi[j + 1])
    }
}

impl HaarSystemSpace for CustomSpace {
    fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::Custom { mu: self.mu.clone() }
    }

    fn norm(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let mut prev = 0.0;
        let mut total = 0.0;
        for (k, x) in v.iter().enumerate() {
            let cur = self.phi((k + 1) as f64 / n as f64);
            total += x * (cur - prev);
            prev = cur;
        }
        total
    }

    fn fundamental(&self, measure: f64) -> f64 {
        self.phi(measure)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    Lp(LpSpace),
    Custom(CustomSpace),
}

impl Space {
    pub fn l1() -> Self {
        Space::Lp(LpSpace { p: 1.0 })
    }

    pub fn lp(p: f64) -> Result<Self> {
        lp_space(p).map(Space::Lp)
    }

    pub fn from_descriptor(d: &SpaceDescriptor) -> Result<Self> {
        match d {
            SpaceDescriptor::Lp { p } => Space::lp(*p),
            SpaceDescriptor::Custom { mu } => CustomSpace::new(mu.clone()).map(Space::Custom),
        }
    }

    /// `"L1"`, `"L2"`, `"Lp:1.5"` or a JSON descriptor.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            let d: SpaceDescriptor = serde_json::from_str(t)?;
            return Space::from_descriptor(&d);
        }
        let body = t.strip_prefix("Lp:").or_else(|| t.strip_prefix('L')).or_else(|| t.strip_prefix('l'));
        match body.and_then(|b| b.parse::<f64>().ok()) {
            Some(p) => Space::lp(p),
            None => Err(Error::Parse(format!("unknown space {s:?}"))),
        }
    }

    fn inner(&self) -> &dyn HaarSystemSpace {
        match self {
            Space::Lp(s) => s,
            Space::Custom(s) => s,
        }
    }
}

impl HaarSystemSpace for Space {
    fn descriptor(&self) -> SpaceDescriptor {
        self.inner().descriptor()
    }
    fn norm(&self, values: &[f64]) -> f64 {
        self.inner().norm(values)
    }
    fn fundamental(&self, measure: f64) -> f64 {
        self.inner().fundamental(measure)
    }
    fn mu_exact(&self, i: DyadicInterval) -> Option<Rational> {
        self.inner().mu_exact(i)
    }
    fn is_l1(&self) -> bool {
        self.inner().is_l1()
    }
}

/// `min ‖Σ_{k≤n} a_k r_k‖_X / Σ|a_k|` over corner sign vectors and random
/// coefficient probes, with `r_k` the Rademacher function built from the
/// Haar functions of level `k - 1`.
pub fn rademacher_l1_constant(space: &dyn HaarSystemSpace, n: usize, depth: usize, probes: usize, seed: u64) -> Result<f64> {
    if n == 0 || n > depth || n > 24 {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= depth, got n = {n}, depth = {depth}")));
    }
    let eval = |a: &[f64]| {
        let values: Vec<f64> = (0..1usize << n).map(|t| (0..n).map(|k| if (t >> (n - 1 - k)) & 1 == 0 { a[k] } else { -a[k] }).sum()).collect();
        space.norm(&values) / a.iter().map(|x| x.abs()).sum::<f64>()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let corners: Vec<Vec<f64>> = if n <= 10 {
        (0..1u32 << n).map(|m| (0..n).map(|k| if (m >> k) & 1 == 0 { 1.0 } else { -1.0 }).collect()).collect()
    } else {
        (0..1024).map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()).collect()
    };
    for a in corners {
        best = best.min(eval(&a));
    }
    for _ in 0..probes {
        let a: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        best = best.min(eval(&a));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_scalars() {
        let l1 = lp_space(1.0).unwrap();
        let q = DyadicInterval::new(2, 1);
        assert_eq!(l1.mu_of(q), 4.0);
        assert_eq!(l1.nu_of(q), 1.0);
        assert_eq!(l1.mu_exact(q), Some(pow2(2)));
        let l2 = lp_space(2.0).unwrap();
        assert!((l2.mu_of(q) - 2.0).abs() < 1e-15 && (l2.nu_of(q) - 2.0).abs() < 1e-15);
        assert_eq!(l2.mu_exact(DyadicInterval::new(1, 0)), None);
        assert!(lp_space(0.5).is_err());
    }

    #[test]
    fn rademacher_values() {
        let l2 = Space::lp(2.0).unwrap();
        let l1 = Space::l1();
        assert!((rademacher_l1_constant(&l1, 1, 3, 10, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((rademacher_l1_constant(&l1, 2, 3, 0, 1).unwrap() - 0.5).abs() < 1e-12);
        let v = rademacher_l1_constant(&l2, 4, 4, 0, 1).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn custom_table_reproduces_l1() {
        let c = CustomSpace::new((0..6).map(|j| 2f64.powi(j)).collect()).unwrap();
        let v = [1.0, -3.0, 0.5, 2.0];
        assert!((c.norm(&v) - 1.625).abs() < 1e-12);
        assert!(CustomSpace::new(vec![1.0, 1.0, 8.0]).is_err());
        let d = Space::parse(r#"{"type":"custom","mu":[1.0,2.0,4.0]}"#).unwrap();
        assert!(matches!(d, Space::Custom(_)));
        assert_eq!(Space::parse("L1").unwrap(), Space::l1());
    }
}
