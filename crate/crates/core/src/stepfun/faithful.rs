//! Block systems `h̃_I = Σ_{K ∈ Δ_I} θ_K h_K` and the faithfulness predicate.

use serde::{Deserialize, Serialize};

use crate::dyadic::{self, DyadicInterval};
use crate::error::{Error, Result};
use crate::scalar::{pow2, Rational};

/// One node of a block system: disjoint host intervals with signs.
/// The single block `{∅}` stands for `h_∅` itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub intervals: Vec<DyadicInterval>,
    #[serde(with = "sign_string")]
    pub signs: Vec<i8>,
}

mod sign_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &[i8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&s.iter().map(|&x| if x < 0 { '-' } else { '+' }).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<i8>, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(serde::de::Error::custom("sign strings use + and -")),
            })
            .collect()
    }
}

impl Block {
    pub fn single(i: DyadicInterval, sign: i8) -> Self {
        Block { intervals: vec![i], signs: vec![sign] }
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().map(|i| i.measure()).sum()
    }
}

/// A block system indexed by `𝒟⁺` up to output depth `out_depth`, with
/// blocks drawn from a host grid of depth `host_depth`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaithfulSystem {
    pub out_depth: usize,
    pub host_depth: usize,
    pub blocks: Vec<Block>,
}

impl FaithfulSystem {
    /// `Δ_I = {I}`, `θ = 1`, `h̃_∅ = h_∅`.
    pub fn identity(out_depth: usize, host_depth: usize) -> Result<Self> {
        if out_depth > host_depth {
            return Err(Error::HostDepthExhausted(format!("output depth {out_depth} above host depth {host_depth}")));
        }
        let blocks = dyadic::intervals(out_depth).map(|i| Block::single(i, 1)).collect();
        Ok(FaithfulSystem { out_depth, host_depth, blocks })
    }

    pub fn block(&self, i: DyadicInterval) -> &Block {
        &self.blocks[i.slot()]
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.len() != 1 << self.out_depth {
            return Err(Error::InvalidArgument("block count must be 2^out_depth".into()));
        }
        for (slot, b) in self.blocks.iter().enumerate() {
            let node = DyadicInterval::from_slot(slot);
            if b.intervals.is_empty() || b.intervals.len() != b.signs.len() {
                return Err(Error::InvalidArgument(format!("malformed block at {node}")));
            }
            if b.signs.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::InvalidArgument(format!("signs at {node} must be ±1")));
            }
            if b.intervals.iter().any(|k| k.is_empty()) && b.intervals.len() > 1 {
                return Err(Error::InvalidArgument(format!("∅ must stand alone in block {node}")));
            }
            for k in &b.intervals {
                if k.level().is_some_and(|j| j >= self.host_depth) {
                    return Err(Error::BelowTruncation(*k, self.host_depth));
                }
            }
            for (a, x) in b.intervals.iter().enumerate() {
                for y in &b.intervals[a + 1..] {
                    if x.contains(*y) || y.contains(*x) {
                        return Err(Error::InvalidArgument(format!("overlapping intervals in block {node}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `h̃_I` on the host leaf grid.
    pub fn function(&self, i: DyadicInterval) -> Vec<i8> {
        let n = self.host_depth;
        let mut v = vec![0i8; 1 << n];
        let b = self.block(i);
        for (k, &s) in b.intervals.iter().zip(&b.signs) {
            for t in k.leaf_range(n) {
                v[t] = s * k.haar_sign(n, t);
            }
        }
        v
    }

    /// `Δ_I*` on the host leaf grid.
    pub fn support(&self, i: DyadicInterval) -> Vec<bool> {
        let n = self.host_depth;
        let mut v = vec![false; 1 << n];
        for k in &self.block(i).intervals {
            for t in k.leaf_range(n) {
                v[t] = true;
            }
        }
        v
    }

    /// `|Δ_∅*|`.
    pub fn support_measure(&self) -> Rational {
        self.block(DyadicInterval::EMPTY).measure()
    }

    /// The faithful-system conditions with every support scaled by `|Δ_∅*|`;
    /// returns the first violated clause.
    pub fn check_report(&self) -> std::result::Result<(), String> {
        self.validate().map_err(|e| e.to_string())?;
        let n = self.host_depth;
        let root = self.support(DyadicInterval::EMPTY);
        let omega = self.support_measure();
        let cell = pow2(-(n as i64));
        let count = |v: &[bool]| Rational::from_integer(v.iter().filter(|&&b| b).count().into()) * &cell;
        let h0 = self.function(DyadicInterval::EMPTY);
        if root.iter().zip(&h0).any(|(&s, &h)| s != (h != 0)) {
            return Err("h̃_∅ must be ±1 on its support".into());
        }
        for i in dyadic::intervals(self.out_depth) {
            if count(&self.support(i)) != i.measure() * &omega {
                return Err(format!("|Δ*| mismatch at {i}"));
            }
        }
        if self.out_depth == 0 {
            return Ok(());
        }
        if self.support(DyadicInterval::UNIT) != root {
            return Err("Δ_[0,1)* must equal Δ_∅*".into());
        }
        for i in dyadic::intervals(self.out_depth).skip(1) {
            let hi = self.function(i);
            let plus: Vec<bool> = h0.iter().zip(&hi).map(|(a, b)| a * b == 1).collect();
            let minus: Vec<bool> = h0.iter().zip(&hi).map(|(a, b)| a * b == -1).collect();
            if i.level().unwrap() + 1 < self.out_depth {
                if self.support(i.left()) != plus {
                    return Err(format!("Δ_{{I+}}* ≠ [h̃_∅h̃_I = 1] at {i}"));
                }
                if self.support(i.right().unwrap()) != minus {
                    return Err(format!("Δ_{{I-}}* ≠ [h̃_∅h̃_I = -1] at {i}"));
                }
            } else if count(&plus) != count(&minus) {
                return Err(format!("h̃_∅h̃_I is unbalanced at {i}"));
            }
        }
        Ok(())
    }

    /// The faithful-system predicate with `Δ_∅* = [0,1)`.
    pub fn is_faithful(&self) -> bool {
        self.check_report().is_ok() && self.support(DyadicInterval::EMPTY).iter().all(|&b| b)
    }

    /// Faithful after rescaling onto the support of `h̃_∅`.
    pub fn is_faithful_on_support(&self) -> bool {
        self.check_report().is_ok()
    }
}
