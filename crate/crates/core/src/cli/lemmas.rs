//! Randomized checks of the exact inequalities, one row per suite.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{compose, CertKind, FactorCertificate, L1Domain};
use crate::concentration::{exhaustive_statistics, splitting_statistics, DoubletonSpace};
use crate::error::Result;
use crate::families::{random_l1_operator, stable_diagonal};
use crate::multiplier::{branch_tail_mass, branch_variation, operator_norm_exact, triple_norm, HaarMultiplier};
use crate::op1::L1Operator;
use crate::pipeline::step4_collapse;
use crate::scalar::{self, Rational};
use crate::stepfun::Space;

/// Deliberate defects for checking that the suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// The triple norm recurrence stops one level short of the leaves.
    TripleNormOffByOne,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaRow {
    pub suite: String,
    pub trials: usize,
    pub failures: usize,
    /// Smallest relative slack seen, `(bound − value) / bound`.
    pub worst_margin: f64,
    /// The first failing instance, serialized for replay.
    pub counterexample: Option<serde_json::Value>,
}

impl LemmaRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub min_depth: usize,
    pub max_depth: usize,
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

struct Tally {
    row: LemmaRow,
}

impl Tally {
    fn new(suite: &str) -> Self {
        Tally { row: LemmaRow { suite: suite.into(), trials: 0, failures: 0, worst_margin: f64::INFINITY, counterexample: None } }
    }

    /// Records `value ≤ bound`.
    fn check(&mut self, value: &Rational, bound: &Rational, instance: impl FnOnce() -> serde_json::Value) {
        let slack = bound - value;
        let margin = if bound.is_zero() {
            if slack.is_zero() {
                0.0
            } else {
                -1.0
            }
        } else {
            scalar::to_f64(&(&slack / bound.abs()))
        };
        self.row.worst_margin = self.row.worst_margin.min(margin);
        if slack.is_negative() {
            self.fail(instance);
        }
    }

    fn fail(&mut self, instance: impl FnOnce() -> serde_json::Value) {
        self.row.failures += 1;
        if self.row.counterexample.is_none() {
            self.row.counterexample = Some(instance());
        }
    }

    fn finish(mut self, trials: usize) -> LemmaRow {
        self.row.trials = trials;
        if !self.row.worst_margin.is_finite() {
            self.row.worst_margin = 0.0;
        }
        self.row
    }
}

fn small(rng: &mut ChaCha8Rng) -> Rational {
    scalar::ratio(rng.gen_range(-16..=16), 8)
}

fn depth(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi.max(lo))
}

/// Entries are zero with probability 1/4, so sparse patterns occur too.
pub fn random_multiplier(depth: usize, rng: &mut ChaCha8Rng) -> HaarMultiplier {
    let entries = (0..1usize << depth).map(|_| if rng.gen_ratio(1, 4) { Rational::zero() } else { small(rng) }).collect();
    HaarMultiplier { depth, entries }
}

/// The recurrence run on the multiplier cut one level short.
fn faulty_triple_norm(d: &HaarMultiplier) -> Rational {
    if d.depth == 0 {
        return triple_norm(d);
    }
    let k = d.depth - 1;
    triple_norm(&HaarMultiplier { depth: k, entries: d.entries[..1 << k].to_vec() })
}

fn json<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).unwrap_or(serde_json::Value::Null)
}

/// `‖D‖ ≤ |||D||| ≤ 3‖D‖`.
pub fn sandwich(cfg: &LemmaConfig) -> LemmaRow {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Tally::new("sandwich");
    for _ in 0..cfg.trials {
        let d = random_multiplier(depth(&mut rng, cfg.min_depth, cfg.max_depth), &mut rng);
        let op = operator_norm_exact(&d);
        let tri = if cfg.fault == Some(Fault::TripleNormOffByOne) { faulty_triple_norm(&d) } else { triple_norm(&d) };
        let report = || serde_json::json!({ "multiplier": json(&d), "opnorm": scalar::format(&op), "triple": scalar::format(&tri) });
        t.check(&op, &tri, report);
        t.check(&tri, &(&op * scalar::int(3)), report);
    }
    t.finish(cfg.trials)
}

/// The branch function norm is at most the total variation, and its mass on
/// `∪_{j≥m} B_j` is at least a third of the tail variation.
pub fn branch_variation_bounds(cfg: &LemmaConfig) -> LemmaRow {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1);
    let mut t = Tally::new("branch-variation");
    for _ in 0..cfg.trials {
        let n = depth(&mut rng, cfg.min_depth.max(1), cfg.max_depth.min(12));
        let a: Vec<Rational> = (0..=n).map(|_| small(&mut rng)).collect();
        let report = || serde_json::json!({ "coefficients": a.iter().map(scalar::format).collect::<Vec<_>>() });
        t.check(&branch_tail_mass(&a, 0), &branch_variation(&a, 0), report);
        for m in 1..n {
            t.check(&branch_variation(&a, m), &(branch_tail_mass(&a, m) * scalar::int(3)), report);
        }
    }
    t.finish(cfg.trials)
}

/// Closed-form and enumerated `Var(Φ)` agree and stay below `M²/N`.
pub fn concentration(cfg: &LemmaConfig) -> LemmaRow {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x2);
    let mut t = Tally::new("concentration");
    for _ in 0..cfg.trials {
        let n = rng.gen_range(1..=12);
        let pairs: Vec<(Rational, Rational)> = (0..n).map(|_| (small(&mut rng), small(&mut rng))).collect();
        let report = || serde_json::json!({ "pairs": pairs.iter().map(|(a, b)| [scalar::format(a), scalar::format(b)]).collect::<Vec<_>>() });
        let g = DoubletonSpace::new(pairs.clone()).expect("n ≥ 1");
        let closed = splitting_statistics(&g);
        match exhaustive_statistics(&g) {
            Ok(ex) if ex == closed => {}
            _ => t.fail(report),
        }
        t.check(&closed.variance, &closed.variance_bound, report);
    }
    t.finish(cfg.trials)
}

/// On stable diagonals the certified collapse bound is at most `7ε`, each
/// telescoping term meets `ε 2^{-n+1}`, and the sampled lower estimate and
/// the measured certificate error stay below the bound.
pub fn tensor_collapse(cfg: &LemmaConfig) -> Result<LemmaRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x3);
    let mut t = Tally::new("tensor-collapse");
    let eps = scalar::ratio(1, 4);
    for _ in 0..cfg.trials {
        let n = depth(&mut rng, cfg.min_depth.min(3), cfg.max_depth.min(3));
        let m = rng.gen_range(1..=2);
        let seed = rng.gen();
        let s = stable_diagonal(n, m, Space::l1(), &eps, seed)?;
        let out = step4_collapse(&s, &eps, false, 4, seed)?;
        let report = || serde_json::json!({ "outer_depth": n, "inner_depth": m, "seed": seed });
        t.check(&out.bound.total, &(&eps * scalar::int(7)), report);
        for (term, target) in out.bound.telescoping.iter().zip(&out.telescoping_targets) {
            t.check(term, target, report);
        }
        t.check(&out.certificate.error, &out.bound.total, report);
        if out.lower_estimate > scalar::to_f64(&out.bound.total) * (1.0 + 1e-9) {
            t.fail(report);
        }
    }
    Ok(t.finish(cfg.trials))
}

fn measured(t: &L1Operator, a: L1Operator, b: L1Operator, noise: &L1Operator) -> Result<FactorCertificate<L1Domain>> {
    let image = b.compose(&t.compose(&a)?)?;
    let target = image.add(noise)?;
    FactorCertificate::measured(&L1Domain, "link", CertKind::Factor, a, b, t.clone(), target)
}

/// Composing two measured certificates gives `(CD, Dε + δ)`, and the
/// composite verifies against its own recomputation.
pub fn certificate_algebra(cfg: &LemmaConfig) -> Result<LemmaRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4);
    let mut t = Tally::new("certificate-algebra");
    for _ in 0..cfg.trials {
        let n = depth(&mut rng, cfg.min_depth.min(3), cfg.max_depth.min(3));
        let src = random_l1_operator(n, &mut rng);
        let eighth = scalar::ratio(1, 8);
        let map = |rng: &mut ChaCha8Rng| L1Operator::identity(n).add(&random_l1_operator(n, rng).scale(&eighth));
        let noise = |rng: &mut ChaCha8Rng| random_l1_operator(n, rng).scale(&scalar::ratio(1, 64));
        let first = measured(&src, map(&mut rng)?, map(&mut rng)?, &noise(&mut rng))?;
        let second = measured(&first.target, map(&mut rng)?, map(&mut rng)?, &noise(&mut rng))?;
        let report = || serde_json::json!({ "first": json(&first), "second": json(&second) });
        let c = compose(&L1Domain, &first, &second)?;
        let v = c.verify(&L1Domain)?;
        let formula = (&first.constant * &second.constant, &second.constant * &first.error + &second.error);
        if c.constant != formula.0 || c.error != formula.1 || !v.valid {
            t.fail(report);
        }
        t.check(&v.measured_error, &c.error, report);
        t.check(&v.measured_constant, &c.constant, report);
    }
    Ok(t.finish(cfg.trials))
}

/// All suites in table order; none at all for zero trials.
pub fn run_all(cfg: &LemmaConfig) -> Result<Vec<LemmaRow>> {
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    Ok(vec![sandwich(cfg), branch_variation_bounds(cfg), concentration(cfg), tensor_collapse(cfg)?, certificate_algebra(cfg)?])
}
