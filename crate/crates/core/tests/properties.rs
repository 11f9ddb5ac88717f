use dyadic_factor::certificate::{compose, CertDomain, CertKind, FactorCertificate, L1Domain};
use dyadic_factor::concentration::{exhaustive_statistics, sign_select, sign_select_exhaustive, splitting_statistics, DoubletonSpace};
use dyadic_factor::dyadic::{self, DyadicInterval};
use dyadic_factor::mixed::{collapse_bound, exact_l1l1_norm, norm_upper_bound, xdiagonal_distance, MixedDomain, MixedOperator};
use dyadic_factor::multiplier::{operator_norm_exact, triple_norm, HaarMultiplier};
use dyadic_factor::op1::L1Operator;
use dyadic_factor::pipeline::{primariness_verdict, DEFAULT_TOLERANCE};
use dyadic_factor::scalar::{self, int, ratio, Rational};
use dyadic_factor::stepfun::{haar_analysis, haar_synthesis, Space, StepFunction};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rationals(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-16i64..=16).prop_map(|k| ratio(k, 8)), len)
}

fn multiplier(max_depth: usize) -> impl Strategy<Value = HaarMultiplier> {
    (0..=max_depth).prop_flat_map(|n| rationals(1 << n).prop_map(move |e| HaarMultiplier::new(n, e).unwrap()))
}

fn operator(n: usize) -> impl Strategy<Value = L1Operator> {
    let w = 1usize << n;
    rationals(w * w).prop_map(move |k| L1Operator::from_coefficient_matrix(n, n, |r, c| k[r * w + c].clone()))
}

fn step_function(n: usize) -> impl Strategy<Value = StepFunction> {
    rationals(1 << n).prop_map(move |v| StepFunction::new(n, v).unwrap())
}

/// All blocks `(L, M)` filled on host `(n, m)`.
fn mixed(n: usize, m: usize) -> impl Strategy<Value = MixedOperator> {
    let blocks = 1usize << (2 * m);
    prop::collection::vec(operator(n), blocks).prop_map(move |ops| {
        let mut t = MixedOperator::zero(n, m, Space::l1()).unwrap();
        let ids: Vec<DyadicInterval> = dyadic::intervals(m).collect();
        for (k, op) in ops.into_iter().enumerate() {
            t.set_block(ids[k / ids.len()], ids[k % ids.len()], op.scale(&ratio(1, 4))).unwrap();
        }
        t
    })
}

fn xdiagonal(n: usize, m: usize) -> impl Strategy<Value = MixedOperator> {
    prop::collection::vec(operator(n), 1 << m).prop_map(move |e| MixedOperator::from_entries(&e, Space::l1()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interval_codes_round_trip(code in 1u64..(1 << 12)) {
        let i = DyadicInterval::from_code(code).unwrap();
        prop_assert_eq!(i.code(), code);
        let kids = i.children();
        let total: Rational = kids.iter().map(|k| k.measure()).sum();
        prop_assert_eq!(total, i.measure());
        for k in kids {
            prop_assert_eq!(k.parent(), Some(i));
            prop_assert!(i.contains(k));
        }
    }

    #[test]
    fn haar_transform_inverts(f in (0usize..=5).prop_flat_map(step_function)) {
        prop_assert_eq!(haar_synthesis(&haar_analysis(&f)), f);
    }

    #[test]
    fn multiplier_sandwich(d in multiplier(6)) {
        let op = operator_norm_exact(&d);
        let tri = triple_norm(&d);
        prop_assert!(op <= tri && tri <= &op * int(3));
        prop_assert_eq!(op, L1Operator::from_multiplier(&d).norm_exact());
    }

    #[test]
    fn triple_norm_is_a_norm(pair in (0usize..=5).prop_flat_map(|n| (rationals(1 << n), rationals(1 << n)).prop_map(move |(a, b)| (n, a, b))), c in -4i64..=4) {
        let (n, a, b) = pair;
        let d = HaarMultiplier::new(n, a).unwrap();
        let e = HaarMultiplier::new(n, b).unwrap();
        let sum = HaarMultiplier::new(n, d.entries.iter().zip(&e.entries).map(|(x, y)| x + y).collect()).unwrap();
        prop_assert!(triple_norm(&sum) <= triple_norm(&d) + triple_norm(&e));
        let scaled = HaarMultiplier::new(n, d.entries.iter().map(|x| x * int(c)).collect()).unwrap();
        prop_assert_eq!(triple_norm(&scaled), triple_norm(&d) * int(c.abs()));
    }

    #[test]
    fn l1_norm_is_submultiplicative(ops in (0usize..=3).prop_flat_map(|n| (operator(n), operator(n), step_function(n)))) {
        let (s, t, f) = ops;
        let st = s.compose(&t).unwrap();
        prop_assert!(st.norm_exact() <= s.norm_exact() * t.norm_exact());
        prop_assert!(s.add(&t).unwrap().norm_exact() <= s.norm_exact() + t.norm_exact());
        prop_assert_eq!(st.apply(&f).unwrap(), s.apply(&t.apply(&f).unwrap()).unwrap());
        prop_assert!(s.apply(&f).unwrap().l1_norm() <= s.norm_exact() * f.l1_norm());
    }

    #[test]
    fn mixed_bound_dominates_exact_norm(t in (1usize..=2).prop_flat_map(|m| mixed(2, m))) {
        let exact = exact_l1l1_norm(&t).unwrap();
        prop_assert!(exact <= norm_upper_bound(&t));
        let back: MixedOperator = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert!(xdiagonal_distance(&t.xdiagonal_part()).is_zero());
    }

    #[test]
    fn collapse_bound_dominates_dense_distance(s in (1usize..=2).prop_flat_map(|m| xdiagonal(2, m))) {
        let entries = s.entries();
        let b = collapse_bound(&entries);
        let diff = s.sub(&MixedOperator::diagonal_tensor(&entries[0], s.inner_depth, Space::l1()).unwrap()).unwrap();
        prop_assert!(exact_l1l1_norm(&diff).unwrap() <= b.total);
        prop_assert_eq!(MixedOperator::diagonal_tensor(&entries[0], 2, Space::l1()).unwrap().as_diagonal_tensor(), Some(entries[0].clone()));
    }

    #[test]
    fn splitting_statistics_agree(pairs in prop::collection::vec((-8i64..=8, -8i64..=8), 1..=10)) {
        let g = DoubletonSpace::new(pairs.iter().map(|&(a, b)| (ratio(a, 4), ratio(b, 4))).collect()).unwrap();
        let s = splitting_statistics(&g);
        prop_assert_eq!(&s, &exhaustive_statistics(&g).unwrap());
        prop_assert!(s.variance <= s.variance_bound);
        let eta = ratio(1, 8);
        let best = sign_select_exhaustive(&g, &eta).unwrap();
        let random = sign_select(&g, &eta, 7, 4).unwrap();
        prop_assert!(best.deviation <= random.deviation);
    }

    #[test]
    fn composition_follows_the_formula(ops in (1usize..=2).prop_flat_map(|n| (operator(n), operator(n), operator(n), operator(n)))) {
        let (t, a, e1, e2) = ops;
        let n = t.depth();
        let small = ratio(1, 16);
        let a = L1Operator::identity(n).add(&a.scale(&small)).unwrap();
        let first = FactorCertificate::measured(&L1Domain, "first", CertKind::Factor, a.clone(), L1Operator::identity(n), t.clone(), t.compose(&a).unwrap().add(&e1.scale(&small)).unwrap()).unwrap();
        let s = first.target.clone();
        let second = FactorCertificate::measured(&L1Domain, "second", CertKind::Factor, L1Operator::identity(n), a.clone(), s.clone(), a.compose(&s).unwrap().add(&e2.scale(&small)).unwrap()).unwrap();
        let c = compose(&L1Domain, &first, &second).unwrap();
        prop_assert_eq!(&c.constant, &(&first.constant * &second.constant));
        prop_assert_eq!(&c.error, &(&second.constant * &first.error + &second.error));
        prop_assert!(c.verify(&L1Domain).unwrap().valid);
    }

    #[test]
    fn rationals_round_trip(p in -100_000i64..100_000, q in 0u32..20) {
        let x = Rational::new(p.into(), (1i64 << q).into());
        prop_assert_eq!(scalar::parse(&scalar::format(&x)).unwrap(), x.clone());
        prop_assert_eq!(scalar::parse(&scalar::format_dyadic(&x)).unwrap(), x);
    }

    #[test]
    fn verdict_constants(lambda in prop::sample::select(vec![ratio(1, 1), ratio(3, 4), ratio(-1, 2), ratio(5, 8)]), e in 0i64..=8) {
        let eps = ratio(e, 64);
        let mut noise = L1Operator::zero(2);
        noise.set(DyadicInterval::new(1, 1), DyadicInterval::new(1, 0), eps.clone());
        let t = L1Operator::scalar(2, lambda.clone()).add(&noise).unwrap();
        let id = L1Operator::identity(2);
        let cert = FactorCertificate::measured(&L1Domain, "t", CertKind::ProjectionalFactor, id.clone(), id, t, L1Operator::scalar(2, lambda.clone())).unwrap();
        prop_assert_eq!(&cert.error, &eps);
        let v = primariness_verdict(&L1Domain, &cert, &lambda, DEFAULT_TOLERANCE).unwrap();
        let denom = Rational::one() - int(2) * &eps;
        prop_assert_eq!(v.factor_constant, int(2) / &denom);
        prop_assert_eq!(v.neumann_bound, denom.recip());
        prop_assert!(v.verified && v.residual <= v.residual_bound);
    }
}

#[test]
fn mixed_identity_certificate_verifies() {
    let t = MixedOperator::scalar(2, 1, Space::l1(), ratio(1, 3)).unwrap();
    let c = dyadic_factor::pipeline::identity_certificate("id", &t);
    let v = c.verify(&MixedDomain).unwrap();
    assert!(v.valid && v.measured_error.is_zero());
    assert!(MixedDomain.op_norm(&t).unwrap() >= ratio(1, 3));
}
