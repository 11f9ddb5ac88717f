use dyadic_factor::families::{multiplier_tensor, random_contraction, tail_multiplier};
use dyadic_factor::mixed::{xdiagonal_distance, MixedDomain, MixedOperator};
use dyadic_factor::op1::BuilderConfig;
use dyadic_factor::pipeline::{run_pipeline, step1_diagonalize, step4_collapse, PipelineBudget, StageDepths};
use dyadic_factor::scalar::{int, ratio};
use dyadic_factor::stepfun::Space;
use num_traits::Zero;

#[test]
fn scalar_operator_is_recovered_exactly() {
    let t = MixedOperator::scalar(3, 2, Space::l1(), ratio(-2, 7)).unwrap();
    let o = run_pipeline(&t, &ratio(1, 2), &PipelineBudget::new(1, 1), 0).unwrap();
    assert!(o.verified(), "{:?}", o.failure);
    assert_eq!(o.lambda, Some(ratio(-2, 7)));
    assert!(o.total_error().unwrap().is_zero());
    assert_eq!(o.stages.len(), 5);
}

#[test]
fn scalar_on_l2_inner_space() {
    let t = MixedOperator::scalar(3, 2, Space::lp(2.0).unwrap(), ratio(3, 4)).unwrap();
    let o = run_pipeline(&t, &ratio(1, 4), &PipelineBudget::new(1, 1), 9).unwrap();
    assert!(o.verified());
    assert_eq!(o.lambda, Some(ratio(3, 4)));
    assert!(o.total_error().unwrap().is_zero());
}

#[test]
fn multiplier_tensor_gives_its_tail() {
    let d = tail_multiplier(6, 3, &ratio(1, 2), 11);
    let t = multiplier_tensor(&d, 4, Space::l1()).unwrap();
    let mut budget = PipelineBudget::new(2, 2);
    budget.builder.base = 3;
    let o = run_pipeline(&t, &ratio(1, 2), &budget, 11).unwrap();
    assert!(o.verified());
    assert_eq!(o.lambda, Some(ratio(1, 2)));
    let c = o.certificate.unwrap();
    assert_eq!((c.target.outer_depth, c.target.inner_depth), (2, 2));
}

#[test]
fn contraction_chain_verifies_and_is_deterministic() {
    let t = random_contraction(4, 2, Space::l1(), 3).unwrap();
    let budget = PipelineBudget::new(1, 1);
    let a = run_pipeline(&t, &ratio(1, 2), &budget, 3).unwrap();
    let b = run_pipeline(&t, &ratio(1, 2), &budget, 3).unwrap();
    assert!(a.verified());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = a.certificate.unwrap();
    let v = c.verify(&MixedDomain).unwrap();
    assert!(v.measured_error <= c.error);
}

#[test]
fn diagonalize_leaves_xdiagonal_input_alone() {
    let t = MixedOperator::scalar(3, 2, Space::l1(), ratio(1, 3)).unwrap();
    let o = step1_diagonalize(&t, &ratio(1, 4), (3, 2), &BuilderConfig::default()).unwrap();
    assert_eq!(o.operator, t);
    assert!(o.achieved.is_zero() && !o.shortfall);
    assert_eq!(o.certificate.constant, int(1));
}

#[test]
fn diagonalize_output_is_xdiagonal() {
    let t = random_contraction(4, 2, Space::l1(), 1).unwrap();
    let o = step1_diagonalize(&t, &ratio(1, 2), (3, 1), &BuilderConfig::default()).unwrap();
    assert!(xdiagonal_distance(&o.operator).is_zero());
    assert_eq!((o.operator.outer_depth, o.operator.inner_depth), (3, 1));
    assert!(o.certificate.verify(&MixedDomain).unwrap().valid);
}

#[test]
fn collapse_of_a_diagonal_tensor_is_exact() {
    let t = random_contraction(3, 1, Space::l1(), 2).unwrap();
    let s = MixedOperator::diagonal_tensor(&t.entries()[0], 2, Space::l1()).unwrap();
    let o = step4_collapse(&s, &ratio(1, 4), true, 4, 0).unwrap();
    assert!(o.bound.total.is_zero() && o.certificate.error.is_zero());
    assert_eq!(o.t0, t.entries()[0]);
}

#[test]
fn depth_plan() {
    let p = StageDepths::plan((6, 4), (2, 2));
    assert_eq!(p, StageDepths { diagonalize: (5, 3), reduce_outer: 4, stabilize_inner: 2 });
    let q = StageDepths::plan((2, 1), (2, 1));
    assert_eq!(q, StageDepths { diagonalize: (2, 1), reduce_outer: 2, stabilize_inner: 1 });
}

#[test]
fn bad_budgets_are_rejected() {
    let t = MixedOperator::identity(2, 1, Space::l1()).unwrap();
    assert!(run_pipeline(&t, &ratio(1, 2), &PipelineBudget::new(3, 1), 0).is_err());
    assert!(run_pipeline(&t, &ratio(0, 1), &PipelineBudget::new(1, 1), 0).is_err());
    assert!(run_pipeline(&t, &ratio(-1, 2), &PipelineBudget::new(1, 1), 0).is_err());
}

#[test]
fn zero_operator_takes_the_complement_route() {
    let t = MixedOperator::zero(3, 2, Space::l1()).unwrap();
    let o = run_pipeline(&t, &ratio(1, 2), &PipelineBudget::new(1, 1), 0).unwrap();
    assert!(o.verified());
    assert_eq!(o.lambda, Some(ratio(0, 1)));
    assert!(o.verdict.is_some());
}
