use super::*;
use crate::demand::GrossRelation;
use crate::portfolio::{classify_modularity, Modularity, RelationKind};

fn pf(s: &str) -> Portfolio {
    Portfolio::from_indicator(s).unwrap()
}

fn cfg() -> OptimizerConfig<f64> {
    OptimizerConfig::default()
}

fn monopoly(c: f64) -> DemandModel<f64> {
    DemandModel::linear(vec![1.0], vec![vec![1.0]], vec![c]).unwrap()
}

#[test]
fn single_product_monopoly() {
    for c in [0.0, 0.3, 0.9] {
        let r = max_profit(&monopoly(c), pf("1"), &cfg()).unwrap();
        assert_eq!(r.status, OptStatus::Converged);
        assert!((r.q[0] - (1.0 - c) / 2.0).abs() < 1e-8, "{c}: {r:?}");
        assert!((r.value - (1.0 - c).powi(2) / 4.0).abs() < 1e-12);
    }
    let empty = max_profit(&monopoly(0.0), pf("0"), &cfg()).unwrap();
    assert_eq!((empty.value, empty.starts), (0.0, 0));
}

#[test]
fn sqrt_spillover_optima() {
    let up = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    let r = max_profit(&up, pf("111"), &cfg()).unwrap();
    assert_eq!(r.status, OptStatus::Converged);
    assert!((r.q[0] - 0.589).abs() < 2e-3 && (r.q[1] - 0.589).abs() < 2e-3 && (r.q[2] - 0.771).abs() < 2e-3);
    assert!((r.value - 1.08).abs() < 5e-3);
    let r = max_profit(&up, pf("001"), &cfg()).unwrap();
    assert!((r.value - 0.25).abs() < 1e-12);
    assert_eq!(&r.q[..2], &[0.0, 0.0]);

    let down = DemandModel::sqrt_spillover(0.0, -0.5).unwrap();
    let r = max_profit(&down, pf("101"), &cfg()).unwrap();
    assert!((r.q[0] - 0.437).abs() < 2e-3 && (r.q[2] - 0.335).abs() < 2e-3, "{r:?}");
    assert_eq!(r.q[1], 0.0);
    assert!((r.value - 0.358).abs() < 5e-3);
}

#[test]
fn value_is_revenue_at_the_optimum() {
    let m = DemandModel::sqrt_spillover(0.02, 0.3).unwrap();
    for x in Portfolio::all(3).unwrap() {
        let r = max_profit(&m, x, &cfg()).unwrap();
        assert_eq!(r.value, m.revenue(&r.q).unwrap());
        for i in 1..=3 {
            if !x.contains(i) {
                assert_eq!(r.q[i - 1], 0.0);
            } else {
                assert!(r.q[i - 1] >= cfg().floor);
            }
        }
    }
}

#[test]
fn projected_gradient_optimality() {
    let m = DemandModel::linear(vec![1.0, 0.05], vec![vec![1.0, 0.5], vec![0.5, 1.0]], vec![0.0, 0.2]).unwrap();
    let r = max_profit(&m, pf("11"), &cfg()).unwrap();
    assert_eq!(r.status, OptStatus::Converged);
    // Product 2 is priced below cost at any positive quantity; it sits on the floor.
    assert_eq!(r.q[1], cfg().floor);
    let g = m.revenue_gradient(&r.q).unwrap();
    assert!(g[0].abs() <= 1e-9);
    assert!(g[1] <= 1e-9);
}

#[test]
fn portfolio_monotonicity() {
    for m in [
        DemandModel::sqrt_spillover(0.0, 0.5).unwrap(),
        DemandModel::sqrt_spillover(0.0, -0.5).unwrap(),
        DemandModel::log_spillover(-0.125, -0.8, -1e-4).unwrap(),
    ] {
        let oracle = ProfitOracle::new(m, cfg()).unwrap();
        for x in Portfolio::all(3).unwrap() {
            for i in 1..=3 {
                let lo = oracle.eval(x).unwrap();
                let hi = oracle.eval(x.with(i).unwrap()).unwrap();
                assert!(hi >= lo - 1e-9, "{x} + {i}: {hi} < {lo}");
            }
        }
    }
}

#[test]
fn oracle_memoises() {
    let oracle = ProfitOracle::new(DemandModel::sqrt_spillover(0.0, 0.5).unwrap(), cfg()).unwrap();
    let a = oracle.result(pf("110")).unwrap();
    let b = oracle.result(pf("110")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, max_profit(oracle.model(), pf("110"), oracle.config()).unwrap());
    assert_eq!(oracle.evaluated().len(), 1);
    assert!(oracle.eval(pf("11")).is_err());
}

#[test]
fn degenerate_maxima_are_flagged() {
    // R(q) = q − q² + 0.05·sin(20q) has several interior local maxima.
    let m = DemandModel::custom(1, |q: &[f64]| {
        let q = q[0];
        let wiggle = if q == 0.0 { 1.0 } else { 0.05 * (20.0 * q).sin() / q };
        Ok(vec![1.0 - q + wiggle])
    })
    .unwrap();
    let r = max_profit(&m, pf("1"), &OptimizerConfig { gradient_tolerance: 1e-7, ..cfg() }).unwrap();
    assert_eq!(r.status, OptStatus::Degenerate);
    // The best start wins.
    assert!(r.value > 0.288);
}

#[test]
fn partial_max_examples() {
    let lin = DemandModel::linear(vec![1.0, 1.0], vec![vec![1.0, -0.2], vec![-0.3, 1.0]], vec![0.0; 2]).unwrap();
    for (a, b) in [(0.1, 0.7), (0.5, 0.5)] {
        let m = partial_max(&lin, (1, 2), (a, b), pf("11"), InnerBounds::Floor, &cfg()).unwrap();
        assert_eq!(m.value, lin.revenue(&[a, b]).unwrap());
        assert_eq!(m.starts, 0);
    }
    let eq7 = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    let m = partial_max(&eq7, (1, 2), (0.0, 0.0), pf("111"), InnerBounds::Floor, &cfg()).unwrap();
    assert!((m.value - 0.25).abs() < 1e-12);
    let via_oracle = max_profit(&eq7, pf("001"), &cfg()).unwrap().value;
    assert!((m.value - via_oracle).abs() < 1e-12);
    assert!(partial_max(&eq7, (1, 2), (-0.1, 0.0), pf("111"), InnerBounds::Floor, &cfg()).is_err());
}

#[test]
fn log_spillover_cross_partial_of_partial_max() {
    let (b, gamma, alpha) = (-0.125, -0.8, -1e-4);
    let m = DemandModel::log_spillover(b, gamma, alpha).unwrap();
    for (q1, q2) in [(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)] {
        let fd = partial_max_cross(&m, (1, 2), (q1, q2), pf("111"), InnerBounds::Free, 1e-4, &cfg()).unwrap();
        let closed = alpha * alpha / 2.0 + alpha * gamma + b / (1.0 + q1) + b / (1.0 + q2) + gamma * gamma / 2.0;
        assert!((fd - closed).abs() < 1e-4, "({q1}, {q2}): {fd} vs {closed}");
    }
}

#[test]
fn linear_supermodularity_is_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let s = random_linear(&mut rng, 3, LinearKind::Complements).unwrap();
        for q1 in [0.0, 0.3, 0.6] {
            for q2 in [0.0, 0.3, 0.6] {
                let d = partial_max_cross(&s.model, (1, 2), (q1, q2), pf("111"), InnerBounds::Floor, 1e-4, &cfg()).unwrap();
                assert!(d >= -1e-6, "{d}");
            }
        }
    }
}

#[test]
fn foc_examples() {
    let s = solve_sqrt_spillover_foc(0.5f64, FocVariant::TwoPlusThree).unwrap();
    assert!((s.q - 0.589).abs() < 2e-3 && (s.q3 - 0.771).abs() < 2e-3);
    let s = solve_sqrt_spillover_foc(0.5f64, FocVariant::OnePlusThree).unwrap();
    assert!((s.q - 0.611).abs() < 2e-3 && (s.q3 - 0.695).abs() < 2e-3 && (s.value - 0.721).abs() < 5e-3);
    let s = solve_sqrt_spillover_foc(-0.5f64, FocVariant::TwoPlusThree).unwrap();
    assert!((s.q - 0.467).abs() < 2e-3 && (s.q3 - 0.259).abs() < 2e-3 && (s.value - 0.565).abs() < 5e-3);
    let s = solve_sqrt_spillover_foc(0.0f64, FocVariant::OnePlusThree).unwrap();
    assert_eq!((s.q, s.q3, s.value), (0.5, 0.5, 0.5));
}

#[test]
fn foc_agrees_with_optimizer() {
    for gamma in [0.5, -0.5, 0.25, -0.25] {
        let m = DemandModel::sqrt_spillover(0.0, gamma).unwrap();
        for (variant, x) in [(FocVariant::TwoPlusThree, "111"), (FocVariant::OnePlusThree, "101")] {
            let foc = solve_sqrt_spillover_foc(gamma, variant).unwrap();
            let opt = max_profit(&m, pf(x), &cfg()).unwrap();
            assert!((foc.value - opt.value).abs() < 1e-3, "{gamma} {variant:?}: {} vs {}", foc.value, opt.value);
        }
    }
}

#[test]
fn merger_delta_of_independent_products_is_zero() {
    let m = DemandModel::linear(vec![1.0, 1.0, 1.0], vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.5]], vec![0.0; 3])
        .unwrap();
    let d = merger_delta(&m, (1, 2), &cfg()).unwrap();
    assert!(d.delta.abs() < 1e-12);
    assert!(merger_delta(&m, (2, 2), &cfg()).is_err());
}

#[test]
fn limit_sweep_reports_each_parameter() {
    let rows = limit_sweep(|b| DemandModel::sqrt_spillover(b, 0.5), &[1e-2, 1e-3], (1, 2), &cfg()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|(_, r)| r.delta < 0.0));
}

#[test]
fn predicate_parsing() {
    let p = Predicate::parse("gross=complements && delta<0").unwrap();
    assert_eq!(p.atoms(), &[Atom::Gross(true, GrossRelation::StrictGrossComplements), Atom::Delta(Cmp::Lt, 0.0)]);
    assert_eq!(p.to_string(), "gross=complements && delta<0");
    let q = Predicate::parse("gap >= -1e-3 and profit != additive").unwrap();
    assert_eq!(q.atoms(), &[Atom::Gap(Cmp::Ge, -1e-3), Atom::Profit(false, RelationKind::Additive)]);
    assert!(Predicate::parse("delta").is_err());
    assert!(Predicate::parse("gross<complements").is_err());
    assert!(Predicate::parse("speed>1").is_err());
    assert!(Predicate::parse("delta<0 &&").is_err());

    let ctx = PredicateContext { delta: Some(-0.1), gross: Some(GrossRelation::StrictGrossComplements), ..Default::default() };
    assert!(p.eval(&ctx).unwrap());
    assert!(!Predicate::parse("delta>0").unwrap().eval(&ctx).unwrap());
    assert!(Predicate::parse("gap>0").unwrap().eval(&ctx).is_err());
}

fn sqrt_sampler(b: (f64, f64), gamma: (f64, f64)) -> impl FnMut(&mut ChaCha8Rng) -> Result<SampledModel<f64>> {
    move |rng| {
        let (bb, g) = (rng.gen_range(b.0..b.1), rng.gen_range(gamma.0..gamma.1));
        Ok(SampledModel { params: vec![("b".into(), bb), ("gamma".into(), g)], model: DemandModel::sqrt_spillover(bb, g)? })
    }
}

#[test]
fn counterexample_search_finds_both_directions() {
    let pred = Predicate::parse("gross=complements && delta<0").unwrap();
    let hit = counterexample_search(sqrt_sampler((1e-4, 0.05), (0.3, 0.7)), &pred, (1, 2), 20, 7, &cfg())
        .unwrap()
        .expect("instance");
    let d = hit.delta.as_ref().unwrap().delta;
    assert!(d < 0.0);
    let b = hit.params[0].1;
    let g = hit.params[1].1;
    assert!((merger_delta(&DemandModel::sqrt_spillover(b, g).unwrap(), (1, 2), &cfg()).unwrap().delta - d).abs() < 1e-12);

    let pred = Predicate::parse("gross=substitutes && delta>0").unwrap();
    let hit = counterexample_search(sqrt_sampler((-0.05, -1e-4), (-0.7, -0.3)), &pred, (1, 2), 20, 7, &cfg()).unwrap();
    assert!(hit.is_some());
}

#[test]
fn counterexample_search_is_deterministic() {
    let pred = Predicate::parse("delta<-0.05").unwrap();
    let a = counterexample_search(sqrt_sampler((1e-4, 0.05), (0.0, 0.7)), &pred, (1, 2), 30, 3, &cfg()).unwrap().unwrap();
    let b = counterexample_search(sqrt_sampler((1e-4, 0.05), (0.0, 0.7)), &pred, (1, 2), 30, 3, &cfg()).unwrap().unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.draw, b.draw);
    assert!(counterexample_search(sqrt_sampler((0.0, 0.1), (0.0, 0.1)), &pred, (1, 2), 0, 3, &cfg()).is_err());
}

#[test]
fn linear_complements_have_no_counterexample() {
    let pred = Predicate::parse("delta<0").unwrap();
    let sampler = |rng: &mut ChaCha8Rng| random_linear(rng, 3, LinearKind::Complements);
    let hit = counterexample_search(sampler, &pred, (1, 2), 25, 5, &cfg()).unwrap();
    assert!(hit.is_none());
}

#[test]
fn random_linear_systems_are_supermodular() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [2, 3] {
        let s = random_linear(&mut rng, n, LinearKind::Complements).unwrap();
        let oracle = ProfitOracle::new(s.model, cfg()).unwrap();
        assert_eq!(classify_modularity(&oracle, 1e-7).unwrap().verdict, Modularity::Supermodular);
    }
    let s = random_linear(&mut rng, 2, LinearKind::Substitutes).unwrap();
    let oracle = ProfitOracle::new(s.model, cfg()).unwrap();
    assert_eq!(classify_modularity(&oracle, 1e-7).unwrap().verdict, Modularity::Submodular);
}

#[test]
fn single_precision_monopoly() {
    let m = DemandModel::<f32>::linear(vec![1.0], vec![vec![1.0]], vec![0.3]).unwrap();
    let r = max_profit(&m, pf("1"), &OptimizerConfig { gradient_tolerance: 1e-5, ..Default::default() }).unwrap();
    assert!((r.q[0] - 0.35).abs() < 1e-4);
}
