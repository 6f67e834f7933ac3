use super::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn families() -> Vec<DemandModel<f64>> {
    vec![
        DemandModel::linear(
            vec![1.0, 1.2, 0.9],
            vec![vec![2.0, -0.3, 0.2], vec![-0.4, 1.5, 0.1], vec![0.3, -0.2, 1.8]],
            vec![0.0, 0.1, 0.2],
        )
        .unwrap(),
        DemandModel::sqrt_spillover(0.0, 0.5).unwrap(),
        DemandModel::sqrt_spillover(0.05, 0.4).unwrap(),
        DemandModel::sqrt_spillover(-0.05, -0.4).unwrap(),
        DemandModel::log_spillover(-0.125, -0.8, -1e-4).unwrap(),
        DemandModel::log_spillover(0.3, 0.2, 0.1).unwrap(),
        DemandModel::one_stop(vec![1.0, 2.0, 1.5], vec![1.0, 1.5, 0.5], ShoppingCostCdf::Exponential { rate: 0.8 })
            .unwrap(),
        DemandModel::custom(2, |q: &[f64]| Ok(vec![1.0 - q[0] + 0.2 * q[1] * q[1], 1.0 - 2.0 * q[1] + 0.1 * q[0]]))
            .unwrap(),
    ]
}

fn interior_quantities(n: usize) -> Vec<Vec<f64>> {
    EvaluationRegion::cube(Space::Quantity, n, 0.1, 0.6).with_resolution(3).nodes()
}

#[test]
fn sqrt_spillover_examples() {
    let m = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    assert_eq!(m.demand(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    let m = DemandModel::sqrt_spillover(0.1, 0.5).unwrap();
    let d = m.demand(&[0.5, 0.5, 0.5]).unwrap();
    assert!(close(d[0], 0.6, 1e-15) && close(d[1], 0.6, 1e-15) && close(d[2], 1.0, 1e-15));
    assert!(matches!(m.demand(&[1.5, 0.6, 0.5]), Err(Error::OutOfDomain(_))));
    let m = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    let p = m.inverse_demand(&[0.589, 0.589, 0.771]).unwrap();
    assert!(close(p[2], 1.0 - 0.771 + 0.5 * 1.178f64.sqrt(), 1e-15));
    assert!(close(p[2], 0.772, 1e-3));
    assert!(DemandModel::sqrt_spillover(1.0, 0.5).is_err());
}

#[test]
fn trivial_inverses() {
    let lin = DemandModel::linear(vec![1.0; 3], vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], vec![0.0; 3])
        .unwrap();
    assert_eq!(lin.inverse_demand(&[0.0; 3]).unwrap(), vec![1.0; 3]);
    let apb = DemandModel::log_spillover(-0.125, -0.8, 0.0).unwrap();
    assert_eq!(apb.inverse_demand(&[0.0; 3]).unwrap(), vec![1.0; 3]);
    let sat = DemandModel::one_stop(vec![1.0, 2.0], vec![1.0, 4.0], ShoppingCostCdf::saturated()).unwrap();
    assert_eq!(sat.demand(&[0.5, 0.25]).unwrap(), vec![0.5, 1.0]);
    assert_eq!(sat.demand(&[2.0, 0.25]).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn validation_errors() {
    assert!(DemandModel::linear(vec![1.0, 1.0], vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0; 2]).is_err());
    assert!(DemandModel::linear(vec![1.0, 1.0], vec![vec![1.0, 0.0]], vec![0.0; 2]).is_err());
    assert!(DemandModel::sqrt_spillover(0.0, 0.5).unwrap().with_costs(vec![0.0, -1.0, 0.0]).is_err());
    assert!(DemandModel::one_stop(vec![1.0], vec![0.0], ShoppingCostCdf::saturated()).is_err());
    let m = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    assert!(matches!(m.demand(&[0.5, 0.5]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn round_trip_every_family() {
    for m in families() {
        for q in interior_quantities(m.n()) {
            let p = m.inverse_demand(&q).unwrap();
            let back = m.demand(&p).unwrap();
            assert!(sup(&back, &q) <= 1e-7, "{m:?} at {q:?}: {back:?}");
        }
    }
}

#[test]
fn inverse_residual_of_numeric_demand() {
    let m = DemandModel::log_spillover(-0.125, -0.8, -1e-4).unwrap();
    for p in EvaluationRegion::cube(Space::Price, 3, 0.2, 0.9).with_resolution(4).nodes() {
        let q = m.demand(&p).unwrap();
        assert!(sup(&m.inverse_demand(&q).unwrap(), &p) <= 1e-8);
    }
}

fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, z: &[f64]) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let h = 1e-6 * z[j].abs().max(1.0);
        let (mut hi, mut lo) = (z.to_vec(), z.to_vec());
        hi[j] += h;
        lo[j] -= h;
        let (a, b) = (f(&hi), f(&lo));
        for i in 0..n {
            jac[i][j] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    jac
}

#[test]
fn jacobians_match_finite_differences() {
    for m in families() {
        for q in interior_quantities(m.n()) {
            let an = m.inverse_jacobian(&q).unwrap();
            let fd = fd_jacobian(|z| m.inverse_demand(z).unwrap(), &q);
            for (ra, rf) in an.iter().zip(&fd) {
                assert!(sup(ra, rf) <= 1e-6, "{m:?} inverse at {q:?}: {an:?} vs {fd:?}");
            }
            let p = m.inverse_demand(&q).unwrap();
            let an = m.demand_jacobian(&p).unwrap();
            let fd = fd_jacobian(|z| m.demand(z).unwrap(), &p);
            for (ra, rf) in an.iter().zip(&fd) {
                assert!(sup(ra, rf) <= 1e-5, "{m:?} demand at {p:?}: {an:?} vs {fd:?}");
            }
        }
    }
}

#[test]
fn sqrt_spillover_cross_price_derivative() {
    for gamma in [0.5f64, -0.5, 0.25] {
        let m = DemandModel::sqrt_spillover(0.0, gamma).unwrap();
        for p in EvaluationRegion::cube(Space::Price, 3, 0.05, 0.95).with_resolution(5).nodes() {
            let expected = -0.5 * gamma / (2.0f64 - p[0] - p[1]).sqrt();
            let jac = m.demand_jacobian(&p).unwrap();
            let fd = fd_jacobian(|z| m.demand(z).unwrap(), &p);
            for j in 0..2 {
                assert!(close(jac[2][j], expected, 1e-15));
                assert!(close(fd[2][j], expected, 1e-6));
            }
        }
    }
}

#[test]
fn log_spillover_ift_matches_numeric_inversion() {
    for (b, gamma, alpha) in [(-0.125, -0.8, -1e-4), (0.3, 0.4, 0.2), (-0.5, 0.3, 0.1)] {
        let m = DemandModel::log_spillover(b, gamma, alpha).unwrap();
        for q in EvaluationRegion::cube(Space::Quantity, 3, 0.01, 0.99).with_resolution(5).nodes() {
            let p = m.inverse_demand(&q).unwrap();
            let ift = log_spillover_demand_jacobian(&m, &q).unwrap();
            let fd = fd_jacobian(|z| m.demand(z).unwrap(), &p);
            let inv = Matrix::from_rows(&m.inverse_jacobian(&q).unwrap()).unwrap().inverse().unwrap().rows();
            for i in 0..3 {
                assert!(sup(&ift[i], &fd[i]) <= 1e-5, "({b}, {gamma}, {alpha}) at {q:?}");
                assert!(sup(&ift[i], &inv[i]) <= 1e-12);
            }
        }
    }
}

#[test]
fn gross_relation_examples() {
    let comp = DemandModel::sqrt_spillover(0.05, 0.5).unwrap();
    let rep = gross_relation(&comp, &comp.default_region()).unwrap();
    assert!(rep.all_complements(), "{rep:?}");
    assert_eq!(rep.nodes, 729);
    let subs = DemandModel::sqrt_spillover(-0.05, -0.5).unwrap();
    assert!(gross_relation(&subs, &subs.default_region()).unwrap().all_substitutes());
    let apb = DemandModel::log_spillover(-0.125, -0.8, -1e-4).unwrap();
    assert!(gross_relation(&apb, &apb.default_region()).unwrap().all_substitutes());
    let apb_pos = DemandModel::log_spillover(0.2, 0.3, 1e-3).unwrap();
    assert!(gross_relation(&apb_pos, &apb_pos.default_region()).unwrap().all_complements());

    // γ = 0: products 1, 2 against 3 only through b.
    let b0 = DemandModel::sqrt_spillover(0.0, 0.0).unwrap();
    let rep = gross_relation(&b0, &b0.default_region()).unwrap();
    assert!(rep.pairs.iter().all(|p| p.verdict == GrossRelation::Independent));

    let mixed = DemandModel::sqrt_spillover(0.05, -0.5).unwrap();
    let rep = gross_relation(&mixed, &mixed.default_region()).unwrap();
    assert_eq!(rep.pair(3, 1).unwrap().verdict, GrossRelation::Mixed);
    assert_eq!(rep.pair(1, 2).unwrap().verdict, GrossRelation::StrictGrossComplements);

    let one_stop = DemandModel::one_stop(vec![1.0, 1.0], vec![1.0, 1.0], ShoppingCostCdf::Exponential { rate: 1.0 }).unwrap();
    let region = EvaluationRegion::cube(Space::Price, 2, 0.05, 0.95);
    assert!(gross_relation(&one_stop, &region).unwrap().all_complements());
}

#[test]
fn gross_relation_reports_failing_node() {
    let m = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    let region = EvaluationRegion::cube(Space::Price, 3, 0.5, 1.0).with_resolution(3);
    match gross_relation(&m, &region) {
        Err(Error::NodeFailure { node, .. }) => assert_eq!(&node[..2], &[1.0, 1.0]),
        other => panic!("expected node failure, got {other:?}"),
    }
}

#[test]
fn footnote_direction() {
    // Gross complements everywhere ⇒ inverse demands increase in the other quantity.
    let cases = [
        DemandModel::sqrt_spillover(0.05, 0.5).unwrap(),
        DemandModel::sqrt_spillover(-0.05, -0.5).unwrap(),
        DemandModel::log_spillover(-0.125, -0.8, -1e-4).unwrap(),
        DemandModel::linear(vec![1.0, 1.0], vec![vec![2.0, -0.5], vec![-0.7, 1.5]], vec![0.0; 2]).unwrap(),
    ];
    for m in cases {
        let rep = gross_relation(&m, &m.default_region()).unwrap();
        let sign = if rep.all_complements() {
            1.0
        } else if rep.all_substitutes() {
            -1.0
        } else {
            continue;
        };
        let region = m.default_region();
        for node in region.nodes() {
            let q = match region.space {
                Space::Price => m.demand(&node).unwrap(),
                Space::Quantity => node,
            };
            let jac = m.inverse_jacobian(&q).unwrap();
            for (i, row) in jac.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    if i != j {
                        assert!(sign * x >= 0.0, "{m:?} at {q:?}: ∂P{}/∂q{} = {x}", i + 1, j + 1);
                    }
                }
            }
        }
    }
}

#[test]
fn inverse_modularity_examples() {
    let lin = DemandModel::linear(vec![1.0, 1.0], vec![vec![2.0, -0.3], vec![-0.2, 1.0]], vec![0.0; 2]).unwrap();
    assert_eq!(inverse_modularity(&lin, &lin.default_quantity_region()).unwrap().verdict, InverseModularity::Both);

    for b in [-0.125, 0.0, 0.3] {
        let apb = DemandModel::log_spillover(b, -0.8, -1e-4).unwrap();
        let rep = inverse_modularity(&apb, &apb.default_quantity_region()).unwrap();
        assert!(rep.verdict.is_weakly_submodular());
        assert_eq!(rep.verdict, InverseModularity::Both);
    }

    let eq7 = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    let rep = inverse_modularity(&eq7, &eq7.default_quantity_region()).unwrap();
    assert_eq!(rep.verdict, InverseModularity::WeaklySubmodular);
    assert!(!rep.verdict.is_weakly_supermodular());
    let w = rep.worst();
    assert_eq!(w.value, rep.min.value);
    let expected = -0.5 / (4.0 * 0.02f64.powf(1.5));
    assert!(close(rep.min.value, expected, 1e-9 * expected.abs()));
    assert_eq!((rep.min.m, rep.min.i, rep.min.j), (3, 1, 2));

    let neg = DemandModel::sqrt_spillover(0.0, -0.5).unwrap();
    assert_eq!(
        inverse_modularity(&neg, &neg.default_quantity_region()).unwrap().verdict,
        InverseModularity::WeaklySupermodular
    );
}

#[test]
fn cross_partials_agree_across_methods() {
    for (b, gamma) in [(0.0, 0.5), (0.05, 0.4), (-0.05, -0.4)] {
        let m = DemandModel::sqrt_spillover(b, gamma).unwrap();
        let inner = m.clone();
        let wrapped = DemandModel::custom(3, move |q: &[f64]| inner.inverse_demand(q)).unwrap();
        for q in interior_quantities(3) {
            let s = q[0] + q[1] - 2.0 * b * q[2];
            let disc = b * b * gamma * gamma + (1.0 + b) * s;
            let closed = -gamma * (1.0 + b) / (4.0 * disc.powf(1.5));
            let direct = m.inverse_cross_partial(&q, 2, 0, 1).unwrap();
            let fd = wrapped.inverse_cross_partial(&q, 2, 0, 1).unwrap();
            assert!(close(direct, closed, 1e-7), "{b} {gamma} {q:?}: {direct} vs {closed}");
            assert!(close(fd, closed, 1e-5), "{b} {gamma} {q:?}: {fd} vs {closed}");
        }
    }
    let m = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    assert!(m.inverse_cross_partial(&[0.1, 0.1, 0.1], 0, 1, 1).is_err());
    assert!(m.inverse_cross_partial(&[0.0, 0.0, 0.1], 2, 0, 1).is_err());
}

#[test]
fn revenue_gradient_matches_finite_differences() {
    for m in families() {
        for q in interior_quantities(m.n()) {
            let g = m.revenue_gradient(&q).unwrap();
            for k in 0..m.n() {
                let h = 1e-6;
                let (mut hi, mut lo) = (q.clone(), q.clone());
                hi[k] += h;
                lo[k] -= h;
                let fd = (m.revenue(&hi).unwrap() - m.revenue(&lo).unwrap()) / (2.0 * h);
                assert!(close(g[k], fd, 1e-6 * fd.abs().max(1.0)), "{m:?} {q:?} {k}");
            }
        }
    }
}

#[test]
fn revenue_ignores_unused_singular_columns() {
    let m = DemandModel::sqrt_spillover(0.0, 0.5).unwrap();
    let g = m.revenue_gradient(&[0.0, 0.0, 0.5]).unwrap();
    assert!(close(g[2], 0.0, 1e-15));
    assert!(close(m.revenue(&[0.0, 0.0, 0.5]).unwrap(), 0.25, 1e-15));
}

#[test]
fn region_grid() {
    let r = EvaluationRegion::new(Space::Price, vec![0.0, 1.0], vec![1.0, 2.0], 3).unwrap();
    let nodes = r.nodes();
    assert_eq!(nodes.len(), 9);
    assert_eq!(nodes[0], vec![0.0, 1.0]);
    assert_eq!(nodes[1], vec![0.0, 1.5]);
    assert_eq!(nodes[8], vec![1.0, 2.0]);
    assert!(r.on_boundary(&nodes[1]));
    assert!(!r.on_boundary(&nodes[4]));
    assert!(EvaluationRegion::new(Space::Price, vec![0.0], vec![1.0], 2).is_err());
    assert!(EvaluationRegion::new(Space::Price, vec![1.0], vec![1.0], 3).is_err());
}

#[test]
fn single_precision() {
    let m = DemandModel::<f32>::sqrt_spillover(0.1, 0.5).unwrap();
    let d = m.demand(&[0.5, 0.5, 0.5]).unwrap();
    assert!((d[2] - 1.0).abs() < 1e-6);
    let q = [0.3f32, 0.4, 0.5];
    let back = m.demand(&m.inverse_demand(&q).unwrap()).unwrap();
    assert!(back.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-5));
}
