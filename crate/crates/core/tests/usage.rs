use nashfee::bargaining::{merger_report, BargainingEnv};
use nashfee::reduced_form::ShoppingCostCdf;
use nashfee::{Market, Ownership};

#[test]
fn readme_example() -> nashfee::Result<()> {
    let m = Market::new(vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 10.0], ShoppingCostCdf::Exponential { rate: 1.0 })?;
    let env = BargainingEnv::new(0.5, Ownership::singletons(3)?, &m)?;
    let r = merger_report(&env, 1, 2, 1e-9)?;
    assert!(r.gap > 0.0);
    assert!((r.t_pre - 1.891).abs() < 1e-3 && (r.t_post - 2.541).abs() < 1e-3);
    Ok(())
}
