//! Scenario → report: classification, oracle, bargaining, diagnostics.

use std::collections::BTreeMap;

use nashfee::bargaining::{merger_report, shapley_merger_gap, BargainingEnv, FeeSchedule};
use nashfee::demand::{gross_relation, GrossRelation, Space};
use nashfee::optimizer::{gross_summary, OptStatus};
use nashfee::portfolio::{classify_pair, second_difference, table};
use nashfee::{Market, Oracle, Ownership, Portfolio, RelationKind, SetFunction, DEFAULT_TOLERANCE};

use crate::failure::Failure;
use crate::report::*;
use crate::scenario::{Built, Scenario, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub shapley: bool,
}

fn fee_row(s: &FeeSchedule<f64>) -> FeeRow {
    FeeRow { firms: s.firms.clone(), fees: s.fees.clone(), retailer: s.retailer, surplus: s.surplus }
}

fn summarize_discrete(verdicts: &[GrossRelation]) -> GrossRelation {
    let all = |g: GrossRelation| verdicts.iter().all(|&v| v == g);
    [GrossRelation::StrictGrossComplements, GrossRelation::StrictGrossSubstitutes, GrossRelation::Independent]
        .into_iter()
        .find(|&g| all(g))
        .unwrap_or(GrossRelation::Mixed)
}

struct Core {
    profit_relation: ProfitRelation,
    bargaining: BargainingSection,
    shapley: Option<ShapleySection>,
    tolerance: f64,
}

fn bargain<F: SetFunction<f64>>(oracle: &F, own: Ownership, beta: f64, pair: [usize; 2], shapley: bool) -> Result<Core, Failure> {
    let n = oracle.n();
    let [i, j] = pair;
    let full = Portfolio::full(n)?;
    let surplus = oracle.eval(full)?;
    let tolerance = DEFAULT_TOLERANCE * surplus.abs().max(1.0);
    let sd = second_difference(oracle, i, j, full)?;
    let over = classify_pair(oracle, i, j, tolerance)?.kind;
    let env = BargainingEnv::new(beta, own, oracle)?;
    let r = merger_report(&env, i, j, tolerance)?;
    let bargaining = BargainingSection {
        beta,
        pair,
        pre: fee_row(&r.pre),
        post: fee_row(&r.post),
        t_pre: r.t_pre,
        t_post: r.t_post,
        gap: r.gap,
        identity_residual: r.identity_residual,
        identity_holds: r.identity_holds(),
        non_merging: r.non_merging.iter().map(|f| NonMergingRow { members: f.members.clone(), pre: f.pre, post: f.post }).collect(),
    };
    let shapley = if shapley {
        let (pre, post, gap) = shapley_merger_gap(&env, i, j)?;
        Some(ShapleySection { pre: fee_row(&pre), post: fee_row(&post), gap })
    } else {
        None
    };
    Ok(Core {
        profit_relation: ProfitRelation {
            pair,
            second_difference: sd,
            at_full_rest: RelationKind::of_value(sd, tolerance).to_string(),
            over_all_rests: over.to_string(),
        },
        bargaining,
        shapley,
        tolerance,
    })
}

fn reduced_form_section(m: &Market, pair: [usize; 2]) -> Result<ReducedFormSection, Failure> {
    let n = m.n();
    let [i, j] = pair;
    let spillovers = (1..=n)
        .filter(|&t| t != i && t != j)
        .map(|t| {
            let s = m.spillover((i, j), t)?;
            Ok(SpilloverRow { target: t, values: s.values, second_difference: s.second_difference, relation: s.relation.kind.to_string() })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let cl = m.loss_ratios((i, j))?;
    let full = Portfolio::full(n)?;
    let c = m.complementarity_condition((i, j), full)?;
    Ok(ReducedFormSection {
        spillovers,
        loss_ratios: LossRatioRow { cl_first: cl.cl_first, cl_second: cl.cl_second, cl_both: cl.cl_both, gap: cl.gap },
        complementarity: ConditionRow { lhs: c.lhs, rhs: c.rhs, verdict: c.verdict.to_string() },
    })
}

pub fn analyze(scenario: &Scenario, opts: Options) -> Result<Report, Failure> {
    let built = scenario.model.build()?;
    let n = built.n();
    let own = scenario.ownership(n)?;
    let mut cfg = scenario.config()?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let pair = scenario.bargaining.merging_pair;
    let beta = scenario.bargaining.beta;
    let mut warnings = Vec::new();
    let mut statuses = BTreeMap::new();
    let (gross, core, reduced_form, oracle_rows, gradient_tolerance) = match built {
        Built::Reduced(m) => {
            let disc = m.gross_relations(DEFAULT_TOLERANCE)?;
            let verdicts: Vec<GrossRelation> = disc.iter().map(|g| g.verdict).collect();
            let gross = GrossSection {
                basis: "portfolio".into(),
                nodes: 1 << n,
                summary: summarize_discrete(&verdicts).to_string(),
                pairs: disc
                    .iter()
                    .map(|g| GrossRow { i: g.i, j: g.j, verdict: g.verdict.to_string(), min: g.min_change, max: g.max_change })
                    .collect(),
            };
            let core = bargain(&m, own, beta, pair, opts.shapley)?;
            let rows = table(&m)?
                .into_iter()
                .map(|(x, v)| OracleRow { portfolio: x.to_string(), value: v, q: None, status: None })
                .collect();
            (gross, core, Some(reduced_form_section(&m, pair)?), rows, None)
        }
        Built::Demand(model) => {
            let region = scenario.region(&model)?;
            let rep = gross_relation(&model, &region)?;
            let gross = GrossSection {
                basis: match region.space {
                    Space::Price => "price".into(),
                    Space::Quantity => "quantity".into(),
                },
                nodes: rep.nodes,
                summary: gross_summary(&rep).to_string(),
                pairs: rep
                    .pairs
                    .iter()
                    .map(|p| GrossRow { i: p.i, j: p.j, verdict: p.verdict.to_string(), min: p.min, max: p.max })
                    .collect(),
            };
            let tol = cfg.gradient_tolerance;
            let oracle = Oracle::new(model, cfg)?;
            table(&oracle)?;
            let core = bargain(&oracle, own, beta, pair, opts.shapley)?;
            let mut rows = Vec::with_capacity(1 << n);
            for x in Portfolio::all(n)? {
                let r = oracle.result(x)?;
                *statuses.entry(r.status.to_string()).or_insert(0) += 1;
                match r.status {
                    OptStatus::Converged => {}
                    OptStatus::Degenerate => warnings.push(format!(
                        "Π*({x}): starts reached interior maxima with different values; the best is used"
                    )),
                    OptStatus::MaxIter => warnings.push(format!(
                        "Π*({x}): gradient tolerance not met (projected gradient {:.2e})",
                        r.gradient_norm
                    )),
                }
                rows.push(OracleRow { portfolio: x.to_string(), value: r.value, q: Some(r.q), status: Some(r.status.to_string()) });
            }
            (gross, core, None, rows, Some(tol))
        }
    };
    if !core.bargaining.identity_holds {
        warnings.push(format!("sign identity residual {:.3e} exceeds tolerance", core.bargaining.identity_residual));
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.clone(),
        seed: opts.seed.or(scenario.optimizer.as_ref().and_then(|o| o.seed)).unwrap_or(0),
        model: scenario.model.kind().into(),
        n,
        gross,
        profit_relation: core.profit_relation,
        reduced_form,
        bargaining: core.bargaining,
        shapley: core.shapley,
        oracle: oracle_rows,
        diagnostics: Diagnostics { tolerance: core.tolerance, gradient_tolerance, statuses, warnings },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(model: &str) -> Scenario {
        Scenario::parse(&format!(
            r#"{{"schema_version": 1, "model": {model}, "bargaining": {{"beta": 0.5, "merging_pair": [1, 2]}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn reduced_form_example() {
        let s = scenario(r#"{"reduced_form": {"v": [1, 1, 1], "pi": [1, 1, 10], "cdf": {"family": "exponential", "params": {"rate": 1}}}}"#);
        let r = analyze(&s, Options::default()).unwrap();
        assert!((r.bargaining.t_pre - 1.890).abs() < 2e-3);
        assert!((r.bargaining.t_post - 2.541).abs() < 2e-3);
        assert_eq!(r.gross.summary, "StrictGrossComplements");
        assert_eq!(r.profit_relation.at_full_rest, "StrictSubstitutes");
        assert_eq!(r.oracle.len(), 8);
        let rf = r.reduced_form.unwrap();
        assert!((rf.loss_ratios.gap * 10.0 - rf.spillovers[0].second_difference).abs() < 1e-12);
    }

    #[test]
    fn saturated_cdf_is_merger_neutral() {
        let s = scenario(r#"{"reduced_form": {"v": [1, 2, 3], "pi": [1, 2, 3], "cdf": {"family": "step", "params": {"points": [[0, 1]]}}}}"#);
        let r = analyze(&s, Options { shapley: true, ..Options::default() }).unwrap();
        assert_eq!(r.bargaining.gap, 0.0);
        assert_eq!(r.profit_relation.at_full_rest, "Additive");
        assert!(r.shapley.unwrap().gap.abs() < 1e-12);
    }

    #[test]
    fn eq7_example() {
        let s = scenario(r#"{"eq7": {"b": 0.0001, "gamma": 0.5}}"#);
        let r = analyze(&s, Options::default()).unwrap();
        assert!(r.bargaining.gap > 0.0);
        assert_eq!(r.profit_relation.at_full_rest, "StrictSubstitutes");
        assert!(r.bargaining.identity_holds);
        assert_eq!(r.diagnostics.statuses.get("Converged"), Some(&8));
    }
}
