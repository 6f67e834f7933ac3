//! Published numbers recomputed from scratch, one row per number.

use std::fmt;
use std::str::FromStr;

use crate::bargaining::{merger_report, BargainingEnv, OwnershipStructure};
use crate::demand::DemandModel;
use crate::error::{Error, Result};
use crate::optimizer::{max_profit, merger_delta, partial_max_cross, InnerBounds, OptimizerConfig};
use crate::portfolio::Portfolio;
use crate::reduced_form::{ReducedFormMarket, ShoppingCostCdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    AppendixA,
    AppendixB,
    Prop1,
    Hin,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::AppendixA, Suite::AppendixB, Suite::Prop1, Suite::Hin];

    pub fn name(&self) -> &'static str {
        match self {
            Self::AppendixA => "appendix-a",
            Self::AppendixB => "appendix-b",
            Self::Prop1 => "prop1",
            Self::Hin => "hin",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}` (expected appendix-a, appendix-b, prop1 or hin)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// `|computed − reference| ≤ tol`.
    Within(f64),
    /// `computed ≥ reference − slack`.
    AtLeast(f64),
    /// `computed` strictly positive (`true`) or strictly negative.
    Sign(bool),
    /// Bit-for-bit equality.
    Exact,
}

impl Check {
    pub fn passes(&self, reference: f64, computed: f64) -> bool {
        match *self {
            Check::Within(tol) => (computed - reference).abs() <= tol,
            Check::AtLeast(slack) => computed >= reference - slack,
            Check::Sign(true) => computed > 0.0,
            Check::Sign(false) => computed < 0.0,
            Check::Exact => computed == reference,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Within(tol) => write!(f, "±{tol}"),
            Check::AtLeast(slack) if *slack == 0.0 => f.write_str("≥"),
            Check::AtLeast(slack) => write!(f, "≥ (slack {slack})"),
            Check::Sign(true) => f.write_str("> 0"),
            Check::Sign(false) => f.write_str("< 0"),
            Check::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub reference: f64,
    pub computed: f64,
    pub check: Check,
    pub pass: bool,
}

impl Row {
    fn new(label: impl Into<String>, reference: f64, computed: f64, check: Check) -> Self {
        let pass = check.passes(reference, computed);
        Self { label: label.into(), reference, computed, check, pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub rows: Vec<Row>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn run(suite: Suite) -> Result<SuiteReport> {
    let rows = match suite {
        Suite::AppendixA => appendix_a()?,
        Suite::AppendixB => appendix_b()?,
        Suite::Prop1 => prop1()?,
        Suite::Hin => hin()?,
    };
    Ok(SuiteReport { suite, rows })
}

fn pf(s: &str) -> Portfolio {
    Portfolio::from_indicator(s).expect("static indicator")
}

fn appendix_a() -> Result<Vec<Row>> {
    let cfg = OptimizerConfig::default();
    let mut rows = Vec::new();
    // (γ, q* of 111, q₃* of 111, Π*(111), q* of 101, q₃* of 101, Π*(101), Δ)
    let published = [
        (0.5, 0.589, 0.771, 1.08, 0.611, 0.695, 0.721, -0.112),
        (-0.5, 0.467, 0.259, 0.565, 0.437, 0.335, 0.358, 0.099),
    ];
    for (i, &(gamma, q, q3, v, qi, q3i, vi, delta)) in published.iter().enumerate() {
        let model = DemandModel::sqrt_spillover(0.0, gamma)?;
        let all = max_profit(&model, pf("111"), &cfg)?;
        let one = max_profit(&model, pf("101"), &cfg)?;
        let g = format!("γ={gamma}");
        rows.push(Row::new(format!("q1*(111) {g}"), q, all.q[0], Check::Within(0.002)));
        rows.push(Row::new(format!("q3*(111) {g}"), q3, all.q[2], Check::Within(0.002)));
        rows.push(Row::new(format!("Π*(111) {g}"), v, all.value, Check::Within(0.005)));
        rows.push(Row::new(format!("q1*(101) {g}"), qi, one.q[0], Check::Within(0.002)));
        rows.push(Row::new(format!("q3*(101) {g}"), q3i, one.q[2], Check::Within(0.002)));
        rows.push(Row::new(format!("Π*(101) {g}"), vi, one.value, Check::Within(0.005)));
        if i == 0 {
            let solo = max_profit(&model, pf("001"), &cfg)?;
            rows.push(Row::new("Π*(001)", 0.25, solo.value, Check::Within(0.005)));
        }
        let d = merger_delta(&model, (1, 2), &cfg)?;
        rows.push(Row::new(format!("Δ {g}"), delta, d.delta, Check::Within(0.005)));
    }
    Ok(rows)
}

fn appendix_b() -> Result<Vec<Row>> {
    let (b, gamma, alpha) = (-0.125, -0.8, -1e-4);
    let cfg = OptimizerConfig::default();
    let model = DemandModel::log_spillover(b, gamma, alpha)?;
    let d = merger_delta(&model, (1, 2), &cfg)?;
    let mut rows = vec![Row::new("Δ", 0.015, d.delta, Check::Within(0.003))];
    let closed = |q1: f64, q2: f64| alpha * alpha / 2.0 + alpha * gamma + b / (1.0 + q1) + b / (1.0 + q2) + gamma * gamma / 2.0;
    let grid: Vec<f64> = (0..5).map(|k| k as f64 / 4.0).collect();
    let mut fd_min = f64::INFINITY;
    let mut closed_min = f64::INFINITY;
    for &q1 in &grid {
        for &q2 in &grid {
            let fd = partial_max_cross(&model, (1, 2), (q1, q2), pf("111"), InnerBounds::Free, 1e-4, &cfg)?;
            fd_min = fd_min.min(fd);
            closed_min = closed_min.min(closed(q1, q2));
        }
    }
    rows.push(Row::new("min ∂²M/∂q1∂q2 on grid (closed form)", 0.07, closed_min, Check::AtLeast(0.0)));
    rows.push(Row::new("min ∂²M/∂q1∂q2 on grid (finite difference)", 0.07, fd_min, Check::AtLeast(1e-3)));
    Ok(rows)
}

fn exp_market(v: Vec<f64>, pi: Vec<f64>) -> Result<ReducedFormMarket<f64>> {
    ReducedFormMarket::new(v, pi, ShoppingCostCdf::Exponential { rate: 1.0 })
}

fn prop1() -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let two = exp_market(vec![1.0, 1.0], vec![1.0, 1.0])?;
    let env = BargainingEnv::new(0.5, OwnershipStructure::singletons(2)?, &two)?;
    let r = merger_report(&env, 1, 2, crate::DEFAULT_TOLERANCE)?;
    rows.push(Row::new("n=2 T_pre", 1.097, r.t_pre, Check::Within(2e-3)));
    rows.push(Row::new("n=2 T_post", 0.865, r.t_post, Check::Within(2e-3)));
    rows.push(Row::new("n=2 gap", 0.0, r.gap, Check::Sign(false)));
    let three = exp_market(vec![1.0; 3], vec![1.0, 1.0, 10.0])?;
    let env = BargainingEnv::new(0.5, OwnershipStructure::singletons(3)?, &three)?;
    let r = merger_report(&env, 1, 2, crate::DEFAULT_TOLERANCE)?;
    rows.push(Row::new("π3=10 T_pre", 1.890, r.t_pre, Check::Within(2e-3)));
    rows.push(Row::new("π3=10 T_post", 2.541, r.t_post, Check::Within(2e-3)));
    rows.push(Row::new("π3=10 gap", 0.651, r.gap, Check::Within(3e-3)));
    rows.push(Row::new("π3=10 sign identity residual", 0.0, r.identity_residual.abs(), Check::Within(1e-12)));
    Ok(rows)
}

fn hin() -> Result<Vec<Row>> {
    let pi3 = 10.0;
    let m = ReducedFormMarket::new(vec![1.0; 3], vec![1.0, 1.0, pi3], ShoppingCostCdf::Step(vec![(1.5, 1.0)]))?;
    let s = m.spillover((1, 2), 3)?;
    let cl = m.loss_ratios((1, 2))?;
    Ok(vec![
        Row::new("spillover second difference", -pi3, s.second_difference, Check::Exact),
        Row::new("CL1", 0.0, cl.cl_first, Check::Exact),
        Row::new("CL2", 0.0, cl.cl_second, Check::Exact),
        Row::new("CL12", 1.0, cl.cl_both, Check::Exact),
        Row::new("CL1 + CL2 − CL12", -1.0, cl.gap, Check::Exact),
    ])
}
