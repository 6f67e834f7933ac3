//! Scenario files: one market, one bargaining setup, optional overrides.

use serde::{Deserialize, Serialize};

use nashfee::demand::{EvaluationRegion, Space};
use nashfee::reduced_form::ShoppingCostCdf;
use nashfee::{Config, Market, Model, Ownership, Region};

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub bargaining: BargainingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    ReducedForm(ReducedFormSpec),
    Linear(LinearSpec),
    Eq7(Eq7Spec),
    AppendixB(AppendixBSpec),
    OneStop(OneStopSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedFormSpec {
    pub v: Vec<f64>,
    pub pi: Vec<f64>,
    pub cdf: CdfSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eq7Spec {
    pub b: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixBSpec {
    pub b: f64,
    pub gamma: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneStopSpec {
    /// Sub-demand intercepts: `q_i(p_i) = alpha_i − beta_i·p_i`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub cdf: CdfSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum CdfSpec {
    AffineClamped { lower: f64, upper: f64 },
    Exponential { rate: f64 },
    Power { exponent: f64, scale: f64 },
    Step { points: Vec<[f64; 2]> },
    Table { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BargainingSpec {
    pub beta: f64,
    pub merging_pair: [usize; 2],
    /// Firms as lists of supplier labels; singletons when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ownership: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multistart: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceSpec {
    Price,
    Quantity,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

/// The market a scenario describes, ready to evaluate.
pub enum Built {
    Reduced(Market),
    Demand(Model),
}

impl Built {
    pub fn n(&self) -> usize {
        match self {
            Built::Reduced(m) => m.n(),
            Built::Demand(m) => m.n(),
        }
    }
}

impl CdfSpec {
    pub fn build(&self) -> ShoppingCostCdf<f64> {
        let pts = |p: &[[f64; 2]]| p.iter().map(|&[s, g]| (s, g)).collect();
        match self {
            CdfSpec::AffineClamped { lower, upper } => ShoppingCostCdf::AffineClamped { lower: *lower, upper: *upper },
            CdfSpec::Exponential { rate } => ShoppingCostCdf::Exponential { rate: *rate },
            CdfSpec::Power { exponent, scale } => ShoppingCostCdf::Power { exponent: *exponent, scale: *scale },
            CdfSpec::Step { points } => ShoppingCostCdf::Step(pts(points)),
            CdfSpec::Table { points } => ShoppingCostCdf::Table(pts(points)),
        }
    }
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::ReducedForm(_) => "reduced_form",
            ModelSpec::Linear(_) => "linear",
            ModelSpec::Eq7(_) => "eq7",
            ModelSpec::AppendixB(_) => "appendix_b",
            ModelSpec::OneStop(_) => "one_stop",
        }
    }

    pub fn build(&self) -> Result<Built, Failure> {
        let built = match self {
            ModelSpec::ReducedForm(s) => Built::Reduced(Market::new(s.v.clone(), s.pi.clone(), s.cdf.build())?),
            ModelSpec::Linear(s) => {
                let costs = s.costs.clone().unwrap_or_else(|| vec![0.0; s.a.len()]);
                Built::Demand(Model::linear(s.a.clone(), s.b.clone(), costs)?)
            }
            ModelSpec::Eq7(s) => Built::Demand(Model::sqrt_spillover(s.b, s.gamma)?),
            ModelSpec::AppendixB(s) => Built::Demand(Model::log_spillover(s.b, s.gamma, s.alpha)?),
            ModelSpec::OneStop(s) => Built::Demand(Model::one_stop(s.alpha.clone(), s.beta.clone(), s.cdf.build())?),
        };
        Ok(built)
    }
}

impl Scenario {
    /// Parses JSON text; errors name the offending field path.
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de)
            .map_err(|e| Failure::validation(format!("scenario: at `{}`: {}", e.path(), e.inner())))?;
        s.check_version()?;
        Ok(s)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self, Failure> {
        let s: Scenario = serde_path_to_error::deserialize(v)
            .map_err(|e| Failure::validation(format!("scenario: at `{}`: {}", e.path(), e.inner())))?;
        s.check_version()?;
        Ok(s)
    }

    fn check_version(&self) -> Result<(), Failure> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Failure::validation(format!(
                "scenario: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }

    pub fn config(&self) -> Result<Config, Failure> {
        let mut cfg = Config::default();
        if let Some(o) = &self.optimizer {
            cfg.gradient_tolerance = o.gradient_tolerance.unwrap_or(cfg.gradient_tolerance);
            cfg.max_iterations = o.max_iterations.unwrap_or(cfg.max_iterations);
            cfg.multistart = o.multistart.unwrap_or(cfg.multistart);
            cfg.floor = o.floor.unwrap_or(cfg.floor);
            cfg.seed = o.seed.unwrap_or(cfg.seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn region(&self, model: &Model) -> Result<Region, Failure> {
        let mut r = model.default_region();
        if let Some(o) = &self.region {
            let n = model.n();
            if let Some(space) = o.space {
                if o.lower.is_none() && o.upper.is_none() && space_of(space) != r.space {
                    r = match space {
                        SpaceSpec::Quantity => model.default_quantity_region(),
                        SpaceSpec::Price => EvaluationRegion::cube(Space::Price, n, 0.05, 0.95),
                    };
                }
                r.space = space_of(space);
            }
            if let Some(l) = &o.lower {
                r.lower = l.clone();
            }
            if let Some(u) = &o.upper {
                r.upper = u.clone();
            }
            if let Some(k) = o.resolution {
                r.resolution = k;
            }
            if r.dim() != n {
                return Err(Failure::validation(format!("region: expected {n} axes, got {}", r.dim())));
            }
        }
        r.validate()?;
        Ok(r)
    }

    /// Pre-merger ownership, checked against the market and the merging pair.
    pub fn ownership(&self, n: usize) -> Result<Ownership, Failure> {
        let b = &self.bargaining;
        if !(b.beta > 0.0 && b.beta < 1.0) {
            return Err(Failure::validation(format!("bargaining.beta must lie in (0, 1), got {}", b.beta)));
        }
        let [i, j] = b.merging_pair;
        if i == j || !(1..=n).contains(&i) || !(1..=n).contains(&j) {
            return Err(Failure::validation(format!(
                "bargaining.merging_pair must name two distinct products in 1..={n}, got [{i}, {j}]"
            )));
        }
        let own = match &b.ownership {
            Some(f) => Ownership::new(n, f.clone())?,
            None => Ownership::singletons(n)?,
        };
        if !own.is_singleton(i) || !own.is_singleton(j) {
            return Err(Failure::validation("bargaining.ownership: merging suppliers must negotiate alone".to_string()));
        }
        Ok(own)
    }
}

fn space_of(s: SpaceSpec) -> Space {
    match s {
        SpaceSpec::Price => Space::Price,
        SpaceSpec::Quantity => Space::Quantity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EQ7: &str = r#"{"schema_version": 1, "model": {"eq7": {"b": 0.0001, "gamma": 0.5}},
        "bargaining": {"beta": 0.5, "merging_pair": [1, 2]}}"#;

    #[test]
    fn parses_and_builds() {
        let s = Scenario::parse(EQ7).unwrap();
        assert_eq!(s.model.kind(), "eq7");
        assert!(matches!(s.model.build().unwrap(), Built::Demand(_)));
        assert_eq!(s.config().unwrap(), Config::default());
        assert_eq!(s.ownership(3).unwrap(), Ownership::singletons(3).unwrap());
    }

    #[test]
    fn unknown_field_names_path() {
        let bad = EQ7.replace("\"gamma\"", "\"gama\"");
        let e = Scenario::parse(&bad).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("model.eq7"), "{}", e.message);
    }

    #[test]
    fn rejects_bad_bargaining() {
        let s = Scenario::parse(&EQ7.replace("[1, 2]", "[2, 2]")).unwrap();
        assert!(s.ownership(3).is_err());
        let s = Scenario::parse(&EQ7.replace("\"beta\": 0.5", "\"beta\": 1.0")).unwrap();
        assert!(s.ownership(3).is_err());
        assert!(Scenario::parse(&EQ7.replace("\"schema_version\": 1", "\"schema_version\": 2")).is_err());
    }

    #[test]
    fn cdf_tagging() {
        let c: CdfSpec = serde_json::from_str(r#"{"family": "step", "params": {"points": [[0, 1]]}}"#).unwrap();
        assert_eq!(c.build(), ShoppingCostCdf::saturated());
    }
}
