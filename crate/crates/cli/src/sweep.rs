//! Grid sweeps over scenario parameters addressed by dotted paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use nashfee::demand::GrossRelation;
use nashfee::optimizer::{Predicate, PredicateContext};
use nashfee::RelationKind;

use crate::failure::Failure;
use crate::pipeline::{analyze, Options};
use crate::scenario::{Scenario, SCHEMA_VERSION};

/// `path=a:b:n`: `n` evenly spaced values from `a` to `b` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub path: String,
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn parse(src: &str) -> Result<Self, Failure> {
        let bad = || Failure::validation(format!("range `{src}`: expected path=start:end:count"));
        let (path, spec) = src.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, k] = parts.as_slice() else {
            return Err(bad());
        };
        let start: f64 = a.trim().parse().map_err(|_| bad())?;
        let end: f64 = b.trim().parse().map_err(|_| bad())?;
        let count: usize = k.trim().parse().map_err(|_| bad())?;
        if path.trim().is_empty() || count == 0 || !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(Self { path: path.trim().to_string(), start, end, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| if k + 1 == self.count { self.end } else { self.start + step * k as f64 }).collect()
    }
}

/// Sets the number at a dotted path (`model.eq7.gamma`, `model.reduced_form.pi.2`).
/// Missing object keys are created; array indices must exist.
pub fn set_path(root: &mut Value, path: &str, x: f64) -> Result<(), Failure> {
    let bad = |m: String| Failure::validation(format!("path `{path}`: {m}"));
    let keys: Vec<&str> = path.split('.').collect();
    let mut cur = root;
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                let entry = map.entry(key.to_string()).or_insert_with(|| if last { Value::Null } else { Value::Object(Default::default()) });
                entry
            }
            Value::Array(items) => {
                let k: usize = key.parse().map_err(|_| bad(format!("`{key}` is not an array index")))?;
                let len = items.len();
                items.get_mut(k).ok_or_else(|| bad(format!("index {k} out of range (length {len})")))?
            }
            _ => return Err(bad(format!("`{key}` does not address a field"))),
        };
    }
    let num = serde_json::Number::from_f64(x).ok_or_else(|| bad("non-finite value".into()))?;
    *cur = Value::Number(num);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_pre: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_post: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_difference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gross: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matches: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warnings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub template: Value,
    pub ranges: Vec<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    pub seed: Option<u64>,
    pub rows: Vec<SweepRow>,
}

fn gross_of(name: &str) -> Option<GrossRelation> {
    [
        GrossRelation::StrictGrossComplements,
        GrossRelation::StrictGrossSubstitutes,
        GrossRelation::Independent,
        GrossRelation::Mixed,
    ]
    .into_iter()
    .find(|g| g.name() == name)
}

fn kind_of(name: &str) -> Option<RelationKind> {
    [RelationKind::StrictComplements, RelationKind::StrictSubstitutes, RelationKind::Additive, RelationKind::Mixed]
        .into_iter()
        .find(|k| k.name() == name)
}

fn grid(ranges: &[Range]) -> Vec<Vec<f64>> {
    ranges.iter().fold(vec![Vec::new()], |acc, r| {
        let vals = r.values();
        acc.into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn run_node(template: &Value, ranges: &[Range], point: &[f64], predicate: Option<&Predicate>, seed: Option<u64>) -> SweepRow {
    let params: Vec<(String, f64)> = ranges.iter().map(|r| r.path.clone()).zip(point.iter().copied()).collect();
    let mut row = SweepRow {
        params,
        t_pre: None,
        t_post: None,
        gap: None,
        second_difference: None,
        verdict: None,
        gross: None,
        matches: None,
        warnings: None,
        error: None,
    };
    let outcome = (|| {
        let mut v = template.clone();
        for (range, &x) in ranges.iter().zip(point) {
            set_path(&mut v, &range.path, x)?;
        }
        let scenario = Scenario::from_value(v)?;
        analyze(&scenario, Options { seed, shapley: false })
    })();
    match outcome {
        Ok(r) => {
            let b = &r.bargaining;
            row.t_pre = Some(b.t_pre);
            row.t_post = Some(b.t_post);
            row.gap = Some(b.gap);
            row.second_difference = Some(r.profit_relation.second_difference);
            row.verdict = Some(r.profit_relation.at_full_rest.clone());
            row.gross = Some(r.gross.summary.clone());
            row.warnings = Some(r.diagnostics.warnings.len());
            if let Some(p) = predicate {
                let ctx = PredicateContext {
                    delta: row.second_difference,
                    gap: row.gap,
                    gross: gross_of(&r.gross.summary),
                    profit: kind_of(&r.profit_relation.at_full_rest),
                };
                match p.eval(&ctx) {
                    Ok(m) => row.matches = Some(m),
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
        }
        Err(e) => row.error = Some(e.message),
    }
    row
}

pub fn sweep(
    template: Value,
    ranges: Vec<Range>,
    predicate: Option<&str>,
    max_nodes: usize,
    seed: Option<u64>,
) -> Result<SweepReport, Failure> {
    if ranges.is_empty() {
        return Err(Failure::validation("sweep needs at least one --range"));
    }
    let total = ranges.iter().try_fold(1usize, |acc, r| acc.checked_mul(r.count));
    match total {
        Some(t) if t <= max_nodes => {}
        _ => return Err(Failure::validation(format!("grid exceeds --max-nodes {max_nodes}"))),
    }
    // The template itself must be a valid scenario.
    Scenario::from_value(template.clone())?;
    let pred = predicate.map(Predicate::parse).transpose()?;
    let points = grid(&ranges);
    let rows = points.par_iter().map(|p| run_node(&template, &ranges, p, pred.as_ref(), seed)).collect();
    Ok(SweepReport { schema_version: SCHEMA_VERSION, template, ranges, predicate: predicate.map(str::to_string), seed, rows })
}
