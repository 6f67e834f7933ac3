use std::fmt;

use rayon::prelude::*;

use super::DemandModel;
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Price,
    Quantity,
}

/// Rectangular grid of evaluation nodes, `resolution` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRegion<T> {
    pub space: Space,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub resolution: usize,
}

impl<T: Real> EvaluationRegion<T> {
    pub fn new(space: Space, lower: Vec<T>, upper: Vec<T>, resolution: usize) -> Result<Self> {
        let r = Self { space, lower, upper, resolution };
        r.validate()?;
        Ok(r)
    }

    pub fn cube(space: Space, n: usize, lo: T, hi: T) -> Self {
        Self { space, lower: vec![lo; n], upper: vec![hi; n], resolution: 9 }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch { expected: self.lower.len(), got: self.upper.len() });
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("region needs lower < upper on every axis".into()));
        }
        if self.resolution < 3 {
            return Err(Error::InvalidParameter("region resolution must be at least 3".into()));
        }
        let total = (self.resolution as f64).powi(self.lower.len() as i32);
        if total > 5e6 {
            return Err(Error::InvalidParameter(format!("region has too many nodes ({total:e})")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Grid nodes, first axis varying slowest.
    pub fn nodes(&self) -> Vec<Vec<T>> {
        let (n, k) = (self.dim(), self.resolution);
        let axis = |a: usize, m: usize| {
            let t = c::<T>(m as f64) / c::<T>((k - 1) as f64);
            self.lower[a] + (self.upper[a] - self.lower[a]) * t
        };
        let total = k.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut node = vec![T::zero(); n];
                for a in (0..n).rev() {
                    node[a] = axis(a, idx % k);
                    idx /= k;
                }
                node
            })
            .collect()
    }

    pub fn on_boundary(&self, node: &[T]) -> bool {
        node.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(&z, (&l, &u))| z == l || z == u)
    }
}

fn node_f64<T: Real>(node: &[T]) -> Vec<f64> {
    node.iter().map(|x| x.as_f64()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrossRelation {
    StrictGrossComplements,
    StrictGrossSubstitutes,
    Independent,
    Mixed,
}

impl GrossRelation {
    pub fn name(&self) -> &'static str {
        match self {
            Self::StrictGrossComplements => "StrictGrossComplements",
            Self::StrictGrossSubstitutes => "StrictGrossSubstitutes",
            Self::Independent => "Independent",
            Self::Mixed => "Mixed",
        }
    }
}

impl fmt::Display for GrossRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sign summary of `∂D_i/∂p_j` and `∂D_j/∂p_i` over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GrossPair<T> {
    /// 1-based product labels.
    pub i: usize,
    pub j: usize,
    pub verdict: GrossRelation,
    pub min: T,
    pub max: T,
    /// Node (in region space) where the extreme in the wrong direction occurs.
    pub worst_node: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrossReport<T> {
    pub pairs: Vec<GrossPair<T>>,
    pub nodes: usize,
}

impl<T> GrossReport<T> {
    pub fn all_complements(&self) -> bool {
        self.pairs.iter().all(|p| p.verdict == GrossRelation::StrictGrossComplements)
    }

    pub fn all_substitutes(&self) -> bool {
        self.pairs.iter().all(|p| p.verdict == GrossRelation::StrictGrossSubstitutes)
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&GrossPair<T>> {
        let (i, j) = (i.min(j), i.max(j));
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

/// Classifies every pair by the sign of cross-price demand derivatives: a
/// price rise of `j` lowering demand for `i` makes them gross complements.
pub fn gross_relation<T: Real>(model: &DemandModel<T>, region: &EvaluationRegion<T>) -> Result<GrossReport<T>> {
    region.validate()?;
    let n = model.n();
    if region.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: region.dim() });
    }
    let tol = c::<T>(1e-10);
    let nodes = region.nodes();
    let jacobians: Vec<Vec<Vec<T>>> = nodes
        .par_iter()
        .map(|node| {
            let p = match region.space {
                Space::Price => node.clone(),
                Space::Quantity => model.inverse_demand(node)?,
            };
            model
                .demand_jacobian(&p)
                .and_then(|jac| {
                    if jac.iter().flatten().all(|x| x.is_finite()) {
                        Ok(jac)
                    } else {
                        Err(Error::OutOfDomain("non-finite derivative".into()))
                    }
                })
                .map_err(|e| Error::NodeFailure { node: node_f64(node), reason: e.to_string() })
        })
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (mut min, mut max) = (T::infinity(), T::neg_infinity());
            let (mut at_min, mut at_max) = (0, 0);
            for (k, jac) in jacobians.iter().enumerate() {
                for v in [jac[i][j], jac[j][i]] {
                    if v < min {
                        min = v;
                        at_min = k;
                    }
                    if v > max {
                        max = v;
                        at_max = k;
                    }
                }
            }
            let verdict = if max < -tol {
                GrossRelation::StrictGrossComplements
            } else if min > tol {
                GrossRelation::StrictGrossSubstitutes
            } else if min >= -tol && max <= tol {
                GrossRelation::Independent
            } else {
                GrossRelation::Mixed
            };
            let worst = if verdict == GrossRelation::StrictGrossSubstitutes { at_min } else { at_max };
            pairs.push(GrossPair { i: i + 1, j: j + 1, verdict, min, max, worst_node: nodes[worst].clone() });
        }
    }
    Ok(GrossReport { pairs, nodes: nodes.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InverseModularity {
    WeaklySupermodular,
    WeaklySubmodular,
    /// Every cross partial vanishes.
    Both,
    Neither,
}

impl InverseModularity {
    pub fn name(&self) -> &'static str {
        match self {
            Self::WeaklySupermodular => "WeaklySupermodular",
            Self::WeaklySubmodular => "WeaklySubmodular",
            Self::Both => "Both",
            Self::Neither => "Neither",
        }
    }

    pub fn is_weakly_submodular(&self) -> bool {
        matches!(self, Self::WeaklySubmodular | Self::Both)
    }

    pub fn is_weakly_supermodular(&self) -> bool {
        matches!(self, Self::WeaklySupermodular | Self::Both)
    }
}

impl fmt::Display for InverseModularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `∂²P_m/∂q_i∂q_j` at a node (1-based labels).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPartialWitness<T> {
    pub m: usize,
    pub i: usize,
    pub j: usize,
    pub node: Vec<T>,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseModularityReport<T> {
    pub verdict: InverseModularity,
    pub min: CrossPartialWitness<T>,
    pub max: CrossPartialWitness<T>,
    /// Boundary nodes where a partial could not be evaluated.
    pub skipped: Vec<Vec<T>>,
}

impl<T: Real> InverseModularityReport<T> {
    /// The strongest witness on the strict side of the verdict: the most
    /// negative partial unless the verdict is weak supermodularity.
    pub fn worst(&self) -> &CrossPartialWitness<T> {
        match self.verdict {
            InverseModularity::WeaklySupermodular => &self.max,
            InverseModularity::WeaklySubmodular => &self.min,
            _ if self.max.value.abs() > self.min.value.abs() => &self.max,
            _ => &self.min,
        }
    }
}

/// Sign conditions on every distinct-index cross partial of inverse demand.
pub fn inverse_modularity<T: Real>(
    model: &DemandModel<T>,
    region: &EvaluationRegion<T>,
) -> Result<InverseModularityReport<T>> {
    region.validate()?;
    let n = model.n();
    if region.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: region.dim() });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("cross partials need at least two products".into()));
    }
    let tol = c::<T>(1e-8);
    let nodes = region.nodes();
    let per_node: Vec<Option<Vec<CrossPartialWitness<T>>>> = nodes
        .par_iter()
        .map(|node| {
            let q = match region.space {
                Space::Quantity => node.clone(),
                Space::Price => model.demand(node)?,
            };
            let mut out = Vec::new();
            for m in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let value = model.inverse_cross_partial(&q, m, i, j).and_then(|v| {
                            if v.is_finite() {
                                Ok(v)
                            } else {
                                Err(Error::OutOfDomain("non-finite cross partial".into()))
                            }
                        });
                        match value {
                            Ok(value) => out.push(CrossPartialWitness { m: m + 1, i: i + 1, j: j + 1, node: node.clone(), value }),
                            Err(_) if region.on_boundary(node) => return Ok(None),
                            Err(e) => return Err(Error::NodeFailure { node: node_f64(node), reason: e.to_string() }),
                        }
                    }
                }
            }
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;
    let mut skipped = Vec::new();
    let mut min: Option<CrossPartialWitness<T>> = None;
    let mut max: Option<CrossPartialWitness<T>> = None;
    for (node, entry) in nodes.iter().zip(per_node) {
        let Some(ws) = entry else {
            skipped.push(node.clone());
            continue;
        };
        for w in ws {
            if min.as_ref().map_or(true, |m| w.value < m.value) {
                min = Some(w.clone());
            }
            if max.as_ref().map_or(true, |m| w.value > m.value) {
                max = Some(w);
            }
        }
    }
    let (Some(min), Some(max)) = (min, max) else {
        return Err(Error::InvalidParameter("no evaluable node in region".into()));
    };
    let sup = min.value >= -tol;
    let sub = max.value <= tol;
    let verdict = match (sup, sub) {
        (true, true) => InverseModularity::Both,
        (true, false) => InverseModularity::WeaklySupermodular,
        (false, true) => InverseModularity::WeaklySubmodular,
        (false, false) => InverseModularity::Neither,
    };
    Ok(InverseModularityReport { verdict, min, max, skipped })
}
