//! Random search for parameter draws satisfying a predicate on `Δ` and gross relations.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{merger_delta, DeltaReport, OptimizerConfig};
use crate::demand::{gross_relation, DemandModel, GrossRelation, GrossReport};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::portfolio::{Portfolio, RelationKind};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Self::Lt => "<",
            Self::Le => "<=",
            Self::Gt => ">",
            Self::Ge => ">=",
            Self::Eq => "=",
            Self::Ne => "!=",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Self::Lt => a < b,
            Self::Le => a <= b,
            Self::Gt => a > b,
            Self::Ge => a >= b,
            Self::Eq => a == b,
            Self::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Delta(Cmp, f64),
    Gap(Cmp, f64),
    /// Gross relation of every pair: `complements`, `substitutes`, `independent` or `mixed`.
    Gross(bool, GrossRelation),
    /// Profit relation of the merging pair.
    Profit(bool, RelationKind),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eq = |b: bool| if b { "=" } else { "!=" };
        match self {
            Self::Delta(c, v) => write!(f, "delta{}{v}", c.symbol()),
            Self::Gap(c, v) => write!(f, "gap{}{v}", c.symbol()),
            Self::Gross(b, g) => write!(f, "gross{}{}", eq(*b), gross_word(*g)),
            Self::Profit(b, k) => write!(f, "profit{}{}", eq(*b), profit_word(*k)),
        }
    }
}

fn gross_word(g: GrossRelation) -> &'static str {
    match g {
        GrossRelation::StrictGrossComplements => "complements",
        GrossRelation::StrictGrossSubstitutes => "substitutes",
        GrossRelation::Independent => "independent",
        GrossRelation::Mixed => "mixed",
    }
}

fn profit_word(k: RelationKind) -> &'static str {
    match k {
        RelationKind::StrictComplements => "complements",
        RelationKind::StrictSubstitutes => "substitutes",
        RelationKind::Additive => "additive",
        RelationKind::Mixed => "mixed",
    }
}

/// Conjunction of atoms, e.g. `gross=complements && delta<0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    atoms: Vec<Atom>,
}

/// Quantities a predicate may refer to; `None` where not computed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredicateContext {
    pub delta: Option<f64>,
    pub gap: Option<f64>,
    pub gross: Option<GrossRelation>,
    pub profit: Option<RelationKind>,
}

/// Collapses a gross report to one word for the whole system.
pub fn gross_summary<T>(report: &GrossReport<T>) -> GrossRelation {
    if report.all_complements() {
        GrossRelation::StrictGrossComplements
    } else if report.all_substitutes() {
        GrossRelation::StrictGrossSubstitutes
    } else if report.pairs.iter().all(|p| p.verdict == GrossRelation::Independent) {
        GrossRelation::Independent
    } else {
        GrossRelation::Mixed
    }
}

impl Predicate {
    pub fn parse(src: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidParameter(format!("predicate: {m}"));
        let normalized = src.replace(" and ", "&&");
        let mut atoms = Vec::new();
        for part in normalized.split("&&") {
            let part: String = part.chars().filter(|c| !c.is_whitespace()).collect();
            if part.is_empty() {
                return Err(bad(format!("empty clause in {src:?}")));
            }
            let ops = [("<=", Cmp::Le), (">=", Cmp::Ge), ("==", Cmp::Eq), ("!=", Cmp::Ne), ("<", Cmp::Lt), (">", Cmp::Gt), ("=", Cmp::Eq)];
            let Some((at, sym, cmp)) = ops.iter().find_map(|&(s, c)| part.find(s).map(|k| (k, s, c))) else {
                return Err(bad(format!("no comparison in {part:?}")));
            };
            let (name, value) = (&part[..at], &part[at + sym.len()..]);
            let atom = match name {
                "delta" | "gap" => {
                    let v: f64 = value.parse().map_err(|_| bad(format!("not a number: {value:?}")))?;
                    if name == "delta" {
                        Atom::Delta(cmp, v)
                    } else {
                        Atom::Gap(cmp, v)
                    }
                }
                "gross" | "profit" => {
                    let positive = match cmp {
                        Cmp::Eq => true,
                        Cmp::Ne => false,
                        _ => return Err(bad(format!("{name} supports only = and !="))),
                    };
                    if name == "gross" {
                        let g = match value {
                            "complements" => GrossRelation::StrictGrossComplements,
                            "substitutes" => GrossRelation::StrictGrossSubstitutes,
                            "independent" => GrossRelation::Independent,
                            "mixed" => GrossRelation::Mixed,
                            _ => return Err(bad(format!("unknown gross relation {value:?}"))),
                        };
                        Atom::Gross(positive, g)
                    } else {
                        let k = match value {
                            "complements" => RelationKind::StrictComplements,
                            "substitutes" => RelationKind::StrictSubstitutes,
                            "additive" => RelationKind::Additive,
                            "mixed" => RelationKind::Mixed,
                            _ => return Err(bad(format!("unknown profit relation {value:?}"))),
                        };
                        Atom::Profit(positive, k)
                    }
                }
                _ => return Err(bad(format!("unknown quantity {name:?}"))),
            };
            atoms.push(atom);
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn needs_gross(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, Atom::Gross(..)))
    }

    pub fn needs_delta(&self) -> bool {
        self.atoms.iter().any(|a| !matches!(a, Atom::Gross(..)))
    }

    pub fn eval(&self, ctx: &PredicateContext) -> Result<bool> {
        let missing = |what: &str| Error::InvalidParameter(format!("predicate needs {what}, which is not available here"));
        for atom in &self.atoms {
            let ok = match atom {
                Atom::Delta(c, v) => c.holds(ctx.delta.ok_or_else(|| missing("delta"))?, *v),
                Atom::Gap(c, v) => c.holds(ctx.gap.ok_or_else(|| missing("gap"))?, *v),
                Atom::Gross(pos, g) => (ctx.gross.ok_or_else(|| missing("gross"))? == *g) == *pos,
                Atom::Profit(pos, k) => (ctx.profit.ok_or_else(|| missing("profit"))? == *k) == *pos,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.atoms.iter().enumerate() {
            if k > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A drawn model with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct SampledModel<T> {
    pub params: Vec<(String, f64)>,
    pub model: DemandModel<T>,
}

#[derive(Debug, Clone)]
pub struct Instance<T> {
    pub params: Vec<(String, f64)>,
    pub model: DemandModel<T>,
    pub delta: Option<DeltaReport<T>>,
    pub gross: Option<GrossReport<T>>,
    /// 1-based index of the successful draw.
    pub draw: usize,
}

/// Draws up to `budget` models and returns the first satisfying `predicate`.
/// Draws that fail to build or evaluate are skipped. Deterministic in `seed`.
/// `gap` is not defined here (no bargaining weight); use `delta`.
pub fn counterexample_search<T, S>(
    mut sampler: S,
    predicate: &Predicate,
    pair: (usize, usize),
    budget: usize,
    seed: u64,
    cfg: &OptimizerConfig<T>,
) -> Result<Option<Instance<T>>>
where
    T: Real,
    S: FnMut(&mut ChaCha8Rng) -> Result<SampledModel<T>>,
{
    if budget == 0 {
        return Err(Error::InvalidParameter("search budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 1..=budget {
        let Ok(SampledModel { params, model }) = sampler(&mut rng) else {
            continue;
        };
        let mut ctx = PredicateContext::default();
        let mut gross = None;
        if predicate.needs_gross() {
            let Ok(rep) = gross_relation(&model, &model.default_region()) else {
                continue;
            };
            ctx.gross = Some(gross_summary(&rep));
            gross = Some(rep);
            // Cheap rejection before optimising.
            let only_gross = Predicate { atoms: predicate.atoms.iter().filter(|a| matches!(a, Atom::Gross(..))).cloned().collect() };
            if !only_gross.eval(&ctx)? {
                continue;
            }
        }
        let mut delta = None;
        if predicate.needs_delta() {
            let Ok(rep) = merger_delta(&model, pair, cfg) else {
                continue;
            };
            let d = rep.delta.as_f64();
            ctx.delta = Some(d);
            ctx.profit = Some(RelationKind::of_value(d, crate::DEFAULT_TOLERANCE));
            delta = Some(rep);
        }
        if predicate.eval(&ctx)? {
            return Ok(Some(Instance { params, model, delta, gross, draw }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    /// Negative off-diagonal slopes: strict gross complements.
    Complements,
    /// Positive off-diagonal slopes: strict gross substitutes.
    Substitutes,
}

/// A random linear system `P = a − Bq` with strictly diagonally dominant `B`
/// (by rows and columns) whose profit maximum is interior for every portfolio.
pub fn random_linear(rng: &mut ChaCha8Rng, n: usize, kind: LinearKind) -> Result<SampledModel<f64>> {
    let n_u = n.max(2);
    for _ in 0..1000 {
        let mut slopes = vec![vec![0.0; n]; n];
        for (i, row) in slopes.iter_mut().enumerate() {
            for (j, s) in row.iter_mut().enumerate() {
                *s = if i == j {
                    rng.gen_range(1.0..2.0)
                } else {
                    let m = rng.gen_range(0.05..1.0) * 0.4 / (n_u - 1) as f64;
                    if kind == LinearKind::Complements { -m } else { m }
                };
            }
        }
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..2.0)).collect();
        let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.3)).collect();
        if interior_everywhere(&a, &slopes, &costs)? {
            let mut params = Vec::new();
            for i in 0..n {
                params.push((format!("a{}", i + 1), a[i]));
                params.push((format!("c{}", i + 1), costs[i]));
                for j in 0..n {
                    params.push((format!("B{}{}", i + 1, j + 1), slopes[i][j]));
                }
            }
            return Ok(SampledModel { params, model: DemandModel::linear(a, slopes, costs)? });
        }
    }
    Err(Error::Optimizer("could not draw an interior linear system".into()))
}

/// Interior optimum `(B_S + B_Sᵀ) q = (a − c)_S` positive for every nonempty `S`.
fn interior_everywhere(a: &[f64], slopes: &[Vec<f64>], costs: &[f64]) -> Result<bool> {
    let n = a.len();
    for x in Portfolio::all(n)? {
        let idx: Vec<usize> = x.members().map(|i| i - 1).collect();
        if idx.is_empty() {
            continue;
        }
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| slopes[i][j] + slopes[j][i]).collect()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| a[i] - costs[i]).collect();
        let q = Matrix::from_rows(&rows)?.solve(&rhs)?;
        if q.iter().any(|&v| v <= 0.05) {
            return Ok(false);
        }
    }
    Ok(true)
}
