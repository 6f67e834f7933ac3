//! Optimal quantities for a carried portfolio.
//!
//! `Π*(x)` maximises `R(q) = Σ_{i∈x} (P_i(q) − c_i)·q_i` with `q_i = 0` off the
//! portfolio. Carried quantities live in `[ε, 10·q̄_i]`, `q̄` the model's choke
//! quantities.

mod bfgs;
mod foc;
mod search;

pub use foc::{solve_sqrt_spillover_foc, FocSolution, FocVariant};
pub use search::{
    counterexample_search, gross_summary, random_linear, Atom, Cmp, Instance, LinearKind, Predicate, PredicateContext,
    SampledModel,
};

use std::fmt;

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demand::DemandModel;
use crate::error::{Error, Result};
use crate::portfolio::{check_pair, Portfolio, SetFunction};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub gradient_tolerance: T,
    pub max_iterations: usize,
    pub multistart: usize,
    /// Lower bound ε on carried quantities.
    pub floor: T,
    pub seed: u64,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self { gradient_tolerance: c(1e-9), max_iterations: 500, multistart: 8, floor: c(1e-6), seed: 0 }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > T::zero()) {
            return Err(Error::InvalidParameter("gradient tolerance must be positive".into()));
        }
        if self.multistart == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter("multistart and max_iterations must be at least 1".into()));
        }
        if !(self.floor >= T::zero()) {
            return Err(Error::InvalidParameter("quantity floor must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptStatus {
    Converged,
    /// Two starts converged to interior maxima with different values.
    Degenerate,
    /// No start met the gradient tolerance; the best incumbent is returned.
    MaxIter,
}

impl OptStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Converged => "Converged",
            Self::Degenerate => "Degenerate",
            Self::MaxIter => "MaxIter",
        }
    }
}

impl fmt::Display for OptStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult<T> {
    /// Full quantity vector; zero off the portfolio.
    pub q: Vec<T>,
    pub value: T,
    /// Projected-gradient norm over the optimised coordinates.
    pub gradient_norm: T,
    pub status: OptStatus,
    pub starts: usize,
    pub iterations: usize,
}

/// Bounds for the inner coordinates of [`partial_max`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerBounds {
    /// `[ε, 10·q̄]`, as in [`max_profit`].
    Floor,
    /// Unconstrained: the inner first-order conditions hold with equality.
    Free,
}

fn embed<T: Real>(n: usize, coords: &[usize], fixed: &[(usize, T)], x: &[T]) -> Vec<T> {
    let mut q = vec![T::zero(); n];
    for &(i, v) in fixed {
        q[i] = v;
    }
    for (&i, &v) in coords.iter().zip(x) {
        q[i] = v;
    }
    q
}

fn latin_hypercube<T: Real>(rng: &mut ChaCha8Rng, m: usize, lower: &[T], upper: &[T]) -> Vec<Vec<T>> {
    let d = lower.len();
    let mut pts = vec![vec![T::zero(); d]; m];
    for a in 0..d {
        let mut strata: Vec<usize> = (0..m).collect();
        for k in (1..m).rev() {
            strata.swap(k, rng.gen_range(0..=k));
        }
        for (k, pt) in pts.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            let t = c::<T>((strata[k] as f64 + u) / m as f64);
            pt[a] = lower[a] + (upper[a] - lower[a]) * t;
        }
    }
    pts
}

/// Multistart maximisation of `R` over `coords`, other coordinates fixed.
fn maximize<T: Real>(
    model: &DemandModel<T>,
    coords: &[usize],
    fixed: &[(usize, T)],
    bounds: InnerBounds,
    cfg: &OptimizerConfig<T>,
    seed: u64,
) -> Result<OptResult<T>> {
    cfg.validate()?;
    let n = model.n();
    if coords.is_empty() {
        let q = embed(n, coords, fixed, &[]);
        let value = model.revenue(&q)?;
        return Ok(OptResult { q, value, gradient_norm: T::zero(), status: OptStatus::Converged, starts: 0, iterations: 0 });
    }
    let choke = model.choke_quantities();
    let ten = c::<T>(10.0);
    let (lower, upper): (Vec<T>, Vec<T>) = match bounds {
        InnerBounds::Floor => coords.iter().map(|&i| (cfg.floor, ten * choke[i])).unzip(),
        InnerBounds::Free => coords.iter().map(|_| (T::neg_infinity(), T::infinity())).unzip(),
    };
    let (slo, shi): (Vec<T>, Vec<T>) = coords.iter().map(|&i| (cfg.floor, choke[i].max(cfg.floor + cfg.floor))).unzip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = latin_hypercube(&mut rng, cfg.multistart, &slo, &shi);
    let objective = |x: &[T]| -> Result<(T, Vec<T>)> {
        let q = embed(n, coords, fixed, x);
        let r = model.revenue(&q)?;
        let g = model.revenue_gradient(&q)?;
        Ok((-r, coords.iter().map(|&i| -g[i]).collect()))
    };
    let mut outcomes = Vec::new();
    let mut last_err = None;
    for x0 in &starts {
        match bfgs::minimize(&objective, &lower, &upper, x0, cfg.gradient_tolerance, cfg.max_iterations) {
            Ok(o) => outcomes.push(o),
            Err(e) => last_err = Some(e),
        }
    }
    if outcomes.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Optimizer("no start could be evaluated".into())));
    }
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| {
            // Prefer converged starts, then the larger profit.
            (!a.1.converged, a.1.value).partial_cmp(&(!b.1.converged, b.1.value)).unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(k, _)| k)
        .unwrap_or(0);
    let best = &outcomes[best];
    let interior = |x: &[T]| x.iter().zip(lower.iter().zip(&upper)).all(|(&v, (&l, &u))| v > l && v < u);
    let status = if !best.converged {
        OptStatus::MaxIter
    } else {
        let maxima: Vec<T> = outcomes.iter().filter(|o| o.converged && interior(&o.x)).map(|o| o.value).collect();
        let spread = maxima.iter().fold(T::zero(), |m, &v| m.max((v - best.value).abs()));
        if maxima.len() >= 2 && spread > c(1e-6) {
            OptStatus::Degenerate
        } else {
            OptStatus::Converged
        }
    };
    let q = embed(n, coords, fixed, &best.x);
    let value = model.revenue(&q)?;
    Ok(OptResult { q, value, gradient_norm: best.pg_norm, status, starts: starts.len(), iterations })
}

fn portfolio_seed(seed: u64, x: Portfolio) -> u64 {
    seed ^ (x.bits() as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `Π*(x)`: profit-maximising quantities for the carried set `x`.
pub fn max_profit<T: Real>(model: &DemandModel<T>, x: Portfolio, cfg: &OptimizerConfig<T>) -> Result<OptResult<T>> {
    if x.n() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: x.n() });
    }
    let coords: Vec<usize> = x.members().map(|i| i - 1).collect();
    maximize(model, &coords, &[], InnerBounds::Floor, cfg, portfolio_seed(cfg.seed, x))
}

/// `M(q_i, q_j)`: the maximum over the other carried quantities with the pair's
/// quantities held fixed. Products of the pair are forced out of `carried`.
pub fn partial_max<T: Real>(
    model: &DemandModel<T>,
    pair: (usize, usize),
    fixed: (T, T),
    carried: Portfolio,
    bounds: InnerBounds,
    cfg: &OptimizerConfig<T>,
) -> Result<OptResult<T>> {
    if carried.n() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: carried.n() });
    }
    check_pair(&carried, pair.0, pair.1)?;
    if fixed.0 < T::zero() || fixed.1 < T::zero() {
        return Err(Error::InvalidParameter("fixed quantities must be nonnegative".into()));
    }
    let inner = carried.without(pair.0)?.without(pair.1)?;
    let coords: Vec<usize> = inner.members().map(|i| i - 1).collect();
    let pinned = [(pair.0 - 1, fixed.0), (pair.1 - 1, fixed.1)];
    maximize(model, &coords, &pinned, bounds, cfg, portfolio_seed(cfg.seed, inner))
}

/// Forward-difference `∂²M/∂q_i∂q_j` with step `h`.
pub fn partial_max_cross<T: Real>(
    model: &DemandModel<T>,
    pair: (usize, usize),
    at: (T, T),
    carried: Portfolio,
    bounds: InnerBounds,
    h: T,
    cfg: &OptimizerConfig<T>,
) -> Result<T> {
    let m = |a: T, b: T| partial_max(model, pair, (at.0 + a, at.1 + b), carried, bounds, cfg).map(|r| r.value);
    let z = T::zero();
    Ok(((m(h, h)? - m(h, z)?) - (m(z, h)? - m(z, z)?)) / (h * h))
}

/// Memoised `x ↦ Π*(x)`.
#[derive(Debug)]
pub struct ProfitOracle<T> {
    model: DemandModel<T>,
    config: OptimizerConfig<T>,
    memo: DashMap<u32, OptResult<T>>,
}

impl<T: Real> ProfitOracle<T> {
    pub fn new(model: DemandModel<T>, config: OptimizerConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self { model, config, memo: DashMap::new() })
    }

    pub fn model(&self) -> &DemandModel<T> {
        &self.model
    }

    pub fn config(&self) -> &OptimizerConfig<T> {
        &self.config
    }

    pub fn result(&self, x: Portfolio) -> Result<OptResult<T>> {
        if x.n() != self.model.n() {
            return Err(Error::DimensionMismatch { expected: self.model.n(), got: x.n() });
        }
        if let Some(r) = self.memo.get(&x.bits()) {
            return Ok(r.clone());
        }
        let r = max_profit(&self.model, x, &self.config)?;
        Ok(self.memo.entry(x.bits()).or_insert(r).clone())
    }

    /// Everything evaluated so far in bit order.
    pub fn evaluated(&self) -> Vec<(Portfolio, OptResult<T>)> {
        let n = self.model.n();
        let mut out: Vec<_> = self
            .memo
            .iter()
            .filter_map(|e| Portfolio::from_bits(n, *e.key()).ok().map(|x| (x, e.value().clone())))
            .collect();
        out.sort_by_key(|(x, _)| x.bits());
        out
    }
}

impl<T: Real> SetFunction<T> for ProfitOracle<T> {
    fn n(&self) -> usize {
        self.model.n()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        self.result(x).map(|r| r.value)
    }
}

/// The `Π*` second difference of a pair with every other product carried.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport<T> {
    pub pair: (usize, usize),
    /// `Π*` indexed `[x_i][x_j]`.
    pub values: [[T; 2]; 2],
    pub delta: T,
    pub statuses: [[OptStatus; 2]; 2],
}

pub fn merger_delta_with<T: Real>(oracle: &ProfitOracle<T>, pair: (usize, usize)) -> Result<DeltaReport<T>> {
    let n = oracle.n();
    let full = Portfolio::full(n)?;
    check_pair(&full, pair.0, pair.1)?;
    let rest = full.without(pair.0)?.without(pair.1)?;
    let mut values = [[T::zero(); 2]; 2];
    let mut statuses = [[OptStatus::Converged; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let r = oracle.result(rest.set(pair.0, a == 1)?.set(pair.1, b == 1)?)?;
            values[a][b] = r.value;
            statuses[a][b] = r.status;
        }
    }
    let delta = (values[1][1] + values[0][0]) - (values[1][0] + values[0][1]);
    Ok(DeltaReport { pair, values, delta, statuses })
}

pub fn merger_delta<T: Real>(
    model: &DemandModel<T>,
    pair: (usize, usize),
    cfg: &OptimizerConfig<T>,
) -> Result<DeltaReport<T>> {
    merger_delta_with(&ProfitOracle::new(model.clone(), cfg.clone())?, pair)
}

/// `Δ` along a one-parameter family, e.g. `b ∈ {10⁻², 10⁻³, 10⁻⁴}`.
pub fn limit_sweep<T: Real, F>(
    build: F,
    params: &[T],
    pair: (usize, usize),
    cfg: &OptimizerConfig<T>,
) -> Result<Vec<(T, DeltaReport<T>)>>
where
    F: Fn(T) -> Result<DemandModel<T>>,
{
    params.iter().map(|&p| Ok((p, merger_delta(&build(p)?, pair, cfg)?))).collect()
}

#[cfg(test)]
mod tests;
