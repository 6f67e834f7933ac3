//! One-stop-shopping market with reduced-form payoffs.
//!
//! Each carried product `i` gives visiting consumers surplus `v_i` and the
//! intermediary margin `π_i`. A consumer with shopping cost ξ visits iff
//! `x·v ≥ ξ`, so the visiting share is `G(x·v)` and profit is
//! `Π(x) = (x·π)·G(x·v)`.

mod cdf;

pub use cdf::ShoppingCostCdf;

use crate::demand::GrossRelation;
use crate::error::{Error, Result};
use crate::portfolio::{check_pair, PairRelation, Portfolio, RelationKind, SetFunction, Witness};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormMarket<T> {
    v: Vec<T>,
    pi: Vec<T>,
    cdf: ShoppingCostCdf<T>,
}

/// Profit spillovers of a pair onto a target product.
#[derive(Debug, Clone, PartialEq)]
pub struct SpilloverReport<T> {
    pub pair: (usize, usize),
    pub target: usize,
    /// `S(x_i, x_j)` indexed `[x_i][x_j]`.
    pub values: [[T; 2]; 2],
    pub second_difference: T,
    pub relation: PairRelation<T>,
}

/// Two sides of the pair complementarity condition: complements in profit iff `lhs > rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementarityCondition<T> {
    pub lhs: T,
    pub rhs: T,
    pub verdict: RelationKind,
}

/// Consumer loss ratios for removing products of a pair from the full portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRatioReport<T> {
    pub cl_first: T,
    pub cl_second: T,
    pub cl_both: T,
    /// `CL₁ + CL₂ − CL₁₂`; positive iff the pair are complements in spillovers.
    pub gap: T,
}

/// Discrete gross relation of a pair: does carrying `j` raise the demand for `i`?
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteGross<T> {
    pub i: usize,
    pub j: usize,
    pub verdict: GrossRelation,
    pub min_change: T,
    pub max_change: T,
}

impl<T: Real> ReducedFormMarket<T> {
    pub fn new(v: Vec<T>, pi: Vec<T>, cdf: ShoppingCostCdf<T>) -> Result<Self> {
        if v.len() != pi.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), got: pi.len() });
        }
        if v.len() < 2 {
            return Err(Error::InvalidParameter("a reduced-form market needs n ≥ 2".into()));
        }
        Portfolio::empty(v.len())?;
        if v.iter().chain(&pi).any(|&x| !(x > T::zero()) || !x.is_finite()) {
            return Err(Error::InvalidParameter("surpluses and margins must be positive".into()));
        }
        cdf.validate()?;
        Ok(Self { v, pi, cdf })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn surplus(&self) -> &[T] {
        &self.v
    }

    pub fn margins(&self) -> &[T] {
        &self.pi
    }

    pub fn cdf(&self) -> &ShoppingCostCdf<T> {
        &self.cdf
    }

    fn check(&self, x: &Portfolio) -> Result<()> {
        if x.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.n() });
        }
        Ok(())
    }

    /// Share of consumers visiting with portfolio `x`.
    pub fn traffic(&self, x: Portfolio) -> Result<T> {
        self.check(&x)?;
        Ok(self.cdf.eval(x.dot(&self.v)?))
    }

    /// `Π(x) = (x·π)·G(x·v)`.
    pub fn profit(&self, x: Portfolio) -> Result<T> {
        self.check(&x)?;
        Ok(x.dot(&self.pi)? * self.cdf.eval(x.dot(&self.v)?))
    }

    /// `D_i(x) = x_i·G(x·v)`.
    pub fn demand(&self, i: usize, x: Portfolio) -> Result<T> {
        self.check(&x)?;
        x.check_index(i)?;
        if x.contains(i) {
            self.traffic(x)
        } else {
            Ok(T::zero())
        }
    }

    /// `U(x; ξ) = max(x·v − ξ, 0)`.
    pub fn consumer_utility(&self, x: Portfolio, xi: T) -> Result<T> {
        self.check(&x)?;
        if xi < T::zero() {
            return Err(Error::InvalidParameter("shopping cost must be nonnegative".into()));
        }
        Ok((x.dot(&self.v)? - xi).max(T::zero()))
    }

    /// The indirect utility of one consumer as a set function.
    pub fn utility_at(&self, xi: T) -> impl SetFunction<T> + '_ {
        crate::portfolio::try_from_fn(self.n(), move |x| self.consumer_utility(x, xi))
    }

    /// Spillovers of `pair` onto `target` with no other products carried.
    pub fn spillover(&self, pair: (usize, usize), target: usize) -> Result<SpilloverReport<T>> {
        self.spillover_with(pair, target, Portfolio::empty(self.n())?)
    }

    /// `S(x_i, x_j) = π_t·[G(x_i v_i + x_j v_j + v_t + B) − G(v_t + B)]` where
    /// `B` is the surplus of the `background` products. Members of the pair
    /// and the target are dropped from `background`.
    pub fn spillover_with(
        &self,
        pair: (usize, usize),
        target: usize,
        background: Portfolio,
    ) -> Result<SpilloverReport<T>> {
        self.check(&background)?;
        let (i, j) = pair;
        check_pair(&background, i, j)?;
        background.check_index(target)?;
        if target == i || target == j {
            return Err(Error::InvalidParameter(format!(
                "spillover target {target} coincides with a pair member"
            )));
        }
        let base = background.without(i)?.without(j)?.with(target)?;
        let g0 = self.traffic(base)?;
        let pi_t = self.pi[target - 1];
        let mut values = [[T::zero(); 2]; 2];
        for (a, row) in values.iter_mut().enumerate() {
            for (b, s) in row.iter_mut().enumerate() {
                let x = base.set(i, a == 1)?.set(j, b == 1)?;
                *s = pi_t * (self.traffic(x)? - g0);
            }
        }
        let d = (values[1][1] + values[0][0]) - (values[1][0] + values[0][1]);
        let tol = c::<T>(crate::DEFAULT_TOLERANCE);
        let relation =
            PairRelation::from_witnesses(vec![Witness { i, j, rest: base, value: d }], tol);
        Ok(SpilloverReport { pair, target, values, second_difference: d, relation })
    }

    /// The pair complementarity condition at a rest-portfolio.
    ///
    /// With `B = rest·v`, `lhs = π_i[G(v_i+v_j+B) − G(v_i+B)] + π_j[G(v_i+v_j+B) − G(v_j+B)]`
    /// and `rhs = (rest·π)[G(v_i+B) + G(v_j+B) − G(v_i+v_j+B) − G(B)]`;
    /// `lhs − rhs` is the profit second difference of the pair.
    pub fn complementarity_condition(
        &self,
        pair: (usize, usize),
        rest: Portfolio,
    ) -> Result<ComplementarityCondition<T>> {
        self.check(&rest)?;
        let (i, j) = pair;
        check_pair(&rest, i, j)?;
        let rest = rest.without(i)?.without(j)?;
        let g_both = self.traffic(rest.with(i)?.with(j)?)?;
        let g_i = self.traffic(rest.with(i)?)?;
        let g_j = self.traffic(rest.with(j)?)?;
        let g_none = self.traffic(rest)?;
        let (pi_i, pi_j) = (self.pi[i - 1], self.pi[j - 1]);
        let lhs = pi_i * (g_both - g_i) + pi_j * (g_both - g_j);
        let rhs = rest.dot(&self.pi)? * ((g_i + g_j) - (g_both + g_none));
        let verdict = RelationKind::of_value(lhs - rhs, c::<T>(crate::DEFAULT_TOLERANCE));
        Ok(ComplementarityCondition { lhs, rhs, verdict })
    }

    /// Three-product form: pair (1, 2), product 3 carried iff `x3`.
    pub fn complementarity_condition_x3(&self, x3: bool) -> Result<ComplementarityCondition<T>> {
        if self.n() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: self.n() });
        }
        let rest = Portfolio::empty(3)?.set(3, x3)?;
        self.complementarity_condition((1, 2), rest)
    }

    /// Loss ratios relative to the full portfolio.
    pub fn loss_ratios(&self, pair: (usize, usize)) -> Result<LossRatioReport<T>> {
        let full = Portfolio::full(self.n())?;
        let (i, j) = pair;
        check_pair(&full, i, j)?;
        let g_full = self.traffic(full)?;
        let cl_first = g_full - self.traffic(full.without(i)?)?;
        let cl_second = g_full - self.traffic(full.without(j)?)?;
        let cl_both = g_full - self.traffic(full.without(i)?.without(j)?)?;
        Ok(LossRatioReport { cl_first, cl_second, cl_both, gap: cl_first + cl_second - cl_both })
    }

    /// Gross relation of every pair in the discrete sense: `j` is a gross
    /// complement of `i` when carrying `j` raises `D_i`.
    pub fn gross_relations(&self, tolerance: T) -> Result<Vec<DiscreteGross<T>>> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                let mut changes = Vec::new();
                for rest in Portfolio::rests(n, i, j)? {
                    for (own, other) in [(i, j), (j, i)] {
                        let x = rest.with(own)?;
                        changes.push(self.demand(own, x.with(other)?)? - self.demand(own, x)?);
                    }
                }
                out.push(discrete_gross(i, j, &changes, tolerance));
            }
        }
        Ok(out)
    }
}

pub(crate) fn discrete_gross<T: Real>(i: usize, j: usize, changes: &[T], tol: T) -> DiscreteGross<T> {
    let min_change = changes.iter().copied().fold(T::infinity(), T::min);
    let max_change = changes.iter().copied().fold(T::neg_infinity(), T::max);
    let verdict = if min_change > tol {
        GrossRelation::StrictGrossComplements
    } else if max_change < -tol {
        GrossRelation::StrictGrossSubstitutes
    } else if min_change >= -tol && max_change <= tol {
        GrossRelation::Independent
    } else {
        GrossRelation::Mixed
    };
    DiscreteGross { i, j, verdict, min_change, max_change }
}

impl<T: Real> SetFunction<T> for ReducedFormMarket<T> {
    fn n(&self) -> usize {
        self.v.len()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        self.profit(x)
    }
}

/// Pair condition for three products with general portfolio demands
/// `D_i(x)` and profit `Π(x) = Σ x_i π_i D_i(x)`, product 3 carried:
/// `lhs = π₁[D₁(1,1,1) − D₁(1,0,1)] + π₂[D₂(1,1,1) − D₂(0,1,1)]`,
/// `rhs = π₃[D₃(1,0,1) + D₃(0,1,1) − D₃(1,1,1) − D₃(0,0,1)]`.
/// Products 1 and 2 are substitutes in profit iff `lhs < rhs`.
pub fn separable_profit_condition<T: Real, D>(pi: [T; 3], demand: D) -> Result<ComplementarityCondition<T>>
where
    D: Fn(usize, Portfolio) -> T,
{
    let p = |s: &str| Portfolio::from_indicator(s);
    let (x111, x101, x011, x001) = (p("111")?, p("101")?, p("011")?, p("001")?);
    let lhs = pi[0] * (demand(1, x111) - demand(1, x101)) + pi[1] * (demand(2, x111) - demand(2, x011));
    let rhs = pi[2] * ((demand(3, x101) + demand(3, x011)) - (demand(3, x111) + demand(3, x001)));
    let verdict = RelationKind::of_value(lhs - rhs, c::<T>(crate::DEFAULT_TOLERANCE));
    Ok(ComplementarityCondition { lhs, rhs, verdict })
}
