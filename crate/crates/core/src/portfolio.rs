//! Set functions on the portfolio hypercube {0,1}ⁿ.
//!
//! A [`Portfolio`] is a bit pattern over products labelled `1..=n`. Any map
//! from portfolios to profit values is a [`SetFunction`]; the second
//! difference of a pair of products at a fixed assignment of the others is
//! the quantity every merger result in this crate reduces to.

use std::fmt;

use dashmap::DashMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest product count for which the hypercube is enumerated.
pub const MAX_PRODUCTS: usize = 24;

/// Subset of the products `1..=n` carried by the intermediary.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Portfolio {
    n: u8,
    bits: u32,
}

impl Portfolio {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_PRODUCTS {
            return Err(Error::InvalidParameter(format!(
                "product count must lie in 1..={MAX_PRODUCTS}, got {n}"
            )));
        }
        Ok(Self { n: n as u8, bits: 0 })
    }

    pub fn full(n: usize) -> Result<Self> {
        let p = Self::empty(n)?;
        Ok(Self { bits: mask(n), ..p })
    }

    /// Builds a portfolio from a raw bit pattern, bit `k` standing for product `k + 1`.
    pub fn from_bits(n: usize, bits: u32) -> Result<Self> {
        let p = Self::empty(n)?;
        if bits & !mask(n) != 0 {
            return Err(Error::InvalidParameter(format!(
                "bit pattern {bits:#b} has members beyond product {n}"
            )));
        }
        Ok(Self { bits, ..p })
    }

    /// Builds a portfolio from 1-based product labels.
    pub fn from_members(n: usize, members: &[usize]) -> Result<Self> {
        let mut p = Self::empty(n)?;
        for &i in members {
            p = p.with(i)?;
        }
        Ok(p)
    }

    /// Parses `x₁x₂…xₙ` written as a string of `0`/`1`.
    pub fn from_indicator(s: &str) -> Result<Self> {
        let mut p = Self::empty(s.len())?;
        for (k, ch) in s.chars().enumerate() {
            match ch {
                '1' => p.bits |= 1 << k,
                '0' => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "indicator string may only contain 0/1, got {s:?}"
                    )))
                }
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            Err(Error::IndexOutOfRange { index: i, n: self.n() })
        } else {
            Ok(())
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= 1 && i <= self.n() && self.bits & (1 << (i - 1)) != 0
    }

    pub fn with(self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        Ok(Self { bits: self.bits | 1 << (i - 1), ..self })
    }

    pub fn without(self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        Ok(Self { bits: self.bits & !(1 << (i - 1)), ..self })
    }

    pub fn set(self, i: usize, on: bool) -> Result<Self> {
        if on {
            self.with(i)
        } else {
            self.without(i)
        }
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { bits: self.bits | other.bits, ..self }
    }

    pub fn minus(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { bits: self.bits & !other.bits, ..self }
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// 1-based labels of carried products, ascending.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.n()).filter(move |&i| self.contains(i))
    }

    /// Indicator vector x as `0`/`1` entries of the scalar type.
    pub fn indicator<T: Scalar>(&self) -> Vec<T> {
        (1..=self.n())
            .map(|i| if self.contains(i) { T::one() } else { T::zero() })
            .collect()
    }

    /// x · w over carried products, summed in index order.
    pub fn dot<T: Scalar>(&self, w: &[T]) -> Result<T> {
        if w.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: w.len() });
        }
        Ok(self.members().fold(T::zero(), |acc, i| acc + w[i - 1]))
    }

    /// Every portfolio over `n` products in bit-pattern order.
    pub fn all(n: usize) -> Result<impl Iterator<Item = Portfolio>> {
        let p = Self::empty(n)?;
        Ok((0..=mask(n)).map(move |bits| Portfolio { bits, ..p }))
    }

    /// All `2^(n-2)` assignments of the products other than `i` and `j`.
    /// The returned portfolios have `i` and `j` cleared.
    pub fn rests(n: usize, i: usize, j: usize) -> Result<Vec<Portfolio>> {
        let p = Self::empty(n)?;
        check_pair(&p, i, j)?;
        let others: Vec<usize> = (1..=n).filter(|&k| k != i && k != j).collect();
        let count = 1u32 << others.len();
        Ok((0..count)
            .map(|m| {
                let bits = others
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| m & (1 << b) != 0)
                    .fold(0u32, |acc, (_, &k)| acc | 1 << (k - 1));
                Portfolio { bits, ..p }
            })
            .collect())
    }
}

impl fmt::Display for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n() {
            f.write_str(if self.contains(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Portfolio({self})")
    }
}

fn mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub(crate) fn check_pair(x: &Portfolio, i: usize, j: usize) -> Result<()> {
    x.check_index(i)?;
    x.check_index(j)?;
    if i == j {
        return Err(Error::SameIndex(i));
    }
    Ok(())
}

/// A map from portfolios to profit values.
///
/// Implementations must be pure: the same portfolio always yields the same
/// value. Evaluation may fail (an optimizer that cannot reach a portfolio's
/// feasible region, for instance).
pub trait SetFunction<T>: Sync {
    fn n(&self) -> usize;
    fn eval(&self, x: Portfolio) -> Result<T>;
}

impl<T, F: SetFunction<T> + ?Sized> SetFunction<T> for &F {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        (**self).eval(x)
    }
}

fn check_dim(expected: usize, x: &Portfolio) -> Result<()> {
    if x.n() != expected {
        Err(Error::DimensionMismatch { expected, got: x.n() })
    } else {
        Ok(())
    }
}

/// Set function backed by a closure.
pub struct FnSetFunction<F> {
    n: usize,
    f: F,
}

/// Wraps an infallible closure.
pub fn from_fn<T, F>(n: usize, f: F) -> FnSetFunction<impl Fn(Portfolio) -> Result<T> + Sync>
where
    F: Fn(Portfolio) -> T + Sync,
{
    FnSetFunction { n, f: move |x| Ok(f(x)) }
}

/// Wraps a fallible closure.
pub fn try_from_fn<T, F>(n: usize, f: F) -> FnSetFunction<F>
where
    F: Fn(Portfolio) -> Result<T> + Sync,
{
    FnSetFunction { n, f }
}

impl<T, F> SetFunction<T> for FnSetFunction<F>
where
    F: Fn(Portfolio) -> Result<T> + Sync,
{
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        check_dim(self.n, &x)?;
        (self.f)(x)
    }
}

/// f(x) = x · π.
#[derive(Debug, Clone)]
pub struct Additive<T> {
    pub weights: Vec<T>,
}

impl<T: Scalar> SetFunction<T> for Additive<T> {
    fn n(&self) -> usize {
        self.weights.len()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        x.dot(&self.weights)
    }
}

/// −f.
pub struct Negated<F>(pub F);

impl<T: Scalar, F: SetFunction<T>> SetFunction<T> for Negated<F> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        self.0.eval(x).map(|v| -v)
    }
}

/// f + g, pointwise.
pub struct Sum<F, G>(pub F, pub G);

impl<T: Scalar, F: SetFunction<T>, G: SetFunction<T>> SetFunction<T> for Sum<F, G> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        Ok(self.0.eval(x)? + self.1.eval(x)?)
    }
}

/// Memoising wrapper keyed by the portfolio bit pattern.
///
/// Concurrent readers never block each other; two threads racing on the same
/// missing key may both evaluate it, and the first insert wins. Since the
/// wrapped function is pure both results are identical.
pub struct Memo<F, T> {
    inner: F,
    cache: DashMap<u32, T>,
}

impl<F, T: Scalar> Memo<F, T>
where
    F: SetFunction<T>,
{
    pub fn new(inner: F) -> Self {
        Self { inner, cache: DashMap::new() }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn cached(&self, x: Portfolio) -> Option<T> {
        self.cache.get(&x.bits()).map(|v| *v)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}

impl<F, T: Scalar> SetFunction<T> for Memo<F, T>
where
    F: SetFunction<T>,
{
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn eval(&self, x: Portfolio) -> Result<T> {
        check_dim(self.n(), &x)?;
        if let Some(v) = self.cache.get(&x.bits()) {
            return Ok(*v);
        }
        let v = self.inner.eval(x)?;
        Ok(*self.cache.entry(x.bits()).or_insert(v))
    }
}

/// Values of `f` on all 2ⁿ portfolios, evaluated in parallel, returned in
/// bit-pattern order.
pub fn table<T: Scalar, F: SetFunction<T>>(f: &F) -> Result<Vec<(Portfolio, T)>> {
    let all: Vec<Portfolio> = Portfolio::all(f.n())?.collect();
    all.into_par_iter().map(|x| f.eval(x).map(|v| (x, v))).collect()
}

/// f(i on, j on, rest) − f(i off, j on, rest) − f(i on, j off, rest) + f(i off, j off, rest).
///
/// The membership of `i` and `j` recorded in `rest` is ignored. Positive
/// values mean `i` and `j` are complements in terms of `f` at this rest,
/// negative values substitutes. The result is bit-for-bit symmetric in
/// `(i, j)`.
pub fn second_difference<T: Scalar, F: SetFunction<T> + ?Sized>(
    f: &F,
    i: usize,
    j: usize,
    rest: Portfolio,
) -> Result<T> {
    check_dim(f.n(), &rest)?;
    check_pair(&rest, i, j)?;
    let base = rest.without(i)?.without(j)?;
    let both = f.eval(base.with(i)?.with(j)?)?;
    let only_i = f.eval(base.with(i)?)?;
    let only_j = f.eval(base.with(j)?)?;
    let neither = f.eval(base)?;
    Ok((both + neither) - (only_i + only_j))
}

/// Complement/substitute verdict for a pair over a set of rest-portfolios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationKind {
    StrictComplements,
    StrictSubstitutes,
    Additive,
    Mixed,
}

impl RelationKind {
    /// Verdict implied by a single difference value.
    pub fn of_value<T: Scalar>(d: T, tolerance: T) -> Self {
        if d > tolerance {
            Self::StrictComplements
        } else if d < -tolerance {
            Self::StrictSubstitutes
        } else {
            Self::Additive
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StrictComplements => "StrictComplements",
            Self::StrictSubstitutes => "StrictSubstitutes",
            Self::Additive => "Additive",
            Self::Mixed => "Mixed",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness<T> {
    pub i: usize,
    pub j: usize,
    pub rest: Portfolio,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRelation<T> {
    pub kind: RelationKind,
    pub witnesses: Vec<Witness<T>>,
    pub tolerance: T,
}

impl<T: Scalar> PairRelation<T> {
    /// Aggregates witnesses into a verdict.
    ///
    /// `Mixed` covers every case that is not uniformly strict one way or
    /// uniformly within tolerance, including sign-consistent cases where
    /// some differences vanish.
    pub fn from_witnesses(witnesses: Vec<Witness<T>>, tolerance: T) -> Self {
        let all = |k: RelationKind| {
            witnesses.iter().all(|w| RelationKind::of_value(w.value, tolerance) == k)
        };
        let kind = if witnesses.is_empty() || all(RelationKind::Additive) {
            RelationKind::Additive
        } else if all(RelationKind::StrictComplements) {
            RelationKind::StrictComplements
        } else if all(RelationKind::StrictSubstitutes) {
            RelationKind::StrictSubstitutes
        } else {
            RelationKind::Mixed
        };
        Self { kind, witnesses, tolerance }
    }

    /// Witness with the largest difference, if any exceeds the tolerance.
    pub fn positive_witness(&self) -> Option<&Witness<T>> {
        self.witnesses
            .iter()
            .filter(|w| w.value > self.tolerance)
            .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Witness with the most negative difference, if any is below −tolerance.
    pub fn negative_witness(&self) -> Option<&Witness<T>> {
        self.witnesses
            .iter()
            .filter(|w| w.value < -self.tolerance)
            .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn witness_at(&self, rest: Portfolio) -> Option<&Witness<T>> {
        let key = rest.without(self.witnesses.first()?.i).ok()?;
        let key = key.without(self.witnesses[0].j).ok()?;
        self.witnesses.iter().find(|w| w.rest == key)
    }
}

/// Classifies `(i, j)` over all `2^(n-2)` rest-portfolios.
pub fn classify_pair<T: Scalar, F: SetFunction<T> + ?Sized>(
    f: &F,
    i: usize,
    j: usize,
    tolerance: T,
) -> Result<PairRelation<T>> {
    if tolerance < T::zero() {
        return Err(Error::InvalidParameter("tolerance must be nonnegative".into()));
    }
    let witnesses = Portfolio::rests(f.n(), i, j)?
        .into_iter()
        .map(|rest| second_difference(f, i, j, rest).map(|value| Witness { i, j, rest, value }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PairRelation::from_witnesses(witnesses, tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modularity {
    Supermodular,
    Submodular,
    Additive,
    Neither,
}

#[derive(Debug, Clone)]
pub struct ModularityReport<T> {
    pub verdict: Modularity,
    pub pairs: Vec<PairRelation<T>>,
}

/// Supermodular iff every pair is strict complements or additive with at
/// least one strict pair; submodular analogously.
pub fn classify_modularity<T: Scalar, F: SetFunction<T> + ?Sized>(
    f: &F,
    tolerance: T,
) -> Result<ModularityReport<T>> {
    let n = f.n();
    if n < 2 {
        return Err(Error::InvalidParameter("modularity needs at least two products".into()));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..=n {
        for j in i + 1..=n {
            pairs.push(classify_pair(f, i, j, tolerance)?);
        }
    }
    let count = |k: RelationKind| pairs.iter().filter(|p| p.kind == k).count();
    let (comp, sub, add) = (
        count(RelationKind::StrictComplements),
        count(RelationKind::StrictSubstitutes),
        count(RelationKind::Additive),
    );
    let verdict = if add == pairs.len() {
        Modularity::Additive
    } else if comp + add == pairs.len() {
        Modularity::Supermodular
    } else if sub + add == pairs.len() {
        Modularity::Submodular
    } else {
        Modularity::Neither
    };
    Ok(ModularityReport { verdict, pairs })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn random_fn(values: Vec<f64>) -> impl SetFunction<f64> {
        let n = values.len().trailing_zeros() as usize;
        from_fn(n, move |x: Portfolio| values[x.bits() as usize])
    }

    proptest! {
        #[test]
        fn symmetric_in_pair(values in proptest::collection::vec(-1e3f64..1e3, 16), rest_bits in 0u32..16) {
            let f = random_fn(values);
            let rest = Portfolio::from_bits(4, rest_bits).unwrap();
            for (i, j) in [(1, 2), (1, 4), (2, 3), (3, 4)] {
                let a = second_difference(&f, i, j, rest).unwrap();
                let b = second_difference(&f, j, i, rest).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn invariant_under_additive_shift(
            values in proptest::collection::vec(-10f64..10.0, 8),
            pi in proptest::collection::vec(-10f64..10.0, 3),
        ) {
            let f = random_fn(values);
            let g = Sum(&f, Additive { weights: pi });
            for rest in Portfolio::rests(3, 1, 3).unwrap() {
                let a = second_difference(&f, 1, 3, rest).unwrap();
                let b = second_difference(&g, 1, 3, rest).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn negation_flips_modularity(values in proptest::collection::vec(-5f64..5.0, 8)) {
            let f = random_fn(values);
            let v = classify_modularity(&f, 1e-9).unwrap().verdict;
            let w = classify_modularity(&Negated(&f), 1e-9).unwrap().verdict;
            let expected = match v {
                Modularity::Supermodular => Modularity::Submodular,
                Modularity::Submodular => Modularity::Supermodular,
                other => other,
            };
            prop_assert_eq!(w, expected);
        }
    }
}
