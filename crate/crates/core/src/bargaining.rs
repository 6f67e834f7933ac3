//! Nash-in-Nash and Shapley fees between the intermediary and its suppliers.
//!
//! Wholesale prices sit at marginal cost, so each supplier firm's payoff is
//! its lump-sum fee. Under Nash-in-Nash the fee of firm `F` is
//! `(1 − β)[Π(full) − Π(full ∖ F)]`; merging two singleton suppliers turns
//! the sum of two such increments into one joint increment, and the change
//! is exactly `−(1 − β)` times the pair's second difference at the full rest.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::portfolio::{second_difference, Portfolio, RelationKind, SetFunction};
use crate::scalar::Scalar;

/// Largest player count (firms plus the retailer) for exact Shapley values.
pub const MAX_SHAPLEY_PLAYERS: usize = 12;

/// Partition of the suppliers `1..=n` into negotiating firms.
///
/// Firms are stored with sorted members and ordered by their smallest member,
/// so two structures describing the same partition compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OwnershipStructure {
    n: usize,
    firms: Vec<Vec<usize>>,
}

impl OwnershipStructure {
    pub fn new(n: usize, firms: Vec<Vec<usize>>) -> Result<Self> {
        Portfolio::empty(n)?;
        let mut seen = vec![false; n];
        let mut firms = firms;
        for firm in &mut firms {
            if firm.is_empty() {
                return Err(Error::InvalidParameter("firms must be nonempty".into()));
            }
            firm.sort_unstable();
            for &i in firm.iter() {
                if i == 0 || i > n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                if seen[i - 1] {
                    return Err(Error::InvalidParameter(format!("supplier {i} belongs to two firms")));
                }
                seen[i - 1] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!("supplier {} has no firm", i + 1)));
        }
        firms.sort_unstable_by_key(|f| f[0]);
        Ok(Self { n, firms })
    }

    /// Every supplier negotiates alone.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).map(|i| vec![i]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn firms(&self) -> &[Vec<usize>] {
        &self.firms
    }

    /// Index (into [`firms`](Self::firms)) of the firm owning supplier `i`.
    pub fn firm_of(&self, i: usize) -> Result<usize> {
        self.firms
            .iter()
            .position(|f| f.contains(&i))
            .ok_or(Error::IndexOutOfRange { index: i, n: self.n })
    }

    /// Products of firm `k` as a portfolio.
    pub fn block(&self, k: usize) -> Result<Portfolio> {
        let firm = self
            .firms
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("no firm with index {k}")))?;
        Portfolio::from_members(self.n, firm)
    }

    /// Structure after the firms owning `i` and `j` merge.
    pub fn merge(&self, i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::SameIndex(i));
        }
        let (a, b) = (self.firm_of(i)?, self.firm_of(j)?);
        if a == b {
            return Err(Error::InvalidParameter(format!("suppliers {i} and {j} already share a firm")));
        }
        let mut firms = self.firms.clone();
        let absorbed = firms[b].clone();
        firms[a].extend(absorbed);
        firms.remove(b);
        Self::new(self.n, firms)
    }

    pub fn is_singleton(&self, i: usize) -> bool {
        self.firm_of(i).map(|k| self.firms[k].len() == 1).unwrap_or(false)
    }
}

impl fmt::Display for OwnershipStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .firms
            .iter()
            .map(|g| format!("{{{}}}", g.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Retailer weight, ownership and the profit oracle the parties bargain over.
#[derive(Debug, Clone)]
pub struct BargainingEnv<T, F> {
    beta: T,
    ownership: OwnershipStructure,
    oracle: F,
}

impl<T: Scalar, F: SetFunction<T>> BargainingEnv<T, F> {
    pub fn new(beta: T, ownership: OwnershipStructure, oracle: F) -> Result<Self> {
        if !(beta > T::zero() && beta < T::one()) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {beta:?}")));
        }
        if oracle.n() != ownership.n() {
            return Err(Error::DimensionMismatch { expected: ownership.n(), got: oracle.n() });
        }
        Ok(Self { beta, ownership, oracle })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn ownership(&self) -> &OwnershipStructure {
        &self.ownership
    }

    pub fn oracle(&self) -> &F {
        &self.oracle
    }

    /// Same bargaining problem under another ownership structure.
    pub fn with_ownership(&self, ownership: OwnershipStructure) -> Result<BargainingEnv<T, &F>> {
        BargainingEnv::new(self.beta, ownership, &self.oracle)
    }

    /// Same problem with another retailer weight.
    pub fn with_beta(&self, beta: T) -> Result<BargainingEnv<T, &F>> {
        BargainingEnv::new(beta, self.ownership.clone(), &self.oracle)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule<T> {
    pub firms: Vec<Vec<usize>>,
    /// Total fee of each firm, aligned with `firms`.
    pub fees: Vec<T>,
    /// Fee per supplier `1..=n` (index `i − 1`); `None` inside multi-product firms.
    pub supplier_fees: Vec<Option<T>>,
    pub retailer: T,
    /// Oracle value at the full portfolio.
    pub surplus: T,
}

impl<T: Scalar> FeeSchedule<T> {
    fn assemble(ownership: &OwnershipStructure, fees: Vec<T>, retailer: T, surplus: T) -> Self {
        let mut supplier_fees = vec![None; ownership.n()];
        for (firm, &fee) in ownership.firms().iter().zip(&fees) {
            if let [i] = firm.as_slice() {
                supplier_fees[i - 1] = Some(fee);
            }
        }
        Self { firms: ownership.firms().to_vec(), fees, supplier_fees, retailer, surplus }
    }

    pub fn total(&self) -> T {
        self.fees.iter().fold(T::zero(), |acc, &f| acc + f)
    }

    /// Fee of the firm whose members are exactly `members` (any order).
    pub fn fee_of(&self, members: &[usize]) -> Option<T> {
        let mut key = members.to_vec();
        key.sort_unstable();
        self.firms.iter().position(|f| *f == key).map(|k| self.fees[k])
    }
}

/// Nash-in-Nash fees: firm `F` receives `(1 − β)` of its incremental contribution
/// to the full portfolio. Fees can be negative.
pub fn nash_in_nash<T: Scalar, F: SetFunction<T>>(env: &BargainingEnv<T, F>) -> Result<FeeSchedule<T>> {
    let own = env.ownership();
    let full = Portfolio::full(own.n())?;
    let surplus = env.oracle().eval(full)?;
    let share = T::one() - env.beta();
    let fees = (0..own.firms().len())
        .into_par_iter()
        .map(|k| {
            let without = env.oracle().eval(full.minus(own.block(k)?))?;
            Ok(share * (surplus - without))
        })
        .collect::<Result<Vec<T>>>()?;
    let paid = fees.iter().fold(T::zero(), |acc, &f| acc + f);
    Ok(FeeSchedule::assemble(own, fees, surplus - paid, surplus))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonMergingFee<T> {
    pub members: Vec<usize>,
    pub pre: T,
    pub post: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergerReport<T> {
    pub pair: (usize, usize),
    pub beta: T,
    pub pre: FeeSchedule<T>,
    pub post: FeeSchedule<T>,
    /// Fees of the merging suppliers before the merger, summed.
    pub t_pre: T,
    /// Fee of the merged firm.
    pub t_post: T,
    pub gap: T,
    /// Second difference of the oracle in the pair at the full rest.
    pub second_difference: T,
    pub relation: RelationKind,
    pub non_merging: Vec<NonMergingFee<T>>,
    /// `gap + (1 − β)·second_difference`; zero up to rounding.
    pub identity_residual: T,
    pub tolerance: T,
}

impl<T: Scalar> MergerReport<T> {
    pub fn identity_holds(&self) -> bool {
        self.identity_residual.abs() <= self.tolerance
    }

    pub fn non_merging_unchanged(&self) -> bool {
        self.non_merging.iter().all(|f| (f.pre - f.post).abs() <= self.tolerance)
    }

    /// Largest absolute change in a non-merging firm's fee.
    pub fn max_non_merging_change(&self) -> T {
        self.non_merging.iter().fold(T::zero(), |m, f| {
            let d = (f.pre - f.post).abs();
            if d > m { d } else { m }
        })
    }
}

/// Fees before and after the singleton suppliers `i` and `j` merge.
///
/// `tolerance` applies to the relation verdict and to the two consistency
/// checks carried in the report.
pub fn merger_report<T: Scalar, F: SetFunction<T>>(
    env: &BargainingEnv<T, F>,
    i: usize,
    j: usize,
    tolerance: T,
) -> Result<MergerReport<T>> {
    if tolerance < T::zero() {
        return Err(Error::InvalidParameter("tolerance must be nonnegative".into()));
    }
    let own = env.ownership();
    for k in [i, j] {
        if !own.is_singleton(k) {
            return Err(Error::InvalidParameter(format!(
                "supplier {k} must negotiate alone before the merger"
            )));
        }
    }
    let merged = own.merge(i, j)?;
    let pre = nash_in_nash(env)?;
    let post = nash_in_nash(&env.with_ownership(merged)?)?;
    let pick = |s: &FeeSchedule<T>, m: &[usize]| {
        s.fee_of(m).ok_or_else(|| Error::InvalidParameter(format!("no firm {m:?} in fee schedule")))
    };
    let t_pre = pick(&pre, &[i])? + pick(&pre, &[j])?;
    let t_post = pick(&post, &[i, j])?;
    let gap = t_post - t_pre;
    let full = Portfolio::full(own.n())?;
    let sd = second_difference(env.oracle(), i, j, full)?;
    let non_merging = own
        .firms()
        .iter()
        .filter(|f| !f.contains(&i) && !f.contains(&j))
        .map(|f| Ok(NonMergingFee { members: f.clone(), pre: pick(&pre, f)?, post: pick(&post, f)? }))
        .collect::<Result<Vec<_>>>()?;
    let beta = env.beta();
    Ok(MergerReport {
        pair: (i, j),
        beta,
        pre,
        post,
        t_pre,
        t_post,
        gap,
        second_difference: sd,
        relation: RelationKind::of_value(sd, tolerance),
        non_merging,
        identity_residual: gap + (T::one() - beta) * sd,
        tolerance,
    })
}

/// Shapley values of the game between the retailer and the supplier firms.
///
/// A coalition is worth the oracle at the union of its firms' products when
/// it contains the retailer and nothing otherwise. The firms' values are
/// their fees; the retailer keeps its own value.
pub fn shapley_fees<T: Scalar, F: SetFunction<T>>(env: &BargainingEnv<T, F>) -> Result<FeeSchedule<T>> {
    let own = env.ownership();
    let k = own.firms().len();
    if k + 1 > MAX_SHAPLEY_PLAYERS {
        return Err(Error::TooManyPlayers { players: k + 1 });
    }
    let blocks = (0..k).map(|f| own.block(f)).collect::<Result<Vec<_>>>()?;
    let empty = Portfolio::empty(own.n())?;
    // worth[mask] = value of the retailer together with the firms in `mask`.
    let worth = (0..1u32 << k)
        .into_par_iter()
        .map(|mask| {
            let x = (0..k).filter(|f| mask >> f & 1 == 1).fold(empty, |x, f| x.union(blocks[f]));
            env.oracle().eval(x)
        })
        .collect::<Result<Vec<T>>>()?;
    let m = k + 1;
    let fact: Vec<T> = (0..=m).scan(T::one(), |acc, n| {
        if n > 0 {
            *acc = *acc * T::from_count(n as u64);
        }
        Some(*acc)
    })
    .collect();
    // Weight of a coalition of size s that a player joins.
    let weight = |s: usize| fact[s] * fact[m - s - 1] / fact[m];
    let fees: Vec<T> = (0..k)
        .map(|f| {
            (0..1u32 << k)
                .filter(|mask| mask >> f & 1 == 0)
                .fold(T::zero(), |acc, mask| {
                    let s = mask.count_ones() as usize + 1;
                    acc + weight(s) * (worth[(mask | 1 << f) as usize] - worth[mask as usize])
                })
        })
        .collect();
    let retailer = (0..1u32 << k).fold(T::zero(), |acc, mask| {
        acc + weight(mask.count_ones() as usize) * worth[mask as usize]
    });
    let surplus = worth[(1usize << k) - 1];
    Ok(FeeSchedule::assemble(own, fees, retailer, surplus))
}

/// Shapley counterpart of the merger gap: merged firm's value minus the two
/// suppliers' values before the merger.
pub fn shapley_merger_gap<T: Scalar, F: SetFunction<T>>(
    env: &BargainingEnv<T, F>,
    i: usize,
    j: usize,
) -> Result<(FeeSchedule<T>, FeeSchedule<T>, T)> {
    let pre = shapley_fees(env)?;
    let post = shapley_fees(&env.with_ownership(env.ownership().merge(i, j)?)?)?;
    let before = [i, j].iter().try_fold(T::zero(), |acc, &s| {
        let f = env.ownership().firm_of(s)?;
        Ok::<T, Error>(acc + pre.fees[f])
    })?;
    let after = post.fees[post_firm(&post, i)?];
    Ok((pre, post, after - before))
}

fn post_firm<T>(s: &FeeSchedule<T>, i: usize) -> Result<usize> {
    s.firms.iter().position(|f| f.contains(&i)).ok_or(Error::IndexOutOfRange { index: i, n: s.supplier_fees.len() })
}
