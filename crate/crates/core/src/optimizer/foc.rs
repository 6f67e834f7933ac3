//! Scalar first-order conditions of the sqrt-spillover family at `b = 0`.

use crate::error::{Error, Result};
use crate::roots::all_roots;
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FocVariant {
    /// Products 1, 2 and 3 carried; symmetric `q₁ = q₂ = q`.
    TwoPlusThree,
    /// One of products 1, 2 carried with product 3.
    OnePlusThree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocSolution<T> {
    /// `q₁ = q₂` for `TwoPlusThree`, `q_i` for `OnePlusThree`.
    pub q: T,
    pub q3: T,
    pub value: T,
    /// Every positive root found, in increasing order.
    pub roots: Vec<T>,
}

/// Solves the reduced FOC of the sqrt-spillover family (`b = 0`, no costs),
/// with `q₃ = (1 + γ√(kq))/2` substituted in (`k = 2` or `1`):
/// `1 − 2q + γ²/4 + γ√k/(4k√q) = 0`, profit `kq(1−q) + q₃²`.
pub fn solve_sqrt_spillover_foc<T: Real>(gamma: T, variant: FocVariant) -> Result<FocSolution<T>> {
    let half = c::<T>(0.5);
    if gamma == T::zero() {
        let k = kfactor::<T>(variant);
        return Ok(FocSolution { q: half, q3: half, value: k * c(0.25) + c(0.25), roots: vec![half] });
    }
    let k = kfactor::<T>(variant);
    let (one, two, four) = (T::one(), c::<T>(2.0), c::<T>(4.0));
    let foc = |q: T| one - two * q + gamma * gamma / four + gamma * k.sqrt() / (four * k * q.sqrt());
    let q3_of = |q: T| (one + gamma * (k * q).sqrt()) * half;
    let value = |q: T| {
        let q3 = q3_of(q);
        k * q * (one - q) + q3 * q3
    };
    let eps = c::<T>(1e-9);
    let roots = all_roots(foc, eps, two, 4000, T::epsilon() * c(16.0));
    let roots: Vec<T> = roots.into_iter().filter(|&q| q > T::zero() && q3_of(q) >= T::zero()).collect();
    let best = roots
        .iter()
        .copied()
        .max_by(|a, b| value(*a).partial_cmp(&value(*b)).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or(Error::NoRoot)?;
    Ok(FocSolution { q: best, q3: q3_of(best), value: value(best), roots })
}

fn kfactor<T: Real>(v: FocVariant) -> T {
    match v {
        FocVariant::TwoPlusThree => c(2.0),
        FocVariant::OnePlusThree => T::one(),
    }
}
