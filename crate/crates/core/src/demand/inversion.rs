use super::{one_stop_surplus, DemandModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::reduced_form::ShoppingCostCdf;
use crate::roots::brent;
use crate::scalar::{c, Real};

const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 40;

fn residual_target<T: Real>() -> T {
    c::<T>(1e-13).max(T::epsilon() * c(64.0))
}

fn sup_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn residual<T: Real>(model: &DemandModel<T>, q: &[T], p: &[T]) -> Option<Vec<T>> {
    let r: Vec<T> = model.inverse_demand(q).ok()?.iter().zip(p).map(|(&a, &b)| a - b).collect();
    r.iter().all(|x| x.is_finite()).then_some(r)
}

/// Damped Newton on `P(q) = p`.
pub(crate) fn newton<T: Real>(model: &DemandModel<T>, p: &[T], mut q: Vec<T>) -> Result<Vec<T>> {
    let target = residual_target::<T>();
    let mut r = residual(model, &q, p)
        .ok_or_else(|| Error::OutOfDomain("inverse demand undefined at the starting point".into()))?;
    let mut norm = sup_norm(&r);
    for _ in 0..MAX_ITER {
        if norm <= target {
            return Ok(q);
        }
        let jac = Matrix::from_rows(&model.inverse_jacobian(&q)?)?;
        let step = jac.solve(&r)?;
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<T> = q.iter().zip(&step).map(|(&x, &s)| x - t * s).collect();
            if let Some(rt) = residual(model, &trial, p) {
                let nt = sup_norm(&rt);
                if nt < norm {
                    q = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            t = t * c(0.5);
        }
        if !accepted {
            break;
        }
    }
    if norm <= c(1e-8) {
        Ok(q)
    } else {
        Err(Error::InversionFailed { residual: norm.as_f64() })
    }
}

/// Inverse of the one-stop demand system.
///
/// With `w = 1/G(V)` the sub-quantities are `q_i = Q_i·w`, so
/// `V = w²·Σ Q_i²/(2β_i)` and `w` solves `w·G(w²K) = 1` on `w ≥ 1`.
pub(crate) fn one_stop_inverse<T: Real>(
    alpha: &[T],
    beta: &[T],
    cdf: &ShoppingCostCdf<T>,
    quantities: &[T],
) -> Result<Vec<T>> {
    let one = T::one();
    if quantities.iter().any(|&x| x < T::zero()) {
        return Err(Error::OutOfDomain("one-stop quantities must be nonnegative".into()));
    }
    let k = one_stop_surplus(beta, quantities);
    let h = |w: T| w * cdf.eval(w * w * k) - one;
    let w = if k == T::zero() || h(one) >= T::zero() {
        one
    } else {
        let mut hi = c::<T>(2.0);
        let mut tries = 0;
        while h(hi) < T::zero() {
            hi = hi * c(2.0);
            tries += 1;
            if tries > 200 {
                return Err(Error::OutOfDomain("quantities exceed what the shopping-cost distribution can serve".into()));
            }
        }
        brent(h, one, hi, T::epsilon() * c(4.0), 200)?
    };
    Ok(quantities
        .iter()
        .zip(alpha)
        .zip(beta)
        .map(|((&qi, &a), &b)| (a - qi * w) / b)
        .collect())
}
