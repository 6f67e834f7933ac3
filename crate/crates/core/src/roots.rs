//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
pub fn brent<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, xtol: T, max_iter: usize) -> Result<T> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoRoot);
    }
    let two = c::<T>(2.0);
    let (mut cc, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            cc = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = cc;
            cc = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + xtol / two;
        let m = (cc - b) / two;
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == cc {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (c::<T>(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol { b + d } else if m > T::zero() { b + tol } else { b - tol };
        fb = f(b);
    }
    Ok(b)
}

/// Every root of `f` on `[lo, hi]` found by scanning `segments` equal
/// subintervals for sign changes and refining each with [`brent`].
pub fn all_roots<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, segments: usize, xtol: T) -> Vec<T> {
    let step = (hi - lo) / T::from_count(segments as u64);
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..=segments {
        let x1 = if k == segments { hi } else { lo + step * T::from_count(k as u64) };
        let f1 = f(x1);
        if f0 == T::zero() {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != T::zero() && !f0.is_nan() && !f1.is_nan() {
            if let Ok(r) = brent(&mut f, x0, x1, xtol, 200) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == T::zero() {
        roots.push(x0);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_sqrt2() {
        let r = brent(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        assert_eq!(brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 50), Err(Error::NoRoot));
    }

    #[test]
    fn scan_finds_every_root() {
        let r = all_roots(|x: f64| (x - 0.2) * (x - 0.5) * (x - 1.7), 0.0, 2.0, 400, 1e-14);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([0.2, 0.5, 1.7]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_f32() {
        let r = brent(|x: f32| x.cos() - x, 0.0, 1.0, 1e-7, 100).unwrap();
        assert!((r - 0.739_085_1).abs() < 1e-5);
    }
}
