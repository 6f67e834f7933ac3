//! Box-constrained BFGS minimiser with an active set and projected Armijo search.

use crate::error::Result;
use crate::scalar::{c, Real};

#[derive(Debug, Clone)]
pub(crate) struct Outcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub pg_norm: T,
    pub converged: bool,
    pub iterations: usize,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn clamp<T: Real>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// Infinity norm of `x − Proj(x − g)`.
pub(crate) fn projected_gradient_norm<T: Real>(x: &[T], g: &[T], lower: &[T], upper: &[T]) -> T {
    (0..x.len()).fold(T::zero(), |m, i| m.max((x[i] - clamp(x[i] - g[i], lower[i], upper[i])).abs()))
}

fn free_set<T: Real>(x: &[T], g: &[T], lower: &[T], upper: &[T]) -> Vec<usize> {
    (0..x.len())
        .filter(|&i| !((x[i] <= lower[i] && g[i] > T::zero()) || (x[i] >= upper[i] && g[i] < T::zero())))
        .collect()
}

/// Minimises `f` over `[lower, upper]`; `f` returns value and gradient.
pub(crate) fn minimize<T, F>(f: F, lower: &[T], upper: &[T], x0: &[T], tol: T, max_iter: usize) -> Result<Outcome<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<(T, Vec<T>)>,
{
    let n = x0.len();
    let mut x: Vec<T> = (0..n).map(|i| clamp(x0[i], lower[i], upper[i])).collect();
    let (mut fx, mut g) = f(&x)?;
    let mut pg = projected_gradient_norm(&x, &g, lower, upper);
    let mut free = free_set(&x, &g, lower, upper);
    let mut h = identity::<T>(n);
    let mut fresh = true;
    let noise = T::epsilon() * c(16.0);
    let mut iterations = 0;
    while iterations < max_iter {
        if pg <= tol {
            return Ok(Outcome { x, value: fx, pg_norm: pg, converged: true, iterations });
        }
        iterations += 1;
        let mut d = vec![T::zero(); n];
        for &i in &free {
            d[i] = -free.iter().fold(T::zero(), |acc, &j| acc + h[i][j] * g[j]);
        }
        if !(dot(&d, &g) < T::zero()) {
            h = identity(n);
            fresh = true;
            for &i in &free {
                d[i] = -g[i];
            }
        }
        let mut step = None;
        for attempt in 0..2 {
            let mut t = T::one();
            for _ in 0..60 {
                let xt: Vec<T> = (0..n).map(|i| clamp(x[i] + t * d[i], lower[i], upper[i])).collect();
                if let Ok((ft, gt)) = f(&xt) {
                    if ft.is_finite() && gt.iter().all(|v| v.is_finite()) {
                        let s: Vec<T> = (0..n).map(|i| xt[i] - x[i]).collect();
                        let armijo = ft <= fx + c::<T>(1e-4) * dot(&g, &s);
                        // Near the optimum the decrease drowns in rounding; fall
                        // back to accepting any step that shrinks the projected gradient.
                        let flat = (ft - fx).abs() <= noise * (T::one() + fx.abs())
                            && projected_gradient_norm(&xt, &gt, lower, upper) < pg;
                        if armijo || flat {
                            step = Some((xt, ft, gt, s));
                            break;
                        }
                    }
                }
                t = t * c(0.5);
            }
            if step.is_some() || attempt == 1 || fresh {
                break;
            }
            h = identity(n);
            fresh = true;
            for &i in &free {
                d[i] = -g[i];
            }
        }
        let Some((xn, fn_, gn, s)) = step else {
            break;
        };
        let y: Vec<T> = (0..n).map(|i| gn[i] - g[i]).collect();
        let new_free = free_set(&xn, &gn, lower, upper);
        if new_free != free {
            h = identity(n);
            fresh = true;
        } else {
            let (sf, yf): (Vec<T>, Vec<T>) = free.iter().map(|&i| (s[i], y[i])).unzip();
            let sy = dot(&sf, &yf);
            if sy > c::<T>(1e-12) * dot(&sf, &sf).sqrt() * dot(&yf, &yf).sqrt() && sy > T::zero() {
                if fresh {
                    let scale = sy / dot(&yf, &yf);
                    for &i in &free {
                        for &j in &free {
                            h[i][j] = if i == j { scale } else { T::zero() };
                        }
                    }
                    fresh = false;
                }
                bfgs_update(&mut h, &free, &sf, &yf, sy);
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
        free = new_free;
        pg = projected_gradient_norm(&x, &g, lower, upper);
    }
    let converged = pg <= tol;
    Ok(Outcome { x, value: fx, pg_norm: pg, converged, iterations })
}

fn identity<T: Real>(n: usize) -> Vec<Vec<T>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect()
}

/// Inverse-Hessian update restricted to the free coordinates.
fn bfgs_update<T: Real>(h: &mut [Vec<T>], free: &[usize], s: &[T], y: &[T], sy: T) {
    let k = free.len();
    let rho = T::one() / sy;
    let hy: Vec<T> = (0..k)
        .map(|a| (0..k).fold(T::zero(), |acc, b| acc + h[free[a]][free[b]] * y[b]))
        .collect();
    let yhy = dot(y, &hy);
    for a in 0..k {
        for b in 0..k {
            let (i, j) = (free[a], free[b]);
            h[i][j] = h[i][j] - rho * (hy[a] * s[b] + s[a] * hy[b]) + (rho * rho * yhy + rho) * s[a] * s[b];
        }
    }
}
