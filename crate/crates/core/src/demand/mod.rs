//! Parametric demand systems for the quantity-setting retailer.
//!
//! Every family exposes demand `D(p)`, inverse demand `P(q)` and both
//! Jacobians. Orientation is row = product, column = argument, so
//! `demand_jacobian(p)[i][j] = ∂D_i/∂p_j` and
//! `inverse_jacobian(q)[i][j] = ∂P_i/∂q_j`.

mod analysis;
mod inversion;

pub use analysis::{
    gross_relation, inverse_modularity, CrossPartialWitness, EvaluationRegion, GrossPair, GrossRelation,
    GrossReport, InverseModularity, InverseModularityReport, Space,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::reduced_form::ShoppingCostCdf;
use crate::scalar::{c, fd_step, Real};

/// Inverse demand supplied by the caller.
pub type InverseDemandFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;

#[derive(Clone)]
pub enum DemandFamily<T> {
    /// `P(q) = a − B·q`.
    Linear { a: Vec<T>, slopes: Vec<Vec<T>> },
    /// Three products; with `u = 1 − p`:
    /// `D₁ = u₁ + b(u₂ + u₃)`, `D₂ = u₂ + b(u₁ + u₃)`, `D₃ = u₃ + γ√(u₁ + u₂)`.
    SqrtSpillover { b: T, gamma: T },
    /// Three products, given by inverse demand:
    /// `P₁ = 1 − q₁ + b·ln(1+q₂) + αq₃`, `P₂ = 1 − q₂ + b·ln(1+q₁) + αq₃`,
    /// `P₃ = 1 − q₃ + γ(q₁ + q₂)`.
    LogSpillover { b: T, gamma: T, alpha: T },
    /// One-stop shopping with elastic per-product demand
    /// `D_i(p) = q_i(p_i)·G(Σ_j v_j(p_j))`, `q_i = max(α_i − β_i p_i, 0)` and
    /// `v_i = q_i²/(2β_i)` the consumer surplus of product `i`.
    OneStop { alpha: Vec<T>, beta: Vec<T>, cdf: ShoppingCostCdf<T> },
    /// Arbitrary inverse demand; derivatives by finite differences.
    Custom { n: usize, inverse: InverseDemandFn<T> },
}

impl<T: fmt::Debug> fmt::Debug for DemandFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { a, slopes } => f.debug_struct("Linear").field("a", a).field("slopes", slopes).finish(),
            Self::SqrtSpillover { b, gamma } => {
                f.debug_struct("SqrtSpillover").field("b", b).field("gamma", gamma).finish()
            }
            Self::LogSpillover { b, gamma, alpha } => f
                .debug_struct("LogSpillover")
                .field("b", b)
                .field("gamma", gamma)
                .field("alpha", alpha)
                .finish(),
            Self::OneStop { alpha, beta, cdf } => f
                .debug_struct("OneStop")
                .field("alpha", alpha)
                .field("beta", beta)
                .field("cdf", cdf)
                .finish(),
            Self::Custom { n, .. } => f.debug_struct("Custom").field("n", n).finish_non_exhaustive(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemandModel<T> {
    family: DemandFamily<T>,
    costs: Vec<T>,
}

impl<T: Real> DemandModel<T> {
    pub fn new(family: DemandFamily<T>, costs: Vec<T>) -> Result<Self> {
        let n = match &family {
            DemandFamily::Linear { a, slopes } => {
                if slopes.len() != a.len() {
                    return Err(Error::DimensionMismatch { expected: a.len(), got: slopes.len() });
                }
                for (i, row) in slopes.iter().enumerate() {
                    if row.len() != a.len() {
                        return Err(Error::DimensionMismatch { expected: a.len(), got: row.len() });
                    }
                    if !(row[i] > T::zero()) {
                        return Err(Error::InvalidParameter("linear slopes need a positive diagonal".into()));
                    }
                }
                a.len()
            }
            DemandFamily::SqrtSpillover { b, .. } => {
                if !(b.abs() < T::one()) {
                    return Err(Error::InvalidParameter("sqrt spillover needs |b| < 1".into()));
                }
                3
            }
            DemandFamily::LogSpillover { b, .. } => {
                if !(b.abs() < T::one()) {
                    return Err(Error::InvalidParameter("log spillover needs |b| < 1".into()));
                }
                3
            }
            DemandFamily::OneStop { alpha, beta, cdf } => {
                if alpha.len() != beta.len() {
                    return Err(Error::DimensionMismatch { expected: alpha.len(), got: beta.len() });
                }
                if alpha.iter().chain(beta).any(|&x| !(x > T::zero())) {
                    return Err(Error::InvalidParameter("one-stop sub-demands need α, β > 0".into()));
                }
                cdf.validate()?;
                alpha.len()
            }
            DemandFamily::Custom { n, .. } => *n,
        };
        if n == 0 || n > 24 {
            return Err(Error::InvalidParameter(format!("unsupported product count {n}")));
        }
        if costs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: costs.len() });
        }
        if costs.iter().any(|&x| x < T::zero() || !x.is_finite()) {
            return Err(Error::InvalidParameter("costs must be finite and nonnegative".into()));
        }
        Ok(Self { family, costs })
    }

    pub fn linear(a: Vec<T>, slopes: Vec<Vec<T>>, costs: Vec<T>) -> Result<Self> {
        Self::new(DemandFamily::Linear { a, slopes }, costs)
    }

    pub fn sqrt_spillover(b: T, gamma: T) -> Result<Self> {
        Self::new(DemandFamily::SqrtSpillover { b, gamma }, vec![T::zero(); 3])
    }

    pub fn log_spillover(b: T, gamma: T, alpha: T) -> Result<Self> {
        Self::new(DemandFamily::LogSpillover { b, gamma, alpha }, vec![T::zero(); 3])
    }

    pub fn one_stop(alpha: Vec<T>, beta: Vec<T>, cdf: ShoppingCostCdf<T>) -> Result<Self> {
        let n = alpha.len();
        Self::new(DemandFamily::OneStop { alpha, beta, cdf }, vec![T::zero(); n])
    }

    pub fn custom<F>(n: usize, inverse: F) -> Result<Self>
    where
        F: Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    {
        Self::new(DemandFamily::Custom { n, inverse: Arc::new(inverse) }, vec![T::zero(); n])
    }

    pub fn with_costs(self, costs: Vec<T>) -> Result<Self> {
        Self::new(self.family, costs)
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    pub fn family(&self) -> &DemandFamily<T> {
        &self.family
    }

    pub fn costs(&self) -> &[T] {
        &self.costs
    }

    fn check_len(&self, z: &[T]) -> Result<()> {
        if z.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: z.len() });
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfDomain("non-finite argument".into()));
        }
        Ok(())
    }

    pub fn demand(&self, p: &[T]) -> Result<Vec<T>> {
        self.check_len(p)?;
        let one = T::one();
        match &self.family {
            DemandFamily::Linear { a, slopes } => {
                let rhs: Vec<T> = a.iter().zip(p).map(|(&ai, &pi)| ai - pi).collect();
                Matrix::from_rows(slopes)?.solve(&rhs)
            }
            DemandFamily::SqrtSpillover { b, gamma } => {
                let u: Vec<T> = p.iter().map(|&x| one - x).collect();
                let s = u[0] + u[1];
                if s < T::zero() {
                    return Err(Error::OutOfDomain(format!(
                        "negative radicand 2 − p₁ − p₂ = {:e}",
                        s.as_f64()
                    )));
                }
                Ok(vec![
                    u[0] + *b * (u[1] + u[2]),
                    u[1] + *b * (u[0] + u[2]),
                    u[2] + *gamma * s.sqrt(),
                ])
            }
            DemandFamily::OneStop { alpha, beta, cdf } => {
                let q = one_stop_sub(alpha, beta, p);
                let g = cdf.eval(one_stop_surplus(beta, &q));
                Ok(q.into_iter().map(|qi| qi * g).collect())
            }
            DemandFamily::LogSpillover { .. } | DemandFamily::Custom { .. } => {
                let guess: Vec<T> = match &self.family {
                    DemandFamily::LogSpillover { .. } => p.iter().map(|&x| (one - x).max(T::zero())).collect(),
                    _ => vec![c(0.5); self.n()],
                };
                inversion::newton(self, p, guess)
            }
        }
    }

    pub fn inverse_demand(&self, q: &[T]) -> Result<Vec<T>> {
        self.check_len(q)?;
        let one = T::one();
        match &self.family {
            DemandFamily::Linear { a, slopes } => {
                let bq = Matrix::from_rows(slopes)?.mul_vec(q);
                Ok(a.iter().zip(bq).map(|(&ai, x)| ai - x).collect())
            }
            DemandFamily::SqrtSpillover { b, gamma } => {
                let u = sqrt_spillover_utilities(*b, *gamma, q).0;
                Ok(u.iter().map(|&x| one - x).collect())
            }
            DemandFamily::LogSpillover { b, gamma, alpha } => {
                if q[0] <= -one || q[1] <= -one {
                    return Err(Error::OutOfDomain("log spillover needs q₁, q₂ > −1".into()));
                }
                Ok(vec![
                    one - q[0] + *b * q[1].ln_1p() + *alpha * q[2],
                    one - q[1] + *b * q[0].ln_1p() + *alpha * q[2],
                    one - q[2] + *gamma * (q[0] + q[1]),
                ])
            }
            DemandFamily::OneStop { alpha, beta, cdf } => inversion::one_stop_inverse(alpha, beta, cdf, q),
            DemandFamily::Custom { inverse, n } => {
                let p = inverse(q)?;
                if p.len() != *n {
                    return Err(Error::DimensionMismatch { expected: *n, got: p.len() });
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(Error::OutOfDomain("custom inverse demand is not finite".into()));
                }
                Ok(p)
            }
        }
    }

    /// `∂D_i/∂p_j`.
    pub fn demand_jacobian(&self, p: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_len(p)?;
        let (zero, one) = (T::zero(), T::one());
        match &self.family {
            DemandFamily::Linear { slopes, .. } => Ok(Matrix::from_rows(slopes)?.inverse()?.neg().rows()),
            DemandFamily::SqrtSpillover { b, gamma } => {
                let s = (one - p[0]) + (one - p[1]);
                if !(s > zero) {
                    return Err(Error::OutOfDomain("∂D₃/∂p is unbounded at p₁ + p₂ ≥ 2".into()));
                }
                let d3 = -c::<T>(0.5) * *gamma / s.sqrt();
                Ok(vec![vec![-one, -*b, -*b], vec![-*b, -one, -*b], vec![d3, d3, -one]])
            }
            DemandFamily::LogSpillover { .. } => {
                let q = self.demand(p)?;
                log_spillover_demand_jacobian(self, &q)
            }
            DemandFamily::OneStop { alpha, beta, cdf } => {
                let q = one_stop_sub(alpha, beta, p);
                let v = one_stop_surplus(beta, &q);
                let (g, dg) = (cdf.eval(v), cdf.density(v));
                let n = self.n();
                let mut jac = vec![vec![zero; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        jac[i][j] = -q[i] * q[j] * dg;
                    }
                    if q[i] > zero {
                        jac[i][i] = jac[i][i] - beta[i] * g;
                    }
                }
                Ok(jac)
            }
            DemandFamily::Custom { .. } => Ok(Matrix::from_rows(&self.inverse_jacobian(&self.demand(p)?)?)?
                .inverse()?
                .rows()),
        }
    }

    /// `∂P_i/∂q_j`.
    pub fn inverse_jacobian(&self, q: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_len(q)?;
        let (zero, one) = (T::zero(), T::one());
        match &self.family {
            DemandFamily::Linear { slopes, .. } => Ok(Matrix::from_rows(slopes)?.neg().rows()),
            DemandFamily::SqrtSpillover { b, gamma } => {
                let du = sqrt_spillover_utilities(*b, *gamma, q).1;
                Ok(du.iter().map(|row| row.iter().map(|&x| -x).collect()).collect())
            }
            DemandFamily::LogSpillover { b, gamma, alpha } => Ok(vec![
                vec![-one, *b / (one + q[1]), *alpha],
                vec![*b / (one + q[0]), -one, *alpha],
                vec![*gamma, *gamma, -one],
            ]),
            DemandFamily::OneStop { .. } => {
                let p = self.inverse_demand(q)?;
                Ok(Matrix::from_rows(&self.demand_jacobian(&p)?)?.inverse()?.rows())
            }
            DemandFamily::Custom { .. } => {
                let n = self.n();
                let mut jac = vec![vec![zero; n]; n];
                for j in 0..n {
                    let h = fd_step(q[j], 1e-5);
                    let (mut hi, mut lo) = (q.to_vec(), q.to_vec());
                    hi[j] = hi[j] + h;
                    lo[j] = lo[j] - h;
                    let (ph, pl) = (self.inverse_demand(&hi)?, self.inverse_demand(&lo)?);
                    for i in 0..n {
                        jac[i][j] = (ph[i] - pl[i]) / (h + h);
                    }
                }
                Ok(jac)
            }
        }
    }

    /// `∂²P_m/∂q_i∂q_j` for `i ≠ j` (0-based indices).
    pub fn inverse_cross_partial(&self, q: &[T], m: usize, i: usize, j: usize) -> Result<T> {
        self.check_len(q)?;
        let n = self.n();
        if m >= n || i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: m.max(i).max(j) + 1, n });
        }
        if i == j {
            return Err(Error::SameIndex(i + 1));
        }
        match &self.family {
            DemandFamily::Linear { .. } | DemandFamily::LogSpillover { .. } => Ok(T::zero()),
            DemandFamily::SqrtSpillover { b, gamma } if *b == T::zero() => {
                if m == 2 && i < 2 && j < 2 {
                    let s = q[0] + q[1];
                    if !(s > T::zero()) {
                        return Err(Error::OutOfDomain("√(q₁ + q₂) is not differentiable at 0".into()));
                    }
                    Ok(-*gamma / (c::<T>(4.0) * s * s.sqrt()))
                } else {
                    Ok(T::zero())
                }
            }
            DemandFamily::SqrtSpillover { .. } | DemandFamily::OneStop { .. } => {
                // Central difference of the analytic Jacobian.
                let h = fd_step(q[j], 1e-5);
                let (mut hi, mut lo) = (q.to_vec(), q.to_vec());
                hi[j] = hi[j] + h;
                lo[j] = lo[j] - h;
                let dh = self.inverse_jacobian(&hi)?[m][i];
                let dl = self.inverse_jacobian(&lo)?[m][i];
                Ok((dh - dl) / (h + h))
            }
            DemandFamily::Custom { .. } => {
                let hi_ = fd_step(q[i], 1e-4);
                let hj = fd_step(q[j], 1e-4);
                let at = |si: T, sj: T| -> Result<T> {
                    let mut z = q.to_vec();
                    z[i] = z[i] + si;
                    z[j] = z[j] + sj;
                    Ok(self.inverse_demand(&z)?[m])
                };
                let v = (at(hi_, hj)? - at(hi_, -hj)?) - (at(-hi_, hj)? - at(-hi_, -hj)?);
                Ok(v / (c::<T>(4.0) * hi_ * hj))
            }
        }
    }

    /// `R(q) = Σ_i (P_i(q) − c_i)·q_i`.
    pub fn revenue(&self, q: &[T]) -> Result<T> {
        let p = self.inverse_demand(q)?;
        Ok(p.iter()
            .zip(&self.costs)
            .zip(q)
            .filter(|(_, &qi)| qi != T::zero())
            .fold(T::zero(), |acc, ((&pi, &ci), &qi)| acc + (pi - ci) * qi))
    }

    /// `∂R/∂q_k = P_k − c_k + Σ_i q_i·∂P_i/∂q_k`. Products with `q_i = 0`
    /// drop out of the sum, so singular columns of unused products never
    /// contaminate the result.
    pub fn revenue_gradient(&self, q: &[T]) -> Result<Vec<T>> {
        let p = self.inverse_demand(q)?;
        let jac = self.inverse_jacobian(q)?;
        let n = self.n();
        let mut grad = Vec::with_capacity(n);
        for k in 0..n {
            let mut g = p[k] - self.costs[k];
            for i in 0..n {
                if q[i] != T::zero() {
                    g = g + q[i] * jac[i][k];
                }
            }
            grad.push(g);
        }
        Ok(grad)
    }

    /// A per-product quantity scale: the quantity at which own inverse demand
    /// reaches zero with the other products absent (an upper envelope for
    /// the spillover families).
    pub fn choke_quantities(&self) -> Vec<T> {
        let one = T::one();
        match &self.family {
            DemandFamily::Linear { a, slopes } => a
                .iter()
                .enumerate()
                .map(|(i, &ai)| if ai > T::zero() { ai / slopes[i][i] } else { one })
                .collect(),
            DemandFamily::SqrtSpillover { b, gamma } => {
                let side = one + c::<T>(2.0) * b.abs();
                vec![side, side, side + gamma.abs() * c::<T>(2.0).sqrt()]
            }
            DemandFamily::LogSpillover { b, gamma, alpha } => {
                let s = one + b.abs() + alpha.abs();
                vec![s, s, one + c::<T>(2.0) * gamma.abs() * s]
            }
            DemandFamily::OneStop { alpha, .. } => alpha.clone(),
            DemandFamily::Custom { n, .. } => vec![one; *n],
        }
    }

    /// Default grid for the gross-relation scan.
    pub fn default_region(&self) -> EvaluationRegion<T> {
        match &self.family {
            DemandFamily::SqrtSpillover { .. } => EvaluationRegion::cube(Space::Price, 3, c(0.05), c(0.95)),
            _ => self.default_quantity_region(),
        }
    }

    /// Default grid for inverse-demand checks.
    pub fn default_quantity_region(&self) -> EvaluationRegion<T> {
        EvaluationRegion::cube(Space::Quantity, self.n(), c(0.01), c(0.99))
    }
}

pub(crate) fn one_stop_sub<T: Real>(alpha: &[T], beta: &[T], p: &[T]) -> Vec<T> {
    alpha.iter().zip(beta).zip(p).map(|((&a, &b), &x)| (a - b * x).max(T::zero())).collect()
}

pub(crate) fn one_stop_surplus<T: Real>(beta: &[T], q: &[T]) -> T {
    q.iter().zip(beta).fold(T::zero(), |acc, (&qi, &bi)| acc + qi * qi / (bi + bi))
}

/// Utilities `u = 1 − P(q)` of the sqrt-spillover family and `∂u/∂q`.
///
/// With `Q = q₁ + q₂` and `r = √(u₁ + u₂)`, inverting the demand system
/// gives `(1+b)r² − 2bγr = Q − 2bq₃`, solved by the larger root. Off the
/// range where that has a nonnegative root the radicand is taken as zero,
/// i.e. we invert the continuous extension `√max(·, 0)` of `D₃`.
fn sqrt_spillover_utilities<T: Real>(b: T, gamma: T, q: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
    let (zero, one, two) = (T::zero(), T::one(), c::<T>(2.0));
    let cc = (q[0] + q[1]) - two * b * q[2];
    let d = (q[0] - q[1]) / (one - b);
    let half = c::<T>(0.5);
    let jd = half / (one - b);
    if cc >= zero {
        let disc = b * b * gamma * gamma + (one + b) * cc;
        let root = disc.sqrt();
        let r = (b * gamma + root) / (one + b);
        let s = r * r;
        let u = vec![(s + d) * half, (s - d) * half, q[2] - gamma * r];
        let rc = half / root;
        // b-multiplied terms are exactly zero at b = 0, even where rc is infinite.
        let bterm = |x: T| if b == zero { zero } else { b * x };
        let du = vec![
            vec![r * rc + jd, r * rc - jd, -two * bterm(r * rc)],
            vec![r * rc - jd, r * rc + jd, -two * bterm(r * rc)],
            vec![-gamma * rc, -gamma * rc, one + two * gamma * bterm(rc)],
        ];
        (u, du)
    } else {
        let s = cc / (one + b);
        let ds = one / (one + b);
        let u = vec![(s + d) * half, (s - d) * half, q[2]];
        let du = vec![
            vec![ds * half + jd, ds * half - jd, -b * ds],
            vec![ds * half - jd, ds * half + jd, -b * ds],
            vec![zero, zero, one],
        ];
        (u, du)
    }
}

/// Cross demand derivatives of the log-spillover family from the implicit
/// function theorem, at the quantities `q = D(p)`:
/// `∂D_i/∂p_j = −(1+q_i)(b + αγ(1+q_j))/φ` (`i, j ∈ {1,2}`),
/// `∂D_i/∂p₃ = −α(1+q_i)(1+q_j+b)/φ`, `∂D₃/∂p_i = −γ(1+q_j)(1+q_i+b)/φ`,
/// with `φ = 1 − b² + q₁ + q₂ + q₁q₂ − αγ(2(1+q₁)(1+q₂) + b(2+q₁+q₂))`.
/// Own derivatives come from inverting `∂P/∂q`.
pub fn log_spillover_demand_jacobian<T: Real>(model: &DemandModel<T>, q: &[T]) -> Result<Vec<Vec<T>>> {
    let DemandFamily::LogSpillover { b, gamma, alpha } = model.family else {
        return Err(Error::InvalidParameter("not a log-spillover model".into()));
    };
    model.check_len(q)?;
    let (one, two) = (T::one(), c::<T>(2.0));
    let (e1, e2) = (one + q[0], one + q[1]);
    let ag = alpha * gamma;
    let phi = one - b * b + q[0] + q[1] + q[0] * q[1] - ag * (two * e1 * e2 + b * (two + q[0] + q[1]));
    if phi == T::zero() {
        return Err(Error::OutOfDomain("singular inverse-demand Jacobian".into()));
    }
    let mut jac = Matrix::from_rows(&model.inverse_jacobian(q)?)?.inverse()?.rows();
    let e = [e1, e2];
    for (i, j) in [(0, 1), (1, 0)] {
        jac[i][j] = -e[i] * (b + ag * e[j]) / phi;
        jac[i][2] = -alpha * e[i] * (e[j] + b) / phi;
        jac[2][i] = -gamma * e[j] * (e[i] + b) / phi;
    }
    Ok(jac)
}

#[cfg(test)]
mod tests;
