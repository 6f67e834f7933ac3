use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distribution G of the shopping cost ξ across consumers.
///
/// Every variant is nondecreasing with values in `[0, 1]` on `s ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShoppingCostCdf<T> {
    /// `clamp((s − lower)/(upper − lower), 0, 1)`.
    AffineClamped { lower: T, upper: T },
    /// `1 − e^(−rate·s)`.
    Exponential { rate: T },
    /// `clamp((s/scale)^exponent, 0, 1)`.
    Power { exponent: T, scale: T },
    /// Right-continuous steps: `G(s)` is the level of the last threshold `≤ s`,
    /// zero below the first threshold.
    Step(Vec<(T, T)>),
    /// Piecewise-linear interpolation through `(s, G(s))` breakpoints, held
    /// constant outside the first and last breakpoint.
    Table(Vec<(T, T)>),
}

impl<T: Real> ShoppingCostCdf<T> {
    /// `G ≡ 1` on `s ≥ 0`: every consumer visits.
    pub fn saturated() -> Self {
        Self::Step(vec![(T::zero(), T::one())])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("cdf: {m}")));
        match self {
            Self::AffineClamped { lower, upper } => {
                if !(lower < upper) {
                    return bad("affine_clamped requires lower < upper");
                }
            }
            Self::Exponential { rate } => {
                if !(*rate > T::zero()) || !rate.is_finite() {
                    return bad("exponential rate must be positive and finite");
                }
            }
            Self::Power { exponent, scale } => {
                if !(*exponent > T::zero()) || !(*scale > T::zero()) {
                    return bad("power exponent and scale must be positive");
                }
            }
            Self::Step(steps) | Self::Table(steps) => {
                let kind = if matches!(self, Self::Step(_)) { "step" } else { "table" };
                if steps.is_empty() {
                    return bad(&format!("{kind} needs at least one point"));
                }
                for w in steps.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return bad(&format!("{kind} abscissae must be strictly increasing"));
                    }
                    if w[1].1 < w[0].1 {
                        return bad(&format!("{kind} levels must be nondecreasing"));
                    }
                }
                if steps.iter().any(|&(s, g)| s < T::zero() || g < T::zero() || g > T::one()) {
                    return bad(&format!("{kind} points need s ≥ 0 and levels in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: T) -> T {
        let (zero, one) = (T::zero(), T::one());
        match self {
            Self::AffineClamped { lower, upper } => ((s - *lower) / (*upper - *lower)).max(zero).min(one),
            Self::Exponential { rate } => {
                if s <= zero {
                    zero
                } else {
                    -(-*rate * s).exp_m1()
                }
            }
            Self::Power { exponent, scale } => {
                if s <= zero {
                    zero
                } else {
                    (s / *scale).powf(*exponent).min(one)
                }
            }
            Self::Step(steps) => steps
                .iter()
                .take_while(|&&(t, _)| t <= s)
                .last()
                .map_or(zero, |&(_, g)| g),
            Self::Table(points) => {
                let first = points[0];
                let last = points[points.len() - 1];
                if s <= first.0 {
                    return first.1;
                }
                if s >= last.0 {
                    return last.1;
                }
                let k = points.partition_point(|&(x, _)| x <= s);
                let (x0, g0) = points[k - 1];
                let (x1, g1) = points[k];
                g0 + (g1 - g0) * (s - x0) / (x1 - x0)
            }
        }
    }

    /// Density `g = G'`, taken from the right at kinks and zero across steps.
    pub fn density(&self, s: T) -> T {
        let zero = T::zero();
        match self {
            Self::AffineClamped { lower, upper } => {
                if s >= *lower && s < *upper {
                    T::one() / (*upper - *lower)
                } else {
                    zero
                }
            }
            Self::Exponential { rate } => {
                if s < zero {
                    zero
                } else {
                    *rate * (-*rate * s).exp()
                }
            }
            Self::Power { exponent, scale } => {
                if s <= zero || s >= *scale {
                    zero
                } else {
                    *exponent / *scale * (s / *scale).powf(*exponent - T::one())
                }
            }
            Self::Step(_) => zero,
            Self::Table(points) => {
                if s < points[0].0 || s >= points[points.len() - 1].0 {
                    return zero;
                }
                let k = points.partition_point(|&(x, _)| x <= s);
                let (x0, g0) = points[k - 1];
                let (x1, g1) = points[k];
                (g1 - g0) / (x1 - x0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_evaluate() {
        let aff = ShoppingCostCdf::<f64>::AffineClamped { lower: 1.0, upper: 3.0 };
        assert_eq!(aff.eval(0.5), 0.0);
        assert_eq!(aff.eval(2.0), 0.5);
        assert_eq!(aff.eval(4.0), 1.0);
        let exp = ShoppingCostCdf::Exponential { rate: 1.0 };
        assert!((exp.eval(2.0) - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(exp.eval(0.0), 0.0);
        let pow = ShoppingCostCdf::Power { exponent: 2.0, scale: 4.0 };
        assert_eq!(pow.eval(2.0), 0.25);
        assert_eq!(pow.eval(5.0), 1.0);
        let tab = ShoppingCostCdf::<f64>::Table(vec![(1.0, 0.2), (3.0, 0.6)]);
        assert_eq!(tab.eval(0.0), 0.2);
        assert!((tab.eval(2.0) - 0.4).abs() < 1e-15);
        assert_eq!(tab.eval(9.0), 0.6);
        assert!((tab.density(2.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn steps_are_right_continuous() {
        let g = ShoppingCostCdf::Step(vec![(1.0, 0.3), (2.0, 1.0)]);
        assert_eq!(g.eval(0.999), 0.0);
        assert_eq!(g.eval(1.0), 0.3);
        assert_eq!(g.eval(1.5), 0.3);
        assert_eq!(g.eval(2.0), 1.0);
        assert_eq!(ShoppingCostCdf::<f64>::saturated().eval(0.0), 1.0);
    }

    #[test]
    fn validation() {
        assert!(ShoppingCostCdf::AffineClamped { lower: 1.0, upper: 1.0 }.validate().is_err());
        assert!(ShoppingCostCdf::Exponential { rate: 0.0 }.validate().is_err());
        assert!(ShoppingCostCdf::Power { exponent: -1.0, scale: 1.0 }.validate().is_err());
        assert!(ShoppingCostCdf::Step(vec![(1.0, 0.5), (1.0, 0.7)]).validate().is_err());
        assert!(ShoppingCostCdf::Step(vec![(1.0, 0.5), (2.0, 0.4)]).validate().is_err());
        assert!(ShoppingCostCdf::Table(vec![(0.0, 1.2)]).validate().is_err());
        assert!(ShoppingCostCdf::<f64>::Step(vec![]).validate().is_err());
        assert!(ShoppingCostCdf::Table(vec![(0.0, 0.0), (2.0, 1.0)]).validate().is_ok());
    }

    #[test]
    fn density_matches_finite_difference() {
        let fams = [
            ShoppingCostCdf::<f64>::Exponential { rate: 0.7 },
            ShoppingCostCdf::Power { exponent: 1.5, scale: 10.0 },
            ShoppingCostCdf::AffineClamped { lower: 0.5, upper: 6.0 },
        ];
        for g in fams {
            for s in [0.9, 2.3, 4.1] {
                let h = 1e-6;
                let fd = (g.eval(s + h) - g.eval(s - h)) / (2.0 * h);
                assert!((fd - g.density(s)).abs() < 1e-8, "{g:?} at {s}");
            }
        }
    }
}
