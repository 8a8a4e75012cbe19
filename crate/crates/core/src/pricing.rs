//! Rate pricing for senders competing for a receiver's attention.
//!
//! With unit interference a sender transmitting at `alpha` among others
//! transmitting at `alpha_minus` in total has influence
//! `alpha * alpha_minus / (alpha_minus + alpha)`. When the platform fixes the
//! total rate at `B`, influence becomes `alpha (B - alpha) / B`, and prices
//! can be chosen so that every sender's best response is `B / n`.

use crate::error::{domain, Error, Result};
use crate::num::Real;
use crate::optimize::golden_section_max;

/// Price charged for transmitting at a given rate. Always zero at rate zero
/// and nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub enum PriceFunction<T> {
    /// `c1 * alpha`
    Linear { c1: T },
    /// `c2 * alpha^2`
    Quadratic { c2: T },
    /// Piecewise linear through `(rate, price)` knots starting at `(0, 0)`;
    /// extended past the last knot with the last slope.
    Tabulated { knots: Vec<(T, T)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceKind {
    Linear,
    Quadratic,
}

fn check_coefficient<T: Real>(name: &str, c: T) -> Result<()> {
    if !(c.is_finite() && c >= T::zero()) {
        return domain(format!("price coefficient {name} = {c} must be finite and >= 0"));
    }
    Ok(())
}

impl<T: Real> PriceFunction<T> {
    pub fn free() -> Self {
        PriceFunction::Linear { c1: T::zero() }
    }

    pub fn linear(c1: T) -> Result<Self> {
        check_coefficient("c1", c1)?;
        Ok(PriceFunction::Linear { c1 })
    }

    pub fn quadratic(c2: T) -> Result<Self> {
        check_coefficient("c2", c2)?;
        Ok(PriceFunction::Quadratic { c2 })
    }

    pub fn tabulated(knots: Vec<(T, T)>) -> Result<Self> {
        match knots.first() {
            Some(&(a, p)) if a == T::zero() && p == T::zero() => {}
            _ => return domain("tabulated price must start at (0, 0)"),
        }
        if knots.len() < 2 {
            return domain("tabulated price needs at least two knots");
        }
        for w in knots.windows(2) {
            let ((a0, p0), (a1, p1)) = (w[0], w[1]);
            if !(a1 > a0 && a1.is_finite()) {
                return domain("tabulated price rates must be strictly increasing");
            }
            if !(p1 >= p0 && p1.is_finite()) {
                return domain("tabulated price must be nondecreasing");
            }
        }
        Ok(PriceFunction::Tabulated { knots })
    }

    fn segment(knots: &[(T, T)], alpha: T) -> usize {
        // Index i such that alpha lies in [knots[i], knots[i + 1]); last segment past the end.
        let upto = knots.partition_point(|&(a, _)| a <= alpha);
        upto.saturating_sub(1).min(knots.len() - 2)
    }

    pub fn value(&self, alpha: T) -> T {
        match self {
            PriceFunction::Linear { c1 } => *c1 * alpha,
            PriceFunction::Quadratic { c2 } => *c2 * alpha * alpha,
            PriceFunction::Tabulated { knots } => {
                let i = Self::segment(knots, alpha);
                let ((a0, p0), (a1, p1)) = (knots[i], knots[i + 1]);
                p0 + (p1 - p0) / (a1 - a0) * (alpha - a0)
            }
        }
    }

    /// Right derivative.
    pub fn derivative(&self, alpha: T) -> T {
        match self {
            PriceFunction::Linear { c1 } => *c1,
            PriceFunction::Quadratic { c2 } => T::lit(2.0) * *c2 * alpha,
            PriceFunction::Tabulated { knots } => {
                let i = Self::segment(knots, alpha);
                let ((a0, p0), (a1, p1)) = (knots[i], knots[i + 1]);
                (p1 - p0) / (a1 - a0)
            }
        }
    }
}

/// Payoff with an endogenous total rate: `alpha * alpha_minus / (alpha_minus + alpha) - p(alpha)`.
pub fn sender_utility<T: Real>(alpha_i: T, alpha_minus_i: T, price: &PriceFunction<T>) -> Result<T> {
    if !(alpha_i >= T::zero() && alpha_minus_i >= T::zero()) {
        return domain(format!("rates must be >= 0, got {alpha_i} and {alpha_minus_i}"));
    }
    if alpha_i == T::zero() && alpha_minus_i == T::zero() {
        return domain("influence share undefined when every rate is zero");
    }
    if alpha_i == T::zero() {
        return Ok(-price.value(T::zero()));
    }
    Ok(alpha_i * alpha_minus_i / (alpha_minus_i + alpha_i) - price.value(alpha_i))
}

/// Payoff with the total rate fixed at `b`: `alpha (b - alpha) / b - p(alpha)`.
pub fn sender_utility_fixed_b<T: Real>(alpha_i: T, b: T, price: &PriceFunction<T>) -> Result<T> {
    if !(b > T::zero() && b.is_finite()) {
        return domain(format!("bandwidth {b} must be finite and > 0"));
    }
    if !(alpha_i >= T::zero() && alpha_i <= b) {
        return domain(format!("rate {alpha_i} outside [0, {b}]"));
    }
    Ok(fixed_b_utility(alpha_i, b, price))
}

fn fixed_b_utility<T: Real>(alpha: T, b: T, price: &PriceFunction<T>) -> T {
    alpha * (b - alpha) / b - price.value(alpha)
}

/// Price making `b / n` each sender's best response.
pub fn calibrate_price<T: Real>(n: usize, b: T, kind: PriceKind) -> Result<PriceFunction<T>> {
    if n < 2 {
        return domain(format!("calibration needs n >= 2 senders, got {n}"));
    }
    if !(b > T::zero() && b.is_finite()) {
        return domain(format!("bandwidth {b} must be finite and > 0"));
    }
    let n = T::from_count(n as u64);
    let two = T::lit(2.0);
    match kind {
        PriceKind::Linear => PriceFunction::linear(T::one() - two / n),
        PriceKind::Quadratic => PriceFunction::quadratic((n - two) / (two * b)),
    }
}

const TABULATED_GRID: usize = 2000;

/// Rate in `[0, b]` maximizing [`sender_utility_fixed_b`].
///
/// Linear and quadratic prices give a concave payoff and are searched by golden
/// section. Tabulated prices are scanned on a grid and the best cell refined.
pub fn best_response<T: Real>(b: T, price: &PriceFunction<T>, tol: T) -> Result<T> {
    if !(b > T::zero() && b.is_finite()) {
        return domain(format!("bandwidth {b} must be finite and > 0"));
    }
    let f = |a: T| fixed_b_utility(a, b, price);
    match price {
        PriceFunction::Linear { .. } | PriceFunction::Quadratic { .. } => {
            Ok(golden_section_max(f, T::zero(), b, tol)?.x)
        }
        PriceFunction::Tabulated { .. } => {
            let step = b / T::from_count(TABULATED_GRID as u64);
            let mut best = (T::zero(), f(T::zero()));
            for k in 1..=TABULATED_GRID {
                let a = step * T::from_count(k as u64);
                let v = f(a);
                if !v.is_finite() {
                    return Err(Error::Numeric(format!("utility not finite at rate {a}")));
                }
                if v > best.1 {
                    best = (a, v);
                }
            }
            let lo = (best.0 - step).max(T::zero());
            let hi = (best.0 + step).min(b);
            let refined = golden_section_max(f, lo, hi, tol)?;
            Ok(if refined.value >= best.1 { refined.x } else { best.0 })
        }
    }
}

/// Symmetric game: `n` senders sharing a fixed total rate `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingGame<T> {
    n: usize,
    b: T,
    price: PriceFunction<T>,
}

/// Numerical check of the symmetric profile `b / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileCheck<T> {
    pub target: T,
    pub best_response: T,
    pub abs_error: T,
    pub foc_residual: T,
    /// The target beats every deviation in `{0, b/(2n), 2b/n, b}`.
    pub deviations_dominated: bool,
}

impl<T: Real> PricingGame<T> {
    pub fn new(n: usize, b: T, price: PriceFunction<T>) -> Result<Self> {
        if n < 2 {
            return domain(format!("pricing game needs n >= 2, got {n}"));
        }
        if !(b > T::zero() && b.is_finite()) {
            return domain(format!("bandwidth {b} must be finite and > 0"));
        }
        Ok(PricingGame { n, b, price })
    }

    pub fn calibrated(n: usize, b: T, kind: PriceKind) -> Result<Self> {
        Self::new(n, b, calibrate_price(n, b, kind)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> T {
        self.b
    }

    pub fn price(&self) -> &PriceFunction<T> {
        &self.price
    }

    pub fn symmetric_rate(&self) -> T {
        self.b / T::from_count(self.n as u64)
    }

    /// `1 - 2 alpha / b - p'(alpha)` at `alpha`.
    pub fn foc_residual(&self, alpha: T) -> T {
        T::one() - T::lit(2.0) * alpha / self.b - self.price.derivative(alpha)
    }

    pub fn check(&self, tol: T) -> Result<ProfileCheck<T>> {
        let target = self.symmetric_rate();
        let best = best_response(self.b, &self.price, tol)?;
        let at_target = fixed_b_utility(target, self.b, &self.price);
        let n = T::from_count(self.n as u64);
        let two = T::lit(2.0);
        let deviations = [T::zero(), self.b / (two * n), two * self.b / n, self.b];
        let deviations_dominated = deviations
            .iter()
            .filter(|&&a| a <= self.b)
            .all(|&a| at_target >= fixed_b_utility(a, self.b, &self.price));
        Ok(ProfileCheck {
            target,
            best_response: best,
            abs_error: (best - target).abs(),
            foc_residual: self.foc_residual(target).abs(),
            deviations_dominated,
        })
    }
}
