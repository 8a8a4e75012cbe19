//! Derivative-free one-dimensional search.

use crate::error::{domain, Error, Result};
use crate::num::Real;

/// Result of a bracketed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum<T> {
    pub x: T,
    pub value: T,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 500;

/// Golden-section minimization of `f` on `[lo, hi]`, stopping once the bracket
/// is narrower than `tol`. Assumes `f` is unimodal on the interval; the
/// endpoints are compared against the interior optimum so monotone functions
/// return the correct boundary.
pub fn golden_section_min<T: Real, F>(f: F, lo: T, hi: T, tol: T) -> Result<Extremum<T>>
where
    F: Fn(T) -> T,
{
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return domain(format!("invalid bracket [{lo}, {hi}]"));
    }
    if !(tol > T::zero()) {
        return domain(format!("tolerance {tol} must be > 0"));
    }
    let eval = |x: T| -> Result<T> {
        let v = f(x);
        if v.is_nan() {
            return Err(Error::Numeric(format!("objective is NaN at {x}")));
        }
        Ok(v)
    };
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < MAX_ITERATIONS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
        iterations += 1;
    }
    let (mut x, mut value) = if fc <= fd { (c, fc) } else { (d, fd) };
    for edge in [lo, hi] {
        let v = eval(edge)?;
        if v < value {
            x = edge;
            value = v;
        }
    }
    if !value.is_finite() {
        return Err(Error::Numeric(format!("objective is not finite at optimum {x}")));
    }
    Ok(Extremum { x, value, iterations })
}

/// Golden-section maximization; see [`golden_section_min`].
pub fn golden_section_max<T: Real, F>(f: F, lo: T, hi: T, tol: T) -> Result<Extremum<T>>
where
    F: Fn(T) -> T,
{
    let m = golden_section_min(|x| -f(x), lo, hi, tol)?;
    Ok(Extremum { value: -m.value, ..m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section_max(|x: f64| x * (8.0 - x), 0.0, 8.0, 1e-10).unwrap();
        assert!((m.x - 4.0).abs() < 1e-8);
        assert!((m.value - 16.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_hits_boundary() {
        let m = golden_section_min(|x: f64| x, 0.0, 3.0, 1e-9).unwrap();
        assert_eq!(m.x, 0.0);
        let m = golden_section_max(|x: f64| x, 0.0, 3.0, 1e-9).unwrap();
        assert_eq!(m.x, 3.0);
    }

    #[test]
    fn degenerate_bracket() {
        let m = golden_section_min(|x: f64| (x - 1.0).powi(2), 2.0, 2.0, 1e-9).unwrap();
        assert_eq!(m.x, 2.0);
        assert!(golden_section_min(|x: f64| x, 1.0, 0.0, 1e-9).is_err());
    }

    #[test]
    fn nan_is_an_error() {
        assert!(matches!(
            golden_section_min(|_x: f64| f64::NAN, 0.0, 1.0, 1e-6),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn works_in_f32() {
        let m = golden_section_min(|x: f32| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-5).unwrap();
        assert!((m.x - 0.3).abs() < 1e-3);
    }
}
