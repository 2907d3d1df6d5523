//! Forward-mode automatic differentiation with dual numbers.
//!
//! A [`Dual`] carries a primal value and a full-width vector of partial
//! derivatives. Evaluating a function generically over [`Real`] with unit
//! seed vectors yields the exact gradient in one pass; the same generic code
//! path evaluated at `f64` gives the plain value, so the value and gradient
//! implementations can never diverge.
//!
//! An empty partials vector denotes an exact constant (zero derivative of
//! any width); binary operations broadcast it, which keeps constants cheap.

use crate::error::{Error, Result};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction over which the likelihood, priors, and transforms are
/// written. Implemented by `f64` (plain evaluation) and [`Dual`]
/// (value + gradient).
pub trait Real:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(c: f64) -> Self;
    /// The primal value. Comparisons and branching must go through this so
    /// that the value and dual paths take identical branches.
    fn val(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn atanh(self) -> Self;
}

impl Real for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn val(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
}

/// A dual number: primal value plus a vector of partial derivatives.
///
/// The partials length equals the dimension of the gradient being computed;
/// an empty vector stands for an exact constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Dual {
            value,
            partials: Vec::new(),
        }
    }

    /// k-th coordinate of an n-dimensional input: unit seed vector.
    pub fn seeded(value: f64, k: usize, n: usize) -> Self {
        let mut partials = vec![0.0; n];
        partials[k] = 1.0;
        Dual { value, partials }
    }

    /// Applies `value_fn` to the primal and scales the partials by the
    /// derivative `dfdx` evaluated at the primal.
    fn lift(mut self, value: f64, dfdx: f64) -> Self {
        self.value = value;
        for p in &mut self.partials {
            *p *= dfdx;
        }
        self
    }
}

// fa * a + fb * b with constant (empty) broadcast; reuses lhs storage when it
// has full width.
fn combine(mut a: Vec<f64>, b: &[f64], fa: f64, fb: f64) -> Vec<f64> {
    if b.is_empty() {
        for p in &mut a {
            *p *= fa;
        }
        return a;
    }
    if a.is_empty() {
        return b.iter().map(|q| fb * q).collect();
    }
    debug_assert_eq!(a.len(), b.len());
    for (p, q) in a.iter_mut().zip(b.iter()) {
        *p = fa * *p + fb * *q;
    }
    a
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value + rhs.value,
            partials: combine(self.partials, &rhs.partials, 1.0, 1.0),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value - rhs.value,
            partials: combine(self.partials, &rhs.partials, 1.0, -1.0),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value * rhs.value,
            partials: combine(self.partials, &rhs.partials, rhs.value, self.value),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let q = self.value / rhs.value;
        Dual {
            value: q,
            partials: combine(self.partials, &rhs.partials, 1.0 / rhs.value, -q / rhs.value),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(mut self) -> Dual {
        self.value = -self.value;
        for p in &mut self.partials {
            *p = -*p;
        }
        self
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(mut self, rhs: f64) -> Dual {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: f64) -> Dual {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(mut self, rhs: f64) -> Dual {
        self.value *= rhs;
        for p in &mut self.partials {
            *p *= rhs;
        }
        self
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(mut self, rhs: f64) -> Dual {
        self.value /= rhs;
        for p in &mut self.partials {
            *p /= rhs;
        }
        self
    }
}

impl Real for Dual {
    fn constant(c: f64) -> Self {
        Dual::constant(c)
    }
    fn val(&self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        let v = self.value.exp();
        self.lift(v, v)
    }
    fn ln(self) -> Self {
        let x = self.value;
        self.lift(x.ln(), 1.0 / x)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.lift(s, 0.5 / s)
    }
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.lift(t, 1.0 - t * t)
    }
    fn atanh(self) -> Self {
        let x = self.value;
        self.lift(x.atanh(), 1.0 / (1.0 - x * x))
    }
}

/// Evaluates `f` at `x` with unit-seeded duals and returns `(f(x), ∇f(x))`.
///
/// Returns [`Error::NonFiniteGradient`] when a partial is NaN at a finite
/// primal, which signals a defect in the target rather than a rejected
/// region.
pub fn gradient<F>(f: F, x: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[Dual]) -> Dual,
{
    let n = x.len();
    let seeds: Vec<Dual> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| Dual::seeded(v, k, n))
        .collect();
    let out = f(&seeds);
    let mut grad = out.partials;
    if grad.is_empty() {
        grad = vec![0.0; n];
    }
    if out.value.is_finite() {
        if let Some(index) = grad.iter().position(|g| g.is_nan()) {
            return Err(Error::NonFiniteGradient { index });
        }
    }
    Ok((out.value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_at_zero_keeps_unit_partial() {
        let x = Dual::seeded(0.0, 0, 1);
        let y = x.exp();
        assert_eq!(y.value, 1.0);
        assert_eq!(y.partials, vec![1.0]);
    }

    #[test]
    fn ln_at_one_keeps_unit_partial() {
        let x = Dual::seeded(1.0, 0, 1);
        let y = x.ln();
        assert_eq!(y.value, 0.0);
        assert_eq!(y.partials, vec![1.0]);
    }

    #[test]
    fn composite_matches_central_difference() {
        let f = |x: f64| x.ln().tanh();
        let x0 = 2.0;
        let h = 1e-6;
        let fd = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
        let (v, g) = gradient(|x| x[0].clone().ln().tanh(), &[x0]).unwrap();
        assert!((v - f(x0)).abs() < 1e-14);
        assert!((g[0] - fd).abs() < 1e-8, "ad={} fd={}", g[0], fd);
    }

    #[test]
    fn sum_of_squares_gradient() {
        let (v, g) = gradient(
            |x| x.iter().cloned().map(|xi| xi.clone() * xi).fold(Dual::constant(0.0), |a, b| a + b),
            &[1.0, 2.0],
        )
        .unwrap();
        assert_eq!(v, 5.0);
        assert_eq!(g, vec![2.0, 4.0]);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let (v, g) = gradient(|_| Dual::constant(3.5), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v, 3.5);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn constant_broadcast_in_binary_ops() {
        let x = Dual::seeded(2.0, 0, 2);
        let y = Dual::constant(3.0) * x.clone() + Dual::constant(1.0);
        assert_eq!(y.value, 7.0);
        assert_eq!(y.partials, vec![3.0, 0.0]);
        let z = Dual::constant(1.0) / x;
        assert_eq!(z.value, 0.5);
        assert_eq!(z.partials, vec![-0.25, 0.0]);
    }

    #[test]
    fn nan_partial_at_finite_value_is_reported() {
        let err = gradient(
            |x| {
                // 0 * sqrt(x) at x = 0: value finite, partial NaN
                Dual::constant(0.0) * x[0].clone().sqrt()
            },
            &[0.0],
        )
        .unwrap_err();
        match err {
            Error::NonFiniteGradient { index } => assert_eq!(index, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
