//! Scalar abstraction and forward-mode dual numbers.
//!
//! Every evaluation path in this crate (expression fields, exterior algebra,
//! the synthesized vector fields, the closed-form orbit parameterizations) is
//! generic over [`Scalar`]. Instantiating with [`Dual`] gives exact first
//! derivatives; nesting (`Dual<Dual<f64>>`) gives exact derivatives of
//! quantities that are themselves gradients, which is how Jacobians of
//! synthesized fields stay exact end to end.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic used by all evaluation engines. Implemented by `f64` and by
/// [`Dual<T>`] for any `T: Scalar`.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// The underlying real value (all derivative parts stripped).
    fn value(self) -> f64;
    fn is_finite_value(self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn asin(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// First-order dual number `re + ε·du` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T = f64> {
    pub re: T,
    pub du: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, du: T) -> Self {
        Dual { re, du }
    }

    /// Lift a value with zero derivative part.
    pub fn constant(re: T) -> Self {
        Dual { re, du: T::zero() }
    }

    /// A coordinate seeded for differentiation (derivative part one).
    pub fn seeded(re: T) -> Self {
        Dual { re, du: T::one() }
    }
}

/// Seed coordinate `index` of a point for one forward-mode pass.
pub fn seed_point<T: Scalar>(x: &[T], index: usize) -> Vec<Dual<T>> {
    x.iter()
        .enumerate()
        .map(|(j, &v)| {
            if j == index {
                Dual::seeded(v)
            } else {
                Dual::constant(v)
            }
        })
        .collect()
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.du + rhs.du)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.du - rhs.du)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.du * rhs.re + self.re * rhs.du)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        Dual::new(q, (self.du - q * rhs.du) / rhs.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(self) -> f64 {
        self.re.value()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite_value() && self.du.is_finite_value()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.du * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.du * self.re.sin()))
    }
    fn asin(self) -> Self {
        let denom = (T::one() - self.re * self.re).sqrt();
        Dual::new(self.re.asin(), self.du / denom)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.du * e)
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.du / (T::from_f64(2.0) * r))
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, self.du * (T::one() - t * t))
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual::constant(T::one()),
            1 => self,
            _ => {
                let p = self.re.powi(n - 1);
                Dual::new(self.re * p, T::from_f64(n as f64) * p * self.du)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(re: f64, du: f64) -> Dual {
        Dual::new(re, du)
    }

    #[test]
    fn arithmetic_derivatives() {
        let x = Dual::seeded(2.0);
        let y = x * x + Dual::constant(3.0) * x; // x^2 + 3x, d/dx = 2x + 3
        assert_eq!(y.re, 10.0);
        assert_eq!(y.du, 7.0);

        let q = Dual::constant(1.0) / x; // 1/x, d/dx = -1/x^2
        assert!((q.re - 0.5).abs() < 1e-15);
        assert!((q.du + 0.25).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let h = 1e-6;
        type Pair = (fn(Dual) -> Dual, fn(f64) -> f64);
        let fns: Vec<Pair> = vec![
            (Scalar::sin, f64::sin),
            (Scalar::cos, f64::cos),
            (Scalar::exp, f64::exp),
            (Scalar::tanh, f64::tanh),
            (Scalar::sqrt, f64::sqrt),
            (Scalar::asin, f64::asin),
        ];
        for (fd, ff) in fns {
            for &x0 in &[0.3, 0.7, 0.9] {
                let exact = fd(Dual::seeded(x0)).du;
                let approx = (ff(x0 + h) - ff(x0 - h)) / (2.0 * h);
                assert!(
                    (exact - approx).abs() < 1e-6,
                    "derivative mismatch at {x0}: {exact} vs {approx}"
                );
            }
        }
    }

    #[test]
    fn powi_handles_negative_and_zero_exponents() {
        let x = Dual::seeded(2.0);
        let y = x.powi(-2); // x^-2, d/dx = -2 x^-3
        assert!((y.re - 0.25).abs() < 1e-15);
        assert!((y.du + 0.25).abs() < 1e-15);
        let z = x.powi(0);
        assert_eq!(z, d(1.0, 0.0));
    }

    #[test]
    fn nested_duals_give_second_derivatives() {
        // f(x) = x^3: f' = 3x^2, f'' = 6x.
        let x: Dual<Dual> = Dual::seeded(Dual::seeded(2.0));
        let y = x * x * x;
        assert!((y.re.re - 8.0).abs() < 1e-15);
        assert!((y.re.du - 12.0).abs() < 1e-15); // two routes to f'
        assert!((y.du.re - 12.0).abs() < 1e-15);
        assert!((y.du.du - 12.0).abs() < 1e-15); // f'' = 6x = 12
    }
}
