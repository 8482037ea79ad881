//! Scalar abstraction used by the differentiable lookahead chain.
//!
//! The same generic code path is evaluated with plain `f64` for cost values
//! and with [`Dual2`] for exact first derivatives with respect to the two
//! action components `(v, omega)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub trait Scalar:
    Copy
    + Debug
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
    fn cst(value: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn asin(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    /// Standard normal CDF.
    fn norm_cdf(self) -> Self;

    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powi2(self) -> Self {
        self * self
    }

    /// Wraps into (-pi, pi]. The shift is piecewise constant so derivatives pass through.
    fn wrap_angle(self) -> Self {
        let wrapped = wrap_angle(self.value());
        self + (wrapped - self.value())
    }

    fn is_finite(self) -> bool;
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

impl Scalar for f64 {
    fn cst(value: f64) -> Self {
        value
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn norm_cdf(self) -> Self {
        norm_cdf(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Forward-mode dual number carrying a value and its gradient with respect
/// to two independent inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub re: f64,
    pub eps: [f64; 2],
}

impl Dual2 {
    pub fn new(re: f64, eps: [f64; 2]) -> Self {
        Self { re, eps }
    }

    /// Independent variable number `index` (0 or 1).
    pub fn var(re: f64, index: usize) -> Self {
        let mut eps = [0.0; 2];
        eps[index] = 1.0;
        Self { re, eps }
    }

    #[inline]
    fn chain(self, re: f64, deriv: f64) -> Self {
        Self {
            re,
            eps: [self.eps[0] * deriv, self.eps[1] * deriv],
        }
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, [self.eps[0] + o.eps[0], self.eps[1] + o.eps[1]])
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, [self.eps[0] - o.eps[0], self.eps[1] - o.eps[1]])
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            [
                self.eps[0] * o.re + self.re * o.eps[0],
                self.eps[1] * o.re + self.re * o.eps[1],
            ],
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        let re = self.re * inv;
        Self::new(
            re,
            [(self.eps[0] - re * o.eps[0]) * inv, (self.eps[1] - re * o.eps[1]) * inv],
        )
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, [-self.eps[0], -self.eps[1]])
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Self::new(self.re + o, self.eps)
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Self::new(self.re - o, self.eps)
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Self::new(self.re * o, [self.eps[0] * o, self.eps[1] * o])
    }
}

impl Div<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

impl Scalar for Dual2 {
    fn cst(value: f64) -> Self {
        Self::new(value, [0.0; 2])
    }
    fn value(self) -> f64 {
        self.re
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn asin(self) -> Self {
        self.chain(self.re.asin(), 1.0 / (1.0 - self.re * self.re).sqrt())
    }
    fn atan2(self, x: Self) -> Self {
        let (y, xr) = (self.re, x.re);
        let r2 = y * y + xr * xr;
        Self::new(
            y.atan2(xr),
            [
                (xr * self.eps[0] - y * x.eps[0]) / r2,
                (xr * self.eps[1] - y * x.eps[1]) / r2,
            ],
        )
    }
    fn norm_cdf(self) -> Self {
        self.chain(norm_cdf(self.re), norm_pdf(self.re))
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.iter().all(|e| e.is_finite())
    }
}
