//! Forward-mode dual numbers, nested one level per differentiation order.
//!
//! `Dual<f64>` carries a value and one directional derivative; nesting
//! (`Dual<Dual<f64>>`, ...) yields exact higher derivatives. All expression
//! evaluation is generic over [`Real`], so the same code path produces plain
//! values and derivative jets of any supported depth.

use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::expr::{Map2Fn, MapFn};
use crate::math;

/// Scalar arithmetic shared by `f64` and nested dual numbers.
pub trait Real:
    Copy
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;

    /// The underlying value, with every derivative slot stripped.
    fn primal(&self) -> f64;

    /// A variable seeded so that each nesting level differentiates once.
    fn seeded_var(x: f64) -> Self;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;

    fn powi(self, n: i32) -> Self {
        math::powi(self, n, Self::from_f64(1.0), |v| Self::from_f64(1.0) / v)
    }

    /// Apply a univariate map with a numeric value and closed-form derivative.
    fn apply_map(self, map: &MapFn) -> Self;

    /// Apply a bivariate numeric map. Partial derivatives are evaluated at
    /// the primal point, so only first-order derivative information
    /// propagates through such nodes.
    fn apply_map2(a: Self, b: Self, map: &Map2Fn) -> Self;
}

impl Real for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }

    #[inline]
    fn primal(&self) -> f64 {
        *self
    }

    #[inline]
    fn seeded_var(x: f64) -> Self {
        x
    }

    #[inline]
    fn exp(self) -> Self {
        math::exp(self)
    }

    #[inline]
    fn ln(self) -> Self {
        math::ln(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        math::sqrt(self)
    }

    #[inline]
    fn sin(self) -> Self {
        math::sin(self)
    }

    #[inline]
    fn cos(self) -> Self {
        math::cos(self)
    }

    #[inline]
    fn sinh(self) -> Self {
        math::sinh(self)
    }

    #[inline]
    fn cosh(self) -> Self {
        math::cosh(self)
    }

    #[inline]
    fn tanh(self) -> Self {
        math::tanh(self)
    }

    #[inline]
    fn apply_map(self, map: &MapFn) -> Self {
        map.value_at(self)
    }

    #[inline]
    fn apply_map2(a: Self, b: Self, map: &Map2Fn) -> Self {
        map.value_at(a, b)
    }
}

/// A first-order dual number over any [`Real`] base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    /// Value part.
    pub re: T,
    /// Derivative part.
    pub eps: T,
}

impl<T: Real> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    #[inline]
    pub fn constant(c: f64) -> Self {
        Dual {
            re: T::from_f64(c),
            eps: T::from_f64(0.0),
        }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual {
            re: self.re + rhs.re,
            eps: self.eps + rhs.eps,
        }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual {
            re: self.re - rhs.re,
            eps: self.eps - rhs.eps,
        }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual {
            re: self.re * rhs.re,
            eps: self.eps * rhs.re + self.re * rhs.eps,
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let re = self.re / rhs.re;
        Dual {
            re,
            eps: (self.eps - re * rhs.eps) / rhs.re,
        }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl<T: Real> Real for Dual<T> {
    #[inline]
    fn from_f64(c: f64) -> Self {
        Dual::constant(c)
    }

    #[inline]
    fn primal(&self) -> f64 {
        self.re.primal()
    }

    #[inline]
    fn seeded_var(x: f64) -> Self {
        Dual {
            re: T::seeded_var(x),
            eps: T::from_f64(1.0),
        }
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            eps: self.eps * e,
        }
    }

    #[inline]
    fn ln(self) -> Self {
        Dual {
            re: self.re.ln(),
            eps: self.eps / self.re,
        }
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual {
            re: s,
            eps: self.eps / (s + s),
        }
    }

    #[inline]
    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            eps: self.eps * self.re.cos(),
        }
    }

    #[inline]
    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            eps: -(self.eps * self.re.sin()),
        }
    }

    #[inline]
    fn sinh(self) -> Self {
        Dual {
            re: self.re.sinh(),
            eps: self.eps * self.re.cosh(),
        }
    }

    #[inline]
    fn cosh(self) -> Self {
        Dual {
            re: self.re.cosh(),
            eps: self.eps * self.re.sinh(),
        }
    }

    #[inline]
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        let one = T::from_f64(1.0);
        Dual {
            re: t,
            eps: self.eps * (one - t * t),
        }
    }

    #[inline]
    fn apply_map(self, map: &MapFn) -> Self {
        Dual {
            re: self.re.apply_map(map),
            eps: self.eps * map.derivative_at(self.re),
        }
    }

    #[inline]
    fn apply_map2(a: Self, b: Self, map: &Map2Fn) -> Self {
        let (pa, pb) = (a.primal(), b.primal());
        Dual {
            re: T::apply_map2(a.re, b.re, map),
            eps: a.eps * T::from_f64(map.d1_at(pa, pb)) + b.eps * T::from_f64(map.d2_at(pa, pb)),
        }
    }
}

/// One directional derivative.
pub type D1 = Dual<f64>;
/// Two nested directions (second derivatives).
pub type D2 = Dual<D1>;
/// Three nested directions.
pub type D3 = Dual<D2>;
/// Four nested directions.
pub type D4 = Dual<D3>;
