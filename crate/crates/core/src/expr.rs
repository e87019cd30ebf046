//! Closed-form expression trees over the coordinates `(tau^1..tau^m, x)`.
//!
//! Expressions are the common currency of the crate: catalog solutions,
//! reaction terms, coordinate transformations and masks are all built from
//! [`Expr`] so that one generic evaluator delivers plain values and exact
//! derivative jets alike.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dual::Real;

/// A univariate map whose value may only be computable numerically
/// (e.g. by quadrature) but whose derivative is a closed-form expression
/// in the single variable [`Expr::X`]. Dual evaluation chains through the
/// derivative expression, so jets stay exact to rounding.
pub struct MapFn {
    name: &'static str,
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative: Expr,
}

impl MapFn {
    pub fn new(
        name: &'static str,
        value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Expr,
    ) -> Self {
        MapFn {
            name,
            value,
            derivative,
        }
    }

    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    #[inline]
    pub fn derivative_at<T: Real>(&self, t: T) -> T {
        self.derivative.eval(&[], t)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
}

impl core::fmt::Debug for MapFn {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MapFn").field("name", &self.name).finish()
    }
}

/// A bivariate numeric map with numeric partial derivatives. Only
/// first-order derivative information propagates through these nodes;
/// they exist for numerically traced first integrals.
pub struct Map2Fn {
    name: &'static str,
    value: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    d1: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    d2: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl Map2Fn {
    pub fn new(
        name: &'static str,
        value: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        d1: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        d2: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    ) -> Self {
        Map2Fn {
            name,
            value,
            d1,
            d2,
        }
    }

    #[inline]
    pub fn value_at(&self, a: f64, b: f64) -> f64 {
        (self.value)(a, b)
    }

    #[inline]
    pub fn d1_at(&self, a: f64, b: f64) -> f64 {
        (self.d1)(a, b)
    }

    #[inline]
    pub fn d2_at(&self, a: f64, b: f64) -> f64 {
        (self.d2)(a, b)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
}

impl core::fmt::Debug for Map2Fn {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Map2Fn").field("name", &self.name).finish()
    }
}

/// Expression node. `Tau(i)` is the i-th time coordinate (0-based), `X` the
/// spatial coordinate. In reaction-term context the variables are reused:
/// `X` stands for `u` and `Tau(j)` for the (j+1)-th spatial derivative.
#[derive(Clone, Debug)]
pub enum Expr {
    Const(f64),
    Tau(usize),
    X,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Powi(Box<Expr>, i32),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sinh(Box<Expr>),
    Cosh(Box<Expr>),
    Tanh(Box<Expr>),
    Map(Arc<MapFn>, Box<Expr>),
    Map2(Arc<Map2Fn>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn tau(i: usize) -> Expr {
        Expr::Tau(i)
    }

    pub fn x() -> Expr {
        Expr::X
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Powi(Box::new(self), n)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn sinh(self) -> Expr {
        Expr::Sinh(Box::new(self))
    }

    pub fn cosh(self) -> Expr {
        Expr::Cosh(Box::new(self))
    }

    pub fn tanh(self) -> Expr {
        Expr::Tanh(Box::new(self))
    }

    /// coth z = cosh z / sinh z (singular at z = 0; callers mask the line).
    pub fn coth(self) -> Expr {
        self.clone().cosh() / self.sinh()
    }

    pub fn map(f: Arc<MapFn>, arg: Expr) -> Expr {
        Expr::Map(f, Box::new(arg))
    }

    pub fn map2(f: Arc<Map2Fn>, a: Expr, b: Expr) -> Expr {
        Expr::Map2(f, Box::new(a), Box::new(b))
    }

    /// Evaluate with any scalar type: `f64` for values, nested duals for jets.
    /// `tau` must cover every `Tau(i)` index used by the expression.
    pub fn eval<T: Real>(&self, tau: &[T], x: T) -> T {
        match self {
            Expr::Const(c) => T::from_f64(*c),
            Expr::Tau(i) => tau[*i],
            Expr::X => x,
            Expr::Add(a, b) => a.eval(tau, x) + b.eval(tau, x),
            Expr::Sub(a, b) => a.eval(tau, x) - b.eval(tau, x),
            Expr::Mul(a, b) => a.eval(tau, x) * b.eval(tau, x),
            Expr::Div(a, b) => a.eval(tau, x) / b.eval(tau, x),
            Expr::Neg(a) => -a.eval(tau, x),
            Expr::Powi(a, n) => a.eval(tau, x).powi(*n),
            Expr::Exp(a) => a.eval(tau, x).exp(),
            Expr::Ln(a) => a.eval(tau, x).ln(),
            Expr::Sqrt(a) => a.eval(tau, x).sqrt(),
            Expr::Sin(a) => a.eval(tau, x).sin(),
            Expr::Cos(a) => a.eval(tau, x).cos(),
            Expr::Sinh(a) => a.eval(tau, x).sinh(),
            Expr::Cosh(a) => a.eval(tau, x).cosh(),
            Expr::Tanh(a) => a.eval(tau, x).tanh(),
            Expr::Map(f, a) => a.eval(tau, x).apply_map(f),
            Expr::Map2(f, a, b) => T::apply_map2(a.eval(tau, x), b.eval(tau, x), f),
        }
    }

    /// Plain value at `(tau, x)`.
    pub fn eval_f64(&self, tau: &[f64], x: f64) -> f64 {
        self.eval(tau, x)
    }

    /// Value of a single-variable expression (variable `X`).
    pub fn eval_single<T: Real>(&self, t: T) -> T {
        self.eval(&[], t)
    }

    /// Substitute coordinate expressions for the variables. `tau_subs[i]`
    /// replaces `Tau(i)` and `x_sub` replaces `X`.
    ///
    /// Panics if the expression references a `Tau` index not covered by
    /// `tau_subs`; callers validate arity first (see [`Expr::max_tau_index`]).
    pub fn subst(&self, tau_subs: &[Expr], x_sub: &Expr) -> Expr {
        let s = |e: &Expr| Box::new(e.subst(tau_subs, x_sub));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Tau(i) => tau_subs[*i].clone(),
            Expr::X => x_sub.clone(),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Powi(a, n) => Expr::Powi(s(a), *n),
            Expr::Exp(a) => Expr::Exp(s(a)),
            Expr::Ln(a) => Expr::Ln(s(a)),
            Expr::Sqrt(a) => Expr::Sqrt(s(a)),
            Expr::Sin(a) => Expr::Sin(s(a)),
            Expr::Cos(a) => Expr::Cos(s(a)),
            Expr::Sinh(a) => Expr::Sinh(s(a)),
            Expr::Cosh(a) => Expr::Cosh(s(a)),
            Expr::Tanh(a) => Expr::Tanh(s(a)),
            Expr::Map(f, a) => Expr::Map(f.clone(), s(a)),
            Expr::Map2(f, a, b) => Expr::Map2(f.clone(), s(a), s(b)),
        }
    }

    /// Largest `Tau` index referenced, if any.
    pub fn max_tau_index(&self) -> Option<usize> {
        let sub2 = |a: &Expr, b: &Expr| match (a.max_tau_index(), b.max_tau_index()) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        match self {
            Expr::Const(_) | Expr::X => None,
            Expr::Tau(i) => Some(*i),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Map2(_, a, b) => sub2(a, b),
            Expr::Neg(a)
            | Expr::Powi(a, _)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Sqrt(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Sinh(a)
            | Expr::Cosh(a)
            | Expr::Tanh(a)
            | Expr::Map(_, a) => a.max_tau_index(),
        }
    }

    /// Whether the expression references `X`.
    pub fn uses_x(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Tau(_) => false,
            Expr::X => true,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Map2(_, a, b) => a.uses_x() || b.uses_x(),
            Expr::Neg(a)
            | Expr::Powi(a, _)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Sqrt(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Sinh(a)
            | Expr::Cosh(a)
            | Expr::Tanh(a)
            | Expr::Map(_, a) => a.uses_x(),
        }
    }

    /// Whether the expression references `Tau(i)`.
    pub fn uses_tau(&self, i: usize) -> bool {
        match self {
            Expr::Const(_) | Expr::X => false,
            Expr::Tau(j) => *j == i,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Map2(_, a, b) => a.uses_tau(i) || b.uses_tau(i),
            Expr::Neg(a)
            | Expr::Powi(a, _)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Sqrt(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Sinh(a)
            | Expr::Cosh(a)
            | Expr::Tanh(a)
            | Expr::Map(_, a) => a.uses_tau(i),
        }
    }

    /// Identity substitutions `[Tau(0), .., Tau(m-1)]`.
    pub fn identity_taus(m: usize) -> Vec<Expr> {
        (0..m).map(Expr::Tau).collect()
    }
}

impl core::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
