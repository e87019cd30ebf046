//! Evaluable scalar fields over `(tau^1..tau^m, x)` with exact derivative
//! jets: first order in each time coordinate, up to fourth order in space.
//!
//! Closed-form fields evaluate jets by nested dual arithmetic, one nesting
//! level per differentiation order, so residual checks see no step-size
//! error. Fields that exist only as value callables fall back to
//! high-order central differences.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dual::{Real, D1, D2, D3, D4};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::math;

/// Highest spatial-derivative order the closed-form jet evaluator supports.
pub const MAX_JET_ORDER: usize = 4;

/// Value callable backing a sampled field.
pub type SampledFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Default step for finite-difference fallbacks.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A point `(tau^1..tau^m, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub tau: Vec<f64>,
    pub x: f64,
}

impl Point {
    pub fn new(tau: Vec<f64>, x: f64) -> Point {
        Point { tau, x }
    }

    /// Single-time convenience constructor.
    pub fn m1(tau: f64, x: f64) -> Point {
        Point {
            tau: alloc::vec![tau],
            x,
        }
    }

    pub fn m(&self) -> usize {
        self.tau.len()
    }
}

/// Value and partial derivatives of a field at a point: first order in each
/// time, spatial derivatives up to the requested order.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    /// d u / d tau^i for each time coordinate.
    pub d_tau: Vec<f64>,
    /// Spatial derivatives: `d_space[k]` is the (k+1)-th x-derivative.
    pub d_space: Vec<f64>,
}

impl Jet {
    /// First spatial derivative. Panics if the jet was built with order 0.
    pub fn d_x(&self) -> f64 {
        self.d_space[0]
    }

    /// Second spatial derivative. Panics if the jet order is below 2.
    pub fn d_xx(&self) -> f64 {
        self.d_space[1]
    }

    pub fn spatial_order(&self) -> usize {
        self.d_space.len()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.d_tau.iter().all(|v| v.is_finite())
            && self.d_space.iter().all(|v| v.is_finite())
    }
}

/// Singular-set predicate: the point is masked where `|distance| < threshold`.
/// `distance` is typically the denominator of a rational solution or the
/// signed distance to a pole line.
#[derive(Clone, Debug)]
pub struct Mask {
    pub distance: Expr,
    pub threshold: f64,
}

impl Mask {
    pub fn new(distance: Expr, threshold: f64) -> Mask {
        Mask {
            distance,
            threshold,
        }
    }

    pub fn is_masked(&self, tau: &[f64], x: f64) -> bool {
        math::abs(self.distance.eval_f64(tau, x)) < self.threshold
    }
}

/// Axis-aligned box of validity in source coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub tau: Vec<(f64, f64)>,
    pub x: Option<(f64, f64)>,
}

impl DomainBox {
    pub fn new(tau: Vec<(f64, f64)>, x: Option<(f64, f64)>) -> DomainBox {
        DomainBox { tau, x }
    }

    /// All of R^(m+1).
    pub fn unbounded(m: usize) -> DomainBox {
        DomainBox {
            tau: (0..m).map(|_| (f64::NEG_INFINITY, f64::INFINITY)).collect(),
            x: None,
        }
    }

    pub fn m(&self) -> usize {
        self.tau.len()
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.tau.len() != self.tau.len() {
            return false;
        }
        for (v, (lo, hi)) in p.tau.iter().zip(&self.tau) {
            if !(v >= lo && v <= hi) {
                return false;
            }
        }
        match self.x {
            Some((lo, hi)) => p.x >= lo && p.x <= hi,
            None => true,
        }
    }
}

#[derive(Clone)]
enum FieldRepr {
    Closed(Expr),
    Sampled { f: SampledFn, step: f64 },
}

/// An evaluable scalar field. Immutable after construction and safe to
/// evaluate from multiple threads.
#[derive(Clone)]
pub struct ScalarField {
    m: usize,
    repr: FieldRepr,
    mask: Option<Mask>,
    domain: Option<DomainBox>,
}

impl core::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let repr = match &self.repr {
            FieldRepr::Closed(e) => format!("closed({e:?})"),
            FieldRepr::Sampled { step, .. } => format!("sampled(step={step})"),
        };
        f.debug_struct("ScalarField")
            .field("m", &self.m)
            .field("repr", &repr)
            .field("mask", &self.mask)
            .finish()
    }
}

impl ScalarField {
    /// Closed-form field over `m` time coordinates.
    pub fn from_expr(m: usize, expr: Expr) -> Result<ScalarField> {
        if let Some(top) = expr.max_tau_index() {
            if top >= m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: top + 1,
                });
            }
        }
        Ok(ScalarField {
            m,
            repr: FieldRepr::Closed(expr),
            mask: None,
            domain: None,
        })
    }

    /// Value-only field; jets come from fourth-order central differences
    /// with the given step.
    pub fn sampled(m: usize, f: SampledFn, step: f64) -> ScalarField {
        ScalarField {
            m,
            repr: FieldRepr::Sampled { f, step },
            mask: None,
            domain: None,
        }
    }

    pub fn with_mask(mut self, mask: Mask) -> ScalarField {
        self.mask = Some(mask);
        self
    }

    pub fn with_domain(mut self, domain: DomainBox) -> ScalarField {
        self.domain = Some(domain);
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mask(&self) -> Option<&Mask> {
        self.mask.as_ref()
    }

    pub fn domain(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }

    /// The defining expression, when the field is closed-form.
    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            FieldRepr::Closed(e) => Some(e),
            FieldRepr::Sampled { .. } => None,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, FieldRepr::Closed(_))
    }

    /// Whether the point falls in the declared singular set.
    pub fn is_singular(&self, p: &Point) -> bool {
        match &self.mask {
            Some(mask) => mask.is_masked(&p.tau, p.x),
            None => false,
        }
    }

    /// Whether the point can be evaluated (right dimension, inside the
    /// domain, outside the singular set).
    pub fn is_evaluable(&self, p: &Point) -> bool {
        p.tau.len() == self.m
            && self.domain.as_ref().is_none_or(|d| d.contains(p))
            && !self.is_singular(p)
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.tau.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: p.tau.len(),
            });
        }
        if let Some(d) = &self.domain {
            if !d.contains(p) {
                return Err(Error::OutOfDomain);
            }
        }
        if self.is_singular(p) {
            return Err(Error::SingularPoint);
        }
        Ok(())
    }

    /// Field value at `p`.
    pub fn value(&self, p: &Point) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.raw_value(&p.tau, p.x))
    }

    fn raw_value(&self, tau: &[f64], x: f64) -> f64 {
        match &self.repr {
            FieldRepr::Closed(e) => e.eval_f64(tau, x),
            FieldRepr::Sampled { f, .. } => f(tau, x),
        }
    }

    /// Value and derivatives at `p`: all first time-derivatives plus spatial
    /// derivatives up to `order`. Closed-form fields use nested duals and
    /// are exact to rounding; sampled fields use central differences.
    pub fn jet(&self, p: &Point, order: usize) -> Result<Jet> {
        self.check_point(p)?;
        match &self.repr {
            FieldRepr::Closed(e) => {
                if order > MAX_JET_ORDER {
                    return Err(Error::UnsupportedOrder {
                        requested: order,
                        max: MAX_JET_ORDER,
                    });
                }
                Ok(closed_jet(e, &p.tau, p.x, order))
            }
            FieldRepr::Sampled { f, step } => {
                if order > 2 {
                    return Err(Error::UnsupportedOrder {
                        requested: order,
                        max: 2,
                    });
                }
                self.sampled_jet(f.as_ref(), *step, p, order)
            }
        }
    }

    /// Central-difference jet with explicit step `h`: first derivatives and
    /// the second spatial derivative are O(h^2). Every stencil point
    /// (offsets of `h` and `2h` along each axis) must be evaluable.
    pub fn fd_jet(&self, p: &Point, h: f64) -> Result<Jet> {
        self.check_point(p)?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::BadParameter(format!(
                "fd step must be positive and finite, got {h}"
            )));
        }
        self.check_stencil(p, h)?;

        let center = self.raw_value(&p.tau, p.x);
        let mut d_tau = Vec::with_capacity(self.m);
        let mut tau = p.tau.clone();
        for i in 0..self.m {
            let t0 = tau[i];
            tau[i] = t0 + h;
            let fp = self.raw_value(&tau, p.x);
            tau[i] = t0 - h;
            let fm = self.raw_value(&tau, p.x);
            tau[i] = t0;
            d_tau.push((fp - fm) / (2.0 * h));
        }
        let fxp = self.raw_value(&p.tau, p.x + h);
        let fxm = self.raw_value(&p.tau, p.x - h);
        let d_x = (fxp - fxm) / (2.0 * h);
        let d_xx = (fxp - 2.0 * center + fxm) / (h * h);
        Ok(Jet {
            value: center,
            d_tau,
            d_space: alloc::vec![d_x, d_xx],
        })
    }

    fn check_stencil(&self, p: &Point, h: f64) -> Result<()> {
        let mut probe = p.clone();
        for i in 0..self.m {
            let t0 = p.tau[i];
            for off in [-2.0, -1.0, 1.0, 2.0] {
                probe.tau[i] = t0 + off * h;
                if !self.is_evaluable(&probe) {
                    return Err(Error::SingularStencil);
                }
            }
            probe.tau[i] = t0;
        }
        for off in [-2.0, -1.0, 1.0, 2.0] {
            probe.x = p.x + off * h;
            if !self.is_evaluable(&probe) {
                return Err(Error::SingularStencil);
            }
        }
        Ok(())
    }

    /// Fourth-order central differences for sampled fields.
    fn sampled_jet(
        &self,
        f: &(dyn Fn(&[f64], f64) -> f64 + Send + Sync),
        h: f64,
        p: &Point,
        order: usize,
    ) -> Result<Jet> {
        self.check_stencil(p, h)?;
        let center = f(&p.tau, p.x);
        let five = |fm2: f64, fm1: f64, fp1: f64, fp2: f64| {
            (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
        };
        let mut d_tau = Vec::with_capacity(self.m);
        let mut tau = p.tau.clone();
        for i in 0..self.m {
            let t0 = tau[i];
            let mut at = |off: f64| {
                tau[i] = t0 + off * h;
                let v = f(&tau, p.x);
                tau[i] = t0;
                v
            };
            let (fm2, fm1, fp1, fp2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
            d_tau.push(five(fm2, fm1, fp1, fp2));
        }
        let mut d_space = Vec::new();
        if order >= 1 {
            let at = |off: f64| f(&p.tau, p.x + off * h);
            let (fm2, fm1, fp1, fp2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
            d_space.push(five(fm2, fm1, fp1, fp2));
            if order >= 2 {
                d_space
                    .push((-fm2 + 16.0 * fm1 - 30.0 * center + 16.0 * fp1 - fp2) / (12.0 * h * h));
            }
        }
        Ok(Jet {
            value: center,
            d_tau,
            d_space,
        })
    }

    /// Pointwise sum; both fields must be closed-form over the same `m`.
    pub fn sum(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, |a, b| a + b)
    }

    /// Pointwise product; both fields must be closed-form over the same `m`.
    pub fn product(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, |a, b| a * b)
    }

    /// Pointwise scaling by a constant.
    pub fn scaled(&self, factor: f64) -> Result<ScalarField> {
        match &self.repr {
            FieldRepr::Closed(e) => {
                let mut out = ScalarField::from_expr(self.m, Expr::c(factor) * e.clone())?;
                out.mask = self.mask.clone();
                out.domain = self.domain.clone();
                Ok(out)
            }
            FieldRepr::Sampled { .. } => Err(Error::UnsupportedForm("scaled sampled field")),
        }
    }

    fn combine(&self, other: &ScalarField, op: impl Fn(Expr, Expr) -> Expr) -> Result<ScalarField> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: other.m,
            });
        }
        match (&self.repr, &other.repr) {
            (FieldRepr::Closed(a), FieldRepr::Closed(b)) => {
                let mut out = ScalarField::from_expr(self.m, op(a.clone(), b.clone()))?;
                out.mask = self.mask.clone().or_else(|| other.mask.clone());
                out.domain = self.domain.clone().or_else(|| other.domain.clone());
                Ok(out)
            }
            _ => Err(Error::UnsupportedForm("combining sampled fields")),
        }
    }

    /// Substitute coordinates, producing the composed field
    /// `p -> factor * self(tau_subs(p), x_sub(p))` over `new_m` times.
    /// The singular mask is transported through the same substitution.
    pub(crate) fn composed(
        &self,
        new_m: usize,
        tau_subs: &[Expr],
        x_sub: &Expr,
        factor: f64,
    ) -> Result<ScalarField> {
        if tau_subs.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: tau_subs.len(),
            });
        }
        match &self.repr {
            FieldRepr::Closed(e) => {
                let mut expr = e.subst(tau_subs, x_sub);
                if factor != 1.0 {
                    expr = Expr::c(factor) * expr;
                }
                let mut out = ScalarField::from_expr(new_m, expr)?;
                out.mask = self
                    .mask
                    .as_ref()
                    .map(|m| Mask::new(m.distance.subst(tau_subs, x_sub), m.threshold));
                Ok(out)
            }
            FieldRepr::Sampled { f, step } => {
                let f = f.clone();
                let step = *step;
                let tau_subs: Vec<Expr> = tau_subs.to_vec();
                let x_sub = x_sub.clone();
                let mask = self.mask.clone();
                let inner_mask =
                    mask.map(|m| Mask::new(m.distance.subst(&tau_subs, &x_sub), m.threshold));
                let subs = tau_subs.clone();
                let xs = x_sub.clone();
                let g = move |tau: &[f64], x: f64| {
                    let mapped: Vec<f64> = subs.iter().map(|e| e.eval_f64(tau, x)).collect();
                    factor * f(&mapped, xs.eval_f64(tau, x))
                };
                let mut out = ScalarField::sampled(new_m, Arc::new(g), step);
                if let Some(m) = inner_mask {
                    out.mask = Some(m);
                }
                Ok(out)
            }
        }
    }
}

/// Closed-form jet by nested dual numbers: one `D1` sweep per time axis and
/// a single nested evaluation for all spatial orders at once.
fn closed_jet(e: &Expr, tau: &[f64], x: f64, order: usize) -> Jet {
    let m = tau.len();
    let mut d_tau = Vec::with_capacity(m);
    let mut value = None;
    for i in 0..m {
        let seeded: Vec<D1> = tau
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                if j == i {
                    D1::seeded_var(t)
                } else {
                    D1::constant(t)
                }
            })
            .collect();
        let out = e.eval(&seeded, D1::constant(x));
        d_tau.push(out.eps);
        value.get_or_insert(out.re);
    }

    let mut d_space = Vec::with_capacity(order);
    match order {
        0 => {
            value.get_or_insert_with(|| e.eval_f64(tau, x));
        }
        1 => {
            let taus: Vec<D1> = tau.iter().map(|&t| D1::constant(t)).collect();
            let out = e.eval(&taus, D1::seeded_var(x));
            value.get_or_insert(out.re);
            d_space.push(out.eps);
        }
        2 => {
            let taus: Vec<D2> = tau.iter().map(|&t| D2::constant(t)).collect();
            let out = e.eval(&taus, D2::seeded_var(x));
            value.get_or_insert(out.re.re);
            d_space.push(out.re.eps);
            d_space.push(out.eps.eps);
        }
        3 => {
            let taus: Vec<D3> = tau.iter().map(|&t| D3::constant(t)).collect();
            let out = e.eval(&taus, D3::seeded_var(x));
            value.get_or_insert(out.re.re.re);
            d_space.push(out.re.re.eps);
            d_space.push(out.re.eps.eps);
            d_space.push(out.eps.eps.eps);
        }
        _ => {
            let taus: Vec<D4> = tau.iter().map(|&t| D4::constant(t)).collect();
            let out = e.eval(&taus, D4::seeded_var(x));
            value.get_or_insert(out.re.re.re.re);
            d_space.push(out.re.re.re.eps);
            d_space.push(out.re.re.eps.eps);
            d_space.push(out.re.eps.eps.eps);
            d_space.push(out.eps.eps.eps.eps);
        }
    }

    Jet {
        value: value.unwrap_or_else(|| e.eval_f64(tau, x)),
        d_tau,
        d_space,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn field_x_squared() -> ScalarField {
        ScalarField::from_expr(1, Expr::x().powi(2)).unwrap()
    }

    #[test]
    fn polynomial_jet() {
        // u = x^2 at x = 2: value 4, u_x = 4, u_xx = 2
        let f = field_x_squared();
        let jet = f.jet(&Point::m1(0.0, 2.0), 2).unwrap();
        assert_abs_diff_eq!(jet.value, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d_x(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d_xx(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d_tau[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coordinate_function_jet() {
        // u = tau^1 with m = 2: d_tau = (1, 0), u_x = 0
        let f = ScalarField::from_expr(2, Expr::tau(0)).unwrap();
        let jet = f.jet(&Point::new(alloc::vec![0.4, -1.2], 0.9), 2).unwrap();
        assert_abs_diff_eq!(jet.d_tau[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d_tau[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d_x(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_field_jet_vs_central_differences() {
        // u = exp(x - tau^1) at the origin
        let f = ScalarField::from_expr(1, (Expr::x() - Expr::tau(0)).exp()).unwrap();
        let p = Point::m1(0.0, 0.0);
        let jet = f.jet(&p, 2).unwrap();
        assert_abs_diff_eq!(jet.value, 1.0, epsilon = 1e-15);
        let fd = f.fd_jet(&p, 1e-5).unwrap();
        assert_abs_diff_eq!(jet.d_tau[0], fd.d_tau[0], epsilon = 1e-8);
        assert_abs_diff_eq!(jet.d_x(), fd.d_x(), epsilon = 1e-8);
        assert_abs_diff_eq!(jet.d_xx(), fd.d_xx(), epsilon = 1e-5);
    }

    #[test]
    fn fd_jet_cubic() {
        let f = ScalarField::from_expr(1, Expr::x().powi(3)).unwrap();
        let fd = f.fd_jet(&Point::m1(0.0, 1.0), 1e-4).unwrap();
        assert_abs_diff_eq!(fd.d_x(), 3.0, epsilon = 1e-7);
    }

    #[test]
    fn fd_jet_constant() {
        let f = ScalarField::from_expr(1, Expr::c(4.25)).unwrap();
        let fd = f.fd_jet(&Point::m1(0.3, -0.7), 1e-4).unwrap();
        assert_abs_diff_eq!(fd.d_x(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fd.d_xx(), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fd.d_tau[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn determinism() {
        let f = ScalarField::from_expr(1, (Expr::x() * Expr::tau(0)).sin()).unwrap();
        let p = Point::m1(0.37, 1.41);
        let a = f.jet(&p, 2).unwrap();
        let b = f.jet(&p, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn masked_point_rejected() {
        let f = field_x_squared().with_mask(Mask::new(Expr::x(), 1e-3));
        assert_eq!(
            f.value(&Point::m1(0.0, 1e-4)).unwrap_err(),
            Error::SingularPoint
        );
        assert!(f.value(&Point::m1(0.0, 0.5)).is_ok());
    }

    #[test]
    fn stencil_near_mask_rejected() {
        let f = field_x_squared().with_mask(Mask::new(Expr::x(), 1e-3));
        // center fine, but x - 2h crosses the mask
        let err = f.fd_jet(&Point::m1(0.0, 2.5e-3), 1e-3).unwrap_err();
        assert_eq!(err, Error::SingularStencil);
    }

    #[test]
    fn unsupported_order() {
        let f = field_x_squared();
        let err = f.jet(&Point::m1(0.0, 1.0), 5).unwrap_err();
        assert!(matches!(
            err,
            Error::UnsupportedOrder {
                requested: 5,
                max: 4
            }
        ));
    }

    #[test]
    fn domain_enforced() {
        let f = field_x_squared().with_domain(DomainBox::new(alloc::vec![(0.0, 1.0)], None));
        assert_eq!(
            f.value(&Point::m1(2.0, 0.0)).unwrap_err(),
            Error::OutOfDomain
        );
    }

    #[test]
    fn sampled_field_jet() {
        let g = |tau: &[f64], x: f64| (x - tau[0]).exp();
        let f = ScalarField::sampled(1, Arc::new(g), 1e-3);
        let jet = f.jet(&Point::m1(0.0, 0.0), 2).unwrap();
        assert_abs_diff_eq!(jet.d_tau[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jet.d_x(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jet.d_xx(), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn third_and_fourth_spatial_orders() {
        // u = x^4: u_xxx = 24 x, u_xxxx = 24
        let f = ScalarField::from_expr(1, Expr::x().powi(4)).unwrap();
        let jet = f.jet(&Point::m1(0.0, 1.5), 4).unwrap();
        assert_abs_diff_eq!(jet.d_space[2], 24.0 * 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(jet.d_space[3], 24.0, epsilon = 1e-10);
    }
}
