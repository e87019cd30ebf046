//! Coordinate and scaling transformations between the general and canonical
//! forms of the equation: per-axis time rescaling, the logarithmic special
//! case, scaling normalization of the cubic reaction, the wave-frame shift,
//! and the two-time characteristic transformation with its first integral.
//!
//! Every transformation is residual-checkable: forward coordinates are
//! expression-backed (quadrature values carry closed-form derivatives), so
//! pulled-back solutions can be verified by exact jets in the source
//! coordinates.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{Expr, Map2Fn, MapFn};
use crate::field::{DomainBox, Point, ScalarField};
use crate::grid::Grid;
use crate::math;
use crate::quad;
use crate::verify::{point_from_coords, Report};

/// Pass tolerance for the defining linear system of a transformation.
pub const TRANSFORM_SYSTEM_TOL: f64 = 1e-8;

/// Jacobian-determinant threshold below which a characteristic
/// transformation is rejected as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

const COEFF_SAMPLES: usize = 257;
const CERT_LATTICE: usize = 9;
const TRACE_STEP: f64 = 1e-3;
const TRACE_FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    TimeRescale,
    Log,
    Scaling,
    ShiftY,
    Characteristic,
}

impl TransformKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransformKind::TimeRescale => "time_rescale",
            TransformKind::Log => "log",
            TransformKind::Scaling => "scaling",
            TransformKind::ShiftY => "shift_y",
            TransformKind::Characteristic => "characteristic",
        }
    }
}

type InverseFn = Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>;

#[derive(Clone)]
enum InverseMap {
    Closed { tau: Vec<Expr>, x: Expr },
    Numeric(InverseFn),
}

/// An invertible coordinate map from source coordinates `t` to target
/// coordinates `tau`, optionally scaling the amplitude of `u`
/// (`u_target = amplitude * u_source`).
#[derive(Clone)]
pub struct Transformation {
    kind: TransformKind,
    m: usize,
    forward_tau: Vec<Expr>,
    forward_x: Expr,
    amplitude: f64,
    inverse: InverseMap,
    domain: DomainBox,
}

impl core::fmt::Debug for Transformation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Transformation")
            .field("kind", &self.kind)
            .field("m", &self.m)
            .field("amplitude", &self.amplitude)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Transformation {
    /// Assemble a transformation from closed-form coordinate expressions.
    pub fn closed_form(
        kind: TransformKind,
        forward_tau: Vec<Expr>,
        forward_x: Expr,
        inverse_tau: Vec<Expr>,
        inverse_x: Expr,
        amplitude: f64,
        domain: DomainBox,
    ) -> Result<Transformation> {
        if forward_tau.len() != domain.m() || inverse_tau.len() != domain.m() {
            return Err(Error::DimensionMismatch {
                expected: domain.m(),
                got: forward_tau.len(),
            });
        }
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(Error::BadParameter(
                "amplitude must be finite and nonzero".into(),
            ));
        }
        Ok(Transformation {
            kind,
            m: domain.m(),
            forward_tau,
            forward_x,
            amplitude,
            inverse: InverseMap::Closed {
                tau: inverse_tau,
                x: inverse_x,
            },
            domain,
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Number of time coordinates (preserved by every kind here).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn forward_exprs(&self) -> (&[Expr], &Expr) {
        (&self.forward_tau, &self.forward_x)
    }

    /// The j-th forward time coordinate as an evaluable field over the
    /// source coordinates (used for jet-based system checks).
    pub fn component_field(&self, j: usize) -> Result<ScalarField> {
        if j >= self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: j,
            });
        }
        ScalarField::from_expr(self.m, self.forward_tau[j].clone())
    }

    /// Map a source point to target coordinates.
    pub fn forward_point(&self, p: &Point) -> Result<Point> {
        if p.tau.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: p.tau.len(),
            });
        }
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain);
        }
        let tau = self
            .forward_tau
            .iter()
            .map(|e| e.eval_f64(&p.tau, p.x))
            .collect();
        Ok(Point::new(tau, self.forward_x.eval_f64(&p.tau, p.x)))
    }

    /// Map a target point back to source coordinates.
    pub fn inverse_point(&self, p: &Point) -> Result<Point> {
        if p.tau.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: p.tau.len(),
            });
        }
        match &self.inverse {
            InverseMap::Closed { tau, x } => {
                let t = tau.iter().map(|e| e.eval_f64(&p.tau, p.x)).collect();
                Ok(Point::new(t, x.eval_f64(&p.tau, p.x)))
            }
            InverseMap::Numeric(f) => f(p),
        }
    }

    /// Pull a solution of the target equation back to source coordinates:
    /// `p -> amplitude^-1 * field(forward(p))`. The result carries the
    /// transformation's domain of validity and the transported mask.
    pub fn pullback(&self, field: &ScalarField) -> Result<ScalarField> {
        if field.m() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: field.m(),
            });
        }
        let pulled = field.composed(
            self.m,
            &self.forward_tau,
            &self.forward_x,
            1.0 / self.amplitude,
        )?;
        Ok(pulled.with_domain(self.domain.clone()))
    }
}

fn require_single_variable(e: &Expr, what: &'static str) -> Result<()> {
    if e.max_tau_index().is_some() {
        return Err(Error::UnsupportedForm(what));
    }
    Ok(())
}

fn finite_axis(domain: &DomainBox, i: usize) -> Result<(f64, f64)> {
    let (lo, hi) = domain.tau[i];
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BadRange(format!(
            "axis {i}: need finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    Ok((lo, hi))
}

/// Solve `f(t) = 0` on `[lo, hi]` by bisection; `None` without a sign change.
fn bisect(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if math::abs(b - a) <= 1e-15 * (1.0 + math::abs(a).max(math::abs(b))) {
            break;
        }
    }
    Some(0.5 * (a + b))
}

/// Per-variable time rescaling `tau^i(t^i) = int dt/h^i(t^i)`, computed by
/// adaptive quadrature anchored at the lower edge of the domain (additive
/// constants fixed to zero). Each `h^i` is a single-variable expression in
/// [`Expr::X`] and must keep a fixed sign on its axis.
pub fn time_rescale(h: &[Expr], domain: &DomainBox) -> Result<Transformation> {
    build_rescale(h, domain, TransformKind::TimeRescale)
}

/// Like [`time_rescale`], but when a coefficient vanishes inside the
/// requested box the construction shrinks each axis to the connected
/// sub-domain containing the lower edge on which the coefficient keeps a
/// fixed sign, and returns the sub-domain actually used alongside the
/// transformation.
pub fn time_rescale_on_subdomain(
    h: &[Expr],
    domain: &DomainBox,
) -> Result<(Transformation, DomainBox)> {
    let m = domain.m();
    if h.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: h.len(),
        });
    }
    let mut tau = Vec::with_capacity(m);
    for (i, hi) in h.iter().enumerate() {
        require_single_variable(hi, "time coefficient must depend on its own variable only")?;
        let (lo, hi_edge) = finite_axis(domain, i)?;
        let sign_at_lo = hi.eval_single(lo);
        if math::abs(sign_at_lo) < 1e-12 {
            return Err(Error::CoefficientVanishes { axis: i, at: lo });
        }
        let mut last_good = lo;
        for s in 1..COEFF_SAMPLES {
            let t = lo + (hi_edge - lo) * (s as f64) / ((COEFF_SAMPLES - 1) as f64);
            let v = hi.eval_single(t);
            if math::abs(v) < 1e-12 || (v > 0.0) != (sign_at_lo > 0.0) {
                break;
            }
            last_good = t;
        }
        if last_good <= lo {
            return Err(Error::CoefficientVanishes { axis: i, at: lo });
        }
        tau.push((lo, last_good));
    }
    let used = DomainBox::new(tau, domain.x);
    let transform = build_rescale(h, &used, TransformKind::TimeRescale)?;
    Ok((transform, used))
}

/// The logarithmic rescaling `tau^i = ln t^i` (the `h^i(t) = t` special
/// case) in closed form, valid for positive times.
pub fn log_time(m: usize, domain: DomainBox) -> Result<Transformation> {
    if domain.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: domain.m(),
        });
    }
    for i in 0..m {
        let (lo, _) = finite_axis(&domain, i)?;
        if lo <= 0.0 {
            return Err(Error::BadParameter(format!(
                "log transform needs t^{} > 0",
                i + 1
            )));
        }
    }
    let forward: Vec<Expr> = (0..m).map(|i| Expr::tau(i).ln()).collect();
    let inverse: Vec<Expr> = (0..m).map(|i| Expr::tau(i).exp()).collect();
    Transformation::closed_form(
        TransformKind::Log,
        forward,
        Expr::x(),
        inverse,
        Expr::x(),
        1.0,
        domain,
    )
}

fn build_rescale(h: &[Expr], domain: &DomainBox, kind: TransformKind) -> Result<Transformation> {
    let m = domain.m();
    if h.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: h.len(),
        });
    }
    let mut maps = Vec::with_capacity(m);
    for (i, hi) in h.iter().enumerate() {
        require_single_variable(hi, "time coefficient must depend on its own variable only")?;
        let (lo, hi_edge) = finite_axis(domain, i)?;
        for s in 0..COEFF_SAMPLES {
            let t = lo + (hi_edge - lo) * (s as f64) / ((COEFF_SAMPLES - 1) as f64);
            if math::abs(hi.eval_single(t)) < 1e-12 {
                return Err(Error::CoefficientVanishes { axis: i, at: t });
            }
        }
        let integrand = hi.clone();
        let value = move |t: f64| {
            quad::integrate(
                &|s| 1.0 / integrand.eval_single(s),
                lo,
                t,
                quad::DEFAULT_TOL,
            )
        };
        let derivative = Expr::c(1.0) / hi.clone();
        maps.push(Arc::new(MapFn::new(
            "time_rescale",
            Box::new(value),
            derivative,
        )));
    }

    let forward: Vec<Expr> = maps
        .iter()
        .enumerate()
        .map(|(i, mp)| Expr::map(mp.clone(), Expr::tau(i)))
        .collect();

    let inv_maps = maps.clone();
    let inv_domain = domain.clone();
    let invert = move |p: &Point| -> Result<Point> {
        let mut t = Vec::with_capacity(p.tau.len());
        for (i, target) in p.tau.iter().enumerate() {
            let (lo, hi_edge) = inv_domain.tau[i];
            let mp = &inv_maps[i];
            let root =
                bisect(&|s| mp.value_at(s) - target, lo, hi_edge).ok_or(Error::OutOfDomain)?;
            t.push(root);
        }
        Ok(Point::new(t, p.x))
    };

    Ok(Transformation {
        kind,
        m,
        forward_tau: forward,
        forward_x: Expr::x(),
        amplitude: 1.0,
        inverse: InverseMap::Numeric(Arc::new(invert)),
        domain: domain.clone(),
    })
}

/// Scaling normalization of the cubic-reaction equation: maps solutions of
/// the `(mu, a, b)` equation to the normalized one via
/// `u* = (a/b) u`, `x* = (|b|/sqrt(mu a)) x`, `tau*^i = (b^2/a) tau^i`.
pub fn scaling_normalize(m: usize, mu: f64, a: f64, b: f64) -> Result<Transformation> {
    if !(mu > 0.0) || !(a > 0.0) || b == 0.0 || !b.is_finite() {
        return Err(Error::BadParameter(format!(
            "scaling needs mu > 0, a > 0, b != 0; got ({mu}, {a}, {b})"
        )));
    }
    let beta = math::abs(b) / math::sqrt(mu * a);
    let gamma = b * b / a;
    let forward: Vec<Expr> = (0..m).map(|i| Expr::c(gamma) * Expr::tau(i)).collect();
    let inverse: Vec<Expr> = (0..m)
        .map(|i| Expr::c(1.0 / gamma) * Expr::tau(i))
        .collect();
    Transformation::closed_form(
        TransformKind::Scaling,
        forward,
        Expr::c(beta) * Expr::x(),
        inverse,
        Expr::c(1.0 / beta) * Expr::x(),
        a / b,
        DomainBox::unbounded(m),
    )
}

/// Wave-frame shift `(tau, x) -> (tau, y)` with `y = x + k tau^m`.
pub fn shift_to_wave_frame(k: f64, m: usize) -> Result<Transformation> {
    if m < 1 {
        return Err(Error::BadParameter(
            "need at least one time coordinate".into(),
        ));
    }
    let taus = Expr::identity_taus(m);
    Transformation::closed_form(
        TransformKind::ShiftY,
        taus.clone(),
        Expr::x() + Expr::c(k) * Expr::tau(m - 1),
        taus,
        Expr::x() - Expr::c(k) * Expr::tau(m - 1),
        1.0,
        DomainBox::unbounded(m),
    )
}

/// A first integral of the characteristic ODE `dt^1/h^1 = dt^2/h^2`: a
/// function constant along characteristics, used to label them.
#[derive(Clone, Debug)]
pub enum FirstIntegral {
    /// Closed-form expression over `(t^1, t^2)` as `Tau(0), Tau(1)`.
    Closed(Expr),
    /// Numerically traced labeling.
    Traced(TracedIntegral),
}

/// Labels characteristics by integrating the characteristic ODE back to the
/// transversal line `t^1 = anchor` with a classical 4th-order step; the
/// label of a point is the `t^2` value where its characteristic crosses the
/// line. Jets through traced labels use central differences, so transforms
/// built from them meet the relaxed (1e-8) tolerances only.
#[derive(Clone)]
pub struct TracedIntegral {
    h1: Arc<Expr>,
    h2: Arc<Expr>,
    anchor: f64,
    step: f64,
}

impl core::fmt::Debug for TracedIntegral {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TracedIntegral")
            .field("anchor", &self.anchor)
            .field("step", &self.step)
            .finish()
    }
}

impl TracedIntegral {
    pub fn new(h1: Expr, h2: Expr, anchor: f64) -> TracedIntegral {
        TracedIntegral {
            h1: Arc::new(h1),
            h2: Arc::new(h2),
            anchor,
            step: TRACE_STEP,
        }
    }

    fn slope(&self, t1: f64, t2: f64) -> f64 {
        let tau = [t1, t2];
        self.h2.eval_f64(&tau, 0.0) / self.h1.eval_f64(&tau, 0.0)
    }

    /// Label of the characteristic through `(t1, t2)`.
    pub fn label(&self, t1: f64, t2: f64) -> f64 {
        let span = self.anchor - t1;
        if span == 0.0 {
            return t2;
        }
        let steps = math::ceil(math::abs(span) / self.step).max(1.0) as usize;
        let h = span / steps as f64;
        let mut s = t1;
        let mut y = t2;
        for _ in 0..steps {
            let k1 = self.slope(s, y);
            let k2 = self.slope(s + 0.5 * h, y + 0.5 * h * k1);
            let k3 = self.slope(s + 0.5 * h, y + 0.5 * h * k2);
            let k4 = self.slope(s + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s += h;
        }
        y
    }
}

impl FirstIntegral {
    /// The labeling as an expression over `(t^1, t^2)`. Traced labels become
    /// bivariate numeric nodes with finite-difference partial derivatives.
    pub fn to_expr(&self) -> Expr {
        match self {
            FirstIntegral::Closed(e) => e.clone(),
            FirstIntegral::Traced(tr) => {
                let v = tr.clone();
                let value = move |a: f64, b: f64| v.label(a, b);
                let d1t = tr.clone();
                let d1 = move |a: f64, b: f64| {
                    let h = TRACE_FD_STEP;
                    (d1t.label(a - 2.0 * h, b) - 8.0 * d1t.label(a - h, b)
                        + 8.0 * d1t.label(a + h, b)
                        - d1t.label(a + 2.0 * h, b))
                        / (12.0 * h)
                };
                let d2t = tr.clone();
                let d2 = move |a: f64, b: f64| {
                    let h = TRACE_FD_STEP;
                    (d2t.label(a, b - 2.0 * h) - 8.0 * d2t.label(a, b - h)
                        + 8.0 * d2t.label(a, b + h)
                        - d2t.label(a, b + 2.0 * h))
                        / (12.0 * h)
                };
                Expr::map2(
                    Arc::new(Map2Fn::new(
                        "traced_integral",
                        Box::new(value),
                        Box::new(d1),
                        Box::new(d2),
                    )),
                    Expr::tau(0),
                    Expr::tau(1),
                )
            }
        }
    }

    fn value(&self, t1: f64, t2: f64) -> f64 {
        match self {
            FirstIntegral::Closed(e) => e.eval_f64(&[t1, t2], 0.0),
            FirstIntegral::Traced(tr) => tr.label(t1, t2),
        }
    }

    /// `h^1 dI/dt^1 + h^2 dI/dt^2` at the point; zero for a true first
    /// integral.
    pub fn invariance_residual(&self, h1: &Expr, h2: &Expr, t1: f64, t2: f64) -> Result<f64> {
        let field = ScalarField::from_expr(2, self.to_expr())?;
        let p = Point::new(alloc::vec![t1, t2], 0.0);
        let jet = field.jet(&p, 0)?;
        let tau = [t1, t2];
        Ok(h1.eval_f64(&tau, 0.0) * jet.d_tau[0] + h2.eval_f64(&tau, 0.0) * jet.d_tau[1])
    }
}

/// Two-time transformation to canonical form when the coefficients are not
/// separable: `H^1 = int dt^1/h^1 + W1(I)`, `H^2 = int dt^1/h^1 + W2(I)`
/// with `I` a first integral of the characteristic ODE. `h1` must depend on
/// `t^1` only; `W1`, `W2` are single-variable expressions in [`Expr::X`] and
/// must be independent (sampled Jacobian determinant above the degeneracy
/// threshold). The construction is certified against the defining linear
/// system before it is returned.
pub fn characteristic_transform(
    h1: &Expr,
    h2: &Expr,
    integral: &FirstIntegral,
    w1: &Expr,
    w2: &Expr,
    domain: &DomainBox,
) -> Result<Transformation> {
    if domain.m() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: domain.m(),
        });
    }
    if h1.uses_tau(1) || h1.uses_x() {
        return Err(Error::UnsupportedForm("h1 must be a function of t^1 only"));
    }
    if h2.uses_x() {
        return Err(Error::UnsupportedForm(
            "h2 must be a function of (t^1, t^2)",
        ));
    }
    require_single_variable(w1, "W1 must be a single-variable function")?;
    require_single_variable(w2, "W2 must be a single-variable function")?;

    let (lo1, hi1) = finite_axis(domain, 0)?;
    let (lo2, hi2) = finite_axis(domain, 1)?;
    let h1_single = h1.subst(&[Expr::x(), Expr::x()], &Expr::x());
    for s in 0..COEFF_SAMPLES {
        let t = lo1 + (hi1 - lo1) * (s as f64) / ((COEFF_SAMPLES - 1) as f64);
        if math::abs(h1_single.eval_single(t)) < 1e-12 {
            return Err(Error::CoefficientVanishes { axis: 0, at: t });
        }
    }

    // Lower-edge-anchored antiderivative of 1/h1 and its exact derivative.
    let integrand = h1_single.clone();
    let value = move |t: f64| {
        quad::integrate(
            &|s| 1.0 / integrand.eval_single(s),
            lo1,
            t,
            quad::DEFAULT_TOL,
        )
    };
    let q = Arc::new(MapFn::new(
        "char_antiderivative",
        Box::new(value),
        Expr::c(1.0) / h1_single.clone(),
    ));

    let i_expr = integral.to_expr();
    let h_rows = [
        Expr::map(q.clone(), Expr::tau(0)) + w1.subst(&[], &i_expr),
        Expr::map(q.clone(), Expr::tau(0)) + w2.subst(&[], &i_expr),
    ];

    // Certify the first integral, the system rows, and non-degeneracy on a
    // sample lattice.
    let fields: Vec<ScalarField> = h_rows
        .iter()
        .map(|e| ScalarField::from_expr(2, e.clone()))
        .collect::<Result<_>>()?;
    let mut max_invariance = 0.0f64;
    let mut max_system = 0.0f64;
    for i in 0..CERT_LATTICE {
        for j in 0..CERT_LATTICE {
            let t1 = lo1 + (hi1 - lo1) * (i as f64) / ((CERT_LATTICE - 1) as f64);
            let t2 = lo2 + (hi2 - lo2) * (j as f64) / ((CERT_LATTICE - 1) as f64);
            max_invariance =
                max_invariance.max(math::abs(integral.invariance_residual(h1, h2, t1, t2)?));
            let p = Point::new(alloc::vec![t1, t2], 0.0);
            let tau = [t1, t2];
            let (c1, c2) = (h1.eval_f64(&tau, 0.0), h2.eval_f64(&tau, 0.0));
            let jets = [fields[0].jet(&p, 0)?, fields[1].jet(&p, 0)?];
            for jet in &jets {
                max_system = max_system.max(math::abs(c1 * jet.d_tau[0] + c2 * jet.d_tau[1] - 1.0));
            }
            let det = jets[0].d_tau[0] * jets[1].d_tau[1] - jets[0].d_tau[1] * jets[1].d_tau[0];
            if math::abs(det) < DEGENERACY_TOL {
                return Err(Error::DegenerateTransform);
            }
        }
    }
    if max_invariance > TRANSFORM_SYSTEM_TOL {
        return Err(Error::CertificationFailed {
            what: "first integral invariance",
            max_residual: max_invariance,
        });
    }
    if max_system > TRANSFORM_SYSTEM_TOL {
        return Err(Error::CertificationFailed {
            what: "characteristic transform system",
            max_residual: max_system,
        });
    }

    // Observed label range on the lattice, padded, for the inverse search.
    let mut i_min = f64::INFINITY;
    let mut i_max = f64::NEG_INFINITY;
    for i in 0..CERT_LATTICE {
        for j in 0..CERT_LATTICE {
            let t1 = lo1 + (hi1 - lo1) * (i as f64) / ((CERT_LATTICE - 1) as f64);
            let t2 = lo2 + (hi2 - lo2) * (j as f64) / ((CERT_LATTICE - 1) as f64);
            let v = integral.value(t1, t2);
            i_min = i_min.min(v);
            i_max = i_max.max(v);
        }
    }
    let pad = 0.1 * (i_max - i_min).max(1e-6);
    let (i_lo, i_hi) = (i_min - pad, i_max + pad);

    let inv_q = q.clone();
    let inv_w1 = w1.clone();
    let inv_w2 = w2.clone();
    let inv_integral = integral.clone();
    let invert = move |p: &Point| -> Result<Point> {
        let (target1, target2) = (p.tau[0], p.tau[1]);
        // W2(I) - W1(I) = H^2 - H^1 pins the label,
        let gap = target2 - target1;
        let label = bisect(
            &|v| inv_w2.eval_single(v) - inv_w1.eval_single(v) - gap,
            i_lo,
            i_hi,
        )
        .ok_or(Error::OutOfDomain)?;
        // the antiderivative pins t^1,
        let q_target = target1 - inv_w1.eval_single(label);
        let t1 = bisect(&|s| inv_q.value_at(s) - q_target, lo1, hi1).ok_or(Error::OutOfDomain)?;
        // and the labeling pins t^2.
        let t2 =
            bisect(&|s| inv_integral.value(t1, s) - label, lo2, hi2).ok_or(Error::OutOfDomain)?;
        Ok(Point::new(alloc::vec![t1, t2], p.x))
    };

    Ok(Transformation {
        kind: TransformKind::Characteristic,
        m: 2,
        forward_tau: alloc::vec![h_rows[0].clone(), h_rows[1].clone()],
        forward_x: Expr::x(),
        amplitude: 1.0,
        inverse: InverseMap::Numeric(Arc::new(invert)),
        domain: domain.clone(),
    })
}

/// Evaluate `h^1 dH^j/dt^1 + h^2 dH^j/dt^2 - 1` for both rows of a two-time
/// transformation at every grid point and report the worst residual.
pub fn verify_transform_system(
    h1: &Expr,
    h2: &Expr,
    transform: &Transformation,
    grid: &Grid,
) -> Result<Report> {
    if transform.m() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: transform.m(),
        });
    }
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: grid.dim(),
        });
    }
    let fields = [transform.component_field(0)?, transform.component_field(1)?];
    let mut samples = Vec::with_capacity(grid.len());
    for coords in grid.points() {
        let p = point_from_coords(coords, 2);
        let tau = [p.tau[0], p.tau[1]];
        let (c1, c2) = (h1.eval_f64(&tau, 0.0), h2.eval_f64(&tau, 0.0));
        let mut worst = 0.0f64;
        for field in &fields {
            let jet = field.jet(&p, 0)?;
            worst = worst.max(math::abs(c1 * jet.d_tau[0] + c2 * jet.d_tau[1] - 1.0));
        }
        samples.push(worst);
    }
    Report::from_samples(samples, 0, TRANSFORM_SYSTEM_TOL, grid.axes().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::pde::{PdeSpec, ReactionTerm};
    use crate::rng::SplitMix64;
    use approx::assert_abs_diff_eq;

    fn unit_box(m: usize) -> DomainBox {
        DomainBox::new((0..m).map(|_| (0.0, 1.0)).collect(), None)
    }

    #[test]
    fn rescale_reciprocal_matches_log() {
        // h(t) = t on [1, 10]: tau = ln t, anchored at ln 1 = 0
        let domain = DomainBox::new(alloc::vec![(1.0, 10.0)], None);
        let t = time_rescale(&[Expr::x()], &domain).unwrap();
        for i in 0..40 {
            let s = 1.0 + 9.0 * (i as f64) / 39.0;
            let p = t.forward_point(&Point::m1(s, 0.0)).unwrap();
            assert_abs_diff_eq!(p.tau[0], s.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn rescale_unit_coefficient_is_shift() {
        let domain = DomainBox::new(alloc::vec![(2.0, 5.0)], None);
        let t = time_rescale(&[Expr::c(1.0)], &domain).unwrap();
        let p = t.forward_point(&Point::m1(3.5, 1.0)).unwrap();
        assert_abs_diff_eq!(p.tau[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rescale_quadratic_coefficient() {
        // h(t) = t^2 on [1, 4]: tau = 1 - 1/t
        let domain = DomainBox::new(alloc::vec![(1.0, 4.0)], None);
        let t = time_rescale(&[Expr::x().powi(2)], &domain).unwrap();
        for i in 0..30 {
            let s = 1.0 + 3.0 * (i as f64) / 29.0;
            let p = t.forward_point(&Point::m1(s, 0.0)).unwrap();
            assert_abs_diff_eq!(p.tau[0], 1.0 - 1.0 / s, epsilon = 1e-9);
        }
    }

    #[test]
    fn rescale_monotone_with_coefficient_sign() {
        // negative h: tau decreasing
        let domain = DomainBox::new(alloc::vec![(0.0, 1.0)], None);
        let t = time_rescale(&[Expr::c(-2.0)], &domain).unwrap();
        let a = t.forward_point(&Point::m1(0.2, 0.0)).unwrap().tau[0];
        let b = t.forward_point(&Point::m1(0.8, 0.0)).unwrap().tau[0];
        assert!(b < a);
    }

    #[test]
    fn rescale_vanishing_coefficient_rejected() {
        let domain = DomainBox::new(alloc::vec![(-1.0, 1.0)], None);
        let err = time_rescale(&[Expr::x()], &domain).unwrap_err();
        assert!(matches!(err, Error::CoefficientVanishes { axis: 0, .. }));
    }

    #[test]
    fn rescale_shrinks_to_sign_fixed_subdomain() {
        // h(t) = t vanishes at 0; starting from the lower edge -2 the
        // usable sub-domain stops just short of the zero.
        let domain = DomainBox::new(alloc::vec![(-2.0, 1.0)], None);
        let (t, used) = time_rescale_on_subdomain(&[Expr::x()], &domain).unwrap();
        assert!(
            used.tau[0].1 < 0.0 && used.tau[0].1 > -0.05,
            "used {:?}",
            used.tau[0]
        );
        // tau = ln|t| - ln 2 on the negative component
        let p = t.forward_point(&Point::m1(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.tau[0], (0.5f64).ln(), epsilon = 1e-8);
    }

    #[test]
    fn pullbacks_of_catalog_solutions() {
        // Every m = 1 catalog solution pulled back through a scaling map
        // solves the rescaled cubic equation; masks transport with the
        // substitution.
        use crate::solutions::{catalog, CatalogId, CatalogParams};
        let (mu, a, b) = (3.0, 5.0, -2.0);
        let t = scaling_normalize(1, mu, a, b).unwrap();
        let pde = PdeSpec::canonical(1, mu, ReactionTerm::Cubic { a, b }).unwrap();
        let grid = crate::grid::make_grid(&[[0.0, 1.0], [-3.0, 3.0]], &[20, 51]).unwrap();
        for id in [
            CatalogId::RationalM1,
            CatalogId::ExpM1,
            CatalogId::TanhFront,
            CatalogId::CothBranch,
        ] {
            let entry = catalog(id, &CatalogParams::default()).unwrap();
            let pulled = t.pullback(&entry.field).unwrap();
            let report = crate::verify::residual_report(&pde, &pulled, &grid, 1e-8).unwrap();
            assert!(
                report.pass,
                "{}: max residual {:.3e}",
                id.as_str(),
                report.max_abs_residual
            );
        }
    }

    #[test]
    fn scaling_examples() {
        // (1,1,1) is the identity
        let t = scaling_normalize(1, 1.0, 1.0, 1.0).unwrap();
        let p = t.forward_point(&Point::m1(0.7, -1.2)).unwrap();
        assert_abs_diff_eq!(p.tau[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(p.x, -1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.amplitude(), 1.0, epsilon = 1e-15);

        // (1,4,2): u* = 2u, x* = x, tau* = tau
        let t = scaling_normalize(1, 1.0, 4.0, 2.0).unwrap();
        let p = t.forward_point(&Point::m1(0.7, -1.2)).unwrap();
        assert_abs_diff_eq!(p.tau[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(p.x, -1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.amplitude(), 2.0, epsilon = 1e-15);

        // (2,1,-1): u* = -u, x* = x/sqrt(2), tau* = tau
        let t = scaling_normalize(1, 2.0, 1.0, -1.0).unwrap();
        let p = t.forward_point(&Point::m1(0.7, -1.2)).unwrap();
        assert_abs_diff_eq!(p.tau[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(p.x, -1.2 / 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.amplitude(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn scaling_bad_parameters() {
        assert!(scaling_normalize(1, 0.0, 1.0, 1.0).is_err());
        assert!(scaling_normalize(1, 1.0, -1.0, 1.0).is_err());
        assert!(scaling_normalize(1, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn shift_examples() {
        let t = shift_to_wave_frame(0.0, 1).unwrap();
        let p = t.forward_point(&Point::m1(0.3, 0.8)).unwrap();
        assert_abs_diff_eq!(p.x, 0.8, epsilon = 1e-15);

        let t = shift_to_wave_frame(1.0, 2).unwrap();
        let p = t
            .forward_point(&Point::new(alloc::vec![0.0, 3.0], 2.0))
            .unwrap();
        assert_abs_diff_eq!(p.x, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn round_trips_within_1e10() {
        let mut rng = SplitMix64::new(11);
        let domain = DomainBox::new(alloc::vec![(1.0, 4.0)], None);
        let transforms = alloc::vec![
            time_rescale(&[Expr::x()], &domain).unwrap(),
            log_time(1, domain.clone()).unwrap(),
            scaling_normalize(1, 3.0, 5.0, -2.0).unwrap(),
            shift_to_wave_frame(-0.7, 1).unwrap(),
        ];
        for t in &transforms {
            for _ in 0..100 {
                let p = Point::m1(rng.in_range(1.0, 4.0), rng.in_range(-2.0, 2.0));
                let q = t.forward_point(&p).unwrap();
                let back = t.inverse_point(&q).unwrap();
                assert_abs_diff_eq!(back.tau[0], p.tau[0], epsilon = 1e-10);
                assert_abs_diff_eq!(back.x, p.x, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn characteristic_worked_example() {
        // h1 = 1, h2 = t^1, I = t^2 - (t^1)^2/2, W1 = 0, W2 = id:
        // H^1 = t^1, H^2 = t^1 + t^2 - (t^1)^2/2, both rows exactly 1.
        let h1 = Expr::c(1.0);
        let h2 = Expr::tau(0);
        let i = FirstIntegral::Closed(Expr::tau(1) - Expr::tau(0).powi(2) / Expr::c(2.0));
        let t = characteristic_transform(&h1, &h2, &i, &Expr::c(0.0), &Expr::x(), &unit_box(2))
            .unwrap();

        let p = Point::new(alloc::vec![0.6, 0.3], 0.0);
        let q = t.forward_point(&p).unwrap();
        assert_abs_diff_eq!(q.tau[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(q.tau[1], 0.6 + 0.3 - 0.18, epsilon = 1e-12);

        let grid = make_grid(&[[0.0, 1.0], [0.0, 1.0]], &[20, 20]).unwrap();
        let report = verify_transform_system(&h1, &h2, &t, &grid).unwrap();
        assert!(
            report.max_abs_residual <= 1e-10,
            "max {}",
            report.max_abs_residual
        );

        // round trip
        let back = t.inverse_point(&q).unwrap();
        assert_abs_diff_eq!(back.tau[0], 0.6, epsilon = 1e-10);
        assert_abs_diff_eq!(back.tau[1], 0.3, epsilon = 1e-10);
    }

    #[test]
    fn characteristic_separable_log_type() {
        // h1 = t^1, h2 = t^2 with I = ln t^2 - ln t^1 reproduces the
        // logarithmic rescaling up to relabeling: H^2 = ln t^2 (lo = 1).
        let h1 = Expr::tau(0);
        let h2 = Expr::tau(1);
        let i = FirstIntegral::Closed(Expr::tau(1).ln() - Expr::tau(0).ln());
        let domain = DomainBox::new(alloc::vec![(1.0, 3.0), (1.0, 3.0)], None);
        let t = characteristic_transform(&h1, &h2, &i, &Expr::c(0.0), &Expr::x(), &domain).unwrap();
        for (t1, t2) in [(1.0, 1.0), (2.0, 1.5), (2.9, 2.2)] {
            let q = t
                .forward_point(&Point::new(alloc::vec![t1, t2], 0.0))
                .unwrap();
            assert_abs_diff_eq!(q.tau[0], t1.ln(), epsilon = 1e-9);
            assert_abs_diff_eq!(q.tau[1], t2.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_w_rejected() {
        let h1 = Expr::c(1.0);
        let h2 = Expr::tau(0);
        let i = FirstIntegral::Closed(Expr::tau(1) - Expr::tau(0).powi(2) / Expr::c(2.0));
        let err = characteristic_transform(&h1, &h2, &i, &Expr::x(), &Expr::x(), &unit_box(2))
            .unwrap_err();
        assert_eq!(err, Error::DegenerateTransform);
    }

    #[test]
    fn identity_map_satisfies_unit_system() {
        // H^1 = t^1, H^2 = t^2 with h1 = h2 = 1: both rows are exactly 1.
        let t = Transformation::closed_form(
            TransformKind::Characteristic,
            alloc::vec![Expr::tau(0), Expr::tau(1)],
            Expr::x(),
            alloc::vec![Expr::tau(0), Expr::tau(1)],
            Expr::x(),
            1.0,
            unit_box(2),
        )
        .unwrap();
        let grid = make_grid(&[[0.0, 1.0], [0.0, 1.0]], &[5, 5]).unwrap();
        let report = verify_transform_system(&Expr::c(1.0), &Expr::c(1.0), &t, &grid).unwrap();
        assert_abs_diff_eq!(report.max_abs_residual, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wrong_map_large_system_residual() {
        // H^1 = (t^1)^2, H^2 = t^2 with h1 = 1, h2 = 0: row 1 residual 2t - 1.
        let t = Transformation::closed_form(
            TransformKind::Characteristic,
            alloc::vec![Expr::tau(0).powi(2), Expr::tau(1)],
            Expr::x(),
            alloc::vec![Expr::tau(0).sqrt(), Expr::tau(1)],
            Expr::x(),
            1.0,
            unit_box(2),
        )
        .unwrap();
        let grid = make_grid(&[[0.0, 1.0], [0.0, 1.0]], &[21, 5]).unwrap();
        let report = verify_transform_system(&Expr::c(1.0), &Expr::c(0.0), &t, &grid).unwrap();
        assert_abs_diff_eq!(report.max_abs_residual, 1.0, epsilon = 1e-12);
        assert!(!report.pass);
    }

    #[test]
    fn traced_integral_matches_closed_form() {
        // h1 = 1, h2 = t^1: label(t1, t2) = t2 - (t1)^2/2 at anchor 0.
        let traced = TracedIntegral::new(Expr::c(1.0), Expr::tau(0), 0.0);
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let t1 = rng.in_range(0.0, 1.0);
            let t2 = rng.in_range(0.0, 1.0);
            assert_abs_diff_eq!(traced.label(t1, t2), t2 - 0.5 * t1 * t1, epsilon = 1e-10);
        }
        // invariance through the finite-difference jets of the traced label
        let i = FirstIntegral::Traced(traced);
        for (t1, t2) in [(0.2, 0.4), (0.5, 0.9), (0.8, 0.1)] {
            let r = i
                .invariance_residual(&Expr::c(1.0), &Expr::tau(0), t1, t2)
                .unwrap();
            assert!(r.abs() <= 1e-8, "invariance residual {r}");
        }
    }

    #[test]
    fn traced_characteristic_transform_certifies() {
        let h1 = Expr::c(1.0);
        let h2 = Expr::tau(0);
        let i = FirstIntegral::Traced(TracedIntegral::new(h1.clone(), h2.clone(), 0.0));
        let t = characteristic_transform(&h1, &h2, &i, &Expr::c(0.0), &Expr::x(), &unit_box(2))
            .unwrap();
        let grid = make_grid(&[[0.0, 1.0], [0.0, 1.0]], &[8, 8]).unwrap();
        let report = verify_transform_system(&h1, &h2, &t, &grid).unwrap();
        assert!(
            report.max_abs_residual <= 1e-8,
            "max {}",
            report.max_abs_residual
        );
    }

    #[test]
    fn pullback_constant_through_scaling() {
        // u* = 1 pulled through (mu, a, b) = (1, 4, 2) gives u = 1/2, an
        // equilibrium of -4u^3 + 2u^2.
        let t = scaling_normalize(1, 1.0, 4.0, 2.0).unwrap();
        let one = ScalarField::from_expr(1, Expr::c(1.0)).unwrap();
        let u = t.pullback(&one).unwrap();
        let p = Point::m1(0.4, 1.3);
        assert_abs_diff_eq!(u.value(&p).unwrap(), 0.5, epsilon = 1e-15);
        let pde = PdeSpec::canonical(1, 1.0, ReactionTerm::Cubic { a: 4.0, b: 2.0 }).unwrap();
        assert_abs_diff_eq!(pde.residual(&u, &p).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_pullback_preserves_field() {
        let t = shift_to_wave_frame(0.0, 1).unwrap();
        let f = ScalarField::from_expr(1, (Expr::x() * Expr::c(0.3)).sin()).unwrap();
        let g = t.pullback(&f).unwrap();
        let p = Point::m1(0.2, 0.9);
        assert_abs_diff_eq!(f.value(&p).unwrap(), g.value(&p).unwrap(), epsilon = 1e-15);
    }
}
