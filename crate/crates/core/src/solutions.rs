//! The differential-constraint machinery and the closed-form solution
//! catalog for the normalized Huxley equation
//! `sum_i du/dtau^i = u_xx + u^2 - u^3`.
//!
//! The linear constraint `sum_i du/dtau^i = 0` is solved by any function of
//! the characteristic variables `omega_j = tau^m - tau^j` and the space
//! coordinate, which is what lets every m = 1 solution generalize to m
//! times with an arbitrary smooth function `P(omega)` riding along.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{Mask, Point, ScalarField};
use crate::grid::{make_grid, Grid};
use crate::pde::{PdeSpec, ReactionTerm};
use crate::rng::SplitMix64;
use crate::verify::residual_report;

const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Residual bound certified for every catalog entry at construction.
pub const CATALOG_TOL: f64 = 1e-8;

/// Masking threshold on rational/exponential denominators. Near a pole the
/// residual of the exact solution is dominated by rounding amplification
/// (terms grow like 1/denominator^3), and below about 1e-2 that noise floor
/// crosses the certified tolerance.
pub const DENOMINATOR_MASK: f64 = 1e-2;

/// Masked distance from the coth pole line in the wave coordinate.
pub const COTH_MASK: f64 = 1e-1;

const P_SIGN_SAMPLES: usize = 1000;

/// Characteristic coordinates `omega_j = tau^m - tau^j`, `j = 1..m-1`
/// (empty for a single time).
pub fn omega_coords(tau: &[f64]) -> Vec<f64> {
    match tau.split_last() {
        Some((last, rest)) => rest.iter().map(|t| last - t).collect(),
        None => Vec::new(),
    }
}

/// The same coordinates as expressions over `Tau(0)..Tau(m-1)`.
pub fn omega_exprs(m: usize) -> Vec<Expr> {
    (0..m.saturating_sub(1))
        .map(|j| Expr::tau(m - 1) - Expr::tau(j))
        .collect()
}

/// `sum_i du/dtau^i` at the point: zero for any field factoring through
/// `(omega, x)`, one for solutions of the inhomogeneous constraint.
pub fn constraint_residual(field: &ScalarField, p: &Point) -> Result<f64> {
    let jet = field.jet(p, 0)?;
    Ok(jet.d_tau.iter().sum())
}

/// A fixed library of smooth functions of the characteristic variables.
/// Keeping the library closed ensures every admissible `P` is smooth on all
/// of R^(m-1) and evaluable with dual arithmetic.
#[derive(Clone, Debug)]
pub enum ArbitraryFunction {
    Constant(f64),
    /// `offset + sum_j coeffs[j] omega_j`
    Linear {
        offset: f64,
        coeffs: Vec<f64>,
    },
    /// `amplitude * sin(sum_j freqs[j] omega_j + phase)`
    Sine {
        amplitude: f64,
        freqs: Vec<f64>,
        phase: f64,
    },
    /// `scale * exp(sum_j quad[j] omega_j^2 + lin[j] omega_j)`
    ExpQuad {
        scale: f64,
        quad: Vec<f64>,
        lin: Vec<f64>,
    },
    /// `sum_j sum_k coeffs[j][k] omega_j^(k+1)` (constants via `Constant`)
    Polynomial {
        coeffs: Vec<Vec<f64>>,
    },
    Sum(Box<ArbitraryFunction>, Box<ArbitraryFunction>),
    Product(Box<ArbitraryFunction>, Box<ArbitraryFunction>),
}

impl ArbitraryFunction {
    /// Number of omega variables referenced.
    pub fn arity(&self) -> usize {
        match self {
            ArbitraryFunction::Constant(_) => 0,
            ArbitraryFunction::Linear { coeffs, .. } => coeffs.len(),
            ArbitraryFunction::Sine { freqs, .. } => freqs.len(),
            ArbitraryFunction::ExpQuad { quad, lin, .. } => quad.len().max(lin.len()),
            ArbitraryFunction::Polynomial { coeffs } => coeffs.len(),
            ArbitraryFunction::Sum(a, b) | ArbitraryFunction::Product(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    /// Substitute omega expressions to obtain an expression over the full
    /// coordinates. `omega.len()` must cover the arity.
    pub fn expr(&self, omega: &[Expr]) -> Result<Expr> {
        if self.arity() > omega.len() {
            return Err(Error::DimensionMismatch {
                expected: omega.len(),
                got: self.arity(),
            });
        }
        Ok(self.expr_unchecked(omega))
    }

    fn expr_unchecked(&self, omega: &[Expr]) -> Expr {
        match self {
            ArbitraryFunction::Constant(c) => Expr::c(*c),
            ArbitraryFunction::Linear { offset, coeffs } => {
                let mut e = Expr::c(*offset);
                for (c, w) in coeffs.iter().zip(omega) {
                    if *c != 0.0 {
                        e = e + Expr::c(*c) * w.clone();
                    }
                }
                e
            }
            ArbitraryFunction::Sine {
                amplitude,
                freqs,
                phase,
            } => {
                let mut arg = Expr::c(*phase);
                for (fq, w) in freqs.iter().zip(omega) {
                    if *fq != 0.0 {
                        arg = arg + Expr::c(*fq) * w.clone();
                    }
                }
                Expr::c(*amplitude) * arg.sin()
            }
            ArbitraryFunction::ExpQuad { scale, quad, lin } => {
                let mut arg = Expr::c(0.0);
                for (q, w) in quad.iter().zip(omega) {
                    if *q != 0.0 {
                        arg = arg + Expr::c(*q) * w.clone().powi(2);
                    }
                }
                for (l, w) in lin.iter().zip(omega) {
                    if *l != 0.0 {
                        arg = arg + Expr::c(*l) * w.clone();
                    }
                }
                Expr::c(*scale) * arg.exp()
            }
            ArbitraryFunction::Polynomial { coeffs } => {
                let mut e = Expr::c(0.0);
                for (per_var, w) in coeffs.iter().zip(omega) {
                    for (k, c) in per_var.iter().enumerate() {
                        if *c != 0.0 {
                            e = e + Expr::c(*c) * w.clone().powi(k as i32 + 1);
                        }
                    }
                }
                e
            }
            ArbitraryFunction::Sum(a, b) => a.expr_unchecked(omega) + b.expr_unchecked(omega),
            ArbitraryFunction::Product(a, b) => a.expr_unchecked(omega) * b.expr_unchecked(omega),
        }
    }

    /// Direct evaluation at omega values.
    pub fn value(&self, omega: &[f64]) -> f64 {
        match self {
            ArbitraryFunction::Constant(c) => *c,
            ArbitraryFunction::Linear { offset, coeffs } => {
                offset + coeffs.iter().zip(omega).map(|(c, w)| c * w).sum::<f64>()
            }
            ArbitraryFunction::Sine {
                amplitude,
                freqs,
                phase,
            } => {
                let arg = phase + freqs.iter().zip(omega).map(|(f, w)| f * w).sum::<f64>();
                amplitude * crate::math::sin(arg)
            }
            ArbitraryFunction::ExpQuad { scale, quad, lin } => {
                let mut arg = 0.0;
                for (q, w) in quad.iter().zip(omega) {
                    arg += q * w * w;
                }
                for (l, w) in lin.iter().zip(omega) {
                    arg += l * w;
                }
                scale * crate::math::exp(arg)
            }
            ArbitraryFunction::Polynomial { coeffs } => {
                let mut v = 0.0;
                for (per_var, w) in coeffs.iter().zip(omega) {
                    let mut pw = 1.0;
                    for c in per_var {
                        pw *= w;
                        v += c * pw;
                    }
                }
                v
            }
            ArbitraryFunction::Sum(a, b) => a.value(omega) + b.value(omega),
            ArbitraryFunction::Product(a, b) => a.value(omega) * b.value(omega),
        }
    }

    /// A simple default for the given arity: a mild linear ramp.
    pub fn default_for_arity(arity: usize) -> ArbitraryFunction {
        if arity == 0 {
            return ArbitraryFunction::Constant(0.0);
        }
        let cycle = [0.4, -0.3, 0.2, -0.1];
        ArbitraryFunction::Linear {
            offset: 0.0,
            coeffs: (0..arity).map(|j| cycle[j % cycle.len()]).collect(),
        }
    }
}

/// Build the field `u(tau, x) = profile(omega(tau), x + k tau^m)` from a
/// profile expression in the variables `Tau(0)..Tau(m-2)` (the omegas) and
/// `X` (the wave coordinate). With m = 1 and a profile that ignores omega
/// this is a plane wave `u(x + k tau)`.
pub fn build_constraint_solution(profile: &Expr, k: f64, m: usize) -> Result<ScalarField> {
    if m < 1 {
        return Err(Error::BadParameter(
            "need at least one time coordinate".into(),
        ));
    }
    if let Some(top) = profile.max_tau_index() {
        if top >= m.saturating_sub(1) {
            return Err(Error::DimensionMismatch {
                expected: m.saturating_sub(1),
                got: top + 1,
            });
        }
    }
    let omega = omega_exprs(m);
    let y = Expr::x() + Expr::c(k) * Expr::tau(m - 1);
    ScalarField::from_expr(m, profile.subst(&omega, &y))
}

/// Compose a declared solution `phi` of the convective canonical equation
/// into `u(tau, x) = phi(tau, x + k tau^m + P(omega))`. The claim that the
/// result solves the canonical equation is certified by the verifier, not
/// by this constructor.
pub fn build_proposition_form(
    phi: &ScalarField,
    k: f64,
    p: &ArbitraryFunction,
    m: usize,
) -> Result<ScalarField> {
    if phi.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: phi.m(),
        });
    }
    let p_expr = p.expr(&omega_exprs(m))?;
    let x_sub = Expr::x() + Expr::c(k) * Expr::tau(m - 1) + p_expr;
    phi.composed(m, &Expr::identity_taus(m), &x_sub, 1.0)
}

/// Translate (and optionally reflect) a solution:
/// `u(tau + tau0, +/-x + x0)`. The canonical equation is invariant under
/// these, so residuals are preserved at mapped points.
pub fn symmetry_orbit(
    field: &ScalarField,
    tau0: &[f64],
    x0: f64,
    reflect: bool,
) -> Result<ScalarField> {
    if tau0.len() != field.m() {
        return Err(Error::DimensionMismatch {
            expected: field.m(),
            got: tau0.len(),
        });
    }
    let tau_subs: Vec<Expr> = tau0
        .iter()
        .enumerate()
        .map(|(i, t)| Expr::tau(i) + Expr::c(*t))
        .collect();
    let x_sub = if reflect {
        -Expr::x() + Expr::c(x0)
    } else {
        Expr::x() + Expr::c(x0)
    };
    field.composed(field.m(), &tau_subs, &x_sub, 1.0)
}

/// Identifiers of the closed-form catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogId {
    /// `u = sqrt(2) / (x - sqrt(2) tau^m + P(omega))`
    RationalFamily,
    /// `u = 1 / (1 + P(omega) exp(x/sqrt(2) - tau^m/2))`
    ExpFamily,
    /// The m = 1 rational solution with shift constant `x0`.
    RationalM1,
    /// The m = 1 exponential solution with constant `C`.
    ExpM1,
    /// `u = (1 + tanh(-(sqrt(2)/4)(x + x0) + tau/4)) / 2`
    TanhFront,
    /// The tanh front with coth in place of tanh (the `C < 0` branch).
    CothBranch,
}

impl CatalogId {
    pub const ALL: [CatalogId; 6] = [
        CatalogId::RationalFamily,
        CatalogId::ExpFamily,
        CatalogId::RationalM1,
        CatalogId::ExpM1,
        CatalogId::TanhFront,
        CatalogId::CothBranch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CatalogId::RationalFamily => "rational_family",
            CatalogId::ExpFamily => "exp_family",
            CatalogId::RationalM1 => "rational_m1",
            CatalogId::ExpM1 => "exp_m1",
            CatalogId::TanhFront => "tanh_front",
            CatalogId::CothBranch => "coth_branch",
        }
    }

    pub fn from_name(s: &str) -> Option<CatalogId> {
        CatalogId::ALL.iter().copied().find(|id| id.as_str() == s)
    }

    /// Human-readable parameter schema, e.g. for a catalog listing.
    pub fn param_schema(&self) -> &'static str {
        match self {
            CatalogId::RationalFamily | CatalogId::ExpFamily => {
                "m: int >= 1 (default 3), p: arbitrary function of m-1 omegas"
            }
            CatalogId::RationalM1 => "x0: real shift (default 1)",
            CatalogId::ExpM1 => "c: real constant (default 1; negative c has a pole)",
            CatalogId::TanhFront => "x0: real shift (default 0), or c > 0 with x0 = sqrt(2) ln c",
            CatalogId::CothBranch => {
                "x0: real shift (default 0), or c < 0 with x0 = sqrt(2) ln |c|"
            }
        }
    }
}

/// Parameters accepted by [`catalog`]; unset fields take entry defaults.
#[derive(Clone, Debug, Default)]
pub struct CatalogParams {
    pub m: Option<usize>,
    pub p: Option<ArbitraryFunction>,
    pub c: Option<f64>,
    pub x0: Option<f64>,
}

/// A certified catalog entry: the field, its declared equation, and the
/// default grid the certification ran on.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: CatalogId,
    pub field: ScalarField,
    pub pde: PdeSpec,
    pub default_grid: Grid,
    /// For exponential entries: whether `P` sampled nonnegative on the test
    /// box (in which case the singular set is empty and no mask is set).
    pub p_nonnegative: Option<bool>,
}

fn default_grid(m: usize) -> Result<Grid> {
    let per_axis = match m {
        1 => 50,
        2 => 15,
        3 => 10,
        _ => 6,
    };
    let x_count = if m == 1 { 201 } else { 50 };
    let mut ranges: Vec<[f64; 2]> = (0..m).map(|_| [0.0, 1.0]).collect();
    ranges.push([-3.0, 3.0]);
    let mut counts: Vec<usize> = (0..m).map(|_| per_axis).collect();
    counts.push(x_count);
    make_grid(&ranges, &counts)
}

fn certification_grid(m: usize) -> Result<Grid> {
    let per_axis = if m == 1 { 9 } else { 5 };
    let x_count = if m == 1 { 41 } else { 21 };
    let mut ranges: Vec<[f64; 2]> = (0..m).map(|_| [0.0, 1.0]).collect();
    ranges.push([-3.0, 3.0]);
    let mut counts: Vec<usize> = (0..m).map(|_| per_axis).collect();
    counts.push(x_count);
    make_grid(&ranges, &counts)
}

/// The exponent constant mapping the exponential solution to the tanh
/// front: equating `1/(1 + C exp(x/sqrt(2) - tau/2))` with the front shifted
/// by `x0` forces `C = exp(sqrt(2) x0 / 2)`.
pub fn front_constant_from_shift(x0: f64) -> f64 {
    crate::math::exp(SQRT_2 * x0 / 2.0)
}

/// Inverse of [`front_constant_from_shift`] for `c > 0`; the `c < 0` branch
/// uses `|c|` and lands on the coth solution.
pub fn front_shift_from_constant(c: f64) -> Result<f64> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::BadParameter(format!(
            "front constant must be nonzero, got {c}"
        )));
    }
    Ok(SQRT_2 * crate::math::ln(crate::math::abs(c)))
}

fn front_argument(x0: f64) -> Expr {
    Expr::c(-SQRT_2 / 4.0) * (Expr::x() + Expr::c(x0)) + Expr::tau(0) / Expr::c(4.0)
}

/// Construct a certified catalog entry.
pub fn catalog(id: CatalogId, params: &CatalogParams) -> Result<CatalogEntry> {
    let entry = build_entry(id, params)?;
    let grid = certification_grid(entry.pde.m())?;
    let report = residual_report(&entry.pde, &entry.field, &grid, CATALOG_TOL)?;
    if !report.pass {
        return Err(Error::CertificationFailed {
            what: "catalog entry",
            max_residual: report.max_abs_residual,
        });
    }
    Ok(entry)
}

fn build_entry(id: CatalogId, params: &CatalogParams) -> Result<CatalogEntry> {
    match id {
        CatalogId::RationalFamily | CatalogId::RationalM1 => {
            let m = match id {
                CatalogId::RationalM1 => 1,
                _ => params.m.unwrap_or(3),
            };
            if m < 1 {
                return Err(Error::BadParameter("m must be at least 1".into()));
            }
            let p = match id {
                CatalogId::RationalM1 => ArbitraryFunction::Constant(params.x0.unwrap_or(1.0)),
                _ => params
                    .p
                    .clone()
                    .unwrap_or_else(|| ArbitraryFunction::default_for_arity(m - 1)),
            };
            let den = Expr::x() - Expr::c(SQRT_2) * Expr::tau(m - 1) + p.expr(&omega_exprs(m))?;
            let field = ScalarField::from_expr(m, Expr::c(SQRT_2) / den.clone())?
                .with_mask(Mask::new(den, DENOMINATOR_MASK));
            Ok(CatalogEntry {
                id,
                field,
                pde: PdeSpec::canonical(m, 1.0, ReactionTerm::HuxleyNormalized)?,
                default_grid: default_grid(m)?,
                p_nonnegative: None,
            })
        }
        CatalogId::ExpFamily | CatalogId::ExpM1 => {
            let m = match id {
                CatalogId::ExpM1 => 1,
                _ => params.m.unwrap_or(3),
            };
            if m < 1 {
                return Err(Error::BadParameter("m must be at least 1".into()));
            }
            let p = match id {
                CatalogId::ExpM1 => ArbitraryFunction::Constant(params.c.unwrap_or(1.0)),
                _ => params
                    .p
                    .clone()
                    .unwrap_or_else(|| ArbitraryFunction::default_for_arity(m - 1)),
            };
            if p.arity() > m - 1 {
                return Err(Error::DimensionMismatch {
                    expected: m - 1,
                    got: p.arity(),
                });
            }
            let z = Expr::x() / Expr::c(SQRT_2) - Expr::tau(m - 1) / Expr::c(2.0);
            let den = Expr::c(1.0) + p.expr(&omega_exprs(m))? * z.exp();
            // The denominator can only vanish where P < 0; sample the sign
            // on the omega box implied by the default time box.
            let nonneg = sample_p_nonnegative(&p, m);
            let mut field = ScalarField::from_expr(m, Expr::c(1.0) / den.clone())?;
            if !nonneg {
                field = field.with_mask(Mask::new(den, DENOMINATOR_MASK));
            }
            Ok(CatalogEntry {
                id,
                field,
                pde: PdeSpec::canonical(m, 1.0, ReactionTerm::HuxleyNormalized)?,
                default_grid: default_grid(m)?,
                p_nonnegative: Some(nonneg),
            })
        }
        CatalogId::TanhFront => {
            let x0 = resolve_front_shift(params, true)?;
            let u = (Expr::c(1.0) + front_argument(x0).tanh()) / Expr::c(2.0);
            Ok(CatalogEntry {
                id,
                field: ScalarField::from_expr(1, u)?,
                pde: PdeSpec::canonical(1, 1.0, ReactionTerm::HuxleyNormalized)?,
                default_grid: default_grid(1)?,
                p_nonnegative: None,
            })
        }
        CatalogId::CothBranch => {
            let x0 = resolve_front_shift(params, false)?;
            let u = (Expr::c(1.0) + front_argument(x0).coth()) / Expr::c(2.0);
            // Pole where the argument vanishes, i.e. on the line
            // y = x + x0 - (sqrt(2)/2) tau = 0.
            let y = Expr::x() + Expr::c(x0) - Expr::c(SQRT_2 / 2.0) * Expr::tau(0);
            let field = ScalarField::from_expr(1, u)?.with_mask(Mask::new(y, COTH_MASK));
            Ok(CatalogEntry {
                id,
                field,
                pde: PdeSpec::canonical(1, 1.0, ReactionTerm::HuxleyNormalized)?,
                default_grid: default_grid(1)?,
                p_nonnegative: None,
            })
        }
    }
}

fn resolve_front_shift(params: &CatalogParams, tanh_branch: bool) -> Result<f64> {
    match (params.x0, params.c) {
        (Some(x0), None) => Ok(x0),
        (None, Some(c)) => {
            if tanh_branch && c <= 0.0 {
                return Err(Error::BadParameter(format!(
                    "tanh front requires a positive constant, got {c}"
                )));
            }
            if !tanh_branch && c >= 0.0 {
                return Err(Error::BadParameter(format!(
                    "coth branch requires a negative constant, got {c}"
                )));
            }
            front_shift_from_constant(c)
        }
        (None, None) => Ok(0.0),
        (Some(_), Some(_)) => Err(Error::BadParameter("give either x0 or c, not both".into())),
    }
}

fn sample_p_nonnegative(p: &ArbitraryFunction, m: usize) -> bool {
    if m == 1 {
        return p.value(&[]) >= 0.0;
    }
    // Default time box [0,1]^m puts every omega in [-1, 1].
    let mut rng = SplitMix64::new(0xCA7A106);
    let mut omega = Vec::new();
    omega.resize(m - 1, 0.0);
    for _ in 0..P_SIGN_SAMPLES {
        for w in omega.iter_mut() {
            *w = rng.in_range(-1.0, 1.0);
        }
        if p.value(&omega) < 0.0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn omega_examples() {
        assert!(omega_coords(&[5.0]).is_empty());
        assert_eq!(omega_coords(&[1.0, 2.0, 3.0]), alloc::vec![2.0, 1.0]);
        assert_eq!(omega_coords(&[5.0, 5.0]), alloc::vec![0.0]);
    }

    #[test]
    fn constraint_residual_omega_field() {
        // psi(omega_1, x) = sin(omega_1) x with m = 2 is annihilated.
        let u = build_constraint_solution(&(Expr::tau(0).sin() * Expr::x()), 0.0, 2).unwrap();
        for (t1, t2, x) in [(0.1, 0.9, 0.5), (2.0, -1.0, 3.0), (0.0, 0.0, -2.0)] {
            let r = constraint_residual(&u, &Point::new(alloc::vec![t1, t2], x)).unwrap();
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constraint_residual_coordinate_and_mean() {
        let u = ScalarField::from_expr(2, Expr::tau(0)).unwrap();
        let p = Point::new(alloc::vec![0.4, 0.7], 0.0);
        assert_abs_diff_eq!(constraint_residual(&u, &p).unwrap(), 1.0, epsilon = 1e-15);

        // v = (tau^1 + tau^2)/2 solves the inhomogeneous constraint.
        let v = ScalarField::from_expr(2, (Expr::tau(0) + Expr::tau(1)) / Expr::c(2.0)).unwrap();
        assert_abs_diff_eq!(constraint_residual(&v, &p).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn plane_wave_chain_rule() {
        // m = 1, profile U(y) = y, k = 1: u = x + tau and u_tau = k u_y.
        let u = build_constraint_solution(&Expr::x(), 1.0, 1).unwrap();
        let jet = u.jet(&Point::m1(0.3, 0.7), 1).unwrap();
        assert_abs_diff_eq!(jet.value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d_tau[0], 1.0 * jet.d_x(), epsilon = 1e-15);
    }

    #[test]
    fn omega_profile_annihilated() {
        // m = 2, profile omega + y, k = 0: u = (tau^2 - tau^1) + x.
        let u = build_constraint_solution(&(Expr::tau(0) + Expr::x()), 0.0, 2).unwrap();
        let p = Point::new(alloc::vec![0.2, 0.9], 0.4);
        assert_abs_diff_eq!(u.value(&p).unwrap(), 0.7 + 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(constraint_residual(&u, &p).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn catalog_point_values() {
        let rational = catalog(
            CatalogId::RationalM1,
            &CatalogParams {
                x0: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(
            rational.field.value(&Point::m1(0.0, 0.0)).unwrap(),
            SQRT_2,
            epsilon = 1e-15
        );

        let expf = catalog(
            CatalogId::ExpM1,
            &CatalogParams {
                c: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(
            expf.field.value(&Point::m1(0.0, 0.0)).unwrap(),
            0.5,
            epsilon = 1e-15
        );

        let front = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        assert_abs_diff_eq!(
            front.field.value(&Point::m1(0.0, 0.0)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn exp_and_tanh_fronts_coincide() {
        // 1/(1 + e^z) = (1 - tanh(z/2))/2 makes the C = 1 exponential equal
        // to the x0 = 0 front.
        let expf = catalog(
            CatalogId::ExpM1,
            &CatalogParams {
                c: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        let front = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let mut rng = SplitMix64::new(99);
        for _ in 0..50 {
            let p = Point::m1(rng.in_range(0.0, 1.0), rng.in_range(-3.0, 3.0));
            assert_abs_diff_eq!(
                expf.field.value(&p).unwrap(),
                front.field.value(&p).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn front_reparameterization() {
        // C = exp(sqrt(2) x0 / 2) identifies the two parameterizations.
        let mut rng = SplitMix64::new(5);
        for &x0 in &[0.8, -1.3] {
            let c = front_constant_from_shift(x0);
            assert_abs_diff_eq!(front_shift_from_constant(c).unwrap(), x0, epsilon = 1e-12);
            let expf = catalog(
                CatalogId::ExpM1,
                &CatalogParams {
                    c: Some(c),
                    ..Default::default()
                },
            )
            .unwrap();
            let front = catalog(
                CatalogId::TanhFront,
                &CatalogParams {
                    x0: Some(x0),
                    ..Default::default()
                },
            )
            .unwrap();
            for _ in 0..25 {
                let p = Point::m1(rng.in_range(0.0, 1.0), rng.in_range(-3.0, 3.0));
                assert_abs_diff_eq!(
                    expf.field.value(&p).unwrap(),
                    front.field.value(&p).unwrap(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn negative_constant_exponential_matches_coth() {
        // The C < 0 exponential solution is the coth branch: with
        // C = -exp(sqrt(2) x0 / 2) the two coincide away from the pole.
        let x0 = 0.4;
        let expf = catalog(
            CatalogId::ExpM1,
            &CatalogParams {
                c: Some(-front_constant_from_shift(x0)),
                ..Default::default()
            },
        )
        .unwrap();
        // negative constant means a moving pole, so the mask must be set
        assert!(expf.field.mask().is_some());
        let coth = catalog(
            CatalogId::CothBranch,
            &CatalogParams {
                x0: Some(x0),
                ..Default::default()
            },
        )
        .unwrap();
        let mut rng = SplitMix64::new(23);
        let mut compared = 0;
        while compared < 30 {
            let p = Point::m1(rng.in_range(0.0, 1.0), rng.in_range(-3.0, 3.0));
            if !expf.field.is_evaluable(&p) || !coth.field.is_evaluable(&p) {
                continue;
            }
            assert_abs_diff_eq!(
                expf.field.value(&p).unwrap(),
                coth.field.value(&p).unwrap(),
                epsilon = 1e-10
            );
            compared += 1;
        }
    }

    #[test]
    fn front_param_validation() {
        let bad = catalog(
            CatalogId::TanhFront,
            &CatalogParams {
                c: Some(-1.0),
                ..Default::default()
            },
        );
        assert!(matches!(bad, Err(Error::BadParameter(_))));
        let bad = catalog(
            CatalogId::CothBranch,
            &CatalogParams {
                c: Some(2.0),
                ..Default::default()
            },
        );
        assert!(matches!(bad, Err(Error::BadParameter(_))));
    }

    #[test]
    fn coth_branch_solves_equation_off_pole() {
        let entry = catalog(CatalogId::CothBranch, &CatalogParams::default()).unwrap();
        let p = Point::m1(0.3, 1.7);
        let r = entry.pde.residual(&entry.field, &p).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
        // the pole line itself is masked
        let on_pole = Point::m1(0.0, 0.0);
        assert!(entry.field.is_singular(&on_pole));
    }

    #[test]
    fn symmetry_orbit_identity_and_shift_absorption() {
        let base = catalog(
            CatalogId::RationalM1,
            &CatalogParams {
                x0: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        let same = symmetry_orbit(&base.field, &[0.0], 0.0, false).unwrap();
        let shifted = symmetry_orbit(&base.field, &[0.0], 3.0, false).unwrap();
        let rebuilt = catalog(
            CatalogId::RationalM1,
            &CatalogParams {
                x0: Some(4.0),
                ..Default::default()
            },
        )
        .unwrap();
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let p = Point::m1(rng.in_range(0.0, 1.0), rng.in_range(2.0, 5.0));
            assert_abs_diff_eq!(
                same.value(&p).unwrap(),
                base.field.value(&p).unwrap(),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                shifted.value(&p).unwrap(),
                rebuilt.field.value(&p).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn reflected_front_still_solves() {
        let entry = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let reflected = symmetry_orbit(&entry.field, &[0.0], 0.0, true).unwrap();
        for (t, x) in [(0.0, 0.0), (0.5, 1.0), (1.0, -2.0)] {
            let r = entry.pde.residual(&reflected, &Point::m1(t, x)).unwrap();
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetry_orbit_preserves_residual_pointwise() {
        // For a non-solution, the residual at the mapped point matches the
        // orbit's residual at the original point.
        let pde = PdeSpec::canonical(1, 1.0, ReactionTerm::HuxleyNormalized).unwrap();
        let u = ScalarField::from_expr(1, (Expr::x() * Expr::c(0.4) + Expr::tau(0)).sin()).unwrap();
        let orbit = symmetry_orbit(&u, &[0.25], -0.6, true).unwrap();
        let p = Point::m1(0.3, 0.8);
        let mapped = Point::m1(0.3 + 0.25, -0.8 - 0.6);
        let r_orbit = pde.residual(&orbit, &p).unwrap();
        let r_mapped = pde.residual(&u, &mapped).unwrap();
        assert_abs_diff_eq!(r_orbit, r_mapped, epsilon = 1e-10);
    }

    #[test]
    fn proposition_form_identity_and_shift() {
        let front = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let same = build_proposition_form(&front.field, 0.0, &ArbitraryFunction::Constant(0.0), 1)
            .unwrap();
        let shifted =
            build_proposition_form(&front.field, 0.0, &ArbitraryFunction::Constant(0.7), 1)
                .unwrap();
        let rebuilt = catalog(
            CatalogId::TanhFront,
            &CatalogParams {
                x0: Some(0.7),
                ..Default::default()
            },
        )
        .unwrap();
        let p = Point::m1(0.4, -0.9);
        assert_abs_diff_eq!(
            same.value(&p).unwrap(),
            front.field.value(&p).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            shifted.value(&p).unwrap(),
            rebuilt.field.value(&p).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn proposition_form_generalizes_exp_family() {
        // Composing the m = 2 exponential solution with an arbitrary sine
        // shift stays inside the family, so the residual is still zero.
        let phi = catalog(
            CatalogId::ExpFamily,
            &CatalogParams {
                m: Some(2),
                p: Some(ArbitraryFunction::Constant(1.0)),
                ..Default::default()
            },
        )
        .unwrap();
        let p = ArbitraryFunction::Sine {
            amplitude: 0.6,
            freqs: alloc::vec![1.3],
            phase: 0.2,
        };
        let u = build_proposition_form(&phi.field, 0.0, &p, 2).unwrap();
        let grid = make_grid(&[[0.0, 1.0], [0.0, 1.0], [-3.0, 3.0]], &[7, 7, 31]).unwrap();
        let report = residual_report(&phi.pde, &u, &grid, CATALOG_TOL).unwrap();
        assert!(report.pass, "max residual {:.3e}", report.max_abs_residual);
    }

    #[test]
    fn front_jet_matches_central_differences_at_midpoint() {
        // The C = 1 exponential front at the origin: an h = 1e-4 stencil
        // reproduces every jet component to 1e-7.
        let entry = catalog(
            CatalogId::ExpM1,
            &CatalogParams {
                c: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        let p = Point::m1(0.0, 0.0);
        let ad = entry.field.jet(&p, 2).unwrap();
        let fd = entry.field.fd_jet(&p, 1e-4).unwrap();
        assert_abs_diff_eq!(ad.d_tau[0], fd.d_tau[0], epsilon = 1e-7);
        assert_abs_diff_eq!(ad.d_x(), fd.d_x(), epsilon = 1e-7);
        assert_abs_diff_eq!(ad.d_xx(), fd.d_xx(), epsilon = 1e-7);
    }

    #[test]
    fn multitime_families_certify() {
        for id in [CatalogId::RationalFamily, CatalogId::ExpFamily] {
            let entry = catalog(id, &CatalogParams::default()).unwrap();
            assert_eq!(entry.pde.m(), 3);
            assert_eq!(entry.default_grid.len(), 50_000);
        }
    }

    #[test]
    fn exp_family_mask_follows_p_sign() {
        // Nonnegative P: empty singular set.
        let pos = catalog(
            CatalogId::ExpFamily,
            &CatalogParams {
                m: Some(2),
                p: Some(ArbitraryFunction::ExpQuad {
                    scale: 0.5,
                    quad: alloc::vec![-0.3],
                    lin: alloc::vec![0.1],
                }),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(pos.p_nonnegative, Some(true));
        assert!(pos.field.mask().is_none());

        // Sign-changing P: masked denominator.
        let mixed = catalog(
            CatalogId::ExpFamily,
            &CatalogParams {
                m: Some(2),
                p: Some(ArbitraryFunction::Sine {
                    amplitude: 0.5,
                    freqs: alloc::vec![1.0],
                    phase: 0.3,
                }),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(mixed.p_nonnegative, Some(false));
        assert!(mixed.field.mask().is_some());
    }

    #[test]
    fn catalog_string_ids() {
        for id in CatalogId::ALL {
            assert_eq!(CatalogId::from_name(id.as_str()), Some(id));
        }
        assert_eq!(CatalogId::from_name("nope"), None);
    }
}
