//! Finite-difference simulation of the canonical multitime equation.
//!
//! In the coordinates `s = tau^m`, `omega_j = tau^m - tau^j` the operator
//! `sum_i d/dtau^i` collapses to `d/ds`, so each fixed `omega` slice is an
//! ordinary 1-D reaction-diffusion problem `u_s = mu u_xx + f(u)`. Marching
//! those slices with manufactured initial/boundary data from an exact field
//! gives an independent check on the closed-form catalog.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Point, ScalarField};
use crate::math;
use crate::pde::{PdeForm, PdeSpec, ReactionTerm};

/// Marching scheme. The reaction term is treated explicitly in both; the
/// implicit half of Crank-Nicolson covers diffusion only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ExplicitFtcs,
    CrankNicolson,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ExplicitFtcs => "explicit_ftcs",
            Scheme::CrankNicolson => "crank_nicolson",
        }
    }
}

/// The 1-D problem produced by the characteristic reduction.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub mu: f64,
    pub reaction: ReactionTerm,
    pub omega: Vec<f64>,
}

impl Reduction {
    /// Original time coordinates of the slice point `s`:
    /// `tau^m = s`, `tau^j = s - omega_j`.
    pub fn tau_at(&self, s: f64) -> Vec<f64> {
        let mut tau: Vec<f64> = self.omega.iter().map(|w| s - w).collect();
        tau.push(s);
        tau
    }

    pub fn m(&self) -> usize {
        self.omega.len() + 1
    }
}

/// Reduce a canonical second-order equation to the 1-D marching problem on
/// a fixed `omega` slice.
pub fn reduce_to_characteristic(pde: &PdeSpec, omega: &[f64]) -> Result<Reduction> {
    if pde.form() != PdeForm::Canonical || pde.k() != 0.0 {
        return Err(Error::UnsupportedForm(
            "characteristic reduction needs the canonical form",
        ));
    }
    if pde.n() != 2 {
        return Err(Error::UnsupportedForm(
            "characteristic reduction needs n = 2",
        ));
    }
    if pde.reaction().max_spatial_dependency() > 0 {
        return Err(Error::UnsupportedForm(
            "the marching schemes treat the reaction as a function of u only",
        ));
    }
    if omega.len() + 1 != pde.m() {
        return Err(Error::DimensionMismatch {
            expected: pde.m() - 1,
            got: omega.len(),
        });
    }
    Ok(Reduction {
        mu: pde.mu(),
        reaction: pde.reaction().clone(),
        omega: omega.to_vec(),
    })
}

/// A manufactured 1-D reaction-diffusion problem: initial and Dirichlet
/// boundary data are sampled from an exact field restricted to the slice.
#[derive(Clone, Debug)]
pub struct Rd1dProblem {
    pub reduction: Reduction,
    pub exact: ScalarField,
    pub x_range: (f64, f64),
    pub s_range: (f64, f64),
}

impl Rd1dProblem {
    pub fn new(
        reduction: Reduction,
        exact: ScalarField,
        x_range: (f64, f64),
        s_range: (f64, f64),
    ) -> Result<Rd1dProblem> {
        if exact.m() != reduction.m() {
            return Err(Error::DimensionMismatch {
                expected: reduction.m(),
                got: exact.m(),
            });
        }
        if !(x_range.0 < x_range.1) || !(s_range.0 < s_range.1) {
            return Err(Error::BadRange(format!(
                "need increasing ranges, got x {x_range:?}, s {s_range:?}"
            )));
        }
        let prob = Rd1dProblem {
            reduction,
            exact,
            x_range,
            s_range,
        };
        // Boundary and initial lines must avoid the exact field's
        // singular set; probe a few points up front.
        for i in 0..=16 {
            let s = s_range.0 + (s_range.1 - s_range.0) * (i as f64) / 16.0;
            for xb in [x_range.0, x_range.1] {
                prob.exact_at(s, xb)?;
            }
            let x = x_range.0 + (x_range.1 - x_range.0) * (i as f64) / 16.0;
            prob.exact_at(s_range.0, x)?;
        }
        Ok(prob)
    }

    /// Exact field value at slice coordinates `(s, x)`.
    pub fn exact_at(&self, s: f64, x: f64) -> Result<f64> {
        self.exact.value(&Point::new(self.reduction.tau_at(s), x))
    }
}

/// Dense result of a march: `u[is * nx + ix]`.
#[derive(Clone, Debug)]
pub struct GridResult {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub dx: f64,
    pub ds: f64,
    pub scheme: Scheme,
}

impl GridResult {
    #[inline]
    pub fn at(&self, is: usize, ix: usize) -> f64 {
        self.u[is * self.x.len() + ix]
    }

    pub fn row(&self, is: usize) -> &[f64] {
        let nx = self.x.len();
        &self.u[is * nx..(is + 1) * nx]
    }

    /// Largest pointwise error against the manufactured exact field.
    pub fn linf_error(&self, prob: &Rd1dProblem) -> Result<f64> {
        let mut worst = 0.0f64;
        for (is, &s) in self.s.iter().enumerate() {
            for (ix, &x) in self.x.iter().enumerate() {
                worst = worst.max(math::abs(self.at(is, ix) - prob.exact_at(s, x)?));
            }
        }
        Ok(worst)
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.u {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

fn node_count(span: f64, step: f64, what: &'static str) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::BadParameter(format!(
            "{what} must be positive, got {step}"
        )));
    }
    let n = math::round(span / step) as usize;
    if n < 2 {
        return Err(Error::BadParameter(format!(
            "{what} = {step} leaves fewer than 3 nodes"
        )));
    }
    Ok(n + 1)
}

/// March the manufactured problem. Nominal steps are rounded so the ranges
/// divide evenly; the actual `dx`, `ds` are recorded in the result. The
/// explicit scheme enforces `ds <= dx^2 / (2 mu)`.
pub fn march(prob: &Rd1dProblem, dx: f64, ds: f64, scheme: Scheme) -> Result<GridResult> {
    let (x_lo, x_hi) = prob.x_range;
    let (s_lo, s_hi) = prob.s_range;
    let nx = node_count(x_hi - x_lo, dx, "dx")?;
    let ns = node_count(s_hi - s_lo, ds, "ds")?;
    let dx = (x_hi - x_lo) / (nx - 1) as f64;
    let ds = (s_hi - s_lo) / (ns - 1) as f64;
    let mu = prob.reduction.mu;

    if scheme == Scheme::ExplicitFtcs {
        let limit = dx * dx / (2.0 * mu);
        if ds > limit * (1.0 + 1e-9) {
            return Err(Error::StabilityViolation { ds, limit });
        }
    }

    let x: Vec<f64> = (0..nx).map(|i| x_lo + dx * i as f64).collect();
    let s: Vec<f64> = (0..ns).map(|i| s_lo + ds * i as f64).collect();

    let mut u = vec![0.0; ns * nx];
    for (ix, &xv) in x.iter().enumerate() {
        u[ix] = prob.exact_at(s_lo, xv)?;
    }

    let f = |v: f64| prob.reduction.reaction.eval_value(v);
    let alpha = mu * ds / (dx * dx);

    // Crank-Nicolson workspace
    let mut rhs = vec![0.0; nx];
    let mut scratch = vec![0.0; nx];

    for is in 1..ns {
        let (prev_rows, this_row) = u.split_at_mut(is * nx);
        let prev = &prev_rows[(is - 1) * nx..];
        let row = &mut this_row[..nx];
        let s_new = s[is];
        row[0] = prob.exact_at(s_new, x[0])?;
        row[nx - 1] = prob.exact_at(s_new, x[nx - 1])?;

        match scheme {
            Scheme::ExplicitFtcs => {
                for ix in 1..nx - 1 {
                    let lap = prev[ix + 1] - 2.0 * prev[ix] + prev[ix - 1];
                    row[ix] = prev[ix] + alpha * lap + ds * f(prev[ix]);
                }
            }
            Scheme::CrankNicolson => {
                let half = 0.5 * alpha;
                for ix in 1..nx - 1 {
                    let lap = prev[ix + 1] - 2.0 * prev[ix] + prev[ix - 1];
                    rhs[ix] = prev[ix] + half * lap + ds * f(prev[ix]);
                }
                rhs[1] += half * row[0];
                rhs[nx - 2] += half * row[nx - 1];
                solve_tridiagonal(half, 1.0 + alpha, &mut rhs[1..nx - 1], &mut scratch);
                row[1..nx - 1].copy_from_slice(&rhs[1..nx - 1]);
            }
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: is });
        }
    }

    Ok(GridResult {
        x,
        s,
        u,
        dx,
        ds,
        scheme,
    })
}

/// Solve the constant-coefficient tridiagonal system
/// `-off * v[i-1] + diag * v[i] - off * v[i+1] = rhs[i]` in place by the
/// standard forward-elimination / back-substitution recurrence.
fn solve_tridiagonal(off: f64, diag: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let c = -off;
    let mut beta = diag;
    scratch[0] = c / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag - c * scratch[i - 1];
        scratch[i] = c / beta;
        rhs[i] = (rhs[i] - c * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
}

/// Least-squares slope of the level-crossing location `x(s)` where the
/// solution equals `level`, with linear interpolation between nodes. Errors
/// if some time row never crosses the level.
pub fn measure_front_speed(result: &GridResult, level: f64) -> Result<f64> {
    let nx = result.x.len();
    let mut crossings = Vec::with_capacity(result.s.len());
    for is in 0..result.s.len() {
        let row = result.row(is);
        let mut found = None;
        for ix in 0..nx - 1 {
            let (a, b) = (row[ix] - level, row[ix + 1] - level);
            if a == 0.0 {
                found = Some(result.x[ix]);
                break;
            }
            if a * b < 0.0 {
                let t = a / (a - b);
                found = Some(result.x[ix] + t * (result.x[ix + 1] - result.x[ix]));
                break;
            }
        }
        match found {
            Some(xc) => crossings.push(xc),
            None => return Err(Error::LevelNotCrossed),
        }
    }

    let n = crossings.len() as f64;
    let mean_s: f64 = result.s.iter().sum::<f64>() / n;
    let mean_x: f64 = crossings.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (sv, xv) in result.s.iter().zip(&crossings) {
        num += (sv - mean_s) * (xv - mean_x);
        den += (sv - mean_s) * (sv - mean_s);
    }
    if den == 0.0 {
        return Err(Error::LevelNotCrossed);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::solutions::{catalog, symmetry_orbit, CatalogId, CatalogParams};
    use approx::assert_abs_diff_eq;

    const SQRT_2: f64 = core::f64::consts::SQRT_2;

    fn canonical_huxley(m: usize) -> PdeSpec {
        PdeSpec::canonical(m, 1.0, ReactionTerm::HuxleyNormalized).unwrap()
    }

    #[test]
    fn reduction_identity_and_inversion() {
        let r = reduce_to_characteristic(&canonical_huxley(1), &[]).unwrap();
        assert_eq!(r.tau_at(0.7), alloc::vec![0.7]);

        let r = reduce_to_characteristic(&canonical_huxley(3), &[2.0, 1.0]).unwrap();
        assert_eq!(r.tau_at(4.0), alloc::vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn reduction_passthrough_and_rejections() {
        let r = reduce_to_characteristic(&canonical_huxley(2), &[0.5]).unwrap();
        assert_abs_diff_eq!(r.mu, 1.0);
        assert!(matches!(r.reaction, ReactionTerm::HuxleyNormalized));

        let convective =
            PdeSpec::canonical_convective(1, 1.0, 0.3, ReactionTerm::HuxleyNormalized).unwrap();
        assert!(reduce_to_characteristic(&convective, &[]).is_err());
        assert!(reduce_to_characteristic(&canonical_huxley(2), &[]).is_err());
    }

    #[test]
    fn equilibrium_is_fixed_point_of_both_schemes() {
        let one = ScalarField::from_expr(1, Expr::c(1.0)).unwrap();
        let red = reduce_to_characteristic(&canonical_huxley(1), &[]).unwrap();
        let prob = Rd1dProblem::new(red, one, (-1.0, 1.0), (0.0, 0.5)).unwrap();
        for scheme in [Scheme::ExplicitFtcs, Scheme::CrankNicolson] {
            let result = march(&prob, 0.1, 0.002, scheme).unwrap();
            let (lo, hi) = result.min_max();
            assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn stability_bound_enforced() {
        let one = ScalarField::from_expr(1, Expr::c(1.0)).unwrap();
        let red = reduce_to_characteristic(&canonical_huxley(1), &[]).unwrap();
        let prob = Rd1dProblem::new(red, one, (-1.0, 1.0), (0.0, 0.5)).unwrap();
        let err = march(&prob, 0.1, 0.01, Scheme::ExplicitFtcs).unwrap_err();
        assert!(matches!(err, Error::StabilityViolation { .. }));
        // Crank-Nicolson has no such restriction.
        assert!(march(&prob, 0.1, 0.01, Scheme::CrankNicolson).is_ok());
    }

    #[test]
    fn tanh_front_march_accuracy() {
        let entry = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let red = reduce_to_characteristic(&entry.pde, &[]).unwrap();
        let prob = Rd1dProblem::new(red, entry.field, (-10.0, 10.0), (0.0, 2.0)).unwrap();
        let dx = 0.05;
        let result = march(&prob, dx, dx * dx / 4.0, Scheme::ExplicitFtcs).unwrap();
        let err = result.linf_error(&prob).unwrap();
        assert!(err <= 5e-3, "Linf {err}");

        // Discrete maximum principle sanity for data in [0, 1].
        let (lo, hi) = result.min_max();
        assert!(lo >= -0.05 && hi <= 1.05, "bounds [{lo}, {hi}]");
    }

    #[test]
    fn crank_nicolson_matches_exact() {
        let entry = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let red = reduce_to_characteristic(&entry.pde, &[]).unwrap();
        let prob = Rd1dProblem::new(red, entry.field, (-10.0, 10.0), (0.0, 2.0)).unwrap();
        let result = march(&prob, 0.05, 0.002, Scheme::CrankNicolson).unwrap();
        let err = result.linf_error(&prob).unwrap();
        assert!(err <= 5e-3, "Linf {err}");
    }

    #[test]
    fn front_speed_measured() {
        let entry = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let red = reduce_to_characteristic(&entry.pde, &[]).unwrap();
        let prob = Rd1dProblem::new(red, entry.field, (-10.0, 10.0), (0.0, 2.0)).unwrap();
        let result = march(&prob, 0.05, 0.05 * 0.05 / 4.0, Scheme::ExplicitFtcs).unwrap();
        let speed = measure_front_speed(&result, 0.5).unwrap();
        assert_abs_diff_eq!(speed, SQRT_2 / 2.0, epsilon = 2e-2);
    }

    #[test]
    fn reflected_front_speed_negated() {
        let entry = catalog(CatalogId::TanhFront, &CatalogParams::default()).unwrap();
        let reflected = symmetry_orbit(&entry.field, &[0.0], 0.0, true).unwrap();
        let red = reduce_to_characteristic(&entry.pde, &[]).unwrap();
        let prob = Rd1dProblem::new(red, reflected, (-10.0, 10.0), (0.0, 2.0)).unwrap();
        let result = march(&prob, 0.05, 0.05 * 0.05 / 4.0, Scheme::ExplicitFtcs).unwrap();
        let speed = measure_front_speed(&result, 0.5).unwrap();
        assert_abs_diff_eq!(speed, -SQRT_2 / 2.0, epsilon = 2e-2);
    }

    #[test]
    fn constant_field_level_not_crossed() {
        let half = ScalarField::from_expr(1, Expr::c(0.5)).unwrap();
        let red = reduce_to_characteristic(&canonical_huxley(1), &[]).unwrap();
        let prob = Rd1dProblem::new(red, half, (-1.0, 1.0), (0.0, 0.2)).unwrap();
        let result = march(&prob, 0.1, 0.002, Scheme::ExplicitFtcs).unwrap();
        assert_eq!(
            measure_front_speed(&result, 0.9).unwrap_err(),
            Error::LevelNotCrossed
        );
    }

    #[test]
    fn omega_slices_consistent() {
        // Two omega slices of the m = 2 rational family, each against its
        // own exact restriction; pole kept outside the box by a large P.
        let entry = catalog(
            CatalogId::RationalFamily,
            &CatalogParams {
                m: Some(2),
                p: Some(crate::solutions::ArbitraryFunction::Linear {
                    offset: 8.0,
                    coeffs: alloc::vec![0.5],
                }),
                ..Default::default()
            },
        )
        .unwrap();
        let mut errs = Vec::new();
        for omega in [0.2, 0.8] {
            let red = reduce_to_characteristic(&entry.pde, &[omega]).unwrap();
            let prob = Rd1dProblem::new(red, entry.field.clone(), (-3.0, 3.0), (0.0, 1.0)).unwrap();
            let result = march(&prob, 0.05, 0.05 * 0.05 / 4.0, Scheme::ExplicitFtcs).unwrap();
            errs.push(result.linf_error(&prob).unwrap());
        }
        let ratio = (errs[0] / errs[1]).max(errs[1] / errs[0]);
        assert!(ratio <= 3.0, "slice errors {errs:?}");
    }

    #[test]
    fn singular_boundary_rejected() {
        // Rational solution with the pole crossing the right boundary.
        let entry = catalog(
            CatalogId::RationalM1,
            &CatalogParams {
                x0: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap();
        let red = reduce_to_characteristic(&entry.pde, &[]).unwrap();
        // pole x = sqrt(2) s passes through x = 1 near s = 0.707
        let err = Rd1dProblem::new(red, entry.field, (-3.0, 1.0), (0.0, 1.0)).unwrap_err();
        assert_eq!(err, Error::SingularPoint);
    }

    #[test]
    fn runaway_reaction_reports_non_finite() {
        // A large explicit reaction step on data far from equilibrium
        // diverges; the march reports the step instead of panicking.
        let ten = ScalarField::from_expr(1, Expr::c(10.0)).unwrap();
        let red = reduce_to_characteristic(&canonical_huxley(1), &[]).unwrap();
        let prob = Rd1dProblem::new(red, ten, (-1.0, 1.0), (0.0, 100.0)).unwrap();
        let err = march(&prob, 0.5, 10.0, Scheme::CrankNicolson).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn tridiagonal_solver() {
        // Solve a small dominant system against a direct check.
        let mut rhs = alloc::vec![1.0, 2.0, 3.0, 4.0];
        let mut scratch = alloc::vec![0.0; 4];
        let (off, diag) = (0.3, 2.0);
        solve_tridiagonal(off, diag, &mut rhs, &mut scratch);
        // verify -off*v[i-1] + diag*v[i] - off*v[i+1] = original rhs
        let v = rhs;
        let orig = alloc::vec![1.0, 2.0, 3.0, 4.0];
        for i in 0..4 {
            let left = if i > 0 { v[i - 1] } else { 0.0 };
            let right = if i < 3 { v[i + 1] } else { 0.0 };
            assert_abs_diff_eq!(
                -off * left + diag * v[i] - off * right,
                orig[i],
                epsilon = 1e-12
            );
        }
    }
}
