//! Grid-based certification: residual reports and derivative-consistency
//! convergence studies.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Point, ScalarField};
use crate::grid::{Axis, Grid};
use crate::math;
use crate::pde::PdeSpec;

/// Default tolerance for residuals evaluated through exact jets.
pub const JET_RESIDUAL_TOL: f64 = 1e-8;

/// Default tolerance for residuals assembled from finite-difference jets,
/// which carry the stencil's truncation and cancellation floors.
pub const FD_RESIDUAL_TOL: f64 = 1e-5;

/// Residual summary over a masked grid. `rms_residual` is computed over the
/// evaluated (non-masked) points only; masked points are counted separately.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub max_abs_residual: f64,
    pub rms_residual: f64,
    pub points_evaluated: usize,
    pub points_masked: usize,
    pub tolerance: f64,
    pub pass: bool,
    pub axes: Vec<Axis>,
}

impl Report {
    /// Deterministic assembly from absolute residual samples. The reduction
    /// sorts before summing, so the result is independent of traversal order.
    pub fn from_samples(
        mut abs_residuals: Vec<f64>,
        points_masked: usize,
        tolerance: f64,
        axes: Vec<Axis>,
    ) -> Result<Report> {
        if abs_residuals.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut max = 0.0f64;
        let mut finite = true;
        for r in &abs_residuals {
            if !r.is_finite() {
                finite = false;
            }
            max = max.max(*r);
        }
        if !finite {
            max = f64::INFINITY;
        }
        abs_residuals.sort_by(f64::total_cmp);
        let sum_sq: f64 = abs_residuals.iter().map(|r| r * r).sum();
        let rms = math::sqrt(sum_sq / abs_residuals.len() as f64);
        Ok(Report {
            max_abs_residual: max,
            rms_residual: rms,
            points_evaluated: abs_residuals.len(),
            points_masked,
            tolerance,
            pass: finite && max <= tolerance,
            axes,
        })
    }
}

/// Split grid coordinates into a point over `m` time axes; when the grid has
/// `m + 1` axes the last one is space, otherwise `x = 0`.
pub(crate) fn point_from_coords(coords: Vec<f64>, m: usize) -> Point {
    let mut tau = coords;
    let x = if tau.len() > m {
        tau.pop().unwrap_or(0.0)
    } else {
        0.0
    };
    Point::new(tau, x)
}

/// Evaluate the pointwise PDE residual of `field` at every non-masked grid
/// point and summarize. The grid must have `m + 1` axes (times then space).
pub fn residual_report(
    pde: &PdeSpec,
    field: &ScalarField,
    grid: &Grid,
    tol: f64,
) -> Result<Report> {
    if grid.dim() != pde.m() + 1 {
        return Err(Error::DimensionMismatch {
            expected: pde.m() + 1,
            got: grid.dim(),
        });
    }
    if field.m() != pde.m() {
        return Err(Error::DimensionMismatch {
            expected: pde.m(),
            got: field.m(),
        });
    }
    let mut residuals = Vec::new();
    let mut masked = 0usize;
    for coords in grid.points() {
        let p = point_from_coords(coords, pde.m());
        if !field.is_evaluable(&p) {
            masked += 1;
            continue;
        }
        residuals.push(math::abs(pde.residual(field, &p)?));
    }
    Report::from_samples(residuals, masked, tol, grid.axes().to_vec())
}

/// For each step `h`, the largest discrepancy between the dual-arithmetic
/// jet and the central-difference jet at `p` (over all shared components).
/// Errors decrease at observed order about 2 until the rounding floor.
pub fn convergence_study(
    pde: &PdeSpec,
    field: &ScalarField,
    p: &Point,
    steps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if steps.len() < 3 {
        return Err(Error::BadParameter("need at least 3 steps".into()));
    }
    for w in steps.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::BadParameter(
                "steps must be strictly decreasing".into(),
            ));
        }
    }
    let order = pde.n().min(2);
    let exact = field.jet(p, order)?;
    let mut out = Vec::with_capacity(steps.len());
    for &h in steps {
        let fd = field.fd_jet(p, h)?;
        let mut err = 0.0f64;
        for (a, b) in exact.d_tau.iter().zip(&fd.d_tau) {
            err = err.max(math::abs(a - b));
        }
        for k in 0..order {
            err = err.max(math::abs(exact.d_space[k] - fd.d_space[k]));
        }
        out.push((h, err));
    }
    Ok(out)
}
