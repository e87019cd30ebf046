//! Traveling-profile ODE: initial-value integration of
//! `mu u'' - k u' + f(u) = 0` and heteroclinic front shooting.
//!
//! The equation is integrated exactly as written; with the wave coordinate
//! `y = x + k tau^m`, a profile `U(y)` solving it yields the plane wave
//! `u = U(x + k tau^m)`, which travels with velocity `-k`. The rational
//! catalog profile corresponds to `k = -sqrt(2)` and the tanh front to
//! `k = -sqrt(2)/2` under this convention.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::pde::ReactionTerm;

/// Threshold beyond which an integration is truncated and flagged.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Bisection tolerance on the shooting speed.
pub const SPEED_TOL: f64 = 1e-8;

/// Offset along the unstable eigendirection used to leave an equilibrium.
const LAUNCH_OFFSET: f64 = 1e-6;

/// The profile equation data. Only second spatial order is integrable.
#[derive(Clone, Debug)]
pub struct WaveProblem {
    pub mu: f64,
    pub k: f64,
    pub reaction: ReactionTerm,
    pub n: usize,
}

impl WaveProblem {
    pub fn new(mu: f64, k: f64, reaction: ReactionTerm) -> Result<WaveProblem> {
        if mu == 0.0 || !mu.is_finite() {
            return Err(Error::BadParameter(format!(
                "mu must be finite and nonzero, got {mu}"
            )));
        }
        if reaction.max_spatial_dependency() > 1 {
            return Err(Error::UnsupportedForm(
                "profile reaction may depend on u and u' only",
            ));
        }
        Ok(WaveProblem {
            mu,
            k,
            reaction,
            n: 2,
        })
    }

    /// Right-hand side of the first-order system: `u' = v`,
    /// `v' = (k v - f(u, v)) / mu`.
    #[inline]
    fn rhs(&self, u: f64, v: f64) -> (f64, f64) {
        (v, (self.k * v - self.reaction.eval(u, &[v])) / self.mu)
    }

    /// Residual of the profile equation given interpolated derivatives.
    pub fn residual(&self, u: f64, du: f64, ddu: f64) -> f64 {
        self.mu * ddu - self.k * du + self.reaction.eval(u, &[du])
    }
}

/// A sampled traveling-wave profile with cubic Hermite interpolation.
/// Samples are stored in increasing `y` order and the interpolant
/// reproduces the stored values and slopes at the nodes exactly.
#[derive(Clone, Debug)]
pub struct Profile {
    y: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    /// Set when the integration hit the blow-up threshold and the profile
    /// covers only part of the requested range.
    pub truncated: bool,
}

impl Profile {
    fn assemble(
        mut y: Vec<f64>,
        mut u: Vec<f64>,
        mut du: Vec<f64>,
        truncated: bool,
    ) -> Result<Profile> {
        if y.len() < 4 {
            return Err(Error::BadRange(format!(
                "profile needs at least 4 samples, got {}",
                y.len()
            )));
        }
        if y[0] > y[y.len() - 1] {
            y.reverse();
            u.reverse();
            du.reverse();
        }
        Ok(Profile {
            y,
            u,
            du,
            truncated,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y_samples(&self) -> &[f64] {
        &self.y
    }

    pub fn u_samples(&self) -> &[f64] {
        &self.u
    }

    pub fn du_samples(&self) -> &[f64] {
        &self.du
    }

    fn segment(&self, y: f64) -> usize {
        match self.y.binary_search_by(|probe| probe.total_cmp(&y)) {
            Ok(i) => i.min(self.y.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.y.len() - 2),
        }
    }

    /// Interpolated value.
    pub fn value(&self, y: f64) -> f64 {
        let i = self.segment(y);
        let h = self.y[i + 1] - self.y[i];
        let t = (y - self.y[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.u[i] + h10 * h * self.du[i] + h01 * self.u[i + 1] + h11 * h * self.du[i + 1]
    }

    /// Interpolated first derivative.
    pub fn derivative(&self, y: f64) -> f64 {
        let i = self.segment(y);
        let h = self.y[i + 1] - self.y[i];
        let t = (y - self.y[i]) / h;
        let d_h00 = (6.0 * t * t - 6.0 * t) / h;
        let d_h10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d_h01 = -d_h00;
        let d_h11 = 3.0 * t * t - 2.0 * t;
        d_h00 * self.u[i] + d_h10 * self.du[i] + d_h01 * self.u[i + 1] + d_h11 * self.du[i + 1]
    }

    /// Second derivative of the interpolant (piecewise linear in `y`).
    pub fn second_derivative(&self, y: f64) -> f64 {
        let i = self.segment(y);
        let h = self.y[i + 1] - self.y[i];
        let t = (y - self.y[i]) / h;
        let dd_h00 = (12.0 * t - 6.0) / (h * h);
        let dd_h10 = (6.0 * t - 4.0) / h;
        let dd_h01 = -dd_h00;
        let dd_h11 = (6.0 * t - 2.0) / h;
        dd_h00 * self.u[i] + dd_h10 * self.du[i] + dd_h01 * self.u[i + 1] + dd_h11 * self.du[i + 1]
    }

    /// Largest deviation of the stored samples from a reference profile.
    pub fn max_deviation(&self, reference: impl Fn(f64) -> f64) -> f64 {
        self.y
            .iter()
            .zip(&self.u)
            .map(|(&y, &u)| math::abs(u - reference(y)))
            .fold(0.0, f64::max)
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

#[inline]
fn rk4_step(prob: &WaveProblem, u: f64, v: f64, h: f64) -> (f64, f64) {
    let (k1u, k1v) = prob.rhs(u, v);
    let (k2u, k2v) = prob.rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v);
    let (k3u, k3v) = prob.rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v);
    let (k4u, k4v) = prob.rhs(u + h * k3u, v + h * k3v);
    (
        u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

/// Integrate the profile equation from initial data `(u0, du0)` given at
/// `y_range.0`, across the range with a classical 4th-order method. A
/// descending range integrates in the negative direction; samples are
/// returned in increasing `y` order either way. If `|u|` exceeds the
/// blow-up threshold the profile is truncated and flagged.
pub fn integrate_profile(
    prob: &WaveProblem,
    u0: f64,
    du0: f64,
    y_range: (f64, f64),
    step: f64,
) -> Result<Profile> {
    if prob.n != 2 {
        return Err(Error::UnsupportedForm("profile integration requires n = 2"));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::BadParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let (lo, hi) = y_range;
    if lo == hi || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BadRange(format!(
            "degenerate profile range [{lo}, {hi}]"
        )));
    }
    let span = hi - lo;
    let steps = math::ceil(math::abs(span) / step).max(3.0) as usize;
    let h = span / steps as f64;

    let mut y = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    let mut truncated = false;
    let (mut cu, mut cv) = (u0, du0);
    y.push(lo);
    u.push(cu);
    du.push(cv);
    for i in 1..=steps {
        let (nu, nv) = rk4_step(prob, cu, cv, h);
        if !nu.is_finite() || !nv.is_finite() {
            return Err(Error::NonFinite { step: i });
        }
        cu = nu;
        cv = nv;
        y.push(lo + span * (i as f64) / (steps as f64));
        u.push(cu);
        du.push(cv);
        if math::abs(cu) > BLOWUP_THRESHOLD {
            truncated = true;
            break;
        }
    }
    Profile::assemble(y, u, du, truncated)
}

/// Integration step used by [`front_shoot`].
const SHOOT_STEP: f64 = 1e-3;

#[derive(Clone, Copy, PartialEq)]
enum ShotOutcome {
    Overshoot,
    Undershoot,
}

/// Integrate the trajectory leaving `u_minus` along its unstable
/// eigendirection and classify its fate relative to `u_plus`.
fn shoot(
    prob: &WaveProblem,
    u_minus: f64,
    u_plus: f64,
    h: f64,
    record: Option<&mut (Vec<f64>, Vec<f64>, Vec<f64>)>,
) -> (ShotOutcome, f64) {
    let dir = if u_plus > u_minus { 1.0 } else { -1.0 };
    // Unstable eigenvalue of the linearization at u_minus.
    let fp = prob.reaction.derivative(u_minus);
    let disc = prob.k * prob.k - 4.0 * prob.mu * fp;
    let lambda = if disc >= 0.0 {
        (prob.k + math::sqrt(disc)) / (2.0 * prob.mu)
    } else {
        prob.k / (2.0 * prob.mu)
    };
    let mut u = u_minus + dir * LAUNCH_OFFSET;
    let mut v = dir * LAUNCH_OFFSET * lambda.max(1e-12);
    let gap = math::abs(u_plus - u_minus);
    let band = 1e-4 * gap.max(1.0);
    let max_steps = (400.0 / h) as usize;

    let mut rec = record;
    let mut closest = math::abs(u - u_plus);
    if let Some(r) = rec.as_deref_mut() {
        r.0.push(0.0);
        r.1.push(u);
        r.2.push(v);
    }
    for i in 1..=max_steps {
        let (nu, nv) = rk4_step(prob, u, v, h);
        u = nu;
        v = nv;
        if let Some(r) = rec.as_deref_mut() {
            r.0.push(i as f64 * h);
            r.1.push(u);
            r.2.push(v);
        }
        closest = closest.min(math::abs(u - u_plus));
        // Past the target with momentum: overshoot.
        if dir * (u - u_plus) > band {
            return (ShotOutcome::Overshoot, closest);
        }
        // Turned around before reaching the target: undershoot.
        if dir * v < 0.0 && math::abs(u - u_plus) > band {
            return (ShotOutcome::Undershoot, closest);
        }
        if !u.is_finite() || !v.is_finite() {
            return (ShotOutcome::Undershoot, closest);
        }
    }
    // Ran out of range while still creeping toward the target; classify by
    // which side of the midpoint the trajectory settled on.
    if math::abs(u - u_plus) < 0.5 * gap {
        (ShotOutcome::Overshoot, closest)
    } else {
        (ShotOutcome::Undershoot, closest)
    }
}

/// Find the front speed connecting the equilibria `u_minus` (at `y = -inf`)
/// and `u_plus` (at `y = +inf`) by bisection over the speed bracket. The
/// profile equation is solved with `k = +c`, so the returned profile is the
/// left-moving member of the reflection-symmetric front pair; the physical
/// front speed is `c` in absolute value.
pub fn front_shoot(
    mu: f64,
    reaction: &ReactionTerm,
    u_minus: f64,
    u_plus: f64,
    speed_bracket: (f64, f64),
) -> Result<(f64, Profile)> {
    front_shoot_with_step(mu, reaction, u_minus, u_plus, speed_bracket, SHOOT_STEP)
}

/// [`front_shoot`] with an explicit integration step, for step-invariance
/// checks.
pub fn front_shoot_with_step(
    mu: f64,
    reaction: &ReactionTerm,
    u_minus: f64,
    u_plus: f64,
    speed_bracket: (f64, f64),
    step: f64,
) -> Result<(f64, Profile)> {
    if !(step > 0.0) {
        return Err(Error::BadParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let zeros = alloc::vec![0.0; reaction.max_spatial_dependency()];
    for eq in [u_minus, u_plus] {
        if math::abs(reaction.eval(eq, &zeros)) > 1e-12 {
            return Err(Error::BadParameter(format!(
                "{eq} is not an equilibrium of the reaction"
            )));
        }
    }
    let (mut lo, mut hi) = speed_bracket;
    if !(lo < hi) {
        return Err(Error::BadParameter(format!(
            "invalid speed bracket [{lo}, {hi}]"
        )));
    }

    let classify = |c: f64| {
        let prob = WaveProblem {
            mu,
            k: c,
            reaction: reaction.clone(),
            n: 2,
        };
        shoot(&prob, u_minus, u_plus, step, None).0
    };
    let (out_lo, out_hi) = (classify(lo), classify(hi));
    if out_lo == out_hi {
        return Err(Error::NoConnection);
    }

    for _ in 0..100 {
        if hi - lo <= SPEED_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if classify(mid) == out_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let speed = 0.5 * (lo + hi);

    // Final run at the selected speed, recording the trajectory.
    let prob = WaveProblem {
        mu,
        k: speed,
        reaction: reaction.clone(),
        n: 2,
    };
    let mut rec = (Vec::new(), Vec::new(), Vec::new());
    let (_, closest) = shoot(&prob, u_minus, u_plus, step, Some(&mut rec));
    if closest > 1e-6 {
        return Err(Error::NoConnection);
    }
    // Keep the monotone segment up to the closest approach.
    let cut = rec
        .1
        .iter()
        .enumerate()
        .min_by(|a, b| math::abs(a.1 - u_plus).total_cmp(&math::abs(b.1 - u_plus)))
        .map(|(i, _)| i)
        .unwrap_or(rec.1.len() - 1);
    let profile = Profile::assemble(
        rec.0[..=cut].to_vec(),
        rec.1[..=cut].to_vec(),
        rec.2[..=cut].to_vec(),
        false,
    )?;
    Ok((speed, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SQRT_2: f64 = core::f64::consts::SQRT_2;

    fn zero_reaction() -> ReactionTerm {
        ReactionTerm::Custom {
            expr: crate::expr::Expr::c(0.0),
        }
    }

    #[test]
    fn linear_solution_exact() {
        // f = 0, k = 0: u'' = 0, so u = 1 + 2y to rounding.
        let prob = WaveProblem::new(1.0, 0.0, zero_reaction()).unwrap();
        let profile = integrate_profile(&prob, 1.0, 2.0, (0.0, 2.0), 1e-2).unwrap();
        let dev = profile.max_deviation(|y| 1.0 + 2.0 * y);
        assert!(dev <= 1e-12, "deviation {dev}");
        assert!(!profile.truncated);
    }

    #[test]
    fn rational_profile_reproduced() {
        // U(y) = sqrt(2)/y solves the equation with k = -sqrt(2).
        let prob = WaveProblem::new(1.0, -SQRT_2, ReactionTerm::HuxleyNormalized).unwrap();
        let profile = integrate_profile(&prob, SQRT_2, -SQRT_2, (1.0, 5.0), 1e-3).unwrap();
        let dev = profile.max_deviation(|y| SQRT_2 / y);
        assert!(dev <= 1e-6, "deviation {dev}");
    }

    #[test]
    fn derivative_dependent_reaction() {
        // f(u, u') = -c u' turns the equation into u'' = ((k + c)/mu) u',
        // solved by u = exp(lambda y) with lambda = k + c.
        let c = 0.6;
        let reaction = ReactionTerm::Custom {
            expr: -(crate::expr::Expr::c(c) * crate::expr::Expr::tau(0)),
        };
        let k = 0.9;
        let lambda = k + c;
        let prob = WaveProblem::new(1.0, k, reaction).unwrap();
        let profile = integrate_profile(&prob, 1.0, lambda, (0.0, 2.0), 1e-3).unwrap();
        let dev = profile.max_deviation(|y| (lambda * y).exp());
        assert!(dev <= 1e-9, "deviation {dev}");
    }

    #[test]
    fn second_derivative_reaction_rejected() {
        let reaction = ReactionTerm::Custom {
            expr: crate::expr::Expr::tau(1),
        };
        assert!(WaveProblem::new(1.0, 0.0, reaction).is_err());
    }

    #[test]
    fn tanh_profile_reproduced_both_directions() {
        // U(y) = (1 + tanh(-(sqrt(2)/4) y)) / 2 with k = -sqrt(2)/2.
        let front = |y: f64| 0.5 * (1.0 + (-(SQRT_2 / 4.0) * y).tanh());
        let dfront = |y: f64| {
            let s = (-(SQRT_2 / 4.0) * y).cosh();
            -(SQRT_2 / 8.0) / (s * s)
        };
        let prob = WaveProblem::new(1.0, -SQRT_2 / 2.0, ReactionTerm::HuxleyNormalized).unwrap();
        let fwd = integrate_profile(&prob, front(0.0), dfront(0.0), (0.0, 5.0), 1e-3).unwrap();
        assert!(fwd.max_deviation(front) <= 1e-6);
        let bwd = integrate_profile(&prob, front(0.0), dfront(0.0), (0.0, -5.0), 1e-3).unwrap();
        assert!(bwd.max_deviation(front) <= 1e-6);
        // samples come back in increasing order
        assert!(bwd.y_samples().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fourth_order_step_halving() {
        let front = |y: f64| 0.5 * (1.0 + (-(SQRT_2 / 4.0) * y).tanh());
        let dfront = |y: f64| {
            let s = (-(SQRT_2 / 4.0) * y).cosh();
            -(SQRT_2 / 8.0) / (s * s)
        };
        let prob = WaveProblem::new(1.0, -SQRT_2 / 2.0, ReactionTerm::HuxleyNormalized).unwrap();
        let coarse = integrate_profile(&prob, front(-5.0), dfront(-5.0), (-5.0, 5.0), 0.1)
            .unwrap()
            .max_deviation(front);
        let fine = integrate_profile(&prob, front(-5.0), dfront(-5.0), (-5.0, 5.0), 0.05)
            .unwrap()
            .max_deviation(front);
        let ratio = coarse / fine;
        assert!((8.0..32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn interpolation_reproduces_nodes_and_residual() {
        let prob = WaveProblem::new(1.0, -SQRT_2, ReactionTerm::HuxleyNormalized).unwrap();
        let profile = integrate_profile(&prob, SQRT_2, -SQRT_2, (1.0, 3.0), 1e-3).unwrap();
        let ys = profile.y_samples();
        let us = profile.u_samples();
        for i in (0..ys.len()).step_by(199) {
            assert_abs_diff_eq!(profile.value(ys[i]), us[i], epsilon = 1e-12);
        }
        // Re-substitute interpolated derivatives at interior nodes.
        let mut worst = 0.0f64;
        for i in (1..ys.len() - 1).step_by(37) {
            let y = ys[i];
            let r = prob.residual(
                profile.value(y),
                profile.derivative(y),
                profile.second_derivative(y),
            );
            worst = worst.max(r.abs());
        }
        assert!(worst <= 1e-4, "interior residual {worst}");
    }

    #[test]
    fn blowup_flagged() {
        // f = -u makes u'' = u: exponential growth crosses the threshold.
        let reaction = ReactionTerm::Custom {
            expr: -crate::expr::Expr::x(),
        };
        let prob = WaveProblem::new(1.0, 0.0, reaction).unwrap();
        let profile = integrate_profile(&prob, 1.0, 1.0, (0.0, 40.0), 1e-2).unwrap();
        assert!(profile.truncated);
        let last = *profile.y_samples().last().unwrap();
        assert!(last < 40.0);
    }

    #[test]
    fn front_speed_huxley() {
        let (speed, profile) =
            front_shoot(1.0, &ReactionTerm::HuxleyNormalized, 0.0, 1.0, (0.3, 1.0)).unwrap();
        assert_abs_diff_eq!(speed, SQRT_2 / 2.0, epsilon = 1e-3);
        let last = *profile.u_samples().last().unwrap();
        assert!((last - 1.0).abs() <= 1e-4, "profile end {last}");
    }

    #[test]
    fn front_speed_fitzhugh_nagumo_delta_zero() {
        let (speed, _) = front_shoot(
            1.0,
            &ReactionTerm::FitzhughNagumo { delta: 0.0 },
            0.0,
            1.0,
            (0.3, 1.0),
        )
        .unwrap();
        assert_abs_diff_eq!(speed, SQRT_2 / 2.0, epsilon = 1e-3);
    }

    #[test]
    fn front_speed_stable_under_speed_tolerance() {
        let (a, _) =
            front_shoot(1.0, &ReactionTerm::HuxleyNormalized, 0.0, 1.0, (0.3, 1.0)).unwrap();
        let (b, _) =
            front_shoot(1.0, &ReactionTerm::HuxleyNormalized, 0.0, 1.0, (0.5, 0.9)).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 2e-3);
    }

    #[test]
    fn front_speed_invariant_under_step_halving() {
        let f = ReactionTerm::HuxleyNormalized;
        let (a, _) = front_shoot_with_step(1.0, &f, 0.0, 1.0, (0.3, 1.0), 1e-3).unwrap();
        let (b, _) = front_shoot_with_step(1.0, &f, 0.0, 1.0, (0.3, 1.0), 5e-4).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 2e-3);
    }

    #[test]
    fn no_connection_for_zero_reaction() {
        let err = front_shoot(1.0, &zero_reaction(), 0.0, 1.0, (0.3, 1.0)).unwrap_err();
        assert_eq!(err, Error::NoConnection);
    }

    #[test]
    fn non_equilibrium_rejected() {
        let err =
            front_shoot(1.0, &ReactionTerm::HuxleyNormalized, 0.0, 0.5, (0.3, 1.0)).unwrap_err();
        assert!(matches!(err, Error::BadParameter(_)));
    }
}
