//! The multitime reaction-diffusion PDE family and pointwise residuals.
//!
//! The general form is
//!
//! ```text
//! sum_i h^i(t) du/dt^i = mu d^n u/dx^n - k du/dx + f(u, .., d^(n-1)u/dx^(n-1))
//! ```
//!
//! with all `h^i = 1` in the canonical forms. The residual is LHS minus RHS,
//! so exact solutions evaluate to zero up to rounding.

use alloc::format;
use alloc::vec::Vec;

use crate::dual::{Real, D1};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{Jet, Point, ScalarField};

/// Reaction term `f`. Built-in kinds cover the normalized Huxley and cubic
/// nonlinearities plus the FitzHugh-Nagumo family; `Custom` takes an
/// expression where `X` stands for `u` and `Tau(j)` for the (j+1)-th spatial
/// derivative of `u`.
#[derive(Clone, Debug)]
pub enum ReactionTerm {
    /// `u^2 - u^3`
    HuxleyNormalized,
    /// `-a u^3 + b u^2`
    Cubic {
        a: f64,
        b: f64,
    },
    /// `u (1 - u) (u - delta)`
    FitzhughNagumo {
        delta: f64,
    },
    Custom {
        expr: Expr,
    },
}

impl ReactionTerm {
    /// Evaluate `f` at `u` with optional spatial derivatives (only consumed
    /// by `Custom` expressions that reference them).
    pub fn eval<T: Real>(&self, u: T, spatial: &[T]) -> T {
        match self {
            ReactionTerm::HuxleyNormalized => {
                let u2 = u * u;
                u2 - u2 * u
            }
            ReactionTerm::Cubic { a, b } => {
                let u2 = u * u;
                T::from_f64(*b) * u2 - T::from_f64(*a) * u2 * u
            }
            ReactionTerm::FitzhughNagumo { delta } => {
                let one = T::from_f64(1.0);
                u * (one - u) * (u - T::from_f64(*delta))
            }
            ReactionTerm::Custom { expr } => expr.eval(spatial, u),
        }
    }

    /// Value of `f(u)` for reaction terms that depend on `u` only.
    pub fn eval_value(&self, u: f64) -> f64 {
        self.eval(u, &[])
    }

    /// `df/du` at `u` with any spatial-derivative arguments held at zero,
    /// by dual arithmetic.
    pub fn derivative(&self, u: f64) -> f64 {
        let zeros = alloc::vec![D1::constant(0.0); self.max_spatial_dependency()];
        self.eval(D1::seeded_var(u), &zeros).eps
    }

    /// Highest spatial-derivative index a `Custom` expression references.
    pub fn max_spatial_dependency(&self) -> usize {
        match self {
            ReactionTerm::Custom { expr } => expr.max_tau_index().map_or(0, |i| i + 1),
            _ => 0,
        }
    }
}

/// Which shape of the equation a [`PdeSpec`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdeForm {
    /// Time coefficients `h^i(t)` present, no convection.
    General,
    /// All time coefficients equal to one, `k = 0`.
    Canonical,
    /// Canonical in time with a first-order convection term `-k du/dx`.
    CanonicalConvective,
}

/// A multitime reaction-diffusion PDE.
#[derive(Clone, Debug)]
pub struct PdeSpec {
    m: usize,
    n: usize,
    mu: f64,
    k: f64,
    reaction: ReactionTerm,
    /// `h^i` as expressions over the time coordinates, present iff `General`.
    coeffs: Option<Vec<Expr>>,
    form: PdeForm,
}

impl PdeSpec {
    /// Canonical form: unit time coefficients, no convection, order `n = 2`.
    pub fn canonical(m: usize, mu: f64, reaction: ReactionTerm) -> Result<PdeSpec> {
        let spec = PdeSpec {
            m,
            n: 2,
            mu,
            k: 0.0,
            reaction,
            coeffs: None,
            form: PdeForm::Canonical,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical in time with convection coefficient `k`.
    pub fn canonical_convective(
        m: usize,
        mu: f64,
        k: f64,
        reaction: ReactionTerm,
    ) -> Result<PdeSpec> {
        let spec = PdeSpec {
            m,
            n: 2,
            mu,
            k,
            reaction,
            coeffs: None,
            form: PdeForm::CanonicalConvective,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// General form with time coefficients `h^i` given as expressions over
    /// the time coordinates (`Tau(0)..Tau(m-1)`).
    pub fn general(
        m: usize,
        mu: f64,
        reaction: ReactionTerm,
        coeffs: Vec<Expr>,
    ) -> Result<PdeSpec> {
        if coeffs.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: coeffs.len(),
            });
        }
        let spec = PdeSpec {
            m,
            n: 2,
            mu,
            k: 0.0,
            reaction,
            coeffs: Some(coeffs),
            form: PdeForm::General,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Override the spatial order `n` (default 2). Orders above 2 are
    /// supported for residual evaluation only.
    pub fn with_order(mut self, n: usize) -> Result<PdeSpec> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.mu == 0.0 || !self.mu.is_finite() {
            return Err(Error::BadParameter(format!(
                "mu must be finite and nonzero, got {}",
                self.mu
            )));
        }
        if self.m < 1 {
            return Err(Error::BadParameter(
                "need at least one time coordinate".into(),
            ));
        }
        if self.n < 1 {
            return Err(Error::BadParameter(
                "spatial order must be at least 1".into(),
            ));
        }
        if self.form == PdeForm::Canonical && self.k != 0.0 {
            return Err(Error::BadParameter("canonical form requires k = 0".into()));
        }
        if (self.form == PdeForm::General) != self.coeffs.is_some() {
            return Err(Error::MissingCoefficient);
        }
        if self.reaction.max_spatial_dependency() > self.n.saturating_sub(1) {
            return Err(Error::BadParameter(
                "reaction may only depend on spatial derivatives up to order n-1".into(),
            ));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn reaction(&self) -> &ReactionTerm {
        &self.reaction
    }

    pub fn form(&self) -> PdeForm {
        self.form
    }

    pub fn coeffs(&self) -> Option<&[Expr]> {
        self.coeffs.as_deref()
    }

    /// Value of `h^i` at the point (1 for canonical forms).
    pub fn coefficient(&self, i: usize, p: &Point) -> f64 {
        match &self.coeffs {
            Some(h) => h[i].eval_f64(&p.tau, p.x),
            None => 1.0,
        }
    }

    /// Pointwise residual of a candidate field, using exact jets.
    pub fn residual(&self, field: &ScalarField, p: &Point) -> Result<f64> {
        let jet = field.jet(p, self.n)?;
        self.residual_from_jet(p, &jet)
    }

    /// Residual assembled from a precomputed jet (e.g. a finite-difference
    /// jet, for cross-checks against the dual-arithmetic route).
    pub fn residual_from_jet(&self, p: &Point, jet: &Jet) -> Result<f64> {
        if jet.d_tau.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: jet.d_tau.len(),
            });
        }
        if jet.spatial_order() < self.n {
            return Err(Error::UnsupportedOrder {
                requested: self.n,
                max: jet.spatial_order(),
            });
        }
        let lhs = match &self.coeffs {
            Some(h) => {
                if h.len() != self.m {
                    return Err(Error::MissingCoefficient);
                }
                jet.d_tau
                    .iter()
                    .enumerate()
                    .map(|(i, d)| h[i].eval_f64(&p.tau, p.x) * d)
                    .sum::<f64>()
            }
            None => jet.d_tau.iter().sum::<f64>(),
        };
        let diffusion = self.mu * jet.d_space[self.n - 1];
        let convection = self.k * jet.d_x();
        let f = self.reaction.eval(jet.value, &jet.d_space[..self.n - 1]);
        Ok(lhs - (diffusion - convection + f))
    }
}
