//! Exact solutions of multitime (ultra-parabolic) reaction-diffusion
//! equations via differential constraints, with machine verification.
//!
//! The crate covers the pipeline end to end:
//!
//! - [`field`]: scalar fields over `(tau^1..tau^m, x)` with exact derivative
//!   jets from nested dual numbers ([`dual`], [`expr`]).
//! - [`pde`]: the ultra-parabolic equation family and pointwise residuals.
//! - [`transform`]: time rescaling, scaling normalization, wave-frame shift
//!   and the characteristic-variable transformation, all residual-checkable.
//! - [`solutions`]: the differential-constraint machinery and the closed-form
//!   catalog (rational, exponential, tanh/coth front families).
//! - [`wave`]: traveling-profile ODE integration and front-speed shooting.
//! - [`verify`]: grid residual reports and derivative convergence studies.
//! - [`sim`]: a finite-difference simulator for the reduced 1-D problems,
//!   used as an independent cross-check on the exact catalog.
//!
//! The core is `no_std`-compatible (requires `alloc`; enable the `libm`
//! feature when building without `std`).
//!
//! ```
//! use multitime_core::*;
//!
//! // The traveling front solves the normalized Huxley equation: certify it
//! // on a grid by evaluating the pointwise residual with exact jets.
//! let entry = catalog(CatalogId::TanhFront, &Default::default()).unwrap();
//! let report = residual_report(&entry.pde, &entry.field, &entry.default_grid, 1e-8).unwrap();
//! assert!(report.pass);
//!
//! // A translated and reflected copy is still a solution.
//! let mirrored = symmetry_orbit(&entry.field, &[0.5], 1.0, true).unwrap();
//! let report = residual_report(&entry.pde, &mirrored, &entry.default_grid, 1e-8).unwrap();
//! assert!(report.pass);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
// Range guards are written as `!(a < b)` so that NaN parameters fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod math;

pub mod dual;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod pde;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod solutions;
pub mod transform;
pub mod verify;
pub mod wave;

pub use dual::{Dual, Real, D1, D2, D3, D4};
pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{DomainBox, Jet, Mask, Point, ScalarField};
pub use grid::{make_grid, Axis, Grid};
pub use pde::{PdeForm, PdeSpec, ReactionTerm};
pub use sim::{
    march, measure_front_speed, reduce_to_characteristic, GridResult, Rd1dProblem, Scheme,
};
pub use solutions::{
    build_constraint_solution, build_proposition_form, catalog, constraint_residual, omega_coords,
    symmetry_orbit, ArbitraryFunction, CatalogEntry, CatalogId,
};
pub use transform::{
    characteristic_transform, scaling_normalize, shift_to_wave_frame, time_rescale,
    time_rescale_on_subdomain, verify_transform_system, FirstIntegral, TransformKind,
    Transformation,
};
pub use verify::{convergence_study, residual_report, Report};
pub use wave::{front_shoot, integrate_profile, Profile, WaveProblem};

#[cfg(test)]
mod thread_safety {
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn shared_types_are_send_sync() {
        assert_send_sync::<crate::ScalarField>();
        assert_send_sync::<crate::PdeSpec>();
        assert_send_sync::<crate::Transformation>();
        assert_send_sync::<crate::Profile>();
        assert_send_sync::<crate::GridResult>();
        assert_send_sync::<crate::Expr>();
    }
}
