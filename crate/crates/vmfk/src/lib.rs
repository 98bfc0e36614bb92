//! Maximum-likelihood concentration estimation for von Mises-Fisher
//! distributions, built on an overflow-free Bessel-ratio kernel.
//!
//! The ML equation for the concentration of a p-variate vMF sample is
//! `rho_{p/2}(kappa) = rbar`, where `rho_nu(x) = I_nu(x)/I_{nu-1}(x)` and
//! `rbar` is the mean resultant length. This crate provides:
//!
//! * [`bessel`] -- the ratio `rho_nu`, the normalized Turanian
//!   `T_nu = S_nu / I_nu^2`, and the fixed-point map `Phi_{2nu}` with its
//!   derivative, all computed by continued fractions without ever forming
//!   `I_nu` itself.
//! * [`solver`] -- the fixed-point iteration (a contraction for
//!   `nu >= 1/2`) and an independent bracketing solver valid for all
//!   `nu > 0`, with full iteration traces.
//! * [`inequality`] -- sweeps that certify the Turan-type bounds the
//!   contraction argument rests on, and that exhibit counterexamples to
//!   the invalid bound `S_nu < I_nu^2 / (nu + x)`.
//! * [`data`] -- sample validation, the sufficient statistic, the full ML
//!   fit, and a seeded vMF sampler for round-trip checks.

pub mod bessel;
pub mod data;
pub mod error;
pub mod inequality;
pub mod solver;

pub use bessel::{phi, phi_prime, phi_with_derivative, ratio, turanian_normalized};
pub use bessel::{NormalizedTuranian, PhiEvaluation, RatioPoint};
pub use data::{fit_mle, load_samples, mean_resultant, sample_vmf};
pub use data::{MleFit, SampleFormat, SampleSet};
pub use error::{Error, Result};
pub use inequality::{asymptote_check, log_spaced, monotonicity_profile, sweep};
pub use inequality::{
    Inequality, InequalityRecord, MonotonicityProfile, ProfileShape, SweepGrid, SweepReport,
    SweepSummary, MARGIN_NOISE_FLOOR,
};
pub use solver::{cross_validate, solve_bracket, solve_fixed_point};
pub use solver::{EstimationProblem, InitialGuess, Method, SolveResult, SolverOptions};
