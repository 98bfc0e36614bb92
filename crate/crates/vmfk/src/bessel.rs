//! Ratio kernel for modified Bessel functions of the first kind.
//!
//! Everything in this crate is expressed through the ratio
//! `rho_nu(x) = I_nu(x) / I_{nu-1}(x)` rather than through `I_nu` itself:
//! `I_nu` overflows a double near `x ~ 700` while the ratio stays in (0, 1]
//! for all orders of interest. The ratio is evaluated by the continued
//! fraction induced by the three-term recurrence
//!
//! ```text
//! 1/rho_nu(x) = 2 nu / x + rho_{nu+1}(x)
//! ```
//!
//! using the modified Lentz method, which is overflow-free and
//! self-terminating. From the ratio we derive the normalized Turanian
//! `T_nu(x) = S_nu(x) / I_nu^2(x) = 1 - rho_{nu+1}(x)/rho_nu(x)` (with
//! `S_nu = I_nu^2 - I_{nu-1} I_{nu+1}`), the fixed-point map
//! `Phi_{2nu}(x) = rbar * x / rho_nu(x)` and its derivative
//! `Phi'_{2nu}(x) = rbar * x * T_nu(x)`.
//!
//! Useful limits (the kernel itself excludes `x = 0`):
//! `rho_nu(x) -> x/(2 nu)` as `x -> 0+`, so `x / rho_nu(x) -> 2 nu` and
//! `T_nu(x) -> 1/(nu + 1)`.

use crate::error::{Error, Result};

/// Underflow guard for the modified Lentz iteration.
const CF_TINY: f64 = 1e-300;

/// Relative change of successive convergents at which the continued
/// fraction is accepted.
const CF_TOL: f64 = 1e-15;

/// Baseline iteration cap for the continued fraction. Convergence takes
/// about `6 sqrt(x)` iterations, so this covers `x` up to roughly `2.7e6`;
/// beyond that the cap scales as `8 sqrt(x)`, bounded by
/// [`CF_ITER_CAP_MAX`] to keep a single evaluation cheap.
const CF_ITER_CAP_BASE: usize = 10_000;

/// Hard ceiling on continued-fraction iterations (~4 ms per call). Arguments
/// needing more than this (x beyond ~6e10) are rejected as non-convergent.
const CF_ITER_CAP_MAX: usize = 2_000_000;

/// Relative tolerance of the recurrence self-check run by
/// [`turanian_normalized`], plus an absolute floor. The floor is needed
/// because `1/rho_nu - rho_{nu+1}` is a cancellation of two O(1) quantities
/// once `x >> nu`: its absolute error is a few ulp of `1/rho_nu` no matter
/// how accurate the ratios are, which exceeds `1e-12 * 2nu/x` for
/// `x / nu` beyond ~4e3.
const RECURRENCE_REL_TOL: f64 = 1e-12;
const RECURRENCE_ABS_FLOOR: f64 = 1e-14;

/// Validated evaluation point for the ratio kernels: an order `nu > 0` and
/// a positive finite argument `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    nu: f64,
    x: f64,
}

impl RatioPoint {
    pub fn new(nu: f64, x: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::Domain(format!("order nu must be positive and finite, got {nu}")));
        }
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::Domain(format!("argument x must be positive and finite, got {x}")));
        }
        Ok(RatioPoint { nu, x })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// The normalized Turanian `T_nu(x) = S_nu(x)/I_nu^2(x)`, stored only in
/// this overflow-safe form. Always strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedTuranian {
    value: f64,
}

impl NormalizedTuranian {
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Value and derivative of the fixed-point map at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEvaluation {
    /// `Phi_{2nu}(x) = rbar * x / rho_nu(x)`.
    pub value: f64,
    /// `Phi'_{2nu}(x) = rbar * x * T_nu(x)`; positive for all `nu > 0`,
    /// below 1 for `nu >= 1/2`.
    pub derivative: f64,
    /// The mean resultant length the map was built with.
    pub rbar: f64,
}

fn iteration_cap(x: f64) -> usize {
    let scaled = (8.0 * x.sqrt()).ceil();
    if scaled.is_finite() && scaled > CF_ITER_CAP_BASE as f64 {
        (scaled as usize).min(CF_ITER_CAP_MAX)
    } else {
        CF_ITER_CAP_BASE
    }
}

/// Modified Lentz evaluation of the continued fraction
/// `rho_nu(x) = 1/(b1 + 1/(b2 + ...))` with `b_k = 2 (nu + k - 1) / x`.
fn ratio_cf(nu: f64, x: f64) -> Result<f64> {
    let cap = iteration_cap(x);
    let mut f = CF_TINY;
    let mut c = f;
    let mut d = 0.0_f64;
    for k in 1..=cap {
        let b = 2.0 * (nu + (k - 1) as f64) / x;
        d += b;
        if d == 0.0 {
            d = CF_TINY;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < CF_TOL {
            return Ok(f);
        }
    }
    Err(Error::CfNoConvergence { nu, x, cap })
}

/// The Bessel ratio `rho_nu(x) = I_nu(x)/I_{nu-1}(x)`, i.e. the reciprocal
/// of `r_{nu-1}(x)`. Never forms `I_nu` itself, so it is overflow-free in
/// `x`. For `nu >= 1/2` the value lies in (0, 1); for `nu` in (0, 1/2) it
/// rises above 1 before decaying back to the asymptote.
pub fn ratio(p: RatioPoint) -> Result<f64> {
    ratio_cf(p.nu, p.x)
}

/// Normalized Turanian via `T_nu(x) = 1 - rho_{nu+1}(x)/rho_nu(x)`.
///
/// Runs the recurrence identity `1/rho_nu - rho_{nu+1} = 2 nu / x` as a
/// self-check on the two independently computed ratios and fails with
/// [`Error::KernelAccuracy`] when they disagree beyond kernel accuracy.
pub fn turanian_normalized(p: RatioPoint) -> Result<NormalizedTuranian> {
    let r_lo = ratio_cf(p.nu, p.x)?;
    let r_hi = ratio_cf(p.nu + 1.0, p.x)?;

    let target = 2.0 * p.nu / p.x;
    let observed = 1.0 / r_lo - r_hi;
    let tol = f64::max(RECURRENCE_REL_TOL * target, RECURRENCE_ABS_FLOOR / r_lo);
    if (observed - target).abs() > tol {
        return Err(Error::KernelAccuracy {
            nu: p.nu,
            x: p.x,
            rel_err: (observed - target).abs() / target,
        });
    }

    let value = 1.0 - r_hi / r_lo;
    if value <= 0.0 || value >= 1.0 {
        return Err(Error::KernelAccuracy {
            nu: p.nu,
            x: p.x,
            rel_err: value,
        });
    }
    Ok(NormalizedTuranian { value })
}

fn check_rbar(rbar: f64) -> Result<()> {
    if !(rbar > 0.0 && rbar < 1.0) {
        return Err(Error::Domain(format!("rbar must lie strictly inside (0, 1), got {rbar}")));
    }
    Ok(())
}

/// The fixed-point map `Phi_{2nu}(x) = rbar * x * r_{nu-1}(x)`, computed as
/// `rbar * x / rho_nu(x)`. Its unique fixed point is the ML concentration.
pub fn phi(p: RatioPoint, rbar: f64) -> Result<f64> {
    check_rbar(rbar)?;
    let r = ratio_cf(p.nu, p.x)?;
    Ok(rbar * p.x / r)
}

/// Derivative of the fixed-point map, `Phi'_{2nu}(x) = rbar * x * T_nu(x)`.
pub fn phi_prime(p: RatioPoint, rbar: f64) -> Result<f64> {
    check_rbar(rbar)?;
    let t = turanian_normalized(p)?;
    Ok(rbar * p.x * t.value())
}

/// Value and derivative of the map in one call, sharing the ratio at `nu`.
pub fn phi_with_derivative(p: RatioPoint, rbar: f64) -> Result<PhiEvaluation> {
    check_rbar(rbar)?;
    let r_lo = ratio_cf(p.nu, p.x)?;
    let r_hi = ratio_cf(p.nu + 1.0, p.x)?;
    let turanian = 1.0 - r_hi / r_lo;
    Ok(PhiEvaluation {
        value: rbar * p.x / r_lo,
        derivative: rbar * p.x * turanian,
        rbar,
    })
}
