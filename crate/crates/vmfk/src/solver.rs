//! Solvers for the maximum-likelihood concentration equation
//! `rho_nu(kappa) = rbar` (equivalently `1/r_{nu-1}(kappa) = rbar`).
//!
//! Two independent routes are provided:
//!
//! * [`solve_fixed_point`] iterates the contraction `Phi_{2nu}` and is valid
//!   for `nu >= 1/2`, where `0 < Phi' < 1` holds on all of `(0, inf)`.
//! * [`solve_bracket`] brackets the unique root of `rho_nu(x) - rbar` and
//!   refines by safeguarded secant/bisection steps; valid for every
//!   `nu > 0`. For `nu` in (0, 1/2) the ratio rises through every level
//!   below 1 exactly once and its decreasing branch stays above 1, so a
//!   sign-change bracket always isolates the unique root.
//!
//! [`cross_validate`] runs both and reports how far apart they land.

use serde::Serialize;

use crate::bessel::{ratio, RatioPoint};
use crate::error::{Error, Result};

/// Which root-finding route produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedPoint,
    Bracket,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FixedPoint => "fixed_point",
            Method::Bracket => "bracket",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the fixed-point iteration starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    /// `x0 = rbar (2 nu + 1 - rbar^2) / (1 - rbar^2)`, the dimension-
    /// generalized approximation. Any positive start converges for
    /// `nu >= 1/2`; the heuristic just shortens traces.
    Heuristic,
    /// Caller-supplied positive start.
    User(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative step tolerance on successive iterates.
    pub tol_x: f64,
    /// Tolerance on the residual `|rho_nu(kappa) - rbar|`.
    pub tol_residual: f64,
    pub max_iter: usize,
    pub initial_guess: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_x: 1e-12,
            tol_residual: 1e-12,
            max_iter: 500,
            initial_guess: InitialGuess::Heuristic,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let tol_ok = |t: f64| t.is_finite() && t > 0.0;
        if !tol_ok(self.tol_x) || !tol_ok(self.tol_residual) {
            return Err(Error::Domain("solver tolerances must be positive and finite".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        if let InitialGuess::User(x0) = self.initial_guess {
            if !x0.is_finite() || x0 <= 0.0 {
                return Err(Error::Domain(format!(
                    "initial guess must be positive and finite, got {x0}"
                )));
            }
        }
        Ok(())
    }
}

/// The estimation problem: an order `nu = p/2` and a mean resultant length
/// strictly inside (0, 1). The endpoints are rejected at construction
/// because the ML equation has no solution there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationProblem {
    nu: f64,
    rbar: f64,
}

impl EstimationProblem {
    /// Problem for a `p`-dimensional sample, `p >= 2`; the order is `p/2`.
    pub fn from_dimension(p: usize, rbar: f64) -> Result<Self> {
        if p < 2 {
            return Err(Error::Domain(format!("dimension p must be at least 2, got {p}")));
        }
        Self::from_order(p as f64 / 2.0, rbar)
    }

    /// Problem for an arbitrary real order `nu > 0`.
    pub fn from_order(nu: f64, rbar: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::Domain(format!("order nu must be positive and finite, got {nu}")));
        }
        if rbar.is_nan() {
            return Err(Error::Domain("rbar is NaN".into()));
        }
        if rbar == 0.0 {
            return Err(Error::DegenerateData(
                "zero resultant: the ML concentration would be 0".into(),
            ));
        }
        if rbar == 1.0 {
            return Err(Error::SaturatedData(
                "mean resultant length 1: the ML concentration is unbounded".into(),
            ));
        }
        if !(0.0..=1.0).contains(&rbar) {
            return Err(Error::Domain(format!("rbar must lie in (0, 1), got {rbar}")));
        }
        Ok(EstimationProblem { nu, rbar })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn rbar(&self) -> f64 {
        self.rbar
    }

    fn heuristic_start(&self) -> f64 {
        let r = self.rbar;
        r * (2.0 * self.nu + 1.0 - r * r) / (1.0 - r * r)
    }
}

/// A solved concentration with its convergence evidence.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub kappa_hat: f64,
    pub method: Method,
    pub iterations: usize,
    /// Every iterate in order; the last entry equals `kappa_hat`.
    pub trace: Vec<f64>,
    /// `|rho_nu(kappa_hat) - rbar|`.
    pub residual: f64,
}

/// Steps at or below this multiple of ulp are treated as converged to the
/// floating-point floor; no further contraction evidence is obtainable.
const STEP_NOISE_ULPS: f64 = 32.0;

/// Solve by iterating `x <- Phi_{2nu}(x) = rbar * x / rho_nu(x)`.
///
/// Requires `nu >= 1/2`: only there is the map a proven contraction
/// (`Phi' < 1`). Stops when the relative step, the residual, and a
/// contraction-corrected error estimate `step * q/(1-q)` (with `q` the
/// observed step ratio) all pass; the plain step test alone stops too early
/// when `Phi'` is close to 1, i.e. for `rbar` near 1.
pub fn solve_fixed_point(prob: EstimationProblem, opts: SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    if prob.nu < 0.5 {
        return Err(Error::Domain(format!(
            "fixed-point iteration requires nu >= 1/2 (got nu={}); use the bracketing solver",
            prob.nu
        )));
    }

    let x0 = match opts.initial_guess {
        InitialGuess::Heuristic => prob.heuristic_start(),
        InitialGuess::User(v) => v,
    };

    let mut trace = Vec::with_capacity(32);
    trace.push(x0);
    let mut x = x0;
    let mut rho_x = ratio(RatioPoint::new(prob.nu, x)?)?;
    let mut prev_step = f64::INFINITY;

    for k in 1..=opts.max_iter {
        let x_next = prob.rbar * x / rho_x;
        trace.push(x_next);
        let step = (x_next - x).abs();
        let rho_next = ratio(RatioPoint::new(prob.nu, x_next)?)?;
        let residual = (rho_next - prob.rbar).abs();

        let at_noise_floor = step <= STEP_NOISE_ULPS * f64::EPSILON * x_next;
        let contraction_ok = at_noise_floor
            || (step < prev_step && {
                let q = step / prev_step;
                step * q / (1.0 - q) <= opts.tol_x * x_next
            });
        if step <= opts.tol_x * x_next && residual <= opts.tol_residual && contraction_ok {
            return Ok(SolveResult {
                kappa_hat: x_next,
                method: Method::FixedPoint,
                iterations: k,
                trace,
                residual,
            });
        }

        prev_step = step;
        x = x_next;
        rho_x = rho_next;
    }

    Err(Error::SolverNoConvergence {
        method: Method::FixedPoint.as_str(),
        max_iter: opts.max_iter,
        last_x: x,
    })
}

/// Largest argument the bracket expansion will try before giving up.
const BRACKET_SCALE_CAP: f64 = 1e308;

/// Solve by bracketing the unique root of `rho_nu(x) - rbar` and refining
/// with secant steps safeguarded by bisection. Valid for every `nu > 0`.
pub fn solve_bracket(prob: EstimationProblem, opts: SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    let nu = prob.nu;
    let rbar = prob.rbar;
    let eval = |x: f64| -> Result<f64> { Ok(ratio(RatioPoint::new(nu, x)?)? - rbar) };

    let start = match opts.initial_guess {
        InitialGuess::Heuristic => prob.heuristic_start(),
        InitialGuess::User(v) => v,
    };

    let overflow_to_bracket = |e: Error| match e {
        Error::CfNoConvergence { .. } => Error::BracketOverflow { rbar },
        other => other,
    };

    // Expand down until rho < rbar. rho_nu(x) ~ x/(2 nu) near 0, so this
    // terminates quickly. The start point itself can sit beyond the
    // continued fraction's envelope when rbar is within ulps of 1.
    let mut a = start;
    let mut ga = eval(a).map_err(overflow_to_bracket)?;
    while ga >= 0.0 {
        a /= 4.0;
        if a < 1e-300 {
            return Err(Error::Domain(format!(
                "no sign change found shrinking toward 0 (nu={nu}, rbar={rbar})"
            )));
        }
        ga = eval(a)?;
    }

    // Expand up until rho > rbar. The ratio tends to 1 > rbar, from below
    // for nu >= 1/2 and from above for nu < 1/2 after a hump, so a sign
    // change always exists; running out of range (or out of the continued
    // fraction's envelope) means rbar is too close to 1 to resolve.
    let mut b = if start > a { start } else { a * 4.0 };
    let mut gb = eval(b).map_err(overflow_to_bracket)?;
    while gb <= 0.0 {
        a = b;
        b *= 4.0;
        if b > BRACKET_SCALE_CAP {
            return Err(Error::BracketOverflow { rbar });
        }
        gb = eval(b).map_err(overflow_to_bracket)?;
    }
    // Shrinking may have skipped past the root on the way down; refresh ga.
    ga = eval(a)?;
    if ga == 0.0 {
        let residual = 0.0;
        return Ok(SolveResult {
            kappa_hat: a,
            method: Method::Bracket,
            iterations: 0,
            trace: vec![a],
            residual,
        });
    }
    debug_assert!(ga < 0.0 && gb > 0.0);

    let mut trace = Vec::with_capacity(64);
    for k in 1..=opts.max_iter {
        // Secant through the bracket endpoints, falling back to the
        // midpoint whenever the step leaves the bracket or stalls.
        let secant = b - gb * (b - a) / (gb - ga);
        let mid = 0.5 * (a + b);
        let c = if secant.is_finite() && secant > a && secant < b { secant } else { mid };
        let gc = eval(c)?;
        trace.push(c);

        let width = b - a;
        if gc == 0.0 || (width <= opts.tol_x * c.abs() && gc.abs() <= opts.tol_residual) {
            return Ok(SolveResult {
                kappa_hat: c,
                method: Method::Bracket,
                iterations: k,
                trace,
                residual: gc.abs(),
            });
        }
        if gc < 0.0 {
            a = c;
            ga = gc;
        } else {
            b = c;
            gb = gc;
        }
        // A pure secant sequence can hug one endpoint; force a bisection
        // step whenever the bracket stops shrinking geometrically.
        if (b - a) > 0.75 * width {
            let m = 0.5 * (a + b);
            let gm = eval(m)?;
            trace.push(m);
            if gm == 0.0 || ((b - a) <= opts.tol_x * m.abs() && gm.abs() <= opts.tol_residual) {
                return Ok(SolveResult {
                    kappa_hat: m,
                    method: Method::Bracket,
                    iterations: k,
                    trace,
                    residual: gm.abs(),
                });
            }
            if gm < 0.0 {
                a = m;
                ga = gm;
            } else {
                b = m;
                gb = gm;
            }
        }
    }

    Err(Error::SolverNoConvergence {
        method: Method::Bracket.as_str(),
        max_iter: opts.max_iter,
        last_x: 0.5 * (a + b),
    })
}

/// Run both solvers on the same problem and return `|kappa_fp - kappa_br|`.
/// With both routes converged to their tolerances the difference is bounded
/// by a small multiple of `tol_x * kappa`; anything larger flags an
/// inconsistency between the two paths. Requires `nu >= 1/2`.
pub fn cross_validate(prob: EstimationProblem, opts: SolverOptions) -> Result<f64> {
    let fp = solve_fixed_point(prob, opts)?;
    let br = solve_bracket(prob, opts)?;
    Ok((fp.kappa_hat - br.kappa_hat).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection-oracle value for rho_{3/2}(kappa) = 1/2, i.e. the root of
    /// coth(k) - 1/k = 0.5, computed at 50-digit precision.
    pub(crate) const KAPPA_LANGEVIN_HALF: f64 = 1.79675598472371304;

    fn p(nu: f64, rbar: f64) -> EstimationProblem {
        EstimationProblem::from_order(nu, rbar).unwrap()
    }

    #[test]
    fn problem_construction_contract() {
        assert!(EstimationProblem::from_dimension(3, 0.5).is_ok());
        assert_eq!(EstimationProblem::from_dimension(3, 0.5).unwrap().nu(), 1.5);
        assert!(matches!(
            EstimationProblem::from_dimension(1, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EstimationProblem::from_order(1.0, 0.0),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            EstimationProblem::from_order(1.0, 1.0),
            Err(Error::SaturatedData(_))
        ));
        assert!(matches!(
            EstimationProblem::from_order(1.0, 1.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EstimationProblem::from_order(-2.0, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fixed_point_langevin_case() {
        let r = solve_fixed_point(p(1.5, 0.5), SolverOptions::default()).unwrap();
        assert!((r.kappa_hat - KAPPA_LANGEVIN_HALF).abs() < 1e-10, "{}", r.kappa_hat);
        assert!(r.residual <= 1e-12);
        assert_eq!(*r.trace.last().unwrap(), r.kappa_hat);
        assert_eq!(r.method, Method::FixedPoint);
    }

    #[test]
    fn fixed_point_tanh_case() {
        // nu = 1/2: rho = tanh, so kappa = artanh(rbar)
        let r = solve_fixed_point(p(0.5, 0.7615941559557649), SolverOptions::default()).unwrap();
        assert!((r.kappa_hat - 1.0).abs() < 1e-10, "{}", r.kappa_hat);
    }

    #[test]
    fn fixed_point_stationary_start() {
        let opts = SolverOptions {
            initial_guess: InitialGuess::User(KAPPA_LANGEVIN_HALF),
            ..SolverOptions::default()
        };
        let r = solve_fixed_point(p(1.5, 0.5), opts).unwrap();
        assert!(r.iterations <= 2, "iterations = {}", r.iterations);
        assert!((r.kappa_hat - KAPPA_LANGEVIN_HALF).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_refuses_low_order() {
        let e = solve_fixed_point(p(0.3, 0.9), SolverOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn fixed_point_exhausts_iterations() {
        let opts = SolverOptions { max_iter: 2, ..SolverOptions::default() };
        let e = solve_fixed_point(p(5.0, 0.9), opts).unwrap_err();
        assert!(matches!(e, Error::SolverNoConvergence { .. }));
    }

    #[test]
    fn bracket_agrees_with_fixed_point() {
        let opts = SolverOptions::default();
        let fp = solve_fixed_point(p(1.5, 0.5), opts).unwrap();
        let br = solve_bracket(p(1.5, 0.5), opts).unwrap();
        assert!((fp.kappa_hat - br.kappa_hat).abs() < 1e-9, "{} vs {}", fp.kappa_hat, br.kappa_hat);
        assert!(br.residual <= 1e-12);
        assert_eq!(*br.trace.last().unwrap(), br.kappa_hat);
    }

    #[test]
    fn bracket_below_half_regression() {
        // Frozen by the 50-digit bisection oracle before the build.
        let r = solve_bracket(p(0.3, 0.9), SolverOptions::default()).unwrap();
        assert!((r.kappa_hat - 0.705524327182166112).abs() < 1e-10, "{}", r.kappa_hat);
    }

    #[test]
    fn bracket_artanh_case() {
        let r = solve_bracket(p(0.5, 0.5), SolverOptions::default()).unwrap();
        assert!((r.kappa_hat - 0.5493061443340548457).abs() < 1e-10, "{}", r.kappa_hat);
    }

    #[test]
    fn cross_validate_cases() {
        let opts = SolverOptions::default();
        let d = cross_validate(p(1.5, 0.5), opts).unwrap();
        let k = KAPPA_LANGEVIN_HALF;
        assert!(d <= 10.0 * opts.tol_x * k, "difference {d}");

        let d = cross_validate(p(0.5, 0.1), opts).unwrap();
        assert!(d <= 10.0 * opts.tol_x * 0.11);
        let fp = solve_fixed_point(p(0.5, 0.1), opts).unwrap();
        assert!((fp.kappa_hat - 0.10033534773107558).abs() < 1e-12);
    }

    #[test]
    fn cross_validate_large_rbar() {
        let opts = SolverOptions { max_iter: 200_000, ..SolverOptions::default() };
        let fp = solve_fixed_point(p(5.0, 0.99), opts).unwrap();
        let br = solve_bracket(p(5.0, 0.99), opts).unwrap();
        assert!((fp.kappa_hat - 448.2392277160289).abs() / 448.24 < 1e-9, "{}", fp.kappa_hat);
        let d = (fp.kappa_hat - br.kappa_hat).abs();
        assert!(d <= 1e-9 * fp.kappa_hat, "difference {d}");
    }

    #[test]
    fn trace_steps_contract() {
        // |x_{k+1} - x_k| strictly decreasing after the first step, across
        // both order regimes and a spread of resultant lengths. (At rbar
        // very close to 1 the final steps reach ulp granularity where
        // strict ordering is no longer meaningful.)
        for &nu in &[0.5, 1.0, 1.5, 5.0, 25.0] {
            for &rbar in &[0.01, 0.1, 0.5, 0.9] {
                let opts = SolverOptions { max_iter: 20_000, ..SolverOptions::default() };
                let r = solve_fixed_point(p(nu, rbar), opts).unwrap();
                let steps: Vec<f64> = r.trace.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
                for w in steps.windows(2) {
                    assert!(w[1] < w[0], "nu={nu} rbar={rbar}: steps not contracting: {steps:?}");
                }
            }
        }
    }

    #[test]
    fn start_point_independence() {
        let base = solve_fixed_point(p(2.5, 0.7), SolverOptions::default()).unwrap();
        for &x0 in &[0.01, 1.0, 100.0] {
            let opts = SolverOptions {
                initial_guess: InitialGuess::User(x0),
                ..SolverOptions::default()
            };
            let r = solve_fixed_point(p(2.5, 0.7), opts).unwrap();
            assert!(
                (r.kappa_hat - base.kappa_hat).abs() <= 10.0 * 1e-12 * base.kappa_hat,
                "x0={x0}: {} vs {}",
                r.kappa_hat,
                base.kappa_hat
            );
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let opts = SolverOptions { tol_x: 0.0, ..SolverOptions::default() };
        assert!(matches!(solve_fixed_point(p(1.5, 0.5), opts), Err(Error::Domain(_))));
        let opts = SolverOptions { initial_guess: InitialGuess::User(-1.0), ..SolverOptions::default() };
        assert!(matches!(solve_fixed_point(p(1.5, 0.5), opts), Err(Error::Domain(_))));
        let opts = SolverOptions { max_iter: 0, ..SolverOptions::default() };
        assert!(matches!(solve_bracket(p(1.5, 0.5), opts), Err(Error::Domain(_))));
    }
}
