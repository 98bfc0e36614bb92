//! Numerical certification of the Turan-type inequalities behind the
//! contraction argument, all phrased through the normalized Turanian
//! `T_nu(x) = S_nu(x)/I_nu^2(x)`:
//!
//! * `eq2_right`:  `T < 1/(nu + x)` -- not a valid bound; the sweep
//!   exists to exhibit counterexamples.
//! * `eq4`:        `T < 1/x`, valid for `nu >= 1/2`.
//! * `baricz_upper`: `T < 1/sqrt(x^2 + nu^2 - 1/4)`, valid for `nu >= 1/2`
//!   and tighter than `eq4`.
//! * `segura_lower`: `T > 1/(nu + 1/2 + sqrt(x^2 + (nu+1/2)^2))`, valid for
//!   all `nu >= 0`.
//! * `turan_left_positive`: `T > 0`.
//!
//! Records keep the raw margins so near-ties stay auditable; the
//! per-inequality verdicts additionally ignore violations smaller than
//! [`MARGIN_NOISE_FLOOR`], see its documentation.

use std::io::Write;

use serde::Serialize;

use crate::bessel::{ratio, turanian_normalized, RatioPoint};
use crate::error::{Error, Result};

/// Absolute margin below which a strict-inequality verdict is treated as a
/// tie at double precision rather than a violation.
///
/// At `nu = 1/2` both upper bounds degenerate to `x T = 1` up to terms of
/// order `e^{-2x}`: the true margins are positive but far below the ~1e-15
/// absolute error of any double-precision evaluation of `T`, so raw signs
/// there are rounding noise. Genuine violations (the eq2 counterexamples)
/// carry margins of 1e-4 and larger, ten orders above this floor.
pub const MARGIN_NOISE_FLOOR: f64 = 1e-14;

/// Forward differences whose relative size is below this are treated as
/// flat when classifying monotonicity; the ratio plateaus at 1.0 to the
/// last bit once `tanh`-like saturation sets in.
const FLAT_STEP_TOL: f64 = 1e-13;

/// Tail values must exceed the asymptote by more than this to count as
/// approaching from above.
const TAIL_ABOVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    Eq2Right,
    Eq4,
    BariczUpper,
    SeguraLower,
    TuranLeftPositive,
}

impl Inequality {
    pub const ALL: [Inequality; 5] = [
        Inequality::Eq2Right,
        Inequality::Eq4,
        Inequality::BariczUpper,
        Inequality::SeguraLower,
        Inequality::TuranLeftPositive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Inequality::Eq2Right => "eq2_right",
            Inequality::Eq4 => "eq4",
            Inequality::BariczUpper => "baricz_upper",
            Inequality::SeguraLower => "segura_lower",
            Inequality::TuranLeftPositive => "turan_left_positive",
        }
    }

    /// Smallest order the inequality may be swept at. Only the Baricz
    /// bound restricts the grid: it is stated for `nu >= 1/2` and its
    /// radicand goes negative below 1/4.
    pub fn min_nu(&self) -> f64 {
        match self {
            Inequality::BariczUpper => 0.5,
            _ => 0.0,
        }
    }

    /// Order from which the inequality is known to hold. Sweeping below
    /// this is allowed (and informative) but failures there do not
    /// contradict the bound's validity claim.
    fn asserted_from_nu(&self) -> f64 {
        match self {
            Inequality::Eq4 | Inequality::BariczUpper => 0.5,
            _ => 0.0,
        }
    }

    fn is_upper_bound(&self) -> bool {
        matches!(
            self,
            Inequality::Eq2Right | Inequality::Eq4 | Inequality::BariczUpper
        )
    }

    /// The claim the sweep verifies: "holds everywhere it is asserted"
    /// for the valid bounds, "has at least one counterexample" for the
    /// invalid right side of eq. (2).
    fn expects_counterexample(&self) -> bool {
        matches!(self, Inequality::Eq2Right)
    }

    fn bound(&self, nu: f64, x: f64) -> f64 {
        match self {
            Inequality::Eq2Right => 1.0 / (nu + x),
            Inequality::Eq4 => 1.0 / x,
            // (nu^2 - 1/4) grouped first: at nu = 1/2 it is exactly zero,
            // while (x^2 + nu^2) - 1/4 would wipe out x^2 for small x.
            Inequality::BariczUpper => 1.0 / (x * x + (nu * nu - 0.25)).sqrt(),
            Inequality::SeguraLower => {
                let s = nu + 0.5;
                1.0 / (s + (x * x + s * s).sqrt())
            }
            Inequality::TuranLeftPositive => 0.0,
        }
    }
}

impl std::fmt::Display for Inequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Inequality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Inequality::ALL
            .iter()
            .copied()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown inequality id: {s}")))
    }
}

/// Evaluation grid: sorted orders and sorted positive arguments.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    nu_values: Vec<f64>,
    x_values: Vec<f64>,
}

impl SweepGrid {
    pub fn new(mut nu_values: Vec<f64>, mut x_values: Vec<f64>) -> Result<Self> {
        if nu_values.is_empty() || x_values.is_empty() {
            return Err(Error::Domain("sweep grid must not be empty".into()));
        }
        if nu_values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Domain("all grid orders must be positive and finite".into()));
        }
        if x_values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Domain("all grid arguments must be positive and finite".into()));
        }
        nu_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        x_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(SweepGrid { nu_values, x_values })
    }

    /// The default sweep grid: 40 log-spaced arguments per decade over
    /// [1e-4, 1e4] and orders covering both monotonicity regimes.
    pub fn default_grid() -> Self {
        SweepGrid::new(
            vec![0.1, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 5.0, 10.0, 50.0],
            log_spaced(1e-4, 1e4, 40),
        )
        .expect("default grid is valid")
    }

    /// Keep only orders with `nu >= min_nu`.
    pub fn restrict_nu(&self, min_nu: f64) -> Result<Self> {
        let nus: Vec<f64> = self.nu_values.iter().copied().filter(|&n| n >= min_nu).collect();
        SweepGrid::new(nus, self.x_values.clone())
    }

    pub fn nu_values(&self) -> &[f64] {
        &self.nu_values
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }
}

/// Log-spaced grid with `per_decade` points per decade, endpoints included.
pub fn log_spaced(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && per_decade > 0);
    let lo = min.log10();
    let hi = max.log10();
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    let mut xs: Vec<f64> = (0..=n)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64))
        .collect();
    // pin the endpoints exactly
    xs[0] = min;
    xs[n] = max;
    xs
}

/// One grid point of a sweep. `holds` is the strict comparison
/// `margin > 0`; the raw margin is kept so ties can be audited.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityRecord {
    pub nu: f64,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for upper bounds, `lhs - rhs` for lower bounds.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub inequality: Inequality,
    pub records: Vec<InequalityRecord>,
}

/// JSON-facing digest of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub inequality: Inequality,
    pub records: usize,
    pub counterexamples: usize,
    pub min_margin: f64,
    pub argmin_nu: f64,
    pub argmin_x: f64,
    pub claim_upheld: bool,
}

impl SweepReport {
    /// Records where the strict comparison failed.
    pub fn counterexamples(&self) -> Vec<&InequalityRecord> {
        self.records.iter().filter(|r| !r.holds).collect()
    }

    /// Whether the sweep matches the inequality's expected status: the
    /// valid bounds must hold at every order in their known domain
    /// (violations within [`MARGIN_NOISE_FLOOR`] of zero are rounding
    /// ties, not counterexamples), while eq2_right must exhibit at least
    /// one genuine counterexample.
    pub fn claim_upheld(&self) -> bool {
        let from_nu = self.inequality.asserted_from_nu();
        let genuine_violation = |r: &InequalityRecord| r.margin <= -MARGIN_NOISE_FLOOR;
        if self.inequality.expects_counterexample() {
            self.records.iter().any(genuine_violation)
        } else {
            !self.records.iter().any(|r| r.nu >= from_nu && genuine_violation(r))
        }
    }

    /// Flat CSV: `inequality_id,nu,x,lhs,rhs,margin,holds`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "inequality_id,nu,x,lhs,rhs,margin,holds")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{:.17e},{:.17e},{:.17e},{}",
                self.inequality, r.nu, r.x, r.lhs, r.rhs, r.margin, r.holds
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> SweepSummary {
        let mut min_margin = f64::INFINITY;
        let mut argmin_nu = f64::NAN;
        let mut argmin_x = f64::NAN;
        for r in &self.records {
            if r.margin < min_margin {
                min_margin = r.margin;
                argmin_nu = r.nu;
                argmin_x = r.x;
            }
        }
        SweepSummary {
            inequality: self.inequality,
            records: self.records.len(),
            counterexamples: self.records.iter().filter(|r| !r.holds).count(),
            min_margin,
            argmin_nu,
            argmin_x,
            claim_upheld: self.claim_upheld(),
        }
    }
}

/// Evaluate one inequality over a grid, one record per point, in grid order.
pub fn sweep(inequality: Inequality, grid: &SweepGrid) -> Result<SweepReport> {
    let min_nu = inequality.min_nu();
    if let Some(&bad) = grid.nu_values.iter().find(|&&n| n < min_nu) {
        return Err(Error::Domain(format!(
            "{inequality} requires nu >= {min_nu}, grid contains nu={bad}"
        )));
    }

    let mut records = Vec::with_capacity(grid.nu_values.len() * grid.x_values.len());
    for &nu in &grid.nu_values {
        for &x in &grid.x_values {
            let t = turanian_normalized(RatioPoint::new(nu, x)?)?.value();
            let bound = inequality.bound(nu, x);
            let (lhs, rhs, margin) = if inequality.is_upper_bound() {
                (t, bound, bound - t)
            } else {
                (t, bound, t - bound)
            };
            records.push(InequalityRecord { nu, x, lhs, rhs, margin, holds: margin > 0.0 });
        }
    }
    Ok(SweepReport { inequality, records })
}

/// Sharpness check of the contraction constant: returns
/// `x_large * T_nu(x_large)`, the quantity that tends to 1 from below and
/// keeps the constant 1 in `Phi' < 1` from being improvable.
///
/// Valid bounds put the value in `(1 - 2(nu + 1/2)/x_large, 1)`; at
/// `nu = 1/2` the distance to 1 is below double resolution, so the upper
/// edge is verified by tests only where a double can see it.
pub fn asymptote_check(nu: f64, x_large: f64) -> Result<f64> {
    if !nu.is_finite() || nu < 0.5 {
        return Err(Error::Domain(format!("asymptote check requires nu >= 1/2, got {nu}")));
    }
    let min_x = 100.0 * (nu + 1.0);
    if !x_large.is_finite() || x_large < min_x {
        return Err(Error::Domain(format!(
            "asymptote check requires x >= 100 (nu + 1) = {min_x}, got {x_large}"
        )));
    }
    let t = turanian_normalized(RatioPoint::new(nu, x_large)?)?.value();
    Ok(x_large * t)
}

/// Shape of `x -> rho_nu(x)` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileShape {
    /// All (resolvable) forward differences positive.
    Increasing,
    /// Rises to a single maximum and then decreases.
    Unimodal { argmax: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityProfile {
    pub shape: ProfileShape,
    /// Whether the tail sits above the asymptote `rho = 1`; true for
    /// `nu` in (0, 1/2), false from `nu = 1/2` on.
    pub tail_above_asymptote: bool,
}

/// Classify the finite-difference sign pattern of `rho_nu` over `grid_x`.
///
/// The grid must be sorted, have at least 3 points and span [1e-3, 1e3].
/// Differences below the saturation plateau's resolution are treated as
/// flat. More than one sign change means the kernel lost accuracy and is
/// reported as [`Error::Classification`].
pub fn monotonicity_profile(nu: f64, grid_x: &[f64]) -> Result<MonotonicityProfile> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::Domain(format!("order nu must be positive, got {nu}")));
    }
    if grid_x.len() < 3 {
        return Err(Error::Domain("monotonicity grid needs at least 3 points".into()));
    }
    if grid_x.windows(2).any(|w| w[1] <= w[0] || w[0].is_nan() || w[1].is_nan()) {
        return Err(Error::Domain("monotonicity grid must be strictly increasing".into()));
    }
    if grid_x[0] > 1e-3 || *grid_x.last().unwrap() < 1e3 {
        return Err(Error::Domain("monotonicity grid must span at least [1e-3, 1e3]".into()));
    }

    let values: Vec<f64> = grid_x
        .iter()
        .map(|&x| ratio(RatioPoint::new(nu, x)?))
        .collect::<Result<_>>()?;

    // Sign pattern of resolvable forward differences.
    let mut signs: Vec<i8> = Vec::with_capacity(values.len() - 1);
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= FLAT_STEP_TOL * w[0].abs().max(w[1].abs()) {
            continue;
        }
        signs.push(if d > 0.0 { 1 } else { -1 });
    }
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();

    let shape = match sign_changes {
        0 if signs.iter().all(|&s| s == 1) => ProfileShape::Increasing,
        1 if signs.first() == Some(&1) => {
            let (imax, _) = values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            ProfileShape::Unimodal { argmax: grid_x[imax] }
        }
        _ => return Err(Error::Classification { nu, sign_changes }),
    };

    Ok(MonotonicityProfile {
        shape,
        tail_above_asymptote: *values.last().unwrap() > 1.0 + TAIL_ABOVE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::new(vec![], vec![1.0]).is_err());
        assert!(SweepGrid::new(vec![1.0], vec![]).is_err());
        assert!(SweepGrid::new(vec![-1.0], vec![1.0]).is_err());
        assert!(SweepGrid::new(vec![1.0], vec![0.0]).is_err());
        let g = SweepGrid::new(vec![2.0, 1.0], vec![3.0, 0.5]).unwrap();
        assert_eq!(g.nu_values(), &[1.0, 2.0]);
        assert_eq!(g.x_values(), &[0.5, 3.0]);
    }

    #[test]
    fn default_grid_shape() {
        let g = SweepGrid::default_grid();
        assert_eq!(g.nu_values().len(), 10);
        assert_eq!(g.x_values().len(), 321);
        assert_eq!(g.x_values()[0], 1e-4);
        assert_eq!(*g.x_values().last().unwrap(), 1e4);
    }

    #[test]
    fn eq4_example_point() {
        let g = SweepGrid::new(vec![0.5], vec![1.0]).unwrap();
        let rep = sweep(Inequality::Eq4, &g).unwrap();
        let r = &rep.records[0];
        assert!((r.lhs - 0.588973624533020837).abs() < 1e-13);
        assert_eq!(r.rhs, 1.0);
        assert!(r.holds);
        assert!(rep.claim_upheld());
    }

    #[test]
    fn segura_example_point() {
        let g = SweepGrid::new(vec![0.5], vec![1.0]).unwrap();
        let rep = sweep(Inequality::SeguraLower, &g).unwrap();
        let r = &rep.records[0];
        assert!((r.rhs - 1.0 / (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn eq2_right_has_counterexamples() {
        let g = SweepGrid::new(vec![1.0], log_spaced(10.0, 1000.0, 10)).unwrap();
        let rep = sweep(Inequality::Eq2Right, &g).unwrap();
        assert!(!rep.counterexamples().is_empty());
        assert!(rep.claim_upheld()); // the claim here is "invalid"
        // the violation at x=10 has a macroscopic margin
        let r10 = rep.records.iter().find(|r| (r.x - 10.0).abs() < 1e-12).unwrap();
        assert!(r10.margin < -1e-3, "margin {}", r10.margin);
    }

    #[test]
    fn baricz_grid_restriction() {
        let g = SweepGrid::new(vec![0.1, 1.0], vec![1.0]).unwrap();
        assert!(matches!(sweep(Inequality::BariczUpper, &g), Err(Error::Domain(_))));
        let g = g.restrict_nu(0.5).unwrap();
        assert!(sweep(Inequality::BariczUpper, &g).is_ok());
    }

    #[test]
    fn asymptote_check_window_and_domain() {
        let v = asymptote_check(1.0, 1e4).unwrap();
        assert!(v > 1.0 - 2.0 * 1.5 / 1e4 && v < 1.0, "{v}");
        assert!(matches!(asymptote_check(0.3, 1e4), Err(Error::Domain(_))));
        // precondition x >= 100 (nu + 1)
        assert!(matches!(asymptote_check(0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(asymptote_check(5.0, 400.0), Err(Error::Domain(_))));
    }

    #[test]
    fn monotonicity_shapes() {
        let grid = log_spaced(1e-3, 1e3, 40);
        let p = monotonicity_profile(1.5, &grid).unwrap();
        assert_eq!(p.shape, ProfileShape::Increasing);
        assert!(!p.tail_above_asymptote);

        let p = monotonicity_profile(0.3, &grid).unwrap();
        assert!(p.tail_above_asymptote);
        match p.shape {
            ProfileShape::Unimodal { argmax } => {
                // 50-digit scan puts the maximum near x = 1.68
                assert!((argmax - 1.68).abs() < 0.2, "argmax {argmax}");
            }
            ProfileShape::Increasing => panic!("nu=0.3 must be unimodal"),
        }

        // boundary order: increasing, tail saturates at (not above) 1
        let p = monotonicity_profile(0.5, &grid).unwrap();
        assert_eq!(p.shape, ProfileShape::Increasing);
        assert!(!p.tail_above_asymptote);
    }

    #[test]
    fn monotonicity_grid_preconditions() {
        assert!(matches!(monotonicity_profile(1.0, &[1.0, 2.0]), Err(Error::Domain(_))));
        let short = log_spaced(1e-2, 1e3, 10);
        assert!(matches!(monotonicity_profile(1.0, &short), Err(Error::Domain(_))));
        let unsorted = vec![1e-3, 2.0, 1.0, 1e3];
        assert!(matches!(monotonicity_profile(1.0, &unsorted), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_and_summary() {
        let g = SweepGrid::new(vec![1.0], vec![0.5, 2.0]).unwrap();
        let rep = sweep(Inequality::Eq4, &g).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "inequality_id,nu,x,lhs,rhs,margin,holds");
        assert_eq!(lines.count(), 2);
        assert!(text.starts_with("inequality_id"));

        let s = rep.summary();
        assert_eq!(s.records, 2);
        assert_eq!(s.counterexamples, 0);
        assert!(s.claim_upheld);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["inequality"], "eq4");
    }

    #[test]
    fn inequality_ids_round_trip() {
        for i in Inequality::ALL {
            let parsed: Inequality = i.as_str().parse().unwrap();
            assert_eq!(parsed, i);
        }
        assert!("nope".parse::<Inequality>().is_err());
    }
}
