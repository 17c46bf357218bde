//! Diagnostics that separate pressure functions from arbitrary convex
//! analytic functions.
//!
//! Two inequalities are evaluated pointwise for a candidate `P`, given a
//! user-supplied constant `M_φ ≥ 0`:
//!
//! ```text
//! fourth order:  √(2π³) P''^{3/2} |P'''|  ≤  9|P'''| + 2|P''''| + 3√(2π³) M_φ P''^{5/2}
//! third order:   |P''' (1 − √(2π) P''^{3/2})|  ≤  3 M_φ P''
//! ```
//!
//! together with the divergence diagnostic `D(t) = P'''/P'' − √(2π P'')`.
//! The evaluator reports both sides; it does not decide whether a candidate
//! is a pressure function.
//!
//! The family `F(t) = at + b + e^{−ct²} + e^{−ct²}/t` is convex on `(0, ∞)`
//! for `c > 1/(2√2)` and has `D(t) ≈ −2ct` for large `t`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::{finite_difference_jet, pressure_jet, q_values, richardson};
use crate::symbolic::{equilibrium_weights, CylinderPotential};

/// Smallest `c` for which the `F_{a,b,c}` family is convex on `(0, ∞)`.
pub fn fabc_min_c() -> f64 {
    1.0 / (2.0 * 2f64.sqrt())
}

/// A function whose derivatives feed the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateFunction {
    /// `at + b + e^{−ct²} + e^{−ct²}/t` on `(0, ∞)`.
    Fabc { a: f64, b: f64, c: f64 },
    /// `t ↦ P(tφ)`.
    Potential { potential: CylinderPotential },
    /// Derivatives supplied per point: `derivs = [F, F', F'', F''', F'''']`.
    Tabulated { points: Vec<TabulatedPoint> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPoint {
    pub t: f64,
    pub derivs: [f64; 5],
}

/// `F_{a,b,c}` and its first three derivatives at `t`.
///
/// Every derivative of order `≥ 2` is `e^{−ct²}` times a Laurent polynomial in
/// `t`; those polynomials are kept in `reduced` so ratios stay exact after
/// `e^{−ct²}` underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FabcDerivs {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// `F''/e^{−ct²}` and `F'''/e^{−ct²}`.
    pub reduced: [f64; 2],
    /// `−ct²`.
    pub log_weight: f64,
}

impl FabcDerivs {
    /// `F(t) − tF'(t)`: where the tangent line at `t` meets the vertical axis.
    pub fn intercept(&self, b: f64, c: f64, t: f64) -> f64 {
        b + self.log_weight.exp() * (1.0 + 2.0 / t + 2.0 * c * t * t + 2.0 * c * t)
    }
}

fn check_fabc(a: f64, b: f64, c: f64, t: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("a and b must be positive, got a = {a}, b = {b}")));
    }
    if !(c > fabc_min_c()) {
        return Err(Error::Domain(format!("c = {c} must exceed 1/(2√2) = {}", fabc_min_c())));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} outside (0, ∞)")));
    }
    Ok(())
}

fn fabc_reduced2(c: f64, t: f64) -> f64 {
    4.0 * c * c * t * t + 4.0 * c * c * t - 2.0 * c + 2.0 * c / t + 2.0 / t.powi(3)
}

fn fabc_reduced3(c: f64, t: f64) -> f64 {
    let c2 = c * c;
    let c3 = c2 * c;
    -8.0 * c3 * t.powi(3) - 8.0 * c3 * t * t + 12.0 * c2 * t - 6.0 * c / (t * t) - 6.0 / t.powi(4)
}

/// `F, F', F'', F'''` of `F_{a,b,c}` at `t`.
pub fn f_abc_derivs(a: f64, b: f64, c: f64, t: f64) -> Result<FabcDerivs> {
    check_fabc(a, b, c, t)?;
    let log_weight = -c * t * t;
    let e = log_weight.exp();
    let r2 = fabc_reduced2(c, t);
    let r3 = fabc_reduced3(c, t);
    Ok(FabcDerivs {
        f: a * t + b + e + e / t,
        f1: a + e * (-2.0 * c * t - 2.0 * c - 1.0 / (t * t)),
        f2: e * r2,
        f3: e * r3,
        reduced: [r2, r3],
        log_weight,
    })
}

/// `F''''/e^{−ct²}`, from a finite difference of the reduced third derivative:
/// `(e^{−ct²} r₃)' = e^{−ct²}(r₃' − 2ct r₃)`.
fn fabc_reduced4(c: f64, t: f64) -> f64 {
    let h = 0.05 * t.min(1.0);
    let r3 = |s: f64| fabc_reduced3(c, s);
    richardson(&r3, t, h, 1) - 2.0 * c * t * fabc_reduced3(c, t)
}

/// Derivatives 2–4 at one point, with the quantities that survive underflow.
struct LocalJet {
    f2: f64,
    f3: f64,
    f4: f64,
    /// Sign of `F''` when its magnitude underflows.
    f2_positive: bool,
    /// `F'''/F''`, if `F'' > 0`.
    ratio: Option<f64>,
}

fn local_jet(candidate: &CandidateFunction, t: f64) -> Result<LocalJet> {
    match candidate {
        CandidateFunction::Fabc { a, b, c } => {
            let d = f_abc_derivs(*a, *b, *c, t)?;
            let e = d.log_weight.exp();
            let [r2, r3] = d.reduced;
            Ok(LocalJet {
                f2: d.f2,
                f3: d.f3,
                f4: e * fabc_reduced4(*c, t),
                f2_positive: r2 > 0.0,
                ratio: (r2 > 0.0).then(|| r3 / r2),
            })
        }
        CandidateFunction::Potential { potential } => {
            let jet = if potential.space().is_full() && potential.window() == 1 {
                pressure_jet(potential, t, 4)?
            } else {
                finite_difference_jet(potential, t, 4)?
            };
            let (f2, f3) = (jet.derivs[2], jet.derivs[3]);
            Ok(LocalJet { f2, f3, f4: jet.derivs[4], f2_positive: f2 > 0.0, ratio: (f2 > 0.0).then(|| f3 / f2) })
        }
        CandidateFunction::Tabulated { points } => {
            let p = points
                .iter()
                .find(|p| p.t == t)
                .ok_or_else(|| Error::Domain(format!("no tabulated derivatives at t = {t}")))?;
            let [_, _, f2, f3, f4] = p.derivs;
            Ok(LocalJet { f2, f3, f4, f2_positive: f2 > 0.0, ratio: (f2 > 0.0).then(|| f3 / f2) })
        }
    }
}

/// One grid point of the divergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergencePoint {
    pub t: f64,
    pub f2: f64,
    /// `F''' / F'' − √(2π F'')`; `None` (flagged) where `F'' ≤ 0`.
    pub d: Option<f64>,
}

/// `D(t)` on every grid point, flagging rather than dropping points with
/// `F'' ≤ 0`.
pub fn divergence_diagnostic(candidate: &CandidateFunction, grid: &[f64]) -> Result<Vec<DivergencePoint>> {
    grid.par_iter()
        .map(|&t| {
            let jet = local_jet(candidate, t)?;
            Ok(DivergencePoint { t, f2: jet.f2, d: divergence(&jet) })
        })
        .collect()
}

fn divergence(jet: &LocalJet) -> Option<f64> {
    jet.ratio.map(|r| r - (2.0 * PI * jet.f2).sqrt())
}

/// Both inequalities and the divergence diagnostic at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidityPoint {
    pub t: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    /// `F'' > 0`; when false the entries below that need it are `None`.
    pub convex: bool,
    pub d: Option<f64>,
    pub fourth_order_lhs: f64,
    pub fourth_order_rhs: f64,
    pub fourth_order_holds: bool,
    pub third_order_lhs: f64,
    pub third_order_rhs: f64,
    pub third_order_holds: bool,
    /// `√(2π) P''^{3/2}`; equal to 1 exactly where `P'' = (2π)^{-1/3}`.
    pub edgeworth_factor: f64,
    /// `P'''(1 − √(2π) P''^{3/2})` with its sign. For window-1 potentials
    /// the eigenfunction terms vanish and the third-order inequality would
    /// force this to 0 whenever `M_φ = 0`; any nonzero value here records
    /// that tension.
    pub bernoulli_tension: Option<f64>,
    /// Third-order LHS recomputed from `Q₂/Q₀²` and the third central moment
    /// (window-1 potentials on the full shift only).
    pub third_order_lhs_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub m_phi: f64,
    pub points: Vec<RigidityPoint>,
}

impl RigidityReport {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn divergence(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.d).collect()
    }

    /// Grid points where `F'' ≤ 0`.
    pub fn flagged(&self) -> Vec<f64> {
        self.points.iter().filter(|p| !p.convex).map(|p| p.t).collect()
    }
}

fn sqrt_2pi3() -> f64 {
    (2.0 * PI.powi(3)).sqrt()
}

/// Evaluates both inequalities and `D(t)` on `grid`.
pub fn rigidity_inequalities(candidate: &CandidateFunction, grid: &[f64], m_phi: f64) -> Result<RigidityReport> {
    if !(m_phi >= 0.0) || !m_phi.is_finite() {
        return Err(Error::Domain(format!("M_phi must be a finite non-negative number, got {m_phi}")));
    }
    let points = grid.par_iter().map(|&t| rigidity_point(candidate, t, m_phi)).collect::<Result<Vec<_>>>()?;
    Ok(RigidityReport { m_phi, points })
}

fn rigidity_point(candidate: &CandidateFunction, t: f64, m_phi: f64) -> Result<RigidityPoint> {
    let jet = local_jet(candidate, t)?;
    let (f2, f3, f4) = (jet.f2, jet.f3, jet.f4);
    let p2 = f2.max(0.0);
    let edgeworth_factor = (2.0 * PI).sqrt() * p2.powf(1.5);
    let fourth_order_lhs = sqrt_2pi3() * p2.powf(1.5) * f3.abs();
    let fourth_order_rhs = 9.0 * f3.abs() + 2.0 * f4.abs() + 3.0 * sqrt_2pi3() * m_phi * p2.powf(2.5);
    let tension = f3 * (1.0 - edgeworth_factor);
    let third_order_lhs = tension.abs();
    let third_order_rhs = 3.0 * m_phi * p2;

    let (bernoulli_tension, third_order_lhs_check) = match candidate {
        CandidateFunction::Potential { potential } if potential.space().is_full() && potential.window() == 1 => {
            (Some(tension), Some(third_order_lhs_from_moments(potential, t)?))
        }
        CandidateFunction::Potential { .. } => (Some(tension), None),
        _ => (None, None),
    };

    Ok(RigidityPoint {
        t,
        f2,
        f3,
        f4,
        convex: jet.f2_positive,
        d: divergence(&jet),
        fourth_order_lhs,
        fourth_order_rhs,
        fourth_order_holds: fourth_order_lhs <= fourth_order_rhs,
        third_order_lhs,
        third_order_rhs,
        third_order_holds: third_order_lhs <= third_order_rhs,
        edgeworth_factor,
        bernoulli_tension,
        third_order_lhs_check,
    })
}

fn third_order_lhs_from_moments(potential: &CylinderPotential, t: f64) -> Result<f64> {
    let p2 = q_values(potential.values(), t)?.second_derivative();
    let weights = equilibrium_weights(potential, t)?;
    let mean = weights.expect(potential.values(), |c| c);
    let m3 = weights.expect(potential.values(), |c| (c - mean).powi(3));
    Ok((m3 * (1.0 - (2.0 * PI).sqrt() * p2.powf(1.5))).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fabc(a: f64, b: f64, c: f64) -> CandidateFunction {
        CandidateFunction::Fabc { a, b, c }
    }

    fn potential(values: &[f64]) -> CandidateFunction {
        CandidateFunction::Potential { potential: CylinderPotential::full_shift(values.to_vec()).unwrap() }
    }

    #[test]
    fn fabc_value_example() {
        let d = f_abc_derivs(2.0, 3.0, 1.0, 1.0).unwrap();
        assert!((d.f - (5.0 + 2.0 * (-1f64).exp())).abs() < 1e-15);
        assert!((d.f - 5.735_758_882).abs() < 1e-9);
        for t in [0.1, 1.0, 10.0] {
            assert!(f_abc_derivs(2.0, 3.0, 1.0, t).unwrap().reduced[0] > 0.0);
        }
    }

    #[test]
    fn fabc_domain_errors() {
        assert!(f_abc_derivs(2.0, 3.0, 0.3, 1.0).is_err());
        assert!(f_abc_derivs(-1.0, 3.0, 1.0, 1.0).is_err());
        assert!(f_abc_derivs(2.0, 3.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn fabc_second_derivative_against_differences() {
        let f = |t: f64| f_abc_derivs(2.0, 3.0, 1.0, t).unwrap().f;
        let fd = richardson(&f, 2.0, 1e-2, 2);
        let exact = f_abc_derivs(2.0, 3.0, 1.0, 2.0).unwrap().f2;
        assert!(((fd - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn fourth_derivative_matches_closed_form() {
        let (c, t): (f64, f64) = (1.3, 0.8);
        let closed = 16.0 * c.powi(4) * t.powi(4) + 16.0 * c.powi(4) * t.powi(3)
            - 48.0 * c.powi(3) * t * t
            - 16.0 * c.powi(3) * t
            + 12.0 * c * c
            + 12.0 * c * c / t
            + 24.0 * c / t.powi(3)
            + 24.0 / t.powi(5);
        assert!(((fabc_reduced4(c, t) - closed) / closed).abs() < 1e-5);
    }

    #[test]
    fn divergence_slope() {
        let d = divergence_diagnostic(&fabc(2.0, 3.0, 1.0), &[20.0]).unwrap();
        let ratio = d[0].d.unwrap() / 20.0;
        assert!((ratio + 2.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn constant_potential_is_flagged() {
        let d = divergence_diagnostic(&potential(&[1.0, 1.0]), &[0.5, 1.0, 2.0]).unwrap();
        assert!(d.iter().all(|p| p.d.is_none()));
        let report = rigidity_inequalities(&potential(&[1.0, 1.0]), &[0.5, 1.0], 0.0).unwrap();
        assert_eq!(report.flagged(), vec![0.5, 1.0]);
        assert!(report.points.iter().all(|p| p.fourth_order_holds && p.third_order_holds));
    }

    #[test]
    fn two_point_potential_bounded_divergence() {
        let grid: Vec<f64> = (1..=100).map(|i| 0.5 * i as f64).collect();
        let d = divergence_diagnostic(&potential(&[0.0, 1.0]), &grid).unwrap();
        assert!(d.iter().all(|p| p.d.is_some_and(|v| v.abs() < 10.0)));
    }

    #[test]
    fn symmetric_two_point_at_zero() {
        let report = rigidity_inequalities(&potential(&[0.0, 1.0]), &[0.0], 0.0).unwrap();
        let p = report.points[0];
        assert!(p.third_order_lhs.abs() < 1e-15 && p.third_order_holds);
    }

    #[test]
    fn skewed_potential_report_is_consistent() {
        let report = rigidity_inequalities(&potential(&[0.0, 1.0, 5.0]), &[1.0], 0.0).unwrap();
        let p = report.points[0];
        assert!(p.fourth_order_lhs.is_finite() && p.fourth_order_rhs.is_finite());
        let check = p.third_order_lhs_check.unwrap();
        assert!((check - p.third_order_lhs).abs() < 1e-12 * check.max(1.0));
    }

    #[test]
    fn tabulated_points() {
        let table = CandidateFunction::Tabulated {
            points: vec![TabulatedPoint { t: 1.0, derivs: [0.0, 0.0, 0.25, 0.0, -0.125] }],
        };
        let report = rigidity_inequalities(&table, &[1.0], 0.0).unwrap();
        assert_eq!(report.points[0].third_order_lhs, 0.0);
        assert!(rigidity_inequalities(&table, &[2.0], 0.0).is_err());
    }
}
