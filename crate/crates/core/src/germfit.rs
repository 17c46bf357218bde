//! Realising a prescribed 1-jet or 2-jet of a pressure function at `t_*`
//! with a window-1 potential on the full shift over `n` symbols.
//!
//! With `Q₀ = Σ e^{t z_i}` and `Q₁ = Σ z_i e^{t z_i}` the jet conditions read
//! `Q₀ = e^{a₀}`, `Q₁ = a₁ e^{a₀}` and `Q₂ / Q₀² = a₂`. The solvers work in
//! the two-block family (`k` symbols at a lower value `u`, `n − k` at an
//! upper value `v`), where eliminating `v` through the `Q₀` constraint
//! leaves a strictly monotone equation in `u`. All sums are evaluated per
//! block as `exp(log m + t z − a₀)`, so the multiplicities may be far beyond
//! anything that could be tabulated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, damped_newton_2d};
use crate::pressure::{pressure_jet, TaylorJet};
use crate::symbolic::{CylinderPotential, MAX_ALPHABET};

/// Tolerance for matching the second coefficient in [`fit_level2`].
pub const A2_TOL: f64 = 1e-8;
/// Relative tolerance of the Newton polish (on constraints divided by `e^{a₀}`).
pub const NEWTON_TOL: f64 = 1e-13;
const MAX_HALVINGS: usize = 40;
const MAX_NEWTON_STEPS: usize = 200;

/// Coefficients `a₀, a₁[, a₂]` of `a₀ + a₁(t − t_*) + a₂(t − t_*)²/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Germ {
    pub t_star: f64,
    pub coeffs: Vec<f64>,
}

impl Germ {
    pub fn level1(t_star: f64, a0: f64, a1: f64) -> Result<Self> {
        Self::new(t_star, vec![a0, a1])
    }

    pub fn level2(t_star: f64, a0: f64, a1: f64, a2: f64) -> Result<Self> {
        Self::new(t_star, vec![a0, a1, a2])
    }

    pub fn new(t_star: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(t_star > 0.0) || !t_star.is_finite() {
            return Err(Error::Domain(format!("t_star must be positive, got {t_star}")));
        }
        if !(2..=3).contains(&coeffs.len()) {
            return Err(Error::Domain(format!("a germ needs 2 or 3 coefficients, got {}", coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("germ coefficients must be finite".into()));
        }
        if coeffs.len() == 3 && coeffs[2] < 0.0 {
            return Err(Error::Domain(format!("a2 = {} is negative, but P'' is a variance", coeffs[2])));
        }
        Ok(Self { t_star, coeffs })
    }

    pub fn a0(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn a1(&self) -> f64 {
        self.coeffs[1]
    }

    pub fn a2(&self) -> Option<f64> {
        self.coeffs.get(2).copied()
    }

    /// Value `(a₀ − log n) / t_*` of the constant potential with `P(t_*) = a₀`.
    fn constant_level(&self, n: f64) -> f64 {
        (self.a0() - n.ln()) / self.t_star
    }

    fn at_constant_boundary(&self, n: f64) -> bool {
        let c = self.constant_level(n);
        (self.a1() - c).abs() <= 1e-12 * self.a1().abs().max(1.0)
    }
}

/// Fitted potential values with the jet they produce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub z: Vec<f64>,
    /// Jet of the fitted potential, recomputed from `z`.
    pub achieved: TaylorJet,
    /// `|Q₀ − e^{a₀}|`, `|Q₁ − a₁e^{a₀}|` and, for level 2, `|P'' − a₂|`.
    pub residuals: Vec<f64>,
    pub feasible_a2: Option<(f64, f64)>,
}

impl FitResult {
    pub fn potential(&self) -> Result<CylinderPotential> {
        CylinderPotential::full_shift(self.z.clone())
    }
}

/// `(a₀ − log n)/t_* < a₁ < a₀/t_*`.
pub fn feasibility_level1(germ: &Germ, n: f64) -> bool {
    if !(n >= 2.0) {
        return false;
    }
    let a1 = germ.a1();
    germ.constant_level(n) < a1 && a1 < germ.a0() / germ.t_star
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 symbols, got {n}")));
    }
    if n > MAX_ALPHABET {
        return Err(Error::SizeLimit(format!("n = {n} exceeds {MAX_ALPHABET}")));
    }
    Ok(())
}

fn require_level1_feasible(germ: &Germ, n: usize) -> Result<()> {
    if feasibility_level1(germ, n as f64) || germ.at_constant_boundary(n as f64) {
        return Ok(());
    }
    Err(Error::Infeasible(format!(
        "a1 = {} must satisfy (a0 - log n)/t* = {} < a1 < a0/t* = {}",
        germ.a1(),
        germ.constant_level(n as f64),
        germ.a0() / germ.t_star
    )))
}

/// Values with real multiplicities; `blocks[i] = (multiplicity, value)`.
#[derive(Debug, Clone, Copy)]
struct Moments {
    /// `Q₀ / e^{a₀}`.
    mass: f64,
    /// `Q₁ / e^{a₀}`.
    first: f64,
    /// `Q₂ / Q₀²`, the variance under the normalised weights.
    variance: f64,
}

fn moments(blocks: &[(f64, f64)], t: f64, a0: f64) -> Moments {
    let weights: Vec<f64> = blocks.iter().map(|&(m, z)| (m.ln() + t * z - a0).exp()).collect();
    let mass: f64 = weights.iter().sum();
    let first: f64 = weights.iter().zip(blocks).map(|(w, &(_, z))| w * z).sum();
    let mean = first / mass;
    let variance = weights.iter().zip(blocks).map(|(w, &(_, z))| w * (z - mean).powi(2)).sum::<f64>() / mass;
    Moments { mass, first, variance }
}

/// A two-block solution: `k` symbols at `lower`, `n − k` at `upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TwoBlock {
    k: f64,
    lower: f64,
    upper: f64,
    a2: f64,
}

/// Steps down from `top` until `pred` holds.
fn descend(top: f64, mut pred: impl FnMut(f64) -> bool) -> Result<f64> {
    let mut step = 1.0;
    for _ in 0..2000 {
        let x = top - step;
        if pred(x) {
            return Ok(x);
        }
        step *= 2.0;
        if !step.is_finite() {
            break;
        }
    }
    Err(Error::Convergence(format!("no lower bracket below {top}")))
}

/// Solves the two constraints with `k` symbols at `u ≤ v` and `n − k` at `v`.
///
/// Requires `(a₀ − log n)/t < a₁ < (a₀ − log(n − k))/t`. The `Q₀` constraint
/// gives `v(u) = (a₀ + log(1 − k e^{tu − a₀}) − log(n − k))/t`, and the mean
/// `Q₁/Q₀` along that curve decreases strictly in `u`, from
/// `(a₀ − log(n − k))/t` at `u = −∞` to `(a₀ − log n)/t` at `u = v`.
fn solve_two_block(t: f64, a0: f64, a1: f64, n: f64, k: f64) -> Result<TwoBlock> {
    let upper_of = |u: f64| (a0 + (-(k.ln() + t * u - a0).exp()).ln_1p() - (n - k).ln()) / t;
    let mean_gap = |u: f64| {
        let wu = (k.ln() + t * u - a0).exp();
        wu * u + (1.0 - wu) * upper_of(u) - a1
    };
    let top = (a0 - n.ln()) / t;
    let bottom = descend(top, |u| mean_gap(u) > 0.0)?;
    let u = bisect(mean_gap, bottom, top)?;
    let mut x = [u, upper_of(u)];

    let system = |[u, v]: [f64; 2]| {
        let eu = (k.ln() + t * u - a0).exp();
        let ev = ((n - k).ln() + t * v - a0).exp();
        ([eu + ev - 1.0, u * eu + v * ev - a1], [[t * eu, t * ev], [eu * (1.0 + t * u), ev * (1.0 + t * v)]])
    };
    match damped_newton_2d(system, x, NEWTON_TOL * a1.abs().max(1.0), MAX_HALVINGS, MAX_NEWTON_STEPS) {
        Ok(sol) if sol.x[0] <= sol.x[1] => x = sol.x,
        Ok(_) | Err(_) => {
            log::debug!("Newton polish for k = {k} left the bisection result unchanged");
        }
    }
    let m = moments(&[(k, x[0]), (n - k, x[1])], t, a0);
    Ok(TwoBlock { k, lower: x[0], upper: x[1], a2: m.variance })
}

fn expand(blocks: &[(usize, f64)]) -> Vec<f64> {
    blocks.iter().flat_map(|&(m, z)| std::iter::repeat_n(z, m)).collect()
}

fn finish(germ: &Germ, z: Vec<f64>, feasible_a2: Option<(f64, f64)>) -> Result<FitResult> {
    let order = if germ.a2().is_some() { 2 } else { 1 };
    let potential = CylinderPotential::full_shift(z)?;
    let achieved = pressure_jet(&potential, germ.t_star, order)?;
    let scale = germ.a0().exp();
    let q0 = achieved.derivs[0].exp();
    let mut residuals = vec![(q0 - scale).abs(), (q0 * achieved.derivs[1] - germ.a1() * scale).abs()];
    if let Some(a2) = germ.a2() {
        residuals.push((achieved.derivs[2] - a2).abs());
    }
    Ok(FitResult { z: potential.values().to_vec(), achieved, residuals, feasible_a2 })
}

/// Level-1 fit: `n − 1` symbols at `z_a`, the last at `z_b ≥ z_a`.
///
/// At the boundary `a₁ = (a₀ − log n)/t_*` the result is the constant
/// potential.
pub fn fit_level1(germ: &Germ, n: usize) -> Result<FitResult> {
    check_n(n)?;
    require_level1_feasible(germ, n)?;
    if germ.at_constant_boundary(n as f64) {
        return finish(germ, vec![germ.constant_level(n as f64); n], None);
    }
    let sol = solve_two_block(germ.t_star, germ.a0(), germ.a1(), n as f64, (n - 1) as f64)?;
    finish(germ, expand(&[(n - 1, sol.lower), (1, sol.upper)]), None)
}

/// The smallest `k` for which the two-block family with `k` lower symbols
/// can reach `a₁`: `log(n − k) < a₀ − a₁t_*`.
fn first_feasible_k(germ: &Germ, n: usize) -> usize {
    let room = germ.a0() - germ.a1() * germ.t_star;
    let mut k = (n as f64 - room.exp()).floor().max(1.0) as usize;
    while k < n - 1 && ((n - k) as f64).ln() >= room {
        k += 1;
    }
    while k > 1 && ((n - k + 1) as f64).ln() < room {
        k -= 1;
    }
    k
}

fn sweep(germ: &Germ, n: usize) -> Result<Vec<TwoBlock>> {
    let (t, a0, a1) = (germ.t_star, germ.a0(), germ.a1());
    let ks: Vec<usize> = (first_feasible_k(germ, n)..n).collect();
    let solved: Vec<TwoBlock> = ks
        .par_iter()
        .filter_map(|&k| match solve_two_block(t, a0, a1, n as f64, k as f64) {
            Ok(sol) => Some(sol),
            Err(e) => {
                log::warn!("two-block solve skipped for k = {k}: {e}");
                None
            }
        })
        .collect();
    if solved.is_empty() {
        return Err(Error::Convergence("no two-block configuration could be solved".into()));
    }
    Ok(solved)
}

fn range_of(solutions: &[TwoBlock]) -> (f64, f64) {
    solutions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.a2), hi.max(s.a2)))
}

/// Inner approximation `[m̂, M̂]` of the attainable `P''(t_*)` for the given
/// 1-jet: min and max of `Q₂/Q₀²` over the two-block solutions,
/// `k = 1 … n − 1`. The exact range over all `n`-value potentials contains it.
pub fn feasible_a2_range(germ: &Germ, n: usize) -> Result<(f64, f64)> {
    check_n(n)?;
    require_level1_feasible(germ, n)?;
    if germ.at_constant_boundary(n as f64) {
        return Ok((0.0, 0.0));
    }
    Ok(range_of(&sweep(germ, n)?))
}

/// Three-value family joining the `k + 1` and `k` two-block solutions:
/// `k` symbols at `u`, one at `u + θ(v − u)`, `n − k − 1` at `v`.
fn solve_split(t: f64, a0: f64, a1: f64, n: f64, k: f64, theta: f64) -> Result<[f64; 3]> {
    let rest = n - k - 1.0;
    let blocks = |u: f64, v: f64| [(k, u), (1.0, u + theta * (v - u)), (rest, v)];
    let upper_of = |u: f64| -> Result<f64> {
        let excess = |v: f64| moments(&blocks(u, v), t, a0).mass - 1.0;
        if excess(u) >= 0.0 {
            // Only reachable at u = (a₀ − log n)/t up to rounding.
            return Ok(u);
        }
        bisect(excess, u, (a0 - rest.ln()) / t)
    };
    let mean_gap = |u: f64| -> f64 {
        match upper_of(u) {
            Ok(v) => moments(&blocks(u, v), t, a0).first - a1,
            Err(_) => f64::NAN,
        }
    };
    let top = (a0 - n.ln()) / t;
    let bottom = descend(top, |u| mean_gap(u) > 0.0)?;
    let u = bisect(mean_gap, bottom, top)?;
    let v = upper_of(u)?;
    Ok([u, u + theta * (v - u), v])
}

/// Level-2 fit.
///
/// The two-block solutions are indexed by `k`; an adjacent pair whose `a₂`
/// values bracket the target is joined by the continuous family of
/// [`solve_split`] and the split parameter is bisected until `P''` matches
/// within [`A2_TOL`].
pub fn fit_level2(germ: &Germ, n: usize) -> Result<FitResult> {
    let a2 = germ.a2().ok_or_else(|| Error::Domain("fit_level2 needs a germ with three coefficients".into()))?;
    check_n(n)?;
    require_level1_feasible(germ, n)?;
    if germ.at_constant_boundary(n as f64) {
        if a2 > A2_TOL {
            return Err(Error::OutOfRange { a2, lo: 0.0, hi: 0.0 });
        }
        return finish(germ, vec![germ.constant_level(n as f64); n], Some((0.0, 0.0)));
    }
    let mut solutions = sweep(germ, n)?;
    solutions.sort_by(|a, b| a.k.total_cmp(&b.k));
    let (lo, hi) = range_of(&solutions);
    if a2 < lo - A2_TOL || a2 > hi + A2_TOL {
        return Err(Error::OutOfRange { a2, lo, hi });
    }
    let range = Some((lo, hi));
    let two_block = |s: &TwoBlock| {
        let k = s.k as usize;
        expand(&[(k, s.lower), (n - k, s.upper)])
    };
    if let Some(s) = solutions.iter().find(|s| (s.a2 - a2).abs() <= A2_TOL) {
        return finish(germ, two_block(s), range);
    }
    let pair = solutions
        .windows(2)
        .find(|w| w[1].k == w[0].k + 1.0 && (w[0].a2 - a2).signum() != (w[1].a2 - a2).signum())
        .ok_or_else(|| Error::Convergence(format!("no adjacent two-block pair brackets a2 = {a2}")))?;
    let k = pair[0].k;
    let (t, a0, a1) = (germ.t_star, germ.a0(), germ.a1());
    let gap = |theta: f64| -> f64 {
        match solve_split(t, a0, a1, n as f64, k, theta) {
            Ok(z) => {
                let m = moments(&[(k, z[0]), (1.0, z[1]), (n as f64 - k - 1.0, z[2])], t, a0);
                m.variance - a2
            }
            Err(_) => f64::NAN,
        }
    };
    // θ = 0 is the (k + 1)-block solution, θ = 1 the k-block one.
    let theta = bisect(gap, 0.0, 1.0)?;
    let z = solve_split(t, a0, a1, n as f64, k, theta)?;
    let k = k as usize;
    let fit = finish(germ, expand(&[(k, z[0]), (1, z[1]), (n - k - 1, z[2])]), range)?;
    if fit.residuals[2] > A2_TOL {
        return Err(Error::Convergence(format!(
            "split family reached P'' within {} of a2, above {A2_TOL}",
            fit.residuals[2]
        )));
    }
    Ok(fit)
}

/// One row of the large-`n` two-block solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table3Row {
    pub n: f64,
    pub c_a: f64,
    pub eta: f64,
    /// Absolute residuals of both equations.
    pub residuals: [f64; 2],
    pub iterations: usize,
}

/// Solves `n e^{z_a} + e^{z_b} = e²` and `n z_a e^{z_a} + z_b e^{z_b} = e²`
/// (the 1-jet `(a₀, a₁) = (2, 1)` at `t_* = 1` with one symbol above a block
/// of multiplicity `n`), returning the lower value `c_a = z_a` and
/// `η = z_b`.
///
/// Damped Newton from `z_a = −log n − log log n − 1`, `z_b = 2`; the product
/// `n e^{z_a}` is evaluated as `exp(log n + z_a)`, so `n` may be as large as
/// `1e40` or more.
pub fn table3_solve(n: f64) -> Result<Table3Row> {
    if !(n >= 10.0) || !n.is_finite() {
        return Err(Error::Domain(format!("n must be a finite real >= 10, got {n}")));
    }
    let ln_n = n.ln();
    let system = |[za, zb]: [f64; 2]| {
        let ea = (ln_n + za - 2.0).exp();
        let eb = (zb - 2.0).exp();
        ([ea + eb - 1.0, za * ea + zb * eb - 1.0], [[ea, eb], [ea * (1.0 + za), eb * (1.0 + zb)]])
    };
    let x0 = [-ln_n - ln_n.ln() - 1.0, 2.0];
    let sol = damped_newton_2d(system, x0, 1e-15, MAX_HALVINGS, MAX_NEWTON_STEPS)?;
    let [c_a, eta] = sol.x;
    if c_a >= -1.0 || c_a >= eta {
        return Err(Error::Convergence(format!("Newton settled on the wrong branch: z_a = {c_a}, z_b = {eta}")));
    }
    let e2 = 2f64.exp();
    Ok(Table3Row {
        n,
        c_a,
        eta,
        residuals: [sol.residual[0].abs() * e2, sol.residual[1].abs() * e2],
        iterations: sol.iterations,
    })
}

/// Monotone branch of `z ↦ z e^{t z}`, split at its minimum `z = −1/t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `(−∞, −1/t]`, where the map decreases.
    Lower,
    /// `[−1/t, ∞)`, where the map increases.
    Upper,
}

/// Solves `z e^{t z} = y` on the requested branch.
pub fn varsigma_inverse(y: f64, branch: Branch, t_star: f64) -> Result<f64> {
    if !(t_star > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("need t_star > 0 and finite y, got t_star = {t_star}, y = {y}")));
    }
    let f = |z: f64| z * (t_star * z).exp();
    let z_min = -1.0 / t_star;
    let y_min = f(z_min);
    if y < y_min - 1e-15 * y_min.abs() {
        return Err(Error::Domain(format!("z e^(t z) = {y} has no real solution; the minimum is {y_min}")));
    }
    if y <= y_min {
        return Ok(z_min);
    }
    match branch {
        Branch::Upper => {
            let mut hi = 1.0_f64.max(z_min + 1.0);
            while f(hi) < y {
                hi *= 2.0;
            }
            bisect(|z| f(z) - y, z_min, hi)
        }
        Branch::Lower => {
            if y >= 0.0 {
                return Err(Error::Domain(format!(
                    "z e^(t z) = {y} has no solution on the lower branch, where values lie in [{y_min}, 0)"
                )));
            }
            let lo = descend(z_min, |z| f(z) > y)?;
            bisect(|z| f(z) - y, lo, z_min)
        }
    }
}
