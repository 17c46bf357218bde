//! Pressure of `tφ` for locally constant `φ`, and its derivatives in `t`.
//!
//! For a window-1 potential on the full shift over `n` symbols the pressure
//! is `log Σ_i e^{t c_i}`, the cumulant generating function of the value
//! distribution under the uniform measure. Its `k`-th derivative at `t_*` is
//! the `k`-th cumulant of the values under the softmax weights
//! `p_i ∝ e^{t_* c_i}`, which is what [`pressure_jet`] computes.
//!
//! Everything else (subshifts, longer windows) goes through the Perron root
//! of the transfer matrix on the word graph, see [`pressure_spectral`].

use serde::{Deserialize, Serialize};

use crate::combinatorics::compose_derivatives;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, log_sum_exp};
use crate::symbolic::{equilibrium_weights, index_to_word, softmax, strongly_connected, CylinderPotential};

/// Highest derivative order served by [`pressure_jet`].
pub const MAX_JET_ORDER: usize = 12;
/// Relative tolerance of the Perron root iteration.
pub const SPECTRAL_TOL: f64 = 1e-13;
/// Iteration cap of the Perron root iteration.
pub const SPECTRAL_MAX_ITER: usize = 100_000;

/// `P(t_*), P'(t_*), …, P^(N)(t_*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorJet {
    pub t_star: f64,
    pub derivs: Vec<f64>,
}

impl TaylorJet {
    pub fn order(&self) -> usize {
        self.derivs.len().saturating_sub(1)
    }

    /// The `k`-th derivative, if computed.
    pub fn get(&self, k: usize) -> Option<f64> {
        self.derivs.get(k).copied()
    }
}

/// Pressure `P(tφ)`.
///
/// Closed form `log Σ e^{t c_i}` for window-1 potentials on the full shift;
/// otherwise the logarithm of the Perron root of the word-graph transfer
/// matrix.
pub fn pressure(potential: &CylinderPotential, t: f64) -> Result<f64> {
    if potential.space().is_full() && potential.window() == 1 {
        Ok(log_sum_exp(potential.values().iter().map(|c| t * c)))
    } else {
        pressure_spectral(potential, t)
    }
}

struct WordGraph {
    /// `edges[s]` lists `(target state, log weight)`.
    edges: Vec<Vec<(usize, f64)>>,
}

impl WordGraph {
    /// States are the admissible words of length `w - 1` (symbols for `w = 1`);
    /// the edge for the admissible word `x_0 … x_{w-1}` goes from
    /// `x_0 … x_{w-2}` to `x_1 … x_{w-1}` with log weight `t·c(x_0 … x_{w-1})`.
    fn build(potential: &CylinderPotential, t: f64) -> Self {
        let n = potential.n();
        let space = potential.space();
        let w = potential.window();
        if w == 1 {
            let edges = (0..n)
                .map(|i| (0..n).filter(|&j| space.allowed(i, j)).map(|j| (j, t * potential.values()[j])).collect())
                .collect();
            return Self { edges };
        }
        let state_len = w - 1;
        let n_words = n.pow(state_len as u32);
        let admissible = |word: &[usize]| word.windows(2).all(|p| space.allowed(p[0], p[1]));
        let mut state_of = vec![usize::MAX; n_words];
        let mut count = 0;
        for (idx, slot) in state_of.iter_mut().enumerate() {
            if admissible(&index_to_word(idx, n, state_len)) {
                *slot = count;
                count += 1;
            }
        }
        let mut edges = vec![Vec::new(); count];
        for (idx, &state) in state_of.iter().enumerate() {
            if state == usize::MAX {
                continue;
            }
            let word = index_to_word(idx, n, state_len);
            let last = word[state_len - 1];
            // Dropping the leading symbol and appending `next`.
            let tail = idx % n.pow(state_len as u32 - 1);
            for next in 0..n {
                if !space.allowed(last, next) {
                    continue;
                }
                let target = state_of[tail * n + next];
                let value = potential.values()[idx * n + next];
                edges[state].push((target, t * value));
            }
        }
        Self { edges }
    }

    fn len(&self) -> usize {
        self.edges.len()
    }

    fn irreducible(&self) -> bool {
        strongly_connected(self.len(), |s| self.edges[s].iter().map(|&(j, _)| j).collect())
    }

    /// Period of an irreducible graph (gcd of cycle lengths).
    fn period(&self) -> usize {
        let mut level = vec![usize::MAX; self.len()];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.edges[i] {
                if level[j] == usize::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let mut g = 0usize;
        for (i, out) in self.edges.iter().enumerate() {
            for &(j, _) in out {
                let diff = (level[i] + 1).abs_diff(level[j]);
                g = gcd(g, diff);
            }
        }
        g.max(1)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Pressure as the log Perron root of `B_ij = A_ij e^{t c_j}` (window 1) or of
/// the lifted word-graph matrix (window `w > 1`).
///
/// The full shift is treated as the all-ones transition matrix. The
/// iteration stops once the Collatz–Wielandt bounds `min_i (Bv)_i / v_i ≤ ρ ≤
/// max_i (Bv)_i / v_i` agree to [`SPECTRAL_TOL`] relative.
pub fn pressure_spectral(potential: &CylinderPotential, t: f64) -> Result<f64> {
    if !potential.space().is_irreducible() {
        return Err(Error::Reducible("transition matrix".into()));
    }
    let graph = WordGraph::build(potential, t);
    if !graph.irreducible() {
        return Err(Error::Reducible("lifted word graph".into()));
    }
    let top = graph.edges.iter().flatten().map(|&(_, lw)| lw).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<Vec<(usize, f64)>> =
        graph.edges.iter().map(|out| out.iter().map(|&(j, lw)| (j, (lw - top).exp())).collect()).collect();

    // Periodic graphs need a diagonal shift for the iteration to converge.
    let shift = if graph.period() > 1 {
        weights.iter().map(|out| out.iter().map(|&(_, w)| w).sum::<f64>()).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };

    let m = graph.len();
    let mut v = vec![1.0_f64; m];
    let mut bv = vec![0.0_f64; m];
    for _ in 0..SPECTRAL_MAX_ITER {
        for (s, out) in weights.iter().enumerate() {
            bv[s] = compensated_sum(out.iter().map(|&(j, w)| w * v[j]));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for s in 0..m {
            let ratio = bv[s] / v[s];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::Convergence(format!("Perron iteration lost positivity (weights underflow at t = {t})")));
        }
        if hi - lo <= SPECTRAL_TOL * lo {
            return Ok(top + (0.5 * (lo + hi)).ln());
        }
        let mut norm = 0.0_f64;
        for s in 0..m {
            v[s] = bv[s] + shift * v[s];
            norm = norm.max(v[s]);
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Err(Error::Convergence(format!(
        "Perron iteration did not reach relative tolerance {SPECTRAL_TOL} in {SPECTRAL_MAX_ITER} steps"
    )))
}

/// Cumulants `κ_1 … κ_order` of the values `c` under `weights`.
///
/// Works in the centred frame: central moments `μ_k` feed the recursion
/// `κ_m = μ_m − Σ_{k=1}^{m−1} C(m−1, k−1) κ_k μ_{m−k}` with `κ_1 = 0`, and
/// the mean is restored afterwards.
pub fn cumulants(values: &[f64], weights: &[f64], order: usize) -> Vec<f64> {
    let mean = compensated_sum(values.iter().zip(weights).map(|(c, p)| p * c));
    let mut central = vec![0.0; order + 1];
    central[0] = 1.0;
    for (m, slot) in central.iter_mut().enumerate().skip(2) {
        *slot = compensated_sum(values.iter().zip(weights).map(|(c, p)| p * (c - mean).powi(m as i32)));
    }
    let mut kappa = vec![0.0; order + 1];
    for m in 2..=order {
        let mut acc = central[m];
        for k in 2..m {
            acc -= binomial(m - 1, k - 1) * kappa[k] * central[m - k];
        }
        kappa[m] = acc;
    }
    if order >= 1 {
        kappa[1] = mean;
    }
    kappa.remove(0);
    kappa
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Cumulants from raw moments by Faà di Bruno applied to `log ∘ M`, where
/// `M` is the moment generating function (`M(0) = 1`).
///
/// Exponential in `order`; kept as an independent cross-check of
/// [`cumulants`] for small orders.
pub fn cumulants_via_faa_di_bruno(raw_moments: &[f64], order: usize) -> Result<Vec<f64>> {
    if order > 6 {
        return Err(Error::OrderLimit { requested: order, max: 6 });
    }
    // (log y)^(q) at y = 1 is (−1)^{q−1} (q−1)!.
    let outer: Vec<f64> = (1..=order)
        .map(|q| {
            let fact: f64 = (1..q).map(|i| i as f64).product();
            if q % 2 == 1 {
                fact
            } else {
                -fact
            }
        })
        .collect();
    (1..=order).map(|j| compose_derivatives(&outer, raw_moments, j)).collect()
}

/// Derivatives `P, P', …, P^(order)` at `t_star` for a window-1 potential on
/// the full shift.
pub fn pressure_jet(potential: &CylinderPotential, t_star: f64, order: usize) -> Result<TaylorJet> {
    potential.require_level_zero_full("pressure_jet")?;
    if order > MAX_JET_ORDER {
        return Err(Error::OrderLimit { requested: order, max: MAX_JET_ORDER });
    }
    let weights = equilibrium_weights(potential, t_star)?;
    let mut derivs = Vec::with_capacity(order + 1);
    derivs.push(pressure(potential, t_star)?);
    derivs.extend(cumulants(potential.values(), weights.probabilities(), order));
    Ok(TaylorJet { t_star, derivs })
}

/// The sums `Q₀ = Σ e^{t z_i}`, `Q₁ = Σ z_i e^{t z_i}`,
/// `Q₂ = Σ_{i<j} (z_i − z_j)² e^{t(z_i + z_j)}` and `R₂ = Σ z_i² e^{t z_i}`.
///
/// All four are stored with the common factor `e^{−log_scale}` removed
/// (squared for `Q₂`), so ratios such as `Q₁/Q₀` and `Q₂/Q₀²` are exact while
/// the raw sums may be outside the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QValues {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub r2: f64,
    pub log_scale: f64,
}

impl QValues {
    /// `(Q₀, Q₁, Q₂, R₂)` with the scale restored.
    pub fn unscaled(&self) -> (f64, f64, f64, f64) {
        let s = self.log_scale.exp();
        (self.q0 * s, self.q1 * s, self.q2 * s * s, self.r2 * s)
    }

    /// `P' = Q₁ / Q₀`.
    pub fn first_derivative(&self) -> f64 {
        self.q1 / self.q0
    }

    /// `P'' = Q₂ / Q₀²`.
    pub fn second_derivative(&self) -> f64 {
        self.q2 / (self.q0 * self.q0)
    }

    /// `Q₂ − (Q₀R₂ − Q₁²)` in scaled units.
    pub fn identity_residual(&self) -> f64 {
        self.q2 - (self.q0 * self.r2 - self.q1 * self.q1)
    }

    /// Tolerance applied to [`QValues::identity_residual`]: relative `1e-12`
    /// on `Q₂`, or `1e-14·Q₀R₂` where `Q₂` is close to zero.
    pub fn identity_tolerance(&self) -> f64 {
        (1e-12 * self.q2.abs()).max(1e-14 * self.q0 * self.r2)
    }
}

/// Above this size `Q₂` is summed as `Q₀ Σ w_i (z_i − z̄)²` instead of pairwise.
const PAIRWISE_Q2_LIMIT: usize = 2048;

/// Computes [`QValues`] and checks `Q₂ = Q₀R₂ − Q₁²`.
pub fn q_values(z: &[f64], t: f64) -> Result<QValues> {
    if z.is_empty() {
        return Err(Error::Domain("q_values needs at least one value".into()));
    }
    if z.iter().any(|v| !v.is_finite()) || !t.is_finite() {
        return Err(Error::Domain("q_values needs finite inputs".into()));
    }
    let log_scale = z.iter().map(|&zi| t * zi).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = z.iter().map(|&zi| (t * zi - log_scale).exp()).collect();
    let q0 = compensated_sum(w.iter().copied());
    let q1 = compensated_sum(z.iter().zip(&w).map(|(zi, wi)| zi * wi));
    let r2 = compensated_sum(z.iter().zip(&w).map(|(zi, wi)| zi * zi * wi));
    let q2 = if z.len() <= PAIRWISE_Q2_LIMIT {
        compensated_sum((0..z.len()).flat_map(|i| {
            let (z, w) = (&z, &w);
            (i + 1..z.len()).map(move |j| (z[i] - z[j]).powi(2) * w[i] * w[j])
        }))
    } else {
        let mean = q1 / q0;
        q0 * compensated_sum(z.iter().zip(&w).map(|(zi, wi)| (zi - mean).powi(2) * wi))
    };
    let q = QValues { q0, q1, q2, r2, log_scale };
    if q.identity_residual().abs() > q.identity_tolerance() {
        return Err(Error::Convergence(format!(
            "Q2 = Q0 R2 - Q1^2 violated: residual {} exceeds {}",
            q.identity_residual(),
            q.identity_tolerance()
        )));
    }
    Ok(q)
}

/// Residuals of the second, third and fourth derivative formulas in the
/// regime where the transfer-operator eigenfunction is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub t_star: f64,
    /// Centred moments `m_k = Σ p_i (c_i − κ₁)^k`, `k = 2, 3, 4`.
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    /// `|P'' − m₂|`.
    pub second: f64,
    /// `|P''' − m₃|`.
    pub third: f64,
    /// `|P'''' − (m₄ − 3 m₂²)|`.
    pub fourth: f64,
    /// Every residual below `1e-10·max(1, |value|)`.
    pub passed: bool,
}

/// Compares [`pressure_jet`] with the moment formulas for `P''`, `P'''` and
/// `P''''`. For window-1 potentials on the full shift the transfer operator
/// maps constants to constants, so every eigenfunction-derivative term in
/// those formulas vanishes.
pub fn verify_derivative_formulas(potential: &CylinderPotential, t_star: f64) -> Result<DerivativeCheck> {
    let jet = pressure_jet(potential, t_star, 4)?;
    let weights = equilibrium_weights(potential, t_star)?;
    let values = potential.values();
    let mean = weights.expect(values, |c| c);
    let moment = |k: i32| weights.expect(values, |c| (c - mean).powi(k));
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let fourth_target = m4 - 3.0 * m2 * m2;
    let second = (jet.derivs[2] - m2).abs();
    let third = (jet.derivs[3] - m3).abs();
    let fourth = (jet.derivs[4] - fourth_target).abs();
    let ok = |r: f64, v: f64| r < 1e-10 * v.abs().max(1.0);
    Ok(DerivativeCheck {
        t_star,
        m2,
        m3,
        m4,
        second,
        third,
        fourth,
        passed: ok(second, m2) && ok(third, m3) && ok(fourth, fourth_target),
    })
}

/// Step used by [`finite_difference_jet`].
pub const FD_STEP: f64 = 1e-2;

fn central_difference(f: &impl Fn(f64) -> f64, x: f64, h: f64, order: usize) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h.powi(3)),
        4 => (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / h.powi(4),
        _ => unreachable!("stencils exist for orders 1-4"),
    }
}

/// Central difference at steps `h, h/2, h/4`, Richardson-extrapolated twice
/// (the stencils are symmetric, so errors expand in `h²`).
pub(crate) fn richardson(f: &impl Fn(f64) -> f64, x: f64, h: f64, order: usize) -> f64 {
    let d: Vec<f64> = (0..3).map(|i| central_difference(f, x, h / 2f64.powi(i), order)).collect();
    let e0 = (4.0 * d[1] - d[0]) / 3.0;
    let e1 = (4.0 * d[2] - d[1]) / 3.0;
    (16.0 * e1 - e0) / 15.0
}

/// Finite-difference estimate of `P, P', …, P^(order)` (`order ≤ 4`).
///
/// For window-1 potentials on the full shift, orders `≥ 2` are taken from
/// `s ↦ P(t_* + s) − P(t_*) − s·c̄`, evaluated as
/// `log1p(Σ p_i (e^{s d_i} − 1 − s d_i))` with `d_i = c_i − c̄`; subtracting
/// an affine function leaves those derivatives unchanged and keeps the
/// differenced quantity small. Other potentials are differenced directly.
pub fn finite_difference_jet(potential: &CylinderPotential, t_star: f64, order: usize) -> Result<TaylorJet> {
    if order > 4 {
        return Err(Error::OrderLimit { requested: order, max: 4 });
    }
    let p0 = pressure(potential, t_star)?;
    let mut derivs = vec![p0];
    if order == 0 {
        return Ok(TaylorJet { t_star, derivs });
    }
    let direct = |t: f64| pressure(potential, t).unwrap_or(f64::NAN);
    derivs.push(richardson(&direct, t_star, FD_STEP, 1));
    if potential.space().is_full() && potential.window() == 1 {
        let values = potential.values();
        let p = softmax(values, t_star);
        let reference = compensated_sum(p.iter().zip(values).map(|(pi, c)| pi * c));
        let dev: Vec<f64> = values.iter().map(|c| c - reference).collect();
        let reduced = |t: f64| {
            let s = t - t_star;
            compensated_sum(p.iter().zip(&dev).map(|(pi, d)| pi * ((s * d).exp_m1() - s * d))).ln_1p()
        };
        for k in 2..=order {
            derivs.push(richardson(&reduced, t_star, FD_STEP, k));
        }
    } else {
        for k in 2..=order {
            derivs.push(richardson(&direct, t_star, FD_STEP, k));
        }
    }
    if derivs.iter().any(|d| d.is_nan()) {
        return Err(Error::Convergence("pressure evaluation failed inside the stencil".into()));
    }
    Ok(TaylorJet { t_star, derivs })
}
