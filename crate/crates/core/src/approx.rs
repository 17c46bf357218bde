//! Locally constant approximations of a Hölder potential with geometrically
//! decaying dependence on far coordinates,
//!
//! ```text
//! φ(x) = Σ_{k≥0} r^k f_k(x_k),
//! ```
//!
//! and the convergence of their pressures. Over a cylinder of length `W` the
//! infimum and supremum of `φ` are attained coordinatewise, so the inf/sup
//! discretizations are exact: the first `W` terms plus
//! `Σ_{k≥W} r^k min f_k` (resp. `max`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::pressure::pressure;
use crate::symbolic::{table_len, CylinderPotential, SubshiftSpec};

/// `n`, the ratio `r ∈ (0, 1)` and the rows `f_0, f_1, …`; the last row is
/// reused for every later coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayingPotentialSpec {
    pub n: usize,
    pub ratio: f64,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizeMode {
    Inf,
    Sup,
    /// Average of the inf and sup tables.
    Mid,
}

impl DecayingPotentialSpec {
    pub fn new(n: usize, ratio: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self { n, ratio, rows };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        SubshiftSpec::full(self.n)?;
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Domain(format!("ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if self.rows.is_empty() {
            return Err(Error::Domain("at least one row f_0 is required".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.len() != self.n {
                return Err(Error::Domain(format!("row {k} has {} entries, expected {}", row.len(), self.n)));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("row {k} has a non-finite entry")));
            }
        }
        Ok(())
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k.min(self.rows.len() - 1)]
    }

    /// `max_k max_i |f_k(i)|`.
    pub fn sup_norm(&self) -> f64 {
        self.rows.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ_{k≥start} r^k g(f_k)`, exact for the repeated last row.
    fn tail(&self, start: usize, g: impl Fn(&[f64]) -> f64) -> f64 {
        let last = self.rows.len() - 1;
        let r = self.ratio;
        let head: f64 = (start..last).map(|k| r.powi(k as i32) * g(&self.rows[k])).sum();
        let from = start.max(last);
        head + r.powi(from as i32) / (1.0 - r) * g(&self.rows[last])
    }

    /// `r^W max|f| / (1 − r)`: bound on `‖φ − φ_W‖∞` for any discretization.
    pub fn tail_norm_bound(&self, window: usize) -> f64 {
        self.ratio.powi(window as i32) * self.sup_norm() / (1.0 - self.ratio)
    }
}

fn row_min(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::INFINITY, f64::min)
}

fn row_max(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Locally constant potential on the full shift with window `window`.
pub fn discretize(spec: &DecayingPotentialSpec, window: usize, mode: DiscretizeMode) -> Result<CylinderPotential> {
    spec.validate()?;
    if window == 0 {
        return Err(Error::Domain("window must be at least 1".into()));
    }
    let n = spec.n;
    let len = table_len(n, window)?;
    let mut table = Vec::with_capacity(len);
    table.push(0.0);
    for k in 0..window {
        let weight = spec.ratio.powi(k as i32);
        let row = spec.row(k);
        table = table.iter().flat_map(|&prefix| row.iter().map(move |f| prefix + weight * f)).collect();
    }
    let tail = match mode {
        DiscretizeMode::Inf => spec.tail(window, row_min),
        DiscretizeMode::Sup => spec.tail(window, row_max),
        DiscretizeMode::Mid => 0.5 * (spec.tail(window, row_min) + spec.tail(window, row_max)),
    };
    table.iter_mut().for_each(|v| *v += tail);
    CylinderPotential::new(SubshiftSpec::full(n)?, window, table)
}

/// Pressure of `tφ` itself. `f_k(x_k)` is cohomologous to `f_k(x_0)`, so `φ`
/// is cohomologous to the window-1 potential `i ↦ Σ_k r^k f_k(i)`.
pub fn limit_pressure(spec: &DecayingPotentialSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    let values: Vec<f64> = (0..spec.n).map(|i| spec.tail(0, |row| row[i])).collect();
    Ok(log_sum_exp(values.iter().map(|v| t * v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub window: usize,
    pub p_inf: f64,
    pub p_mid: f64,
    pub p_sup: f64,
    /// `|p_sup − p_inf|` (the order reverses for `t < 0`).
    pub gap: f64,
    /// `2|t| r^W max|f| / (1 − r)`.
    pub gap_bound: f64,
}

/// Pressures of the inf, mid and sup discretizations for each window.
pub fn convergence_study(spec: &DecayingPotentialSpec, t: f64, windows: &[usize]) -> Result<Vec<ConvergenceRow>> {
    spec.validate()?;
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!("windows must be strictly increasing, got {windows:?}")));
    }
    windows
        .par_iter()
        .map(|&w| {
            let p = |mode| discretize(spec, w, mode).and_then(|pot| pressure(&pot, t));
            let (p_inf, p_mid, p_sup) = (p(DiscretizeMode::Inf)?, p(DiscretizeMode::Mid)?, p(DiscretizeMode::Sup)?);
            Ok(ConvergenceRow {
                window: w,
                p_inf,
                p_mid,
                p_sup,
                gap: (p_sup - p_inf).abs(),
                gap_bound: 2.0 * t.abs() * spec.tail_norm_bound(w),
            })
        })
        .collect()
}
