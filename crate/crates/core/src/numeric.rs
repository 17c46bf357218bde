//! Small numerical kernels shared by the solvers.

use crate::error::{Error, Result};

/// Compensated (Neumaier) summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `log Σ e^{x_i}` with the maximum factored out.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if top.is_infinite() {
        return top;
    }
    top + compensated_sum(values.into_iter().map(|x| (x - top).exp())).ln()
}

/// Bisection for a continuous `f` with a sign change on `[lo, hi]`.
///
/// Runs until the bracket stops shrinking in floating point, so the result
/// is the last representable point before the sign change.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Convergence(format!("no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}")));
    }
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of [`damped_newton_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSolution {
    pub x: [f64; 2],
    pub residual: [f64; 2],
    pub iterations: usize,
}

impl NewtonSolution {
    pub fn residual_norm(&self) -> f64 {
        self.residual[0].abs().max(self.residual[1].abs())
    }
}

/// Damped Newton iteration for two equations in two unknowns.
///
/// `system(x)` returns the residual vector and its Jacobian. A step is halved
/// (at most `max_halvings` times) until the max-norm of the residual
/// decreases; iteration stops once the residual norm is at most `tol`.
pub fn damped_newton_2d(
    mut system: impl FnMut([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
    x0: [f64; 2],
    tol: f64,
    max_halvings: usize,
    max_iterations: usize,
) -> Result<NewtonSolution> {
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut x = x0;
    let (mut r, mut jac) = system(x);
    for iteration in 0..max_iterations {
        if norm(r) <= tol {
            return Ok(NewtonSolution { x, residual: r, iterations: iteration });
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Convergence(format!("singular Jacobian at {x:?}")));
        }
        let dx = [(jac[1][1] * r[0] - jac[0][1] * r[1]) / det, (jac[0][0] * r[1] - jac[1][0] * r[0]) / det];
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=max_halvings {
            let trial = [x[0] - step * dx[0], x[1] - step * dx[1]];
            let (r_trial, jac_trial) = system(trial);
            if r_trial.iter().all(|v| v.is_finite()) && norm(r_trial) < norm(r) {
                x = trial;
                r = r_trial;
                jac = jac_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Stagnation at rounding level is success if already close.
            if norm(r) <= tol * 16.0 {
                return Ok(NewtonSolution { x, residual: r, iterations: iteration });
            }
            return Err(Error::Convergence(format!("Newton stagnated at {x:?} with residual {:?}", r)));
        }
    }
    if norm(r) <= tol {
        return Ok(NewtonSolution { x, residual: r, iterations: max_iterations });
    }
    Err(Error::Convergence(format!("Newton hit {max_iterations} iterations at {x:?} with residual {r:?}")))
}
