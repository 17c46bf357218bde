//! Quick internal consistency checks, run by the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{convergence_study, DecayingPotentialSpec};
use crate::combinatorics::{fdb_coefficient, partitions};
use crate::germfit::{feasible_a2_range, fit_level1, fit_level2, table3_solve, Germ};
use crate::pressure::{finite_difference_jet, pressure, pressure_jet, q_values, verify_derivative_formulas};
use crate::rigidity::f_abc_derivs;
use crate::symbolic::{CylinderPotential, SubshiftSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

fn bell(j: usize) -> u128 {
    // Bell triangle.
    let mut row = vec![1u128];
    for _ in 0..j {
        let mut next = vec![*row.last().unwrap()];
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

fn random_potential(rng: &mut ChaCha8Rng) -> CylinderPotential {
    let n = rng.random_range(2..8);
    CylinderPotential::full_shift((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Runs every check with a fixed seed.
pub fn run() -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checks = Vec::new();

    checks.push(check(
        "bell_sums",
        (|| {
            for j in 0..=12 {
                let total: u128 = partitions(j)?.iter().map(|p| fdb_coefficient(j, p)).sum::<Result<u128>>()?;
                if total != bell(j) {
                    return Ok((false, format!("j = {j}: {total} != {}", bell(j))));
                }
            }
            Ok((true, "j = 0..12".into()))
        })(),
    ));

    checks.push(check(
        "golden_mean_entropy",
        (|| {
            let space = SubshiftSpec::with_transition(vec![vec![1, 1], vec![1, 0]])?;
            let p = pressure(&CylinderPotential::new(space, 1, vec![0.0, 0.0])?, 1.0)?;
            let want = ((1.0 + 5f64.sqrt()) / 2.0).ln();
            Ok(((p - want).abs() < 1e-13, format!("{p}")))
        })(),
    ));

    let mut worst_formula = 0.0_f64;
    let mut worst_fd = 0.0_f64;
    let mut worst_q = 0.0_f64;
    let formulas = (|| {
        for _ in 0..20 {
            let pot = random_potential(&mut rng);
            let t = rng.random_range(-1.5..1.5);
            let c = verify_derivative_formulas(&pot, t)?;
            worst_formula = worst_formula.max(c.second).max(c.third).max(c.fourth);
            let exact = pressure_jet(&pot, t, 4)?;
            let fd = finite_difference_jet(&pot, t, 4)?;
            for k in 1..=4 {
                let rel = (fd.derivs[k] - exact.derivs[k]).abs() / exact.derivs[k].abs().max(1.0);
                worst_fd = worst_fd.max(rel);
            }
            let q = q_values(pot.values(), t)?;
            worst_q = worst_q.max(q.identity_residual().abs() / q.identity_tolerance().max(f64::MIN_POSITIVE));
        }
        Ok((worst_formula < 1e-10 && worst_fd < 1e-6, format!("formulas {worst_formula:e}, fd {worst_fd:e}")))
    })();
    checks.push(check("derivative_formulas", formulas));
    checks.push(Check {
        name: "q_identity",
        passed: worst_q <= 1.0,
        detail: format!("worst residual/tolerance {worst_q:e}"),
    });

    checks.push(check(
        "table3",
        (|| {
            let rows = [
                (10.0, -1.859_953_939_179_765_4, 1.763_404_247_758_186),
                (1e4, -9.752_927_922_304_196, 1.918_071_038_928_526),
                (1e40, -94.685_100_179_630_44, 1.989_709_722_206_458_3),
            ];
            let mut worst = 0.0_f64;
            for (n, c_a, eta) in rows {
                let row = table3_solve(n)?;
                worst = worst.max(((row.c_a - c_a) / c_a).abs()).max(((row.eta - eta) / eta).abs());
            }
            Ok((worst < 1e-12, format!("worst relative deviation {worst:e}")))
        })(),
    ));

    checks.push(check(
        "germ_round_trip",
        (|| {
            let mut worst = 0.0_f64;
            for _ in 0..20 {
                let n = rng.random_range(2..60);
                let t = rng.random_range(0.2..3.0);
                let a0 = rng.random_range(-2.0..4.0);
                let lo = (a0 - (n as f64).ln()) / t;
                let a1 = lo + rng.random_range(0.05..0.95) * (a0 / t - lo);
                let fit = fit_level1(&Germ::level1(t, a0, a1)?, n)?;
                worst = worst.max(fit.residuals.iter().fold(0.0, |m: f64, r| m.max(*r)) / a0.exp().max(1.0));
            }
            let g = Germ::level1(1.0, 2.0, 1.0)?;
            let (lo, hi) = feasible_a2_range(&g, 50)?;
            let fit = fit_level2(&Germ::level2(1.0, 2.0, 1.0, 0.5 * (lo + hi))?, 50)?;
            Ok((worst < 1e-10 && fit.residuals[2] < 1e-8, format!("level 1 {worst:e}, level 2 {:e}", fit.residuals[2])))
        })(),
    ));

    checks.push(check(
        "fabc_convexity",
        (|| {
            for k in 1..=1000 {
                let t = 0.1 * k as f64;
                if f_abc_derivs(2.0, 3.0, 1.0, t)?.reduced[0] <= 0.0 {
                    return Ok((false, format!("F'' <= 0 at t = {t}")));
                }
            }
            Ok((true, "t = 0.1..100".into()))
        })(),
    ));

    checks.push(check(
        "approx_gap",
        (|| {
            let spec = DecayingPotentialSpec::new(2, 0.5, vec![vec![0.0, 1.0]])?;
            let rows = convergence_study(&spec, 1.0, &[1, 2, 3, 4, 5, 6, 7, 8])?;
            let ok = rows.iter().all(|r| r.gap <= r.gap_bound)
                && rows.windows(2).all(|w| w[1].p_inf >= w[0].p_inf - 1e-12 && w[1].p_sup <= w[0].p_sup + 1e-12);
            Ok((ok, format!("gap at window 8: {:e}", rows[7].gap)))
        })(),
    ));

    SelftestReport { checks }
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        let report = super::run();
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn bell_numbers() {
        assert_eq!((0..8).map(super::bell).collect::<Vec<_>>(), vec![1, 1, 2, 5, 15, 52, 203, 877]);
    }
}
