//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoforge::cltsim::{log_log_slope, tail_bound};
use thermoforge::combinatorics::{fdb_coefficient, partitions};
use thermoforge::germfit::{feasible_a2_range, fit_level1, fit_level2, table3_solve, Germ};
use thermoforge::pressure::{finite_difference_jet, pressure_jet, q_values, verify_derivative_formulas};
use thermoforge::rigidity::{divergence_diagnostic, f_abc_derivs, rigidity_inequalities, CandidateFunction};
use thermoforge::{convergence_study, simulate_gm, CylinderPotential, DecayingPotentialSpec, SimConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

struct TableRow {
    n: f64,
    c_a: f64,
    eta: f64,
}

fn table3() -> Vec<TableRow> {
    include_str!("data/table3.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            TableRow {
                n: format!("1e{}", f[0]).parse().unwrap(),
                c_a: f[1].parse().unwrap(),
                eta: f[2].parse().unwrap(),
            }
        })
        .collect()
}

fn faa_di_bruno_tables() -> Outcome {
    let want: [(&[usize], u128); 7] = [
        (&[5], 1),
        (&[4, 1], 5),
        (&[3, 2], 10),
        (&[3, 1, 1], 10),
        (&[2, 2, 1], 15),
        (&[2, 1, 1, 1], 10),
        (&[1, 1, 1, 1, 1], 1),
    ];
    let got = partitions(5).unwrap();
    if got.len() != want.len() {
        return outcome(false, format!("{} partitions of 5", got.len()));
    }
    for (p, (parts, b)) in got.iter().zip(want) {
        let coeff = fdb_coefficient(5, p).unwrap();
        if p.parts() != parts || coeff != b {
            return outcome(false, format!("{:?} -> {coeff}, expected {parts:?} -> {b}", p.parts()));
        }
    }
    outcome(true, "7 partitions and coefficients exact")
}

fn table3_reproduction() -> Outcome {
    let e2 = 2f64.exp();
    let mut worst_rel = 0.0_f64;
    let mut worst_res = 0.0_f64;
    for row in table3() {
        let got = match table3_solve(row.n) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("n = {:e}: {e}", row.n)),
        };
        worst_rel = worst_rel.max(((got.c_a - row.c_a) / row.c_a).abs()).max(((got.eta - row.eta) / row.eta).abs());
        worst_res = worst_res.max(got.residuals[0]).max(got.residuals[1]);
    }
    outcome(
        worst_rel < 1e-12 && worst_res < 1e-13 * e2,
        format!("40 rows, worst relative deviation {worst_rel:.2e}, worst residual {worst_res:.2e}"),
    )
}

fn asymptotics() -> Outcome {
    let mut window_ok = true;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in table3() {
        let c_a = table3_solve(row.n).unwrap().c_a;
        let s = c_a + row.n.ln() + row.n.ln().ln();
        lo = lo.min(s);
        hi = hi.max(s);
        window_ok &= (-2.0..=1.0).contains(&s);
    }
    let germ = Germ::level1(1.0, 2.0, 1.0).unwrap();
    let m_hat: Vec<f64> = [10, 100, 1000].iter().map(|&n| feasible_a2_range(&germ, n).unwrap().1).collect();
    let grows = m_hat[0] < m_hat[1] && m_hat[1] < m_hat[2] && m_hat[2] > m_hat[0] + 1.0;
    outcome(
        window_ok && grows,
        format!(
            "c_a + log n + log log n spans [{lo:.4}, {hi:.4}] (window [-2, 1]: {}); M̂(10, 100, 1000) = {:.4}, {:.4}, {:.4} (growth: {})",
            if window_ok { "ok" } else { "violated" },
            m_hat[0],
            m_hat[1],
            m_hat[2],
            if grows { "ok" } else { "violated" }
        ),
    )
}

fn random_germ(rng: &mut ChaCha8Rng, n: usize) -> (f64, f64, f64) {
    let t = rng.random_range(0.2..3.0);
    let a0 = rng.random_range(-2.0..5.0);
    let lo = (a0 - (n as f64).ln()) / t;
    let a1 = lo + rng.random_range(0.01..0.99) * (a0 / t - lo);
    (t, a0, a1)
}

fn germ_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst1 = 0.0_f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=200);
        let (t, a0, a1) = random_germ(&mut rng, n);
        let fit = match fit_level1(&Germ::level1(t, a0, a1).unwrap(), n) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("fit_level1({t}, {a0}, {a1}, {n}): {e}")),
        };
        let jet = pressure_jet(&CylinderPotential::full_shift(fit.z).unwrap(), t, 1).unwrap();
        let scale = a0.exp().max(1.0);
        worst1 = worst1.max((jet.derivs[0] - a0).abs() / scale).max((jet.derivs[1] - a1).abs() / scale);
    }
    let mut worst2 = 0.0_f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=200);
        let (t, a0, a1) = random_germ(&mut rng, n);
        let (lo, hi) = feasible_a2_range(&Germ::level1(t, a0, a1).unwrap(), n).unwrap();
        let a2 = lo + rng.random_range(0.0..1.0) * (hi - lo);
        let fit = match fit_level2(&Germ::level2(t, a0, a1, a2).unwrap(), n) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("fit_level2({t}, {a0}, {a1}, {a2}, {n}): {e}")),
        };
        let jet = pressure_jet(&CylinderPotential::full_shift(fit.z).unwrap(), t, 2).unwrap();
        worst2 = worst2.max((jet.derivs[2] - a2).abs());
    }
    outcome(
        worst1 < 1e-10 && worst2 < 1e-8,
        format!("level 1 worst {worst1:.2e} (200 germs), level 2 worst |P'' - a2| {worst2:.2e} (50 germs)"),
    )
}

fn random_potential(rng: &mut ChaCha8Rng) -> CylinderPotential {
    let n = rng.random_range(2..=10);
    CylinderPotential::full_shift((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn derivative_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_formula = 0.0_f64;
    let mut worst_fd = [0.0_f64; 4];
    for _ in 0..100 {
        let pot = random_potential(&mut rng);
        let t = rng.random_range(-2.0..2.0);
        let check = verify_derivative_formulas(&pot, t).unwrap();
        worst_formula = worst_formula.max(check.second).max(check.third).max(check.fourth);
        let exact = pressure_jet(&pot, t, 4).unwrap();
        let fd = finite_difference_jet(&pot, t, 4).unwrap();
        for k in 1..=4 {
            let rel = (fd.derivs[k] - exact.derivs[k]).abs() / exact.derivs[k].abs().max(1.0);
            worst_fd[k - 1] = worst_fd[k - 1].max(rel);
        }
    }
    let fd_max = worst_fd.iter().copied().fold(0.0, f64::max);
    outcome(
        worst_formula < 1e-10 && fd_max < 1e-6,
        format!(
            "formula residual {worst_formula:.2e}; finite-difference relative error by order {:.1e} {:.1e} {:.1e} {:.1e}",
            worst_fd[0], worst_fd[1], worst_fd[2], worst_fd[3]
        ),
    )
}

fn q_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_ratio = 0.0_f64;
    let mut near_constant = 0;
    for i in 0..10_000 {
        let n = rng.random_range(1..=60);
        let t = rng.random_range(-3.0..3.0);
        let z: Vec<f64> = if i % 2 == 0 {
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
        } else {
            near_constant += 1;
            let base = rng.random_range(-5.0..5.0);
            let spread = 10f64.powf(rng.random_range(-12.0..-3.0));
            (0..n).map(|_| base + spread * rng.random_range(-1.0..1.0)).collect()
        };
        let q = match q_values(&z, t) {
            Ok(q) => q,
            Err(e) => return outcome(false, format!("case {i}: {e}")),
        };
        let (q0, q1, q2, r2) = (q.q0, q.q1, q.q2, q.r2);
        let residual = (q2 - (q0 * r2 - q1 * q1)).abs();
        let allowed = (1e-12 * q2.abs()).max(1e-14 * q0 * r2);
        worst_ratio = worst_ratio.max(residual / allowed);
    }
    outcome(
        worst_ratio <= 1.0,
        format!("10000 cases ({near_constant} near-constant), worst residual/tolerance {worst_ratio:.3}"),
    )
}

fn richardson_first(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let (d0, d1, d2) = (d(h), d(h / 2.0), d(h / 4.0));
    let e0 = (4.0 * d1 - d0) / 3.0;
    let e1 = (4.0 * d2 - d1) / 3.0;
    (16.0 * e1 - e0) / 15.0
}

fn counterexample_family() -> Outcome {
    let mut convex = true;
    for k in 1..=10_000 {
        let t = 0.01 * k as f64;
        let d = f_abc_derivs(2.0, 3.0, 1.0, t).unwrap();
        convex &= d.reduced[0] > 0.0 && d.f2 >= 0.0;
    }
    let fabc = CandidateFunction::Fabc { a: 2.0, b: 3.0, c: 1.0 };
    let ratio = divergence_diagnostic(&fabc, &[20.0]).unwrap()[0].d.unwrap() / 20.0;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let (a, b) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
        let c = rng.random_range(0.36..2.0);
        let t = rng.random_range(0.3..2.5);
        let d = |s: f64| f_abc_derivs(a, b, c, s).unwrap();
        let h = 1e-2;
        let checks = [
            (richardson_first(|s| d(s).f, t, h), d(t).f1),
            (richardson_first(|s| d(s).f1, t, h), d(t).f2),
            (richardson_first(|s| d(s).f2, t, h), d(t).f3),
        ];
        for (fd, exact) in checks {
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
    }
    outcome(
        convex && (-2.3..=-1.7).contains(&ratio) && worst < 1e-6,
        format!("F'' > 0 on 10^4 points: {convex}; D(20)/20 = {ratio:.4}; closed form vs differences {worst:.2e}"),
    )
}

fn clt_simulation() -> Outcome {
    let lengths = vec![100, 1000, 10_000];
    let base = SimConfig {
        potential: CylinderPotential::full_shift(vec![-0.5, 0.5]).unwrap(),
        t_star: 0.0,
        orbit_lengths: lengths.clone(),
        samples_per_m: 100_000,
        seed: 0,
    };
    let mut ks = vec![0.0; lengths.len()];
    let mut first_within = Vec::new();
    let mut bound_100 = 0.0;
    for seed in 1..=5u64 {
        let report = simulate_gm(&SimConfig { seed, ..base.clone() }).unwrap();
        for (acc, row) in ks.iter_mut().zip(&report.rows) {
            *acc += row.ks_distance / 5.0;
        }
        first_within.push(report.first_m_within_bound);
        bound_100 = report.rows[0].bound;
    }
    let slope = log_log_slope(&lengths.iter().map(|&m| m as f64).collect::<Vec<_>>(), &ks);
    let independent = (9.0 * 0.0 + 2.0 * 0.125) / ((2.0 * PI.powi(3) * 100.0).sqrt() * 0.25f64.powf(1.5));
    let bound_ok = (bound_100 - independent).abs() < 1e-6
        && (bound_100 - 0.02540).abs() < 5e-6
        && (tail_bound(100, 0.25, 0.0, -0.125) - independent).abs() < 1e-15;
    let cfg = SimConfig { seed: 42, orbit_lengths: vec![100, 1000], ..base };
    let deterministic = simulate_gm(&cfg).unwrap() == simulate_gm(&cfg).unwrap();
    outcome(
        (-0.75..=-0.25).contains(&slope) && bound_ok && deterministic,
        format!(
            "mean KS {:.4e} {:.4e} {:.4e}, slope {slope:.3}; bound(100) = {bound_100:.6}; deterministic: {deterministic}; first m within bound per seed {first_within:?}",
            ks[0], ks[1], ks[2]
        ),
    )
}

fn approximation_convergence() -> Outcome {
    let spec = DecayingPotentialSpec::new(2, 0.5, vec![vec![0.0, 1.0]]).unwrap();
    let windows: Vec<usize> = (1..=12).collect();
    let rows = convergence_study(&spec, 1.0, &windows).unwrap();
    let inf_up = rows.windows(2).all(|w| w[1].p_inf >= w[0].p_inf - 1e-12);
    let sup_down = rows.windows(2).all(|w| w[1].p_sup <= w[0].p_sup + 1e-12);
    let gaps_ok = rows.iter().all(|r| r.gap <= 2.0 * 2f64.powi(1 - r.window as i32));
    let ratio = rows[11].gap / rows[1].gap;
    outcome(
        inf_up && sup_down && gaps_ok && ratio < 2f64.powi(-8),
        format!("P_inf nondecreasing: {inf_up}; P_sup nonincreasing: {sup_down}; gap bound: {gaps_ok}; gap(12)/gap(2) = {ratio:.4e}"),
    )
}

fn honest_discrepancy() -> Outcome {
    let candidate =
        CandidateFunction::Potential { potential: CylinderPotential::full_shift(vec![0.0, 0.0, 1.0]).unwrap() };
    let report = rigidity_inequalities(&candidate, &[1.0], 0.0).unwrap();
    let p = report.points[0];
    let json = serde_json::to_value(&report).unwrap();
    let point = &json["points"][0];
    let complete = [
        "third_order_lhs",
        "third_order_rhs",
        "fourth_order_lhs",
        "fourth_order_rhs",
        "bernoulli_tension",
        "edgeworth_factor",
        "d",
    ]
    .iter()
    .all(|k| point.get(k).is_some_and(|v| !v.is_null()));
    let finite = p.third_order_lhs.is_finite() && p.third_order_rhs.is_finite();
    let check = p.third_order_lhs_check.unwrap();
    let agree = (check - p.third_order_lhs).abs() <= 1e-12 * check.abs().max(1.0);
    outcome(
        complete && finite && agree,
        format!(
            "third order LHS {:.6e} vs RHS {:.1e} (M_phi = 0), tension {:.6e}, recomputed LHS differs by {:.1e}",
            p.third_order_lhs,
            p.third_order_rhs,
            p.bernoulli_tension.unwrap(),
            (check - p.third_order_lhs).abs()
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "Faa di Bruno tables", Duration::from_secs(1), faa_di_bruno_tables),
        (2, "two-block table", Duration::from_secs(1), table3_reproduction),
        (3, "large-n asymptotics", Duration::from_secs(10), asymptotics),
        (4, "germ fit round trip", Duration::from_secs(30), germ_round_trip),
        (5, "derivative identities", Duration::from_secs(10), derivative_identities),
        (6, "Q identity", Duration::from_secs(5), q_identity),
        (7, "counterexample family", Duration::from_secs(5), counterexample_family),
        (8, "CLT simulation", Duration::from_secs(120), clt_simulation),
        (9, "approximation convergence", Duration::from_secs(5), approximation_convergence),
        (10, "discrepancy record", Duration::from_secs(1), honest_discrepancy),
    ];
    let mut failures = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed <= budget;
        if !passed {
            failures += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.2}s / {}s]",
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
