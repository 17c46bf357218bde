use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::json;
use sha2::{Digest, Sha256};
use thermoforge::approx::limit_pressure;
use thermoforge::{
    convergence_study, fit_level1, fit_level2, pressure, pressure_jet, rigidity_inequalities, selftest, simulate_gm,
    table3_solve, CandidateFunction, CylinderPotential, DecayingPotentialSpec, FitResult, Germ, SimConfig, TaylorJet,
};

use crate::args::{ApproxArgs, CltsimArgs, Family, Fit1Args, Fit2Args, PressureArgs, RigidityArgs, Table3Args};
use crate::output::{num, opt, Artifact, InputDigest};

/// Reads files named on the command line and records their digests.
#[derive(Default)]
pub struct Inputs {
    pub digests: Vec<InputDigest>,
}

impl Inputs {
    fn read<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = if path.as_os_str() == "-" {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
            buf
        } else {
            fs::read(path).with_context(|| format!("reading {}", path.display()))?
        };
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.digests.push(InputDigest { path: path.display().to_string(), sha256 });
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn pressure_cmd(args: &PressureArgs, inputs: &mut Inputs) -> Result<Artifact> {
    let potential: CylinderPotential = inputs.read(&args.potential)?;
    let ts = match (&args.grid, args.t) {
        (Some(grid), _) => grid.points(),
        (None, Some(t)) => vec![t],
        (None, None) => unreachable!("clap requires --t or --grid"),
    };
    let points: Vec<TaylorJet> = ts
        .par_iter()
        .map(|&t| match args.order {
            0 => pressure(&potential, t).map(|p| TaylorJet { t_star: t, derivs: vec![p] }),
            k => pressure_jet(&potential, t, k),
        })
        .collect::<thermoforge::Result<_>>()?;
    let mut columns = vec!["t".to_string(), "pressure".to_string()];
    columns.extend((1..=args.order).map(|k| format!("d{k}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut art = Artifact::new(
        json!({ "n": potential.n(), "window": potential.window(), "order": args.order, "points": points }),
        &columns,
    )?;
    for jet in &points {
        art.row(std::iter::once(jet.t_star).chain(jet.derivs.iter().copied()).map(num).collect());
    }
    Ok(art)
}

fn fit_artifact(germ: &Germ, fit: &FitResult) -> Result<Artifact> {
    // n, window and values make the output a valid potential file.
    let mut art = Artifact::new(
        json!({
            "n": fit.z.len(),
            "window": 1,
            "values": fit.z,
            "germ": germ,
            "achieved": fit.achieved,
            "residuals": fit.residuals,
            "feasible_a2": fit.feasible_a2,
        }),
        &["symbol", "z"],
    )?;
    for (i, z) in fit.z.iter().enumerate() {
        art.row(vec![i.to_string(), num(*z)]);
    }
    Ok(art)
}

pub fn fit1(args: &Fit1Args) -> Result<Artifact> {
    let germ = Germ::level1(args.tstar, args.a0, args.a1)?;
    fit_artifact(&germ, &fit_level1(&germ, args.n)?)
}

pub fn fit2(args: &Fit2Args) -> Result<Artifact> {
    let g = &args.germ;
    let germ = Germ::level2(g.tstar, g.a0, g.a1, args.a2)?;
    fit_artifact(&germ, &fit_level2(&germ, g.n)?)
}

pub fn table3(args: &Table3Args) -> Result<Artifact> {
    let ns = args.n_list.clone().unwrap_or_else(|| (1..=40).map(|k| 10f64.powi(k)).collect());
    let rows = ns.par_iter().map(|&n| table3_solve(n)).collect::<thermoforge::Result<Vec<_>>>()?;
    let mut art =
        Artifact::new(json!({ "rows": rows }), &["n", "c_a", "eta", "residual_q0", "residual_q1", "iterations"])?;
    for r in &rows {
        art.row(vec![
            num(r.n),
            num(r.c_a),
            num(r.eta),
            num(r.residuals[0]),
            num(r.residuals[1]),
            r.iterations.to_string(),
        ]);
    }
    Ok(art)
}

pub fn rigidity(args: &RigidityArgs, inputs: &mut Inputs) -> Result<Artifact> {
    let candidate = match (&args.family, &args.potential, &args.candidate) {
        (Some(Family::Fabc), _, _) => CandidateFunction::Fabc {
            a: args.a.context("--a is required with --family fabc")?,
            b: args.b.context("--b is required with --family fabc")?,
            c: args.c.context("--c is required with --family fabc")?,
        },
        (None, Some(path), _) => CandidateFunction::Potential { potential: inputs.read(path)? },
        (None, None, Some(path)) => inputs.read(path)?,
        (None, None, None) => unreachable!("clap requires a candidate"),
    };
    let report = rigidity_inequalities(&candidate, &args.grid.points(), args.mphi)?;
    let mut art = Artifact::new(
        json!({ "candidate": candidate, "m_phi": report.m_phi, "flagged": report.flagged(), "points": report.points }),
        &[
            "t",
            "f2",
            "f3",
            "f4",
            "convex",
            "d",
            "fourth_order_lhs",
            "fourth_order_rhs",
            "fourth_order_holds",
            "third_order_lhs",
            "third_order_rhs",
            "third_order_holds",
            "edgeworth_factor",
            "bernoulli_tension",
            "third_order_lhs_check",
        ],
    )?;
    for p in &report.points {
        art.row(vec![
            num(p.t),
            num(p.f2),
            num(p.f3),
            num(p.f4),
            p.convex.to_string(),
            opt(p.d),
            num(p.fourth_order_lhs),
            num(p.fourth_order_rhs),
            p.fourth_order_holds.to_string(),
            num(p.third_order_lhs),
            num(p.third_order_rhs),
            p.third_order_holds.to_string(),
            num(p.edgeworth_factor),
            opt(p.bernoulli_tension),
            opt(p.third_order_lhs_check),
        ]);
    }
    Ok(art)
}

pub fn cltsim(args: &CltsimArgs, seed: u64, inputs: &mut Inputs) -> Result<Artifact> {
    let config = SimConfig {
        potential: inputs.read(&args.potential)?,
        t_star: args.tstar,
        orbit_lengths: args.m.clone(),
        samples_per_m: args.samples,
        seed,
    };
    let report = simulate_gm(&config)?;
    let mut art = Artifact::new(
        &report,
        &["m", "ks_distance", "bound", "bound_holds", "mean", "mean_se", "variance", "variance_se"],
    )?;
    for r in &report.rows {
        art.row(vec![
            r.m.to_string(),
            num(r.ks_distance),
            num(r.bound),
            r.bound_holds.to_string(),
            num(r.mean),
            num(r.mean_se),
            num(r.variance),
            num(r.variance_se),
        ]);
    }
    Ok(art)
}

pub fn approx(args: &ApproxArgs, inputs: &mut Inputs) -> Result<Artifact> {
    let spec: DecayingPotentialSpec = inputs.read(&args.spec)?;
    spec.validate()?;
    let rows = convergence_study(&spec, args.t, &args.windows.0)?;
    let limit = limit_pressure(&spec, args.t)?;
    let mut art = Artifact::new(
        json!({ "t": args.t, "limit_pressure": limit, "rows": rows }),
        &["window", "p_inf", "p_mid", "p_sup", "gap", "gap_bound"],
    )?;
    for r in &rows {
        art.row(vec![r.window.to_string(), num(r.p_inf), num(r.p_mid), num(r.p_sup), num(r.gap), num(r.gap_bound)]);
    }
    Ok(art)
}

/// The artifact and whether every check passed.
pub fn selftest_cmd() -> Result<(Artifact, bool)> {
    let report = selftest::run();
    let passed = report.passed();
    let mut art = Artifact::new(json!({ "passed": passed, "checks": report.checks }), &["check", "passed", "detail"])?;
    for c in &report.checks {
        art.row(vec![c.name.to_string(), c.passed.to_string(), c.detail.clone()]);
    }
    Ok((art, passed))
}
