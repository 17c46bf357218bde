//! Monte Carlo check of the central limit theorem for Birkhoff sums
//! `S_m = Σ_{j<m} φ(σ^j x)` under the equilibrium state of `t_*φ`.
//!
//! For a window-1 potential on the full shift the equilibrium state is the
//! Bernoulli measure with `p_i ∝ e^{t_* c_i}`, so `S_m = Σ_i N_i c_i` where
//! `(N_i)` is multinomial with `m` trials. Each sample draws the counts by
//! successive binomials, which is exact and costs `O(n)` regardless of `m`.
//!
//! Samples are generated in fixed-size blocks, each with its own ChaCha
//! stream keyed by `(seed, orbit-length index, block index)`. The result is
//! therefore identical for every thread count.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::pressure::pressure_jet;
use crate::symbolic::{equilibrium_weights, CylinderPotential};

/// Samples per RNG stream.
pub const BLOCK_SIZE: usize = 8192;
/// Fewest samples per orbit length accepted by [`simulate_gm`].
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub potential: CylinderPotential,
    pub t_star: f64,
    pub orbit_lengths: Vec<usize>,
    pub samples_per_m: usize,
    pub seed: u64,
}

/// Statistics for one orbit length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltRow {
    pub m: usize,
    /// Kolmogorov–Smirnov distance between `S_m/√m` and `N(0, Δ₂)`.
    pub ks_distance: f64,
    /// `(9|Δ₃| + 2|Δ₄|) / (√(2π³m) Δ₂^{3/2})`.
    pub bound: f64,
    pub bound_holds: bool,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub t_star: f64,
    pub seed: u64,
    pub samples_per_m: usize,
    /// `[Δ₂, Δ₃, Δ₄]`: cumulants 2–4 of `φ` under the equilibrium state.
    pub delta: [f64; 3],
    /// Always true: the potential is centred before sampling.
    pub centered: bool,
    /// Mean subtracted by the centring.
    pub centering_shift: f64,
    pub rows: Vec<CltRow>,
    /// Smallest simulated `m` whose KS distance is within the bound.
    pub first_m_within_bound: Option<usize>,
}

/// Subtracts the equilibrium mean at `t_star` from every value.
pub fn center_potential(potential: &CylinderPotential, t_star: f64) -> Result<CylinderPotential> {
    let weights = equilibrium_weights(potential, t_star)?;
    let mean = compensated_sum(weights.probabilities().iter().zip(potential.values()).map(|(p, c)| p * c));
    Ok(potential.shifted(-mean))
}

/// `(9|Δ₃| + 2|Δ₄|) / (√(2π³m) Δ₂^{3/2})`.
pub fn tail_bound(m: usize, delta2: f64, delta3: f64, delta4: f64) -> f64 {
    (9.0 * delta3.abs() + 2.0 * delta4.abs()) / ((2.0 * PI.powi(3) * m as f64).sqrt() * delta2.powf(1.5))
}

/// `H_m(y) = (Δ₃ / (6√m)) (1 − y²/Δ₂) e^{−y²/(2Δ₂)}`.
pub fn edgeworth_correction(y: f64, m: usize, delta2: f64, delta3: f64) -> f64 {
    let r = y * y / delta2;
    delta3 / (6.0 * (m as f64).sqrt()) * (1.0 - r) * (-0.5 * r).exp()
}

/// One-sample Kolmogorov–Smirnov statistic of sorted data against `cdf`.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Draws `count` samples of `S_m / √m`.
struct Sampler {
    values: Vec<f64>,
    /// Conditional probabilities `p_i / (p_i + … + p_{n−1})`.
    conditional: Vec<f64>,
}

impl Sampler {
    fn new(values: &[f64], probabilities: &[f64]) -> Self {
        let mut conditional = vec![0.0; probabilities.len()];
        let mut tail = 0.0;
        for i in (0..probabilities.len()).rev() {
            tail += probabilities[i];
            conditional[i] = (probabilities[i] / tail).min(1.0);
        }
        Self { values: values.to_vec(), conditional }
    }

    fn draw(&self, m: usize, rng: &mut ChaCha8Rng) -> f64 {
        let last = self.values.len() - 1;
        let mut remaining = m as u64;
        let mut sum = 0.0;
        for i in 0..last {
            if remaining == 0 {
                break;
            }
            let count = Binomial::new(remaining, self.conditional[i])
                .expect("conditional probabilities lie in [0, 1]")
                .sample(rng);
            sum += count as f64 * self.values[i];
            remaining -= count;
        }
        sum += remaining as f64 * self.values[last];
        sum / (m as f64).sqrt()
    }
}

fn stream(seed: u64, m_index: usize, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m_index as u64) << 32) | block as u64);
    rng
}

/// Runs the simulation for every orbit length in `config`.
pub fn simulate_gm(config: &SimConfig) -> Result<CltReport> {
    if config.samples_per_m < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "samples_per_m = {} is below the minimum {MIN_SAMPLES}",
            config.samples_per_m
        )));
    }
    if config.orbit_lengths.is_empty() || config.orbit_lengths.contains(&0) {
        return Err(Error::Domain("orbit lengths must be a non-empty list of positive integers".into()));
    }
    let centered = center_potential(&config.potential, config.t_star)?;
    let shift = config.potential.values()[0] - centered.values()[0];
    let jet = pressure_jet(&centered, config.t_star, 4)?;
    let (d2, d3, d4) = (jet.derivs[2], jet.derivs[3], jet.derivs[4]);
    if !(d2 > 0.0) {
        return Err(Error::Degenerate(format!("variance Δ2 = {d2}: the potential is cohomologous to a constant")));
    }
    let weights = equilibrium_weights(&centered, config.t_star)?;
    let sampler = Sampler::new(centered.values(), weights.probabilities());
    let normal = Normal::new(0.0, d2.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;

    let n_samples = config.samples_per_m;
    let n_blocks = n_samples.div_ceil(BLOCK_SIZE);
    let mut rows = Vec::with_capacity(config.orbit_lengths.len());
    for (mi, &m) in config.orbit_lengths.iter().enumerate() {
        let mut samples: Vec<f64> = (0..n_blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let len = BLOCK_SIZE.min(n_samples - b * BLOCK_SIZE);
                let mut rng = stream(config.seed, mi, b);
                let sampler = &sampler;
                (0..len).map(move |_| sampler.draw(m, &mut rng)).collect::<Vec<_>>()
            })
            .collect();
        samples.par_sort_unstable_by(f64::total_cmp);

        let count = samples.len() as f64;
        let mean = compensated_sum(samples.iter().copied()) / count;
        let m2 = compensated_sum(samples.iter().map(|x| (x - mean).powi(2))) / count;
        let m4 = compensated_sum(samples.iter().map(|x| (x - mean).powi(4))) / count;
        let variance = m2 * count / (count - 1.0);
        let ks_distance = ks_statistic(&samples, |x| normal.cdf(x));
        let bound = tail_bound(m, d2, d3, d4);
        rows.push(CltRow {
            m,
            ks_distance,
            bound,
            bound_holds: ks_distance <= bound,
            mean,
            mean_se: (variance / count).sqrt(),
            variance,
            variance_se: ((m4 - m2 * m2).max(0.0) / count).sqrt(),
        });
    }
    let first_m_within_bound = rows.iter().filter(|r| r.bound_holds).map(|r| r.m).min();
    Ok(CltReport {
        t_star: config.t_star,
        seed: config.seed,
        samples_per_m: n_samples,
        delta: [d2, d3, d4],
        centered: true,
        centering_shift: shift,
        rows,
        first_m_within_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(values: &[f64]) -> CylinderPotential {
        CylinderPotential::full_shift(values.to_vec()).unwrap()
    }

    #[test]
    fn centering_examples() {
        assert_eq!(center_potential(&full(&[0.0, 1.0]), 0.0).unwrap().values(), &[-0.5, 0.5]);
        assert_eq!(center_potential(&full(&[2.0, 2.0]), 1.3).unwrap().values(), &[0.0, 0.0]);
        let c = center_potential(&full(&[0.0, 3f64.ln()]), 1.0).unwrap();
        assert!((c.values()[0] + 0.75 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bound_arithmetic() {
        let b = tail_bound(100, 0.25, 0.0, -0.125);
        let want = 0.25 / ((2.0 * PI.powi(3) * 100.0).sqrt() * 0.125);
        assert!((b - want).abs() < 1e-15);
        assert!((b - 0.02540).abs() < 1e-5);
    }

    #[test]
    fn edgeworth_examples() {
        assert_eq!(edgeworth_correction(0.7, 50, 0.25, 0.0), 0.0);
        assert!(edgeworth_correction(0.5, 50, 0.25, 0.3).abs() < 1e-17);
        assert!((edgeworth_correction(0.0, 100, 0.25, 0.3) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn ks_of_perfect_grid() {
        let data: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&data, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_small_configs() {
        let cfg = SimConfig {
            potential: full(&[1.0, 1.0]),
            t_star: 0.0,
            orbit_lengths: vec![10],
            samples_per_m: 10_000,
            seed: 1,
        };
        assert!(matches!(simulate_gm(&cfg), Err(Error::Degenerate(_))));
        let cfg = SimConfig { potential: full(&[0.0, 1.0]), samples_per_m: 100, ..cfg };
        assert!(matches!(simulate_gm(&cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn moments_match_the_law() {
        let cfg = SimConfig {
            potential: full(&[0.0, 1.0, 3.0]),
            t_star: 0.4,
            orbit_lengths: vec![50],
            samples_per_m: 40_000,
            seed: 7,
        };
        let report = simulate_gm(&cfg).unwrap();
        let row = &report.rows[0];
        assert!(row.mean.abs() < 4.0 * row.mean_se, "{row:?}");
        assert!((row.variance - report.delta[0]).abs() < 4.0 * row.variance_se, "{row:?}");
    }

    #[test]
    fn same_seed_same_report_across_thread_counts() {
        let cfg = SimConfig {
            potential: full(&[-0.5, 0.5]),
            t_star: 0.0,
            orbit_lengths: vec![100, 1000],
            samples_per_m: 20_000,
            seed: 42,
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_gm(&cfg).unwrap());
        let b = four.install(|| simulate_gm(&cfg).unwrap());
        assert_eq!(a, b);
    }
}
