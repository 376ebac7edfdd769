//! Sweeps that produce the registry constants.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::registry::{ConstantEntry, ConstantsRegistry, Provenance};
use crate::error::{Error, Result};
use crate::kernels::ModelParams;
use crate::lambda_functional::{
    critical_mass, fit_c_lambda, lambda_tilde, SupSearchConfig, SweepRow, TildeConfig,
};
use crate::localization::{build_partition, PartitionSpec};
use crate::torus_forms::{l_periodic_detail, Triple};

/// Squared norms of the `count` lattice points of ℤ³ closest to 0, sorted,
/// and the squared radius up to which the list is complete.
fn smallest_norms(count: usize) -> (Vec<i64>, i64) {
    let mut r = ((3.0 * count as f64 / (4.0 * PI)).cbrt().ceil() as i64).max(1);
    loop {
        let mut norms = Vec::with_capacity((2 * r as usize + 1).pow(3));
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    let n2 = a * a + b * b + c * c;
                    if n2 <= r * r {
                        norms.push(n2);
                    }
                }
            }
        }
        // The cube contains every point with |n|² ≤ r², so the first `count`
        // sorted norms are exact once the ball holds that many points.
        if norms.len() >= count {
            norms.sort_unstable();
            norms.truncate(count);
            return (norms, r * r);
        }
        r += 1;
    }
}

/// Q²ℓ²/N^{5/3} for the lowest-energy choice of N − 1 distinct lattice
/// momenta, Q² = ½Σ q_i², for N = 3..=n_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtEnumeration {
    pub value: f64,
    pub argmin: usize,
    pub n_max: usize,
    /// Ratio for N = 3, 4, …, n_max.
    pub ratios: Vec<f64>,
    /// Every lattice point with |n|² ≤ this was enumerated.
    pub complete_to: i64,
}

pub fn c_t_enumeration(n_max: usize) -> Result<CtEnumeration> {
    if n_max < 3 {
        return Err(Error::precondition(format!(
            "c_T needs n_max ≥ 3, got {n_max}"
        )));
    }
    let (norms, complete_to) = smallest_norms(n_max - 1);
    let h2 = 4.0 * PI * PI;
    let mut ratios = Vec::with_capacity(n_max - 2);
    let mut partial: i64 = norms[0] + norms[1];
    for n in 3..=n_max {
        if n > 3 {
            partial += norms[n - 2];
        }
        ratios.push(0.5 * h2 * partial as f64 / (n as f64).powf(5.0 / 3.0));
    }
    let (i, &value) = ratios
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("n_max ≥ 3 gives one ratio");
    Ok(CtEnumeration {
        value,
        argmin: i + 3,
        n_max,
        ratios,
        complete_to,
    })
}

/// c_T = min over 2 < N ≤ n_max of ½(2π)²Σ_{i<N}|n_i|²/N^{5/3}.
pub fn enumerate_c_t(n_max: usize) -> Result<f64> {
    Ok(c_t_enumeration(n_max)?.value)
}

/// Shell-filling limit (2π)²(3/5)(3/(4π))^{2/3}/2 of the c_T ratio.
pub fn c_t_asymptote() -> f64 {
    4.0 * PI * PI * 0.6 * (3.0 / (4.0 * PI)).powf(2.0 / 3.0) / 2.0
}

/// Ranges of the seeded L^per sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LperSweepSpec {
    pub seed: u64,
    pub points: usize,
    pub m_range: (f64, f64),
    pub ell_range: (f64, f64),
    /// Range of Q_μ²ℓ².
    pub q_ell_sq_range: (f64, f64),
    pub n_range: (usize, usize),
    /// Momentum components are drawn from [−k_max, k_max].
    pub k_max: i64,
}

impl LperSweepSpec {
    pub fn new(seed: u64, points: usize) -> Self {
        Self {
            seed,
            points,
            m_range: (0.3, 10.0),
            ell_range: (0.5, 4.0),
            q_ell_sq_range: (0.05, 100.0),
            n_range: (2, 4),
            k_max: 1,
        }
    }
}

/// One point of the L^per sweep; `scaled` = |L^per − L|·Q_μ²ℓ³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LperSample {
    pub m: f64,
    pub ell: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub mu: f64,
    pub q_mu_sq: f64,
    pub kvec: Vec<Triple>,
    pub correction: f64,
    pub scaled: f64,
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo * (hi / lo).powf(rng.random::<f64>())
}

/// Draw the sweep parameters sequentially, then evaluate them in parallel.
pub fn lper_sweep(spec: &LperSweepSpec) -> Result<Vec<LperSample>> {
    if spec.points == 0 {
        return Err(Error::precondition("sweep needs at least one point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.k_max;
    let draws: Vec<(f64, f64, usize, Vec<Triple>, f64)> = (0..spec.points)
        .map(|_| {
            let m = log_uniform(&mut rng, spec.m_range);
            let ell = log_uniform(&mut rng, spec.ell_range);
            let n = rng.random_range(spec.n_range.0..=spec.n_range.1);
            let kvec: Vec<Triple> = (0..n)
                .map(|_| {
                    [
                        rng.random_range(-k..=k),
                        rng.random_range(-k..=k),
                        rng.random_range(-k..=k),
                    ]
                })
                .collect();
            let q_mu_sq = log_uniform(&mut rng, spec.q_ell_sq_range) / (ell * ell);
            (m, ell, n, kvec, q_mu_sq)
        })
        .collect();
    draws
        .into_par_iter()
        .map(|(m, ell, n, kvec, q_mu_sq)| {
            let h = 2.0 * PI / ell;
            let rest: i64 = kvec[1..]
                .iter()
                .map(|t| t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
                .sum();
            let mu = q_mu_sq - 0.5 * h * h * rest as f64;
            let p = ModelParams::new(m, 0.0, mu, n, ell, ell)?;
            let lp = l_periodic_detail(&p, &kvec)?;
            Ok(LperSample {
                m,
                ell,
                n,
                mu,
                q_mu_sq,
                kvec,
                correction: lp.correction,
                scaled: lp.correction.abs() * q_mu_sq * ell.powi(3),
            })
        })
        .collect()
}

/// Least c with |L^per − L| ≤ c/(Q_μ²ℓ³) on every sample. The sup over all
/// inputs is (2π)³, approached at k₁ = 0 and Q_μℓ → 0 where the lattice term
/// at the origin dominates.
pub fn fit_c_l_prime(samples: &[LperSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::precondition("empty L^per sweep"));
    }
    let c = samples.iter().map(|s| s.scaled).fold(0.0, f64::max);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Numeric(format!("fitted c_L' = {c} is not positive")));
    }
    Ok(c)
}

/// Per-bin envelope over log-spaced mass bins and the ratio max/min of the
/// non-empty bins.
pub fn c_l_prime_mass_spread(
    samples: &[LperSample],
    m_range: (f64, f64),
    bins: usize,
) -> (Vec<f64>, f64) {
    let mut env = vec![0.0f64; bins];
    let span = (m_range.1 / m_range.0).ln();
    for s in samples {
        let t = ((s.m / m_range.0).ln() / span * bins as f64).floor();
        let i = (t.max(0.0) as usize).min(bins - 1);
        env[i] = env[i].max(s.scaled);
    }
    let filled: Vec<f64> = env.iter().copied().filter(|&v| v > 0.0).collect();
    let hi = filled.iter().copied().fold(0.0, f64::max);
    let lo = filled.iter().copied().fold(f64::INFINITY, f64::min);
    (env, hi / lo)
}

/// Everything `calibrate` runs, with the defaults used for the pinned registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub c_t_n_max: usize,
    pub lper: LperSweepSpec,
    pub lambda_masses: Vec<f64>,
    pub lambda_ns: Vec<usize>,
    /// κ as a fraction of c_T in the Λ̃ sweep.
    pub kappa_fraction: f64,
    pub partition_l: f64,
    pub partition_epsilon: f64,
    pub partition_points: usize,
    pub critical_bracket: (f64, f64),
    pub search: SupSearchConfig,
}

impl CalibrationSpec {
    pub fn default_sweep(seed: u64) -> Self {
        Self {
            c_t_n_max: 1000,
            lper: LperSweepSpec::new(seed, 1000),
            lambda_masses: vec![1.0, 3.0],
            lambda_ns: vec![100, 1000, 10000],
            kappa_fraction: 0.25,
            partition_l: 3.0,
            partition_epsilon: 0.125,
            partition_points: 64,
            critical_bracket: (0.3, 0.45),
            search: SupSearchConfig::default(),
        }
    }

    /// Smaller sweeps for smoke runs; the constants are looser.
    pub fn quick(seed: u64) -> Self {
        Self {
            c_t_n_max: 200,
            lper: LperSweepSpec::new(seed, 100),
            lambda_masses: vec![1.0, 3.0],
            lambda_ns: vec![100, 300, 1000],
            partition_points: 32,
            search: SupSearchConfig {
                m_tol: 5e-3,
                ..SupSearchConfig::default()
            },
            ..Self::default_sweep(seed)
        }
    }
}

/// Raw sweep outputs kept next to the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutput {
    pub registry: ConstantsRegistry,
    pub lper: Vec<LperSample>,
    pub lambda_rows: Vec<SweepRow>,
    pub c_l_prime_mass_spread: f64,
}

/// (m** + 1)/(8π⁴m**), the constant that makes the L → ∞ limit of the final
/// bound no sharper than the N-independent bound at m = m**.
pub fn unconfined_floor(m_star_star: f64) -> f64 {
    (m_star_star + 1.0) / (8.0 * PI.powi(4) * m_star_star)
}

/// Runs every sweep and assembles a registry stamped with `created`.
pub fn calibrate(spec: &CalibrationSpec, created: String) -> Result<CalibrationOutput> {
    let ct = c_t_enumeration(spec.c_t_n_max)?;
    let c_t = ConstantEntry::new(
        ct.value,
        Provenance::Enumerated,
        json!({ "n_max": spec.c_t_n_max, "argmin_n": ct.argmin, "complete_to_norm_sq": ct.complete_to }),
    );

    let lper = lper_sweep(&spec.lper)?;
    let clp = fit_c_l_prime(&lper)?;
    let (_, spread) = c_l_prime_mass_spread(&lper, spec.lper.m_range, 3);
    let c_l_prime = ConstantEntry::new(
        clp,
        Provenance::Fitted,
        json!({ "sweep": spec.lper, "mass_spread": spread }),
    );

    let tilde_cfg = TildeConfig::new(ct.value);
    let kappa = spec.kappa_fraction * ct.value;
    let mut rows = Vec::new();
    for &m in &spec.lambda_masses {
        for &n in &spec.lambda_ns {
            let r = lambda_tilde(m, kappa, n, 1.0, &tilde_cfg)?;
            rows.push(SweepRow::from_result(m, kappa, n, 1.0, ct.value, &r));
        }
    }
    let c_lambda = ConstantEntry::new(
        fit_c_lambda(&rows)?,
        Provenance::Fitted,
        json!({ "m": spec.lambda_masses, "N": spec.lambda_ns, "kappa_fraction": spec.kappa_fraction, "ell": 1.0 }),
    );

    let pspec = PartitionSpec {
        points_per_ell: spec.partition_points,
        ..PartitionSpec::new(spec.partition_l, 1.0, spec.partition_epsilon)?
    };
    let part = build_partition(pspec)?;
    let c_eta = ConstantEntry::new(
        part.c_eta,
        Provenance::Measured,
        json!({ "spec": pspec, "spread": part.c_eta_spread() }),
    );

    let cm = critical_mass(&spec.search, spec.critical_bracket)?;
    let m_star_star = ConstantEntry::new(
        cm.m_star,
        Provenance::Measured,
        json!({ "operation": "critical_mass", "bracket": spec.critical_bracket, "m_tol": spec.search.m_tol }),
    );

    let main = (8.0 * part.c_eta).max(unconfined_floor(cm.m_star));
    let main_const = ConstantEntry::new(
        main,
        Provenance::Fitted,
        json!({ "rule": "max(8 c_eta, (m**+1)/(8 pi^4 m**))", "c_eta": part.c_eta, "m_star_star": cm.m_star }),
    );

    let registry = ConstantsRegistry::assemble(
        created,
        c_t,
        c_l_prime,
        c_lambda,
        c_eta,
        m_star_star,
        main_const,
    )?;
    Ok(CalibrationOutput {
        registry,
        lper,
        lambda_rows: rows,
        c_l_prime_mass_spread: spread,
    })
}
