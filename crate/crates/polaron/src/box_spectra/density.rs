use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levels::{check_side, states_up_to};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Normalised sine mode √(2/L)·sin(πnx/L) on (0, L).
#[inline]
pub(crate) fn mode(n: u32, x: f64, l: f64) -> f64 {
    (2.0 / l).sqrt() * (PI * n as f64 * x / l).sin()
}

/// ρ₀(x) = Σ_{p² ≤ μ}|φ_p(x)|² with φ_p the sine eigenfunctions on (0, L)³.
pub fn rho0(x: [f64; 3], l: f64, mu: f64) -> Result<f64> {
    check_side(l)?;
    if x.iter().any(|&c| !(0.0..=l).contains(&c)) {
        return Err(Error::domain(format!(
            "point {x:?} is outside the box [0, {l}]^3"
        )));
    }
    let states = states_up_to(l, mu);
    Ok(rho0_states(x, l, &states))
}

fn rho0_states(x: [f64; 3], l: f64, states: &[[u32; 3]]) -> f64 {
    states
        .iter()
        .map(|n| (0..3).map(|j| mode(n[j], x[j], l).powi(2)).product::<f64>())
        .collect::<NeumaierSum>()
        .value()
}

/// ρ₀ at the midpoints of an m³ grid, index (i·m + j)·m + k.
pub fn rho0_grid(l: f64, mu: f64, m: usize) -> Result<Vec<f64>> {
    check_side(l)?;
    if m == 0 {
        return Err(Error::domain("grid resolution must be positive"));
    }
    let states = states_up_to(l, mu);
    let nmax = states
        .iter()
        .flat_map(|s| s.iter())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    // Per-axis tables of φ_n(x)², reused for every state.
    let table: Vec<Vec<f64>> = (0..=nmax)
        .map(|n| {
            (0..m)
                .map(|i| mode(n as u32, (i as f64 + 0.5) * l / m as f64, l).powi(2))
                .collect()
        })
        .collect();
    let out: Vec<f64> = (0..m * m * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (m * m), (idx / m) % m, idx % m);
            states
                .iter()
                .map(|n| {
                    table[n[0] as usize][i] * table[n[1] as usize][j] * table[n[2] as usize][k]
                })
                .collect::<NeumaierSum>()
                .value()
        })
        .collect();
    Ok(out)
}

/// A potential sampled at the midpoints of a uniform m³ grid on (0, L)³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialGrid {
    pub l: f64,
    pub m: usize,
    /// Values at ((i+½)L/m, (j+½)L/m, (k+½)L/m), index (i·m + j)·m + k.
    pub values: Vec<f64>,
}

impl PotentialGrid {
    pub fn new(l: f64, m: usize, values: Vec<f64>) -> Result<Self> {
        check_side(l)?;
        if m == 0 || values.len() != m * m * m {
            return Err(Error::domain(format!(
                "expected {} grid values, got {}",
                m * m * m,
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v <= 0.0)) {
            return Err(Error::domain(
                "potential values must be finite and non-positive",
            ));
        }
        Ok(Self { l, m, values })
    }

    pub fn from_fn<F: Fn([f64; 3]) -> f64>(l: f64, m: usize, f: F) -> Result<Self> {
        let h = l / m as f64;
        let mut values = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    values.push(f([
                        (i as f64 + 0.5) * h,
                        (j as f64 + 0.5) * h,
                        (k as f64 + 0.5) * h,
                    ]));
                }
            }
        }
        Self::new(l, m, values)
    }

    pub fn zero(l: f64, m: usize) -> Result<Self> {
        Self::new(l, m, vec![0.0; m * m * m])
    }

    pub fn cell_volume(&self) -> f64 {
        (self.l / self.m as f64).powi(3)
    }

    /// Midpoint-rule ∫|V|^p.
    pub fn integral_pow(&self, p: f64) -> f64 {
        let s: NeumaierSum = self.values.iter().map(|v| v.abs().powf(p)).collect();
        s.value() * self.cell_volume()
    }

    /// Midpoint-rule ∫gV for g sampled on the same grid.
    pub fn integral_against(&self, g: &[f64]) -> f64 {
        let s: NeumaierSum = self.values.iter().zip(g).map(|(v, w)| v * w).collect();
        s.value() * self.cell_volume()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Seed and shape of a random smooth potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialManifest {
    pub seed: u64,
    pub l: f64,
    pub m: usize,
    pub bumps: usize,
    pub depth_scale: f64,
}

/// Sum of `bumps` negative Gaussians with random centres, widths in
/// [L/10, L/4] and depths in [0, depth_scale].
pub fn random_smooth_potential(
    l: f64,
    m: usize,
    bumps: usize,
    depth_scale: f64,
    seed: u64,
) -> Result<(PotentialGrid, PotentialManifest)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<([f64; 3], f64, f64)> = (0..bumps)
        .map(|_| {
            let c = [
                rng.random_range(0.0..l),
                rng.random_range(0.0..l),
                rng.random_range(0.0..l),
            ];
            (
                c,
                rng.random_range(0.1 * l..0.25 * l),
                rng.random_range(0.0..depth_scale),
            )
        })
        .collect();
    let grid = PotentialGrid::from_fn(l, m, |x| {
        params
            .iter()
            .map(|(c, w, d)| {
                let r2: f64 = (0..3).map(|j| (x[j] - c[j]).powi(2)).sum();
                -d * (-r2 / (2.0 * w * w)).exp()
            })
            .sum()
    })?;
    Ok((
        grid,
        PotentialManifest {
            seed,
            l,
            m,
            bumps,
            depth_scale,
        },
    ))
}
