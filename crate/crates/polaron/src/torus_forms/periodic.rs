use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::amplitude::Triple;
use crate::error::{Error, Result};
use crate::kernels::{fhat_radial, l_prefactor, ModelParams};
use crate::numeric::NeumaierSum;

/// Relative size of the certified Poisson tail at which the sum stops.
const TAIL_REL_TOL: f64 = 1e-14;
/// Largest shell radius (in units of ℓ) summed explicitly.
const MAX_SHELLS: i64 = 240;

/// L^per at one point together with its truncation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPeriodic {
    pub value: f64,
    /// L(k⃗) of the continuum form.
    pub continuum: f64,
    /// L^per − L.
    pub correction: f64,
    /// γ = k₁²/(2(1+m)) + ½k̂₁² + μ.
    pub gamma: f64,
    /// Points of ℓℤ³ with |n| < shells were summed.
    pub shells: i64,
    pub terms: usize,
    /// Bound on the omitted part of the correction.
    pub tail_bound: f64,
}

pub(crate) fn sq(t: Triple) -> i64 {
    t[0] * t[0] + t[1] * t[1] + t[2] * t[2]
}

/// γ for the tuple `kvec` (integer coordinates) at shift `mu`.
pub(crate) fn gamma_of(params: &ModelParams, kvec: &[Triple], mu: f64) -> f64 {
    let h = params.spacing();
    let rest: i64 = kvec[1..].iter().map(|&k| sq(k)).sum();
    h * h * (sq(kvec[0]) as f64 / (2.0 * (1.0 + params.m)) + 0.5 * rest as f64) + mu
}

/// Bound on (2π)^{3/2}Σ_{|n|≥J} f̂_∞(ℓn), grouping points by ⌊|n|⌋ and
/// counting each group by the volume of its unit cubes.
fn tail_bound(m: f64, gamma: f64, ell: f64, j0: i64) -> f64 {
    let s = 3f64.sqrt() / 2.0;
    let mut acc = 0.0;
    let mut j = j0.max(1);
    loop {
        let jf = j as f64;
        let outer = jf + 1.0 + s;
        let inner = (jf - s).max(0.0);
        let count = 4.0 / 3.0 * PI * (outer.powi(3) - inner.powi(3));
        let term = count * fhat_radial(m, gamma, ell * jf);
        acc += term;
        if term <= 1e-18 * acc || term == 0.0 {
            break;
        }
        j += 1;
        if j > j0 + 1_000_000 {
            break;
        }
    }
    (2.0 * PI).powf(1.5) * acc
}

/// L^per_{μ,N}(k⃗) for lattice momenta `kvec`, via
/// L − (2π)^{3/2}Σ_{z∈ℓℤ³∖0} cos(a·z)f̂_∞(z) with a = m k₁/(m+1).
pub fn l_periodic(params: &ModelParams, kvec: &[Triple]) -> Result<f64> {
    Ok(l_periodic_detail(params, kvec)?.value)
}

pub fn l_periodic_detail(params: &ModelParams, kvec: &[Triple]) -> Result<LPeriodic> {
    l_periodic_at(params, kvec, params.mu)
}

pub(crate) fn l_periodic_at(params: &ModelParams, kvec: &[Triple], mu: f64) -> Result<LPeriodic> {
    params.validate()?;
    if kvec.is_empty() {
        return Err(Error::domain("L^per needs at least one momentum"));
    }
    let m = params.m;
    let ell = params.ell;
    let gamma = gamma_of(params, kvec, mu);
    if !(gamma > 0.0) {
        return Err(Error::domain(format!(
            "L^per needs gamma > 0, got {gamma} at {kvec:?}"
        )));
    }
    let continuum = l_prefactor(m) * gamma.sqrt();
    let reference = continuum + (2.0 * PI).powf(1.5) * fhat_radial(m, gamma, ell);
    let mut shells = 1;
    let mut tail = tail_bound(m, gamma, ell, shells);
    while tail > TAIL_REL_TOL * reference {
        shells += 1;
        if shells > MAX_SHELLS {
            return Err(Error::Accuracy {
                msg: format!("Poisson sum for L^per needs more than {MAX_SHELLS} shells (gamma*ell^2 too small)"),
                estimate: continuum,
                error: tail,
            });
        }
        tail = tail_bound(m, gamma, ell, shells);
    }
    // Phase 2π·frac(m/(m+1))·(j₁·n); only the fractional part matters.
    let c = (m / (m + 1.0)).rem_euclid(1.0);
    let j1 = kvec[0];
    let mut acc = NeumaierSum::new();
    let mut terms = 0;
    let jm = shells;
    for a in -jm..=jm {
        for b in -jm..=jm {
            for d in -jm..=jm {
                let n2 = a * a + b * b + d * d;
                if n2 == 0 || n2 >= jm * jm {
                    continue;
                }
                let dot = j1[0] * a + j1[1] * b + j1[2] * d;
                let phase = 2.0 * PI * (c * dot as f64).rem_euclid(1.0);
                acc.add(phase.cos() * fhat_radial(m, gamma, ell * (n2 as f64).sqrt()));
                terms += 1;
            }
        }
    }
    let correction = -(2.0 * PI).powf(1.5) * acc.value();
    Ok(LPeriodic {
        value: continuum + correction,
        continuum,
        correction,
        gamma,
        shells,
        terms,
        tail_bound: tail,
    })
}
