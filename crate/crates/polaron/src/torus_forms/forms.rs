use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::amplitude::{measure, SingularAmplitude, Triple};
use super::periodic::{gamma_of, l_periodic_at, sq, LPeriodic};
use crate::error::{Error, Result};
use crate::kernels::{l_continuum, ModelParams};
use crate::numeric::NeumaierSum;

/// Pieces of T^per_{α,μ,N}; for a fermionic ξ each piece carries the
/// overall factor N of the fermionic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusFormBreakdown {
    pub alpha_term: f64,
    pub t_dia: f64,
    pub t_off: f64,
    pub total: f64,
    pub mu: f64,
    /// Imaginary part of the off-diagonal double sum before it was dropped.
    pub t_off_imag: f64,
    /// One record per distinct (k₁, |k̂₁|²) evaluated.
    pub l_per: Vec<LPeriodic>,
}

fn check_mu(xi: &SingularAmplitude, params: &ModelParams) -> Result<()> {
    params.validate()?;
    if xi.n() != params.n {
        return Err(Error::domain(format!(
            "amplitude has N = {}, parameters have N = {}",
            xi.n(),
            params.n
        )));
    }
    if params.mu < 0.0 && !xi.is_antisymmetric() {
        return Err(Error::domain(
            "negative mu is only allowed for antisymmetric amplitudes",
        ));
    }
    Ok(())
}

fn two_pi_over(ell: f64) -> f64 {
    2.0 * PI / ell
}

/// Σ|ξ̂|²L^per over the support, with L^per cached per (k₁, |k̂₁|²).
fn dia_sum(
    xi: &SingularAmplitude,
    params: &ModelParams,
    cache: &mut BTreeMap<(Triple, i64), LPeriodic>,
) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for (key, v) in xi.iter() {
        let rest: i64 = key[1..].iter().map(|&k| sq(k)).sum();
        let id = (key[0], rest);
        let l = match cache.entry(id) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(l_periodic_at(params, key, params.mu)?),
        };
        acc.add(v.norm_sqr() * l.value);
    }
    Ok(acc.value())
}

/// Fermionic T^per_dia = (2π/ℓ)^{3N}Σ|ξ̂(k⃗)|²L^per(k⃗).
pub fn t_dia_per(xi: &SingularAmplitude, params: &ModelParams) -> Result<f64> {
    check_mu(xi, params)?;
    let mut cache = BTreeMap::new();
    Ok(measure(xi.n(), params.ell) * dia_sum(xi, params, &mut cache)?)
}

/// G_μ at integer momenta, with a domain error naming the point when the
/// denominator is not positive.
fn green_int(params: &ModelParams, k0: Triple, ks: &[Triple]) -> Result<f64> {
    let h = two_pi_over(params.ell);
    let rest: i64 = ks.iter().map(|&k| sq(k)).sum();
    let e = h * h * (sq(k0) as f64 / (2.0 * params.m) + 0.5 * rest as f64) + params.mu;
    if !(e > 0.0) {
        return Err(Error::domain(format!(
            "resolvent denominator {e} is not positive at k0 = {k0:?}, k = {ks:?} (mu = {} too negative)",
            params.mu
        )));
    }
    Ok(1.0 / e)
}

fn sub(a: Triple, b: Triple) -> Triple {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Fermionic T^per_off as the exact complex double sum
/// (N−1)(2π/ℓ)^{3(N+1)}Σ ξ̂*(k₀+k₁, k̂₁) ξ̂(k₀+k₂, k̂₂) G_μ(k₀, k⃗).
pub fn t_off_per_complex(xi: &SingularAmplitude, params: &ModelParams) -> Result<Complex64> {
    check_mu(xi, params)?;
    let n = xi.n();
    if n < 2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // p = (k₀+k₁, k₂, k₃…) and q = (k₀+k₂, k₁, k₃…) share the tail k₃….
    let mut groups: BTreeMap<&[Triple], Vec<(&Vec<Triple>, Complex64)>> = BTreeMap::new();
    for (key, &v) in xi.iter() {
        groups.entry(&key[2..]).or_default().push((key, v));
    }
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    let mut ks = vec![[0i64; 3]; n];
    for (tail, members) in &groups {
        ks[2..].copy_from_slice(tail);
        for &(p, vp) in members {
            for &(q, vq) in members {
                let k2 = p[1];
                let k1 = q[1];
                let k0 = sub(p[0], k1);
                if sub(q[0], k2) != k0 {
                    continue;
                }
                ks[0] = k1;
                ks[1] = k2;
                let g = green_int(params, k0, &ks)?;
                let t = vp.conj() * vq * g;
                re.add(t.re);
                im.add(t.im);
            }
        }
    }
    let scale = (n - 1) as f64 * measure(n + 1, params.ell);
    Ok(Complex64::new(re.value(), im.value()) * scale)
}

/// Real part of [`t_off_per_complex`].
pub fn t_off_per(xi: &SingularAmplitude, params: &ModelParams) -> Result<f64> {
    Ok(t_off_per_complex(xi, params)?.re)
}

/// T^per_{α,μ,N} = N((2m/(m+1))α‖ξ‖² + T_dia + T_off) for a fermionic ξ.
pub fn t_alpha_per(xi: &SingularAmplitude, params: &ModelParams) -> Result<TorusFormBreakdown> {
    check_mu(xi, params)?;
    let n = xi.n() as f64;
    let m = params.m;
    let mut cache = BTreeMap::new();
    let dia = measure(xi.n(), params.ell) * dia_sum(xi, params, &mut cache)?;
    let off = t_off_per_complex(xi, params)?;
    let alpha_term = n * 2.0 * m / (m + 1.0) * params.alpha * xi.norm_sq(params.ell);
    let t_dia = n * dia;
    let t_off = n * off.re;
    Ok(TorusFormBreakdown {
        alpha_term,
        t_dia,
        t_off,
        total: [alpha_term, t_dia, t_off]
            .iter()
            .copied()
            .collect::<NeumaierSum>()
            .value(),
        mu: params.mu,
        t_off_imag: n * off.im,
        l_per: cache.into_values().collect(),
    })
}

/// ξ_i = (−1)^{i+1}ξ, i = 1..N.
pub fn fermionic_components(xi: &SingularAmplitude) -> Vec<SingularAmplitude> {
    (0..xi.n())
        .map(|a| xi.scaled(Complex64::new(if a % 2 == 0 { 1.0 } else { -1.0 }, 0.0)))
        .collect()
}

/// Momenta k_l (l ≠ `skip`) listed by a k̂ tuple; returns the particle index of slot r.
#[inline]
fn particle_of(r: usize, skip: usize) -> usize {
    if r < skip {
        r
    } else {
        r + 1
    }
}

/// T̃^per_{α,μ,N} of the extended form for an arbitrary family (ξ_i).
pub fn t_tilde_per(xis: &[SingularAmplitude], params: &ModelParams) -> Result<TorusFormBreakdown> {
    let n = params.n;
    if xis.len() != n {
        return Err(Error::domain(format!(
            "need {n} components, got {}",
            xis.len()
        )));
    }
    for xi in xis {
        check_mu(xi, params)?;
    }
    let m = params.m;
    let mut cache = BTreeMap::new();
    let mut dia = NeumaierSum::new();
    let mut norm = NeumaierSum::new();
    for xi in xis {
        dia.add(dia_sum(xi, params, &mut cache)?);
        norm.add(xi.sum_sq());
    }
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    let mut ks = vec![[0i64; 3]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            // Index ξ_a by the momenta it shares with ξ_b: all k_l with l ∉ {a, b}.
            let mut index: HashMap<Vec<Triple>, Vec<(&Vec<Triple>, Complex64)>> = HashMap::new();
            for (q, &vq) in xis[a].iter() {
                let shared: Vec<Triple> = (0..n - 1)
                    .filter(|&r| particle_of(r, a) != b)
                    .map(|r| q[1 + r])
                    .collect();
                index.entry(shared).or_default().push((q, vq));
            }
            for (p, &vp) in xis[b].iter() {
                let shared: Vec<Triple> = (0..n - 1)
                    .filter(|&r| particle_of(r, b) != a)
                    .map(|r| p[1 + r])
                    .collect();
                let Some(cands) = index.get(&shared) else {
                    continue;
                };
                for &(q, vq) in cands {
                    for r in 0..n - 1 {
                        ks[particle_of(r, b)] = p[1 + r];
                    }
                    let rb = (0..n - 1).find(|&r| particle_of(r, a) == b).unwrap();
                    ks[b] = q[1 + rb];
                    let k0 = sub(p[0], ks[b]);
                    if sub(q[0], ks[a]) != k0 {
                        continue;
                    }
                    let g = green_int(params, k0, &ks)?;
                    let t = vp.conj() * vq * g;
                    re.add(-t.re);
                    im.add(-t.im);
                }
            }
        }
    }
    let ell = params.ell;
    let alpha_term = 2.0 * m / (m + 1.0) * params.alpha * measure(n, ell) * norm.value();
    let t_dia = measure(n, ell) * dia.value();
    let t_off = measure(n + 1, ell) * re.value();
    Ok(TorusFormBreakdown {
        alpha_term,
        t_dia,
        t_off,
        total: [alpha_term, t_dia, t_off]
            .iter()
            .copied()
            .collect::<NeumaierSum>()
            .value(),
        mu: params.mu,
        t_off_imag: measure(n + 1, ell) * im.value(),
        l_per: cache.into_values().collect(),
    })
}

/// ‖G_ν ξ‖² of one component on the lattice:
/// (2π/ℓ)^{3N}Σ π²(2m/(m+1))^{3/2}|ξ̂(k⃗)|²/√(k₁²/(2(1+m)) + ½k̂₁² + ν).
pub fn g_norm_sq(xi: &SingularAmplitude, nu: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let m = params.m;
    let pref = PI * PI * (2.0 * m / (m + 1.0)).powf(1.5);
    let mut acc = NeumaierSum::new();
    for (key, v) in xi.iter() {
        let gamma = gamma_of(params, key, nu);
        if !(gamma > 0.0) {
            return Err(Error::domain(format!(
                "non-positive radicand {gamma} at {key:?}"
            )));
        }
        acc.add(v.norm_sqr() / gamma.sqrt());
    }
    Ok(pref * measure(xi.n(), params.ell) * acc.value())
}

/// (2π/ℓ)^{3N}Σ L(k⃗)|ξ̂(k⃗)|² with the continuum symbol L.
pub fn l_sum(xi: &SingularAmplitude, params: &ModelParams) -> Result<f64> {
    check_mu(xi, params)?;
    let h = two_pi_over(params.ell);
    let mut acc = NeumaierSum::new();
    for (key, v) in xi.iter() {
        let k1 = [
            h * key[0][0] as f64,
            h * key[0][1] as f64,
            h * key[0][2] as f64,
        ];
        let rest: i64 = key[1..].iter().map(|&k| sq(k)).sum();
        acc.add(v.norm_sqr() * l_continuum(params, k1, h * h * rest as f64)?);
    }
    Ok(measure(xi.n(), params.ell) * acc.value())
}

/// The lower bounds on the fermionic T_off and T_dia for μ ≥ −κN^{5/3}ℓ⁻²:
/// T_off ≥ −Λ̃/(1−κ/c_T)·S and T_dia ≥ S − c'_L/((c_T−κ)N^{5/3}ℓ)‖ξ‖², S = [`l_sum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBoundsCheck {
    pub t_off: f64,
    pub t_dia: f64,
    pub l_sum: f64,
    pub off_bound: f64,
    pub dia_bound: f64,
}

impl FormBoundsCheck {
    /// Both inequalities, up to `tol` times the size of the terms.
    pub fn holds(&self, tol: f64) -> bool {
        let scale = self.l_sum.abs() + self.t_off.abs() + self.t_dia.abs();
        self.t_off >= self.off_bound - tol * scale && self.t_dia >= self.dia_bound - tol * scale
    }
}

pub fn form_bounds_check(
    xi: &SingularAmplitude,
    params: &ModelParams,
    lambda_tilde: f64,
    kappa: f64,
    c_t: f64,
    c_l_prime: f64,
) -> Result<FormBoundsCheck> {
    check_mu(xi, params)?;
    if !(kappa > 0.0 && kappa < c_t) {
        return Err(Error::precondition(format!(
            "need 0 < κ < c_T, got κ = {kappa}, c_T = {c_t}"
        )));
    }
    let n53 = (xi.n() as f64).powf(5.0 / 3.0);
    let floor = -kappa * n53 / (params.ell * params.ell);
    if params.mu < floor {
        return Err(Error::precondition(format!(
            "μ = {} is below −κN^(5/3)ℓ⁻² = {floor}",
            params.mu
        )));
    }
    let s = l_sum(xi, params)?;
    let t_off = t_off_per(xi, params)?;
    let t_dia = t_dia_per(xi, params)?;
    Ok(FormBoundsCheck {
        t_off,
        t_dia,
        l_sum: s,
        off_bound: -lambda_tilde / (1.0 - kappa / c_t) * s,
        dia_bound: s - c_l_prime / ((c_t - kappa) * n53 * params.ell) * xi.norm_sq(params.ell),
    })
}
