//! Lower-bound formulas assembled from the registry constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::registry::ConstantsRegistry;
use crate::box_spectra::sum_lowest;
use crate::error::{Error, Result};
use crate::kernels::ModelParams;

/// The registry values a bound uses, with the hash of the registry they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub hash: String,
    pub c_t: f64,
    pub c_l_prime: f64,
    pub c_l: f64,
    pub c_lambda: f64,
    pub main_const: f64,
}

impl From<&ConstantsRegistry> for RegistrySnapshot {
    fn from(r: &ConstantsRegistry) -> Self {
        Self {
            hash: r.hash(),
            c_t: r.c_t.value,
            c_l_prime: r.c_l_prime.value,
            c_l: r.c_l.value,
            c_lambda: r.c_lambda.value,
            main_const: r.main_const.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Unconfined,
    Confined,
    Main,
}

/// Inputs, intermediate values and the final lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// `mu` holds μ* for the confined bound and 0 otherwise.
    pub params: ModelParams,
    pub kappa: Option<f64>,
    pub registry: RegistrySnapshot,
    pub lambda: f64,
    /// Λ + c_Λm⁻¹(1−κ/c_T)⁻²N^{−2/9}, the upper estimate of Λ̃.
    pub lambda_tilde_bound: Option<f64>,
    pub n_zero: Option<f64>,
    pub mu_star: Option<f64>,
    /// κN^{5/3}ℓ⁻² for the confined bound, E^D_N for the main bound.
    pub leading: f64,
    /// e_N of −Δ_L, for the main bound.
    pub e_top: Option<f64>,
    pub density_term: f64,
    pub alpha_term: f64,
    /// Total amount subtracted from `leading`.
    pub penalty: f64,
    pub energy: f64,
}

fn neg_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::domain(format!(
            "Λ(m) must be finite and non-negative, got {lambda}"
        )));
    }
    if lambda >= 1.0 {
        return Err(Error::precondition(format!(
            "outside the stability regime: Λ(m) = {lambda} ≥ 1"
        )));
    }
    Ok(())
}

fn check_mass(m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain(format!(
            "mass ratio must be positive, got m = {m}"
        )));
    }
    Ok(())
}

/// κ = c_T(1 − Λ(m))/2.
pub fn default_kappa(c_t: f64, lambda: f64) -> f64 {
    c_t * (1.0 - lambda) / 2.0
}

fn check_kappa(kappa: f64, lambda: f64, c_t: f64) -> Result<f64> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!(
            "κ must be non-negative, got {kappa}"
        )));
    }
    let gap = 1.0 - kappa / check_c_t(c_t)? - lambda;
    if !(gap > 0.0) {
        return Err(Error::precondition(format!(
            "need 1 − κ/c_T > Λ(m): Λ(m) = {lambda}, κ/c_T = {}",
            kappa / c_t
        )));
    }
    Ok(gap)
}

fn check_c_t(c_t: f64) -> Result<f64> {
    if !(c_t > 0.0 && c_t.is_finite()) {
        return Err(Error::precondition(format!(
            "c_T must be positive, got {c_t}"
        )));
    }
    Ok(c_t)
}

/// N₀ = ((1 − κ/c_T − Λ)·m(1 − κ/c_T)²/c_Λ)^{−9/2}.
pub fn n_zero(m: f64, kappa: f64, lambda: f64, reg: &RegistrySnapshot) -> Result<f64> {
    check_mass(m)?;
    let gap = check_kappa(kappa, lambda, reg.c_t)?;
    let r = 1.0 - kappa / reg.c_t;
    Ok((gap * m * r * r / reg.c_lambda).powf(-4.5))
}

/// ((m+1)/(2m))·(α/(2π²(1−Λ)))² with a minus sign for α < 0, and 0 otherwise.
pub fn bound_unconfined(m: f64, alpha: f64, lambda: f64) -> Result<f64> {
    check_mass(m)?;
    check_lambda(lambda)?;
    if alpha >= 0.0 {
        return Ok(0.0);
    }
    let x = alpha / (2.0 * PI * PI * (1.0 - lambda));
    Ok(-((m + 1.0) / (2.0 * m)) * x * x)
}

/// The shift μ that makes the periodic form non-negative:
/// −κN^{5/3}ℓ⁻² + (1/(4π⁴))((m+1)/(2m))(1−κ/c_T)²[α − (m+1)c'_L/(2m(c_T−κ)N^{5/3}ℓ)]²₋ / D²
/// with D = 1 − κ/c_T − Λ − c_Λm⁻¹(1−κ/c_T)⁻²N^{−2/9}.
pub fn mu_apriori(
    m: f64,
    kappa: f64,
    n: usize,
    ell: f64,
    alpha: f64,
    lambda: f64,
    reg: &RegistrySnapshot,
) -> Result<f64> {
    check_mass(m)?;
    let gap = check_kappa(kappa, lambda, reg.c_t)?;
    let nf = n as f64;
    let n53 = nf.powf(5.0 / 3.0);
    let r = 1.0 - kappa / reg.c_t;
    let d = gap - reg.c_lambda / (m * r * r) * nf.powf(-2.0 / 9.0);
    if !(d > 0.0) {
        return Err(Error::precondition(format!(
            "N = {n} is not above N₀: the coefficient of the diagonal term is {d}"
        )));
    }
    let shift = (m + 1.0) / (2.0 * m) * reg.c_l_prime / ((reg.c_t - kappa) * n53 * ell);
    let a = neg_part(alpha - shift);
    Ok(-kappa * n53 / (ell * ell)
        + (m + 1.0) / (2.0 * m) * r * r * a * a / (4.0 * PI.powi(4) * d * d))
}

/// κN^{5/3}ℓ⁻² − (1/(4π⁴))((m+1)/(2m))[α − c_Lℓ⁻¹]²₋ / ((1−κ/c_T−Λ)²(1−(N₀/N)^{2/9})²).
///
/// For N ≤ N₀ the error carries the value of [`bound_unconfined`], which
/// still applies.
pub fn bound_confined(
    m: f64,
    kappa: f64,
    n: usize,
    ell: f64,
    alpha: f64,
    lambda: f64,
    reg: &RegistrySnapshot,
) -> Result<BoundReport> {
    let params = ModelParams::new(m, alpha, 0.0, n, ell, ell)?;
    check_lambda(lambda)?;
    let gap = check_kappa(kappa, lambda, reg.c_t)?;
    let n0 = n_zero(m, kappa, lambda, reg)?;
    let nf = n as f64;
    if !(nf > n0) {
        let fallback = bound_unconfined(m, alpha, lambda)?;
        return Err(Error::precondition(format!(
            "N = {n} ≤ N₀ = {n0}; use the N-independent bound instead, which gives {fallback}"
        )));
    }
    let mu_star = mu_apriori(m, kappa, n, ell, alpha, lambda, reg)?;
    let r = 1.0 - kappa / reg.c_t;
    let leading = kappa * nf.powf(5.0 / 3.0) / (ell * ell);
    let a = neg_part(alpha - reg.c_l / ell);
    let damp = 1.0 - (n0 / nf).powf(2.0 / 9.0);
    let penalty = (m + 1.0) / (2.0 * m) * a * a / (4.0 * PI.powi(4) * gap * gap * damp * damp);
    Ok(BoundReport {
        kind: BoundKind::Confined,
        params: ModelParams {
            mu: mu_star,
            ..params
        },
        kappa: Some(kappa),
        registry: reg.clone(),
        lambda,
        lambda_tilde_bound: Some(lambda + reg.c_lambda / (m * r * r) * nf.powf(-2.0 / 9.0)),
        n_zero: Some(n0),
        mu_star: Some(mu_star),
        leading,
        e_top: None,
        density_term: 0.0,
        alpha_term: penalty,
        penalty,
        energy: leading - penalty,
    })
}

/// E^D_N − const·(ρ̄^{2/3}/(1−Λ)^{9/2} + α²₋/(1−Λ)²) with ρ̄ = N/L³.
pub fn bound_main(
    m: f64,
    n: usize,
    lbig: f64,
    alpha: f64,
    lambda: f64,
    reg: &RegistrySnapshot,
    fitted_const: Option<f64>,
) -> Result<BoundReport> {
    let params = ModelParams::new(m, alpha, 0.0, n, lbig, lbig)?;
    check_lambda(lambda)?;
    let c = fitted_const.unwrap_or(reg.main_const);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!(
            "the bound constant must be positive, got {c}"
        )));
    }
    let e = sum_lowest(lbig, n)?;
    let rho = n as f64 / (lbig * lbig * lbig);
    let s = 1.0 - lambda;
    let a = neg_part(alpha);
    let density_term = c * rho.powf(2.0 / 3.0) / s.powf(4.5);
    let alpha_term = c * a * a / (s * s);
    let penalty = density_term + alpha_term;
    Ok(BoundReport {
        kind: BoundKind::Main,
        params,
        kappa: None,
        registry: RegistrySnapshot {
            main_const: c,
            ..reg.clone()
        },
        lambda,
        lambda_tilde_bound: None,
        n_zero: None,
        mu_star: None,
        leading: e.e_dirichlet,
        e_top: Some(e.e_top),
        density_term,
        alpha_term,
        penalty,
        energy: e.e_dirichlet - penalty,
    })
}

/// ℓ = L/k with k = round(Lρ̄^{1/3}), so L/ℓ is an integer and ℓρ̄^{1/3} ∈ [½, 2].
pub fn choose_ell(lbig: f64, rho_bar: f64) -> Result<f64> {
    if !(lbig > 0.0 && rho_bar > 0.0 && lbig.is_finite() && rho_bar.is_finite()) {
        return Err(Error::domain(format!(
            "need L > 0 and ρ̄ > 0, got L = {lbig}, ρ̄ = {rho_bar}"
        )));
    }
    let x = lbig * rho_bar.cbrt();
    if x < 0.5 {
        return Err(Error::precondition(format!(
            "box too small for the density: Lρ̄^(1/3) = {x} < 1/2"
        )));
    }
    let k = x.round().max(1.0);
    Ok(lbig / k)
}
