use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{l_prefactor, ModelParams};
use crate::numeric::quad::{semi_infinite, QuadConfig, QuadResult};

/// Radial ξ̂(k) = g(|k|) on ℝ³ (one fermion).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialProfile {
    /// g(k) = exp(−k²/(2w²)).
    Gaussian { width: f64 },
    /// g(k) = (k² + w²)⁻².
    Rational { width: f64 },
}

impl RadialProfile {
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            RadialProfile::Gaussian { width } => (-k * k / (2.0 * width * width)).exp(),
            RadialProfile::Rational { width } => (k * k + width * width).powi(-2),
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            RadialProfile::Gaussian { width } | RadialProfile::Rational { width } => width,
        }
    }

    fn validate(&self) -> Result<()> {
        let w = self.width();
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::domain(format!(
                "profile width must be positive, got {w}"
            )));
        }
        Ok(())
    }

    /// 4π∫g(k)²w(k)k²dk.
    fn moment<F: Fn(f64) -> f64>(&self, weight: F, cfg: &QuadConfig) -> Result<QuadResult> {
        let r = semi_infinite(
            |k| 4.0 * PI * k * k * self.eval(k).powi(2) * weight(k),
            0.0,
            self.width(),
            cfg,
        );
        if !r.converged {
            return Err(Error::Accuracy {
                msg: "radial quadrature did not converge".into(),
                estimate: r.value,
                error: r.error,
            });
        }
        Ok(r)
    }

    /// ‖ξ‖².
    pub fn norm_sq(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.moment(|_| 1.0, &quad_cfg())?.value)
    }
}

fn quad_cfg() -> QuadConfig {
    QuadConfig::new(0.0, 1e-11)
}

fn pref(m: f64) -> f64 {
    PI * PI * (2.0 * m / (m + 1.0)).powf(1.5)
}

/// ‖G_ν ξ‖² for a radial one-fermion profile:
/// π²(2m/(m+1))^{3/2}∫|ξ̂(k)|²/√(k²/(2(1+m)) + ν)dk.
pub fn g_norm_sq_radial(profile: &RadialProfile, nu: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    profile.validate()?;
    if !(nu > 0.0) {
        return Err(Error::domain(format!("g_norm_sq needs nu > 0, got {nu}")));
    }
    let m = params.m;
    let r = profile.moment(
        |k| 1.0 / (k * k / (2.0 * (1.0 + m)) + nu).sqrt(),
        &quad_cfg(),
    )?;
    Ok(pref(m) * r.value)
}

/// I(ν) = ‖G_ν ξ‖² − π²(2m/(m+1))^{3/2}ν^{-1/2}‖ξ‖², written without cancellation.
fn i_of_nu(profile: &RadialProfile, nu: f64, m: f64) -> Result<f64> {
    let sn = nu.sqrt();
    let r = profile.moment(
        |k| {
            let a = k * k / (2.0 * (1.0 + m));
            let s = (a + nu).sqrt();
            -a / (s * sn * (s + sn))
        },
        &quad_cfg(),
    )?;
    Ok(pref(m) * r.value)
}

/// Both sides of the singular-part representation for one fermion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepSingCheck {
    /// (2m/(m+1))α‖ξ‖² + T_dia.
    pub left: f64,
    /// (2m/(m+1))α‖ξ‖² + 2π²(2m/(m+1))^{3/2}√μ‖ξ‖² − ∫_μ^∞ I(ν)dν.
    pub right: f64,
    pub residual: f64,
}

/// Checks T_{α,μ,1} = (2mα/(m+1) + 2π²(2m/(m+1))^{3/2}√μ)‖ξ‖² − ∫_μ^∞ I(ν)dν.
pub fn rep_sing_check(profile: &RadialProfile, params: &ModelParams) -> Result<RepSingCheck> {
    params.validate()?;
    profile.validate()?;
    if params.n != 1 {
        return Err(Error::precondition("the radial identity check needs N = 1"));
    }
    let (m, mu) = (params.m, params.mu);
    if !(mu > 0.0) {
        return Err(Error::domain(format!(
            "the identity needs mu > 0, got {mu}"
        )));
    }
    let norm = profile.norm_sq()?;
    let alpha_term = 2.0 * m / (m + 1.0) * params.alpha * norm;
    let t_dia = profile
        .moment(
            |k| l_prefactor(m) * (k * k / (2.0 * (m + 1.0)) + mu).sqrt(),
            &quad_cfg(),
        )?
        .value;
    let mut failure = None;
    let outer = semi_infinite(
        |nu| match i_of_nu(profile, nu, m) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        mu,
        mu.max(profile.width() * profile.width()),
        &QuadConfig::new(0.0, 1e-10),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !outer.converged {
        return Err(Error::Accuracy {
            msg: "outer nu quadrature did not converge".into(),
            estimate: outer.value,
            error: outer.error,
        });
    }
    let left = alpha_term + t_dia;
    let right = alpha_term + 2.0 * pref(m) * mu.sqrt() * norm - outer.value;
    let residual = (left - right).abs() / (left.abs() + right.abs());
    Ok(RepSingCheck {
        left,
        right,
        residual,
    })
}
