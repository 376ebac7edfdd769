use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::partition::PartitionSpec;
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// C^∞ step: 0 for u ≤ 0, 1 for u ≥ 1.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| (-1.0 / t).exp();
    f(u) / (f(u) + f(1.0 - u))
}

/// 1 on [−ε, 1+ε], 0 outside [−2ε, 1+2ε].
fn plateau(t: f64, eps: f64) -> f64 {
    if t < 0.5 {
        smooth_step((t + 2.0 * eps) / eps)
    } else {
        smooth_step((1.0 + 2.0 * eps - t) / eps)
    }
}

/// V(s) = sin(π/2·Π_j σ(s_j)) with σ a smooth plateau, so that √(1 − V²) = cos(…) is smooth too.
pub fn default_v_profile(eps: f64) -> impl Fn([f64; 3]) -> f64 + Sync {
    move |s: [f64; 3]| (FRAC_PI_2 * s.iter().map(|&t| plateau(t, eps)).product::<f64>()).sin()
}

/// V_i, Ṽ_i and W_i on the nodes s = k/r, k ∈ [−K, r + K]³, around one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPartition {
    pub ell: f64,
    pub points_per_ell: usize,
    /// First node index per axis (negative).
    pub offset: i64,
    /// Nodes per axis.
    pub size: usize,
    pub v: Vec<f64>,
    pub v_tilde: Vec<f64>,
    /// ½(|∇V_i|² + |∇Ṽ_i|²), zero on the two outermost node layers.
    pub w: Vec<f64>,
    /// max |V² + Ṽ² − 1|.
    pub closure_error: f64,
    pub max_w: f64,
    /// Volume of the nodes where W > 0.
    pub support_volume: f64,
}

impl VPartition {
    pub fn index(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.size as i64;
        let i = k.map(|x| x - self.offset);
        if i.iter().any(|&x| x < 0 || x >= n) {
            return None;
        }
        Some(((i[0] * n + i[1]) * n + i[2]) as usize)
    }

    pub fn cell_volume(&self) -> f64 {
        (self.ell / self.points_per_ell as f64).powi(3)
    }

    /// Node sum of W^p times the cell volume.
    pub fn integral_pow(&self, p: f64) -> f64 {
        let s: NeumaierSum = self.w.iter().map(|w| w.powf(p)).collect();
        s.value() * self.cell_volume()
    }
}

/// Samples V_i = V((x − z_i)/ℓ), checks the profile constraints and forms Ṽ_i, W_i.
pub fn build_v_partition<F: Fn([f64; 3]) -> f64 + Sync>(
    spec: &PartitionSpec,
    profile: F,
) -> Result<VPartition> {
    spec.validate()?;
    let r = spec.points_per_ell as i64;
    let eps = spec.epsilon;
    let pad = (2.0 * eps * r as f64).ceil() as i64 + 3;
    let offset = -pad;
    let size = (r + 2 * pad + 1) as usize;
    let n = size as i64;
    let mut v = Vec::with_capacity(size * size * size);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let s = [a, b, c].map(|x| (x + offset) as f64 / r as f64);
                let val = profile(s);
                let tol = 1e-14;
                if !(val.is_finite() && (-tol..=1.0 + tol).contains(&val)) {
                    return Err(Error::precondition(format!(
                        "profile value {val} at {s:?} is outside [0, 1]"
                    )));
                }
                if s.iter().all(|&t| (-eps..=1.0 + eps).contains(&t)) && (val - 1.0).abs() > tol {
                    return Err(Error::precondition(format!(
                        "profile is {val} at {s:?}, inside the plateau"
                    )));
                }
                if s.iter()
                    .any(|&t| !(-2.0 * eps..=1.0 + 2.0 * eps).contains(&t))
                    && val.abs() > tol
                {
                    return Err(Error::precondition(format!(
                        "profile is {val} at {s:?}, outside its support"
                    )));
                }
                v.push(val.clamp(0.0, 1.0));
            }
        }
    }
    let v_tilde: Vec<f64> = v.iter().map(|x| (1.0 - x * x).max(0.0).sqrt()).collect();
    let closure_error = v
        .iter()
        .zip(&v_tilde)
        .map(|(a, b)| (a * a + b * b - 1.0).abs())
        .fold(0.0, f64::max);
    let h = spec.spacing();
    let at = |f: &[f64], a: i64, b: i64, c: i64| f[((a * n + b) * n + c) as usize];
    let mut w = vec![0.0; v.len()];
    for a in 2..n - 2 {
        for b in 2..n - 2 {
            for c in 2..n - 2 {
                let mut total = 0.0;
                for f in [&v, &v_tilde] {
                    let d = |da: i64, db: i64, dc: i64| {
                        (-at(f, a + 2 * da, b + 2 * db, c + 2 * dc)
                            + 8.0 * at(f, a + da, b + db, c + dc)
                            - 8.0 * at(f, a - da, b - db, c - dc)
                            + at(f, a - 2 * da, b - 2 * db, c - 2 * dc))
                            / (12.0 * h)
                    };
                    total += d(1, 0, 0).powi(2) + d(0, 1, 0).powi(2) + d(0, 0, 1).powi(2);
                }
                w[((a * n + b) * n + c) as usize] = 0.5 * total;
            }
        }
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(
            "non-finite gradient of the V partition".into(),
        ));
    }
    let max_w = w.iter().copied().fold(0.0, f64::max);
    let support = w.iter().filter(|&&x| x > 0.0).count() as f64 * h * h * h;
    Ok(VPartition {
        ell: spec.ell,
        points_per_ell: spec.points_per_ell,
        offset,
        size,
        v,
        v_tilde,
        w,
        closure_error,
        max_w,
        support_volume: support,
    })
}
