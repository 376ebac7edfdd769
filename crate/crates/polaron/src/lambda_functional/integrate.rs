//! ∫λ dt̃ over ℝ³ in spherical coordinates centred at the singular point AK.
//!
//! The polar axis is s̃, so the kink of |s̃·t̃| sits at a single polar angle
//! for each radius and φ enters only through cos φ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{LambdaArgs, LambdaKernel};
use crate::numeric::quad::{adaptive, QuadConfig};
use crate::numeric::vec3;

/// Tolerances for [`integrate_lambda`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest azimuthal trapezoid size before giving up.
    pub max_phi: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_phi: 1024,
        }
    }
}

impl IntegrationConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error: f64,
}

/// Geometry of the coordinates around AK.
struct Frame {
    s_abs: f64,
    c_par: f64,
    c_perp: f64,
    c_sq: f64,
}

impl Frame {
    fn new(k: &LambdaKernel) -> Self {
        let s = k.args.s_tilde;
        let s_abs = vec3::norm(s);
        let c = k.centre();
        let c_par = vec3::dot(c, s) / s_abs;
        let c_sq = vec3::norm_sq(c);
        let c_perp = (c_sq - c_par * c_par).max(0.0).sqrt();
        Self {
            s_abs,
            c_par,
            c_perp,
            c_sq,
        }
    }
}

/// Azimuthal average times 2π of λ at radius `r`, polar cosine `x`.
fn phi_integral(
    k: &LambdaKernel,
    f: &Frame,
    r: f64,
    x: f64,
    cfg: &IntegrationConfig,
) -> (f64, bool) {
    let st = f.s_abs * (f.c_par + r * x);
    let base = f.c_sq + r * r + 2.0 * r * x * f.c_par;
    let sin_t = (1.0 - x * x).max(0.0).sqrt();
    let amp = 2.0 * r * sin_t * f.c_perp;
    let r_sq = r * r;
    if amp <= 1e-14 * base.max(1e-300) {
        return (2.0 * PI * k.eval_invariants(r_sq, base, st), true);
    }
    // Even in φ: trapezoid on [0, π] with halved endpoints is the periodic rule.
    let eval = |phi: f64| k.eval_invariants(r_sq, (base + amp * phi.cos()).max(0.0), st);
    let mut n = 8;
    let h = PI / n as f64;
    let mut sum = 0.5 * (eval(0.0) + eval(PI));
    for j in 1..n {
        sum += eval(h * j as f64);
    }
    let mut prev = 2.0 * sum * h;
    loop {
        let h_new = PI / (2 * n) as f64;
        for j in 0..n {
            sum += eval(h_new * (2 * j + 1) as f64);
        }
        n *= 2;
        let cur = 2.0 * sum * h_new;
        if (cur - prev).abs() <= cfg.rel_tol * 0.1 * cur.abs() + 1e-300 {
            return (cur, true);
        }
        if n >= cfg.max_phi {
            return (cur, false);
        }
        prev = cur;
    }
}

/// ∫ dx over the polar cosine at fixed radius, split at the |s̃·t̃| kink.
fn shell_integral(
    k: &LambdaKernel,
    f: &Frame,
    r: f64,
    cfg: &IntegrationConfig,
    ok: &mut bool,
) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let kink = -f.c_par / r;
    let qc = QuadConfig::new(0.0, cfg.rel_tol * 0.1).with_max_intervals(200);
    let res = adaptive(
        |x| {
            let (v, good) = phi_integral(k, f, r, x, cfg);
            if !good {
                *ok = false;
            }
            v
        },
        -1.0,
        1.0,
        &[kink],
        &qc,
    );
    if !res.converged {
        *ok = false;
    }
    res.value
}

/// Radial breakpoints: every length scale of the integrand.
fn radial_scales(k: &LambdaKernel, f: &Frame) -> Vec<f64> {
    let mut pts = vec![
        f.c_par.abs(),
        f.c_sq.sqrt(),
        f.s_abs,
        k.bracket_const().sqrt(),
        k.regulator().sqrt(),
        (f.c_sq.sqrt() - k.bracket_const().sqrt()).abs(),
    ];
    pts.retain(|x| x.is_finite() && *x > 0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    pts
}

fn check_args(args: &LambdaArgs) -> Result<()> {
    args.validate()?;
    let cq = args.m / (args.m + 1.0)
        * (2.0 * args.q_mu * args.q_mu + args.a_const * vec3::norm_sq(args.k_vec));
    if cq <= 0.0 && vec3::norm_sq(args.s_tilde) > 0.0 {
        return Err(Error::precondition(
            "integral needs Q > 0 or A|K|² > 0 so that every bracket is positive",
        ));
    }
    Ok(())
}

/// Radial integral of `weight(r)·r²·∫λ dΩ` over `[0, r_max]` (`r_max = ∞` allowed).
pub fn integrate_radial_weighted<W: Fn(f64) -> f64>(
    args: &LambdaArgs,
    r_max: f64,
    weight: W,
    extra_breaks: &[f64],
    cfg: &IntegrationConfig,
) -> Result<IntegralEstimate> {
    check_args(args)?;
    if vec3::norm_sq(args.s_tilde) == 0.0 {
        return Ok(IntegralEstimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let k = LambdaKernel::new(*args)?;
    let f = Frame::new(&k);
    let mut scales = radial_scales(&k, &f);
    scales.extend(extra_breaks.iter().copied().filter(|x| *x > 0.0));
    scales.sort_by(f64::total_cmp);
    let top = scales.last().copied().unwrap_or(1.0);
    let mut ok = true;
    let qc = QuadConfig::new(cfg.abs_tol, cfg.rel_tol).with_max_intervals(300);

    let r_split = if r_max.is_finite() { r_max } else { 4.0 * top };
    let mut breaks: Vec<f64> = scales.iter().copied().filter(|x| *x < r_split).collect();
    // Geometric breakpoints resolve features much smaller than r_split.
    if let Some(&lo) = breaks.first() {
        let mut x = lo * 4.0;
        while x < r_split {
            breaks.push(x);
            x *= 4.0;
        }
    }
    let inner = adaptive(
        |r| weight(r) * r * r * shell_integral(&k, &f, r, cfg, &mut ok),
        0.0,
        r_split,
        &breaks,
        &qc,
    );
    let mut value = inner.value;
    let mut error = inner.error;
    let mut converged = inner.converged;
    if !r_max.is_finite() {
        // r = R/v maps [R, ∞) onto (0, 1]; the integrand decays like r^{-3.5}.
        let outer = adaptive(
            |v| {
                if v <= 0.0 {
                    return 0.0;
                }
                let r = r_split / v;
                weight(r) * r * r * shell_integral(&k, &f, r, cfg, &mut ok) * r_split / (v * v)
            },
            0.0,
            1.0,
            &[0.25],
            &qc,
        );
        value += outer.value;
        error += outer.error;
        converged &= outer.converged;
    }
    error += cfg.rel_tol * value.abs();
    if !(converged && ok) || !value.is_finite() {
        return Err(Error::Accuracy {
            msg: "λ integral did not reach its tolerance".into(),
            estimate: value,
            error,
        });
    }
    Ok(IntegralEstimate { value, error })
}

/// ∫_{ℝ³} λ_{s̃,Q,K,m,δ}(t̃) dt̃.
///
/// At δ = 0 the integrable 1/|t̃ − AK|² singularity is absorbed by the radial
/// Jacobian. Q = 0 is accepted when A|K|² > 0.
pub fn integrate_lambda(args: &LambdaArgs, cfg: &IntegrationConfig) -> Result<IntegralEstimate> {
    integrate_radial_weighted(args, f64::INFINITY, |_| 1.0, &[], cfg)
}

/// Aligns K with ê_z and puts s̃ in the x–z plane at angle `angle` to K.
pub fn aligned_args(
    m: f64,
    s_abs: f64,
    k_abs: f64,
    angle: f64,
    q_mu: f64,
    a_const: f64,
) -> LambdaArgs {
    LambdaArgs {
        s_tilde: [s_abs * angle.sin(), 0.0, s_abs * angle.cos()],
        k_vec: [0.0, 0.0, k_abs],
        q_mu,
        m,
        delta: 0.0,
        n: 1,
        ell: 1.0,
        a_const,
    }
}
