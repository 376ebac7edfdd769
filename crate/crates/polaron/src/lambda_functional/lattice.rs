//! Lattice sums (2π/ℓ)³ Σ_{t̃ ∈ 𝕃+AK} λ(t̃), the functional Λ̃(m, κ) and the
//! constant c_Λ of the Λ̃ − Λ envelope.
//!
//! Since t̃ runs over 𝕃 + AK, the shifted variable t = t̃ − AK runs over 𝕃 itself
//! and always hits the singular point t = 0; every sum therefore needs δ > 0.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{
    aligned_args, integrate_lambda, integrate_radial_weighted, IntegralEstimate, IntegrationConfig,
};
use super::search::{grid_search, lambda_of_m, Argmax, Cell, LambdaResult, SupSearchConfig};
use crate::error::{Error, Result};
use crate::kernels::{default_a_const, lambda_envelope, LambdaArgs, LambdaKernel};
use crate::numeric::quad::{semi_infinite, QuadConfig};
use crate::numeric::sum::NeumaierSum;
use crate::numeric::vec3::{self, Vec3};

/// Lattice spacing 2π/ℓ of 𝕃 = (2π/ℓ)ℤ³.
pub fn spacing(ell: f64) -> f64 {
    2.0 * PI / ell
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    /// Partial sum plus half the tail bound.
    pub value: f64,
    pub partial: f64,
    /// Certified bound on the omitted terms.
    pub tail_bound: f64,
    /// Half the tail bound plus rounding.
    pub error: f64,
    pub points: usize,
}

fn require_delta(args: &LambdaArgs) -> Result<()> {
    args.validate()?;
    if !(args.delta > 0.0) {
        return Err(Error::precondition(
            "the lattice 𝕃 + AK always contains the singular point t̃ = AK, so δ > 0 is required",
        ));
    }
    Ok(())
}

/// h³ Σ λ(t + AK) over t ∈ 𝕃 + u with |t| ≤ `r_max`, weighted by `w(|t|)`.
fn weighted_ball_sum<W: Fn(f64) -> f64 + Sync>(
    k: &LambdaKernel,
    h: f64,
    u: Vec3,
    r_max: f64,
    w: W,
) -> (f64, usize) {
    let n_max = (r_max / h).floor() as i64 + 1;
    let centre = k.centre();
    let s = k.args.s_tilde;
    let r2_max = r_max * r_max;
    let parts: Vec<(f64, usize)> = (-n_max..=n_max)
        .into_par_iter()
        .map(|i| {
            let mut acc = NeumaierSum::new();
            let mut count = 0;
            let x = h * i as f64 + u[0];
            for j in -n_max..=n_max {
                let y = h * j as f64 + u[1];
                let rxy = x * x + y * y;
                if rxy > r2_max {
                    continue;
                }
                for l in -n_max..=n_max {
                    let z = h * l as f64 + u[2];
                    let r_sq = rxy + z * z;
                    if r_sq > r2_max {
                        continue;
                    }
                    let tt = [x + centre[0], y + centre[1], z + centre[2]];
                    let v = k.eval_invariants(r_sq, vec3::norm_sq(tt), vec3::dot(s, tt));
                    acc += w(r_sq.sqrt()) * v;
                    count += 1;
                }
            }
            (acc.value(), count)
        })
        .collect();
    let mut total = NeumaierSum::new();
    let mut count = 0;
    for (v, c) in parts {
        total += v;
        count += c;
    }
    (total.value() * h * h * h, count)
}

/// Bound on h³ Σ_{t ∈ 𝕃, |t| > R} λ from the radial envelope E:
/// 4π ∫_{R−√3h}^∞ E(v)(v + √3h/2)² dv, using that E is radially decreasing and
/// each lattice cube lies within √3h/2 of its centre.
pub fn envelope_tail_bound(args: &LambdaArgs, r: f64) -> Result<f64> {
    require_delta(args)?;
    tail_integral(args, r)
}

fn tail_integral(args: &LambdaArgs, r: f64) -> Result<f64> {
    let h = spacing(args.ell);
    let s_sq = vec3::norm_sq(vec3::sub(args.s_tilde, args.centre()));
    let half_diag = 3f64.sqrt() * h / 2.0;
    let lo = (r - 2.0 * half_diag).max(0.0);
    let scale = (s_sq + 2.0 * args.q_mu * args.q_mu).sqrt().max(h).max(lo);
    let res = semi_infinite(
        |v| {
            let e = lambda_envelope(args, s_sq, v * v);
            4.0 * PI * e * (v + half_diag) * (v + half_diag)
        },
        lo,
        scale,
        &QuadConfig::new(0.0, 1e-10),
    );
    Ok(res.value + res.error)
}

/// (2π/ℓ)³ Σ_{t̃ ∈ 𝕃+AK, |t̃−AK| ≤ cutoff} λ(t̃) plus a certified envelope tail.
///
/// Fails with an accuracy error when the tail bound exceeds `tail_rel_tol`
/// times the partial sum. The tail bound relies on the envelope of λ, which
/// holds for the default A = 1/(m+2).
pub fn lattice_lambda_sum(args: &LambdaArgs, cutoff: f64, tail_rel_tol: f64) -> Result<LatticeSum> {
    lattice_lambda_sum_offset(args, [0.0; 3], cutoff, tail_rel_tol)
}

/// As [`lattice_lambda_sum`] over the translated lattice 𝕃 + AK + `offset`.
///
/// δ = 0 is allowed when `offset` ∉ 𝕃, since then no lattice point is singular.
pub fn lattice_lambda_sum_offset(
    args: &LambdaArgs,
    offset: Vec3,
    cutoff: f64,
    tail_rel_tol: f64,
) -> Result<LatticeSum> {
    args.validate()?;
    let h = spacing(args.ell);
    let on_lattice = offset.iter().all(|c| {
        let f = c / h;
        (f - f.round()).abs() < 1e-12
    });
    if on_lattice {
        require_delta(args)?;
    }
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::precondition("cutoff must be positive and finite"));
    }
    let k = LambdaKernel::new(*args)?;
    let (partial, points) = weighted_ball_sum(&k, h, offset, cutoff, |_| 1.0);
    let tail_bound = tail_integral(args, cutoff)?;
    let value = partial + 0.5 * tail_bound;
    let error = 0.5 * tail_bound + 1e-14 * partial.abs() * (points as f64).sqrt();
    if tail_bound > tail_rel_tol * partial.abs() {
        return Err(Error::Accuracy {
            msg: format!("envelope tail beyond radius {cutoff} is too large"),
            estimate: value,
            error,
        });
    }
    Ok(LatticeSum {
        value,
        partial,
        tail_bound,
        error,
        points,
    })
}

/// C^∞ radial cutoff: 1 on [0, R/4], 0 beyond R.
fn bump(r: f64, big_r: f64) -> f64 {
    let x = (big_r - r) / (0.75 * big_r);
    if x >= 1.0 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Settings for [`hybrid_lattice_sum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// Radius of the local correction ball, in lattice spacings.
    pub bump_cells: f64,
    pub rel_tol: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            bump_cells: 8.0,
            rel_tol: 1e-8,
        }
    }
}

/// Lattice sum as continuum integral plus a local correction around t̃ = AK.
///
/// With a smooth bump χ of radius R centred at AK,
/// Σ λ = ∫λ + [h³ Σ λχ − ∫ λχ] + (h³ Σ λ(1−χ) − ∫ λ(1−χ)).
/// The last bracket is the Riemann error of an integrand that is smooth on the
/// lattice scale near AK and is dropped. The correction is computed at R and
/// 1.5R; their difference is the error estimate.
pub fn hybrid_lattice_sum(args: &LambdaArgs, cfg: &HybridConfig) -> Result<IntegralEstimate> {
    require_delta(args)?;
    if !(cfg.bump_cells >= 2.0) {
        return Err(Error::precondition(
            "bump radius must span at least two lattice cells",
        ));
    }
    let icfg = IntegrationConfig::with_rel_tol(cfg.rel_tol);
    let full = integrate_lambda(args, &icfg)?;
    let k = LambdaKernel::new(*args)?;
    let h = spacing(args.ell);
    let r1 = cfg.bump_cells * h;
    let r2 = 1.5 * r1;
    let corr = |r: f64| -> Result<(f64, f64)> {
        let (s, _) = weighted_ball_sum(&k, h, [0.0; 3], r, |x| bump(x, r));
        let i = integrate_radial_weighted(args, r, |x| bump(x, r), &[0.25 * r, 0.5 * r], &icfg)?;
        Ok((s - i.value, i.error))
    };
    let (c1, e1) = corr(r1)?;
    let (c2, e2) = corr(r2)?;
    Ok(IntegralEstimate {
        value: full.value + c2,
        error: full.error + e1 + e2 + (c1 - c2).abs(),
    })
}

/// Settings for [`lambda_tilde`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeConfig {
    /// Search over |s̃|/Q and |K|/Q; `gauge` is ignored since Q is pinned.
    pub search: SupSearchConfig,
    pub c_t: f64,
    /// δ grid as multiples of N^{4/9}.
    pub delta_factors: Vec<f64>,
    /// Q grid as multiples of the lower limit Q₀.
    pub q_factors: Vec<f64>,
    pub hybrid: HybridConfig,
}

impl TildeConfig {
    pub fn new(c_t: f64) -> Self {
        Self {
            search: SupSearchConfig {
                magnitude_points: 7,
                angle_points: 4,
                refine_starts: 2,
                refine_iters: 60,
                coarse_tol: 1e-5,
                quad_tol: 1e-7,
                ..SupSearchConfig::default()
            },
            c_t,
            delta_factors: vec![0.5, 1.0, 2.0],
            q_factors: vec![1.0, 2.0],
            hybrid: HybridConfig::default(),
        }
    }
}

/// Q₀ = √((c_T − κ)N^{5/3})/ℓ, the smallest admissible Q_μ.
pub fn q_floor(c_t: f64, kappa: f64, n: usize, ell: f64) -> f64 {
    ((c_t - kappa) * (n as f64).powf(5.0 / 3.0)).sqrt() / ell
}

/// Sup over (s̃, K, Q) at one δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSup {
    pub delta: f64,
    /// Best lattice sum found at finite |K|.
    pub finite: LambdaResult,
    /// max(finite, Λ(m)).
    pub value: f64,
}

/// Full output of [`lambda_tilde`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeResult {
    /// Λ̃ with argmax at the minimising δ; `delta` is set.
    pub result: LambdaResult,
    /// Λ(m), the K → ∞ limit of every lattice sup.
    pub lambda: LambdaResult,
    /// Sup at every δ on the grid.
    pub per_delta: Vec<DeltaSup>,
    /// Whether the sup at the minimising δ is the K → ∞ limit.
    pub at_limit: bool,
    pub q_floor: f64,
}

impl TildeResult {
    /// Λ̃ − Λ.
    pub fn gap(&self) -> f64 {
        self.result.value - self.lambda.value
    }
}

/// Λ̃(m, κ) = inf over δ of sup over (s̃, K, Q ≥ Q₀) of the lattice sum.
///
/// The sup includes the limit |K| → ∞ at fixed Q, where the lattice sum
/// converges to the continuum integral at Q/|K| → 0, whose sup is Λ(m).
/// Hence Λ̃ ≥ Λ(m) for every δ.
pub fn lambda_tilde(
    m: f64,
    kappa: f64,
    n: usize,
    ell: f64,
    cfg: &TildeConfig,
) -> Result<TildeResult> {
    let lambda = lambda_of_m(m, &cfg.search)?;
    lambda_tilde_with_limit(m, kappa, n, ell, cfg, lambda)
}

/// As [`lambda_tilde`] with Λ(m) supplied.
pub fn lambda_tilde_with_limit(
    m: f64,
    kappa: f64,
    n: usize,
    ell: f64,
    cfg: &TildeConfig,
    lambda: LambdaResult,
) -> Result<TildeResult> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain(format!(
            "mass ratio must be positive, got {m}"
        )));
    }
    if !(kappa > 0.0 && kappa < cfg.c_t) {
        return Err(Error::precondition(format!(
            "need 0 < κ < c_T = {}, got κ = {kappa}",
            cfg.c_t
        )));
    }
    if n < 1 || !(ell > 0.0) {
        return Err(Error::precondition("need N ≥ 1 and ℓ > 0"));
    }
    if cfg.delta_factors.is_empty() || cfg.q_factors.is_empty() {
        return Err(Error::precondition("δ and Q grids must be non-empty"));
    }
    if cfg
        .delta_factors
        .iter()
        .chain(&cfg.q_factors)
        .any(|x| !(*x > 0.0))
    {
        return Err(Error::precondition("grid factors must be positive"));
    }
    cfg.search.validate()?;
    let a_const = cfg.search.a_const.unwrap_or_else(|| default_a_const(m));
    let q0 = q_floor(cfg.c_t, kappa, n, ell);
    let nd = n as f64;

    let mut per_delta = Vec::new();
    let mut best: Option<(LambdaResult, bool)> = None;
    for &df in &cfg.delta_factors {
        let delta = df * nd.powf(4.0 / 9.0);
        let mut sup: Option<LambdaResult> = None;
        for &qf in &cfg.q_factors {
            let q = qf * q0;
            let to_point = |c: &Cell| Argmax {
                s_abs: q * c.a.map_or(0.0, f64::exp),
                k_abs: q * c.b.map_or(0.0, f64::exp),
                angle: c.angle,
                q_mu: q,
            };
            let eval = |p: &Argmax, tol: f64| {
                let mut args = aligned_args(m, p.s_abs, p.k_abs, p.angle, p.q_mu, a_const);
                args.delta = delta;
                args.n = n;
                args.ell = ell;
                let hc = HybridConfig {
                    rel_tol: tol,
                    ..cfg.hybrid
                };
                match hybrid_lattice_sum(&args, &hc) {
                    Ok(r) => Some((r.value, r.error)),
                    Err(Error::Accuracy {
                        estimate, error, ..
                    }) if estimate.is_finite() => Some((estimate, error)),
                    Err(_) => None,
                }
            };
            let out = grid_search(&cfg.search, (false, true), None, to_point, eval)?;
            let boundary = out.boundary_names(&cfg.search, "|s|/Q", "|K|/Q");
            let r = out.into_result(boundary, delta);
            if sup.as_ref().is_none_or(|s| r.value > s.value) {
                sup = Some(r);
            }
        }
        let finite = sup.expect("non-empty Q grid");
        let at_limit = lambda.value >= finite.value;
        let mut r = finite.clone();
        if at_limit {
            r = LambdaResult {
                value: lambda.value,
                // Only the ratios of the continuum optimiser are meaningful here.
                argmax: lambda.argmax,
                err_quad: lambda.err_quad,
                err_search: lambda.err_search,
                boundary: vec!["|K|/Q".into()],
                evaluations: r.evaluations + lambda.evaluations,
                delta,
            };
        }
        per_delta.push(DeltaSup {
            delta,
            finite,
            value: r.value,
        });
        if best.as_ref().is_none_or(|(b, _)| r.value < b.value) {
            best = Some((r, at_limit));
        }
    }
    let (result, at_limit) = best.expect("non-empty δ grid");
    Ok(TildeResult {
        result,
        lambda,
        per_delta,
        at_limit,
        q_floor: q0,
    })
}

/// One row of a Λ̃ sweep; serialises to the CSV columns
/// m, kappa, N, ell, delta, value, err_quad, err_search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: f64,
    pub kappa: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub ell: f64,
    pub delta: f64,
    pub value: f64,
    pub err_quad: f64,
    pub err_search: f64,
    /// Λ(m) and its combined error, for the gap.
    #[serde(skip)]
    pub lambda: f64,
    #[serde(skip)]
    pub lambda_err: f64,
    #[serde(skip)]
    pub c_t: f64,
}

impl SweepRow {
    pub fn from_result(m: f64, kappa: f64, n: usize, ell: f64, c_t: f64, r: &TildeResult) -> Self {
        Self {
            m,
            kappa,
            n,
            ell,
            delta: r.result.delta,
            value: r.result.value,
            err_quad: r.result.err_quad,
            err_search: r.result.err_search,
            lambda: r.lambda.value,
            lambda_err: r.lambda.err_quad + r.lambda.err_search,
            c_t,
        }
    }

    /// Upper estimate of Λ̃ − Λ including both error budgets.
    pub fn gap_upper(&self) -> f64 {
        self.value - self.lambda + self.err_quad + self.err_search + self.lambda_err
    }

    /// m⁻¹(1 − κ/c_T)⁻² N^{−2/9}.
    pub fn law(&self) -> f64 {
        let r = 1.0 - self.kappa / self.c_t;
        (self.n as f64).powf(-2.0 / 9.0) / (self.m * r * r)
    }
}

/// Smallest c with Λ̃ − Λ ≤ c·m⁻¹(1−κ/c_T)⁻²N^{−2/9} on every row, using the
/// upper gap estimate so that the constant also covers the numerical error.
pub fn fit_c_lambda(rows: &[SweepRow]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::precondition("empty sweep"));
    }
    let mut triples: Vec<(u64, u64, usize)> = rows
        .iter()
        .map(|r| (r.m.to_bits(), r.kappa.to_bits(), r.n))
        .collect();
    triples.sort_unstable();
    triples.dedup();
    if triples.len() < 6 {
        return Err(Error::precondition(format!(
            "sweep needs at least 6 distinct (m, κ, N) triples, got {}",
            triples.len()
        )));
    }
    let c = rows
        .iter()
        .map(|r| r.gap_upper() / r.law())
        .fold(f64::NEG_INFINITY, f64::max);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Numeric(format!("fitted c_Λ = {c} is not positive")));
    }
    Ok(c)
}

/// Least-squares slope of log(gap_upper) against log N for one (m, κ).
pub fn gap_log_slope(rows: &[SweepRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.gap_upper() > 0.0)
        .map(|r| ((r.n as f64).ln(), r.gap_upper().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::precondition(
            "slope needs two rows with a positive gap",
        ));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::precondition("slope needs two distinct N"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0, 1.0), 1.0);
        assert_eq!(bump(0.25, 1.0), 1.0);
        assert_eq!(bump(1.0, 1.0), 0.0);
        assert!((bump(0.625, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_rejected() {
        let a = LambdaArgs::continuum(1.0, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0);
        assert!(matches!(
            lattice_lambda_sum(&a, 5.0, 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            hybrid_lattice_sum(&a, &HybridConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn q_floor_value() {
        let q = q_floor(3.0, 1.0, 8, 2.0);
        assert!((q - (2.0f64 * 32.0).sqrt() / 2.0).abs() < 1e-12);
    }
}
