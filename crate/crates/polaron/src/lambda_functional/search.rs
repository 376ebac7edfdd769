//! Supremum of ∫λ over (s̃, K, Q) and the critical mass Λ(m**) = 1.
//!
//! λ is homogeneous of degree −3 under joint scaling of (s̃, K, Q, t̃), so
//! ∫λ is scale invariant and one of |s̃|, |K|, Q can be fixed to 1.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{aligned_args, integrate_lambda, IntegrationConfig};
use crate::error::{Error, Result};
use crate::kernels::default_a_const;
use crate::numeric::optimize::{bisect, nelder_mead, NelderMeadConfig};

/// Which parameter is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    /// |K| = 1; free |s̃|, Q (Q = 0 allowed), angle.
    UnitK,
    /// Q = 1; free |s̃|, |K|, angle.
    UnitQ,
    /// |s̃| = 1; free |K|, Q, angle.
    UnitS,
}

impl std::str::FromStr for Gauge {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" | "unit-k" => Ok(Gauge::UnitK),
            "q" | "unit-q" => Ok(Gauge::UnitQ),
            "s" | "unit-s" => Ok(Gauge::UnitS),
            _ => Err(Error::precondition(format!(
                "unknown gauge '{s}' (use k, q or s)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSearchConfig {
    pub gauge: Gauge,
    /// Log-grid range for every free magnitude.
    pub range: (f64, f64),
    /// Grid points per free magnitude.
    pub magnitude_points: usize,
    /// Grid points for the angle between s̃ and K on [0, π].
    pub angle_points: usize,
    /// Number of best grid cells refined locally.
    pub refine_starts: usize,
    pub refine_iters: usize,
    /// Quadrature tolerance on the coarse grid.
    pub coarse_tol: f64,
    /// Quadrature tolerance during refinement and for the final value.
    pub quad_tol: f64,
    /// Bisection tolerance in m.
    pub m_tol: f64,
    /// Coefficient A; `None` means the registry default 1/(m+2).
    pub a_const: Option<f64>,
}

impl Default for SupSearchConfig {
    fn default() -> Self {
        Self {
            gauge: Gauge::UnitK,
            range: (1e-3, 1e3),
            magnitude_points: 13,
            angle_points: 5,
            refine_starts: 5,
            refine_iters: 120,
            coarse_tol: 1e-5,
            quad_tol: 1e-8,
            m_tol: 1e-3,
            a_const: None,
        }
    }
}

impl SupSearchConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::precondition(format!(
                "bad search range ({lo}, {hi})"
            )));
        }
        if self.magnitude_points < 2 || self.angle_points < 2 || self.refine_starts < 1 {
            return Err(Error::precondition(
                "grids need at least two points and one refinement start",
            ));
        }
        if !(self.coarse_tol > 0.0 && self.quad_tol > 0.0 && self.m_tol > 0.0) {
            return Err(Error::precondition("tolerances must be positive"));
        }
        Ok(())
    }

    fn a_for(&self, m: f64) -> f64 {
        self.a_const.unwrap_or_else(|| default_a_const(m))
    }
}

/// Location of a supremum candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Argmax {
    pub s_abs: f64,
    pub k_abs: f64,
    /// Angle between s̃ and K.
    pub angle: f64,
    pub q_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub value: f64,
    pub argmax: Argmax,
    pub err_quad: f64,
    pub err_search: f64,
    /// Free coordinates whose optimum sits on the edge of the search box.
    pub boundary: Vec<String>,
    pub evaluations: usize,
    /// Regulator δ at which the value was taken; 0 for Λ(m).
    pub delta: f64,
}

/// Free coordinates of a gauge: two log-magnitudes (or pinned zero) and an angle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub angle: f64,
}

fn coord_names(g: Gauge) -> (&'static str, &'static str) {
    match g {
        Gauge::UnitK => ("|s|", "Q"),
        Gauge::UnitQ => ("|s|", "|K|"),
        Gauge::UnitS => ("|K|", "Q"),
    }
}

fn to_argmax(g: Gauge, c: &Cell) -> Argmax {
    let ex = |v: Option<f64>| v.map_or(0.0, f64::exp);
    match g {
        Gauge::UnitK => Argmax {
            s_abs: ex(c.a),
            k_abs: 1.0,
            angle: c.angle,
            q_mu: ex(c.b),
        },
        Gauge::UnitQ => Argmax {
            s_abs: ex(c.a),
            k_abs: ex(c.b),
            angle: c.angle,
            q_mu: 1.0,
        },
        Gauge::UnitS => Argmax {
            s_abs: 1.0,
            k_abs: ex(c.a),
            angle: c.angle,
            q_mu: ex(c.b),
        },
    }
}

/// Folds any real angle into [0, π].
fn fold_angle(x: f64) -> f64 {
    x.cos().clamp(-1.0, 1.0).acos()
}

fn evaluate(m: f64, a_const: f64, p: &Argmax, tol: f64) -> Option<(f64, f64)> {
    let args = aligned_args(m, p.s_abs, p.k_abs, p.angle, p.q_mu, a_const);
    match integrate_lambda(&args, &IntegrationConfig::with_rel_tol(tol)) {
        Ok(r) => Some((r.value, r.error)),
        Err(Error::Accuracy {
            estimate, error, ..
        }) if estimate.is_finite() => Some((estimate, error)),
        Err(_) => None,
    }
}

/// Λ(m) = sup over (s̃, K, Q) of ∫λ dt̃, by coarse grid and Nelder-Mead refinement.
pub fn lambda_of_m(m: f64, cfg: &SupSearchConfig) -> Result<LambdaResult> {
    lambda_of_m_seeded(m, cfg, None)
}

/// As [`lambda_of_m`], optionally adding a known good point as an extra start.
pub fn lambda_of_m_seeded(
    m: f64,
    cfg: &SupSearchConfig,
    seed: Option<Argmax>,
) -> Result<LambdaResult> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain(format!(
            "mass ratio must be positive, got {m}"
        )));
    }
    cfg.validate()?;
    let a_const = cfg.a_for(m);
    let (lo, hi) = (cfg.range.0.ln(), cfg.range.1.ln());
    // Second magnitude may be pinned to zero where the gauge allows it.
    let (zero_a, zero_b) = match cfg.gauge {
        Gauge::UnitK => (false, true),
        Gauge::UnitQ => (false, false),
        Gauge::UnitS => (true, true),
    };
    let seed_cell = seed.map(|s| {
        let ln = |v: f64| {
            if v > 0.0 {
                Some(v.ln().clamp(lo, hi))
            } else {
                None
            }
        };
        match cfg.gauge {
            Gauge::UnitK => Cell {
                a: ln(s.s_abs / s.k_abs),
                b: ln(s.q_mu / s.k_abs),
                angle: s.angle,
            },
            Gauge::UnitQ if s.q_mu > 0.0 => Cell {
                a: ln(s.s_abs / s.q_mu),
                b: ln(s.k_abs / s.q_mu),
                angle: s.angle,
            },
            Gauge::UnitQ => Cell {
                a: Some(hi - 1e-9),
                b: Some(hi),
                angle: s.angle,
            },
            Gauge::UnitS => Cell {
                a: ln(s.k_abs / s.s_abs),
                b: ln(s.q_mu / s.s_abs),
                angle: s.angle,
            },
        }
    });
    let out = grid_search(
        cfg,
        (zero_a, zero_b),
        seed_cell,
        |c| to_argmax(cfg.gauge, c),
        |p, tol| evaluate(m, a_const, p, tol),
    )?;
    let (na, nb) = coord_names(cfg.gauge);
    let boundary = out.boundary_names(cfg, na, nb);
    if cfg.gauge != Gauge::UnitS && boundary.iter().any(|b| b == "|s|") {
        return Err(Error::Search(format!(
            "maximum at the |s| edge of the search box (m = {m}); grid:{}",
            out.dump
        )));
    }
    Ok(out.into_result(boundary, 0.0))
}

pub(crate) struct SearchOutcome {
    pub cell: Cell,
    pub argmax: Argmax,
    pub value: f64,
    pub err_quad: f64,
    pub err_search: f64,
    pub evaluations: usize,
    pub dump: String,
}

impl SearchOutcome {
    pub fn boundary_names(&self, cfg: &SupSearchConfig, na: &str, nb: &str) -> Vec<String> {
        let (lo, hi) = (cfg.range.0.ln(), cfg.range.1.ln());
        // Within 0.1% of an edge counts as on it.
        let edge =
            |v: Option<f64>| v.is_some_and(|x| (x - lo).abs() < 1e-3 || (hi - x).abs() < 1e-3);
        let mut boundary = Vec::new();
        if edge(self.cell.a) {
            boundary.push(na.to_string());
        }
        if edge(self.cell.b) {
            boundary.push(nb.to_string());
        }
        boundary
    }

    pub fn into_result(self, boundary: Vec<String>, delta: f64) -> LambdaResult {
        LambdaResult {
            value: self.value,
            argmax: self.argmax,
            err_quad: self.err_quad,
            err_search: self.err_search,
            boundary,
            evaluations: self.evaluations,
            delta,
        }
    }
}

/// Coarse grid over (a, b, angle) followed by Nelder-Mead from the best cells.
///
/// `a` and `b` are log-magnitudes on `cfg.range`; `zeros` adds the value zero
/// (`None`) to either axis. `eval` returns (value, error) at a quadrature tolerance.
pub(crate) fn grid_search<M, E>(
    cfg: &SupSearchConfig,
    zeros: (bool, bool),
    seed: Option<Cell>,
    to_point: M,
    eval: E,
) -> Result<SearchOutcome>
where
    M: Fn(&Cell) -> Argmax + Sync,
    E: Fn(&Argmax, f64) -> Option<(f64, f64)> + Sync,
{
    let (lo, hi) = (cfg.range.0.ln(), cfg.range.1.ln());
    let n = cfg.magnitude_points;
    let logs: Vec<Option<f64>> = (0..n)
        .map(|i| Some(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect();
    let angles: Vec<f64> = (0..cfg.angle_points)
        .map(|i| PI * i as f64 / (cfg.angle_points - 1) as f64)
        .collect();
    let mut a_vals = logs.clone();
    let mut b_vals = logs;
    if zeros.0 {
        a_vals.insert(0, None);
    }
    if zeros.1 {
        b_vals.insert(0, None);
    }
    let mut cells = Vec::new();
    for &a in &a_vals {
        for &b in &b_vals {
            if a.is_none() && b.is_none() {
                continue;
            }
            for &angle in &angles {
                cells.push(Cell { a, b, angle });
            }
        }
    }
    let coarse: Vec<(usize, f64)> = cells
        .par_iter()
        .enumerate()
        .filter_map(|(i, c)| eval(&to_point(c), cfg.coarse_tol).map(|(v, _)| (i, v)))
        .collect();
    if coarse.is_empty() {
        return Err(Error::Search("no finite value on the search grid".into()));
    }
    let mut dump = String::new();
    for (i, v) in &coarse {
        let p = to_point(&cells[*i]);
        dump.push_str(&format!(
            "\n  s={:.3e} K={:.3e} Q={:.3e} angle={:.3} -> {:.6e}",
            p.s_abs, p.k_abs, p.q_mu, p.angle, v
        ));
    }
    let mut ranked = coarse;
    // Deterministic: value descending, then cell index.
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut starts: Vec<Cell> = ranked
        .iter()
        .take(cfg.refine_starts)
        .map(|&(i, _)| cells[i])
        .collect();
    starts.extend(seed);

    let nm_cfg = NelderMeadConfig {
        max_iter: cfg.refine_iters,
        f_tol: cfg.quad_tol * 10.0,
        x_tol: 1e-4,
    };
    let refined: Vec<(Cell, f64, f64, usize)> = starts
        .par_iter()
        .map(|start| {
            let mut free: Vec<f64> = Vec::new();
            free.extend(start.a);
            free.extend(start.b);
            free.push(start.angle);
            let unpack = |x: &[f64]| {
                let mut it = x.iter();
                let a = start.a.map(|_| it.next().unwrap().clamp(lo, hi));
                let b = start.b.map(|_| it.next().unwrap().clamp(lo, hi));
                let angle = fold_angle(*it.next().unwrap());
                Cell { a, b, angle }
            };
            let mut step = vec![0.5; free.len()];
            *step.last_mut().unwrap() = 0.3;
            let mut evals = 0;
            let res = nelder_mead(
                |x| {
                    evals += 1;
                    eval(&to_point(&unpack(x)), cfg.quad_tol).map_or(f64::INFINITY, |v| -v.0)
                },
                &free,
                &step,
                &nm_cfg,
            );
            (unpack(&res.x), -res.f, spread_estimate(&res), evals)
        })
        .collect();
    let best = refined
        .iter()
        .enumerate()
        .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(y.0.cmp(&x.0)))
        .map(|(_, r)| *r)
        .ok_or_else(|| Error::Search("refinement produced no candidates".into()))?;
    let (cell, _, spread, _) = best;
    let argmax = to_point(&cell);
    let (value, err_quad) = eval(&argmax, cfg.quad_tol)
        .ok_or_else(|| Error::Search("final evaluation failed".into()))?;
    let evaluations = cells.len() + refined.iter().map(|r| r.3).sum::<usize>() + 1;
    // Other starts that stop just short of the best value measure how flat the
    // objective is near the optimum.
    let runner_up = refined
        .iter()
        .map(|r| r.1)
        .filter(|v| *v < value && value - *v < 10.0 * cfg.coarse_tol * value.abs())
        .fold(value, f64::min);
    let err_search = spread + (value - runner_up) + cfg.quad_tol * value.abs();
    Ok(SearchOutcome {
        cell,
        argmax,
        value,
        err_quad,
        err_search,
        evaluations,
        dump,
    })
}

fn spread_estimate(res: &crate::numeric::optimize::NelderMeadResult) -> f64 {
    if res.converged {
        0.0
    } else {
        res.f.abs() * 1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalMass {
    pub m_star: f64,
    pub bracket: (f64, f64),
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub steps: usize,
    pub gauge: Gauge,
}

/// Root of Λ(m) = 1 by bisection on `bracket`; returns the final midpoint.
pub fn critical_mass(cfg: &SupSearchConfig, bracket: (f64, f64)) -> Result<CriticalMass> {
    cfg.validate()?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::precondition(format!("invalid bracket ({lo}, {hi})")));
    }
    let l_lo = lambda_of_m(lo, cfg)?;
    let l_hi = lambda_of_m_seeded(hi, cfg, Some(l_lo.argmax))?;
    if !(l_lo.value > 1.0 && l_hi.value < 1.0) {
        return Err(Error::precondition(format!(
            "bracket does not straddle Λ = 1: Λ({lo}) = {}, Λ({hi}) = {}",
            l_lo.value, l_hi.value
        )));
    }
    let mut seed = l_hi.argmax;
    // The seed carries the optimum between nearby masses; a coarse grid guards
    // against it jumping.
    let inner = SupSearchConfig {
        magnitude_points: cfg.magnitude_points.div_ceil(2).max(2),
        angle_points: cfg.angle_points.div_ceil(2).max(2),
        refine_starts: cfg.refine_starts.min(2),
        ..*cfg
    };
    let b = bisect(
        |m| {
            let r = lambda_of_m_seeded(m, &inner, Some(seed))?;
            seed = r.argmax;
            Ok(r.value - 1.0)
        },
        lo,
        hi,
        cfg.m_tol,
    )?;
    Ok(CriticalMass {
        m_star: b.root,
        bracket: (b.lo, b.hi),
        lambda_lo: l_lo.value,
        lambda_hi: l_hi.value,
        steps: b.steps,
        gauge: cfg.gauge,
    })
}
