use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use polaron::bounds::{
    bound_confined, bound_main, bound_unconfined, calibrate as run_calibration, default_kappa,
    CalibrationSpec, ConstantsRegistry, RegistrySnapshot,
};
use polaron::box_spectra::{dirichlet_levels, lt_gap_check, random_smooth_potential};
use polaron::lambda_functional::{
    critical_mass as find_critical_mass, lambda_of_m, Gauge, SupSearchConfig,
};

use crate::config::RunConfig;
use crate::output::{print_json, Run};
use crate::CliError;

fn registry(cfg: &RunConfig) -> Result<ConstantsRegistry, CliError> {
    match &cfg.registry {
        Some(p) => Ok(ConstantsRegistry::load(p)?),
        None => Ok(ConstantsRegistry::pinned()),
    }
}

fn search_config(cfg: &RunConfig) -> Result<SupSearchConfig, CliError> {
    let mut s = SupSearchConfig::default();
    if let Some(g) = cfg.get::<String>("gauge")? {
        s.gauge = g
            .parse::<Gauge>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    s.quad_tol = cfg.get_or("quad_tol", s.quad_tol)?;
    if cfg.values.contains_key("m_tol") {
        s.m_tol = cfg.get_or("m_tol", s.m_tol)?;
    }
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

fn positive(cfg: &RunConfig, key: &str) -> Result<f64, CliError> {
    let v: f64 = cfg.require(key)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("{key} must be positive, got {v}")));
    }
    Ok(v)
}

pub fn lambda(cfg: &RunConfig) -> Result<(), CliError> {
    let m = positive(cfg, "m")?;
    let search = search_config(cfg)?;
    let r = lambda_of_m(m, &search)?;
    let mut run = Run::start(cfg)?;
    run.json("lambda.json", &r)?;
    print_json(&r)?;
    run.finish(None, json!({ "search": search }))
}

pub fn critical_mass(cfg: &RunConfig) -> Result<(), CliError> {
    let lo = cfg.get_or("lo", 0.3)?;
    let hi = cfg.get_or("hi", 0.45)?;
    let search = search_config(cfg)?;
    let r = find_critical_mass(&search, (lo, hi))?;
    let mut run = Run::start(cfg)?;
    run.json("critical_mass.json", &r)?;
    print_json(&r)?;
    run.finish(None, json!({ "search": search }))
}

pub fn calibrate(cfg: &RunConfig) -> Result<(), CliError> {
    let sweep = cfg.get_or("sweep", "default".to_string())?;
    let spec = match sweep.as_str() {
        "default" => CalibrationSpec::default_sweep(cfg.seed),
        "quick" => CalibrationSpec::quick(cfg.seed),
        other => {
            return Err(CliError::Usage(format!(
                "unknown sweep '{other}' (use default or quick)"
            )))
        }
    };
    let out = run_calibration(&spec, chrono::Utc::now().to_rfc3339())?;
    let mut run = Run::start(cfg)?;
    run.json("registry.json", &out.registry)?;
    run.csv(
        "lper_sweep.csv",
        &out.lper.iter().map(LperRow::from).collect::<Vec<_>>(),
    )?;
    run.csv("lambda_tilde.csv", &out.lambda_rows)?;
    print_json(&out.registry)?;
    run.finish(
        Some(out.registry.hash()),
        json!({ "spec": spec, "c_l_prime_mass_spread": out.c_l_prime_mass_spread }),
    )
}

#[derive(Serialize)]
struct LperRow {
    m: f64,
    ell: f64,
    #[serde(rename = "N")]
    n: usize,
    mu: f64,
    q_mu_sq: f64,
    correction: f64,
    scaled: f64,
}

impl From<&polaron::bounds::LperSample> for LperRow {
    fn from(s: &polaron::bounds::LperSample) -> Self {
        Self {
            m: s.m,
            ell: s.ell,
            n: s.n,
            mu: s.mu,
            q_mu_sq: s.q_mu_sq,
            correction: s.correction,
            scaled: s.scaled,
        }
    }
}

pub fn bound(cfg: &RunConfig) -> Result<(), CliError> {
    let reg = registry(cfg)?;
    let snap = RegistrySnapshot::from(&reg);
    let m = positive(cfg, "m")?;
    let alpha: f64 = cfg.require("alpha")?;
    let kind = cfg.get_or("kind", "confined".to_string())?;
    let lambda = match cfg.get::<f64>("lambda")? {
        Some(l) => l,
        None => lambda_of_m(m, &search_config(cfg)?)?.value,
    };
    let mut run = Run::start(cfg)?;
    match kind.as_str() {
        "confined" => {
            let n: usize = cfg.require("n")?;
            let ell = positive(cfg, "ell")?;
            let kappa = cfg.get_or("kappa", default_kappa(snap.c_t, lambda))?;
            let r = bound_confined(m, kappa, n, ell, alpha, lambda, &snap)?;
            run.json("bound.json", &r)?;
            print_json(&r)?;
        }
        "main" => {
            let n: usize = cfg.require("n")?;
            let lbig = positive(cfg, "lbig")?;
            let r = bound_main(m, n, lbig, alpha, lambda, &snap, cfg.get("const")?)?;
            run.json("bound.json", &r)?;
            print_json(&r)?;
        }
        "unconfined" => {
            let e = bound_unconfined(m, alpha, lambda)?;
            let r = json!({ "kind": "unconfined", "m": m, "alpha": alpha, "lambda": lambda, "energy": e });
            run.json("bound.json", &r)?;
            print_json(&r)?;
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown bound kind '{other}' (use confined, main or unconfined)"
            )))
        }
    }
    run.finish(Some(snap.hash), json!({ "lambda": lambda }))
}

#[derive(Serialize)]
struct LtRow {
    sample: usize,
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    gap: f64,
    rhs: f64,
    ratio: f64,
}

pub fn ltcheck(cfg: &RunConfig) -> Result<(), CliError> {
    let samples = cfg.get_or("samples", 50usize)?;
    let n_max = cfg.get_or("n", 50usize)?;
    let basis = cfg.get_or("basis", 300usize)?;
    let grid = cfg.get_or("grid", 24usize)?;
    let depth = cfg.get_or("depth", 200.0)?;
    let l = cfg.get_or("l", 1.0)?;
    if samples == 0 || n_max == 0 {
        return Err(CliError::Usage("samples and n must be at least 1".into()));
    }
    if basis > 4096 {
        return Err(CliError::Usage(format!("basis {basis} exceeds 4096")));
    }
    let rows: Vec<LtRow> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let n = 1 + i % n_max;
            let (v, _) = random_smooth_potential(l, grid, 3, depth, seed)?;
            let r = lt_gap_check(&v, n, basis)?;
            Ok(LtRow {
                sample: i,
                seed,
                n,
                gap: r.gap,
                rhs: r.rhs,
                ratio: r.ratio,
            })
        })
        .collect::<Result<_, polaron::Error>>()?;
    let max_ratio = rows
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let summary =
        json!({ "samples": samples, "max_ratio": max_ratio, "basis": basis, "grid": grid });
    let mut run = Run::start(cfg)?;
    run.csv("ltcheck.csv", &rows)?;
    run.json("ltcheck.json", &summary)?;
    print_json(&summary)?;
    run.finish(None, json!({ "depth": depth, "l": l }))
}

#[derive(Serialize)]
struct LevelRow {
    value: f64,
    n_sq: u64,
    multiplicity: usize,
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let l = cfg.get_or("l", std::f64::consts::PI)?;
    let count = cfg.get_or("count", 10usize)?;
    let s = dirichlet_levels(l, count)?;
    let rows: Vec<LevelRow> = s
        .levels
        .iter()
        .map(|v| LevelRow {
            value: v.value,
            n_sq: v.n_sq,
            multiplicity: v.multiplicity,
        })
        .collect();
    let mut run = Run::start(cfg)?;
    run.json("spectrum.json", &s)?;
    run.csv("spectrum.csv", &rows)?;
    print_json(&s)?;
    run.finish(None, json!({}))
}
