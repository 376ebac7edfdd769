use std::f64::consts::PI;

use polaron::bounds::{
    bound_confined, bound_main, bound_unconfined, c_l_prime_mass_spread, c_t_asymptote,
    c_t_enumeration, choose_ell, default_kappa, derive_c_l, enumerate_c_t, fit_c_l_prime,
    lper_sweep, mu_apriori, n_zero, ConstantEntry, ConstantsRegistry, LperSweepSpec, Provenance,
    RegistrySnapshot,
};
use polaron::box_spectra::sum_lowest;
use polaron::kernels::ModelParams;
use polaron::torus_forms::{form_bounds_check, random_fermionic, t_alpha_per};
use polaron::Error;
use proptest::prelude::*;
use serde_json::json;

/// Λ(1) from the default supremum search.
const LAMBDA_1: f64 = 0.34090669605518376;

fn pinned() -> RegistrySnapshot {
    RegistrySnapshot::from(&ConstantsRegistry::pinned())
}

fn snapshot(c_t: f64, c_lambda: f64) -> RegistrySnapshot {
    RegistrySnapshot {
        hash: String::new(),
        c_t,
        c_l_prime: 10.0,
        c_l: 1.0,
        c_lambda,
        main_const: 1.0,
    }
}

/// Squared norms of ℤ³ points sorted, from representation counts r₃(k).
fn norms_by_shell(count: usize) -> Vec<i64> {
    let kmax = 4 * (count as f64).powf(2.0 / 3.0) as i64 + 16;
    let r = (kmax as f64).sqrt() as i64 + 1;
    let mut shells = vec![0usize; kmax as usize + 1];
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let k = a * a + b * b + c * c;
                if k <= kmax {
                    shells[k as usize] += 1;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (k, &c) in shells.iter().enumerate() {
        for _ in 0..c {
            if out.len() == count {
                return out;
            }
            out.push(k as i64);
        }
    }
    panic!("shell table too small");
}

#[test]
fn c_t_minimum_is_at_three_particles() {
    let e = c_t_enumeration(1000).unwrap();
    // Two distinct momenta: 0 and a unit vector.
    let hand = 0.5 * 4.0 * PI * PI / 3f64.powf(5.0 / 3.0);
    assert_eq!(e.argmin, 3);
    assert!((e.value - hand).abs() < 1e-14, "{} vs {hand}", e.value);
    assert_eq!(e.ratios.len(), 998);
    assert!(matches!(enumerate_c_t(2), Err(Error::Precondition(_))));
}

#[test]
fn c_t_matches_shell_counting_and_is_stable() {
    let e = c_t_enumeration(10_000).unwrap();
    let norms = norms_by_shell(9_999);
    let mut partial = 0i64;
    for (i, &k) in norms.iter().enumerate() {
        partial += k;
        let n = i + 2;
        if n >= 3 && (n % 997 == 0 || n == 10_000) {
            let oracle = 0.5 * 4.0 * PI * PI * partial as f64 / (n as f64).powf(5.0 / 3.0);
            let got = e.ratios[n - 3];
            assert!(
                (got - oracle).abs() < 1e-12 * oracle,
                "N = {n}: {got} vs {oracle}"
            );
        }
    }
    assert!(e.complete_to >= *norms.last().unwrap());
    let small = enumerate_c_t(1000).unwrap();
    assert!((e.value - small).abs() < 1e-3 * small);
}

#[test]
fn c_t_ratio_approaches_the_shell_filling_limit() {
    let e = c_t_enumeration(10_000).unwrap();
    let asym = c_t_asymptote();
    assert!((asym - 4.5577).abs() < 1e-3, "{asym}");
    let dev = |n: usize| (e.ratios[n - 3] / asym - 1.0).abs();
    assert!(dev(10_000) < 0.05, "{}", dev(10_000));
    assert!(dev(10_000) < dev(1000) && dev(1000) < dev(100));
}

#[test]
fn c_t_is_independent_of_the_box() {
    let norms = norms_by_shell(9);
    let ratio = |ell: f64| {
        let h = 2.0 * PI / ell;
        let q2: f64 = norms.iter().map(|&k| 0.5 * h * h * k as f64).sum();
        q2 * ell * ell / 10f64.powf(5.0 / 3.0)
    };
    let r1 = ratio(1.0);
    for ell in [0.5, 2.0] {
        assert!((ratio(ell) - r1).abs() < 1e-13 * r1);
    }
    assert!((c_t_enumeration(10).unwrap().ratios[7] - r1).abs() < 1e-13 * r1);
}

#[test]
fn c_l_prime_envelope() {
    let spec = LperSweepSpec::new(7, 1000);
    let sweep = lper_sweep(&spec).unwrap();
    let c = fit_c_l_prime(&sweep).unwrap();
    assert!(c > 0.0 && c.is_finite());
    // The origin term (2π/ℓ)³/γ of the lattice sum caps the envelope.
    let cap = (2.0 * PI).powi(3);
    assert!(c <= cap * 1.001 && c > 0.9 * cap, "{c} vs {cap}");
    for s in &sweep {
        assert!(s.correction.abs() <= c / (s.q_mu_sq * s.ell.powi(3)) * (1.0 + 1e-12));
    }
    let (bins, spread) = c_l_prime_mass_spread(&sweep, spec.m_range, 3);
    eprintln!("c_L' = {c:.4}, per-mass-bin envelopes {bins:?}, spread {spread:.3}");
    assert!(spread < 2.0);
    let fresh = fit_c_l_prime(&lper_sweep(&LperSweepSpec::new(8, 1000)).unwrap()).unwrap();
    eprintln!("fresh sweep c_L' = {fresh:.4}");
    assert!(fresh <= 2.0 * c);
    assert!(matches!(fit_c_l_prime(&[]), Err(Error::Precondition(_))));
}

#[test]
fn registry_round_trip_and_audit() {
    let reg = ConstantsRegistry::pinned();
    reg.validate().unwrap();
    assert_eq!(
        reg.c_l.value.to_bits(),
        derive_c_l(reg.m_star_star.value, reg.c_l_prime.value, reg.c_t.value).to_bits()
    );
    for (name, e) in reg.entries() {
        assert!(e.value > 0.0, "{name}");
    }
    let text = reg.to_json().unwrap();
    let back = ConstantsRegistry::from_json(&text).unwrap();
    assert_eq!(back, reg);
    assert_eq!(back.hash(), reg.hash());
    assert_eq!(reg.hash().len(), 64);

    let mut stamped = reg.clone();
    stamped.created = "2030-01-01T00:00:00+00:00".into();
    assert_eq!(stamped.hash(), reg.hash());

    let mut bad = reg.clone();
    bad.c_l.value *= 1.0 + 1e-15;
    assert!(matches!(bad.validate(), Err(Error::Precondition(_))));
    let mut bad = reg.clone();
    bad.c_t.manifest = json!({ "n_max": 5 });
    assert!(matches!(bad.validate(), Err(Error::Precondition(_))));
    let mut bad = reg.clone();
    bad.schema_version += 1;
    assert!(matches!(bad.validate(), Err(Error::Precondition(_))));
    let mut bad = reg.clone();
    bad.c_eta = ConstantEntry::new(0.0, Provenance::Measured, json!({}));
    assert!(bad.validate().is_err());
    assert_ne!(bad.hash(), reg.hash());
}

#[test]
fn registry_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("polaron-registry-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("registry.json");
    let reg = ConstantsRegistry::pinned();
    reg.save(&path).unwrap();
    assert_eq!(ConstantsRegistry::load(&path).unwrap(), reg);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn pinned_registry_is_the_default_calibration() {
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/registry_default.json");
    let calibrated = ConstantsRegistry::load(&path).unwrap();
    let pinned = ConstantsRegistry::pinned();
    assert_eq!(calibrated.hash(), pinned.hash());
    assert_eq!(calibrated, pinned);
}

#[test]
fn n_zero_examples() {
    let unit = snapshot(3.0, 1.0);
    assert_eq!(n_zero(1.0, 0.0, 0.0, &unit).unwrap(), 1.0);
    // Growth without bound as κ/c_T → 1 − Λ.
    let mut last = 0.0;
    for t in [0.5, 0.6, 0.7, 0.8, 0.9, 0.99] {
        let kappa = t * 3.0 * (1.0 - 0.2);
        let v = n_zero(2.0, kappa, 0.2, &unit).unwrap();
        assert!(v > last);
        last = v;
    }
    assert!(last > 1e8);
    let reg = pinned();
    let v = n_zero(1.0, default_kappa(reg.c_t, LAMBDA_1), LAMBDA_1, &reg).unwrap();
    assert!(v.is_finite() && v > 0.0);
    match n_zero(1.0, 0.7 * reg.c_t, LAMBDA_1, &reg) {
        Err(Error::Precondition(msg)) => {
            assert!(msg.contains("0.3409") && msg.contains("κ/c_T = "), "{msg}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unconfined_examples() {
    for m in [0.5, 1.0, 7.0] {
        assert_eq!(bound_unconfined(m, 1.0, 0.3).unwrap(), 0.0);
        assert_eq!(bound_unconfined(m, 0.0, 0.3).unwrap(), 0.0);
        assert!(bound_unconfined(m, -1e-9, 0.3).unwrap().abs() < 1e-20);
    }
    let lambda = 0.25;
    let v = bound_unconfined(1.0, -2.0 * PI * PI * (1.0 - lambda), lambda).unwrap();
    assert!((v + 1.0).abs() < 1e-15, "{v}");
    assert!(matches!(
        bound_unconfined(1.0, -1.0, 1.0),
        Err(Error::Precondition(_))
    ));
}

/// The confined bound typed out term by term.
fn confined_by_hand(
    m: f64,
    kappa: f64,
    n: f64,
    ell: f64,
    alpha: f64,
    lambda: f64,
    r: &RegistrySnapshot,
) -> f64 {
    let x = 1.0 - kappa / r.c_t;
    let n0 = ((x - lambda) * m * x * x / r.c_lambda).powf(-4.5);
    let a = (alpha - r.c_l / ell).min(0.0);
    let den = (x - lambda) * (x - lambda) * (1.0 - (n0 / n).powf(2.0 / 9.0)).powi(2);
    kappa * n.powf(5.0 / 3.0) / (ell * ell)
        - (m + 1.0) / (2.0 * m) * (a * a) / (4.0 * PI.powi(4) * den)
}

fn main_by_hand(m: f64, n: usize, lbig: f64, alpha: f64, lambda: f64, c: f64) -> f64 {
    let _ = m;
    let e = sum_lowest(lbig, n).unwrap().e_dirichlet;
    let rho = n as f64 / lbig.powi(3);
    let a = alpha.min(0.0);
    e - (c * rho.powf(2.0 / 3.0) / (1.0 - lambda).powf(4.5)
        + c * (a * a) / ((1.0 - lambda) * (1.0 - lambda)))
}

const PINNED_SETS: [(f64, f64, usize, f64, f64); 5] = [
    (1.0, -1.0, 1000, 1.0, LAMBDA_1),
    (1.0, 0.5, 500, 2.0, LAMBDA_1),
    (3.0, -20.0, 2000, 0.5, 0.12),
    (0.8, -3.0, 10_000, 1.5, 0.6),
    (10.0, -0.1, 300, 1.0, 0.03),
];

#[test]
fn confined_bound_matches_hand_evaluation() {
    let reg = pinned();
    for (m, alpha, n, ell, lambda) in PINNED_SETS {
        let kappa = default_kappa(reg.c_t, lambda);
        let rep = bound_confined(m, kappa, n, ell, alpha, lambda, &reg).unwrap();
        let hand = confined_by_hand(m, kappa, n as f64, ell, alpha, lambda, &reg);
        assert_eq!(
            rep.energy.to_bits(),
            hand.to_bits(),
            "{} vs {hand}",
            rep.energy
        );
        eprintln!(
            "m={m} α={alpha} N={n} ℓ={ell}: {} (hand {hand}, bits equal: {})",
            rep.energy,
            rep.energy.to_bits() == hand.to_bits()
        );
    }
    // The example with κ = c_T/4.
    let k = reg.c_t / 4.0;
    let rep = bound_confined(1.0, k, 1000, 1.0, -1.0, LAMBDA_1, &reg).unwrap();
    assert_eq!(
        rep.energy.to_bits(),
        confined_by_hand(1.0, k, 1000.0, 1.0, -1.0, LAMBDA_1, &reg).to_bits()
    );
}

#[test]
fn main_bound_matches_hand_evaluation() {
    let reg = pinned();
    for (m, alpha, n, ell, lambda) in PINNED_SETS {
        let lbig = 4.0 * ell;
        let rep = bound_main(m, n, lbig, alpha, lambda, &reg, None).unwrap();
        let hand = main_by_hand(m, n, lbig, alpha, lambda, reg.main_const);
        assert_eq!(
            rep.energy.to_bits(),
            hand.to_bits(),
            "{} vs {hand}",
            rep.energy
        );
    }
}

#[test]
fn no_alpha_penalty_for_non_negative_alpha() {
    let reg = pinned();
    let kappa = default_kappa(reg.c_t, LAMBDA_1);
    let at = |alpha: f64| bound_confined(1.0, kappa, 1000, 1.0, alpha, LAMBDA_1, &reg).unwrap();
    let r = at(reg.c_l);
    assert_eq!(r.penalty, 0.0);
    assert_eq!(r.energy, kappa * 1000f64.powf(5.0 / 3.0));
    assert!(at(reg.c_l * 0.999).penalty > 0.0);
    for alpha in [0.0, 2.0] {
        let r = bound_main(1.0, 100, 3.0, alpha, LAMBDA_1, &reg, None).unwrap();
        assert_eq!(r.alpha_term, 0.0);
        assert!(r.density_term > 0.0);
    }
}

#[test]
fn confined_bound_limits_and_fallback() {
    let reg = pinned();
    let kappa = default_kappa(reg.c_t, LAMBDA_1);
    let x = 1.0 - kappa / reg.c_t - LAMBDA_1;
    let a = -1.0 - reg.c_l;
    let limit = (2.0 / 2.0) * a * a / (4.0 * PI.powi(4) * x * x);
    let big = bound_confined(1.0, kappa, 1usize << 50, 1.0, -1.0, LAMBDA_1, &reg).unwrap();
    assert!(
        (big.penalty - limit).abs() < 1e-3 * limit,
        "{} vs {limit}",
        big.penalty
    );
    // With a large c_Λ, small N falls below N₀.
    let strict = RegistrySnapshot {
        c_lambda: 1e3,
        ..reg.clone()
    };
    let n0 = n_zero(1.0, kappa, LAMBDA_1, &strict).unwrap();
    assert!(n0 > 10.0);
    match bound_confined(1.0, kappa, 10, 1.0, -1.0, LAMBDA_1, &strict) {
        Err(Error::Precondition(msg)) => {
            let fallback = bound_unconfined(1.0, -1.0, LAMBDA_1).unwrap();
            assert!(msg.contains(&format!("{fallback}")), "{msg}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        bound_confined(1.0, kappa, 1000, 1.0, -1.0, 1.2, &reg),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn main_bound_limits() {
    let reg = pinned();
    let c = reg.main_const;
    let alpha = -2.0;
    let lambda = 0.2;
    let target = -c * alpha * alpha / ((1.0 - lambda) * (1.0 - lambda));
    let mut prev = f64::INFINITY;
    for lbig in [10.0, 100.0, 1000.0, 10_000.0] {
        let r = bound_main(1.0, 50, lbig, alpha, lambda, &reg, None).unwrap();
        let dev = (r.energy - r.leading - target).abs();
        assert!(dev < prev);
        prev = dev;
    }
    assert!(prev < 1e-5 * target.abs());
    // Doubling L at fixed density.
    let a = bound_main(1.0, 1000, 5.0, alpha, lambda, &reg, None).unwrap();
    let b = bound_main(1.0, 8000, 10.0, alpha, lambda, &reg, None).unwrap();
    assert!((a.penalty - b.penalty).abs() < 1e-12 * a.penalty);
    let own = bound_main(1.0, 1000, 5.0, alpha, lambda, &reg, Some(1.0)).unwrap();
    assert_eq!(own.registry.main_const, 1.0);
    assert!(matches!(
        bound_main(1.0, 10, 1.0, 0.0, 1.0, &reg, None),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn reports_are_deterministic() {
    let reg = pinned();
    let kappa = default_kappa(reg.c_t, LAMBDA_1);
    let a = bound_confined(1.0, kappa, 1000, 1.0, -1.0, LAMBDA_1, &reg).unwrap();
    let b = bound_confined(1.0, kappa, 1000, 1.0, -1.0, LAMBDA_1, &reg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.registry.hash, ConstantsRegistry::pinned().hash());
    // Recompute from the recorded inputs.
    let p = a.params;
    let c = bound_confined(
        p.m,
        a.kappa.unwrap(),
        p.n,
        p.ell,
        p.alpha,
        a.lambda,
        &a.registry,
    )
    .unwrap();
    assert_eq!(c, a);
}

#[test]
fn ell_selection() {
    for (lbig, rho) in [
        (10.0, 1.0),
        (7.3, 0.2),
        (100.0, 3.7),
        (1.0, 0.2),
        (3.0, 0.01),
    ] {
        let ell = choose_ell(lbig, rho).unwrap();
        let k = lbig / ell;
        assert!((k - k.round()).abs() < 1e-9, "{k}");
        let x = ell * f64::cbrt(rho);
        assert!(
            (0.5..=2.0).contains(&x),
            "L = {lbig}, ρ̄ = {rho}: ℓρ̄^(1/3) = {x}"
        );
    }
    assert!(matches!(choose_ell(1.0, 0.01), Err(Error::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn confined_bound_is_monotone(
        m in 0.5f64..20.0,
        lambda in 0.0f64..0.9,
        nu in 0.1f64..0.9,
        n in 100usize..100_000,
        dn in 1usize..1000,
        ell in 0.2f64..5.0,
        alpha in -50.0f64..5.0,
        da in 0.0f64..3.0,
    ) {
        let reg = pinned();
        let kappa = reg.c_t * nu * (1.0 - lambda);
        let n0 = n_zero(m, kappa, lambda, &reg).unwrap();
        prop_assume!(n as f64 > n0);
        let base = bound_confined(m, kappa, n, ell, alpha, lambda, &reg).unwrap().energy;
        let up_a = bound_confined(m, kappa, n, ell, alpha + da, lambda, &reg).unwrap().energy;
        let up_n = bound_confined(m, kappa, n + dn, ell, alpha, lambda, &reg).unwrap().energy;
        prop_assert!(up_a >= base);
        prop_assert!(up_n >= base);
    }

    #[test]
    fn unconfined_bound_is_monotone_in_alpha(m in 0.4f64..30.0, lambda in 0.0f64..0.95, a in -100.0f64..10.0, da in 0.0f64..5.0) {
        prop_assert!(bound_unconfined(m, a + da, lambda).unwrap() >= bound_unconfined(m, a, lambda).unwrap());
    }

    #[test]
    fn main_bound_is_monotone_in_alpha(a in -30.0f64..3.0, da in 0.0f64..3.0, n in 1usize..400) {
        let reg = pinned();
        let lo = bound_main(1.0, n, 2.0, a, 0.3, &reg, None).unwrap().energy;
        let hi = bound_main(1.0, n, 2.0, a + da, 0.3, &reg, None).unwrap().energy;
        prop_assert!(hi >= lo);
    }
}

/// μ from the a-priori choice makes the periodic form non-negative, and the
/// off-diagonal and diagonal lower bounds hold on the same ensemble.
#[test]
fn form_positivity_at_the_apriori_shift() {
    let reg = pinned();
    let (m, n, ell) = (1.0, 3, 1.0);
    let kappa = default_kappa(reg.c_t, LAMBDA_1);
    let lambda_tilde = LAMBDA_1
        + reg.c_lambda / (m * (1.0 - kappa / reg.c_t).powi(2)) * (n as f64).powf(-2.0 / 9.0);
    let mut worst: f64 = f64::INFINITY;
    for (i, alpha) in [-1.0, 0.0, 1.0, -5.0].into_iter().enumerate() {
        let mu = mu_apriori(m, kappa, n, ell, alpha, LAMBDA_1, &reg).unwrap();
        let params = ModelParams::new(m, alpha, mu, n, ell, ell).unwrap();
        for s in 0..50 {
            let (xi, _) = random_fermionic(n, 2, 6, 1000 * i as u64 + s).unwrap();
            let t = t_alpha_per(&xi, &params).unwrap();
            let scale = t.alpha_term.abs() + t.t_dia.abs() + t.t_off.abs();
            assert!(t.total >= -1e-10 * scale, "α = {alpha}, seed {s}: {t:?}");
            worst = worst.min(t.total / scale);
            let c = form_bounds_check(&xi, &params, lambda_tilde, kappa, reg.c_t, reg.c_l_prime)
                .unwrap();
            assert!(c.holds(1e-12), "α = {alpha}, seed {s}: {c:?}");
        }
    }
    eprintln!("smallest total/scale: {worst:.4}");
}
