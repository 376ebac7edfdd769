use polaron::kernels::{lambda_envelope, LambdaArgs};
use polaron::lambda_functional::lattice::{
    fit_c_lambda, gap_log_slope, hybrid_lattice_sum, lattice_lambda_sum, lattice_lambda_sum_offset,
    spacing, HybridConfig, SweepRow,
};
use polaron::lambda_functional::{integrate_lambda, IntegrationConfig};
use polaron::numeric::vec3;
use polaron::Error;

fn lattice_args(
    m: f64,
    s: [f64; 3],
    k: [f64; 3],
    q: f64,
    delta: f64,
    n: usize,
    ell: f64,
) -> LambdaArgs {
    LambdaArgs {
        delta,
        n,
        ell,
        ..LambdaArgs::continuum(m, s, k, q)
    }
}

#[test]
fn direct_sum_matches_hybrid() {
    let h = spacing(1.0);
    for (delta, n) in [(4.0, 10), (0.5, 3), (20.0, 50)] {
        let a = lattice_args(
            1.0,
            [h, 0.5 * h, -2.0 * h],
            [0.3 * h, -0.2 * h, 1.5 * h],
            h,
            delta,
            n,
            1.0,
        );
        let direct = lattice_lambda_sum(&a, 60.0 * h, 0.1).unwrap();
        let hybrid = hybrid_lattice_sum(&a, &HybridConfig::default()).unwrap();
        // The true sum lies in [partial, partial + tail_bound].
        assert!(
            hybrid.value >= direct.partial - hybrid.error,
            "{hybrid:?} {direct:?}"
        );
        assert!(
            hybrid.value <= direct.partial + direct.tail_bound + hybrid.error,
            "{hybrid:?} {direct:?}"
        );
    }
}

#[test]
fn tail_tolerance_is_enforced() {
    let a = lattice_args(1.0, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 1.0, 1, 10.0);
    assert!(matches!(
        lattice_lambda_sum(&a, 2.0, 1e-6),
        Err(Error::Accuracy { .. })
    ));
}

#[test]
fn sum_tends_to_integral_as_ell_grows() {
    let sets = [
        (1.0, [1.0, 0.5, -2.0], [0.3, -0.2, 1.5], 1.0),
        (0.36, [0.0, 0.0, -0.7], [0.0, 0.0, 1.0], 0.3),
        (3.0, [2.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0),
        (10.0, [0.5, 0.5, 0.5], [1.0, 1.0, 0.0], 0.2),
        (1.0, [0.2, -1.0, 0.4], [0.0, 0.0, 0.0], 2.0),
    ];
    let cfg = IntegrationConfig::with_rel_tol(1e-9);
    for (m, s, k, q) in sets {
        let limit = integrate_lambda(&LambdaArgs::continuum(m, s, k, q), &cfg).unwrap();
        let sums: Vec<f64> = [64.0, 256.0, 1024.0]
            .iter()
            .map(|&ell| {
                hybrid_lattice_sum(
                    &lattice_args(m, s, k, q, 1.0, 1, ell),
                    &HybridConfig::default(),
                )
                .unwrap()
                .value
            })
            .collect();
        let d: Vec<f64> = sums.iter().map(|v| v - limit.value).collect();
        // The singular lattice point makes the correction O(1/ℓ); it is smaller
        // when λ vanishes at t̃ = AK.
        for w in d.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio >= 3.0, "m={m}: differences {d:?}");
        }
        let extrapolated = sums[2] + (sums[2] - sums[1]) / 3.0;
        assert!(
            (extrapolated - limit.value).abs() <= 1e-3 * limit.value,
            "m={m}: extrapolated {extrapolated} vs integral {}",
            limit.value
        );
    }
}

#[test]
fn regulator_dominance_on_offset_lattice() {
    let h = spacing(2.0);
    let u = [0.31 * h, -0.17 * h, 0.43 * h];
    for (m, delta, n) in [(1.0, 2.0, 20), (3.0, 0.5, 5), (0.5, 8.0, 100)] {
        let a0 = lattice_args(
            m,
            [h, -0.5 * h, 0.2 * h],
            [0.0, 0.0, 2.0 * h],
            h,
            0.0,
            n,
            2.0,
        );
        let ad = LambdaArgs { delta, ..a0 };
        let s0 = lattice_lambda_sum_offset(&a0, u, 30.0 * h, 1.0).unwrap();
        let sd = lattice_lambda_sum_offset(&ad, u, 30.0 * h, 1.0).unwrap();
        let factor = 1.0 + n as f64 * delta / (2.0 * 4.0 * h * h);
        assert!(
            sd.partial <= factor * s0.partial,
            "{sd:?} vs {factor}·{s0:?}"
        );
    }
}

/// m⁻¹(1/(ℓQ) + δ^{-1/2})(1 + Nδ/(ℓ²Q²) + 1/(δℓQ) + N/(ℓ³Q³)).
fn riemann_gap_form(a: &LambdaArgs) -> f64 {
    let lq = a.ell * a.q_mu;
    let n = a.n as f64;
    (1.0 / lq + a.delta.powf(-0.5))
        * (1.0 + n * a.delta / (lq * lq) + 1.0 / (a.delta * lq) + n / (lq * lq * lq))
        / a.m
}

fn sum_envelope_form(a: &LambdaArgs) -> f64 {
    let lq = a.ell * a.q_mu;
    let n = a.n as f64;
    (1.0 + n * a.delta / (lq * lq) + 1.0 / (a.delta * lq) + n / (lq * lq * lq)) / a.m
}

fn sweep(seed: u64, count: usize) -> Vec<LambdaArgs> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut r = |lo: f64, hi: f64| lo * (hi / lo).powf(rng.random::<f64>());
    (0..count)
        .map(|_| {
            let q = r(0.3, 20.0) * spacing(1.0);
            let s = [r(0.1, 3.0) * q, 0.0, -r(0.1, 3.0) * q];
            let k = [0.0, 0.0, r(0.1, 3.0) * q];
            lattice_args(
                r(1.0, 10.0),
                s,
                k,
                q,
                r(0.3, 30.0),
                r(1.0, 1000.0) as usize,
                1.0,
            )
        })
        .collect()
}

#[test]
fn riemann_gap_has_a_uniform_constant() {
    let cfg = IntegrationConfig::with_rel_tol(1e-9);
    let ratio = |a: &LambdaArgs| {
        let sum = hybrid_lattice_sum(a, &HybridConfig::default())
            .unwrap()
            .value;
        let int = integrate_lambda(a, &cfg).unwrap().value;
        (sum - int).abs() / riemann_gap_form(a)
    };
    let fit = sweep(1, 40).iter().map(ratio).fold(0.0, f64::max);
    let check = sweep(2, 40).iter().map(ratio).fold(0.0, f64::max);
    eprintln!("Riemann gap constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && check <= 2.0 * fit);
}

#[test]
fn envelope_sum_has_a_uniform_constant() {
    // ℓ⁻³ Σ_t max over the cell around t of the envelope, plus its tail.
    let value = |a: &LambdaArgs| {
        let h = spacing(a.ell);
        let c = a.centre();
        let s_sq = vec3::norm_sq(vec3::sub(a.s_tilde, c));
        let half = 3f64.sqrt() * h / 2.0;
        let cut = 40.0 * h;
        let n_max = 40;
        let mut total = 0.0;
        for i in -n_max..=n_max {
            for j in -n_max..=n_max {
                for l in -n_max..=n_max {
                    let r = h * ((i * i + j * j + l * l) as f64).sqrt();
                    if r <= cut {
                        let near = (r - half).max(0.0);
                        total += lambda_envelope(a, s_sq, near * near);
                    }
                }
            }
        }
        let tail =
            polaron::lambda_functional::lattice::envelope_tail_bound(a, cut).unwrap() / (h * h * h);
        (total + tail) / (a.ell * a.ell * a.ell) / sum_envelope_form(a)
    };
    let fit = sweep(3, 20).iter().map(value).fold(0.0, f64::max);
    let check = sweep(4, 20).iter().map(value).fold(0.0, f64::max);
    eprintln!("envelope sum constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && check <= 2.0 * fit);
}

fn row(m: f64, kappa: f64, n: usize, gap: f64) -> SweepRow {
    SweepRow {
        m,
        kappa,
        n,
        ell: 1.0,
        delta: (n as f64).powf(4.0 / 9.0),
        value: 0.3 + gap,
        err_quad: 1e-9,
        err_search: 1e-9,
        lambda: 0.3,
        lambda_err: 0.0,
        c_t: 3.0,
    }
}

fn synthetic(c: f64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for m in [1.0, 3.0] {
        for n in [100, 1000, 10000] {
            let mut r = row(m, 1.0, n, 0.0);
            r.value = r.lambda + c * r.law();
            rows.push(r);
        }
    }
    rows
}

#[test]
fn fit_c_lambda_preconditions() {
    assert!(matches!(fit_c_lambda(&[]), Err(Error::Precondition(_))));
    let rows = synthetic(0.5);
    assert!(matches!(
        fit_c_lambda(&rows[..5]),
        Err(Error::Precondition(_))
    ));
    // Duplicated triples do not count twice.
    let mut dup = rows[..5].to_vec();
    dup.push(rows[0].clone());
    assert!(matches!(fit_c_lambda(&dup), Err(Error::Precondition(_))));
}

#[test]
fn fit_c_lambda_recovers_law_and_is_monotone() {
    let rows = synthetic(0.5);
    let c = fit_c_lambda(&rows).unwrap();
    assert!(c > 0.5 && c < 0.5 + 1e-6, "{c}");
    assert_eq!(c.to_bits(), fit_c_lambda(&rows).unwrap().to_bits());
    let mut more = rows.clone();
    more.push(row(10.0, 1.0, 100, 0.0));
    assert!(fit_c_lambda(&more).unwrap() >= c);
    // A vanishing gap still gives a positive constant through the error budget.
    let zero = synthetic(0.0);
    assert!(fit_c_lambda(&zero).unwrap() > 0.0);
}

#[test]
fn slope_of_power_law() {
    let rows: Vec<SweepRow> = synthetic(0.5).into_iter().filter(|r| r.m == 1.0).collect();
    let slope = gap_log_slope(&rows).unwrap();
    assert!((slope + 2.0 / 9.0).abs() < 1e-3, "{slope}");
}
