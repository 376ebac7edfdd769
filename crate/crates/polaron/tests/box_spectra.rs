use std::f64::consts::PI;

use polaron::box_spectra::*;
use polaron::numeric::quad::{adaptive, QuadConfig};
use polaron::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo * (hi / lo).powf(rng.random::<f64>())
}

/// All |n|² for n ∈ {1..r}³, sorted.
fn brute_values(r: u64) -> Vec<u64> {
    let mut v = Vec::new();
    for a in 1..=r {
        for b in 1..=r {
            for c in 1..=r {
                v.push(a * a + b * b + c * c);
            }
        }
    }
    v.sort();
    v
}

#[test]
fn levels_at_side_pi() {
    let s = dirichlet_levels(PI, 5).unwrap();
    let got: Vec<(f64, usize)> = s.levels.iter().map(|l| (l.value, l.multiplicity)).collect();
    let want = [(3.0, 1), (6.0, 3), (9.0, 3), (11.0, 3), (12.0, 1)];
    for (g, w) in got.iter().zip(want) {
        assert!((g.0 - w.0).abs() < 1e-12 && g.1 == w.1, "{got:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let l = log_uniform(&mut rng, 0.01, 100.0);
        let s = dirichlet_levels(l, 1).unwrap();
        assert!((s.levels[0].value - 3.0 * PI * PI / (l * l)).abs() <= 1e-14 * s.levels[0].value);
    }
}

#[test]
fn enumeration_is_exhaustive() {
    let l = 1.3;
    let count = 150;
    let s = dirichlet_levels(l, count).unwrap();
    let top = s.levels.last().unwrap().n_sq;
    // A search radius twice the one needed.
    let r = 2 * ((top as f64).sqrt() as u64 + 1);
    let values = brute_values(r);
    let mut distinct: Vec<(u64, usize)> = Vec::new();
    for v in values {
        match distinct.last_mut() {
            Some((w, c)) if *w == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let got: Vec<(u64, usize)> = s.levels.iter().map(|x| (x.n_sq, x.multiplicity)).collect();
    assert_eq!(got, distinct[..count].to_vec());
    // Multiplicities recount the representative's orbit plus other triples with the same |n|².
    for lv in &s.levels {
        assert_eq!(
            lv.n_sq,
            lv.representative
                .iter()
                .map(|&x| (x as u64).pow(2))
                .sum::<u64>()
        );
    }
    let mu = s.levels[40].value;
    let filtered = brute_values(r)
        .into_iter()
        .filter(|&v| PI * PI * v as f64 / (l * l) <= mu)
        .count();
    assert_eq!(s.states_below(mu), filtered);
    assert_eq!(states_up_to(l, mu).len(), filtered);
}

#[test]
fn lowest_sums() {
    let s = sum_lowest(1.0, 1).unwrap();
    assert!((s.e_dirichlet - 14.804406601634037).abs() < 1e-12);
    assert_eq!(s.e_laplacian, 2.0 * s.e_dirichlet);
    let l = 2.0;
    let mut prev = 0.0;
    let states = lowest_states(60);
    for n in 1..=60 {
        let s = sum_lowest(l, n).unwrap();
        let e_n = PI * PI / (l * l) * states[n - 1].iter().map(|&x| (x * x) as f64).sum::<f64>();
        assert!((s.e_laplacian - prev - e_n).abs() <= 1e-12 * s.e_laplacian);
        assert_eq!(s.e_top, e_n);
        prev = s.e_laplacian;
    }
    assert!(matches!(sum_lowest(1.0, 0), Err(Error::Domain(_))));
}

#[test]
fn thermodynamic_energy_per_particle_converges() {
    // E^D_N/(Nρ̄^{2/3}) at L = 1, so ρ̄ = N.
    let ratio = |n: usize| sum_lowest(1.0, n).unwrap().e_dirichlet / (n as f64).powf(5.0 / 3.0);
    let (a, b) = (ratio(10_000), ratio(100_000));
    eprintln!("E/(N rho^(2/3)): N=1e4 {a}, N=1e5 {b}");
    assert!((a - b).abs() <= 0.05 * b);
}

#[test]
fn rho0_normalisation_bound_and_symmetry() {
    let l = 1.0;
    let e1 = 3.0 * PI * PI;
    let m = 64;
    for mu in [e1, 10.0 * e1, 100.0 * e1] {
        let grid = rho0_grid(l, mu, m).unwrap();
        let integral: f64 = grid.iter().sum::<f64>() * (l / m as f64).powi(3);
        let count = states_up_to(l, mu).len() as f64;
        assert!(
            (integral - count).abs() <= 1e-8 * count,
            "mu={mu}: {integral} vs {count}"
        );
        let sup = grid.iter().copied().fold(0.0, f64::max);
        let bound = 32.0 * mu.powf(1.5) / (3.0 * PI * PI);
        assert!(sup <= bound, "mu={mu}: sup {sup} > {bound}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let l = 1.7;
    for _ in 0..50 {
        let x = [
            rng.random_range(0.0..l),
            rng.random_range(0.0..l),
            rng.random_range(0.0..l),
        ];
        let a = rho0(x, l, 40.0).unwrap();
        for j in 0..3 {
            let mut y = x;
            y[j] = l - y[j];
            let b = rho0(y, l, 40.0).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
    assert!(matches!(
        rho0([-0.1, 0.5, 0.5], l, 40.0),
        Err(Error::Domain(_))
    ));
}

fn shell_form(e: f64, mu: f64, l: f64) -> f64 {
    mu / l + if e <= mu { mu.sqrt() * e } else { e.powf(1.5) }
}

#[test]
fn shell_count_bound_has_a_uniform_constant() {
    assert_eq!(shell_count_f(0.0, 50.0, 1.0).unwrap().count, 0);
    let sweep = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..150)
            .map(|_| {
                let l = log_uniform(&mut rng, 0.5, 2.0);
                let mu = log_uniform(&mut rng, 1.0, 300.0) * 3.0 * PI * PI / (l * l);
                let e = log_uniform(&mut rng, 1e-3, 10.0) * mu;
                shell_count_f(e, mu, l).unwrap().value / shell_form(e, mu, l)
            })
            .fold(0.0, f64::max)
    };
    let (fit, check) = (sweep(3), sweep(4));
    eprintln!("shell count constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && check <= 2.0 * fit);
}

#[test]
fn half_lattice_count_error_is_quadratic() {
    let err = |r: f64| {
        let open = half_lattice_ball_count(r, false) as f64;
        let closed = half_lattice_ball_count(r, true) as f64;
        let vol = 4.0 * PI / 3.0 * r.powi(3);
        (open - vol).abs().max((closed - vol).abs()) / r.powi(2).max(1.0)
    };
    let sweep = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..60)
            .map(|_| err(log_uniform(&mut rng, 0.5, 50.0)))
            .fold(0.0, f64::max)
    };
    // Integer and half-integer radii put lattice points on the sphere.
    let fit = sweep(5).max(
        [1.0, 2.5, 10.0, 25.0]
            .into_iter()
            .map(err)
            .fold(0.0, f64::max),
    );
    let check = sweep(6).max(
        [0.5, 5.0, 17.5, 50.0]
            .into_iter()
            .map(err)
            .fold(0.0, f64::max),
    );
    eprintln!("lattice count constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(check <= 2.0 * fit);
}

/// Independent R: sorted shell distances and adaptive quadrature of the step integrand.
fn r_brute(rho: f64, mu: f64, l: f64) -> f64 {
    let scale = PI * PI / (l * l);
    let unit = (2.0 / l).powi(3);
    let r = ((4.0 * mu + 4.0 * rho.powf(2.0 / 3.0)) / scale).sqrt() as u64 + 4;
    let mut d: Vec<f64> = brute_values(r)
        .into_iter()
        .map(|v| (scale * v as f64 - mu).abs())
        .collect();
    d.sort_by(f64::total_cmp);
    let f = |e: f64| unit * d.partition_point(|&x| x < e) as f64;
    // f reaches ρ at the jump of index ⌈ρ/unit⌉ − 1.
    let upper = d[((rho / unit).ceil() as usize).max(1) - 1];
    let cfg = QuadConfig::new(1e-12 * rho * upper, 1e-10).with_max_intervals(1_000_000);
    let end = upper * (1.0 + 1e-9) + 1e-12;
    // A uniform pre-split keeps the error estimator from stepping over close pairs of jumps.
    let grid: Vec<f64> = (1..4096).map(|i| end * i as f64 / 4096.0).collect();
    adaptive(
        |e| (rho.sqrt() - f(e).sqrt()).max(0.0).powi(2),
        0.0,
        end,
        &grid,
        &cfg,
    )
    .value
}

#[test]
fn r_function_properties() {
    assert_eq!(r_function(0.0, 100.0, 1.0).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..12 {
        let l = log_uniform(&mut rng, 0.7, 1.5);
        let mu = log_uniform(&mut rng, 1.0, 30.0) * 3.0 * PI * PI / (l * l);
        let rho = log_uniform(&mut rng, 1e-2, 10.0) * mu.powf(1.5);
        let exact = r_function(rho, mu, l).unwrap();
        let brute = r_brute(rho, mu, l);
        assert!(
            (exact - brute).abs() <= 1e-6 * exact,
            "rho={rho} mu={mu} l={l}: {exact} vs {brute}"
        );
        let mut prev = 0.0;
        for t in 1..=20 {
            let v = r_function(rho * t as f64 / 10.0, mu, l).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }
}

#[test]
fn r_dominates_shifted_s() {
    let ratio = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::INFINITY;
        for _ in 0..60 {
            let l = log_uniform(&mut rng, 0.5, 2.0);
            let mu = log_uniform(&mut rng, 1.0, 100.0) * 3.0 * PI * PI / (l * l);
            let rho = log_uniform(&mut rng, 1e-3, 100.0) * mu.powf(1.5);
            let s = s_shifted(rho, 4.0 * mu / l, mu).unwrap();
            if s > 0.0 {
                worst = worst.min(r_function(rho, mu, l).unwrap() / s);
            }
        }
        worst
    };
    let (fit, check) = (ratio(8), ratio(9));
    eprintln!("R/S((rho-2u)+) constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && fit.is_finite() && check >= 0.5 * fit);
}

#[test]
fn galerkin_free_and_constant() {
    let l = 1.2;
    let zero = PotentialGrid::zero(l, 16).unwrap();
    let spec = galerkin_spectrum(&zero, 100).unwrap();
    let exact: Vec<f64> = lowest_states(100)
        .iter()
        .map(|s| PI * PI / (l * l) * s.iter().map(|&x| (x * x) as f64).sum::<f64>())
        .collect();
    for (a, b) in spec.eigenvalues.iter().zip(&exact) {
        assert!((a - b).abs() <= 1e-10 * b);
    }
    let c = 7.5;
    let shifted = PotentialGrid::from_fn(l, 16, |_| -c).unwrap();
    let spec = galerkin_spectrum(&shifted, 100).unwrap();
    for (a, b) in spec.eigenvalues.iter().zip(&exact) {
        assert!((a - (b - c)).abs() <= 1e-10 * b);
    }
    // Modes the grid cannot resolve.
    assert!(matches!(
        galerkin_spectrum(&PotentialGrid::zero(l, 2).unwrap(), 100),
        Err(Error::Domain(_))
    ));
}

#[test]
fn galerkin_is_variational_and_converges() {
    let (v, _) = random_smooth_potential(1.0, 32, 4, 200.0, 10).unwrap();
    let sizes = [50, 100, 200, 400];
    let specs: Vec<GalerkinSpectrum> = sizes
        .iter()
        .map(|&b| galerkin_spectrum(&v, b).unwrap())
        .collect();
    for w in specs.windows(2) {
        for (a, b) in w[0].eigenvalues.iter().zip(&w[1].eigenvalues) {
            assert!(b <= &(a + 1e-9 * a.abs().max(1.0)), "{a} -> {b}");
        }
    }
    let n = 20;
    let e200 = specs[2].sum_lowest(n).unwrap();
    let e400 = specs[3].sum_lowest(n).unwrap();
    assert!((e200 - e400).abs() <= 0.01 * e400.abs(), "{e200} vs {e400}");
}

#[test]
fn lt_gap_ratio_is_bounded() {
    let zero = lt_gap_check(&PotentialGrid::zero(1.0, 16).unwrap(), 10, 100).unwrap();
    assert_eq!((zero.gap, zero.ratio), (0.0, 0.0));
    let ratios = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..25)
            .map(|i| {
                let n = rng.random_range(5..=50);
                let depth = log_uniform(&mut rng, 1.0, 1000.0);
                let (v, _) = random_smooth_potential(1.0, 24, 3, depth, seed * 1000 + i).unwrap();
                let r = lt_gap_check(&v, n, 300).unwrap();
                assert!(r.gap >= -1e-9 * r.e_free, "{r:?}");
                r.ratio
            })
            .fold(0.0, f64::max)
    };
    let (fit, check) = (ratios(11), ratios(12));
    eprintln!("Lieb-Thirring gap constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && check <= 2.0 * fit);
}

#[test]
fn potential_trace_chain_holds() {
    let ratios = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e1 = 3.0 * PI * PI;
        (0..15)
            .map(|i| {
                let mu = log_uniform(&mut rng, 1.0, 10.0) * e1;
                let depth = log_uniform(&mut rng, 1.0, 1000.0);
                let (v, _) = random_smooth_potential(1.0, 24, 3, depth, seed * 1000 + i).unwrap();
                let c = potential_lt_check(&v, mu, 300).unwrap();
                assert!(
                    c.middle <= 1e-9 * (1.0 + c.trace_free.abs() + c.rho0_v.abs()),
                    "{c:?}"
                );
                -c.middle / c.rhs
            })
            .fold(0.0, f64::max)
    };
    let (fit, check) = (ratios(13), ratios(14));
    eprintln!("potential Lieb-Thirring constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && check <= 2.0 * fit);
    let v = PotentialGrid::zero(1.0, 8).unwrap();
    assert!(matches!(
        potential_lt_check(&v, 10.0, 50),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn trace_inequality_on_random_admissible_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let e1 = 3.0 * PI * PI;
    for i in 0..100 {
        let mu = log_uniform(&mut rng, 1.0, 8.0) * e1;
        let size = rng.random_range(10..=60);
        let (q, _) = random_admissible(1.0, mu, size, 100 + i).unwrap();
        let c = thm_a1_check(&q, 1.0, 2).unwrap();
        assert!(c.lemma_holds(), "{c:?}");
        assert!(c.lemma_lhs >= 0.0);
    }
    let q = FiniteRankPerturbation::zero(1.0, 40.0, lowest_states(10)).unwrap();
    let c = thm_a1_check(&q, 1.0, 6).unwrap();
    assert_eq!((c.lhs, c.rhs_integral), (0.0, 0.0));
    // Q = Π⁺ on the ground state (above μ here would be fine, below it is not).
    let bad = FiniteRankPerturbation::new(1.0, 40.0, lowest_states(1), vec![1.0]);
    assert!(matches!(bad, Err(Error::Precondition(_))));
    assert!(matches!(thm_a1_check(&q, 1.0, 0), Err(Error::Domain(_))));
}

#[test]
fn positive_density_bound_has_a_uniform_constant() {
    let eta = 0.01;
    let ratios = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e1 = 3.0 * PI * PI;
        let mut worst = f64::INFINITY;
        let mut active = 0;
        for i in 0..20 {
            let mu = log_uniform(&mut rng, 1.0, 8.0) * e1;
            let (q, _) = random_admissible(1.0, mu, 40, seed * 100 + i).unwrap();
            let c = thm_a1_check(&q, eta, 10).unwrap();
            if c.rhs_integral > 0.0 {
                active += 1;
                worst = worst.min(c.lhs / c.rhs_integral);
            }
        }
        assert!(
            active >= 10,
            "only {active} perturbations reach the density threshold"
        );
        worst
    };
    let (fit, check) = (ratios(16), ratios(17));
    eprintln!("positive-density constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && fit.is_finite() && check >= 0.5 * fit);
}

#[test]
fn phi_sum_properties() {
    let l = 1.0;
    // μ − √μ/L below the lowest level leaves no terms.
    let mu: f64 = 30.0;
    assert!(mu - mu.sqrt() < 3.0 * PI * PI);
    assert_eq!(phi_sum([1.0, 2.0, 3.0], mu, l).unwrap(), 0.0);
    assert!(matches!(
        phi_sum([0.0; 3], 10.0, l),
        Err(Error::Precondition(_))
    ));
    let sup = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for mu in [100.0f64, 1000.0] {
            for _ in 0..40 {
                let r = 3.0 * mu.sqrt();
                let k = [
                    rng.random_range(-r..r),
                    rng.random_range(-r..r),
                    rng.random_range(-r..r),
                ];
                let phi = phi_sum(k, mu, l).unwrap();
                assert!(phi >= 0.0);
                worst = worst.max(phi / mu.sqrt());
            }
        }
        worst
    };
    let (fit, check) = (sup(18), sup(19));
    eprintln!("Phi/sqrt(mu) constant: fitted {fit:e}, fresh sweep {check:e}");
    assert!(fit > 0.0 && check <= 2.0 * fit);
}

#[test]
fn random_ensembles_are_reproducible() {
    let (a, ma) = random_smooth_potential(1.0, 8, 3, 10.0, 42).unwrap();
    let (b, mb) = random_smooth_potential(1.0, 8, 3, 10.0, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(ma, mb);
    let (qa, _) = random_admissible(1.0, 60.0, 20, 42).unwrap();
    let (qb, _) = random_admissible(1.0, 60.0, 20, 42).unwrap();
    assert_eq!(qa, qb);
}
