use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::s_function;
use crate::numeric::NeumaierSum;

/// One eigenvalue p² = π²|n|²/L² of the Dirichlet Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    /// |n|².
    pub n_sq: u64,
    pub multiplicity: usize,
    /// Smallest n (lexicographic) with this |n|².
    pub representative: [u32; 3],
}

/// Lowest distinct eigenvalues of −Δ_L on a cube of side L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpectrum {
    pub l: f64,
    pub levels: Vec<Level>,
}

impl DirichletSpectrum {
    /// Number of states (with multiplicity) at or below `mu`.
    pub fn states_below(&self, mu: f64) -> usize {
        self.levels
            .iter()
            .filter(|l| l.value <= mu)
            .map(|l| l.multiplicity)
            .sum()
    }
}

pub(crate) fn check_side(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::domain(format!("box side must be positive, got {l}")));
    }
    Ok(())
}

/// Histogram of |n|² over n ∈ ℕ³ with |n|² ≤ k_max, with the lexicographically
/// smallest representative of each value.
fn histogram(k_max: u64) -> BTreeMap<u64, (usize, [u32; 3])> {
    let r = (k_max as f64).sqrt() as u64 + 1;
    let mut out: BTreeMap<u64, (usize, [u32; 3])> = BTreeMap::new();
    for a in 1..=r {
        for b in 1..=r {
            for c in 1..=r {
                let v = a * a + b * b + c * c;
                if v <= k_max {
                    out.entry(v)
                        .or_insert((0, [a as u32, b as u32, c as u32]))
                        .0 += 1;
                }
            }
        }
    }
    out
}

/// The `count` smallest distinct eigenvalues π²|n|²/L², n ∈ ℕ³, with multiplicity.
pub fn dirichlet_levels(l: f64, count: usize) -> Result<DirichletSpectrum> {
    check_side(l)?;
    if count == 0 {
        return Err(Error::domain("level count must be at least 1"));
    }
    let mut k_max = 16u64;
    loop {
        let h = histogram(k_max);
        // Every value ≤ k_max is complete once the enumeration covers the ball.
        if h.len() >= count {
            let scale = PI * PI / (l * l);
            let levels = h
                .into_iter()
                .take(count)
                .map(|(n_sq, (multiplicity, representative))| Level {
                    value: scale * n_sq as f64,
                    n_sq,
                    multiplicity,
                    representative,
                })
                .collect();
            return Ok(DirichletSpectrum { l, levels });
        }
        k_max *= 2;
    }
}

/// All states n ∈ ℕ³ ordered by (|n|², n), the first `count` of them.
pub fn lowest_states(count: usize) -> Vec<[u32; 3]> {
    if count == 0 {
        return Vec::new();
    }
    let mut k_max = 16u64;
    loop {
        let r = (k_max as f64).sqrt() as u32 + 1;
        let mut states = Vec::new();
        for a in 1..=r {
            for b in 1..=r {
                for c in 1..=r {
                    let v = (a * a + b * b + c * c) as u64;
                    if v <= k_max {
                        states.push((v, [a, b, c]));
                    }
                }
            }
        }
        if states.len() >= count {
            states.sort();
            return states.into_iter().take(count).map(|s| s.1).collect();
        }
        k_max *= 2;
    }
}

/// All states with π²|n|²/L² ≤ `mu`, ordered by (|n|², n).
pub fn states_up_to(l: f64, mu: f64) -> Vec<[u32; 3]> {
    let k_max = (mu * l * l / (PI * PI)).floor().max(0.0) as u64;
    let r = (k_max as f64).sqrt() as u32 + 1;
    let mut states = Vec::new();
    for a in 1..=r {
        for b in 1..=r {
            for c in 1..=r {
                let v = (a * a + b * b + c * c) as u64;
                if PI * PI * v as f64 / (l * l) <= mu {
                    states.push((v, [a, b, c]));
                }
            }
        }
    }
    states.sort();
    states.into_iter().map(|s| s.1).collect()
}

pub(crate) fn n_sq(n: [u32; 3]) -> u64 {
    n.iter().map(|&x| (x as u64) * (x as u64)).sum()
}

/// Sum of the lowest N eigenvalues in both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowestSum {
    /// Σ_{i≤N} e_i for −Δ_L.
    pub e_laplacian: f64,
    /// E^D_N for −½Δ, i.e. half of the above.
    pub e_dirichlet: f64,
    /// e_N, the N-th eigenvalue of −Δ_L.
    pub e_top: f64,
}

pub fn sum_lowest(l: f64, n: usize) -> Result<LowestSum> {
    check_side(l)?;
    if n == 0 {
        return Err(Error::domain("particle count must be at least 1"));
    }
    let scale = PI * PI / (l * l);
    let states = lowest_states(n);
    let total: NeumaierSum = states.iter().map(|&s| scale * n_sq(s) as f64).collect();
    let top = scale * n_sq(*states.last().unwrap()) as f64;
    Ok(LowestSum {
        e_laplacian: total.value(),
        e_dirichlet: 0.5 * total.value(),
        e_top: top,
    })
}

/// #{n ∈ ℕ³/2 : |n| < r} (open) or ≤ r (closed).
pub fn half_lattice_ball_count(r: f64, closed: bool) -> u64 {
    if !(r > 0.0) {
        return 0;
    }
    // n = m/2 with m ∈ ℕ³, so |m|² compared against 4r².
    let bound = 4.0 * r * r;
    let mmax = (2.0 * r).ceil() as u64 + 1;
    let mut count = 0;
    for a in 1..=mmax {
        for b in 1..=mmax {
            let ab = (a * a + b * b) as f64;
            if ab >= bound && !(closed && ab == bound) {
                break;
            }
            for c in 1..=mmax {
                let v = ab + (c * c) as f64;
                if v < bound || (closed && v == bound) {
                    count += 1;
                } else {
                    break;
                }
            }
        }
    }
    count
}

/// f(e) = (2/L)³·#{p ∈ πℕ³/L : |p² − μ| < e}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellCount {
    pub count: u64,
    pub value: f64,
}

pub fn shell_count_f(e: f64, mu: f64, l: f64) -> Result<ShellCount> {
    check_side(l)?;
    if !(e >= 0.0) || !(mu > 0.0) {
        return Err(Error::domain(format!(
            "shell count needs e >= 0 and mu > 0, got e = {e}, mu = {mu}"
        )));
    }
    let scale = PI * PI / (l * l);
    let nmax = (((mu + e) / scale).sqrt()).ceil() as u64 + 1;
    let mut count = 0;
    for a in 1..=nmax {
        for b in 1..=nmax {
            for c in 1..=nmax {
                let p2 = scale * (a * a + b * b + c * c) as f64;
                if (p2 - mu).abs() < e {
                    count += 1;
                }
            }
        }
    }
    Ok(ShellCount {
        count,
        value: (2.0 / l).powi(3) * count as f64,
    })
}

/// R(ρ) = ∫₀^∞(√ρ − √f(e))²₊de, summed exactly over the steps of f.
pub fn r_function(rho: f64, mu: f64, l: f64) -> Result<f64> {
    check_side(l)?;
    if !(rho >= 0.0) || !(mu > 0.0) {
        return Err(Error::domain(format!(
            "R needs rho >= 0 and mu > 0, got rho = {rho}, mu = {mu}"
        )));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let scale = PI * PI / (l * l);
    let unit = (2.0 / l).powi(3);
    let mut k_max = ((2.0 * mu / scale).ceil() as u64).max(16);
    loop {
        let h = histogram(k_max);
        // Level v enters f once e > |v − μ|; merge equal distances.
        let mut jumps: BTreeMap<u64, usize> = BTreeMap::new();
        for (&v, &(mult, _)) in &h {
            let d = (scale * v as f64 - mu).abs();
            *jumps.entry(d.to_bits()).or_default() += mult;
        }
        let horizon = scale * k_max as f64 - mu;
        let mut acc = NeumaierSum::new();
        let mut e_prev = 0.0;
        let mut f = 0.0;
        let sr = rho.sqrt();
        let mut done = false;
        for (bits, mult) in jumps {
            let e = f64::from_bits(bits);
            if e > horizon {
                break;
            }
            if f >= rho {
                done = true;
                break;
            }
            acc.add((sr - f64::sqrt(f)).powi(2) * (e - e_prev));
            e_prev = e;
            f += unit * mult as f64;
        }
        if done || f >= rho {
            return Ok(acc.value());
        }
        k_max *= 2;
    }
}

/// Φ(k) = L⁻³Σ (μ − q²)^{-1/2}((q − k)² − μ)^{-1/2} over q ∈ π(ℤ∖{0})³/L with
/// q² < μ − √μ/L and (q − k)² > μ + √μ/L.
pub fn phi_sum(k: [f64; 3], mu: f64, l: f64) -> Result<f64> {
    check_side(l)?;
    let e1 = 3.0 * PI * PI / (l * l);
    if !(mu >= e1) {
        return Err(Error::precondition(format!(
            "mu = {mu} is below the lowest Dirichlet level {e1}; use the standard Lieb-Thirring inequality there"
        )));
    }
    let lo = mu - mu.sqrt() / l;
    let hi = mu + mu.sqrt() / l;
    let step = PI / l;
    let nmax = (lo.max(0.0).sqrt() / step).ceil() as i64 + 1;
    let mut acc = NeumaierSum::new();
    for a in -nmax..=nmax {
        for b in -nmax..=nmax {
            for c in -nmax..=nmax {
                if a == 0 || b == 0 || c == 0 {
                    continue;
                }
                let q = [step * a as f64, step * b as f64, step * c as f64];
                let q2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
                if q2 >= lo {
                    continue;
                }
                let d = [q[0] - k[0], q[1] - k[1], q[2] - k[2]];
                let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                if d2 > hi {
                    acc.add(1.0 / ((mu - q2).sqrt() * (d2 - mu).sqrt()));
                }
            }
        }
    }
    Ok(acc.value() / (l * l * l))
}

/// S((ρ − 2u)₊) used in the lower bound on R.
pub fn s_shifted(rho: f64, u: f64, mu: f64) -> Result<f64> {
    s_function((rho - 2.0 * u).max(0.0), mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_levels_at_side_pi() {
        let s = dirichlet_levels(PI, 5).unwrap();
        let got: Vec<(u64, usize)> = s.levels.iter().map(|l| (l.n_sq, l.multiplicity)).collect();
        assert_eq!(got, vec![(3, 1), (6, 3), (9, 3), (11, 3), (12, 1)]);
        assert_eq!(s.levels[0].value, 3.0);
    }

    #[test]
    fn degenerate_cut_keeps_order() {
        let st = lowest_states(4);
        assert_eq!(st, vec![[1, 1, 1], [1, 1, 2], [1, 2, 1], [2, 1, 1]]);
    }

    #[test]
    fn ball_counts_at_small_radius() {
        // Points of ℕ³/2 with |n| < 1: m ∈ ℕ³ with |m|² < 4, i.e. (1,1,1).
        assert_eq!(half_lattice_ball_count(1.0, false), 1);
        // r = 3/2: the three permutations of (1,2,2) sit on the sphere.
        let open = half_lattice_ball_count(1.5, false);
        assert_eq!(half_lattice_ball_count(1.5, true), open + 3);
    }
}
