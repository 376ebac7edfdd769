use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer coordinates of a lattice momentum in units of 2π/ℓ.
pub type Triple = [i64; 3];
/// The N momentum arguments of ξ̂: the pair slot first, then k̂.
pub type LatticeTuple = Vec<Triple>;

/// Finitely supported ξ̂ on 𝕃^N.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularAmplitude {
    n: usize,
    support: BTreeMap<LatticeTuple, Complex64>,
    antisymmetric: bool,
}

impl SingularAmplitude {
    pub fn new(n: usize, antisymmetric: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("amplitude needs at least one particle"));
        }
        Ok(Self {
            n,
            support: BTreeMap::new(),
            antisymmetric,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.antisymmetric
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Support points in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&LatticeTuple, &Complex64)> {
        self.support.iter()
    }

    pub fn get(&self, key: &[Triple]) -> Complex64 {
        self.support.get(key).copied().unwrap_or_default()
    }

    /// Sets one amplitude without symmetrising.
    pub fn insert(&mut self, key: LatticeTuple, value: Complex64) -> Result<()> {
        self.check_key(&key)?;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        self.support.insert(key, value);
        Ok(())
    }

    /// Adds `value` at `key` and, for the antisymmetric flag, the signed
    /// copies at every permutation of the last N−1 slots.
    pub fn add_antisymmetrised(&mut self, key: LatticeTuple, value: Complex64) -> Result<()> {
        self.check_key(&key)?;
        if !self.antisymmetric {
            *self.support.entry(key).or_default() += value;
            return Ok(());
        }
        let rest = &key[1..];
        for i in 0..rest.len() {
            for j in i + 1..rest.len() {
                if rest[i] == rest[j] {
                    return Err(Error::domain(
                        "antisymmetric amplitude cannot repeat a momentum",
                    ));
                }
            }
        }
        for (perm, sign) in permutations(rest.len()) {
            let mut k = Vec::with_capacity(self.n);
            k.push(key[0]);
            k.extend(perm.iter().map(|&p| rest[p]));
            *self.support.entry(k).or_default() += value * sign;
        }
        Ok(())
    }

    fn check_key(&self, key: &[Triple]) -> Result<()> {
        if key.len() != self.n {
            return Err(Error::domain(format!(
                "expected {} momenta, got {}",
                self.n,
                key.len()
            )));
        }
        Ok(())
    }

    /// Verifies the sign change under every transposition of the last
    /// N−1 slots, on every support point.
    pub fn check_antisymmetry(&self, tol: f64) -> Result<()> {
        for (key, &v) in &self.support {
            for i in 1..self.n {
                for j in i + 1..self.n {
                    let mut swapped = key.clone();
                    swapped.swap(i, j);
                    let w = self.get(&swapped);
                    if (v + w).norm() > tol * v.norm().max(w.norm()).max(f64::MIN_POSITIVE) {
                        return Err(Error::precondition(format!(
                            "amplitude at {key:?} is not odd under swapping slots {i} and {j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Σ|ξ̂|² without the lattice measure.
    pub fn sum_sq(&self) -> f64 {
        self.support
            .values()
            .map(|v| v.norm_sqr())
            .collect::<crate::numeric::NeumaierSum>()
            .value()
    }

    /// ‖ξ‖² = (2π/ℓ)^{3N}·Σ|ξ̂|².
    pub fn norm_sq(&self, ell: f64) -> f64 {
        measure(self.n, ell) * self.sum_sq()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.support.values_mut() {
            *v *= c;
        }
        out
    }

    /// Same amplitude with slots 1..N relabelled by `perm` and multiplied by `sign`.
    pub fn relabelled(&self, perm: &[usize], sign: f64) -> Result<Self> {
        if perm.len() != self.n - 1 {
            return Err(Error::domain("permutation must act on the last N-1 slots"));
        }
        let mut out = Self {
            n: self.n,
            support: BTreeMap::new(),
            antisymmetric: self.antisymmetric,
        };
        for (key, &v) in &self.support {
            let mut k = Vec::with_capacity(self.n);
            k.push(key[0]);
            k.extend(perm.iter().map(|&p| key[1 + p]));
            out.support.insert(k, v * sign);
        }
        Ok(out)
    }
}

/// (2π/ℓ)^{3n}.
pub(crate) fn measure(n: usize, ell: f64) -> f64 {
    (2.0 * std::f64::consts::PI / ell).powi(3 * n as i32)
}

/// All permutations of 0..n with their signs, in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if left.is_empty() {
            let mut inv = 0;
            for i in 0..prefix.len() {
                for j in i + 1..prefix.len() {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for idx in 0..left.len() {
            let v = left.remove(idx);
            prefix.push(v);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(idx, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Seed and shape of a random amplitude, written next to results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub support_radius: i64,
    pub draws: usize,
    pub support_size: usize,
    pub antisymmetric: bool,
}

/// Random fermionic ξ̂: `draws` antisymmetrised point masses with momenta in
/// the cube of half-width `radius` and complex amplitudes uniform in the unit square.
pub fn random_fermionic(
    n: usize,
    radius: i64,
    draws: usize,
    seed: u64,
) -> Result<(SingularAmplitude, SampleManifest)> {
    if radius < 0 {
        return Err(Error::domain("support radius must be non-negative"));
    }
    let side = (2 * radius + 1).pow(3) as usize;
    if n > side {
        return Err(Error::domain(format!(
            "cannot place {} distinct momenta in a cube of {side} points",
            n - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi = SingularAmplitude::new(n, true)?;
    let point = |rng: &mut ChaCha8Rng| -> Triple {
        [
            rng.random_range(-radius..=radius),
            rng.random_range(-radius..=radius),
            rng.random_range(-radius..=radius),
        ]
    };
    for _ in 0..draws {
        let mut key = vec![point(&mut rng)];
        while key.len() < n {
            let p = point(&mut rng);
            if !key[1..].contains(&p) {
                key.push(p);
            }
        }
        let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        xi.add_antisymmetrised(key, v)?;
    }
    let manifest = SampleManifest {
        seed,
        n,
        support_radius: radius,
        draws,
        support_size: xi.len(),
        antisymmetric: true,
    };
    Ok((xi, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], (vec![0, 1, 2], 1.0));
        assert_eq!(p[1], (vec![0, 2, 1], -1.0));
        assert_eq!(p.iter().map(|x| x.1).sum::<f64>(), 0.0);
    }

    #[test]
    fn random_amplitude_is_antisymmetric() {
        let (xi, m) = random_fermionic(4, 2, 10, 5).unwrap();
        xi.check_antisymmetry(1e-14).unwrap();
        assert_eq!(m.support_size, xi.len());
        assert!(xi.norm_sq(1.0) > 0.0);
    }

    #[test]
    fn broken_antisymmetry_is_reported() {
        let mut xi = SingularAmplitude::new(3, true).unwrap();
        xi.insert(
            vec![[0, 0, 0], [1, 0, 0], [0, 1, 0]],
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        assert!(xi.check_antisymmetry(1e-12).is_err());
    }
}
