use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::mode;
use super::galerkin::eigenvalues;
use super::levels::{check_side, lowest_states, n_sq};
use crate::error::{Error, Result};
use crate::kernels::s_function;
use crate::numeric::NeumaierSum;

/// Q on the span of `basis` in the sine eigenbasis; zero on the complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankPerturbation {
    pub l: f64,
    pub mu: f64,
    pub basis: Vec<[u32; 3]>,
    /// Row-major, basis.len()² entries.
    pub matrix: Vec<f64>,
}

const ADMISSIBLE_TOL: f64 = 1e-10;

impl FiniteRankPerturbation {
    pub fn new(l: f64, mu: f64, basis: Vec<[u32; 3]>, matrix: Vec<f64>) -> Result<Self> {
        check_side(l)?;
        let n = basis.len();
        if matrix.len() != n * n {
            return Err(Error::domain(format!(
                "matrix has {} entries for a basis of {n}",
                matrix.len()
            )));
        }
        let q = Self {
            l,
            mu,
            basis,
            matrix,
        };
        q.check_admissible()?;
        Ok(q)
    }

    pub fn zero(l: f64, mu: f64, basis: Vec<[u32; 3]>) -> Result<Self> {
        let n = basis.len();
        Self::new(l, mu, basis, vec![0.0; n * n])
    }

    pub fn level(&self, i: usize) -> f64 {
        PI * PI / (self.l * self.l) * n_sq(self.basis[i]) as f64
    }

    fn fermi_sea(&self) -> Vec<f64> {
        (0..self.basis.len())
            .map(|i| if self.level(i) <= self.mu { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        let n = self.basis.len();
        DMatrix::from_row_slice(n, n, &self.matrix)
    }

    /// Symmetry and −Π⁻ ≤ Q ≤ 1−Π⁻, i.e. 0 ≤ Q + Π⁻ ≤ 1.
    pub fn check_admissible(&self) -> Result<()> {
        let n = self.basis.len();
        if self.matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::precondition("Q has non-finite entries"));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (self.matrix[i * n + j], self.matrix[j * n + i]);
                if (a - b).abs() > ADMISSIBLE_TOL * (1.0 + a.abs()) {
                    return Err(Error::precondition(format!(
                        "Q is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if n == 0 {
            return Ok(());
        }
        let mut g = self.as_matrix();
        for (i, p) in self.fermi_sea().into_iter().enumerate() {
            g[(i, i)] += p;
        }
        let ev = eigenvalues(g)?;
        let (lo, hi) = (ev[0], ev[n - 1]);
        if lo < -ADMISSIBLE_TOL || hi > 1.0 + ADMISSIBLE_TOL {
            return Err(Error::precondition(format!(
                "Q + Pi^- has spectrum in [{lo}, {hi}], outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// ρ_Q(x) = Σ_ab Q_ab φ_a(x)φ_b(x).
    pub fn density(&self, x: [f64; 3]) -> f64 {
        let phi: Vec<f64> = self
            .basis
            .iter()
            .map(|s| (0..3).map(|j| mode(s[j], x[j], self.l)).product())
            .collect();
        let n = phi.len();
        let mut acc = NeumaierSum::default();
        for a in 0..n {
            let row: f64 = (0..n).map(|b| self.matrix[a * n + b] * phi[b]).sum();
            acc.add(phi[a] * row);
        }
        acc.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationManifest {
    pub seed: u64,
    pub l: f64,
    pub mu: f64,
    pub basis_size: usize,
    pub scale: f64,
}

/// Π⁻ + t·G with G a symmetric Gaussian matrix, clipped to [0, 1] spectrally, minus Π⁻.
/// The strength t is drawn log-uniformly from [10⁻², 1].
pub fn random_admissible(
    l: f64,
    mu: f64,
    basis_size: usize,
    seed: u64,
) -> Result<(FiniteRankPerturbation, PerturbationManifest)> {
    check_side(l)?;
    if basis_size == 0 {
        return Err(Error::domain("basis size must be positive"));
    }
    let basis = lowest_states(basis_size);
    let n = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.01f64 * 100f64.powf(rng.random::<f64>());
    let sea: Vec<f64> = basis
        .iter()
        .map(|&s| {
            if PI * PI / (l * l) * n_sq(s) as f64 <= mu {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let g: f64 = rng.sample(StandardNormal);
            let v = scale * g / (n as f64).sqrt();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a[(i, i)] += sea[i];
    }
    let eig = a.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|x| x.clamp(0.0, 1.0));
    let gamma = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // Symmetrise to remove rounding asymmetry.
            matrix[i * n + j] =
                0.5 * (gamma[(i, j)] + gamma[(j, i)]) - if i == j { sea[i] } else { 0.0 };
        }
    }
    let q = FiniteRankPerturbation::new(l, mu, basis, matrix)?;
    Ok((
        q,
        PerturbationManifest {
            seed,
            l,
            mu,
            basis_size,
            scale,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThmA1Check {
    /// tr(−Δ_L − μ)Q.
    pub lhs: f64,
    /// tr(|−Δ_L − μ|Q²).
    pub lemma_lhs: f64,
    /// ∫S((|ρ_Q| − ημ/L)₊) on the midpoint grid.
    pub rhs_integral: f64,
    pub eta: f64,
    pub grid: usize,
}

impl ThmA1Check {
    pub fn lemma_holds(&self) -> bool {
        self.lemma_lhs <= self.lhs + 1e-10 * (1.0 + self.lhs.abs())
    }
}

pub fn thm_a1_check(q: &FiniteRankPerturbation, eta: f64, grid: usize) -> Result<ThmA1Check> {
    let (l, mu) = (q.l, q.mu);
    let e1 = 3.0 * PI * PI / (l * l);
    if !(mu >= e1) {
        return Err(Error::precondition(format!(
            "mu = {mu} is below the lowest Dirichlet level {e1}; use the standard Lieb-Thirring inequality there"
        )));
    }
    if !(eta >= 0.0) || grid == 0 {
        return Err(Error::domain("need eta >= 0 and a non-empty grid"));
    }
    q.check_admissible()?;
    let n = q.basis.len();
    let d: Vec<f64> = (0..n).map(|i| q.level(i) - mu).collect();
    let lhs: NeumaierSum = (0..n).map(|i| d[i] * q.matrix[i * n + i]).collect();
    // (Q²)_aa = Σ_b Q_ab².
    let lemma: NeumaierSum = (0..n)
        .map(|a| d[a].abs() * (0..n).map(|b| q.matrix[a * n + b].powi(2)).sum::<f64>())
        .collect();
    let h = l / grid as f64;
    let cut = eta * mu / l;
    let slices: Result<Vec<f64>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut acc = NeumaierSum::default();
            for j in 0..grid {
                for k in 0..grid {
                    let x = [
                        (i as f64 + 0.5) * h,
                        (j as f64 + 0.5) * h,
                        (k as f64 + 0.5) * h,
                    ];
                    let r = (q.density(x).abs() - cut).max(0.0);
                    acc.add(s_function(r, mu)?);
                }
            }
            Ok(acc.value())
        })
        .collect();
    let rhs: NeumaierSum = slices?.into_iter().collect();
    Ok(ThmA1Check {
        lhs: lhs.value(),
        lemma_lhs: lemma.value(),
        rhs_integral: rhs.value() * h * h * h,
        eta,
        grid,
    })
}
