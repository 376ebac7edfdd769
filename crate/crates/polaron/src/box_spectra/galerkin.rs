use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::density::{rho0_grid, PotentialGrid};
use super::levels::{lowest_states, n_sq, states_up_to, sum_lowest};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Rayleigh-Ritz eigenvalues of −Δ_L + V in the lowest sine states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinSpectrum {
    /// Ascending; upper bounds to the true eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub basis_size: usize,
    /// Largest unperturbed level in the basis.
    pub basis_top: f64,
}

impl GalerkinSpectrum {
    pub fn sum_lowest(&self, n: usize) -> Result<f64> {
        if n > self.eigenvalues.len() {
            return Err(Error::precondition(format!(
                "asked for {n} eigenvalues from a basis of {}",
                self.eigenvalues.len()
            )));
        }
        Ok(self.eigenvalues[..n]
            .iter()
            .copied()
            .collect::<NeumaierSum>()
            .value())
    }
}

/// T(k) = (h³/L³)Σ_x V(x)Π_j cos(πk_j x_j/L) for 0 ≤ k_j ≤ kmax, index (k₁·K + k₂)·K + k₃.
fn cosine_transform(v: &PotentialGrid, kmax: usize) -> Vec<f64> {
    let m = v.m;
    let kk = kmax + 1;
    let c: Vec<Vec<f64>> = (0..kk)
        .map(|k| {
            (0..m)
                .map(|i| (PI * k as f64 * (i as f64 + 0.5) / m as f64).cos())
                .collect()
        })
        .collect();
    // Contract one axis at a time.
    let mut a = vec![0.0; m * m * kk];
    for i in 0..m {
        for j in 0..m {
            let row = &v.values[(i * m + j) * m..(i * m + j + 1) * m];
            for k in 0..kk {
                a[(i * m + j) * kk + k] = row.iter().zip(&c[k]).map(|(x, y)| x * y).sum();
            }
        }
    }
    let mut b = vec![0.0; m * kk * kk];
    for i in 0..m {
        for k2 in 0..kk {
            for k3 in 0..kk {
                b[(i * kk + k2) * kk + k3] =
                    (0..m).map(|j| a[(i * m + j) * kk + k3] * c[k2][j]).sum();
            }
        }
    }
    let scale = v.cell_volume() / (v.l * v.l * v.l);
    let mut t = vec![0.0; kk * kk * kk];
    for k1 in 0..kk {
        for k2 in 0..kk {
            for k3 in 0..kk {
                t[(k1 * kk + k2) * kk + k3] = scale
                    * (0..m)
                        .map(|i| b[(i * kk + k2) * kk + k3] * c[k1][i])
                        .sum::<f64>();
            }
        }
    }
    t
}

/// Matrix of −Δ_L + V in `basis`, using the grid quadrature for V.
pub(crate) fn hamiltonian(v: &PotentialGrid, basis: &[[u32; 3]]) -> Result<DMatrix<f64>> {
    let nmax = basis
        .iter()
        .flat_map(|s| s.iter())
        .copied()
        .max()
        .unwrap_or(1) as usize;
    if nmax >= v.m {
        return Err(Error::domain(format!(
            "grid of {} points per axis cannot resolve sine modes up to {nmax}",
            v.m
        )));
    }
    let kmax = 2 * nmax;
    let kk = kmax + 1;
    let t = cosine_transform(v, kmax);
    let scale = PI * PI / (v.l * v.l);
    let nb = basis.len();
    let mut h = DMatrix::zeros(nb, nb);
    for (ia, a) in basis.iter().enumerate() {
        for (ib, b) in basis.iter().enumerate().skip(ia) {
            // sin·sin = ½(cos(a−b) − cos(a+b)) per axis; the ½ and 2/L cancel into 1/L.
            let mut acc = 0.0;
            for sel in 0..8u32 {
                let mut idx = 0;
                let mut sign = 1.0;
                for j in 0..3 {
                    let k = if sel & (1 << j) == 0 {
                        (a[j] as i64 - b[j] as i64).unsigned_abs() as usize
                    } else {
                        sign = -sign;
                        (a[j] + b[j]) as usize
                    };
                    idx = idx * kk + k;
                }
                acc += sign * t[idx];
            }
            h[(ia, ib)] = acc;
            h[(ib, ia)] = acc;
        }
        h[(ia, ia)] += scale * n_sq(*a) as f64;
    }
    Ok(h)
}

pub(crate) fn eigenvalues(h: DMatrix<f64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    let eig = h
        .try_symmetric_eigen(1e-14, 10_000 * n.max(1))
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

pub fn galerkin_spectrum(v: &PotentialGrid, basis_size: usize) -> Result<GalerkinSpectrum> {
    if basis_size == 0 {
        return Err(Error::domain("basis size must be positive"));
    }
    let basis = lowest_states(basis_size);
    let h = hamiltonian(v, &basis)?;
    let top = PI * PI / (v.l * v.l) * n_sq(*basis.last().unwrap()) as f64;
    Ok(GalerkinSpectrum {
        eigenvalues: eigenvalues(h)?,
        basis_size,
        basis_top: top,
    })
}

/// E_N − E^V_N against ∫(N^{1/3}/L·|V|² + |V|^{5/2} + N/L³·|V|), both for −Δ_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtGap {
    pub gap: f64,
    pub rhs: f64,
    /// gap/rhs, and 0 when both vanish.
    pub ratio: f64,
    pub e_free: f64,
    pub e_potential: f64,
}

pub fn lt_gap_check(v: &PotentialGrid, n: usize, basis_size: usize) -> Result<LtGap> {
    if basis_size < n {
        return Err(Error::precondition(format!(
            "basis of {basis_size} states cannot hold N = {n}"
        )));
    }
    let l = v.l;
    let nf = n as f64;
    let e_free = sum_lowest(l, n)?.e_laplacian;
    let e_potential = galerkin_spectrum(v, basis_size)?.sum_lowest(n)?;
    let gap = e_free - e_potential;
    let rhs = nf.cbrt() / l * v.integral_pow(2.0)
        + v.integral_pow(2.5)
        + nf / (l * l * l) * v.integral_pow(1.0);
    let ratio = if rhs == 0.0 { 0.0 } else { gap / rhs };
    Ok(LtGap {
        gap,
        rhs,
        ratio,
        e_free,
        e_potential,
    })
}

/// Terms of the potential form of the box Lieb-Thirring inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialLtCheck {
    /// tr(−Δ_L + V − μ)₋ from the Galerkin eigenvalues.
    pub trace_v: f64,
    /// tr(−Δ_L − μ)₋, exact.
    pub trace_free: f64,
    /// ∫ρ₀V on the potential grid.
    pub rho0_v: f64,
    /// −tr(−Δ+V−μ)₋ + tr(−Δ−μ)₋ − ∫ρ₀V.
    pub middle: f64,
    /// ∫(μ^{1/2}|V|² + |V|^{5/2} + μ|V|/L).
    pub rhs: f64,
    /// Largest Galerkin eigenvalue; levels above it are not represented.
    pub basis_top: f64,
}

pub fn potential_lt_check(
    v: &PotentialGrid,
    mu: f64,
    basis_size: usize,
) -> Result<PotentialLtCheck> {
    let l = v.l;
    let e1 = 3.0 * PI * PI / (l * l);
    if !(mu >= e1) {
        return Err(Error::precondition(format!(
            "mu = {mu} is below the lowest Dirichlet level {e1}; use the standard Lieb-Thirring inequality there"
        )));
    }
    let below = states_up_to(l, mu);
    if basis_size < below.len() {
        return Err(Error::precondition(format!(
            "basis of {basis_size} states misses some of the {} levels below mu",
            below.len()
        )));
    }
    let spec = galerkin_spectrum(v, basis_size)?;
    let trace_v: NeumaierSum = spec
        .eigenvalues
        .iter()
        .map(|&e| (mu - e).max(0.0))
        .collect();
    let scale = PI * PI / (l * l);
    let trace_free: NeumaierSum = below.iter().map(|&s| mu - scale * n_sq(s) as f64).collect();
    let rho0_v = v.integral_against(&rho0_grid(l, mu, v.m)?);
    let middle = -trace_v.value() + trace_free.value() - rho0_v;
    let rhs = mu.sqrt() * v.integral_pow(2.0) + v.integral_pow(2.5) + mu / l * v.integral_pow(1.0);
    Ok(PotentialLtCheck {
        trace_v: trace_v.value(),
        trace_free: trace_free.value(),
        rho0_v,
        middle,
        rhs,
        basis_top: *spec.eigenvalues.last().unwrap(),
    })
}
