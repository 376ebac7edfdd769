use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mollifier η supported in the ε-ball, up to normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bump {
    /// exp(−1/(1 − |u/ε|²)).
    Standard,
    /// (1 − |u/ε|²)^k, only C^{k−1}.
    Polynomial(u32),
}

impl Bump {
    fn eval(self, u: [f64; 3], eps: f64) -> f64 {
        let t = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) / (eps * eps);
        if t >= 1.0 {
            return 0.0;
        }
        match self {
            Bump::Standard => (-1.0 / (1.0 - t)).exp(),
            Bump::Polynomial(k) => (1.0 - t).powi(k as i32),
        }
    }
}

/// Geometry of the cube decomposition B = (0, L)³ = ∪ B_i, B_i = (0, ℓ)³ + z_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub l: f64,
    pub ell: f64,
    pub epsilon: f64,
    pub bump: Bump,
    /// Grid nodes per ℓ.
    pub points_per_ell: usize,
}

impl PartitionSpec {
    pub fn new(l: f64, ell: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            l,
            ell,
            epsilon,
            bump: Bump::Standard,
            points_per_ell: 64,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell > 0.0 && self.l >= self.ell && self.l.is_finite()) {
            return Err(Error::domain(format!(
                "need 0 < ell <= L, got ell = {}, L = {}",
                self.ell, self.l
            )));
        }
        let ratio = self.l / self.ell;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::domain(format!("L/ell = {ratio} is not an integer")));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::domain(format!(
                "epsilon = {} is outside (0, 1/4)",
                self.epsilon
            )));
        }
        if let Bump::Polynomial(0) = self.bump {
            return Err(Error::domain("polynomial bump needs a positive power"));
        }
        if (self.epsilon * self.points_per_ell as f64) < 3.0 {
            return Err(Error::domain(format!(
                "{} points per ell leave fewer than 3 nodes inside the mollifier radius",
                self.points_per_ell
            )));
        }
        Ok(())
    }

    /// Cubes per axis, L/ℓ.
    pub fn cells_per_axis(&self) -> usize {
        (self.l / self.ell).round() as usize
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().pow(3)
    }

    pub fn spacing(&self) -> f64 {
        self.ell / self.points_per_ell as f64
    }
}

/// Masses of η over the cubes [a/r, (a+1)/r]×… for a ∈ [−E, E), with 3D prefix sums.
#[derive(Debug, Clone)]
pub(crate) struct BumpTable {
    e: i64,
    side: usize,
    prefix: Vec<f64>,
}

impl BumpTable {
    pub(crate) fn new(spec: &PartitionSpec) -> Self {
        let r = spec.points_per_ell as f64;
        let e = (spec.epsilon * r).ceil() as i64;
        let n = (2 * e) as usize;
        let gl = GaussLegendre::new(NonZeroUsize::new(8).unwrap());
        let rule: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        let masses: Vec<f64> = (0..n * n * n)
            .into_par_iter()
            .map(|idx| {
                let a = [
                    (idx / (n * n)) as i64 - e,
                    ((idx / n) % n) as i64 - e,
                    (idx % n) as i64 - e,
                ];
                let mut acc = 0.0;
                for &(x0, w0) in &rule {
                    for &(x1, w1) in &rule {
                        for &(x2, w2) in &rule {
                            let u = [
                                (a[0] as f64 + 0.5 + 0.5 * x0) / r,
                                (a[1] as f64 + 0.5 + 0.5 * x1) / r,
                                (a[2] as f64 + 0.5 + 0.5 * x2) / r,
                            ];
                            acc += w0 * w1 * w2 * spec.bump.eval(u, spec.epsilon);
                        }
                    }
                }
                acc
            })
            .collect();
        let total: f64 = masses.iter().sum();
        let side = n + 1;
        let mut prefix = vec![0.0; side * side * side];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let at = |a: usize, b: usize, c: usize| (a * side + b) * side + c;
                    prefix[at(i + 1, j + 1, k + 1)] = masses[(i * n + j) * n + k] / total
                        + prefix[at(i, j + 1, k + 1)]
                        + prefix[at(i + 1, j, k + 1)]
                        + prefix[at(i + 1, j + 1, k)]
                        - prefix[at(i, j, k + 1)]
                        - prefix[at(i, j + 1, k)]
                        - prefix[at(i + 1, j, k)]
                        + prefix[at(i, j, k)];
                }
            }
        }
        Self { e, side, prefix }
    }

    /// Mass of the cells a with lo ≤ a ≤ hi componentwise.
    pub(crate) fn box_sum(&self, lo: [i64; 3], hi: [i64; 3]) -> f64 {
        let mut l = [0usize; 3];
        let mut h = [0usize; 3];
        for j in 0..3 {
            let a = lo[j].max(-self.e);
            let b = hi[j].min(self.e - 1);
            if a > b {
                return 0.0;
            }
            l[j] = (a + self.e) as usize;
            h[j] = (b + self.e + 1) as usize;
        }
        let s = self.side;
        let p = |a: usize, b: usize, c: usize| self.prefix[(a * s + b) * s + c];
        p(h[0], h[1], h[2]) - p(l[0], h[1], h[2]) - p(h[0], l[1], h[2]) - p(h[0], h[1], l[2])
            + p(l[0], l[1], h[2])
            + p(l[0], h[1], l[2])
            + p(h[0], l[1], l[2])
            - p(l[0], l[1], l[2])
    }

    pub(crate) fn radius_nodes(&self) -> i64 {
        self.e
    }
}

/// Evaluates J_i at grid nodes x = k·ℓ/r, k ∈ ℤ³.
#[derive(Debug, Clone)]
pub struct PartitionField {
    spec: PartitionSpec,
    table: BumpTable,
    n: i64,
    r: i64,
}

impl PartitionField {
    pub fn new(spec: PartitionSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            table: BumpTable::new(&spec),
            n: spec.cells_per_axis() as i64,
            r: spec.points_per_ell as i64,
            spec,
        })
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    /// ∫_B η(ℓ⁻¹(x − y))dy / ℓ³ with η of unit mass.
    pub fn denominator(&self, k: [i64; 3]) -> f64 {
        let lo = k.map(|x| x - self.n * self.r);
        let hi = k.map(|x| x - 1);
        self.table.box_sum(lo, hi)
    }

    fn numerator(&self, cell: [i64; 3], k: [i64; 3]) -> f64 {
        let kappa = [
            k[0] - cell[0] * self.r,
            k[1] - cell[1] * self.r,
            k[2] - cell[2] * self.r,
        ];
        self.table
            .box_sum(kappa.map(|x| x - self.r), kappa.map(|x| x - 1))
    }

    /// J_i at node k for the cell with integer position `cell` (z_i = ℓ·cell).
    pub fn value(&self, cell: [i64; 3], k: [i64; 3]) -> Result<f64> {
        let d = self.denominator(k);
        if d <= 0.0 {
            return Err(Error::domain(format!(
                "node {k:?} is too far outside the box for the partition"
            )));
        }
        Ok((self.numerator(cell, k) / d).min(1.0).sqrt())
    }

    /// ∇J_i at node k by fourth-order central differences.
    pub fn gradient(&self, cell: [i64; 3], k: [i64; 3]) -> Result<[f64; 3]> {
        let h = self.spec.spacing();
        let mut g = [0.0; 3];
        for (j, gj) in g.iter_mut().enumerate() {
            let at = |d: i64| {
                let mut q = k;
                q[j] += d;
                self.value(cell, q)
            };
            *gj = (-at(2)? + 8.0 * at(1)? - 8.0 * at(-1)? + at(-2)?) / (12.0 * h);
        }
        Ok(g)
    }
}

/// Per-cell measurements of J_i on the closed box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub cell: [usize; 3],
    /// max |∇J_i|²·ℓ².
    pub grad_sq: f64,
    /// max |J_i − 1| over ℓ(ε, 1−ε)³ + z_i.
    pub inner_defect: f64,
    /// max J_i at nodes at distance ≥ εℓ from B_i.
    pub outer_value: f64,
}

/// J_i measured on the node grid of the closed box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub spec: PartitionSpec,
    pub cells: Vec<CellStats>,
    /// c_η = max_i max_x |∇J_i|²ℓ².
    pub c_eta: f64,
    /// max |Σ_i J_i² − 1| over interior nodes.
    pub closure_error: f64,
    /// max_x Σ_i |∇J_i(x)|².
    pub max_grad_sum: f64,
}

impl Partition {
    /// Relative spread (max − min)/max of the per-cell gradient maxima.
    pub fn c_eta_spread(&self) -> f64 {
        let lo = self
            .cells
            .iter()
            .map(|c| c.grad_sq)
            .fold(f64::INFINITY, f64::min);
        (self.c_eta - lo) / self.c_eta
    }
}

/// J_i on the nodes lo..=hi around one cube, flattened x-major.
struct LocalGrid {
    lo: [i64; 3],
    dims: [usize; 3],
    j: Vec<f64>,
}

impl LocalGrid {
    fn new(field: &PartitionField, cell: [i64; 3]) -> Result<Self> {
        let (r, top, e) = (field.r, field.n * field.r, field.table.radius_nodes());
        let lo = cell.map(|c| (c * r - e - 3).max(-2));
        let hi = cell.map(|c| ((c + 1) * r + e + 3).min(top + 2));
        let dims = [0, 1, 2].map(|j| (hi[j] - lo[j] + 1) as usize);
        let slabs: Result<Vec<Vec<f64>>> = (0..dims[0])
            .into_par_iter()
            .map(|a| {
                let mut out = Vec::with_capacity(dims[1] * dims[2]);
                for b in 0..dims[1] {
                    for c in 0..dims[2] {
                        let k = [lo[0] + a as i64, lo[1] + b as i64, lo[2] + c as i64];
                        out.push(field.value(cell, k)?);
                    }
                }
                Ok(out)
            })
            .collect();
        Ok(Self {
            lo,
            dims,
            j: slabs?.concat(),
        })
    }

    fn at(&self, k: [i64; 3]) -> f64 {
        let i = [0, 1, 2].map(|j| (k[j] - self.lo[j]) as usize);
        self.j[(i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]]
    }

    fn gradient(&self, k: [i64; 3], h: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (j, gj) in g.iter_mut().enumerate() {
            let f = |d: i64| {
                let mut q = k;
                q[j] += d;
                self.at(q)
            };
            *gj = (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h);
        }
        g
    }
}

/// Node indices per axis that realise every distinct value of a translation
/// invariant sum: both boundary layers, each at least one period wide.
fn representative_nodes(n: i64, r: i64, e: i64) -> Vec<Option<usize>> {
    let top = n * r;
    let band = r + e + 3;
    let mut next = 0;
    (0..=top)
        .map(|k| {
            (k <= band || k >= top - band).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// J_i for every cube, measured on a grid with `points_per_ell` nodes per ℓ.
pub fn build_partition(spec: PartitionSpec) -> Result<Partition> {
    let field = PartitionField::new(spec)?;
    let (n, r, e) = (field.n, field.r, field.table.radius_nodes());
    let top = n * r;
    let (eps, ell, h) = (spec.epsilon, spec.ell, spec.spacing());
    let axis = representative_nodes(n, r, e);
    let kept = axis.iter().flatten().count();
    // Σ_i J_i² and Σ_i |∇J_i|² on the representative nodes.
    let mut sq_sum = vec![0.0; kept * kept * kept];
    let mut grad_sum = vec![0.0; kept * kept * kept];
    let mut cells = Vec::new();
    for idx in 0..n * n * n {
        let cell = [idx / (n * n), (idx / n) % n, idx % n];
        let grid = LocalGrid::new(&field, cell)?;
        let lo = cell.map(|c| (c * r - e - 1).max(0));
        let hi = cell.map(|c| ((c + 1) * r + e + 1).min(top));
        let (mut grad_sq, mut inner, mut outer) = (0.0f64, 0.0f64, 0.0f64);
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    let k = [a, b, c];
                    let s = [0, 1, 2].map(|j| (k[j] - cell[j] * r) as f64 / r as f64);
                    let v = grid.at(k);
                    if s.iter().all(|&t| t > eps && t < 1.0 - eps) {
                        inner = inner.max((v - 1.0).abs());
                    }
                    let dist_sq: f64 = s.iter().map(|&t| (-t).max(t - 1.0).max(0.0).powi(2)).sum();
                    if dist_sq >= eps * eps {
                        outer = outer.max(v);
                    }
                    let g = grid.gradient(k, h);
                    let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
                    grad_sq = grad_sq.max(g2 * ell * ell);
                    if let (Some(i), Some(j), Some(l)) =
                        (axis[a as usize], axis[b as usize], axis[c as usize])
                    {
                        let at = (i * kept + j) * kept + l;
                        sq_sum[at] += v * v;
                        grad_sum[at] += g2;
                    }
                }
            }
        }
        cells.push(CellStats {
            cell: cell.map(|c| c as usize),
            grad_sq,
            inner_defect: inner,
            outer_value: outer,
        });
    }
    let c_eta = cells.iter().map(|s| s.grad_sq).fold(0.0, f64::max);
    // Interior nodes only: the partition covers B, not its boundary.
    let interior: Vec<Option<usize>> = axis
        .iter()
        .enumerate()
        .map(|(k, i)| if k == 0 || k as i64 == top { None } else { *i })
        .collect();
    let mut closure_error: f64 = 0.0;
    for i in interior.iter().flatten() {
        for j in interior.iter().flatten() {
            for l in interior.iter().flatten() {
                closure_error = closure_error.max((sq_sum[(i * kept + j) * kept + l] - 1.0).abs());
            }
        }
    }
    let max_grad_sum = grad_sum.iter().copied().fold(0.0, f64::max);
    Ok(Partition {
        spec,
        cells,
        c_eta,
        closure_error,
        max_grad_sum,
    })
}

/// The IMS localisation error bound and its grid-measured alternative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImsOverlap {
    pub c_eta: f64,
    /// 8c_η/ℓ².
    pub bound: f64,
    /// max_x Σ_i |∇J_i(x)|².
    pub measured: f64,
}

pub fn ims_overlap_bound(spec: PartitionSpec) -> Result<ImsOverlap> {
    let p = build_partition(spec)?;
    Ok(ImsOverlap {
        c_eta: p.c_eta,
        bound: 8.0 * p.c_eta / (spec.ell * spec.ell),
        measured: p.max_grad_sum,
    })
}
