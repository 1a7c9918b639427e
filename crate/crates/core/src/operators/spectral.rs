//! Tensor eigenbasis of the discrete Laplacian and the sign split of
//! `B(., ., lambda)`.
//!
//! Neumann modes are `cos(k pi x / L)` for `k = 0..n-1`, Dirichlet modes are
//! `sin(k pi x / L)` for `k = 1..n-2`. Both families are orthogonal for the
//! trapezoid weights, so forward and inverse transforms are dense per-axis
//! matrix products.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Boundary, DomainSpec, Field, Grid};

#[derive(Debug)]
struct AxisModes {
    n: usize,
    m: usize,
    eigenvalues: Vec<f64>,
    continuum: Vec<f64>,
    /// `m x n`, entry `(k, i)` is `w_i phi_k(x_i)`
    analysis: Vec<f64>,
    /// `n x m`, entry `(i, k)` is `phi_k(x_i)`
    synthesis: Vec<f64>,
}

impl AxisModes {
    fn new(n: usize, length: f64, boundary: Boundary) -> Self {
        let h = length / (n - 1) as f64;
        let ks: Vec<usize> = match boundary {
            Boundary::Neumann => (0..n).collect(),
            Boundary::Dirichlet => (1..n - 1).collect(),
        };
        let m = ks.len();
        let mut analysis = vec![0.0; m * n];
        let mut synthesis = vec![0.0; n * m];
        let mut eigenvalues = Vec::with_capacity(m);
        let mut continuum = Vec::with_capacity(m);
        for (row, &k) in ks.iter().enumerate() {
            let theta = k as f64 * PI / (n - 1) as f64;
            eigenvalues.push(2.0 / (h * h) * (1.0 - theta.cos()));
            continuum.push((k as f64 * PI / length).powi(2));
            let norm = match boundary {
                Boundary::Neumann if k == 0 || k == n - 1 => (1.0 / length).sqrt(),
                _ => (2.0 / length).sqrt(),
            };
            for i in 0..n {
                let arg = theta * i as f64;
                let val = match boundary {
                    Boundary::Neumann => norm * arg.cos(),
                    Boundary::Dirichlet => {
                        if i == 0 || i == n - 1 {
                            0.0
                        } else {
                            norm * arg.sin()
                        }
                    }
                };
                let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                analysis[row * n + i] = w * val;
                synthesis[i * m + row] = val;
            }
        }
        AxisModes {
            n,
            m,
            eigenvalues,
            continuum,
            analysis,
            synthesis,
        }
    }
}

/// Applies an `(rows x cols)` matrix along `axis` of a row-major tensor whose
/// extent along that axis is `cols`.
fn apply_axis(src: &[f64], shape: &[usize], axis: usize, mat: &[f64], rows: usize) -> Vec<f64> {
    let cols = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        let src_block = &src[o * cols * inner..(o + 1) * cols * inner];
        let dst_block = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for r in 0..rows {
            let dst = &mut dst_block[r * inner..(r + 1) * inner];
            let mrow = &mat[r * cols..(r + 1) * cols];
            for (c, &coef) in mrow.iter().enumerate() {
                if coef == 0.0 {
                    continue;
                }
                let s = &src_block[c * inner..(c + 1) * inner];
                for (d, x) in dst.iter_mut().zip(s) {
                    *d += coef * x;
                }
            }
        }
    }
    out
}

/// Sorted discrete eigenpairs of `-Delta_h` on a grid.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    inner: Arc<Transform>,
    /// flat mode indices in ascending eigenvalue order, truncated to `count`
    order: Vec<usize>,
}

#[derive(Debug)]
struct Transform {
    grid: Arc<Grid>,
    axes: Vec<AxisModes>,
    mode_shape: Vec<usize>,
    mode_strides: Vec<usize>,
    eigenvalues: Vec<f64>,
    continuum: Vec<f64>,
}

impl Transform {
    fn new(grid: &Arc<Grid>) -> Self {
        let dom = grid.domain();
        let axes: Vec<AxisModes> = grid
            .nodes_per_axis()
            .iter()
            .zip(dom.side_lengths())
            .map(|(&n, &l)| AxisModes::new(n, l, dom.boundary()))
            .collect();
        let mode_shape: Vec<usize> = axes.iter().map(|a| a.m).collect();
        let dim = mode_shape.len();
        let mut mode_strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            mode_strides[a] = mode_strides[a + 1] * mode_shape[a + 1];
        }
        let total: usize = mode_shape.iter().product();
        let mut eigenvalues = vec![0.0; total];
        let mut continuum = vec![0.0; total];
        for k in 0..total {
            for a in 0..dim {
                let i = (k / mode_strides[a]) % mode_shape[a];
                eigenvalues[k] += axes[a].eigenvalues[i];
                continuum[k] += axes[a].continuum[i];
            }
        }
        Transform {
            grid: grid.clone(),
            axes,
            mode_shape,
            mode_strides,
            eigenvalues,
            continuum,
        }
    }

    fn forward(&self, f: &[f64]) -> Vec<f64> {
        let mut shape = self.grid.nodes_per_axis().to_vec();
        let mut data = f.to_vec();
        for (a, ax) in self.axes.iter().enumerate() {
            data = apply_axis(&data, &shape, a, &ax.analysis, ax.m);
            shape[a] = ax.m;
        }
        data
    }

    fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let mut shape = self.mode_shape.clone();
        let mut data = c.to_vec();
        for (a, ax) in self.axes.iter().enumerate() {
            data = apply_axis(&data, &shape, a, &ax.synthesis, ax.n);
            shape[a] = ax.n;
        }
        data
    }

    fn eigenfield(&self, flat_mode: usize) -> Vec<f64> {
        let dim = self.axes.len();
        let ks: Vec<usize> = (0..dim)
            .map(|a| (flat_mode / self.mode_strides[a]) % self.mode_shape[a])
            .collect();
        let mut idx = vec![0usize; dim];
        (0..self.grid.len())
            .map(|p| {
                self.grid.multi_index(p, &mut idx);
                (0..dim)
                    .map(|a| self.axes[a].synthesis[idx[a] * self.axes[a].m + ks[a]])
                    .product()
            })
            .collect()
    }
}

impl SpectralBasis {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.inner.grid
    }

    pub fn boundary(&self) -> Boundary {
        self.inner.grid.boundary()
    }

    /// Number of modes retained.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Number of modes the grid carries.
    pub fn total_modes(&self) -> usize {
        self.inner.eigenvalues.len()
    }

    /// `mu_j` in ascending order (0-based).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.inner.eigenvalues[self.order[j]]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.order.iter().map(|&k| self.inner.eigenvalues[k]).collect()
    }

    /// Continuum box eigenvalue `pi^2 sum k_i^2 / L_i^2` of the same mode.
    pub fn continuum_eigenvalue(&self, j: usize) -> f64 {
        self.inner.continuum[self.order[j]]
    }

    /// Per-axis wave numbers of mode `j`.
    pub fn mode_index(&self, j: usize) -> Vec<usize> {
        let t = &self.inner;
        let offset = usize::from(self.boundary() == Boundary::Dirichlet);
        (0..t.axes.len())
            .map(|a| (self.order[j] / t.mode_strides[a]) % t.mode_shape[a] + offset)
            .collect()
    }

    /// L^2-normalized eigenfield of mode `j`.
    pub fn eigenfield(&self, j: usize) -> Field {
        Field::from_raw(self.grid().clone(), self.eigenfield_values(j))
    }

    pub(crate) fn eigenfield_values(&self, j: usize) -> Vec<f64> {
        self.inner.eigenfield(self.order[j])
    }

    /// Coefficients `<f, phi_k>` for every mode of the grid, in flat mode order.
    pub(crate) fn analyze(&self, f: &[f64]) -> Vec<f64> {
        self.inner.forward(f)
    }

    /// Coefficients of `f` on the retained modes, in ascending eigenvalue order.
    pub fn coefficients(&self, f: &Field) -> Vec<f64> {
        let all = self.analyze(f.values());
        self.order.iter().map(|&k| all[k]).collect()
    }

    /// Solves `(-Delta_h + shift) g = f` by diagonal division.
    pub(crate) fn precondition_slice(&self, f: &[f64], shift: f64) -> Vec<f64> {
        let mut c = self.inner.forward(f);
        for (x, mu) in c.iter_mut().zip(&self.inner.eigenvalues) {
            *x /= mu + shift;
        }
        self.inner.inverse(&c)
    }

    pub fn precondition(&self, f: &Field, shift: f64) -> Result<Field> {
        f.same_grid(&Field::zeros(self.grid()))?;
        if !(shift > 0.0) {
            return Err(Error::InvalidParams(format!("shift must be positive, got {shift}")));
        }
        Ok(Field::from_raw(
            self.grid().clone(),
            self.precondition_slice(f.values(), shift),
        ))
    }
}

/// The first `count` eigenpairs (with multiplicity) of `-Delta_h`.
pub fn eigenbasis(grid: &Arc<Grid>, count: usize) -> Result<SpectralBasis> {
    basis_from(Transform::new(grid), Some(count))
}

fn basis_from(t: Transform, count: Option<usize>) -> Result<SpectralBasis> {
    let total = t.eigenvalues.len();
    let count = count.unwrap_or(total);
    if count > total {
        return Err(Error::Capacity {
            requested: count,
            available: total,
        });
    }
    let mut order: Vec<usize> = (0..total).collect();
    // stable sort keeps lexicographic mode order inside degenerate eigenvalues
    order.sort_by(|&a, &b| t.eigenvalues[a].total_cmp(&t.eigenvalues[b]));
    order.truncate(count);
    Ok(SpectralBasis {
        inner: Arc::new(t),
        order,
    })
}

/// Complete eigenbasis of the grid.
pub fn full_eigenbasis(grid: &Arc<Grid>) -> SpectralBasis {
    basis_from(Transform::new(grid), None).expect("count equals total")
}

/// Convenience wrapper building a throwaway basis.
pub fn precondition(f: &Field, shift: f64) -> Result<Field> {
    full_eigenbasis(f.grid()).precondition(f, shift)
}

/// Index sets `K-`, `K0` of modes where `mu_k + lambda` is negative or zero.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    pub lambda: f64,
    pub tol_zero: f64,
    /// positions in the basis order
    pub minus: Vec<usize>,
    pub zero: Vec<usize>,
    /// `minus` followed by `zero`, as nodal eigenfields
    tilde: Vec<Vec<f64>>,
    grid: Arc<Grid>,
}

impl SubspaceSplit {
    /// `dim H~ = |K-| + |K0|`.
    pub fn tilde_dim(&self) -> usize {
        self.tilde.len()
    }

    pub fn is_resonant(&self) -> bool {
        !self.zero.is_empty()
    }

    pub(crate) fn tilde_fields(&self) -> &[Vec<f64>] {
        &self.tilde
    }

    pub(crate) fn tilde_coefficients(&self, f: &[f64]) -> Vec<f64> {
        self.tilde.iter().map(|phi| self.grid.inner_slice(f, phi)).collect()
    }

    pub(crate) fn tilde_part(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for phi in &self.tilde {
            let c = self.grid.inner_slice(f, phi);
            for (o, p) in out.iter_mut().zip(phi) {
                *o += c * p;
            }
        }
        out
    }

    pub(crate) fn plus_part(&self, f: &[f64]) -> Vec<f64> {
        let t = self.tilde_part(f);
        f.iter().zip(&t).map(|(a, b)| a - b).collect()
    }
}

/// Splits the spectrum by the sign of `mu_k + lambda`.
pub fn split(basis: &SpectralBasis, lambda: f64) -> Result<SubspaceSplit> {
    let tol_zero = 1e-9 * (1.0 + lambda.abs());
    let mut minus = Vec::new();
    let mut zero = Vec::new();
    let mut covered = false;
    for j in 0..basis.len() {
        let s = basis.eigenvalue(j) + lambda;
        if s < -tol_zero {
            minus.push(j);
        } else if s.abs() <= tol_zero {
            zero.push(j);
        } else {
            covered = true;
            break;
        }
    }
    if !covered && basis.len() < basis.total_modes() {
        return Err(Error::InsufficientBasis {
            lambda,
            last: basis.eigenvalue(basis.len().saturating_sub(1)),
        });
    }
    let tilde = minus
        .iter()
        .chain(&zero)
        .map(|&j| basis.eigenfield_values(j))
        .collect();
    Ok(SubspaceSplit {
        lambda,
        tol_zero,
        minus,
        zero,
        tilde,
        grid: basis.grid().clone(),
    })
}

/// Orthogonal projection onto `H~ = H- + H0`.
pub fn project_tilde(f: &Field, s: &SubspaceSplit) -> Result<Field> {
    f.same_grid(&Field::zeros(&s.grid))?;
    Ok(Field::from_raw(f.grid().clone(), s.tilde_part(f.values())))
}

/// Orthogonal projection onto `H+`.
pub fn project_plus(f: &Field, s: &SubspaceSplit) -> Result<Field> {
    f.same_grid(&Field::zeros(&s.grid))?;
    Ok(Field::from_raw(f.grid().clone(), s.plus_part(f.values())))
}

/// Counts of continuum box modes with `mu + lambda` negative and zero, using
/// the same tolerance as [`split`].
pub fn continuum_split_counts(domain: &DomainSpec, lambda: f64) -> (usize, usize) {
    let tol = 1e-9 * (1.0 + lambda.abs());
    if lambda > tol {
        return (0, 0);
    }
    let start = usize::from(domain.boundary() == Boundary::Dirichlet);
    let kmax: Vec<usize> = domain
        .side_lengths()
        .iter()
        .map(|&l| ((-lambda + tol).max(0.0).sqrt() * l / PI).floor() as usize + 1)
        .collect();
    let mut counts = (0, 0);
    let mut ks = vec![start; kmax.len()];
    loop {
        let mu: f64 = ks
            .iter()
            .zip(domain.side_lengths())
            .map(|(&k, &l)| (k as f64 * PI / l).powi(2))
            .sum();
        let s = mu + lambda;
        if s < -tol {
            counts.0 += 1;
        } else if s.abs() <= tol {
            counts.1 += 1;
        }
        let mut a = 0;
        loop {
            if a == ks.len() {
                return counts;
            }
            ks[a] += 1;
            if ks[a] <= kmax[a] {
                break;
            }
            ks[a] = start;
            a += 1;
        }
    }
}
