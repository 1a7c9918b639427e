//! Box domains, vertex-centered tensor grids, nodal fields and trapezoid
//! quadrature.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count accepted for a four-dimensional grid unless the caller
/// raises the cap explicitly.
pub const DEFAULT_MAX_NODES_4D: usize = 33 * 33 * 33 * 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "neumann" => Ok(Boundary::Neumann),
            "dirichlet" => Ok(Boundary::Dirichlet),
            other => Err(Error::InvalidDomain(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// An axis-aligned box `[0, L_1] x ... x [0, L_N]` with a boundary condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    side_lengths: Vec<f64>,
    boundary: Boundary,
}

impl DomainSpec {
    pub fn new(side_lengths: Vec<f64>, boundary: Boundary) -> Result<Self> {
        let n = side_lengths.len();
        if !(1..=4).contains(&n) {
            return Err(Error::Dimension(n));
        }
        if side_lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidDomain(format!(
                "side lengths must be positive and finite, got {side_lengths:?}"
            )));
        }
        Ok(DomainSpec {
            side_lengths,
            boundary,
        })
    }

    /// Unit cube `[0,1]^N`.
    pub fn unit(dimension: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![1.0; dimension], boundary)
    }

    pub fn dimension(&self) -> usize {
        self.side_lengths.len()
    }

    pub fn side_lengths(&self) -> &[f64] {
        &self.side_lengths
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// |Omega|.
    pub fn volume(&self) -> f64 {
        self.side_lengths.iter().product()
    }
}

/// Tensor-product vertex-centered grid on a [`DomainSpec`].
#[derive(Debug)]
pub struct Grid {
    domain: DomainSpec,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    weights: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.nodes == other.nodes
    }
}

impl Grid {
    /// Builds a grid with the default four-dimensional node cap.
    pub fn new(domain: DomainSpec, nodes_per_axis: &[usize]) -> Result<Arc<Grid>> {
        Self::with_node_cap(domain, nodes_per_axis, DEFAULT_MAX_NODES_4D)
    }

    pub fn with_node_cap(
        domain: DomainSpec,
        nodes_per_axis: &[usize],
        max_nodes_4d: usize,
    ) -> Result<Arc<Grid>> {
        let dim = domain.dimension();
        if nodes_per_axis.len() != dim {
            return Err(Error::InvalidResolution(format!(
                "{} node counts given for a {dim}-dimensional domain",
                nodes_per_axis.len()
            )));
        }
        if let Some(&n) = nodes_per_axis.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidResolution(format!(
                "every axis needs at least 3 nodes, got {n}"
            )));
        }
        let total: usize = nodes_per_axis.iter().product();
        if dim == 4 && total > max_nodes_4d {
            return Err(Error::InvalidResolution(format!(
                "{total} nodes exceeds the 4D cap of {max_nodes_4d}"
            )));
        }

        let spacing: Vec<f64> = domain
            .side_lengths
            .iter()
            .zip(nodes_per_axis)
            .map(|(&l, &n)| l / (n - 1) as f64)
            .collect();

        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * nodes_per_axis[a + 1];
        }

        let axis_weights: Vec<Vec<f64>> = nodes_per_axis
            .iter()
            .zip(&spacing)
            .map(|(&n, &h)| trapezoid_weights(n, h))
            .collect();
        let mut weights = vec![1.0; total];
        let mut idx = vec![0usize; dim];
        for (k, w) in weights.iter_mut().enumerate() {
            unravel(k, &strides, nodes_per_axis, &mut idx);
            for (a, &i) in idx.iter().enumerate() {
                *w *= axis_weights[a][i];
            }
        }

        Ok(Arc::new(Grid {
            domain,
            nodes: nodes_per_axis.to_vec(),
            spacing,
            strides,
            weights,
        }))
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.nodes.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.domain.boundary
    }

    pub fn volume(&self) -> f64 {
        self.domain.volume()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Writes the multi-index of flat node `k` into `out`.
    pub fn multi_index(&self, k: usize, out: &mut [usize]) {
        unravel(k, &self.strides, &self.nodes, out);
    }

    /// Coordinates of flat node `k`.
    pub fn coords(&self, k: usize, out: &mut [f64]) {
        for a in 0..self.dimension() {
            let i = (k / self.strides[a]) % self.nodes[a];
            out[a] = i as f64 * self.spacing[a];
        }
    }

    /// Coordinates of the nodes along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.nodes[axis])
            .map(|i| i as f64 * self.spacing[axis])
            .collect()
    }

    pub fn is_boundary_node(&self, k: usize) -> bool {
        (0..self.dimension()).any(|a| {
            let i = (k / self.strides[a]) % self.nodes[a];
            i == 0 || i + 1 == self.nodes[a]
        })
    }

    /// Zeroes boundary values for Dirichlet grids; no-op for Neumann.
    pub fn enforce_boundary(&self, values: &mut [f64]) {
        if self.boundary() == Boundary::Dirichlet {
            for (k, x) in values.iter_mut().enumerate() {
                if self.is_boundary_node(k) {
                    *x = 0.0;
                }
            }
        }
    }

    pub fn integrate_slice(&self, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for (w, x) in self.weights.iter().zip(f) {
            s += w * x;
        }
        s
    }

    pub fn inner_slice(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((w, a), b) in self.weights.iter().zip(f).zip(g) {
            s += w * (a * b);
        }
        s
    }

    /// `sum w f^p` with integer fast paths for p = 2 and p = 4.
    pub fn power_slice(&self, f: &[f64], p: f64) -> f64 {
        let mut s = 0.0;
        if p == 2.0 {
            for (w, x) in self.weights.iter().zip(f) {
                s += w * (x * x);
            }
        } else if p == 4.0 {
            for (w, x) in self.weights.iter().zip(f) {
                let x2 = x * x;
                s += w * (x2 * x2);
            }
        } else {
            for (w, x) in self.weights.iter().zip(f) {
                s += w * x.abs().powf(p);
            }
        }
        s
    }

    /// `sum w u^2 v^2`, symmetric in its arguments bit for bit.
    pub fn overlap_slice(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((w, a), b) in self.weights.iter().zip(u).zip(v) {
            s += w * ((a * a) * (b * b));
        }
        s
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension()];
        (0..self.len())
            .map(|k| {
                self.coords(k, &mut x);
                f(&x)
            })
            .collect()
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

fn unravel(k: usize, strides: &[usize], nodes: &[usize], out: &mut [usize]) {
    for a in 0..strides.len() {
        out[a] = (k / strides[a]) % nodes[a];
    }
}

/// Default resolution per dimension: 257, 129², 49³ and 17⁴ nodes.
pub fn default_nodes(dimension: usize) -> Result<Vec<usize>> {
    let n = match dimension {
        1 => 257,
        2 => 129,
        3 => 49,
        4 => 17,
        d => return Err(Error::Dimension(d)),
    };
    Ok(vec![n; dimension])
}

/// Nodal samples of a scalar function on a shared grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidResolution(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Field { grid, values })
    }

    /// Trusted constructor for values produced by library kernels.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field::from_raw(grid.clone(), vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Field::from_raw(grid.clone(), vec![c; grid.len()])
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Field::new(grid.clone(), grid.sample(f))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::from_raw(self.grid.clone(), self.values.iter().map(|x| a * x).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Field::from_raw(self.grid.clone(), values))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// A pair `(u, v)` on one grid.
#[derive(Clone, Debug)]
pub struct Pair {
    pub u: Field,
    pub v: Field,
}

impl Pair {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        u.same_grid(&v)?;
        Ok(Pair { u, v })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn swapped(&self) -> Pair {
        Pair {
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }

    /// Flattened `[u; v]` copy.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = self.u.values.clone();
        x.extend_from_slice(&self.v.values);
        x
    }
}

/// Trapezoid integral of a field.
pub fn integrate(f: &Field) -> f64 {
    f.grid.integrate_slice(&f.values)
}

/// Discrete L^p norm.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    f.grid.power_slice(&f.values, p).powf(1.0 / p)
}

/// `integral u^2 v^2`.
pub fn overlap(u: &Field, v: &Field) -> Result<f64> {
    u.same_grid(v)?;
    Ok(u.grid.overlap_slice(&u.values, &v.values))
}

pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    f.same_grid(g)?;
    Ok(f.grid.inner_slice(&f.values, &g.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit1(n: usize) -> Arc<Grid> {
        Grid::new(DomainSpec::unit(1, Boundary::Neumann).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn trapezoid_weights_on_unit_interval() {
        let g = unit1(5);
        assert_eq!(g.quad_weights(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
    }

    #[test]
    fn weight_sums_match_volume() {
        let sq = Grid::new(DomainSpec::unit(2, Boundary::Neumann).unwrap(), &[3, 3]).unwrap();
        assert_relative_eq!(sq.quad_weights().iter().sum::<f64>(), 1.0, max_relative = 1e-14);
        let b = Grid::new(
            DomainSpec::new(vec![2.0, 3.0], Boundary::Dirichlet).unwrap(),
            &[17, 9],
        )
        .unwrap();
        assert_relative_eq!(b.quad_weights().iter().sum::<f64>(), 6.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_coarse_axes_and_bad_dimension() {
        let d = DomainSpec::unit(2, Boundary::Neumann).unwrap();
        assert!(matches!(Grid::new(d, &[2, 5]), Err(Error::InvalidResolution(_))));
        assert!(matches!(DomainSpec::unit(5, Boundary::Neumann), Err(Error::Dimension(5))));
        let d4 = DomainSpec::unit(4, Boundary::Neumann).unwrap();
        assert!(Grid::new(d4, &[34, 33, 33, 33]).is_err());
    }

    #[test]
    fn integrates_constants_and_smooth_functions() {
        let g = unit1(65);
        let c = Field::constant(&g, 2.5);
        assert_eq!(integrate(&c), 2.5);
        let cosf = Field::from_fn(&g, |x| (std::f64::consts::PI * x[0]).cos()).unwrap();
        assert!(integrate(&cosf).abs() < 1e-10);
        // trapezoid error for x^2 is exactly h^2/6
        let sq = Field::from_fn(&g, |x| x[0] * x[0]).unwrap();
        let h: f64 = 1.0 / 64.0;
        assert_relative_eq!(integrate(&sq), 1.0 / 3.0 + h * h / 6.0, max_relative = 1e-13);
    }

    #[test]
    fn norms_and_overlap() {
        let g = Grid::new(DomainSpec::new(vec![2.0], Boundary::Neumann).unwrap(), &[9]).unwrap();
        let c = Field::constant(&g, -3.0);
        assert_relative_eq!(lp_norm(&c, 4.0), 3.0 * 2f64.powf(0.25), max_relative = 1e-14);
        let z = Field::zeros(&g);
        assert_eq!(overlap(&c, &z).unwrap(), 0.0);
        let other = unit1(9);
        assert!(matches!(overlap(&c, &Field::zeros(&other)), Err(Error::GridMismatch)));
    }

    #[test]
    fn coordinates_are_row_major_axis0_slowest() {
        let g = Grid::new(DomainSpec::new(vec![1.0, 2.0], Boundary::Neumann).unwrap(), &[3, 5])
            .unwrap();
        let mut x = [0.0; 2];
        g.coords(1, &mut x);
        assert_eq!(x, [0.0, 0.5]);
        g.coords(5, &mut x);
        assert_eq!(x, [0.5, 0.0]);
        assert!(g.is_boundary_node(0));
        assert!(!g.is_boundary_node(6));
    }
}
