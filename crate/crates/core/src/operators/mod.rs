//! Discrete Laplacian, the quadratic forms `B_i`, the energy functional and
//! its first and second derivatives.

pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid, Pair};

pub use spectral::{
    continuum_split_counts, eigenbasis, full_eigenbasis, precondition, project_plus, project_tilde,
    split, SpectralBasis, SubspaceSplit,
};

/// The triple `(lambda_1, lambda_2, beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
}

impl SystemParams {
    pub fn new(lambda1: f64, lambda2: f64, beta: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda2.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite parameters ({lambda1}, {lambda2}, {beta})"
            )));
        }
        Ok(SystemParams {
            lambda1,
            lambda2,
            beta,
        })
    }

    /// Magnitude used to make tolerances relative: `1 + max |lambda_i|`.
    pub fn scale(&self) -> f64 {
        1.0 + self.lambda1.abs().max(self.lambda2.abs())
    }

    pub fn swapped(&self) -> SystemParams {
        SystemParams {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
            beta: self.beta,
        }
    }
}

/// Writes `-Delta_h f` into `out`.
///
/// Neumann rows use ghost reflection, so the first row reads
/// `(2 f_0 - 2 f_1) / h^2`; Dirichlet treats boundary values as zero and
/// returns zero on boundary nodes.
pub fn laplacian_into(grid: &Grid, f: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let nodes = grid.nodes_per_axis();
    let dim = nodes.len();
    let dirichlet = grid.boundary() == Boundary::Dirichlet;
    for a in 0..dim {
        let n = nodes[a];
        let s = grid.strides()[a];
        let outer: usize = nodes[..a].iter().product();
        let ih2 = 1.0 / (grid.spacing()[a] * grid.spacing()[a]);
        for o in 0..outer {
            let base = o * n * s;
            for i in 0..n {
                let row = base + i * s;
                for j in 0..s {
                    let k = row + j;
                    let c = f[k];
                    let d = if dirichlet {
                        if i == 0 || i == n - 1 {
                            continue;
                        }
                        let l = if i == 1 { 0.0 } else { f[k - s] };
                        let r = if i == n - 2 { 0.0 } else { f[k + s] };
                        2.0 * c - l - r
                    } else if i == 0 {
                        2.0 * (c - f[k + s])
                    } else if i == n - 1 {
                        2.0 * (c - f[k - s])
                    } else {
                        2.0 * c - f[k - s] - f[k + s]
                    };
                    out[k] += d * ih2;
                }
            }
        }
    }
    if dirichlet {
        grid.enforce_boundary(out);
    }
}

pub(crate) fn laplacian_vec(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    laplacian_into(grid, f, &mut out);
    out
}

/// `-Delta_h f`.
pub fn laplacian_apply(f: &Field) -> Field {
    Field::from_raw(f.grid().clone(), laplacian_vec(f.grid(), f.values()))
}

/// `B(f, g, lambda) = <-Delta_h f, g> + lambda <f, g>`.
pub fn bilinear_b(f: &Field, g: &Field, lambda: f64) -> Result<f64> {
    f.same_grid(g)?;
    Ok(form_b(f.grid(), f.values(), g.values(), lambda))
}

pub(crate) fn form_b(grid: &Grid, f: &[f64], g: &[f64], lambda: f64) -> f64 {
    let af = laplacian_vec(grid, f);
    grid.inner_slice(&af, g) + lambda * grid.inner_slice(f, g)
}

/// Quantities shared by energy, constraints and scalings, computed in one
/// sweep over a pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct PairMoments {
    /// `B(u,u,lambda_1)`
    pub bu: f64,
    /// `B(v,v,lambda_2)`
    pub bv: f64,
    /// `|u|_4^4`
    pub a: f64,
    /// `|v|_4^4`
    pub b: f64,
    /// `int u^2 v^2`
    pub c: f64,
}

impl PairMoments {
    pub fn compute(grid: &Grid, u: &[f64], v: &[f64], params: &SystemParams) -> Self {
        PairMoments {
            bu: form_b(grid, u, u, params.lambda1),
            bv: form_b(grid, v, v, params.lambda2),
            a: grid.power_slice(u, 4.0),
            b: grid.power_slice(v, 4.0),
            c: grid.overlap_slice(u, v),
        }
    }

    pub fn energy(&self, beta: f64) -> f64 {
        0.5 * (self.bu + self.bv) - 0.25 * ((self.a + self.b) + 2.0 * beta * self.c)
    }

    /// `<J'(u,v), (u,0)>` and `<J'(u,v), (0,v)>`.
    pub fn nehari(&self, beta: f64) -> (f64, f64) {
        (
            self.bu - self.a - beta * self.c,
            self.bv - self.b - beta * self.c,
        )
    }
}

pub(crate) fn energy_slices(grid: &Grid, u: &[f64], v: &[f64], params: &SystemParams) -> f64 {
    PairMoments::compute(grid, u, v, params).energy(params.beta)
}

/// `J(u,v) = B_1/2 + B_2/2 - (|u|^4 + 2 beta int u^2 v^2 + |v|^4)/4`.
pub fn energy(p: &Pair, params: &SystemParams) -> f64 {
    energy_slices(p.grid(), p.u.values(), p.v.values(), params)
}

/// Scalar functional `Psi_lambda(z) = B(z,z,lambda)/2 - |z|_4^4/4`.
pub fn scalar_energy(z: &Field, lambda: f64) -> f64 {
    scalar_energy_slice(z.grid(), z.values(), lambda)
}

pub(crate) fn scalar_energy_slice(grid: &Grid, z: &[f64], lambda: f64) -> f64 {
    0.5 * form_b(grid, z, z, lambda) - 0.25 * grid.power_slice(z, 4.0)
}

pub(crate) fn residual_into(
    grid: &Grid,
    u: &[f64],
    v: &[f64],
    params: &SystemParams,
    ru: &mut [f64],
    rv: &mut [f64],
) {
    laplacian_into(grid, u, ru);
    laplacian_into(grid, v, rv);
    let beta = params.beta;
    for k in 0..u.len() {
        let (x, y) = (u[k], v[k]);
        ru[k] += params.lambda1 * x - x * (x * x) - beta * (x * (y * y));
        rv[k] += params.lambda2 * y - y * (y * y) - beta * (y * (x * x));
    }
    grid.enforce_boundary(ru);
    grid.enforce_boundary(rv);
}

/// L^2 representative of `J'`: `r_u = -Delta u + lambda_1 u - u^3 - beta u v^2`
/// and symmetrically for `v`.
pub fn residual(p: &Pair, params: &SystemParams) -> Pair {
    let grid = p.grid();
    let n = grid.len();
    let mut ru = vec![0.0; n];
    let mut rv = vec![0.0; n];
    residual_into(grid, p.u.values(), p.v.values(), params, &mut ru, &mut rv);
    Pair {
        u: Field::from_raw(grid.clone(), ru),
        v: Field::from_raw(grid.clone(), rv),
    }
}

pub(crate) fn scalar_residual_into(grid: &Grid, z: &[f64], lambda: f64, out: &mut [f64]) {
    laplacian_into(grid, z, out);
    for k in 0..z.len() {
        let x = z[k];
        out[k] += lambda * x - x * (x * x);
    }
    grid.enforce_boundary(out);
}

/// `-Delta z + lambda z - z^3`.
pub fn scalar_residual(z: &Field, lambda: f64) -> Field {
    let mut out = vec![0.0; z.values().len()];
    scalar_residual_into(z.grid(), z.values(), lambda, &mut out);
    Field::from_raw(z.grid().clone(), out)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn hessian_into(
    grid: &Grid,
    u: &[f64],
    v: &[f64],
    zeta: &[f64],
    eta: &[f64],
    params: &SystemParams,
    out_u: &mut [f64],
    out_v: &mut [f64],
) {
    laplacian_into(grid, zeta, out_u);
    laplacian_into(grid, eta, out_v);
    let beta = params.beta;
    for k in 0..u.len() {
        let (x, y, z, e) = (u[k], v[k], zeta[k], eta[k]);
        let cross = 2.0 * beta * (x * y);
        out_u[k] += params.lambda1 * z - 3.0 * (x * x) * z - beta * (y * y) * z - cross * e;
        out_v[k] += params.lambda2 * e - 3.0 * (y * y) * e - beta * (x * x) * e - cross * z;
    }
    grid.enforce_boundary(out_u);
    grid.enforce_boundary(out_v);
}

/// L^2 representative of `J''(p)[dir, .]`.
pub fn hessian_apply(p: &Pair, dir: &Pair, params: &SystemParams) -> Result<Pair> {
    p.u.same_grid(&dir.u)?;
    let grid = p.grid();
    let n = grid.len();
    let mut hu = vec![0.0; n];
    let mut hv = vec![0.0; n];
    hessian_into(
        grid,
        p.u.values(),
        p.v.values(),
        dir.u.values(),
        dir.v.values(),
        params,
        &mut hu,
        &mut hv,
    );
    Ok(Pair {
        u: Field::from_raw(grid.clone(), hu),
        v: Field::from_raw(grid.clone(), hv),
    })
}

pub(crate) fn scalar_hessian_into(grid: &Grid, z: &[f64], lambda: f64, d: &[f64], out: &mut [f64]) {
    laplacian_into(grid, d, out);
    for k in 0..z.len() {
        out[k] += lambda * d[k] - 3.0 * (z[k] * z[k]) * d[k];
    }
    grid.enforce_boundary(out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainSpec, Grid};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid1(n: usize, bc: Boundary) -> Arc<Grid> {
        Grid::new(DomainSpec::unit(1, bc).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn neumann_annihilates_constants() {
        let g = Grid::new(DomainSpec::unit(3, Boundary::Neumann).unwrap(), &[5, 4, 6]).unwrap();
        let lap = laplacian_apply(&Field::constant(&g, 3.7));
        assert!(lap.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cosine_and_sine_eigenrelations() {
        for (bc, f) in [
            (Boundary::Neumann, (|x: f64| (PI * x).cos()) as fn(f64) -> f64),
            (Boundary::Dirichlet, |x: f64| (PI * x).sin()),
        ] {
            let g = grid1(33, bc);
            let mut phi = Field::from_fn(&g, |x| f(x[0])).unwrap();
            g.enforce_boundary(phi.values_mut());
            let h = 1.0 / 32.0;
            let mu = 2.0 / (h * h) * (1.0 - (PI * h).cos());
            let lap = laplacian_apply(&phi);
            for (a, b) in lap.values().iter().zip(phi.values()) {
                assert!((a - mu * b).abs() < 1e-10 * mu);
            }
        }
    }

    #[test]
    fn summation_by_parts() {
        let g = grid1(17, Boundary::Neumann);
        let f = Field::from_fn(&g, |x| (3.0 * x[0]).sin() + x[0] * x[0]).unwrap();
        let h = Field::from_fn(&g, |x| (2.0 * x[0]).exp()).unwrap();
        let b = bilinear_b(&f, &h, 0.0).unwrap();
        let lf = crate::grid::l2_inner(&laplacian_apply(&f), &h).unwrap();
        let lh = crate::grid::l2_inner(&f, &laplacian_apply(&h)).unwrap();
        assert_relative_eq!(b, lf, max_relative = 1e-12);
        assert_relative_eq!(b, lh, max_relative = 1e-12);
    }

    #[test]
    fn constant_pair_energy_closed_form() {
        let g = grid1(9, Boundary::Neumann);
        let c = (4.0f64 / 3.0).sqrt();
        let p = Pair::new(Field::constant(&g, c), Field::constant(&g, c)).unwrap();
        let params = SystemParams::new(2.0, 2.0, 0.5).unwrap();
        assert_relative_eq!(energy(&p, &params), 4.0 / 3.0, max_relative = 1e-14);
        assert!(residual(&p, &params).u.max_abs() < 1e-13);
    }

    #[test]
    fn zero_pair_hessian_is_shifted_laplacian() {
        let g = grid1(9, Boundary::Neumann);
        let zero = Pair::new(Field::zeros(&g), Field::zeros(&g)).unwrap();
        let d = Pair::new(
            Field::from_fn(&g, |x| x[0]).unwrap(),
            Field::from_fn(&g, |x| 1.0 - x[0] * x[0]).unwrap(),
        )
        .unwrap();
        let params = SystemParams::new(1.5, -2.0, 3.0).unwrap();
        let h = hessian_apply(&zero, &d, &params).unwrap();
        let expect = laplacian_apply(&d.u).axpy(1.5, &d.u).unwrap();
        assert_eq!(h.u.values(), expect.values());
    }

    #[test]
    fn decoupled_energy_at_zero_beta() {
        let g = grid1(17, Boundary::Neumann);
        let u = Field::from_fn(&g, |x| 1.0 + x[0]).unwrap();
        let v = Field::from_fn(&g, |x| (2.0 * x[0]).cos()).unwrap();
        let params = SystemParams::new(2.0, 3.0, 0.0).unwrap();
        let p = Pair::new(u.clone(), v.clone()).unwrap();
        assert_relative_eq!(
            energy(&p, &params),
            scalar_energy(&u, 2.0) + scalar_energy(&v, 3.0),
            max_relative = 1e-14
        );
    }
}
