//! Shared fixtures for the benchmarks under `benches/`.

use std::sync::Arc;

use groundstate_core::{Boundary, DomainSpec, Field, Grid, Pair};

/// Unit box with `n` nodes per axis.
pub fn unit_grid(dimension: usize, n: usize, boundary: Boundary) -> Arc<Grid> {
    let domain = DomainSpec::unit(dimension, boundary).expect("dimension in range");
    Grid::new(domain, &vec![n; dimension]).expect("valid resolution")
}

/// Smooth positive pair with overlapping supports.
pub fn smooth_pair(grid: &Arc<Grid>) -> Pair {
    let u = Field::from_fn(grid, |x| 1.0 + 0.5 * x.iter().map(|c| (std::f64::consts::PI * c).cos()).sum::<f64>())
        .expect("finite");
    let v = Field::from_fn(grid, |x| 1.0 + 0.3 * x.iter().map(|c| (2.0 * std::f64::consts::PI * c).sin()).sum::<f64>())
        .expect("finite");
    Pair::new(u, v).expect("same grid")
}
