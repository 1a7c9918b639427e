//! Restarted GMRES and small dense helpers used by the Newton solves.

use nalgebra::{DMatrix, DVector};

/// Left-preconditioned restarted GMRES for `A x = b` in the inner product
/// `dot`. Tolerance applies to the preconditioned residual.
pub(crate) fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    dot: impl Fn(&[f64], &[f64]) -> f64,
    b: &[f64],
    restart: usize,
    max_iter: usize,
    rtol: f64,
) -> Vec<f64> {
    let n = b.len();
    let norm = |v: &[f64]| dot(v, v).max(0.0).sqrt();
    let mut x = vec![0.0; n];
    let pb = precond(b);
    let bnorm = norm(&pb);
    if bnorm == 0.0 {
        return x;
    }
    let mut total = 0;
    let mut rel: f64;
    while total < max_iter {
        let ax = apply(&x);
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let r = precond(&r0);
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            return x;
        }
        let m = restart.min(max_iter - total);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for j in 0..m {
            total += 1;
            let mut w = precond(&apply(&v[j]));
            // modified Gram-Schmidt, two passes for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][j] += hij;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= hij * vk;
                    }
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if denom == 0.0 {
                k_used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= rtol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in i + 1..k_used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&v[i]) {
                *xk += yi * vk;
            }
        }
        if rel <= rtol || k_used == 0 {
            break;
        }
    }
    x
}

/// Solves a small dense system; `None` when the matrix is singular to working
/// precision.
pub(crate) fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    let lu = m.lu();
    let x = lu.solve(&rhs)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// Whether a symmetric matrix is negative definite.
pub(crate) fn is_negative_definite(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    if n == 0 {
        return true;
    }
    let m = DMatrix::from_fn(n, n, |i, j| -0.5 * (a[i][j] + a[j][i]));
    m.cholesky().is_some()
}
