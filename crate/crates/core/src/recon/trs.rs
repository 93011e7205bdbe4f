//! Closed-form solution of
//!
//! ```text
//! minimize ||w - z||^2  subject to  z^T z = p,  z^T u = 0,   z in R^4
//! ```
//!
//! Writing `z = U e` with `U` an orthonormal basis of `u`'s null space turns
//! this into a trust-region subproblem on the sphere `e^T e = p`, whose
//! optimum is `e = U^T w / (1 - lambda)` with
//! `lambda = 1 - sqrt(w^T U U^T w / p)`.

use crate::error::invalid;
use crate::{Error, Result};

type Vec4 = [f64; 4];

fn dot(x: &Vec4, y: &Vec4) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrsSolution {
    pub z: Vec4,
    /// Lagrange multiplier of the norm constraint; `1 - lambda >= 0`.
    pub lambda: f64,
}

/// Three orthonormal vectors spanning the hyperplane orthogonal to `u`,
/// taken from the columns of a Householder reflector that maps `u` onto a
/// coordinate axis.
pub fn null_space_basis(u: &Vec4) -> Result<[Vec4; 3]> {
    let norm = dot(u, u).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(invalid(format!(
            "constraint normal must be finite and nonzero, got {u:?}"
        )));
    }
    // Pivot on the largest entry so v never suffers cancellation.
    let k = (0..4)
        .max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .unwrap();
    let mut v = *u;
    v[k] += u[k].signum() * norm;
    let vv = dot(&v, &v);

    let mut basis = [[0.0; 4]; 3];
    for (slot, col) in (0..4).filter(|&c| c != k).enumerate() {
        // column `col` of H = I - 2 v v^T / (v^T v)
        for (row, entry) in basis[slot].iter_mut().enumerate() {
            let id = if row == col { 1.0 } else { 0.0 };
            *entry = id - 2.0 * v[row] * v[col] / vv;
        }
    }
    Ok(basis)
}

/// Closest point to `w` on the circle `{z : z^T z = p, z^T u = 0}`.
pub fn trs_solve(w: &Vec4, u: &Vec4, p: f64) -> Result<TrsSolution> {
    if !(p > 0.0) {
        return Err(invalid(format!(
            "norm constraint must be positive, got {p}"
        )));
    }
    let basis = null_space_basis(u)?;
    let e: [f64; 3] = basis.map(|b| dot(&b, w));
    let proj_sq: f64 = e.iter().map(|x| x * x).sum();
    let w_norm = dot(w, w).sqrt();
    if proj_sq.sqrt() <= 1e-12 * w_norm || proj_sq == 0.0 {
        return Err(Error::DegenerateSolution {
            projected: proj_sq.sqrt(),
            norm: w_norm,
        });
    }
    let one_minus_lambda = (proj_sq / p).sqrt();
    let mut z = [0.0; 4];
    for (b, coef) in basis.iter().zip(e) {
        for (zi, bi) in z.iter_mut().zip(b) {
            *zi += bi * coef / one_minus_lambda;
        }
    }
    Ok(TrsSolution {
        z,
        lambda: 1.0 - one_minus_lambda,
    })
}
