//! Ridge solve `(G + λI) W = C` for symmetric positive semidefinite `G`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative residual bound a solution must meet:
/// `‖(G+λI)W − C‖ ≤ RESIDUAL_TOLERANCE · (‖G‖ + λ) · ‖W‖` (Frobenius norms).
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

pub fn regularized(gram: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut a = gram.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    a
}

pub fn residual_norm(
    gram: &DMatrix<f64>,
    lambda: f64,
    targets: &DMatrix<f64>,
    solution: &DMatrix<f64>,
) -> f64 {
    (regularized(gram, lambda) * solution - targets).norm()
}

/// Cholesky solve with one step of iterative refinement, then a residual check.
pub fn ridge_solve(gram: &DMatrix<f64>, lambda: f64, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !gram.is_square() || gram.nrows() != targets.nrows() {
        return Err(Error::Shape {
            expected: gram.nrows(),
            got: targets.nrows(),
        });
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::config(format!("ridge lambda must be positive, got {lambda}")));
    }
    let a = regularized(gram, lambda);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Cholesky factorisation of G + λI failed".into()))?;
    let mut w = chol.solve(targets);
    let r = targets - &a * &w;
    w += chol.solve(&r);

    let residual = (&a * &w - targets).norm();
    let bound = RESIDUAL_TOLERANCE * (gram.norm() + lambda) * w.norm();
    if residual.is_nan() || (residual > bound && residual > f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "ridge residual {residual:e} exceeds bound {bound:e}"
        )));
    }
    Ok(w)
}
