//! Dense linear least squares shared by the decay, interaction and expansion fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    /// Ratio of largest to smallest singular value of the column-scaled design.
    pub condition: f64,
}

/// Solves `min |A x - b|` with columns scaled to unit norm before the SVD.
/// Fails when the scaled design is numerically rank deficient (`condition > max_condition`).
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64], max_condition: f64) -> Result<LinearFit> {
    let m = rows.len();
    if m == 0 || m != rhs.len() {
        return Err(Error::InvalidArgument(format!(
            "least squares needs matching nonempty rows ({m}) and rhs ({})",
            rhs.len()
        )));
    }
    let n = rows[0].len();
    if m < n {
        return Err(Error::IllConditioned(format!(
            "{m} samples cannot determine {n} coefficients"
        )));
    }
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let scales: Vec<f64> = (0..n)
        .map(|j| {
            let s = a.column(j).norm();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    let scaled = DMatrix::from_fn(m, n, |i, j| a[(i, j)] / scales[j]);
    let b = DVector::from_column_slice(rhs);
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= max_condition) {
        return Err(Error::IllConditioned(format!(
            "design condition number {condition:.3e} exceeds {max_condition:.1e}"
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let residual_norm = (&scaled * &x - &b).norm();
    let coefficients = (0..n).map(|j| x[j] / scales[j]).collect();
    Ok(LinearFit {
        coefficients,
        residual_norm,
        condition,
    })
}
