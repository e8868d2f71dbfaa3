use std::f64::consts::FRAC_PI_2;

use super::{ensure_finite, ensure_orthonormal, singular_values, Matrix};
use crate::error::{DeimError, Result};

/// Principal angles between `range(A)` and `range(B)`, non-decreasing in
/// `[0, pi/2]`. There are `min(cols(A), cols(B))` of them.
///
/// Cosines are the singular values of `A^T B`. Small angles are recovered
/// from the sines, the singular values of `(I - A A^T) B` with `B` the
/// narrower basis, because `acos` loses all accuracy near 0.
pub fn principal_angles(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    ensure_finite(b)?;
    if a.nrows() != b.nrows() {
        return Err(DeimError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    ensure_orthonormal(a)?;
    ensure_orthonormal(b)?;
    let (wide, narrow) = if a.ncols() >= b.ncols() { (a, b) } else { (b, a) };
    let k = narrow.ncols();

    let cross = wide.tr_mul(narrow);
    let cosines: Vec<f64> = singular_values(&cross)?
        .into_iter()
        .map(|c| c.clamp(0.0, 1.0))
        .collect();
    let residual = narrow - wide * &cross;
    let mut sines = singular_values(&residual)?;
    sines.truncate(k);
    sines.reverse();

    Ok((0..k)
        .map(|i| {
            let c = cosines[i];
            if c * c > 0.5 {
                sines[i].clamp(0.0, 1.0).asin()
            } else {
                c.acos().min(FRAC_PI_2)
            }
        })
        .collect())
}
