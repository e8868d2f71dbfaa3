use super::Matrix;
use crate::error::{DeimError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triangle {
    Lower,
    Upper,
}

/// `Left` solves `op(T) X = B`, `Right` solves `X op(T) = B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Solves a triangular system by substitution. `op(T)` is `T^T` when
/// `transpose` is set. Only the named triangle of `t` is read.
pub fn solve_triangular(
    t: &Matrix,
    rhs: &Matrix,
    triangle: Triangle,
    side: Side,
    transpose: bool,
) -> Result<Matrix> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(DeimError::DimensionMismatch {
            expected: n,
            found: t.ncols(),
        });
    }
    for i in 0..n {
        if t[(i, i)] == 0.0 {
            return Err(DeimError::SingularFactor { index: i + 1 });
        }
    }
    match side {
        Side::Left => {
            if rhs.nrows() != n {
                return Err(DeimError::DimensionMismatch {
                    expected: n,
                    found: rhs.nrows(),
                });
            }
            let mut x = rhs.clone();
            solve_left_in_place(t, &mut x, triangle, transpose);
            Ok(x)
        }
        Side::Right => {
            if rhs.ncols() != n {
                return Err(DeimError::DimensionMismatch {
                    expected: n,
                    found: rhs.ncols(),
                });
            }
            // X op(T) = B  <=>  op(T)^T X^T = B^T
            let mut x = rhs.transpose();
            solve_left_in_place(t, &mut x, triangle, !transpose);
            Ok(x.transpose())
        }
    }
}

/// In-place `op(T) X = B`; the caller has checked shapes and the diagonal.
pub(crate) fn solve_left_in_place(t: &Matrix, x: &mut Matrix, triangle: Triangle, transpose: bool) {
    let n = t.nrows();
    // Reading T^T's lower triangle is reading T's upper triangle by rows.
    let at = |i: usize, j: usize| if transpose { t[(j, i)] } else { t[(i, j)] };
    let lower = matches!(
        (triangle, transpose),
        (Triangle::Lower, false) | (Triangle::Upper, true)
    );
    for c in 0..x.ncols() {
        if lower {
            for i in 0..n {
                let mut s = x[(i, c)];
                for j in 0..i {
                    s -= at(i, j) * x[(j, c)];
                }
                x[(i, c)] = s / at(i, i);
            }
        } else {
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for j in i + 1..n {
                    s -= at(i, j) * x[(j, c)];
                }
                x[(i, c)] = s / at(i, i);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let x = solve_triangular(&Matrix::identity(3, 3), &b, Triangle::Lower, Side::Left, false).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn forward_substitution_by_hand() {
        let l = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]);
        let b = Matrix::from_column_slice(2, 1, &[2.0, 3.0]);
        let x = solve_triangular(&l, &b, Triangle::Lower, Side::Left, false).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn all_modes_match_products() {
        let n = 6;
        let u = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                3.0 + i as f64
            } else if j > i {
                ((i * 5 + j * 3) % 7) as f64 / 7.0 - 0.5
            } else {
                0.0
            }
        });
        let l = u.transpose();
        let b = Matrix::from_fn(n, 3, |i, j| (i as f64 - j as f64).sin());
        let br = b.transpose();
        for (t, tri) in [(&u, Triangle::Upper), (&l, Triangle::Lower)] {
            for tr in [false, true] {
                let op = if tr { t.transpose() } else { t.clone() };
                let x = solve_triangular(t, &b, tri, Side::Left, tr).unwrap();
                assert!((&op * &x - &b).norm() < 1e-13);
                let y = solve_triangular(t, &br, tri, Side::Right, tr).unwrap();
                assert!((&y * &op - &br).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_diagonal_is_reported() {
        let t = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let err = solve_triangular(&t, &Matrix::zeros(2, 1), Triangle::Lower, Side::Left, false).unwrap_err();
        assert!(matches!(err, DeimError::SingularFactor { index: 2 }));
    }
}
