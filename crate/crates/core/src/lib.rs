//! Discrete empirical interpolation (DEIM) in weighted inner-product spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] holds the dense kernels: column-pivoted QR, strong
//!   rank-revealing QR for tall and wide matrices, thin SVD, Cholesky,
//!   triangular solves, pseudoinverses and principal angles.
//! * [`weighting`] represents the symmetric positive definite matrix `W` that
//!   defines the inner product `(u, v)_W = v^T W u`, in identity, diagonal,
//!   sparse or dense form, together with its factor `W = L L^T` and its
//!   diagonal equilibration.
//! * [`pod`] computes POD bases that are orthonormal in the `W` inner product.
//! * [`selection`] picks interpolation indices (greedy DEIM, Q-DEIM, strong
//!   RRQR, oversampling) and certifies the error constant `||(S^T U)^+||_2`.
//! * [`deim`] assembles and applies the projector variants and provides the
//!   canonical-angle diagnostics.
//! * [`io`] reads and writes the plain-text weight, snapshot and selection
//!   formats.
//!
//! ```
//! use deimkit::{linalg::Matrix, selection, deim};
//!
//! // A 3x1 orthonormal basis; the sRRQR selection picks the largest entry.
//! let u = Matrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
//! let sel = selection::select_srrqr(&u, 2.0).unwrap();
//! assert_eq!(sel.indices(), &[1]);
//! assert!((sel.kappa() - 1.25).abs() < 1e-12);
//!
//! let d = deim::build_deim(&u, &sel).unwrap();
//! let f = nalgebra::DVector::from_vec(vec![1.2, 1.6, 0.0]);
//! assert!((d.apply(&f).unwrap() - &f).norm() < 1e-12);
//! ```

pub mod deim;
pub mod error;
pub mod io;
pub mod linalg;
pub mod pod;
pub mod selection;
pub mod weighting;

pub use error::{DeimError, Result};
pub use nalgebra;

pub use deim::{CanonicalStructure, DeimProjector, ErrorDecomposition, Variant};
pub use pod::{PodBasis, RankSpec};
pub use selection::{SelectionOperator, Strategy};
pub use weighting::{WeightKind, WeightOperator};
