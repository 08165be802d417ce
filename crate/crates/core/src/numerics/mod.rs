//! Dense real linear algebra for small matrices (n <= 64).

mod eigen;
mod lu;
mod matrix;
mod qr;

pub use eigen::{eigenvalues, spectra_distance, spectral_radius, SWEEPS_PER_DIM};
pub use lu::{determinant, inverse, solve_linear, Lu, SINGULAR_PIVOT_RTOL};
pub use matrix::Matrix;
pub use qr::{null_space_orthonormal, orthonormalize_columns, rank, DEFAULT_RANK_TOL};

/// Complex scalar used for `s = jw` and transfer-function values.
pub type ComplexValue = num_complex::Complex64;
